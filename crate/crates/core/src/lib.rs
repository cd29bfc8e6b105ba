//! Detecting a manipulating amplify-and-forward relay from the symbols a node
//! sends and the symbols it hears back, and certifying whether the
//! observation channel makes that possible at all.
//!
//! Matrices are column-stochastic: entry `(i, j)` is `P(out_i | in_j)`.

pub mod attack;
pub mod channel;
pub mod detector;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod manipulability;
pub mod matrix;
pub mod stochastic;

pub use attack::{AttackChannel, AttackSpec, Parity};
pub use channel::{MacModel, SourcePmf, SymbolTrace};
pub use detector::{DetectionReport, Detector, DetectorConfig, Verdict};
pub use error::{Error, Result};
pub use harness::{Scenario, TrialResult};
pub use manipulability::{certify, ManipulabilityVerdict, Method};
pub use matrix::RealMatrix;
pub use stochastic::StochasticMatrix;
