//! The reference channels and the experiment setups built from them.
//!
//! A preset name is either a figure (`"fig3b"`) or a figure and curve
//! (`"fig3b:phi3"`). A bare figure name selects its `phi2` curve.

use super::Scenario;
use crate::attack::{AttackSpec, Parity};
use crate::channel::{MacModel, SourcePmf};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::stochastic::StochasticMatrix;

pub const DEFAULT_TRIALS: usize = 300;
pub const PAPER_TRIALS: usize = 5000;

pub const FIGURES: [&str; 6] = ["fig3a", "fig3b", "fig3c", "fig3d", "fig5a", "fig5b"];

fn sm(rows: &[&[f64]]) -> StochasticMatrix {
    StochasticMatrix::from_rows(rows).expect("reference matrix is stochastic")
}

/// `p(u | x1)` of the binary adder MAC with a uniform second source.
pub fn motivating_a() -> StochasticMatrix {
    sm(&[&[0.5, 0.0], &[0.5, 0.5], &[0.0, 0.5]])
}

/// `Φ1 .. Φ4` for the binary adder channel; `Φ1 = I`.
pub fn motivating_phis() -> [StochasticMatrix; 4] {
    [
        StochasticMatrix::identity(3),
        sm(&[&[0.99, 0.005, 0.005], &[0.005, 0.99, 0.005], &[0.005, 0.005, 0.99]]),
        sm(&[&[0.99, 0.005, 0.0], &[0.01, 0.99, 0.01], &[0.0, 0.005, 0.99]]),
        sm(&[&[0.99, 0.0, 0.0], &[0.01, 1.0, 0.01], &[0.0, 0.0, 0.99]]),
    ]
}

/// Ternary adder MAC with a uniform second source.
pub fn higher_order_a() -> StochasticMatrix {
    let t = 1.0 / 3.0;
    sm(&[
        &[t, 0.0, 0.0],
        &[t, t, 0.0],
        &[t, t, t],
        &[0.0, t, t],
        &[0.0, 0.0, t],
    ])
}

pub fn higher_order_b() -> StochasticMatrix {
    sm(&[
        &[1.0, 0.5, 0.0, 0.0, 0.0],
        &[0.0, 0.5, 0.7, 0.0, 0.0],
        &[0.0, 0.0, 0.3, 0.5, 0.0],
        &[0.0, 0.0, 0.0, 0.5, 1.0],
    ])
}

pub fn higher_order_phis() -> [StochasticMatrix; 4] {
    let q = 0.0025;
    let r = 0.01 / 3.0;
    [
        StochasticMatrix::identity(5),
        sm(&[
            &[0.99, q, q, q, q],
            &[q, 0.99, q, q, q],
            &[q, q, 0.99, q, q],
            &[q, q, q, 0.99, q],
            &[q, q, q, q, 0.99],
        ]),
        sm(&[
            &[0.99, r, q, 0.0, 0.0],
            &[0.005, 0.99, q, r, 0.0],
            &[0.005, r, 0.99, r, 0.005],
            &[0.0, r, q, 0.99, 0.005],
            &[0.0, 0.0, q, r, 0.99],
        ]),
        sm(&[
            &[0.985, 0.0, 0.0, 0.0, 0.0],
            &[0.0075, 0.985, 0.0, 0.0, 0.0],
            &[0.0075, 0.015, 1.0, 0.015, 0.0075],
            &[0.0, 0.0, 0.0, 0.985, 0.0075],
            &[0.0, 0.0, 0.0, 0.0, 0.985],
        ]),
    ]
}

/// Broadcast marginal that makes the ternary adder channel manipulable.
pub fn counter_example_b() -> StochasticMatrix {
    sm(&[
        &[1.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.5, 0.0, 0.3, 0.2],
        &[0.0, 0.0, 0.5, 0.2, 0.3],
        &[0.0, 0.3, 0.2, 0.5, 0.0],
        &[0.0, 0.2, 0.3, 0.0, 0.5],
    ])
}

/// Witness with `B Υ A = 0` for [`counter_example_b`], for `ψ ∈ (0, 1]`.
pub fn counter_example_upsilon(psi: f64) -> RealMatrix {
    let mut u = RealMatrix::zeros(5, 5);
    u[(1, 1)] = psi;
    u[(3, 1)] = -psi;
    u[(2, 2)] = psi;
    u[(4, 2)] = -psi;
    u[(4, 4)] = psi;
    u[(2, 4)] = -psi;
    u
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub scenario: Scenario,
}

struct Setup {
    sources: usize,
    b: StochasticMatrix,
    n: usize,
    mu: f64,
    delta: f64,
    seed: u64,
}

impl Setup {
    fn scenario(&self, attack: AttackSpec, curve: u64) -> Scenario {
        let p = SourcePmf::uniform(self.sources);
        Scenario {
            p1: p.clone(),
            p2: p,
            mac: MacModel::adder(self.sources, self.sources),
            b: self.b.clone(),
            attack,
            n: self.n,
            mu: self.mu,
            delta: self.delta,
            trials: DEFAULT_TRIALS,
            master_seed: self.seed + curve,
        }
    }
}

fn iid_or_identity(i: usize, phi: StochasticMatrix) -> AttackSpec {
    if i == 0 {
        AttackSpec::Identity
    } else {
        AttackSpec::Iid(phi)
    }
}

fn iid_curves(setup: Setup, phis: [StochasticMatrix; 4]) -> Vec<Curve> {
    phis.into_iter()
        .enumerate()
        .map(|(i, phi)| Curve {
            label: format!("phi{}", i + 1),
            scenario: setup.scenario(iid_or_identity(i, phi), i as u64),
        })
        .collect()
}

/// All curves of a figure, faithful relay first.
pub fn figure_curves(name: &str) -> Result<Vec<Curve>> {
    let motivating = |n, mu, delta, seed| Setup {
        sources: 2,
        b: StochasticMatrix::identity(3),
        n,
        mu,
        delta,
        seed,
    };
    let curves = match name {
        "fig3a" => iid_curves(motivating(1_000, 0.2, 0.065, 3100), motivating_phis()),
        "fig3b" => iid_curves(motivating(10_000, 0.1, 0.065, 3200), motivating_phis()),
        "fig3c" => iid_curves(motivating(100_000, 0.05, 0.004, 3300), motivating_phis()),
        "fig3d" => {
            let setup = motivating(100_000, 0.01, 0.07, 3400);
            motivating_phis()
                .into_iter()
                .enumerate()
                .map(|(i, phi)| {
                    let attack = if i == 0 {
                        AttackSpec::Identity
                    } else {
                        AttackSpec::Gated {
                            phi,
                            gate: Parity::Even,
                        }
                    };
                    Curve {
                        label: format!("phi{}", i + 1),
                        scenario: setup.scenario(attack, i as u64),
                    }
                })
                .collect()
        }
        "fig5a" => {
            let setup = Setup {
                sources: 3,
                b: higher_order_b(),
                n: 100_000,
                mu: 0.05,
                delta: 0.07,
                seed: 5100,
            };
            iid_curves(setup, higher_order_phis())
        }
        "fig5b" => {
            let setup = Setup {
                sources: 3,
                b: counter_example_b(),
                n: 100_000,
                mu: 0.05,
                delta: 0.07,
                seed: 5200,
            };
            let phi2 = StochasticMatrix::new(
                RealMatrix::identity(5)
                    .sub(&counter_example_upsilon(1.0))
                    .expect("square"),
            )
            .expect("I - Υ is stochastic");
            vec![
                Curve {
                    label: "phi1".into(),
                    scenario: setup.scenario(AttackSpec::Identity, 0),
                },
                Curve {
                    label: "phi2".into(),
                    scenario: setup.scenario(AttackSpec::Iid(phi2), 1),
                },
            ]
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(curves)
}

pub fn preset(name: &str) -> Result<Scenario> {
    let (fig, curve) = name.split_once(':').unwrap_or((name, "phi2"));
    figure_curves(fig)?
        .into_iter()
        .find(|c| c.label == curve)
        .map(|c| c.scenario)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
