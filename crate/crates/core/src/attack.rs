//! Relay manipulation maps and the empirical attack channel they induce.

use rand::Rng;

use crate::channel::{column_samplers, SymbolTrace};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::stochastic::StochasticMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_sum(symbols: &[usize]) -> Parity {
        let odd = symbols.iter().fold(0usize, |acc, &s| acc ^ (s & 1));
        if odd == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    /// Faithful amplify-and-forward.
    Identity,
    /// Each relay input is independently replaced by a draw from column `u`.
    Iid(StochasticMatrix),
    /// Whole-block switch: `Iid(phi)` when the block checksum (sum of symbol
    /// indices mod 2) matches `gate`, identity otherwise.
    Gated { phi: StochasticMatrix, gate: Parity },
}

impl AttackSpec {
    pub fn phi(&self) -> Option<&StochasticMatrix> {
        match self {
            AttackSpec::Identity => None,
            AttackSpec::Iid(phi) | AttackSpec::Gated { phi, .. } => Some(phi),
        }
    }

    /// Whether the manipulation is switched on for this block.
    pub fn is_active(&self, u: &[usize]) -> bool {
        match self {
            AttackSpec::Identity => false,
            AttackSpec::Iid(_) => true,
            AttackSpec::Gated { gate, .. } => Parity::of_sum(u) == *gate,
        }
    }

    pub fn validate(&self, u_size: usize) -> Result<()> {
        if let Some(phi) = self.phi() {
            if phi.shape() != (u_size, u_size) {
                return Err(Error::Dimension(format!(
                    "attack matrix is {}x{}, relay alphabet has {u_size} symbols",
                    phi.rows(),
                    phi.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Produces the relay output block `v` from the observed block `u`.
pub fn apply_attack<R: Rng + ?Sized>(
    spec: &AttackSpec,
    u: &SymbolTrace,
    rng: &mut R,
) -> Result<SymbolTrace> {
    if u.is_empty() {
        return Err(Error::InvalidArgument("relay input block is empty".into()));
    }
    let Some(phi) = spec.phi().filter(|_| spec.is_active(u)) else {
        return Ok(u.clone());
    };
    u.check_alphabet(phi.cols())?;
    let cols = column_samplers(phi);
    Ok(u.iter().map(|&s| cols[s].sample(rng)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackChannel {
    /// Empirical `P(v_i | u_j)` over the block.
    pub phi_n: StochasticMatrix,
    /// `observed[j]` is false when `u_j` never occurs; that column is set to
    /// the identity column.
    pub observed: Vec<bool>,
}

pub fn extract_attack_channel(
    u: &SymbolTrace,
    v: &SymbolTrace,
    u_size: usize,
) -> Result<AttackChannel> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    u.check_alphabet(u_size)?;
    v.check_alphabet(u_size)?;
    let mut counts = RealMatrix::zeros(u_size, u_size);
    let mut totals = vec![0usize; u_size];
    for (&ui, &vi) in u.iter().zip(v.iter()) {
        counts[(vi, ui)] += 1.0;
        totals[ui] += 1;
    }
    let observed: Vec<bool> = totals.iter().map(|&t| t > 0).collect();
    let phi = RealMatrix::from_fn(u_size, u_size, |i, j| {
        if observed[j] {
            counts[(i, j)] / totals[j] as f64
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    Ok(AttackChannel {
        phi_n: StochasticMatrix::with_tolerance(phi, 1e-12)?,
        observed,
    })
}

/// `‖Φ^N − I‖₁`.
pub fn truth_statistic(ac: &AttackChannel) -> f64 {
    ac.phi_n.distance_from_identity()
}

/// Fraction of positions where the relay output differs from its input.
pub fn changed_fraction(u: &SymbolTrace, v: &SymbolTrace) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    let changed = u.iter().zip(v.iter()).filter(|(a, b)| a != b).count();
    changed as f64 / u.len() as f64
}
