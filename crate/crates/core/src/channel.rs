//! Sources, multiple-access and broadcast channels, and seeded sampling of
//! the symbol traces they produce.
//!
//! Symbols are zero-based alphabet indices. For the adder MAC the index is
//! the integer symbol value, so `u = x1 + x2` directly.

use std::ops::Deref;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::stochastic::{StochasticMatrix, DEFAULT_TOL};

/// Generator used for every simulated trace.
pub type TraceRng = ChaCha20Rng;

/// Name recorded in result metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3), seed_from_u64(splitmix64(master_seed, trial))";

/// Derives the per-trial seed from the master seed and trial index.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    // splitmix64 finalizer over a golden-ratio stride.
    let mut z = master_seed ^ trial_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(master_seed: u64, trial_index: u64) -> TraceRng {
    TraceRng::seed_from_u64(trial_seed(master_seed, trial_index))
}

/// A sequence of zero-based alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTrace(Vec<usize>);

impl SymbolTrace {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Checks every symbol against `alphabet`.
    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().position(|&s| s >= alphabet) {
            Some(position) => Err(Error::SymbolOutOfRange {
                position,
                symbol: self.0[position],
                alphabet,
            }),
            None => Ok(()),
        }
    }
}

impl Deref for SymbolTrace {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for SymbolTrace {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl FromIterator<usize> for SymbolTrace {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Strictly positive pmf of an i.i.d. source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePmf(Vec<f64>);

impl SourcePmf {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("source pmf is empty".into()));
        }
        if let Some(i) = p.iter().position(|&v| !(v > 0.0 && v <= 1.0 + DEFAULT_TOL)) {
            return Err(Error::InvalidArgument(format!(
                "source probability [{i}] = {} must lie in (0, 1]",
                p[i]
            )));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidArgument(format!("source pmf sums to {s}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }
}

/// Relay input as a function of the two source symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum MacModel {
    /// `p(u | x1, x2)` as a `|U| x (|X1|·|X2|)` column-stochastic matrix;
    /// column `x1·|X2| + x2`.
    Table {
        table: StochasticMatrix,
        x1_size: usize,
        x2_size: usize,
    },
    /// Noiseless `u = x1 + x2`.
    Adder { x1_size: usize, x2_size: usize },
}

impl MacModel {
    pub fn table(table: StochasticMatrix, x1_size: usize, x2_size: usize) -> Result<Self> {
        if table.cols() != x1_size * x2_size {
            return Err(Error::Dimension(format!(
                "MAC table has {} columns, expected |X1|·|X2| = {}",
                table.cols(),
                x1_size * x2_size
            )));
        }
        Ok(MacModel::Table {
            table,
            x1_size,
            x2_size,
        })
    }

    pub fn adder(x1_size: usize, x2_size: usize) -> Self {
        MacModel::Adder { x1_size, x2_size }
    }

    pub fn x1_size(&self) -> usize {
        match self {
            MacModel::Table { x1_size, .. } | MacModel::Adder { x1_size, .. } => *x1_size,
        }
    }

    pub fn x2_size(&self) -> usize {
        match self {
            MacModel::Table { x2_size, .. } | MacModel::Adder { x2_size, .. } => *x2_size,
        }
    }

    pub fn u_size(&self) -> usize {
        match self {
            MacModel::Table { table, .. } => table.rows(),
            MacModel::Adder { x1_size, x2_size } => x1_size + x2_size - 1,
        }
    }

    /// `p(u | x1, x2)`.
    pub fn prob(&self, u: usize, x1: usize, x2: usize) -> f64 {
        match self {
            MacModel::Table { table, x2_size, .. } => table[(u, x1 * x2_size + x2)],
            MacModel::Adder { .. } => {
                if u == x1 + x2 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Marginal broadcast channel `p(y1 | v)` seen by node 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BcMarginal(pub StochasticMatrix);

fn check_source(mac_side: usize, p: &SourcePmf, name: &str) -> Result<()> {
    if mac_side != p.len() {
        return Err(Error::Dimension(format!(
            "MAC expects |{name}| = {mac_side}, source pmf has {} entries",
            p.len()
        )));
    }
    Ok(())
}

/// The `|U| x |X1|` matrix `A` with `A[u][x1] = Σ_x2 p(u | x1, x2) p2(x2)`.
pub fn marginalize_mac(mac: &MacModel, p2: &SourcePmf) -> Result<StochasticMatrix> {
    check_source(mac.x2_size(), p2, "X2")?;
    let u_size = mac.u_size();
    let a = RealMatrix::from_fn(u_size, mac.x1_size(), |u, x1| {
        p2.probabilities()
            .iter()
            .enumerate()
            .map(|(x2, &w)| mac.prob(u, x1, x2) * w)
            .sum()
    });
    if let Some(row) = (0..u_size).find(|&i| a.row(i).iter().all(|&v| v == 0.0)) {
        return Err(Error::AlphabetReduction { row });
    }
    StochasticMatrix::new(a)
}

/// `Γ = B Φ A`.
pub fn gamma_from(
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    phi: &StochasticMatrix,
) -> Result<StochasticMatrix> {
    b.compose(phi)?.compose(a)
}

/// Marginal pmf of the relay input.
pub fn stationary_u_pmf(mac: &MacModel, p1: &SourcePmf, p2: &SourcePmf) -> Result<Vec<f64>> {
    check_source(mac.x1_size(), p1, "X1")?;
    check_source(mac.x2_size(), p2, "X2")?;
    let mut pu = vec![0.0; mac.u_size()];
    for (x1, &w1) in p1.probabilities().iter().enumerate() {
        for (x2, &w2) in p2.probabilities().iter().enumerate() {
            for (u, slot) in pu.iter_mut().enumerate() {
                *slot += mac.prob(u, x1, x2) * w1 * w2;
            }
        }
    }
    Ok(pu)
}

/// Inverse-CDF rule: smallest `i` whose cumulative mass exceeds `draw`.
pub fn sample_categorical(pmf: &[f64], draw: f64) -> usize {
    let mut cum = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        cum += p;
        if cum > draw {
            return i;
        }
    }
    // Round-off left the total below `draw`; fall back to the last live symbol.
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Precomputed cumulative table for repeated draws from one pmf.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<f64>,
    last_live: usize,
}

impl CategoricalSampler {
    pub fn new(pmf: &[f64]) -> Self {
        let mut cum = 0.0;
        let cumulative = pmf
            .iter()
            .map(|p| {
                cum += p;
                cum
            })
            .collect();
        Self {
            cumulative,
            last_live: pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0),
        }
    }

    /// Same rule as [`sample_categorical`].
    pub fn pick(&self, draw: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= draw);
        if i < self.cumulative.len() {
            i
        } else {
            self.last_live
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pick(rng.gen::<f64>())
    }
}

/// Column samplers of a conditional pmf matrix.
pub fn column_samplers(m: &RealMatrix) -> Vec<CategoricalSampler> {
    (0..m.cols())
        .map(|j| CategoricalSampler::new(&m.column(j)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkTrace {
    pub x1: SymbolTrace,
    pub x2: SymbolTrace,
    pub u: SymbolTrace,
}

/// Draws `n` i.i.d. source pairs and the MAC output for each.
pub fn simulate_uplink<R: Rng + ?Sized>(
    mac: &MacModel,
    p1: &SourcePmf,
    p2: &SourcePmf,
    n: usize,
    rng: &mut R,
) -> Result<UplinkTrace> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    check_source(mac.x1_size(), p1, "X1")?;
    check_source(mac.x2_size(), p2, "X2")?;
    let s1 = CategoricalSampler::new(p1.probabilities());
    let s2 = CategoricalSampler::new(p2.probabilities());
    let table = match mac {
        MacModel::Table { table, .. } => Some(column_samplers(table)),
        MacModel::Adder { .. } => None,
    };
    let x2_size = mac.x2_size();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for _ in 0..n {
        let a = s1.sample(rng);
        let b = s2.sample(rng);
        let out = match &table {
            Some(cols) => cols[a * x2_size + b].sample(rng),
            None => a + b,
        };
        x1.push(a);
        x2.push(b);
        u.push(out);
    }
    Ok(UplinkTrace {
        x1: x1.into(),
        x2: x2.into(),
        u: u.into(),
    })
}

/// Passes each relay output through the memoryless broadcast marginal.
pub fn simulate_downlink<R: Rng + ?Sized>(
    b: &StochasticMatrix,
    v: &SymbolTrace,
    rng: &mut R,
) -> Result<SymbolTrace> {
    v.check_alphabet(b.cols())?;
    let cols = column_samplers(b);
    Ok(v.iter().map(|&s| cols[s].sample(rng)).collect())
}
