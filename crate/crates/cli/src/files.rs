//! JSON scenario and channel files.
//!
//! Matrices are written row-major as arrays of arrays, in the same
//! orientation as the column-stochastic matrices they describe: the
//! broadcast marginal has `|Y1|` rows and `|U|` columns.

use std::path::Path;

use relay_sentinel::channel::{marginalize_mac, MacModel, SourcePmf};
use relay_sentinel::stochastic::{StochasticMatrix, DEFAULT_TOL};
use relay_sentinel::{AttackSpec, Parity, RealMatrix, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sources {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<f64>>,
    pub p2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MacSpec {
    Adder,
    Table { u_size: usize, table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSpec {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum AttackFile {
    Identity,
    Iid {
        phi: Vec<Vec<f64>>,
    },
    Gated {
        phi: Vec<Vec<f64>>,
        #[serde(default = "default_gate")]
        gate: GateSpec,
    },
}

fn default_gate() -> GateSpec {
    GateSpec::Even
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Shared layout of scenario and channel files. A channel file needs only
/// `sources.p2`, `mac` and `bc_marginal`; `sim.mu` and `sim.delta` are read
/// by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub sources: Sources,
    pub mac: MacSpec,
    pub bc_marginal: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

pub fn read_file(path: &Path) -> Result<ScenarioFile, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn pmf(key: &str, p: &[f64]) -> Result<SourcePmf, FileError> {
    if p.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    if let Some(i) = p.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid(format!("{key}[{i}]"), format!("must be positive, got {}", p[i])));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DEFAULT_TOL {
        return Err(invalid(key, format!("sums to {s}, expected 1")));
    }
    SourcePmf::new(p.to_vec()).map_err(|e| invalid(key, e.to_string()))
}

/// Row-major array of arrays into a column-stochastic matrix, naming the
/// offending row, entry or column on failure.
pub fn stochastic(key: &str, rows: &[Vec<f64>]) -> Result<StochasticMatrix, FileError> {
    let Some(first) = rows.first() else {
        return Err(invalid(key, "must have at least one row"));
    };
    let cols = first.len();
    if cols == 0 {
        return Err(invalid(format!("{key}[0]"), "must not be empty"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(invalid(
                format!("{key}[{i}]"),
                format!("has {} entries, expected {cols}", r.len()),
            ));
        }
        for (j, &v) in r.iter().enumerate() {
            if !v.is_finite() || v < -DEFAULT_TOL {
                return Err(invalid(format!("{key}[{i}][{j}]"), format!("must be nonnegative, got {v}")));
            }
        }
    }
    for j in 0..cols {
        let s: f64 = rows.iter().map(|r| r[j]).sum();
        if (s - 1.0).abs() > DEFAULT_TOL {
            return Err(invalid(format!("{key}[.][{j}]"), format!("column sums to {s}, expected 1")));
        }
    }
    let m = RealMatrix::from_rows(rows).map_err(|e| invalid(key, e.to_string()))?;
    StochasticMatrix::new(m).map_err(|e| invalid(key, e.to_string()))
}

fn matrix_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// The channel seen by node 1.
#[derive(Debug, Clone)]
pub struct Channel {
    pub mac: MacModel,
    pub p1: Option<SourcePmf>,
    pub p2: SourcePmf,
    pub a: StochasticMatrix,
    pub b: StochasticMatrix,
}

impl ScenarioFile {
    pub fn channel(&self) -> Result<Channel, FileError> {
        let p2 = pmf("sources.p2", &self.sources.p2)?;
        let p1 = self.sources.p1.as_deref().map(|p| pmf("sources.p1", p)).transpose()?;
        let mac = match &self.mac {
            MacSpec::Adder => {
                let x1 = p1
                    .as_ref()
                    .map(|p| p.len())
                    .ok_or_else(|| invalid("sources.p1", "required by the adder MAC"))?;
                MacModel::adder(x1, p2.len())
            }
            MacSpec::Table { u_size, table } => {
                let t = stochastic("mac.table", table)?;
                if t.rows() != *u_size {
                    return Err(invalid(
                        "mac.table",
                        format!("has {} rows, mac.u_size is {u_size}", t.rows()),
                    ));
                }
                if t.cols() % p2.len() != 0 {
                    return Err(invalid(
                        "mac.table",
                        format!("{} columns is not a multiple of |X2| = {}", t.cols(), p2.len()),
                    ));
                }
                let x1 = t.cols() / p2.len();
                if let Some(p1) = &p1 {
                    if p1.len() != x1 {
                        return Err(invalid(
                            "sources.p1",
                            format!("has {} entries, mac.table implies |X1| = {x1}", p1.len()),
                        ));
                    }
                }
                MacModel::table(t, x1, p2.len()).map_err(|e| invalid("mac.table", e.to_string()))?
            }
        };
        let a = marginalize_mac(&mac, &p2).map_err(|e| invalid("mac", e.to_string()))?;
        let b = stochastic("bc_marginal", &self.bc_marginal)?;
        if b.cols() != mac.u_size() {
            return Err(invalid(
                "bc_marginal",
                format!("has {} columns, relay alphabet has {} symbols", b.cols(), mac.u_size()),
            ));
        }
        Ok(Channel { mac, p1, p2, a, b })
    }

    pub fn scenario(&self) -> Result<Scenario, FileError> {
        let ch = self.channel()?;
        let p1 = ch.p1.ok_or_else(|| invalid("sources.p1", "required for simulation"))?;
        let u = ch.mac.u_size();
        let attack = match &self.attack {
            None | Some(AttackFile::Identity) => AttackSpec::Identity,
            Some(AttackFile::Iid { phi }) => AttackSpec::Iid(attack_matrix(phi, u)?),
            Some(AttackFile::Gated { phi, gate }) => AttackSpec::Gated {
                phi: attack_matrix(phi, u)?,
                gate: match gate {
                    GateSpec::Even => Parity::Even,
                    GateSpec::Odd => Parity::Odd,
                },
            },
        };
        let sim = self.sim.clone().ok_or_else(|| invalid("sim", "required for simulation"))?;
        let n = sim.n.ok_or_else(|| invalid("sim.N", "required"))?;
        if n == 0 {
            return Err(invalid("sim.N", "must be at least 1"));
        }
        let trials = sim.trials.unwrap_or(relay_sentinel::harness::DEFAULT_TRIALS);
        if trials == 0 {
            return Err(invalid("sim.trials", "must be at least 1"));
        }
        let mu = positive("sim.mu", sim.mu)?;
        let delta = positive("sim.delta", sim.delta)?;
        let s = Scenario {
            p1,
            p2: ch.p2,
            mac: ch.mac,
            b: ch.b,
            attack,
            n,
            mu,
            delta,
            trials,
            master_seed: sim.seed.unwrap_or(0),
        };
        s.validate().map_err(|e| invalid("scenario", e.to_string()))?;
        Ok(s)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let mac = match &s.mac {
            MacModel::Adder { .. } => MacSpec::Adder,
            MacModel::Table { table, .. } => MacSpec::Table {
                u_size: table.rows(),
                table: matrix_rows(table),
            },
        };
        let attack = match &s.attack {
            AttackSpec::Identity => AttackFile::Identity,
            AttackSpec::Iid(phi) => AttackFile::Iid { phi: matrix_rows(phi) },
            AttackSpec::Gated { phi, gate } => AttackFile::Gated {
                phi: matrix_rows(phi),
                gate: match gate {
                    Parity::Even => GateSpec::Even,
                    Parity::Odd => GateSpec::Odd,
                },
            },
        };
        ScenarioFile {
            sources: Sources {
                p1: Some(s.p1.probabilities().to_vec()),
                p2: s.p2.probabilities().to_vec(),
            },
            mac,
            bc_marginal: matrix_rows(&s.b),
            attack: Some(attack),
            sim: Some(SimSpec {
                n: Some(s.n),
                trials: Some(s.trials),
                mu: Some(s.mu),
                delta: Some(s.delta),
                seed: Some(s.master_seed),
            }),
        }
    }

    /// Compact JSON with a fixed key order; hashed into output metadata.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

fn attack_matrix(rows: &[Vec<f64>], u: usize) -> Result<StochasticMatrix, FileError> {
    let phi = stochastic("attack.phi", rows)?;
    if phi.shape() != (u, u) {
        return Err(invalid(
            "attack.phi",
            format!("is {}x{}, relay alphabet has {u} symbols", phi.rows(), phi.cols()),
        ));
    }
    Ok(phi)
}

fn positive(key: &str, v: Option<f64>) -> Result<f64, FileError> {
    match v {
        None => Err(invalid(key, "required")),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(invalid(key, format!("must be positive, got {x}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ScenarioFile {
        serde_json::from_str(s).unwrap()
    }

    const MOTIVATING: &str = r#"{
        "sources": {"p1": [0.5, 0.5], "p2": [0.5, 0.5]},
        "mac": {"type": "adder"},
        "bc_marginal": [[1,0,0],[0,1,0],[0,0,1]],
        "attack": {"type": "gated", "phi": [[0.99,0,0],[0.01,1,0.01],[0,0,0.99]], "gate": "odd"},
        "sim": {"N": 1000, "trials": 3, "mu": 0.2, "delta": 0.065, "seed": 9}
    }"#;

    #[test]
    fn parses_motivating_scenario() {
        let s = parse(MOTIVATING).scenario().unwrap();
        assert_eq!(s.n, 1000);
        assert_eq!(s.mac.u_size(), 3);
        assert!(matches!(s.attack, AttackSpec::Gated { gate: Parity::Odd, .. }));
    }

    #[test]
    fn round_trip_is_identity() {
        let s = parse(MOTIVATING).scenario().unwrap();
        let f = ScenarioFile::from_scenario(&s);
        let back: ScenarioFile = serde_json::from_str(&f.canonical_json()).unwrap();
        assert_eq!(back.scenario().unwrap(), s);
        for name in relay_sentinel::harness::FIGURES {
            let s = relay_sentinel::harness::preset(name).unwrap();
            let f = ScenarioFile::from_scenario(&s);
            let back: ScenarioFile = serde_json::from_str(&f.canonical_json()).unwrap();
            assert_eq!(back.scenario().unwrap(), s);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let bad = MOTIVATING.replace("[0,0,1]]", "[0,0,0.9]]");
        let err = parse(&bad).channel().unwrap_err().to_string();
        assert!(err.starts_with("bc_marginal[.][2]"), "{err}");

        let bad = MOTIVATING.replace("\"p2\": [0.5, 0.5]", "\"p2\": [0.5, 0.4]");
        assert!(parse(&bad).channel().unwrap_err().to_string().starts_with("sources.p2"));

        let bad = MOTIVATING.replace("[0.01,1,0.01]", "[0.01,1,-0.01]");
        let err = parse(&bad).scenario().unwrap_err().to_string();
        assert!(err.starts_with("attack.phi[1][2]"), "{err}");

        let bad = MOTIVATING.replace("\"mu\": 0.2", "\"mu\": 0");
        assert!(parse(&bad).scenario().unwrap_err().to_string().starts_with("sim.mu"));

        let bad = MOTIVATING.replace("[0,1,0],", "[0,1],");
        assert!(parse(&bad).channel().unwrap_err().to_string().starts_with("bc_marginal[1]"));
    }

    #[test]
    fn table_mac() {
        let f = parse(
            r#"{"sources": {"p2": [0.5, 0.5]},
                "mac": {"type": "table", "u_size": 3, "table": [[1,0,0,0],[0,1,1,0],[0,0,0,1]]},
                "bc_marginal": [[1,0,0],[0,1,0],[0,0,1]]}"#,
        );
        let ch = f.channel().unwrap();
        assert_eq!(ch.a, relay_sentinel::harness::motivating_a());
    }
}
