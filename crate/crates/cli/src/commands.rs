use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use relay_sentinel::channel::RNG_ALGORITHM;
use relay_sentinel::detector::{Detector, DetectorConfig};
use relay_sentinel::harness::{self, empirical_cdf, statistics, Experiment, TrialResult, PAPER_TRIALS};
use relay_sentinel::{certify, RealMatrix, Scenario};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::files::{read_file, ScenarioFile};
use crate::traces::TraceFile;

pub const SEED_ENV: &str = "RELAY_SENTINEL_SEED";
pub const TOOL: &str = concat!("relay-sentinel ", env!("CARGO_PKG_VERSION"));

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MANIPULABLE: u8 = 2;

fn rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned integer"))?,
        )),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn metadata_lines(s: &Scenario) -> String {
    let hash = sha256_hex(&ScenarioFile::from_scenario(s).canonical_json());
    format!(
        "# tool={TOOL}\n# scenario_sha256={hash}\n# master_seed={}\n# rng={RNG_ALGORITHM}\n",
        s.master_seed
    )
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

/// Prints the certification report; returns the exit code.
pub fn cmd_certify(channel: &Path) -> Result<u8> {
    let ch = read_file(channel)?.channel()?;
    let v = certify(&ch.a, &ch.b)?;
    let mut report = json!({
        "manipulable": v.manipulable,
        "lp_value": v.lp_optimal_value,
        "method": v.method.as_str(),
    });
    if let Some(found) = v.dpv_found {
        report["dpv_found"] = json!(found);
    }
    if let Some(w) = &v.witness {
        report["witness"] = json!(rows(w));
    }
    if let Some(phi) = &v.induced_attack {
        report["induced_attack"] = json!(rows(phi));
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if v.manipulable { EXIT_MANIPULABLE } else { EXIT_OK })
}

pub enum ScenarioSource<'a> {
    File(&'a Path),
    Preset(&'a str),
}

pub fn load_scenario(src: ScenarioSource<'_>, trials: Option<usize>) -> Result<Scenario> {
    let mut s = match src {
        ScenarioSource::File(p) => read_file(p)?.scenario()?,
        ScenarioSource::Preset(name) => harness::preset(name)?,
    };
    if let Some(t) = trials {
        if t == 0 {
            bail!("--trials must be at least 1");
        }
        s.trials = t;
    }
    if let Some(seed) = seed_override()? {
        s.master_seed = seed;
    }
    Ok(s)
}

pub fn results_csv(s: &Scenario, results: &[TrialResult]) -> String {
    let mut out = metadata_lines(s);
    out.push_str("trial,D,truth_stat,feasible,seed\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial_index, r.statistic, r.truth_stat, r.feasible, r.seed_used
        ));
    }
    out
}

pub fn cmd_simulate(s: Scenario, out: &Path, emit_trace: Option<&Path>) -> Result<u8> {
    let exp = Experiment::new(s)?;
    let results = exp.run()?;
    fs::write(out, results_csv(exp.scenario(), &results))
        .with_context(|| format!("cannot write {}", out.display()))?;
    if let Some(dir) = emit_trace {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let sc = exp.scenario();
        for i in 0..sc.trials {
            let (seed, t) = exp.simulate(i)?;
            let node = TraceFile::node(t.x1, t.y1)
                .with_meta("x1_size", sc.mac.x1_size())
                .with_meta("y1_size", sc.b.rows())
                .with_meta("seed", seed)
                .with_meta("trial", i);
            node.write(create(&dir.join(format!("trial_{i:04}_node.csv")))?)?;
            let relay = TraceFile::relay(t.u, t.v)
                .with_meta("u_size", sc.mac.u_size())
                .with_meta("seed", seed)
                .with_meta("trial", i);
            relay.write(create(&dir.join(format!("trial_{i:04}_relay.csv")))?)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_detect(channel: &Path, trace: &Path, mu: Option<f64>, delta: Option<f64>) -> Result<u8> {
    let file = read_file(channel)?;
    let ch = file.channel()?;
    let sim = file.sim.clone().unwrap_or(crate::files::SimSpec {
        n: None,
        trials: None,
        mu: None,
        delta: None,
        seed: None,
    });
    let Some(mu) = mu.or(sim.mu) else {
        bail!("sim.mu: required by detect (or pass --mu)");
    };
    let Some(delta) = delta.or(sim.delta) else {
        bail!("sim.delta: required by detect (or pass --delta)");
    };
    let t = TraceFile::read(create_reader(trace)?)
        .with_context(|| format!("reading {}", trace.display()))?;
    if t.columns[0] != "x1" {
        bail!("{}: detect needs a node trace with header n,x1,y1", trace.display());
    }
    let (x1_size, y1_size) = (ch.a.cols(), ch.b.rows());
    for (key, want) in [("x1_size", x1_size), ("y1_size", y1_size)] {
        if let Some(got) = t.meta_usize(key)? {
            if got != want {
                bail!("trace declares {key}={got}, channel has {want}");
            }
        }
    }
    let det = Detector::new(DetectorConfig::new(ch.a, ch.b, mu, delta)?)?;
    let r = det.run(&t.first, &t.second)?;
    let report = json!({
        "statistic": r.statistic,
        "verdict": r.verdict.as_str(),
        "feasible": r.feasible,
        "mu": mu,
        "delta": delta,
        "unseen_x1_columns": r.unseen_x1_columns,
        "gamma_hat": rows(&r.gamma_hat),
        "phi_hat": rows(&r.phi_hat),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}

fn create_reader(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

/// Writes one CDF file per curve and an error-rate summary; returns the
/// paths written.
pub fn cmd_reproduce(figure: &str, out_dir: &Path, trials: Option<usize>) -> Result<Vec<PathBuf>> {
    let override_seed = seed_override()?;
    let mut curves = harness::figure_curves(figure)?;
    for (i, c) in curves.iter_mut().enumerate() {
        if let Some(t) = trials {
            if t == 0 {
                bail!("--trials must be at least 1");
            }
            c.scenario.trials = t;
        }
        if let Some(seed) = override_seed {
            c.scenario.master_seed = seed.wrapping_add(i as u64);
        }
    }
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut written = Vec::new();
    let mut done = Vec::new();
    for c in curves {
        let results = harness::run_experiment(&c.scenario)?;
        let path = out_dir.join(format!("{figure}_{}.csv", c.label));
        let mut f = std::io::BufWriter::new(create(&path)?);
        write!(f, "{}", metadata_lines(&c.scenario))?;
        writeln!(f, "value,cum_fraction")?;
        for (v, p) in empirical_cdf(&statistics(&results))? {
            writeln!(f, "{v},{p}")?;
        }
        f.flush()?;
        written.push(path);
        done.push(harness::CurveResult {
            label: c.label,
            scenario: c.scenario,
            results,
        });
    }
    let path = out_dir.join(format!("{figure}_error_rates.csv"));
    let mut f = std::io::BufWriter::new(create(&path)?);
    writeln!(f, "# tool={TOOL}")?;
    writeln!(f, "# null_curve={}", done[0].label)?;
    writeln!(f, "curve,delta,false_alarm,miss,mean_changed_fraction")?;
    let rates = harness::figure_error_rates(&done)?;
    for (row, c) in rates.iter().zip(&done[1..]) {
        let changed = c.results.iter().map(|r| r.changed_fraction).sum::<f64>() / c.results.len() as f64;
        writeln!(f, "{},{},{},{},{}", row.label, row.delta, row.false_alarm, row.miss, changed)?;
    }
    f.flush()?;
    written.push(path);
    Ok(written)
}

pub fn paper_trials(flag: bool, trials: Option<usize>) -> Option<usize> {
    if flag {
        Some(PAPER_TRIALS)
    } else {
        trials
    }
}
