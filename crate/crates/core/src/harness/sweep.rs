//! Parameter sweeps over Monte Carlo trials.
//!
//! A sweep file is TOML:
//!
//! ```toml
//! axis = "n_receivers"        # or "n_antennas"
//! values = [3, 4, 5, 6, 7, 8]
//! trials_per_point = 200
//! schemes = ["sdr", "scheme1", "scheme2", "baseline"]
//! n_samples = 10000           # 0 skips Monte Carlo verification
//!
//! [base_config]
//! n_basic = 2
//! ```
//!
//! `n_receivers` sets `n_video_receivers`; idle receivers are extra. Trial
//! `t` uses the same channel draws at every axis value, so curves compare
//! like with like.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ConfigFile;
use super::run::{solve_trial, write_json, RunStatus, SchemeOutcome};
use crate::channel::{watts_to_dbm, ScenarioConfig};
use crate::error::{Error, Result};
use crate::power::Scheme;

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NReceivers,
    NAntennas,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::NReceivers => "n_receivers",
            Axis::NAntennas => "n_antennas",
        }
    }

    pub fn apply(self, base: &ScenarioConfig, value: usize) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            Axis::NReceivers => {
                if value < base.n_basic {
                    return Err(Error::Config(format!(
                        "n_receivers = {value} is below n_basic = {}",
                        base.n_basic
                    )));
                }
                cfg.n_premium = value - base.n_basic;
            }
            Axis::NAntennas => cfg.n_antennas = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<usize>,
    pub trials_per_point: usize,
    pub schemes: Vec<Scheme>,
    pub base_config: ScenarioConfig,
    pub n_samples: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    axis: Axis,
    values: Vec<usize>,
    #[serde(default = "default_trials")]
    trials_per_point: usize,
    #[serde(default = "default_schemes")]
    schemes: Vec<Scheme>,
    #[serde(default = "default_samples")]
    n_samples: usize,
    #[serde(default)]
    base_config: ConfigFile,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "values must be nonempty and strictly increasing".into(),
            ));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes must not be empty".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base_config, v)?;
        }
        Ok(())
    }
}

pub fn parse_sweep(text: &str, origin: &str) -> Result<SweepSpec> {
    let file: SweepFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    let spec = SweepSpec {
        axis: file.axis,
        values: file.values,
        trials_per_point: file.trials_per_point,
        schemes: file.schemes,
        base_config: file
            .base_config
            .to_scenario()
            .map_err(|e| Error::Config(format!("{origin}: base_config: {e}")))?,
        n_samples: file.n_samples,
    };
    spec.validate()
        .map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    Ok(spec)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    parse_sweep(&fs::read_to_string(path)?, &path.display().to_string())
}

/// One line of `results.csv`; the field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis_value: usize,
    pub scheme: Scheme,
    pub trial_index: u64,
    pub total_power_dbm: Option<f64>,
    pub harvested_total_dbm: Option<f64>,
    pub chance_p_hat: Option<f64>,
    pub secrecy_ok_fraction: Option<f64>,
    pub status: RunStatus,
    /// Wall-clock time; the only column that differs between runs.
    pub runtime_ms: f64,
}

impl ResultRow {
    fn new(axis_value: usize, trial_index: u64, o: &SchemeOutcome) -> Self {
        ResultRow {
            axis_value,
            scheme: o.scheme,
            trial_index,
            total_power_dbm: o.total_power.map(watts_to_dbm),
            harvested_total_dbm: o.harvested_total.map(watts_to_dbm),
            chance_p_hat: o.report.as_ref().map(|r| r.chance_prob_hat),
            secrecy_ok_fraction: o.report.as_ref().map(|r| r.secrecy_ok_fraction),
            status: o.status,
            runtime_ms: o.runtime_ms,
        }
    }
}

/// Aggregate over the trials of one (axis value, scheme) pair. Means run
/// over every row with a solution, ok or violated; infeasible and failed
/// trials are only counted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis_value: usize,
    pub scheme: Scheme,
    pub n_trials: usize,
    pub n_ok: usize,
    pub n_violated: usize,
    pub n_infeasible: usize,
    pub n_failed: usize,
    pub mean_power_dbm: Option<f64>,
    pub stderr_power_dbm: Option<f64>,
    pub mean_harvested_dbm: Option<f64>,
    pub stderr_harvested_dbm: Option<f64>,
    pub mean_chance_p_hat: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: Axis,
    pub trials_per_point: usize,
    pub n_samples: usize,
    pub rows: Vec<SummaryRow>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn summary_row(&self, axis_value: usize, scheme: Scheme) -> Option<&SummaryRow> {
        self.summary
            .rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.scheme == scheme)
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Runs every (value, trial) pair on the rayon pool. Rows come back sorted
/// by axis value, trial and scheme regardless of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let configs: Vec<ScenarioConfig> = spec
        .values
        .iter()
        .map(|&v| spec.axis.apply(&spec.base_config, v))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..spec.values.len())
        .flat_map(|i| (0..spec.trials_per_point as u64).map(move |t| (i, t)))
        .collect();
    let mut rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(i, t)| -> Result<Vec<ResultRow>> {
            let trial = solve_trial(&configs[i], t, &spec.schemes, spec.n_samples)?;
            for o in trial.schemes.iter().filter(|o| o.status != RunStatus::Ok) {
                log::warn!(
                    "{}={} trial {t} {}: {} {}",
                    spec.axis.name(),
                    spec.values[i],
                    o.scheme,
                    o.status,
                    o.message.as_deref().unwrap_or("")
                );
            }
            Ok(trial
                .schemes
                .iter()
                .map(|o| ResultRow::new(spec.values[i], t, o))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.axis_value, r.trial_index, r.scheme));
    let summary = summarize(spec, &rows);
    Ok(SweepResult { rows, summary })
}

fn summarize(spec: &SweepSpec, rows: &[ResultRow]) -> SweepSummary {
    let mut groups: BTreeMap<(usize, Scheme), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.axis_value, r.scheme)).or_default().push(r);
    }
    let out = groups
        .into_iter()
        .map(|((axis_value, scheme), group)| {
            let count = |s: RunStatus| group.iter().filter(|r| r.status == s).count();
            let power: Vec<f64> = group.iter().filter_map(|r| r.total_power_dbm).collect();
            let harvest: Vec<f64> = group.iter().filter_map(|r| r.harvested_total_dbm).collect();
            let chance: Vec<f64> = group.iter().filter_map(|r| r.chance_p_hat).collect();
            let p = mean_stderr(&power);
            let h = mean_stderr(&harvest);
            SummaryRow {
                axis_value,
                scheme,
                n_trials: group.len(),
                n_ok: count(RunStatus::Ok),
                n_violated: count(RunStatus::Violated),
                n_infeasible: count(RunStatus::Infeasible),
                n_failed: count(RunStatus::Failed),
                mean_power_dbm: p.map(|x| x.0),
                stderr_power_dbm: p.map(|x| x.1),
                mean_harvested_dbm: h.map(|x| x.0),
                stderr_harvested_dbm: h.map(|x| x.1),
                mean_chance_p_hat: mean_stderr(&chance).map(|x| x.0),
            }
        })
        .collect();
    SweepSummary {
        axis: spec.axis,
        trials_per_point: spec.trials_per_point,
        n_samples: spec.n_samples,
        rows: out,
    }
}

/// Writes `results.csv`, `summary.json` and per-scheme plot data
/// `power_<scheme>.dat` and `harvested_<scheme>.dat` (columns: axis value,
/// mean dBm, standard error).
pub fn write_sweep(result: &SweepResult, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join("results.csv"))?;
    for r in &result.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_json(&out_dir.join("summary.json"), &result.summary)?;

    let mut schemes: Vec<Scheme> = result.summary.rows.iter().map(|r| r.scheme).collect();
    schemes.sort();
    schemes.dedup();
    let axis = result.summary.axis.name();
    for scheme in schemes {
        let mut power = format!("# {axis} mean_power_dbm stderr_dbm\n");
        let mut harvest = format!("# {axis} mean_harvested_dbm stderr_dbm\n");
        for r in result.summary.rows.iter().filter(|r| r.scheme == scheme) {
            if let (Some(m), Some(s)) = (r.mean_power_dbm, r.stderr_power_dbm) {
                let _ = writeln!(power, "{} {m:.6} {s:.6}", r.axis_value);
            }
            if let (Some(m), Some(s)) = (r.mean_harvested_dbm, r.stderr_harvested_dbm) {
                let _ = writeln!(harvest, "{} {m:.6} {s:.6}", r.axis_value);
            }
        }
        fs::write(out_dir.join(format!("power_{scheme}.dat")), power)?;
        fs::write(out_dir.join(format!("harvested_{scheme}.dat")), harvest)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_sweep() {
        let spec = parse_sweep("axis = \"n_antennas\"\nvalues = [6, 9]\n", "s").unwrap();
        assert_eq!(spec.trials_per_point, DEFAULT_TRIALS);
        assert_eq!(spec.schemes, Scheme::ALL.to_vec());
        assert_eq!(spec.n_samples, DEFAULT_SAMPLES);
        assert_eq!(spec.axis.apply(&spec.base_config, 9).unwrap().n_antennas, 9);
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!(parse_sweep("axis = \"n_antennas\"\nvalues = [6, 6]", "s").is_err());
        assert!(parse_sweep("axis = \"n_antennas\"\nvalues = []", "s").is_err());
        assert!(parse_sweep(
            "axis = \"n_antennas\"\nvalues = [6]\ntrials_per_point = 0",
            "s"
        )
        .is_err());
        assert!(parse_sweep("axis = \"n_users\"\nvalues = [6]", "s").is_err());
        assert!(parse_sweep("axis = \"n_receivers\"\nvalues = [1, 3]", "s").is_err());
        let msg = parse_sweep(
            "axis = \"n_antennas\"\nvalues = [6]\nschemes = [\"mrt\"]",
            "s",
        )
        .unwrap_err()
        .to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn receiver_axis_adds_premium_receivers() {
        let base = ScenarioConfig::default();
        let cfg = Axis::NReceivers.apply(&base, 5).unwrap();
        assert_eq!((cfg.n_premium, cfg.n_basic, cfg.n_idle), (3, 2, 2));
    }

    #[test]
    fn mean_stderr_examples() {
        assert_eq!(mean_stderr(&[]), None);
        assert_eq!(mean_stderr(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn summary_matches_rows() {
        let spec = SweepSpec {
            axis: Axis::NReceivers,
            values: vec![3, 4],
            trials_per_point: 3,
            schemes: vec![Scheme::Sdr, Scheme::Baseline],
            base_config: ScenarioConfig::default(),
            n_samples: 0,
        };
        let res = run_sweep(&spec).unwrap();
        assert_eq!(res.rows.len(), 2 * 3 * 2);
        for s in &res.summary.rows {
            let xs: Vec<f64> = res
                .rows
                .iter()
                .filter(|r| r.axis_value == s.axis_value && r.scheme == s.scheme)
                .filter_map(|r| r.total_power_dbm)
                .collect();
            assert_eq!(s.mean_power_dbm, mean_stderr(&xs).map(|x| x.0));
            assert_eq!(
                s.n_trials,
                s.n_ok + s.n_violated + s.n_infeasible + s.n_failed
            );
        }
    }
}
