use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{
    generate_scenario, trial_rng, watts_to_dbm, ChannelRealization, Purpose, Role, ScenarioConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    check_constraints, evaluate, harvested_power, EvaluationReport, MIN_CHANCE_SAMPLES,
};
use crate::power::{
    extract_scheme1, extract_scheme2, solve_baseline_mrt, solve_sdr, BeamformingSolution,
    RankReport, Scheme,
};

/// How far below `κ` the Monte Carlo estimate may fall, in standard errors.
pub const CHANCE_SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Solved and every recomputed constraint holds.
    Ok,
    /// Solved, but the evaluator flags a violation.
    Violated,
    Infeasible,
    Failed,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Violated => "violated",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Failed => "failed",
        }
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::Infeasible(_) => RunStatus::Infeasible,
            _ => RunStatus::Failed,
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one scheme on one realization.
#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub status: RunStatus,
    pub message: Option<String>,
    pub solution: Option<BeamformingSolution>,
    pub report: Option<EvaluationReport>,
    pub rank_report: Option<RankReport>,
    pub total_power: Option<f64>,
    pub harvested_total: Option<f64>,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub realization: ChannelRealization,
    pub schemes: Vec<SchemeOutcome>,
}

/// `p̂ ≥ κ − 3·CI`, or true when the constraint is disabled.
pub fn chance_passes(cfg: &ScenarioConfig, report: &EvaluationReport) -> bool {
    match cfg.chance_spec() {
        Some(spec) => {
            report.chance_prob_hat >= spec.kappa - CHANCE_SIGMAS * report.chance_ci_halfwidth
        }
        None => true,
    }
}

/// Solves the requested schemes on one realization and verifies each
/// solution. `n_samples = 0` skips the Monte Carlo part of verification.
pub fn solve_trial(
    cfg: &ScenarioConfig,
    trial: u64,
    schemes: &[Scheme],
    n_samples: usize,
) -> Result<TrialOutcome> {
    if n_samples != 0 && n_samples < MIN_CHANCE_SAMPLES {
        return Err(Error::Config(format!(
            "samples must be 0 or at least {MIN_CHANCE_SAMPLES}, got {n_samples}"
        )));
    }
    let real = generate_scenario(cfg, trial)?;
    let needs_sdr = schemes.iter().any(|s| *s != Scheme::Baseline);
    let start = Instant::now();
    let sdr = if needs_sdr {
        Some(solve_sdr(cfg, &real))
    } else {
        None
    };
    let sdr_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut out = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let start = Instant::now();
        let (result, rank_report, extra_ms) = match (scheme, &sdr) {
            (Scheme::Baseline, _) => (solve_baseline_mrt(cfg, &real), None, 0.0),
            (_, Some(Err(e))) => (Err(clone_error(e)), None, sdr_ms),
            (Scheme::Sdr, Some(Ok((s, rep)))) => (Ok(s.clone()), Some(rep.clone()), sdr_ms),
            (Scheme::Scheme1, Some(Ok((s, _)))) => (extract_scheme1(cfg, &real, s), None, sdr_ms),
            (Scheme::Scheme2, Some(Ok((s, _)))) => {
                (extract_scheme2(cfg, &real, s, cfg.n_rand), None, sdr_ms)
            }
            (_, None) => {
                unreachable!("relaxation is solved whenever a relaxation scheme is requested")
            }
        };
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3 + extra_ms;
        out.push(match result {
            Ok(sol) => verified(cfg, &real, sol, rank_report, n_samples, runtime_ms)?,
            Err(e) => SchemeOutcome {
                scheme,
                status: RunStatus::of_error(&e),
                message: Some(e.to_string()),
                solution: None,
                report: None,
                rank_report: None,
                total_power: None,
                harvested_total: None,
                runtime_ms,
            },
        });
    }
    Ok(TrialOutcome {
        realization: real,
        schemes: out,
    })
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Infeasible(m) => Error::Infeasible(m.clone()),
        other => Error::Solver(other.to_string()),
    }
}

fn verified(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    sol: BeamformingSolution,
    rank_report: Option<RankReport>,
    n_samples: usize,
    runtime_ms: f64,
) -> Result<SchemeOutcome> {
    let (checks, report, harvested) = if n_samples == 0 {
        let checks = check_constraints(&sol, cfg, real)?;
        let harvested = real
            .with_role(Role::Idle)
            .map(|rx| harvested_power(&sol, &rx.channel, cfg.harvest_eff))
            .sum::<Result<f64>>()?;
        (checks, None, harvested)
    } else {
        let mut rng = trial_rng(cfg.seed, real.trial_index, Purpose::Verification);
        let report = evaluate(&sol, cfg, real, n_samples, &mut rng)?;
        let harvested = report.harvested_total;
        (report.constraints.clone(), Some(report), harvested)
    };
    let mut failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.ok)
        .map(|c| c.label.clone())
        .collect();
    if report.as_ref().is_some_and(|r| !chance_passes(cfg, r)) {
        failed.push("chance".into());
    }
    let ok = failed.is_empty();
    Ok(SchemeOutcome {
        scheme: sol.scheme,
        status: if ok {
            RunStatus::Ok
        } else {
            RunStatus::Violated
        },
        message: (!ok).then(|| format!("verification failed {failed:?}")),
        total_power: Some(sol.total_power),
        harvested_total: Some(harvested),
        solution: Some(sol),
        report,
        rank_report,
        runtime_ms,
    })
}

/// Contents of `solution.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub config: ScenarioConfig,
    pub realization: ChannelRealization,
    pub solutions: Vec<BeamformingSolution>,
}

/// One entry of `report.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: Scheme,
    pub status: RunStatus,
    pub message: Option<String>,
    pub total_power_w: Option<f64>,
    pub total_power_dbm: Option<f64>,
    pub evaluation: Option<EvaluationReport>,
    pub rank: Option<RankReport>,
}

impl SchemeReport {
    fn from_outcome(o: &SchemeOutcome) -> Self {
        SchemeReport {
            scheme: o.scheme,
            status: o.status,
            message: o.message.clone(),
            total_power_w: o.total_power,
            total_power_dbm: o.total_power.map(watts_to_dbm),
            evaluation: o.report.clone(),
            rank: o.rank_report.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SingleRun {
    pub config: ScenarioConfig,
    pub trial: TrialOutcome,
    pub reports: Vec<SchemeReport>,
}

impl SingleRun {
    /// True when every requested scheme was feasible and verified.
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.status == RunStatus::Ok)
    }
}

/// Solves trial 0 of `cfg` and writes `solution.json` and `report.json`
/// into `out_dir`.
pub fn run_single(
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    n_samples: usize,
    out_dir: &Path,
) -> Result<SingleRun> {
    if schemes.is_empty() {
        return Err(Error::Config("no schemes requested".into()));
    }
    let trial = solve_trial(cfg, 0, schemes, n_samples)?;
    let file = SolutionFile {
        config: cfg.clone(),
        realization: trial.realization.clone(),
        solutions: trial
            .schemes
            .iter()
            .filter_map(|o| o.solution.clone())
            .collect(),
    };
    let reports: Vec<SchemeReport> = trial
        .schemes
        .iter()
        .map(SchemeReport::from_outcome)
        .collect();
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("solution.json"), &file)?;
    write_json(&out_dir.join("report.json"), &reports)?;
    Ok(SingleRun {
        config: cfg.clone(),
        trial,
        reports,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub scheme: Scheme,
    pub passed: bool,
    pub evaluation: EvaluationReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub entries: Vec<VerifyEntry>,
    pub passed: bool,
}

/// Re-runs the evaluator on every solution in a persisted solution file,
/// against the thresholds of `cfg`.
pub fn verify(
    solution: &SolutionFile,
    cfg: &ScenarioConfig,
    n_samples: usize,
) -> Result<VerifyReport> {
    solution.realization.validate(cfg)?;
    let mut entries = Vec::with_capacity(solution.solutions.len());
    for sol in &solution.solutions {
        let mut rng = trial_rng(
            cfg.seed,
            solution.realization.trial_index,
            Purpose::Verification,
        );
        let evaluation = evaluate(sol, cfg, &solution.realization, n_samples, &mut rng)?;
        entries.push(VerifyEntry {
            scheme: sol.scheme,
            passed: evaluation.constraints_ok && chance_passes(cfg, &evaluation),
            evaluation,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(VerifyReport { entries, passed })
}

pub fn load_solution(path: &Path) -> Result<SolutionFile> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
