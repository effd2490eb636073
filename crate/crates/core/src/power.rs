//! Minimum-power layered beamforming: the semidefinite relaxation, the two
//! rank-one recovery schemes, the MRT baseline and rank diagnostics.
//!
//! Constraint rows are written in normalized form so the solver sees
//! coefficients of order one: SINR rows are divided by the noise power and
//! harvesting rows by the RF-domain target `P_min / η`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chance::{q_matrix, safe_threshold};
use crate::channel::{trial_rng, ChannelRealization, Purpose, Role, ScenarioConfig};
use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, rank_numeric, CVector, HermitianMatrix, DEFAULT_RANK_TOL};
use crate::sdp::{
    solve, BlockId, LinearExpr, MatrixExpr, Relation, ScalarId, SdpProblem, SdpSolution,
    SolveStatus,
};

/// Largest Frobenius-relative error accepted when factoring a covariance
/// into a beam vector.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Dual multiplier level above which the eavesdropper LMI counts as active.
pub const PHI_ACTIVE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sdr,
    Scheme1,
    Scheme2,
    Baseline,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Sdr,
        Scheme::Scheme1,
        Scheme::Scheme2,
        Scheme::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sdr => "sdr",
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
            Scheme::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformingSolution {
    pub scheme: Scheme,
    pub w_layers: Vec<HermitianMatrix>,
    pub w_energy: HermitianMatrix,
    /// One vector per layer when every layer has rank at most one; zero
    /// layers give zero vectors.
    pub beam_vectors: Option<Vec<CVector>>,
    pub total_power: f64,
    pub ranks: Vec<usize>,
    pub solver_gap: f64,
}

impl BeamformingSolution {
    fn assemble(
        scheme: Scheme,
        w_layers: Vec<HermitianMatrix>,
        w_energy: HermitianMatrix,
        solver_gap: f64,
    ) -> Result<Self> {
        let ranks = w_layers
            .iter()
            .map(|w| rank_numeric(w, DEFAULT_RANK_TOL))
            .collect::<Result<Vec<_>>>()?;
        let beam_vectors = if ranks.iter().all(|&r| r <= 1) {
            w_layers
                .iter()
                .zip(&ranks)
                .map(|(w, &r)| {
                    if r == 0 {
                        return Some(CVector::zeros(w.dim()));
                    }
                    let v = recover_beamformers(w).ok()?;
                    let err = v.outer().sub(w).ok()?.frobenius_norm();
                    (err <= RECONSTRUCTION_TOL * w.frobenius_norm()).then_some(v)
                })
                .collect::<Option<Vec<_>>>()
        } else {
            None
        };
        let total_power =
            w_layers.iter().map(HermitianMatrix::trace).sum::<f64>() + w_energy.trace();
        Ok(BeamformingSolution {
            scheme,
            w_layers,
            w_energy,
            beam_vectors,
            total_power,
            ranks,
            solver_gap,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.w_layers.len()
    }

    /// Every layer has numerical rank at most one.
    pub fn is_rank_one(&self) -> bool {
        self.ranks.iter().all(|&r| r <= 1)
    }

    fn relabel(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

/// Which sufficient condition for a tight relaxation applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corollary1Case {
    /// Any `L`, at most two receivers, one of them premium.
    I,
    /// `L = 1`, two premium receivers and one basic.
    Ii,
    /// `L = 1`, two premium receivers and one idle.
    Iii,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank_w1: usize,
    /// Layer ranks followed by the rank of the energy covariance.
    pub rank_all: Vec<usize>,
    pub bound_min_k_nt: usize,
    pub sum_sq_rank_lhs: usize,
    pub sum_sq_rank_rhs: usize,
    /// Trace of the eavesdropper LMI multiplier; zero when the LMI is absent.
    pub phi: f64,
    pub phi_active: bool,
    pub corollary1_case: Option<Corollary1Case>,
    pub rank_bound_ok: bool,
    /// Checked only when the LMI is inactive.
    pub sum_sq_bound_ok: Option<bool>,
    /// `λ₂/λ₁` of `W_1`, for diagnosing borderline numerical ranks.
    pub w1_eigen_ratio: f64,
}

/// Optimization variable standing for one information layer.
#[derive(Clone, Debug)]
enum LayerVar {
    Block(BlockId),
    /// `α · w w^H` along a fixed direction.
    Scaled(ScalarId, HermitianMatrix),
    Zero,
}

#[derive(Clone, Copy, Debug)]
enum EnergyVar {
    Block(BlockId),
    /// `(p / N_T) · I`.
    Isotropic(ScalarId),
}

/// Appends `coef · Tr(A X)` for layer variable `X`.
fn layer_term(
    expr: LinearExpr,
    var: &LayerVar,
    a: &HermitianMatrix,
    coef: f64,
) -> Result<LinearExpr> {
    Ok(match var {
        LayerVar::Block(id) => expr.block(*id, a.scale(coef)),
        LayerVar::Scaled(id, ww) => expr.scalar(*id, coef * a.trace_product(ww)?),
        LayerVar::Zero => expr,
    })
}

fn energy_term(expr: LinearExpr, var: EnergyVar, a: &HermitianMatrix, coef: f64) -> LinearExpr {
    match var {
        EnergyVar::Block(id) => expr.block(id, a.scale(coef)),
        EnergyVar::Isotropic(id) => expr.scalar(id, coef * a.trace() / a.dim() as f64),
    }
}

fn layer_matrix(m: MatrixExpr, var: &LayerVar, coef: f64) -> MatrixExpr {
    match var {
        LayerVar::Block(id) => m.block(*id, coef),
        LayerVar::Scaled(id, ww) => m.scalar(*id, ww.scale(coef)),
        LayerVar::Zero => m,
    }
}

fn energy_matrix(m: MatrixExpr, var: EnergyVar, coef: f64) -> MatrixExpr {
    match var {
        EnergyVar::Block(id) => m.block(id, coef),
        EnergyVar::Isotropic(id) => {
            let n = m.dim;
            m.scalar(id, HermitianMatrix::scaled_identity(n, coef / n as f64))
        }
    }
}

/// Adds the objective, C1, C2, C̄3 and C4. Returns the LMI slack block.
fn add_design_constraints(
    p: &mut SdpProblem,
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    layers: &[LayerVar],
    energy: EnergyVar,
) -> Result<Option<BlockId>> {
    let n = cfg.n_antennas;
    let eye = HermitianMatrix::identity(n);
    let mut objective = LinearExpr::new();
    for v in layers {
        objective = layer_term(objective, v, &eye, 1.0)?;
    }
    p.set_objective(energy_term(objective, energy, &eye, 1.0));

    let sigma2 = cfg.noise_power;
    for (k, rx) in real.receivers.iter().enumerate() {
        let h = rx.channel.outer().scale(1.0 / sigma2);
        let sinr_rows: Vec<usize> = match rx.role {
            Role::Premium => (0..cfg.n_layers).collect(),
            Role::Basic => vec![0],
            Role::Idle => Vec::new(),
        };
        for l in sinr_rows {
            let gamma = cfg.sinr_req[l];
            // Receivers cancel lower layers before decoding layer l, so only
            // layers above l interfere; a basic receiver decodes layer 1
            // against every higher layer.
            let mut expr = layer_term(LinearExpr::new(), &layers[l], &h, 1.0)?;
            for v in &layers[l + 1..] {
                expr = layer_term(expr, v, &h, -gamma)?;
            }
            let label = match rx.role {
                Role::Premium => format!("C1[{k},{}]", l + 1),
                _ => format!("C2[{k}]"),
            };
            p.add_constraint(label, expr, Relation::Ge, gamma);
        }
    }

    let target = cfg.rf_harvest_target();
    let scale = if target > 0.0 { 1.0 / target } else { 1.0 };
    for (k, rx) in real.receivers.iter().enumerate() {
        if rx.role != Role::Idle {
            continue;
        }
        let h = rx.channel.outer().scale(scale);
        let mut expr = energy_term(LinearExpr::new(), energy, &h, 1.0);
        for v in layers {
            expr = layer_term(expr, v, &h, 1.0)?;
        }
        p.add_constraint(format!("C4[{k}]"), expr, Relation::Ge, target * scale);
    }

    let Some(spec) = cfg.chance_spec() else {
        return Ok(None);
    };
    let threshold = safe_threshold(&spec)?;
    let tol = cfg.sinr_tol;
    let mut combo = layer_matrix(MatrixExpr::new(n), &layers[0], 1.0);
    for v in &layers[1..] {
        combo = layer_matrix(combo, v, -tol);
    }
    combo = energy_matrix(combo, energy, -tol);
    Ok(Some(p.add_lmi_eig_bound("C3bar", &combo, threshold)?))
}

/// The relaxed problem with handles to its variables.
#[derive(Clone, Debug)]
pub struct RelaxedProblem {
    pub problem: SdpProblem,
    pub layers: Vec<BlockId>,
    pub energy: BlockId,
    /// Slack block of the eavesdropper LMI, absent when `kappa = 0`.
    pub lmi_slack: Option<BlockId>,
}

pub fn build_relaxed_problem(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
) -> Result<RelaxedProblem> {
    cfg.validate()?;
    real.validate(cfg)?;
    let mut problem = SdpProblem::new();
    let layers: Vec<BlockId> = (1..=cfg.n_layers)
        .map(|l| problem.add_block(format!("W{l}"), cfg.n_antennas))
        .collect();
    let energy = problem.add_block("WE", cfg.n_antennas);
    let vars: Vec<LayerVar> = layers.iter().map(|&b| LayerVar::Block(b)).collect();
    let lmi_slack =
        add_design_constraints(&mut problem, cfg, real, &vars, EnergyVar::Block(energy))?;
    Ok(RelaxedProblem {
        problem,
        layers,
        energy,
        lmi_slack,
    })
}

fn require_optimal(s: &SdpSolution, what: &str) -> Result<()> {
    match s.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Infeasible => Err(Error::Infeasible(format!("{what}: {}", s.message))),
        _ => Err(Error::Solver(format!(
            "{what}: {:?} ({})",
            s.status, s.message
        ))),
    }
}

/// Solves the relaxation and reports rank diagnostics.
pub fn solve_sdr(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
) -> Result<(BeamformingSolution, RankReport)> {
    let relaxed = build_relaxed_problem(cfg, real)?;
    let s = solve(&relaxed.problem)?;
    require_optimal(&s, "relaxation")?;
    let w_layers = relaxed.layers.iter().map(|&b| s.block(b).clone()).collect();
    let raw = BeamformingSolution::assemble(
        Scheme::Sdr,
        w_layers,
        s.block(relaxed.energy).clone(),
        s.duality_gap,
    )?;
    let sol = if raw.is_rank_one() && raw.beam_vectors.is_none() {
        polish_rank_one(cfg, real, raw)
    } else {
        raw
    };
    let phi = relaxed.lmi_slack.map_or(0.0, |b| s.block_dual(b).trace());
    let report = check_rank_conditions(&sol, phi, cfg)?;
    Ok((sol, report))
}

/// Solves for layer powers along fixed unit directions and a free energy
/// covariance. Zero directions are left out.
fn solve_scaling(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    directions: &[CVector],
    scheme: Scheme,
) -> Result<BeamformingSolution> {
    let mut p = SdpProblem::new();
    let vars: Vec<LayerVar> = directions
        .iter()
        .enumerate()
        .map(|(l, d)| {
            if d.norm_sqr() == 0.0 {
                LayerVar::Zero
            } else {
                LayerVar::Scaled(p.add_scalar(format!("alpha{}", l + 1)), d.outer())
            }
        })
        .collect();
    let energy = p.add_block("WE", cfg.n_antennas);
    add_design_constraints(&mut p, cfg, real, &vars, EnergyVar::Block(energy))?;
    let s = solve(&p)?;
    require_optimal(&s, scheme.name())?;
    let w_layers = vars
        .iter()
        .map(|v| match v {
            LayerVar::Scaled(id, ww) => ww.scale(s.scalar(*id).max(0.0)),
            _ => HermitianMatrix::zeros(cfg.n_antennas),
        })
        .collect();
    BeamformingSolution::assemble(scheme, w_layers, s.block(energy).clone(), s.duality_gap)
}

/// Interior-point iterates keep eigenvalues of order `μ` off the optimal
/// face, too large for an exact factorization yet too large to simply drop
/// without eating into the SINR margins. Re-optimizing the powers along the
/// dominant eigenvectors gives an exactly rank-one point with the same
/// objective up to solver tolerance.
fn polish_rank_one(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    raw: BeamformingSolution,
) -> BeamformingSolution {
    let directions: Vec<CVector> = raw.w_layers.iter().map(dominant_direction).collect();
    match solve_scaling(cfg, real, &directions, Scheme::Sdr) {
        Ok(mut p) if p.beam_vectors.is_some() => {
            p.solver_gap = p.solver_gap.max(raw.solver_gap);
            p
        }
        Ok(_) => raw,
        Err(e) => {
            log::debug!("rank-one polish failed: {e}");
            raw
        }
    }
}

fn dominant_direction(w: &HermitianMatrix) -> CVector {
    let e = eig_hermitian(w);
    if e.max() <= 0.0 {
        return CVector::zeros(w.dim());
    }
    e.eigenvectors[0].clone()
}

/// Rank-one recovery along the dominant eigenvector of each layer.
pub fn extract_scheme1(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    sdr: &BeamformingSolution,
) -> Result<BeamformingSolution> {
    if sdr.beam_vectors.is_some() {
        return Ok(sdr.clone().relabel(Scheme::Scheme1));
    }
    let directions: Vec<CVector> = sdr.w_layers.iter().map(dominant_direction).collect();
    solve_scaling(cfg, real, &directions, Scheme::Scheme1)
}

/// Rank-one recovery by Gaussian randomization. Candidate `c` uses the
/// `c`-th group of `L` draws from the trial's randomization stream, so a
/// larger `n_rand` only adds candidates.
pub fn extract_scheme2(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    sdr: &BeamformingSolution,
    n_rand: usize,
) -> Result<BeamformingSolution> {
    if n_rand == 0 {
        return Err(Error::Config("n_rand must be at least 1".into()));
    }
    if sdr.beam_vectors.is_some() {
        return Ok(sdr.clone().relabel(Scheme::Scheme2));
    }
    let n = cfg.n_antennas;
    let roots: Vec<Vec<(f64, CVector)>> = sdr
        .w_layers
        .iter()
        .map(|w| {
            let e = eig_hermitian(w);
            e.eigenvalues
                .iter()
                .zip(e.eigenvectors)
                .map(|(&lam, u)| (lam.max(0.0).sqrt(), u))
                .collect()
        })
        .collect();

    let mut rng = trial_rng(cfg.seed, real.trial_index, Purpose::Randomization);
    let mut best: Option<BeamformingSolution> = None;
    let mut last_err = None;
    for _ in 0..n_rand {
        let directions: Vec<CVector> = roots
            .iter()
            .map(|root| {
                let r: Vec<Complex64> = (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                    })
                    .collect();
                // U Σ^{1/2} r
                let mut w = vec![Complex64::new(0.0, 0.0); n];
                for (s, u) in root {
                    let coeff = r[..]
                        .iter()
                        .zip(u.entries())
                        .map(|(ri, ui)| ri * ui.conj())
                        .sum::<Complex64>()
                        * *s;
                    for (wi, ui) in w.iter_mut().zip(u.entries()) {
                        *wi += ui * coeff;
                    }
                }
                CVector::new(w)
                    .normalized()
                    .unwrap_or_else(|| CVector::zeros(n))
            })
            .collect();
        match solve_scaling(cfg, real, &directions, Scheme::Scheme2) {
            Ok(sol) => {
                if best
                    .as_ref()
                    .is_none_or(|b| sol.total_power < b.total_power)
                {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(format!(
            "all {n_rand} randomized candidates failed (last: {})",
            last_err.map_or_else(String::new, |e| e.to_string())
        ))
    })
}

/// Index of the active receiver with the largest channel gain; ties go to the
/// lowest index.
pub fn strongest_active(real: &ChannelRealization) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, rx) in real.receivers.iter().enumerate() {
        if rx.role == Role::Idle {
            continue;
        }
        let g = rx.channel.norm_sqr();
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((k, g));
        }
    }
    best.map(|(k, _)| k)
}

/// MRT toward the strongest active receiver for every layer, with an
/// isotropic energy signal; only the powers are optimized.
pub fn solve_baseline_mrt(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
) -> Result<BeamformingSolution> {
    cfg.validate()?;
    real.validate(cfg)?;
    let k = strongest_active(real).ok_or_else(|| Error::Config("no active receiver".into()))?;
    let dir = real.receivers[k]
        .channel
        .normalized()
        .ok_or_else(|| Error::Domain("all-zero channel vector".into()))?;
    let ww = dir.outer();
    let mut p = SdpProblem::new();
    let vars: Vec<LayerVar> = (1..=cfg.n_layers)
        .map(|l| LayerVar::Scaled(p.add_scalar(format!("p{l}")), ww.clone()))
        .collect();
    let p_energy = p.add_scalar("pE");
    add_design_constraints(&mut p, cfg, real, &vars, EnergyVar::Isotropic(p_energy))?;
    let s = solve(&p)?;
    require_optimal(&s, "baseline")?;
    let n = cfg.n_antennas;
    let w_layers = vars
        .iter()
        .map(|v| match v {
            LayerVar::Scaled(id, ww) => ww.scale(s.scalar(*id).max(0.0)),
            _ => unreachable!("baseline layers are all scaled"),
        })
        .collect();
    let w_energy = HermitianMatrix::scaled_identity(n, s.scalar(p_energy).max(0.0) / n as f64);
    BeamformingSolution::assemble(Scheme::Baseline, w_layers, w_energy, s.duality_gap)
}

/// Checks the rank bounds of an optimal relaxed solution.
pub fn check_rank_conditions(
    sol: &BeamformingSolution,
    phi: f64,
    cfg: &ScenarioConfig,
) -> Result<RankReport> {
    let mut rank_all = sol.ranks.clone();
    rank_all.push(rank_numeric(&sol.w_energy, DEFAULT_RANK_TOL)?);
    let k = cfg.n_receivers();
    let rank_w1 = rank_all[0];
    let bound = k.min(cfg.n_antennas);
    let lhs = rank_all.iter().map(|r| r * r).sum();
    let rhs = cfg.n_premium * cfg.n_layers + cfg.n_basic + cfg.n_idle;
    let phi_active = phi > PHI_ACTIVE_TOL;
    let e = eig_hermitian(&sol.w_layers[0]);
    let ratio = if e.eigenvalues[0] > 0.0 && e.eigenvalues.len() > 1 {
        e.eigenvalues[1].max(0.0) / e.eigenvalues[0]
    } else {
        0.0
    };
    Ok(RankReport {
        rank_w1,
        bound_min_k_nt: bound,
        sum_sq_rank_lhs: lhs,
        sum_sq_rank_rhs: rhs,
        phi,
        phi_active,
        corollary1_case: corollary1_case(cfg),
        rank_bound_ok: rank_w1 <= bound,
        sum_sq_bound_ok: (!phi_active).then_some(lhs <= rhs),
        w1_eigen_ratio: ratio,
        rank_all,
    })
}

pub fn corollary1_case(cfg: &ScenarioConfig) -> Option<Corollary1Case> {
    let (p, b, i) = (cfg.n_premium, cfg.n_basic, cfg.n_idle);
    let k = p + b + i;
    if k <= 2 && p == 1 {
        Some(Corollary1Case::I)
    } else if cfg.n_layers == 1 && (p, b, i) == (2, 1, 0) {
        Some(Corollary1Case::Ii)
    } else if cfg.n_layers == 1 && (p, b, i) == (2, 0, 1) {
        Some(Corollary1Case::Iii)
    } else {
        None
    }
}

/// `w` with `w w^H = W` for a rank-one `W`; the largest-magnitude entry of
/// `w` is made real and positive.
pub fn recover_beamformers(w: &HermitianMatrix) -> Result<CVector> {
    let rank = rank_numeric(w, DEFAULT_RANK_TOL)?;
    if rank != 1 {
        return Err(Error::NotRankOne { rank });
    }
    let e = eig_hermitian(w);
    let v = e.eigenvectors[0].scaled(Complex64::new(e.eigenvalues[0].sqrt(), 0.0));
    Ok(fix_phase(&v))
}

fn fix_phase(v: &CVector) -> CVector {
    let mut best = 0;
    for (i, z) in v.entries().iter().enumerate() {
        if z.norm() > v.entries()[best].norm() {
            best = i;
        }
    }
    let z = v.entries()[best];
    if z.norm() == 0.0 {
        return v.clone();
    }
    v.scaled(z.conj() / z.norm())
}

/// Every scheme's output must also satisfy the design; `Q` for reporting.
pub fn eavesdropper_q(sol: &BeamformingSolution, cfg: &ScenarioConfig) -> Result<HermitianMatrix> {
    q_matrix(&sol.w_layers, &sol.w_energy, cfg.sinr_tol)
}
