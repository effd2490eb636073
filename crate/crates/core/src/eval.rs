//! Independent recomputation of every physical quantity of a solution.
//!
//! Nothing here reuses the problem construction in [`crate::power`]: SINRs,
//! harvested power and the eavesdropper bound are evaluated directly from the
//! channel vectors with `h^H W h`.
//!
//! Layer indices are zero-based.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chance::{q_matrix, safe_threshold, ChanceSpec};
use crate::channel::{draw_eavesdropper_channel, ChannelRealization, Role, ScenarioConfig};
use crate::error::{Error, Result};
use crate::hermitian::{lambda_max, quad_form, CVector, HermitianMatrix};
use crate::power::{BeamformingSolution, Scheme};

/// Most negative margin accepted by [`check_constraints`].
pub const MARGIN_TOL: f64 = -1e-6;

/// Slack on the secrecy floor comparison, in bit/s/Hz. It matches
/// [`MARGIN_TOL`]: an SINR deficit of 1e-6 costs at most about 1.4e-6 bits.
pub const SECRECY_SLACK: f64 = 1e-6;

pub const MIN_CHANCE_SAMPLES: usize = 1000;

/// `Tr(H W_l) / (Σ_{t>l} Tr(H W_t) + σ²)`; the energy signal is cancelled
/// before decoding and does not interfere.
pub fn sinr_legitimate(
    sol: &BeamformingSolution,
    h: &CVector,
    layer: usize,
    noise: f64,
) -> Result<f64> {
    check_layer(sol, layer)?;
    let signal = quad_form(h, &sol.w_layers[layer])?;
    let mut interference = 0.0;
    for w in &sol.w_layers[layer + 1..] {
        interference += quad_form(h, w)?;
    }
    Ok(signal / (interference + noise))
}

/// Worst-case eavesdropper SINR; the energy signal counts as interference
/// because an eavesdropper cannot cancel it.
pub fn sinr_eavesdropper_upper(
    sol: &BeamformingSolution,
    g: &CVector,
    layer: usize,
    eav_noise: f64,
) -> Result<f64> {
    check_layer(sol, layer)?;
    let signal = quad_form(g, &sol.w_layers[layer])?;
    let mut interference = quad_form(g, &sol.w_energy)?;
    for w in &sol.w_layers[layer + 1..] {
        interference += quad_form(g, w)?;
    }
    Ok(signal / (interference + eav_noise))
}

fn check_layer(sol: &BeamformingSolution, layer: usize) -> Result<()> {
    if layer >= sol.w_layers.len() {
        return Err(Error::Domain(format!(
            "layer {layer} out of range for {} layers",
            sol.w_layers.len()
        )));
    }
    Ok(())
}

pub fn capacity(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// `[min_k C_{l,k} − max_j C_PE_{l,j}]⁺` over the active receivers and the
/// given eavesdropper channels.
pub fn secrecy_capacity(
    sol: &BeamformingSolution,
    real: &ChannelRealization,
    eav_draws: &[CVector],
    layer: usize,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    let legit = min_active_capacity(sol, real, layer, cfg.noise_power)?;
    if eav_draws.is_empty() {
        return Err(Error::Domain(
            "at least one eavesdropper channel is required".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    for g in eav_draws {
        worst = worst.max(capacity(sinr_eavesdropper_upper(
            sol,
            g,
            layer,
            cfg.eav_noise,
        )?));
    }
    Ok((legit - worst).max(0.0))
}

fn min_active_capacity(
    sol: &BeamformingSolution,
    real: &ChannelRealization,
    layer: usize,
    noise: f64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for rx in real.active() {
        best = best.min(capacity(sinr_legitimate(sol, &rx.channel, layer, noise)?));
    }
    if best.is_infinite() {
        return Err(Error::Domain("no active receiver".into()));
    }
    Ok(best)
}

/// `η (Σ_l Tr(H W_l) + Tr(H W_E))`.
pub fn harvested_power(sol: &BeamformingSolution, h: &CVector, efficiency: f64) -> Result<f64> {
    let mut rf = quad_form(h, &sol.w_energy)?;
    for w in &sol.w_layers {
        rf += quad_form(h, w)?;
    }
    Ok(efficiency * rf)
}

pub fn total_power(sol: &BeamformingSolution) -> f64 {
    sol.w_layers.iter().map(HermitianMatrix::trace).sum::<f64>() + sol.w_energy.trace()
}

/// Guaranteed layer-1 secrecy capacity when the outage constraint holds.
pub fn secrecy_floor(cfg: &ScenarioConfig) -> f64 {
    capacity(cfg.sinr_req[0]) - capacity(cfg.sinr_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChanceEstimate {
    pub p_hat: f64,
    /// One binomial standard error, `sqrt(p̂(1 − p̂)/n)`.
    pub ci_halfwidth: f64,
    pub n_samples: usize,
    /// `max_j Γ_PE,1,j` per sample.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Fraction of independent draws of `J` eavesdroppers whose layer-1 SINRs
/// all stay at or below the tolerance.
pub fn monte_carlo_chance(
    sol: &BeamformingSolution,
    spec: &ChanceSpec,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<ChanceEstimate> {
    if n_samples < MIN_CHANCE_SAMPLES {
        return Err(Error::Domain(format!(
            "at least {MIN_CHANCE_SAMPLES} samples are required, got {n_samples}"
        )));
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..spec.n_eavesdroppers {
            let g = draw_eavesdropper_channel(rng, spec.n_antennas);
            worst = worst.max(sinr_eavesdropper_upper(sol, &g, 0, spec.eav_noise)?);
        }
        if worst <= spec.sinr_tol {
            hits += 1;
        }
        samples.push(worst);
    }
    let n = n_samples as f64;
    let p_hat = hits as f64 / n;
    Ok(ChanceEstimate {
        p_hat,
        ci_halfwidth: (p_hat * (1.0 - p_hat) / n).sqrt(),
        n_samples,
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    C1,
    C2,
    C3Bar,
    C4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub kind: ConstraintKind,
    pub label: String,
    /// SINR minus target for C1/C2, threshold minus `λ_max(Q)` in watts for
    /// C̄3, harvested minus required power in watts for C4.
    pub margin: f64,
    pub ok: bool,
}

impl ConstraintCheck {
    fn new(kind: ConstraintKind, label: String, margin: f64) -> Self {
        ConstraintCheck {
            kind,
            label,
            margin,
            ok: margin >= MARGIN_TOL,
        }
    }
}

/// Recomputes C1, C2, C̄3 and C4 from the raw channels.
pub fn check_constraints(
    sol: &BeamformingSolution,
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
) -> Result<Vec<ConstraintCheck>> {
    if sol.w_layers.len() != cfg.n_layers {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_layers,
            found: sol.w_layers.len(),
        });
    }
    let mut out = Vec::new();
    for (k, rx) in real.receivers.iter().enumerate() {
        match rx.role {
            Role::Premium => {
                for l in 0..cfg.n_layers {
                    let g = sinr_legitimate(sol, &rx.channel, l, cfg.noise_power)?;
                    out.push(ConstraintCheck::new(
                        ConstraintKind::C1,
                        format!("C1[{k},{}]", l + 1),
                        g - cfg.sinr_req[l],
                    ));
                }
            }
            Role::Basic => {
                let g = sinr_legitimate(sol, &rx.channel, 0, cfg.noise_power)?;
                out.push(ConstraintCheck::new(
                    ConstraintKind::C2,
                    format!("C2[{k}]"),
                    g - cfg.sinr_req[0],
                ));
            }
            Role::Idle => {
                let e = harvested_power(sol, &rx.channel, cfg.harvest_eff)?;
                out.push(ConstraintCheck::new(
                    ConstraintKind::C4,
                    format!("C4[{k}]"),
                    e - cfg.harvest_floor,
                ));
            }
        }
    }
    if let Some(spec) = cfg.chance_spec() {
        let q = q_matrix(&sol.w_layers, &sol.w_energy, cfg.sinr_tol)?;
        let margin = safe_threshold(&spec)? - lambda_max(&q);
        out.push(ConstraintCheck::new(
            ConstraintKind::C3Bar,
            "C3bar".into(),
            margin,
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scheme: Scheme,
    /// Realization indices of the active receivers, the columns of `sinr`.
    pub active_receivers: Vec<usize>,
    /// `sinr[l][k]`, linear.
    pub sinr: Vec<Vec<f64>>,
    /// `capacity[l][k]`, bits/s/Hz.
    pub capacity: Vec<Vec<f64>>,
    #[serde(skip)]
    pub eav_sinr_samples: Vec<f64>,
    /// Mean over samples of the strongest eavesdropper SINR, per layer.
    pub eav_sinr_mean: Vec<f64>,
    pub chance_prob_hat: f64,
    pub chance_ci_halfwidth: f64,
    pub chance_samples: usize,
    #[serde(skip)]
    pub secrecy_c1_samples: Vec<f64>,
    pub secrecy_floor: f64,
    /// Fraction of draws with layer-1 secrecy capacity at or above the floor.
    pub secrecy_ok_fraction: f64,
    /// Harvested power per idle receiver, watts.
    pub harvested: Vec<f64>,
    pub harvested_total: f64,
    pub total_power: f64,
    pub constraints: Vec<ConstraintCheck>,
    pub constraints_ok: bool,
}

/// Full evaluation: constraint margins plus a Monte Carlo run of the
/// eavesdropper model with `n_samples` draws of `J` channels.
pub fn evaluate(
    sol: &BeamformingSolution,
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<EvaluationReport> {
    let constraints = check_constraints(sol, cfg, real)?;
    let active: Vec<usize> = real
        .receivers
        .iter()
        .enumerate()
        .filter(|(_, r)| r.role != Role::Idle)
        .map(|(k, _)| k)
        .collect();
    let mut sinr = vec![Vec::with_capacity(active.len()); cfg.n_layers];
    for (l, row) in sinr.iter_mut().enumerate() {
        for &k in &active {
            row.push(sinr_legitimate(
                sol,
                &real.receivers[k].channel,
                l,
                cfg.noise_power,
            )?);
        }
    }
    let capacity_table: Vec<Vec<f64>> = sinr
        .iter()
        .map(|row| row.iter().map(|&g| capacity(g)).collect())
        .collect();
    let harvested: Vec<f64> = real
        .with_role(Role::Idle)
        .map(|rx| harvested_power(sol, &rx.channel, cfg.harvest_eff))
        .collect::<Result<_>>()?;

    let spec = cfg.eavesdropper_spec();
    let chance = monte_carlo_chance(sol, &spec, n_samples, rng)?;
    let mut eav_sinr_mean = vec![0.0; cfg.n_layers];
    eav_sinr_mean[0] = chance.samples.iter().sum::<f64>() / n_samples as f64;
    if cfg.n_layers > 1 {
        // Higher layers are reported only, from a short independent run.
        let n_report = MIN_CHANCE_SAMPLES;
        for _ in 0..n_report {
            let draws: Vec<CVector> = (0..spec.n_eavesdroppers)
                .map(|_| draw_eavesdropper_channel(rng, cfg.n_antennas))
                .collect();
            for (l, mean) in eav_sinr_mean.iter_mut().enumerate().skip(1) {
                let mut worst = f64::NEG_INFINITY;
                for g in &draws {
                    worst = worst.max(sinr_eavesdropper_upper(sol, g, l, cfg.eav_noise)?);
                }
                *mean += worst / n_report as f64;
            }
        }
    }

    let legit = min_active_capacity(sol, real, 0, cfg.noise_power)?;
    let floor = secrecy_floor(cfg);
    let secrecy: Vec<f64> = chance
        .samples
        .iter()
        .map(|&g| (legit - capacity(g)).max(0.0))
        .collect();
    let ok = secrecy
        .iter()
        .filter(|&&c| c >= floor - SECRECY_SLACK)
        .count();

    Ok(EvaluationReport {
        scheme: sol.scheme,
        active_receivers: active,
        sinr,
        capacity: capacity_table,
        eav_sinr_mean,
        chance_prob_hat: chance.p_hat,
        chance_ci_halfwidth: chance.ci_halfwidth,
        chance_samples: n_samples,
        secrecy_floor: floor,
        secrecy_ok_fraction: ok as f64 / n_samples as f64,
        secrecy_c1_samples: secrecy,
        eav_sinr_samples: chance.samples,
        harvested_total: harvested.iter().sum(),
        harvested,
        total_power: total_power(sol),
        constraints_ok: constraints.iter().all(|c| c.ok),
        constraints,
    })
}
