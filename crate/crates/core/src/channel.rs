//! Scenario generation: receiver placement, TGn path loss, Rician fading and
//! Rayleigh eavesdropper channels.
//!
//! All quantities are in watts and linear ratios; decibel conversion happens
//! when a configuration file is parsed.
//!
//! Every trial draws from its own ChaCha20 stream. The stream id is
//! `trial_index * 8 + purpose`, so the scenario, the randomized rank-one
//! recovery and the Monte Carlo verification of one trial never share
//! random numbers, and trials can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chance::ChanceSpec;
use crate::error::{Error, Result};
use crate::hermitian::CVector;
use num_complex::Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// What a trial's random stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Scenario = 0,
    Randomization = 1,
    Verification = 2,
}

pub fn trial_rng(seed: u64, trial_index: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial_index * 8 + purpose as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub n_premium: usize,
    pub n_basic: usize,
    pub n_idle: usize,
    pub n_layers: usize,
    pub n_eavesdroppers: usize,
    /// Per-layer SINR targets, linear.
    pub sinr_req: Vec<f64>,
    /// Largest tolerated layer-1 eavesdropper SINR, linear.
    pub sinr_tol: f64,
    /// Outage level; `0` removes the eavesdropper constraint altogether.
    pub kappa: f64,
    pub noise_power: f64,
    /// Minimum harvested power at each idle receiver, watts.
    pub harvest_floor: f64,
    pub harvest_eff: f64,
    pub carrier_hz: f64,
    pub ref_distance: f64,
    pub max_distance: f64,
    pub antenna_gain_dbi: f64,
    pub rician_k_db: f64,
    pub eav_noise: f64,
    pub breakpoint_distance: f64,
    pub exponent_near: f64,
    pub exponent_far: f64,
    pub seed: u64,
    pub n_rand: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_antennas: 6,
            n_premium: 1,
            n_basic: 2,
            n_idle: 2,
            n_layers: 3,
            n_eavesdroppers: 4,
            sinr_req: vec![db_to_linear(6.0), db_to_linear(9.0), db_to_linear(12.0)],
            sinr_tol: db_to_linear(-10.0),
            kappa: 0.99,
            noise_power: dbm_to_watts(-23.0),
            harvest_floor: dbm_to_watts(0.0),
            harvest_eff: 0.5,
            carrier_hz: 470e6,
            ref_distance: 2.0,
            max_distance: 20.0,
            antenna_gain_dbi: 10.0,
            rician_k_db: 6.0,
            eav_noise: 1.0,
            breakpoint_distance: 10.0,
            exponent_near: 2.0,
            exponent_far: 3.5,
            seed: 1,
            n_rand: 50,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_antennas == 0 {
            return fail("n_antennas must be at least 1".into());
        }
        if self.n_layers == 0 {
            return fail("n_layers must be at least 1".into());
        }
        if self.n_eavesdroppers == 0 {
            return fail("n_eavesdroppers must be at least 1".into());
        }
        if self.n_premium + self.n_basic == 0 {
            return fail("at least one video receiver is required".into());
        }
        if self.sinr_req.len() != self.n_layers {
            return fail(format!(
                "sinr_req has {} entries for {} layers",
                self.sinr_req.len(),
                self.n_layers
            ));
        }
        if self.sinr_req.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return fail("every per-layer SINR target must be positive".into());
        }
        if !(self.sinr_tol > 0.0 && self.sinr_tol.is_finite()) {
            return fail("sinr_tol must be positive".into());
        }
        if !(self.kappa == 0.0 || (self.kappa > 0.0 && self.kappa < 1.0)) {
            return fail(format!(
                "kappa = {} must lie in (0, 1), or be 0 to disable",
                self.kappa
            ));
        }
        if !(self.noise_power > 0.0) || !(self.eav_noise > 0.0) {
            return fail("noise powers must be positive".into());
        }
        if !(self.harvest_floor >= 0.0) {
            return fail("harvest floor must be nonnegative".into());
        }
        if !(self.harvest_eff > 0.0 && self.harvest_eff <= 1.0) {
            return fail("harvest_eff must lie in (0, 1]".into());
        }
        if !(self.carrier_hz > 0.0) {
            return fail("carrier_hz must be positive".into());
        }
        if !(self.ref_distance > 0.0 && self.max_distance >= self.ref_distance) {
            return fail("need 0 < ref_distance_m <= max_distance_m".into());
        }
        if !(self.breakpoint_distance >= self.ref_distance) {
            return fail("breakpoint distance must not be below the reference distance".into());
        }
        if !(self.exponent_near >= 0.0 && self.exponent_far >= 0.0) {
            return fail("path-loss exponents must be nonnegative".into());
        }
        if self.rician_k_db.is_nan() {
            return fail("rician_k_db must be a number".into());
        }
        if self.n_rand == 0 {
            return fail("n_rand must be at least 1".into());
        }
        Ok(())
    }

    /// Video receivers, premium and basic.
    pub fn n_video(&self) -> usize {
        self.n_premium + self.n_basic
    }

    /// All receivers, video and idle.
    pub fn n_receivers(&self) -> usize {
        self.n_video() + self.n_idle
    }

    /// `None` when the eavesdropper constraint is disabled with `kappa = 0`.
    pub fn chance_spec(&self) -> Option<ChanceSpec> {
        (self.kappa > 0.0).then_some(ChanceSpec {
            kappa: self.kappa,
            n_eavesdroppers: self.n_eavesdroppers,
            sinr_tol: self.sinr_tol,
            eav_noise: self.eav_noise,
            n_antennas: self.n_antennas,
        })
    }

    /// Eavesdropper model used for verification, even when the design
    /// constraint is disabled.
    pub fn eavesdropper_spec(&self) -> ChanceSpec {
        ChanceSpec {
            kappa: if self.kappa > 0.0 { self.kappa } else { 0.5 },
            n_eavesdroppers: self.n_eavesdroppers,
            sinr_tol: self.sinr_tol,
            eav_noise: self.eav_noise,
            n_antennas: self.n_antennas,
        }
    }

    /// Harvesting target in the RF domain, `P_min / η`.
    pub fn rf_harvest_target(&self) -> f64 {
        self.harvest_floor / self.harvest_eff
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Premium,
    Basic,
    Idle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub role: Role,
    pub distance: f64,
    pub channel: CVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub receivers: Vec<Receiver>,
    pub trial_index: u64,
    pub seed_stream: u64,
}

impl ChannelRealization {
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &Receiver> {
        self.receivers.iter().filter(move |r| r.role == role)
    }

    pub fn active(&self) -> impl Iterator<Item = &Receiver> {
        self.receivers.iter().filter(|r| r.role != Role::Idle)
    }

    pub fn count(&self, role: Role) -> usize {
        self.with_role(role).count()
    }

    pub fn validate(&self, cfg: &ScenarioConfig) -> Result<()> {
        let expect = [
            (Role::Premium, cfg.n_premium),
            (Role::Basic, cfg.n_basic),
            (Role::Idle, cfg.n_idle),
        ];
        for (role, n) in expect {
            if self.count(role) != n {
                return Err(Error::Config(format!(
                    "realization has {} {role:?} receivers, configuration expects {n}",
                    self.count(role)
                )));
            }
        }
        for r in &self.receivers {
            if r.channel.dim() != cfg.n_antennas {
                return Err(Error::DimensionMismatch {
                    expected: cfg.n_antennas,
                    found: r.channel.dim(),
                });
            }
            if r.channel.norm_sqr() == 0.0 {
                return Err(Error::Domain("all-zero channel vector".into()));
            }
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}

/// Two-slope TGn path loss in dB, net of the antenna gain.
pub fn path_loss_db(d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    let d0 = cfg.ref_distance;
    if !(d >= d0) {
        return Err(Error::Domain(format!(
            "distance {d} m is below the reference distance {d0} m"
        )));
    }
    let wavelength = SPEED_OF_LIGHT / cfg.carrier_hz;
    let fspl = 20.0 * (4.0 * std::f64::consts::PI * d0 / wavelength).log10();
    let d_bp = cfg.breakpoint_distance;
    let slope = if d <= d_bp {
        10.0 * cfg.exponent_near * (d / d0).log10()
    } else {
        10.0 * cfg.exponent_near * (d_bp / d0).log10()
            + 10.0 * cfg.exponent_far * (d / d_bp).log10()
    };
    Ok(fspl + slope - cfg.antenna_gain_dbi)
}

fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Rician channel with uniformly random line-of-sight phases.
///
/// Draws `N_T` phases followed by `N_T` scattered components.
pub fn draw_rician_channel(rng: &mut impl Rng, pl_linear: f64, cfg: &ScenarioConfig) -> CVector {
    let n = cfg.n_antennas;
    let k = db_to_linear(cfg.rician_k_db);
    let (los_w, nlos_w) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    let phases: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let amp = pl_linear.sqrt();
    CVector::new(
        phases
            .into_iter()
            .map(|phi| {
                let nlos = complex_gaussian(rng, 1.0);
                amp * (los_w * Complex64::from_polar(1.0, phi) + nlos_w * nlos)
            })
            .collect(),
    )
}

/// Rayleigh eavesdropper channel: real and imaginary parts each `N(0, 1)`,
/// so `‖g̃‖²` is chi-square with `2·N_T` degrees of freedom.
pub fn draw_eavesdropper_channel(rng: &mut impl Rng, n_antennas: usize) -> CVector {
    CVector::new(
        (0..n_antennas)
            .map(|_| complex_gaussian(rng, 2.0))
            .collect(),
    )
}

/// Receivers are drawn idle first, then basic, then premium, so changing the
/// number of premium receivers leaves the other receivers untouched.
pub fn generate_scenario(cfg: &ScenarioConfig, trial_index: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let mut rng = trial_rng(cfg.seed, trial_index, Purpose::Scenario);
    let roles = std::iter::repeat_n(Role::Idle, cfg.n_idle)
        .chain(std::iter::repeat_n(Role::Basic, cfg.n_basic))
        .chain(std::iter::repeat_n(Role::Premium, cfg.n_premium));
    let mut receivers = Vec::with_capacity(cfg.n_receivers());
    for role in roles {
        let distance = if cfg.max_distance > cfg.ref_distance {
            rng.random_range(cfg.ref_distance..=cfg.max_distance)
        } else {
            cfg.ref_distance
        };
        let pl = db_to_linear(-path_loss_db(distance, cfg)?);
        let channel = draw_rician_channel(&mut rng, pl, cfg);
        receivers.push(Receiver {
            role,
            distance,
            channel,
        });
    }
    let realization = ChannelRealization {
        receivers,
        trial_index,
        seed_stream: trial_index * 8 + Purpose::Scenario as u64,
    };
    realization.validate(cfg)?;
    Ok(realization)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chance::chi2_cdf;

    #[test]
    fn free_space_at_reference_distance() {
        let mut cfg = ScenarioConfig {
            antenna_gain_dbi: 0.0,
            ..ScenarioConfig::default()
        };
        let lambda = SPEED_OF_LIGHT / 470e6;
        let friis = 20.0 * (4.0 * std::f64::consts::PI * 2.0 / lambda).log10();
        assert!((path_loss_db(2.0, &cfg).unwrap() - friis).abs() < 1e-12);
        assert!((path_loss_db(2.0, &cfg).unwrap() - 31.91).abs() < 0.005);
        cfg.antenna_gain_dbi = 10.0;
        assert!((path_loss_db(2.0, &cfg).unwrap() - 21.91).abs() < 0.005);
        assert!(path_loss_db(1.9, &cfg).is_err());
    }

    #[test]
    fn path_loss_slopes_and_monotonicity() {
        let cfg = ScenarioConfig::default();
        let at = |d: f64| path_loss_db(d, &cfg).unwrap();
        assert!((at(10.0) - at(2.0) - 20.0 * 5f64.log10()).abs() < 1e-12);
        assert!((at(20.0) - at(10.0) - 35.0 * 2f64.log10()).abs() < 1e-12);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=36 {
            let pl = at(2.0 + 0.5 * i as f64);
            assert!(pl >= prev);
            prev = pl;
        }
    }

    #[test]
    fn los_only_limit_has_constant_modulus() {
        let cfg = ScenarioConfig {
            rician_k_db: f64::INFINITY,
            ..ScenarioConfig::default()
        };
        let mut rng = trial_rng(3, 0, Purpose::Scenario);
        let h = draw_rician_channel(&mut rng, 4e-4, &cfg);
        for z in h.entries() {
            assert!((z.norm() - 2e-2).abs() < 1e-15);
        }
    }

    #[test]
    fn rician_energy_and_scatter_variance() {
        let cfg = ScenarioConfig::default();
        let pl = 3e-3;
        let k = db_to_linear(6.0);
        let draws = 100_000;
        let mut rng = trial_rng(11, 0, Purpose::Scenario);
        let mut energy = 0.0;
        let mut scatter = 0.0;
        let mut count = 0.0;
        let los_w = (k / (k + 1.0)).sqrt();
        let mut phase_rng = trial_rng(11, 0, Purpose::Scenario);
        for _ in 0..draws {
            let h = draw_rician_channel(&mut rng, pl, &cfg);
            energy += h.norm_sqr();
            // Replay the phases to isolate the scattered part.
            let phases: Vec<f64> = (0..cfg.n_antennas)
                .map(|_| phase_rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            for _ in 0..cfg.n_antennas {
                let _ = complex_gaussian(&mut phase_rng, 1.0);
            }
            for (z, phi) in h.entries().iter().zip(phases) {
                let los = pl.sqrt() * los_w * Complex64::from_polar(1.0, phi);
                scatter += (z - los).norm_sqr();
                count += 1.0;
            }
        }
        let mean = energy / draws as f64;
        assert!(
            (mean / (pl * cfg.n_antennas as f64) - 1.0).abs() < 0.02,
            "{mean}"
        );
        let var = scatter / count;
        assert!((var / (pl / (k + 1.0)) - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn eavesdropper_energy_is_chi_square() {
        let n = 6;
        let draws = 100_000;
        let mut rng = trial_rng(5, 0, Purpose::Verification);
        let mut samples: Vec<f64> = (0..draws)
            .map(|_| draw_eavesdropper_channel(&mut rng, n).norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / draws as f64;
        assert!((mean / (2 * n) as f64 - 1.0).abs() < 0.02);
        samples.sort_by(f64::total_cmp);
        let mut ks: f64 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let f = chi2_cdf(x, 2 * n).unwrap();
            let lo = i as f64 / draws as f64;
            let hi = (i + 1) as f64 / draws as f64;
            ks = ks.max((f - lo).abs()).max((hi - f).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn single_antenna_tail_matches_closed_form() {
        let mut rng = trial_rng(9, 1, Purpose::Verification);
        let draws = 100_000;
        let above = (0..draws)
            .filter(|_| draw_eavesdropper_channel(&mut rng, 1).norm_sqr() > 5.9915)
            .count();
        let frac = above as f64 / draws as f64;
        assert!((frac - 0.05).abs() < 0.003, "{frac}");
    }

    #[test]
    fn scenario_is_deterministic_and_partitioned() {
        let cfg = ScenarioConfig {
            n_premium: 1,
            n_basic: 1,
            n_idle: 1,
            ..ScenarioConfig::default()
        };
        let a = generate_scenario(&cfg, 7).unwrap();
        let b = generate_scenario(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_scenario(&cfg, 8).unwrap());
        for role in [Role::Premium, Role::Basic, Role::Idle] {
            assert_eq!(a.count(role), 1);
        }
        for r in &a.receivers {
            assert!(r.distance >= cfg.ref_distance && r.distance <= cfg.max_distance);
        }
        let json = serde_json::to_string(&a).unwrap();
        let back: ChannelRealization = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn adding_premium_receivers_keeps_earlier_draws() {
        let small = ScenarioConfig::default();
        let large = ScenarioConfig {
            n_premium: 4,
            ..ScenarioConfig::default()
        };
        let a = generate_scenario(&small, 3).unwrap();
        let b = generate_scenario(&large, 3).unwrap();
        assert_eq!(a.receivers[..], b.receivers[..a.receivers.len()]);
    }

    #[test]
    fn received_power_falls_with_distance() {
        let cfg = ScenarioConfig::default();
        let mean_power = |d: f64| {
            let mut rng = trial_rng(1, 0, Purpose::Scenario);
            let pl = db_to_linear(-path_loss_db(d, &cfg).unwrap());
            (0..10_000)
                .map(|_| draw_rician_channel(&mut rng, pl, &cfg).norm_sqr())
                .sum::<f64>()
                / 10_000.0
        };
        assert!(mean_power(20.0) < mean_power(2.0));
    }
}
