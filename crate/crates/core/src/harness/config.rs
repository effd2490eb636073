//! TOML scenario files.
//!
//! Powers and SINRs are given in dB or dBm and converted to linear units on
//! load. Every key is optional and falls back to the default scenario;
//! unknown keys are rejected. `n_video_receivers` counts premium and basic
//! receivers together, idle receivers come on top.
//!
//! ```toml
//! n_antennas = 6
//! n_video_receivers = 3
//! n_basic = 2
//! n_idle = 2
//! n_layers = 3
//! n_eavesdroppers = 4
//! sinr_req_db = [6.0, 9.0, 12.0]
//! sinr_tol_db = -10.0
//! kappa = 0.99            # 0 disables the eavesdropper constraint
//! noise_dbm = -23.0
//! harvest_floor_dbm = 0.0
//! harvest_eff = 0.5
//! carrier_hz = 470e6
//! ref_distance_m = 2.0
//! max_distance_m = 20.0
//! antenna_gain_dbi = 10.0
//! rician_k_db = 6.0
//! eav_noise_norm = 1.0
//! seed = 1
//! n_rand = 50
//! # path-loss shape
//! breakpoint_m = 10.0
//! exponent_near = 2.0
//! exponent_far = 3.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub n_antennas: usize,
    pub n_video_receivers: usize,
    pub n_idle: usize,
    pub n_basic: usize,
    pub n_layers: usize,
    pub n_eavesdroppers: usize,
    pub sinr_req_db: Vec<f64>,
    pub sinr_tol_db: f64,
    pub kappa: f64,
    pub noise_dbm: f64,
    pub harvest_floor_dbm: f64,
    pub harvest_eff: f64,
    pub carrier_hz: f64,
    pub ref_distance_m: f64,
    pub max_distance_m: f64,
    pub antenna_gain_dbi: f64,
    pub rician_k_db: f64,
    pub eav_noise_norm: f64,
    pub seed: u64,
    pub n_rand: usize,
    pub breakpoint_m: f64,
    pub exponent_near: f64,
    pub exponent_far: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile::from(&ScenarioConfig::default())
    }
}

impl From<&ScenarioConfig> for ConfigFile {
    fn from(c: &ScenarioConfig) -> Self {
        ConfigFile {
            n_antennas: c.n_antennas,
            n_video_receivers: c.n_video(),
            n_idle: c.n_idle,
            n_basic: c.n_basic,
            n_layers: c.n_layers,
            n_eavesdroppers: c.n_eavesdroppers,
            sinr_req_db: c.sinr_req.iter().map(|&g| linear_to_db(g)).collect(),
            sinr_tol_db: linear_to_db(c.sinr_tol),
            kappa: c.kappa,
            noise_dbm: watts_to_dbm(c.noise_power),
            harvest_floor_dbm: watts_to_dbm(c.harvest_floor),
            harvest_eff: c.harvest_eff,
            carrier_hz: c.carrier_hz,
            ref_distance_m: c.ref_distance,
            max_distance_m: c.max_distance,
            antenna_gain_dbi: c.antenna_gain_dbi,
            rician_k_db: c.rician_k_db,
            eav_noise_norm: c.eav_noise,
            seed: c.seed,
            n_rand: c.n_rand,
            breakpoint_m: c.breakpoint_distance,
            exponent_near: c.exponent_near,
            exponent_far: c.exponent_far,
        }
    }
}

impl ConfigFile {
    pub fn to_scenario(&self) -> Result<ScenarioConfig> {
        if self.n_basic > self.n_video_receivers {
            return Err(Error::Config(format!(
                "n_basic = {} exceeds n_video_receivers = {}",
                self.n_basic, self.n_video_receivers
            )));
        }
        let cfg = ScenarioConfig {
            n_antennas: self.n_antennas,
            n_premium: self.n_video_receivers - self.n_basic,
            n_basic: self.n_basic,
            n_idle: self.n_idle,
            n_layers: self.n_layers,
            n_eavesdroppers: self.n_eavesdroppers,
            sinr_req: self.sinr_req_db.iter().map(|&d| db_to_linear(d)).collect(),
            sinr_tol: db_to_linear(self.sinr_tol_db),
            kappa: self.kappa,
            noise_power: dbm_to_watts(self.noise_dbm),
            harvest_floor: dbm_to_watts(self.harvest_floor_dbm),
            harvest_eff: self.harvest_eff,
            carrier_hz: self.carrier_hz,
            ref_distance: self.ref_distance_m,
            max_distance: self.max_distance_m,
            antenna_gain_dbi: self.antenna_gain_dbi,
            rician_k_db: self.rician_k_db,
            eav_noise: self.eav_noise_norm,
            breakpoint_distance: self.breakpoint_m,
            exponent_near: self.exponent_near,
            exponent_far: self.exponent_far,
            seed: self.seed,
            n_rand: self.n_rand,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain config serializes")
    }
}

/// Parses and validates a scenario; `origin` names the source in messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    file.to_scenario()
        .map_err(|e| Error::Config(format!("{origin}: {}", strip_prefix(e))))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
