//! Quick analytic checks of a fresh build.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::chance::{chi2_cdf, chi2_inv};
use crate::channel::{generate_scenario, trial_rng, Purpose, Role, ScenarioConfig};
use crate::hermitian::{complex_projection, real_embedding, HermitianMatrix};
use crate::power::{extract_scheme1, extract_scheme2, solve_baseline_mrt, solve_sdr};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const ORDERING_SEEDS: u64 = 10;

pub fn selftest() -> Vec<Check> {
    vec![
        chi_square_closed_form(),
        chi_square_round_trip(),
        embedding(),
        mrt_optimum(),
        ordering_chain(),
    ]
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn chi_square_closed_form() -> Check {
    let mut worst = 0.0f64;
    for p in [0.5, 0.9, 0.95, 0.99, 0.9974906] {
        match chi2_inv(p, 2) {
            Ok(x) => worst = worst.max((x + 2.0 * (1.0 - p).ln()).abs()),
            Err(e) => return check("chi-square closed form", false, e.to_string()),
        }
    }
    check(
        "chi-square closed form",
        worst <= 1e-10,
        format!("max error {worst:.2e}"),
    )
}

fn chi_square_round_trip() -> Check {
    let mut worst = 0.0f64;
    for dof in 2..=24 {
        for p in [0.01, 0.5, 0.9, 0.99, 0.999] {
            let err = chi2_inv(p, dof)
                .and_then(|x| chi2_cdf(x, dof))
                .map(|q| (q - p).abs())
                .unwrap_or(f64::INFINITY);
            worst = worst.max(err);
        }
    }
    check(
        "chi-square round trip",
        worst <= 1e-9,
        format!("max error {worst:.2e}"),
    )
}

fn embedding() -> Check {
    let mut rng = trial_rng(7, 0, Purpose::Verification);
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let im = if i == j {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                };
                let z = Complex64::new(rng.random_range(-1.0..1.0), im);
                entries[i * n + j] = z;
                entries[j * n + i] = z.conj();
            }
        }
        let a = HermitianMatrix::new(n, entries).expect("constructed Hermitian");
        let emb = real_embedding(&a);
        let back = complex_projection(&emb).expect("embedding is symmetric");
        worst = worst.max(back.sub(&a).expect("same size").max_abs());
        // Each eigenvalue of `a` appears twice in the embedding.
        let mut re: Vec<f64> = SymmetricEigen::new(emb)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        re.sort_by(|x, y| y.total_cmp(x));
        for (k, lam) in a.eig().eigenvalues.iter().enumerate() {
            worst = worst
                .max((re[2 * k] - lam).abs())
                .max((re[2 * k + 1] - lam).abs());
        }
    }
    check(
        "real embedding",
        worst <= 1e-12,
        format!("max error {worst:.2e}"),
    )
}

fn mrt_optimum() -> Check {
    let cfg = ScenarioConfig {
        n_premium: 1,
        n_basic: 0,
        n_idle: 0,
        n_layers: 1,
        sinr_req: vec![ScenarioConfig::default().sinr_req[0]],
        kappa: 0.0,
        ..ScenarioConfig::default()
    };
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let result = generate_scenario(&cfg, trial).and_then(|real| {
            let h = real
                .with_role(Role::Premium)
                .next()
                .expect("one premium receiver")
                .channel
                .clone();
            solve_sdr(&cfg, &real).map(|(s, _)| (s, h))
        });
        match result {
            Ok((s, h)) => {
                let analytic = cfg.sinr_req[0] * cfg.noise_power / h.norm_sqr();
                worst = worst.max((s.total_power - analytic).abs() / analytic);
            }
            Err(e) => return check("single-receiver optimum", false, e.to_string()),
        }
    }
    check(
        "single-receiver optimum",
        worst <= 1e-6,
        format!("max relative error {worst:.2e}"),
    )
}

fn ordering_chain() -> Check {
    let cfg = ScenarioConfig::default();
    for trial in 0..ORDERING_SEEDS {
        let powers = generate_scenario(&cfg, trial).and_then(|real| {
            let (sdr, _) = solve_sdr(&cfg, &real)?;
            let s1 = extract_scheme1(&cfg, &real, &sdr)?;
            let s2 = extract_scheme2(&cfg, &real, &sdr, cfg.n_rand)?;
            let base = solve_baseline_mrt(&cfg, &real)?;
            Ok([
                sdr.total_power,
                s1.total_power,
                s2.total_power,
                base.total_power,
            ])
        });
        let [sdr, s1, s2, base] = match powers {
            Ok(p) => p,
            Err(e) => return check("ordering chain", false, format!("trial {trial}: {e}")),
        };
        if sdr > s1.min(s2) + 1e-6 || sdr > base + 1e-6 {
            return check(
                "ordering chain",
                false,
                format!("trial {trial}: sdr {sdr:.9} scheme1 {s1:.9} scheme2 {s2:.9} baseline {base:.9}"),
            );
        }
    }
    check("ordering chain", true, format!("{ORDERING_SEEDS} trials"))
}
