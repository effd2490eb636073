//! Safe deterministic replacement of the eavesdropper chance constraint.
//!
//! With i.i.d. Rayleigh eavesdropper channels, `Tr(G̃)` is chi-square with
//! `2·N_T` degrees of freedom (real and imaginary parts of each entry have unit
//! variance). Bounding `Tr(G̃ Q) ≤ Tr(G̃)·λ_max(Q)` turns the per-eavesdropper
//! outage requirement into
//!
//! ```text
//! λ_max(Q) ≤ Γ_tol · σ̃² / F⁻¹_{χ²(2N_T)}(κ^{1/J}),   Q = W_1 − Γ_tol (Σ_{t≥2} W_t + W_E)
//! ```
//!
//! which is convex in the covariances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{lambda_max, HermitianMatrix};

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 1000;
const QUANTILE_TOL: f64 = 1e-13;

/// Parameters of the eavesdropper outage constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChanceSpec {
    /// Required probability that every eavesdropper stays below `sinr_tol`.
    pub kappa: f64,
    /// Number of eavesdroppers the design must withstand.
    pub n_eavesdroppers: usize,
    /// Maximum tolerated layer-1 SINR at an eavesdropper (linear).
    pub sinr_tol: f64,
    /// Normalized eavesdropper noise power.
    pub eav_noise: f64,
    pub n_antennas: usize,
}

impl ChanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::Domain(format!(
                "kappa = {} not in (0, 1)",
                self.kappa
            )));
        }
        if self.n_eavesdroppers == 0 || self.n_antennas == 0 {
            return Err(Error::Domain(
                "eavesdropper and antenna counts must be positive".into(),
            ));
        }
        if !(self.sinr_tol > 0.0) || !(self.eav_noise > 0.0) {
            return Err(Error::Domain(
                "SINR tolerance and eavesdropper noise must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `κ^{1/J}`, the per-eavesdropper success probability.
    pub fn per_eavesdropper_level(&self) -> f64 {
        self.kappa.powf(1.0 / self.n_eavesdroppers as f64)
    }

    pub fn dof(&self) -> usize {
        2 * self.n_antennas
    }
}

/// Outcome of [`check_safe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeCheck {
    pub satisfied: bool,
    /// `threshold − λ_max(Q)` in watts; nonnegative iff satisfied.
    pub margin: f64,
}

/// `ln Γ(a)` for `a` a positive multiple of one half, by the recurrence
/// `Γ(a + 1) = a Γ(a)` from `Γ(1) = 1` or `Γ(1/2) = √π`.
fn ln_gamma_half_integer(a: f64) -> f64 {
    let (mut acc, mut base) = if (a - a.round()).abs() < 1e-12 {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    while base < a - 0.25 {
        acc += base.ln();
        base += 1.0;
    }
    acc
}

/// Regularized lower incomplete gamma `P(a, x)` for half-integer `a`.
///
/// Series expansion below `x < a + 1`, Lentz continued fraction for `Q(a, x)`
/// above.
fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma_half_integer(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        (sum * log_prefactor.exp()).min(1.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        (1.0 - log_prefactor.exp() * h).max(0.0)
    }
}

/// CDF of the central chi-square distribution with `dof` degrees of freedom.
pub fn chi2_cdf(x: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Domain(
            "chi-square needs at least one degree of freedom".into(),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "chi-square CDF undefined at x = {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_p(dof as f64 / 2.0, x / 2.0))
}

/// Quantile of the chi-square distribution, by bisection on [`chi2_cdf`].
pub fn chi2_inv(p: f64, dof: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "chi-square quantile needs p in (0, 1), got {p}"
        )));
    }
    if dof == 0 {
        return Err(Error::Domain(
            "chi-square needs at least one degree of freedom".into(),
        ));
    }
    let k = dof as f64;
    let mut lo = 0.0;
    let mut hi = k + 40.0 * k.sqrt();
    // Extreme upper quantiles can sit outside the nominal bracket.
    while chi2_cdf(hi, dof)? < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(mid, dof)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= QUANTILE_TOL * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper bound on `λ_max(Q)` that guarantees the outage probability.
pub fn safe_threshold(spec: &ChanceSpec) -> Result<f64> {
    spec.validate()?;
    let quantile = chi2_inv(spec.per_eavesdropper_level(), spec.dof())?;
    Ok(spec.sinr_tol * spec.eav_noise / quantile)
}

/// `Q = W_1 − Γ_tol (W_2 + … + W_L + W_E)`.
pub fn q_matrix(
    layers: &[HermitianMatrix],
    energy: &HermitianMatrix,
    sinr_tol: f64,
) -> Result<HermitianMatrix> {
    let first = layers
        .first()
        .ok_or_else(|| Error::Domain("at least one information layer is required".into()))?;
    let mut jam = energy.clone();
    for w in &layers[1..] {
        jam = jam.add(w)?;
    }
    first.add_scaled(&jam, -sinr_tol)
}

/// Tests `λ_max(Q) ≤ threshold`; equality counts as satisfied.
pub fn check_safe(q: &HermitianMatrix, spec: &ChanceSpec) -> Result<SafeCheck> {
    let threshold = safe_threshold(spec)?;
    let margin = threshold - lambda_max(q);
    Ok(SafeCheck {
        satisfied: margin >= 0.0,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::CVector;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn spec(kappa: f64, j: usize, n_t: usize) -> ChanceSpec {
        ChanceSpec {
            kappa,
            n_eavesdroppers: j,
            sinr_tol: 0.1,
            eav_noise: 1.0,
            n_antennas: n_t,
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(chi2_cdf(0.0, 3).unwrap(), 0.0);
        assert!((chi2_cdf(5.9915, 2).unwrap() - (1.0 - (-5.9915f64 / 2.0).exp())).abs() < 1e-15);
        assert!((chi2_cdf(5.9915, 2).unwrap() - 0.95).abs() < 1e-5);
        assert!((chi2_cdf(13.2767, 4).unwrap() - 0.99).abs() < 1e-4);
        assert!(chi2_cdf(-1.0, 2).is_err());
        assert!(chi2_cdf(1.0, 0).is_err());
    }

    #[test]
    fn cdf_matches_independent_library() {
        for dof in 1..=30 {
            let reference = ChiSquared::new(dof as f64).unwrap();
            for &x in &[0.01, 0.5, 1.0, 3.0, 7.5, 12.0, 20.0, 35.0, 60.0] {
                let ours = chi2_cdf(x, dof).unwrap();
                let theirs = reference.cdf(x);
                assert!(
                    (ours - theirs).abs() < 1e-12,
                    "dof={dof} x={x}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn quantile_closed_form_two_dof() {
        for &p in &[0.5, 0.9, 0.95, 0.99, 0.9974906] {
            let exact = -2.0 * (1.0f64 - p).ln();
            assert!((chi2_inv(p, 2).unwrap() - exact).abs() < 1e-10, "p={p}");
        }
        assert!((chi2_inv(0.95, 2).unwrap() - 5.991465).abs() < 1e-6);
        assert!((chi2_inv(0.99f64.powf(0.25), 2).unwrap() - 11.975).abs() < 1e-3);
    }

    #[test]
    fn quantile_round_trip_and_monotone() {
        let grid = [
            1e-6,
            0.01,
            0.1,
            0.3,
            0.5,
            0.7,
            0.9,
            0.99,
            0.999,
            0.9999,
            1.0 - 1e-9,
        ];
        for dof in 1..=24 {
            let mut prev = 0.0;
            for &p in &grid {
                let x = chi2_inv(p, dof).unwrap();
                assert!(
                    (chi2_cdf(x, dof).unwrap() - p).abs() <= 1e-9,
                    "dof={dof} p={p}"
                );
                assert!(x > prev);
                prev = x;
            }
        }
        for dof in 1..24 {
            assert!(chi2_inv(0.9, dof + 1).unwrap() > chi2_inv(0.9, dof).unwrap());
        }
        assert!(chi2_inv(0.0, 2).is_err());
        assert!(chi2_inv(1.0, 2).is_err());
    }

    #[test]
    fn threshold_examples() {
        let t = safe_threshold(&spec(0.99, 4, 1)).unwrap();
        let closed = 0.1 / (-2.0 * (1.0 - 0.99f64.powf(0.25)).ln());
        assert!((t - closed).abs() < 1e-12);
        assert!((t - 8.351e-3).abs() < 1e-6);
        assert!(
            safe_threshold(&spec(0.99, 4, 6)).unwrap() < safe_threshold(&spec(0.5, 4, 6)).unwrap()
        );
        assert!(
            safe_threshold(&spec(0.99, 8, 6)).unwrap() < safe_threshold(&spec(0.99, 4, 6)).unwrap()
        );
        assert!(safe_threshold(&spec(1.0, 4, 6)).is_err());
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(n);
        for _ in 0..n {
            let v = CVector::new(
                (0..n)
                    .map(|_| {
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    })
                    .collect(),
            );
            acc = acc.add(&v.outer()).unwrap();
        }
        acc
    }

    #[test]
    fn q_matrix_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 3;
        let w2 = random_psd(&mut rng, n);
        let we = random_psd(&mut rng, n);
        let q = q_matrix(&[HermitianMatrix::zeros(n), w2.clone()], &we, 0.1).unwrap();
        assert!(lambda_max(&q) <= 1e-12);

        let w1 = random_psd(&mut rng, n);
        let q = q_matrix(std::slice::from_ref(&w1), &HermitianMatrix::zeros(n), 0.1).unwrap();
        assert_eq!(q, w1);

        let w3 = random_psd(&mut rng, n);
        let layers = vec![w1.clone(), w2.clone(), w3.clone()];
        let q = q_matrix(&layers, &we, 0.1).unwrap();
        let rebuilt = q
            .add_scaled(&w2.add(&w3).unwrap().add(&we).unwrap(), 0.1)
            .unwrap();
        assert!(rebuilt.sub(&w1).unwrap().max_abs() < 1e-12);

        assert!(q_matrix(&[w1], &HermitianMatrix::zeros(2), 0.1).is_err());
    }

    #[test]
    fn check_safe_boundary_cases() {
        let s = spec(0.99, 4, 2);
        let t = safe_threshold(&s).unwrap();
        let zero = check_safe(&HermitianMatrix::zeros(2), &s).unwrap();
        assert!(zero.satisfied);
        assert!((zero.margin - t).abs() < 1e-15);

        let over = check_safe(&HermitianMatrix::scaled_identity(2, 2.0 * t), &s).unwrap();
        assert!(!over.satisfied);
        assert!((over.margin + t).abs() < 1e-15);

        let exact = check_safe(&HermitianMatrix::scaled_identity(2, t), &s).unwrap();
        assert!(exact.satisfied);
        assert_eq!(exact.margin, 0.0);
    }

    proptest::proptest! {
        #[test]
        fn quantile_inverts_cdf(p in 1e-6f64..0.999999, dof in 1usize..40) {
            let x = chi2_inv(p, dof).unwrap();
            proptest::prop_assert!((chi2_cdf(x, dof).unwrap() - p).abs() <= 1e-9);
        }

        #[test]
        fn cdf_is_monotone(a in 0.0f64..80.0, b in 0.0f64..80.0, dof in 1usize..40) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(chi2_cdf(lo, dof).unwrap() <= chi2_cdf(hi, dof).unwrap());
        }

        #[test]
        fn threshold_tightens_with_kappa(k1 in 0.05f64..0.99, k2 in 0.05f64..0.99, j in 1usize..8, n_t in 1usize..12) {
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            proptest::prop_assert!(
                safe_threshold(&spec(hi, j, n_t)).unwrap() <= safe_threshold(&spec(lo, j, n_t)).unwrap()
            );
        }
    }
}
