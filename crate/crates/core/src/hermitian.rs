//! Complex vectors and Hermitian matrices.
//!
//! Everything downstream (channel outer products, transmit covariances, the
//! safe-constraint matrix) is a small dense Hermitian matrix, so the storage
//! is a plain row-major `Vec<Complex64>`. Eigenpairs come from a cyclic
//! complex Jacobi sweep, which is accurate to a few ulps at the dimensions used
//! here (at most a few dozen).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted when building a [`HermitianMatrix`] from raw
/// entries. The input is symmetrized afterwards.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Default relative tolerance for [`rank_numeric`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// Absolute floor (scaled by `max(1, λ_max)`) below which a negative
/// eigenvalue is treated as an indefinite matrix.
pub const PSD_FLOOR: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// A column vector of complex coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        CVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        CVector(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// The `i`-th canonical basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        CVector(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `self^H other`.
    pub fn inner(&self, other: &CVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, factor: Complex64) -> CVector {
        CVector(self.0.iter().map(|z| z * factor).collect())
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scaled(Complex64::new(1.0 / n, 0.0)))
        } else {
            None
        }
    }

    /// `v v^H`.
    pub fn outer(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.0[i] * self.0[j].conj();
            }
            data[i * n + i].im = 0.0;
        }
        HermitianMatrix { dim: n, data }
    }
}

/// A dense complex Hermitian matrix.
///
/// The Hermitian structure is enforced at construction: raw entries are checked
/// against [`HERMITIAN_TOL`] and then replaced by `(A + A^H) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds from row-major entries.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let m = HermitianMatrix { dim, data };
        let scale = m.max_abs().max(1.0);
        let asym = m.asymmetry();
        if !(asym <= HERMITIAN_TOL * scale) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(m.symmetrized())
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(value, 0.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Builds `f(i, j)` for `i <= j` and mirrors the upper triangle.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(f(i, i).re, 0.0);
            for j in i + 1..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v.conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data
            .chunks(self.dim.max(1))
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// `Re Tr(self · other)`, the real inner product on Hermitian matrices.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        // Tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    fn symmetrized(mut self) -> Self {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let v = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v.conj();
            }
        }
        self
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &HermitianMatrix, factor: f64) -> Result<HermitianMatrix> {
        check_dim(self.dim, other.dim)?;
        Ok(HermitianMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.add_scaled(other, -1.0)
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        check_dim(self.dim, v.dim())?;
        let n = self.dim;
        Ok(CVector::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.data[i * n + j] * v.entries()[j]).sum())
                .collect(),
        ))
    }

    /// Eigendecomposition; see [`eig_hermitian`].
    pub fn eig(&self) -> EigenDecomposition {
        eig_hermitian(self)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        HermitianMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<CVector>,
}

impl EigenDecomposition {
    /// `Σ λ_n u_n u_n^H`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let dim = self.eigenvalues.len();
        let mut acc = HermitianMatrix::zeros(dim);
        for (lambda, u) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            acc = acc
                .add_scaled(&u.outer(), *lambda)
                .expect("eigenvectors share the matrix dimension");
        }
        acc
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
pub fn eig_hermitian(a: &HermitianMatrix) -> EigenDecomposition {
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i * n + j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-16 * total {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].re.total_cmp(&m[i * n + i].re));
    let eigenvalues = order.iter().map(|&i| m[i * n + i].re).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| CVector::new((0..n).map(|r| v[r * n + k]).collect()))
        .collect();
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// One Jacobi rotation annihilating the `(p, q)` entry.
///
/// The unitary is `D G` where `D` removes the phase of `a_pq` and `G` is the
/// real symmetric Jacobi rotation of the resulting real 2x2 block.
fn rotate(m: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    // Skip entries already negligible against both diagonals.
    if r < 1e-300 || (app.abs() + 1e18 * r == app.abs() && aqq.abs() + 1e18 * r == aqq.abs()) {
        m[p * n + q] = Complex64::new(0.0, 0.0);
        m[q * n + p] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] acting on (p, q).
    let u00 = Complex64::new(c, 0.0);
    let u01 = Complex64::new(s, 0.0);
    let u10 = -phase.conj() * s;
    let u11 = phase.conj() * c;

    // Columns: A <- A U.
    for k in 0..n {
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        m[k * n + p] = akp * u00 + akq * u10;
        m[k * n + q] = akp * u01 + akq * u11;
    }
    // Rows: A <- U^H A.
    for k in 0..n {
        let apk = m[p * n + k];
        let aqk = m[q * n + k];
        m[p * n + k] = u00.conj() * apk + u10.conj() * aqk;
        m[q * n + k] = u01.conj() * apk + u11.conj() * aqk;
    }
    m[p * n + q] = Complex64::new(0.0, 0.0);
    m[q * n + p] = Complex64::new(0.0, 0.0);
    m[p * n + p].im = 0.0;
    m[q * n + q].im = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * u00 + vkq * u10;
        v[k * n + q] = vkp * u01 + vkq * u11;
    }
}

/// Largest eigenvalue.
pub fn lambda_max(a: &HermitianMatrix) -> f64 {
    eig_hermitian(a).max()
}

/// Real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_embedding(a: &HermitianMatrix) -> DMatrix<f64> {
    let n = a.dim;
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`real_embedding`] on arbitrary real symmetric input: averages
/// the two copies, so `Y ⪰ 0` implies the result is PSD.
pub fn complex_projection(y: &DMatrix<f64>) -> Result<HermitianMatrix> {
    let two_n = y.nrows();
    if !two_n.is_multiple_of(2) || y.ncols() != two_n {
        return Err(Error::Domain(format!(
            "embedding must be square with even dimension, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    let n = two_n / 2;
    Ok(HermitianMatrix::from_upper_fn(n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        Complex64::new(re, im)
    }))
}

/// Number of eigenvalues above `rel_tol · λ_max`.
pub fn rank_numeric(a: &HermitianMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!(
            "rank tolerance {rel_tol} not in (0, 1)"
        )));
    }
    let eig = eig_hermitian(a);
    let top = eig.max();
    let floor = -PSD_FLOOR * top.abs().max(1.0);
    if eig.min() < floor {
        return Err(Error::Indefinite {
            min_eigenvalue: eig.min(),
        });
    }
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > rel_tol * top)
        .count())
}

/// `h^H W h`.
pub fn quad_form(h: &CVector, w: &HermitianMatrix) -> Result<f64> {
    check_dim(w.dim(), h.dim())?;
    let n = h.dim();
    let x = h.entries();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += w.get(i, j) * x[j];
        }
        acc += x[i].conj() * row;
    }
    Ok(acc.re)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::new(
            (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        HermitianMatrix::from_upper_fn(n, |i, j| {
            if i == j {
                c(rng.random_range(-2.0..2.0), 0.0)
            } else {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }
        })
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(n);
        for _ in 0..rank {
            acc = acc.add(&random_vector(rng, n).outer()).unwrap();
        }
        acc
    }

    /// Power iteration on `A + shift·I`, independent of the Jacobi path.
    fn power_iteration_max(a: &HermitianMatrix) -> f64 {
        let n = a.dim();
        let shift = a.frobenius_norm();
        let shifted = a.add_scaled(&HermitianMatrix::identity(n), shift).unwrap();
        let mut v = CVector::new((0..n).map(|i| c(1.0 + i as f64 * 0.1, 0.3)).collect());
        let mut est = 0.0;
        for _ in 0..20000 {
            let w = shifted.mul_vec(&v).unwrap();
            est = v.inner(&w).unwrap().re / v.norm_sqr();
            v = w.normalized().unwrap();
        }
        est - shift
    }

    #[test]
    fn eig_of_diagonal_matrix_is_sorted() {
        let e = eig_hermitian(&HermitianMatrix::diag(&[1.0, 3.0, 2.0]));
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn eig_of_two_by_two_closed_form() {
        let a = HermitianMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let e = eig_hermitian(&a);
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 8, 12] {
            for _ in 0..10 {
                let a = random_hermitian(&mut rng, n);
                let e = eig_hermitian(&a);
                let err = e.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
                assert!(err < 1e-9, "n={n} err={err}");
                for i in 0..n {
                    for j in 0..n {
                        let g = e.eigenvectors[i].inner(&e.eigenvectors[j]).unwrap();
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((g - c(target, 0.0)).norm() < 1e-9);
                    }
                }
                assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let err = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn lambda_max_examples() {
        assert_eq!(lambda_max(&HermitianMatrix::zeros(3)), 0.0);
        assert_eq!(lambda_max(&HermitianMatrix::diag(&[-1.0, -5.0])), -1.0);
    }

    #[test]
    fn lambda_max_matches_power_iteration_on_safe_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let w1 = random_psd(&mut rng, 4, 2);
            let w2 = random_psd(&mut rng, 4, 1);
            let we = random_psd(&mut rng, 4, 4);
            let q = w1.add_scaled(&w2.add(&we).unwrap(), -0.1).unwrap();
            let expected = power_iteration_max(&q);
            assert!((lambda_max(&q) - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn real_embedding_examples() {
        let id = real_embedding(&HermitianMatrix::identity(2));
        assert_eq!(id, DMatrix::identity(4, 4));

        let a = HermitianMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(1.0, 0.0)],
        ])
        .unwrap();
        let emb = real_embedding(&a);
        let mut ev: Vec<f64> = emb.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        for (got, want) in ev.iter().zip([2.0, 2.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_projection_inverts_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 5);
        let back = complex_projection(&real_embedding(&a)).unwrap();
        assert!(back.sub(&a).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_vector(&mut rng, 4);
        assert_eq!(rank_numeric(&w.outer(), 1e-6).unwrap(), 1);
        assert_eq!(rank_numeric(&HermitianMatrix::zeros(4), 1e-6).unwrap(), 0);
        assert_eq!(rank_numeric(&random_psd(&mut rng, 5, 3), 1e-6).unwrap(), 3);
        assert!(matches!(
            rank_numeric(&HermitianMatrix::diag(&[1.0, -0.5]), 1e-6),
            Err(Error::Indefinite { .. })
        ));
        assert!(rank_numeric(&HermitianMatrix::zeros(2), 1.5).is_err());
    }

    #[test]
    fn quad_form_examples() {
        let e1 = CVector::basis(2, 0);
        assert_eq!(
            quad_form(&e1, &HermitianMatrix::diag(&[4.0, 0.0])).unwrap(),
            4.0
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_vector(&mut rng, 6);
        assert_eq!(quad_form(&h, &HermitianMatrix::zeros(6)).unwrap(), 0.0);
        let w = random_vector(&mut rng, 6);
        let direct = h.inner(&w).unwrap().norm_sqr();
        assert!((quad_form(&h, &w.outer()).unwrap() - direct).abs() < 1e-12 * direct.max(1.0));
        assert!(matches!(
            quad_form(&CVector::zeros(3), &HermitianMatrix::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian_strategy(n: usize) -> impl Strategy<Value = HermitianMatrix> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                HermitianMatrix::from_upper_fn(n, |i, j| {
                    let (re, im) = v[i * n + j];
                    c(re, if i == j { 0.0 } else { im })
                })
            })
        }

        fn psd_strategy(n: usize) -> impl Strategy<Value = HermitianMatrix> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                let mut acc = HermitianMatrix::zeros(n);
                for k in 0..n {
                    let col =
                        CVector::new((0..n).map(|i| c(v[k * n + i].0, v[k * n + i].1)).collect());
                    acc = acc.add(&col.outer()).unwrap();
                }
                acc
            })
        }

        proptest! {
            #[test]
            fn quad_form_of_psd_is_nonnegative(w in psd_strategy(4), h in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 4)) {
                let h = CVector::new(h.into_iter().map(|(a, b)| c(a, b)).collect());
                prop_assert!(quad_form(&h, &w).unwrap() >= -1e-10);
            }

            #[test]
            fn reconstruction_is_idempotent(a in hermitian_strategy(5)) {
                let once = eig_hermitian(&a).reconstruct();
                let twice = eig_hermitian(&once).reconstruct();
                let scale = a.frobenius_norm().max(1e-300);
                prop_assert!(twice.sub(&once).unwrap().frobenius_norm() / scale < 1e-9);
            }

            #[test]
            fn lambda_max_shifts_with_identity(a in hermitian_strategy(4), shift in -5.0f64..5.0) {
                let shifted = a.add_scaled(&HermitianMatrix::identity(4), shift).unwrap();
                prop_assert!((lambda_max(&shifted) - lambda_max(&a) - shift).abs() < 1e-9);
            }

            #[test]
            fn embedding_doubles_trace_and_keeps_psd_sign(a in hermitian_strategy(4)) {
                let emb = real_embedding(&a);
                prop_assert!((emb.trace() - 2.0 * a.trace()).abs() < 1e-12);
                let min_emb = emb.symmetric_eigenvalues().min();
                let min_a = eig_hermitian(&a).min();
                prop_assert!((min_emb - min_a).abs() < 1e-9);
                prop_assert_eq!(min_emb >= -1e-12, min_a >= -1e-12);
            }
        }
    }
}
