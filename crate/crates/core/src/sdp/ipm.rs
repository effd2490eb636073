//! Primal-dual interior-point method with Nesterov-Todd scaling.
//!
//! The complex problem is rewritten in standard real form
//!
//! ```text
//! minimize  <c, x>   subject to  A x = b,  x ∈ R₊ⁿ × S₊^{2n₁} × ... ,
//! ```
//!
//! where every Hermitian block `X` becomes an unstructured real symmetric
//! block `Y` of twice the size with `X = P(Y)` (the average of the two copies
//! in the real embedding). Coefficients become `emb(C)/2`, so `<emb(C)/2, Y>`
//! equals `Re Tr(C P(Y))` and the relaxation is exact: any feasible `Y` maps
//! to a feasible `X` with the same objective, and vice versa through `emb`.
//! Inequalities receive a nonnegative slack and scalars live in the
//! nonnegative orthant.
//!
//! The iteration is Mehrotra's predictor-corrector on the infeasible central
//! path, solving the Newton system through the Schur complement
//! `M = A W^T W A^T`.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{residuals, Relation, Residuals, SdpProblem, SdpSolution, SolveStatus};
use crate::error::Result;
use crate::hermitian::{complex_projection, real_embedding, HermitianMatrix};

const REFINE_STEPS: usize = 3;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Relative gap and relative infeasibility required for `Optimal`.
    pub tol: f64,
    /// Looser bound accepted when progress stalls before `tol` is met.
    pub accept_tol: f64,
    pub step_fraction: f64,
    /// Ratio below which a diverging iterate is taken as an infeasibility
    /// certificate.
    pub infeas_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200,
            tol: 1e-9,
            accept_tol: 1e-7,
            step_fraction: 0.99,
            infeas_tol: 1e-8,
        }
    }
}

pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let form = match StdForm::build(problem) {
        Ok(f) => f,
        Err(row) => return Ok(trivially_infeasible(problem, row)),
    };
    let run = form.iterate(opts);
    Ok(form.extract(problem, run, opts))
}

#[derive(Clone, Debug)]
enum Coef {
    /// Full list of `(row, col, value)`, both triangles present.
    Sparse(Vec<(usize, usize, f64)>),
    Dense(DMatrix<f64>),
}

impl Coef {
    fn from_dense(m: DMatrix<f64>) -> Coef {
        let n = m.nrows();
        let nnz = m.iter().filter(|v| **v != 0.0).count();
        if nnz * 4 <= n * n {
            let mut entries = Vec::with_capacity(nnz);
            for c in 0..n {
                for r in 0..n {
                    let v = m[(r, c)];
                    if v != 0.0 {
                        entries.push((r, c, v));
                    }
                }
            }
            Coef::Sparse(entries)
        } else {
            Coef::Dense(m)
        }
    }

    fn dot(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            Coef::Sparse(e) => e.iter().map(|&(r, c, v)| v * x[(r, c)]).sum(),
            Coef::Dense(m) => m.dot(x),
        }
    }

    fn add_to(&self, factor: f64, target: &mut DMatrix<f64>) {
        match self {
            Coef::Sparse(e) => {
                for &(r, c, v) in e {
                    target[(r, c)] += factor * v;
                }
            }
            Coef::Dense(m) => *target += m * factor,
        }
    }

    fn norm_sqr(&self) -> f64 {
        match self {
            Coef::Sparse(e) => e.iter().map(|t| t.2 * t.2).sum(),
            Coef::Dense(m) => m.norm_squared(),
        }
    }

    fn scale(&mut self, factor: f64) {
        match self {
            Coef::Sparse(e) => e.iter_mut().for_each(|t| t.2 *= factor),
            Coef::Dense(m) => *m *= factor,
        }
    }

    /// `W C W` for symmetric `W`.
    fn congruence(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Coef::Sparse(e) => {
                let n = w.nrows();
                let mut g = DMatrix::zeros(n, n);
                for &(r, c, v) in e {
                    g.ger(v, &w.column(r), &w.column(c), 1.0);
                }
                g
            }
            Coef::Dense(m) => w * m * w,
        }
    }
}

#[derive(Clone, Debug)]
struct Point {
    lp: DVector<f64>,
    blocks: Vec<DMatrix<f64>>,
}

impl Point {
    fn zeros(n_lp: usize, dims: &[usize]) -> Point {
        Point {
            lp: DVector::zeros(n_lp),
            blocks: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        }
    }

    fn dot(&self, other: &Point) -> f64 {
        self.lp.dot(&other.lp)
            + self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.dot(b))
                .sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, other: &Point) {
        self.lp.axpy(a, &other.lp, 1.0);
        for (s, o) in self.blocks.iter_mut().zip(&other.blocks) {
            *s += o * a;
            symmetrize(s);
        }
    }

    fn sub(&self, other: &Point) -> Point {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

struct StdForm {
    m: usize,
    n_lp: usize,
    dims: Vec<usize>,
    /// Rows touching each LP coordinate.
    lp_cols: Vec<Vec<(usize, f64)>>,
    /// Rows touching each PSD block.
    block_rows: Vec<Vec<(usize, Coef)>>,
    b: DVector<f64>,
    c: Point,
    row_scale: Vec<f64>,
    row_of: Vec<Option<usize>>,
}

/// Index of a constraint that has no terms and a nonzero right-hand side.
type ZeroRow = usize;

impl StdForm {
    fn build(p: &SdpProblem) -> std::result::Result<StdForm, ZeroRow> {
        let n_scalars = p.scalars.len();
        let n_slack = p
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let n_lp = n_scalars + n_slack;
        let dims: Vec<usize> = p.blocks.iter().map(|b| 2 * b.dim).collect();

        let mut lp_cols = vec![Vec::new(); n_lp];
        let mut block_rows: Vec<Vec<(usize, Coef)>> = vec![Vec::new(); dims.len()];
        let mut b = Vec::new();
        let mut row_scale = Vec::new();
        let mut row_of = Vec::with_capacity(p.constraints.len());
        let mut next_slack = n_scalars;

        for (k, con) in p.constraints.iter().enumerate() {
            let mut lp: BTreeMap<usize, f64> = BTreeMap::new();
            for (id, a) in &con.expr.scalars {
                *lp.entry(id.0).or_insert(0.0) += a;
            }
            match con.relation {
                Relation::Ge => {
                    lp.insert(next_slack, -1.0);
                    next_slack += 1;
                }
                Relation::Le => {
                    lp.insert(next_slack, 1.0);
                    next_slack += 1;
                }
                Relation::Eq => {}
            }
            let mut blocks: BTreeMap<usize, HermitianMatrix> = BTreeMap::new();
            for (id, c) in &con.expr.blocks {
                let acc = blocks
                    .entry(id.0)
                    .or_insert_with(|| HermitianMatrix::zeros(c.dim()));
                *acc = acc.add(c).expect("validated dimensions");
            }
            let mut coefs: Vec<(usize, Coef)> = blocks
                .into_iter()
                .map(|(id, c)| (id, Coef::from_dense(real_embedding(&c) * 0.5)))
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .collect();
            lp.retain(|_, v| *v != 0.0);

            let norm_sqr: f64 = lp.values().map(|v| v * v).sum::<f64>()
                + coefs.iter().map(|c| c.1.norm_sqr()).sum::<f64>();
            if norm_sqr == 0.0 {
                if con.rhs.abs() > 1e-12 {
                    return Err(k);
                }
                row_of.push(None);
                continue;
            }
            let s = 1.0 / norm_sqr.sqrt();
            let row = b.len();
            for (idx, v) in lp {
                lp_cols[idx].push((row, v * s));
            }
            for (id, mut c) in coefs.drain(..) {
                c.scale(s);
                block_rows[id].push((row, c));
            }
            b.push(con.rhs * s);
            row_scale.push(s);
            row_of.push(Some(row));
        }

        let mut c = Point::zeros(n_lp, &dims);
        for (id, a) in &p.objective.scalars {
            c.lp[id.0] += a;
        }
        for (id, coef) in &p.objective.blocks {
            c.blocks[id.0] += real_embedding(coef) * 0.5;
        }

        Ok(StdForm {
            m: b.len(),
            n_lp,
            dims,
            lp_cols,
            block_rows,
            b: DVector::from_vec(b),
            c,
            row_scale,
            row_of,
        })
    }

    fn a_op(&self, x: &Point) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (l, col) in self.lp_cols.iter().enumerate() {
            for &(i, v) in col {
                out[i] += v * x.lp[l];
            }
        }
        for (bk, rows) in self.block_rows.iter().enumerate() {
            for (i, coef) in rows {
                out[*i] += coef.dot(&x.blocks[bk]);
            }
        }
        out
    }

    fn at_op(&self, y: &DVector<f64>) -> Point {
        let mut out = Point::zeros(self.n_lp, &self.dims);
        for (l, col) in self.lp_cols.iter().enumerate() {
            out.lp[l] = col.iter().map(|&(i, v)| v * y[i]).sum();
        }
        for (bk, rows) in self.block_rows.iter().enumerate() {
            for (i, coef) in rows {
                coef.add_to(y[*i], &mut out.blocks[bk]);
            }
        }
        out
    }

    fn degree(&self) -> f64 {
        (self.n_lp + self.dims.iter().sum::<usize>()) as f64
    }

    fn starting_point(&self) -> (Point, Point) {
        let mut x = Point::zeros(self.n_lp, &self.dims);
        let mut z = Point::zeros(self.n_lp, &self.dims);
        let c_norm = |bk: usize| self.c.blocks[bk].norm();
        for l in 0..self.n_lp {
            let (xi, zeta) = start_levels(
                1,
                self.lp_cols[l].iter().map(|&(i, v)| (i, v.abs())),
                &self.b,
                self.c.lp[l].abs(),
            );
            x.lp[l] = xi;
            z.lp[l] = zeta;
        }
        for (bk, &n) in self.dims.iter().enumerate() {
            let rows = self.block_rows[bk]
                .iter()
                .map(|(i, c)| (*i, c.norm_sqr().sqrt()));
            let (xi, zeta) = start_levels(n, rows, &self.b, c_norm(bk));
            x.blocks[bk] = DMatrix::identity(n, n) * xi;
            z.blocks[bk] = DMatrix::identity(n, n) * zeta;
        }
        (x, z)
    }

    fn iterate(&self, opts: &SolverOptions) -> Run {
        let (mut x, mut z) = self.starting_point();
        let mut y = DVector::zeros(self.m);
        let nu = self.degree();
        let b_norm = self.b.norm();
        let c_norm = self.c.norm();
        let mut small_steps = 0;
        let mut outcome = Outcome::MaxIter;
        let mut iterations = 0;
        let mut best = None;
        let gram = self.gram();

        for iter in 0..opts.max_iter {
            iterations = iter;
            let rp = &self.b - self.a_op(&x);
            let aty = self.at_op(&y);
            let rd = self.c.sub(&aty).sub(&z);
            let pobj = self.c.dot(&x);
            let dobj = self.b.dot(&y);
            let mu = x.dot(&z) / nu;
            let m = Metrics {
                pinf: rp.norm() / (1.0 + b_norm),
                dinf: rd.norm() / (1.0 + c_norm),
                relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            };
            log::trace!(
                "ipm {iter:3}: pobj {pobj:+.9e} dobj {dobj:+.9e} pinf {:.2e} dinf {:.2e} gap {:.2e} mu {mu:.2e}",
                m.pinf,
                m.dinf,
                m.relgap
            );
            if m.worst() <= opts.tol {
                outcome = Outcome::Converged;
                break;
            }
            if best
                .as_ref()
                .is_none_or(|b: &(f64, Point, DVector<f64>, Point)| m.worst() < b.0)
            {
                best = Some((m.worst(), x.clone(), y.clone(), z.clone()));
            }
            if dobj > 0.0 {
                let mut ray = aty.clone();
                ray.axpy(1.0, &z);
                if ray.norm() / dobj < opts.infeas_tol {
                    outcome = Outcome::PrimalInfeasible;
                    break;
                }
            }
            if pobj < 0.0 && self.a_op(&x).norm() / (-pobj) < opts.infeas_tol {
                outcome = Outcome::DualInfeasible;
                break;
            }

            let Some(sc) = Scaling::new(&x, &z) else {
                outcome = Outcome::Stalled;
                break;
            };
            let Some(chol) = self.factor_schur(&sc) else {
                outcome = Outcome::Stalled;
                break;
            };
            let wwrd = sc.apply_wtw(&rd);

            let affine_rhs = sc.neg_lambda();
            let aff = self.newton(&sc, &chol, gram.as_ref(), &rp, &rd, &wwrd, &affine_rhs);
            let ap = sc.max_step(&aff.dxt);
            let ad = sc.max_step(&aff.dzt);
            let (ap_a, ad_a) = (ap.min(1.0), ad.min(1.0));
            let mut xa = x.clone();
            xa.axpy(ap_a, &aff.dx);
            let mut za = z.clone();
            za.axpy(ad_a, &aff.dz);
            let mu_aff = xa.dot(&za) / nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let corr_rhs = sc.corrector_rhs(sigma * mu, &aff);
            let dir = self.newton(&sc, &chol, gram.as_ref(), &rp, &rd, &wwrd, &corr_rhs);
            let ap = (opts.step_fraction * sc.max_step(&dir.dxt)).min(1.0);
            let ad = (opts.step_fraction * sc.max_step(&dir.dzt)).min(1.0);
            x.axpy(ap, &dir.dx);
            z.axpy(ad, &dir.dz);
            y.axpy(ad, &dir.dy, 1.0);

            if ap.max(ad) < 1e-8 {
                small_steps += 1;
                if small_steps >= 3 {
                    outcome = Outcome::Stalled;
                    break;
                }
            } else {
                small_steps = 0;
            }
        }

        if matches!(outcome, Outcome::Stalled | Outcome::MaxIter) {
            if let Some((_, bx, by, bz)) = best {
                (x, y, z) = (bx, by, bz);
            }
        }
        let rp = &self.b - self.a_op(&x);
        let rd = self.c.sub(&self.at_op(&y)).sub(&z);
        let pobj = self.c.dot(&x);
        let dobj = self.b.dot(&y);
        let metrics = Metrics {
            pinf: rp.norm() / (1.0 + b_norm),
            dinf: rd.norm() / (1.0 + c_norm),
            relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        Run {
            x,
            y,
            z,
            outcome,
            iterations: iterations + 1,
            metrics,
            pobj,
            dobj,
        }
    }

    fn factor_schur(&self, sc: &Scaling) -> Option<Cholesky<f64, nalgebra::Dyn>> {
        let m = self.m;
        let mut schur = DMatrix::zeros(m, m);
        for (l, col) in self.lp_cols.iter().enumerate() {
            let d = sc.lp_d[l];
            for &(i, a) in col {
                for &(j, b) in col {
                    schur[(i, j)] += a * b * d;
                }
            }
        }
        for (bk, rows) in self.block_rows.iter().enumerate() {
            let w = &sc.blocks[bk].wnt;
            for (j, cj) in rows {
                let g = cj.congruence(w);
                for (i, ci) in rows {
                    if i <= j {
                        schur[(*i, *j)] += ci.dot(&g);
                    }
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                schur[(j, i)] = schur[(i, j)];
            }
        }
        if m == 0 {
            return Cholesky::new(schur);
        }
        let scale = (0..m)
            .map(|i| schur[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        if let Some(c) = Cholesky::new(schur.clone()) {
            return Some(c);
        }
        for reg in [1e-14, 1e-12, 1e-10] {
            let mut s = schur.clone();
            for i in 0..m {
                s[(i, i)] += reg * scale;
            }
            if let Some(c) = Cholesky::new(s) {
                return Some(c);
            }
        }
        None
    }

    /// Solves the Newton system for scaled complementarity right-hand side `ds`.
    fn newton(
        &self,
        sc: &Scaling,
        chol: &Cholesky<f64, nalgebra::Dyn>,
        gram: Option<&Cholesky<f64, nalgebra::Dyn>>,
        rp: &DVector<f64>,
        rd: &Point,
        wwrd: &Point,
        ds: &Point,
    ) -> Direction {
        let wtds = sc.apply_wt(ds);
        let rhs = rp - self.a_op(&wtds) + self.a_op(wwrd);
        let mut dy = if self.m == 0 { rhs } else { chol.solve(&rhs) };
        let mut dir = self.recover(sc, rd, ds, dy.clone());
        // The Schur matrix loses accuracy as the scaling degenerates near a
        // low-rank optimum; refine against the exact operators instead.
        let mut res_norm = (rp - self.a_op(&dir.dx)).norm();
        for _ in 0..REFINE_STEPS {
            if self.m == 0 || res_norm <= 1e-15 * (1.0 + rp.norm()) {
                break;
            }
            let res = rp - self.a_op(&dir.dx);
            dy += chol.solve(&res);
            let next = self.recover(sc, rd, ds, dy.clone());
            let next_norm = (rp - self.a_op(&next.dx)).norm();
            if next_norm >= res_norm {
                break;
            }
            dir = next;
            res_norm = next_norm;
        }
        if let Some(gram) = gram {
            if res_norm > 1e-15 * (1.0 + rp.norm()) {
                self.project_primal(sc, gram, rp, &mut dir);
            }
        }
        dir
    }

    /// Moves `Δx` onto `A Δx = r_p` along the row space of `A`. Near a
    /// degenerate optimum the scaled system cannot deliver this to working
    /// precision, and the lost primal feasibility otherwise stalls the gap.
    fn project_primal(
        &self,
        sc: &Scaling,
        gram: &Cholesky<f64, nalgebra::Dyn>,
        rp: &DVector<f64>,
        dir: &mut Direction,
    ) {
        let res = rp - self.a_op(&dir.dx);
        let mut dx = dir.dx.clone();
        dx.axpy(1.0, &self.at_op(&gram.solve(&res)));
        if (rp - self.a_op(&dx)).norm() >= res.norm() {
            return;
        }
        if let Some(dxt) = sc.unapply_wt(&dx) {
            dir.dx = dx;
            dir.dxt = dxt;
        }
    }

    /// Cholesky factor of `A A^T`, or `None` when the rows are dependent.
    fn gram(&self) -> Option<Cholesky<f64, nalgebra::Dyn>> {
        if self.m == 0 {
            return None;
        }
        let mut g = DMatrix::zeros(self.m, self.m);
        let mut e = DVector::zeros(self.m);
        for i in 0..self.m {
            e[i] = 1.0;
            let col = self.a_op(&self.at_op(&e));
            g.set_column(i, &col);
            e[i] = 0.0;
        }
        symmetrize(&mut g);
        let scale = g.diagonal().max();
        let chol = Cholesky::new(g.clone())?;
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, &d| a.min(d * d));
        (min_pivot > 1e-12 * scale).then_some(chol)
    }

    /// `Δz`, `Δx` and their scaled forms from `Δy`.
    fn recover(&self, sc: &Scaling, rd: &Point, ds: &Point, dy: DVector<f64>) -> Direction {
        let dz = rd.sub(&self.at_op(&dy));
        let dzt = sc.apply_w(&dz);
        let dxt = ds.sub(&dzt);
        let dx = sc.apply_wt(&dxt);
        Direction {
            dx,
            dy,
            dz,
            dxt,
            dzt,
        }
    }

    fn extract(&self, problem: &SdpProblem, run: Run, opts: &SolverOptions) -> SdpSolution {
        let n_scalars = problem.scalars.len();
        let y_problem = |y: &DVector<f64>| -> Vec<f64> {
            self.row_of
                .iter()
                .map(|r| r.map_or(0.0, |i| y[i] * self.row_scale[i]))
                .collect()
        };
        let complex_blocks = |p: &Point, factor: f64| -> Vec<HermitianMatrix> {
            p.blocks
                .iter()
                .map(|b| {
                    complex_projection(b)
                        .expect("embedded blocks have even size")
                        .scale(factor)
                })
                .collect()
        };

        let (status, message) = match run.outcome {
            Outcome::Converged => (SolveStatus::Optimal, "converged".to_string()),
            Outcome::PrimalInfeasible => (SolveStatus::Infeasible, "primal infeasible".to_string()),
            Outcome::DualInfeasible => (SolveStatus::Unbounded, "dual infeasible".to_string()),
            Outcome::Stalled | Outcome::MaxIter => {
                let reason = if run.outcome == Outcome::Stalled {
                    "stalled"
                } else {
                    "iteration limit"
                };
                if run.metrics.worst() <= opts.accept_tol {
                    (
                        SolveStatus::Optimal,
                        format!("{reason}; accepted at {:.1e}", run.metrics.worst()),
                    )
                } else {
                    (
                        SolveStatus::NumericalFailure,
                        format!(
                            "{reason}: pinf {:.2e} dinf {:.2e} gap {:.2e}",
                            run.metrics.pinf, run.metrics.dinf, run.metrics.relgap
                        ),
                    )
                }
            }
        };

        let mut sol = SdpSolution {
            status,
            blocks: Vec::new(),
            scalars: Vec::new(),
            constraint_duals: Vec::new(),
            block_duals: Vec::new(),
            scalar_duals: Vec::new(),
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
            duality_gap: f64::NAN,
            residuals: Residuals::default(),
            iterations: run.iterations,
            message,
        };

        match status {
            SolveStatus::Infeasible => {
                let scale = run.dobj;
                let mut y = y_problem(&run.y);
                y.iter_mut().for_each(|v| *v /= scale);
                sol.constraint_duals = y;
                sol.blocks = problem
                    .blocks
                    .iter()
                    .map(|b| HermitianMatrix::zeros(b.dim))
                    .collect();
                sol.scalars = vec![0.0; n_scalars];
                sol.block_duals = complex_blocks(&run.z, 2.0 / scale);
                sol.scalar_duals = run.z.lp.iter().take(n_scalars).map(|v| v / scale).collect();
                sol.dual_objective = f64::INFINITY;
                sol.objective_value = f64::INFINITY;
            }
            SolveStatus::Unbounded => {
                let scale = -run.pobj;
                sol.blocks = complex_blocks(&run.x, 1.0 / scale);
                sol.scalars = run.x.lp.iter().take(n_scalars).map(|v| v / scale).collect();
                sol.constraint_duals = vec![0.0; problem.constraints.len()];
                sol.block_duals = problem
                    .blocks
                    .iter()
                    .map(|b| HermitianMatrix::zeros(b.dim))
                    .collect();
                sol.scalar_duals = vec![0.0; n_scalars];
                sol.objective_value = f64::NEG_INFINITY;
                sol.dual_objective = f64::NEG_INFINITY;
            }
            SolveStatus::Optimal | SolveStatus::NumericalFailure => {
                sol.blocks = complex_blocks(&run.x, 1.0);
                sol.scalars = run.x.lp.iter().take(n_scalars).copied().collect();
                sol.constraint_duals = y_problem(&run.y);
                sol.block_duals = complex_blocks(&run.z, 2.0);
                sol.scalar_duals = run.z.lp.iter().take(n_scalars).copied().collect();
                sol.objective_value = problem.objective.eval(&sol.blocks, &sol.scalars);
                sol.dual_objective = super::dual_objective(problem, &sol.constraint_duals);
                sol.duality_gap = sol.objective_value - sol.dual_objective;
                sol.residuals = residuals(problem, &sol);
                let slack = opts.accept_tol * (1.0 + sol.objective_value.abs());
                if sol.duality_gap < -slack {
                    log::warn!(
                        "weak duality violated at termination: primal {:.9e} < dual {:.9e}",
                        sol.objective_value,
                        sol.dual_objective
                    );
                }
            }
        }
        log::debug!(
            "sdp: {:?} after {} iterations ({}), objective {:.9e}",
            sol.status,
            sol.iterations,
            sol.message,
            sol.objective_value
        );
        sol
    }
}

/// SDPT3-style initial levels `(ξ, ζ)` for a cone of size `n`.
fn start_levels(
    n: usize,
    rows: impl Iterator<Item = (usize, f64)>,
    b: &DVector<f64>,
    c_norm: f64,
) -> (f64, f64) {
    let nf = n as f64;
    let mut xi: f64 = 10.0f64.max(nf.sqrt());
    let mut a_max: f64 = 0.0;
    for (i, a_norm) in rows {
        xi = xi.max(nf * (1.0 + b[i].abs()) / (1.0 + a_norm));
        a_max = a_max.max(a_norm);
    }
    let zeta = 10.0f64
        .max(nf.sqrt())
        .max((1.0 + a_max.max(c_norm)) * nf.sqrt());
    (xi, zeta)
}

fn trivially_infeasible(problem: &SdpProblem, row: usize) -> SdpSolution {
    let mut y = vec![0.0; problem.constraints.len()];
    y[row] = problem.constraints[row].rhs.signum();
    SdpSolution {
        status: SolveStatus::Infeasible,
        blocks: problem
            .blocks
            .iter()
            .map(|b| HermitianMatrix::zeros(b.dim))
            .collect(),
        scalars: vec![0.0; problem.scalars.len()],
        constraint_duals: y,
        block_duals: problem
            .blocks
            .iter()
            .map(|b| HermitianMatrix::zeros(b.dim))
            .collect(),
        scalar_duals: vec![0.0; problem.scalars.len()],
        objective_value: f64::INFINITY,
        dual_objective: f64::INFINITY,
        duality_gap: f64::NAN,
        residuals: Residuals::default(),
        iterations: 0,
        message: format!(
            "constraint '{}' has no terms",
            problem.constraints[row].label
        ),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Converged,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
    MaxIter,
}

#[derive(Clone, Copy, Debug)]
struct Metrics {
    pinf: f64,
    dinf: f64,
    relgap: f64,
}

impl Metrics {
    fn worst(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.relgap)
    }
}

struct Run {
    x: Point,
    y: DVector<f64>,
    z: Point,
    outcome: Outcome,
    iterations: usize,
    metrics: Metrics,
    pobj: f64,
    dobj: f64,
}

struct Direction {
    dx: Point,
    dy: DVector<f64>,
    dz: Point,
    dxt: Point,
    dzt: Point,
}

struct BlockScaling {
    r: DMatrix<f64>,
    wnt: DMatrix<f64>,
    lambda: DVector<f64>,
    /// `R = L_x V Λ^{-1/2}`, kept factored for applying `R^{-1}`.
    lx: DMatrix<f64>,
    v: DMatrix<f64>,
}

/// Nesterov-Todd scaling `W` with `W z = W^{-T} x = λ`.
struct Scaling {
    lp_d: DVector<f64>,
    lp_w: DVector<f64>,
    lp_lambda: DVector<f64>,
    blocks: Vec<BlockScaling>,
}

impl Scaling {
    fn new(x: &Point, z: &Point) -> Option<Scaling> {
        if x.lp.iter().chain(z.lp.iter()).any(|v| !(*v > 0.0)) {
            return None;
        }
        let lp_d = x.lp.component_div(&z.lp);
        let lp_w = lp_d.map(f64::sqrt);
        let lp_lambda = x.lp.component_mul(&z.lp).map(f64::sqrt);
        let mut blocks = Vec::with_capacity(x.blocks.len());
        for (xb, zb) in x.blocks.iter().zip(&z.blocks) {
            let ls = Cholesky::new(xb.clone())?.l();
            let lz = Cholesky::new(zb.clone())?.l();
            let svd = (lz.transpose() * &ls).svd(false, true);
            let v = svd.v_t?.transpose();
            let lambda = svd.singular_values;
            if lambda.iter().any(|l| !(*l > 0.0)) {
                return None;
            }
            let inv_sqrt = lambda.map(|l| 1.0 / l.sqrt());
            let r = &ls * &v * DMatrix::from_diagonal(&inv_sqrt);
            let mut wnt = &r * r.transpose();
            symmetrize(&mut wnt);
            blocks.push(BlockScaling {
                r,
                wnt,
                lambda,
                lx: ls,
                v,
            });
        }
        Some(Scaling {
            lp_d,
            lp_w,
            lp_lambda,
            blocks,
        })
    }

    /// `W^T W p`.
    fn apply_wtw(&self, p: &Point) -> Point {
        Point {
            lp: p.lp.component_mul(&self.lp_d),
            blocks: p
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(s, b)| &b.wnt * s * &b.wnt)
                .collect(),
        }
    }

    /// `W^T p`: `R p R^T` on blocks.
    fn apply_wt(&self, p: &Point) -> Point {
        Point {
            lp: p.lp.component_mul(&self.lp_w),
            blocks: p
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(s, b)| &b.r * s * b.r.transpose())
                .collect(),
        }
    }

    /// `W p`: `R^T p R` on blocks.
    fn apply_w(&self, p: &Point) -> Point {
        Point {
            lp: p.lp.component_mul(&self.lp_w),
            blocks: p
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(s, b)| b.r.transpose() * s * &b.r)
                .collect(),
        }
    }

    /// Inverse of [`Scaling::apply_wt`]: `R^{-1} p R^{-T}` on blocks.
    fn unapply_wt(&self, p: &Point) -> Option<Point> {
        let mut blocks = Vec::with_capacity(p.blocks.len());
        for (s, b) in p.blocks.iter().zip(&self.blocks) {
            let half = b.lx.solve_lower_triangular(s)?;
            let inner = b.lx.solve_lower_triangular(&half.transpose())?;
            let sqrt = b.lambda.map(f64::sqrt);
            let mut t = DMatrix::from_diagonal(&sqrt)
                * b.v.transpose()
                * inner
                * &b.v
                * DMatrix::from_diagonal(&sqrt);
            symmetrize(&mut t);
            blocks.push(t);
        }
        Some(Point {
            lp: p.lp.component_div(&self.lp_w),
            blocks,
        })
    }

    fn neg_lambda(&self) -> Point {
        Point {
            lp: -&self.lp_lambda,
            blocks: self
                .blocks
                .iter()
                .map(|b| DMatrix::from_diagonal(&(-&b.lambda)))
                .collect(),
        }
    }

    /// `λ \ (σμ e − λ∘λ − Δx̃_a∘Δz̃_a)`.
    fn corrector_rhs(&self, target: f64, aff: &Direction) -> Point {
        let lp = DVector::from_iterator(
            self.lp_lambda.len(),
            (0..self.lp_lambda.len()).map(|l| {
                let lam = self.lp_lambda[l];
                (target - lam * lam - aff.dxt.lp[l] * aff.dzt.lp[l]) / lam
            }),
        );
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let dx = &aff.dxt.blocks[k];
                let dz = &aff.dzt.blocks[k];
                let prod = dx * dz;
                let n = b.lambda.len();
                DMatrix::from_fn(n, n, |i, j| {
                    let mut t = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                    if i == j {
                        t += target - b.lambda[i] * b.lambda[i];
                    }
                    2.0 * t / (b.lambda[i] + b.lambda[j])
                })
            })
            .collect();
        Point { lp, blocks }
    }

    /// Largest `α` keeping `λ + α d` in the cone.
    fn max_step(&self, d: &Point) -> f64 {
        let mut alpha = f64::INFINITY;
        for (l, &dl) in d.lp.iter().enumerate() {
            if dl < 0.0 {
                alpha = alpha.min(-self.lp_lambda[l] / dl);
            }
        }
        for (b, db) in self.blocks.iter().zip(&d.blocks) {
            let n = b.lambda.len();
            let s = DMatrix::from_fn(n, n, |i, j| {
                0.5 * (db[(i, j)] + db[(j, i)]) / (b.lambda[i] * b.lambda[j]).sqrt()
            });
            let min = SymmetricEigen::new(s).eigenvalues.min();
            if min < 0.0 {
                alpha = alpha.min(-1.0 / min);
            }
        }
        alpha
    }
}
