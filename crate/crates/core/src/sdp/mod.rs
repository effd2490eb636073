//! Small dense semidefinite programs over complex Hermitian blocks.
//!
//! A problem has a linear objective over Hermitian PSD matrix blocks and
//! nonnegative scalars, subject to linear trace constraints. Callers work in
//! complex traces `Re Tr(C X)` throughout; the solver maps each block to its
//! real symmetric embedding internally (see [`ipm`]).

mod dump;
mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{eig_hermitian, HermitianMatrix};
use num_complex::Complex64;

pub use ipm::{solve, solve_with, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Eq,
    Le,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Le => "<=",
        }
    }
}

/// `Σ_b Re Tr(C_b X_b) + Σ_s a_s x_s`.
#[derive(Clone, Debug, Default)]
pub struct LinearExpr {
    pub blocks: Vec<(BlockId, HermitianMatrix)>,
    pub scalars: Vec<(ScalarId, f64)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, id: BlockId, coef: HermitianMatrix) -> Self {
        self.blocks.push((id, coef));
        self
    }

    pub fn scalar(mut self, id: ScalarId, coef: f64) -> Self {
        self.scalars.push((id, coef));
        self
    }

    pub fn eval(&self, blocks: &[HermitianMatrix], scalars: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (id, c) in &self.blocks {
            acc += c
                .trace_product(&blocks[id.0])
                .expect("block coefficient dimension checked at validation");
        }
        for (id, a) in &self.scalars {
            acc += a * scalars[id.0];
        }
        acc
    }
}

/// Matrix-valued affine expression `Σ c_b X_b + Σ x_s M_s + C₀`.
#[derive(Clone, Debug)]
pub struct MatrixExpr {
    pub dim: usize,
    pub blocks: Vec<(BlockId, f64)>,
    pub scalars: Vec<(ScalarId, HermitianMatrix)>,
    pub constant: Option<HermitianMatrix>,
}

impl MatrixExpr {
    pub fn new(dim: usize) -> Self {
        MatrixExpr {
            dim,
            blocks: Vec::new(),
            scalars: Vec::new(),
            constant: None,
        }
    }

    pub fn block(mut self, id: BlockId, coef: f64) -> Self {
        self.blocks.push((id, coef));
        self
    }

    pub fn scalar(mut self, id: ScalarId, m: HermitianMatrix) -> Self {
        self.scalars.push((id, m));
        self
    }

    pub fn constant(mut self, m: HermitianMatrix) -> Self {
        self.constant = Some(m);
        self
    }

    pub fn eval(&self, blocks: &[HermitianMatrix], scalars: &[f64]) -> Result<HermitianMatrix> {
        let mut acc = self
            .constant
            .clone()
            .unwrap_or_else(|| HermitianMatrix::zeros(self.dim));
        for (id, c) in &self.blocks {
            acc = acc.add_scaled(&blocks[id.0], *c)?;
        }
        for (id, m) in &self.scalars {
            acc = acc.add_scaled(m, scalars[id.0])?;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: String,
    pub expr: LinearExpr,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecl {
    pub name: String,
    pub dim: usize,
}

/// Linear objective over Hermitian PSD blocks and nonnegative scalars.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    blocks: Vec<BlockDecl>,
    scalars: Vec<String>,
    objective: LinearExpr,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: impl Into<String>, dim: usize) -> BlockId {
        self.blocks.push(BlockDecl {
            name: name.into(),
            dim,
        });
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.scalars.push(name.into());
        ScalarId(self.scalars.len() - 1)
    }

    pub fn set_objective(&mut self, expr: LinearExpr) {
        self.objective = expr;
    }

    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        expr: LinearExpr,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            label: label.into(),
            expr,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Encodes `λ_max(combo) ≤ bound` as `S = bound·I − combo`, `S ⪰ 0`.
    ///
    /// Adds one slack block and `dim²` real equality rows (real part of every
    /// upper-triangle entry, imaginary part of every strict upper entry).
    /// Returns the slack block, whose dual matrix is the LMI multiplier.
    pub fn add_lmi_eig_bound(
        &mut self,
        label: &str,
        combo: &MatrixExpr,
        bound: f64,
    ) -> Result<BlockId> {
        let n = combo.dim;
        for (id, _) in &combo.blocks {
            let decl = self
                .blocks
                .get(id.0)
                .ok_or_else(|| Error::Problem(format!("{label}: unknown block {}", id.0)))?;
            if decl.dim != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: decl.dim,
                });
            }
        }
        for (id, m) in &combo.scalars {
            if id.0 >= self.scalars.len() {
                return Err(Error::Problem(format!("{label}: unknown scalar {}", id.0)));
            }
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.dim(),
                });
            }
        }
        if let Some(c) = &combo.constant {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.dim(),
                });
            }
        }

        let slack = self.add_block(format!("{label}.slack"), n);
        for p in 0..n {
            for q in p..n {
                let parts: &[EntryPart] = if p == q {
                    &[EntryPart::Re]
                } else {
                    &[EntryPart::Re, EntryPart::Im]
                };
                for &part in parts {
                    let selector = entry_selector(n, p, q, part);
                    let mut expr = LinearExpr::new().block(slack, selector.clone());
                    for (id, c) in &combo.blocks {
                        expr = expr.block(*id, selector.scale(*c));
                    }
                    for (id, m) in &combo.scalars {
                        expr = expr.scalar(*id, part.of(m.get(p, q)));
                    }
                    let mut rhs = if p == q && part == EntryPart::Re {
                        bound
                    } else {
                        0.0
                    };
                    if let Some(c) = &combo.constant {
                        rhs -= part.of(c.get(p, q));
                    }
                    let tag = match part {
                        EntryPart::Re => "re",
                        EntryPart::Im => "im",
                    };
                    self.add_constraint(format!("{label}[{p},{q}].{tag}"), expr, Relation::Eq, rhs);
                }
            }
        }
        Ok(slack)
    }

    pub fn blocks(&self) -> &[BlockDecl] {
        &self.blocks
    }

    pub fn scalars(&self) -> &[String] {
        &self.scalars
    }

    pub fn objective(&self) -> &LinearExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Checks that every term references a declared variable of matching size.
    pub fn validate(&self) -> Result<()> {
        let check = |expr: &LinearExpr, what: &str| -> Result<()> {
            for (id, c) in &expr.blocks {
                let decl = self
                    .blocks
                    .get(id.0)
                    .ok_or_else(|| Error::Problem(format!("{what}: unknown block {}", id.0)))?;
                if decl.dim != c.dim() {
                    return Err(Error::Problem(format!(
                        "{what}: coefficient of dimension {} on block '{}' of dimension {}",
                        c.dim(),
                        decl.name,
                        decl.dim
                    )));
                }
            }
            for (id, a) in &expr.scalars {
                if id.0 >= self.scalars.len() {
                    return Err(Error::Problem(format!("{what}: unknown scalar {}", id.0)));
                }
                if !a.is_finite() {
                    return Err(Error::Problem(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for c in &self.constraints {
            check(&c.expr, &c.label)?;
            if !c.rhs.is_finite() {
                return Err(Error::Problem(format!(
                    "{}: non-finite right-hand side",
                    c.label
                )));
            }
        }
        Ok(())
    }

    /// Writes the plain-text interchange format (see [`dump`]).
    pub fn write_dump(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        dump::write(self, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EntryPart {
    Re,
    Im,
}

impl EntryPart {
    fn of(self, z: Complex64) -> f64 {
        match self {
            EntryPart::Re => z.re,
            EntryPart::Im => z.im,
        }
    }
}

/// Hermitian `C` with `Re Tr(C X)` equal to `Re X_pq` or `Im X_pq`.
fn entry_selector(n: usize, p: usize, q: usize, part: EntryPart) -> HermitianMatrix {
    let zero = Complex64::new(0.0, 0.0);
    let mut data = vec![zero; n * n];
    if p == q {
        data[p * n + p] = Complex64::new(1.0, 0.0);
    } else {
        match part {
            EntryPart::Re => {
                data[p * n + q] = Complex64::new(0.5, 0.0);
                data[q * n + p] = Complex64::new(0.5, 0.0);
            }
            EntryPart::Im => {
                data[p * n + q] = Complex64::new(0.0, 0.5);
                data[q * n + p] = Complex64::new(0.0, -0.5);
            }
        }
    }
    HermitianMatrix::new(n, data).expect("selector is Hermitian by construction")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// KKT residuals in problem units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest constraint or cone violation of the primal point.
    pub primal_infeas: f64,
    /// Largest cone or sign violation of the dual point.
    pub dual_infeas: f64,
    /// Primal objective minus dual objective.
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub blocks: Vec<HermitianMatrix>,
    pub scalars: Vec<f64>,
    /// One multiplier per constraint: nonnegative for `>=` rows, nonpositive
    /// for `<=` rows. For an infeasible problem this is a Farkas ray.
    pub constraint_duals: Vec<f64>,
    /// Dual slack matrix per PSD block.
    pub block_duals: Vec<HermitianMatrix>,
    /// Reduced cost per scalar.
    pub scalar_duals: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub message: String,
}

impl SdpSolution {
    /// A hand-built candidate point, for checking with [`residuals`].
    pub fn candidate(
        problem: &SdpProblem,
        blocks: Vec<HermitianMatrix>,
        scalars: Vec<f64>,
        constraint_duals: Vec<f64>,
    ) -> Self {
        let mut s = SdpSolution {
            status: SolveStatus::NumericalFailure,
            block_duals: blocks
                .iter()
                .map(|b| HermitianMatrix::zeros(b.dim()))
                .collect(),
            scalar_duals: vec![0.0; scalars.len()],
            blocks,
            scalars,
            constraint_duals,
            objective_value: 0.0,
            dual_objective: 0.0,
            duality_gap: 0.0,
            residuals: Residuals::default(),
            iterations: 0,
            message: "candidate".into(),
        };
        s.objective_value = problem.objective.eval(&s.blocks, &s.scalars);
        s.dual_objective = dual_objective(problem, &s.constraint_duals);
        s.duality_gap = s.objective_value - s.dual_objective;
        s
    }

    pub fn block(&self, id: BlockId) -> &HermitianMatrix {
        &self.blocks[id.0]
    }

    pub fn scalar(&self, id: ScalarId) -> f64 {
        self.scalars[id.0]
    }

    pub fn block_dual(&self, id: BlockId) -> &HermitianMatrix {
        &self.block_duals[id.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn dual_objective(problem: &SdpProblem, y: &[f64]) -> f64 {
    problem
        .constraints
        .iter()
        .zip(y)
        .map(|(c, yi)| c.rhs * yi)
        .sum()
}

/// Recomputes feasibility and gap of `s` directly from the problem data.
pub fn residuals(problem: &SdpProblem, s: &SdpSolution) -> Residuals {
    let mut primal: f64 = 0.0;
    for c in &problem.constraints {
        let lhs = c.expr.eval(&s.blocks, &s.scalars);
        let violation = match c.relation {
            Relation::Ge => (c.rhs - lhs).max(0.0),
            Relation::Le => (lhs - c.rhs).max(0.0),
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        primal = primal.max(violation);
    }
    for b in &s.blocks {
        primal = primal.max((-eig_hermitian(b).min()).max(0.0));
    }
    for &x in &s.scalars {
        primal = primal.max((-x).max(0.0));
    }

    let y = &s.constraint_duals;
    let mut dual: f64 = 0.0;
    for (c, &yi) in problem.constraints.iter().zip(y) {
        let sign_violation = match c.relation {
            Relation::Ge => (-yi).max(0.0),
            Relation::Le => yi.max(0.0),
            Relation::Eq => 0.0,
        };
        dual = dual.max(sign_violation);
    }
    // Z_b = C_b − Σ y_i A_ib must be PSD; scalar reduced costs nonnegative.
    let mut z_blocks: Vec<HermitianMatrix> = problem
        .blocks
        .iter()
        .map(|d| HermitianMatrix::zeros(d.dim))
        .collect();
    let mut z_scalars = vec![0.0; problem.scalars.len()];
    accumulate(&problem.objective, 1.0, &mut z_blocks, &mut z_scalars);
    for (c, &yi) in problem.constraints.iter().zip(y) {
        accumulate(&c.expr, -yi, &mut z_blocks, &mut z_scalars);
    }
    for z in &z_blocks {
        dual = dual.max((-eig_hermitian(z).min()).max(0.0));
    }
    for &z in &z_scalars {
        dual = dual.max((-z).max(0.0));
    }

    let pobj = problem.objective.eval(&s.blocks, &s.scalars);
    Residuals {
        primal_infeas: primal,
        dual_infeas: dual,
        gap: pobj - dual_objective(problem, y),
    }
}

fn accumulate(expr: &LinearExpr, factor: f64, blocks: &mut [HermitianMatrix], scalars: &mut [f64]) {
    for (id, c) in &expr.blocks {
        blocks[id.0] = blocks[id.0]
            .add_scaled(c, factor)
            .expect("validated dimensions");
    }
    for (id, a) in &expr.scalars {
        scalars[id.0] += factor * a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{lambda_max, rank_numeric, CVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::new(
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    /// minimize Tr(W) s.t. Tr(h h^H W) >= target.
    fn mrt_instance(h: &CVector, target: f64, objective_scale: f64) -> (SdpProblem, BlockId) {
        let n = h.dim();
        let mut p = SdpProblem::new();
        let w = p.add_block("W", n);
        p.set_objective(
            LinearExpr::new().block(w, HermitianMatrix::scaled_identity(n, objective_scale)),
        );
        p.add_constraint(
            "sinr",
            LinearExpr::new().block(w, h.outer()),
            Relation::Ge,
            target,
        );
        (p, w)
    }

    #[test]
    fn analytic_single_constraint_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [1, 2, 4, 6] {
            let h = random_channel(&mut rng, n);
            let target = 2.5;
            let (p, w) = mrt_instance(&h, target, 1.0);
            let s = solve(&p).unwrap();
            assert_eq!(s.status, SolveStatus::Optimal, "{}", s.message);
            let expected = target / h.norm_sqr();
            assert!((s.objective_value - expected).abs() < 1e-7 * expected);
            assert_eq!(rank_numeric(s.block(w), 1e-6).unwrap(), 1);
            let r = residuals(&p, &s);
            assert!(r.gap.abs() <= 1e-7, "{r:?}");
            assert!(r.primal_infeas <= 1e-7 && r.dual_infeas <= 1e-7, "{r:?}");
            assert!(s.block(w).asymmetry() <= 1e-10);
        }
    }

    #[test]
    fn scaling_objective_leaves_argmin_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_channel(&mut rng, 4);
        let (p1, w) = mrt_instance(&h, 1.0, 1.0);
        let (p2, _) = mrt_instance(&h, 1.0, 37.0);
        let a = solve(&p1).unwrap();
        let b = solve(&p2).unwrap();
        let diff = a.block(w).sub(b.block(w)).unwrap().frobenius_norm();
        assert!(diff <= 1e-6 * a.block(w).frobenius_norm());
    }

    #[test]
    fn unconstrained_trace_minimum_is_zero() {
        let mut p = SdpProblem::new();
        let w = p.add_block("W", 3);
        p.set_objective(LinearExpr::new().block(w, HermitianMatrix::identity(3)));
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(s.objective_value.abs() < 1e-8);
        assert!(s.block(w).max_abs() < 1e-8);
    }

    #[test]
    fn contradictory_trace_bounds_are_infeasible() {
        let mut p = SdpProblem::new();
        let w = p.add_block("W", 2);
        p.set_objective(LinearExpr::new().block(w, HermitianMatrix::identity(2)));
        p.add_constraint(
            "lo",
            LinearExpr::new().block(w, HermitianMatrix::identity(2)),
            Relation::Ge,
            1.0,
        );
        p.add_constraint(
            "hi",
            LinearExpr::new().block(w, HermitianMatrix::identity(2)),
            Relation::Le,
            0.0,
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible, "{}", s.message);
    }

    #[test]
    fn unbounded_scalar_is_detected() {
        let mut p = SdpProblem::new();
        let x = p.add_scalar("x");
        let y = p.add_scalar("y");
        p.set_objective(LinearExpr::new().scalar(x, -1.0));
        p.add_constraint(
            "link",
            LinearExpr::new().scalar(x, 1.0).scalar(y, -1.0),
            Relation::Eq,
            0.0,
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded, "{}", s.message);
    }

    #[test]
    fn malformed_problem_is_rejected() {
        let mut p = SdpProblem::new();
        let _w = p.add_block("W", 2);
        p.add_constraint(
            "bad",
            LinearExpr::new().block(BlockId(3), HermitianMatrix::identity(2)),
            Relation::Ge,
            1.0,
        );
        assert!(matches!(solve(&p), Err(Error::Problem(_))));
        let mut p = SdpProblem::new();
        let w = p.add_block("W", 2);
        p.add_constraint(
            "dim",
            LinearExpr::new().block(w, HermitianMatrix::identity(3)),
            Relation::Ge,
            1.0,
        );
        assert!(matches!(solve(&p), Err(Error::Problem(_))));
    }

    #[test]
    fn residuals_of_hand_built_points() {
        let h = CVector::from_real(&[1.0, 0.0]);
        let (p, _) = mrt_instance(&h, 1.0, 1.0);
        let point = SdpSolution::candidate(
            &p,
            vec![HermitianMatrix::diag(&[1.0, 0.0])],
            vec![],
            vec![1.0],
        );
        let r = residuals(&p, &point);
        assert_eq!(r.primal_infeas, 0.0);
        assert_eq!(r.dual_infeas, 0.0);
        assert_eq!(r.gap, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_channel(&mut rng, 3);
        let (p, w) = mrt_instance(&h, 2.0, 1.0);
        let s = solve(&p).unwrap();
        assert!(residuals(&p, &s).gap <= 1e-7);
        let bumped = SdpSolution::candidate(
            &p,
            vec![s.block(w).scale(1.1)],
            vec![],
            s.constraint_duals.clone(),
        );
        let r = residuals(&p, &bumped);
        assert!(r.primal_infeas <= 1e-9);
        assert!(r.gap > 0.0);
    }

    #[test]
    fn lmi_with_zero_bound_forces_zero_block() {
        let mut p = SdpProblem::new();
        let w = p.add_block("W", 3);
        p.set_objective(LinearExpr::new().block(w, HermitianMatrix::scaled_identity(3, -1.0)));
        p.add_lmi_eig_bound("cap", &MatrixExpr::new(3).block(w, 1.0), 0.0)
            .unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal, "{}", s.message);
        assert!(s.block(w).max_abs() < 1e-7);
    }

    #[test]
    fn lmi_caps_the_largest_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let h = random_channel(&mut rng, n);
        let g = random_channel(&mut rng, n);
        let mut p = SdpProblem::new();
        let w = p.add_block("W", n);
        let e = p.add_block("E", n);
        p.set_objective(
            LinearExpr::new()
                .block(w, HermitianMatrix::identity(n))
                .block(e, HermitianMatrix::identity(n)),
        );
        p.add_constraint(
            "sinr",
            LinearExpr::new().block(w, h.outer()),
            Relation::Ge,
            4.0,
        );
        p.add_constraint(
            "g",
            LinearExpr::new().block(w, g.outer()),
            Relation::Ge,
            1.0,
        );
        let bound = 0.05;
        let combo = MatrixExpr::new(n).block(w, 1.0).block(e, -0.1);
        p.add_lmi_eig_bound("safe", &combo, bound).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal, "{}", s.message);
        let q = combo.eval(&s.blocks, &s.scalars).unwrap();
        assert!(lambda_max(&q) <= bound + 1e-8);
        let r = residuals(&p, &s);
        assert!(
            r.primal_infeas <= 1e-7
                && r.dual_infeas <= 1e-7
                && r.gap.abs() <= 1e-7 * (1.0 + s.objective_value.abs()),
            "{r:?}"
        );
    }

    #[test]
    fn lmi_below_fixed_eigenvalue_is_infeasible() {
        let n = 2;
        let fixed = HermitianMatrix::diag(&[3.0, 1.0]);
        let mut p = SdpProblem::new();
        let w = p.add_block("W", n);
        for i in 0..n {
            for j in i..n {
                let parts: &[EntryPart] = if i == j {
                    &[EntryPart::Re]
                } else {
                    &[EntryPart::Re, EntryPart::Im]
                };
                for &part in parts {
                    p.add_constraint(
                        format!("pin[{i},{j}]"),
                        LinearExpr::new().block(w, entry_selector(n, i, j, part)),
                        Relation::Eq,
                        part.of(fixed.get(i, j)),
                    );
                }
            }
        }
        p.add_lmi_eig_bound("cap", &MatrixExpr::new(n).block(w, 1.0), 2.0)
            .unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible, "{}", s.message);

        // Same problem with the bound above λ_max is feasible.
        let mut p2 = SdpProblem::new();
        let w2 = p2.add_block("W", n);
        for c in p.constraints().iter().take(n * n) {
            let expr = LinearExpr::new().block(w2, c.expr.blocks[0].1.clone());
            p2.add_constraint(c.label.clone(), expr, c.relation, c.rhs);
        }
        p2.add_lmi_eig_bound("cap", &MatrixExpr::new(n).block(w2, 1.0), 3.5)
            .unwrap();
        assert_eq!(solve(&p2).unwrap().status, SolveStatus::Optimal);
    }

    #[test]
    fn scalar_terms_in_lmi() {
        // minimize a s.t. λ_max(M - a I) <= 0  →  a = λ_max(M).
        let m = HermitianMatrix::from_rows(&[
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.5, 1.0)],
            vec![Complex64::new(0.5, -1.0), Complex64::new(1.0, 0.0)],
        ])
        .unwrap();
        let mut p = SdpProblem::new();
        let a = p.add_scalar("a");
        p.set_objective(LinearExpr::new().scalar(a, 1.0));
        let combo = MatrixExpr::new(2)
            .scalar(a, HermitianMatrix::scaled_identity(2, -1.0))
            .constant(m.clone());
        p.add_lmi_eig_bound("cap", &combo, 0.0).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal, "{}", s.message);
        assert!((s.scalar(a) - lambda_max(&m)).abs() < 1e-7);
    }
}
