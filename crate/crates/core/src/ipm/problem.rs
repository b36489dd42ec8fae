use std::fmt;
use std::time::Duration;

use crate::cones::ConeSpec;
use crate::error::{Error, Result};
use crate::sparse::SparseCcs;

/// One problem instance
///
/// ```text
/// minimize    ½ xᵀQx + qᵀx
/// subject to  Ax = b,  Gx + s = h,  s ∈ K
/// ```
///
/// with `Q` stored as its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    quad: SparseCcs,
    q: Vec<f64>,
    a: SparseCcs,
    b: Vec<f64>,
    g: SparseCcs,
    h: Vec<f64>,
    cone: ConeSpec,
}

/// Identifies one of the three data matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixId {
    Q,
    A,
    G,
}

impl fmt::Display for MatrixId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixId::Q => "Q",
            MatrixId::A => "A",
            MatrixId::G => "G",
        })
    }
}

impl std::str::FromStr for MatrixId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q" => Ok(MatrixId::Q),
            "A" => Ok(MatrixId::A),
            "G" => Ok(MatrixId::G),
            _ => Err(Error::Malformed(format!("unknown matrix id `{s}`"))),
        }
    }
}

impl ProblemData {
    pub fn new(
        quad: SparseCcs,
        q: Vec<f64>,
        a: SparseCcs,
        b: Vec<f64>,
        g: SparseCcs,
        h: Vec<f64>,
        cone: ConeSpec,
    ) -> Result<Self> {
        let n = q.len();
        let dim = |what: &str, got: (usize, usize), want: (usize, usize)| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Dimension(format!(
                    "{what} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )))
            }
        };
        dim("Q", (quad.nrows(), quad.ncols()), (n, n))?;
        dim("A", (a.nrows(), a.ncols()), (b.len(), n))?;
        dim("G", (g.nrows(), g.ncols()), (h.len(), n))?;
        if h.len() != cone.dim() {
            return Err(Error::Dimension(format!(
                "h has length {} but the cone has dimension {}",
                h.len(),
                cone.dim()
            )));
        }
        if !quad.is_upper_triangular() {
            return Err(Error::InvalidProblem("Q must be stored as its upper triangle".into()));
        }
        if (0..n).any(|j| quad.get(j, j) < 0.0) {
            return Err(Error::InvalidProblem("Q has a negative diagonal entry".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&q) && finite(&b) && finite(&h) && finite(quad.values()) && finite(a.values()) && finite(g.values())) {
            return Err(Error::InvalidProblem("problem data contains non-finite values".into()));
        }
        Ok(ProblemData { quad, q, a, b, g, h, cone })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    /// Upper triangle of the quadratic cost matrix.
    pub fn quad(&self) -> &SparseCcs {
        &self.quad
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn a(&self) -> &SparseCcs {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn g(&self) -> &SparseCcs {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn matrix(&self, id: MatrixId) -> &SparseCcs {
        match id {
            MatrixId::Q => &self.quad,
            MatrixId::A => &self.a,
            MatrixId::G => &self.g,
        }
    }

    /// Overwrite one stored matrix entry by its CCS value index.
    pub fn set_matrix_value(&mut self, id: MatrixId, index: usize, value: f64) -> Result<()> {
        let m = match id {
            MatrixId::Q => &mut self.quad,
            MatrixId::A => &mut self.a,
            MatrixId::G => &mut self.g,
        };
        let slot = m
            .values_mut()
            .get_mut(index)
            .ok_or_else(|| Error::IndexOutOfRange(format!("{id} has no value index {index}")))?;
        *slot = value;
        Ok(())
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    pub fn h_mut(&mut self) -> &mut [f64] {
        &mut self.h
    }

    /// Copy all numeric data from a problem with identical structure.
    pub(crate) fn copy_values_from(&mut self, other: &ProblemData) {
        self.quad.values_mut().copy_from_slice(other.quad.values());
        self.a.values_mut().copy_from_slice(other.a.values());
        self.g.values_mut().copy_from_slice(other.g.values());
        self.q.copy_from_slice(&other.q);
        self.b.copy_from_slice(&other.b);
        self.h.copy_from_slice(&other.h);
    }

    pub fn has_quadratic(&self) -> bool {
        self.quad.values().iter().any(|&v| v != 0.0)
    }

    /// `½ xᵀQx + qᵀx`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.quad.quad_form_upper(x) + self.q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Solver tolerances and regularization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub eps_feas: f64,
    pub eps_gap: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Static regularization added to the KKT diagonal.
    pub delta_s: f64,
    /// Pivot threshold of the dynamic regularization.
    pub eps_d: f64,
    /// Replacement magnitude for regularized pivots.
    pub delta_d: f64,
    pub eps_ir: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    pub max_ir_passes: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            eps_feas: 1e-8,
            eps_gap: 1e-8,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            delta_s: 1e-7,
            eps_d: 1e-13,
            delta_d: 1e-7,
            eps_ir: 1e-13,
            max_iter: 100,
            step_fraction: 0.99,
            max_ir_passes: 10,
        }
    }
}

impl Settings {
    /// All four termination tolerances set to `eps`.
    pub fn with_tolerance(eps: f64) -> Self {
        Settings { eps_feas: eps, eps_gap: eps, eps_abs: eps, eps_rel: eps, ..Settings::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.eps_feas,
            self.eps_gap,
            self.eps_abs,
            self.eps_rel,
            self.delta_s,
            self.eps_d,
            self.delta_d,
            self.eps_ir,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProblem("settings tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidProblem("step_fraction must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidProblem("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Homogeneous iterate `(x, y, z, s, κ, τ)`.
#[derive(Debug, PartialEq)]
pub struct IterateState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    pub mu: f64,
}

impl Clone for IterateState {
    fn clone(&self) -> Self {
        IterateState {
            x: self.x.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
            s: self.s.clone(),
            kappa: self.kappa,
            tau: self.tau,
            mu: self.mu,
        }
    }

    // Reuses the existing buffers, so same-shaped copies do not allocate.
    fn clone_from(&mut self, src: &Self) {
        self.x.clone_from(&src.x);
        self.y.clone_from(&src.y);
        self.z.clone_from(&src.z);
        self.s.clone_from(&src.s);
        self.kappa = src.kappa;
        self.tau = src.tau;
        self.mu = src.mu;
    }
}

impl IterateState {
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        IterateState {
            x: vec![0.0; n],
            y: vec![0.0; p],
            z: vec![0.0; m],
            s: vec![0.0; m],
            kappa: 1.0,
            tau: 1.0,
            mu: 0.0,
        }
    }

    /// `(sᵀz + κτ) / (l + n_soc + 1)`.
    pub fn duality_measure(&self, cone: &ConeSpec) -> f64 {
        let sz: f64 = self.s.iter().zip(&self.z).map(|(a, b)| a * b).sum();
        (sz + self.kappa * self.tau) / (cone.cone_count() + 1) as f64
    }
}

/// Exit status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// Optimal within tolerances.
    Optimal,
    /// Primal infeasibility certificate found.
    PrimalInfeasible,
    /// Dual infeasibility (unboundedness) certificate found.
    DualInfeasible,
    MaxIterations,
    /// Stalled line search or failed scaling.
    NumericalError,
}

impl Status {
    pub fn code(self) -> &'static str {
        match self {
            Status::Optimal => "OPT",
            Status::PrimalInfeasible => "PINF",
            Status::DualInfeasible => "DINF",
            Status::MaxIterations => "MAXITER",
            Status::NumericalError => "NUMERR",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "OPT" => Ok(Status::Optimal),
            "PINF" => Ok(Status::PrimalInfeasible),
            "DINF" => Ok(Status::DualInfeasible),
            "MAXITER" => Ok(Status::MaxIterations),
            "NUMERR" => Ok(Status::NumericalError),
            _ => Err(Error::Malformed(format!("unknown status `{s}`"))),
        }
    }
}

/// The quantities compared against the termination tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualRecord {
    /// `‖Ax̄ − b‖ / max(1, ‖x̄‖ + ‖b‖)` on τ-descaled variables.
    pub pres_eq: f64,
    /// `‖Gx̄ + s̄ − h‖ / max(1, ‖x̄‖ + ‖s̄‖ + ‖h‖)`.
    pub pres_ineq: f64,
    /// `‖Qx̄ + Aᵀȳ + Gᵀz̄ + q‖ / max(1, ‖x̄‖ + ‖ȳ‖ + ‖z̄‖ + ‖q‖)`.
    pub dres: f64,
    /// `s̄ᵀz̄ / max(1, −qᵀx̄, −bᵀȳ − hᵀz̄)`.
    pub gap: f64,
    /// Duality measure of the homogeneous iterate.
    pub mu: f64,
}

/// Outcome of [`solve`](crate::ipm::solve).
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Primal solution (optimal: τ-descaled; infeasible: raw certificate).
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    /// `½ xᵀQx + qᵀx` at the returned `x`.
    pub objective: f64,
    pub iterations: usize,
    pub residuals: ResidualRecord,
    pub solve_time: Duration,
}
