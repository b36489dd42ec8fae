//! The regularized, SOC-expanded quasi-definite KKT system
//!
//! ```text
//!     [ Q   Aᵀ   Gᵀ    ]
//! K = [ A   0    0     ]
//!     [ G   0   −WᵀW   ]
//! ```
//!
//! Every second-order block of `−WᵀW` is stored in sparse form through two
//! auxiliary rows, so the matrix stays as sparse as `G` itself. The layout is
//! `x (n) | y (p) | z (m) | aux (2 per SOC)` and only the upper triangle is
//! stored.

use crate::cones::{jordan_inverse_into, ConeSpec, NtScaling};
use crate::error::{Error, Result};
use crate::ipm::{IterateState, ProblemData};
use crate::sparse::{refine_in_place, NumericFactor, RefineWork, Refinement, SparseCcs, SymbolicFactor};

/// Positions of the problem data inside the KKT value array.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataSlots {
    /// One slot per stored entry of `Q`, in CCS order.
    pub q: Vec<usize>,
    /// One slot per stored entry of `A`, in CCS order.
    pub a: Vec<usize>,
    /// One slot per stored entry of `G`, in CCS order.
    pub g: Vec<usize>,
}

/// The assembled KKT matrix together with everything needed to refresh its
/// values in place.
#[derive(Debug, Clone)]
pub struct KktSystem {
    n: usize,
    p: usize,
    cone: ConeSpec,
    /// Expanded matrix without regularization; refinement target.
    exact: SparseCcs,
    /// Expanded matrix with static regularization; factored.
    regularized: SparseCcs,
    signs: Vec<f64>,
    /// Static regularization per value slot (nonzero on the diagonal only).
    reg: Vec<f64>,
    data_slots: DataSlots,
    scaling_slots: Vec<usize>,
    delta_s: f64,
}

/// Dimension of the expanded KKT system.
pub fn kkt_dim(n: usize, p: usize, cone: &ConeSpec) -> usize {
    n + p + cone.dim() + 2 * cone.soc_count()
}

impl KktSystem {
    /// Assemble the structure for the given patterns (values are ignored)
    /// with `W = I` and zero problem data.
    pub fn from_patterns(
        n: usize,
        cone: &ConeSpec,
        quad: &SparseCcs,
        a: &SparseCcs,
        g: &SparseCcs,
        delta_s: f64,
    ) -> Result<Self> {
        let p = a.nrows();
        let m = cone.dim();
        if quad.nrows() != n || quad.ncols() != n || a.ncols() != n || g.ncols() != n || g.nrows() != m {
            return Err(Error::Dimension("data patterns do not match n, p and the cone".into()));
        }
        if !quad.is_upper_triangular() {
            return Err(Error::InvalidProblem("Q must be stored as its upper triangle".into()));
        }
        let dim = kkt_dim(n, p, cone);
        let at = transpose_map(a);
        let gt = transpose_map(g);

        let mut col_offsets = Vec::with_capacity(dim + 1);
        let mut rows: Vec<usize> = Vec::new();
        let mut slots = DataSlots {
            q: vec![0; quad.nnz()],
            a: vec![0; a.nnz()],
            g: vec![0; g.nnz()],
        };
        let mut scaling_slots = Vec::new();
        let mut diag_slot = vec![0usize; dim];
        col_offsets.push(0);

        // x columns: upper triangle of Q plus an always-present diagonal.
        for j in 0..n {
            let (qr, _) = quad.col(j);
            let base = quad.col_offsets()[j];
            let mut has_diag = false;
            for (t, &r) in qr.iter().enumerate() {
                slots.q[base + t] = rows.len();
                if r == j {
                    has_diag = true;
                    diag_slot[j] = rows.len();
                }
                rows.push(r);
            }
            if !has_diag {
                diag_slot[j] = rows.len();
                rows.push(j);
            }
            col_offsets.push(rows.len());
        }
        // y columns: row i of A, then the diagonal.
        for i in 0..p {
            for &(k, src) in &at[i] {
                slots.a[src] = rows.len();
                rows.push(k);
            }
            diag_slot[n + i] = rows.len();
            rows.push(n + i);
            col_offsets.push(rows.len());
        }
        // z columns: row r of G, then the (diagonal) scaling entry.
        for r in 0..m {
            for &(k, src) in &gt[r] {
                slots.g[src] = rows.len();
                rows.push(k);
            }
            diag_slot[n + p + r] = rows.len();
            scaling_slots.push(rows.len());
            rows.push(n + p + r);
            col_offsets.push(rows.len());
        }
        // Auxiliary columns: u couples the whole block, v its tail.
        let zoff = n + p;
        for (k, (off, d)) in cone.soc_blocks().enumerate() {
            let ucol = zoff + m + 2 * k;
            for t in 0..d {
                scaling_slots.push(rows.len());
                rows.push(zoff + off + t);
            }
            diag_slot[ucol] = rows.len();
            scaling_slots.push(rows.len());
            rows.push(ucol);
            col_offsets.push(rows.len());
            for t in 1..d {
                scaling_slots.push(rows.len());
                rows.push(zoff + off + t);
            }
            diag_slot[ucol + 1] = rows.len();
            scaling_slots.push(rows.len());
            rows.push(ucol + 1);
            col_offsets.push(rows.len());
        }

        let nnz = rows.len();
        let exact = SparseCcs::new(dim, dim, col_offsets, rows, vec![0.0; nnz])?;
        let mut signs = vec![-1.0; dim];
        signs[..n].fill(1.0);
        for k in 0..cone.soc_count() {
            signs[n + p + m + 2 * k] = 1.0;
        }
        let mut reg = vec![0.0; nnz];
        for (i, &slot) in diag_slot.iter().enumerate() {
            reg[slot] = signs[i] * delta_s;
        }
        let regularized = SparseCcs::new(
            dim,
            dim,
            exact.col_offsets().to_vec(),
            exact.row_indices().to_vec(),
            reg.clone(),
        )?;
        let mut kkt = KktSystem {
            n,
            p,
            cone: cone.clone(),
            exact,
            regularized,
            signs,
            reg,
            data_slots: slots,
            scaling_slots,
            delta_s,
        };
        kkt.update_scaling(&NtScaling::identity(cone));
        Ok(kkt)
    }

    /// Assemble for a concrete problem with `W = I`.
    pub fn assemble(problem: &ProblemData, delta_s: f64) -> Result<Self> {
        let mut kkt = Self::from_patterns(problem.n(), problem.cone(), problem.quad(), problem.a(), problem.g(), delta_s)?;
        kkt.load_data(problem);
        Ok(kkt)
    }

    /// Write the values of `Q`, `A` and `G` into their slots. The problem must
    /// have the pattern this system was built from.
    pub fn load_data(&mut self, problem: &ProblemData) {
        let pairs = [
            (&self.data_slots.q, problem.quad().values()),
            (&self.data_slots.a, problem.a().values()),
            (&self.data_slots.g, problem.g().values()),
        ];
        let exact = self.exact.values_mut();
        let regv = self.regularized.values_mut();
        for (slots, vals) in pairs {
            for (&slot, &v) in slots.iter().zip(vals) {
                exact[slot] = v;
                regv[slot] = v + self.reg[slot];
            }
        }
    }

    /// Rewrite the `−WᵀW` block (and its expansion) for a new scaling.
    pub fn update_scaling(&mut self, w: &NtScaling) {
        let l = self.cone.nn_count();
        let exact = self.exact.values_mut();
        let regv = self.regularized.values_mut();
        let mut put = |t: usize, v: f64| {
            let slot = self.scaling_slots[t];
            exact[slot] = v;
            regv[slot] = v + self.reg[slot];
        };
        let mut t = 0;
        for &wi in w.nn_w() {
            put(t, -wi * wi);
            t += 1;
        }
        debug_assert_eq!(t, l);
        // z diagonals of all SOC blocks come first, then the auxiliary columns.
        for (k, &d) in self.cone.soc_dims().iter().enumerate() {
            let eta2 = w.eta(k) * w.eta(k);
            let [a, _, _, _] = w.expansion(k);
            put(t, -eta2 * a);
            for j in 1..d {
                put(t + j, -eta2);
            }
            t += d;
        }
        for (k, &d) in self.cone.soc_dims().iter().enumerate() {
            let eta2 = w.eta(k) * w.eta(k);
            let [_, u0, u1, v1] = w.expansion(k);
            let wb = w.wbar(k);
            put(t, -eta2 * u0);
            for j in 1..d {
                put(t + j, -eta2 * u1 * wb[j]);
            }
            put(t + d, eta2);
            t += d + 1;
            for j in 1..d {
                put(t + j - 1, -eta2 * v1 * wb[j]);
            }
            put(t + d - 1, -eta2);
            t += d;
        }
        debug_assert_eq!(t, self.scaling_slots.len());
    }

    pub fn dim(&self) -> usize {
        self.exact.ncols()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.cone.dim()
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    /// Expanded matrix without static regularization.
    pub fn exact_matrix(&self) -> &SparseCcs {
        &self.exact
    }

    /// Expanded matrix with static regularization; this is what is factored.
    pub fn matrix(&self) -> &SparseCcs {
        &self.regularized
    }

    pub fn expected_signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn data_slots(&self) -> &DataSlots {
        &self.data_slots
    }

    pub fn scaling_slots(&self) -> &[usize] {
        &self.scaling_slots
    }

    /// Numeric factorization of the regularized matrix in `num`.
    pub fn factor_into(&self, sym: &SymbolicFactor, num: &mut NumericFactor, eps_d: f64, delta_d: f64) {
        num.refactor(sym, self.regularized.values(), &self.signs, eps_d, delta_d);
    }

    /// Fresh numeric factorization with the given pivot regularization.
    pub fn factor(&self, sym: &SymbolicFactor, eps_d: f64, delta_d: f64) -> NumericFactor {
        let mut num = NumericFactor::new(sym);
        self.factor_into(sym, &mut num, eps_d, delta_d);
        num
    }

    /// Solve `K ξ = rhs` for a full-length (expanded) right-hand side, refining
    /// against the unregularized matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_into(
        &self,
        sym: &SymbolicFactor,
        num: &NumericFactor,
        rhs: &[f64],
        out: &mut [f64],
        eps_ir: f64,
        max_passes: usize,
        ws: &mut RefineWork,
    ) -> Refinement {
        refine_in_place(&self.exact, sym, num, rhs, out, eps_ir, max_passes, ws)
    }
}

/// For every row of `m`, its `(column, value index)` pairs in column order.
fn transpose_map(m: &SparseCcs) -> Vec<Vec<(usize, usize)>> {
    let mut rows = vec![Vec::new(); m.nrows()];
    for (r, c, k) in m.entries() {
        rows[r].push((c, k));
    }
    rows
}

/// Right-hand-side and solution storage for direction solves.
#[derive(Debug, Clone)]
pub struct KktWork {
    pub rhs: Vec<f64>,
    pub sol: Vec<f64>,
    pub refine: RefineWork,
    /// `λ \ d_s` and its image under `W`.
    pub tmp_m: Vec<f64>,
    pub tmp_m2: Vec<f64>,
    /// Refinement outcome of the most recent solve.
    pub last: Refinement,
}

impl KktWork {
    pub fn new(kkt: &KktSystem) -> Self {
        let dim = kkt.dim();
        let m = kkt.m();
        KktWork {
            rhs: vec![0.0; dim],
            sol: vec![0.0; dim],
            refine: RefineWork::new(dim),
            tmp_m: vec![0.0; m],
            tmp_m2: vec![0.0; m],
            last: Refinement { residual: 0.0, passes: 0, exhausted: false },
        }
    }
}

/// Solution of `K Δξ₁ = [−q; b; h]` into `dxi1` (length `n + p + m`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_b1_into(
    kkt: &KktSystem,
    sym: &SymbolicFactor,
    num: &NumericFactor,
    problem: &ProblemData,
    eps_ir: f64,
    max_passes: usize,
    ws: &mut KktWork,
    dxi1: &mut [f64],
) -> Refinement {
    let (n, p, m) = (kkt.n, kkt.p, kkt.m());
    ws.rhs.fill(0.0);
    for (r, &v) in ws.rhs[..n].iter_mut().zip(problem.q()) {
        *r = -v;
    }
    ws.rhs[n..n + p].copy_from_slice(problem.b());
    ws.rhs[n + p..n + p + m].copy_from_slice(problem.h());
    let out = kkt.solve_into(sym, num, &ws.rhs, &mut ws.sol, eps_ir, max_passes, &mut ws.refine);
    dxi1.copy_from_slice(&ws.sol[..n + p + m]);
    ws.last = out;
    out
}

/// Solution of `K Δξ₂ = [−d_x; d_y; d_z − W(λ \ d_s)]` into `dxi2`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_b2_into(
    kkt: &KktSystem,
    sym: &SymbolicFactor,
    num: &NumericFactor,
    scaling: &NtScaling,
    d: (&[f64], &[f64], &[f64], &[f64]),
    eps_ir: f64,
    max_passes: usize,
    ws: &mut KktWork,
    dxi2: &mut [f64],
) -> Refinement {
    let (n, p, m) = (kkt.n, kkt.p, kkt.m());
    let (dx, dy, dz, ds) = d;
    jordan_inverse_into(scaling.lambda(), ds, &kkt.cone, &mut ws.tmp_m);
    scaling.apply_w_into(&ws.tmp_m, &mut ws.tmp_m2);
    ws.rhs.fill(0.0);
    for (r, &v) in ws.rhs[..n].iter_mut().zip(dx) {
        *r = -v;
    }
    ws.rhs[n..n + p].copy_from_slice(dy);
    for i in 0..m {
        ws.rhs[n + p + i] = dz[i] - ws.tmp_m2[i];
    }
    let out = kkt.solve_into(sym, num, &ws.rhs, &mut ws.sol, eps_ir, max_passes, &mut ws.refine);
    dxi2.copy_from_slice(&ws.sol[..n + p + m]);
    ws.last = out;
    out
}

/// Settings for the refined direction solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementConfig {
    pub eps_ir: f64,
    pub max_passes: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig { eps_ir: 1e-13, max_passes: 10 }
    }
}

/// Solutions of both direction systems sharing the factorization of `K`.
/// Returns `(Δξ₁, Δξ₂, refinement exhausted)` with the auxiliary rows
/// stripped, so each vector has length `n + p + m`.
#[allow(clippy::too_many_arguments)]
pub fn solve_pair(
    kkt: &KktSystem,
    sym: &SymbolicFactor,
    num: &NumericFactor,
    problem: &ProblemData,
    d: (&[f64], &[f64], &[f64], &[f64]),
    scaling: &NtScaling,
    cfg: RefinementConfig,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let (n, p, m) = (kkt.n, kkt.p, kkt.m());
    if d.0.len() != n || d.1.len() != p || d.2.len() != m || d.3.len() != m {
        return Err(Error::Dimension("direction right-hand side has wrong block sizes".into()));
    }
    let mut ws = KktWork::new(kkt);
    let mut xi1 = vec![0.0; n + p + m];
    let mut xi2 = vec![0.0; n + p + m];
    let r1 = solve_b1_into(kkt, sym, num, problem, cfg.eps_ir, cfg.max_passes, &mut ws, &mut xi1);
    let r2 = solve_b2_into(kkt, sym, num, scaling, d, cfg.eps_ir, cfg.max_passes, &mut ws, &mut xi2);
    Ok((xi1, xi2, r1.exhausted || r2.exhausted))
}

/// `Δτ` from the eliminated `τ` row:
///
/// `Δτ = (−d_τ + d_κ/τ + cᵀΔξ₂) / (xᵀQx/τ² + κ/τ − cᵀΔξ₁)` with
/// `c = [q + (2/τ)Qx; b; h]`.
///
/// The denominator equals `(x/τ − Δx₁)ᵀQ(x/τ − Δx₁) + ‖WΔz₁‖² + κ/τ` in exact
/// arithmetic and is therefore positive.
pub fn compute_dtau(
    problem: &ProblemData,
    state: &IterateState,
    dxi1: &[f64],
    dxi2: &[f64],
    d_tau: f64,
    d_kappa: f64,
) -> Result<f64> {
    let mut qx = vec![0.0; problem.n()];
    problem.quad().symv_upper(1.0, &state.x, &mut qx);
    dtau_with_qx(problem, state, &qx, dxi1, dxi2, d_tau, d_kappa)
}

fn dtau_with_qx(
    problem: &ProblemData,
    state: &IterateState,
    qx: &[f64],
    dxi1: &[f64],
    dxi2: &[f64],
    d_tau: f64,
    d_kappa: f64,
) -> Result<f64> {
    let tau = state.tau;
    let xqx: f64 = state.x.iter().zip(qx).map(|(a, b)| a * b).sum();
    let den = xqx / (tau * tau) + state.kappa / tau - c_dot(problem, qx, tau, dxi1);
    dtau_from(problem, state, qx, dxi2, d_tau, d_kappa, den)
}

/// [`compute_dtau`] that falls back to the sign-definite form of the
/// denominator, `(x/τ − Δx₁)ᵀQ(x/τ − Δx₁) + ‖WΔz₁‖² + κ/τ`, when the direct
/// form is not positive. Near the solution `Δξ₁` is large and only
/// approximately solved, and the direct form can lose its sign to
/// cancellation; otherwise it is preferred because it satisfies the
/// `τ` row exactly for the computed `Δξ₁, Δξ₂`.
pub fn compute_dtau_guarded(
    problem: &ProblemData,
    state: &IterateState,
    scaling: &NtScaling,
    dxi1: &[f64],
    dxi2: &[f64],
    d_tau: f64,
    d_kappa: f64,
) -> Result<f64> {
    let mut qx = vec![0.0; problem.n()];
    problem.quad().symv_upper(1.0, &state.x, &mut qx);
    let mut scratch = vec![0.0; problem.m()];
    dtau_guarded_with_qx(problem, state, scaling, &qx, dxi1, dxi2, d_tau, d_kappa, &mut scratch)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn dtau_guarded_with_qx(
    problem: &ProblemData,
    state: &IterateState,
    scaling: &NtScaling,
    qx: &[f64],
    dxi1: &[f64],
    dxi2: &[f64],
    d_tau: f64,
    d_kappa: f64,
    scratch: &mut [f64],
) -> Result<f64> {
    let tau = state.tau;
    let xqx: f64 = state.x.iter().zip(qx).map(|(a, b)| a * b).sum();
    let direct = xqx / (tau * tau) + state.kappa / tau - c_dot(problem, qx, tau, dxi1);
    if direct > 0.0 && direct.is_finite() {
        return dtau_from(problem, state, qx, dxi2, d_tau, d_kappa, direct);
    }
    let (n, p) = (problem.n(), problem.p());
    let quad = problem.quad();
    let v = |i: usize| state.x[i] / tau - dxi1[i];
    let mut vqv = 0.0;
    for c in 0..n {
        let (rows, vals) = quad.col(c);
        for (&r, &q) in rows.iter().zip(vals) {
            let t = q * v(r) * v(c);
            vqv += if r == c { t } else { 2.0 * t };
        }
    }
    scaling.apply_w_into(&dxi1[n + p..], scratch);
    let wdz: f64 = scratch.iter().map(|w| w * w).sum();
    dtau_from(problem, state, qx, dxi2, d_tau, d_kappa, vqv.max(0.0) + wdz + state.kappa / tau)
}

/// `cᵀv` with `c = [q + (2/τ)Qx; b; h]`.
fn c_dot(problem: &ProblemData, qx: &[f64], tau: f64, v: &[f64]) -> f64 {
    let (n, p) = (problem.n(), problem.p());
    let mut s = 0.0;
    for i in 0..n {
        s += (problem.q()[i] + 2.0 / tau * qx[i]) * v[i];
    }
    for i in 0..p {
        s += problem.b()[i] * v[n + i];
    }
    for (i, &hi) in problem.h().iter().enumerate() {
        s += hi * v[n + p + i];
    }
    s
}

fn dtau_from(
    problem: &ProblemData,
    state: &IterateState,
    qx: &[f64],
    dxi2: &[f64],
    d_tau: f64,
    d_kappa: f64,
    den: f64,
) -> Result<f64> {
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Numerical(format!("nonpositive Δτ denominator {den:e}")));
    }
    let tau = state.tau;
    Ok((-d_tau + d_kappa / tau + c_dot(problem, qx, tau, dxi2)) / den)
}

/// Recover `Δs = W(λ \ d_s − WΔz)` and `Δκ = (d_κ − κΔτ)/τ`.
#[allow(clippy::too_many_arguments)]
pub fn recover_ds_dkappa(
    scaling: &NtScaling,
    d_s: &[f64],
    dz: &[f64],
    d_kappa: f64,
    dtau: f64,
    kappa: f64,
    tau: f64,
) -> (Vec<f64>, f64) {
    let m = dz.len();
    let mut ds = vec![0.0; m];
    let mut t1 = vec![0.0; m];
    let mut t2 = vec![0.0; m];
    recover_ds_into(scaling, d_s, dz, &mut ds, &mut t1, &mut t2);
    (ds, (d_kappa - kappa * dtau) / tau)
}

pub(crate) fn recover_ds_into(
    scaling: &NtScaling,
    d_s: &[f64],
    dz: &[f64],
    out: &mut [f64],
    t1: &mut [f64],
    t2: &mut [f64],
) {
    jordan_inverse_into(scaling.lambda(), d_s, scaling.cone(), t1);
    scaling.apply_w_into(dz, t2);
    for i in 0..t1.len() {
        t1[i] -= t2[i];
    }
    scaling.apply_w_into(t1, out);
}
