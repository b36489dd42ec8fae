use super::{IterateState, ProblemData, ResidualRecord, Settings, Status};

/// Residuals of the homogeneous embedding at an iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `−Qx − Aᵀy − Gᵀz − qτ`
    pub rx: Vec<f64>,
    /// `Ax − bτ`
    pub ry: Vec<f64>,
    /// `Gx + s − hτ`
    pub rz: Vec<f64>,
    /// `qᵀx + bᵀy + hᵀz + xᵀQx/τ + κ`
    pub rtau: f64,
}

impl Residuals {
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        Residuals { rx: vec![0.0; n], ry: vec![0.0; p], rz: vec![0.0; m], rtau: 0.0 }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn compute_residuals(problem: &ProblemData, state: &IterateState) -> Residuals {
    let mut r = Residuals::zeros(problem.n(), problem.p(), problem.m());
    let mut qx = vec![0.0; problem.n()];
    compute_residuals_into(problem, state, &mut qx, &mut r);
    r
}

/// Residuals into preallocated storage; also leaves `Qx` in `qx`.
pub(crate) fn compute_residuals_into(problem: &ProblemData, state: &IterateState, qx: &mut [f64], r: &mut Residuals) {
    let tau = state.tau;
    qx.fill(0.0);
    problem.quad().symv_upper(1.0, &state.x, qx);

    for i in 0..r.rx.len() {
        r.rx[i] = -qx[i] - problem.q()[i] * tau;
    }
    problem.a().gemv_t(-1.0, &state.y, &mut r.rx);
    problem.g().gemv_t(-1.0, &state.z, &mut r.rx);

    for (ri, bi) in r.ry.iter_mut().zip(problem.b()) {
        *ri = -bi * tau;
    }
    problem.a().gemv(1.0, &state.x, &mut r.ry);

    for i in 0..r.rz.len() {
        r.rz[i] = state.s[i] - problem.h()[i] * tau;
    }
    problem.g().gemv(1.0, &state.x, &mut r.rz);

    r.rtau = dot(problem.q(), &state.x)
        + dot(problem.b(), &state.y)
        + dot(problem.h(), &state.z)
        + dot(&state.x, qx) / tau
        + state.kappa;
}

/// Termination quantities on the τ-descaled iterate.
pub fn residual_record(problem: &ProblemData, state: &IterateState, r: &Residuals) -> ResidualRecord {
    let tau = state.tau;
    let nx = norm2(&state.x) / tau;
    let ny = norm2(&state.y) / tau;
    let nz = norm2(&state.z) / tau;
    let ns = norm2(&state.s) / tau;
    let pres_eq = norm2(&r.ry) / tau / f64::max(1.0, nx + norm2(problem.b()));
    let pres_ineq = norm2(&r.rz) / tau / f64::max(1.0, nx + ns + norm2(problem.h()));
    let dres = norm2(&r.rx) / tau / f64::max(1.0, nx + ny + nz + norm2(problem.q()));
    let sz = dot(&state.s, &state.z) / (tau * tau);
    let pobj = -dot(problem.q(), &state.x) / tau;
    let dobj = -(dot(problem.b(), &state.y) + dot(problem.h(), &state.z)) / tau;
    let gap = sz / f64::max(1.0, pobj.max(dobj));
    ResidualRecord { pres_eq, pres_ineq, dres, gap, mu: state.mu }
}

/// Evaluate the optimality, primal-infeasibility and dual-infeasibility tests
/// in that order. `None` means the iteration continues.
///
/// The infeasibility tests use the raw (un-descaled) iterate. A primal
/// infeasibility certificate needs `bᵀy + hᵀz < −ε_abs`, a dual one
/// `qᵀx < −ε_abs`.
pub fn check_termination(
    problem: &ProblemData,
    state: &IterateState,
    record: &ResidualRecord,
    settings: &Settings,
) -> Option<Status> {
    let mut scratch = TerminationScratch::new(problem.n(), problem.p(), problem.m());
    check_termination_with(problem, state, record, settings, &mut scratch)
}

/// Scratch vectors for the certificate tests.
#[derive(Debug, Clone)]
pub(crate) struct TerminationScratch {
    vn: Vec<f64>,
    vp: Vec<f64>,
    vm: Vec<f64>,
}

impl TerminationScratch {
    pub(crate) fn new(n: usize, p: usize, m: usize) -> Self {
        TerminationScratch { vn: vec![0.0; n], vp: vec![0.0; p], vm: vec![0.0; m] }
    }
}

pub(crate) fn check_termination_with(
    problem: &ProblemData,
    state: &IterateState,
    record: &ResidualRecord,
    settings: &Settings,
    scratch: &mut TerminationScratch,
) -> Option<Status> {
    if record.pres_eq < settings.eps_feas
        && record.pres_ineq < settings.eps_feas
        && record.dres < settings.eps_feas
        && record.gap < settings.eps_gap
    {
        return Some(Status::Optimal);
    }

    let by_hz = dot(problem.b(), &state.y) + dot(problem.h(), &state.z);
    if by_hz < -settings.eps_abs {
        let v = &mut scratch.vn;
        v.fill(0.0);
        problem.a().gemv_t(1.0, &state.y, v);
        problem.g().gemv_t(1.0, &state.z, v);
        let den = f64::max(1.0, norm2(&state.y) + norm2(&state.z));
        if norm2(v) / den < settings.eps_rel {
            return Some(Status::PrimalInfeasible);
        }
    }

    if dot(problem.q(), &state.x) < -settings.eps_abs {
        let nx = norm2(&state.x);
        let den = f64::max(1.0, nx);
        let v = &mut scratch.vn;
        v.fill(0.0);
        problem.quad().symv_upper(1.0, &state.x, v);
        let qx_ok = norm2(v) / den < settings.eps_rel;
        let v = &mut scratch.vp;
        v.fill(0.0);
        problem.a().gemv(1.0, &state.x, v);
        let ax_ok = norm2(v) / den < settings.eps_rel;
        let v = &mut scratch.vm;
        v.copy_from_slice(&state.s);
        problem.g().gemv(1.0, &state.x, v);
        let gx_ok = norm2(v) / f64::max(1.0, nx + norm2(&state.s)) < settings.eps_rel;
        if qx_ok && ax_ok && gx_ok {
            return Some(Status::DualInfeasible);
        }
    }
    None
}
