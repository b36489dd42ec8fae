//! The predictor-corrector iteration on preallocated storage.

use std::time::Instant;

use super::direction::{joint_max_step, sigma_from, step_in_place, Direction};
use super::residuals::{check_termination_with, compute_residuals_into, residual_record, Residuals, TerminationScratch};
use super::{IterateState, ProblemData, ResidualRecord, Settings, SolveResult, Status};
use crate::cones::{add_identity, interior_shift, jordan_product_into, ConeSpec, NtScaling};
use crate::error::{Error, Result};
use crate::kkt::{dtau_guarded_with_qx, recover_ds_into, solve_b1_into, solve_b2_into, KktSystem, KktWork};
use crate::sparse::{NumericFactor, SymbolicFactor};

/// Relative depth below which a starting point still gets shifted.
const INTERIOR_MARGIN: f64 = 1e-8;

/// Solver state for one problem family. All vectors are sized at
/// construction; [`Engine::run_status`] performs no heap allocation.
#[derive(Debug, Clone)]
pub struct Engine {
    settings: Settings,
    cone: ConeSpec,
    kkt: KktSystem,
    sym: SymbolicFactor,
    num: NumericFactor,
    unit: NtScaling,
    scaling: NtScaling,
    kws: KktWork,
    state: IterateState,
    prev: IterateState,
    res: Residuals,
    record: ResidualRecord,
    term: TerminationScratch,
    qx: Vec<f64>,
    dxi1: Vec<f64>,
    dxi2: Vec<f64>,
    affine: Direction,
    combined: Direction,
    d_x: Vec<f64>,
    d_y: Vec<f64>,
    d_z: Vec<f64>,
    d_s: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    t3: Vec<f64>,
    sigma: f64,
    alpha: f64,
    iterations: usize,
    refine_exhausted: bool,
}

impl Engine {
    /// `kkt` must have been built for the pattern analysed by `sym`.
    pub fn new(kkt: KktSystem, sym: SymbolicFactor, settings: Settings) -> Result<Self> {
        settings.validate()?;
        if sym.dim() != kkt.dim() || sym.pattern_nnz() != kkt.matrix().nnz() {
            return Err(Error::FamilyMismatch("symbolic factor does not match the KKT pattern".into()));
        }
        let (n, p, m) = (kkt.n(), kkt.p(), kkt.m());
        let cone = kkt.cone().clone();
        let num = NumericFactor::new(&sym);
        let kws = KktWork::new(&kkt);
        let unit = NtScaling::identity(&cone);
        Ok(Engine {
            settings,
            kkt,
            sym,
            num,
            scaling: unit.clone(),
            unit,
            kws,
            state: IterateState::zeros(n, p, m),
            prev: IterateState::zeros(n, p, m),
            res: Residuals::zeros(n, p, m),
            record: ResidualRecord::default(),
            term: TerminationScratch::new(n, p, m),
            qx: vec![0.0; n],
            dxi1: vec![0.0; n + p + m],
            dxi2: vec![0.0; n + p + m],
            affine: Direction::zeros(n, p, m),
            combined: Direction::zeros(n, p, m),
            d_x: vec![0.0; n],
            d_y: vec![0.0; p],
            d_z: vec![0.0; m],
            d_s: vec![0.0; m],
            t1: vec![0.0; m],
            t2: vec![0.0; m],
            t3: vec![0.0; m],
            sigma: 0.0,
            alpha: 0.0,
            iterations: 0,
            refine_exhausted: false,
            cone,
        })
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn set_settings(&mut self, settings: Settings) -> Result<()> {
        settings.validate()?;
        self.settings = settings;
        Ok(())
    }

    pub fn kkt(&self) -> &KktSystem {
        &self.kkt
    }

    pub fn symbolic(&self) -> &SymbolicFactor {
        &self.sym
    }

    /// Copy the numeric values of `problem` into the KKT matrix.
    pub fn load(&mut self, problem: &ProblemData) {
        self.kkt.load_data(problem);
    }

    pub fn state(&self) -> &IterateState {
        &self.state
    }

    /// Iterate at the start of the most recent step.
    pub fn prev_state(&self) -> &IterateState {
        &self.prev
    }

    /// Scaling used by the most recent step (computed at [`Engine::prev_state`]).
    pub fn scaling(&self) -> &NtScaling {
        &self.scaling
    }

    /// Residuals at [`Engine::prev_state`] after a step, or at the current
    /// iterate after termination.
    pub fn residuals(&self) -> &Residuals {
        &self.res
    }

    pub fn record(&self) -> &ResidualRecord {
        &self.record
    }

    pub fn affine(&self) -> &Direction {
        &self.affine
    }

    pub fn combined(&self) -> &Direction {
        &self.combined
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dyn_reg_count(&self) -> usize {
        self.num.dyn_reg_count()
    }

    /// Whether any refined solve so far missed the refinement tolerance.
    pub fn refine_exhausted(&self) -> bool {
        self.refine_exhausted
    }

    /// Total reserved capacity of every workspace vector, in elements.
    /// Constant after construction.
    pub fn workspace_capacity(&self) -> usize {
        let st = |s: &IterateState| s.x.capacity() + s.y.capacity() + s.z.capacity() + s.s.capacity();
        let dir = |d: &Direction| d.dx.capacity() + d.dy.capacity() + d.dz.capacity() + d.ds.capacity();
        st(&self.state)
            + st(&self.prev)
            + self.res.rx.capacity()
            + self.res.ry.capacity()
            + self.res.rz.capacity()
            + self.qx.capacity()
            + self.dxi1.capacity()
            + self.dxi2.capacity()
            + dir(&self.affine)
            + dir(&self.combined)
            + self.d_x.capacity()
            + self.d_y.capacity()
            + self.d_z.capacity()
            + self.d_s.capacity()
            + self.t1.capacity()
            + self.t2.capacity()
            + self.t3.capacity()
            + self.kws.rhs.capacity()
            + self.kws.sol.capacity()
    }

    fn solve_rhs(&mut self) {
        let out = self.kkt.solve_into(
            &self.sym,
            &self.num,
            &self.kws.rhs,
            &mut self.kws.sol,
            self.settings.eps_ir,
            self.settings.max_ir_passes,
            &mut self.kws.refine,
        );
        self.refine_exhausted |= out.exhausted;
    }

    /// Starting point from the regularized least-squares systems with
    /// `W = I`, shifted into the cone interior; `κ = τ = 1`.
    pub fn initialize(&mut self, problem: &ProblemData) -> Result<()> {
        let (n, p, m) = (self.kkt.n(), self.kkt.p(), self.kkt.m());
        self.iterations = 0;
        self.refine_exhausted = false;
        self.kkt.update_scaling(&self.unit);
        self.kkt.factor_into(&self.sym, &mut self.num, self.settings.eps_d, self.settings.delta_d);

        let set_rhs = |rhs: &mut [f64], with_q: bool, with_bh: bool| {
            rhs.fill(0.0);
            if with_q {
                for (r, q) in rhs[..n].iter_mut().zip(problem.q()) {
                    *r = -q;
                }
            }
            if with_bh {
                rhs[n..n + p].copy_from_slice(problem.b());
                rhs[n + p..n + p + m].copy_from_slice(problem.h());
            }
        };

        if problem.has_quadratic() {
            set_rhs(&mut self.kws.rhs, true, true);
            self.solve_rhs();
            let st = &mut self.state;
            let sol = &self.kws.sol;
            st.x.copy_from_slice(&sol[..n]);
            st.y.copy_from_slice(&sol[n..n + p]);
            for i in 0..m {
                st.z[i] = sol[n + p + i];
                st.s[i] = -sol[n + p + i];
            }
        } else {
            set_rhs(&mut self.kws.rhs, false, true);
            self.solve_rhs();
            let sol = &self.kws.sol;
            self.state.x.copy_from_slice(&sol[..n]);
            for i in 0..m {
                self.state.s[i] = -sol[n + p + i];
            }
            set_rhs(&mut self.kws.rhs, true, false);
            self.solve_rhs();
            let sol = &self.kws.sol;
            self.state.y.copy_from_slice(&sol[n..n + p]);
            self.state.z.copy_from_slice(&sol[n + p..n + p + m]);
        }

        // A point interior only up to rounding is treated as on the boundary;
        // keeping it would start from an almost singular scaling.
        for v in [&mut self.state.s, &mut self.state.z] {
            let alpha = interior_shift(v, &self.cone);
            let margin = INTERIOR_MARGIN * v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            if alpha >= -margin {
                add_identity(&self.cone, v, 1.0 + alpha);
            }
        }
        self.state.kappa = 1.0;
        self.state.tau = 1.0;
        self.state.mu = self.state.duality_measure(&self.cone);
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.state.x) && finite(&self.state.y) && finite(&self.state.z) && finite(&self.state.s)) {
            return Err(Error::Numerical("non-finite starting point".into()));
        }
        Ok(())
    }

    /// Evaluate residuals and termination at the current iterate; if the
    /// solve continues, take one predictor-corrector step. Returns the exit
    /// status once the solve is finished.
    pub fn advance(&mut self, problem: &ProblemData) -> Option<Status> {
        compute_residuals_into(problem, &self.state, &mut self.qx, &mut self.res);
        self.record = residual_record(problem, &self.state, &self.res);
        if let Some(status) = check_termination_with(problem, &self.state, &self.record, &self.settings, &mut self.term) {
            return Some(status);
        }
        if self.iterations >= self.settings.max_iter {
            return Some(Status::MaxIterations);
        }
        match self.step(problem) {
            Ok(()) => {
                self.iterations += 1;
                None
            }
            Err(_) => Some(Status::NumericalError),
        }
    }

    /// One predictor-corrector step from the current iterate, whose residuals
    /// must already be in place.
    fn step(&mut self, problem: &ProblemData) -> Result<()> {
        self.prev.clone_from(&self.state);
        self.scaling.update(&self.state.s, &self.state.z)?;
        self.kkt.update_scaling(&self.scaling);
        self.kkt.factor_into(&self.sym, &mut self.num, self.settings.eps_d, self.settings.delta_d);
        let r1 = solve_b1_into(
            &self.kkt,
            &self.sym,
            &self.num,
            problem,
            self.settings.eps_ir,
            self.settings.max_ir_passes,
            &mut self.kws,
            &mut self.dxi1,
        );
        self.refine_exhausted |= r1.exhausted;

        // Affine (pure Newton) direction.
        let (kappa, tau, mu) = (self.state.kappa, self.state.tau, self.state.mu);
        neg_scaled(&self.res.rx, 1.0, &mut self.d_x);
        neg_scaled(&self.res.ry, 1.0, &mut self.d_y);
        neg_scaled(&self.res.rz, 1.0, &mut self.d_z);
        let lam = self.scaling.lambda();
        jordan_product_into(lam, lam, &self.cone, &mut self.d_s);
        self.d_s.iter_mut().for_each(|v| *v = -*v);
        let mut affine = std::mem::take(&mut self.affine);
        let res = self.direction(problem, -self.res.rtau, -kappa * tau, &mut affine);
        self.affine = affine;
        res?;

        let alpha_a = joint_max_step(&self.state, &self.affine, &self.cone).min(1.0);
        self.sigma = sigma_from(&self.state, &self.affine, alpha_a, &self.cone);
        let sigma = self.sigma;

        // Combined direction with centering and second-order correction.
        neg_scaled(&self.res.rx, 1.0 - sigma, &mut self.d_x);
        neg_scaled(&self.res.ry, 1.0 - sigma, &mut self.d_y);
        neg_scaled(&self.res.rz, 1.0 - sigma, &mut self.d_z);
        self.scaling.apply_w_inv_t_into(&self.affine.ds, &mut self.t1);
        self.scaling.apply_w_into(&self.affine.dz, &mut self.t2);
        jordan_product_into(&self.t1, &self.t2, &self.cone, &mut self.t3);
        let lam = self.scaling.lambda();
        jordan_product_into(lam, lam, &self.cone, &mut self.d_s);
        add_identity(&self.cone, &mut self.d_s, -sigma * mu);
        for (d, c) in self.d_s.iter_mut().zip(&self.t3) {
            *d = -(*d + c);
        }
        let d_kappa = -(kappa * tau - sigma * mu + self.affine.dkappa * self.affine.dtau);
        let mut combined = std::mem::take(&mut self.combined);
        let res = self.direction(problem, -(1.0 - sigma) * self.res.rtau, d_kappa, &mut combined);
        self.combined = combined;
        res?;

        self.alpha = step_in_place(&mut self.state, &self.combined, self.settings.step_fraction, &self.cone)?;
        Ok(())
    }

    /// Direction for the current `d_x, d_y, d_z, d_s` and the given `d_τ, d_κ`.
    fn direction(&mut self, problem: &ProblemData, d_tau: f64, d_kappa: f64, dir: &mut Direction) -> Result<()> {
        let (n, p, m) = (self.kkt.n(), self.kkt.p(), self.kkt.m());
        let r2 = solve_b2_into(
            &self.kkt,
            &self.sym,
            &self.num,
            &self.scaling,
            (&self.d_x, &self.d_y, &self.d_z, &self.d_s),
            self.settings.eps_ir,
            self.settings.max_ir_passes,
            &mut self.kws,
            &mut self.dxi2,
        );
        self.refine_exhausted |= r2.exhausted;
        let dtau = dtau_guarded_with_qx(
            problem,
            &self.state,
            &self.scaling,
            &self.qx,
            &self.dxi1,
            &self.dxi2,
            d_tau,
            d_kappa,
            &mut self.t1,
        )?;
        let combine = |out: &mut [f64], off: usize| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.dxi2[off + i] + dtau * self.dxi1[off + i];
            }
        };
        combine(&mut dir.dx[..n], 0);
        combine(&mut dir.dy[..p], n);
        combine(&mut dir.dz[..m], n + p);
        recover_ds_into(&self.scaling, &self.d_s, &dir.dz, &mut dir.ds, &mut self.t1, &mut self.t2);
        dir.dtau = dtau;
        dir.dkappa = (d_kappa - self.state.kappa * dtau) / self.state.tau;
        if !dir.is_finite() {
            return Err(Error::Numerical("non-finite search direction".into()));
        }
        Ok(())
    }

    /// Run the full solve and return only the exit status. Does not allocate.
    pub fn run_status(&mut self, problem: &ProblemData) -> Status {
        if self.initialize(problem).is_err() {
            return Status::NumericalError;
        }
        loop {
            if let Some(status) = self.advance(problem) {
                return status;
            }
        }
    }

    /// Run the full solve.
    pub fn run(&mut self, problem: &ProblemData) -> SolveResult {
        let start = Instant::now();
        let status = self.run_status(problem);
        let elapsed = start.elapsed();
        self.result(problem, status, elapsed)
    }

    /// Package the current iterate: descaled by `τ` unless it is an
    /// infeasibility certificate.
    pub fn result(&self, problem: &ProblemData, status: Status, solve_time: std::time::Duration) -> SolveResult {
        let st = &self.state;
        let certificate = matches!(status, Status::PrimalInfeasible | Status::DualInfeasible);
        let scale = if certificate { 1.0 } else { 1.0 / st.tau };
        let sc = |v: &[f64]| v.iter().map(|x| x * scale).collect::<Vec<_>>();
        let x = sc(&st.x);
        let objective = match status {
            Status::PrimalInfeasible => f64::INFINITY,
            Status::DualInfeasible => f64::NEG_INFINITY,
            _ => problem.objective(&x),
        };
        SolveResult {
            status,
            x,
            s: sc(&st.s),
            y: sc(&st.y),
            z: sc(&st.z),
            kappa: st.kappa,
            tau: st.tau,
            objective,
            iterations: self.iterations,
            residuals: self.record,
            solve_time,
        }
    }
}

fn neg_scaled(src: &[f64], c: f64, dst: &mut [f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = -c * s;
    }
}
