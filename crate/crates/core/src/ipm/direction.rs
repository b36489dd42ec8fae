use super::{IterateState, Settings};
use crate::cones::{max_step, ConeSpec};
use crate::error::{Error, Result};

/// Steps below this are treated as a stalled line search.
pub const MIN_STEP: f64 = 1e-12;

/// Search direction `(Δx, Δy, Δz, Δs, Δτ, Δκ)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
    pub ds: Vec<f64>,
    pub dtau: f64,
    pub dkappa: f64,
}

impl Direction {
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        Direction { dx: vec![0.0; n], dy: vec![0.0; p], dz: vec![0.0; m], ds: vec![0.0; m], dtau: 0.0, dkappa: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        [&self.dx, &self.dy, &self.dz, &self.ds].iter().all(|v| v.iter().all(|x| x.is_finite()))
            && self.dtau.is_finite()
            && self.dkappa.is_finite()
    }
}

/// Largest step keeping `s`, `z` and the pair `(κ, τ)` in the cone interior;
/// `(κ, τ)` behaves like two extra orthant coordinates.
pub fn joint_max_step(state: &IterateState, dir: &Direction, cone: &ConeSpec) -> f64 {
    let mut a = max_step(&state.s, &dir.ds, cone).min(max_step(&state.z, &dir.dz, cone));
    if dir.dkappa < 0.0 {
        a = a.min(-state.kappa / dir.dkappa);
    }
    if dir.dtau < 0.0 {
        a = a.min(-state.tau / dir.dtau);
    }
    a
}

/// Duality measure after a step of length `alpha` along `dir`.
pub fn duality_measure_after(state: &IterateState, dir: &Direction, alpha: f64, cone: &ConeSpec) -> f64 {
    let mut sz = 0.0;
    for i in 0..state.s.len() {
        sz += (state.s[i] + alpha * dir.ds[i]) * (state.z[i] + alpha * dir.dz[i]);
    }
    let kt = (state.kappa + alpha * dir.dkappa) * (state.tau + alpha * dir.dtau);
    (sz + kt) / (cone.cone_count() + 1) as f64
}

/// Mehrotra's centering parameter `σ = clamp((μ_a/μ)³, 0, 1)` where `μ_a` is
/// the duality measure after the largest feasible affine step (capped at 1).
pub fn mehrotra_sigma(state: &IterateState, affine: &Direction, cone: &ConeSpec) -> f64 {
    let alpha = joint_max_step(state, affine, cone).min(1.0);
    sigma_from(state, affine, alpha, cone)
}

pub(crate) fn sigma_from(state: &IterateState, affine: &Direction, alpha: f64, cone: &ConeSpec) -> f64 {
    let mu_a = duality_measure_after(state, affine, alpha, cone);
    let ratio = mu_a / state.duality_measure(cone);
    if ratio.is_nan() {
        return 1.0;
    }
    ratio.powi(3).clamp(0.0, 1.0)
}

/// Take `α = min(1, step_fraction · α_max)` along `dir`. Returns the new state
/// and the step length.
pub fn step_and_update(
    state: &IterateState,
    dir: &Direction,
    settings: &Settings,
    cone: &ConeSpec,
) -> Result<(IterateState, f64)> {
    let mut next = state.clone();
    let alpha = step_in_place(&mut next, dir, settings.step_fraction, cone)?;
    Ok((next, alpha))
}

pub(crate) fn step_in_place(state: &mut IterateState, dir: &Direction, fraction: f64, cone: &ConeSpec) -> Result<f64> {
    let alpha = (fraction * joint_max_step(state, dir, cone)).min(1.0);
    if !(alpha > MIN_STEP) {
        return Err(Error::Numerical(format!("line search stalled (step {alpha:e})")));
    }
    let axpy = |x: &mut [f64], d: &[f64]| x.iter_mut().zip(d).for_each(|(a, b)| *a += alpha * b);
    axpy(&mut state.x, &dir.dx);
    axpy(&mut state.y, &dir.dy);
    axpy(&mut state.z, &dir.dz);
    axpy(&mut state.s, &dir.ds);
    state.tau += alpha * dir.dtau;
    state.kappa += alpha * dir.dkappa;
    state.mu = state.duality_measure(cone);
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(s: Vec<f64>, z: Vec<f64>) -> IterateState {
        let m = s.len();
        let mut st = IterateState::zeros(0, 0, m);
        st.s = s;
        st.z = z;
        st
    }

    #[test]
    fn zero_direction_takes_full_step() {
        let cone = ConeSpec::nonnegative(1).unwrap();
        let st = state(vec![1.0], vec![1.0]);
        let dir = Direction::zeros(0, 0, 1);
        let (next, alpha) = step_and_update(&st, &dir, &Settings::default(), &cone).unwrap();
        assert_eq!(alpha, 1.0);
        assert_eq!(next.s, st.s);
        assert_eq!(next.z, st.z);
    }

    #[test]
    fn orthant_ratio_with_back_off() {
        let cone = ConeSpec::nonnegative(1).unwrap();
        let st = state(vec![1.0], vec![1.0]);
        let mut dir = Direction::zeros(0, 0, 1);
        dir.ds = vec![-2.0];
        let (_, alpha) = step_and_update(&st, &dir, &Settings::default(), &cone).unwrap();
        assert!((alpha - 0.495).abs() < 1e-15);
    }

    #[test]
    fn kappa_can_block() {
        let cone = ConeSpec::nonnegative(1).unwrap();
        let st = state(vec![1.0], vec![1.0]);
        let mut dir = Direction::zeros(0, 0, 1);
        dir.ds = vec![-2.0];
        dir.dkappa = -10.0;
        let (next, alpha) = step_and_update(&st, &dir, &Settings::default(), &cone).unwrap();
        assert!((alpha - 0.099).abs() < 1e-15);
        assert!(next.kappa > 0.0);
    }

    #[test]
    fn sigma_limits() {
        let cone = ConeSpec::nonnegative(1).unwrap();
        let st = state(vec![1.0], vec![1.0]);
        // full step to μ_a = 0
        let mut dir = Direction::zeros(0, 0, 1);
        dir.ds = vec![-1.0];
        dir.dkappa = -1.0;
        assert_eq!(mehrotra_sigma(&st, &dir, &cone), 0.0);
        // zero step: μ_a = μ
        assert_eq!(sigma_from(&st, &dir, 0.0, &cone), 1.0);
    }

    #[test]
    fn stall_is_an_error() {
        let cone = ConeSpec::nonnegative(1).unwrap();
        let st = state(vec![1e-14], vec![1.0]);
        let mut dir = Direction::zeros(0, 0, 1);
        dir.ds = vec![-1.0];
        assert!(step_and_update(&st, &dir, &Settings::default(), &cone).is_err());
    }
}
