//! Homogeneous predictor-corrector interior-point method.
//!
//! Each iteration evaluates residuals and the termination tests, refreshes
//! the Nesterov-Todd scaling, factors the KKT matrix once, and solves it for
//! an affine direction and a centred, second-order-corrected direction.

mod direction;
mod engine;
mod problem;
mod residuals;

pub use direction::{
    duality_measure_after, joint_max_step, mehrotra_sigma, step_and_update, Direction, MIN_STEP,
};
pub use engine::Engine;
pub use problem::{IterateState, MatrixId, ProblemData, ResidualRecord, Settings, SolveResult, Status};
pub use residuals::{check_termination, compute_residuals, residual_record, Residuals};

use crate::custom::{analyze_family, instantiate, CustomizationPlan, ProblemFamily};
use crate::error::Result;

/// Solve one problem. Without a plan the family is analysed on the fly, so
/// the direct and customized paths run the identical iteration.
pub fn solve(problem: &ProblemData, settings: &Settings, plan: Option<&CustomizationPlan>) -> Result<SolveResult> {
    let owned;
    let plan = match plan {
        Some(p) => p,
        None => {
            owned = analyze_family(&ProblemFamily::from_problem(problem))?;
            &owned
        }
    };
    let mut inst = instantiate(plan, settings)?;
    inst.load_instance(problem)?;
    Ok(inst.solve())
}

/// Starting iterate for `problem` (see [`Engine::initialize`]).
pub fn initialize(problem: &ProblemData, settings: &Settings) -> Result<IterateState> {
    let plan = analyze_family(&ProblemFamily::from_problem(problem))?;
    let mut inst = instantiate(&plan, settings)?;
    inst.load_instance(problem)?;
    inst.engine_mut().initialize(problem)?;
    Ok(inst.engine().state().clone())
}
