//! Solving many independent instances. With the `parallel` feature the work
//! is spread over the rayon pool; otherwise every entry point runs
//! sequentially.

use crate::custom::{instantiate, CustomizationPlan};
use crate::error::Result;
use crate::ipm::{solve, ProblemData, Settings, SolveResult};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Solve each problem independently, in input order.
pub fn solve_many(problems: &[ProblemData], settings: &Settings) -> Vec<Result<SolveResult>> {
    #[cfg(feature = "parallel")]
    {
        problems.par_iter().map(|p| solve(p, settings, None)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        solve_many_sequential(problems, settings)
    }
}

pub fn solve_many_sequential(problems: &[ProblemData], settings: &Settings) -> Vec<Result<SolveResult>> {
    problems.iter().map(|p| solve(p, settings, None)).collect()
}

/// Solve instances of one family, reusing one solver instance per worker.
pub fn solve_family(
    plan: &CustomizationPlan,
    instances: &[ProblemData],
    settings: &Settings,
) -> Result<Vec<Result<SolveResult>>> {
    // Fail early on an invalid plan or settings.
    instantiate(plan, settings)?;
    #[cfg(feature = "parallel")]
    {
        Ok(instances
            .par_iter()
            .map_init(
                || instantiate(plan, settings).expect("validated above"),
                |inst, p| {
                    inst.load_instance(p)?;
                    Ok(inst.solve())
                },
            )
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        solve_family_sequential(plan, instances, settings)
    }
}

pub fn solve_family_sequential(
    plan: &CustomizationPlan,
    instances: &[ProblemData],
    settings: &Settings,
) -> Result<Vec<Result<SolveResult>>> {
    let mut inst = instantiate(plan, settings)?;
    Ok(instances
        .iter()
        .map(|p| {
            inst.load_instance(p)?;
            Ok(inst.solve())
        })
        .collect())
}
