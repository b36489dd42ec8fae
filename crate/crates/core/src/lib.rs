//! Interior-point solver for quadratic programs over products of
//! nonnegative orthants and second-order cones, with an offline
//! customization step for families of problems sharing one sparsity pattern.

pub mod batch;
pub mod cones;
pub mod custom;
pub mod error;
pub mod ipm;
pub mod kkt;
pub mod problems;
pub mod profile;
pub mod sparse;

pub use custom::{
    analyze_family, deserialize_plan, emit_parsing_info, instantiate, serialize_plan, CustomizationPlan,
    ParsingInfo, ProblemFamily, SolverInstance,
};
pub use error::{Error, Result};
pub use ipm::{solve, MatrixId, ProblemData, Settings, SolveResult, Status};
