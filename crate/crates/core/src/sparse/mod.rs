//! Sparse matrix storage and the symmetric indefinite factorization stack.

mod amd;
mod ccs;
mod ldl;

pub use amd::amd_order;
pub use ccs::{ccs_from_triplets, SparseCcs};
pub use ldl::{
    iterative_refinement, ldl_solve, numeric_ldl, refine_in_place, symbolic_ldl, NumericFactor, RefineWork,
    Refinement, SymbolicFactor,
};
