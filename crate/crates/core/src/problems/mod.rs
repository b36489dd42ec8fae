//! Seeded benchmark and guidance-and-control problem generators, and the
//! binary instance format.

mod io;
mod lasso;
mod mars;
mod portfolio;
mod quadcopter;
mod rng;

pub use io::{decode_instance, encode_instance, read_instance, write_instance, INSTANCE_VERSION};
pub use lasso::{gen_lasso, gen_lasso_data, gen_lasso_member, lasso_weight, LassoData, DATA_DENSITY};
pub use mars::{gen_mars_landing, gen_mars_landing_with, MarsParams, NODE_VARS};
pub use portfolio::{gen_portfolio, gen_portfolio_member, gen_portfolio_with_risk, FACTOR_DENSITY};
pub use quadcopter::{dynamics_a, dynamics_b, gen_quadcopter_mpc};
pub use rng::Rng;

use crate::error::{Error, Result};

fn check_size(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameters(msg.into()))
    }
}
