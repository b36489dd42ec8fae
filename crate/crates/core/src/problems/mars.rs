use super::check_size;
use crate::cones::ConeSpec;
use crate::error::Result;
use crate::ipm::ProblemData;
use crate::sparse::SparseCcs;

/// Powered-descent parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarsParams {
    pub x_init: [f64; 6],
    /// Minimum and maximum thrust.
    pub rho1: f64,
    pub rho2: f64,
    pub g0: f64,
    pub theta_max: f64,
    pub m_dry: f64,
    pub m_wet: f64,
    /// Fuel depletion rate.
    pub alpha: f64,
}

impl Default for MarsParams {
    fn default() -> Self {
        MarsParams {
            x_init: [200.0, 0.0, 800.0, -35.0, 0.0, -75.0],
            rho1: 7440.0,
            rho2: 18600.0,
            g0: 3.7114,
            theta_max: std::f64::consts::PI / 12.0,
            m_dry: 1505.0,
            m_wet: 1905.0,
            alpha: 4.53e-4,
        }
    }
}

/// Variables per node: position/velocity (6), log-mass, thrust acceleration
/// (3), thrust slack.
pub const NODE_VARS: usize = 11;
const Z: usize = 6;
const U: usize = 7;
const SIGMA: usize = 10;

/// Fuel-optimal Mars landing with `N` intervals over `tf` seconds.
pub fn gen_mars_landing(n_nodes: usize, tf: f64) -> Result<ProblemData> {
    gen_mars_landing_with(n_nodes, tf, &MarsParams::default())
}

/// Maximizes final log-mass subject to double-integrator dynamics under
/// gravity, linearized thrust bounds, `‖u_k‖ ≤ σ_k`, a pointing cone and the
/// dry-mass floor.
///
/// Equality rows: `6N` position/velocity dynamics, `N` mass dynamics, then
/// the boundary conditions `x₀`, `z₀` and `x_N = 0` (13 rows). Inequality
/// rows: per node the lower and upper thrust bounds and the pointing row,
/// then `z_N ≥ ln m_dry`, then one 4-dimensional cone `[σ_k; u_k]` per node.
pub fn gen_mars_landing_with(n_nodes: usize, tf: f64, prm: &MarsParams) -> Result<ProblemData> {
    check_size(n_nodes >= 2, "mars landing needs N ≥ 2")?;
    check_size(tf > 0.0 && tf.is_finite(), "flight time must be positive")?;
    let big_n = n_nodes;
    let nodes = big_n + 1;
    let nv = NODE_VARS * nodes;
    let v = |k: usize, j: usize| NODE_VARS * k + j;
    let dt = tf / big_n as f64;
    let grav = [0.0, 0.0, -0.5 * prm.g0 * dt * dt, 0.0, 0.0, -prm.g0 * dt];

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = 0;
    for k in 0..big_n {
        for i in 0..6 {
            a.push((row + i, v(k + 1, i), 1.0));
            a.push((row + i, v(k, i), -1.0));
            if i < 3 {
                a.push((row + i, v(k, i + 3), -dt));
                a.push((row + i, v(k, U + i), -0.5 * dt * dt));
            } else {
                a.push((row + i, v(k, U + i - 3), -dt));
            }
            b.push(grav[i]);
        }
        row += 6;
    }
    for k in 0..big_n {
        a.push((row, v(k + 1, Z), 1.0));
        a.push((row, v(k, Z), -1.0));
        a.push((row, v(k, SIGMA), prm.alpha * dt));
        b.push(0.0);
        row += 1;
    }
    for i in 0..6 {
        a.push((row, v(0, i), 1.0));
        b.push(prm.x_init[i]);
        row += 1;
    }
    a.push((row, v(0, Z), 1.0));
    b.push(prm.m_wet.ln());
    row += 1;
    for i in 0..6 {
        a.push((row, v(big_n, i), 1.0));
        b.push(0.0);
        row += 1;
    }
    let p = row;

    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut row = 0;
    let cos_t = prm.theta_max.cos();
    for k in 0..nodes {
        let z0 = (prm.m_wet - prm.alpha * prm.rho2 * k as f64 * dt).ln();
        let mu1 = prm.rho1 * (-z0).exp();
        let mu2 = prm.rho2 * (-z0).exp();
        // μ₁(1 − (z − z₀)) ≤ σ
        g.push((row, v(k, Z), -mu1));
        g.push((row, v(k, SIGMA), -1.0));
        h.push(-mu1 * (1.0 + z0));
        // σ ≤ μ₂(1 − (z − z₀))
        g.push((row + 1, v(k, Z), mu2));
        g.push((row + 1, v(k, SIGMA), 1.0));
        h.push(mu2 * (1.0 + z0));
        // e₃ᵀu ≥ σ cos θ_max
        g.push((row + 2, v(k, SIGMA), cos_t));
        g.push((row + 2, v(k, U + 2), -1.0));
        h.push(0.0);
        row += 3;
    }
    g.push((row, v(big_n, Z), -1.0));
    h.push(-prm.m_dry.ln());
    row += 1;
    let l = row;
    for k in 0..nodes {
        g.push((row, v(k, SIGMA), -1.0));
        for i in 0..3 {
            g.push((row + 1 + i, v(k, U + i), -1.0));
        }
        h.extend([0.0; 4]);
        row += 4;
    }
    let m = row;

    let mut q = vec![0.0; nv];
    q[v(big_n, Z)] = -1.0;
    ProblemData::new(
        SparseCcs::zeros(nv, nv),
        q,
        SparseCcs::from_triplets(p, nv, &a)?,
        b,
        SparseCcs::from_triplets(m, nv, &g)?,
        h,
        ConeSpec::new(l, vec![4; nodes])?,
    )
}
