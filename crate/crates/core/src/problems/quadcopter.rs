use super::check_size;
use crate::cones::ConeSpec;
use crate::error::Result;
use crate::ipm::ProblemData;
use crate::sparse::SparseCcs;
use std::f64::consts::FRAC_PI_6;

pub const NX: usize = 12;
pub const NU: usize = 4;

// Linearized Crazyflie hover model at Δt = 0.1 s from the OSQP MPC example,
// state order (φ, θ, ψ, x, y, z, φ̇, θ̇, ψ̇, ẋ, ẏ, ż).
#[rustfmt::skip]
const AD_REF: [[f64; NX]; NX] = [
    [1.0,     0.0,     0.0, 0.0, 0.0, 0.0, 0.1,     0.0,     0.0, 0.0,    0.0,    0.0   ],
    [0.0,     1.0,     0.0, 0.0, 0.0, 0.0, 0.0,     0.1,     0.0, 0.0,    0.0,    0.0   ],
    [0.0,     0.0,     1.0, 0.0, 0.0, 0.0, 0.0,     0.0,     0.1, 0.0,    0.0,    0.0   ],
    [0.0488,  0.0,     0.0, 1.0, 0.0, 0.0, 0.0016,  0.0,     0.0, 0.0992, 0.0,    0.0   ],
    [0.0,    -0.0488,  0.0, 0.0, 1.0, 0.0, 0.0,    -0.0016,  0.0, 0.0,    0.0992, 0.0   ],
    [0.0,     0.0,     0.0, 0.0, 0.0, 1.0, 0.0,     0.0,     0.0, 0.0,    0.0,    0.0992],
    [0.0,     0.0,     0.0, 0.0, 0.0, 0.0, 1.0,     0.0,     0.0, 0.0,    0.0,    0.0   ],
    [0.0,     0.0,     0.0, 0.0, 0.0, 0.0, 0.0,     1.0,     0.0, 0.0,    0.0,    0.0   ],
    [0.0,     0.0,     0.0, 0.0, 0.0, 0.0, 0.0,     0.0,     1.0, 0.0,    0.0,    0.0   ],
    [0.9734,  0.0,     0.0, 0.0, 0.0, 0.0, 0.0488,  0.0,     0.0, 0.9846, 0.0,    0.0   ],
    [0.0,    -0.9734,  0.0, 0.0, 0.0, 0.0, 0.0,    -0.0488,  0.0, 0.0,    0.9846, 0.0   ],
    [0.0,     0.0,     0.0, 0.0, 0.0, 0.0, 0.0,     0.0,     0.0, 0.0,    0.0,    0.9846],
];

#[rustfmt::skip]
const BD_REF: [[f64; NU]; NX] = [
    [ 0.0,    -0.0726,  0.0,     0.0726],
    [-0.0726,  0.0,     0.0726,  0.0   ],
    [-0.0152,  0.0152, -0.0152,  0.0152],
    [ 0.0,    -0.0006,  0.0,     0.0006],
    [ 0.0006,  0.0,    -0.0006,  0.0   ],
    [ 0.0106,  0.0106,  0.0106,  0.0106],
    [ 0.0,    -1.4512,  0.0,     1.4512],
    [-1.4512,  0.0,     1.4512,  0.0   ],
    [-0.3049,  0.3049, -0.3049,  0.3049],
    [ 0.0,    -0.0236,  0.0,     0.0236],
    [ 0.0236,  0.0,    -0.0236,  0.0   ],
    [ 0.2107,  0.2107,  0.2107,  0.2107],
];

/// Reference index of each state in the order
/// (position, velocity, attitude, angular rate).
const PERM: [usize; NX] = [3, 4, 5, 9, 10, 11, 0, 1, 2, 6, 7, 8];

/// State-transition matrix in (position, velocity, attitude, rate) order.
pub fn dynamics_a() -> [[f64; NX]; NX] {
    let mut a = [[0.0; NX]; NX];
    for i in 0..NX {
        for j in 0..NX {
            a[i][j] = AD_REF[PERM[i]][PERM[j]];
        }
    }
    a
}

pub fn dynamics_b() -> [[f64; NU]; NX] {
    let mut b = [[0.0; NU]; NX];
    for i in 0..NX {
        b[i] = BD_REF[PERM[i]];
    }
    b
}

pub const STATE_WEIGHTS: [f64; NX] = [10.0, 10.0, 10.0, 5.0, 5.0, 5.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0];
pub const INPUT_WEIGHT: f64 = 0.1;
pub const X_INIT: [f64; NX] = [1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
pub const X_REF: [f64; NX] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
pub const U_MIN: f64 = -0.9916;
pub const U_MAX: f64 = 2.4084;
const Z_MIN: f64 = -1.0;
const TILT_MAX: f64 = FRAC_PI_6;

/// Quadcopter MPC over `N` steps.
///
/// Variables `(x₀, …, x_N, u₀, …, u_{N−1})`. The stage costs
/// `(x − x_r)ᵀQ(x − x_r) + uᵀRu` become `½xᵀ(2Q)x − 2(Qx_r)ᵀx + ½uᵀ(2R)u`
/// (the constant `x_rᵀQx_r` per node is dropped). Inequality rows: per node
/// `z ≥ −1` and `|φ|, |θ| ≤ π/6`, then per step the input box.
pub fn gen_quadcopter_mpc(n_steps: usize) -> Result<ProblemData> {
    check_size(n_steps >= 2, "quadcopter MPC needs N ≥ 2")?;
    let big_n = n_steps;
    let nodes = big_n + 1;
    let xi = |k: usize, i: usize| NX * k + i;
    let ui = |k: usize, j: usize| NX * nodes + NU * k + j;
    let nv = NX * nodes + NU * big_n;
    let (ad, bd) = (dynamics_a(), dynamics_b());

    let mut quad = Vec::new();
    let mut q = vec![0.0; nv];
    for k in 0..nodes {
        for i in 0..NX {
            if STATE_WEIGHTS[i] != 0.0 {
                quad.push((xi(k, i), xi(k, i), 2.0 * STATE_WEIGHTS[i]));
                q[xi(k, i)] = -2.0 * STATE_WEIGHTS[i] * X_REF[i];
            }
        }
    }
    for k in 0..big_n {
        for j in 0..NU {
            quad.push((ui(k, j), ui(k, j), 2.0 * INPUT_WEIGHT));
        }
    }

    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..NX {
        a.push((i, xi(0, i), 1.0));
        b.push(X_INIT[i]);
    }
    for k in 0..big_n {
        let r0 = NX * (k + 1);
        for i in 0..NX {
            a.push((r0 + i, xi(k + 1, i), 1.0));
            for j in 0..NX {
                if ad[i][j] != 0.0 {
                    a.push((r0 + i, xi(k, j), -ad[i][j]));
                }
            }
            for j in 0..NU {
                if bd[i][j] != 0.0 {
                    a.push((r0 + i, ui(k, j), -bd[i][j]));
                }
            }
            b.push(0.0);
        }
    }

    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut row = 0;
    for k in 0..nodes {
        g.push((row, xi(k, 2), -1.0));
        h.push(-Z_MIN);
        row += 1;
        for i in [6, 7] {
            g.push((row, xi(k, i), 1.0));
            g.push((row + 1, xi(k, i), -1.0));
            h.extend([TILT_MAX, TILT_MAX]);
            row += 2;
        }
    }
    for k in 0..big_n {
        for j in 0..NU {
            g.push((row, ui(k, j), 1.0));
            g.push((row + 1, ui(k, j), -1.0));
            h.extend([U_MAX, -U_MIN]);
            row += 2;
        }
    }

    ProblemData::new(
        SparseCcs::from_triplets(nv, nv, &quad)?,
        q,
        SparseCcs::from_triplets(NX * nodes, nv, &a)?,
        b,
        SparseCcs::from_triplets(row, nv, &g)?,
        h,
        ConeSpec::nonnegative(row)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permuted_model_keeps_structure() {
        let a = dynamics_a();
        // position integrates velocity
        for i in 0..3 {
            assert_eq!(a[i][i + 3], 0.0992);
        }
        // thrust acts on vertical velocity equally
        assert_eq!(dynamics_b()[5], [0.2107; 4]);
    }

    #[test]
    fn initial_rows() {
        let p = gen_quadcopter_mpc(15).unwrap();
        assert_eq!(&p.b()[..NX], &X_INIT);
        assert_eq!(p.n(), 12 * 16 + 4 * 15);
        assert_eq!(p.m(), 5 * 16 + 8 * 15);
    }
}
