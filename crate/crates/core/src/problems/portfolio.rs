use super::{check_size, Rng};
use crate::cones::ConeSpec;
use crate::error::Result;
use crate::ipm::ProblemData;
use crate::sparse::SparseCcs;

/// Density of the factor-loading matrix.
pub const FACTOR_DENSITY: f64 = 0.7;

/// Factor-model portfolio allocation with `k` factors and `n = k·n_over_k`
/// assets, risk aversion `ρ = 1`.
pub fn gen_portfolio(k: usize, n_over_k: usize, seed: u64) -> Result<ProblemData> {
    gen_portfolio_with_risk(k, n_over_k, 1.0, seed)
}

/// Variables `(ω, ζ) ∈ ℝⁿ × ℝᵏ`; minimizes
/// `½ωᵀΠω + ½ζᵀζ − (1/2ρ) μ̄ᵀω` subject to `ζ = Fᵀω`, `𝟏ᵀω = 1`, `ω ≥ 0`,
/// which is the risk-adjusted return `μ̄ᵀω − ρ ωᵀ(FFᵀ + Π)ω` scaled by
/// `−1/(2ρ)`.
pub fn gen_portfolio_with_risk(k: usize, n_over_k: usize, rho: f64, seed: u64) -> Result<ProblemData> {
    gen_portfolio_member(k, n_over_k, rho, seed, seed)
}

/// Members of one family share `pattern_seed` (which fixes the sparsity of
/// `F`) and differ in `value_seed`.
pub fn gen_portfolio_member(
    k: usize,
    n_over_k: usize,
    rho: f64,
    pattern_seed: u64,
    value_seed: u64,
) -> Result<ProblemData> {
    check_size(k >= 1 && n_over_k >= 1, "portfolio needs k ≥ 1 and n/k ≥ 1")?;
    check_size(rho > 0.0 && rho.is_finite(), "risk aversion must be positive")?;
    let n = k * n_over_k;
    let nv = n + k;
    let mut mask = Rng::new(pattern_seed);
    let mut rng = Rng::new(value_seed).split();

    // F is n×k, sampled column by column.
    let mut f = Vec::new();
    for j in 0..k {
        for i in 0..n {
            if mask.bernoulli(FACTOR_DENSITY) {
                f.push((i, j, rng.normal()));
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, (k as f64).sqrt())).collect();
    let mu: Vec<f64> = (0..n).map(|_| rng.normal()).collect();

    let mut quad = Vec::with_capacity(nv);
    quad.extend(pi.iter().enumerate().map(|(i, &v)| (i, i, v)));
    quad.extend((n..nv).map(|i| (i, i, 1.0)));
    let mut q = vec![0.0; nv];
    for i in 0..n {
        q[i] = -mu[i] / (2.0 * rho);
    }

    // Rows 0..k: ζ − Fᵀω = 0; row k: 𝟏ᵀω = 1.
    let mut a: Vec<(usize, usize, f64)> = f.iter().map(|&(i, j, v)| (j, i, -v)).collect();
    a.extend((0..k).map(|j| (j, n + j, 1.0)));
    a.extend((0..n).map(|i| (k, i, 1.0)));
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;

    let g: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, -1.0)).collect();

    ProblemData::new(
        SparseCcs::from_triplets(nv, nv, &quad)?,
        q,
        SparseCcs::from_triplets(k + 1, nv, &a)?,
        b,
        SparseCcs::from_triplets(n, nv, &g)?,
        vec![0.0; n],
        ConeSpec::nonnegative(n)?,
    )
}
