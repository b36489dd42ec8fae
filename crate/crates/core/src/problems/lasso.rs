use super::{check_size, Rng};
use crate::cones::ConeSpec;
use crate::error::Result;
use crate::ipm::ProblemData;
use crate::sparse::SparseCcs;

/// Density of the data matrix.
pub const DATA_DENSITY: f64 = 0.15;

/// Raw regression data behind a LASSO instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoData {
    /// `m × n` data matrix.
    pub x: SparseCcs,
    pub y: Vec<f64>,
    /// Planted sparse parameter vector.
    pub v: Vec<f64>,
    /// `‖Xᵀȳ‖∞ / 5`.
    pub lambda: f64,
}

/// `λ̄ = ‖Xᵀȳ‖∞ / 5`.
pub fn lasso_weight(x: &SparseCcs, y: &[f64]) -> f64 {
    let mut xty = vec![0.0; x.ncols()];
    x.gemv_t(1.0, y, &mut xty);
    xty.iter().fold(0.0f64, |a, v| a.max(v.abs())) / 5.0
}

pub fn gen_lasso_data(n: usize, m_over_n: usize, seed: u64) -> Result<LassoData> {
    gen_lasso_member(n, m_over_n, seed, seed)
}

/// Members of one family share `pattern_seed` (which fixes the sparsity of
/// `X`) and differ in `value_seed`.
pub fn gen_lasso_member(n: usize, m_over_n: usize, pattern_seed: u64, value_seed: u64) -> Result<LassoData> {
    check_size(n >= 1 && m_over_n >= 1, "lasso needs n ≥ 1 and m/n ≥ 1")?;
    let m = n * m_over_n;
    let mut mask = Rng::new(pattern_seed);
    let mut rng = Rng::new(value_seed).split();
    let mut trip = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if mask.bernoulli(DATA_DENSITY) {
                trip.push((i, j, rng.normal()));
            }
        }
    }
    let x = SparseCcs::from_triplets(m, n, &trip)?;
    let sd = (1.0 / n as f64).sqrt();
    let v: Vec<f64> = (0..n).map(|_| if rng.bernoulli(0.5) { 0.0 } else { sd * rng.normal() }).collect();
    let mut y: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
    x.gemv(1.0, &v, &mut y);
    let lambda = lasso_weight(&x, &y);
    Ok(LassoData { x, y, v, lambda })
}

impl LassoData {
    /// Variables `(θ⁺, θ⁻, r) ∈ ℝⁿ × ℝⁿ × ℝᵐ`; minimizes
    /// `½rᵀr + λ̄𝟏ᵀ(θ⁺ + θ⁻)` subject to `r − X(θ⁺ − θ⁻) = −ȳ`, `θ± ≥ 0`.
    pub fn to_problem(&self) -> Result<ProblemData> {
        let (m, n) = (self.x.nrows(), self.x.ncols());
        let nv = 2 * n + m;
        let quad: Vec<_> = (2 * n..nv).map(|i| (i, i, 1.0)).collect();
        let mut q = vec![0.0; nv];
        q[..2 * n].fill(self.lambda);
        let mut a = Vec::with_capacity(2 * self.x.nnz() + m);
        for (r, c, k) in self.x.entries() {
            let v = self.x.values()[k];
            a.push((r, c, -v));
            a.push((r, n + c, v));
        }
        a.extend((0..m).map(|i| (i, 2 * n + i, 1.0)));
        let b: Vec<f64> = self.y.iter().map(|v| -v).collect();
        let g: Vec<_> = (0..2 * n).map(|i| (i, i, -1.0)).collect();
        ProblemData::new(
            SparseCcs::from_triplets(nv, nv, &quad)?,
            q,
            SparseCcs::from_triplets(m, nv, &a)?,
            b,
            SparseCcs::from_triplets(2 * n, nv, &g)?,
            vec![0.0; 2 * n],
            ConeSpec::nonnegative(2 * n)?,
        )
    }

    /// Recover the regression data from a problem built by [`to_problem`].
    ///
    /// [`to_problem`]: LassoData::to_problem
    pub fn from_problem(p: &ProblemData) -> Option<(SparseCcs, Vec<f64>, f64)> {
        let m = p.p();
        let n = p.m() / 2;
        if p.n() != 2 * n + m || p.m() != 2 * n {
            return None;
        }
        let mut trip = Vec::new();
        for (r, c, k) in p.a().entries() {
            if c < n {
                trip.push((r, c, -p.a().values()[k]));
            }
        }
        let x = SparseCcs::from_triplets(m, n, &trip).ok()?;
        let y = p.b().iter().map(|v| -v).collect();
        Some((x, y, p.q()[0]))
    }
}

/// LASSO regression with `n` parameters and `m = n·m_over_n` samples.
pub fn gen_lasso(n: usize, m_over_n: usize, seed: u64) -> Result<ProblemData> {
    gen_lasso_data(n, m_over_n, seed)?.to_problem()
}
