//! Up-looking LDLᵀ factorization of symmetric quasi-definite matrices with
//! dynamic pivot regularization, triangular solves and iterative refinement.
//!
//! Only the upper triangle of the input is read. The symbolic phase fixes the
//! permuted pattern, the elimination tree and the exact pattern of `L`; the
//! numeric phase then runs in the storage allocated by
//! [`NumericFactor::new`].

use super::SparseCcs;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Value-independent analysis of a symmetric pattern under a permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicFactor {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    etree: Vec<usize>,
    l_col_offsets: Vec<usize>,
    l_row_indices: Vec<usize>,
    c_col_offsets: Vec<usize>,
    c_row_indices: Vec<usize>,
    /// Position in the permuted matrix of every stored input entry.
    value_map: Vec<usize>,
}

fn check_perm(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut pinv = vec![NONE; n];
    for (k, &i) in perm.iter().enumerate() {
        if i >= n || pinv[i] != NONE {
            return Err(Error::InvalidProblem("not a permutation".into()));
        }
        pinv[i] = k;
    }
    Ok(pinv)
}

/// Symbolic factorization of the symmetric matrix whose upper triangle is
/// `pattern`, reordered by `perm` (`perm[k]` = original index at position `k`).
pub fn symbolic_ldl(pattern: &SparseCcs, perm: &[usize]) -> Result<SymbolicFactor> {
    let n = pattern.ncols();
    if pattern.nrows() != n {
        return Err(Error::NotSquare(pattern.nrows(), n));
    }
    let pinv = check_perm(perm, n)?;

    // Permuted upper triangle C = P M Pᵀ with a map from input entries.
    let mut counts = vec![0usize; n + 1];
    for (r, c, _) in pattern.entries() {
        if r > c {
            return Err(Error::InvalidProblem("pattern must be upper triangular".into()));
        }
        let (a, b) = (pinv[r], pinv[c]);
        counts[a.max(b) + 1] += 1;
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let c_col_offsets = counts.clone();
    let mut next = counts;
    let mut c_rows = vec![0; pattern.nnz()];
    let mut value_map = vec![0; pattern.nnz()];
    for (r, c, k) in pattern.entries() {
        let (a, b) = (pinv[r], pinv[c]);
        let (row, col) = (a.min(b), a.max(b));
        c_rows[next[col]] = row;
        value_map[k] = next[col];
        next[col] += 1;
    }
    // Sort rows within each column, carrying the map along.
    let mut owner = vec![0usize; pattern.nnz()];
    for (k, &pos) in value_map.iter().enumerate() {
        owner[pos] = k;
    }
    for j in 0..n {
        let (lo, hi) = (c_col_offsets[j], c_col_offsets[j + 1]);
        let mut idx: Vec<usize> = (lo..hi).collect();
        idx.sort_by_key(|&p| c_rows[p]);
        let rows: Vec<usize> = idx.iter().map(|&p| c_rows[p]).collect();
        let owners: Vec<usize> = idx.iter().map(|&p| owner[p]).collect();
        for (t, p) in (lo..hi).enumerate() {
            c_rows[p] = rows[t];
            value_map[owners[t]] = p;
        }
    }

    // Elimination tree with path compression.
    let mut etree = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &i0 in &c_rows[c_col_offsets[k]..c_col_offsets[k + 1]] {
            let mut i = i0;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    etree[i] = k;
                }
                i = next;
            }
        }
    }

    // Row patterns of L via elimination-tree reaches; columns fill in
    // increasing row order because rows are visited in order.
    let mut flag = vec![NONE; n];
    let mut col_count = vec![0usize; n];
    let reach = |k: usize, flag: &mut [usize], visit: &mut dyn FnMut(usize)| {
        flag[k] = k;
        for &i0 in &c_rows[c_col_offsets[k]..c_col_offsets[k + 1]] {
            let mut i = i0;
            while i < k && flag[i] != k {
                visit(i);
                flag[i] = k;
                i = etree[i];
            }
        }
    };
    for k in 0..n {
        reach(k, &mut flag, &mut |i| col_count[i] += 1);
    }
    let mut l_col_offsets = vec![0usize; n + 1];
    for j in 0..n {
        l_col_offsets[j + 1] = l_col_offsets[j] + col_count[j];
    }
    let mut l_row_indices = vec![0usize; l_col_offsets[n]];
    let mut fill = l_col_offsets[..n].to_vec();
    flag.fill(NONE);
    for k in 0..n {
        reach(k, &mut flag, &mut |i| {
            l_row_indices[fill[i]] = k;
            fill[i] += 1;
        });
    }

    Ok(SymbolicFactor {
        n,
        perm: perm.to_vec(),
        pinv,
        etree,
        l_col_offsets,
        l_row_indices,
        c_col_offsets,
        c_row_indices: c_rows,
        value_map,
    })
}

impl SymbolicFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_perm(&self) -> &[usize] {
        &self.pinv
    }

    /// Parent of each node in the elimination tree (`None` for roots).
    pub fn etree(&self) -> Vec<Option<usize>> {
        self.etree.iter().map(|&p| (p != NONE).then_some(p)).collect()
    }

    pub fn l_col_offsets(&self) -> &[usize] {
        &self.l_col_offsets
    }

    pub fn l_row_indices(&self) -> &[usize] {
        &self.l_row_indices
    }

    /// Strictly-lower nonzeros of `L`.
    pub fn l_nnz(&self) -> usize {
        self.l_row_indices.len()
    }

    /// Number of entries of the analysed pattern.
    pub fn pattern_nnz(&self) -> usize {
        self.value_map.len()
    }

    /// Entries of `L` not present in the permuted input pattern.
    pub fn fill_in(&self) -> usize {
        let offdiag = (0..self.n)
            .map(|j| {
                self.c_row_indices[self.c_col_offsets[j]..self.c_col_offsets[j + 1]]
                    .iter()
                    .filter(|&&r| r != j)
                    .count()
            })
            .sum::<usize>();
        self.l_nnz() - offdiag
    }

    /// Scratch sizes needed by the numeric phase: `(dense vector, stack)`.
    pub fn workspace_sizes(&self) -> (usize, usize) {
        (self.n, self.n)
    }
}

/// Numeric `L` and `D` for a [`SymbolicFactor`], including the scratch
/// space used to recompute them.
#[derive(Debug, Clone)]
pub struct NumericFactor {
    l_values: Vec<f64>,
    d: Vec<f64>,
    d_inv: Vec<f64>,
    dyn_reg_count: usize,
    c_values: Vec<f64>,
    x: Vec<f64>,
    flag: Vec<usize>,
    stack: Vec<usize>,
    lnext: Vec<usize>,
}

impl NumericFactor {
    /// Allocate storage for factors of `sym`; the values are unset.
    pub fn new(sym: &SymbolicFactor) -> Self {
        let n = sym.n;
        NumericFactor {
            l_values: vec![0.0; sym.l_nnz()],
            d: vec![0.0; n],
            d_inv: vec![0.0; n],
            dyn_reg_count: 0,
            c_values: vec![0.0; sym.c_row_indices.len()],
            x: vec![0.0; n],
            flag: vec![NONE; n],
            stack: vec![0; n],
            lnext: vec![0; n],
        }
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// Pivots in permuted order.
    pub fn d_values(&self) -> &[f64] {
        &self.d
    }

    pub fn dyn_reg_count(&self) -> usize {
        self.dyn_reg_count
    }

    /// Factor the matrix whose stored values (in the analysed pattern's
    /// order) are `values`. `signs` holds the expected pivot sign `±1` of each
    /// original row; pivots with `S_i D_i <= eps_d` are replaced by
    /// `S_i delta_d`.
    pub fn refactor(&mut self, sym: &SymbolicFactor, values: &[f64], signs: &[f64], eps_d: f64, delta_d: f64) {
        let n = sym.n;
        self.c_values.fill(0.0);
        for (k, &v) in values.iter().enumerate() {
            self.c_values[sym.value_map[k]] = v;
        }
        self.flag.fill(NONE);
        self.lnext.copy_from_slice(&sym.l_col_offsets[..n]);
        self.dyn_reg_count = 0;

        for k in 0..n {
            let mut dk = 0.0;
            let mut top = n;
            self.flag[k] = k;
            for p in sym.c_col_offsets[k]..sym.c_col_offsets[k + 1] {
                let i0 = sym.c_row_indices[p];
                if i0 == k {
                    dk += self.c_values[p];
                    continue;
                }
                self.x[i0] = self.c_values[p];
                let mut len = 0;
                let mut i = i0;
                while self.flag[i] != k {
                    self.stack[len] = i;
                    len += 1;
                    self.flag[i] = k;
                    i = sym.etree[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    self.stack[top] = self.stack[len];
                }
            }
            for t in top..n {
                let i = self.stack[t];
                let yi = self.x[i];
                self.x[i] = 0.0;
                for q in sym.l_col_offsets[i]..self.lnext[i] {
                    self.x[sym.l_row_indices[q]] -= self.l_values[q] * yi;
                }
                let lki = yi * self.d_inv[i];
                dk -= yi * lki;
                debug_assert_eq!(sym.l_row_indices[self.lnext[i]], k);
                self.l_values[self.lnext[i]] = lki;
                self.lnext[i] += 1;
            }
            let s = signs[sym.perm[k]];
            if s * dk <= eps_d {
                dk = s * delta_d;
                self.dyn_reg_count += 1;
            }
            self.d[k] = dk;
            self.d_inv[k] = 1.0 / dk;
        }
    }

    /// Solve `M x = b` in place; `work` must have the factor dimension.
    pub fn solve_in_place(&self, sym: &SymbolicFactor, b: &mut [f64], work: &mut [f64]) {
        let n = sym.n;
        for k in 0..n {
            work[k] = b[sym.perm[k]];
        }
        for i in 0..n {
            let wi = work[i];
            if wi != 0.0 {
                for q in sym.l_col_offsets[i]..sym.l_col_offsets[i + 1] {
                    work[sym.l_row_indices[q]] -= self.l_values[q] * wi;
                }
            }
        }
        for i in 0..n {
            work[i] *= self.d_inv[i];
        }
        for i in (0..n).rev() {
            let mut acc = work[i];
            for q in sym.l_col_offsets[i]..sym.l_col_offsets[i + 1] {
                acc -= self.l_values[q] * work[sym.l_row_indices[q]];
            }
            work[i] = acc;
        }
        for k in 0..n {
            b[sym.perm[k]] = work[k];
        }
    }
}

fn check_values(matrix: &SparseCcs, sym: &SymbolicFactor) -> Result<()> {
    if matrix.ncols() != sym.n || matrix.nnz() != sym.pattern_nnz() {
        return Err(Error::Dimension(format!(
            "matrix ({} columns, {} entries) does not match the analysed pattern ({} columns, {} entries)",
            matrix.ncols(),
            matrix.nnz(),
            sym.n,
            sym.pattern_nnz()
        )));
    }
    Ok(())
}

/// Numeric factorization of `matrix` (upper triangle, analysed by `sym`).
pub fn numeric_ldl(
    matrix: &SparseCcs,
    sym: &SymbolicFactor,
    expected_signs: &[f64],
    eps_d: f64,
    delta_d: f64,
) -> Result<NumericFactor> {
    check_values(matrix, sym)?;
    if expected_signs.len() != sym.n {
        return Err(Error::Dimension("expected_signs length differs from dimension".into()));
    }
    let mut num = NumericFactor::new(sym);
    num.refactor(sym, matrix.values(), expected_signs, eps_d, delta_d);
    Ok(num)
}

/// Solve with existing factors.
pub fn ldl_solve(sym: &SymbolicFactor, num: &NumericFactor, rhs: &[f64]) -> Vec<f64> {
    let mut x = rhs.to_vec();
    let mut work = vec![0.0; sym.n];
    num.solve_in_place(sym, &mut x, &mut work);
    x
}

/// Outcome of an iterative refinement run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    /// `‖K x − b‖∞` of the returned iterate.
    pub residual: f64,
    pub passes: usize,
    /// Set when the tolerance was not reached.
    pub exhausted: bool,
}

/// Scratch vectors for [`refine_in_place`].
#[derive(Debug, Clone)]
pub struct RefineWork {
    r: Vec<f64>,
    cand: Vec<f64>,
    rc: Vec<f64>,
    perm: Vec<f64>,
}

impl RefineWork {
    pub fn new(n: usize) -> Self {
        RefineWork { r: vec![0.0; n], cand: vec![0.0; n], rc: vec![0.0; n], perm: vec![0.0; n] }
    }
}

fn residual_into(exact: &SparseCcs, rhs: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    r.copy_from_slice(rhs);
    exact.symv_upper(-1.0, x, r);
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solve `K x = rhs` with the factors of a regularized `K̃`, correcting
/// against the exact `K` until `‖K x − rhs‖∞ < eps_ir` or `max_passes`
/// corrections were made. Convergence need not be monotone, so the
/// iteration is not cut short when a pass increases the residual; the best
/// iterate seen is returned.
#[allow(clippy::too_many_arguments)]
pub fn refine_in_place(
    exact: &SparseCcs,
    sym: &SymbolicFactor,
    num: &NumericFactor,
    rhs: &[f64],
    x: &mut [f64],
    eps_ir: f64,
    max_passes: usize,
    ws: &mut RefineWork,
) -> Refinement {
    x.copy_from_slice(rhs);
    num.solve_in_place(sym, x, &mut ws.perm);
    let mut best = residual_into(exact, rhs, x, &mut ws.r);
    let mut res = best;
    ws.cand.copy_from_slice(x);
    let mut passes = 0;
    while res >= eps_ir && passes < max_passes {
        ws.rc.copy_from_slice(&ws.r);
        num.solve_in_place(sym, &mut ws.rc, &mut ws.perm);
        for (c, d) in ws.cand.iter_mut().zip(&ws.rc) {
            *c += d;
        }
        res = residual_into(exact, rhs, &ws.cand, &mut ws.r);
        passes += 1;
        if res < best {
            best = res;
            x.copy_from_slice(&ws.cand);
        }
    }
    Refinement { residual: best, passes, exhausted: !(best < eps_ir) }
}

/// Allocating wrapper around [`refine_in_place`].
pub fn iterative_refinement(
    exact: &SparseCcs,
    sym: &SymbolicFactor,
    num: &NumericFactor,
    rhs: &[f64],
    eps_ir: f64,
    max_passes: usize,
) -> Result<(Vec<f64>, Refinement)> {
    check_values(exact, sym)?;
    if rhs.len() != sym.n {
        return Err(Error::Dimension("rhs length differs from dimension".into()));
    }
    let mut x = vec![0.0; sym.n];
    let mut ws = RefineWork::new(sym.n);
    let out = refine_in_place(exact, sym, num, rhs, &mut x, eps_ir, max_passes, &mut ws);
    Ok((x, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::amd_order;

    fn upper(rows: &[Vec<f64>]) -> SparseCcs {
        let n = rows.len();
        let t: Vec<_> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter(|&(i, j)| rows[i][j] != 0.0 || i == j)
            .map(|(i, j)| (i, j, rows[i][j]))
            .collect();
        SparseCcs::from_triplets(n, n, &t).unwrap()
    }

    fn ident(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn identity_factor() {
        let m = SparseCcs::identity(4);
        let sym = symbolic_ldl(&m, &ident(4)).unwrap();
        let num = numeric_ldl(&m, &sym, &[1.0; 4], 1e-13, 1e-7).unwrap();
        assert_eq!(sym.l_nnz(), 0);
        assert_eq!(num.d_values(), &[1.0; 4]);
        assert_eq!(num.dyn_reg_count(), 0);
        assert_eq!(ldl_solve(&sym, &num, &[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn dense_two_by_two() {
        let m = upper(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(symbolic_ldl(&m, &ident(2)).unwrap().l_nnz(), 1);
    }

    #[test]
    fn tridiagonal_is_bidiagonal() {
        let m = upper(&[
            vec![2.0, 1.0, 0.0, 0.0],
            vec![1.0, 2.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0, 1.0],
            vec![0.0, 0.0, 1.0, 2.0],
        ]);
        let sym = symbolic_ldl(&m, &ident(4)).unwrap();
        assert_eq!(sym.l_nnz(), 3);
        assert_eq!(sym.l_row_indices(), &[1, 2, 3]);
    }

    #[test]
    fn arrow_orderings() {
        let n = 5;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            rows[i][i] = 4.0;
            rows[0][i] = 1.0;
        }
        let m = upper(&rows);
        let head_last: Vec<usize> = (1..n).chain([0]).collect();
        assert_eq!(symbolic_ldl(&m, &ident(n)).unwrap().fill_in(), 6);
        assert_eq!(symbolic_ldl(&m, &head_last).unwrap().fill_in(), 0);
    }

    #[test]
    fn quasi_definite_two_by_two() {
        let m = upper(&[vec![2.0, 1.0], vec![1.0, -2.0]]);
        let sym = symbolic_ldl(&m, &ident(2)).unwrap();
        let num = numeric_ldl(&m, &sym, &[1.0, -1.0], 1e-13, 1e-7).unwrap();
        assert_eq!(num.l_values(), &[0.5]);
        assert_eq!(num.d_values(), &[2.0, -2.5]);
        let x = ldl_solve(&sym, &num, &[1.0, 0.0]);
        assert!((x[0] - 0.4).abs() < 1e-15 && (x[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn dynamic_regularization_triggers() {
        let m = upper(&[vec![1e-20, 0.0], vec![0.0, -1.0]]);
        let sym = symbolic_ldl(&m, &ident(2)).unwrap();
        let num = numeric_ldl(&m, &sym, &[1.0, -1.0], 1e-13, 1e-7).unwrap();
        assert_eq!(num.d_values(), &[1e-7, -1.0]);
        assert_eq!(num.dyn_reg_count(), 1);
    }

    #[test]
    fn symbolic_ignores_values() {
        let a = upper(&[vec![1.0, 2.0, 0.0], vec![2.0, 1.0, 3.0], vec![0.0, 3.0, 1.0]]);
        let mut b = a.clone();
        b.values_mut().iter_mut().for_each(|v| *v = -*v * 7.0);
        let p = amd_order(&a).unwrap();
        assert_eq!(symbolic_ldl(&a, &p).unwrap(), symbolic_ldl(&b, &p).unwrap());
    }

    #[test]
    fn exact_refinement_needs_no_passes() {
        let m = upper(&[vec![4.0, 1.0], vec![1.0, -3.0]]);
        let sym = symbolic_ldl(&m, &ident(2)).unwrap();
        let num = numeric_ldl(&m, &sym, &[1.0, -1.0], 1e-13, 1e-7).unwrap();
        let (_, out) = iterative_refinement(&m, &sym, &num, &[1.0, 1.0], 1e-13, 10).unwrap();
        assert!(out.passes <= 1);
        assert!(!out.exhausted);
    }

    #[test]
    fn rejects_bad_permutation() {
        let m = SparseCcs::identity(3);
        assert!(symbolic_ldl(&m, &[0, 0, 1]).is_err());
        assert!(symbolic_ldl(&m, &[0, 1]).is_err());
    }
}
