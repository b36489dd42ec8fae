use crate::error::{Error, Result};

/// Compressed-column sparse matrix with sorted, duplicate-free row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCcs {
    nrows: usize,
    ncols: usize,
    col_offsets: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCcs {
    /// Build from raw CCS arrays, validating the canonical form.
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_offsets: Vec<usize>,
        row_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_offsets.len() != ncols + 1 || col_offsets[0] != 0 {
            return Err(Error::Dimension(format!(
                "col_offsets must have length {} and start at 0",
                ncols + 1
            )));
        }
        let nnz = col_offsets[ncols];
        if row_indices.len() != nnz || values.len() != nnz {
            return Err(Error::Dimension(format!(
                "expected {nnz} row indices and values, got {} and {}",
                row_indices.len(),
                values.len()
            )));
        }
        for c in 0..ncols {
            let (lo, hi) = (col_offsets[c], col_offsets[c + 1]);
            if lo > hi {
                return Err(Error::Dimension("col_offsets must be nondecreasing".into()));
            }
            let rows = &row_indices[lo..hi];
            if rows.iter().any(|&r| r >= nrows) {
                return Err(Error::IndexOutOfRange(format!("row index in column {c} exceeds {nrows}")));
            }
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dimension(format!(
                    "row indices of column {c} are not strictly increasing"
                )));
            }
        }
        Ok(SparseCcs { nrows, ncols, col_offsets, row_indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseCcs {
            nrows,
            ncols,
            col_offsets: vec![0; ncols + 1],
            row_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseCcs {
            nrows: n,
            ncols: n,
            col_offsets: (0..=n).collect(),
            row_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Canonical CCS from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::IndexOutOfRange(format!(
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            )));
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_offsets = vec![0; ncols + 1];
        let mut row_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_indices.push(r);
                values.push(v);
                col_offsets[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_offsets[c + 1] += col_offsets[c];
        }
        Ok(SparseCcs { nrows, ncols, col_offsets, row_indices, values })
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>], ncols: usize) -> Self {
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)))
            .collect();
        Self::from_triplets(rows.len(), ncols, &triplets).expect("dense input is in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_indices.len()
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row indices and values of column `c`.
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let r = self.col_offsets[c]..self.col_offsets[c + 1];
        (&self.row_indices[r.clone()], &self.values[r])
    }

    /// Value index of entry `(r, c)` if structurally present.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.col_offsets[c];
        let rows = &self.row_indices[lo..self.col_offsets[c + 1]];
        rows.binary_search(&r).ok().map(|k| lo + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.find(r, c).map_or(0.0, |k| self.values[k])
    }

    /// True when both matrices have identical shape and structure.
    pub fn same_pattern(&self, other: &SparseCcs) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_offsets == other.col_offsets
            && self.row_indices == other.row_indices
    }

    /// Iterator over `(row, col, value_index)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.col_offsets[c]..self.col_offsets[c + 1]).map(move |k| (self.row_indices[k], c, k))
        })
    }

    pub fn transpose(&self) -> SparseCcs {
        let triplets: Vec<_> = self.entries().map(|(r, c, k)| (c, r, self.values[k])).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets).expect("transpose stays in range")
    }

    /// `y += alpha * A x`.
    pub fn gemv(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let xc = alpha * x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.col_offsets[c]..self.col_offsets[c + 1] {
                y[self.row_indices[k]] += self.values[k] * xc;
            }
        }
    }

    /// `y += alpha * A^T x`.
    pub fn gemv_t(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.col_offsets[c]..self.col_offsets[c + 1] {
                acc += self.values[k] * x[self.row_indices[k]];
            }
            y[c] += alpha * acc;
        }
    }

    /// `y += alpha * M x` where `self` stores the upper triangle of a
    /// symmetric `M`.
    pub fn symv_upper(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let mut acc = 0.0;
            let xc = x[c];
            for k in self.col_offsets[c]..self.col_offsets[c + 1] {
                let r = self.row_indices[k];
                let v = self.values[k];
                acc += v * x[r];
                if r != c {
                    y[r] += alpha * v * xc;
                }
            }
            y[c] += alpha * acc;
        }
    }

    /// `x^T M x` for the symmetric matrix whose upper triangle is stored.
    pub fn quad_form_upper(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for c in 0..self.ncols {
            for k in self.col_offsets[c]..self.col_offsets[c + 1] {
                let r = self.row_indices[k];
                let t = self.values[k] * x[r] * x[c];
                s += if r == c { t } else { 2.0 * t };
            }
        }
        s
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.entries().all(|(r, c, _)| r <= c)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, k) in self.entries() {
            d[r][c] += self.values[k];
        }
        d
    }

    /// Dense symmetric matrix reconstructed from a stored upper triangle.
    pub fn to_dense_symmetric(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, k) in self.entries() {
            d[r][c] = self.values[k];
            d[c][r] = self.values[k];
        }
        d
    }
}

/// Canonical CCS from triplets; see [`SparseCcs::from_triplets`].
pub fn ccs_from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<SparseCcs> {
    SparseCcs::from_triplets(nrows, ncols, triplets)
}
