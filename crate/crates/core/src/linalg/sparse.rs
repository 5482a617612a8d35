use crate::error::{Error, Result};

/// Symmetric sparse matrix in compressed-row layout.
///
/// Both triangles are stored so the product is a single pass over the rows.
/// Every row stores its diagonal entry (possibly an explicit zero) and column
/// indices are strictly increasing within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_starts: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl SparseSymMatrix {
    /// Builds a matrix from raw compressed-row arrays, checking every storage
    /// invariant.
    pub fn from_csr(
        n: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_starts.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: row_starts.len(),
            });
        }
        if col_indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: col_indices.len(),
                got: values.len(),
            });
        }
        if row_starts[0] != 0 || row_starts[n] != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_starts must begin at 0 and end at nnz".into(),
            ));
        }
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = (row_starts[i], row_starts[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_starts decreases at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n {
                    return Err(Error::InvalidStructure(format!(
                        "column index {c} out of range in row {i}"
                    )));
                }
            }
            match cols.binary_search(&i) {
                Ok(k) => diag_pos.push(lo + k),
                Err(_) => {
                    return Err(Error::InvalidStructure(format!(
                        "row {i} has no stored diagonal entry"
                    )))
                }
            }
            if values[lo..hi].iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidStructure(format!(
                    "non-finite value in row {i}"
                )));
            }
        }
        let m = Self {
            n,
            row_starts,
            col_indices,
            values,
            diag_pos,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    /// Builds a matrix from entries given once per unordered pair `{i, j}`
    /// (either orientation). Off-diagonal entries are mirrored and missing
    /// diagonal entries become explicit zeros.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 0.0)]).collect();
        let mut seen_diag = vec![false; n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            if i == j {
                if seen_diag[i] {
                    return Err(Error::InvalidStructure(format!(
                        "duplicate entry ({i}, {i})"
                    )));
                }
                seen_diag[i] = true;
                rows[i][0].1 = v;
            } else {
                rows[i].push((j, v));
                rows[j].push((i, v));
            }
        }
        let mut row_starts = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_starts.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidStructure(format!(
                    "duplicate entry in row {i}"
                )));
            }
            for (c, v) in row {
                col_indices.push(c);
                values.push(v);
            }
            row_starts.push(col_indices.len());
        }
        Self::from_csr(n, row_starts, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            row_starts: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: d.to_vec(),
            diag_pos: (0..n).collect(),
        }
    }

    /// Builds from a dense row-major square array; zeros off the diagonal are
    /// not stored.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for j in 0..=i {
                if rows[j][i] != row[j] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                if i == j || row[j] != 0.0 {
                    entries.push((i, j, row[j]));
                }
            }
        }
        Self::from_triplets(n, entries)
    }

    fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j > i && self.get(j, i) != Some(v) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_starts
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_starts[i]..self.row_starts[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_starts[i]..self.row_starts[i + 1];
        self.col_indices[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.values[r.start + k])
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.values[self.diag_pos[i]]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag_pos.iter().map(|&k| self.values[k]).collect()
    }

    /// Entries of the lower triangle (`j <= i`) in row-major order.
    pub fn lower_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .take_while(move |&(j, _)| j <= i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `A + gamma * I`.
    pub fn shifted(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        for &k in &out.diag_pos {
            out.values[k] += gamma;
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// `out = A v` with rows summed left to right. Lengths are the caller's
    /// responsibility.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.row_starts[i], self.row_starts[i + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * v[self.col_indices[k]];
            }
            *o = acc;
        }
    }

    /// `A 1`, the vector of row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }
}
