//! Compressed sparse row matrices.

/// Square or rectangular CSR matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed in
/// insertion order.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, val));
    }

    /// Builds the matrix, dropping entries that summed to exactly zero.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        let n = self.entries.len();
        while k < n {
            let (r, c, mut v) = self.entries[k];
            k += 1;
            while k < n && self.entries[k].0 == r && self.entries[k].1 == c {
                v += self.entries[k].2;
                k += 1;
            }
            if v != 0.0 {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut b = TripletBuilder::new(n, n);
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    /// Builds from a row visitor: `visit(row, emit)` calls `emit(col, coeff)`.
    pub fn from_rows(nrows: usize, ncols: usize, mut visit: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Self {
        let mut b = TripletBuilder::new(nrows, ncols);
        for r in 0..nrows {
            visit(r, &mut |c, v| b.push(r, c, v));
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `r` as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        match self.cols[s..e].binary_search(&c) {
            Ok(k) => self.vals[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let s = self.row_ptr[r];
            let e = self.row_ptr[r + 1];
            let mut acc = 0.0;
            for k in s..e {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = A^T x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                b.push(c, r, v);
            }
        }
        b.build()
    }

    pub fn scaled(&self, a: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// Linear combination `sum_k a_k M_k` of equally shaped matrices.
    pub fn lincomb(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut b = TripletBuilder::new(nrows, ncols);
        for (a, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols), "shape mismatch in lincomb");
            for r in 0..nrows {
                for (c, v) in m.row(r) {
                    b.push(r, c, a * v);
                }
            }
        }
        b.build()
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matmul");
        let mut b = TripletBuilder::new(self.nrows, other.ncols);
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, v) in other.row(k) {
                    b.push(r, c, a * v);
                }
            }
        }
        b.build()
    }

    /// Places `blocks[i][j]` (if present) at block position `(i, j)`.
    pub fn block(blocks: &[Vec<Option<&CsrMatrix>>]) -> CsrMatrix {
        let row_sizes: Vec<usize> = blocks
            .iter()
            .map(|br| br.iter().flatten().next().expect("empty block row").nrows)
            .collect();
        let ncb = blocks[0].len();
        let col_sizes: Vec<usize> = (0..ncb)
            .map(|j| {
                blocks
                    .iter()
                    .find_map(|br| br[j].map(|m| m.ncols))
                    .expect("empty block column")
            })
            .collect();
        let nrows = row_sizes.iter().sum();
        let ncols = col_sizes.iter().sum();
        let mut b = TripletBuilder::new(nrows, ncols);
        let mut r0 = 0;
        for (bi, br) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, m) in br.iter().enumerate() {
                if let Some(m) = m {
                    assert_eq!(m.nrows, row_sizes[bi]);
                    assert_eq!(m.ncols, col_sizes[bj]);
                    for r in 0..m.nrows {
                        for (c, v) in m.row(r) {
                            b.push(r0 + r, c0 + c, v);
                        }
                    }
                }
                c0 += col_sizes[bj];
            }
            r0 += row_sizes[bi];
        }
        b.build()
    }

    /// Dense row-major copy, for small oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    /// Row-sorted `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    /// Replaces row `r` by the unit row `e_r`.
    pub fn with_unit_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut mark = vec![false; self.nrows];
        rows.iter().for_each(|&r| mark[r] = true);
        CsrMatrix::from_rows(self.nrows, self.ncols, |r, emit| {
            if mark[r] {
                emit(r, 1.0);
            } else {
                for (c, v) in self.row(r) {
                    emit(c, v);
                }
            }
        })
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = CsrMatrix::lincomb(&[(1.0, self), (-1.0, &t)]);
        d.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
