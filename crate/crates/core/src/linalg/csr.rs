use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Zero-valued matrix with the given pattern; each row's columns are sorted
    /// and deduplicated here.
    pub fn from_pattern(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().is_none_or(|&c| c < ncols));
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        let vals = vec![T::zero(); col_idx.len()];
        Self { nrows, ncols, row_ptr, col_idx, vals }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Shape(format!("entry ({r}, {c}) outside {nrows}x{ncols}")));
            }
            rows[r].push(c);
        }
        let mut m = Self::from_pattern(ncols, rows);
        for &(r, c, v) in triplets {
            m.add(r, c, v);
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    #[inline]
    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.position(r, c).map_or(T::zero(), |k| self.vals[k])
    }

    /// Adds `v` to entry `(r, c)`, which must be part of the pattern.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let k = self
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) not in sparsity pattern"));
        self.vals[k] += v;
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut s = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                s += v * x[c];
            }
            *yr = s;
        }
    }

    /// Row `r` of `A x`.
    #[inline]
    pub fn row_dot(&self, r: usize, x: &[T]) -> T {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).fold(T::zero(), |s, (&c, &v)| s + v * x[c])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut vals = vec![T::zero(); self.nnz()];
        for r in 0..self.nrows {
            let (cols, vs) = self.row(r);
            for (&c, &v) in cols.iter().zip(vs) {
                let k = next[c];
                col_idx[k] = r;
                vals[k] = v;
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, vals }
    }

    /// Largest `|a_rc - a_cr|` over the pattern.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (old indices, in the order given).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut new_of = vec![usize::MAX; self.nrows];
        for (k, &old) in keep.iter().enumerate() {
            new_of[old] = k;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut buf: Vec<(usize, T)> = Vec::new();
        for &old in keep {
            buf.clear();
            let (cols, vs) = self.row(old);
            for (&c, &v) in cols.iter().zip(vs) {
                let nc = new_of[c];
                if nc != usize::MAX {
                    buf.push((nc, v));
                }
            }
            buf.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &buf {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows: keep.len(), ncols: keep.len(), row_ptr, col_idx, vals }
    }

    pub fn values(&self) -> &[T] {
        &self.vals
    }
}
