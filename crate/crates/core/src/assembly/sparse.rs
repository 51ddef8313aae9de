//! Triplet accumulation and compressed sparse rows.

use std::io::Write;

use crate::{Error, Result};

/// Unordered `(row, col, value)` contributions; duplicates are summed on
/// compression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Triplets {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn extend_scaled(&mut self, other: &Triplets, scale: f64) {
        self.entries.extend(other.entries.iter().map(|&(r, c, v)| (r, c, v * scale)));
    }

    /// Appends `scale * other^T`.
    pub fn extend_transposed(&mut self, other: &Triplets, scale: f64) {
        self.entries.extend(other.entries.iter().map(|&(r, c, v)| (c, r, v * scale)));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Compresses triplets. Duplicates are summed in insertion order, so the
    /// result is bitwise reproducible for a given triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, t: &Triplets) -> Result<Csr> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, v) in &t.entries {
            if r >= nrows || c >= ncols {
                return Err(Error::Internal(format!(
                    "triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Internal(format!("non-finite matrix entry at ({r}, {c})")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // Counting sort by row keeps insertion order inside a row.
        let mut next = counts.clone();
        let mut cols = vec![0usize; t.entries.len()];
        let mut vals = vec![0.0; t.entries.len()];
        for &(r, c, v) in &t.entries {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(t.entries.len());
        let mut values = Vec::with_capacity(t.entries.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&i| cols[i]);
            let mut last = usize::MAX;
            for &i in &order {
                if cols[i] == last {
                    *values.last_mut().unwrap() += vals[i];
                } else {
                    col_idx.push(cols[i]);
                    values.push(vals[i]);
                    last = cols[i];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Csr { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Csr {
        Csr { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(i) => self.values[lo + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows).map(|r| x[r] * self.row(r).map(|(c, v)| v * y[c]).sum::<f64>()).sum()
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Triplets::new();
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(c, r, v);
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, &t).expect("transpose of a valid matrix")
    }

    /// Submatrix on row range `rows` and column range `cols`.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Csr {
        let mut t = Triplets::new();
        for r in rows.clone() {
            for (c, v) in self.row(r) {
                if cols.contains(&c) {
                    t.push(r - rows.start, c - cols.start, v);
                }
            }
        }
        Csr::from_triplets(rows.len(), cols.len(), &t).expect("block of a valid matrix")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            out.extend(self.row(r).map(|(c, v)| (r, c, v)));
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new();
        t.push(1, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 3.0);
        t.push(0, 0, -1.0);
        let m = Csr::from_triplets(2, 2, &t).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(0, 0), -1.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 2.0]), vec![1.0, 5.0]);
    }

    #[test]
    fn out_of_range_is_internal_error() {
        let mut t = Triplets::new();
        t.push(2, 0, 1.0);
        assert!(matches!(Csr::from_triplets(2, 2, &t), Err(Error::Internal(_))));
    }

    #[test]
    fn matrix_market_dump() {
        let mut t = Triplets::new();
        t.push(0, 1, 0.5);
        let m = Csr::from_triplets(2, 2, &t).unwrap();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 5e-1\n");
    }

    proptest! {
        #[test]
        fn compression_matches_dense_sum(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -10.0f64..10.0), 0..60)
        ) {
            let t = Triplets { entries: entries.clone() };
            let m = Csr::from_triplets(6, 5, &t).unwrap();
            let mut dense = [[0.0f64; 5]; 6];
            for &(r, c, v) in &entries {
                dense[r][c] += v;
            }
            for r in 0..6 {
                let cols: Vec<usize> = m.row(r).map(|(c, _)| c).collect();
                prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
                for c in 0..5 {
                    prop_assert!((m.get(r, c) - dense[r][c]).abs() < 1e-12);
                }
            }
            let tt = m.transpose().transpose();
            prop_assert_eq!(tt, m);
        }
    }
}
