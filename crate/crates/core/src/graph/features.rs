use ndarray::Array2;

use crate::error::{Error, Result};

/// Node feature matrix stored in compressed sparse row form.
///
/// Bag-of-words and one-hot features are overwhelmingly zero, so products
/// with weight matrices cost `nnz × width` instead of `n × d × width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Features {
    /// Builds from dense rows; every row must have the same length.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    indices.push(j);
                    values.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Features {
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(matrix: &Array2<f64>) -> Self {
        let rows: Vec<Vec<f64>> = matrix.outer_iter().map(|r| r.to_vec()).collect();
        let mut f = Self::from_dense_rows(&rows).expect("rectangular by construction");
        f.ncols = matrix.ncols();
        f
    }

    /// One-hot identity features for featureless graphs.
    pub fn identity(n: usize) -> Self {
        Features {
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Scales every nonzero row to unit sum.
    pub fn row_normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows() {
            let span = self.indptr[i]..self.indptr[i + 1];
            let s: f64 = self.values[span.clone()].iter().sum();
            if s != 0.0 {
                for v in &mut out.values[span] {
                    *v /= s;
                }
            }
        }
        out
    }

    /// Rows selected by `order`; row `k` of the result is row `order[k]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(order.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &i in order {
            for (j, x) in self.row(i) {
                indices.push(j);
                values.push(x);
            }
            indptr.push(indices.len());
        }
        Features {
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.nrows(), self.ncols));
        for i in 0..self.nrows() {
            for (j, x) in self.row(i) {
                m[[i, j]] = x;
            }
        }
        m
    }

    /// `X · W`.
    pub fn matmul(&self, w: &Array2<f64>) -> Array2<f64> {
        assert_eq!(w.nrows(), self.ncols, "feature width mismatch");
        let mut out = Array2::zeros((self.nrows(), w.ncols()));
        for i in 0..self.nrows() {
            let mut dst = out.row_mut(i);
            for (j, x) in self.row(i) {
                dst.scaled_add(x, &w.row(j));
            }
        }
        out
    }

    /// `Xᵀ · G`.
    pub fn transpose_matmul(&self, g: &Array2<f64>) -> Array2<f64> {
        assert_eq!(g.nrows(), self.nrows(), "row count mismatch");
        let mut out = Array2::zeros((self.ncols, g.ncols()));
        for i in 0..self.nrows() {
            let src = g.row(i);
            for (j, x) in self.row(i) {
                out.row_mut(j).scaled_add(x, &src);
            }
        }
        out
    }
}
