use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major compressed sparse matrix of 64-bit floats.
///
/// Column indices are 0-based and strictly increasing within each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> Row<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, a)| a * x[j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|a| a * a).sum()
    }
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn new(
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.is_empty() {
            return Err(Error::InvalidMatrix(
                "row_offsets must have length n_rows + 1".into(),
            ));
        }
        if row_offsets[0] != 0 {
            return Err(Error::InvalidMatrix("row_offsets[0] must be 0".into()));
        }
        let nnz = *row_offsets.last().unwrap();
        if nnz != col_indices.len() || nnz != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "row_offsets ends at {nnz} but there are {} indices and {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for (r, w) in row_offsets.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::InvalidMatrix(format!(
                    "row_offsets decrease at row {r}"
                )));
            }
            let cols = &col_indices[w[0]..w[1]];
            if cols.windows(2).any(|c| c[0] >= c[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "column indices of row {r} are not strictly increasing"
                )));
            }
            if let Some(&last) = cols.last() {
                if last >= n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "row {r} has column {last} but n_cols = {n_cols}"
                    )));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix values"));
        }
        Ok(Self {
            n_rows: row_offsets.len() - 1,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from per-row `(column, value)` lists. Each list must
    /// already be sorted by column.
    pub fn from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        for row in rows {
            for &(j, v) in row {
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Self::new(n_cols, row_offsets, col_indices, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
        Row {
            indices: &self.col_indices[start..end],
            values: &self.values[start..end],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Returns a copy with a wider column dimension.
    pub fn with_n_cols(mut self, n_cols: usize) -> Result<Self> {
        if n_cols < self.n_cols {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink column dimension from {} to {n_cols}",
                self.n_cols
            )));
        }
        self.n_cols = n_cols;
        Ok(self)
    }

    /// Dense row-major copy. Only meant for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|row| {
                let mut dense = vec![0.0; self.n_cols];
                for (j, v) in row.iter() {
                    dense[j] = v;
                }
                dense
            })
            .collect()
    }
}

/// Feature matrix plus one label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: CsrMatrix,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: CsrMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("labels"));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Checks that every label is -1 or +1.
    pub fn check_binary_labels(&self) -> Result<()> {
        match self.labels.iter().position(|&b| b != 1.0 && b != -1.0) {
            Some(i) => Err(Error::InvalidArgument(format!(
                "sample {i} has label {} but classification requires labels in {{-1, +1}}",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn with_n_features(self, n_cols: usize) -> Result<Self> {
        Ok(Self {
            features: self.features.with_n_cols(n_cols)?,
            labels: self.labels,
        })
    }
}
