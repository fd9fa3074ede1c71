//! The phase-normalised coherence matrix `M(A, Gamma)`.
//!
//! Rows are indexed by `A`, columns by a set of characters `Gamma`, and
//! `M[a, gamma] = gamma(a) * conj(gamma(A)) / |gamma(A)|` where
//! `gamma(A) = E_{a in A} gamma(a)`. Each column is rotated so that its sum
//! `|A| |gamma(A)|` is real and nonnegative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::group::{ElementSet, FiniteAbelianGroup};
use crate::linalg::CMatrix;

/// Columns with `|gamma(A)|` at or below this are rejected.
pub const MIN_COLUMN_MEAN: f64 = 1e-12;

/// Sup-norm slack for [`BoundedFunction`].
pub const SUP_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CoherenceMatrix {
    group: FiniteAbelianGroup,
    rows: Vec<usize>,
    cols: Vec<usize>,
    matrix: CMatrix,
    col_means: Vec<f64>,
}

impl CoherenceMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    /// Encoded elements of `A`, ascending.
    pub fn row_elements(&self) -> &[usize] {
        &self.rows
    }

    /// Encoded characters of `Gamma`, ascending.
    pub fn col_elements(&self) -> &[usize] {
        &self.cols
    }

    /// `|gamma(A)|` per column.
    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn mean_value(&self) -> Complex64 {
        self.matrix.mean()
    }

    /// Row positions mapped back to a subset of `A`.
    pub fn row_set(&self, positions: &[usize]) -> ElementSet {
        ElementSet::from_indices(&self.group, positions.iter().map(|&p| self.rows[p]))
            .expect("row elements are valid indices")
    }

    /// Column positions mapped back to a subset of `Gamma`.
    pub fn col_set(&self, positions: &[usize]) -> ElementSet {
        ElementSet::from_indices(&self.group, positions.iter().map(|&p| self.cols[p]))
            .expect("column elements are valid indices")
    }
}

/// Builds `M(A, Gamma)` from `A`, `Gamma`, and the Fourier table of `A`.
pub fn build_matrix(
    a: &ElementSet,
    gamma: &ElementSet,
    table: &FourierTable,
) -> Result<CoherenceMatrix> {
    let group = a.group();
    for other in [gamma.group(), table.group()] {
        if other != group {
            return Err(Error::GroupMismatch {
                left: group.orders().to_vec(),
                right: other.orders().to_vec(),
            });
        }
    }
    if table.set_size() != a.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: table.set_size(),
        });
    }
    let rows = a.indices();
    let cols = gamma.indices();
    let mut phases = Vec::with_capacity(cols.len());
    let mut col_means = Vec::with_capacity(cols.len());
    for &g in &cols {
        let mean = table.mean(g);
        let size = mean.norm();
        if size <= MIN_COLUMN_MEAN {
            return Err(Error::ZeroMeanColumn {
                gamma: group.decode(g)?.0,
            });
        }
        phases.push(mean.conj() / size);
        col_means.push(size);
    }
    let matrix = CMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        group.char_value_index(cols[c], rows[r]) * phases[c]
    });
    Ok(CoherenceMatrix {
        group: group.clone(),
        rows,
        cols,
        matrix,
        col_means,
    })
}

/// `E_{a, gamma} M[a, gamma]`.
pub fn mean_value(m: &CMatrix) -> Complex64 {
    m.mean()
}

/// Which index set a test function lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Functions on `A`.
    Rows,
    /// Functions on `Gamma`.
    Cols,
}

/// A complex function with sup-norm at most one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedFunction {
    side: Side,
    values: Vec<Complex64>,
}

impl BoundedFunction {
    pub fn new(side: Side, values: Vec<Complex64>) -> Result<Self> {
        let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(sup <= 1.0 + SUP_SLACK) {
            return Err(Error::SupNormExceeded(sup));
        }
        Ok(Self { side, values })
    }

    pub fn constant(side: Side, len: usize, value: Complex64) -> Result<Self> {
        Self::new(side, vec![value; len])
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `<f, 1>`.
    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

/// `f^T M g`.
pub fn bilinear(f: &BoundedFunction, m: &CMatrix, g: &BoundedFunction) -> Result<Complex64> {
    if f.len() != m.rows() {
        return Err(Error::LengthMismatch {
            expected: m.rows(),
            found: f.len(),
        });
    }
    if g.len() != m.cols() {
        return Err(Error::LengthMismatch {
            expected: m.cols(),
            found: g.len(),
        });
    }
    Ok(m.bilinear(f.values(), g.values()))
}
