//! Dense complex matrices and the little linear algebra the regularity tests
//! need: products, centering, and a power-iteration estimate of the top
//! singular value.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn<F>(rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> Complex64 + Sync + Send,
    {
        let row_data = par::map_range(rows, |r| (0..cols).map(|c| f(r, c)).collect::<Vec<_>>());
        Self {
            rows,
            cols,
            data: row_data.into_iter().flatten().collect(),
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(1.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }

    /// Average entry; zero for an empty matrix.
    pub fn mean(&self) -> Complex64 {
        if self.data.is_empty() {
            return ZERO;
        }
        self.sum() / self.data.len() as f64
    }

    pub fn column_sums(&self) -> Vec<Complex64> {
        let mut sums = vec![ZERO; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    pub fn row_sums(&self) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.cols);
        par::map_range(self.rows, |r| {
            self.row(r).iter().zip(x).map(|(m, v)| m * v).sum()
        })
    }

    /// `M^T y` (no conjugation).
    pub fn tmul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (r, &w) in y.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(r)) {
                *o += m * w;
            }
        }
        out
    }

    /// `M^H y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (r, &w) in y.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(r)) {
                *o += m.conj() * w;
            }
        }
        out
    }

    /// `P M` with `P = I - (1/rows) 1 1^T`: every column loses its mean.
    pub fn center_rows(&self) -> Self {
        let n = self.rows as f64;
        let means: Vec<Complex64> = self.column_sums().into_iter().map(|s| s / n).collect();
        let mut out = self.clone();
        for r in 0..self.rows {
            for (v, m) in out.data[r * self.cols..(r + 1) * self.cols]
                .iter_mut()
                .zip(&means)
            {
                *v -= m;
            }
        }
        out
    }

    /// `M P` with `P = I - (1/cols) 1 1^T`: every row loses its mean.
    pub fn center_cols(&self) -> Self {
        let n = self.cols as f64;
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            let mean = row.iter().sum::<Complex64>() / n;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        out
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |r, c| self.get(rows[r], cols[c]))
    }

    /// `f^T M g`.
    pub fn bilinear(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        self.mul_vec(g).iter().zip(f).map(|(mg, fv)| mg * fv).sum()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Outcome of [`top_singular_value`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on the Gram matrix of the smaller side.
///
/// Runs from two start vectors (all-ones and a fixed pseudo-random one) and
/// keeps the larger estimate. Stops when successive estimates agree to
/// relative `tol` or after `max_iter` steps.
pub fn top_singular_value(m: &CMatrix, tol: f64, max_iter: usize) -> SingularEstimate {
    if m.rows == 0 || m.cols == 0 {
        return SingularEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let dim = m.cols.min(m.rows);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_51c0);
    let starts = [
        vec![Complex64::new(1.0, 0.0); dim],
        (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    ];
    starts
        .into_iter()
        .map(|v| power_iterate(m, v, tol, max_iter))
        .fold(
            SingularEstimate {
                value: 0.0,
                iterations: 0,
                converged: true,
            },
            |best, e| SingularEstimate {
                value: best.value.max(e.value),
                iterations: best.iterations + e.iterations,
                converged: best.converged && e.converged,
            },
        )
}

fn power_iterate(
    m: &CMatrix,
    mut v: Vec<Complex64>,
    tol: f64,
    max_iter: usize,
) -> SingularEstimate {
    // Iterate on the side whose Gram matrix is smaller.
    let on_cols = m.cols <= m.rows;
    let apply = |v: &[Complex64]| -> (f64, Vec<Complex64>) {
        if on_cols {
            let mv = m.mul_vec(v);
            (norm(&mv), m.adjoint_mul_vec(&mv))
        } else {
            let mhv: Vec<Complex64> = {
                let conj: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
                m.tmul_vec(&conj).into_iter().map(|x| x.conj()).collect()
            };
            (norm(&mhv), m.mul_vec(&mhv))
        }
    };
    if normalize(&mut v) == 0.0 {
        return SingularEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        let (s, mut next) = apply(&v);
        let grew = (s - sigma).abs();
        sigma = s;
        if normalize(&mut next) == 0.0 {
            return SingularEstimate {
                value: s,
                iterations: it,
                converged: true,
            };
        }
        v = next;
        if it > 1 && grew <= tol * sigma {
            return SingularEstimate {
                value: sigma,
                iterations: it,
                converged: true,
            };
        }
    }
    SingularEstimate {
        value: sigma,
        iterations: max_iter,
        converged: false,
    }
}
