use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IrregularityWitness;
use crate::coherence::Side;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unit phase of `conj(v)`, or 1 where `v` vanishes.
fn conj_phase(v: Complex64) -> Complex64 {
    let n = v.norm();
    if n > 1e-300 {
        v.conj() / n
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Mean-zero function of sup-norm one maximising `|f^T w|` among two
/// candidates, or all zeros when `w` is constant.
fn centred_response(w: &[Complex64]) -> Vec<Complex64> {
    let n = w.len() as f64;
    let mean = w.iter().sum::<Complex64>() / n;
    let centred: Vec<Complex64> = w.iter().map(|x| x - mean).collect();
    let s = sup(&centred);
    if s <= 1e-300 {
        return vec![ZERO; w.len()];
    }
    // proportional: conj(w - mean) / |w - mean|_inf
    let a: Vec<Complex64> = centred.iter().map(|x| x.conj() / s).collect();
    // phases, projected to mean zero and rescaled
    let phases: Vec<Complex64> = centred.iter().map(|&x| conj_phase(x)).collect();
    let pm = phases.iter().sum::<Complex64>() / n;
    let mut b: Vec<Complex64> = phases.iter().map(|x| x - pm).collect();
    let sb = sup(&b);
    if sb > 1e-300 {
        b.iter_mut().for_each(|x| *x /= sb);
    }
    let score = |f: &[Complex64]| {
        f.iter()
            .zip(w)
            .map(|(x, y)| x * y)
            .sum::<Complex64>()
            .norm()
    };
    if score(&b) > score(&a) {
        b
    } else {
        a
    }
}

/// Exact mean removal plus sup-normalisation; returns zeros when nothing is
/// left.
fn renormalise_centred(f: &mut [Complex64]) {
    let n = f.len() as f64;
    let mean = f.iter().sum::<Complex64>() / n;
    f.iter_mut().for_each(|x| *x -= mean);
    let s = sup(f);
    if s > 1e-300 {
        f.iter_mut().for_each(|x| *x /= s);
    }
}

/// Alternating maximisation with the row side constrained to mean zero.
/// Returns `(value, f, g)` with `value = |f^T M g| / (rows * cols)`.
fn alternate(
    m: &CMatrix,
    mut g: Vec<Complex64>,
    max_alternations: usize,
) -> (f64, Vec<Complex64>, Vec<Complex64>) {
    let cells = (m.rows() * m.cols()) as f64;
    let mut best = (0.0, vec![ZERO; m.rows()], g.clone());
    for _ in 0..max_alternations.max(1) {
        let w = m.mul_vec(&g);
        let mut f = centred_response(&w);
        renormalise_centred(&mut f);
        let u = m.tmul_vec(&f);
        g = u.iter().map(|&x| conj_phase(x)).collect();
        let value = m.bilinear(&f, &g).norm() / cells;
        if value <= best.0 * (1.0 + 1e-12) {
            if value > best.0 {
                best = (value, f, g.clone());
            }
            break;
        }
        best = (value, f, g.clone());
    }
    best
}

/// Search budget for [`witness_search`] and the brute-force tier of
/// [`super::decide_regularity`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegularityBudget {
    pub restarts: usize,
    pub max_alternations: usize,
    /// Exhaustive search runs when the constrained side has at most this
    /// many entries.
    pub brute_force_dim: usize,
    pub brute_force_roots: usize,
    pub brute_force_limit: u128,
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub seed: u64,
}

impl Default for RegularityBudget {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_alternations: 100,
            brute_force_dim: 6,
            brute_force_roots: 2,
            brute_force_limit: 1_000_000,
            power_tol: 1e-8,
            power_max_iter: 1000,
            seed: 0,
        }
    }
}

/// Best witness found by alternating maximisation, regardless of value.
///
/// Both constraint variants run from `restarts` starts each (the first start
/// is the all-ones function, the rest are seeded random phases). Ties go to
/// the lower start index, so the result does not depend on scheduling.
/// `restarts == 0` disables the search.
pub fn witness_search_best(m: &CMatrix, budget: &RegularityBudget) -> Option<IrregularityWitness> {
    if m.rows() == 0 || m.cols() == 0 || budget.restarts == 0 {
        return None;
    }
    let transposed = m.transpose();
    let restarts = budget.restarts;
    let runs = par::map_range(2 * restarts, |k| {
        let side = if k < restarts { Side::Rows } else { Side::Cols };
        let start = k % restarts;
        // The constrained side plays the row role of `alternate`.
        let mat = match side {
            Side::Rows => m,
            Side::Cols => &transposed,
        };
        let free_len = mat.cols();
        let g0: Vec<Complex64> = if start == 0 {
            vec![Complex64::new(1.0, 0.0); free_len]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ ((k as u64) << 32 | 0x77));
            (0..free_len)
                .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
                .collect()
        };
        let (value, c, free) = alternate(mat, g0, budget.max_alternations);
        (value, side, c, free)
    });
    let mut best: Option<(f64, Side, Vec<Complex64>, Vec<Complex64>)> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (value, side, constrained, free) = best?;
    if value <= 0.0 {
        return None;
    }
    let (f, g) = match side {
        Side::Rows => (constrained, free),
        Side::Cols => (free, constrained),
    };
    IrregularityWitness::new(m, f, g, side).ok()
}

/// A witness of value at least `lambda`, if the search finds one.
pub fn witness_search(
    m: &CMatrix,
    lambda: f64,
    budget: &RegularityBudget,
) -> Option<IrregularityWitness> {
    witness_search_best(m, budget).filter(|w| w.value >= lambda)
}

/// Result of [`brute_force_max`].
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    pub f: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub evaluated: u128,
}

/// Exhaustive lower bound on the constrained supremum.
///
/// The constrained side ranges over vectors with entries in the `roots`-th
/// roots of unity or zero and exact zero sum; for each, the free side takes
/// its exact optimum `g = conj phase of (M^T f)`. Every candidate is feasible,
/// so the returned value never exceeds the true supremum.
pub fn brute_force_max(m: &CMatrix, roots: usize, side: Side, limit: u128) -> Result<BruteForce> {
    let mat = match side {
        Side::Rows => m.clone(),
        Side::Cols => m.transpose(),
    };
    let n = mat.rows();
    let base = roots as u128 + 1;
    let needed = base.checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > limit {
        return Err(Error::BudgetExceeded {
            needed,
            budget: limit,
        });
    }
    let cells = (mat.rows() * mat.cols()).max(1) as f64;
    // grid[0] = 0, grid[k] = exp(2 pi i (k-1) / roots)
    let grid: Vec<Complex64> =
        std::iter::once(ZERO)
            .chain((0..roots).map(|k| {
                Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / roots as f64)
            }))
            .collect();
    let b = grid.len();
    let evaluate = |digits: &[usize]| -> Option<(f64, Vec<Complex64>)> {
        let f: Vec<Complex64> = digits.iter().map(|&d| grid[d]).collect();
        if f.iter().sum::<Complex64>().norm() > 1e-9 {
            return None;
        }
        let u = mat.tmul_vec(&f);
        Some((u.iter().map(|x| x.norm()).sum::<f64>() / cells, f))
    };
    // Split on the first digit for parallelism; odometer over the rest.
    let heads = if n == 0 { 1 } else { b };
    let partial = par::map_range(heads, |head| {
        let mut digits = vec![0usize; n];
        if n > 0 {
            digits[0] = head;
        }
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        let mut count: u128 = 0;
        loop {
            count += 1;
            if let Some((v, f)) = evaluate(&digits) {
                if best.as_ref().is_none_or(|bst| v > bst.0) {
                    best = Some((v, f));
                }
            }
            let mut pos = 1;
            while pos < n {
                digits[pos] += 1;
                if digits[pos] < b {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos >= n {
                break;
            }
        }
        (best, count)
    });
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    let mut evaluated = 0;
    for (cand, count) in partial {
        evaluated += count;
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|bst| c.0 > bst.0) {
                best = Some(c);
            }
        }
    }
    let (value, constrained) = best.unwrap_or((0.0, vec![ZERO; n]));
    let free: Vec<Complex64> = mat
        .tmul_vec(&constrained)
        .iter()
        .map(|&x| conj_phase(x))
        .collect();
    let (f, g) = match side {
        Side::Rows => (constrained, free),
        Side::Cols => (free, constrained),
    };
    Ok(BruteForce {
        value,
        f,
        g,
        evaluated,
    })
}

impl BruteForce {
    pub fn into_witness(self, m: &CMatrix, side: Side) -> Result<IrregularityWitness> {
        IrregularityWitness::new(m, self.f, self.g, side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_sign(n: usize) -> CMatrix {
        let half = n / 2;
        CMatrix::from_fn(n, n, |r, c| {
            let s = if (r < half) == (c < half) { 1.0 } else { -1.0 };
            Complex64::new(s, 0.0)
        })
    }

    #[test]
    fn block_sign_brute_force_is_one() {
        let m = block_sign(4);
        for side in [Side::Rows, Side::Cols] {
            let b = brute_force_max(&m, 2, side, 1_000_000).unwrap();
            assert!((b.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ones_brute_force_is_zero() {
        let b = brute_force_max(&CMatrix::ones(3, 3), 2, Side::Rows, 1_000_000).unwrap();
        assert!(b.value < 1e-12);
        assert!(witness_search(&CMatrix::ones(3, 3), 1e-6, &RegularityBudget::default()).is_none());
    }

    #[test]
    fn brute_force_budget() {
        assert!(matches!(
            brute_force_max(&CMatrix::ones(20, 2), 4, Side::Rows, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn block_sign_witness() {
        let m = block_sign(6);
        let w = witness_search(&m, 0.5, &RegularityBudget::default()).unwrap();
        assert!(w.value >= 0.5);
        assert!((w.value - 1.0).abs() < 1e-9);
    }
}
