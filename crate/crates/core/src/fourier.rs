//! Fourier coefficients of indicator functions and large spectra.
//!
//! The transform runs one cyclic factor at a time: for each coordinate the
//! group splits into `|G| / n_j` independent lines of length `n_j`, and each
//! line gets a mixed-radix decimation-in-time FFT (plain `O(n^2)` summation
//! when `n_j` is prime). Lines are transformed in parallel.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{ElementSet, FiniteAbelianGroup};
use crate::par;

/// Relative slack in the spectrum threshold comparison.
pub const THRESHOLD_SLACK: f64 = 1e-9;

static SPECTRA_COMPUTED: AtomicUsize = AtomicUsize::new(0);
static PARSEVAL_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

/// Process-wide `(spectra computed, Parseval bound violations)`.
///
/// Every call to [`spectrum`] checks `|Spec| <= |G| / (eps^2 |A|)` and
/// bumps the violation counter when it fails.
pub fn parseval_audit() -> (usize, usize) {
    (
        SPECTRA_COMPUTED.load(Ordering::Relaxed),
        PARSEVAL_VIOLATIONS.load(Ordering::Relaxed),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    /// `sum_x f(x) gamma(x)`
    Forward,
    /// `sum_gamma F(gamma) conj(gamma(x))`, unnormalised.
    Backward,
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Transform plan for one cyclic factor.
struct LinePlan {
    len: usize,
    factors: Vec<usize>,
    /// `exp(+-2 pi i k / len)`
    twiddles: Vec<Complex64>,
}

impl LinePlan {
    fn new(len: usize, dir: Direction) -> Self {
        let sign = match dir {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let twiddles = (0..len)
            .map(|k| {
                Complex64::from_polar(1.0, sign * std::f64::consts::TAU * k as f64 / len as f64)
            })
            .collect();
        Self {
            len,
            factors: prime_factors(len),
            twiddles,
        }
    }

    fn run(&self, line: &mut [Complex64], scratch: &mut [Complex64]) {
        self.recurse(line, 1, scratch, self.len, 0);
        line.copy_from_slice(scratch);
    }

    /// Writes the length-`len` DFT of `input[0], input[stride], ...` to `out`.
    fn recurse(
        &self,
        input: &[Complex64],
        stride: usize,
        out: &mut [Complex64],
        len: usize,
        depth: usize,
    ) {
        if len == 1 {
            out[0] = input[0];
            return;
        }
        let p = self.factors[depth];
        let m = len / p;
        for r in 0..p {
            self.recurse(
                &input[r * stride..],
                stride * p,
                &mut out[r * m..(r + 1) * m],
                m,
                depth + 1,
            );
        }
        // X[k' + q m] = sum_r w_len^{r (k' + q m)} Y_r[k'], with the p inputs
        // and p outputs for a given k' occupying the same slots of `out`.
        let step = self.len / len;
        let mut ys = vec![Complex64::new(0.0, 0.0); p];
        for k0 in 0..m {
            for (r, y) in ys.iter_mut().enumerate() {
                *y = out[r * m + k0];
            }
            for q in 0..p {
                let k = k0 + q * m;
                let mut acc = ys[0];
                for (r, y) in ys.iter().enumerate().skip(1) {
                    acc += self.twiddles[(r * k * step) % self.len] * y;
                }
                out[k] = acc;
            }
        }
    }
}

/// In-place multidimensional transform over the group's factors.
fn transform(group: &FiniteAbelianGroup, data: &mut [Complex64], dir: Direction) {
    let size = group.size();
    let mut lines = vec![Complex64::new(0.0, 0.0); size];
    for (j, &n) in group.orders().iter().enumerate() {
        let stride = group.stride(j);
        let count = size / n;
        let plan = LinePlan::new(n, dir);
        let base = |l: usize| (l % stride) + (l / stride) * stride * n;
        for l in 0..count {
            let b = base(l);
            for k in 0..n {
                lines[l * n + k] = data[b + k * stride];
            }
        }
        // Group several short lines per task so tiny factors don't drown in
        // scheduling overhead.
        let per_task = (4096 / n).max(1);
        par::for_each_chunk_mut(&mut lines, per_task * n, |chunk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); n];
            for line in chunk.chunks_mut(n) {
                plan.run(line, &mut scratch);
            }
        });
        for l in 0..count {
            let b = base(l);
            for k in 0..n {
                data[b + k * stride] = lines[l * n + k];
            }
        }
    }
}

/// All Fourier coefficients `sum_{x in A} gamma(x)`, indexed by encoded
/// character.
#[derive(Clone, Debug)]
pub struct FourierTable {
    group: FiniteAbelianGroup,
    coeffs: Vec<Complex64>,
    set_size: usize,
}

impl FourierTable {
    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, gamma: usize) -> Complex64 {
        self.coeffs[gamma]
    }

    /// `|A|`.
    pub fn set_size(&self) -> usize {
        self.set_size
    }

    /// `gamma(A) = E_{a in A} gamma(a)`.
    pub fn mean(&self, gamma: usize) -> Complex64 {
        self.coeffs[gamma] / self.set_size as f64
    }

    /// `(|c(gamma)| + |c(-gamma)|) / 2`, which equals `|c(gamma)|` in exact
    /// arithmetic and is exactly symmetric in floating point.
    pub fn symmetric_magnitude(&self, gamma: usize) -> f64 {
        let neg = self.group.neg_index(gamma);
        0.5 * (self.coeffs[gamma].norm() + self.coeffs[neg].norm())
    }

    /// `sum_gamma |c(gamma)|^2`, which Parseval pins to `|A| |G|`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Fourier transform of `1_A`.
pub fn dft(a: &ElementSet) -> Result<FourierTable> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let group = a.group().clone();
    let mut data = vec![Complex64::new(0.0, 0.0); group.size()];
    for i in a.iter() {
        data[i] = Complex64::new(1.0, 0.0);
    }
    transform(&group, &mut data, Direction::Forward);
    // The trivial character sums exactly; pin it against accumulated rounding.
    data[0] = Complex64::new(a.len() as f64, 0.0);
    Ok(FourierTable {
        group,
        coeffs: data,
        set_size: a.len(),
    })
}

/// Inverse transform: `(1/|G|) sum_gamma c(gamma) conj(gamma(x))` for every
/// `x`. Applied to [`dft`] output it recovers the indicator of `A`.
pub fn inverse(table: &FourierTable) -> Vec<Complex64> {
    let mut data = table.coeffs.clone();
    transform(&table.group, &mut data, Direction::Backward);
    let scale = 1.0 / table.group.size() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    data
}

/// `Spec_eps(A)` together with the threshold it was cut at.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSet {
    pub threshold: f64,
    pub base_size: usize,
    members: ElementSet,
}

impl SpectrumSet {
    pub fn members(&self) -> &ElementSet {
        &self.members
    }

    pub fn into_members(self) -> ElementSet {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members().len()
    }

    pub fn is_empty(&self) -> bool {
        self.members().is_empty()
    }
}

fn check_threshold(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::ThresholdOutOfRange(epsilon));
    }
    Ok(())
}

/// `{gamma : |c(gamma)| >= eps |A|}`, with comparison slack
/// `THRESHOLD_SLACK * |A|`.
pub fn spectrum(table: &FourierTable, epsilon: f64) -> Result<SpectrumSet> {
    check_threshold(epsilon)?;
    let size = table.set_size as f64;
    let cut = epsilon * size - THRESHOLD_SLACK * size;
    let mask = par::map_range(table.group.size(), |gamma| {
        table.symmetric_magnitude(gamma) >= cut
    });
    let members = ElementSet::from_mask(&table.group, &mask);

    SPECTRA_COMPUTED.fetch_add(1, Ordering::Relaxed);
    let capacity = parseval_capacity(table.group.size(), table.set_size, epsilon);
    if members.len() as f64 > capacity {
        PARSEVAL_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }

    Ok(SpectrumSet {
        threshold: epsilon,
        base_size: table.set_size,
        members,
    })
}

/// Convenience: `Spec_eps(A)` straight from the set.
pub fn spectrum_of(a: &ElementSet, epsilon: f64) -> Result<SpectrumSet> {
    spectrum(&dft(a)?, epsilon)
}

/// Parseval's bound `|G| / (eps^2 |A|)` on `|Spec_eps(A)|`.
pub fn parseval_capacity(group_size: usize, set_size: usize, epsilon: f64) -> f64 {
    group_size as f64 / (epsilon * epsilon * set_size as f64)
}
