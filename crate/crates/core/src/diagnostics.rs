//! Standalone checks on spectra: statistical doubling, high-threshold
//! closure, sumset statistics, and the two-plane set whose sumset is the
//! whole group.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{dft, spectrum};
use crate::group::{difference_set, sumset, ElementSet, FiniteAbelianGroup};
use crate::par;

/// Ordered-pair count above which [`statistical_doubling`] samples.
pub const EXACT_PAIR_LIMIT: u64 = 10_000_000;

/// Number of samples drawn in sampling mode.
pub const SAMPLE_PAIRS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub epsilon: f64,
    /// `eps^2 / 2`, both the inner threshold and the probability floor.
    pub lower_bound: f64,
    pub spectrum_size: usize,
    pub inner_size: usize,
    pub total_pairs: u64,
    pub hits: u64,
    pub probability: f64,
    /// Exact enumeration, as opposed to sampling.
    pub exact: bool,
    pub seed: u64,
}

impl DoublingReport {
    /// Whether the probability floor holds. Only meaningful in exact mode.
    pub fn holds(&self) -> bool {
        self.probability >= self.lower_bound
    }
}

/// `Pr[gamma1 + gamma2 in Spec_{eps^2/2}(A)]` over ordered pairs drawn from
/// `Spec_eps(A)`.
pub fn statistical_doubling(a: &ElementSet, epsilon: f64, seed: u64) -> Result<DoublingReport> {
    let table = dft(a)?;
    let lower_bound = epsilon * epsilon / 2.0;
    let spec = spectrum(&table, epsilon)?.into_members().indices();
    let inner = spectrum(&table, lower_bound)?.into_members();
    let group = a.group();
    let n = spec.len() as u64;
    let (total_pairs, hits, exact) = if n * n <= EXACT_PAIR_LIMIT {
        let per_row = par::map_slice(&spec, |&x| {
            spec.iter()
                .filter(|&&y| inner.contains(group.add_index(x, y)))
                .count() as u64
        });
        (n * n, per_row.iter().sum(), true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0;
        for _ in 0..SAMPLE_PAIRS {
            let x = spec[rng.gen_range(0..spec.len())];
            let y = spec[rng.gen_range(0..spec.len())];
            if inner.contains(group.add_index(x, y)) {
                hits += 1;
            }
        }
        (SAMPLE_PAIRS, hits, false)
    };
    Ok(DoublingReport {
        epsilon,
        lower_bound,
        spectrum_size: spec.len(),
        inner_size: inner.len(),
        total_pairs,
        hits,
        probability: hits as f64 / total_pairs as f64,
        exact,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub epsilon: f64,
    /// `4 eps - 3`.
    pub inner_threshold: f64,
    pub spectrum_size: usize,
    pub sumset_size: usize,
    pub inner_size: usize,
    /// Pairs `(gamma1, gamma2)` whose sum escapes, as encoded indices.
    pub violations: Vec<(usize, usize)>,
}

impl ClosureReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `Spec_eps + Spec_eps ⊆ Spec_{4 eps - 3}` for `eps > 3/4`.
pub fn high_threshold_closure(a: &ElementSet, epsilon: f64) -> Result<ClosureReport> {
    if !(epsilon > 0.75 && epsilon <= 1.0) {
        return Err(Error::ClosureThreshold(epsilon));
    }
    let table = dft(a)?;
    let inner_threshold = 4.0 * epsilon - 3.0;
    let spec = spectrum(&table, epsilon)?.into_members();
    let inner = spectrum(&table, inner_threshold)?.into_members();
    let sum = sumset(&spec, &spec)?;
    let group = a.group();
    let idx = spec.indices();
    let violations = if sum.is_subset(&inner) {
        Vec::new()
    } else {
        idx.iter()
            .flat_map(|&x| idx.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| !inner.contains(group.add_index(x, y)))
            .collect()
    };
    Ok(ClosureReport {
        epsilon,
        inner_threshold,
        spectrum_size: spec.len(),
        sumset_size: sum.len(),
        inner_size: inner.len(),
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumsetStats {
    pub size: usize,
    pub sum_size: usize,
    pub difference_size: usize,
    /// `|S + S| / |S|`.
    pub doubling: f64,
}

pub fn sumset_stats(s: &ElementSet) -> Result<SumsetStats> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let sum_size = sumset(s, s)?.len();
    Ok(SumsetStats {
        size: s.len(),
        sum_size,
        difference_size: difference_set(s, s)?.len(),
        doubling: sum_size as f64 / s.len() as f64,
    })
}

/// Threshold at which the two-plane set's spectrum is exactly the set.
pub const TWO_PLANE_THRESHOLD: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPlaneCheck {
    pub n: usize,
    pub set_size: usize,
    pub sumset_size: usize,
    pub group_size: usize,
    /// `2^n - 1`, the coefficient at every nonzero element of `A`.
    pub coefficient: f64,
    /// Largest deviation of the computed coefficients on `A \ {0}` from
    /// `2^n - 1`.
    pub coefficient_error: f64,
    pub spectrum_at_threshold: usize,
    /// `Spec_0.4(A) = A`. Characters off `A` have coefficient `-1`, so this
    /// holds exactly when `1 < 0.4 |A| <= 2^n - 1`, i.e. for `n >= 2`.
    pub spectrum_equals_set: bool,
    /// `|Spec_{1/2}(A)|`; only the trivial character survives.
    pub spectrum_at_half: usize,
}

impl TwoPlaneCheck {
    pub fn passed(&self) -> bool {
        self.set_size == (1 << (self.n + 1)) - 1
            && self.sumset_size == self.group_size
            && self.spectrum_equals_set
            && self.coefficient_error < 1e-9 * self.set_size as f64
    }
}

/// `(Z_2^n x {0}) ∪ ({0} x Z_2^n)` inside `Z_2^(2n)`, first `n` coordinates
/// forming the first factor, together with its verified properties.
pub fn example_counterexample(n: usize) -> Result<(ElementSet, TwoPlaneCheck)> {
    if !(1..=10).contains(&n) {
        return Err(Error::CounterexampleRange(n));
    }
    let group = FiniteAbelianGroup::binary(2 * n)?;
    let half = 1usize << n;
    // little-endian encoding: low n bits are the first factor
    let a = ElementSet::from_indices(&group, (0..half).chain((1..half).map(|y| y << n)))?;
    let table = dft(&a)?;
    let coefficient = (half - 1) as f64;
    let coefficient_error = a
        .iter()
        .filter(|&x| x != 0)
        .map(|x| (table.coeff(x).re - coefficient).abs() + table.coeff(x).im.abs())
        .fold(0.0, f64::max);
    let spec = spectrum(&table, TWO_PLANE_THRESHOLD)?.into_members();
    let at_half = spectrum(&table, 0.5)?.len();
    let check = TwoPlaneCheck {
        n,
        set_size: a.len(),
        sumset_size: sumset(&a, &a)?.len(),
        group_size: group.size(),
        coefficient,
        coefficient_error,
        spectrum_at_threshold: spec.len(),
        spectrum_equals_set: spec == a,
        spectrum_at_half: at_half,
    };
    Ok((a, check))
}
