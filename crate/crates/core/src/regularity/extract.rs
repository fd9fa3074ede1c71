use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::step::{step_approximate, StepFunction};
use super::IrregularityWitness;
use crate::coherence::CoherenceMatrix;
use crate::error::{Error, Result};
use crate::group::ElementSet;
use crate::linalg::CMatrix;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Accuracy `lambda/8`, worst-case pair selection, asserted size and
    /// improvement bounds.
    Faithful,
    /// Accuracy `value/8` and the best quadrant over every piece pair.
    Opportunistic,
}

/// Constants in the extraction guarantee: a piece pair carries mass at least
/// `c1 lambda^5 |A| |Gamma|`, and the chosen minor has sides and mean gain at
/// least `c lambda^15` (relative sizes) and `(c/2) lambda^15`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConstants {
    pub c1: f64,
    pub c: f64,
}

impl Default for ExtractionConstants {
    fn default() -> Self {
        // k <= 100/eta^2 = 6400/lambda^2 pieces per side, so lambda/(2 k^2)
        // >= lambda^5 / (2 * 6400^2); c = c1^3/4 makes c1^2 - 2c/c1 > 0.
        let c1 = 1.0 / (2.0 * 6400.0 * 6400.0);
        Self {
            c1,
            c: c1 * c1 * c1 / 4.0,
        }
    }
}

/// The four quadrants around a piece pair `(A_i, Gamma_j)`, in tie-break
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    InIn,
    InOut,
    OutIn,
    OutOut,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::InIn,
        Quadrant::InOut,
        Quadrant::OutIn,
        Quadrant::OutOut,
    ];

    fn takes(self) -> (bool, bool) {
        match self {
            Quadrant::InIn => (true, true),
            Quadrant::InOut => (true, false),
            Quadrant::OutIn => (false, true),
            Quadrant::OutOut => (false, false),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorExtraction {
    /// Row positions of `A'` within `A`, ascending.
    pub rows: Vec<usize>,
    /// Column positions of `Gamma'` within `Gamma`, ascending.
    pub cols: Vec<usize>,
    pub old_mean: f64,
    /// `|E[M(A', Gamma')]|`, recomputed from the submatrix.
    pub new_mean: f64,
    pub improvement: f64,
    pub size_ratios: (f64, f64),
    pub eta: f64,
    pub row_pieces: usize,
    pub col_pieces: usize,
    /// Piece indices `(i, j)` the quadrant split is taken around.
    pub pair: (usize, usize),
    pub quadrant: Quadrant,
    /// Sums of `M - E[M] J` over the four quadrants; they add up to zero.
    pub alpha: [Complex64; 4],
    /// Cell counts of the four quadrants; they add up to `|A| |Gamma|`.
    pub beta: [f64; 4],
}

impl MinorExtraction {
    /// `(A', Gamma')` as element sets.
    pub fn to_sets(&self, cm: &CoherenceMatrix) -> (ElementSet, ElementSet) {
        (cm.row_set(&self.rows), cm.col_set(&self.cols))
    }
}

struct PairStats {
    sums: [Complex64; 4],
    cells: [f64; 4],
    sides: [(usize, usize); 4],
}

fn positions(labels: &[usize], piece: usize, inside: bool) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l == piece) == inside)
        .map(|(p, _)| p)
        .collect()
}

/// Builds a minor with larger mean modulus from a witness of irregularity.
///
/// The matrix is rotated so its mean `rho` is real and nonnegative, `f` and
/// `g` are replaced by step functions, and the sums of `M` over products of
/// pieces are aggregated. Around a chosen piece pair the four quadrants
/// `{A_i, A_i^c} x {Gamma_j, Gamma_j^c}` are evaluated and the one with the
/// largest `|mean|` is returned (ties: larger smaller side, then quadrant
/// order).
pub fn extract_minor(
    m: &CMatrix,
    witness: &IrregularityWitness,
    lambda: f64,
    mode: ExtractionMode,
    constants: &ExtractionConstants,
) -> Result<MinorExtraction> {
    if witness.value < lambda || !(lambda > 0.0) {
        return Err(Error::WitnessBelowLambda {
            value: witness.value,
            lambda,
        });
    }
    if witness.f.len() != m.rows() || witness.g.len() != m.cols() {
        return Err(Error::LengthMismatch {
            expected: m.rows(),
            found: witness.f.len(),
        });
    }
    let (rows, cols) = (m.rows(), m.cols());
    let cells = (rows * cols) as f64;
    let mean = m.mean();
    let rho = mean.norm();
    let rot = if rho > 0.0 {
        mean.conj() / rho
    } else {
        Complex64::new(1.0, 0.0)
    };
    let eta = match mode {
        ExtractionMode::Faithful => lambda / 8.0,
        ExtractionMode::Opportunistic => (witness.value / 8.0).min(1.0),
    };
    let fs: StepFunction = step_approximate(&witness.f, eta)?;
    let gs: StepFunction = step_approximate(&witness.g, eta)?;
    let (fl, gl) = (fs.labels(), gs.labels());
    let (kf, kg) = (fs.piece_count(), gs.piece_count());

    // piece[i][j] = sum of the rotated M over A_i x Gamma_j
    let by_row: Vec<Vec<Complex64>> = par::map_range(kf, |i| {
        let mut acc = vec![Complex64::new(0.0, 0.0); kg];
        for (r, _) in fl.iter().enumerate().filter(|(_, &l)| l == i) {
            for (c, v) in m.row(r).iter().enumerate() {
                acc[gl[c]] += v * rot;
            }
        }
        acc
    });
    let row_tot: Vec<Complex64> = by_row.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<Complex64> = (0..kg).map(|j| by_row.iter().map(|r| r[j]).sum()).collect();
    let total: Complex64 = row_tot.iter().sum();
    let row_len: Vec<usize> = fs.pieces.iter().map(|p| p.members.len()).collect();
    let col_len: Vec<usize> = gs.pieces.iter().map(|p| p.members.len()).collect();

    let stats = |i: usize, j: usize| -> PairStats {
        let s = by_row[i][j];
        let (a, g) = (row_len[i], col_len[j]);
        let (ac, gc) = (rows - a, cols - g);
        PairStats {
            sums: [
                s,
                row_tot[i] - s,
                col_tot[j] - s,
                total - row_tot[i] - col_tot[j] + s,
            ],
            cells: [
                (a * g) as f64,
                (a * gc) as f64,
                (ac * g) as f64,
                (ac * gc) as f64,
            ],
            sides: [(a, g), (a, gc), (ac, g), (ac, gc)],
        }
    };
    // Best quadrant of a pair: (|mean|, min side, quadrant index).
    let best_quadrant = |p: &PairStats| -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for q in 0..4 {
            let (a, g) = p.sides[q];
            if a == 0 || g == 0 {
                continue;
            }
            let cand = ((p.sums[q] / p.cells[q]).norm(), a.min(g), q);
            if best.is_none_or(|b| cand.0 > b.0 || (cand.0 == b.0 && cand.1 > b.1)) {
                best = Some(cand);
            }
        }
        best
    };

    let (pair, quad) = match mode {
        ExtractionMode::Faithful => {
            // the pair carrying the most mass of M - rho J
            let mut best: Option<((usize, usize), f64)> = None;
            for i in 0..kf {
                for j in 0..kg {
                    let dev = (by_row[i][j] - rho * (row_len[i] * col_len[j]) as f64).norm();
                    if best.is_none_or(|b| dev > b.1) {
                        best = Some(((i, j), dev));
                    }
                }
            }
            let (pair, dev) = best.ok_or(Error::DegenerateExtraction)?;
            let need = constants.c1 * lambda.powi(5) * cells;
            if dev < need {
                return Err(Error::FaithfulBoundViolated(format!(
                    "largest piece-pair deviation {dev} is below c1 lambda^5 |A||Gamma| = {need}"
                )));
            }
            let q = best_quadrant(&stats(pair.0, pair.1)).ok_or(Error::DegenerateExtraction)?;
            (pair, q)
        }
        ExtractionMode::Opportunistic => {
            let per_row = par::map_range(kf, |i| {
                let mut best: Option<(f64, usize, usize, usize)> = None;
                for j in 0..kg {
                    if let Some((v, s, q)) = best_quadrant(&stats(i, j)) {
                        if best.is_none_or(|b| v > b.0 || (v == b.0 && s > b.1)) {
                            best = Some((v, s, j, q));
                        }
                    }
                }
                best.map(|b| (i, b))
            });
            // ((row piece, col piece), (|mean|, min side, quadrant))
            #[allow(clippy::type_complexity)]
            let mut best: Option<((usize, usize), (f64, usize, usize))> = None;
            for (i, (v, s, j, q)) in per_row.into_iter().flatten() {
                if best.is_none_or(|b| v > b.1 .0 || (v == b.1 .0 && s > b.1 .1)) {
                    best = Some(((i, j), (v, s, q)));
                }
            }
            best.ok_or(Error::DegenerateExtraction)?
        }
    };
    let (i, j) = pair;
    let quadrant = Quadrant::ALL[quad.2];
    let (row_in, col_in) = quadrant.takes();
    let sub_rows = positions(&fl, i, row_in);
    let sub_cols = positions(&gl, j, col_in);
    let new_mean = m.submatrix(&sub_rows, &sub_cols).mean().norm();
    let improvement = new_mean - rho;
    if improvement <= 1e-12 {
        return Err(Error::DegenerateExtraction);
    }
    let st = stats(i, j);
    let alpha = [0, 1, 2, 3].map(|q| st.sums[q] - rho * st.cells[q]);
    let size_ratios = (
        sub_rows.len() as f64 / rows as f64,
        sub_cols.len() as f64 / cols as f64,
    );
    if mode == ExtractionMode::Faithful {
        let floor = constants.c * lambda.powi(15);
        if size_ratios.0 < floor || size_ratios.1 < floor {
            return Err(Error::FaithfulBoundViolated(format!(
                "minor size ratios {size_ratios:?} below c lambda^15 = {floor}"
            )));
        }
        if improvement < floor / 2.0 {
            return Err(Error::FaithfulBoundViolated(format!(
                "mean gain {improvement} below (c/2) lambda^15 = {}",
                floor / 2.0
            )));
        }
    }
    Ok(MinorExtraction {
        rows: sub_rows,
        cols: sub_cols,
        old_mean: rho,
        new_mean,
        improvement,
        size_ratios,
        eta,
        row_pieces: kf,
        col_pieces: kg,
        pair,
        quadrant,
        alpha,
        beta: st.cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::{witness_search, RegularityBudget};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planted(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = (0..n * n)
            .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
            .collect();
        CMatrix::from_fn(n, n, |r, c| {
            if r < n / 2 && c < n / 2 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, phases[r * n + c])
            }
        })
    }

    #[test]
    fn planted_quarter_is_found() {
        let m = planted(16, 3);
        let w = witness_search(&m, 0.05, &RegularityBudget::default()).unwrap();
        for mode in [ExtractionMode::Opportunistic, ExtractionMode::Faithful] {
            let e = extract_minor(&m, &w, 0.05, mode, &ExtractionConstants::default()).unwrap();
            assert!(
                e.new_mean >= e.old_mean + 0.1,
                "{mode:?}: {} -> {}",
                e.old_mean,
                e.new_mean
            );
            let direct = m.submatrix(&e.rows, &e.cols).mean().norm();
            assert!((direct - e.new_mean).abs() < 1e-12);
            let asum: Complex64 = e.alpha.iter().sum();
            assert!(asum.norm() < 1e-9);
            assert_eq!(e.beta.iter().sum::<f64>(), 256.0);
        }
    }

    #[test]
    fn low_witness_rejected() {
        let m = CMatrix::ones(2, 2);
        let one = Complex64::new(1.0, 0.0);
        let w = IrregularityWitness::new(
            &m,
            vec![one, -one],
            vec![one, one],
            crate::coherence::Side::Rows,
        )
        .unwrap();
        assert!(matches!(
            extract_minor(
                &m,
                &w,
                0.1,
                ExtractionMode::Opportunistic,
                &ExtractionConstants::default()
            ),
            Err(Error::WitnessBelowLambda { .. })
        ));
    }

    #[test]
    fn constants_satisfy_their_relation() {
        let k = ExtractionConstants::default();
        assert!(k.c1 * k.c1 - 2.0 * k.c / k.c1 > 0.0);
    }
}
