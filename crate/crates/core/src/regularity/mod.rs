//! Deciding lambda-regularity of a coherence matrix and extracting a denser
//! minor when it fails.
//!
//! `M` is lambda-regular when every pair `f`, `g` with sup-norm at most one
//! and one side summing to zero has `|f^T M g| < lambda |A| |Gamma|`.

mod certificate;
mod extract;
mod step;
mod witness;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherence::{BoundedFunction, Side};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use certificate::{spectral_certificate, SpectralCertificate, CERTIFICATE_INFLATION};
pub use extract::{extract_minor, ExtractionConstants, ExtractionMode, MinorExtraction, Quadrant};
pub use step::{resolution, step_approximate, StepFunction, StepPiece};
pub use witness::{
    brute_force_max, witness_search, witness_search_best, BruteForce, RegularityBudget,
};

/// Relative tolerance on the constrained side's sum.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// A test pair showing `M` is not lambda-regular for any `lambda <= value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrregularityWitness {
    pub f: BoundedFunction,
    pub g: BoundedFunction,
    /// Which of `f`, `g` sums to zero.
    pub constrained: Side,
    /// `|f^T M g| / (|A| |Gamma|)`.
    pub value: f64,
}

impl IrregularityWitness {
    pub fn new(
        m: &CMatrix,
        f: Vec<Complex64>,
        g: Vec<Complex64>,
        constrained: Side,
    ) -> Result<Self> {
        let f = BoundedFunction::new(Side::Rows, f)?;
        let g = BoundedFunction::new(Side::Cols, g)?;
        let value = crate::coherence::bilinear(&f, m, &g)?.norm() / (m.rows() * m.cols()) as f64;
        let w = Self {
            f,
            g,
            constrained,
            value,
        };
        let residual = w.residual();
        let len = match constrained {
            Side::Rows => w.f.len(),
            Side::Cols => w.g.len(),
        };
        if residual > ORTHOGONALITY_TOL * len as f64 {
            return Err(Error::NotCentred { residual });
        }
        Ok(w)
    }

    /// `|<h, 1>|` for the constrained function `h`.
    pub fn residual(&self) -> f64 {
        match self.constrained {
            Side::Rows => self.f.sum().norm(),
            Side::Cols => self.g.sum().norm(),
        }
    }

    /// Value recomputed from scratch against `m`.
    pub fn recompute(&self, m: &CMatrix) -> Result<f64> {
        Ok(crate::coherence::bilinear(&self.f, m, &self.g)?.norm() / (m.rows() * m.cols()) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityStatus {
    Regular,
    Irregular,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub status: RegularityStatus,
    pub lambda: f64,
    /// Certified upper bound on the normalised constrained supremum.
    pub upper_bound: f64,
    /// Best value found by search; zero if no search ran.
    pub lower_bound: f64,
    pub witness: Option<IrregularityWitness>,
    pub certificate: SpectralCertificate,
}

/// Three-tier decision: spectral certificate, then witness search, then
/// exhaustive search when one side is tiny.
pub fn decide_regularity(m: &CMatrix, lambda: f64, budget: &RegularityBudget) -> RegularityVerdict {
    let certificate = spectral_certificate(m, lambda, budget.power_tol, budget.power_max_iter);
    if certificate.certified {
        return RegularityVerdict {
            status: RegularityStatus::Regular,
            lambda,
            upper_bound: certificate.upper_bound,
            lower_bound: 0.0,
            witness: None,
            certificate,
        };
    }
    let mut best = witness_search_best(m, budget);
    if best.as_ref().is_none_or(|w| w.value < lambda) {
        for (side, dim) in [(Side::Rows, m.rows()), (Side::Cols, m.cols())] {
            if dim > budget.brute_force_dim {
                continue;
            }
            let Ok(b) =
                brute_force_max(m, budget.brute_force_roots, side, budget.brute_force_limit)
            else {
                continue;
            };
            if best.as_ref().is_none_or(|w| b.value > w.value) {
                if let Ok(w) = b.into_witness(m, side) {
                    best = Some(w);
                }
            }
        }
    }
    let lower_bound = best.as_ref().map_or(0.0, |w| w.value);
    let status = if lower_bound >= lambda && best.is_some() {
        RegularityStatus::Irregular
    } else {
        RegularityStatus::Undetermined
    };
    RegularityVerdict {
        status,
        lambda,
        upper_bound: certificate.upper_bound,
        lower_bound,
        witness: best,
        certificate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_regular() {
        let v = decide_regularity(&CMatrix::ones(6, 4), 1e-4, &RegularityBudget::default());
        assert_eq!(v.status, RegularityStatus::Regular);
    }

    #[test]
    fn block_sign_is_irregular() {
        let s: Vec<f64> = (0..8).map(|i| if i < 4 { 1.0 } else { -1.0 }).collect();
        let m = CMatrix::from_fn(8, 8, |r, c| Complex64::new(s[r] * s[c], 0.0));
        let v = decide_regularity(&m, 0.5, &RegularityBudget::default());
        assert_eq!(v.status, RegularityStatus::Irregular);
        let w = v.witness.unwrap();
        assert!(w.value >= 0.5 && w.value <= v.upper_bound);
        assert!((w.recompute(&m).unwrap() - w.value).abs() < 1e-12);
    }

    #[test]
    fn uncentred_witness_rejected() {
        let m = CMatrix::ones(2, 2);
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(
            IrregularityWitness::new(&m, vec![one, one], vec![one, -one], Side::Rows),
            Err(Error::NotCentred { .. })
        ));
        assert!(IrregularityWitness::new(&m, vec![one, one], vec![one, -one], Side::Cols).is_ok());
    }
}
