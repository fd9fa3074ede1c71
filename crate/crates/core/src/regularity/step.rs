use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherence::BoundedFunction;
use crate::error::{Error, Result};

/// One level set of a step function: positions in the domain and the value
/// taken there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPiece {
    pub members: Vec<usize>,
    pub coeff: Complex64,
}

/// `sum_i alpha_i 1_{A_i}` over disjoint nonempty pieces covering the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub pieces: Vec<StepPiece>,
    pub domain_len: usize,
    pub eta: f64,
    /// Number of magnitude levels and of phase sectors.
    pub resolution: usize,
}

impl StepFunction {
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn values(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.domain_len];
        for p in &self.pieces {
            for &i in &p.members {
                out[i] = p.coeff;
            }
        }
        out
    }

    /// Piece index for each domain position.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.domain_len];
        for (k, p) in self.pieces.iter().enumerate() {
            for &i in &p.members {
                out[i] = k;
            }
        }
        out
    }
}

/// Grid resolution for accuracy `eta`: the largest `r` with `r^2 <= 100/eta^2`.
///
/// Rounding error is then at most `(1 + 2 pi)/r < eta` for `eta <= 1`.
pub fn resolution(eta: f64) -> usize {
    ((10.0 / eta) + 1e-9).floor() as usize
}

/// Quantises `f` by magnitude level `j/r < |f| <= (j+1)/r` and phase sector
/// `2 pi k/r < arg f <= 2 pi (k+1)/r`, taking the value `(j/r) e^{2 pi i k/r}`
/// on each cell. Cells with `j = 0` all take the value zero and are merged.
pub fn step_approximate(f: &BoundedFunction, eta: f64) -> Result<StepFunction> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let r = resolution(eta);
    let rf = r as f64;
    let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, v) in f.values().iter().enumerate() {
        let mag = v.norm().min(1.0);
        let j = ((mag * rf).ceil() as usize).saturating_sub(1).min(r - 1);
        let key = if j == 0 {
            (0, 0)
        } else {
            let mut theta = v.arg();
            if theta <= 0.0 {
                theta += std::f64::consts::TAU;
            }
            let k = ((theta * rf / std::f64::consts::TAU).ceil() as usize)
                .saturating_sub(1)
                .min(r - 1);
            (j, k)
        };
        cells.entry(key).or_default().push(i);
    }
    let pieces = cells
        .into_iter()
        .map(|((j, k), members)| StepPiece {
            members,
            coeff: Complex64::from_polar(j as f64 / rf, std::f64::consts::TAU * k as f64 / rf),
        })
        .collect();
    Ok(StepFunction {
        pieces,
        domain_len: f.len(),
        eta,
        resolution: r,
    })
}
