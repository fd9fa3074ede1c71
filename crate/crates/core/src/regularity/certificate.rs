use serde::{Deserialize, Serialize};

use crate::linalg::{top_singular_value, CMatrix};

/// Multiplicative headroom on the power-iteration estimate, which approaches
/// the top singular value from below.
pub const CERTIFICATE_INFLATION: f64 = 1.0 + 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    /// Top singular value of the row-centred matrix `P_A M`.
    pub sigma_rows: f64,
    /// Top singular value of the column-centred matrix `M P_Gamma`.
    pub sigma_cols: f64,
    /// Bound on `|f^T M g| / (|A| |Gamma| |f|_inf |g|_inf)` over pairs with
    /// at least one side mean-zero.
    pub upper_bound: f64,
    pub certified: bool,
    pub converged: bool,
}

/// Sufficient condition for lambda-regularity.
///
/// If `<f, 1_A> = 0` then `f^T M g = f^T (P_A M) g`, so
/// `|f^T M g| <= |f|_2 sigma_rows |g|_2 <= sigma_rows sqrt(|A| |Gamma|) |f|_inf |g|_inf`;
/// the column case is symmetric. Dividing by `|A| |Gamma|` gives the bound.
pub fn spectral_certificate(
    m: &CMatrix,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> SpectralCertificate {
    let cells = (m.rows() * m.cols()) as f64;
    if cells == 0.0 {
        return SpectralCertificate {
            sigma_rows: 0.0,
            sigma_cols: 0.0,
            upper_bound: 0.0,
            certified: lambda > 0.0,
            converged: true,
        };
    }
    let rows = top_singular_value(&m.center_rows(), tol, max_iter);
    let cols = top_singular_value(&m.center_cols(), tol, max_iter);
    let sigma = rows.value.max(cols.value);
    let upper_bound = sigma * CERTIFICATE_INFLATION / cells.sqrt();
    SpectralCertificate {
        sigma_rows: rows.value,
        sigma_cols: cols.value,
        upper_bound,
        certified: upper_bound < lambda,
        converged: rows.converged && cols.converged,
    }
}
