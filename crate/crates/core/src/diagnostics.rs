//! Optimality certificates: the subproblem duality gap, KKT residual bounds
//! and the bracketed relative-error report.

use crate::error::{IpalmError, Result};
use crate::linalg::{dist_sq, dot};
use crate::problem::SubproblemOracle;

/// Primal value, dual value and their difference for `H_s` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Rounding error bound of `gap` from the magnitudes of its terms.
    pub resolution: f64,
}

impl GapCertificate {
    /// The gap less its rounding error, clamped at zero.
    pub fn certified(&self) -> f64 {
        (self.gap - self.resolution).max(0.0)
    }
}

/// Bounds `H_s(x) − H_s*` from above by weak duality.
///
/// With `H_s(x) = Σ_j Φ_j(B_j x) + Ψ(x)`, the dual function is
/// `D(y) = −Ψ*(−Bᵀy) − Σ_j Φ_j*(y_j)`. The dual point is read off `x`:
/// `y_j = B_j x − c_j` on smooth rows and `y_j = Λ_j(B_j x)` on smoothed rows,
/// clipped into the conjugate domain.
pub fn duality_gap_bound(o: &SubproblemOracle<'_>, x: &[f64]) -> Result<GapCertificate> {
    crate::error::check_dim(o.n(), x.len(), "duality_gap_bound")?;
    let p = o.problem();
    let a = p.stacked();
    let ns = p.n_smooth_rows();
    let beta = o.beta();
    let mut u = vec![0.0; a.n_rows()];
    a.apply_into(x, &mut u);
    let mut y = vec![0.0; a.n_rows()];
    let phi = o.dual_from_residual(&u, &mut y);
    let primal = phi + o.p_value(x);

    p.h_spec().project_dual_domain(&mut y[ns..]);

    let c = p.smooth_centers();
    let mut conj = 0.0;
    let mut magnitude = phi.abs() + o.p_value(x).abs();
    for r in 0..ns {
        conj += 0.5 * y[r] * y[r] + y[r] * c[r];
        magnitude += 0.5 * y[r] * y[r] + (y[r] * c[r]).abs();
    }
    let yh = &y[ns..];
    let h_conj = p.h_spec().conjugate(yh);
    let prox_term = 0.5 * beta * dist_sq(yh, o.lam_flat());
    conj += h_conj + prox_term;
    magnitude += h_conj.abs() + prox_term;

    // Ψ*(z) with z = −Aᵀy; the maximizer is prox_{g/β}(anchor + z/β)
    let mut z = vec![0.0; o.n()];
    a.apply_transpose_into(&y, &mut z);
    z.iter_mut().for_each(|v| *v = -*v);
    let anchor = o.anchor();
    let shifted: Vec<f64> = anchor.iter().zip(&z).map(|(a, z)| a + z / beta).collect();
    let mut xhat = vec![0.0; o.n()];
    p.g().prox_into(&shifted, 1.0 / beta, &mut xhat);
    let lin = dot(&z, &xhat);
    let g_hat = p.g().value(&xhat);
    let quad = 0.5 * beta * dist_sq(&xhat, anchor);
    let psi_star = lin - g_hat - quad;
    magnitude += lin.abs() + g_hat.abs() + quad;

    let dual = -psi_star - conj;
    if !primal.is_finite() || !dual.is_finite() {
        return Err(IpalmError::NonFinite("duality gap"));
    }
    Ok(GapCertificate {
        primal_value: primal,
        dual_value: dual,
        gap: primal - dual,
        resolution: 16.0 * f64::EPSILON * magnitude,
    })
}

/// KKT residual bounds at an outer iterate:
/// `(sqrt(16 L_s·gap + 2β_s²‖x^s − x^{s−1}‖²), β_s‖λ^{s+1} − λ^s‖)`.
pub fn kkt_bounds(gap_bound: f64, l_s: f64, beta_s: f64, dx_norm: f64, dlam_norm: f64) -> (f64, f64) {
    let gap = gap_bound.max(0.0);
    let x_bound = (16.0 * l_s * gap + 2.0 * beta_s * beta_s * dx_norm * dx_norm).sqrt();
    (x_bound, beta_s * dlam_norm)
}

/// Relative error of an objective value against a bracket `[F_lower, F_upper]` of `F*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub f_value: f64,
    pub f_lower: f64,
    pub f_upper: f64,
    pub confidence_error: f64,
    /// `(F − F_upper)/F_upper`.
    pub rel_error: f64,
    /// `log10(|F − F_upper|/F_upper)`, or `None` when below the confidence level.
    pub log_rel_error: Option<f64>,
}

impl ErrorReport {
    /// Interval known to contain `(F − F*)/F*` when `F > (1+ε_c)·F_upper`.
    pub fn true_error_interval(&self) -> (f64, f64) {
        let e = self.rel_error;
        let ec = self.confidence_error;
        (e, ec + (1.0 + ec) * e)
    }

    pub fn below_confidence_level(&self) -> bool {
        self.log_rel_error.is_none()
    }
}

pub fn error_report(f_value: f64, f_lower: f64, f_upper: f64) -> Result<ErrorReport> {
    if !(f_lower > 0.0) {
        return Err(IpalmError::InvalidParameter(format!(
            "F_lower must be positive, got {f_lower}"
        )));
    }
    if f_lower > f_upper {
        return Err(IpalmError::InvalidParameter(format!(
            "F_lower {f_lower} exceeds F_upper {f_upper}"
        )));
    }
    let confidence_error = (f_upper - f_lower) / f_lower;
    let rel_error = (f_value - f_upper) / f_upper;
    let log_rel_error = if f_value > (1.0 + confidence_error) * f_upper {
        Some(((f_value - f_upper).abs() / f_upper).log10())
    } else {
        None
    };
    Ok(ErrorReport {
        f_value,
        f_lower,
        f_upper,
        confidence_error,
        rel_error,
        log_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::problem::{CompositeProblem, RowBlock};
    use crate::prox::SimpleFunction;
    use crate::smoothing::DualPoint;

    #[test]
    fn kkt_bounds_examples() {
        assert_eq!(kkt_bounds(0.0, 3.0, 0.5, 0.0, 0.0), (0.0, 0.0));
        let (bx, bl) = kkt_bounds(1.0, 1.0, 1.0, 1.0, 2.0);
        assert!((bx - 18f64.sqrt()).abs() < 1e-15);
        assert_eq!(bl, 2.0);
    }

    #[test]
    fn error_report_examples() {
        let r = error_report(1.1, 1.0, 1.0).unwrap();
        assert!((r.log_rel_error.unwrap() + 1.0).abs() < 1e-12);
        assert!(error_report(1.0, 1.0, 1.0).unwrap().below_confidence_level());
        let r = error_report(2.0, 0.9, 1.0).unwrap();
        assert!((r.rel_error - 1.0).abs() < 1e-15);
        let (lo, hi) = r.true_error_interval();
        for f_star in [0.9, 0.95, 1.0] {
            let t = (2.0 - f_star) / f_star;
            assert!(lo <= t + 1e-12 && t <= hi + 1e-12);
        }
        assert!(error_report(1.0, 0.0, 1.0).is_err());
        assert!(error_report(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn scalar_gap_is_twice_true_gap() {
        // H(x) = ½(x − 1)² + ½x², minimized at 1/2 with H* = 1/4
        let p = CompositeProblem::new(
            1,
            vec![RowBlock::smooth(SparseMatrix::identity(1), vec![1.0])],
            SimpleFunction::zero(),
        )
        .unwrap();
        let lam = DualPoint::zeros(p.h_spec());
        let o = SubproblemOracle::new(&p, &lam, 1.0, &[0.0]).unwrap();
        let c = duality_gap_bound(&o, &[0.0]).unwrap();
        assert!((c.primal_value - 0.5).abs() < 1e-15);
        assert!((c.gap - 0.5).abs() < 1e-15);
        let c = duality_gap_bound(&o, &[0.5]).unwrap();
        assert!(c.gap.abs() < 1e-15);
    }
}
