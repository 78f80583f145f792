//! The `y → 0⁺` limit of `(1/π) ∫ Im h(x + iy) dx`, taken numerically.
//!
//! The integral is evaluated on a strictly decreasing sequence of offsets
//! `y_k` and Richardson-extrapolated to zero. The leading error is assumed
//! `O(y^p)`; the order `p` is not fixed a priori but detected from the ratio
//! of successive differences (for Poisson kernels against a finite band the
//! leakage is `O(y)`, so the detected ratio is the grid ratio itself).

use super::HerglotzError;
use crate::quad;
use num_complex::Complex64;
use std::cell::RefCell;
use std::f64::consts::PI;

/// Default offset sequence `10^{-1} … 10^{-6}`.
pub fn default_y_sequence() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

/// Result of one extrapolated limit.
#[derive(Debug, Clone)]
pub struct LimitResult {
    pub value: f64,
    pub error_estimate: f64,
    /// `(y, integral)` pairs actually evaluated.
    pub per_y: Vec<(f64, f64)>,
    /// Set when the difference sequence was not monotone (extrapolation
    /// falls back to the smallest-offset value).
    pub non_monotone: bool,
}

pub(crate) struct Extrapolated {
    pub value: f64,
    pub error: f64,
    pub non_monotone: bool,
}

/// Ratio-detected one-term Richardson extrapolation of a sequence assumed
/// to behave like `L + C t_k^p` on a geometric parameter grid.
pub(crate) fn richardson(seq: &[f64], conv_tol: f64) -> Extrapolated {
    let n = seq.len();
    if n == 1 {
        return Extrapolated {
            value: seq[0],
            error: f64::NAN,
            non_monotone: false,
        };
    }
    let d_last = seq[n - 1] - seq[n - 2];
    if d_last.abs() <= conv_tol {
        return Extrapolated {
            value: seq[n - 1],
            error: d_last.abs() + conv_tol,
            non_monotone: false,
        };
    }
    if n >= 3 {
        let d_prev = seq[n - 2] - seq[n - 3];
        let mut rho = d_last / d_prev;
        if rho.is_finite() && rho > 0.0 && rho < 0.95 {
            // On a decade grid clean error orders give rho = 10^-p; higher
            // order contamination in the differences perturbs the detected
            // ratio and gets amplified by the correction, so snap to the
            // nearest integer order when close.
            let p = -rho.log10();
            if (p - p.round()).abs() < 0.2 && p.round() >= 1.0 {
                rho = 10f64.powi(-(p.round() as i32));
            }
            let correction = rho * d_last / (1.0 - rho);
            return Extrapolated {
                value: seq[n - 1] + correction,
                error: correction.abs() * rho + conv_tol,
                non_monotone: false,
            };
        }
        return Extrapolated {
            value: seq[n - 1],
            error: d_last.abs(),
            non_monotone: true,
        };
    }
    // Two points: assume first order on a decade grid.
    Extrapolated {
        value: seq[n - 1] + d_last / 9.0,
        error: d_last.abs() / 9.0 + conv_tol,
        non_monotone: false,
    }
}

fn validate_y_seq(y_seq: &[f64]) -> Result<(), HerglotzError> {
    if y_seq.is_empty() {
        return Err(HerglotzError::InvalidYSequence(
            "empty offset sequence".into(),
        ));
    }
    for (i, &y) in y_seq.iter().enumerate() {
        if !(y > 0.0 && y.is_finite()) {
            return Err(HerglotzError::InvalidYSequence(format!(
                "offsets must be positive and finite, got {y}"
            )));
        }
        if i > 0 && y >= y_seq[i - 1] {
            return Err(HerglotzError::InvalidYSequence(
                "offsets must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}

/// Compute `lim_{y→0⁺} (1/π) ∫_a^b Im h(x + iy) dx`.
///
/// `breakpoints` returns, for a given offset `y`, interior abscissae where
/// the integrand is expected to sharpen (e.g. Lorentzian centers plus a
/// geometric cluster of half-widths); the adaptive quadrature does the rest.
pub fn poisson_limit<H>(
    h: H,
    a: f64,
    b: f64,
    y_seq: &[f64],
    quad_tol: f64,
    breakpoints: impl Fn(f64) -> Vec<f64>,
) -> Result<LimitResult, HerglotzError>
where
    H: Fn(Complex64) -> Result<Complex64, HerglotzError>,
{
    validate_y_seq(y_seq)?;
    if !(b > a) {
        return Err(HerglotzError::InvalidYSequence(format!(
            "empty integration interval [{a}, {b}]"
        )));
    }

    let mut per_y = Vec::with_capacity(y_seq.len());
    for &y in y_seq {
        let failure: RefCell<Option<HerglotzError>> = RefCell::new(None);
        let integrand = |x: f64| -> f64 {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match h(Complex64::new(x, y)) {
                Ok(v) => v.im / PI,
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        };
        let mut pts = vec![a];
        pts.extend(breakpoints(y).into_iter().filter(|x| *x > a && *x < b));
        pts.push(b);
        let result = quad::integrate_with_breakpoints(integrand, &pts, quad_tol);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        per_y.push((y, result?.value));
    }

    let values: Vec<f64> = per_y.iter().map(|p| p.1).collect();
    let ex = richardson(&values, 4.0 * quad_tol);
    Ok(LimitResult {
        value: ex.value,
        error_estimate: ex.error,
        per_y,
        non_monotone: ex.non_monotone,
    })
}

/// Geometric cluster of breakpoints around a feature at `center` with
/// half-width scale `y`.
pub(crate) fn cluster_around(center: f64, y: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    for scale in [0.25, 1.0, 4.0, 16.0, 64.0] {
        for sign in [-1.0, 1.0] {
            let x = center + sign * scale * y;
            if x > lo && x < hi {
                out.push(x);
            }
        }
    }
    if center > lo && center < hi {
        out.push(center);
    }
}

/// Locate peaks of `x ↦ Im h(x + iy_probe)` on a uniform scan; used to seed
/// breakpoints when the evaluator is opaque.
pub(crate) fn scan_peaks<H>(h: &H, a: f64, b: f64, y_probe: f64, n: usize) -> Vec<f64>
where
    H: Fn(Complex64) -> Result<Complex64, HerglotzError>,
{
    let mut xs = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let v = h(Complex64::new(x, y_probe)).map(|c| c.im).unwrap_or(0.0);
        xs.push(x);
        vals.push(v.abs());
    }
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    let threshold = max * 1e-3;
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && vals[i] > threshold {
            peaks.push(xs[i]);
        }
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn recovers_unit_dirac_mass() {
        // h(z) = 1/(xi - z): Poisson kernel with unit mass at xi = 0.3.
        let xi = 0.3;
        let h = |z: Complex64| Ok(1.0 / (xi - z));
        let y_seq = default_y_sequence();
        let r = poisson_limit(h, 0.0, 1.0, &y_seq, 1e-11, |y| {
            let mut pts = Vec::new();
            cluster_around(xi, y, 0.0, 1.0, &mut pts);
            pts
        })
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-7);
        assert!(!r.non_monotone);
    }

    #[test]
    fn half_mass_at_interval_endpoint() {
        let h = |z: Complex64| Ok(1.0 / (-z));
        let y_seq = default_y_sequence();
        let r = poisson_limit(h, 0.0, 1.0, &y_seq, 1e-11, |y| {
            let mut pts = Vec::new();
            cluster_around(0.0, y, 0.0, 1.0, &mut pts);
            pts
        })
        .unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-4);
    }

    #[test]
    fn zero_off_support() {
        let h = |z: Complex64| Ok(1.0 / (5.0 - z));
        let r = poisson_limit(h, 0.0, 1.0, &default_y_sequence(), 1e-11, |_| Vec::new()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_sequences() {
        let h = |z: Complex64| Ok(1.0 / (1.0 - z));
        assert!(poisson_limit(h, 0.0, 1.0, &[], 1e-10, |_| Vec::new()).is_err());
        assert!(poisson_limit(h, 0.0, 1.0, &[1e-2, 1e-1], 1e-10, |_| Vec::new()).is_err());
        assert!(poisson_limit(h, 0.0, 1.0, &[1e-2, -1e-3], 1e-10, |_| Vec::new()).is_err());
    }

    #[test]
    fn propagates_evaluator_errors() {
        let h = |_: Complex64| -> Result<Complex64, HerglotzError> {
            Err(HerglotzError::DivergentExtrapolation)
        };
        assert!(poisson_limit(h, 0.0, 1.0, &[0.1], 1e-10, |_| Vec::new()).is_err());
    }

    #[test]
    fn richardson_exact_on_linear_sequence() {
        // s_k = 2 - 3 * 10^{-k}
        let seq: Vec<f64> = (1..=5).map(|k| 2.0 - 3.0 * 10f64.powi(-k)).collect();
        let ex = richardson(&seq, 1e-14);
        assert_abs_diff_eq!(ex.value, 2.0, epsilon = 1e-9);
        assert!(!ex.non_monotone);
    }

    #[test]
    fn richardson_flags_non_monotone() {
        let ex = richardson(&[1.0, 2.0, 1.5, 2.5], 1e-14);
        assert!(ex.non_monotone);
    }
}
