//! Branch-cut-aware complex elementary functions and domain predicates.
//!
//! The square root and logarithm used throughout this crate take their branch
//! cut along the positive real axis, with the argument normalized into
//! `(0, 2π)` off the cut. Points on the cut itself are assigned the limit
//! from the upper half-plane (`arg → 0`), so `branch_sqrt(x) = +√x` for
//! `x > 0` and `branch_log(x)` is real. This keeps evaluation bit-stable for
//! the downstream transforms, all of which probe the cut from above.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors from domain predicates and the logarithm.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("operation undefined at z = 0")]
    ZeroArgument,
    #[error("Stolz angle must lie in (0, pi/2), got {0}")]
    InvalidStolzAngle(f64),
}

/// Opening angle of a Stolz sector `θ ≤ arg(z) ≤ π − θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StolzParams {
    theta: f64,
}

impl StolzParams {
    pub fn new(theta: f64) -> Result<Self, DomainError> {
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(DomainError::InvalidStolzAngle(theta));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Argument of `z` normalized into `[0, 2π)`, with `0` on the positive real
/// axis (limit from the upper half-plane) and `π` on the negative real axis.
fn branch_arg(z: Complex64) -> f64 {
    if z.im == 0.0 {
        return if z.re >= 0.0 { 0.0 } else { PI };
    }
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Square root with branch cut on the positive real axis.
///
/// `√z = |z|^{1/2} e^{i arg(z)/2}` with `arg(z) ∈ (0, 2π)`; on the cut the
/// value is the limit from above, i.e. the positive root for `x > 0` and
/// `√0 = 0`. The result always lies in the closed upper half-plane.
pub fn branch_sqrt(z: Complex64) -> Complex64 {
    debug_assert!(z.re.is_finite() && z.im.is_finite());
    if z.im == 0.0 {
        // Exact on both real half-axes so that the transforms u and v stay
        // exactly real where the representation theorems say they are.
        return if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        };
    }
    // The principal root maps the upper half-plane to the first quadrant,
    // matching this branch there; below the axis this branch is its
    // negation. Avoids the precision loss of a 2π argument shift.
    let principal = z.sqrt();
    if z.im > 0.0 {
        principal
    } else {
        -principal
    }
}

/// Logarithm with the same branch cut as [`branch_sqrt`].
///
/// Imaginary part in `[0, 2π)`: strictly inside `(0, 2π)` off the cut, `0`
/// on the positive real axis (limit from above) and `π` on the negative
/// real axis.
pub fn branch_log(z: Complex64) -> Result<Complex64, DomainError> {
    debug_assert!(z.re.is_finite() && z.im.is_finite());
    if z.re == 0.0 && z.im == 0.0 {
        return Err(DomainError::ZeroArgument);
    }
    Ok(Complex64::new(z.norm().ln(), branch_arg(z)))
}

/// Whether `z` lies in the Stolz sector `θ ≤ arg(z) ≤ π − θ`.
///
/// Boundary rays are included; the comparison carries a few-ulp slack so
/// points constructed exactly on a ray do not flip on rounding.
pub fn in_stolz(z: Complex64, p: StolzParams) -> Result<bool, DomainError> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(DomainError::ZeroArgument);
    }
    let a = z.arg();
    let slack = 4.0 * f64::EPSILON * PI;
    Ok(a >= p.theta - slack && a <= PI - p.theta + slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sqrt_positive_real_is_exact() {
        assert_eq!(branch_sqrt(c(4.0, 0.0)), c(2.0, 0.0));
        assert_eq!(branch_sqrt(c(0.0, 0.0)), c(0.0, 0.0));
        // Negative zero imaginary part is still "on the cut from above".
        assert_eq!(branch_sqrt(c(9.0, -0.0)), c(3.0, 0.0));
    }

    #[test]
    fn sqrt_negative_real_gives_positive_imaginary() {
        assert_eq!(branch_sqrt(c(-4.0, 0.0)), c(0.0, 2.0));
    }

    #[test]
    fn sqrt_of_i_matches_hand_value() {
        let r = branch_sqrt(c(0.0, 1.0));
        let expected = Complex64::from_polar(1.0, PI / 4.0);
        assert_abs_diff_eq!(r.re, expected.re, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, expected.im, epsilon = 1e-15);
    }

    #[test]
    fn sqrt_continuous_from_above_across_cut() {
        let x = 2.5_f64;
        let mut delta = 1e-3;
        let limit = branch_sqrt(c(x, 0.0));
        let mut prev_gap = f64::INFINITY;
        while delta > 1e-12 {
            let gap = (branch_sqrt(c(x, delta)) - limit).norm();
            assert!(gap < prev_gap + 1e-15, "gap should shrink as delta -> 0+");
            prev_gap = gap;
            delta /= 10.0;
        }
        assert!(prev_gap < 1e-12);
    }

    #[test]
    fn log_branch_values() {
        assert_abs_diff_eq!(
            branch_log(c(-1.0, 0.0)).unwrap().im,
            PI,
            epsilon = 1e-15
        );
        let li = branch_log(c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(li.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(li.im, PI / 2.0, epsilon = 1e-15);
        // e * exp(i 3pi/2) -> 1 + i 3pi/2 on this branch.
        let z = Complex64::from_polar(std::f64::consts::E, 1.5 * PI);
        let l = branch_log(z).unwrap();
        assert_abs_diff_eq!(l.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.im, 1.5 * PI, epsilon = 1e-14);
    }

    #[test]
    fn log_rejects_zero() {
        assert_eq!(branch_log(c(0.0, 0.0)), Err(DomainError::ZeroArgument));
    }

    #[test]
    fn log_real_on_positive_axis() {
        let l = branch_log(c(3.0, 0.0)).unwrap();
        assert_eq!(l.im, 0.0);
        assert_abs_diff_eq!(l.re, 3.0_f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn stolz_membership() {
        let p = StolzParams::new(PI / 4.0).unwrap();
        assert!(in_stolz(c(0.0, 1.0), p).unwrap());
        assert!(!in_stolz(c(1.0, 0.0), p).unwrap());
        // arg = 3pi/4 sits exactly on the included boundary ray.
        assert!(in_stolz(c(-1.0, 1.0), p).unwrap());
        assert!(in_stolz(c(0.0, 0.0), p).is_err());
    }

    #[test]
    fn stolz_rejects_bad_angle() {
        assert!(StolzParams::new(0.0).is_err());
        assert!(StolzParams::new(PI / 2.0).is_err());
    }

    proptest! {
        // sqrt(z)^2 == z within a few ulps of |z|.
        #[test]
        fn sqrt_squares_back(re in -1e6_f64..1e6, im in -1e6_f64..1e6) {
            let z = c(re, im);
            let s = branch_sqrt(z);
            let err = (s * s - z).norm();
            prop_assert!(err <= 4.0 * f64::EPSILON * (1.0 + z.norm()));
        }

        // The image always lies in the closed upper half-plane.
        #[test]
        fn sqrt_lands_in_upper_half_plane(re in -1e6_f64..1e6, im in -1e6_f64..1e6) {
            prop_assert!(branch_sqrt(c(re, im)).im >= 0.0);
        }

        // For z in the open upper half-plane, sqrt(-z) has negative real
        // part: the quadrant mapping behind the Stieltjes construction.
        #[test]
        fn sqrt_of_minus_z_has_negative_real_part(re in -1e3_f64..1e3, im in 1e-9_f64..1e3) {
            let z = c(re, im);
            prop_assert!(branch_sqrt(-z).re < 0.0);
        }

        // exp(log z) == z within a few ulps.
        #[test]
        fn log_exp_roundtrip(re in -1e3_f64..1e3, im in -1e3_f64..1e3) {
            let z = c(re, im);
            prop_assume!(z.norm() > 1e-12);
            let l = branch_log(z).unwrap();
            prop_assert!((l.exp() - z).norm() <= 8.0 * f64::EPSILON * z.norm());
            prop_assert!(l.im >= 0.0 && l.im < 2.0 * PI);
        }
    }
}
