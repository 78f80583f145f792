//! Shape-preserving cubic (PCHIP) interpolation on a strictly increasing grid.
//!
//! Slopes follow the Fritsch–Carlson weighted-harmonic-mean rule, so the
//! interpolant never overshoots the data: monotone data stays monotone and
//! non-negative data stays non-negative. Used for tabulated dispersion data
//! and for sampled `Im f` curves fed to the Kramers–Kronig transform.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InterpError {
    #[error("need at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("grid must be strictly increasing at index {0}")]
    NonMonotoneGrid(usize),
    #[error("knot/value length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("evaluation point {0} outside grid [{1}, {2}]")]
    OutOfRange(f64, f64, f64),
}

/// Piecewise-cubic Hermite interpolant with shape-preserving slopes.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        if x.len() != y.len() {
            return Err(InterpError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(InterpError::TooFewKnots(x.len()));
        }
        for i in 1..x.len() {
            if x[i] <= x[i - 1] {
                return Err(InterpError::NonMonotoneGrid(i));
            }
        }
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut slope = vec![0.0; n];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
            // Zero slope at local extremum or flat neighbor.
        }
        slope[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), d[0], *d.get(1).unwrap_or(&d[0]));
        slope[n - 1] = endpoint_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            d[n - 2],
            if n >= 3 { d[n - 3] } else { d[n - 2] },
        );
        Ok(Self { x, y, slope })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn eval(&self, t: f64) -> Result<f64, InterpError> {
        if t < self.lo() || t > self.hi() {
            return Err(InterpError::OutOfRange(t, self.lo(), self.hi()));
        }
        let k = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok(y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2))
    }
}

/// One-sided three-point slope estimate, clipped so the interpolant stays
/// shape-preserving at the ends (Fritsch–Carlson boundary treatment).
fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}

/// C² cubic spline with not-a-knot end conditions.
///
/// Fourth-order accurate for smooth data, including at interior extrema
/// where shape-preserving schemes flatten to second order. Used where
/// fidelity to a smooth underlying curve matters more than monotonicity
/// (the Kramers–Kronig input).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        if x.len() != y.len() {
            return Err(InterpError::LengthMismatch(x.len(), y.len()));
        }
        let n = x.len();
        if n < 2 {
            return Err(InterpError::TooFewKnots(n));
        }
        for i in 1..n {
            if x[i] <= x[i - 1] {
                return Err(InterpError::NonMonotoneGrid(i));
            }
        }
        let moments = match n {
            2 => vec![0.0; 2],
            3 => {
                // Single parabola through three points.
                let h0 = x[1] - x[0];
                let h1 = x[2] - x[1];
                let d0 = (y[1] - y[0]) / h0;
                let d1 = (y[2] - y[1]) / h1;
                let m = 2.0 * (d1 - d0) / (h0 + h1);
                vec![m; 3]
            }
            _ => Self::solve_moments(&x, &y),
        };
        Ok(Self { x, y, moments })
    }

    /// Tridiagonal solve for the knot second derivatives after eliminating
    /// the boundary moments through the not-a-knot conditions.
    fn solve_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // Unknowns M_1..M_{n-2}; rows are the C2 continuity equations with
        // M_0 and M_{n-1} substituted from the not-a-knot relations
        //   M_0 = (1 + h0/h1) M_1 - (h0/h1) M_2,
        //   M_{n-1} = (1 + h_{n-2}/h_{n-3}) M_{n-2} - (h_{n-2}/h_{n-3}) M_{n-3}.
        let m = n - 2;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for row in 0..m {
            let i = row + 1;
            sub[row] = h[i - 1] / 6.0;
            diag[row] = (h[i - 1] + h[i]) / 3.0;
            sup[row] = h[i] / 6.0;
            rhs[row] = d[i] - d[i - 1];
        }
        let r0 = h[0] / h[1];
        diag[0] += sub[0] * (1.0 + r0);
        sup[0] -= sub[0] * r0;
        sub[0] = 0.0;
        let r1 = h[n - 2] / h[n - 3];
        diag[m - 1] += sup[m - 1] * (1.0 + r1);
        sub[m - 1] -= sup[m - 1] * r1;
        sup[m - 1] = 0.0;

        // Thomas algorithm.
        let mut c = vec![0.0; m];
        let mut g = vec![0.0; m];
        c[0] = sup[0] / diag[0];
        g[0] = rhs[0] / diag[0];
        for i in 1..m {
            let denom = diag[i] - sub[i] * c[i - 1];
            c[i] = sup[i] / denom;
            g[i] = (rhs[i] - sub[i] * g[i - 1]) / denom;
        }
        let mut interior = vec![0.0; m];
        interior[m - 1] = g[m - 1];
        for i in (0..m - 1).rev() {
            interior[i] = g[i] - c[i] * interior[i + 1];
        }

        let mut moments = vec![0.0; n];
        moments[1..=m].copy_from_slice(&interior);
        moments[0] = (1.0 + r0) * moments[1] - r0 * moments[2];
        moments[n - 1] = (1.0 + r1) * moments[n - 2] - r1 * moments[n - 3];
        moments
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn eval(&self, t: f64) -> Result<f64, InterpError> {
        if t < self.lo() || t > self.hi() {
            return Err(InterpError::OutOfRange(t, self.lo(), self.hi()));
        }
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        let h2 = h * h / 6.0;
        Ok(a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.moments[k] + (b * b * b - b) * self.moments[k + 1]) * h2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_knots() {
        let p = Pchip::new(vec![0.0, 1.0, 3.0], vec![1.0, -2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p.eval(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(p.eval(1.0).unwrap(), -2.0);
        assert_abs_diff_eq!(p.eval(3.0).unwrap(), 4.0);
    }

    #[test]
    fn preserves_monotone_data() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|&t| t.tanh()).collect();
        let p = Pchip::new(x, y).unwrap();
        let mut prev = p.eval(0.0).unwrap();
        for i in 1..400 {
            let t = i as f64 * 9.5 / 400.0;
            let v = p.eval(t).unwrap();
            assert!(v >= prev - 1e-14, "not monotone at t={t}");
            prev = v;
        }
    }

    #[test]
    fn no_negative_overshoot_on_nonnegative_data() {
        // A narrow bump: plain cubic splines would dip below zero.
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| (-((t - 3.0) / 0.3).powi(2)).exp())
            .collect();
        let p = Pchip::new(x.clone(), y).unwrap();
        for i in 0..1000 {
            let t = i as f64 * 5.8 / 1000.0;
            assert!(p.eval(t).unwrap() >= -1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]),
            Err(InterpError::NonMonotoneGrid(1))
        ));
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn out_of_range_errors() {
        let p = Pchip::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(p.eval(1.5), Err(InterpError::OutOfRange(..))));
    }

    #[test]
    fn spline_reproduces_single_cubic_exactly() {
        // Not-a-knot conditions make the spline exact for one global cubic.
        let f = |t: f64| 2.0 * t * t * t - t * t + 3.0 * t - 5.0;
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for i in 0..200 {
            let t = i as f64 * 4.0 / 199.0;
            assert_abs_diff_eq!(s.eval(t).unwrap(), f(t), epsilon = 1e-10);
        }
    }

    #[test]
    fn spline_beats_pchip_at_a_smooth_peak() {
        let peak = |t: f64| 1.0 / ((t - 3.0).powi(2) + 0.04);
        let x: Vec<f64> = (0..61).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| peak(t)).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        let p = Pchip::new(x, y).unwrap();
        let mut worst_s = 0.0_f64;
        let mut worst_p = 0.0_f64;
        for i in 0..2000 {
            let t = 2.5 + i as f64 * 1.0 / 1999.0;
            worst_s = worst_s.max((s.eval(t).unwrap() - peak(t)).abs());
            worst_p = worst_p.max((p.eval(t).unwrap() - peak(t)).abs());
        }
        assert!(
            worst_s < 0.05 * worst_p,
            "spline {worst_s:.3e} should beat pchip {worst_p:.3e} at the peak"
        );
    }

    #[test]
    fn spline_small_inputs() {
        let s = CubicSpline::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(s.eval(0.5).unwrap(), 2.0, epsilon = 1e-14);
        // Three points: the parabola through them.
        let s = CubicSpline::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        assert_abs_diff_eq!(s.eval(1.5).unwrap(), 2.25, epsilon = 1e-12);
        assert!(CubicSpline::new(vec![0.0], vec![1.0]).is_err());
    }
}
