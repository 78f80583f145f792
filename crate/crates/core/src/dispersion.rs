//! Frequency-domain response models `f(ω)` of passive causal materials.
//!
//! Every model satisfies the passive-system hypotheses: analytic in the open
//! upper half-plane, `f → f_∞ > 0` at large `|ω|`, conjugate symmetry
//! `f(-ω̄) = conj f(ω)`, and `Im f ≥ 0` on the positive real axis. Lossless
//! variants have real poles, which are guarded by a small exclusion zone
//! instead of being evaluated.

use crate::interp::Pchip;
use crate::report::BoundReport;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Half-width of the pole exclusion zone, scaled by `1 + |pole|`.
pub const POLE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Error)]
pub enum DispersionError {
    #[error("evaluation at z = {z} is within the exclusion zone of the real pole {pole}")]
    PoleProximity { z: Complex64, pole: f64 },
    #[error("z = {0} lies in the open lower half-plane")]
    LowerHalfPlane(Complex64),
    #[error("tabulated models evaluate on the real axis only, got z = {0}")]
    UnsupportedDomain(Complex64),
    #[error("omega = {omega} outside tabulated grid [{lo}, {hi}]")]
    OutOfGrid { omega: f64, lo: f64, hi: f64 },
    #[error("non-finite evaluation point {0}")]
    NonFinite(Complex64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid frequency band: need 0 < omega_minus < omega_plus, got [{0}, {1}]")]
    InvalidBand(f64, f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be exactly `omega,re_f,im_f`")]
    BadHeader,
    #[error("row {row}: {what}")]
    BadRow { row: usize, what: String },
    #[error("row {row}: grid not strictly increasing (omega = {omega})")]
    NonMonotone { row: usize, omega: f64 },
    #[error("row {row}: Im f = {im} < -{tol} at omega = {omega} violates passivity")]
    NegativeIm {
        row: usize,
        omega: f64,
        im: f64,
        tol: f64,
    },
    #[error("bad f_inf header value: {0}")]
    BadFInf(String),
    #[error("need at least 2 data rows, got {0}")]
    TooFewRows(usize),
    #[error("invalid model: {0}")]
    Model(DispersionError),
}

/// One lossy Lorentz oscillator `-A / (z² - ξ + iγz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzTerm {
    /// Oscillator strength `A > 0`, units (rad/s)².
    pub a: f64,
    /// Squared resonance `ξ ≥ 0`, units (rad/s)².
    pub xi: f64,
    /// Damping rate `γ ≥ 0`, rad/s.
    pub gamma: f64,
}

/// One lossless term `-A / (z² - ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosslessTerm {
    pub a: f64,
    pub xi: f64,
}

/// Tabulated real-axis response with shape-preserving interpolation.
#[derive(Debug, Clone)]
pub struct TabulatedModel {
    grid: Vec<f64>,
    f_inf: f64,
    re: Pchip,
    im: Pchip,
}

impl TabulatedModel {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
}

/// A dispersion model `f(ω)` with high-frequency limit `f_∞ > 0`.
#[derive(Debug, Clone)]
pub enum DispersionModel {
    /// `f(z) = f_∞ (1 - ω_p² / (z² + iγz))`.
    LossyDrude { f_inf: f64, omega_p: f64, gamma: f64 },
    /// `f(z) = f_∞ - Σ A_n / (z² - ξ_n + iγ_n z)`.
    LossyLorentz { f_inf: f64, terms: Vec<LorentzTerm> },
    /// `f(z) = f_∞ - Σ A_n / (z² - ξ_n)` with real poles at `±√ξ_n`.
    GeneralizedLorentzLossless { f_inf: f64, terms: Vec<LosslessTerm> },
    /// Real-axis samples `(ω, f(ω))` on a strictly increasing grid `ω > 0`.
    Tabulated(TabulatedModel),
}

impl DispersionModel {
    pub fn drude(f_inf: f64, omega_p: f64, gamma: f64) -> Result<Self, DispersionError> {
        if !(f_inf > 0.0) {
            return Err(DispersionError::InvalidModel(format!(
                "f_inf must be > 0, got {f_inf}"
            )));
        }
        if omega_p < 0.0 || gamma < 0.0 {
            return Err(DispersionError::InvalidModel(
                "omega_p and gamma must be >= 0".into(),
            ));
        }
        Ok(Self::LossyDrude {
            f_inf,
            omega_p,
            gamma,
        })
    }

    pub fn lorentz(f_inf: f64, terms: Vec<LorentzTerm>) -> Result<Self, DispersionError> {
        if !(f_inf > 0.0) {
            return Err(DispersionError::InvalidModel(format!(
                "f_inf must be > 0, got {f_inf}"
            )));
        }
        for t in &terms {
            if !(t.a > 0.0) || t.xi < 0.0 || t.gamma < 0.0 {
                return Err(DispersionError::InvalidModel(format!(
                    "term needs A > 0, xi >= 0, gamma >= 0: {t:?}"
                )));
            }
        }
        Ok(Self::LossyLorentz { f_inf, terms })
    }

    pub fn lossless_lorentz(f_inf: f64, terms: Vec<LosslessTerm>) -> Result<Self, DispersionError> {
        if !(f_inf > 0.0) {
            return Err(DispersionError::InvalidModel(format!(
                "f_inf must be > 0, got {f_inf}"
            )));
        }
        for t in &terms {
            if !(t.a > 0.0) || t.xi < 0.0 {
                return Err(DispersionError::InvalidModel(format!(
                    "term needs A > 0, xi >= 0: {t:?}"
                )));
            }
        }
        Ok(Self::GeneralizedLorentzLossless { f_inf, terms })
    }

    /// The constant response `f ≡ c`, the trivial passive model.
    pub fn constant(c: f64) -> Result<Self, DispersionError> {
        Self::lossless_lorentz(c, Vec::new())
    }

    pub fn f_inf(&self) -> f64 {
        match self {
            Self::LossyDrude { f_inf, .. }
            | Self::LossyLorentz { f_inf, .. }
            | Self::GeneralizedLorentzLossless { f_inf, .. } => *f_inf,
            Self::Tabulated(t) => t.f_inf,
        }
    }

    /// `f(0)` when finite; `None` when the model has a pole at the origin
    /// (Drude-type terms) or simply does not reach it (tabulated data).
    pub fn f_at_zero(&self) -> Option<f64> {
        match self {
            Self::LossyDrude { omega_p, .. } => {
                if *omega_p == 0.0 {
                    Some(self.f_inf())
                } else {
                    None
                }
            }
            Self::LossyLorentz { f_inf, terms } => {
                let mut v = *f_inf;
                for t in terms {
                    if t.xi == 0.0 {
                        return None;
                    }
                    v += t.a / t.xi;
                }
                Some(v)
            }
            Self::GeneralizedLorentzLossless { f_inf, terms } => {
                let mut v = *f_inf;
                for t in terms {
                    if t.xi == 0.0 {
                        return None;
                    }
                    v += t.a / t.xi;
                }
                Some(v)
            }
            Self::Tabulated(_) => None,
        }
    }

    /// Real poles of the analytic continuation, ordered increasing.
    /// Empty for strictly lossy and tabulated models.
    pub fn real_poles(&self) -> Vec<f64> {
        let mut poles = Vec::new();
        match self {
            Self::LossyDrude { omega_p, .. } => {
                if *omega_p > 0.0 {
                    poles.push(0.0);
                }
            }
            Self::LossyLorentz { terms, .. } => {
                for t in terms {
                    if t.xi == 0.0 {
                        poles.push(0.0);
                    } else if t.gamma == 0.0 {
                        let s = t.xi.sqrt();
                        poles.push(-s);
                        poles.push(s);
                    }
                }
            }
            Self::GeneralizedLorentzLossless { terms, .. } => {
                for t in terms {
                    let s = t.xi.sqrt();
                    if s == 0.0 {
                        poles.push(0.0);
                    } else {
                        poles.push(-s);
                        poles.push(s);
                    }
                }
            }
            Self::Tabulated(_) => {}
        }
        poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        poles.dedup();
        poles
    }

    /// Whether `Im f` vanishes identically on the real axis (off poles).
    pub fn is_lossless(&self) -> bool {
        match self {
            Self::LossyDrude { gamma, omega_p, .. } => *gamma == 0.0 || *omega_p == 0.0,
            Self::LossyLorentz { terms, .. } => terms.iter().all(|t| t.gamma == 0.0),
            Self::GeneralizedLorentzLossless { .. } => true,
            Self::Tabulated(_) => false,
        }
    }

    fn guard_pole(z: Complex64, pole: f64) -> Result<(), DispersionError> {
        if (z - pole).norm() < POLE_GUARD * (1.0 + pole.abs()) {
            return Err(DispersionError::PoleProximity { z, pole });
        }
        Ok(())
    }

    /// Evaluate `f(z)` for `z` in the closed upper half-plane.
    ///
    /// Tabulated models only support real `z` inside their grid (negative
    /// real `z` is served through the conjugate-symmetry relation).
    pub fn eval(&self, z: Complex64) -> Result<Complex64, DispersionError> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(DispersionError::NonFinite(z));
        }
        if z.im < 0.0 {
            return Err(DispersionError::LowerHalfPlane(z));
        }
        match self {
            Self::LossyDrude {
                f_inf,
                omega_p,
                gamma,
            } => {
                if *omega_p == 0.0 {
                    return Ok(Complex64::new(*f_inf, 0.0));
                }
                Self::guard_pole(z, 0.0)?;
                let den = z * (z + Complex64::new(0.0, *gamma));
                Ok(*f_inf * (1.0 - omega_p * omega_p / den))
            }
            Self::LossyLorentz { f_inf, terms } => {
                let mut f = Complex64::new(*f_inf, 0.0);
                for t in terms {
                    if t.xi == 0.0 {
                        Self::guard_pole(z, 0.0)?;
                    } else if t.gamma == 0.0 {
                        let s = t.xi.sqrt();
                        Self::guard_pole(z, s)?;
                        Self::guard_pole(z, -s)?;
                    }
                    let den = z * z - t.xi + Complex64::new(0.0, t.gamma) * z;
                    f -= t.a / den;
                }
                Ok(f)
            }
            Self::GeneralizedLorentzLossless { f_inf, terms } => {
                let mut f = Complex64::new(*f_inf, 0.0);
                for t in terms {
                    let s = t.xi.sqrt();
                    Self::guard_pole(z, s)?;
                    if s > 0.0 {
                        Self::guard_pole(z, -s)?;
                    }
                    f -= t.a / (z * z - t.xi);
                }
                Ok(f)
            }
            Self::Tabulated(t) => {
                if z.im > 0.0 {
                    return Err(DispersionError::UnsupportedDomain(z));
                }
                let omega = z.re;
                let mag = omega.abs();
                if mag < t.grid[0] || mag > *t.grid.last().unwrap() {
                    return Err(DispersionError::OutOfGrid {
                        omega,
                        lo: t.grid[0],
                        hi: *t.grid.last().unwrap(),
                    });
                }
                let re = t.re.eval(mag).expect("in range");
                let im = t.im.eval(mag).expect("in range");
                // H3 defines the negative axis as the conjugate of the
                // positive axis.
                Ok(if omega >= 0.0 {
                    Complex64::new(re, im)
                } else {
                    Complex64::new(re, -im)
                })
            }
        }
    }

    /// Passivity check: `min Im f(ω) ≥ -tol` over `n_samples` band points.
    ///
    /// Samples landing in a pole exclusion zone are skipped and listed in
    /// the report notes.
    pub fn check_passivity(
        &self,
        band: &FrequencyBand,
        n_samples: usize,
        tol: f64,
    ) -> Result<BoundReport, DispersionError> {
        if n_samples < 2 {
            return Err(DispersionError::TooFewSamples {
                needed: 2,
                got: n_samples,
            });
        }
        let mut min_im = f64::INFINITY;
        let mut min_w = band.omega_minus();
        let mut skipped: Vec<f64> = Vec::new();
        for omega in band.omega_grid(n_samples) {
            match self.eval(Complex64::new(omega, 0.0)) {
                Ok(f) => {
                    if f.im < min_im {
                        min_im = f.im;
                        min_w = omega;
                    }
                }
                Err(DispersionError::PoleProximity { .. }) => skipped.push(omega),
                Err(e) => return Err(e),
            }
        }
        if !min_im.is_finite() {
            return Err(DispersionError::InvalidModel(
                "all passivity samples hit pole exclusion zones".into(),
            ));
        }
        // Cast as 0 <= min Im f: slack == min Im f.
        let mut report = BoundReport::new("passivity", *band, 0.0, min_im, tol)
            .with_witness(min_w, min_im)
            .with_note(format!("min Im f over {n_samples} samples"));
        if !report.pass {
            report = report.with_note(format!("Im f(omega = {min_w}) = {min_im}"));
        }
        if !skipped.is_empty() {
            report = report.with_note(format!("skipped {} pole-guarded samples", skipped.len()));
        }
        Ok(report)
    }

    /// Conjugate-symmetry check `f(-z̄) = conj f(z)` at the given samples.
    ///
    /// For tabulated models the negative axis is defined by that very
    /// relation, so the two-sided identity is vacuous there; instead the
    /// check verifies that the stored trace admits a symmetric passive
    /// extension at all, i.e. `Im f ≥ 0` on the grid. Data built from a
    /// conjugated response fails with the offending frequency.
    pub fn check_symmetry(
        &self,
        samples: &[Complex64],
        tol: f64,
    ) -> Result<BoundReport, DispersionError> {
        if samples.is_empty() {
            return Err(DispersionError::TooFewSamples { needed: 1, got: 0 });
        }
        let lo = samples
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(f64::INFINITY, f64::min)
            .max(1e-6);
        let band = FrequencyBand::new(lo * 0.5, lo.max(1.0) * 2.0)
            .unwrap_or(FrequencyBand { omega_minus: 1.0, omega_plus: 2.0 });

        let mut max_dev = 0.0_f64;
        let mut max_w = 0.0_f64;
        if let Self::Tabulated(t) = self {
            for &omega in &t.grid {
                let im = t.im.eval(omega).expect("knot");
                let dev = 2.0 * (-im).max(0.0);
                if dev > max_dev {
                    max_dev = dev;
                    max_w = omega;
                }
            }
        } else {
            for &z in samples {
                let lhs = self.eval(-z.conj())?;
                let rhs = self.eval(z)?.conj();
                let dev = (lhs - rhs).norm();
                if dev > max_dev {
                    max_dev = dev;
                    max_w = z.re;
                }
            }
        }
        // Cast as max deviation <= tol.
        Ok(BoundReport::new("symmetry", band, max_dev, tol, tol)
            .with_witness(max_w, max_dev)
            .with_note(format!("max |f(-conj z) - conj f(z)| over {} samples", samples.len())))
    }
}

/// Load a tabulated model from CSV (`omega,re_f,im_f` header, optional
/// `# f_inf=<value>` comment line; `f_inf` defaults to 1 when absent).
pub fn load_tabulated(path: impl AsRef<Path>) -> Result<DispersionModel, LoadError> {
    load_tabulated_str(&std::fs::read_to_string(path)?)
}

/// Same as [`load_tabulated`] but from in-memory text.
pub fn load_tabulated_str(text: &str) -> Result<DispersionModel, LoadError> {
    let mut f_inf = 1.0_f64;
    let mut data_lines = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("f_inf=") {
                f_inf = v
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LoadError::BadFInf(format!("{v:?}: {e}")))?;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        data_lines.push_str(trimmed);
        data_lines.push('\n');
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(data_lines.as_bytes());
    {
        let headers = reader.headers()?;
        let expected = ["omega", "re_f", "im_f"];
        if headers.len() != 3
            || headers
                .iter()
                .zip(expected.iter())
                .any(|(h, e)| h.trim() != *e)
        {
            return Err(LoadError::BadHeader);
        }
    }

    let tol = 1e-12;
    let mut grid = Vec::new();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, counting the header line
        let record = record?;
        let parse = |s: &str, what: &str| -> Result<f64, LoadError> {
            s.trim().parse::<f64>().map_err(|e| LoadError::BadRow {
                row,
                what: format!("{what} {s:?}: {e}"),
            })
        };
        let omega = parse(&record[0], "omega")?;
        let re_v = parse(&record[1], "re_f")?;
        let im_v = parse(&record[2], "im_f")?;
        if omega <= 0.0 {
            return Err(LoadError::BadRow {
                row,
                what: format!("omega must be > 0, got {omega}"),
            });
        }
        if let Some(&prev) = grid.last() {
            if omega <= prev {
                return Err(LoadError::NonMonotone { row, omega });
            }
        }
        if im_v < -tol {
            return Err(LoadError::NegativeIm {
                row,
                omega,
                im: im_v,
                tol,
            });
        }
        grid.push(omega);
        re.push(re_v);
        im.push(im_v);
    }
    if grid.len() < 2 {
        return Err(LoadError::TooFewRows(grid.len()));
    }
    if !(f_inf > 0.0) {
        return Err(LoadError::BadFInf(format!("f_inf must be > 0, got {f_inf}")));
    }
    let re_interp = Pchip::new(grid.clone(), re).expect("validated grid");
    let im_interp = Pchip::new(grid.clone(), im).expect("validated grid");
    Ok(DispersionModel::Tabulated(TabulatedModel {
        grid,
        f_inf,
        re: re_interp,
        im: im_interp,
    }))
}

/// A frequency band `0 < ω₋ < ω₊`, with the squared band `[x₋, x₊] = [ω₋², ω₊²]`
/// used by the Herglotz-side integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    omega_minus: f64,
    omega_plus: f64,
}

impl FrequencyBand {
    pub fn new(omega_minus: f64, omega_plus: f64) -> Result<Self, DispersionError> {
        if !(omega_minus > 0.0 && omega_minus < omega_plus && omega_plus.is_finite()) {
            return Err(DispersionError::InvalidBand(omega_minus, omega_plus));
        }
        Ok(Self {
            omega_minus,
            omega_plus,
        })
    }

    /// Band given in squared units `[x₋, x₊]`.
    pub fn from_x(x_minus: f64, x_plus: f64) -> Result<Self, DispersionError> {
        if !(x_minus > 0.0 && x_minus < x_plus) {
            return Err(DispersionError::InvalidBand(x_minus, x_plus));
        }
        Self::new(x_minus.sqrt(), x_plus.sqrt())
    }

    pub fn omega_minus(&self) -> f64 {
        self.omega_minus
    }

    pub fn omega_plus(&self) -> f64 {
        self.omega_plus
    }

    pub fn x_minus(&self) -> f64 {
        self.omega_minus * self.omega_minus
    }

    pub fn x_plus(&self) -> f64 {
        self.omega_plus * self.omega_plus
    }

    /// `n` uniformly spaced frequencies including both endpoints.
    pub fn omega_grid(&self, n: usize) -> Vec<f64> {
        linspace(self.omega_minus, self.omega_plus, n)
    }

    /// `n` uniformly spaced squared frequencies including both endpoints.
    pub fn x_grid(&self, n: usize) -> Vec<f64> {
        linspace(self.x_minus(), self.x_plus(), n)
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn drude(f_inf: f64, omega_p: f64, gamma: f64) -> DispersionModel {
        DispersionModel::drude(f_inf, omega_p, gamma).unwrap()
    }

    #[test]
    fn drude_hand_values() {
        let m = drude(1.0, 1.0, 0.0);
        let f = m.eval(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.re, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lossless_lorentz_hand_value_at_zero() {
        let m =
            DispersionModel::lossless_lorentz(2.0, vec![LosslessTerm { a: 1.0, xi: 4.0 }]).unwrap();
        let f = m.eval(c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.re, 2.25, epsilon = 1e-15);
        assert_eq!(m.f_at_zero(), Some(2.25));
    }

    #[test]
    fn tends_to_f_inf_at_large_imaginary_argument() {
        let models = [
            drude(1.5, 1.0, 0.1),
            DispersionModel::lorentz(
                2.0,
                vec![LorentzTerm {
                    a: 1.0,
                    xi: 4.0,
                    gamma: 0.2,
                }],
            )
            .unwrap(),
            DispersionModel::lossless_lorentz(1.0, vec![LosslessTerm { a: 1.0, xi: 0.25 }])
                .unwrap(),
        ];
        for m in &models {
            let mut prev_gap = f64::INFINITY;
            for k in 2..7 {
                let y = 10f64.powi(k);
                let gap = (m.eval(c(0.0, y)).unwrap() - m.f_inf()).norm();
                // O(1/y^2) decay: gap shrinks by ~100x per decade.
                assert!(gap < prev_gap / 50.0 + 1e-14, "{m:?} at y = {y}");
                prev_gap = gap;
            }
        }
    }

    #[test]
    fn pole_guard_triggers() {
        let m = DispersionModel::lossless_lorentz(1.0, vec![LosslessTerm { a: 1.0, xi: 4.0 }])
            .unwrap();
        assert!(matches!(
            m.eval(c(2.0 + 1e-10, 0.0)),
            Err(DispersionError::PoleProximity { .. })
        ));
        assert!(m.eval(c(2.0 + 1e-3, 0.0)).is_ok());
        let d = drude(1.0, 1.0, 0.0);
        assert!(matches!(
            d.eval(c(1e-12, 0.0)),
            Err(DispersionError::PoleProximity { .. })
        ));
    }

    #[test]
    fn rejects_lower_half_plane() {
        let m = drude(1.0, 1.0, 0.1);
        assert!(matches!(
            m.eval(c(1.0, -0.1)),
            Err(DispersionError::LowerHalfPlane(_))
        ));
    }

    #[test]
    fn passivity_of_lossy_drude() {
        let m = drude(1.0, 1.0, 0.1);
        let band = FrequencyBand::new(0.5, 1.5).unwrap();
        let r = m.check_passivity(&band, 101, 1e-9).unwrap();
        assert!(r.pass);
        assert!(r.rhs > 0.0, "Im f should be strictly positive");
        // Hand oracle: Im f = f_inf wp^2 gamma / (w (w^2 + gamma^2)).
        let w = r.witnesses[0].omega;
        let expect = 0.1 / (w * (w * w + 0.01));
        assert_abs_diff_eq!(r.witnesses[0].value, expect, epsilon = 1e-12);
    }

    #[test]
    fn passivity_of_lossless_model_is_exactly_zero() {
        let m = DispersionModel::lossless_lorentz(1.0, vec![LosslessTerm { a: 1.0, xi: 9.0 }])
            .unwrap();
        let band = FrequencyBand::new(0.5, 1.5).unwrap();
        let r = m.check_passivity(&band, 64, 1e-9).unwrap();
        assert!(r.pass);
        assert_eq!(r.rhs, 0.0);
    }

    #[test]
    fn symmetry_identity_for_analytic_models() {
        let m = drude(1.0, 1.0, 0.1);
        let samples = vec![c(1.0, 1.0), c(0.3, 0.2), c(0.0, 2.0)];
        let r = m.check_symmetry(&samples, 1e-9).unwrap();
        assert!(r.pass);
        assert!(r.lhs < 1e-12);
    }

    #[test]
    fn realness_on_imaginary_axis() {
        let m = DispersionModel::lorentz(
            1.0,
            vec![LorentzTerm {
                a: 2.0,
                xi: 1.0,
                gamma: 0.3,
            }],
        )
        .unwrap();
        for y in [0.1, 1.0, 10.0] {
            let f = m.eval(c(0.0, y)).unwrap();
            assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn f_decreasing_along_imaginary_axis() {
        let models = [
            drude(1.0, 1.0, 0.0),
            drude(1.0, 1.0, 0.5),
            DispersionModel::lossless_lorentz(2.0, vec![LosslessTerm { a: 0.5, xi: 1.0 }])
                .unwrap(),
        ];
        for m in &models {
            let mut prev = f64::INFINITY;
            for i in 0..60 {
                let y = 0.05 * 10f64.powf(i as f64 / 15.0);
                let v = m.eval(c(0.0, y)).unwrap().re;
                assert!(v <= prev + 1e-12, "{m:?}: f(i{y}) = {v} > {prev}");
                prev = v;
            }
            assert!(prev >= m.f_inf() - 1e-9);
        }
    }

    #[test]
    fn loads_valid_csv() {
        let text = "# f_inf=1.5\nomega,re_f,im_f\n1.0,2.0,0.1\n2.0,1.8,0.05\n3.0,1.7,0.01\n";
        let m = load_tabulated_str(text).unwrap();
        assert_eq!(m.f_inf(), 1.5);
        let f = m.eval(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.re, 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(f.im, 0.05, epsilon = 1e-15);
        // Conjugate symmetry on the negative axis.
        let g = m.eval(c(-2.0, 0.0)).unwrap();
        assert_eq!(g, f.conj());
        // Upper half-plane refused.
        assert!(matches!(
            m.eval(c(2.0, 0.5)),
            Err(DispersionError::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn load_rejects_duplicate_omega() {
        let text = "omega,re_f,im_f\n1.0,2.0,0.1\n1.0,1.8,0.05\n";
        match load_tabulated_str(text) {
            Err(LoadError::NonMonotone { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected NonMonotone, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_negative_im() {
        let text = "omega,re_f,im_f\n1.0,2.0,0.1\n2.0,1.8,-0.01\n";
        match load_tabulated_str(text) {
            Err(LoadError::NegativeIm { row, omega, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(omega, 2.0);
            }
            other => panic!("expected NegativeIm, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_bad_header() {
        assert!(matches!(
            load_tabulated_str("w,re,im\n1.0,1.0,0.0\n2.0,1.0,0.0\n"),
            Err(LoadError::BadHeader)
        ));
    }

    #[test]
    fn conjugated_table_fails_symmetry_check() {
        // Valid shape but stored as the conjugate of a passive response:
        // rejected at load, and flagged by check_symmetry when constructed
        // through the loader with losses flipped just under the load guard.
        let text = "omega,re_f,im_f\n1.0,2.0,0.1\n2.0,1.8,0.2\n3.0,1.7,0.1\n";
        let m = load_tabulated_str(text).unwrap();
        let r = m
            .check_symmetry(&[c(1.5, 0.0), c(2.5, 0.0)], 1e-9)
            .unwrap();
        assert!(r.pass);

        // Bypass the loader the way a hostile fixture would.
        let grid = vec![1.0, 2.0, 3.0];
        let conj = DispersionModel::Tabulated(TabulatedModel {
            grid: grid.clone(),
            f_inf: 1.0,
            re: Pchip::new(grid.clone(), vec![2.0, 1.8, 1.7]).unwrap(),
            im: Pchip::new(grid, vec![-0.1, -0.2, -0.1]).unwrap(),
        });
        let r = conj
            .check_symmetry(&[c(1.5, 0.0), c(2.5, 0.0)], 1e-9)
            .unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn band_validation() {
        assert!(FrequencyBand::new(0.0, 1.0).is_err());
        assert!(FrequencyBand::new(2.0, 1.0).is_err());
        let b = FrequencyBand::from_x(0.25, 2.25).unwrap();
        assert_abs_diff_eq!(b.omega_minus(), 0.5);
        assert_abs_diff_eq!(b.omega_plus(), 1.5);
        assert_abs_diff_eq!(b.x_minus(), 0.25);
        assert_abs_diff_eq!(b.x_plus(), 2.25, epsilon = 1e-15);
    }

    proptest! {
        // H4 and H3 on random positive frequencies for all built-ins.
        #[test]
        fn passivity_and_symmetry_on_real_axis(omega in 1e-3_f64..1e3) {
            let models = [
                drude(1.0, 1.0, 0.0),
                drude(1.0, 1.0, 0.1),
                drude(2.0, 0.7, 1.0),
                DispersionModel::lorentz(1.0, vec![LorentzTerm { a: 1.0, xi: 4.0, gamma: 0.2 }]).unwrap(),
                DispersionModel::lossless_lorentz(1.0, vec![LosslessTerm { a: 1.0, xi: 4.0 }]).unwrap(),
                DispersionModel::constant(3.0).unwrap(),
            ];
            for m in &models {
                let f = match m.eval(c(omega, 0.0)) {
                    Ok(f) => f,
                    Err(DispersionError::PoleProximity { .. }) => continue,
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                };
                prop_assert!(f.im >= -1e-12);
                let g = m.eval(c(-omega, 0.0)).unwrap();
                prop_assert!((g - f.conj()).norm() <= 1e-10 * (1.0 + f.norm()));
            }
        }
    }
}
