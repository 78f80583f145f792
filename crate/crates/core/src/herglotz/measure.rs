//! Positive Borel measures as atoms plus an optional interval density.

use super::HerglotzError;
use serde::{Deserialize, Serialize};

/// Width of the singular-evaluation guard around an atom, scaled by `1 + |ξ|`.
pub(crate) const ATOM_GUARD: f64 = 1e-12;

/// Positions with `|ξ|` below this count as an atom at the origin.
pub const ZERO_ATOM_TOL: f64 = 1e-12;

/// A point mass `mass > 0` at position `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub xi: f64,
    pub mass: f64,
}

/// Non-negative density supported on an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Density {
    /// Constant `height` on `[lo, hi]`.
    Uniform { lo: f64, hi: f64, height: f64 },
    /// Piecewise-linear through uniformly spaced samples on `[lo, hi]`.
    Sampled { lo: f64, hi: f64, values: Vec<f64> },
}

impl Density {
    pub fn interval(&self) -> (f64, f64) {
        match self {
            Density::Uniform { lo, hi, .. } => (*lo, *hi),
            Density::Sampled { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Density::Uniform { lo, hi, height } => height * (hi - lo),
            Density::Sampled { lo, hi, values } => {
                // Trapezoid rule on the uniform sample grid.
                let n = values.len();
                let h = (hi - lo) / (n - 1) as f64;
                let interior: f64 = values[1..n - 1].iter().sum();
                h * (0.5 * (values[0] + values[n - 1]) + interior)
            }
        }
    }

    /// Density value at `x` (zero outside the interval).
    pub fn at(&self, x: f64) -> f64 {
        let (lo, hi) = self.interval();
        if x < lo || x > hi {
            return 0.0;
        }
        match self {
            Density::Uniform { height, .. } => *height,
            Density::Sampled { values, .. } => {
                let n = values.len();
                let t = (x - lo) / (hi - lo) * (n - 1) as f64;
                let k = (t.floor() as usize).min(n - 2);
                let frac = t - k as f64;
                values[k] * (1.0 - frac) + values[k + 1] * frac
            }
        }
    }

    fn validate(&self) -> Result<(), HerglotzError> {
        let (lo, hi) = self.interval();
        if !(hi > lo) {
            return Err(HerglotzError::InvalidMeasure(format!(
                "density interval [{lo}, {hi}] is empty"
            )));
        }
        match self {
            Density::Uniform { height, .. } => {
                if *height < 0.0 {
                    return Err(HerglotzError::InvalidMeasure(
                        "density height must be >= 0".into(),
                    ));
                }
            }
            Density::Sampled { values, .. } => {
                if values.len() < 2 {
                    return Err(HerglotzError::InvalidMeasure(
                        "sampled density needs at least 2 values".into(),
                    ));
                }
                if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                    return Err(HerglotzError::InvalidMeasure(
                        "density samples must be finite and >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Positive measure `m = Σ massᵢ δ_{ξᵢ} + ρ(ξ) dξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    atoms: Vec<Atom>,
    density: Option<Density>,
}

impl Measure {
    /// Unit point mass at `xi`.
    pub fn dirac(xi: f64) -> Self {
        Self {
            atoms: vec![Atom { xi, mass: 1.0 }],
            density: None,
        }
    }

    /// The uniform probability measure on `[-delta, delta]`.
    pub fn uniform(delta: f64) -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(Density::Uniform {
                lo: -delta,
                hi: delta,
                height: 1.0 / (2.0 * delta),
            }),
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self, HerglotzError> {
        for a in &atoms {
            if !(a.mass > 0.0) || !a.xi.is_finite() {
                return Err(HerglotzError::InvalidMeasure(format!(
                    "atom needs finite xi and mass > 0: {a:?}"
                )));
            }
        }
        Ok(Self {
            atoms,
            density: None,
        })
    }

    pub fn with_density(mut self, density: Density) -> Result<Self, HerglotzError> {
        density.validate()?;
        self.density = Some(density);
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.mass())
    }

    /// Mass of the atom at the origin (positions within [`ZERO_ATOM_TOL`]).
    pub fn mass_at_zero(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.xi.abs() < ZERO_ATOM_TOL)
            .map(|a| a.mass)
            .sum()
    }

    /// Smallest closed interval containing the support; `None` when empty.
    pub fn support_bounds(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.xi);
            hi = hi.max(a.xi);
        }
        if let Some(d) = &self.density {
            let (dlo, dhi) = d.interval();
            lo = lo.min(dlo);
            hi = hi.max(dhi);
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Membership in `M_Δ`: support in `[-delta, delta]` and unit total mass.
    pub fn is_in_m_delta(&self, delta: f64, tol: f64) -> bool {
        let mass_ok = (self.total_mass() - 1.0).abs() <= tol;
        let support_ok = match self.support_bounds() {
            Some((lo, hi)) => lo >= -delta - tol && hi <= delta + tol,
            None => false,
        };
        mass_ok && support_ok
    }

    /// Whether a real point sits on (or within the atom guard of) the support.
    pub fn on_support(&self, x: f64) -> bool {
        for a in &self.atoms {
            if (x - a.xi).abs() <= ATOM_GUARD * (1.0 + a.xi.abs()) {
                return true;
            }
        }
        if let Some(d) = &self.density {
            let (lo, hi) = d.interval();
            if x >= lo && x <= hi {
                return true;
            }
        }
        false
    }

    /// Real levels at which `ξ - v(x)` can vanish: atom positions and
    /// density endpoints. Used to seed quadrature breakpoints.
    pub(crate) fn support_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.atoms.iter().map(|a| a.xi).collect();
        if let Some(d) = &self.density {
            let (lo, hi) = d.interval();
            levels.push(lo);
            levels.push(hi);
        }
        levels
    }

    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("{}*dirac({})", a.mass, a.xi))
            .collect();
        match &self.density {
            Some(Density::Uniform { lo, hi, height }) => {
                parts.push(format!("uniform[{lo}, {hi}]*{height}"))
            }
            Some(Density::Sampled { lo, hi, values }) => {
                parts.push(format!("sampled[{lo}, {hi}] ({} knots)", values.len()))
            }
            None => {}
        }
        if parts.is_empty() {
            "empty".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Representation data `h(z) = α z + β + ∫ (1/(ξ-z) - ξ/(1+ξ²)) dm(ξ)`.
///
/// When `∫ ξ/(1+ξ²) dm` converges, `gamma_shift` holds the constant `γ` of
/// the equivalent form `h(z) = α z + γ + ∫ dm(ξ)/(ξ-z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerglotzTriple {
    pub alpha: f64,
    pub beta: f64,
    pub measure: Measure,
    pub gamma_shift: Option<f64>,
}

impl HerglotzTriple {
    pub fn new(
        alpha: f64,
        beta: f64,
        measure: Measure,
        gamma_shift: Option<f64>,
    ) -> Result<Self, HerglotzError> {
        if !(alpha >= 0.0) {
            return Err(HerglotzError::InvalidMeasure(format!(
                "linear coefficient must be >= 0, got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            measure,
            gamma_shift,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_measure_is_normalized() {
        let m = Measure::uniform(2.0);
        assert_abs_diff_eq!(m.total_mass(), 1.0, epsilon = 1e-15);
        assert!(m.is_in_m_delta(2.0, 1e-12));
        assert!(!m.is_in_m_delta(1.0, 1e-12));
    }

    #[test]
    fn dirac_mass_and_support() {
        let m = Measure::dirac(0.5);
        assert_eq!(m.total_mass(), 1.0);
        assert!(m.on_support(0.5));
        assert!(!m.on_support(0.5001));
        assert_eq!(m.mass_at_zero(), 0.0);
        assert_eq!(Measure::dirac(0.0).mass_at_zero(), 1.0);
        assert_eq!(Measure::dirac(5e-13).mass_at_zero(), 1.0);
    }

    #[test]
    fn sampled_density_trapezoid_mass() {
        let d = Density::Sampled {
            lo: 0.0,
            hi: 1.0,
            values: vec![0.0, 1.0, 0.0],
        };
        assert_abs_diff_eq!(d.mass(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(0.25), 0.5, epsilon = 1e-15);
        assert_eq!(d.at(2.0), 0.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(Measure::from_atoms(vec![Atom { xi: 0.0, mass: 0.0 }]).is_err());
        assert!(Measure::dirac(0.0)
            .with_density(Density::Uniform {
                lo: 1.0,
                hi: 0.0,
                height: 1.0
            })
            .is_err());
        assert!(HerglotzTriple::new(-1.0, 0.0, Measure::dirac(0.0), None).is_err());
    }

    #[test]
    fn mixed_measure_mass_and_bounds() {
        let m = Measure::from_atoms(vec![
            Atom { xi: -0.5, mass: 0.25 },
            Atom { xi: 0.5, mass: 0.25 },
        ])
        .unwrap()
        .with_density(Density::Uniform {
            lo: -1.0,
            hi: 1.0,
            height: 0.25,
        })
        .unwrap();
        assert_abs_diff_eq!(m.total_mass(), 1.0, epsilon = 1e-15);
        assert_eq!(m.support_bounds(), Some((-1.0, 1.0)));
        assert!(m.is_in_m_delta(1.0, 1e-12));
    }
}
