//! Quasi-static polarizability tensors.
//!
//! Analytic formulas cover spheres, coated spheres and ellipsoids; arbitrary
//! rasterized scenes go through the finite-volume solver in [`solver`]. The
//! induced dipole of a scatterer in a uniform applied field defines the
//! 3×3 tensor `α(ω)`, which inherits the passivity package from the
//! materials: conjugate symmetry, `Im(α(ω)E₀·Ē₀) ≥ 0` for `ω > 0`, and a
//! positive-definite high-frequency limit `α(∞)`.

pub mod solver;

pub use solver::{
    assemble_alpha, extract_dipole, fd_solve_potential, AssembledAlpha, DipoleResult,
    PotentialGrid, SolverOptions,
};

use crate::dispersion::{DispersionError, DispersionModel};
use crate::quad::{self, QuadError};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resonant denominator |{den}| below guard at omega = {omega}; lossless shell resonance")]
    Resonance { omega: Complex64, den: f64 },
    #[error("no sign change of the response over bracket [{0}, {1}]")]
    NoBracket(f64, f64),
    #[error("scene: {0}")]
    Scene(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("solver did not converge: relative residual {residual:.3e} after {iters} iterations")]
    SolverDiverged { residual: f64, iters: usize },
    #[error("monopole term too large: |Q|/(|p|/R) = {ratio:.3e} > {tol:.3e}")]
    MonopoleQuality { ratio: f64, tol: f64 },
}

/// A frequency-dependent 3×3 polarizability with a high-frequency limit.
pub trait PolarizabilityResponse {
    fn eval(&self, omega: Complex64) -> Result<Matrix3<Complex64>, QsError>;
    fn alpha_inf(&self) -> Matrix3<f64>;

    /// The scalar response `f(ω) = α(ω)E₀ · Ē₀ = Σᵢ (α E₀)ᵢ conj(E₀)ᵢ`.
    fn scalar_response(&self, omega: Complex64, e0: &Vector3<Complex64>) -> Result<Complex64, QsError> {
        let alpha = self.eval(omega)?;
        Ok(e0.dotc(&(alpha * e0)))
    }

    /// `f_∞ = α(∞)E₀ · Ē₀` (real for any `E₀` since `α(∞)` is real symmetric).
    fn scalar_response_inf(&self, e0: &Vector3<Complex64>) -> f64 {
        let ai = self.alpha_inf().map(|v| Complex64::new(v, 0.0));
        e0.dotc(&(ai * e0)).re
    }
}

/// High-frequency polarizability of a homogeneous sphere,
/// `α(∞) = 4πR³ε₀ (ε-ε₀)/(ε+2ε₀) I`.
pub fn sphere_alpha_inf(radius: f64, eps: f64, eps0: f64) -> Result<Matrix3<f64>, QsError> {
    if !(radius > 0.0) {
        return Err(QsError::Domain(format!("radius must be > 0, got {radius}")));
    }
    if !(eps0 > 0.0) {
        return Err(QsError::Domain(format!("eps0 must be > 0, got {eps0}")));
    }
    if !(eps > eps0) {
        return Err(QsError::Domain(format!(
            "inclusion permittivity must exceed the background: eps = {eps}, eps0 = {eps0}"
        )));
    }
    let scalar = 4.0 * PI * radius.powi(3) * eps0 * (eps - eps0) / (eps + 2.0 * eps0);
    Ok(Matrix3::identity() * scalar)
}

/// Scalar polarizability of a core/shell sphere at frequency `omega`.
///
/// Core `ε₁` for `r < a`, shell `ε₂(ω)` for `a < r < b`, background `ε₀`.
/// Eliminating the dipole-harmonic matching conditions at both interfaces
/// down to the exterior dipole coefficient gives, with `t = (a/b)³`:
///
/// `α = 4πε₀b³ [(ε₂-ε₀)(ε₁+2ε₂) + t(ε₁-ε₂)(ε₀+2ε₂)]
///            / [(ε₂+2ε₀)(ε₁+2ε₂) + 2t(ε₂-ε₀)(ε₁-ε₂)]`
///
/// which reduces to the homogeneous-sphere value when `ε₂ = ε₁`.
pub fn coated_sphere_alpha(
    a: f64,
    b: f64,
    eps_core: f64,
    eps_shell: &DispersionModel,
    eps0: f64,
    omega: Complex64,
) -> Result<Complex64, QsError> {
    if !(a >= 0.0 && a < b) {
        return Err(QsError::Domain(format!(
            "need 0 <= a < b, got a = {a}, b = {b}"
        )));
    }
    if !(eps0 > 0.0) {
        return Err(QsError::Domain(format!("eps0 must be > 0, got {eps0}")));
    }
    let e1 = Complex64::new(eps_core, 0.0);
    let e2 = eps_shell.eval(omega)?;
    let t = (a / b).powi(3);
    let num = (e2 - eps0) * (e1 + 2.0 * e2) + t * (e1 - e2) * (eps0 + 2.0 * e2);
    let den = (e2 + 2.0 * eps0) * (e1 + 2.0 * e2) + 2.0 * t * (e2 - eps0) * (e1 - e2);
    let scale = (1.0 + e2.norm()) * (1.0 + e2.norm() + eps_core.abs() + eps0);
    if den.norm() < 1e-14 * scale {
        return Err(QsError::Resonance {
            omega,
            den: den.norm(),
        });
    }
    Ok(4.0 * PI * eps0 * b.powi(3) * num / den)
}

/// Diagonal polarizability of an ellipsoid with semiaxes `(a₁, a₂, a₃)`:
/// `α_ii = V ε₀ (ε-ε₀) / (ε₀ + L_i (ε-ε₀))` with depolarization factors
/// `L_i = (a₁a₂a₃/2) ∫₀^∞ ds / ((s+a_i²) √((s+a₁²)(s+a₂²)(s+a₃²)))`.
#[derive(Debug, Clone)]
pub struct EllipsoidAlpha {
    pub matrix: Matrix3<f64>,
    pub depolarization: [f64; 3],
    /// Set when the aspect ratio exceeds 1e4 and quadrature accuracy degrades.
    pub accuracy_warning: bool,
}

pub fn ellipsoid_alpha(semiaxes: [f64; 3], eps: f64, eps0: f64) -> Result<EllipsoidAlpha, QsError> {
    if semiaxes.iter().any(|a| !(*a > 0.0)) {
        return Err(QsError::Domain(format!(
            "semiaxes must be > 0, got {semiaxes:?}"
        )));
    }
    if !(eps0 > 0.0) || !(eps > eps0) {
        return Err(QsError::Domain(format!(
            "need eps > eps0 > 0, got eps = {eps}, eps0 = {eps0}"
        )));
    }
    let depolarization = depolarization_factors(semiaxes)?;
    let max = semiaxes.iter().cloned().fold(0.0_f64, f64::max);
    let min = semiaxes.iter().cloned().fold(f64::INFINITY, f64::min);
    let accuracy_warning = max / min > 1e4;

    let volume = 4.0 * PI / 3.0 * semiaxes[0] * semiaxes[1] * semiaxes[2];
    let mut matrix = Matrix3::zeros();
    for i in 0..3 {
        matrix[(i, i)] = volume * eps0 * (eps - eps0) / (eps0 + depolarization[i] * (eps - eps0));
    }
    Ok(EllipsoidAlpha {
        matrix,
        depolarization,
        accuracy_warning,
    })
}

/// Depolarization factors by adaptive quadrature of the elliptic integral
/// after mapping `s = q/(1-q)` onto the unit interval.
pub fn depolarization_factors(semiaxes: [f64; 3]) -> Result<[f64; 3], QsError> {
    // Scale invariance: L_i depends only on axis ratios, so normalize by the
    // geometric mean for a well-conditioned integrand.
    let gm = (semiaxes[0] * semiaxes[1] * semiaxes[2]).powf(1.0 / 3.0);
    let sq: Vec<f64> = semiaxes.iter().map(|a| (a / gm) * (a / gm)).collect();
    let mut out = [0.0; 3];
    for i in 0..3 {
        let integrand = |q: f64| {
            let one_minus = 1.0 - q;
            let s = q / one_minus;
            let root = ((s + sq[0]) * (s + sq[1]) * (s + sq[2])).sqrt();
            1.0 / ((s + sq[i]) * root * one_minus * one_minus)
        };
        // The substitution leaves a sqrt-type endpoint at q = 1; stop just
        // short and bound the remainder analytically: integrand ~ (1-q)^1/2.
        let cut = 1.0 - 1e-12;
        let value = quad::integrate(integrand, 0.0, cut, 1e-12)?.value;
        out[i] = 0.5 * value;
    }
    // The factors sum to 1 exactly; renormalize out the quadrature residue.
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Root-find the frequency where the coated-sphere polarizability vanishes.
///
/// Bisection on `Re α` over the bracket followed by a secant polish to
/// relative accuracy 1e-12. Lossless shells give a true zero; small-loss
/// shells give the `Re α` root, near which `|α|` attains its minimum.
pub fn design_cloak_frequency(
    a: f64,
    b: f64,
    eps_core: f64,
    shell: &DispersionModel,
    eps0: f64,
    bracket: (f64, f64),
) -> Result<f64, QsError> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && lo < hi) {
        return Err(QsError::Domain(format!("bad bracket [{lo}, {hi}]")));
    }
    let g = |w: f64| -> Result<f64, QsError> {
        Ok(coated_sphere_alpha(a, b, eps_core, shell, eps0, Complex64::new(w, 0.0))?.re)
    };
    let mut g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo * g_hi > 0.0 {
        return Err(QsError::NoBracket(lo, hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
        if (hi - lo) <= 1e-13 * hi {
            break;
        }
    }
    // Secant polish.
    let mut x0 = lo;
    let mut x1 = hi;
    let mut f0 = g(x0)?;
    for _ in 0..8 {
        let f1 = g(x1)?;
        let df = f1 - f0;
        if df == 0.0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / df;
        if !x2.is_finite() || x2 <= 0.0 {
            break;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        if (x1 - x0).abs() <= 1e-13 * x1.abs() {
            break;
        }
    }
    Ok(x1)
}

/// The sharp transparency-equality response `α(ω) = α(∞)(1 - ω₀²/ω²)`.
#[derive(Debug, Clone)]
pub struct SharpDrudeResponse {
    pub alpha_inf: Matrix3<f64>,
    pub omega0: f64,
}

impl PolarizabilityResponse for SharpDrudeResponse {
    fn eval(&self, omega: Complex64) -> Result<Matrix3<Complex64>, QsError> {
        if omega.norm() == 0.0 {
            return Err(QsError::Domain("sharp response singular at omega = 0".into()));
        }
        let factor = 1.0 - self.omega0 * self.omega0 / (omega * omega);
        Ok(self.alpha_inf.map(|v| v * factor))
    }

    fn alpha_inf(&self) -> Matrix3<f64> {
        self.alpha_inf
    }
}

/// A dispersionless scatterer, `α(ω) ≡ α(∞)`.
#[derive(Debug, Clone)]
pub struct ConstantResponse {
    pub alpha_inf: Matrix3<f64>,
}

impl PolarizabilityResponse for ConstantResponse {
    fn eval(&self, _omega: Complex64) -> Result<Matrix3<Complex64>, QsError> {
        Ok(self.alpha_inf.map(|v| Complex64::new(v, 0.0)))
    }

    fn alpha_inf(&self) -> Matrix3<f64> {
        self.alpha_inf
    }
}

/// The hypothetical perfect broadband cloak: `α ≡ 0` on the band while the
/// bare inclusion has `α(∞) ≠ 0`. Exists only as the negative fixture the
/// envelope bound must reject.
#[derive(Debug, Clone)]
pub struct ZeroResponse {
    pub alpha_inf: Matrix3<f64>,
}

impl PolarizabilityResponse for ZeroResponse {
    fn eval(&self, _omega: Complex64) -> Result<Matrix3<Complex64>, QsError> {
        Ok(Matrix3::zeros())
    }

    fn alpha_inf(&self) -> Matrix3<f64> {
        self.alpha_inf
    }
}

/// Coated-sphere response `α(ω) = coated_sphere_alpha(ω) · I`.
#[derive(Debug, Clone)]
pub struct CoatedSphereResponse {
    pub a: f64,
    pub b: f64,
    pub eps_core: f64,
    pub shell: DispersionModel,
    pub eps0: f64,
}

impl CoatedSphereResponse {
    pub fn scalar(&self, omega: Complex64) -> Result<Complex64, QsError> {
        coated_sphere_alpha(self.a, self.b, self.eps_core, &self.shell, self.eps0, omega)
    }

    fn scalar_inf(&self) -> f64 {
        let shell_inf = DispersionModel::constant(self.shell.f_inf()).expect("f_inf > 0");
        coated_sphere_alpha(
            self.a,
            self.b,
            self.eps_core,
            &shell_inf,
            self.eps0,
            Complex64::new(1.0, 0.0),
        )
        .expect("constant shell")
        .re
    }
}

impl PolarizabilityResponse for CoatedSphereResponse {
    fn eval(&self, omega: Complex64) -> Result<Matrix3<Complex64>, QsError> {
        let s = self.scalar(omega)?;
        Ok(Matrix3::from_diagonal_element(s))
    }

    fn alpha_inf(&self) -> Matrix3<f64> {
        Matrix3::identity() * self.scalar_inf()
    }
}

/// Geometric primitives for scene rasterization.
#[derive(Debug, Clone)]
pub enum Shape {
    Sphere { center: [f64; 3], radius: f64 },
    Shell { center: [f64; 3], inner: f64, outer: f64 },
    Ellipsoid { center: [f64; 3], semiaxes: [f64; 3] },
}

impl Shape {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Shape::Sphere { center, radius } => dist2(p, *center) <= radius * radius,
            Shape::Shell {
                center,
                inner,
                outer,
            } => {
                let d2 = dist2(p, *center);
                d2 >= inner * inner && d2 <= outer * outer
            }
            Shape::Ellipsoid { center, semiaxes } => {
                let mut s = 0.0;
                for i in 0..3 {
                    let d = (p[i] - center[i]) / semiaxes[i];
                    s += d * d;
                }
                s <= 1.0
            }
        }
    }

    /// Radius of the smallest origin-centered ball containing the shape.
    pub fn extent(&self) -> f64 {
        let (center, reach) = match self {
            Shape::Sphere { center, radius } => (center, *radius),
            Shape::Shell { center, outer, .. } => (center, *outer),
            Shape::Ellipsoid { center, semiaxes } => {
                (center, semiaxes.iter().cloned().fold(0.0_f64, f64::max))
            }
        };
        let norm = (center[0] * center[0] + center[1] * center[1] + center[2] * center[2]).sqrt();
        norm + reach
    }
}

fn dist2(p: [f64; 3], c: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let d = p[i] - c[i];
        s += d * d;
    }
    s
}

/// Material of a scene region.
#[derive(Debug, Clone)]
pub enum Material {
    Constant(f64),
    Model(DispersionModel),
}

impl Material {
    pub fn eval(&self, omega: Complex64) -> Result<Complex64, QsError> {
        match self {
            Material::Constant(v) => Ok(Complex64::new(*v, 0.0)),
            Material::Model(m) => Ok(m.eval(omega)?),
        }
    }

    /// Material value in the high-frequency limit.
    pub fn value_at_infinity(&self) -> f64 {
        match self {
            Material::Constant(v) => *v,
            Material::Model(m) => m.f_inf(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Region {
    pub shape: Shape,
    pub material: Material,
}

/// A rasterizable scattering scene on a cube `[-H, H]³`.
///
/// Regions are painted in order (later entries overwrite earlier ones);
/// cells outside every region carry `background_eps`.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub box_half_width: f64,
    pub grid_n: usize,
    pub background_eps: f64,
    pub regions: Vec<Region>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), QsError> {
        if !(self.box_half_width > 0.0) {
            return Err(QsError::Scene("box half-width must be > 0".into()));
        }
        if self.grid_n < 16 {
            return Err(QsError::Scene(format!(
                "grid_n must be >= 16, got {}",
                self.grid_n
            )));
        }
        if !(self.background_eps > 0.0) {
            return Err(QsError::Scene("background_eps must be > 0".into()));
        }
        if self.regions.is_empty() {
            return Ok(());
        }
        let margin = self.box_half_width / 2.0;
        for (i, region) in self.regions.iter().enumerate() {
            if let Shape::Shell { inner, outer, .. } = &region.shape {
                if !(inner < outer) {
                    return Err(QsError::Scene(format!(
                        "region {i}: shell needs inner < outer"
                    )));
                }
            }
            if let Shape::Ellipsoid { semiaxes, .. } = &region.shape {
                if semiaxes.iter().any(|a| !(*a > 0.0)) {
                    return Err(QsError::Scene(format!(
                        "region {i}: semiaxes must be > 0"
                    )));
                }
            }
            if region.shape.extent() > self.box_half_width - margin {
                return Err(QsError::Scene(format!(
                    "region {i} too close to the box boundary: extent {} exceeds {}",
                    region.shape.extent(),
                    self.box_half_width - margin
                )));
            }
        }
        Ok(())
    }

    /// Radius of the smallest origin ball containing every region.
    pub fn device_radius(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.shape.extent())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests;
