//! Numerical machinery for bounds on passive linear systems.
//!
//! The crate evaluates frequency-domain response functions `f(ω)` of passive
//! causal materials (Drude/Lorentz models or tabulated data), builds the
//! associated Stieltjes and Herglotz functions, computes sum-rule integrals
//! and their measure-parametrized bounds, checks transparency-window and
//! lossy-band inequalities (including a Kramers–Kronig reconstruction), and
//! produces quasi-static polarizability tensors for spheres, coated spheres,
//! ellipsoids and rasterized scenes solved with a finite-volume solver.
//!
//! Everything is organized around a single convention: the upper half of the
//! complex frequency plane is the physical domain, and the square root and
//! logarithm use the branch cut along the positive real axis with boundary
//! values taken as limits from above (see [`complex_core`]).

pub mod bounds;
pub mod complex_core;
pub mod dispersion;
pub mod herglotz;
pub mod interp;
pub mod quad;
pub mod quasistatic;
pub mod report;

pub use dispersion::{DispersionModel, FrequencyBand};
pub use herglotz::{HerglotzTriple, Measure, SumRuleReport};
pub use quasistatic::PolarizabilityResponse;
pub use report::BoundReport;
