//! Run configuration: one flat TOML file per invocation.
//!
//! Shared keys build the dispersion model (`model`, `f_inf`, `omega_p`,
//! `gamma`, `terms`, `path`) and the band (`band` in rad/s or `band_x` in
//! squared units). Command-specific keys are documented on the commands and
//! in the README; unknown keys are rejected so typos surface as exit 2.

use anyhow::{bail, Context};
use passive_bounds::dispersion::{self, DispersionModel, FrequencyBand, LorentzTerm, LosslessTerm};
use passive_bounds::quasistatic::{Material, Region, SceneSpec, Shape};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // Model of f(omega).
    pub model: Option<String>,
    pub f_inf: Option<f64>,
    pub omega_p: Option<f64>,
    pub gamma: Option<f64>,
    /// Lorentz rows `[A, xi, gamma]`; lossless rows `[A, xi]`.
    pub terms: Option<Vec<Vec<f64>>>,
    /// CSV path for `model = "tabulated"`.
    pub path: Option<PathBuf>,

    // Frequency band.
    pub band: Option<[f64; 2]>,
    pub band_x: Option<[f64; 2]>,

    // Sampling and quadrature.
    pub n_samples: Option<usize>,
    pub n_grid: Option<usize>,
    pub quad_tol: Option<f64>,
    pub y_seq: Option<Vec<f64>>,

    // sum-rule: `dirac:<xi>`, `uniform:<delta>` or `scan:<delta>`.
    pub measure: Option<String>,

    // bound-check.
    pub check: Option<String>,
    pub delta: Option<f64>,
    /// Kramers-Kronig sampling grid `[omega_lo, omega_hi, n]` (log-spaced).
    pub kk_grid: Option<[f64; 3]>,

    // cloak-demo (coated sphere).
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub eps_core: Option<f64>,
    pub eps0: Option<f64>,
    pub shell_f_inf: Option<f64>,
    pub shell_omega_p: Option<f64>,
    pub shell_gamma: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub omega0: Option<f64>,
    pub e0: Option<[f64; 3]>,
    /// Optional cross-check of the series polarizability against the
    /// finite-volume solver at this grid resolution.
    pub fd_grid_n: Option<usize>,
    pub fd_omega: Option<f64>,

    // polarizability: scene file, or the inline keys below.
    pub scene: Option<PathBuf>,
    #[serde(rename = "box")]
    pub box_half_width: Option<f64>,
    pub grid: Option<usize>,
    pub background_eps: Option<f64>,
    #[serde(default)]
    pub regions: Vec<RawRegion>,
    pub omegas: Option<Vec<f64>>,
    pub monopole_tol: Option<f64>,
    pub export_potential: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRegion {
    pub shape: String,
    #[serde(default)]
    pub center: [f64; 3],
    pub radius: Option<f64>,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
    pub semiaxes: Option<[f64; 3]>,
    pub material: RawMaterial,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RawMaterial {
    Constant { value: f64 },
    Drude { f_inf: f64, omega_p: f64, gamma: f64 },
    Lorentz { f_inf: f64, terms: Vec<[f64; 3]> },
    LosslessLorentz { f_inf: f64, terms: Vec<[f64; 2]> },
}

/// Scene file layout (same region grammar as the inline form).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScene {
    #[serde(rename = "box")]
    pub box_half_width: f64,
    pub grid: usize,
    pub background_eps: Option<f64>,
    #[serde(default)]
    pub regions: Vec<RawRegion>,
}

#[derive(Debug, Clone, Copy)]
pub enum MeasureSpec {
    Dirac(f64),
    Uniform(f64),
    Scan(f64),
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn check_tabulated(&self) -> bool {
        self.model.as_deref() == Some("tabulated")
    }

    pub fn build_model(&self) -> anyhow::Result<DispersionModel> {
        let kind = self.model.as_deref().unwrap_or("drude");
        let f_inf = self.f_inf.unwrap_or(1.0);
        let model = match kind {
            "constant" => DispersionModel::constant(f_inf)?,
            "drude" => DispersionModel::drude(
                f_inf,
                self.omega_p.unwrap_or(1.0),
                self.gamma.unwrap_or(0.0),
            )?,
            "lorentz" => {
                let rows = self
                    .terms
                    .as_ref()
                    .context("model = \"lorentz\" needs `terms = [[A, xi, gamma], ...]`")?;
                let mut terms = Vec::with_capacity(rows.len());
                for row in rows {
                    let [a, xi, gamma] = row[..] else {
                        bail!("lorentz term must be [A, xi, gamma], got {row:?}");
                    };
                    terms.push(LorentzTerm { a, xi, gamma });
                }
                DispersionModel::lorentz(f_inf, terms)?
            }
            "lossless-lorentz" => {
                let rows = self
                    .terms
                    .as_ref()
                    .context("model = \"lossless-lorentz\" needs `terms = [[A, xi], ...]`")?;
                let mut terms = Vec::with_capacity(rows.len());
                for row in rows {
                    let [a, xi] = row[..] else {
                        bail!("lossless term must be [A, xi], got {row:?}");
                    };
                    terms.push(LosslessTerm { a, xi });
                }
                DispersionModel::lossless_lorentz(f_inf, terms)?
            }
            "tabulated" => {
                let path = self.path.as_ref().context("model = \"tabulated\" needs `path`")?;
                dispersion::load_tabulated(path)
                    .with_context(|| format!("loading {}", path.display()))?
            }
            other => bail!("unknown model kind {other:?}"),
        };
        Ok(model)
    }

    pub fn build_band(&self) -> anyhow::Result<FrequencyBand> {
        match (self.band, self.band_x) {
            (Some(_), Some(_)) => bail!("give either `band` or `band_x`, not both"),
            (Some([lo, hi]), None) => Ok(FrequencyBand::new(lo, hi)?),
            (None, Some([lo, hi])) => Ok(FrequencyBand::from_x(lo, hi)?),
            (None, None) => bail!("config needs `band = [omega-, omega+]` or `band_x = [x-, x+]`"),
        }
    }

    pub fn build_measure_spec(&self) -> anyhow::Result<MeasureSpec> {
        let raw = self
            .measure
            .as_deref()
            .context("config needs `measure = \"dirac:<xi>|uniform:<delta>|scan:<delta>\"`")?;
        let (kind, value) = raw
            .split_once(':')
            .with_context(|| format!("malformed measure spec {raw:?}"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("malformed measure parameter in {raw:?}"))?;
        match kind.trim() {
            "dirac" => Ok(MeasureSpec::Dirac(value)),
            "uniform" if value > 0.0 => Ok(MeasureSpec::Uniform(value)),
            "scan" if value > 0.0 => Ok(MeasureSpec::Scan(value)),
            "uniform" | "scan" => bail!("measure width must be > 0 in {raw:?}"),
            other => bail!("unknown measure kind {other:?}"),
        }
    }

    pub fn y_sequence(&self) -> Vec<f64> {
        self.y_seq
            .clone()
            .unwrap_or_else(passive_bounds::herglotz::default_y_sequence)
    }

    pub fn build_scene(&self) -> anyhow::Result<SceneSpec> {
        if let Some(path) = &self.scene {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scene {}", path.display()))?;
            let raw: RawScene = toml::from_str(&text)
                .with_context(|| format!("parsing scene {}", path.display()))?;
            return scene_from_raw(
                raw.box_half_width,
                raw.grid,
                raw.background_eps.unwrap_or(1.0),
                &raw.regions,
            );
        }
        let half = self
            .box_half_width
            .context("scene needs `box = <half width>` (or `scene = <path>`)")?;
        let grid = self.grid.context("scene needs `grid = <n>`")?;
        scene_from_raw(half, grid, self.background_eps.unwrap_or(1.0), &self.regions)
    }
}

fn scene_from_raw(
    box_half_width: f64,
    grid_n: usize,
    background_eps: f64,
    regions: &[RawRegion],
) -> anyhow::Result<SceneSpec> {
    let mut out = Vec::with_capacity(regions.len());
    for (i, r) in regions.iter().enumerate() {
        let shape = match r.shape.as_str() {
            "sphere" => Shape::Sphere {
                center: r.center,
                radius: r
                    .radius
                    .with_context(|| format!("region {i}: sphere needs `radius`"))?,
            },
            "shell" => Shape::Shell {
                center: r.center,
                inner: r
                    .inner
                    .with_context(|| format!("region {i}: shell needs `inner`"))?,
                outer: r
                    .outer
                    .with_context(|| format!("region {i}: shell needs `outer`"))?,
            },
            "ellipsoid" => Shape::Ellipsoid {
                center: r.center,
                semiaxes: r
                    .semiaxes
                    .with_context(|| format!("region {i}: ellipsoid needs `semiaxes`"))?,
            },
            other => bail!("region {i}: unknown shape {other:?}"),
        };
        let material = match &r.material {
            RawMaterial::Constant { value } => Material::Constant(*value),
            RawMaterial::Drude {
                f_inf,
                omega_p,
                gamma,
            } => Material::Model(DispersionModel::drude(*f_inf, *omega_p, *gamma)?),
            RawMaterial::Lorentz { f_inf, terms } => Material::Model(DispersionModel::lorentz(
                *f_inf,
                terms
                    .iter()
                    .map(|[a, xi, gamma]| LorentzTerm {
                        a: *a,
                        xi: *xi,
                        gamma: *gamma,
                    })
                    .collect(),
            )?),
            RawMaterial::LosslessLorentz { f_inf, terms } => {
                Material::Model(DispersionModel::lossless_lorentz(
                    *f_inf,
                    terms
                        .iter()
                        .map(|[a, xi]| LosslessTerm { a: *a, xi: *xi })
                        .collect(),
                )?)
            }
        };
        out.push(Region { shape, material });
    }
    let scene = SceneSpec {
        box_half_width,
        grid_n,
        background_eps,
        regions: out,
    };
    scene.validate()?;
    Ok(scene)
}
