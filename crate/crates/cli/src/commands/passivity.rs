//! `passivity-check`: Im f >= 0 over the band plus conjugate symmetry.

use crate::config::RunConfig;
use crate::output::{Outputs, ReportEnvelope};
use num_complex::Complex64;
use passive_bounds::dispersion::{self, LoadError};
use passive_bounds::report::BoundReport;

pub fn run(cfg: &RunConfig, out: &Outputs, tol: f64) -> anyhow::Result<bool> {
    let band = cfg.build_band()?;
    let n_samples = cfg.n_samples.unwrap_or(1024);
    let mut envelope = ReportEnvelope::new("passivity-check");

    // A tabulated file whose Im column violates passivity is a check
    // failure (exit 1 naming the frequency), not a config error.
    let model = if cfg.model.as_deref() == Some("tabulated") {
        let path = cfg
            .path
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("model = \"tabulated\" needs `path`"))?;
        match dispersion::load_tabulated(path) {
            Ok(m) => m,
            Err(LoadError::NegativeIm { omega, im, .. }) => {
                let report = BoundReport::new("passivity", band, 0.0, im, tol)
                    .with_witness(omega, im)
                    .with_note(format!("tabulated Im f({omega}) = {im} < 0 at load"));
                envelope.push_bound(report);
                out.write_report(&envelope)?;
                return Ok(false);
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        cfg.build_model()?
    };

    envelope.push_bound(model.check_passivity(&band, n_samples, tol)?);

    let mid = 0.5 * (band.omega_minus() + band.omega_plus());
    let height = 0.5 * (band.omega_plus() - band.omega_minus());
    let mut samples: Vec<Complex64> = band
        .omega_grid(32)
        .into_iter()
        .map(|w| Complex64::new(w, 0.0))
        .collect();
    if !matches!(model, dispersion::DispersionModel::Tabulated(_)) {
        samples.extend(
            band.omega_grid(16)
                .into_iter()
                .map(|w| Complex64::new(w, height)),
        );
        // Imaginary-axis point: symmetry forces realness there.
        samples.push(Complex64::new(0.0, mid));
    }
    envelope.push_bound(model.check_symmetry(&samples, tol)?);

    let pass = envelope.pass;
    out.write_report(&envelope)?;
    Ok(pass)
}
