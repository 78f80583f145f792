//! `cloak-demo`: find the coated-sphere cloaking frequency, then show the
//! envelope that forces the response away from zero across the band.

use crate::config::RunConfig;
use crate::output::{Outputs, ReportEnvelope};
use nalgebra::Vector3;
use num_complex::Complex64;
use passive_bounds::bounds::cloaking_envelope;
use passive_bounds::dispersion::DispersionModel;
use passive_bounds::quasistatic::{
    assemble_alpha, design_cloak_frequency, CoatedSphereResponse, Material, PolarizabilityResponse,
    Region, SceneSpec, Shape, SolverOptions,
};
use serde_json::json;

pub fn run(cfg: &RunConfig, out: &Outputs, tol: f64) -> anyhow::Result<bool> {
    let a = cfg.a.unwrap_or(0.5);
    let b = cfg.b.unwrap_or(1.0);
    let eps_core = cfg.eps_core.unwrap_or(3.0);
    let eps0 = cfg.eps0.unwrap_or(1.0);
    let shell = DispersionModel::drude(
        cfg.shell_f_inf.unwrap_or(1.0),
        cfg.shell_omega_p.unwrap_or(1.0),
        cfg.shell_gamma.unwrap_or(0.0),
    )?;
    let bracket = cfg.bracket.map(|[lo, hi]| (lo, hi)).unwrap_or((2.0, 3.0));
    let n_grid = cfg.n_grid.unwrap_or(257);

    let omega0 = match cfg.omega0 {
        Some(w) => w,
        None => design_cloak_frequency(a, b, eps_core, &shell, eps0, bracket)?,
    };
    let band = cfg.build_band().unwrap_or_else(|_| {
        passive_bounds::dispersion::FrequencyBand::new(0.8 * omega0, 1.2 * omega0)
            .expect("valid default band")
    });

    let resp = CoatedSphereResponse {
        a,
        b,
        eps_core,
        shell: shell.clone(),
        eps0,
    };
    let e0_raw = cfg.e0.unwrap_or([1.0, 0.0, 0.0]);
    let e0 = Vector3::new(
        Complex64::new(e0_raw[0], 0.0),
        Complex64::new(e0_raw[1], 0.0),
        Complex64::new(e0_raw[2], 0.0),
    );

    let env = cloaking_envelope(&resp, &e0, &band, omega0, n_grid, tol)?;

    let rows: Vec<Vec<Option<f64>>> = env
        .curve
        .iter()
        .map(|p| vec![Some(p.omega), Some(p.value), p.envelope_lo, p.envelope_hi])
        .collect();
    out.write_csv(
        "envelope.csv",
        &["omega", "value", "envelope_lo", "envelope_hi"],
        &rows,
    )?;

    let mut envelope = ReportEnvelope::new("cloak-demo");
    let f_inf = resp.scalar_response_inf(&e0);
    let f_at_omega0 = resp.scalar_response(Complex64::new(omega0, 0.0), &e0)?;
    envelope.extra("omega0", json!(omega0));
    envelope.extra("f_inf", json!(f_inf));
    envelope.extra("f_at_omega0_abs", json!(f_at_omega0.norm()));
    envelope.extra("cloak_claim_consistent", json!(env.cloak_claim_consistent));
    envelope.push_bound(env.upper);
    envelope.push_bound(env.lower);
    if let Some(tensor) = env.tensor {
        envelope.push_bound(tensor);
    }

    // Optional finite-volume cross-check of the series polarizability.
    if let Some(fd_n) = cfg.fd_grid_n {
        let omega_fd = cfg.fd_omega.unwrap_or(0.5 * (band.omega_minus() + band.omega_plus()));
        let scene = SceneSpec {
            box_half_width: 4.0 * b,
            grid_n: fd_n,
            background_eps: eps0,
            regions: vec![
                Region {
                    shape: Shape::Shell {
                        center: [0.0; 3],
                        inner: a,
                        outer: b,
                    },
                    material: Material::Model(shell.clone()),
                },
                Region {
                    shape: Shape::Sphere {
                        center: [0.0; 3],
                        radius: a,
                    },
                    material: Material::Constant(eps_core),
                },
            ],
        };
        let fd = assemble_alpha(&scene, Complex64::new(omega_fd, 0.0), &SolverOptions::default())?;
        let series = resp.scalar(Complex64::new(omega_fd, 0.0))?;
        let fd_diag = (fd.alpha[(0, 0)] + fd.alpha[(1, 1)] + fd.alpha[(2, 2)]) / 3.0;
        let rel = (fd_diag - series).norm() / series.norm().max(1e-300);
        envelope.extra("fd_omega", json!(omega_fd));
        envelope.extra("fd_alpha_re", json!(fd_diag.re));
        envelope.extra("series_alpha_re", json!(series.re));
        envelope.extra("fd_rel_error", json!(rel));
    }

    let pass = envelope.pass;
    out.write_report(&envelope)?;
    Ok(pass)
}
