//! `polarizability`: assemble alpha(omega) for a rasterized scene, with
//! symmetry and monopole diagnostics per frequency.

use crate::config::RunConfig;
use crate::output::{Outputs, ReportEnvelope};
use num_complex::Complex64;
use passive_bounds::quasistatic::{assemble_alpha, fd_solve_potential, SolverOptions};
use passive_bounds::report::BoundReport;
use serde_json::json;

pub fn run(cfg: &RunConfig, out: &Outputs, tol: f64) -> anyhow::Result<bool> {
    let scene = cfg.build_scene()?;
    let omegas = cfg.omegas.clone().unwrap_or_else(|| vec![1.0]);
    let opts = SolverOptions {
        monopole_tol: cfg.monopole_tol.unwrap_or(1e-2),
        ..SolverOptions::default()
    };

    let band = cfg.build_band().unwrap_or_else(|_| {
        let lo = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = omegas.iter().cloned().fold(0.0_f64, f64::max);
        passive_bounds::dispersion::FrequencyBand::new(lo * 0.99, hi * 1.01 + 1e-9)
            .expect("positive frequencies")
    });

    let mut envelope = ReportEnvelope::new("polarizability");
    let mut rows: Vec<Vec<Option<f64>>> = Vec::with_capacity(omegas.len());
    let mut structures: Vec<&'static str> = Vec::with_capacity(omegas.len());

    for &omega in &omegas {
        let assembled = assemble_alpha(&scene, Complex64::new(omega, 0.0), &opts)?;
        let alpha = assembled.alpha;

        let mut row: Vec<Option<f64>> = vec![Some(omega)];
        for i in 0..3 {
            for j in 0..3 {
                row.push(Some(alpha[(i, j)].re));
                row.push(Some(alpha[(i, j)].im));
            }
        }
        row.push(Some(assembled.symmetry_deviation));
        row.push(Some(assembled.monopole_ratio));
        rows.push(row);

        structures.push(classify_structure(&alpha));

        envelope.push_bound(
            BoundReport::new("monopole-quality", band, assembled.monopole_ratio, opts.monopole_tol, 0.0)
                .with_witness(omega, assembled.monopole_ratio)
                .with_note("|Q| / (|p|/R) against the acceptance threshold"),
        );
        envelope.push_bound(
            BoundReport::new("tensor-symmetry", band, assembled.symmetry_deviation, 1e-3, tol)
                .with_witness(omega, assembled.symmetry_deviation)
                .with_note("|alpha - alpha^T| / |alpha| (Frobenius)"),
        );
    }

    let mut header: Vec<String> = vec!["omega".into()];
    for i in 0..3 {
        for j in 0..3 {
            header.push(format!("re_a{}{}", i + 1, j + 1));
            header.push(format!("im_a{}{}", i + 1, j + 1));
        }
    }
    header.push("symmetry_deviation".into());
    header.push("monopole_ratio".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("alpha.csv", &header_refs, &rows)?;

    envelope.extra("omegas", json!(omegas));
    envelope.extra("structures", json!(structures));
    envelope.extra("grid_n", json!(scene.grid_n));

    if cfg.export_potential.unwrap_or(false) {
        let grid = fd_solve_potential(
            &scene,
            [1.0, 0.0, 0.0],
            Complex64::new(omegas[0], 0.0),
            &opts,
        )?;
        out.export_potential("potential_ex", &grid)?;
    }

    let pass = envelope.pass;
    out.write_report(&envelope)?;
    Ok(pass)
}

/// Rough structural classification used by the report diagnostics.
fn classify_structure(alpha: &nalgebra::Matrix3<Complex64>) -> &'static str {
    let diag_min = (0..3).map(|i| alpha[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    let diag_max = (0..3).map(|i| alpha[(i, i)].norm()).fold(0.0_f64, f64::max);
    let off_max = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| alpha[(i, j)].norm())
        .fold(0.0_f64, f64::max);
    if diag_max == 0.0 {
        return "zero";
    }
    if off_max < 1e-3 * diag_max {
        if (diag_max - diag_min) / diag_max < 1e-3 {
            "scalar"
        } else {
            "diagonal"
        }
    } else {
        "full"
    }
}
