//! `sum-rule`: band integral of Im v_m against its asymptotic bound.

use crate::config::{MeasureSpec, RunConfig};
use crate::output::{Outputs, ReportEnvelope};
use passive_bounds::herglotz::{dirac_sup_scan, sum_rule_integral, Measure};
use serde_json::json;

pub fn run(cfg: &RunConfig, out: &Outputs, _tol: f64) -> anyhow::Result<bool> {
    let model = cfg.build_model()?;
    let band = cfg.build_band()?;
    let spec = cfg.build_measure_spec()?;
    let y_seq = cfg.y_sequence();
    let quad_tol = cfg.quad_tol.unwrap_or(1e-10);

    let mut envelope = ReportEnvelope::new("sum-rule");
    let report = match spec {
        MeasureSpec::Dirac(xi) => {
            sum_rule_integral(&model, &Measure::dirac(xi), &band, &y_seq, quad_tol)?
        }
        MeasureSpec::Uniform(delta) => {
            sum_rule_integral(&model, &Measure::uniform(delta), &band, &y_seq, quad_tol)?
        }
        MeasureSpec::Scan(delta) => {
            let n_grid = cfg.n_grid.unwrap_or(257);
            let (xi_star, value) = dirac_sup_scan(&model, &band, delta, n_grid)?;
            envelope.extra("xi_star", json!(xi_star));
            envelope.extra("scan_value", json!(value));
            envelope.extra("scan_delta", json!(delta));
            sum_rule_integral(&model, &Measure::dirac(xi_star), &band, &y_seq, quad_tol)?
        }
    };

    let rows: Vec<Vec<Option<f64>>> = report
        .y_sequence_used
        .iter()
        .zip(&report.per_y_values)
        .map(|(&y, &v)| vec![Some(y), Some(v)])
        .collect();
    out.write_csv("per_y.csv", &["y", "integral"], &rows)?;

    envelope.extra("f_inf", json!(model.f_inf()));
    envelope.push_sum_rule(report);
    let pass = envelope.pass;
    out.write_report(&envelope)?;
    Ok(pass)
}
