//! Report envelope and file emission.
//!
//! One `report.json` per run, schema `passive-bounds/1`, with deterministic
//! field order and shortest-round-trip numerics so that identical configs
//! produce byte-identical files. CSV curves sit next to it.

use anyhow::Context;
use passive_bounds::herglotz::SumRuleReport;
use passive_bounds::quasistatic::PotentialGrid;
use passive_bounds::report::BoundReport;
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_ID: &str = "passive-bounds/1";

#[derive(Debug, Serialize)]
pub struct ReportEnvelope {
    pub schema: &'static str,
    pub command: String,
    pub pass: bool,
    pub bound_reports: Vec<BoundReport>,
    pub sum_rule_reports: Vec<SumRuleReport>,
    pub extras: Map<String, Value>,
}

impl ReportEnvelope {
    pub fn new(command: &str) -> Self {
        Self {
            schema: SCHEMA_ID,
            command: command.to_string(),
            pass: true,
            bound_reports: Vec::new(),
            sum_rule_reports: Vec::new(),
            extras: Map::new(),
        }
    }

    pub fn push_bound(&mut self, report: BoundReport) {
        self.pass &= report.pass;
        self.bound_reports.push(report);
    }

    pub fn push_sum_rule(&mut self, report: SumRuleReport) {
        self.pass &= report.pass;
        self.sum_rule_reports.push(report);
    }

    pub fn extra(&mut self, key: &str, value: Value) {
        self.extras.insert(key.to_string(), value);
    }
}

pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        // Fail early when the directory is not writable.
        let probe = dir.join(".write-probe");
        std::fs::write(&probe, b"")
            .with_context(|| format!("output directory {} not writable", dir.display()))?;
        let _ = std::fs::remove_file(&probe);
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_report(&self, envelope: &ReportEnvelope) -> anyhow::Result<PathBuf> {
        let path = self.path("report.json");
        let mut json = serde_json::to_string_pretty(envelope)?;
        json.push('\n');
        std::fs::write(&path, json)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Write a CSV file; `None` cells become empty fields.
    pub fn write_csv(
        &self,
        name: &str,
        header: &[&str],
        rows: &[Vec<Option<f64>>],
    ) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .map(|cell| cell.map(fmt_f64).unwrap_or_default())
                .collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Binary little-endian float64 dump of a potential grid (separate real
    /// and imaginary arrays) plus a JSON sidecar with dims/spacing/units.
    pub fn export_potential(&self, name: &str, grid: &PotentialGrid) -> anyhow::Result<()> {
        let re_name = format!("{name}.re.f64");
        let im_name = format!("{name}.im.f64");
        for (file, select) in [(&re_name, 0usize), (&im_name, 1usize)] {
            let path = self.path(file);
            let f = std::fs::File::create(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            let mut w = std::io::BufWriter::new(f);
            for v in &grid.v_s {
                let x = if select == 0 { v.re } else { v.im };
                w.write_all(&x.to_le_bytes())?;
            }
            w.flush()?;
        }
        let sidecar = serde_json::json!({
            "dims": [grid.n, grid.n, grid.n],
            "spacing": grid.h,
            "half_width": grid.half_width,
            "layout": "x-fastest, cell-centered",
            "units": { "potential": "V", "length": "m" },
            "files": { "re": re_name, "im": im_name },
            "background_eps": grid.background_eps,
            "loss_offset": grid.loss_offset_applied,
        });
        let path = self.path(&format!("{name}.json"));
        let mut json = serde_json::to_string_pretty(&sidecar)?;
        json.push('\n');
        std::fs::write(&path, json)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Shortest representation that round-trips through f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
