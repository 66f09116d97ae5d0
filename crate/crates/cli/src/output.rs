//! Result files. Floats in CSV use `{:.16e}` (17 significant digits); JSON uses
//! serde_json's shortest round-trip form. Key order is fixed by struct layout.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sbp_core::{
    DiagnosticsReport, EnergyReport, GridSpec, RadialField, RadialGrid, SbpParams, SobolevReport, SweepReport,
};
use serde::Serialize;

use crate::config::OutputConfig;
use crate::validate::Gate;

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub grad_rel: f64,
    pub ground_state_guarantee: bool,
    pub critical: bool,
    pub sobolev_grad_sq: Option<f64>,
    #[serde(flatten)]
    pub report: DiagnosticsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDocument {
    pub params: SbpParams,
    pub grid: GridSpec,
    pub energy: EnergyReport,
    pub converged: bool,
    pub iterations: usize,
    pub c_estimate: f64,
    pub decay_slope: Option<f64>,
    pub diagnostics: SolveDiagnostics,
}

pub struct Outputs {
    dir: PathBuf,
    csv: bool,
    json: bool,
}

type IoResult = std::io::Result<()>;

fn e16(x: f64) -> String {
    format!("{x:.16e}")
}

impl Outputs {
    pub fn new(cfg: &OutputConfig) -> std::io::Result<Self> {
        fs::create_dir_all(&cfg.directory)?;
        Ok(Outputs {
            dir: cfg.directory.clone(),
            csv: cfg.csv(),
            json: cfg.json(),
        })
    }

    fn create(&self, name: &str) -> std::io::Result<BufWriter<fs::File>> {
        Ok(BufWriter::new(fs::File::create(self.dir.join(name))?))
    }

    fn json_file(&self, name: &str, value: &impl Serialize) -> IoResult {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()
    }

    fn key_values(&self, name: &str, rows: &[(&str, String)]) -> IoResult {
        let mut w = self.create(name)?;
        writeln!(w, "key,value")?;
        for (k, v) in rows {
            writeln!(w, "{k},{v}")?;
        }
        w.flush()
    }

    pub fn write_solve(&self, doc: &SolveDocument, u: &RadialField, phi: &RadialField) -> IoResult {
        if self.json {
            self.json_file("solve.json", doc)?;
        }
        if self.csv {
            let mut w = self.create("field.csv")?;
            writeln!(w, "r,u,phi")?;
            for ((r, u), p) in u.grid().nodes().iter().zip(u.values()).zip(phi.values()) {
                writeln!(w, "{},{},{}", e16(*r), e16(*u), e16(*p))?;
            }
            w.flush()?;
            let e = &doc.energy;
            let mut rows: Vec<(&str, String)> = vec![
                ("omega", e16(doc.params.omega)),
                ("mu", e16(doc.params.mu)),
                ("a", e16(doc.params.a)),
                ("p", e16(doc.params.p)),
                ("n", doc.grid.n.to_string()),
                ("r_max", e16(doc.grid.r_max)),
                ("grading", e16(doc.grid.grading)),
                ("kinetic", e16(e.kinetic)),
                ("mass", e16(e.mass)),
                ("nonlocal", e16(e.nonlocal)),
                ("power", e16(e.power)),
                ("J", e16(e.j)),
                ("nehari", e16(e.nehari)),
                ("pohozaev", e16(e.pohozaev)),
                ("i_val", e16(e.i_val)),
                ("converged", doc.converged.to_string()),
                ("iterations", doc.iterations.to_string()),
                ("c_estimate", e16(doc.c_estimate)),
                ("grad_rel", e16(doc.diagnostics.grad_rel)),
                ("ground_state_guarantee", doc.diagnostics.ground_state_guarantee.to_string()),
                ("critical", doc.diagnostics.critical.to_string()),
            ];
            rows.extend(doc.diagnostics.report.flat());
            self.key_values("diagnostics.csv", &rows)?;
        }
        Ok(())
    }

    pub fn write_sweep(&self, rep: &SweepReport) -> IoResult {
        if self.json {
            self.json_file("sweep.json", rep)?;
        }
        if self.csv {
            let mut w = self.create("sweep.csv")?;
            writeln!(w, "a,J,u_diff_h1,phi_grad_diff,a_lap_phi,converged,non_monotone")?;
            for r in &rep.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    e16(r.a),
                    e16(r.j),
                    e16(r.u_diff_h1),
                    e16(r.phi_grad_diff),
                    e16(r.a_lap_phi),
                    r.converged,
                    r.non_monotone
                )?;
            }
            w.flush()?;
        }
        Ok(())
    }

    pub fn write_gates(&self, gates: &[Gate]) -> IoResult {
        if self.json {
            self.json_file("validate.json", &gates)?;
        }
        if self.csv {
            let mut w = self.create("validate.csv")?;
            writeln!(w, "gate,worst,tolerance,pass")?;
            for g in gates {
                writeln!(w, "{},{},{},{}", g.name, e16(g.worst), e16(g.tolerance), g.pass)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    pub fn write_sobolev(&self, rep: &SobolevReport) -> IoResult {
        if self.json {
            self.json_file("sobolev.json", rep)?;
        }
        if self.csv {
            self.key_values(
                "sobolev.csv",
                &[
                    ("r_max", e16(rep.r_max)),
                    ("n", rep.n.to_string()),
                    ("grad_sq", e16(rep.grad_sq)),
                    ("l6_pow6", e16(rep.l6_pow6)),
                    ("mismatch", e16(rep.mismatch)),
                    ("rayleigh", e16(rep.rayleigh)),
                    ("k_from_grad", e16(rep.k_from_grad)),
                    ("truncation_warning", rep.truncation_warning.to_string()),
                ],
            )?;
        }
        Ok(())
    }

    pub fn write_diagnostics(&self, rep: &DiagnosticsReport) -> IoResult {
        if self.json {
            self.json_file("diagnostics.json", rep)?;
        }
        if self.csv {
            self.key_values("diagnostics.csv", &rep.flat())?;
        }
        Ok(())
    }
}

#[derive(Debug, serde::Deserialize)]
struct FieldRow {
    r: f64,
    u: f64,
    #[allow(dead_code)]
    phi: Option<f64>,
}

/// Reads a field table with header `r,u[,phi]`; the grid is rebuilt from the `r` column.
pub fn read_field(path: &Path) -> Result<(Arc<RadialGrid>, RadialField), Box<dyn std::error::Error>> {
    let mut reader = csv::Reader::from_path(path)?;
    let (mut r, mut u) = (Vec::new(), Vec::new());
    for row in reader.deserialize() {
        let row: FieldRow = row?;
        r.push(row.r);
        u.push(row.u);
    }
    Ok(crate::field_from_columns(r, u)?)
}
