//! CSV and JSON reports.

use std::io::Write;

use serde_json::{json, Value};
use shellvib_core::solver::ModalResult;

use crate::config::RunConfig;
use crate::pipeline::{ProbeValue, RunOutput, Solution};

/// One row per mode: `mode_index` (1-based), `frequency_hz`, `rigid_flag`,
/// `residual`.
pub fn write_modal_csv(w: impl Write, r: &ModalResult) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["mode_index", "frequency_hz", "rigid_flag", "residual"])?;
    for i in 0..r.frequencies.len() {
        out.write_record([
            (i + 1).to_string(),
            r.frequencies[i].to_string(),
            r.rigid[i].to_string(),
            r.residuals[i].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_probe_csv(w: impl Write, probes: &[ProbeValue]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["probe", "face", "xi", "eta", "x", "y", "z", "ux", "uy", "uz"])?;
    for p in probes {
        let mut row = vec![p.name.clone(), p.face.to_string(), p.xi.to_string(), p.eta.to_string()];
        row.extend(p.position.iter().chain(&p.displacement).map(|v| v.to_string()));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn json_report(cfg: &RunConfig, out: &RunOutput) -> Value {
    let sys = &out.system;
    let potentials = [sys.d1.is_some(), sys.d2.is_some()].iter().filter(|&&b| b).count() * sys.n_vertices;
    let mut report = json!({
        "config": cfg,
        "mesh": out.stats,
        "dofs": {
            "displacement": 3 * sys.n_vertices,
            "free_displacement": sys.num_free(),
            "potential": potentials,
        },
    });
    match &out.solution {
        Solution::Modal(r) => {
            let modes: Vec<Value> = (0..r.frequencies.len())
                .map(|i| {
                    json!({
                        "mode_index": i + 1,
                        "frequency_hz": r.frequencies[i],
                        "eigenvalue": r.eigenvalues[i],
                        "rigid": r.rigid[i],
                        "residual": r.residuals[i],
                    })
                })
                .collect();
            report["modal"] = json!({
                "num_rigid": r.num_rigid(),
                "iterations": r.iterations,
                "modes": modes,
            });
        }
        Solution::Static { result, probes } => {
            let max = result.displacement.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            report["static"] = json!({
                "max_abs_displacement_coefficient": max,
                "probes": probes,
            });
        }
    }
    report
}
