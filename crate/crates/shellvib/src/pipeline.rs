//! Config-driven analysis: mesh, model, assembly, solve and output files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shellvib_core::assembly::{apply_constraints, assemble_system, AssembledSystem, ShellModel};
use shellvib_core::mesh::{generate_benchmark_mesh, ControlMesh};
use shellvib_core::solver::{
    displacement_at, position_at, solve_modal, solve_static, ModalResult, StaticResult,
};
use shellvib_core::Vec3;

use crate::config::{Analysis, MeshSource, ProbeLocation, RunConfig};
use crate::vtk::{write_vtk, Field, SurfaceSampler};
use crate::{obj, report, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshStats {
    /// Elements of the analysis mesh (after isolating extraordinary
    /// vertices, if that was needed).
    pub elements: usize,
    pub input_faces: usize,
    pub vertices: usize,
    pub extraordinary_vertices: usize,
    pub irregular_elements: usize,
    pub isolation_steps: usize,
    pub closed: bool,
}

impl MeshStats {
    pub fn of(input: &ControlMesh, model: &ShellModel) -> MeshStats {
        let m = model.mesh();
        MeshStats {
            elements: model.num_elements(),
            input_faces: input.num_faces(),
            vertices: model.num_vertices(),
            extraordinary_vertices: m.extraordinary_vertices().len(),
            irregular_elements: model.patches.num_irregular(),
            isolation_steps: model.patches.isolation_steps,
            closed: m.is_closed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeValue {
    pub name: String,
    pub face: usize,
    pub xi: f64,
    pub eta: f64,
    pub position: [f64; 3],
    pub displacement: [f64; 3],
}

#[derive(Clone, Debug)]
pub enum Solution {
    Modal(ModalResult),
    Static { result: StaticResult, probes: Vec<ProbeValue> },
}

pub struct RunOutput {
    pub model: ShellModel,
    pub system: AssembledSystem,
    pub stats: MeshStats,
    pub solution: Solution,
}

/// Paths of the files written by [`write_outputs`].
#[derive(Clone, Debug, Default)]
pub struct Written {
    pub report: PathBuf,
    pub csv: PathBuf,
    pub vtk: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn build_mesh(cfg: &RunConfig, base: &Path) -> Result<ControlMesh> {
    match (&cfg.mesh, cfg.mesh.benchmark()) {
        (MeshSource::Obj(p), _) => obj::load_obj(resolve(base, p)),
        (_, Some(spec)) => Ok(generate_benchmark_mesh(&spec)?),
        _ => unreachable!("benchmark sources always have a spec"),
    }
}

pub fn build_model(cfg: &RunConfig, mesh: &ControlMesh) -> Result<ShellModel> {
    let mut model = ShellModel::new(mesh, cfg.thickness, cfg.material_spec(), cfg.electric_condition())?;
    model.constraints = cfg.constraints();
    model.areal_load = cfg.areal_load();
    model.body_force = cfg.body_force();
    model.validate()?;
    Ok(model)
}

/// Closest limit-surface point to `target`: a 9x9 sample search over all
/// elements followed by a shrinking pattern search inside the best element.
pub fn locate(model: &ShellModel, target: Vec3) -> Result<(usize, f64, f64)> {
    const GRID: usize = 9;
    let mut best = (f64::INFINITY, 0, 0.0, 0.0);
    for f in 0..model.num_elements() {
        for j in 0..GRID {
            for i in 0..GRID {
                let (u, v) = (i as f64 / (GRID - 1) as f64, j as f64 / (GRID - 1) as f64);
                let d = (position_at(model, f, u, v)? - target).norm();
                if d < best.0 {
                    best = (d, f, u, v);
                }
            }
        }
    }
    let (mut d, f, mut u, mut v) = best;
    let mut step = 0.5 / (GRID - 1) as f64;
    while step > 1e-12 {
        let mut moved = false;
        for (du, dv) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (nu, nv) = ((u + du).clamp(0.0, 1.0), (v + dv).clamp(0.0, 1.0));
            let nd = (position_at(model, f, nu, nv)? - target).norm();
            if nd < d {
                (d, u, v, moved) = (nd, nu, nv, true);
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((f, u, v))
}

fn probe_values(cfg: &RunConfig, model: &ShellModel, u_full: &[f64]) -> Result<Vec<ProbeValue>> {
    let Analysis::Static(s) = &cfg.analysis else { return Ok(Vec::new()) };
    s.probes
        .iter()
        .map(|p| {
            let (face, xi, eta) = match p.location()? {
                ProbeLocation::Face { face, xi, eta } => {
                    if face >= model.num_elements() {
                        return Err(Error::Config(format!(
                            "probe {:?}: element {face} does not exist ({} elements)",
                            p.name,
                            model.num_elements()
                        )));
                    }
                    (face, xi, eta)
                }
                ProbeLocation::Near(x) => locate(model, x)?,
            };
            let x = position_at(model, face, xi, eta)?;
            let d = displacement_at(model, u_full, face, xi, eta)?;
            Ok(ProbeValue {
                name: p.name.clone(),
                face,
                xi,
                eta,
                position: [x.x, x.y, x.z],
                displacement: [d.x, d.y, d.z],
            })
        })
        .collect()
}

/// Runs the analysis described by `cfg`; relative paths resolve against
/// `base`.
pub fn solve(cfg: &RunConfig, base: &Path) -> Result<RunOutput> {
    let mesh = build_mesh(cfg, base)?;
    let model = build_model(cfg, &mesh)?;
    let stats = MeshStats::of(&mesh, &model);
    let system = apply_constraints(&assemble_system(&model)?, &model)?;
    let solution = match &cfg.analysis {
        Analysis::Modal(m) => {
            let opts = m.options();
            if opts.num_modes > system.num_free() {
                return Err(Error::Config(format!(
                    "analysis.modal.num_modes = {} exceeds the {} free dofs",
                    opts.num_modes,
                    system.num_free()
                )));
            }
            Solution::Modal(solve_modal(&system, &opts)?)
        }
        Analysis::Static(_) => {
            let result = solve_static(&system, &system.static_rhs())?;
            let full = system.dofs.expand(&result.displacement);
            let probes = probe_values(cfg, &model, &full)?;
            Solution::Static { result, probes }
        }
    };
    Ok(RunOutput { model, system, stats, solution })
}

fn write_file(path: &Path, bytes: Vec<u8>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_outputs(cfg: &RunConfig, out: &RunOutput, base: &Path) -> Result<Written> {
    let dir = resolve(base, &cfg.output.dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Written { report: dir.join(&cfg.output.report), csv: dir.join(&cfg.output.csv), vtk: None };

    let json = report::json_report(cfg, out);
    let mut text = serde_json::to_vec_pretty(&json).expect("report serialises");
    text.push(b'\n');
    write_file(&written.report, text)?;

    let mut csv = Vec::new();
    match &out.solution {
        Solution::Modal(r) => report::write_modal_csv(&mut csv, r),
        Solution::Static { probes, .. } => report::write_probe_csv(&mut csv, probes),
    }
    .map_err(|e| Error::io(&written.csv, std::io::Error::other(e)))?;
    write_file(&written.csv, csv)?;

    if let Some(name) = &cfg.output.vtk {
        let path = dir.join(name);
        let sampler = SurfaceSampler::new(&out.model, cfg.output.sampling)?;
        let mut vtk = Vec::new();
        write_result_vtk(&mut vtk, &sampler, out, cfg.output.vtk_modes).map_err(|e| Error::io(&path, e))?;
        write_file(&path, vtk)?;
        written.vtk = Some(path);
    }
    Ok(written)
}

/// Writes the displacement and potential fields of a solution.
pub fn write_result_vtk(
    w: impl std::io::Write,
    sampler: &SurfaceSampler,
    out: &RunOutput,
    max_modes: Option<usize>,
) -> std::io::Result<()> {
    let sys = &out.system;
    let mut store: Vec<(String, Vec<f64>, bool)> = Vec::new();
    let mut push = |prefix: &str, u: &[f64], psi: Option<&Vec<f64>>, phi: Option<&Vec<f64>>| {
        store.push((format!("{prefix}displacement"), sys.dofs.expand(u), true));
        if let Some(p) = psi {
            store.push((format!("{prefix}psi"), p.clone(), false));
        }
        if let Some(p) = phi {
            store.push((format!("{prefix}phi"), p.clone(), false));
        }
    };
    let title = match &out.solution {
        Solution::Modal(r) => {
            let k = max_modes.unwrap_or(r.modes.len()).min(r.modes.len());
            for i in 0..k {
                let psi = r.psi.as_ref().map(|p| &p[i]);
                let phi = r.phi.as_ref().map(|p| &p[i]);
                push(&format!("mode_{:02}_", i + 1), &r.modes[i], psi, phi);
            }
            format!("shellvib modal solution, modes 1 to {k}")
        }
        Solution::Static { result, .. } => {
            push("", &result.displacement, result.psi.as_ref(), result.phi.as_ref());
            "shellvib static solution".to_string()
        }
    };
    let fields: Vec<Field> = store
        .iter()
        .map(|(name, values, vector)| {
            if *vector {
                Field::Displacement { name: name.clone(), values }
            } else {
                Field::Scalar { name: name.clone(), values }
            }
        })
        .collect();
    write_vtk(w, sampler, &title, &fields)
}

/// Loads `config`, runs it and writes all outputs next to it.
pub fn run(config: &Path) -> Result<(RunConfig, RunOutput, Written)> {
    let cfg = RunConfig::load(config)?;
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = solve(&cfg, &base)?;
    let written = write_outputs(&cfg, &out, &base)?;
    Ok((cfg, out, written))
}
