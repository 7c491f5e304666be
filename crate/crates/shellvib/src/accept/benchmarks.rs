//! Sphere, Scordelis-Lo and piezoelectric roof benchmarks, run through the
//! same configuration path as `shellvib run`.

use std::path::Path;
use std::time::Instant;

use shellvib_core::solver::ModalResult;

use super::Check;
use crate::config::{
    Analysis, Axis, ConstraintConfig, ElectricConfig, Loads, MaterialConfig, MeshSource, ModalConfig, Output, Probe,
    RunConfig, Selector, StaticConfig,
};
use crate::pipeline::{self, RunOutput, Solution};
use crate::Result;

pub const SPHERE_RADIUS: f64 = 0.1135;
pub const SPHERE_THICKNESS: f64 = 1.5875e-3;

/// Analytical frequencies of the n = 2, 3, 4 sphere clusters and their sizes.
const SPHERE_CLUSTERS: [(f64, usize, f64); 3] = [(5078.0, 5, 0.007), (6005.0, 7, 0.008), (6378.0, 9, 0.008)];
const SPHERE_SPREAD: f64 = 0.0015;

pub fn modal(num_modes: usize) -> Analysis {
    Analysis::Modal(ModalConfig { num_modes, shift_hz: 1.0, tol: 1e-8, max_iterations: 2000 })
}

fn quiet_output() -> Output {
    Output { vtk: None, ..Output::default() }
}

pub fn sphere_config(level: usize) -> RunConfig {
    RunConfig {
        mesh: MeshSource::Sphere { radius: SPHERE_RADIUS, level },
        thickness: SPHERE_THICKNESS,
        material: MaterialConfig::Isotropic { young: 193.05e9, poisson: 0.28, density: 8025.937 },
        electric: ElectricConfig::Elastic,
        analysis: modal(27),
        constraints: Vec::new(),
        loads: Loads::default(),
        output: quiet_output(),
    }
}

/// Cylindrical roof with rigid diaphragms (u_x = u_z = 0) on both curved
/// edges.
pub fn roof_config(length: f64, radius: f64, half_angle_deg: f64, n: usize) -> RunConfig {
    let plane = |value: f64| ConstraintConfig {
        select: Selector::Plane { axis: Axis::Y, value, tol: 1e-9 * length.max(1.0) },
        fix: vec![Axis::X, Axis::Z],
    };
    RunConfig {
        mesh: MeshSource::Roof { length, radius, half_angle_deg, n },
        thickness: 2.5e-3,
        material: MaterialConfig::BariumTitanate,
        electric: ElectricConfig::Elastic,
        analysis: modal(9),
        constraints: vec![plane(0.0), plane(length)],
        loads: Loads::default(),
        output: quiet_output(),
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    pipeline::solve(cfg, Path::new("."))
}

fn modal_result(out: &RunOutput) -> &ModalResult {
    match &out.solution {
        Solution::Modal(r) => r,
        Solution::Static { .. } => unreachable!("modal analysis requested"),
    }
}

struct SphereLevel {
    level: usize,
    seconds: f64,
    rigid: usize,
    flexible: Vec<f64>,
}

impl SphereLevel {
    /// Mean relative deviation of each cluster from its analytical value.
    fn deviations(&self) -> Vec<f64> {
        let mut start = 0;
        SPHERE_CLUSTERS
            .iter()
            .map(|&(f, count, _)| {
                let group = &self.flexible[start..start + count];
                start += count;
                group.iter().map(|g| (g - f).abs() / f).sum::<f64>() / count as f64
            })
            .collect()
    }
}

/// Free elastic sphere: 6 rigid modes, then the 5, 7 and 9 mode clusters;
/// deviations shrink under refinement.
pub fn sphere(fast: bool) -> Result<Check> {
    let levels: &[usize] = if fast { &[4, 5] } else { &[4, 5, 6] };
    let mut runs = Vec::new();
    for &level in levels {
        let t = Instant::now();
        let out = run(&sphere_config(level))?;
        let r = modal_result(&out);
        runs.push(SphereLevel {
            level,
            seconds: t.elapsed().as_secs_f64(),
            rigid: r.num_rigid(),
            flexible: r.flexible_frequencies(),
        });
    }
    let base = &runs[0];
    let mut ok = base.rigid == 6 && base.flexible.len() == 21 && base.rigid + base.flexible.len() == 27;
    let mut detail = format!("level 4: {} rigid", base.rigid);
    if base.flexible.len() == 21 {
        let mut start = 0;
        for &(f, count, tol) in &SPHERE_CLUSTERS {
            let group = &base.flexible[start..start + count];
            start += count;
            let worst = group.iter().map(|g| (g - f).abs() / f).fold(0.0, f64::max);
            ok &= worst <= tol;
            detail += &format!(", {count} @ {f} Hz max dev {:.3}%", 100.0 * worst);
            if count == 5 {
                let (lo, hi) = group.iter().fold((f64::MAX, f64::MIN), |(a, b), &g| (a.min(g), b.max(g)));
                let spread = (hi - lo) / (group.iter().sum::<f64>() / count as f64);
                ok &= spread <= SPHERE_SPREAD;
                detail += &format!(" (spread {:.4}%)", 100.0 * spread);
            }
        }
    }
    let devs: Vec<Vec<f64>> = runs.iter().map(SphereLevel::deviations).collect();
    for w in devs.windows(2) {
        ok &= w[0].iter().zip(&w[1]).all(|(a, b)| b < a);
    }
    for (run, d) in runs.iter().zip(&devs) {
        ok &= run.rigid == 6;
        let limit = match run.level {
            4 => 120.0,
            6 => 1800.0,
            _ => f64::INFINITY,
        };
        ok &= run.seconds <= limit;
        detail += &format!(
            "; level {}: mean dev {:.4}%/{:.4}%/{:.4}% in {:.0} s",
            run.level,
            100.0 * d[0],
            100.0 * d[1],
            100.0 * d[2],
            run.seconds
        );
    }
    if fast {
        detail += "; level 6 skipped (--fast)";
    }
    Ok(Check::new(ok, detail))
}

pub fn scordelis_config(n: usize) -> RunConfig {
    let mut cfg = roof_config(50.0, 25.0, 40.0, n);
    cfg.thickness = 0.25;
    cfg.material = MaterialConfig::Isotropic { young: 4.32e8, poisson: 0.0, density: 1.0 };
    cfg.loads.areal = [0.0, 0.0, -90.0];
    cfg.constraints.push(ConstraintConfig {
        select: Selector::Plane { axis: Axis::Y, value: 25.0, tol: 1e-6 },
        fix: vec![Axis::Y],
    });
    // Face n / 2 starts at the midpoint of the free edge x = +R sin(theta).
    cfg.analysis = Analysis::Static(StaticConfig {
        probes: vec![Probe { name: "free_edge_midpoint".into(), face: Some(n / 2), xi: Some(0.0), eta: Some(0.0), near: None }],
    });
    cfg
}

/// Downward free-edge midpoint deflection of the Scordelis-Lo roof.
pub fn scordelis_deflection(n: usize) -> Result<f64> {
    let out = run(&scordelis_config(n))?;
    match &out.solution {
        Solution::Static { probes, .. } => Ok(-probes[0].displacement[2]),
        Solution::Modal(_) => unreachable!("static analysis requested"),
    }
}

pub fn scordelis(fast: bool) -> Result<Check> {
    let ladder: &[usize] = if fast { &[8, 16] } else { &[8, 16, 32] };
    let w: Vec<f64> = ladder.iter().map(|&n| scordelis_deflection(n)).collect::<Result<_>>()?;
    let last = *w.last().unwrap();
    let mut ok = (last - 0.3006).abs() <= 0.002;
    let steps: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    ok &= steps.windows(2).all(|s| s[1] < s[0]);
    let values: Vec<String> = ladder.iter().zip(&w).map(|(n, w)| format!("n={n}: {w:.5}")).collect();
    Ok(Check::new(ok, format!("{} (target 0.3006 +- 0.002)", values.join(", "))))
}

/// Half angle, radius and mode-1 references (elastic, SC, UE).
pub const ROOF_CASES: [(f64, f64, [f64; 3]); 3] = [
    (20.0, 0.5, [82.32, 82.45, 83.68]),
    (40.0, 0.25, [125.31, 127.85, 128.62]),
    (60.0, 1.0 / 6.0, [143.64, 145.89, 147.27]),
];
pub const ROOF_LENGTH: f64 = 0.5;
pub const ROOF_N: usize = 16;
pub const ELECTRIC_CASES: [ElectricConfig; 3] =
    [ElectricConfig::Elastic, ElectricConfig::ShortCircuited, ElectricConfig::Unelectroded];

/// First eight flexible frequencies of the piezoelectric roof.
pub fn roof_frequencies(half_angle_deg: f64, radius: f64, n: usize, electric: ElectricConfig) -> Result<Vec<f64>> {
    let mut cfg = roof_config(ROOF_LENGTH, radius, half_angle_deg, n);
    cfg.electric = electric;
    let out = run(&cfg)?;
    let mut f = modal_result(&out).flexible_frequencies();
    f.truncate(8);
    Ok(f)
}

pub fn piezo_roof(fast: bool) -> Result<Check> {
    let n = if fast { 12 } else { ROOF_N };
    let mut ok = true;
    let mut parts = Vec::new();
    for &(deg, radius, reference) in &ROOF_CASES {
        let freqs: Vec<Vec<f64>> =
            ELECTRIC_CASES.iter().map(|&e| roof_frequencies(deg, radius, n, e)).collect::<Result<_>>()?;
        let mut line = format!("{deg}°:");
        for (k, f) in freqs.iter().enumerate() {
            let dev = (f[0] - reference[k]) / reference[k];
            ok &= f.len() == 8 && dev.abs() <= 0.02;
            line += &format!(" {:.2} ({:+.2}%)", f[0], 100.0 * dev);
        }
        if deg == 40.0 {
            let violations = (0..8).filter(|&m| !(freqs[0][m] <= freqs[1][m] && freqs[1][m] <= freqs[2][m])).count();
            ok &= violations == 0;
            line += &format!(", ordering violations in modes 1-8: {violations}");
        }
        parts.push(line);
    }
    Ok(Check::new(ok, format!("n={n}, {}", parts.join("; "))))
}
