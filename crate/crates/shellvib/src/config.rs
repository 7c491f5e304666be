//! JSON run configuration. Unknown fields are rejected everywhere, all
//! quantities are SI except the roof angle, which is given in degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shellvib_core::assembly::{Constraint, ElectricCondition, VertexSelector};
use shellvib_core::material::MaterialSpec;
use shellvib_core::mesh::{BenchmarkSpec, RoofSpec, SphereSpec};
use shellvib_core::solver::ModalOptions;
use shellvib_core::Vec3;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub thickness: f64,
    pub material: MaterialConfig,
    #[serde(default)]
    pub electric: ElectricConfig,
    pub analysis: Analysis,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    #[serde(default)]
    pub loads: Loads,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Path to an OBJ file, relative to the config file.
    Obj(PathBuf),
    Sphere { radius: f64, level: usize },
    Roof { length: f64, radius: f64, half_angle_deg: f64, n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Isotropic { young: f64, poisson: f64, density: f64 },
    /// Voigt matrices: `c` 6x6 in Pa, `e` 3x6 in C/m², `kappa` 3x3 in F/m.
    Piezo { c: [[f64; 6]; 6], e: [[f64; 6]; 3], kappa: [[f64; 3]; 3], density: f64 },
    BariumTitanate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ElectricConfig {
    #[default]
    Elastic,
    ShortCircuited,
    Unelectroded,
    Electroded { voltage: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    Modal(ModalConfig),
    Static(StaticConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalConfig {
    pub num_modes: usize,
    #[serde(default = "default_shift")]
    pub shift_hz: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_shift() -> f64 {
    ModalOptions::default().shift_hz
}

fn default_tol() -> f64 {
    ModalOptions::default().tol
}

fn default_iterations() -> usize {
    ModalOptions::default().max_iterations
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticConfig {
    #[serde(default)]
    pub probes: Vec<Probe>,
}

/// Point on the limit surface where the static displacement is reported,
/// given either by `face`, `xi`, `eta` (face coordinates in `[0, 1]²`
/// relative to corner 0) or by `near`, a point whose closest limit-surface
/// sample is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near: Option<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeLocation {
    Face { face: usize, xi: f64, eta: f64 },
    Near(Vec3),
}

impl Probe {
    pub fn location(&self) -> Result<ProbeLocation> {
        match (self.face, self.xi, self.eta, self.near) {
            (Some(face), Some(xi), Some(eta), None) => {
                if (0.0..=1.0).contains(&xi) && (0.0..=1.0).contains(&eta) {
                    Ok(ProbeLocation::Face { face, xi, eta })
                } else {
                    Err(invalid(format!("probe {:?}: xi and eta must lie in [0, 1]", self.name)))
                }
            }
            (None, None, None, Some(p)) => Ok(ProbeLocation::Near(Vec3::from(p))),
            _ => Err(invalid(format!("probe {:?}: give either face, xi and eta or near", self.name))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub select: Selector,
    /// Displacement components held at zero.
    pub fix: Vec<Axis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Selector {
    All,
    Vertices(Vec<usize>),
    /// Control vertices with `|x[axis] - value| <= tol`.
    Plane {
        axis: Axis,
        value: f64,
        #[serde(default = "default_plane_tol")]
        tol: f64,
    },
}

fn default_plane_tol() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loads {
    /// N/m² per unit mid-surface area.
    #[serde(default)]
    pub areal: [f64; 3],
    /// N/m³.
    #[serde(default)]
    pub body: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Output directory, relative to the config file.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: String,
    /// `null` disables the VTK export.
    #[serde(default = "default_vtk")]
    pub vtk: Option<String>,
    /// Limit-surface samples per element side in the VTK file.
    #[serde(default = "default_sampling")]
    pub sampling: usize,
    /// Number of modes written to the VTK file; all when absent.
    #[serde(default)]
    pub vtk_modes: Option<usize>,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_report() -> String {
    "report.json".into()
}

fn default_csv() -> String {
    "results.csv".into()
}

fn default_vtk() -> Option<String> {
    Some("result.vtk".into())
}

fn default_sampling() -> usize {
    4
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: default_dir(),
            report: default_report(),
            csv: default_csv(),
            vtk: default_vtk(),
            sampling: default_sampling(),
            vtk_modes: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text)
    }

    /// Range checks that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("thickness", self.thickness)?;
        match &self.mesh {
            MeshSource::Obj(_) => {}
            MeshSource::Sphere { radius, .. } => positive("mesh.sphere.radius", *radius)?,
            MeshSource::Roof { length, radius, half_angle_deg, .. } => {
                positive("mesh.roof.length", *length)?;
                positive("mesh.roof.radius", *radius)?;
                if !(*half_angle_deg > 0.0 && *half_angle_deg < 180.0) {
                    return Err(invalid(format!("mesh.roof.half_angle_deg must be in (0, 180), got {half_angle_deg}")));
                }
            }
        }
        if let Err(e) = self.material_spec().validate() {
            return Err(invalid(e.to_string()));
        }
        if self.electric != ElectricConfig::Elastic && !self.material_spec().is_piezo() {
            return Err(invalid("electric conditions other than elastic need a piezoelectric material"));
        }
        if let Analysis::Modal(m) = &self.analysis {
            if m.num_modes == 0 {
                return Err(invalid("analysis.modal.num_modes must be at least 1"));
            }
            positive("analysis.modal.tol", m.tol)?;
            if !(m.shift_hz >= 0.0 && m.shift_hz.is_finite()) {
                return Err(invalid("analysis.modal.shift_hz must be non-negative"));
            }
        }
        if let Analysis::Static(s) = &self.analysis {
            for p in &s.probes {
                p.location()?;
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Selector::Plane { tol, .. } = c.select {
                if !(tol >= 0.0) {
                    return Err(invalid(format!("constraints[{i}]: plane tolerance must be non-negative")));
                }
            }
        }
        if self.output.sampling < 2 {
            return Err(invalid("output.sampling must be at least 2"));
        }
        Ok(())
    }

    pub fn material_spec(&self) -> MaterialSpec {
        match &self.material {
            MaterialConfig::Isotropic { young, poisson, density } => {
                MaterialSpec::Isotropic { young: *young, poisson: *poisson, density: *density }
            }
            MaterialConfig::Piezo { c, e, kappa, density } => {
                MaterialSpec::Piezo { c: *c, e: *e, kappa: *kappa, density: *density }
            }
            MaterialConfig::BariumTitanate => MaterialSpec::barium_titanate(),
        }
    }

    pub fn electric_condition(&self) -> ElectricCondition {
        match self.electric {
            ElectricConfig::Elastic => ElectricCondition::Elastic,
            ElectricConfig::ShortCircuited => ElectricCondition::ShortCircuited,
            ElectricConfig::Unelectroded => ElectricCondition::Unelectroded,
            ElectricConfig::Electroded { voltage } => ElectricCondition::Electroded { voltage },
        }
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        self.constraints
            .iter()
            .map(|c| {
                let mut components = [false; 3];
                for a in &c.fix {
                    components[a.index()] = true;
                }
                let selector = match &c.select {
                    Selector::All => VertexSelector::All,
                    Selector::Vertices(v) => VertexSelector::Indices(v.clone()),
                    Selector::Plane { axis, value, tol } => {
                        VertexSelector::Plane { axis: axis.index(), value: *value, tol: *tol }
                    }
                };
                Constraint { selector, components }
            })
            .collect()
    }

    pub fn areal_load(&self) -> Vec3 {
        Vec3::from(self.loads.areal)
    }

    pub fn body_force(&self) -> Vec3 {
        Vec3::from(self.loads.body)
    }
}

impl MeshSource {
    pub fn benchmark(&self) -> Option<BenchmarkSpec> {
        match *self {
            MeshSource::Obj(_) => None,
            MeshSource::Sphere { radius, level } => Some(BenchmarkSpec::Sphere(SphereSpec { radius, level })),
            MeshSource::Roof { length, radius, half_angle_deg, n } => Some(BenchmarkSpec::Roof(RoofSpec {
                length,
                radius,
                half_angle: half_angle_deg.to_radians(),
                n,
            })),
        }
    }
}

impl ModalConfig {
    pub fn options(&self) -> ModalOptions {
        ModalOptions {
            num_modes: self.num_modes,
            shift_hz: self.shift_hz,
            tol: self.tol,
            max_iterations: self.max_iterations,
            ..ModalOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"{
        "mesh": {"sphere": {"radius": 0.1135, "level": 4}},
        "thickness": 1.5875e-3,
        "material": {"isotropic": {"young": 193.05e9, "poisson": 0.28, "density": 8025.937}},
        "analysis": {"modal": {"num_modes": 27}}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(SPHERE).unwrap();
        assert_eq!(c.electric, ElectricConfig::Elastic);
        assert_eq!(c.output, Output::default());
        assert!(c.constraints.is_empty());
        match &c.analysis {
            Analysis::Modal(m) => assert_eq!(m.options().num_modes, 27),
            _ => panic!(),
        }
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_json(SPHERE).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected_at_every_level() {
        let cases = [
            SPHERE.replacen("\"thickness\"", "\"thicknes\": 1, \"thickness\"", 1),
            SPHERE.replace("\"level\": 4", "\"level\": 4, \"extra\": 1"),
            SPHERE.replace("\"num_modes\": 27", "\"num_modes\": 27, \"which\": \"LM\""),
            SPHERE.replace("\"density\": 8025.937", "\"density\": 8025.937, \"color\": 1"),
            SPHERE.replace("{\"modal\": {\"num_modes\": 27}}", r#"{"static": {"probes": [{"name": "p", "near": [0, 0, 0], "radius": 1}]}}"#),
        ];
        for text in cases {
            let err = RunConfig::from_json(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains("unknown field"), "{err}");
        }
    }

    #[test]
    fn range_errors_are_config_errors() {
        let cases = [
            SPHERE.replace("1.5875e-3", "-1"),
            SPHERE.replace("\"num_modes\": 27", "\"num_modes\": 0"),
            SPHERE.replace("0.28", "0.5"),
            SPHERE.replace("\"analysis\"", "\"electric\": \"unelectroded\", \"analysis\""),
            SPHERE.replace("{\"modal\": {\"num_modes\": 27}}", r#"{"static": {"probes": [{"name": "p", "face": 1}]}}"#),
            SPHERE.replace("{\"modal\": {\"num_modes\": 27}}", r#"{"static": {"probes": [{"name": "p", "face": 1, "xi": 2, "eta": 0}]}}"#),
            SPHERE.replace("{\"modal\": {\"num_modes\": 27}}", r#"{"modal": {"num_modes": 2}, "static": {}}"#),
        ];
        for text in cases {
            assert_eq!(RunConfig::from_json(&text).unwrap_err().exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "mesh": {"roof": {"length": 50, "radius": 25, "half_angle_deg": 40, "n": 16}},
            "thickness": 0.25,
            "material": "barium_titanate",
            "electric": {"electroded": {"voltage": 10}},
            "analysis": {"static": {"probes": [
                {"name": "a", "face": 8, "xi": 0, "eta": 0},
                {"name": "b", "near": [16.07, 25, 19.15]}
            ]}},
            "constraints": [
                {"select": {"plane": {"axis": "y", "value": 0}}, "fix": ["x", "z"]},
                {"select": {"vertices": [1, 2]}, "fix": ["y"]},
                {"select": "all", "fix": []}
            ],
            "loads": {"areal": [0, 0, -90]},
            "output": {"dir": "out", "vtk": null, "sampling": 3}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        let cons = c.constraints();
        assert_eq!(cons[0].components, [true, false, true]);
        assert_eq!(cons[0].selector, VertexSelector::Plane { axis: 1, value: 0.0, tol: 1e-9 });
        assert_eq!(cons[1].selector, VertexSelector::Indices(vec![1, 2]));
        assert_eq!(c.output.vtk, None);
        assert_eq!(c.electric_condition(), ElectricCondition::Electroded { voltage: 10.0 });
        match &c.analysis {
            Analysis::Static(s) => {
                assert_eq!(s.probes[0].location().unwrap(), ProbeLocation::Face { face: 8, xi: 0.0, eta: 0.0 });
                assert_eq!(s.probes[1].location().unwrap(), ProbeLocation::Near(Vec3::new(16.07, 25.0, 19.15)));
            }
            _ => panic!(),
        }
        match c.mesh.benchmark() {
            Some(BenchmarkSpec::Roof(r)) => assert!((r.half_angle - 40f64.to_radians()).abs() < 1e-15),
            _ => panic!(),
        }
    }
}
