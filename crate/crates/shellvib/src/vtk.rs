//! Legacy ASCII VTK export of fields sampled on the limit surface.
//!
//! Every element contributes an `n x n` grid of samples at face coordinates
//! `i / (n - 1)`, so there are `n² m` points and `(n - 1)² m` quad cells.
//! Samples on shared element edges are duplicated, one copy per element.

use std::io::Write;

use shellvib_core::assembly::ShellModel;
use shellvib_core::subd::{eval_patch_basis, Order};
use shellvib_core::Vec3;

use crate::Result;

const VTK_QUAD: u8 = 9;

/// Basis weights of every sample, folded onto real control vertices.
pub struct SurfaceSampler {
    pub n: usize,
    pub num_elements: usize,
    pub positions: Vec<Vec3>,
    /// Per sample: `(vertex, weight)` pairs.
    weights: Vec<Vec<(usize, f64)>>,
}

impl SurfaceSampler {
    pub fn new(model: &ShellModel, n: usize) -> Result<SurfaceSampler> {
        assert!(n >= 2, "sampling needs at least two points per side");
        let pos = model.mesh().vertices();
        let m = model.num_elements();
        let mut positions = Vec::with_capacity(m * n * n);
        let mut weights = Vec::with_capacity(m * n * n);
        let step = 1.0 / (n - 1) as f64;
        for (patch, support) in model.patches.patches.iter().zip(model.supports()) {
            for j in 0..n {
                for i in 0..n {
                    let (x, y) = patch.to_patch_coords(i as f64 * step, j as f64 * step);
                    let basis = eval_patch_basis(patch, x.clamp(0.0, 1.0), y.clamp(0.0, 1.0), Order::Value)?;
                    let w: Vec<(usize, f64)> = support
                        .fold_jet(&basis.jet)
                        .iter()
                        .zip(&support.vertices)
                        .map(|(jet, &v)| (v, jet[0]))
                        .collect();
                    positions.push(w.iter().fold(Vec3::zeros(), |acc, &(v, c)| acc + c * pos[v]));
                    weights.push(w);
                }
            }
        }
        Ok(SurfaceSampler { n, num_elements: m, positions, weights })
    }

    pub fn num_points(&self) -> usize {
        self.positions.len()
    }

    pub fn num_cells(&self) -> usize {
        (self.n - 1) * (self.n - 1) * self.num_elements
    }

    /// Scalar per-vertex field at every sample.
    pub fn scalar(&self, values: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| w.iter().map(|&(v, c)| c * values[v]).sum()).collect()
    }

    /// Vector field stored as `3 v + i` at every sample.
    pub fn vector(&self, values: &[f64]) -> Vec<Vec3> {
        self.weights
            .iter()
            .map(|w| {
                w.iter().fold(Vec3::zeros(), |acc, &(v, c)| {
                    acc + c * Vec3::new(values[3 * v], values[3 * v + 1], values[3 * v + 2])
                })
            })
            .collect()
    }

    /// Quad cells as point indices, counter-clockwise in face coordinates.
    pub fn cells(&self) -> Vec<[usize; 4]> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.num_cells());
        for e in 0..self.num_elements {
            let base = e * n * n;
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    let p = base + j * n + i;
                    out.push([p, p + 1, p + n + 1, p + n]);
                }
            }
        }
        out
    }
}

/// Per-vertex input field.
pub enum Field<'a> {
    /// Displacement `3 v + i`; written as a vector plus its magnitude
    /// `<name>_magnitude`.
    Displacement { name: String, values: &'a [f64] },
    Scalar { name: String, values: &'a [f64] },
}

fn e(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_vtk(mut w: impl Write, sampler: &SurfaceSampler, title: &str, fields: &[Field]) -> std::io::Result<()> {
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", sampler.num_points())?;
    for p in &sampler.positions {
        writeln!(w, "{} {} {}", e(p.x), e(p.y), e(p.z))?;
    }
    let cells = sampler.cells();
    writeln!(w, "CELLS {} {}", cells.len(), 5 * cells.len())?;
    for c in &cells {
        writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "{VTK_QUAD}")?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(w, "POINT_DATA {}", sampler.num_points())?;
    for f in fields {
        match f {
            Field::Displacement { name, values } => {
                let u = sampler.vector(values);
                writeln!(w, "VECTORS {name} double")?;
                for v in &u {
                    writeln!(w, "{} {} {}", e(v.x), e(v.y), e(v.z))?;
                }
                writeln!(w, "SCALARS {name}_magnitude double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in &u {
                    writeln!(w, "{}", e(v.norm()))?;
                }
            }
            Field::Scalar { name, values } => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in sampler.scalar(values) {
                    writeln!(w, "{}", e(v))?;
                }
            }
        }
    }
    Ok(())
}
