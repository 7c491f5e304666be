//! Free-vibration and static analysis of thin piezoelectric Kirchhoff-Love
//! shells whose mid-surface is a Catmull-Clark subdivision surface.
//!
//! The pipeline is:
//!
//! 1. [`mesh`]: quad control meshes, Catmull-Clark refinement, ghost rings for
//!    open surfaces, patch extraction and least-squares fitting of benchmark
//!    geometries.
//! 2. [`subd`]: limit-surface basis functions with first and second
//!    derivatives on regular and extraordinary patches.
//! 3. [`shell`] and [`material`]: reference frames, linear membrane and
//!    bending strain operators, transformed and stress-relaxed moduli.
//! 4. [`assembly`]: quadrature, element matrices and the global block system.
//! 5. [`solver`]: Schur reduction of the electric unknowns, the generalized
//!    eigenproblem, static solves and recovery of the potential fields.
//!
//! File formats and the command line front end live in the `shellvib` crate.

pub mod assembly;
pub mod error;
pub mod material;
pub mod mesh;
pub mod shell;
pub mod solver;
pub mod sparse;
pub mod subd;

pub use error::{Error, Result};

/// Position or direction in 3D space, in meters where dimensional.
pub type Vec3 = nalgebra::Vector3<f64>;
