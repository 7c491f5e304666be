//! Acceptance suite: one line per criterion, `PASS` or `FAIL`.

pub mod benchmarks;
pub mod oracles;
pub mod stiffening;

use std::io::Write;
use std::time::Instant;

use crate::Result;

/// Verdict of one criterion with a human-readable summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: String) -> Check {
        Check { passed, detail }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub run: fn(bool) -> Result<Check>,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: "1", title: "sphere modal clusters", run: benchmarks::sphere },
    Criterion { id: "2", title: "Scordelis-Lo deflection", run: benchmarks::scordelis },
    Criterion { id: "3", title: "piezoelectric roof frequencies", run: benchmarks::piezo_roof },
    Criterion { id: "4", title: "stiffening terms are PSD", run: |_| stiffening::roof_psd() },
    Criterion { id: "5a", title: "element FD-Hessian oracle", run: |_| oracles::element_hessian() },
    Criterion { id: "5b", title: "irregular patch vs subdivision", run: |_| oracles::irregular_evaluation() },
    Criterion { id: "5c", title: "partition of unity", run: |_| oracles::partition_of_unity() },
    Criterion { id: "5d", title: "rigid modes in null space of K", run: |_| oracles::rigid_null_space() },
    Criterion { id: "5e", title: "Schur reduction", run: |_| oracles::schur_reduction() },
    Criterion { id: "6", title: "closed OBJ mesh capability", run: stiffening::closed_mesh },
];

/// Runs one criterion; errors count as failures.
pub fn run_one(c: &Criterion, fast: bool) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = match (c.run)(fast) {
        Ok(check) => (check.passed, check.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome { id: c.id, title: c.title, passed, detail, seconds: t.elapsed().as_secs_f64() }
}

pub fn format_line(o: &Outcome) -> String {
    format!(
        "{} {:<3} {:<32} {} [{:.1} s]",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.title,
        o.detail,
        o.seconds
    )
}

/// Runs every criterion in order, printing each line as soon as it is known.
pub fn run_all(fast: bool, out: &mut impl Write) -> Vec<Outcome> {
    let mut outcomes = Vec::new();
    for c in &CRITERIA {
        let o = run_one(c, fast);
        let _ = writeln!(out, "{}", format_line(&o));
        let _ = out.flush();
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(out, "{passed}/{} criteria passed", outcomes.len());
    outcomes
}
