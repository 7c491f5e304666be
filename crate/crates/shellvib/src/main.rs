use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shellvib::core::mesh::{generate_benchmark_mesh, BenchmarkSpec, RoofSpec, SphereSpec};
use shellvib::pipeline::{self, Solution};
use shellvib::{accept, obj, Error};

#[derive(Parser)]
#[command(name = "shellvib", version, about = "Vibration of thin piezoelectric shells on Catmull-Clark surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark control mesh as OBJ.
    MeshGen(MeshGen),
    /// Run the analysis described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads; falls back to SHELLVIB_THREADS, then to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the acceptance suite and print one line per criterion.
    Accept {
        /// Smaller meshes and fewer refinement levels.
        #[arg(long)]
        fast: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Shape {
    /// Sphere of radius R from a cube subdivided LEVEL times.
    #[arg(long, num_args = 2, value_names = ["R", "LEVEL"])]
    sphere: Option<Vec<String>>,
    /// Cylindrical roof of length L, radius R, half angle THETA in degrees
    /// and N x N elements.
    #[arg(long, num_args = 4, value_names = ["L", "R", "THETA", "N"])]
    roof: Option<Vec<String>>,
}

#[derive(Args)]
struct MeshGen {
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    out: PathBuf,
}

fn usage(msg: String) -> Error {
    Error::Config(msg)
}

fn parse<T: std::str::FromStr>(name: &str, s: &str) -> Result<T, Error> {
    s.parse().map_err(|_| usage(format!("{name}: cannot parse {s:?}")))
}

fn mesh_gen(args: &MeshGen) -> Result<(), Error> {
    let spec = match (&args.shape.sphere, &args.shape.roof) {
        (Some(s), _) => BenchmarkSpec::Sphere(SphereSpec { radius: parse("R", &s[0])?, level: parse("LEVEL", &s[1])? }),
        (_, Some(r)) => BenchmarkSpec::Roof(RoofSpec {
            length: parse("L", &r[0])?,
            radius: parse("R", &r[1])?,
            half_angle: parse::<f64>("THETA", &r[2])?.to_radians(),
            n: parse("N", &r[3])?,
        }),
        _ => unreachable!("clap enforces one shape"),
    };
    let mesh = generate_benchmark_mesh(&spec)?;
    obj::save_obj(&args.out, &mesh)?;
    println!(
        "wrote {} ({} vertices, {} faces)",
        args.out.display(),
        mesh.num_real_vertices(),
        mesh.num_faces()
    );
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SHELLVIB_THREADS") {
        Ok(s) if !s.trim().is_empty() => Ok(Some(parse("SHELLVIB_THREADS", s.trim())?)),
        _ => Ok(None),
    }
}

fn run(config: &PathBuf, threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = thread_count(threads)? {
        if n == 0 {
            return Err(usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let (_, out, written) = pipeline::run(config)?;
    let s = &out.stats;
    println!(
        "mesh: {} elements, {} vertices, {} extraordinary vertices",
        s.elements, s.vertices, s.extraordinary_vertices
    );
    match &out.solution {
        Solution::Modal(r) => {
            println!("{:>5} {:>16} {:>6} {:>10}", "mode", "frequency_hz", "rigid", "residual");
            for i in 0..r.frequencies.len() {
                println!("{:>5} {:>16.6} {:>6} {:>10.2e}", i + 1, r.frequencies[i], r.rigid[i], r.residuals[i]);
            }
        }
        Solution::Static { probes, .. } => {
            for p in probes {
                let d = p.displacement;
                println!("{}: u = ({:.6e}, {:.6e}, {:.6e})", p.name, d[0], d[1], d[2]);
            }
        }
    }
    println!("wrote {}", written.report.display());
    println!("wrote {}", written.csv.display());
    if let Some(v) = &written.vtk {
        println!("wrote {}", v.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::MeshGen(args) => mesh_gen(args),
        Command::Run { config, threads } => run(config, *threads),
        Command::Accept { fast } => {
            let outcomes = accept::run_all(*fast, &mut std::io::stdout());
            return if outcomes.iter().all(|o| o.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
