//! `pinchlab` — generate test surfaces, analyze meshes, sweep shape parameters.
//!
//! Exit codes: 0 ok, 1 bad input, 2 validation error, 3 pipeline failure.

mod shape_args;
mod summary;
mod svg;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pinchlab::io::{load_mesh, save_mesh, MeshFormat};
use pinchlab::pinch::analyze_full;
use pinchlab::{AnalysisConfig, Error};

use shape_args::ShapeArgs;

#[derive(Parser)]
#[command(
    name = "pinchlab",
    version,
    about = "Curvature pinching diagnostics for closed triangle meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a mesh of an analytic test shape.
    Generate {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Output mesh (.off or .obj); counts are printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a mesh file or a generated shape and print a summary.
    Analyze {
        /// Mesh file (.off or .obj).
        #[arg(long, conflicts_with = "shape")]
        mesh: Option<PathBuf>,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a family of shapes over one varying parameter; writes CSV and SVG charts.
    Sweep(sweep::SweepArgs),
    /// Print the version.
    Version,
}

/// Analysis settings; flags override values read from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON file with analysis settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Curvature order r.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Measure deviations against dv instead of dv/Vol.
    #[arg(long)]
    pub unnormalized: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<AnalysisConfig, Failure> {
        self.resolve_over(None)
    }

    /// Like [`resolve`](Self::resolve), starting from `base` unless `--config` is given.
    pub fn resolve_over(&self, base: Option<AnalysisConfig>) -> Result<AnalysisConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| {
                    Failure::validation(format!("bad config {}: {e}", path.display()))
                })?
            }
            None => base.unwrap_or_default(),
        };
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(r) = self.order {
            cfg.r = r;
        }
        if let Some(tol) = self.tol {
            cfg.solver_tol = tol;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.unnormalized {
            cfg.normalized_deviations = false;
        }
        cfg.validate()
            .map_err(|e| Failure::validation(e.to_string()))?;
        Ok(cfg)
    }
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
    pub fn pipeline(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    /// Classifies a library error from shape generation.
    pub fn from_generate(e: Error) -> Self {
        match e {
            Error::InvalidShape(_) | Error::ResolutionTooLarge { .. } => {
                Failure::validation(e.to_string())
            }
            e => Failure::pipeline(format!("stage `generate` failed: {e}")),
        }
    }

    /// Classifies a library error from the analysis pipeline.
    pub fn from_pipeline(e: Error) -> Self {
        match e.stage() {
            Some("config") => Failure::validation(e.to_string()),
            _ => Failure::pipeline(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { shape, out } => cmd_generate(&shape, out.as_deref()),
        Command::Analyze {
            mesh,
            shape,
            config,
            out,
        } => cmd_analyze(mesh.as_deref(), &shape, &config, out.as_deref()),
        Command::Sweep(args) => sweep::cmd_sweep(&args),
        Command::Version => {
            println!("pinchlab {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn mesh_format(path: &Path) -> Result<MeshFormat, Failure> {
    MeshFormat::from_path(path).ok_or_else(|| {
        Failure::input(format!(
            "{}: unknown mesh extension (expected .off or .obj)",
            path.display()
        ))
    })
}

fn cmd_generate(shape: &ShapeArgs, out: Option<&Path>) -> Result<(), Failure> {
    let desc = shape.descriptor()?;
    let mesh = desc.generate().map_err(Failure::from_generate)?;
    if let Some(path) = out {
        save_mesh(&mesh, path, mesh_format(path)?)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    println!(
        "{}: {} vertices, {} faces, χ = {}",
        desc.shape.kind_name(),
        mesh.vertex_count(),
        mesh.face_count(),
        mesh.euler_characteristic()
    );
    Ok(())
}

fn cmd_analyze(
    mesh_path: Option<&Path>,
    shape: &ShapeArgs,
    config: &ConfigArgs,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = config.resolve()?;
    let (mesh, desc) = match mesh_path {
        Some(path) => {
            let mesh = load_mesh(path, mesh_format(path)?)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned());
            let mesh = match name {
                Some(n) => mesh.with_name(n),
                None => mesh,
            };
            (mesh, None)
        }
        None => {
            if shape.shape.is_none() {
                return Err(Failure::input("analyze needs --mesh or --shape"));
            }
            let desc = shape.descriptor()?;
            (desc.generate().map_err(Failure::from_generate)?, Some(desc))
        }
    };
    let analysis = analyze_full(&mesh, &cfg, desc).map_err(Failure::from_pipeline)?;
    let report = &analysis.report;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = out {
        fs::write(path, report.to_json_string())
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    print!("{}", summary::render(report));
    Ok(())
}
