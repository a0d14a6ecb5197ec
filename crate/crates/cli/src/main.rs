mod bench;
mod generate;
mod shape;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foamforge_core::{load_mesh, MeshFormat, TriangleMesh};

/// Exit status for arguments that parse but make no sense (clap uses the
/// same code for syntax errors).
const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Other(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Other(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "foamforge", version, about = "Design two-piece protective foam for a 3D object")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate foam halves, slices and a report for one mesh.
    Generate(generate::GenerateArgs),
    /// Time the generation step over a list of cubic resolutions.
    Bench(bench::BenchArgs),
    /// Run the HTTP service in this process.
    Serve(ServeArgs),
    /// Write a procedural test mesh.
    Shape(shape::ShapeArgs),
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8787)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    #[arg(long, default_value = "foamforge-spool")]
    spool_dir: PathBuf,
    #[arg(long, default_value_t = 256 << 20)]
    max_upload_bytes: usize,
    #[arg(long, default_value_t = 8)]
    supersample: u32,
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

/// `AxBxC` triple, e.g. `30x18x18` or `15x15x22`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple<T>(pub [T; 3]);

impl<T: FromStr + Copy> FromStr for Triple<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected three values like 30x18x18, got {s:?}"));
        };
        let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad number {v:?} in {s:?}"));
        Ok(Triple([p(a)?, p(b)?, p(c)?]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Threads {
    Single,
    Multi,
}

pub fn read_mesh(path: &std::path::Path) -> CliResult<(Vec<u8>, MeshFormat, TriangleMesh)> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| CliError::Usage(format!("{}: unknown mesh extension (use .stl, .ply or .obj)", path.display())))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mesh = load_mesh(&bytes, format).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((bytes, format, mesh))
}

fn serve(args: ServeArgs) -> CliResult<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    if !(1..=foamforge_api::MAX_SUPERSAMPLE).contains(&args.supersample) {
        return Err(CliError::Usage(format!("--supersample must be between 1 and {}", foamforge_api::MAX_SUPERSAMPLE)));
    }
    let config = foamforge_service::Config {
        spool_dir: args.spool_dir,
        max_upload_bytes: args.max_upload_bytes,
        supersample: args.supersample,
        snapshot: args.snapshot,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(foamforge_service::serve(
        config,
        std::net::SocketAddr::new(args.bind, args.port),
        foamforge_service::shutdown_signal(),
    ))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Serve(a) => serve(a),
        Command::Shape(a) => shape::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: malformed input: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(CliError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
