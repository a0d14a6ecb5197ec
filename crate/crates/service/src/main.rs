use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use clap::Parser;
use foamforge_service::{serve, shutdown_signal, Config};

#[derive(Parser, Debug)]
#[command(name = "foamforge-server", version, about = "Serve the foamforge pipeline over HTTP")]
struct Args {
    #[arg(long, env = "FOAMFORGE_PORT", default_value_t = 8787)]
    port: u16,
    #[arg(long, env = "FOAMFORGE_BIND", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    bind: IpAddr,
    /// Where uploaded models are kept.
    #[arg(long, env = "FOAMFORGE_SPOOL_DIR", default_value = "foamforge-spool")]
    spool_dir: PathBuf,
    #[arg(long, env = "FOAMFORGE_MAX_UPLOAD_BYTES", default_value_t = 256 << 20)]
    max_upload_bytes: usize,
    /// Depth texels per block edge for new sessions.
    #[arg(long, env = "FOAMFORGE_SUPERSAMPLE", default_value_t = 8)]
    supersample: u32,
    /// Sessions are restored from and saved to this JSON file.
    #[arg(long, env = "FOAMFORGE_SNAPSHOT")]
    snapshot: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    anyhow::ensure!(
        (1..=foamforge_api::MAX_SUPERSAMPLE).contains(&args.supersample),
        "--supersample must be between 1 and {}",
        foamforge_api::MAX_SUPERSAMPLE
    );
    let config = Config {
        spool_dir: args.spool_dir,
        max_upload_bytes: args.max_upload_bytes,
        supersample: args.supersample,
        snapshot: args.snapshot,
    };
    serve(config, SocketAddr::new(args.bind, args.port), shutdown_signal()).await
}
