//! HTTP/JSON front end for foamforge: upload a mesh, open a session, tune
//! its parameters, generate, and download the foam halves and slices.

mod error;
mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use error::ApiError;
pub use routes::router;
pub use state::{AppState, Config};

/// Binds `addr` and serves until `shutdown` resolves, then writes the
/// session snapshot if one is configured.
pub async fn serve(config: Config, addr: SocketAddr, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(config, listener, shutdown).await
}

pub async fn serve_on(
    config: Config,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(config)?);
    if let Some(path) = state.config.snapshot.as_deref().filter(|p| p.exists()) {
        let n = state.load_snapshot(path)?;
        tracing::info!(sessions = n, path = %path.display(), "restored snapshot");
    }
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    if let Some(path) = state.config.snapshot.as_deref() {
        state.write_snapshot(path)?;
        tracing::info!(path = %path.display(), "wrote snapshot");
    }
    Ok(())
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
