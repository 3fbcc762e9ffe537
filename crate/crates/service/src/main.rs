use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;

use runlens_service::{router, AppState};

#[derive(Parser, Debug)]
#[command(name = "runlens-serve", version, about = "Serve profiles and lineup comparisons from an artifact store")]
struct Args {
    #[arg(long, default_value = "store")]
    store: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory with a built UI bundle to serve at `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let state = AppState::from_store(&args.store).with_context(|| format!("loading {}", args.store.display()))?;
    log::info!(
        "loaded {} matches, {} qualified profiles, {} teams",
        state.matches,
        state.season.profiles.len(),
        state.season.teams.len()
    );
    let app = router(Arc::new(state), args.ui.as_deref());
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
