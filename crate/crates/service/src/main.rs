use clap::Parser;
use service::cli::{run, serve_config, Cli, CliError, Command, ServeArgs};
use service::{router, AppState};

fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let cfg = serve_config(args)?;
    let state = AppState::open(&cfg.data_dir).map_err(|e| CliError::Failed(e.to_string()))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Failed(e.to_string()))?;
    rt.block_on(async {
        let addr = format!("{}:{}", cfg.bind, cfg.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Failed(format!("bind {addr}: {e}")))?;
        eprintln!("listening on {addr}, data in {}", cfg.data_dir.display());
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Failed(e.to_string()))
    })
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve(args) => serve(args),
        _ => run(cli.command),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
