use std::io::{self, IsTerminal};
use std::process::ExitCode;

use clap::Parser;
use srx_cli::{repl, server, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    let (mut session, notes) = match args.session() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for n in notes {
        eprintln!("{n}");
    }
    if args.serve {
        return serve(session, args.port);
    }
    let res = if io::stdin().is_terminal() {
        repl::run_interactive(&mut session).map_err(|e| e.to_string())
    } else {
        repl::run_script(&mut session, io::stdin().lock(), io::stdout().lock()).map_err(|e| e.to_string())
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve(session: srx::session::Session, port: u16) -> ExitCode {
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let res: io::Result<()> = rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, server::router(server::AppState::new(session))).await
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
