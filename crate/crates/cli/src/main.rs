use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use mme_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        match &cli.out {
            Some(path) => fs::write(path, &out.body).with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().write_all(out.body.as_bytes())?,
        }
        Ok(out.status)
    });
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
