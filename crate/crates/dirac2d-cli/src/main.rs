//! Experiment runner binary.  Resolves the configuration, executes the
//! subcommand, and writes a manifest on every path; the exit code reports
//! success (0), numeric warnings (1), or failure (2).

mod cli;
mod commands;
mod config;
mod manifest;

use clap::Parser;

use cli::Cli;
use config::{outdir_hint, rooted_outdir, CommandKindTag, ResolvedConfig};
use manifest::{ArtifactStamp, Manifest};

fn stamp() -> ArtifactStamp {
    ArtifactStamp { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(&cli));
}

fn run(cli: &Cli) -> i32 {
    let (command, args) = cli.command.split();
    let config_file = args.config.as_ref().map(|p| p.display().to_string());
    let cfg = match config::resolve(command, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            // schema failures still leave a manifest behind, in the best
            // output directory knowable without a valid config
            let dir = outdir_hint(args);
            manifest::write(
                &dir,
                &Manifest {
                    artifact: stamp(),
                    command: command.as_str(),
                    status: "error",
                    error: Some(e.to_string()),
                    warnings: &[],
                    outputs: &[],
                    config: None,
                    config_file,
                },
            );
            eprintln!("error: {e}");
            return 2;
        }
    };
    let dir = rooted_outdir(&cfg.output.directory);
    match commands::execute(command, &cfg, &dir) {
        Ok(result) => {
            let status = if result.warnings.is_empty() { "ok" } else { "warning" };
            manifest::write(
                &dir,
                &Manifest {
                    artifact: stamp(),
                    command: command.as_str(),
                    status,
                    error: None,
                    warnings: &result.warnings,
                    outputs: &result.files,
                    config: Some(&cfg),
                    config_file,
                },
            );
            report(command, &cfg, &result, &dir);
            if result.warnings.is_empty() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            manifest::write(
                &dir,
                &Manifest {
                    artifact: stamp(),
                    command: command.as_str(),
                    status: "error",
                    error: Some(e.to_string()),
                    warnings: &[],
                    outputs: &[],
                    config: Some(&cfg),
                    config_file,
                },
            );
            eprintln!("error: {e}");
            2
        }
    }
}

fn report(
    command: CommandKindTag,
    _cfg: &ResolvedConfig,
    result: &commands::RunOutput,
    dir: &std::path::Path,
) {
    println!("{command}: {}", result.summary);
    for warning in &result.warnings {
        println!("warning: {warning}");
    }
    for file in &result.files {
        println!("wrote {}", dir.join(file).display());
    }
    println!("wrote {}", dir.join(manifest::MANIFEST_NAME).display());
}
