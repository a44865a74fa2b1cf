mod args;
mod commands;
mod error;
mod plan;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};
use plan::{out_dir, resolve, CommandKind, RunManifest};

fn dispatch(cli: Cli) -> CliResult<String> {
    let (plan, out) = match cli.command {
        Command::Train(a) => {
            let mut plan = resolve(CommandKind::Train, &a.common)?;
            if let Some(n) = a.checkpoint_every {
                plan.config.train.checkpoint_every = n;
            }
            (plan, a.common.out)
        }
        Command::Eval(a) => {
            let mut plan = resolve(CommandKind::Eval, &a.common)?;
            if a.checkpoint.is_some() && a.policy != args::PolicyKind::Model {
                return Err(CliError::Usage("--checkpoint only applies to --policy model".into()));
            }
            plan.policy = Some(a.policy);
            plan.checkpoint = a.checkpoint;
            (plan, a.common.out)
        }
        Command::Ablate(a) => (resolve(CommandKind::Ablate, &a)?, a.out),
        Command::Oracle(a) => (resolve(CommandKind::Oracle, &a)?, a.out),
        Command::GenTraces(a) => (resolve(CommandKind::GenTraces, &a)?, a.out),
        Command::Rerun(a) => {
            let text = std::fs::read_to_string(&a.manifest).map_err(|e| CliError::Usage(format!("{}: {e}", a.manifest.display())))?;
            let manifest: RunManifest =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.manifest.display())))?;
            (manifest.plan, a.out)
        }
    };
    let dir = out_dir(out.as_deref(), &plan);
    commands::execute(&plan, &dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
