//! `elastid`: derive identities, verify them numerically, and certify non-existence.
//!
//! Exit codes: 0 pass, 1 identity or certificate failure, 2 invalid input, 3 solver failure.

mod commands;
mod config;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "elastid", version, about = "Dilation identities for linear elasticity: derivation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key; applied after the file and the other flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; beats ELASTID_OUT and output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mesh widths, comma list.
    #[arg(long)]
    h: Option<String>,
}

#[derive(Args, Default)]
struct IdentityFlags {
    #[arg(long)]
    identity: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derivation log of an identity.
    Derive {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        id: IdentityFlags,
    },
    /// Static identity across a list of mesh widths.
    VerifyStatic {
        #[command(flatten)]
        common: Common,
        /// eigen | manufactured | solve
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        require_star_shaped: bool,
    },
    /// Time-dependent identity over a window, with dt refinement.
    VerifyDynamic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        id: IdentityFlags,
    },
    /// Check the hypotheses of the non-existence theorem.
    Certify {
        #[command(flatten)]
        common: Common,
    },
    /// Quick internal consistency checks.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common, extra: &[(&str, Option<String>)]) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    if let Some(n) = common.n {
        cfg.set_value("n", n)?;
    }
    if let Some(s) = common.seed {
        cfg.set_value("seed", s)?;
    }
    if let Some(h) = &common.h {
        cfg.set_value("grid.h", h)?;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            cfg.set_value(k, v)?;
        }
    }
    for s in &common.set {
        cfg.set(s)?;
    }
    Ok(cfg)
}

fn identity_keys(id: &IdentityFlags) -> [(&'static str, Option<String>); 3] {
    [("identity", id.identity.clone()), ("hamiltonian.a", id.a.clone()), ("hamiltonian.b", id.b.clone())]
}

fn run(command: Command) -> Result<u8, CliError> {
    let (name, cfg, flag_out) = match &command {
        Command::Derive { common, id } => ("derive", load(common, &identity_keys(id))?, common.out.clone()),
        Command::VerifyStatic { common, mode, require_star_shaped } => {
            let star = require_star_shaped.then(|| "true".to_string());
            ("verify-static", load(common, &[("static.mode", mode.clone()), ("domain.require_star_shaped", star)])?, common.out.clone())
        }
        Command::VerifyDynamic { common, id } => ("verify-dynamic", load(common, &identity_keys(id))?, common.out.clone()),
        Command::Certify { common } => ("certify", load(common, &[])?, common.out.clone()),
        Command::Selftest { out } => ("selftest", Config::default(), out.clone()),
    };
    let mut out = Output::create(output::resolve_dir(flag_out.as_deref(), &cfg))?;
    let mut derivs = vec![];
    let result = match command {
        Command::Derive { .. } => commands::derive(&cfg, &mut out, &mut derivs),
        Command::VerifyStatic { .. } => commands::verify_static(&cfg, &mut out, &mut derivs),
        Command::VerifyDynamic { .. } => commands::verify_dynamic(&cfg, &mut out, &mut derivs),
        Command::Certify { .. } => commands::certify(&cfg, &mut out, &mut derivs),
        Command::Selftest { .. } => commands::selftest(&mut out),
    };
    let code = match &result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    };
    out.finish(name, &cfg, &derivs, i32::from(code))?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
