//! Command-line front end: argument parsing, config merging, manifests and exit codes.

pub mod commands;
pub mod config;
pub mod output;

use clap::Parser;
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;

use commands::Command;
use config::parse_run_config;
use output::{Format, Manifest, Output};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "torus-pam", version, about = "Heat kernels, colored noise and the parabolic Anderson model on the flat torus")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON run config; command-line flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub output_dir: PathBuf,
    /// format of result tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// The value of `--config` if present, scanning raw arguments.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Position right after the subcommand name.
fn subcommand_end(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if !s.starts_with('-') {
            return Some(i + 1);
        }
        // global options taking a separate value
        if matches!(s.as_ref(), "--config" | "--seed" | "--output-dir" | "--format" | "--threads") {
            i += 1;
        }
        i += 1;
    }
    None
}

/// Inserts the config file's flags after the subcommand so later command-line flags win.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let cfg = parse_run_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let Some(at) = subcommand_end(&args) else {
        return Ok(args);
    };
    if let Some(c) = &cfg.command {
        let given = args[at - 1].to_string_lossy();
        if *c != given {
            return Err(format!("config is for command {c:?} but {given:?} was requested"));
        }
    }
    let extra = cfg.to_args().map_err(|e| e.to_string())?;
    let mut out: Vec<OsString> = args[..at].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend(args[at..].iter().cloned());
    Ok(out)
}

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    command: &'a Command,
}

pub fn run(args: Vec<OsString>) -> i32 {
    let args = match expand_args(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let name = cli.command.name();
    let args_value = match serde_json::to_value(Resolved { command: &cli.command }) {
        Ok(serde_json::Value::Object(mut m)) => m.remove(name).unwrap_or_default(),
        _ => serde_json::Value::Null,
    };
    let result = Output::create(&cli.output_dir, cli.format).and_then(|mut out| {
        out.manifest(&Manifest {
            schema: output::MANIFEST_SCHEMA,
            tool: "torus-pam",
            version: env!("CARGO_PKG_VERSION"),
            command: name,
            seed: cli.seed,
            format: cli.format,
            args: args_value,
        })?;
        cli.command.run(cli.seed, &mut out)
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            println!("verification failed");
            EXIT_VERIFY
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
