mod commands;
mod config;
mod manifest;
mod presets;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ldrbm", version, about = "Rule-based cardiac fibers and monodomain simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML run configuration; overlays the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named configuration (see `ldrbm presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tagged mesh.
    GenGeometry(Common),
    /// Generate a fiber field and the intermediate Laplace solutions.
    GenFibers(Common),
    /// Run a monodomain simulation.
    Simulate(Common),
    /// Compare two fiber fields or activation maps.
    Compare(Common),
    /// Fit conductivities to target conduction velocities.
    FitCv(Common),
    /// List presets and named parameter sets.
    Presets,
}

pub enum CliError {
    Usage(String),
    Core(ldrbm::Error),
}

impl From<ldrbm::Error> for CliError {
    fn from(e: ldrbm::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ldrbm::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Parse { .. } | Geometry(_) | Schema(_) | Tag(_) | Dimension(_) | Config(_) | Io(_) => 2,
                _ => 3,
            },
        }
    }
}

fn load_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut value = toml::Value::Table(Default::default());
    if let Some(name) = &c.preset {
        let p = presets::find(name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset '{name}'; run `ldrbm presets` for the list")))?;
        value = toml::from_str(p.toml).expect("built-in preset parses");
    }
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let top: toml::Value =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        config::merge(&mut value, top);
    }
    if c.preset.is_none() && c.config.is_none() {
        return Err(CliError::Usage("either --config or --preset is required".into()));
    }
    let mut cfg: RunConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("invalid configuration: {e}")))?;
    if c.output.is_some() {
        cfg.output = c.output.clone();
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if let Some(path) = &c.config {
        rebase_paths(&mut cfg, path.parent().unwrap_or(std::path::Path::new(".")));
    }
    Ok(cfg)
}

/// Relative input paths in a config file are taken relative to the file.
fn rebase_paths(cfg: &mut RunConfig, dir: &std::path::Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    };
    if let Some(g) = cfg.geometry.as_mut().and_then(|g| g.path.as_mut()) {
        fix(g);
    }
    if let Some(f) = cfg.ep.as_mut().and_then(|e| e.fibers_file.as_mut()) {
        fix(f);
    }
    if let Some(c) = cfg.compare.as_mut() {
        fix(&mut c.a);
        fix(&mut c.b);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Presets => {
            let mut out = std::io::stdout().lock();
            for p in presets::PRESETS {
                let _ = writeln!(out, "{:<18} {}", p.name, p.about);
            }
            let _ = writeln!(out);
            for (k, v) in presets::PARAMETER_SETS {
                let _ = writeln!(out, "{k:<32} {v}");
            }
            return Ok(());
        }
        Command::GenGeometry(c) => ("gen-geometry", c),
        Command::GenFibers(c) => ("gen-fibers", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Compare(c) => ("compare", c),
        Command::FitCv(c) => ("fit-cv", c),
    };
    let cfg = load_config(common)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Usage("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(ldrbm::Error::from)?;
    let mut ctx = commands::Context::new(name, common.preset.clone(), &cfg, out);
    match &cli.command {
        Command::GenGeometry(_) => commands::gen_geometry(&cfg, &mut ctx)?,
        Command::GenFibers(_) => commands::gen_fibers(&cfg, &mut ctx)?,
        Command::Simulate(_) => commands::simulate(&cfg, &mut ctx)?,
        Command::Compare(_) => commands::compare(&cfg, &mut ctx)?,
        Command::FitCv(_) => commands::fit_cv(&cfg, &mut ctx)?,
        Command::Presets => unreachable!(),
    }
    ctx.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Core(c) => {
                    eprintln!("error: {c}");
                    if let Some(h) = commands::hint(c) {
                        eprintln!("hint: {h}");
                    }
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
