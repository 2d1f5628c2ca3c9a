use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use marketfacts_core::engine::io::{read_daily, read_ticks, write_run};
use marketfacts_core::engine::{parse_config, run_batch_map};
use marketfacts_core::report::{read_report, render_csv, render_text, write_report};
use marketfacts_core::stats::battery::{aggregate, compute_run_facts, parse_facts, BatteryConfig, RunFacts, RunInput};
use marketfacts_core::Error;

#[derive(Parser)]
#[command(name = "marketfacts", version, about = "Simulate an agent-based order-driven market and test stylised facts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo batch for every treatment in the config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the stylised-fact battery over simulated runs or a daily CSV.
    Validate {
        /// A run directory, a directory of runs, or a daily CSV file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated fact ids, or `all`.
        #[arg(long, default_value = "all")]
        facts: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        /// Synthetic sets for the power-law goodness-of-fit test.
        #[arg(long, default_value_t = 1000)]
        gof_sets: usize,
        /// Resamples for power-law parameter uncertainty.
        #[arg(long, default_value_t = 100)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a saved report as tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn simulate(config: &Path, runs: usize, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", config.display())))?;
    let mut file = parse_config(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    if runs == 0 {
        return Err(Failure::Usage("--runs must be positive".into()));
    }
    if let Some(s) = seed {
        file.base.master_seed = s;
    }
    let cfgs = file.treatment_configs();
    let dirs = run_batch_map(&cfgs, runs, |t, r, rec| {
        let dir = out.join(&cfgs[t].name).join(format!("run_{r:03}"));
        write_run(&dir, &rec).map(|_| dir)
    })?;
    for (cfg, d) in cfgs.iter().zip(&dirs) {
        for r in d {
            r.as_ref().map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        println!("{}: {} runs under {}", cfg.name, d.len(), out.join(&cfg.name).display());
    }
    Ok(())
}

/// Run directories (those holding a `daily.csv`) under `root`, sorted.
fn find_runs(root: &Path, found: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if root.join("daily.csv").is_file() {
        found.push(root.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        find_runs(&e, found)?;
    }
    Ok(())
}

fn load_run(root: &Path, dir: &Path) -> Result<RunInput, String> {
    let label = dir
        .strip_prefix(root)
        .ok()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(dir)
        .display()
        .to_string();
    let daily = read_daily(&dir.join("daily.csv")).map_err(|e| format!("{label}: {e}"))?;
    let ticks_path = dir.join("ticks.csv");
    let ticks = if ticks_path.is_file() {
        Some(read_ticks(&ticks_path).map_err(|e| format!("{label}: {e}"))?)
    } else {
        None
    };
    Ok(RunInput { label, daily, ticks })
}

/// `out.json` for a single group, `out.<group>.json` otherwise.
fn group_path(out: &Path, group: &str, single: bool) -> PathBuf {
    if single {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{group}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{group}"),
    };
    out.with_file_name(name)
}

fn validate(input: &Path, out: &Path, cfg: &BatteryConfig) -> Result<(), Failure> {
    if input.is_file() {
        let daily = read_daily(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
        let label = input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let run = compute_run_facts(&RunInput { label, daily, ticks: None }, cfg, 0);
        write_report(out, &aggregate(&[run], cfg))?;
        println!("wrote {}", out.display());
        return Ok(());
    }
    if !input.is_dir() {
        return Err(Failure::Usage(format!("{} does not exist", input.display())));
    }
    let mut dirs = Vec::new();
    find_runs(input, &mut dirs).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
    if dirs.is_empty() {
        return Err(Failure::Runtime(format!("no run directories under {}", input.display())));
    }
    // runs of one treatment share a parent directory
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for d in dirs {
        let parent = d.parent().unwrap_or(input);
        let key = parent
            .strip_prefix(input)
            .ok()
            .map(|p| p.display().to_string().replace(std::path::MAIN_SEPARATOR, "_"))
            .filter(|k| !k.is_empty())
            .unwrap_or_else(|| "runs".into());
        groups.entry(key).or_default().push(d);
    }
    let single = groups.len() == 1;
    let mut written = 0;
    for (group, dirs) in &groups {
        let results: Vec<Result<RunFacts, String>> = dirs
            .par_iter()
            .enumerate()
            .map(|(i, d)| load_run(input, d).map(|run| compute_run_facts(&run, cfg, i)))
            .collect();
        let mut runs = Vec::new();
        let mut errors = Vec::new();
        for r in results {
            match r {
                Ok(r) => runs.push(r),
                Err(e) => errors.push(e),
            }
        }
        for e in &errors {
            eprintln!("warning: {e}");
        }
        if runs.is_empty() {
            eprintln!("error: no readable runs in group {group}");
            continue;
        }
        let mut report = aggregate(&runs, cfg);
        report.input_errors = errors;
        let path = group_path(out, group, single);
        write_report(&path, &report)?;
        println!("{group}: {} runs -> {}", report.n_runs, path.display());
        written += 1;
    }
    if written == 0 {
        return Err(Failure::Runtime("every input failed to load".into()));
    }
    Ok(())
}

fn report(input: &Path, format: Format) -> Result<(), Failure> {
    let rep = read_report(input)?;
    let body = match format {
        Format::Text => render_text(&rep),
        Format::Csv => render_csv(&rep),
    };
    print!("{body}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, runs, seed, out } => simulate(&config, runs, seed, &out),
        Command::Validate {
            input,
            facts,
            out,
            max_lag,
            gof_sets,
            bootstrap,
            seed,
        } => match parse_facts(&facts) {
            Ok(facts) => {
                let cfg = BatteryConfig {
                    facts,
                    max_lag,
                    powerlaw_synth: gof_sets,
                    powerlaw_boot: bootstrap,
                    seed,
                    ..BatteryConfig::default()
                };
                validate(&input, &out, &cfg)
            }
            Err(e) => Err(Failure::Usage(e.to_string())),
        },
        Command::Report { input, format } => report(&input, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
