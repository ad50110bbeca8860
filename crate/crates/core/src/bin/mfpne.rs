use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mfpne::harness::{self, ExperimentConfig, Summary};
use mfpne::Error;

#[derive(Parser, Debug)]
#[command(name = "mfpne", version, about = "Multi-fidelity search for approximate pure Nash equilibria")]
struct Cli {
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads across cells.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Bundled experiment instead of a config file.
    #[arg(long, global = true, value_parser = harness::PRESET_NAMES)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every (policy, budget, eta, seed) cell of an experiment.
    Run { config: Option<PathBuf> },
    /// Find the best eta per budget for the multi-fidelity policy.
    EtaSearch { config: Option<PathBuf> },
    /// Aggregate one or more results.csv files.
    Summarize {
        #[arg(required = true)]
        tables: Vec<PathBuf>,
    },
    /// Print the JSON description of one instance.
    DumpInstance {
        config: Option<PathBuf>,
        /// Replicate index within the seed range.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

enum Failure {
    Config(String),
    Cells(usize),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(cli: &Cli, path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (path, &cli.preset) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either a config file or --preset, not both".into())),
        (Some(p), None) => ExperimentConfig::from_path(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(Failure::Config("no config file or --preset given".into())),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if cli.parallel.is_some() {
        cfg.parallel = cli.parallel;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn print_summary(s: &Summary) {
    println!("{:<12} {:>10} {:>6} {:>5} {:>12} {:>12} {:>12} {:>12}", "policy", "lambda", "eta", "runs", "simple", "p05", "p95", "cum");
    for r in &s.rows {
        let eta = r.eta.map_or("-".to_string(), |e| format!("{e}"));
        println!(
            "{:<12} {:>10} {:>6} {:>5} {:>12.5} {:>12.5} {:>12.5} {:>12.4}",
            r.policy, r.lambda, eta, r.runs, r.simple_mean, r.simple_p05, r.simple_p95, r.cum_mean
        );
    }
    if s.budget_violations > 0 {
        println!("budget violations: {}", s.budget_violations);
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(cli, config.as_deref())?;
            let dir = out_dir(&cfg);
            let out = harness::run_experiment(&cfg, Some(&dir))?;
            print_summary(&out.summary);
            println!("wrote {}", dir.join("results.csv").display());
            if !out.failures.is_empty() {
                for f in &out.failures {
                    eprintln!("cell {} failed: {}", f.cell.file_stem(), f.message);
                }
                return Err(Failure::Cells(out.failures.len()));
            }
        }
        Command::EtaSearch { config } => {
            let cfg = load(cli, config.as_deref())?;
            let dir = out_dir(&cfg);
            let out = harness::eta_search(&cfg, Some(&dir))?;
            for b in &out.best {
                println!("lambda {:>10}: eta {} (mean simple regret {:.5})", b.lambda, b.eta, b.mean_simple_regret);
            }
            println!("wrote {}", dir.join("surface.csv").display());
            if !out.experiment.failures.is_empty() {
                return Err(Failure::Cells(out.experiment.failures.len()));
            }
        }
        Command::Summarize { tables } => {
            let mut rows = Vec::new();
            for t in tables {
                rows.extend(harness::read_results(t)?);
            }
            let s = harness::summarize(&rows);
            print_summary(&s);
            if let Some(o) = &cli.out {
                std::fs::create_dir_all(o).map_err(Error::from)?;
                harness::write_summary(&o.join("summary.csv"), &s)?;
            }
            if s.budget_violations > 0 {
                return Err(Failure::Other(format!("{} rows exceed their budget", s.budget_violations)));
            }
        }
        Command::DumpInstance { config, replicate } => {
            let cfg = load(cli, config.as_deref())?;
            if *replicate >= cfg.seeds.count {
                return Err(Failure::Config(format!("replicate {replicate} outside the seed range")));
            }
            let summary = harness::dump_instance(&cfg, cfg.seeds.start + replicate)?;
            let text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
            match &cli.out {
                Some(o) => {
                    std::fs::create_dir_all(o).map_err(Error::from)?;
                    let p = o.join("instance.json");
                    std::fs::write(&p, text).map_err(Error::from)?;
                    println!("wrote {}", p.display());
                }
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Cells(n)) => {
            eprintln!("{n} cell(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
