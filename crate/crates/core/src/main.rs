use std::fs::File;
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use predfuzz::cli::stats::write_events;
use predfuzz::cli::summary::Summary;
use predfuzz::cli::sweep::{median, sweep};
use predfuzz::cli::witness::{replay, Witness};
use predfuzz::cli::{exit, load_contract, CliError};
use predfuzz::fuzzcore::{Campaign, CampaignConfig, CampaignResult, Configuration, DEFAULT_ATTACK_SLOT};

/// Greybox fuzzer with input prediction for small stateful contracts.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuzz a contract and print a summary.
    Run {
        /// Contract file, or `builtin:NAME` (baz, foo, wallet, nonlinear, linear0..linear9).
        contract: String,
        #[command(flatten)]
        opts: RunOpts,
        /// Write the statistics stream (one JSON object per line).
        #[arg(long, value_name = "PATH")]
        stats_out: Option<PathBuf>,
        /// Write one witness file per bug into this directory.
        #[arg(long, value_name = "DIR")]
        witness_dir: Option<PathBuf>,
    },
    /// Re-execute a witness file and check that its bug reproduces.
    Replay { witness: PathBuf },
    /// Run consecutive seeds in parallel and print per-seed results and medians.
    Sweep {
        contract: String,
        #[command(flatten)]
        opts: RunOpts,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 20)]
        runs: u64,
        /// Worker threads (defaults to the available parallelism).
        #[arg(long)]
        threads: Option<NonZeroUsize>,
    },
    /// Run a campaign and list (or export) the resulting corpus.
    Corpus {
        contract: String,
        #[command(flatten)]
        opts: RunOpts,
        /// Write the corpus as JSON instead of listing it.
        #[arg(long, value_name = "PATH")]
        export: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, default_value = "B")]
    config: Configuration,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_execs: u64,
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long, default_value_t = 8)]
    max_seq_len: usize,
    #[arg(long, default_value_t = 0.125)]
    aggressive_prob: f64,
    #[arg(long, default_value_t = DEFAULT_ATTACK_SLOT)]
    attack_slot: u64,
    #[arg(long)]
    no_literal_harvest: bool,
    #[arg(long, default_value_t = 5)]
    secant_iters: u32,
    /// Report zero wall time in events, making streams byte-reproducible.
    #[arg(long)]
    logical_clock: bool,
}

impl RunOpts {
    fn to_config(&self) -> Result<CampaignConfig, CliError> {
        if !(0.0..=1.0).contains(&self.aggressive_prob) {
            return Err(CliError::Usage("--aggressive-prob must lie in [0, 1]".into()));
        }
        let max_duration = match self.max_seconds {
            Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
            Some(_) => return Err(CliError::Usage("--max-seconds must be non-negative".into())),
            None => None,
        };
        Ok(CampaignConfig {
            max_duration,
            max_seq_len: self.max_seq_len,
            aggressive_prob: self.aggressive_prob,
            attack_slot: self.attack_slot,
            literal_harvest: !self.no_literal_harvest,
            secant_iters: self.secant_iters,
            logical_clock: self.logical_clock,
            ..CampaignConfig::new(self.config, self.seed, self.max_execs)
        })
    }
}

fn run_campaign(contract: &str, opts: &RunOpts) -> Result<(String, CampaignResult), CliError> {
    let (source, parsed) = load_contract(contract)?;
    let result = Campaign::new(parsed, opts.to_config()?)?.run();
    Ok((source, result))
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn main_inner(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run {
            contract,
            opts,
            stats_out,
            witness_dir,
        } => {
            let (source, result) = run_campaign(&contract, &opts)?;
            if let Some(path) = &stats_out {
                write_events(create(path)?, &result.events).map_err(|e| CliError::io(path, e))?;
            }
            print!("{}", Summary::from_events(&result.events));
            if let Some(dir) = &witness_dir {
                for bug in &result.bugs {
                    let path = Witness::new(&source, &result.config, bug).save_in(dir)?;
                    println!("witness: {}", path.display());
                }
            }
            Ok(exit::OK)
        }
        Command::Replay { witness } => {
            let w = Witness::load(&witness)?;
            let report = replay(&w)?;
            if report.reproduced {
                println!("reproduced: {} at {}", w.swc, w.loc);
                Ok(exit::OK)
            } else {
                println!("not reproduced: {} at {}", w.swc, w.loc);
                for f in &report.findings {
                    println!("  observed {} at {}", f.kind, f.loc);
                }
                Ok(exit::NOT_REPRODUCED)
            }
        }
        Command::Sweep {
            contract,
            opts,
            runs,
            threads,
        } => {
            let (_, parsed) = load_contract(&contract)?;
            let base = opts.to_config()?;
            let results = sweep(&parsed, &base, opts.seed..opts.seed + runs, None, threads)?;
            let mut to_bug = Vec::new();
            let mut paths = Vec::new();
            for r in &results {
                let s = Summary::from_events(&r.events);
                let first = s.bugs.iter().map(|b| b.exec_index).min();
                println!(
                    "seed {:>4}: paths {:>4}  bugs {}  first bug {}",
                    r.config.seed,
                    s.paths,
                    s.bugs.len(),
                    first.map_or("-".to_owned(), |e| format!("after {e} execs"))
                );
                to_bug.extend(first.map(|e| e as f64));
                paths.push(s.paths as f64);
            }
            println!("median paths: {}", median(&paths).unwrap_or(0.0));
            println!("runs finding a bug: {}/{}", to_bug.len(), results.len());
            if let Some(m) = median(&to_bug) {
                println!("median execs to first bug (finding runs): {m}");
            }
            Ok(exit::OK)
        }
        Command::Corpus { contract, opts, export } => {
            let (_, result) = run_campaign(&contract, &opts)?;
            match export {
                Some(path) => {
                    let mut out = create(&path)?;
                    serde_json::to_writer_pretty(&mut out, &result.corpus)
                        .map_err(|e| CliError::io(&path, e.into()))?;
                    out.flush().map_err(|e| CliError::io(&path, e))?;
                }
                None => {
                    for e in &result.corpus {
                        println!("{} found at {:>7}  {}", e.pid, e.found_at, e.test);
                    }
                }
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
