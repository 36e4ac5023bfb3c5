use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use stochbohm::experiments::{parse_config, run_experiment, sweep};
use stochbohm::io::OutputSet;
use stochbohm::verify::{default_config, run_suite, select_groups, VerifyOptions, DEFAULT_CONFIGS};
use stochbohm::Error;

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "stochbohm", version, about = "Stochastic Bohmian measurement scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, env = "STOCHBOHM_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for the data-parallel core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its result files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant and oracle suite, plus the per-run checks of the
    /// shipped (or given) configs.
    Verify {
        /// Configs whose per-run checks are included (default: shipped configs).
        #[arg(long)]
        config: Vec<PathBuf>,
        /// Restrict to check groups with this name or prefix (repeatable).
        #[arg(long)]
        check: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a config once per value of one dotted parameter path.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path, e.g. `stochastic.density.etas.0.upper`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: format!("config error: {e}") }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_RUNTIME, message: format!("runtime error: {e}") }
    }
}

fn classify(e: Error) -> Failure {
    match e.root() {
        Error::Schema { .. } | Error::Invariant { .. } => Failure::config(e),
        _ => Failure::runtime(e),
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::config("--threads must be positive"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::runtime)?;
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn with_seed(text: &str, seed: Option<u64>) -> Result<String, Failure> {
    let Some(seed) = seed else { return Ok(text.to_string()) };
    let mut doc: serde_json::Value = serde_json::from_str(text).map_err(Failure::config)?;
    stochbohm::experiments::set_path(&mut doc, "seed", seed.into()).map_err(Failure::config)?;
    Ok(doc.to_string())
}

fn commit(outputs: OutputSet, dir: &Path) -> Result<(), Failure> {
    for path in outputs.commit(dir).map_err(Failure::runtime)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(config: &Path, seed: Option<u64>, common: &Common) -> Result<u8, Failure> {
    let text = with_seed(&read(config)?, seed)?;
    let cfg = parse_config(&text).map_err(Failure::config)?;
    set_threads(common.threads)?;
    let start = Instant::now();
    let result = run_experiment(&cfg).map_err(classify)?;
    eprintln!("{} finished in {:.2} s", cfg.scenario.name(), start.elapsed().as_secs_f64());
    commit(result.outputs(&cfg), &common.out)?;
    for check in &result.checks {
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!("{status} {}: {:.3e} (limit {:.3e})", check.name, check.value, check.threshold);
    }
    Ok(if result.passed() { 0 } else { EXIT_CHECK })
}

fn verify(configs: &[PathBuf], checks: &[String], seed: Option<u64>, threads: Option<usize>) -> Result<u8, Failure> {
    let groups = select_groups(checks).map_err(Failure::config)?;
    let mut runs = Vec::new();
    if checks.is_empty() || checks.iter().any(|c| "config".starts_with(c.as_str())) {
        if configs.is_empty() {
            for (name, _) in DEFAULT_CONFIGS {
                runs.push((name.to_string(), default_config(name).map_err(Failure::config)?));
            }
        } else {
            for path in configs {
                runs.push((path.display().to_string(), parse_config(&read(path)?).map_err(Failure::config)?));
            }
        }
    }
    set_threads(threads)?;
    let mut opts = VerifyOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let mut failed = 0usize;
    let mut total = 0usize;
    for g in run_suite(&groups, &opts) {
        for c in &g.checks {
            println!("{}", c.line());
            total += 1;
            failed += usize::from(!c.pass);
        }
        if let Some(e) = &g.error {
            println!("FAIL {}: {e}", g.group);
            total += 1;
            failed += 1;
        }
        eprintln!("  {} took {:.2} s", g.group, g.seconds);
    }
    for (name, cfg) in runs {
        match run_experiment(&cfg) {
            Ok(r) => {
                for c in &r.checks {
                    let status = if c.pass { "PASS" } else { "FAIL" };
                    println!("{status} config:{name}/{}: {:.3e} (limit {:.3e})", c.name, c.value, c.threshold);
                    total += 1;
                    failed += usize::from(!c.pass);
                }
            }
            Err(e) => {
                println!("FAIL config:{name}: {e}");
                total += 1;
                failed += 1;
            }
        }
    }
    println!("{} of {total} checks passed", total - failed);
    Ok(if failed == 0 { 0 } else { EXIT_CHECK })
}

fn run_sweep(config: &Path, param: &str, values: &[f64], seed: Option<u64>, common: &Common) -> Result<u8, Failure> {
    let text = with_seed(&read(config)?, seed)?;
    set_threads(common.threads)?;
    let table = sweep(&text, param, values).map_err(classify)?;
    let mut outputs = OutputSet::new();
    outputs.add("sweep.csv", table.to_csv());
    commit(outputs, &common.out)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, seed, common } => run(config, *seed, common),
        Command::Verify { config, check, seed, threads } => verify(config, check, *seed, *threads),
        Command::Sweep { config, param, values, seed, common } => run_sweep(config, param, values, *seed, common),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
