use std::path::PathBuf;
use std::process::ExitCode;

use lipband::experiments::{self, ExperimentConfig, ExperimentKind};

const USAGE: &str = "\
lipband - Lipschitz bandit experiments with a transferred constant

USAGE:
  lipband <experiment> [--config PATH] [--seed N] [--seeds K] [--out DIR]
                       [--threads W] [--quick] [--svg]

EXPERIMENTS:
  risk                  four beliefs (unstructured, true, understated, online)
                        on one hard instance; regret traces and estimate
                        trajectories
  transfer              batch of past episodes under the unstructured policy,
                        estimator evolution, and fresh-episode regret under
                        the transferred beliefs
  estimator-evolution   the batch and estimator phases of `transfer` only
  lp-study              lower-bound LP sweeps: monotonicity, scale-free
                        ceiling, continuity window
  adversarial           estimator success frequency over a (tau, M) grid on
                        the worst-case batch

FLAGS:
  --config PATH   key/value config file overriding the experiment defaults
  --seed N        base seed (default per experiment)
  --seeds K       Monte Carlo sample-path count (risk)
  --out DIR       output directory (default runs/<experiment>)
  --threads W     worker count (LIPBAND_THREADS env var overrides this flag)
  --quick         documented reduced profile (smaller horizon / fewer seeds)
  --svg           also render cosmetic SVG charts
  --help          this message

Outputs are tidy CSV files plus run_manifest.txt in the output directory.
Exit code is nonzero when any experiment check fails.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print!("{USAGE}");
        return if args.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }

    let config = match parse_args(&args) {
        Ok(config) => config,
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    println!(
        "running {} (T={}, base seed {}, out {})",
        config.kind.name(),
        config.horizon,
        config.base_seed,
        config.out_dir.display()
    );
    match experiments::run(&config) {
        Ok(checks) => {
            let mut failed = 0;
            for check in &checks {
                let tag = if check.passed { "pass" } else { "FAIL" };
                println!("[{tag}] {}: {}", check.name, check.detail);
                if !check.passed {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("all {} checks passed", checks.len());
                ExitCode::SUCCESS
            } else {
                eprintln!("{failed} of {} checks failed", checks.len());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_args(args: &[String]) -> Result<ExperimentConfig, String> {
    let kind = ExperimentKind::parse(&args[0]).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::defaults(kind);

    let mut config_path: Option<PathBuf> = None;
    let mut seed: Option<u64> = None;
    let mut seeds: Option<usize> = None;
    let mut out: Option<PathBuf> = None;
    let mut threads: Option<usize> = None;
    let mut quick = false;
    let mut svg = false;

    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| {
            it.next().map(|s| s.to_string()).ok_or(format!("missing value for {name}"))
        };
        match arg.as_str() {
            "--config" => config_path = Some(PathBuf::from(take("--config")?)),
            "--seed" => {
                seed = Some(take("--seed")?.parse().map_err(|_| "invalid --seed".to_string())?)
            }
            "--seeds" => {
                seeds = Some(take("--seeds")?.parse().map_err(|_| "invalid --seeds".to_string())?)
            }
            "--out" => out = Some(PathBuf::from(take("--out")?)),
            "--threads" => {
                threads =
                    Some(take("--threads")?.parse().map_err(|_| "invalid --threads".to_string())?)
            }
            "--quick" => quick = true,
            "--svg" => svg = true,
            other => return Err(format!("unknown flag '{other}'")),
        }
    }

    // Config file first, then CLI flags on top.
    if let Some(path) = config_path {
        config.apply_file(&path).map_err(|e| e.to_string())?;
    }
    if quick {
        config.apply_quick();
    }
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    if let Some(seeds) = seeds {
        config.seeds = seeds;
    }
    if let Some(out) = out {
        config.out_dir = out;
    }
    if let Some(threads) = threads {
        config.threads = threads;
    }
    if svg {
        config.emit_svg = true;
    }
    // The environment variable wins over the flag.
    if let Ok(value) = std::env::var("LIPBAND_THREADS") {
        config.threads = value.parse().map_err(|_| "invalid LIPBAND_THREADS".to_string())?;
    }
    Ok(config)
}
