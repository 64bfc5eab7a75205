use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tallwind::copula::write_records;
use tallwind::synthetic::SyntheticClimate;
use tallwind::workflow::{self, Problem, RunConfig, WorkflowError};

#[derive(Parser, Debug)]
#[command(name = "tallwind", version, about = "Risk-averse shape optimization of a tall building under uncertain wind")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Calibrated model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the joint speed/direction model to historical records.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Records CSV with header `timestamp,speed_mps,direction_deg`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Optimize the building design.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_problem)]
        problem: Option<Problem>,
    },
    /// Monte Carlo statistics of a fixed design.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Roof twist in degrees.
        #[arg(long, allow_hyphen_values = true)]
        twist: f64,
        /// Roof diameter `a` in m (defaults to the configured initial value).
        #[arg(long)]
        roof: Option<f64>,
        #[arg(short = 'n', long)]
        samples: Option<usize>,
    },
    /// Sector-by-speed frequency table of the calibrated model.
    Windrose {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long)]
        samples: Option<usize>,
    },
    /// Write a synthetic three-regime wind record file.
    SynthData {
        /// Output CSV path.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short = 'n', long, default_value_t = 52_584)]
        records: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    match s {
        "prob1" | "mean" => Ok(Problem::Prob1),
        "prob2" | "cvar" => Ok(Problem::Prob2),
        "prob3" | "pwd" => Ok(Problem::Prob3),
        _ => Err(format!("unknown problem `{s}` (expected prob1, prob2 or prob3)")),
    }
}

fn load_config(c: &Common) -> Result<RunConfig, WorkflowError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(o) = &c.output_dir {
        cfg.paths.output_dir = o.clone();
    }
    if let Some(m) = &c.model {
        cfg.paths.model = Some(m.clone());
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), WorkflowError> {
    let s = serde_json::to_string_pretty(v).map_err(|e| WorkflowError::Io(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), WorkflowError> {
    match cli.command {
        Command::Calibrate { common, data } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = data {
                cfg.paths.wind_data = Some(d);
            }
            let report = workflow::cmd_calibrate(&cfg)?;
            print_json(&report)
        }
        Command::Optimize { common, problem } => {
            let mut cfg = load_config(&common)?;
            if let Some(p) = problem {
                cfg.problem.kind = p;
            }
            let out = workflow::cmd_optimize(&cfg)?;
            eprintln!("record written to {}", out.record_path.display());
            print_json(&out.summary)
        }
        Command::Evaluate {
            common,
            twist,
            roof,
            samples,
        } => {
            let cfg = load_config(&common)?;
            let n = samples.unwrap_or(cfg.evaluate.samples);
            let report = workflow::cmd_evaluate(&cfg, twist, roof, n)?;
            print_json(&report)
        }
        Command::Windrose { common, samples } => {
            let cfg = load_config(&common)?;
            let n = samples.unwrap_or(cfg.evaluate.windrose_samples);
            let rose = workflow::cmd_windrose(&cfg, n)?;
            for (s, total) in rose.sector_totals().iter().enumerate() {
                println!("{:>3}-{:<3} {:.4}", 30 * s, 30 * (s + 1), total);
            }
            Ok(())
        }
        Command::SynthData { output, records, seed } => {
            let recs = SyntheticClimate::basel_like().generate(records, seed)?;
            if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| WorkflowError::Io(format!("{}: {e}", dir.display())))?;
            }
            let f = std::fs::File::create(&output).map_err(|e| WorkflowError::Io(format!("{}: {e}", output.display())))?;
            write_records(std::io::BufWriter::new(f), &recs)?;
            eprintln!("wrote {} records to {}", recs.len(), output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}
