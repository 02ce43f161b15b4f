use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use erm_lab::{bench_scaling, decide_instance, emit_report, render_report, run_suite, ExperimentConfig, ReportFormat, RunReport};
use erm_lab_core::instances::{
    default_dimension, default_threshold, generate, normalize, GenerateParams, Planted, ProblemKind, VectorPairInstance,
};
use erm_lab_core::{Answer, Reduction, Result};

#[derive(Parser)]
#[command(name = "erm-lab", version, about = "Certified OVP/BHCP reductions to kernel and network ERM problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance.
    Gen {
        #[arg(long, default_value = "bhcp")]
        kind: String,
        #[arg(long)]
        n: usize,
        /// Defaults to max(4, ceil(log2(n)^2)).
        #[arg(long)]
        d: Option<usize>,
        /// BHCP threshold; defaults to max(2, ceil(d/5)).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value = "random")]
        planted: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pad B to equal weight (OVP only).
        #[arg(long)]
        normalize: bool,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one reduction on an instance file.
    Decide {
        #[arg(long)]
        reduction: Reduction,
        #[arg(long)]
        input: PathBuf,
        /// Starting precision in bits.
        #[arg(long)]
        precision: Option<u32>,
        /// Kernel multiplier Q in C = Q ln n.
        #[arg(long)]
        c_mult: Option<String>,
        /// Config file for the remaining knobs.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a suite and compare every verdict with brute force.
    Verify {
        /// `default` or a config file.
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    /// Time the brute-force oracle over doubling n.
    Bench {
        #[arg(long, default_value_t = 64)]
        n_start: usize,
        #[arg(long, default_value_t = 3)]
        doublings: usize,
        #[arg(long, default_value_t = 64)]
        d: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-render a saved JSON report.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ProblemKind> {
    match s.to_ascii_lowercase().as_str() {
        "ovp" => Ok(ProblemKind::Ovp),
        "bhcp" => Ok(ProblemKind::Bhcp),
        _ => Err(erm_lab_core::Error::Parameter(format!("unknown problem kind '{s}'"))),
    }
}

fn parse_planted(s: &str) -> Result<Planted> {
    match s.to_ascii_lowercase().as_str() {
        "yes" => Ok(Planted::Yes),
        "no" => Ok(Planted::No),
        "random" => Ok(Planted::Random),
        _ => Err(erm_lab_core::Error::Parameter(format!("planted must be yes, no or random, got '{s}'"))),
    }
}

fn write_or_print(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_summary(report: &RunReport) {
    for s in &report.aggregate.per_reduction {
        println!(
            "{:<13} trials {:>4}  agree {:>4}  disagree {:>3}  undecidable {:>3}  failed {:>3}  mean {:>9.1} ms  max bits {}",
            s.reduction.as_str(),
            s.trials,
            s.agreed,
            s.disagreed,
            s.undecidable,
            s.failed,
            s.mean_ms,
            s.max_bits
        );
    }
    let a = &report.aggregate;
    println!(
        "total: {} trials, agreement {:.2}% of {} decided, undecidable {:.2}%, failed {}, digest {}",
        a.trials,
        100.0 * a.agreement_rate,
        a.decided,
        100.0 * a.undecidable_rate,
        a.failed,
        report.digest
    );
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("trial {} {} n={}: {}", r.trial, r.reduction, r.n, r.error.as_deref().unwrap_or(""));
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen { kind, n, d, t, planted, seed, normalize: norm, out } => {
            let kind = parse_kind(&kind)?;
            let d = d.unwrap_or_else(|| default_dimension(n));
            let t = match kind {
                ProblemKind::Bhcp => Some(t.unwrap_or_else(|| default_threshold(d))),
                ProblemKind::Ovp => None,
            };
            let mut inst = generate(&GenerateParams { kind, n, d, t, planted: parse_planted(&planted)?, seed })?.instance;
            if norm {
                inst = normalize(&inst)?;
            }
            write_or_print(&inst.to_json_string(), out.as_ref())?;
            Ok(0)
        }
        Command::Decide { reduction, input, precision, c_mult, config } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::read(&p)?,
                None => ExperimentConfig::default(),
            }
            .with_env_overrides()?;
            if precision.is_some() {
                cfg.precision_start = precision;
            }
            if let Some(q) = c_mult {
                cfg.c_multiplier = q;
            }
            cfg.validate()?;
            let inst = VectorPairInstance::read(&input)?;
            let v = decide_instance(reduction, &inst, &cfg)?;
            println!(
                "{} {}  statistic [{}, {}]  threshold [{}, {}]  bits {}  {:.1} ms",
                v.reduction,
                v.answer,
                v.statistic.lo_decimal(12),
                v.statistic.hi_decimal(12),
                v.threshold.lo_decimal(12),
                v.threshold.hi_decimal(12),
                v.precision_bits_used,
                v.solve_time.as_secs_f64() * 1e3
            );
            Ok(if v.answer == Answer::Undecidable { 2 } else { 0 })
        }
        Command::Verify { suite, trials, seed, json, csv, markdown } => {
            let mut cfg = if suite == "default" {
                ExperimentConfig::default()
            } else {
                ExperimentConfig::read(&PathBuf::from(&suite))?
            }
            .with_env_overrides()?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.json_out = json.or(cfg.json_out);
            cfg.csv_out = csv.or(cfg.csv_out);
            cfg.markdown_out = markdown.or(cfg.markdown_out);
            let report = run_suite(&cfg)?;
            print_summary(&report);
            for (path, fmt) in [
                (&cfg.json_out, ReportFormat::Json),
                (&cfg.csv_out, ReportFormat::Csv),
                (&cfg.markdown_out, ReportFormat::Markdown),
            ] {
                if let Some(p) = path {
                    emit_report(&report, fmt, p)?;
                }
            }
            Ok(report.exit_code())
        }
        Command::Bench { n_start, doublings, d, json } => {
            let mut cfg = ExperimentConfig::default();
            cfg.bench.n_start = n_start;
            cfg.bench.doublings = doublings;
            cfg.bench.d = d;
            let report = bench_scaling(&cfg)?;
            print!("{}", render_report(&report, ReportFormat::Markdown)?);
            if let Some(p) = json {
                emit_report(&report, ReportFormat::Json, &p)?;
            }
            Ok(0)
        }
        Command::Report { input, format, out } => {
            let report = RunReport::from_json_str(&std::fs::read_to_string(&input)?)?;
            write_or_print(&render_report(&report, format)?, out.as_ref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
