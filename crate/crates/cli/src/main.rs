use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entconc_cli::{
    manifest, preset, run_point, run_sweep, write_point_csv, write_table, Axis, AxisRange,
    CliError, Format, PointChannel, PointConfig, SweepConfig,
};
use entconc_core::{Method, TruncationPolicy};

const THREADS_VAR: &str = "ENTCONC_THREADS";

/// Entanglement concentration by phonon counting: single points, sweeps and
/// figure datasets.
#[derive(Parser)]
#[command(name = "entconc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one measurement outcome and print a JSON record.
    Point(PointArgs),
    /// Sweep one parameter and write a table.
    Sweep(SweepArgs),
    /// Dataset for entanglement versus q (C1 = 10, C2 = 2).
    Fig2(OutputArgs),
    /// Dataset for entanglement versus mu (C1 = 10, C2 = 5, q = 2).
    Fig3(OutputArgs),
    /// Dataset for entanglement versus q at several mu (C1 = 10, C2 = 3).
    Fig4(OutputArgs),
    /// Dataset for on/off detection versus C2 (C1 = 100).
    Fig5(OutputArgs),
    /// Print the preset and column manifest as JSON.
    Manifest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Override the truncation tolerance.
    #[arg(long)]
    eps_trunc: Option<f64>,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    c1: f64,
    #[arg(long)]
    c2: f64,
    #[arg(long, default_value_t = 0)]
    q: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// count, off or on.
    #[arg(long, default_value = "count")]
    channel: PointChannel,
    #[arg(long, value_delimiter = ',', default_value = "exact")]
    methods: Vec<Method>,
    #[arg(long)]
    eps_trunc: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// q, mu, c1 or c2.
    #[arg(long)]
    axis: Axis,
    /// start:stop[:step], inclusive.
    #[arg(long)]
    range: AxisRange,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// One or more efficiencies, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<Method>,
    #[command(flatten)]
    output: OutputArgs,
}

fn policy(eps_trunc: Option<f64>) -> TruncationPolicy {
    match eps_trunc {
        Some(e) => TruncationPolicy::default().with_eps_trunc(e),
        None => TruncationPolicy::default(),
    }
}

fn open(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Invalid(format!(
            "{THREADS_VAR} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot configure {n} threads: {e}")))
}

fn sweep_to(cfg: &SweepConfig, args: &OutputArgs) -> Result<(), CliError> {
    let table = run_sweep(cfg)?;
    let mut out = open(&args.out)?;
    write_table(&table, args.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Point(a) => {
            let cfg = PointConfig {
                c1: a.c1,
                c2: a.c2,
                q: a.q,
                mu: a.mu,
                channel: a.channel,
                methods: a.methods,
                policy: policy(a.eps_trunc),
            };
            let record = run_point(&cfg)?;
            let mut out = open(&a.out)?;
            match a.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &record)?;
                    out.write_all(b"\n")?;
                }
                Format::Csv => write_point_csv(&record, &mut out)?,
            }
            out.flush()?;
        }
        Command::Sweep(a) => {
            let cfg = SweepConfig {
                c1: a.c1,
                c2: a.c2,
                q: a.q,
                mu: if a.axis == Axis::Mu { vec![] } else { a.mu },
                axis: a.axis,
                range: a.range,
                methods: a.methods,
                policy: policy(a.output.eps_trunc),
            };
            sweep_to(&cfg, &a.output)?;
        }
        Command::Fig2(a) => run_preset("fig2", &a)?,
        Command::Fig3(a) => run_preset("fig3", &a)?,
        Command::Fig4(a) => run_preset("fig4", &a)?,
        Command::Fig5(a) => run_preset("fig5", &a)?,
        Command::Manifest { out } => {
            let mut w = open(&out)?;
            serde_json::to_writer_pretty(&mut w, &manifest())?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_preset(name: &str, args: &OutputArgs) -> Result<(), CliError> {
    let mut p = preset(name).expect("known preset");
    p.config.policy = policy(args.eps_trunc);
    sweep_to(&p.config, args)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
