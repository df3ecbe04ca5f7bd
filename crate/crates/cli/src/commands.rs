use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use mimo_switch::model::sample_channel;
use mimo_switch::sim::{self, build_table, channel_seed, scheme_seed, solve_scheme, SchemeOutcome, TableRow};
use mimo_switch::verify::{self, VerifyPlan};
use mimo_switch::{Error, NoiseParams, Scheme, SimConfig, SimResult, SwitchSpec, TableKind};
use serde::Serialize;

use crate::args::{Cli, Command, Common, Format, SweepArgs, VerifyArgs};
use crate::config::resolve;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files or output locations.
    Config(String),
    /// A solver or property suite failed.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::MissingScheme(_)
            | Error::PairingRequired
            | Error::TwoStationsRequired(_)
            | Error::Dimension(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{}: {e}", path.display()))
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<File, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    File::create(&path).map_err(io_err(&path))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Table1(args) => cmd_table(TableKind::TwoStation, &args),
        Command::Table2(args) => cmd_table(TableKind::FourStation, &args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Single(args) => cmd_single(&args),
        Command::Verify(args) => cmd_verify(&args),
    }
}

fn sweep(cfg: &SimConfig) -> Result<SimResult, CliError> {
    sim::check_schemes(cfg)?;
    let result = sim::run_sweep(cfg)?;
    for p in &result.points {
        if p.failed > 0 {
            log::warn!("{} at {} dB: {} of {} channels failed", p.scheme, p.snr_db, p.failed, p.failed + p.channels);
        }
        if p.channels == 0 {
            return Err(CliError::Numerical(format!("{} failed on every channel at {} dB", p.scheme, p.snr_db)));
        }
    }
    Ok(result)
}

#[derive(Serialize)]
struct TableReport<'a> {
    table: TableKind,
    config_hash: &'a str,
    master_seed: u64,
    rows: &'a [TableRow],
    result: &'a SimResult,
}

fn cmd_table(kind: TableKind, args: &Common) -> Result<(), CliError> {
    if args.schemes.is_some() || args.stations.is_some() {
        return Err(CliError::Config("tables use a fixed station count and scheme set".into()));
    }
    set_threads(args.threads)?;
    let cfg = resolve(kind.config(1), args)?;
    let result = sweep(&cfg)?;
    let rows = build_table(&result, kind)?;
    let stem = match kind {
        TableKind::TwoStation => "table1",
        TableKind::FourStation => "table2",
    };
    match args.format {
        Format::Csv => {
            sim::write_table_csv(&rows, create(&args.out, &format!("{stem}.csv"))?)?;
            result.write_csv(create(&args.out, &format!("{stem}_points.csv"))?)?;
        }
        Format::Json => {}
    }
    let report = TableReport {
        table: kind,
        config_hash: &result.config_hash,
        master_seed: result.master_seed,
        rows: &rows,
        result: &result,
    };
    serde_json::to_writer_pretty(create(&args.out, &format!("{stem}.json"))?, &report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    print_table(kind, &rows, &result);
    Ok(())
}

fn print_table(kind: TableKind, rows: &[TableRow], result: &SimResult) {
    let reference = match kind {
        TableKind::TwoStation => "exhaustive",
        TableKind::FourStation => "sdr-upper",
    };
    println!(
        "{:>6} {:>10} {:>10} {:>7} {:>10} {:>7} {:>10} {:>10} {:>7}",
        "snr", "opposite", reference, "d%", "sdr", "d%", "pnc-align", "pnc-sdr", "d%"
    );
    for r in rows {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>7.2} {:>10.4} {:>7.2} {:>10.4} {:>10.4} {:>7.2}",
            r.snr_db,
            r.opposite_phase,
            r.maxmin_reference,
            r.maxmin_reference_delta_pct,
            r.maxmin_sdr,
            r.maxmin_sdr_delta_pct,
            r.pnc_phase_aligned,
            r.pnc_sdr,
            r.pnc_sdr_delta_pct
        );
    }
    let worst = result.points.iter().map(|p| p.stderr).fold(0.0, f64::max);
    println!("seed {} config {} max stderr {worst:.4}", result.master_seed, &result.config_hash[..12]);
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let common = &args.common;
    set_threads(common.threads)?;
    let cfg = resolve(SimConfig::default(), common)?;
    let result = sweep(&cfg)?;
    if common.format == Format::Csv {
        result.write_csv(create(&common.out, "sweep.csv")?)?;
    }
    result.write_json(create(&common.out, "sweep.json")?)?;
    if args.gnuplot {
        write_gnuplot(&result, create(&common.out, "sweep.dat")?).map_err(io_err(&common.out))?;
    }
    for p in &result.points {
        println!("{:<20} {:>6} {:>9.4} ± {:.4}", p.scheme.name(), p.snr_db, p.mean_tput, p.stderr);
    }
    Ok(())
}

fn write_gnuplot(result: &SimResult, mut out: impl Write) -> std::io::Result<()> {
    let schemes = &result.config.schemes;
    write!(out, "# config {} seed {}\n# snr_db", result.config_hash, result.master_seed)?;
    for s in schemes {
        write!(out, " {s}")?;
    }
    writeln!(out)?;
    for &snr in &result.config.snr_points_db {
        write!(out, "{snr}")?;
        for &s in schemes {
            let v = result.point(s, snr).map_or(f64::NAN, |p| p.mean_tput);
            write!(out, " {v:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SingleRow {
    scheme: Scheme,
    snr_db: f64,
    worst_tput: f64,
    epsilon: Vec<f64>,
    power: Option<f64>,
}

fn cmd_single(args: &Common) -> Result<(), CliError> {
    set_threads(args.threads)?;
    let cfg = resolve(SimConfig::default(), args)?;
    sim::check_schemes(&cfg)?;
    let ch = sample_channel(cfg.n, channel_seed(cfg.master_seed, 0))?;
    let sw = SwitchSpec::from_pattern(cfg.pattern, cfg.n, false)?;
    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_points_db.iter().enumerate() {
        let np = NoiseParams::from_snr_db(snr);
        for &scheme in &cfg.schemes {
            let seed = scheme_seed(cfg.master_seed, scheme, si, 0);
            let row = match solve_scheme(scheme, &ch, &sw, &np, &cfg, seed)? {
                SchemeOutcome::Design(out) => SingleRow {
                    scheme,
                    snr_db: snr,
                    worst_tput: out.worst_throughput(),
                    epsilon: out.epsilon.clone(),
                    power: Some(out.power_used),
                },
                SchemeOutcome::Bound(t) => SingleRow {
                    scheme,
                    snr_db: snr,
                    worst_tput: t,
                    epsilon: vec![],
                    power: None,
                },
            };
            rows.push(row);
        }
    }
    match args.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                config_hash: String,
                master_seed: u64,
                rows: &'a [SingleRow],
            }
            let report = Report {
                config_hash: cfg.hash(),
                master_seed: cfg.master_seed,
                rows: &rows,
            };
            serde_json::to_writer_pretty(create(&args.out, "single.json")?, &report)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Format::Csv => {
            let path = args.out.join("single.csv");
            let mut f = create(&args.out, "single.csv")?;
            writeln!(f, "scheme,snr_db,worst_tput,epsilon,power").map_err(io_err(&path))?;
            for r in &rows {
                let eps: Vec<String> = r.epsilon.iter().map(|e| format!("{e:.9e}")).collect();
                let power = r.power.map(|p| format!("{p:.9}")).unwrap_or_default();
                writeln!(f, "{},{},{:.6},{},{}", r.scheme, r.snr_db, r.worst_tput, eps.join(";"), power)
                    .map_err(io_err(&path))?;
            }
        }
    }
    for r in &rows {
        println!("{:<20} {:>6} {:>9.4}", r.scheme.name(), r.snr_db, r.worst_tput);
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    set_threads(args.threads)?;
    let plan = VerifyPlan {
        seed: args.seed,
        instances: args.instances.max(1),
        inject_fault: args.inject_fault,
        ..VerifyPlan::default()
    };
    let reports = verify::run_all(&plan);
    let mut failed = Vec::new();
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<36} cases {:>5} worst {:.3e}", r.name, r.cases, r.worst);
        if let Some(detail) = &r.first_failure {
            println!("     first failure: {detail}");
        }
        if !r.passed() {
            failed.push(r.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed suites: {}", failed.join(", "))))
    }
}
