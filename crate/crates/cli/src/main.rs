//! `mscc`: simulate coded-caching delivery over multi-server networks.
//!
//! Three subcommands: `run` simulates one (scheme, K, L, N, M) point for a
//! set of demand vectors, `sweep` simulates every memory corner of a
//! scheme, and `verify-paper` checks the linear scheme against the
//! built-in reference delay table. Scenario parameters come from flags or
//! a flat `key = value` config file, flags winning. Exit codes: 0 success,
//! 2 command-line usage, 3 rejected parameters, 4 symbol field exhausted.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mscc_core::harness::{
    emit_report, run_scenario, sweep_memory, verify_examples, DemandSpec, HarnessError,
    RunRecord, ScenarioSpec, SchemeKind, SweepSpec,
};
use mscc_core::Rational;
use num_rational::BigRational;

#[derive(Parser)]
#[command(
    name = "mscc",
    version,
    about = "Coded-caching delivery simulator for multi-server networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario point end to end and report delay and decoding.
    Run(RunArgs),
    /// Simulate every memory corner of a scheme and report all of them.
    Sweep(SweepArgs),
    /// Check the linear scheme against the built-in reference delay table.
    VerifyPaper(VerifyArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Delivery scheme: single, dedicated, flexible or linear.
    #[arg(long)]
    scheme: Option<String>,
    /// Number of users K.
    #[arg(long = "K")]
    users: Option<usize>,
    /// Number of servers L (defaults to 1 for the single scheme).
    #[arg(long = "L")]
    servers: Option<usize>,
    /// Number of files N, at least K (defaults to K).
    #[arg(long = "N")]
    files: Option<usize>,
    /// Per-user cache size M in files; rationals like 5/3 stay exact.
    #[arg(long = "M")]
    memory: Option<String>,
    /// Symbol width in bits; arithmetic runs over GF(2^m). Default 16.
    #[arg(long = "m")]
    symbol_bits: Option<u32>,
    /// File size F in bits, a multiple of the scheme's minimum at this
    /// point (defaults to the minimum itself).
    #[arg(long = "F")]
    file_bits: Option<u64>,
    /// Seed for all pseudorandom draws. Default 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Flexible slot-group sizes, e.g. 2,3 (defaults to the best profile
    /// whose memory corner matches M).
    #[arg(long)]
    profile: Option<String>,
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lift the size guardrails on K, F and demand sweeps.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Demand vectors: all-distinct, sweep, random:COUNT, or a comma list
    /// of 1-based file indices (one per user). Default all-distinct.
    #[arg(long)]
    demands: Option<String>,
    /// Write the CSV report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the CSV report here (it also prints to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for all pseudorandom draws. Default 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Symbol width in bits. Default 16.
    #[arg(long = "m")]
    symbol_bits: Option<u32>,
    /// Write the CSV report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its process exit code.
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn rejected(message: impl Into<String>) -> CliError {
        CliError { message: message.into(), code: 3 }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> CliError {
        CliError { message: e.to_string(), code: e.exit_code() as u8 }
    }
}

fn main() -> ExitCode {
    // Die quietly like other Unix filters when a downstream consumer
    // (e.g. `head`) closes stdout early, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::VerifyPaper(args) => cmd_verify(args),
    }
}

const CONFIG_KEYS: [&str; 11] =
    ["scheme", "K", "L", "N", "M", "m", "F", "seed", "demands", "profile", "force"];

/// Parse a flat config file: one `key = value` per line, `#` comments.
fn load_config(path: Option<&PathBuf>) -> Result<HashMap<String, String>, CliError> {
    let Some(path) = path else {
        return Ok(HashMap::new());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::rejected(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::rejected(format!(
                "{} line {}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(CliError::rejected(format!(
                "{} line {}: unknown key `{key}` (expected one of {})",
                path.display(),
                lineno + 1,
                CONFIG_KEYS.join(", ")
            )));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_from<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::rejected(format!("invalid {what} `{value}`: {e}")))
}

/// A flag value, else the config entry, else `None`.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    config: &HashMap<String, String>,
    key: &str,
    what: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get(key).map(|v| parse_from(v, what)).transpose(),
    }
}

/// Exact rational from `p/q` or an integer literal.
fn parse_rational(s: &str) -> Result<Rational, CliError> {
    let bad = || CliError::rejected(format!("invalid cache size `{s}`: use an integer or p/q"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: i128 = num.trim().parse().map_err(|_| bad())?;
            let den: i128 = den.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(CliError::rejected(format!("invalid cache size `{s}`: zero denominator")));
            }
            Ok(BigRational::new(num.into(), den.into()))
        }
        None => {
            let num: i128 = s.trim().parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(num.into()))
        }
    }
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| parse_from::<usize>(p.trim(), what))
        .collect()
}

/// `all-distinct`, `sweep`, `random:COUNT`, or a comma list of 1-based
/// file indices.
fn parse_demands(s: &str) -> Result<DemandSpec, CliError> {
    match s {
        "all-distinct" => Ok(DemandSpec::AllDistinct),
        "sweep" => Ok(DemandSpec::Sweep),
        _ if s.starts_with("random:") => {
            let count: usize = parse_from(&s["random:".len()..], "random demand count")?;
            Ok(DemandSpec::Random { count })
        }
        _ => {
            let one_based = parse_usize_list(s, "demand entry")?;
            if one_based.contains(&0) {
                return Err(CliError::rejected(
                    "demand lists use 1-based file indices; 0 is not a file",
                ));
            }
            Ok(DemandSpec::Explicit(vec![one_based.into_iter().map(|d| d - 1).collect()]))
        }
    }
}

/// Scenario parameters shared by `run` and `sweep`, after merging flags
/// over the config file.
struct Resolved {
    scheme: SchemeKind,
    users: usize,
    servers: usize,
    files: usize,
    memory: Option<Rational>,
    symbol_bits: u32,
    file_bits: Option<u64>,
    seed: u64,
    profile: Option<Vec<usize>>,
    demands: Option<String>,
    force: bool,
}

fn resolve_scenario(args: &ScenarioArgs, demands_flag: Option<&str>) -> Result<Resolved, CliError> {
    let config = load_config(args.config.as_ref())?;
    let scheme: SchemeKind = resolve(
        args.scheme.as_deref().map(str::to_string),
        &config,
        "scheme",
        "scheme",
    )?
    .ok_or_else(|| CliError::rejected("missing --scheme (single, dedicated, flexible or linear)"))?
    .parse()
    .map_err(CliError::rejected)?;
    let users = resolve(args.users, &config, "K", "user count")?
        .ok_or_else(|| CliError::rejected("missing --K (number of users)"))?;
    let servers = match resolve(args.servers, &config, "L", "server count")? {
        Some(l) => l,
        None if scheme == SchemeKind::Single => 1,
        None => return Err(CliError::rejected("missing --L (number of servers)")),
    };
    let files = resolve(args.files, &config, "N", "file count")?.unwrap_or(users);
    let memory = match (&args.memory, config.get("M")) {
        (Some(s), _) => Some(parse_rational(s)?),
        (None, Some(s)) => Some(parse_rational(s)?),
        (None, None) => None,
    };
    let symbol_bits = resolve(args.symbol_bits, &config, "m", "symbol width")?.unwrap_or(16);
    let file_bits = resolve(args.file_bits, &config, "F", "file size")?;
    let seed = resolve(args.seed, &config, "seed", "seed")?.unwrap_or(0);
    let profile = match (&args.profile, config.get("profile")) {
        (Some(s), _) => Some(parse_usize_list(s, "profile entry")?),
        (None, Some(s)) => Some(parse_usize_list(s, "profile entry")?),
        (None, None) => None,
    };
    let demands = match demands_flag {
        Some(s) => Some(s.to_string()),
        None => config.get("demands").cloned(),
    };
    let force = args.force || config.get("force").map(String::as_str) == Some("true");
    Ok(Resolved {
        scheme,
        users,
        servers,
        files,
        memory,
        symbol_bits,
        file_bits,
        seed,
        profile,
        demands,
        force,
    })
}

fn write_out(out: Option<&PathBuf>, csv: &str) -> Result<(), CliError> {
    if let Some(path) = out {
        fs::write(path, csv)
            .map_err(|e| CliError::rejected(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn print_record(r: &RunRecord) {
    let profile = match &r.profile {
        Some(p) => format!(
            " profile={}",
            p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        ),
        None => String::new(),
    };
    println!(
        "point: scheme={} K={} L={} N={} M={} F={} m={} seed={}{profile}",
        r.scheme, r.users, r.servers, r.files, r.cache_files, r.file_bits, r.symbol_bits, r.seed
    );
    let gap = match &r.gap {
        Some(g) => g.to_string(),
        None => "n/a".to_string(),
    };
    println!(
        "delay: measured={} slots ({} files), formula={}, bound={}, gap={}",
        r.measured_slots,
        r.measured_delay(),
        r.formula_delay,
        r.lower_bound,
        gap
    );
    let verdict = if r.decode_ok {
        "ok".to_string()
    } else {
        format!(
            "FAILED ({} of {} decodes: {})",
            r.decode_failures,
            r.demand_vectors * r.users,
            r.first_failure.as_deref().unwrap_or("no detail")
        )
    };
    println!(
        "decode: {verdict} over {} demand vector(s); retries transfer={} precoder={} coefficients={}",
        r.demand_vectors,
        r.stats.transfer_resamples,
        r.stats.precoder_redraws,
        r.stats.coefficient_rerolls
    );
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, CliError> {
    let resolved = resolve_scenario(&args.scenario, args.demands.as_deref())?;
    let memory = resolved
        .memory
        .clone()
        .ok_or_else(|| CliError::rejected("missing --M (cache size in files)"))?;
    let demands = match &resolved.demands {
        Some(s) => parse_demands(s)?,
        None => DemandSpec::AllDistinct,
    };
    let record = run_scenario(&ScenarioSpec {
        scheme: resolved.scheme,
        users: resolved.users,
        servers: resolved.servers,
        files: resolved.files,
        cache_files: memory,
        file_bits: resolved.file_bits,
        symbol_bits: resolved.symbol_bits,
        seed: resolved.seed,
        profile: resolved.profile.clone(),
        demands,
        force: resolved.force,
    })?;
    print_record(&record);
    write_out(args.out.as_ref(), &emit_report(std::slice::from_ref(&record)))?;
    if record.decode_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError { message: "decoding failed; see report".into(), code: 1 })
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, CliError> {
    let resolved = resolve_scenario(&args.scenario, None)?;
    let records = sweep_memory(&SweepSpec {
        scheme: resolved.scheme,
        users: resolved.users,
        servers: resolved.servers,
        files: resolved.files,
        file_bits: resolved.file_bits,
        symbol_bits: resolved.symbol_bits,
        seed: resolved.seed,
        force: resolved.force,
    })?;
    let csv = emit_report(&records);
    print!("{csv}");
    write_out(args.out.as_ref(), &csv)?;
    if records.iter().all(|r| r.decode_ok) {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError { message: "decoding failed at some corner; see report".into(), code: 1 })
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let seed = args.seed.unwrap_or(0);
    let symbol_bits = args.symbol_bits.unwrap_or(16);
    let rows = verify_examples(seed, symbol_bits)?;
    let mut passed = 0;
    for row in &rows {
        let verdict = if row.pass { "PASS" } else { "FAIL" };
        println!(
            "L={} M={}: expected {}, formula {}, measured {}, decode {} -> {verdict}",
            row.servers,
            row.cache_files,
            row.expected_delay,
            row.record.formula_delay,
            row.record.measured_delay(),
            if row.record.decode_ok { "ok" } else { "failed" },
        );
        if row.pass {
            passed += 1;
        }
    }
    println!("reference table: {passed}/{} rows match", rows.len());
    let records: Vec<RunRecord> = rows.iter().map(|r| r.record.clone()).collect();
    write_out(args.out.as_ref(), &emit_report(&records))?;
    if passed == rows.len() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError { message: "reference table mismatch".into(), code: 1 })
    }
}
