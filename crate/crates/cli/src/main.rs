//! Command-line front end: exponent curve CSVs, minimum-deadline reports,
//! ARQ simulation runs, and the very-noisy-model identity checker.
//!
//! Every command is deterministic: identical invocations produce
//! byte-identical output. Parallelism is internal; the worker count can be
//! pinned with the `ARQEXP_WORKERS` environment variable (no flag).
//!
//! Exit codes: 0 success, 2 for configuration/usage errors (bad flags, bad
//! channel spec, out-of-range grid), 1 for runtime failures.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use arq_exponents::deadline::{l_req_report, lemma1_bound, BoundOptions};
use arq_exponents::simulator::{
    estimate_exponent, run, run_paired, ArqConfig, ExponentEstimate, Scheme, SimulationReport,
};
use arq_exponents::{
    analytic_models, capacity, compute_curve, ir_bound, md_bounds, optimal_threshold,
    random_coding_exponent, rate_grid, Channel, Curve, Dmc, Error, ExponentKind,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(
    name = "arqexp",
    about = "Error exponents and Monte Carlo simulation for deadline-constrained ARQ",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate exponent curves over a rate grid and emit CSV.
    Curve(CurveArgs),
    /// Minimum deadline for the retransmission bound to cover the feedback
    /// exponent, plus the binary-channel closed-form bound.
    Lreq(LreqArgs),
    /// Run the ARQ Monte Carlo simulator on a binary symmetric channel.
    Simulate(SimulateArgs),
    /// Verify the closed-form identities of the very noisy channel model.
    VncCheck(VncCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Bits,
    Nats,
}

#[derive(Args)]
struct CurveArgs {
    /// Channel spec: bsc:<eps>, awgn:<dB>dB, awgn:<linear>, vnc:<C-nats>,
    /// dmc:<path>.
    #[arg(long)]
    channel: String,
    /// Comma-separated subset of
    /// e_r,e_sp,e_ex,e_f,md_lower,md_upper,ir_lower,ml (default: all).
    #[arg(long, value_delimiter = ',')]
    exponents: Vec<String>,
    /// Deadline in rounds for the deadline-dependent families.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    l: u32,
    /// Grid size (inclusive endpoints).
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(usize))]
    points: usize,
    /// Grid start in the chosen units (default 0).
    #[arg(long)]
    start: Option<f64>,
    /// Grid stop in the chosen units (default: capacity).
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long, value_enum, default_value_t = Units::Bits)]
    units: Units,
    /// Base the retransmission bounds on the random-coding exponent alone.
    #[arg(long)]
    no_expurgated: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LreqArgs {
    #[arg(long)]
    channel: String,
    #[arg(long)]
    no_expurgated: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Md,
    Ir,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Crossover probability of the binary symmetric channel.
    #[arg(long)]
    bsc: f64,
    /// Symbols per round.
    #[arg(long)]
    n: u32,
    /// Number of messages.
    #[arg(long)]
    m: u32,
    /// Erasure threshold in nats per symbol.
    #[arg(long)]
    t: f64,
    /// Deadline in rounds.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    l: u32,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also run the other scheme on the same trial streams and compare.
    #[arg(long)]
    paired: bool,
    /// CSV output file for the report(s).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VncCheckArgs {
    /// Capacity of the model in nats.
    #[arg(long, default_value_t = 1.0)]
    capacity: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("ARQEXP_WORKERS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore failure: a pool may already exist in test harnesses.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: ARQEXP_WORKERS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let result = match cli.command {
        Command::Curve(args) => cmd_curve(args),
        Command::Lreq(args) => cmd_lreq(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::VncCheck(args) => cmd_vnc_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// CLI failure: usage problems exit 2, runtime problems exit 1.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidChannel(_)
            | Error::InvalidDistribution(_)
            | Error::Domain(_)
            | Error::Config { .. } => CliError::Usage(e.to_string()),
            Error::ThresholdFixedPoint { .. } | Error::DeadlineNotFound { .. } | Error::Io(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

type CliResult = Result<(), CliError>;

/// Parse the channel mini-grammar.
fn parse_channel(spec: &str) -> Result<Channel, CliError> {
    let usage = |m: String| CliError::Usage(m);
    let (kind, rest) = spec.split_once(':').ok_or_else(|| {
        usage(format!(
            "channel spec {spec:?} must look like bsc:<eps>, awgn:<dB>dB, awgn:<linear>, \
             vnc:<C-nats>, or dmc:<path>"
        ))
    })?;
    let num = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|e| usage(format!("bad number {s:?} in channel spec {spec:?}: {e}")))
    };
    match kind {
        "bsc" => Ok(Channel::bsc(num(rest)?)?),
        "awgn" => {
            if let Some(db) = rest.strip_suffix("dB").or_else(|| rest.strip_suffix("db")) {
                Ok(Channel::Awgn(arq_exponents::AwgnParams::from_db(num(db)?)?))
            } else {
                Ok(Channel::awgn(num(rest)?)?)
            }
        }
        "vnc" => Ok(Channel::vnc(num(rest)?)?),
        "dmc" => Ok(Channel::Dmc(Dmc::from_csv_path(std::path::Path::new(rest))?)),
        other => Err(usage(format!("unknown channel kind {other:?} in {spec:?}"))),
    }
}

/// 12 significant digits, deterministic, never NaN by construction upstream.
fn sig12(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.11e}")
}

fn write_output(path: Option<&PathBuf>, content: &str) -> CliResult {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

// --------------------------------------------------------------------------
// curve
// --------------------------------------------------------------------------

fn cmd_curve(args: CurveArgs) -> CliResult {
    let channel = parse_channel(&args.channel)?;
    let kinds: Vec<ExponentKind> = if args.exponents.is_empty() {
        ExponentKind::ALL.to_vec()
    } else {
        args.exponents
            .iter()
            .map(|s| {
                ExponentKind::parse(s.trim()).ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown exponent {s:?}; choose from e_r,e_sp,e_ex,e_f,md_lower,md_upper,\
                         ir_lower,ml"
                    ))
                })
            })
            .collect::<Result<_, _>>()?
    };
    if args.points < 2 {
        return Err(CliError::Usage(format!(
            "grid needs at least 2 points, got {}",
            args.points
        )));
    }
    let to_nats = match args.units {
        Units::Bits => LN_2,
        Units::Nats => 1.0,
    };
    let c_nats = capacity(&channel);
    let c_units = c_nats / to_nats;
    let start = args.start.unwrap_or(0.0);
    let stop = args.stop.unwrap_or(c_units);
    if !(start >= 0.0) || !(stop >= start) {
        return Err(CliError::Usage(format!(
            "grid [{start}, {stop}] must satisfy 0 <= start <= stop"
        )));
    }
    if stop > c_units * (1.0 + 1e-12) + 1e-12 {
        return Err(CliError::Usage(format!(
            "grid stop {stop} exceeds capacity {c_units} (chosen units)"
        )));
    }
    let rates_nats: Vec<f64> = rate_grid(stop - start, args.points)
        .iter()
        .map(|d| ((start + d) * to_nats).min(c_nats))
        .collect();
    let opts = BoundOptions {
        expurgated_base: !args.no_expurgated,
    };
    let curve = compute_curve(&channel, &kinds, args.l, opts, &rates_nats)?;
    write_output(args.out.as_ref(), &render_curve_csv(&curve, args.units))?;
    Ok(())
}

fn render_curve_csv(curve: &Curve, units: Units) -> String {
    let unit_name = match units {
        Units::Bits => "bits",
        Units::Nats => "nats",
    };
    let from_nats = match units {
        Units::Bits => 1.0 / LN_2,
        Units::Nats => 1.0,
    };
    let mut out = String::new();
    out.push_str("rate_nats,rate_bits");
    for k in &curve.kinds {
        out.push(',');
        out.push_str(&format!("{}_{unit_name}", k.label()));
    }
    for k in &curve.kinds {
        out.push(',');
        out.push_str(&format!("{}_flags", k.label()));
    }
    out.push('\n');
    for p in &curve.points {
        out.push_str(&sig12(p.rate_nats));
        out.push(',');
        out.push_str(&sig12(p.rate_nats / LN_2));
        for v in &p.values {
            out.push(',');
            out.push_str(&sig12(v * from_nats));
        }
        for (f, note) in p.flags.iter().zip(&p.annotations) {
            out.push(',');
            let rendered = f.render();
            match (rendered.is_empty(), note.is_empty()) {
                (true, true) => {}
                (false, true) => out.push_str(&rendered),
                (true, false) => out.push_str(note),
                (false, false) => out.push_str(&format!("{rendered}|{note}")),
            }
        }
        out.push('\n');
    }
    out
}

// --------------------------------------------------------------------------
// lreq
// --------------------------------------------------------------------------

fn cmd_lreq(args: LreqArgs) -> CliResult {
    let channel = parse_channel(&args.channel)?;
    let opts = BoundOptions {
        expurgated_base: !args.no_expurgated,
    };
    let report = l_req_report(&channel, opts)?;
    println!("minimum deadline: L_req = {}", report.l);
    println!(
        "worst margin at L_req: {} nats at rate {} nats ({} bits)",
        sig12(report.worst_margin),
        sig12(report.at_rate),
        sig12(report.at_rate / LN_2),
    );
    if let Channel::Bsc(p) = &channel {
        if p.epsilon > 0.0 {
            let lemma = lemma1_bound(p.epsilon)?;
            println!(
                "closed-form deadline bound: ceil(E_F(0)/E_r(0)) = {} (ratio {}{})",
                lemma.l,
                sig12(lemma.ratio),
                if lemma.loose { ", loose at small crossover" } else { "" },
            );
        }
    }
    Ok(())
}

// --------------------------------------------------------------------------
// simulate
// --------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let config = ArqConfig {
        scheme: match args.scheme {
            SchemeArg::Md => Scheme::Memoryless,
            SchemeArg::Ir => Scheme::Incremental,
        },
        epsilon: args.bsc,
        n: args.n,
        num_messages: args.m,
        threshold: args.t,
        deadline: args.l,
        trials: args.trials,
        seed: args.seed,
    };
    config.validate()?;
    if args.paired {
        let (md, ir, cmp) = run_paired(&config)?;
        print_report("memoryless", &md);
        print_report("incremental", &ir);
        println!("paired comparison:");
        println!("  errors: memoryless {}, incremental {}", cmp.md_errors, cmp.ir_errors);
        println!(
            "  discordant trials: incremental-only {}, memoryless-only {}",
            cmp.ir_only_errors, cmp.md_only_errors
        );
        println!(
            "  incremental not worse at 95%: {}",
            if cmp.ir_not_worse_95() { "yes" } else { "no" }
        );
        let mut csv = String::from("scheme,metric,round,value\n");
        report_csv_rows(&mut csv, "memoryless", &md);
        report_csv_rows(&mut csv, "incremental", &ir);
        csv.push_str(&format!("paired,ir_only_errors,,{}\n", cmp.ir_only_errors));
        csv.push_str(&format!("paired,md_only_errors,,{}\n", cmp.md_only_errors));
        if let Some(out) = args.out.as_ref() {
            std::fs::write(out, csv)?;
        }
    } else {
        let report = run(&config)?;
        let name = match config.scheme {
            Scheme::Memoryless => "memoryless",
            Scheme::Incremental => "incremental",
        };
        print_report(name, &report);
        let mut csv = String::from("scheme,metric,round,value\n");
        report_csv_rows(&mut csv, name, &report);
        if let Some(out) = args.out.as_ref() {
            std::fs::write(out, csv)?;
        }
    }
    Ok(())
}

fn print_report(name: &str, r: &SimulationReport) {
    println!("{name} scheme: {} trials, seed {}", r.trials, r.config.seed);
    println!(
        "  channel eps = {}, N = {}, M = {}, T = {} nats/symbol, L = {}",
        r.config.epsilon, r.config.n, r.config.num_messages, r.config.threshold, r.config.deadline
    );
    println!("  decided per round:  {:?}", r.decided_per_round);
    println!("  erasures per round: {:?}", r.erasures_per_round);
    println!("  errors per round:   {:?}", r.errors_per_round);
    println!(
        "  accepted correct: {} ({} tie erasures along the way)",
        r.accepted_correct, r.ties_erased
    );
    println!(
        "  avg delay {} symbols, throughput {} nats/symbol",
        sig12(r.avg_delay),
        sig12(r.throughput)
    );
    println!(
        "  error prob {} (95% CI [{}, {}])",
        sig12(r.error_prob),
        sig12(r.error_ci.0),
        sig12(r.error_ci.1)
    );
    match estimate_exponent(r) {
        ExponentEstimate::Estimate { value, ci_low, ci_high, events } => println!(
            "  empirical exponent {} nats/symbol (95% CI [{}, {}], {} events)",
            sig12(value),
            sig12(ci_low),
            sig12(ci_high),
            events
        ),
        ExponentEstimate::InsufficientEvents { events, required } => println!(
            "  empirical exponent: insufficient error events ({events} < {required})"
        ),
    }
}

fn report_csv_rows(csv: &mut String, name: &str, r: &SimulationReport) {
    for (i, v) in r.decided_per_round.iter().enumerate() {
        csv.push_str(&format!("{name},decided,{},{v}\n", i + 1));
    }
    for (i, v) in r.erasures_per_round.iter().enumerate() {
        csv.push_str(&format!("{name},erasures,{},{v}\n", i + 1));
    }
    for (i, v) in r.errors_per_round.iter().enumerate() {
        csv.push_str(&format!("{name},errors,{},{v}\n", i + 1));
    }
    csv.push_str(&format!("{name},accepted_correct,,{}\n", r.accepted_correct));
    csv.push_str(&format!("{name},ties_erased,,{}\n", r.ties_erased));
    csv.push_str(&format!("{name},trials,,{}\n", r.trials));
    csv.push_str(&format!("{name},avg_delay_symbols,,{}\n", sig12(r.avg_delay)));
    csv.push_str(&format!("{name},throughput_nats,,{}\n", sig12(r.throughput)));
    csv.push_str(&format!("{name},error_prob,,{}\n", sig12(r.error_prob)));
    csv.push_str(&format!("{name},error_ci_low,,{}\n", sig12(r.error_ci.0)));
    csv.push_str(&format!("{name},error_ci_high,,{}\n", sig12(r.error_ci.1)));
    match r.empirical_exponent {
        Some(e) => csv.push_str(&format!("{name},empirical_exponent,,{}\n", sig12(e))),
        None => csv.push_str(&format!("{name},empirical_exponent,,\n")),
    }
}

// --------------------------------------------------------------------------
// vnc-check
// --------------------------------------------------------------------------

fn cmd_vnc_check(args: VncCheckArgs) -> CliResult {
    let c = args.capacity;
    let channel = Channel::vnc(c)?;
    let opts = BoundOptions::default();
    let grid = rate_grid(c, 65);
    let mut failures = 0u32;
    let mut check = |name: &str, worst: f64, tol: f64| {
        let ok = worst <= tol;
        println!(
            "{} {name}: worst deviation {} (tolerance {})",
            if ok { "PASS" } else { "FAIL" },
            sig12(worst),
            sig12(tol)
        );
        if !ok {
            failures += 1;
        }
    };

    // Zero-rate random coding value and the generic dispatch agreeing on it.
    let er0 = analytic_models::vnc_er(0.0, c)?;
    let dispatch = random_coding_exponent(&channel, 0.0)?.value;
    check(
        "random-coding zero rate = C/2",
        (er0 - c / 2.0).abs().max((dispatch - er0).abs()),
        1e-12,
    );

    // Branch continuity of the random-coding form at C/4.
    let low = c / 2.0 - c / 4.0;
    let high = (c.sqrt() - (c / 4.0).sqrt()).powi(2);
    check("random-coding branch continuity at C/4", (low - high).abs(), 1e-12);

    // Feedback exponent splits as (C - R) + sphere packing at every rate.
    let mut worst = 0.0f64;
    for &r in &grid {
        let ef = analytic_models::vnc_ef(r, c)?;
        let esp = if r > 0.0 { analytic_models::vnc_esp(r, c)? } else { c };
        worst = worst.max((ef - ((c - r) + esp)).abs());
    }
    check("feedback = (C - R) + sphere packing", worst, 1e-12);

    // Expurgated equals random coding below C/4.
    let mut worst = 0.0f64;
    for &r in grid.iter().filter(|&&r| r <= c / 4.0) {
        worst = worst.max((analytic_models::vnc_eex(r, c)? - analytic_models::vnc_er(r, c)?).abs());
    }
    check("expurgated = random coding on [0, C/4]", worst, 1e-15);

    // The L = 4 retransmission arm is 2C - R and never binds.
    let mut worst = 0.0f64;
    for &r in &grid {
        let ir = ir_bound(&channel, r, 4, opts)?;
        let ef = analytic_models::vnc_ef(r, c)?;
        worst = worst
            .max((ir.value - ef).abs())
            .max((ir.coding_arm - (2.0 * c - r)).abs());
    }
    check("L=4 retransmission bound collapses to feedback", worst, 1e-12);

    // L = 2 zero-rate bound equals C exactly.
    let ir2 = ir_bound(&channel, 0.0, 2, opts)?;
    check("L=2 zero-rate bound = C", (ir2.value - c).abs(), 1e-12);

    // The numeric deadline machinery agrees with its own fixed point and
    // stays below the retransmission bound.
    let mut worst = 0.0f64;
    for &r in grid.iter().filter(|&&r| r > 0.0 && r < 0.9 * c) {
        let b = md_bounds(&channel, r, 2, opts)?;
        worst = worst.max((b.e1_at_tstar - b.e1_max).abs());
        let ir = ir_bound(&channel, r, 2, opts)?;
        if b.lower > ir.value + 1e-9 {
            worst = worst.max(b.lower - ir.value);
        }
    }
    let _ = optimal_threshold(&channel, 0.12 * c, 2)?;
    check("deadline fixed point and ordering (L=2)", worst, 1e-6);

    if failures > 0 {
        return Err(CliError::Runtime(format!(
            "{failures} very-noisy-model identity group(s) failed"
        )));
    }
    Ok(())
}
