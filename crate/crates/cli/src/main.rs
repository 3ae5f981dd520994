//! `kacrice`: expected numbers of positive solutions of parametrized
//! polynomial systems.
//!
//! Exit codes: 0 success or convergence, 1 input error, 2 the estimate
//! never reached the plausible range, 3 sample cap reached (or search
//! exhausted without finding a maximal box).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kacrice::crn::{parse_network, reduced_system_with, CrnError};
use kacrice::mc::{run_integration, Estimate, IntegrandSpec, RunOptions, Status, StoppingRule};
use kacrice::oracle::{direct_expectation, reduce_to_univariate, DirectOptions, MAX_REJECTION_RATE};
use kacrice::polysys::{decompose, Interval, ParametrizedSystem, SystemError};
use kacrice::regions::{
    bisect_partition, export_csv, export_ppm, format_trace, grid_partition, search_max, ClassMode, ParamBox,
    PrecisionSpec, RegionConfig, SearchMode,
};

#[derive(Parser)]
#[command(name = "kacrice", version, about = "Monte Carlo Kac-Rice estimates of expected positive solution counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the expected number of solutions over the parameter box.
    Integrate(IntegrateArgs),
    /// Partition a parameter box by expected solution count.
    Partition(PartitionArgs),
    /// Search for a sub-box where the expected count is maximal.
    Search(SearchArgs),
    /// Compare the estimate with direct root counting over sampled parameters.
    Oracle(OracleArgs),
    /// Reaction network tools.
    Crn {
        #[command(subcommand)]
        command: CrnCommand,
    },
}

#[derive(Subcommand)]
enum CrnCommand {
    /// Write the steady-state system with conservation laws in system-file format.
    Reduce(ReduceArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Target relative standard error.
    #[arg(long, default_value_t = 1e-2)]
    rel_err: f64,
    /// Lower end of the plausible range for the estimate.
    #[arg(long, default_value_t = 0.0)]
    min_plausible: f64,
    /// Upper end of the plausible range for the estimate.
    #[arg(long, default_value_t = f64::INFINITY)]
    max_plausible: f64,
    /// Fewest integrand evaluations before convergence may be declared.
    #[arg(long, default_value_t = 1_000)]
    min_n: u64,
    /// Cap on integrand evaluations.
    #[arg(long, default_value_t = 1_000_000_000_000)]
    max_n: u64,
    /// Samples per block.
    #[arg(long, default_value_t = 100_000)]
    chunk: u64,
    /// Pair each sample with its reflection through the box center.
    #[arg(long)]
    antithetic: bool,
    /// Worker threads.
    #[arg(long, env = "KACRICE_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter box as comma-separated `lo,hi` pairs; defaults to the file's box.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    param_box: Option<Vec<f64>>,
}

#[derive(Args)]
struct IntegrateArgs {
    input: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    General,
    Crn,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum OutFormat {
    Csv,
    Ppm,
}

#[derive(Args)]
struct RegionArgs {
    /// Smallest side lengths, one per parameter.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Maximal bisections per parameter (alternative to --delta).
    #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
    depth: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1.0)]
    mmin: f64,
    #[arg(long)]
    mmax: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::General)]
    mode: ModeArg,
    /// Classification tolerance.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Cap on integrand evaluations per box.
    #[arg(long, default_value_t = 1_000_000_000)]
    box_max_n: u64,
}

#[derive(Args)]
struct PartitionArgs {
    input: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    region: RegionArgs,
    /// Equal grid with this many cells per parameter instead of bisection.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    /// Output file; CSV goes to standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// The two parameters drawn as image axes (x then y).
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    axes: Vec<usize>,
}

#[derive(Args)]
struct SearchArgs {
    input: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    region: RegionArgs,
    /// Keep both halves whenever they exceed the floor.
    #[arg(long)]
    keep_both: bool,
}

#[derive(Args)]
struct OracleArgs {
    input: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Parameter samples for direct counting.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Count every root of the final polynomial without checking the
    /// eliminated variables against their domains.
    #[arg(long)]
    no_filter: bool,
}

#[derive(Args)]
struct ReduceArgs {
    input: PathBuf,
    /// Rows of the stoichiometric matrix to keep (1-based).
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<usize>>,
    /// Reactions whose rate constants are solved for (1-based).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<usize>>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure with a message and exit code.
struct Fail(u8, String);

impl Fail {
    fn input(msg: impl Into<String>) -> Self {
        Fail(1, msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Integrate(a) => cmd_integrate(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Search(a) => cmd_search(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Crn {
            command: CrnCommand::Reduce(a),
        } => cmd_crn_reduce(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn system_error(path: &Path, e: &SystemError) -> Fail {
    match (e.line(), e.column()) {
        (Some(l), Some(c)) => Fail::input(format!("{}:{l}:{c}: {e}", path.display())),
        (Some(l), None) => Fail::input(format!("{}:{l}: {e}", path.display())),
        _ => Fail::input(format!("{}: {e}", path.display())),
    }
}

fn crn_error(path: &Path, e: &CrnError) -> Fail {
    match e {
        CrnError::Malformed { line, column, message } => {
            Fail::input(format!("{}:{line}:{column}: {message}", path.display()))
        }
        _ => match e.line() {
            Some(l) => Fail::input(format!("{}:{l}: {e}", path.display())),
            None => Fail::input(format!("{}: {e}", path.display())),
        },
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Fail::input(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Fail::input(format!("stdout: {e}")))
        }
    }
}

/// Parsed system with the box override applied.
struct Loaded {
    sys: ParametrizedSystem,
    spec: IntegrandSpec,
}

fn load(path: &Path, run: &RunArgs) -> Result<Loaded, Fail> {
    let text = read(path)?;
    let mut sys = ParametrizedSystem::parse(&text).map_err(|e| system_error(path, &e))?;
    if let Some(b) = &run.param_box {
        if b.len() != 2 * sys.m() {
            return Err(Fail::input(format!(
                "--box needs {} numbers (lo,hi per parameter), got {}",
                2 * sys.m(),
                b.len()
            )));
        }
        sys.param_box = b.chunks(2).map(|p| Interval::new(p[0], p[1])).collect();
        sys.validate().map_err(|e| Fail::input(e.to_string()))?;
    }
    let dec = decompose(&sys).map_err(|e| Fail::input(format!("{}: {e}", path.display())))?;
    let spec = IntegrandSpec::new(&sys, &dec).map_err(|e| Fail::input(e.to_string()))?;
    Ok(Loaded { sys, spec })
}

fn rule_of(run: &RunArgs) -> StoppingRule {
    StoppingRule {
        rel_err: run.rel_err,
        plausible: (run.min_plausible, run.max_plausible),
        min_n: run.min_n,
        max_n: run.max_n,
        chunk: run.chunk,
        ..StoppingRule::default()
    }
}

fn options_of(run: &RunArgs) -> RunOptions {
    RunOptions {
        seed: run.seed,
        workers: run.workers,
        antithetic: run.antithetic,
        stream_key: 0,
    }
}

/// Comment header echoing the effective configuration.
fn header(command: &str, input: &Path, entries: &[(&str, String)]) -> String {
    let mut h = format!("# kacrice {command} {}\n# input: {}\n", env!("CARGO_PKG_VERSION"), input.display());
    for (k, v) in entries {
        let _ = writeln!(h, "# {k}: {v}");
    }
    h
}

fn run_entries(run: &RunArgs, sys: &ParametrizedSystem) -> Vec<(&'static str, String)> {
    let boxes: Vec<String> = sys.param_box.iter().map(|i| format!("[{},{}]", i.lo, i.hi)).collect();
    vec![
        ("seed", run.seed.to_string()),
        ("workers", run.workers.to_string()),
        ("rel-err", run.rel_err.to_string()),
        ("plausible", format!("[{},{}]", run.min_plausible, run.max_plausible)),
        ("min-n", run.min_n.to_string()),
        ("max-n", run.max_n.to_string()),
        ("chunk", run.chunk.to_string()),
        ("antithetic", run.antithetic.to_string()),
        ("box", boxes.join(" ")),
    ]
}

fn format_estimate(est: &Estimate) -> String {
    let mut s = format!(
        "estimate: {} ± {}\nn: {}\nstatus: {}\nsingular: {}\n",
        est.value, est.stderr, est.n, est.status, est.singular
    );
    for w in &est.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::RampFailed => 2,
        Status::CapReached => 3,
    }
}

fn cmd_integrate(a: IntegrateArgs) -> Result<u8, Fail> {
    let l = load(&a.input, &a.run)?;
    let est = run_integration(&l.spec, &rule_of(&a.run), &options_of(&a.run)).map_err(|e| Fail::input(e.to_string()))?;
    print!("{}", header("integrate", &a.input, &run_entries(&a.run, &l.sys)));
    print!("{}", format_estimate(&est));
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    Ok(exit_code(est.status))
}

fn region_setup(run: &RunArgs, region: &RegionArgs, sys: &ParametrizedSystem) -> Result<(ParamBox, RegionConfig), Fail> {
    let bx = ParamBox::new(sys.param_box.clone()).map_err(|e| Fail::input(e.to_string()))?;
    let mut cfg = RegionConfig::new(region.mmin, region.mmax);
    cfg.rule = rule_of(run);
    cfg.opts = options_of(run);
    cfg.mode = match region.mode {
        ModeArg::General => ClassMode::General,
        ModeArg::Crn => ClassMode::Crn,
    };
    cfg.tol = region.tol;
    cfg.box_max_n = region.box_max_n;
    Ok((bx, cfg))
}

fn precision_of(region: &RegionArgs, m: usize) -> Result<PrecisionSpec, Fail> {
    match (&region.delta, &region.depth) {
        (Some(d), _) => Ok(PrecisionSpec::Delta(d.clone())),
        (None, Some(l)) => Ok(PrecisionSpec::Depth(l.clone())),
        (None, None) => Ok(PrecisionSpec::Depth(vec![4; m])),
    }
}

fn region_entries(region: &RegionArgs, prec: &PrecisionSpec) -> Vec<(&'static str, String)> {
    let prec = match prec {
        PrecisionSpec::Delta(d) => format!("delta {d:?}"),
        PrecisionSpec::Depth(l) => format!("depth {l:?}"),
    };
    vec![
        ("mmin", region.mmin.to_string()),
        ("mmax", region.mmax.to_string()),
        (
            "mode",
            match region.mode {
                ModeArg::General => "general".into(),
                ModeArg::Crn => "crn".into(),
            },
        ),
        ("tol", region.tol.to_string()),
        ("box-max-n", region.box_max_n.to_string()),
        ("precision", prec),
    ]
}

fn cmd_partition(a: PartitionArgs) -> Result<u8, Fail> {
    let l = load(&a.input, &a.run)?;
    let (bx, cfg) = region_setup(&a.run, &a.region, &l.sys)?;
    let prec = precision_of(&a.region, l.sys.m())?;
    let part = match &a.grid {
        Some(counts) => grid_partition(&l.sys, &l.spec, &bx, counts, &cfg),
        None => bisect_partition(&l.sys, &l.spec, &bx, &prec, &cfg),
    }
    .map_err(|e| Fail::input(e.to_string()))?;

    let mut entries = run_entries(&a.run, &l.sys);
    entries.extend(region_entries(&a.region, &prec));
    entries.push((
        "method",
        match &a.grid {
            Some(g) => format!("grid {g:?}"),
            None => "bisect".into(),
        },
    ));
    entries.push(("boxes", part.reports.len().to_string()));
    entries.push(("integrals", part.integrals.to_string()));
    let head = header("partition", &a.input, &entries);
    match a.out {
        OutFormat::Csv => {
            let body = format!("{head}{}", export_csv(&part.reports, &l.sys.space));
            write_output(a.output.as_deref(), body.as_bytes())?;
        }
        OutFormat::Ppm => {
            let Some(path) = a.output.as_deref() else {
                return Err(Fail::input("--out ppm needs --output"));
            };
            if a.axes.len() != 2 || a.axes.iter().any(|&x| x == 0 || x > l.sys.m()) {
                return Err(Fail::input("--axes needs two parameter positions (1-based)"));
            }
            let img = export_ppm(&part.reports, a.axes[0] - 1, a.axes[1] - 1, a.region.mmin, a.region.mmax)
                .map_err(|e| Fail::input(e.to_string()))?;
            // Comments go after the magic number.
            let mut bytes = b"P6\n".to_vec();
            bytes.extend_from_slice(head.as_bytes());
            bytes.extend_from_slice(&img[3..]);
            write_output(Some(path), &bytes)?;
        }
    }
    Ok(0)
}

fn cmd_search(a: SearchArgs) -> Result<u8, Fail> {
    let l = load(&a.input, &a.run)?;
    let (bx, cfg) = region_setup(&a.run, &a.region, &l.sys)?;
    let prec = precision_of(&a.region, l.sys.m())?;
    let mode = if a.keep_both {
        SearchMode::KeepBoth
    } else {
        SearchMode::Greedy
    };
    let out = search_max(&l.sys, &l.spec, &bx, &prec, &cfg, mode).map_err(|e| Fail::input(e.to_string()))?;
    let mut entries = run_entries(&a.run, &l.sys);
    entries.extend(region_entries(&a.region, &prec));
    entries.push(("keep-both", a.keep_both.to_string()));
    print!("{}", header("search", &a.input, &entries));
    print!("{}", format_trace(&out));
    if let Some(best) = &out.best {
        let r = best.r_hat().map_or("error".into(), |r| r.to_string());
        println!("{} box: {} r_hat: {r}", if out.found { "found" } else { "best" }, best.bx);
    }
    println!("integrals: {}", out.integrals);
    Ok(if out.found { 0 } else { 3 })
}

fn cmd_oracle(a: OracleArgs) -> Result<u8, Fail> {
    let l = load(&a.input, &a.run)?;
    let red = reduce_to_univariate(&l.sys).map_err(|e| Fail::input(e.to_string()))?;
    let direct = direct_expectation(
        &l.sys,
        &red,
        &l.sys.param_box,
        a.samples,
        &DirectOptions {
            seed: a.run.seed,
            workers: a.run.workers,
            filter: !a.no_filter,
            ..Default::default()
        },
    )
    .map_err(|e| Fail::input(e.to_string()))?;
    let est = run_integration(&l.spec, &rule_of(&a.run), &options_of(&a.run)).map_err(|e| Fail::input(e.to_string()))?;
    let mut entries = run_entries(&a.run, &l.sys);
    entries.push(("samples", a.samples.to_string()));
    entries.push(("filter", (!a.no_filter).to_string()));
    print!("{}", header("oracle", &a.input, &entries));
    print!("{}", format_estimate(&est));
    println!("direct: {} ± {}", direct.value, direct.stderr);
    println!("direct samples: {} (rejected {})", direct.n, direct.rejected);
    let combined = (est.stderr.powi(2) + direct.stderr.powi(2)).sqrt();
    let z = if combined > 0.0 {
        (est.value - direct.value).abs() / combined
    } else if est.value == direct.value {
        0.0
    } else {
        f64::INFINITY
    };
    println!("discrepancy: {z:.3} combined standard errors");
    if direct.rejection_rate() >= MAX_REJECTION_RATE {
        eprintln!("warning: {:.2e} of parameter samples were rejected", direct.rejection_rate());
    }
    Ok(exit_code(est.status))
}

fn cmd_crn_reduce(a: ReduceArgs) -> Result<u8, Fail> {
    let text = read(&a.input)?;
    let net = parse_network(&text).map_err(|e| crn_error(&a.input, &e))?;
    let to_zero = |v: &Option<Vec<usize>>| -> Result<Option<Vec<usize>>, Fail> {
        v.as_ref()
            .map(|v| {
                v.iter()
                    .map(|&i| i.checked_sub(1).ok_or_else(|| Fail::input("indices are 1-based")))
                    .collect()
            })
            .transpose()
    };
    let rows = to_zero(&a.rows)?;
    let cols = to_zero(&a.columns)?;
    let red = reduced_system_with(&net, rows.as_deref(), cols.as_deref()).map_err(|e| crn_error(&a.input, &e))?;
    let one_based = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
    let head = header(
        "crn reduce",
        &a.input,
        &[
            ("rows", one_based(&red.rows)),
            ("columns", one_based(&red.columns)),
            ("conservation laws", red.conservation.len().to_string()),
        ],
    );
    write_output(a.output.as_deref(), format!("{head}{}", red.sys.to_text()).as_bytes())?;
    Ok(0)
}
