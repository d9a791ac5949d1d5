//! `polycode` command-line tool.

mod output;
mod verify;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polycode::cluster::{self, Clock, HarnessConfig, RunReport, StragglerPlan};
use polycode::convolution::{conv_direct, conv_thresholds, ConvCode, VecBlocks};
use polycode::matrix::{transpose_mul, FMatrix, ProblemShape};
use polycode::schemes::{build_scheme, threshold_table, CodeParams, PolyCode, SchemeKind};
use polycode::sim::{self, LatencyModel};
use polycode::textio;
use polycode::{Error, FieldCtx, FieldElem};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use output::{csv_string, emit, json_string, write_atomic, Format};

#[derive(Parser, Debug)]
#[command(name = "polycode", version, about = "Coded distributed matrix multiplication over prime fields")]
struct Cli {
    /// Prime modulus of the field.
    #[arg(long, global = true, env = "POLYCODE_Q", default_value_t = polycode::field::DEFAULT_MODULUS)]
    q: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recovery thresholds of every scheme across a range of worker counts.
    Threshold(ThresholdArgs),
    /// One end-to-end run through the master/worker harness.
    Run(RunArgs),
    /// Monte-Carlo latency comparison; writes latency.csv and ccdf.csv.
    Sim(SimArgs),
    /// Coded convolution of two vectors.
    Conv(ConvArgs),
    /// Exhaustive small-instance checks of every scheme.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Worker counts: `400`, `100..500` (inclusive) or `100..500:10`.
    #[arg(long = "N", value_name = "RANGE")]
    workers: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ShapeArgs {
    #[arg(long = "N")]
    workers: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Common row count of A and B.
    #[arg(long)]
    s: Option<usize>,
    /// Columns of A; defaults to 16 m.
    #[arg(long)]
    r: Option<usize>,
    /// Columns of B; defaults to 16 n.
    #[arg(long)]
    t: Option<usize>,
}

impl ShapeArgs {
    fn shape(&self) -> polycode::Result<ProblemShape> {
        let r = self.r.unwrap_or(16 * self.m);
        let t = self.t.unwrap_or(16 * self.n);
        let s = self.s.unwrap_or(r.max(t) * 2);
        ProblemShape::new(s, r, t, self.m, self.n, self.workers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClockArg {
    Virtual,
    Wall,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value = "poly")]
    scheme: SchemeKind,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `none`, `slow1x<F>` (one random worker F times slower) or `delays`.
    #[arg(long, default_value = "none")]
    plan: String,
    /// Overrides the factor of a `slow1x` plan.
    #[arg(long)]
    factor: Option<f64>,
    /// Extra seconds per worker for `--plan delays`, comma separated.
    #[arg(long, value_delimiter = ',')]
    delays: Vec<f64>,
    /// Workers returning corrupted blocks; decodes with error correction.
    #[arg(long, value_delimiter = ',')]
    corrupt: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ClockArg::Virtual)]
    clock: ClockArg,
    #[arg(long, default_value_t = 1e-9)]
    seconds_per_mac: f64,
    /// Matrix file for A (`rows cols q` header); random when absent.
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    /// Check the output against a direct product.
    #[arg(long)]
    verify: bool,
    /// Writes C in matrix file format.
    #[arg(long)]
    c_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    ShiftedExponential,
    Deterministic,
    Empirical,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Schemes to compare; the polynomial code is always included.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<SchemeKind>,
    #[arg(long = "N")]
    workers: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModelArg::ShiftedExponential)]
    model: ModelArg,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Worker time for the deterministic model.
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// File of whitespace separated times for the empirical model.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Directory for latency.csv and ccdf.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ConvArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long = "N")]
    workers: usize,
    /// Block length for random inputs.
    #[arg(long, default_value_t = 16)]
    s: usize,
    /// Vector file for a (`len q` header); random when absent.
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    /// Zero-pad inputs to a common block length.
    #[arg(long)]
    pad: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes c in vector file format.
    #[arg(long)]
    c_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 9)]
    max_workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Decoding(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Decoding(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Decoding(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DecodingFailure(_)
            | Error::NotDecodable
            | Error::NotEnoughResults { .. }
            | Error::HarnessTimeout
            | Error::NeverDecodable => Failure::Decoding(msg),
            Error::Io(_) => Failure::Internal(msg),
            _ => Failure::Validation(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Internal(format!("csv error: {e}"))
    }
}

type CmdResult = Result<(), Failure>;

fn validation(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn parse_range(spec: &str) -> Result<Vec<usize>, Failure> {
    let bad = || validation(format!("bad worker range '{spec}', expected N, A..B or A..B:STEP"));
    let (range, step) = match spec.split_once(':') {
        Some((r, s)) => (r, s.parse::<usize>().map_err(|_| bad())?),
        None => (spec, 1),
    };
    if step == 0 {
        return Err(bad());
    }
    let (lo, hi) = match range.split_once("..") {
        Some((a, b)) => (a.parse::<usize>().map_err(|_| bad())?, b.parse::<usize>().map_err(|_| bad())?),
        None => {
            let v = range.parse::<usize>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn cmd_threshold(args: &ThresholdArgs) -> CmdResult {
    if args.m == 0 || args.n == 0 {
        return Err(validation("m and n must be positive"));
    }
    let workers = parse_range(&args.workers)?;
    let rows = threshold_table(args.m, args.n, workers);
    if rows.is_empty() {
        return Err(validation(format!("no worker count in '{}' has at least mn workers", args.workers)));
    }
    #[derive(Serialize)]
    struct Row<'a> {
        #[serde(rename = "N")]
        workers: usize,
        scheme: &'a str,
        threshold: usize,
    }
    let rows: Vec<Row> =
        rows.iter().map(|r| Row { workers: r.workers, scheme: &r.scheme, threshold: r.threshold }).collect();
    let text = match args.format {
        Format::Csv => csv_string(&rows)?,
        Format::Json => json_string(&rows),
        Format::Text => {
            let mut s = format!("{:>6}  {:<12} {:>9}\n", "N", "scheme", "threshold");
            for r in &rows {
                let _ = writeln!(s, "{:>6}  {:<12} {:>9}", r.workers, r.scheme, r.threshold);
            }
            s
        }
    };
    emit(args.output.as_deref(), &text)?;
    Ok(())
}

fn parse_plan(args: &RunArgs, workers: usize) -> Result<StragglerPlan, Failure> {
    let plan = match args.plan.as_str() {
        "none" => StragglerPlan::None,
        "delays" => StragglerPlan::PerWorkerDelays { delays: args.delays.clone() },
        other => {
            let factor = other
                .strip_prefix("slow1x")
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| validation(format!("unknown plan '{other}', expected none, slow1x<F> or delays")))?;
            StragglerPlan::SlowdownRandomWorker { factor: args.factor.unwrap_or(factor) }
        }
    };
    if args.factor.is_some() && !matches!(plan, StragglerPlan::SlowdownRandomWorker { .. }) {
        return Err(validation("--factor only applies to a slow1x plan"));
    }
    plan.validate(workers)?;
    Ok(plan)
}

fn load_matrix(ctx: &FieldCtx, path: &Path) -> Result<FMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    textio::parse_matrix(ctx, &text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn load_vector(ctx: &FieldCtx, path: &Path) -> Result<Vec<FieldElem>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    textio::parse_vector(ctx, &text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunOutput {
    #[serde(flatten)]
    report: RunReport,
    verified: Option<bool>,
}

fn cmd_run(ctx: FieldCtx, args: &RunArgs) -> CmdResult {
    let mut shape = args.shape.shape()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let a = match &args.a {
        Some(p) => load_matrix(&ctx, p)?,
        None => FMatrix::random(&ctx, shape.s, shape.r, &mut rng),
    };
    let b = match &args.b {
        Some(p) => load_matrix(&ctx, p)?,
        None => FMatrix::random(&ctx, shape.s, shape.t, &mut rng),
    };
    if args.a.is_some() || args.b.is_some() {
        shape = ProblemShape::new(a.rows(), a.cols(), b.cols(), shape.m, shape.n, shape.workers)?;
    }
    let plan = parse_plan(args, shape.workers)?;
    let config = HarnessConfig {
        clock: match args.clock {
            ClockArg::Virtual => Clock::Virtual,
            ClockArg::Wall => Clock::Wall,
        },
        seconds_per_mac: args.seconds_per_mac,
        ..HarnessConfig::default()
    };
    let (report, c) = if args.corrupt.is_empty() {
        let scheme = build_scheme(args.scheme, ctx, shape)?;
        cluster::run(scheme.as_ref(), &a, &b, &plan, &config, args.seed)?
    } else {
        if args.scheme != SchemeKind::Poly {
            return Err(validation("--corrupt needs --scheme poly"));
        }
        let corrupt: BTreeSet<usize> = args.corrupt.iter().copied().collect();
        if let Some(&w) = corrupt.iter().find(|&&w| w >= shape.workers) {
            return Err(validation(format!("worker {w} does not exist")));
        }
        let code = PolyCode::new(ctx, shape, CodeParams::default_for(&shape), None)?;
        cluster::run_with_faults(&code, &a, &b, &plan, &config, args.seed, &corrupt)?
    };
    let verified = if args.verify {
        let oracle = transpose_mul(&ctx, &a, &b)?;
        if cluster::digest(&oracle) != report.output_digest {
            return Err(Failure::Internal("decoded output does not match the direct product".into()));
        }
        Some(true)
    } else {
        None
    };
    if let Some(p) = &args.c_out {
        write_atomic(p, textio::format_matrix(&ctx, &c).as_bytes())?;
    }
    let out = RunOutput { report, verified };
    let text = match args.format {
        Format::Json => json_string(&out),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                scheme: &'a str,
                wall_latency: f64,
                collect_latency: f64,
                decode_time: f64,
                responders: usize,
                bytes_received: u64,
                comm_load_bits: f64,
                output_digest: &'a str,
            }
            let r = &out.report;
            csv_string(&[Row {
                scheme: &r.scheme,
                wall_latency: r.wall_latency,
                collect_latency: r.collect_latency,
                decode_time: r.decode_time,
                responders: r.responders.len(),
                bytes_received: r.bytes_received,
                comm_load_bits: r.comm_load_bits,
                output_digest: &r.output_digest,
            }])?
        }
        Format::Text => {
            let r = &out.report;
            let mut s = String::new();
            let _ = writeln!(s, "scheme          {}", r.scheme);
            let _ = writeln!(s, "wall latency    {:.6e} s", r.wall_latency);
            let _ = writeln!(s, "decode time     {:.6e} s", r.decode_time);
            let _ = writeln!(s, "responders      {:?}", r.responders);
            if let Some(w) = r.slowed_worker {
                let _ = writeln!(s, "slowed worker   {w}");
            }
            if !r.faulty_workers.is_empty() {
                let _ = writeln!(s, "faulty workers  {:?}", r.faulty_workers);
            }
            let _ = writeln!(s, "bytes received  {}", r.bytes_received);
            let _ = writeln!(s, "digest          {}", r.output_digest);
            if out.verified == Some(true) {
                s.push_str("verified        yes\n");
            }
            s
        }
    };
    emit(args.output.as_deref(), &text)?;
    Ok(())
}

fn cmd_sim(ctx: FieldCtx, args: &SimArgs) -> CmdResult {
    let shape = ProblemShape::new(args.m * args.n, args.m, args.n, args.m, args.n, args.workers)?;
    let model = match args.model {
        ModelArg::ShiftedExponential => LatencyModel::ShiftedExponential { shift: args.shift, rate: args.rate },
        ModelArg::Deterministic => LatencyModel::Deterministic { value: args.value },
        ModelArg::Empirical => {
            let path = args.samples.as_ref().ok_or_else(|| validation("the empirical model needs --samples"))?;
            let text = fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
            let samples = text
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| validation(format!("'{t}' is not a time"))))
                .collect::<Result<Vec<_>, _>>()?;
            LatencyModel::Empirical { samples }
        }
    };
    let kinds: Vec<SchemeKind> = if args.schemes.is_empty() {
        SchemeKind::ALL.into_iter().filter(|k| k.layout(&shape).is_ok()).collect()
    } else {
        let mut k = vec![SchemeKind::Poly];
        k.extend(args.schemes.iter().copied());
        k
    };
    let report = sim::dominance_check_with(&kinds, &model, &shape, args.trials, args.seed, ctx.log2_q(), Default::default())?;
    if report.violations > 0 {
        return Err(Failure::Internal(format!("{} samples where the polynomial code was beaten", report.violations)));
    }
    let latency = csv_string(&report.latency_rows())?;
    let ccdf = csv_string(&report.ccdf_rows())?;
    fs::create_dir_all(&args.out_dir)?;
    write_atomic(&args.out_dir.join("latency.csv"), latency.as_bytes())?;
    write_atomic(&args.out_dir.join("ccdf.csv"), ccdf.as_bytes())?;
    let text = match args.format {
        Format::Json => json_string(&report),
        Format::Csv => csv_string(
            &report
                .schemes
                .iter()
                .map(|s| (s.scheme.name(), s.threshold, s.mean, s.p95, s.p99, s.comm_load_bits))
                .collect::<Vec<_>>(),
        )
        .map(|body| format!("scheme,threshold,mean,p95,p99,comm_load_bits\n{body}"))?,
        Format::Text => {
            let mut s = format!(
                "{} trials, seed {}, violations {}, ccdf ordered {}\n",
                report.trials, report.seed, report.violations, report.ccdf_ordered
            );
            let _ = writeln!(s, "{:<10} {:>9} {:>10} {:>10} {:>10} {:>14}", "scheme", "threshold", "mean", "p95", "p99", "load bits");
            for st in &report.schemes {
                let _ = writeln!(
                    s,
                    "{:<10} {:>9} {:>10.4} {:>10.4} {:>10.4} {:>14.1}",
                    st.scheme.name(),
                    st.threshold,
                    st.mean,
                    st.p95,
                    st.p99,
                    st.comm_load_bits
                );
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(())
}

fn cmd_conv(ctx: FieldCtx, args: &ConvArgs) -> CmdResult {
    if args.m == 0 || args.n == 0 {
        return Err(validation("m and n must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut a = match &args.a {
        Some(p) => load_vector(&ctx, p)?,
        None => (0..args.m * args.s).map(|_| ctx.random(&mut rng)).collect(),
    };
    let mut b = match &args.b {
        Some(p) => load_vector(&ctx, p)?,
        None => (0..args.n * args.s).map(|_| ctx.random(&mut rng)).collect(),
    };
    if a.is_empty() || b.is_empty() {
        return Err(validation("input vectors must be nonempty"));
    }
    let (a_blocks, b_blocks) = if args.pad {
        let s = a.len().div_ceil(args.m).max(b.len().div_ceil(args.n));
        a.resize(s * args.m, FieldElem::ZERO);
        b.resize(s * args.n, FieldElem::ZERO);
        (VecBlocks::split(&a, args.m)?, VecBlocks::split(&b, args.n)?)
    } else {
        let a_blocks = VecBlocks::split(&a, args.m)?;
        let b_blocks = VecBlocks::split(&b, args.n)?;
        if a_blocks.block_len() != b_blocks.block_len() {
            return Err(validation(format!(
                "block lengths differ ({} vs {}); use --pad",
                a_blocks.block_len(),
                b_blocks.block_len()
            )));
        }
        (a_blocks, b_blocks)
    };
    let code = ConvCode::new(ctx, args.m, args.n, args.workers, None)?;
    let shares = code.encode(&a_blocks, &b_blocks)?;
    let chosen: Vec<usize> = sample(&mut rng, args.workers, code.threshold()).into_vec();
    let results: Vec<_> = chosen.iter().map(|&i| shares[i].compute(&ctx)).collect();
    let c = code.decode(&results)?;
    if c != conv_direct(&ctx, &a, &b)? {
        return Err(Failure::Internal("decoded convolution does not match the direct one".into()));
    }
    if let Some(p) = &args.c_out {
        write_atomic(p, textio::format_vector(&ctx, &c).as_bytes())?;
    }
    #[derive(Serialize)]
    struct ConvOutput {
        thresholds: polycode::convolution::ConvThresholds,
        workers_used: Vec<usize>,
        output_len: usize,
        verified: bool,
    }
    let mut used = chosen.clone();
    used.sort_unstable();
    let out = ConvOutput {
        thresholds: conv_thresholds(args.m, args.n, args.workers),
        workers_used: used,
        output_len: c.len(),
        verified: true,
    };
    let t = &out.thresholds;
    let text = match args.format {
        Format::Json => json_string(&out),
        Format::Csv => {
            let mut s = String::from("scheme,threshold\n");
            let _ = writeln!(s, "conv_poly,{}", t.conv_poly);
            let _ = writeln!(s, "via_matmul,{}", t.via_matmul);
            if let Some(k) = t.coded_conv_baseline {
                let _ = writeln!(s, "coded_conv_baseline,{k}");
            }
            let _ = writeln!(s, "lower_bound,{}", t.lower_bound);
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "threshold       {}", t.conv_poly);
            let _ = writeln!(s, "via matmul      {}", t.via_matmul);
            if let Some(k) = t.coded_conv_baseline {
                let _ = writeln!(s, "1D MDS baseline {k}");
            }
            let _ = writeln!(s, "lower bound     {}", t.lower_bound);
            let _ = writeln!(s, "workers used    {:?}", out.workers_used);
            let _ = writeln!(s, "output length   {}", out.output_len);
            s
        }
    };
    emit(args.output.as_deref(), &text)?;
    Ok(())
}

fn dispatch(cli: &Cli) -> CmdResult {
    let ctx = FieldCtx::new(cli.q)?;
    match &cli.command {
        Command::Threshold(a) => cmd_threshold(a),
        Command::Run(a) => cmd_run(ctx, a),
        Command::Sim(a) => cmd_sim(ctx, a),
        Command::Conv(a) => cmd_conv(ctx, a),
        Command::Verify(a) => verify::cmd_verify(ctx, a.max_workers, a.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
