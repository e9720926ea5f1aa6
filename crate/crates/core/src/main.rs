use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mds_d2d::delay_model::{avg_download_delay_with, DelaySummary};
use mds_d2d::event_sim::{simulate, SimConfig, SimMode};
use mds_d2d::harness::config::{self, parse_mode, parse_request_model, Engine, SweepSpec};
use mds_d2d::harness::{
    compare_report, emit_csv, emit_svg, read_csv, run_sweep, HarnessError, PlotKind, SweepRow,
    FLAG_THRESHOLD,
};
use mds_d2d::kernels::AvailabilityMethod;
use mds_d2d::{CodeParams, ModelOptions, SurvivalAccounting, SystemParams};

#[derive(Parser)]
#[command(
    name = "mds-d2d",
    version,
    about = "Download delay of MDS-coded D2D storage in one cell"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytical model at one point.
    Analytic(AnalyticArgs),
    /// Run the event simulator at one point.
    Simulate(SimulateArgs),
    /// Evaluate a parameter sweep and write CSV and SVG files.
    Sweep(SweepArgs),
    /// Draw gain against the repair interval from a sweep CSV.
    Plot(PlotArgs),
    /// Run a sweep with both engines and report their differences.
    Compare(CompareArgs),
}

#[derive(Args)]
struct PointArgs {
    /// Code block length.
    #[arg(long)]
    n: usize,
    /// Code dimension.
    #[arg(long)]
    k: usize,
    /// Repair interval Δ.
    #[arg(long)]
    delta: f64,
    /// D2D time per symbol.
    #[arg(long)]
    t_d: f64,
    /// BS time per symbol.
    #[arg(long)]
    t_bs: f64,
    /// Expected number of nodes in the cell, M.
    #[arg(long, default_value_t = 30.0)]
    nodes: f64,
    /// Node departure rate μ (equal to the arrival rate per slot).
    #[arg(long, default_value_t = 1.0)]
    departure_rate: f64,
    /// Per-node file request rate ω.
    #[arg(long, default_value_t = 0.02)]
    request_rate: f64,
}

impl PointArgs {
    fn build(&self) -> Result<(SystemParams, CodeParams), HarnessError> {
        let wrap = |source| HarnessError::Model {
            context: "parameters".into(),
            source,
        };
        let params = SystemParams::new(
            self.nodes,
            self.departure_rate,
            self.request_rate,
            self.t_d,
            self.t_bs,
            self.delta,
        )
        .map_err(wrap)?;
        let code = CodeParams::new(self.n, self.k).map_err(wrap)?;
        for w in params
            .warnings()
            .into_iter()
            .chain(code.warnings(params.expected_node_count))
        {
            log::warn!("{w}");
        }
        Ok((params, code))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SurvivalArg {
    PerSlot,
    Cumulative,
}

#[derive(Clone, Copy, ValueEnum)]
enum AvailabilityArg {
    Stable,
    Literal,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Requester-survival accounting in the attempt recursion.
    #[arg(long, value_enum, default_value = "per-slot")]
    survival: SurvivalArg,
    /// Evaluation of the availability distribution.
    #[arg(long, value_enum, default_value = "stable")]
    availability: AvailabilityArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Measured requests.
    #[arg(long, default_value_t = 100_000)]
    requests: u64,
    /// Warmup requests discarded before measuring.
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// faithful | physical
    #[arg(long, default_value = "faithful", value_parser = parse_mode)]
    mode: SimMode,
    /// aggregate | per-node (default follows the mode)
    #[arg(long, value_parser = parse_request_model)]
    request_model: Option<mds_d2d::event_sim::RequestModel>,
}

#[derive(Args)]
struct SpecArgs {
    /// TOML sweep configuration; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// analytic | simulate | both
    #[arg(long)]
    engine: Option<Engine>,
    /// Codes as n:k, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_code)]
    codes: Option<Vec<CodeParams>>,
    /// t_bs/t_d ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Explicit repair intervals, comma separated.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measured requests per simulated point.
    #[arg(long)]
    requests: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// faithful | physical
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SimMode>,
    /// aggregate | per-node
    #[arg(long, value_parser = parse_request_model)]
    request_model: Option<mds_d2d::event_sim::RequestModel>,
    /// Per-node request rate ω.
    #[arg(long)]
    request_rate: Option<f64>,
}

fn parse_code(s: &str) -> Result<CodeParams, String> {
    let (n, k) = s
        .split_once(':')
        .ok_or_else(|| format!("expected n:k, got `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad n in `{s}`"))?;
    let k = k.trim().parse().map_err(|_| format!("bad k in `{s}`"))?;
    CodeParams::new(n, k).map_err(|e| e.to_string())
}

impl SpecArgs {
    /// File values over defaults, flags over both.
    fn resolve(&self) -> Result<SweepSpec, HarnessError> {
        let mut spec = match &self.config {
            Some(path) => config::parse_config(path)?,
            None => SweepSpec::default(),
        };
        if let Some(v) = self.engine {
            spec.engine = v;
        }
        if let Some(v) = &self.codes {
            spec.codes = v.clone();
        }
        if let Some(v) = &self.ratios {
            spec.ratios = v.clone();
        }
        if let Some(v) = &self.deltas {
            spec.deltas = v.clone();
        }
        if let Some(v) = self.seed {
            spec.sim.seed = v;
        }
        if let Some(v) = self.requests {
            spec.sim.num_requests = v;
        }
        if let Some(v) = self.warmup {
            spec.sim.warmup_requests = Some(v);
        }
        if let Some(v) = self.mode {
            spec.sim.mode = v;
        }
        if let Some(v) = &self.request_model {
            spec.sim.request_model = Some(v.clone());
        }
        if let Some(v) = self.request_rate {
            spec.system.request_rate = v;
        }
        config::validate(&spec)?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// CSV output file.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Directory for one gain-vs-Δ SVG per ratio.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV to read.
    #[arg(long)]
    input: PathBuf,
    /// SVG output file.
    #[arg(long)]
    out: PathBuf,
    /// Keep only rows with this t_bs/t_d ratio.
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Also write the paired rows as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative difference above which a row is flagged.
    #[arg(long, default_value_t = FLAG_THRESHOLD)]
    threshold: f64,
    /// Exit with status 3 when any row is flagged.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Analytic(a) => analytic(a),
        Command::Simulate(a) => simulate_point(a),
        Command::Sweep(a) => sweep(a),
        Command::Plot(a) => plot(a),
        Command::Compare(a) => compare(a),
    }
}

fn analytic(args: AnalyticArgs) -> Result<(), HarnessError> {
    let (params, code) = args.point.build()?;
    let options = ModelOptions {
        availability: match args.availability {
            AvailabilityArg::Stable => AvailabilityMethod::StableForm,
            AvailabilityArg::Literal => AvailabilityMethod::LiteralForm,
        },
        survival: match args.survival {
            SurvivalArg::PerSlot => SurvivalAccounting::PerSlot,
            SurvivalArg::Cumulative => SurvivalAccounting::Cumulative,
        },
    };
    let s = avg_download_delay_with(&params, &code, &options).map_err(|source| {
        HarnessError::Model {
            context: format!("code {code} at delta={}", params.repair_interval),
            source,
        }
    })?;
    print_summary(&code, &s);
    Ok(())
}

fn print_summary(code: &CodeParams, s: &DelaySummary) {
    println!("code        {code}");
    println!("eta         {:.9}", s.eta);
    println!("t_eta       {:.9}", s.t_eta);
    println!("p_idle      {:.9}", s.p_idle);
    println!("t_dw        {:.9}", s.t_dw);
    println!("t_ref       {:.9}", s.t_ref);
    println!("gain        {:.9}", s.gain);
    for (j, p) in s.outcome.as_vec().iter().enumerate() {
        println!("P[{j} symbols] {p:.9}");
    }
}

fn simulate_point(args: SimulateArgs) -> Result<(), HarnessError> {
    let (params, code) = args.point.build()?;
    let wrap = |source| HarnessError::Model {
        context: format!("code {code} at delta={}", params.repair_interval),
        source,
    };
    let mut config =
        SimConfig::new(params, code, args.mode, args.requests, args.seed).map_err(wrap)?;
    if let Some(w) = args.warmup {
        config.warmup_requests = w;
    }
    if let Some(m) = args.request_model {
        config.request_model = m;
    }
    let r = simulate(&config).map_err(wrap)?;
    let t_ref = code.k as f64 * params.bs_symbol_time;
    println!("code        {code}");
    println!("requests    {}", r.requests);
    println!("t_dw        {:.9} ± {:.3e}", r.mean_delay, r.delay_stderr);
    println!("gain        {:.9}", t_ref / r.mean_delay);
    println!(
        "busy_frac   {:.9} ± {:.3e}",
        r.busy_fraction, r.busy_fraction_stderr
    );
    println!("eta         {:.9}", r.mean_d2d_symbols);
    println!(
        "t_eta       {:.9} ± {:.3e}",
        r.mean_occupancy(),
        r.occupancy.stderr()
    );
    println!("halves_z    {:.3}", r.halves.z_score());
    println!("population  {:.4}", r.mean_population);
    for (j, p) in r.empirical_outcome.as_vec().iter().enumerate() {
        println!("P[{j} symbols] {p:.9}");
    }
    Ok(())
}

fn svg_name(ratio: f64) -> String {
    format!("gain_ratio_{}.svg", ratio.to_string().replace('.', "p"))
}

fn sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let spec = args.spec.resolve()?;
    let rows = run_sweep(&spec)?;
    emit_csv(&rows, &args.out)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(dir) = &args.svg_dir {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.clone(),
            source,
        })?;
        for &ratio in &spec.ratios {
            let subset: Vec<SweepRow> = rows
                .iter()
                .filter(|r| same_ratio(r.ratio(), ratio))
                .cloned()
                .collect();
            let path = dir.join(svg_name(ratio));
            emit_svg(&subset, &path, PlotKind::GainVsDelta)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn same_ratio(a: f64, b: f64) -> bool {
    ((a - b) / b).abs() <= 1e-6
}

fn plot(args: PlotArgs) -> Result<(), HarnessError> {
    let mut rows = read_csv(&args.input)?;
    if let Some(ratio) = args.ratio {
        rows.retain(|r| same_ratio(r.ratio(), ratio));
    }
    emit_svg(&rows, &args.out, PlotKind::GainVsDelta)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), HarnessError> {
    let mut spec = args.spec.resolve()?;
    spec.engine = Engine::Both;
    let rows = run_sweep(&spec)?;
    if let Some(out) = &args.out {
        emit_csv(&rows, out)?;
    }
    let report = compare_report(&rows, args.threshold)?;
    println!("{report}");
    if args.strict && report.flagged() > 0 {
        return Err(HarnessError::StrictFailure(report.flagged()));
    }
    Ok(())
}
