use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tfmseg::factor::{estimate_loadings, estimate_pseudo_factors};
use tfmseg::io::report::{loading_summary, mode_entries, Timing};
use tfmseg::io::{load_series, read_text, save_series, truth_from_json, truth_to_json, ReportDocument, SeriesFormat};
use tfmseg::modeid::{identify_modes, mode_informed_loadings, DEFAULT_ZETA_MULTIPLIER};
use tfmseg::segmentation::{generate_seeded_intervals, ThresholdSpec, DEFAULT_COEFFICIENTS};
use tfmseg::sim::calibrate::{calibrate_pi_with_progress, calibrate_zeta, NullScan, PiGrid, ZetaGrid};
use tfmseg::sim::metrics::summarize;
use tfmseg::sim::montecarlo::evaluate_scenario;
use tfmseg::sim::generate;
use tfmseg::{
    analyze, AnalyzeConfig, DetectConfig, EndpointMode, Error, GroundTruth, ModeIdConfig,
    PseudoFactorStats, Scenario, SimScenario, Spacing, ThresholdCoefficients,
};

#[derive(Parser)]
#[command(name = "tfmseg", version, about = "Change points and mode identification in tensor factor models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect change points and identify the modes that changed.
    Detect(DetectArgs),
    /// Redo mode identification for the change points of an existing report.
    Identify(IdentifyArgs),
    /// Simulate a series and its ground truth.
    Simulate(SimulateArgs),
    /// Calibrate the detection threshold or the mode identification multiplier.
    Calibrate(CalibrateArgs),
    /// Score a saved report against a saved truth, or run a Monte Carlo study.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for SeriesFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => SeriesFormat::Binary,
            FormatArg::Csv => SeriesFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EndpointArg {
    Practical,
    Theoretical,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Pi,
    Zeta,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Full,
    Reduced,
}

/// Comma or `x` separated integers, e.g. `10,10,10` or `10x10x10`.
#[derive(Debug, Clone)]
struct List(Vec<usize>);

impl std::str::FromStr for List {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split([',', 'x'])
            .map(|v| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}")))
            .collect::<std::result::Result<_, _>>()
            .map(List)
    }
}

#[derive(Args)]
struct ThresholdArgs {
    /// File with the five threshold regression coefficients.
    #[arg(long, value_name = "FILE", conflicts_with = "threshold")]
    pi_coeffs: Option<PathBuf>,
    /// Fixed detection threshold instead of the regression.
    #[arg(long)]
    threshold: Option<f64>,
    /// Finest interval level.
    #[arg(long)]
    mu: Option<f64>,
    /// Boundary trimming.
    #[arg(long)]
    trim: Option<usize>,
}

#[derive(Args)]
struct ModeArgs {
    #[arg(long, default_value_t = DEFAULT_ZETA_MULTIPLIER)]
    zeta_mult: f64,
    #[arg(long, value_enum, default_value_t = EndpointArg::Practical)]
    endpoints: EndpointArg,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Factor numbers, e.g. 3,3,3; estimated when omitted.
    #[arg(long)]
    ranks: Option<List>,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[command(flatten)]
    modes: ModeArgs,
    /// Re-estimate loadings using the identified modes.
    #[arg(long)]
    mode_informed: bool,
    /// Ground truth for loading distances.
    #[arg(long, requires = "mode_informed")]
    truth: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Report providing the change points and factor numbers.
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    modes: ModeArgs,
    #[arg(long)]
    mode_informed: bool,
    #[arg(long, requires = "mode_informed")]
    truth: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "S1")]
    scenario: Scenario,
    #[arg(long = "T", visible_alias = "t", default_value_t = 400)]
    t: usize,
    #[arg(long, default_value = "10,10,10")]
    dims: List,
    /// True factor numbers of the simulated model.
    #[arg(long)]
    sim_ranks: Option<List>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value = "equal")]
    spacing: Spacing,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ScenarioArgs {
    fn scenario(&self) -> SimScenario {
        let mut sc = SimScenario::new(self.scenario, self.t, self.dims.0.clone())
            .with_rho(self.rho)
            .with_spacing(self.spacing)
            .with_seed(self.seed, 0);
        if let Some(r) = &self.sim_ranks {
            sc = sc.with_ranks(r.0.clone());
        }
        sc
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Mask the late corner block of the series.
    #[arg(long)]
    missing: bool,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Ground truth path; defaults to the output path with `.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    what: What,
    #[arg(long, value_enum, default_value_t = GridArg::Reduced)]
    grid: GridArg,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample sizes replacing the grid's, e.g. 400,800.
    #[arg(long)]
    ts: Option<List>,
    /// Tensor shape replacing the grid's; repeatable.
    #[arg(long = "shape")]
    shapes: Vec<List>,
    /// Factor numbers replacing the grid's; repeatable, threshold only.
    #[arg(long = "rank-tuple")]
    rank_tuples: Vec<List>,
    /// Scenario for the multiplier calibration.
    #[arg(long, default_value = "S1")]
    scenario: Scenario,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Full calibration record as JSON.
    #[arg(long)]
    details: Option<PathBuf>,
    /// Fit the threshold to maxima over every split instead of the trimmed range.
    #[arg(long)]
    untrimmed: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Saved report; with `--truth` scores it without re-detection.
    #[arg(long, requires = "truth")]
    report: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Detection factor numbers; estimated when omitted.
    #[arg(long)]
    ranks: Option<List>,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[command(flatten)]
    modes: ModeArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err.category() {
        "io" => 3,
        "parse" => 4,
        "unsupported-missing" => 5,
        "numerical" => 7,
        _ => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Identify(a) => run_identify(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}

type Result<T> = tfmseg::Result<T>;

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn series_format(path: &Path, format: Option<FormatArg>) -> SeriesFormat {
    format.map_or_else(|| SeriesFormat::from_path(path), Into::into)
}

fn threshold_spec(args: &ThresholdArgs) -> Result<(ThresholdSpec, String)> {
    Ok(match (&args.pi_coeffs, args.threshold) {
        (_, Some(v)) => (ThresholdSpec::Fixed(v), "fixed".into()),
        (Some(path), None) => (
            ThresholdSpec::Coefficients(ThresholdCoefficients::load(path)?),
            format!("file:{}", path.display()),
        ),
        (None, None) => (ThresholdSpec::Coefficients(DEFAULT_COEFFICIENTS), "builtin".into()),
    })
}

fn mode_config(args: &ModeArgs) -> ModeIdConfig {
    ModeIdConfig {
        endpoints: match args.endpoints {
            EndpointArg::Practical => EndpointMode::Practical,
            EndpointArg::Theoretical => EndpointMode::Theoretical,
        },
        zeta_multiplier: args.zeta_mult,
    }
}

fn load_truth(path: &Path) -> Result<GroundTruth> {
    truth_from_json(&read_text(path)?)
}

fn run_detect(a: DetectArgs) -> Result<()> {
    let series = load_series(&a.input, series_format(&a.input, a.format))?;
    let (threshold, source) = threshold_spec(&a.threshold)?;
    let cfg = AnalyzeConfig {
        detect: DetectConfig {
            ranks: a.ranks.map(|r| r.0),
            mu: a.threshold.mu,
            trim: a.threshold.trim,
            threshold,
            ..Default::default()
        },
        mode_id: mode_config(&a.modes),
        mode_informed: a.mode_informed,
    };
    let start = Instant::now();
    let analysis = analyze(&series, &cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut doc = ReportDocument::from_analysis(&analysis, series.dims(), &source);
    if let (Some(path), Some(informed)) = (&a.truth, &analysis.informed) {
        doc.attach_truth_distances(informed, &load_truth(path)?);
    }
    doc.timing = Some(Timing { seconds });
    write_output(a.output.as_deref(), &doc.to_json()?)
}

fn run_identify(a: IdentifyArgs) -> Result<()> {
    let series = load_series(&a.input, series_format(&a.input, a.format))?;
    let mut doc = ReportDocument::load(&a.report)?;
    if doc.config.t != series.len() || doc.config.dims != series.dims() {
        return Err(Error::DimensionMismatch(format!(
            "report describes T={} dims {:?}, series has T={} dims {:?}",
            doc.config.t,
            doc.config.dims,
            series.len(),
            series.dims()
        )));
    }
    let start = Instant::now();
    let loadings = estimate_loadings(&series, &doc.config.ranks)?;
    let stats = PseudoFactorStats::new(&estimate_pseudo_factors(&series, &loadings)?)?;
    let intervals = generate_seeded_intervals(series.len(), doc.config.mu)?;
    let locations = doc.locations();
    let cfg = mode_config(&a.modes);
    let mode_id = identify_modes(&stats, &locations, &intervals.finer, series.obs_size(), &cfg)?;
    doc.config.zeta = mode_id.zeta;
    doc.config.zeta_multiplier = mode_id.zeta_multiplier;
    doc.config.endpoints = mode_id.endpoint_mode;
    doc.mode_identification = mode_entries(&mode_id, series.len(), series.obs_size());
    doc.loadings = None;
    if a.mode_informed {
        let informed =
            mode_informed_loadings(&series, &locations, &mode_id.mode_sets(), &doc.config.ranks)?;
        doc.loadings = Some(loading_summary(&informed));
        if let Some(path) = &a.truth {
            doc.attach_truth_distances(&informed, &load_truth(path)?);
        }
    }
    doc.timing = Some(Timing {
        seconds: start.elapsed().as_secs_f64(),
    });
    write_output(a.output.as_deref(), &doc.to_json()?)
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let sc = a
        .scenario
        .scenario()
        .with_seed(a.scenario.seed, a.stream)
        .with_missing(a.missing);
    let (series, truth) = generate(&sc)?;
    save_series(&series, &a.output, series_format(&a.output, a.format))?;
    let truth_path = a.truth.unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".truth.json");
        p.into()
    });
    std::fs::write(truth_path, truth_to_json(&truth)?)?;
    Ok(())
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    match a.what {
        What::Pi => {
            let mut grid = match a.grid {
                GridArg::Full => PiGrid::full(a.reps),
                GridArg::Reduced => PiGrid::reduced(a.reps),
            };
            if let Some(ts) = a.ts {
                grid.ts = ts.0;
            }
            if !a.shapes.is_empty() {
                grid.dims = a.shapes.into_iter().map(|l| l.0).collect();
            }
            if !a.rank_tuples.is_empty() {
                grid.ranks = a.rank_tuples.into_iter().map(|l| l.0).collect();
            }
            if let Some(seed) = a.seed {
                grid.seed = seed;
            }
            if a.untrimmed {
                grid.scan = NullScan::Untrimmed;
            }
            let cal = calibrate_pi_with_progress(&grid, |i, c| {
                eprintln!("cell {i}: T={} dims={:?} ranks={:?} q={:.6}", c.t, c.dims, c.ranks, c.value);
            })?;
            if let Some(r2) = cal.fit.adj_r2 {
                eprintln!("adjusted R^2 = {r2:.4}");
            }
            if let Some(path) = &a.details {
                std::fs::write(path, serde_json::to_string_pretty(&cal)?)?;
            }
            write_output(a.output.as_deref(), &cal.coefficients.to_file_string())
        }
        What::Zeta => {
            let mut grid = ZetaGrid::full(a.scenario, a.reps);
            if let Some(ts) = a.ts {
                grid.ts = ts.0;
            }
            if !a.shapes.is_empty() {
                grid.dims = a.shapes.into_iter().map(|l| l.0).collect();
            }
            if let Some(seed) = a.seed {
                grid.seed = seed;
            }
            let cal = calibrate_zeta(&grid)?;
            if let Some(path) = &a.details {
                std::fs::write(path, serde_json::to_string_pretty(&cal)?)?;
            }
            write_output(a.output.as_deref(), &format!("zeta_multiplier={:?}\n", cal.multiplier))
        }
    }
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let summary = match (&a.report, &a.truth) {
        (Some(report), Some(truth)) => {
            let doc = ReportDocument::load(report)?;
            let truth = load_truth(truth)?;
            summarize(&[doc.evaluate(&truth)])
        }
        _ => {
            let sc = a.scenario.scenario();
            let (threshold, _) = threshold_spec(&a.threshold)?;
            let cfg = DetectConfig {
                ranks: a.ranks.as_ref().map(|r| r.0.clone()),
                mu: a.threshold.mu,
                trim: a.threshold.trim,
                threshold,
                ..Default::default()
            };
            let outcomes = evaluate_scenario(&sc, a.reps, &cfg, &mode_config(&a.modes))?;
            let reps: Vec<_> = outcomes.into_iter().map(|o| o.metrics).collect();
            summarize(&reps)
        }
    };
    write_output(a.output.as_deref(), &summary.to_csv()?)
}
