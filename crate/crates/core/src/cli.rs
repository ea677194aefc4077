//! Command-line front end. Every task reads an optional JSON experiment
//! config, applies flag overrides, writes its artifacts under the output
//! directory and prints a one-line summary.
//!
//! Exit codes: 0 success, 1 runtime error or failed certificate, 2 bad config.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{classify, family_bound_check, AssociationReport, FamilyBoundReport, Thresholds};
use crate::error::{Error, Result};
use crate::geometry::{boundary_quantities, build_voronoi, BoundaryEstimator, BoundaryQuantities, CellStats, Solution};
use crate::lloyd::{run_lloyd, EmptyCellPolicy, Init, LloydConfig, LloydTarget, TrajectorySummary};
use crate::model::{MixtureModel, ModelKind, SampleSet};
use crate::objective::directional_slice;
use crate::population::{Estimator, Population};
use crate::survey::{emit_figure_data, spurious_configuration, survey, RestartInit, SurveyConfig};
use crate::verify::{run_all, Certificate};

pub const OUT_ENV: &str = "KMEANS_LANDSCAPE_OUT";
const DEFAULT_MC_SAMPLES: usize = 200_000;

#[derive(Parser, Debug)]
#[command(name = "kmeans-landscape", version, about = "k-means landscape analysis for mixture models")]
pub struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $KMEANS_LANDSCAPE_OUT, else ./out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a labeled sample from a model.
    Sample(SampleArgs),
    /// Run Lloyd's algorithm on a sample or on the population.
    Lloyd(LloydArgs),
    /// Classify a solution into association blocks.
    Classify(SolutionArgs),
    /// Cell statistics, boundary quantities and family bounds of a solution.
    Analyze(AnalyzeArgs),
    /// Run the verification certificates.
    Verify(VerifyArgs),
    /// Random-restart survey of local minima.
    Survey(SurveyArgs),
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Model JSON file: {"kind": "ball"|"gaussian", "centers": [[..]..], "scale": ..}.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EstimatorArgs {
    /// analytic1d, quadrature1d, mc, or an estimator JSON object.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Monte Carlo sample size.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LloydArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Sample CSV (`label,x1..`); runs empirical Lloyd instead of population Lloyd.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// truth, spurious, random, kmeanspp, box, a JSON init or solution, or a file holding one.
    #[arg(long)]
    pub init: Option<String>,
    /// Number of fitted centers for random inits [default: k].
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// error, reseed_farthest or keep.
    #[arg(long)]
    pub empty_cell_policy: Option<String>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Args, Debug, Default)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub tau_empty: Option<f64>,
    #[arg(long)]
    pub tau_in: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Gaussian truncation level.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolutionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// truth, spurious, a JSON array of centers, or a file holding one.
    #[arg(long)]
    pub solution: Option<String>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub base: SolutionArgs,
    /// Relative-volume level for the boundary family check.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Monte Carlo samples per boundary estimate.
    #[arg(long)]
    pub boundary_samples: Option<usize>,
    /// Also write `slice.csv`: the objective along the first axis of this center.
    #[arg(long)]
    pub slice_center: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub slice_span: f64,
    #[arg(long, default_value_t = 201)]
    pub slice_steps: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run every certificate (the only mode).
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SurveyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// kmeanspp or random_from_data.
    #[arg(long)]
    pub init: Option<String>,
    /// Also write one trajectory CSV per restart.
    #[arg(long)]
    pub trajectories: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

/// Experiment config file. Every field is optional; flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<String>,
    pub model: Option<MixtureModel>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub estimator: Option<Estimator>,
    pub thresholds: Option<Thresholds>,
    pub init: Option<serde_json::Value>,
    pub solution: Option<Solution>,
    pub data: Option<PathBuf>,
    pub m: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub empty_cell_policy: Option<EmptyCellPolicy>,
    pub restarts: Option<usize>,
    pub lambda: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

/// Parses arguments from the process and runs; returns the exit code.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run_cli(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

pub fn run_cli(cli: Cli) -> i32 {
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidModel(_) => 2,
        _ => 1,
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Ctx {
    fn model(&self, path: &Option<PathBuf>) -> Result<MixtureModel> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read model {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("model {}: {e}", p.display())))
            }
            None => self.cfg.model.clone().ok_or_else(|| Error::Config("no model given (--model or config)".into())),
        }
    }

    fn seed(&self, flag: Option<u64>) -> Option<u64> {
        flag.or(self.cfg.seed)
    }

    fn require_seed(&self, flag: Option<u64>, task: &str) -> Result<u64> {
        self.seed(flag).ok_or_else(|| Error::Config(format!("`{task}` is stochastic: --seed is required")))
    }

    fn estimator(&self, args: &EstimatorArgs, model: &MixtureModel, seed: Option<u64>) -> Result<Estimator> {
        let n = args.n.or(self.cfg.n).unwrap_or(DEFAULT_MC_SAMPLES);
        let mc = |seed: Option<u64>| -> Result<Estimator> {
            let seed = seed.ok_or_else(|| Error::Config("Monte Carlo estimation needs --seed".into()))?;
            Ok(Estimator::MonteCarlo { n, seed })
        };
        match args.estimator.as_deref() {
            Some("analytic1d") => Ok(Estimator::Analytic1D),
            Some("quadrature1d") => Ok(Estimator::Quadrature1D { nodes: n.max(2) }),
            Some("mc") | Some("monte_carlo") => mc(seed),
            Some(s) if s.trim_start().starts_with('{') => {
                serde_json::from_str(s).map_err(|e| Error::Config(format!("estimator: {e}")))
            }
            Some(s) => Err(Error::Config(format!("unknown estimator {s:?}"))),
            None => match (&self.cfg.estimator, args.n) {
                (Some(Estimator::MonteCarlo { seed: s, .. }), Some(n)) => Ok(Estimator::MonteCarlo { n, seed: *s }),
                (Some(e), _) => Ok(e.clone()),
                (None, _) if model.kind() == ModelKind::Ball && model.dim() == 1 => Ok(Estimator::Analytic1D),
                (None, _) => mc(seed),
            },
        }
    }

    fn thresholds(&self, args: &ThresholdArgs) -> Thresholds {
        let mut t = self.cfg.thresholds.clone().unwrap_or_default();
        if args.tau_empty.is_some() {
            t.tau_empty = args.tau_empty;
        }
        if let Some(x) = args.tau_in {
            t.tau_in = x;
        }
        if let Some(x) = args.c {
            t.c = x;
        }
        if args.t.is_some() {
            t.t = args.t;
        }
        t
    }

    fn solution(&self, flag: &Option<String>, model: &MixtureModel) -> Result<Solution> {
        match flag {
            Some(s) => parse_solution(s, model),
            None => self.cfg.solution.clone().ok_or_else(|| Error::Config("no solution given (--solution or config)".into())),
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.out.join(name))
    }
}

fn read_json_arg(s: &str) -> Result<serde_json::Value> {
    let text = if s.trim_start().starts_with(['{', '[']) {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| Error::Config(format!("cannot read {s}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{s}: {e}")))
}

pub fn parse_solution(s: &str, model: &MixtureModel) -> Result<Solution> {
    match s {
        "truth" => Solution::new(model.centers().to_vec()),
        "spurious" => spurious_configuration(model).map_err(|e| Error::Config(e.to_string())),
        _ => serde_json::from_value(read_json_arg(s)?).map_err(|e| Error::Config(format!("solution: {e}"))),
    }
}

/// Init keywords. Random schemes need a seed.
pub fn parse_init(s: &str, model: &MixtureModel, m: Option<usize>, seed: Option<u64>) -> Result<Init> {
    let m = m.unwrap_or(model.k());
    let seed_for = |what: &str| seed.ok_or_else(|| Error::Config(format!("--init {what} needs --seed")));
    Ok(match s {
        "truth" | "spurious" => Init::Given { centers: parse_solution(s, model)? },
        "random" => Init::RandomFromData { m, seed: seed_for(s)? },
        "kmeanspp" => Init::KMeansPP { m, seed: seed_for(s)? },
        "box" => {
            let d = model.dim();
            let pad = model.scale() * 3.0;
            let lower = (0..d).map(|j| model.centers().iter().map(|c| c[j]).fold(f64::INFINITY, f64::min) - pad).collect();
            let upper = (0..d).map(|j| model.centers().iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max) + pad).collect();
            Init::RandomBox { m, seed: seed_for(s)?, lower, upper }
        }
        _ => init_from_value(read_json_arg(s)?)?,
    })
}

fn init_from_value(v: serde_json::Value) -> Result<Init> {
    if v.is_array() {
        let centers: Solution = serde_json::from_value(v).map_err(|e| Error::Config(format!("init: {e}")))?;
        return Ok(Init::Given { centers });
    }
    serde_json::from_value(v).map_err(|e| Error::Config(format!("init: {e}")))
}

fn parse_policy(s: &str) -> Result<EmptyCellPolicy> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| Error::Config(format!("unknown empty-cell policy {s:?}")))
}

pub fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let task = match &cli.command {
        Command::Sample(_) => "sample",
        Command::Lloyd(_) => "lloyd",
        Command::Classify(_) => "classify",
        Command::Analyze(_) => "analyze",
        Command::Verify(_) => "verify",
        Command::Survey(_) => "survey",
    };
    if let Some(t) = &cfg.task {
        if t != task {
            return Err(Error::Config(format!("config is for task `{t}`, not `{task}`")));
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Sample(a) => cmd_sample(&ctx, a),
        Command::Lloyd(a) => cmd_lloyd(&ctx, a),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::Analyze(a) => cmd_analyze(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Survey(a) => cmd_survey(&ctx, a),
    }
}

fn cmd_sample(ctx: &Ctx, a: SampleArgs) -> Result<i32> {
    let model = ctx.model(&a.model.model)?;
    let seed = ctx.require_seed(a.model.seed, "sample")?;
    let n = a.n.or(ctx.cfg.n).ok_or_else(|| Error::Config("--n is required".into()))?;
    let data = model.sample(n, seed)?;
    let mut w = ctx.create("samples.csv")?;
    data.write_csv(&mut w)?;
    w.flush()?;
    println!("sample: n={n} d={} seed={seed} -> {}", model.dim(), ctx.out.join("samples.csv").display());
    Ok(0)
}

#[derive(Serialize)]
struct LloydOutput<'a> {
    target: &'a str,
    estimator: Option<&'a Estimator>,
    init: &'a Init,
    max_iters: usize,
    tol: f64,
    summary: TrajectorySummary,
    classification: Option<&'a AssociationReport>,
}

fn cmd_lloyd(ctx: &Ctx, a: LloydArgs) -> Result<i32> {
    let model = ctx.model(&a.model.model)?;
    let seed = ctx.seed(a.model.seed);
    let m = a.m.or(ctx.cfg.m);
    let init = match (&a.init, &ctx.cfg.init) {
        (Some(s), _) => parse_init(s, &model, m, seed)?,
        (None, Some(v)) => match v.as_str() {
            Some(s) => parse_init(s, &model, m, seed)?,
            None => init_from_value(v.clone())?,
        },
        (None, None) => return Err(Error::Config("no init given (--init or config)".into())),
    };
    let data_path = a.data.clone().or_else(|| ctx.cfg.data.clone());
    let data = match &data_path {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Config(format!("cannot read data {}: {e}", p.display())))?;
            Some(SampleSet::read_csv(f)?)
        }
        None => None,
    };
    let pop_est = ctx.estimator(&a.estimator, &model, seed)?;
    let pop = Population::new(model.clone(), pop_est.clone())?;
    let target = match &data {
        Some(d) => LloydTarget::Empirical(d),
        None => LloydTarget::Population(&pop),
    };
    let mut lc = LloydConfig::new(init, &target);
    if let Some(x) = a.max_iters.or(ctx.cfg.max_iters) {
        lc.max_iters = x;
    }
    if let Some(x) = a.tol.or(ctx.cfg.tol) {
        lc.tol = x;
    }
    lc.empty_cell_policy = match &a.empty_cell_policy {
        Some(s) => parse_policy(s)?,
        None => ctx.cfg.empty_cell_policy.unwrap_or_default(),
    };
    lc.validate()?;
    let log = run_lloyd(&lc, &target)?;
    let mut w = ctx.create("trajectory.csv")?;
    log.write_csv(&mut w)?;
    w.flush()?;

    let thresholds = ctx.thresholds(&a.thresholds);
    let report = match log.final_solution().require_distinct() {
        Ok(()) => Some(classify(log.final_solution(), &pop, &thresholds)?),
        Err(_) => None,
    };
    let out = LloydOutput {
        target: if data.is_some() { "empirical" } else { "population" },
        estimator: data.is_none().then_some(&pop_est),
        init: &lc.init,
        max_iters: lc.max_iters,
        tol: lc.tol,
        summary: log.summary(),
        classification: report.as_ref(),
    };
    ctx.write_json("lloyd.json", &out)?;
    if let Some(rep) = &report {
        emit_figure_data(&ctx.out.join("figure"), &log, &model, rep)?;
    }
    println!(
        "lloyd: converged={} iterations={} objective={:.6e} final_movement={:.3e} -> {}",
        log.converged,
        log.iterations,
        log.final_objective(),
        log.moved.last().copied().unwrap_or(0.0),
        ctx.out.display()
    );
    Ok(0)
}

fn solution_setup(ctx: &Ctx, a: &SolutionArgs) -> Result<(MixtureModel, Solution, Population)> {
    let model = ctx.model(&a.model.model)?;
    let solution = ctx.solution(&a.solution, &model)?;
    let est = ctx.estimator(&a.estimator, &model, ctx.seed(a.model.seed))?;
    let pop = Population::new(model.clone(), est)?;
    Ok((model, solution, pop))
}

fn cmd_classify(ctx: &Ctx, a: SolutionArgs) -> Result<i32> {
    let (_, solution, pop) = solution_setup(ctx, &a)?;
    let report = classify(&solution, &pop, &ctx.thresholds(&a.thresholds))?;
    ctx.write_json("classification.json", &report)?;
    let mut w = ctx.create("blocks.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "classify: {} valid_partition={} within_bounds={} -> {}",
        crate::survey::class_label(&report),
        report.valid_partition,
        report.within_bounds(),
        ctx.out.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct Analysis {
    solution: Solution,
    adjacency: Vec<(usize, usize)>,
    cell_stats: CellStats,
    boundaries: Vec<BoundaryRecord>,
    family: FamilyBoundReport,
}

#[derive(Serialize)]
struct BoundaryRecord {
    i: usize,
    j: usize,
    s: usize,
    #[serde(flatten)]
    quantities: BoundaryQuantities,
}

fn cmd_analyze(ctx: &Ctx, a: AnalyzeArgs) -> Result<i32> {
    let (model, solution, pop) = solution_setup(ctx, &a.base)?;
    let seed = ctx.seed(a.base.model.seed);
    if model.dim() >= 2 && seed.is_none() {
        return Err(Error::Config("boundary estimates in d >= 2 are stochastic: --seed is required".into()));
    }
    let mut be = BoundaryEstimator { seed: seed.unwrap_or(0), ..BoundaryEstimator::default() };
    if let Some(n) = a.boundary_samples {
        be.samples = n;
    }
    let vor = build_voronoi(&solution)?;
    let mut boundaries = Vec::new();
    for &(i, j) in &vor.adjacency {
        for s in 0..model.k() {
            boundaries.push(BoundaryRecord { i, j, s, quantities: boundary_quantities(&solution, &model, i, j, s, &be)? });
        }
    }
    let lambda = a.lambda.or(ctx.cfg.lambda).unwrap_or(1.0);
    let family = family_bound_check(&solution, &model, &be, lambda)?;
    let analysis = Analysis {
        solution: solution.clone(),
        adjacency: vor.adjacency.clone(),
        cell_stats: pop.cell_stats(&solution)?,
        boundaries,
        family,
    };
    ctx.write_json("analysis.json", &analysis)?;
    if let Some(i) = a.slice_center {
        if i >= solution.m() {
            return Err(Error::Config(format!("--slice-center {i} out of range")));
        }
        let mut dir = vec![vec![0.0; solution.dim()]; solution.m()];
        dir[i][0] = 1.0;
        let steps = a.slice_steps.max(2);
        let grid: Vec<f64> = (0..steps).map(|q| -a.slice_span + 2.0 * a.slice_span * q as f64 / (steps - 1) as f64).collect();
        let slice = directional_slice(&pop, &solution, &dir, &grid)?;
        let mut w = ctx.create("slice.csv")?;
        slice.write_csv(&mut w)?;
        w.flush()?;
    }
    println!(
        "analyze: cells={} adjacent_pairs={} family_violations={} -> {}",
        solution.m(),
        analysis.adjacency.len(),
        analysis.family.violations.len(),
        ctx.out.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct VerifySummary {
    seed: u64,
    passed: usize,
    failed: usize,
    skipped: usize,
    inconclusive: usize,
    certificates: Vec<Certificate>,
}

fn cmd_verify(ctx: &Ctx, a: VerifyArgs) -> Result<i32> {
    if !a.all {
        return Err(Error::Config("use `verify --all`".into()));
    }
    let seed = ctx.require_seed(a.seed, "verify")?;
    let mut certs = run_all(seed)?;
    std::fs::create_dir_all(ctx.out.join("certificates"))?;
    for c in &mut certs {
        let rel = format!("certificates/{}.csv", c.name);
        c.artifacts.push(rel.clone());
        let mut w = ctx.create(&rel)?;
        c.write_csv(&mut w)?;
        w.flush()?;
    }
    use crate::verify::Status;
    let count = |s: Status| certs.iter().filter(|c| c.status == s).count();
    let summary = VerifySummary {
        seed,
        passed: count(Status::Passed),
        failed: count(Status::Failed),
        skipped: count(Status::Skipped),
        inconclusive: count(Status::Inconclusive),
        certificates: certs,
    };
    ctx.write_json("verify_summary.json", &summary)?;
    for c in &summary.certificates {
        let failed: Vec<&str> = c.failed_checks().iter().map(|x| x.name.as_str()).collect();
        println!("verify: {:<28} {:?}{}", c.name, c.status, if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join("; ")) });
    }
    println!(
        "verify: passed={} failed={} skipped={} inconclusive={} -> {}",
        summary.passed,
        summary.failed,
        summary.skipped,
        summary.inconclusive,
        ctx.out.join("verify_summary.json").display()
    );
    Ok(if summary.certificates.iter().any(Certificate::is_failure) { 1 } else { 0 })
}

fn cmd_survey(ctx: &Ctx, a: SurveyArgs) -> Result<i32> {
    let model = ctx.model(&a.model.model)?;
    let seed = ctx.require_seed(a.model.seed, "survey")?;
    let est = ctx.estimator(&a.estimator, &model, Some(seed))?;
    let pop = Population::new(model, est)?;
    let restarts = a.restarts.or(ctx.cfg.restarts).ok_or_else(|| Error::Config("--restarts is required".into()))?;
    let mut sc = SurveyConfig::new(restarts, seed);
    sc.m = a.m.or(ctx.cfg.m);
    sc.max_iters = ctx.cfg.max_iters;
    sc.tol = ctx.cfg.tol;
    sc.thresholds = ctx.thresholds(&a.thresholds);
    if let Some(s) = &a.init {
        sc.init = match s.as_str() {
            "kmeanspp" => RestartInit::Kmeanspp,
            "random" | "random_from_data" => RestartInit::RandomFromData,
            _ => return Err(Error::Config(format!("unknown survey init {s:?}"))),
        };
    }
    let (report, logs) = survey(&pop, &sc)?;
    ctx.write_json("survey.json", &report)?;
    let mut w = ctx.create("survey_histogram.csv")?;
    writeln!(w, "class,count")?;
    for (class, n) in &report.histogram {
        writeln!(w, "{class},{n}")?;
    }
    w.flush()?;
    if a.trajectories {
        std::fs::create_dir_all(ctx.out.join("trajectories"))?;
        for (r, log) in logs.iter().enumerate() {
            let mut w = ctx.create(&format!("trajectories/restart_{r:04}.csv"))?;
            log.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    println!(
        "survey: restarts={} converged={} truth={} invalid={} classes={} -> {}",
        report.restarts,
        report.converged,
        report.truth_hits,
        report.invalid_partitions,
        report.histogram.len(),
        ctx.out.display()
    );
    Ok(0)
}
