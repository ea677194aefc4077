//! Random-restart surveys of the population landscape and figure data export.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify, AssociationReport, Thresholds};
use crate::error::{Error, Result};
use crate::geometry::Solution;
use crate::lloyd::{run_lloyd, EmptyCellPolicy, Init, LloydConfig, LloydTarget, TrajectoryLog};
use crate::model::{MixtureModel, ModelKind};
use crate::population::Population;
use crate::vector::{midpoint, unit_ball_volume};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartInit {
    #[default]
    Kmeanspp,
    RandomFromData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Number of fitted centers; defaults to the number of components.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub init: RestartInit,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl SurveyConfig {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, m: None, init: RestartInit::default(), max_iters: None, tol: None, thresholds: Thresholds::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub restart: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub objective_stderr: f64,
    pub valid_partition: bool,
    /// Block signature such as `ManyFitOne(2:1)+OneFitMany(1:2)+OneFitOne(1:1)`.
    pub class: String,
    pub is_truth: bool,
    pub final_centers: Solution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub restarts: usize,
    pub seed: u64,
    pub converged: usize,
    pub truth_hits: usize,
    pub invalid_partitions: usize,
    /// Converged runs per class label.
    pub histogram: BTreeMap<String, usize>,
    pub runs: Vec<RunOutcome>,
}

pub fn class_label(report: &AssociationReport) -> String {
    report
        .signature()
        .iter()
        .map(|(k, f, t)| format!("{}({f}:{t})", k.as_str()))
        .collect::<Vec<_>>()
        .join("+")
}

/// Whether every block is a one-fit-one block and all components are claimed.
pub fn is_truth(report: &AssociationReport, k: usize) -> bool {
    report.valid_partition
        && report.blocks.len() == k
        && report.blocks.iter().all(|b| b.kind == crate::classify::AssociationKind::OneFitOne)
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(restart as u64)
}

/// Runs seeded restarts of population Lloyd in parallel and classifies each
/// converged solution. Results are ordered by restart index.
pub fn survey(pop: &Population, cfg: &SurveyConfig) -> Result<(SurveyReport, Vec<TrajectoryLog>)> {
    if cfg.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let target = LloydTarget::Population(pop);
    let k = pop.model().k();
    let m = cfg.m.unwrap_or(k);
    let results: Vec<Result<(RunOutcome, TrajectoryLog)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let seed = restart_seed(cfg.seed, r);
            let init = match cfg.init {
                RestartInit::Kmeanspp => Init::KMeansPP { m, seed },
                RestartInit::RandomFromData => Init::RandomFromData { m, seed },
            };
            let mut lc = LloydConfig::new(init, &target);
            if let Some(n) = cfg.max_iters {
                lc.max_iters = n;
            }
            if let Some(t) = cfg.tol {
                lc.tol = t;
            }
            lc.empty_cell_policy = EmptyCellPolicy::ReseedFarthest;
            let log = run_lloyd(&lc, &target)?;
            let rep = classify(log.final_solution(), pop, &cfg.thresholds)?;
            let outcome = RunOutcome {
                restart: r,
                seed,
                converged: log.converged,
                iterations: log.iterations,
                objective: log.final_objective(),
                objective_stderr: *log.objective_stderr.last().unwrap(),
                valid_partition: rep.valid_partition,
                class: class_label(&rep),
                is_truth: is_truth(&rep, k),
                final_centers: log.final_solution().clone(),
            };
            Ok((outcome, log))
        })
        .collect();
    let mut runs = Vec::with_capacity(cfg.restarts);
    let mut logs = Vec::with_capacity(cfg.restarts);
    for res in results {
        let (o, l) = res?;
        runs.push(o);
        logs.push(l);
    }
    let mut histogram = BTreeMap::new();
    for o in runs.iter().filter(|o| o.converged) {
        *histogram.entry(o.class.clone()).or_insert(0) += 1;
    }
    let report = SurveyReport {
        restarts: cfg.restarts,
        seed: cfg.seed,
        converged: runs.iter().filter(|o| o.converged).count(),
        truth_hits: runs.iter().filter(|o| o.converged && o.is_truth).count(),
        invalid_partitions: runs.iter().filter(|o| o.converged && !o.valid_partition).count(),
        histogram,
        runs,
    };
    Ok((report, logs))
}

/// Square layout of four unit-variance Gaussian clusters with side `side`.
pub fn square_gmm(side: f64, sigma: f64) -> Result<MixtureModel> {
    MixtureModel::gaussian(
        vec![vec![0.0, 0.0], vec![side, 0.0], vec![side, side], vec![0.0, side]],
        sigma,
    )
}

/// Two centers straddling cluster 0, one between clusters 1 and 2, one near
/// cluster 3, offset slightly so Lloyd has to move.
pub fn square_spurious_init(side: f64) -> Result<Solution> {
    let h = 0.15 * side;
    Solution::new(vec![
        vec![-h, 0.1 * h],
        vec![h, -0.1 * h],
        vec![side + 0.1 * h, 0.5 * side + 0.2 * h],
        vec![0.1 * h, side - 0.1 * h],
    ])
}

/// Two centers splitting component 0 along the first axis at its half-cell
/// centers of mass, one at the midpoint of the last two components, one at
/// each remaining component. Needs `k >= 3`.
pub fn spurious_configuration(model: &MixtureModel) -> Result<Solution> {
    let k = model.k();
    if k < 3 {
        return Err(Error::Precondition(format!("spurious configuration needs k >= 3, got {k}")));
    }
    let h = match model.kind() {
        ModelKind::Ball => {
            let d = model.dim();
            2.0 * model.scale() * unit_ball_volume(d - 1) / ((d + 1) as f64 * unit_ball_volume(d))
        }
        ModelKind::Gaussian => model.scale() * (2.0 / std::f64::consts::PI).sqrt(),
    };
    let mut centers = Vec::with_capacity(k);
    for sign in [-1.0, 1.0] {
        let mut c = model.center(0).to_vec();
        c[0] += sign * h;
        centers.push(c);
    }
    centers.extend(model.centers()[1..k - 2].iter().cloned());
    centers.push(midpoint(model.center(k - 2), model.center(k - 1)));
    Solution::new(centers)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureMeta {
    pub dim: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub classification: String,
    pub kinds: Vec<String>,
    pub valid_partition: bool,
    /// False for d != 2: only tables are written and no trajectory plot applies.
    pub plottable: bool,
    pub report: AssociationReport,
}

/// Writes `trajectory.csv`, `model.csv` and `meta.json` into `dir`. The
/// trajectory omits the terminal iterate of a converged run, whose movement is
/// below tolerance.
pub fn emit_figure_data(
    dir: &Path,
    log: &TrajectoryLog,
    model: &MixtureModel,
    report: &AssociationReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut trimmed = log.clone();
    if log.converged && trimmed.iterates.len() > 1 {
        trimmed.iterates.pop();
        trimmed.objective.pop();
    }
    let traj = dir.join("trajectory.csv");
    let mut w = BufWriter::new(File::create(&traj)?);
    trimmed.write_csv(&mut w)?;
    w.flush()?;

    let model_path = dir.join("model.csv");
    let mut w = BufWriter::new(File::create(&model_path)?);
    write_model_csv(model, &mut w)?;
    w.flush()?;

    let meta = FigureMeta {
        dim: model.dim(),
        converged: log.converged,
        iterations: log.iterations,
        final_objective: log.final_objective(),
        classification: class_label(report),
        kinds: report.blocks.iter().map(|b| b.kind.as_str().to_string()).collect(),
        valid_partition: report.valid_partition,
        plottable: model.dim() == 2,
        report: report.clone(),
    };
    let meta_path = dir.join("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(vec![traj, model_path, meta_path])
}

/// `component,x1..xd,scale`, one row per true center.
pub fn write_model_csv<W: Write>(model: &MixtureModel, mut w: W) -> Result<()> {
    let coords: Vec<String> = (1..=model.dim()).map(|j| format!("x{j}")).collect();
    writeln!(w, "component,{},scale", coords.join(","))?;
    for (s, c) in model.centers().iter().enumerate() {
        let xs: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{s},{},{:?}", xs.join(","), model.scale())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::AssociationKind;
    use crate::population::Estimator;

    #[test]
    fn spurious_init_reaches_three_block_minimum() {
        let model = square_gmm(10.0, 1.0).unwrap();
        let pop = Population::new(model.clone(), Estimator::MonteCarlo { n: 40_000, seed: 3 }).unwrap();
        let target = LloydTarget::Population(&pop);
        let cfg = LloydConfig::new(Init::Given { centers: square_spurious_init(10.0).unwrap() }, &target);
        let log = run_lloyd(&cfg, &target).unwrap();
        assert!(log.converged);
        let rep = classify(log.final_solution(), &pop, &Thresholds::default()).unwrap();
        assert_eq!(
            rep.signature(),
            vec![(AssociationKind::ManyFitOne, 2, 1), (AssociationKind::OneFitMany, 1, 2), (AssociationKind::OneFitOne, 1, 1)]
        );
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_figure_data(dir.path(), &log, &model, &rep).unwrap();
        assert_eq!(paths.len(), 3);
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert_eq!(meta["classification"], "ManyFitOne(2:1)+OneFitMany(1:2)+OneFitOne(1:1)");
    }

    #[test]
    fn spurious_configuration_matches_known_points() {
        let m = crate::verify::three_ball_model(0.3).unwrap();
        assert_eq!(spurious_configuration(&m).unwrap(), crate::verify::three_ball_spurious(0.3));
        let sq = spurious_configuration(&square_gmm(10.0, 1.0).unwrap()).unwrap();
        assert_eq!(sq.center(2), &[10.0, 0.0]);
        assert_eq!(sq.center(3), &[5.0, 10.0]);
        assert!(spurious_configuration(&MixtureModel::ball_1d(&[0.0, 3.0], 0.5).unwrap()).is_err());
    }

    #[test]
    fn truth_init_emits_one_row_per_center() {
        let model = square_gmm(10.0, 1.0).unwrap();
        let pop = Population::new(model.clone(), Estimator::MonteCarlo { n: 40_000, seed: 3 }).unwrap();
        let target = LloydTarget::Population(&pop);
        let mut cfg = LloydConfig::new(Init::Given { centers: Solution::new(model.centers().to_vec()).unwrap() }, &target);
        cfg.tol = 0.1;
        let log = run_lloyd(&cfg, &target).unwrap();
        let rep = classify(log.final_solution(), &pop, &Thresholds::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_figure_data(dir.path(), &log, &model, &rep).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("iter,center_index,x1,x2,objective\n"));
    }

    #[test]
    fn survey_is_deterministic_and_ordered() {
        let model = square_gmm(10.0, 1.0).unwrap();
        let pop = Population::new(model, Estimator::MonteCarlo { n: 8_000, seed: 1 }).unwrap();
        let cfg = SurveyConfig::new(6, 5);
        let (a, _) = survey(&pop, &cfg).unwrap();
        let (b, _) = survey(&pop, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.runs.iter().enumerate().all(|(i, r)| r.restart == i));
        assert_eq!(a.histogram.values().sum::<usize>(), a.converged);
    }
}
