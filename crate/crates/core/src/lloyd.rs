//! Lloyd iterations on samples and on the population, with k-means++ and
//! other initializations and full trajectory logging.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest, Solution};
use crate::model::SampleSet;
use crate::objective::empirical_objective;
use crate::population::{Estimate, Population};

/// Size of the model sample used to initialize population runs.
pub const POPULATION_INIT_POOL: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    Given { centers: Solution },
    RandomFromData { m: usize, seed: u64 },
    #[serde(rename = "kmeanspp")]
    KMeansPP { m: usize, seed: u64 },
    RandomBox { m: usize, seed: u64, lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyCellPolicy {
    Error,
    #[default]
    ReseedFarthest,
    /// Leave the center of an empty cell where it is.
    Keep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LloydConfig {
    pub max_iters: usize,
    /// Stop once the largest center displacement falls below this.
    pub tol: f64,
    pub init: Init,
    #[serde(default)]
    pub empty_cell_policy: EmptyCellPolicy,
}

impl LloydConfig {
    /// Defaults: 500 iterations, `tol` 1e-4 for Monte Carlo populations and 1e-8 otherwise.
    pub fn new(init: Init, target: &LloydTarget) -> Self {
        let stochastic = matches!(target, LloydTarget::Population(p) if p.estimator().is_stochastic());
        Self {
            max_iters: 500,
            tol: if stochastic { 1e-4 } else { 1e-8 },
            init,
            empty_cell_policy: EmptyCellPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum LloydTarget<'a> {
    Empirical(&'a SampleSet),
    Population(&'a Population),
}

impl LloydTarget<'_> {
    pub fn objective(&self, solution: &Solution) -> Result<Estimate> {
        match self {
            LloydTarget::Empirical(data) => Ok(Estimate::exact(empirical_objective(solution, data)?)),
            LloydTarget::Population(pop) => pop.objective(solution),
        }
    }

    pub fn step(&self, solution: &Solution, policy: EmptyCellPolicy) -> Result<Solution> {
        match self {
            LloydTarget::Empirical(data) => lloyd_step_empirical(solution, data, policy),
            LloydTarget::Population(pop) => lloyd_step_population(solution, pop, policy),
        }
    }

    fn init_pool(&self, seed: u64) -> Result<SampleSet> {
        match self {
            LloydTarget::Empirical(data) => Ok((*data).clone()),
            LloydTarget::Population(pop) => pop.model().sample(POPULATION_INIT_POOL, seed ^ 0x9e37_79b9_7f4a_7c15),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    /// Iterate 0 is the initialization.
    pub iterates: Vec<Solution>,
    pub objective: Vec<f64>,
    pub objective_stderr: Vec<f64>,
    /// `moved[t]`: largest displacement from iterate `t` to `t + 1`.
    pub moved: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_movement: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_objective_stderr: f64,
    pub final_centers: Solution,
}

impl TrajectoryLog {
    pub fn final_solution(&self) -> &Solution {
        self.iterates.last().expect("trajectory holds the initial iterate")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("trajectory holds the initial objective")
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            converged: self.converged,
            iterations: self.iterations,
            final_movement: self.moved.last().copied().unwrap_or(0.0),
            initial_objective: self.objective[0],
            final_objective: self.final_objective(),
            final_objective_stderr: *self.objective_stderr.last().unwrap(),
            final_centers: self.final_solution().clone(),
        }
    }

    /// `iter,center_index,x1..xd,objective`, one row per center per iterate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.iterates[0].dim();
        let coords: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        writeln!(w, "iter,center_index,{},objective", coords.join(","))?;
        for (t, (sol, g)) in self.iterates.iter().zip(&self.objective).enumerate() {
            for (i, c) in sol.centers().iter().enumerate() {
                let xs: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
                writeln!(w, "{t},{i},{},{g:?}", xs.join(","))?;
            }
        }
        Ok(())
    }
}

/// Indices of points to relocate empty cells to: largest assignment-step
/// distance first, lowest point index on ties, no point used twice.
fn farthest_points(dist2: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist2.len()).collect();
    order.sort_by(|&a, &b| dist2[b].total_cmp(&dist2[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

pub fn lloyd_step_empirical(solution: &Solution, data: &SampleSet, policy: EmptyCellPolicy) -> Result<Solution> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let m = solution.m();
    let d = solution.dim();
    let centers = solution.centers();
    let mut sums = vec![vec![0.0; d]; m];
    let mut counts = vec![0usize; m];
    let mut dist = Vec::with_capacity(data.len());
    for x in &data.points {
        solution.check_dim(x.len())?;
        let (i, d2) = nearest(centers, x);
        counts[i] += 1;
        for (a, xi) in sums[i].iter_mut().zip(x) {
            *a += xi;
        }
        dist.push(d2);
    }
    let empty: Vec<usize> = (0..m).filter(|&i| counts[i] == 0).collect();
    if let (Some(&i), EmptyCellPolicy::Error) = (empty.first(), policy) {
        return Err(Error::EmptyCell(i));
    }
    let reseeds = if policy == EmptyCellPolicy::Keep { Vec::new() } else { farthest_points(&dist, empty.len()) };
    let mut next: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let c = counts[i] as f64;
            sums[i].iter().map(|s| s / c).collect()
        })
        .collect();
    for (&i, &p) in empty.iter().zip(&reseeds) {
        next[i] = data.points[p].clone();
    }
    // More empty cells than points: the extra centers stay put.
    for &i in empty.iter().skip(reseeds.len()) {
        next[i] = centers[i].clone();
    }
    Solution::new(next)
}

pub fn lloyd_step_population(solution: &Solution, pop: &Population, policy: EmptyCellPolicy) -> Result<Solution> {
    solution.require_distinct()?;
    let stats = pop.cell_stats(solution)?;
    let mut next = Vec::with_capacity(solution.m());
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    for i in 0..solution.m() {
        match &stats.centroid[i] {
            Some(c) => next.push(c.clone()),
            None => {
                match policy {
                    EmptyCellPolicy::Error => return Err(Error::EmptyCell(i)),
                    EmptyCellPolicy::Keep => {
                        next.push(solution.center(i).to_vec());
                        continue;
                    }
                    EmptyCellPolicy::ReseedFarthest => {}
                }
                match pop.farthest_point(solution.centers(), &chosen) {
                    Some(x) => {
                        chosen.push(x.clone());
                        next.push(x);
                    }
                    None => next.push(solution.center(i).to_vec()),
                }
            }
        }
    }
    Solution::new(next)
}

pub fn initialize(init: &Init, target: &LloydTarget) -> Result<Solution> {
    match init {
        Init::Given { centers } => Ok(centers.clone()),
        Init::RandomFromData { m, seed } => {
            let pool = target.init_pool(*seed)?;
            if *m == 0 || *m > pool.len() {
                return Err(Error::Precondition(format!("cannot pick {m} centers from {} points", pool.len())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let idx = rand::seq::index::sample(&mut rng, pool.len(), *m);
            Solution::new(idx.iter().map(|i| pool.points[i].clone()).collect())
        }
        Init::KMeansPP { m, seed } => kmeanspp_init(&target.init_pool(*seed)?, *m, *seed),
        Init::RandomBox { m, seed, lower, upper } => {
            if lower.len() != upper.len() || lower.iter().zip(upper).any(|(a, b)| !(a <= b)) {
                return Err(Error::Config("box bounds must have equal length and lower <= upper".into()));
            }
            if *m == 0 {
                return Err(Error::Precondition("need at least one center".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Solution::new(
                (0..*m)
                    .map(|_| lower.iter().zip(upper).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect())
                    .collect(),
            )
        }
    }
}

pub fn run_lloyd(config: &LloydConfig, target: &LloydTarget) -> Result<TrajectoryLog> {
    config.validate()?;
    let mut current = initialize(&config.init, target)?;
    let first = target.objective(&current)?;
    let mut log = TrajectoryLog {
        iterates: vec![current.clone()],
        objective: vec![first.value],
        objective_stderr: vec![first.stderr],
        moved: Vec::new(),
        converged: false,
        iterations: 0,
    };
    for _ in 0..config.max_iters {
        let next = target.step(&current, config.empty_cell_policy)?;
        let moved = current.max_displacement(&next);
        let g = target.objective(&next)?;
        log.iterates.push(next.clone());
        log.objective.push(g.value);
        log.objective_stderr.push(g.stderr);
        log.moved.push(moved);
        log.iterations += 1;
        current = next;
        if moved < config.tol {
            log.converged = true;
            break;
        }
    }
    Ok(log)
}

/// D^2-weighted seeding: first center uniform, then each next point drawn
/// with probability proportional to its squared distance to the chosen set.
pub fn kmeanspp_init(data: &SampleSet, m: usize, seed: u64) -> Result<Solution> {
    let n = data.len();
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("cannot pick {m} centers from {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(m);
    let first = rng.random_range(0..n);
    chosen[first] = true;
    picks.push(first);
    let mut d2: Vec<f64> = data.points.iter().map(|x| crate::vector::dist2(x, &data.points[first])).collect();
    while picks.len() < m {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen[next] = true;
        picks.push(next);
        let c = &data.points[next];
        for (w, x) in d2.iter_mut().zip(&data.points) {
            *w = w.min(crate::vector::dist2(x, c));
        }
        d2[next] = 0.0;
    }
    Solution::new(picks.into_iter().map(|i| data.points[i].clone()).collect())
}
