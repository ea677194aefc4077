//! Population-level evaluation: the objective `G`, cell statistics and
//! the directional derivative under one of three estimators.
//!
//! A [`Population`] owns its model together with any frozen Monte Carlo
//! sample, so every evaluation made through the same value reuses the same
//! random numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_direction, nearest, CellStats, Solution};
use crate::model::{MixtureModel, ModelKind, CHUNK};
use crate::vector::{dot, sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", deny_unknown_fields)]
pub enum Estimator {
    /// Exact piecewise integrals; d = 1 Ball models only.
    #[serde(rename = "analytic1d")]
    Analytic1D,
    /// Composite Simpson rule between breakpoints; d = 1 Ball models only.
    #[serde(rename = "quadrature1d")]
    Quadrature1D { nodes: usize },
    /// Frozen stratified sample with `ceil(n / k)` points per component.
    #[serde(rename = "monte_carlo")]
    MonteCarlo { n: usize, seed: u64 },
}

impl Estimator {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Estimator::MonteCarlo { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

#[derive(Clone, Debug)]
struct Frozen {
    per_component: usize,
    /// Row-major coordinates, one buffer per component.
    points: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Population {
    model: MixtureModel,
    estimator: Estimator,
    frozen: Option<Frozen>,
}

impl Population {
    pub fn new(model: MixtureModel, estimator: Estimator) -> Result<Self> {
        let frozen = match estimator {
            Estimator::Analytic1D | Estimator::Quadrature1D { .. } => {
                if model.dim() != 1 || model.kind() != ModelKind::Ball {
                    return Err(Error::UnsupportedEstimator(format!(
                        "{estimator:?} needs a one-dimensional ball model"
                    )));
                }
                if let Estimator::Quadrature1D { nodes } = estimator {
                    if nodes < 2 {
                        return Err(Error::Config("quadrature needs at least 2 nodes per piece".into()));
                    }
                }
                None
            }
            Estimator::MonteCarlo { n, seed } => {
                if n == 0 {
                    return Err(Error::EmptyData);
                }
                Some(freeze(&model, n, seed))
            }
        };
        Ok(Self { model, estimator, frozen })
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    /// Points per component of the frozen sample (None for deterministic estimators).
    pub fn samples_per_component(&self) -> Option<usize> {
        self.frozen.as_ref().map(|f| f.per_component)
    }

    /// Frozen points of component `s`, flattened row-major.
    pub fn frozen_points(&self, s: usize) -> Option<&[f64]> {
        self.frozen.as_ref().map(|f| f.points[s].as_slice())
    }

    pub fn objective(&self, solution: &Solution) -> Result<Estimate> {
        solution.check_dim(self.model.dim())?;
        match self.estimator {
            Estimator::Analytic1D => Ok(Estimate::exact(self.analytic_objective(solution))),
            Estimator::Quadrature1D { nodes } => Ok(Estimate::exact(self.quadrature_objective(solution, nodes))),
            Estimator::MonteCarlo { .. } => {
                let centers = solution.centers();
                Ok(self.mc_mean(|x| nearest(centers, x).1))
            }
        }
    }

    pub fn cell_stats(&self, solution: &Solution) -> Result<CellStats> {
        solution.check_dim(self.model.dim())?;
        match self.estimator {
            Estimator::Analytic1D => Ok(self.analytic_cell_stats(solution)),
            Estimator::Quadrature1D { .. } => Err(Error::UnsupportedEstimator(
                "cell statistics need analytic1d or monte_carlo".into(),
            )),
            Estimator::MonteCarlo { .. } => Ok(self.mc_cell_stats(solution)),
        }
    }

    /// `-sum_i int_{V_i} 2 <v_i, x - b_i> f(x) dx`.
    pub fn directional_derivative(&self, solution: &Solution, direction: &[Vec<f64>]) -> Result<Estimate> {
        solution.check_dim(self.model.dim())?;
        solution.require_distinct()?;
        check_direction(solution, direction)?;
        match self.estimator {
            Estimator::MonteCarlo { .. } => {
                let centers = solution.centers();
                Ok(self.mc_mean(|x| {
                    let (i, _) = nearest(centers, x);
                    -2.0 * dot(&direction[i], &sub(x, &centers[i]))
                }))
            }
            _ => {
                let stats = self.cell_stats(solution)?;
                let k = self.model.k() as f64;
                let mut total = 0.0;
                for (i, v) in direction.iter().enumerate() {
                    for (s, com) in stats.com[i].iter().enumerate() {
                        if let Some(c) = com {
                            total -= stats.mass[i][s] * 2.0 * dot(v, &sub(c, solution.center(i)));
                        }
                    }
                }
                Ok(Estimate::exact(total / k))
            }
        }
    }

    /// Support point farthest from its nearest center, skipping `exclude`.
    /// Ties resolve to the first candidate in a fixed enumeration order.
    pub(crate) fn farthest_point(&self, centers: &[Vec<f64>], exclude: &[Vec<f64>]) -> Option<Vec<f64>> {
        let better = |a: &(f64, usize), b: &(f64, usize)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
        match &self.frozen {
            None => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for x in self.analytic_candidates(centers) {
                    if exclude.iter().any(|e| e[0] == x) {
                        continue;
                    }
                    let d = nearest(centers, &[x]).1;
                    if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                        best = Some((d, vec![x]));
                    }
                }
                best.map(|(_, x)| x)
            }
            Some(f) => {
                let d = self.model.dim();
                let per = f.per_component;
                let mut best: Option<(f64, usize)> = None;
                for (s, pts) in f.points.iter().enumerate() {
                    let local = pts
                        .par_chunks(CHUNK * d)
                        .enumerate()
                        .filter_map(|(c, chunk)| {
                            let mut b: Option<(f64, usize)> = None;
                            for (p, x) in chunk.chunks_exact(d).enumerate() {
                                if exclude.iter().any(|e| e.as_slice() == x) {
                                    continue;
                                }
                                let cand = (nearest(centers, x).1, s * per + c * CHUNK + p);
                                if b.as_ref().is_none_or(|cur| better(&cand, cur)) {
                                    b = Some(cand);
                                }
                            }
                            b
                        })
                        .collect::<Vec<_>>();
                    for cand in local {
                        if best.as_ref().is_none_or(|cur| better(&cand, cur)) {
                            best = Some(cand);
                        }
                    }
                }
                best.map(|(_, idx)| {
                    let (s, p) = (idx / per, idx % per);
                    f.points[s][p * d..(p + 1) * d].to_vec()
                })
            }
        }
    }

    fn analytic_candidates(&self, centers: &[Vec<f64>]) -> Vec<f64> {
        let r = self.model.scale();
        let mut xs = Vec::new();
        for c in self.model.centers() {
            xs.push(c[0] - r);
            xs.push(c[0] + r);
        }
        let cells = cells_1d(centers);
        for (lo, hi) in cells.into_iter().flatten() {
            for b in [lo, hi] {
                if b.is_finite() && self.model.centers().iter().any(|c| (b - c[0]).abs() <= r) {
                    xs.push(b);
                }
            }
        }
        xs
    }

    /// `(1/k) sum_s mean_s g` with stderr `(1/k) sqrt(sum_s var_s / n_s)`.
    fn mc_mean(&self, g: impl Fn(&[f64]) -> f64 + Sync) -> Estimate {
        let f = self.frozen.as_ref().expect("monte carlo estimator");
        let d = self.model.dim();
        let k = self.model.k() as f64;
        let n = f.per_component as f64;
        let mut value = 0.0;
        let mut var = 0.0;
        for pts in &f.points {
            let (s1, s2) = fold_chunks(
                pts,
                d,
                || (0.0, 0.0),
                |acc, x| {
                    let y = g(x);
                    acc.0 += y;
                    acc.1 += y * y;
                },
                |acc, p| {
                    acc.0 += p.0;
                    acc.1 += p.1;
                },
            );
            let mean = s1 / n;
            value += mean;
            var += (s2 / n - mean * mean).max(0.0) / n;
        }
        Estimate { value: value / k, stderr: var.sqrt() / k }
    }

    fn mc_cell_stats(&self, solution: &Solution) -> CellStats {
        let f = self.frozen.as_ref().expect("monte carlo estimator");
        let d = self.model.dim();
        let m = solution.m();
        let k = self.model.k();
        let n = f.per_component as f64;
        let centers = solution.centers();

        #[derive(Clone)]
        struct Acc {
            count: Vec<usize>,
            sum: Vec<Vec<f64>>,
            sq: Vec<f64>,
        }
        let fresh = || Acc { count: vec![0; m], sum: vec![vec![0.0; d]; m], sq: vec![0.0; m] };

        let mut mass = vec![vec![0.0; k]; m];
        let mut mass_stderr = vec![vec![0.0; k]; m];
        let mut com = vec![vec![None; k]; m];
        let mut pooled = fresh();
        for (s, pts) in f.points.iter().enumerate() {
            let acc = fold_chunks(
                pts,
                d,
                fresh,
                |acc, x| {
                    let (i, _) = nearest(centers, x);
                    acc.count[i] += 1;
                    for (a, xi) in acc.sum[i].iter_mut().zip(x) {
                        *a += xi;
                    }
                    acc.sq[i] += dot(x, x);
                },
                |acc, p| {
                    for i in 0..m {
                        acc.count[i] += p.count[i];
                        acc.sq[i] += p.sq[i];
                        for (a, b) in acc.sum[i].iter_mut().zip(&p.sum[i]) {
                            *a += b;
                        }
                    }
                },
            );
            for i in 0..m {
                let p = acc.count[i] as f64 / n;
                mass[i][s] = p;
                mass_stderr[i][s] = (p * (1.0 - p) / n).sqrt();
                if acc.count[i] > 0 {
                    let c = acc.count[i] as f64;
                    com[i][s] = Some(acc.sum[i].iter().map(|v| v / c).collect());
                }
                pooled.count[i] += acc.count[i];
                pooled.sq[i] += acc.sq[i];
                for (a, b) in pooled.sum[i].iter_mut().zip(&acc.sum[i]) {
                    *a += b;
                }
            }
        }
        let mut centroid = vec![None; m];
        let mut centroid_stderr = vec![0.0; m];
        for i in 0..m {
            if pooled.count[i] > 0 {
                let c = pooled.count[i] as f64;
                let mean: Vec<f64> = pooled.sum[i].iter().map(|v| v / c).collect();
                let spread = (pooled.sq[i] / c - dot(&mean, &mean)).max(0.0);
                centroid_stderr[i] = (spread / c).sqrt();
                centroid[i] = Some(mean);
            }
        }
        let total_mass = mass.iter().map(|row| row.iter().sum::<f64>() / k as f64).collect();
        CellStats { mass, com, total_mass, centroid, mass_stderr, centroid_stderr, estimated: true }
    }

    fn analytic_cell_stats(&self, solution: &Solution) -> CellStats {
        let r = self.model.scale();
        let k = self.model.k();
        let m = solution.m();
        let cells = cells_1d(solution.centers());
        let mut mass = vec![vec![0.0; k]; m];
        let mut com = vec![vec![None; k]; m];
        for (i, cell) in cells.iter().enumerate() {
            let Some((lo, hi)) = *cell else { continue };
            for (s, c) in self.model.centers().iter().enumerate() {
                let a = lo.max(c[0] - r);
                let b = hi.min(c[0] + r);
                if b > a {
                    mass[i][s] = (b - a) / (2.0 * r);
                    com[i][s] = Some(vec![0.5 * (a + b)]);
                }
            }
        }
        let centroid = (0..m)
            .map(|i| {
                let w: f64 = mass[i].iter().sum();
                (w > 0.0).then(|| {
                    let num: f64 = (0..k).filter_map(|s| com[i][s].as_ref().map(|c| mass[i][s] * c[0])).sum();
                    vec![num / w]
                })
            })
            .collect();
        let total_mass = mass.iter().map(|row| row.iter().sum::<f64>() / k as f64).collect();
        CellStats {
            mass,
            com,
            total_mass,
            centroid,
            mass_stderr: vec![vec![0.0; k]; m],
            centroid_stderr: vec![0.0; m],
            estimated: false,
        }
    }

    fn analytic_objective(&self, solution: &Solution) -> f64 {
        let r = self.model.scale();
        let cells = cells_1d(solution.centers());
        let mut total = 0.0;
        for (i, cell) in cells.iter().enumerate() {
            let Some((lo, hi)) = *cell else { continue };
            let beta = solution.center(i)[0];
            for c in self.model.centers() {
                let a = lo.max(c[0] - r);
                let b = hi.min(c[0] + r);
                if b > a {
                    total += ((b - beta).powi(3) - (a - beta).powi(3)) / 3.0;
                }
            }
        }
        total / (2.0 * r * self.model.k() as f64)
    }

    fn quadrature_objective(&self, solution: &Solution, nodes: usize) -> f64 {
        let r = self.model.scale();
        let centers = solution.centers();
        let mut sorted: Vec<f64> = centers.iter().map(|c| c[0]).collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let bisectors: Vec<f64> = sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let panels = nodes + nodes % 2;
        let g = |x: f64| nearest(centers, &[x]).1;
        let mut total = 0.0;
        for c in self.model.centers() {
            let (lo, hi) = (c[0] - r, c[0] + r);
            let mut breaks = vec![lo];
            breaks.extend(bisectors.iter().copied().filter(|&b| b > lo && b < hi));
            breaks.push(hi);
            for w in breaks.windows(2) {
                total += simpson(g, w[0], w[1], panels);
            }
        }
        total / (2.0 * r * self.model.k() as f64)
    }
}

fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    // Nudge the endpoints inward so ties at a breakpoint never matter.
    let eval = |j: usize| {
        let x = if j == 0 {
            a + 1e-15 * h
        } else if j == panels {
            b - 1e-15 * h
        } else {
            a + j as f64 * h
        };
        g(x)
    };
    let mut s = eval(0) + eval(panels);
    for j in 1..panels {
        s += if j % 2 == 1 { 4.0 } else { 2.0 } * eval(j);
    }
    s * h / 3.0
}

/// 1D Voronoi intervals; coinciding centers leave the higher indices empty.
pub(crate) fn cells_1d(centers: &[Vec<f64>]) -> Vec<Option<(f64, f64)>> {
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| centers[a][0].total_cmp(&centers[b][0]).then(a.cmp(&b)));
    let mut owners: Vec<usize> = Vec::new();
    for &i in &order {
        if owners.last().is_none_or(|&o| centers[o][0] != centers[i][0]) {
            owners.push(i);
        }
    }
    let mut cells = vec![None; centers.len()];
    for (a, &o) in owners.iter().enumerate() {
        let lo = if a == 0 { f64::NEG_INFINITY } else { 0.5 * (centers[owners[a - 1]][0] + centers[o][0]) };
        let hi = if a + 1 == owners.len() {
            f64::INFINITY
        } else {
            0.5 * (centers[o][0] + centers[owners[a + 1]][0])
        };
        cells[o] = Some((lo, hi));
    }
    cells
}

/// Fixed-chunk parallel fold with an ordered sequential merge.
pub(crate) fn fold_chunks<T: Send>(
    pts: &[f64],
    d: usize,
    init: impl Fn() -> T + Sync,
    f: impl Fn(&mut T, &[f64]) + Sync,
    merge: impl Fn(&mut T, T),
) -> T {
    let parts: Vec<T> = pts
        .par_chunks(CHUNK * d)
        .map(|chunk| {
            let mut acc = init();
            for x in chunk.chunks_exact(d) {
                f(&mut acc, x);
            }
            acc
        })
        .collect();
    let mut out = init();
    for p in parts {
        merge(&mut out, p);
    }
    out
}

fn freeze(model: &MixtureModel, n: usize, seed: u64) -> Frozen {
    let k = model.k();
    let d = model.dim();
    let per = n.div_ceil(k);
    let points = (0..k)
        .map(|s| {
            let chunks = per.div_ceil(CHUNK);
            let parts: Vec<Vec<f64>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((s as u64) << 32) | c as u64);
                    let len = CHUNK.min(per - c * CHUNK);
                    let mut buf = vec![0.0; len * d];
                    for x in buf.chunks_exact_mut(d) {
                        model.draw_component(s, &mut rng, x);
                    }
                    buf
                })
                .collect();
            parts.concat()
        })
        .collect();
    Frozen { per_component: per, points }
}

/// Mean squared distance from the pooled population sample to `x`; used in tests.
#[cfg(test)]
pub(crate) fn frozen_second_moment(p: &Population, x: &[f64]) -> f64 {
    let f = p.frozen.as_ref().unwrap();
    let d = x.len();
    let mut total = 0.0;
    let mut count = 0usize;
    for pts in &f.points {
        for y in pts.chunks_exact(d) {
            total += crate::vector::dist2(x, y);
            count += 1;
        }
    }
    total / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_ball(r: f64) -> MixtureModel {
        MixtureModel::ball_1d(&[-2.0, 0.0, 2.0], r).unwrap()
    }

    fn spurious(r: f64) -> Solution {
        Solution::from_scalars(&[-2.0 - r / 2.0, -2.0 + r / 2.0, 1.0]).unwrap()
    }

    #[test]
    fn analytic_objective_values() {
        let p = Population::new(three_ball(0.3), Estimator::Analytic1D).unwrap();
        let truth = Solution::from_scalars(&[-2.0, 0.0, 2.0]).unwrap();
        assert!((p.objective(&truth).unwrap().value - 0.03).abs() < 1e-14);
        let g = p.objective(&spurious(0.3)).unwrap().value;
        assert!((g - (2.0 / 3.0 + 0.09 / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn quadrature_agrees_with_analytic() {
        let a = Population::new(three_ball(0.3), Estimator::Analytic1D).unwrap();
        let q = Population::new(three_ball(0.3), Estimator::Quadrature1D { nodes: 8 }).unwrap();
        for xs in [[-2.15, -1.85, 1.0], [-1.0, 0.3, 0.5], [5.0, 6.0, 7.0]] {
            let s = Solution::from_scalars(&xs).unwrap();
            let (ga, gq) = (a.objective(&s).unwrap().value, q.objective(&s).unwrap().value);
            assert!((ga - gq).abs() < 1e-12, "{ga} {gq}");
        }
    }

    #[test]
    fn estimator_capabilities() {
        let g = MixtureModel::gaussian(vec![vec![0.0]], 1.0).unwrap();
        assert!(matches!(Population::new(g, Estimator::Analytic1D), Err(Error::UnsupportedEstimator(_))));
        let b2 = MixtureModel::ball(vec![vec![0.0, 0.0]], 1.0).unwrap();
        assert!(Population::new(b2, Estimator::Quadrature1D { nodes: 4 }).is_err());
        let q = Population::new(three_ball(0.3), Estimator::Quadrature1D { nodes: 4 }).unwrap();
        assert!(q.cell_stats(&spurious(0.3)).is_err());
    }

    #[test]
    fn analytic_cell_stats_three_ball() {
        let r = 0.3;
        let p = Population::new(three_ball(r), Estimator::Analytic1D).unwrap();
        let st = p.cell_stats(&spurious(r)).unwrap();
        assert!((st.mass[0][0] - 0.5).abs() < 1e-15 && (st.mass[1][0] - 0.5).abs() < 1e-15);
        assert!((st.com[0][0].as_ref().unwrap()[0] - (-2.0 - r / 2.0)).abs() < 1e-15);
        assert!((st.com[1][0].as_ref().unwrap()[0] - (-2.0 + r / 2.0)).abs() < 1e-15);
        assert!((st.mass[2][1] - 1.0).abs() < 1e-15 && (st.mass[2][2] - 1.0).abs() < 1e-15);
        assert_eq!(st.com[2][1].as_ref().unwrap()[0], 0.0);
        assert_eq!(st.com[2][2].as_ref().unwrap()[0], 2.0);
        assert!(st.com[0][1].is_none());
        for s in 0..3 {
            let col: f64 = (0..3).map(|i| st.mass[i][s]).sum();
            assert!((col - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coinciding_centers_leave_an_empty_cell() {
        let p = Population::new(three_ball(0.3), Estimator::Analytic1D).unwrap();
        let s = Solution::from_scalars(&[0.0, -2.0, 0.0]).unwrap();
        let st = p.cell_stats(&s).unwrap();
        assert_eq!(st.total_mass[2], 0.0);
        assert!(st.centroid[2].is_none());
        assert!(p.directional_derivative(&s, &[vec![1.0], vec![0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn mc_objective_is_deterministic_and_close() {
        let model = three_ball(0.3);
        let est = Estimator::MonteCarlo { n: 30_000, seed: 11 };
        let p = Population::new(model.clone(), est).unwrap();
        let q = Population::new(model, est).unwrap();
        let s = spurious(0.3);
        let a = p.objective(&s).unwrap();
        assert_eq!(a, q.objective(&s).unwrap());
        let exact = 2.0 / 3.0 + 0.09 / 4.0;
        assert!((a.value - exact).abs() < 4.0 * a.stderr, "{a:?}");
    }

    #[test]
    fn mc_single_center_gaussian() {
        let model = MixtureModel::gaussian(vec![vec![1.0, -1.0]], 1.0).unwrap();
        let p = Population::new(model, Estimator::MonteCarlo { n: 50_000, seed: 3 }).unwrap();
        let s = Solution::new(vec![vec![1.0, -1.0]]).unwrap();
        let g = p.objective(&s).unwrap();
        assert!((g.value - 2.0).abs() < 4.0 * g.stderr);
        assert!((frozen_second_moment(&p, &[1.0, -1.0]) - g.value).abs() < 1e-12);
        let st = p.cell_stats(&s).unwrap();
        assert_eq!(st.mass[0][0], 1.0);
        let c = st.centroid[0].as_ref().unwrap();
        assert!((c[0] - 1.0).abs() < 4.0 * st.centroid_stderr[0]);
        assert!((c[1] + 1.0).abs() < 4.0 * st.centroid_stderr[0]);
    }

    #[test]
    fn derivative_examples() {
        let model = MixtureModel::ball_1d(&[0.0], 0.3).unwrap();
        let p = Population::new(model, Estimator::Analytic1D).unwrap();
        let s = Solution::from_scalars(&[0.5]).unwrap();
        let dv = p.directional_derivative(&s, &[vec![1.0]]).unwrap();
        assert!((dv.value - 1.0).abs() < 1e-15);

        let p = Population::new(three_ball(0.3), Estimator::Analytic1D).unwrap();
        let dv = p
            .directional_derivative(&spurious(0.3), &[vec![1.0], vec![0.0], vec![0.0]])
            .unwrap();
        assert_eq!(dv.value, 0.0);
    }

    #[test]
    fn farthest_point_analytic_and_mc() {
        let p = Population::new(three_ball(0.3), Estimator::Analytic1D).unwrap();
        let centers = vec![vec![-2.0], vec![0.0], vec![99.0]];
        let x = p.farthest_point(&centers, &[]).unwrap();
        assert!((x[0] - 2.3).abs() < 1e-12);
        let y = p.farthest_point(&centers, &[x]).unwrap();
        assert!((y[0] - 1.7).abs() < 1e-12);

        let mc = Population::new(three_ball(0.3), Estimator::MonteCarlo { n: 3000, seed: 1 }).unwrap();
        let z = mc.farthest_point(&centers, &[]).unwrap();
        assert!(z[0] > 2.2 && z[0] <= 2.3);
    }

    #[test]
    fn estimator_json() {
        let e: Estimator = serde_json::from_str(r#"{"method":"monte_carlo","n":10,"seed":4}"#).unwrap();
        assert_eq!(e, Estimator::MonteCarlo { n: 10, seed: 4 });
        let a: Estimator = serde_json::from_str(r#"{"method":"analytic1d"}"#).unwrap();
        assert_eq!(a, Estimator::Analytic1D);
        assert!(serde_json::from_str::<Estimator>(r#"{"method":"monte_carlo","n":1,"seed":2,"x":1}"#).is_err());
    }
}
