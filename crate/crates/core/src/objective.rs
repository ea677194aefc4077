//! Empirical and population objectives, directional slices, finite
//! differences, and exact piecewise derivatives in one dimension.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_direction, nearest, Solution};
use crate::model::{MixtureModel, ModelKind, SampleSet};
use crate::population::{Estimate, Estimator, Population};
use crate::vector::dot;

/// `G_n(beta) = sum_i min_j |x_i - beta_j|^2`, summed in point order.
pub fn empirical_objective(solution: &Solution, data: &SampleSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let centers = solution.centers();
    let mut total = 0.0;
    for x in &data.points {
        solution.check_dim(x.len())?;
        total += nearest(centers, x).1;
    }
    Ok(total)
}

/// One-shot population objective. Repeated comparisons should share a
/// [`Population`] so that Monte Carlo evaluations reuse one sample.
pub fn population_objective(solution: &Solution, model: &MixtureModel, estimator: Estimator) -> Result<Estimate> {
    Population::new(model.clone(), estimator)?.objective(solution)
}

pub fn directional_derivative(pop: &Population, solution: &Solution, direction: &[Vec<f64>]) -> Result<Estimate> {
    pop.directional_derivative(solution, direction)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSlice {
    pub base: Solution,
    pub direction: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl DirectionalSlice {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value,stderr")?;
        for ((t, v), e) in self.t.iter().zip(&self.values).zip(&self.stderr) {
            writeln!(w, "{t:?},{v:?},{e:?}")?;
        }
        Ok(())
    }
}

/// `t -> G(beta + t v)` on a grid, every point under the same estimator sample.
pub fn directional_slice(
    pop: &Population,
    solution: &Solution,
    direction: &[Vec<f64>],
    grid: &[f64],
) -> Result<DirectionalSlice> {
    check_direction(solution, direction)?;
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Precondition("slice grid must be finite".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &t in grid {
        let e = pop.objective(&solution.perturbed(direction, t)?)?;
        values.push(e.value);
        stderr.push(e.stderr);
    }
    Ok(DirectionalSlice {
        base: solution.clone(),
        direction: direction.to_vec(),
        t: grid.to_vec(),
        values,
        stderr,
    })
}

pub fn default_fd_step(solution: &Solution) -> f64 {
    let n2: f64 = solution.centers().iter().map(|c| dot(c, c)).sum();
    1e-5 * (1.0 + n2.sqrt())
}

/// Central difference `(H(h) - H(-h)) / 2h`; `h` defaults to `1e-5 (1 + |beta|)`.
pub fn finite_diff_derivative(
    pop: &Population,
    solution: &Solution,
    direction: &[Vec<f64>],
    h: Option<f64>,
) -> Result<f64> {
    check_direction(solution, direction)?;
    let h = h.unwrap_or_else(|| default_fd_step(solution));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("finite-difference step must be positive, got {h}")));
    }
    if direction.iter().all(|v| v.iter().all(|&x| x == 0.0)) {
        return Ok(0.0);
    }
    let plus = pop.objective(&solution.perturbed(direction, h)?)?.value;
    let minus = pop.objective(&solution.perturbed(direction, -h)?)?.value;
    Ok((plus - minus) / (2.0 * h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRegime {
    InsideBall(usize),
    InGap,
}

/// Gradient and Hessian of the unnormalized 1D integral
/// `F(beta) = sum_s int_{B_s} min_i (x - beta_i)^2 dx`; `G = normalization * F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grad1D {
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub boundary_positions: Vec<f64>,
    pub validity: Vec<BoundaryRegime>,
    /// `1 / (2 r k)`.
    pub normalization: f64,
    /// Cells with positive mass; inactive centers have zero rows.
    pub active: Vec<bool>,
}

impl Grad1D {
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn active_hessian(&self) -> Vec<Vec<f64>> {
        let idx = self.active_indices();
        idx.iter().map(|&i| idx.iter().map(|&j| self.hessian[i][j]).collect()).collect()
    }

    /// Ascending eigenvalues of the active block.
    pub fn active_eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.active_hessian())
    }

    pub fn max_abs_gradient(&self) -> f64 {
        self.gradient.iter().fold(0.0, |a, g| a.max(g.abs()))
    }
}

pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn analytic_grad_hess_1d(solution: &Solution, model: &MixtureModel) -> Result<Grad1D> {
    if model.dim() != 1 || model.kind() != ModelKind::Ball {
        return Err(Error::UnsupportedEstimator("exact 1D derivatives need a one-dimensional ball model".into()));
    }
    solution.check_dim(1)?;
    let beta: Vec<f64> = solution.centers().iter().map(|c| c[0]).collect();
    if beta.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("centers must be strictly ascending".into()));
    }
    let m = beta.len();
    let r = model.scale();
    let balls: Vec<f64> = model.centers().iter().map(|c| c[0]).collect();

    let boundaries: Vec<f64> = beta.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut validity = Vec::with_capacity(boundaries.len());
    for &b in &boundaries {
        let mut regime = BoundaryRegime::InGap;
        for (s, &c) in balls.iter().enumerate() {
            let gap = (b - c).abs();
            if gap == r {
                return Err(Error::InvalidRegime(format!("boundary {b} lies on the edge of ball {s}")));
            }
            if gap < r {
                regime = BoundaryRegime::InsideBall(s);
            }
        }
        validity.push(regime);
    }

    let mut gradient = vec![0.0; m];
    let mut hessian = vec![vec![0.0; m]; m];
    let mut active = vec![false; m];
    for i in 0..m {
        let lo = if i == 0 { f64::NEG_INFINITY } else { boundaries[i - 1] };
        let hi = if i + 1 == m { f64::INFINITY } else { boundaries[i] };
        let mut length = 0.0;
        for &c in &balls {
            let a = lo.max(c - r);
            let b = hi.min(c + r);
            if b > a {
                length += b - a;
                // -2 int_a^b (x - beta_i) dx
                gradient[i] -= (b - beta[i]).powi(2) - (a - beta[i]).powi(2);
            }
        }
        active[i] = length > 0.0;
        hessian[i][i] = 2.0 * length;
    }
    for (j, regime) in validity.iter().enumerate() {
        if let BoundaryRegime::InsideBall(_) = regime {
            let half = 0.5 * (beta[j + 1] - beta[j]);
            hessian[j][j] -= half;
            hessian[j + 1][j + 1] -= half;
            hessian[j][j + 1] -= half;
            hessian[j + 1][j] -= half;
        }
    }
    Ok(Grad1D {
        gradient,
        hessian,
        boundary_positions: boundaries,
        validity,
        normalization: 1.0 / (2.0 * r * model.k() as f64),
        active,
    })
}

/// Outcome of scanning `H^v(t) - H^v(0)` along random directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub directions: usize,
    pub base_value: f64,
    /// Smallest `H^v(t) - H^v(0)` seen over all directions and grid points.
    pub min_increase: f64,
    /// Stderr of the objective at the base (zero for exact estimators).
    pub base_stderr: f64,
}

/// Random unit directions (jointly normalized over all centers) scanned on
/// `t in {+-t_max * j / steps}`.
pub fn local_min_scan(
    pop: &Population,
    solution: &Solution,
    directions: usize,
    t_max: f64,
    steps: usize,
    seed: u64,
) -> Result<ScanReport> {
    let base = pop.objective(solution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_increase = f64::INFINITY;
    for _ in 0..directions {
        let v = random_direction(&mut rng, solution.m(), solution.dim());
        for j in 1..=steps.max(1) {
            let t = t_max * j as f64 / steps.max(1) as f64;
            for sign in [1.0, -1.0] {
                let g = pop.objective(&solution.perturbed(&v, sign * t)?)?.value;
                min_increase = min_increase.min(g - base.value);
            }
        }
    }
    Ok(ScanReport { directions, base_value: base.value, min_increase, base_stderr: base.stderr })
}

pub fn random_direction<R: rand::Rng + ?Sized>(rng: &mut R, m: usize, d: usize) -> Vec<Vec<f64>> {
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect())
        .collect();
    let n = v.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
    for c in &mut v {
        for x in c.iter_mut() {
            *x /= n;
        }
    }
    v
}
