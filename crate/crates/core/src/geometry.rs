//! Voronoi geometry of fitted centers: cell membership, halfspace
//! representation, adjacency, and the boundary observables `d_ij`, `D_ijs`
//! and `rho_s` used by the local-minimum inequalities.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MixtureModel, ModelKind};
use crate::vector::{axpy, dist2, dot, midpoint, norm, orthonormal_complement, scale, sub, unit_ball_volume};

/// Fitted centers. Coinciding centers are representable; operations that
/// need distinct centers check for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Solution {
    centers: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for Solution {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Solution::new(v)
    }
}

impl From<Solution> for Vec<Vec<f64>> {
    fn from(s: Solution) -> Self {
        s.centers
    }
}

impl Solution {
    pub fn new(centers: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = centers.first() else {
            return Err(Error::Precondition("a solution needs at least one center".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::Precondition("centers must have dimension >= 1".into()));
        }
        for c in &centers {
            if c.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.len() });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Precondition("center coordinates must be finite".into()));
            }
        }
        Ok(Self { centers })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i]
    }

    pub fn into_centers(self) -> Vec<Vec<f64>> {
        self.centers
    }

    /// First pair of coinciding centers, if any.
    pub fn duplicate_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.m() {
            for j in i + 1..self.m() {
                if self.centers[i] == self.centers[j] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn require_distinct(&self) -> Result<()> {
        match self.duplicate_pair() {
            Some((i, j)) => Err(Error::DegenerateSolution(i, j)),
            None => Ok(()),
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.dim() });
        }
        Ok(())
    }

    /// `beta + t * v` for a direction with one vector per center.
    pub fn perturbed(&self, direction: &[Vec<f64>], t: f64) -> Result<Self> {
        check_direction(self, direction)?;
        Ok(Self {
            centers: self.centers.iter().zip(direction).map(|(c, v)| axpy(c, t, v)).collect(),
        })
    }

    /// Centers reordered so that new center `i` is old center `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { centers: perm.iter().map(|&p| self.centers[p].clone()).collect() }
    }

    pub fn max_displacement(&self, other: &Solution) -> f64 {
        self.centers
            .iter()
            .zip(&other.centers)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_direction(solution: &Solution, direction: &[Vec<f64>]) -> Result<()> {
    if direction.len() != solution.m() {
        return Err(Error::DimensionMismatch { expected: solution.m(), got: direction.len() });
    }
    for v in direction {
        if v.len() != solution.dim() {
            return Err(Error::DimensionMismatch { expected: solution.dim(), got: v.len() });
        }
    }
    Ok(())
}

/// Index of the nearest center (lowest index on ties) and its squared distance.
#[inline]
pub(crate) fn nearest(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d2 = dist2(x, c);
        if d2 < best_d2 {
            best = i;
            best_d2 = d2;
        }
    }
    (best, best_d2)
}

/// Voronoi cell containing `x`; ties go to the lowest index.
pub fn assign(solution: &Solution, x: &[f64]) -> Result<usize> {
    solution.check_dim(x.len())?;
    Ok(nearest(solution.centers(), x).0)
}

/// `{x : <normal, x> <= offset}`, the side of the bisector with `owner`
/// facing away from `neighbor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub neighbor: usize,
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.normal, x) <= self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoronoiDiagram {
    /// `cells[i]` lists the `m - 1` halfspaces `2<b_j - b_i, x> <= |b_j|^2 - |b_i|^2`.
    pub cells: Vec<Vec<Halfspace>>,
    /// Unordered pairs `(i, j)`, `i < j`, sharing a (d-1)-dimensional face.
    pub adjacency: Vec<(usize, usize)>,
}

impl VoronoiDiagram {
    pub fn cell_contains(&self, i: usize, x: &[f64]) -> bool {
        self.cells[i].iter().all(|h| h.contains(x))
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.adjacency.contains(&key)
    }

    /// Boundary points between adjacent cells of a 1D diagram.
    pub fn boundary_points_1d(&self, solution: &Solution) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .adjacency
            .iter()
            .map(|&(i, j)| 0.5 * (solution.center(i)[0] + solution.center(j)[0]))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }
}

const ADJACENCY_TRIALS: usize = 1000;
const ADJACENCY_SEED: u64 = 0x5eed_ad10;

pub fn build_voronoi(solution: &Solution) -> Result<VoronoiDiagram> {
    solution.require_distinct()?;
    let m = solution.m();
    let b = solution.centers();
    let cells = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i)
                .map(|j| Halfspace {
                    neighbor: j,
                    normal: scale(&sub(&b[j], &b[i]), 2.0),
                    offset: dot(&b[j], &b[j]) - dot(&b[i], &b[i]),
                })
                .collect()
        })
        .collect();
    let mut adjacency = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if face_has_interior(solution, i, j) {
                adjacency.push((i, j));
            }
        }
    }
    Ok(VoronoiDiagram { cells, adjacency })
}

/// Whether `x` on the bisector of `(i, j)` lies in their common face.
#[inline]
fn on_face(centers: &[Vec<f64>], i: usize, j: usize, x: &[f64]) -> bool {
    let di = dist2(x, &centers[i]);
    centers
        .iter()
        .enumerate()
        .all(|(l, c)| l == i || l == j || dist2(x, c) >= di)
}

/// Sampled certificate: some point of the bisector hyperplane is strictly
/// closer to `i` and `j` than to every other center.
fn face_has_interior(solution: &Solution, i: usize, j: usize) -> bool {
    let b = solution.centers();
    let gap = dist2(&b[i], &b[j]).sqrt();
    let margin = 1e-9 * gap;
    let strictly_inside = |x: &[f64]| {
        let di = dist2(x, &b[i]).sqrt();
        b.iter()
            .enumerate()
            .all(|(l, c)| l == i || l == j || dist2(x, c).sqrt() - di > margin)
    };
    let mid = midpoint(&b[i], &b[j]);
    if strictly_inside(&mid) {
        return true;
    }
    if solution.dim() == 1 || solution.m() == 2 {
        return solution.m() == 2;
    }
    let u = scale(&sub(&b[j], &b[i]), 1.0 / gap);
    let basis = orthonormal_complement(&u);
    let spread = b
        .iter()
        .flat_map(|c| b.iter().map(move |e| dist2(c, e)))
        .fold(0.0f64, f64::max)
        .sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(ADJACENCY_SEED);
    for t in 0..ADJACENCY_TRIALS {
        // Scales sweep from 1e-3 to 1e2 times the configuration diameter.
        let level = (t % 11) as f64 / 2.0 - 3.0;
        let radius = spread * 10f64.powf(level);
        let mut x = mid.clone();
        for e in &basis {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = axpy(&x, radius * z, e);
        }
        if strictly_inside(&x) {
            return true;
        }
    }
    false
}

/// `d_ij`, `D_ijs` and `rho_s(boundary_ij)` with Monte Carlo error bars.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryQuantities {
    pub d_ij: f64,
    pub big_d_ijs: f64,
    pub rho: f64,
    pub rho_stderr: f64,
    /// Whether `B_s` meets the face at all (as far as sampling detected).
    pub intersects: bool,
}

/// Sampling configuration for boundary cross-sections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimator {
    pub samples: usize,
    pub seed: u64,
    /// Gaussian truncation parameter `t`: components are restricted to the
    /// ball of radius `t * sigma * sqrt(min(2k, d))`.
    pub truncation_t: f64,
}

impl Default for BoundaryEstimator {
    fn default() -> Self {
        Self { samples: 20_000, seed: 0, truncation_t: 3.0 }
    }
}

/// Support radius used for component `s`: `r` for balls, the truncation
/// radius for Gaussians.
pub fn support_radius(model: &MixtureModel, truncation_t: f64) -> f64 {
    match model.kind() {
        ModelKind::Ball => model.scale(),
        ModelKind::Gaussian => truncation_t * model.scale() * model.effective_dim_factor(),
    }
}

pub fn boundary_quantities(
    solution: &Solution,
    model: &MixtureModel,
    i: usize,
    j: usize,
    s: usize,
    est: &BoundaryEstimator,
) -> Result<BoundaryQuantities> {
    solution.check_dim(model.dim())?;
    let m = solution.m();
    for idx in [i, j] {
        if idx >= m {
            return Err(Error::IndexOutOfRange { index: idx, count: m });
        }
    }
    if s >= model.k() {
        return Err(Error::IndexOutOfRange { index: s, count: model.k() });
    }
    if i == j {
        return Err(Error::Precondition("boundary needs two distinct indices".into()));
    }
    let b = solution.centers();
    if b[i] == b[j] {
        return Err(Error::DegenerateSolution(i.min(j), i.max(j)));
    }
    let d_ij = 0.5 * dist2(&b[i], &b[j]).sqrt();
    let mid = midpoint(&b[i], &b[j]);
    let c = model.center(s);
    let radius = support_radius(model, est.truncation_t);
    let d = model.dim();

    if d == 1 {
        let on = on_face(b, i, j, &mid);
        let inside = (mid[0] - c[0]).abs() <= radius;
        let hit = on && inside;
        let rho = if !hit {
            0.0
        } else {
            match model.kind() {
                ModelKind::Ball => 1.0 / (2.0 * model.scale()),
                ModelKind::Gaussian => model.component_density_unchecked(s, &mid),
            }
        };
        return Ok(BoundaryQuantities {
            d_ij,
            big_d_ijs: if hit { 0.0 } else { 1.0 },
            rho,
            rho_stderr: 0.0,
            intersects: hit,
        });
    }

    let empty = BoundaryQuantities { d_ij, big_d_ijs: 1.0, rho: 0.0, rho_stderr: 0.0, intersects: false };
    let u = scale(&sub(&b[j], &b[i]), 0.5 / d_ij);
    let h = dot(&u, &sub(c, &mid));
    if h.abs() >= radius {
        return Ok(empty);
    }
    let foot = axpy(c, -h, &u);
    let disc_radius = (radius * radius - h * h).sqrt();
    let basis = orthonormal_complement(&u);
    let n = est.samples.max(1);
    let to_plane = |y: &[f64]| {
        let mut x = foot.clone();
        for (e, &yk) in basis.iter().zip(y) {
            x = axpy(&x, yk, e);
        }
        x
    };

    // Uniform points on the cross-section disc.
    let mut rng = ChaCha8Rng::seed_from_u64(est.seed);
    rng.set_stream(1);
    let mut y = vec![0.0; d - 1];
    let mut hits = 0usize;
    let mut closest = f64::INFINITY;
    for _ in 0..n {
        uniform_in_ball(&mut rng, disc_radius, &mut y);
        let x = to_plane(&y);
        if on_face(b, i, j, &x) {
            hits += 1;
            closest = closest.min(dist2(&x, &mid).sqrt());
        }
    }
    // The closest disc point to the midpoint is exact when it lies on the face.
    let w = sub(&mid, &foot);
    let wn = norm(&w);
    let q = if wn <= disc_radius { mid.clone() } else { axpy(&foot, disc_radius / wn, &w) };
    let exact_hit = on_face(b, i, j, &q);
    let big_d = if exact_hit {
        dist2(&q, &mid).sqrt()
    } else if hits > 0 {
        closest
    } else {
        1.0
    };

    let (rho, rho_stderr) = match model.kind() {
        ModelKind::Ball => {
            let frac = hits as f64 / n as f64;
            let area = unit_ball_volume(d - 1) * disc_radius.powi(d as i32 - 1);
            let norm_const = area / (unit_ball_volume(d) * model.scale().powi(d as i32));
            (frac * norm_const, (frac * (1.0 - frac) / n as f64).sqrt() * norm_const)
        }
        ModelKind::Gaussian => {
            // Density-weighted: f_s factorizes into the normal offset and an
            // isotropic (d-1)-dimensional in-plane part.
            let sigma = model.scale();
            let normal_part =
                (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.5) * (-0.5 * h * h / (sigma * sigma)).exp();
            let mut grng = ChaCha8Rng::seed_from_u64(est.seed);
            grng.set_stream(2);
            let mut ghits = 0usize;
            for _ in 0..n {
                let mut r2 = 0.0;
                for yk in y.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut grng);
                    *yk = sigma * z;
                    r2 += *yk * *yk;
                }
                if r2 <= disc_radius * disc_radius && on_face(b, i, j, &to_plane(&y)) {
                    ghits += 1;
                }
            }
            let frac = ghits as f64 / n as f64;
            (frac * normal_part, (frac * (1.0 - frac) / n as f64).sqrt() * normal_part)
        }
    };
    Ok(BoundaryQuantities {
        d_ij,
        big_d_ijs: big_d,
        rho,
        rho_stderr,
        intersects: hits > 0 || exact_hit,
    })
}

/// Uniform point in the centered ball of the given radius (dimension `out.len()`).
pub(crate) fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let d = out.len();
    let mut n2 = 0.0;
    while n2 == 0.0 {
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o = z;
            n2 += z * z;
        }
    }
    let u: f64 = rng.random();
    let f = radius * u.powf(1.0 / d as f64) / n2.sqrt();
    for o in out.iter_mut() {
        *o *= f;
    }
}

/// Per-(cell, component) masses and centers of mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// `mass[i][s]`: probability of cell `i` under component `s`.
    pub mass: Vec<Vec<f64>>,
    /// `com[i][s]`: center of mass of cell `i` under component `s` (None when the mass is zero).
    pub com: Vec<Vec<Option<Vec<f64>>>>,
    /// `P(V_i) = (1/k) sum_s mass[i][s]`.
    pub total_mass: Vec<f64>,
    /// Center of mass of cell `i` under the mixture.
    pub centroid: Vec<Option<Vec<f64>>>,
    /// Monte Carlo standard errors (zero for exact evaluation).
    pub mass_stderr: Vec<Vec<f64>>,
    pub centroid_stderr: Vec<f64>,
    pub estimated: bool,
}

impl CellStats {
    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    pub fn components(&self) -> usize {
        self.mass.first().map_or(0, Vec::len)
    }

    /// Standard error of `P(V_i)`.
    pub fn total_mass_stderr(&self, i: usize) -> f64 {
        let k = self.components() as f64;
        self.mass_stderr[i].iter().map(|e| e * e).sum::<f64>().sqrt() / k
    }
}
