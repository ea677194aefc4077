//! Balanced mixture models: the stochastic ball model and the spherical
//! Gaussian mixture.
//!
//! Components are indexed from 0 in the Rust API and in every emitted
//! artifact.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{dist2, unit_ball_volume};

/// Points generated per RNG substream.
pub(crate) const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Uniform on disjoint balls of common radius.
    Ball,
    /// Isotropic normal with common standard deviation.
    Gaussian,
}

/// JSON form of a model: `{"kind":"ball"|"gaussian","centers":[[...],...],"scale":..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub centers: Vec<Vec<f64>>,
    pub scale: f64,
    /// Permit overlapping balls. Exploratory use only: every structural
    /// result assumes disjoint supports.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_overlap: bool,
}

/// A validated, immutable balanced mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct MixtureModel {
    kind: ModelKind,
    centers: Vec<Vec<f64>>,
    scale: f64,
    allow_overlap: bool,
}

impl TryFrom<ModelConfig> for MixtureModel {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        if c.allow_overlap {
            MixtureModel::with_overlap(c.kind, c.centers, c.scale)
        } else {
            MixtureModel::new(c.kind, c.centers, c.scale)
        }
    }
}

impl From<MixtureModel> for ModelConfig {
    fn from(m: MixtureModel) -> Self {
        ModelConfig {
            kind: m.kind,
            centers: m.centers,
            scale: m.scale,
            allow_overlap: m.allow_overlap,
        }
    }
}

impl MixtureModel {
    pub fn new(kind: ModelKind, centers: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        Self::build(kind, centers, scale, false)
    }

    /// Like [`MixtureModel::new`] but skips the disjoint-balls check.
    pub fn with_overlap(kind: ModelKind, centers: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        Self::build(kind, centers, scale, true)
    }

    pub fn ball(centers: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        Self::new(ModelKind::Ball, centers, radius)
    }

    pub fn gaussian(centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        Self::new(ModelKind::Gaussian, centers, sigma)
    }

    /// One-dimensional ball model from scalar centers.
    pub fn ball_1d(centers: &[f64], radius: f64) -> Result<Self> {
        Self::ball(centers.iter().map(|&c| vec![c]).collect(), radius)
    }

    fn build(kind: ModelKind, centers: Vec<Vec<f64>>, scale: f64, allow_overlap: bool) -> Result<Self> {
        let k = centers.len();
        if k == 0 {
            return Err(Error::InvalidModel("k >= 1 required".into()));
        }
        let d = centers[0].len();
        if d == 0 {
            return Err(Error::InvalidModel("d >= 1 required".into()));
        }
        if let Some(s) = centers.iter().position(|c| c.len() != d) {
            return Err(Error::InvalidModel(format!(
                "center {s} has dimension {} but center 0 has {d}",
                centers[s].len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidModel(format!("scale must be positive and finite, got {scale}")));
        }
        if centers.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("center coordinates must be finite".into()));
        }
        for s in 0..k {
            for t in s + 1..k {
                let dst = dist2(&centers[s], &centers[t]).sqrt();
                if dst == 0.0 {
                    return Err(Error::InvalidModel(format!("true centers {s} and {t} coincide")));
                }
                if kind == ModelKind::Ball && !allow_overlap && dst <= 2.0 * scale {
                    return Err(Error::InvalidModel(format!(
                        "balls {s} and {t} are not disjoint: center distance {dst} <= 2r = {}",
                        2.0 * scale
                    )));
                }
            }
        }
        Ok(Self { kind, centers, scale, allow_overlap })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn center(&self, s: usize) -> &[f64] {
        &self.centers[s]
    }

    /// Ball radius or Gaussian standard deviation.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn allows_overlap(&self) -> bool {
        self.allow_overlap
    }

    /// `sqrt(min(2k, d))`, the effective dimension factor of the Gaussian SNR.
    pub fn effective_dim_factor(&self) -> f64 {
        ((2 * self.k()).min(self.dim()) as f64).sqrt()
    }

    /// Same model with every true center shifted by `u`.
    pub fn translated(&self, u: &[f64]) -> Result<Self> {
        self.check_dim(u)?;
        let centers = self.centers.iter().map(|c| crate::vector::add(c, u)).collect();
        Self::build(self.kind, centers, self.scale, self.allow_overlap)
    }

    /// Same model with centers mapped by `f` (e.g. a rigid motion).
    pub fn map_centers(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let centers = self.centers.iter().map(|c| f(c)).collect();
        Self::build(self.kind, centers, self.scale, self.allow_overlap)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Density `f_s(x)` of component `s`.
    pub fn component_density(&self, s: usize, x: &[f64]) -> Result<f64> {
        if s >= self.k() {
            return Err(Error::IndexOutOfRange { index: s, count: self.k() });
        }
        self.check_dim(x)?;
        Ok(self.component_density_unchecked(s, x))
    }

    pub(crate) fn component_density_unchecked(&self, s: usize, x: &[f64]) -> f64 {
        let d = self.dim() as i32;
        let r2 = dist2(x, &self.centers[s]);
        match self.kind {
            ModelKind::Ball => {
                if r2 <= self.scale * self.scale {
                    1.0 / (unit_ball_volume(self.dim()) * self.scale.powi(d))
                } else {
                    0.0
                }
            }
            ModelKind::Gaussian => {
                let var = self.scale * self.scale;
                (2.0 * std::f64::consts::PI * var).powf(-0.5 * d as f64) * (-0.5 * r2 / var).exp()
            }
        }
    }

    /// Mixture density `(1/k) * sum_s f_s(x)`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sum: f64 = (0..self.k()).map(|s| self.component_density_unchecked(s, x)).sum();
        Ok(sum / self.k() as f64)
    }

    pub fn separation_stats(&self) -> Result<SeparationStats> {
        let k = self.k();
        if k < 2 {
            return Err(Error::UndefinedSeparation);
        }
        let mut delta_max = 0.0f64;
        let mut delta_min = f64::INFINITY;
        for s in 0..k {
            for t in s + 1..k {
                let dst = dist2(&self.centers[s], &self.centers[t]).sqrt();
                delta_max = delta_max.max(dst);
                delta_min = delta_min.min(dst);
            }
        }
        let noise = match self.kind {
            ModelKind::Ball => self.scale,
            ModelKind::Gaussian => self.scale * self.effective_dim_factor(),
        };
        Ok(SeparationStats {
            delta_max,
            delta_min,
            eta_max: delta_max / noise,
            eta_min: delta_min / noise,
        })
    }

    /// Writes one draw from component `s` into `out`.
    pub(crate) fn draw_component<R: Rng + ?Sized>(&self, s: usize, rng: &mut R, out: &mut [f64]) {
        let d = self.dim();
        match self.kind {
            ModelKind::Gaussian => {
                for (o, c) in out.iter_mut().zip(&self.centers[s]) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = c + self.scale * z;
                }
            }
            ModelKind::Ball => {
                // Isotropic direction, radius r * U^(1/d).
                let mut n2 = 0.0;
                while n2 == 0.0 {
                    n2 = 0.0;
                    for o in out.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *o = z;
                        n2 += z * z;
                    }
                }
                let u: f64 = rng.random();
                let radius = self.scale * u.powf(1.0 / d as f64);
                let f = radius / n2.sqrt();
                for (o, c) in out.iter_mut().zip(&self.centers[s]) {
                    *o = c + f * *o;
                }
            }
        }
    }

    /// Draws `n` labeled points. Component labels are uniform on `0..k`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::Precondition("n >= 1 required".into()));
        }
        let d = self.dim();
        let k = self.k();
        let chunks: Vec<(Vec<f64>, Vec<usize>)> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let len = CHUNK.min(n - c * CHUNK);
                let mut pts = vec![0.0; len * d];
                let mut labels = Vec::with_capacity(len);
                for p in pts.chunks_exact_mut(d) {
                    let s = rng.random_range(0..k);
                    self.draw_component(s, &mut rng, p);
                    labels.push(s);
                }
                (pts, labels)
            })
            .collect();
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for (pts, lab) in chunks {
            points.extend(pts.chunks_exact(d).map(<[f64]>::to_vec));
            labels.extend(lab);
        }
        Ok(SampleSet { points, labels: Some(labels), seed: Some(seed) })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationStats {
    pub delta_max: f64,
    pub delta_min: f64,
    pub eta_max: f64,
    pub eta_min: f64,
}

/// Data points with optional component labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

impl SampleSet {
    /// Unlabeled data.
    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        Self { points, labels: None, seed: None }
    }

    /// Unlabeled one-dimensional data.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self::from_points(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    /// Writes `label,x1,...,xd` CSV. The label column is empty for unlabeled data.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim().unwrap_or(0);
        let header: Vec<String> = std::iter::once("label".to_string())
            .chain((1..=d).map(|j| format!("x{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, p) in self.points.iter().enumerate() {
            let label = self
                .labels
                .as_ref()
                .map(|l| l[i].to_string())
                .unwrap_or_default();
            let coords: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{label},{}", coords.join(","))?;
        }
        Ok(())
    }

    /// Reads the format written by [`SampleSet::write_csv`]; an empty label
    /// column means unlabeled data.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.get(0) != Some("label") || headers.len() < 2 {
            return Err(Error::Config("sample CSV must start with `label,x1`".into()));
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut labeled = true;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let label = rec.get(0).unwrap_or("").trim();
            if label.is_empty() {
                labeled = false;
            } else {
                labels.push(label.parse::<usize>().map_err(|e| Error::Config(format!("bad label {label:?}: {e}")))?);
            }
            let p = rec
                .iter()
                .skip(1)
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad coordinate {f:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            points.push(p);
        }
        let labels = (labeled && labels.len() == points.len() && !points.is_empty()).then_some(labels);
        Ok(Self { points, labels, seed: None })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("sample CSV: {e}"))
}
