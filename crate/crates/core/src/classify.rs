//! Association taxonomy of candidate solutions: many-fit-one, one-fit-many,
//! one-fit-one and almost-empty blocks, the separation premises under which
//! the structure is guaranteed, and the boundary inequalities that hold at
//! every local minimum of the ball model.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boundary_quantities, build_voronoi, BoundaryEstimator, Solution};
use crate::model::{MixtureModel, ModelKind};
use crate::population::Population;
use crate::vector::{dist2, norm, sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssociationKind {
    ManyFitOne,
    OneFitMany,
    OneFitOne,
    AlmostEmpty,
}

impl AssociationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AssociationKind::ManyFitOne => "ManyFitOne",
            AssociationKind::OneFitMany => "OneFitMany",
            AssociationKind::OneFitOne => "OneFitOne",
            AssociationKind::AlmostEmpty => "AlmostEmpty",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: AssociationKind,
    pub fitted: Vec<usize>,
    #[serde(rename = "true")]
    pub truth: Vec<usize>,
    pub error: f64,
    /// Error bound for this block; absent when separation is undefined (k = 1).
    pub bound: Option<f64>,
}

/// Truncation of each Gaussian component to radius `t sigma sqrt(min(2k, d))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTruncation {
    pub t: f64,
    pub phi: f64,
    pub radius: f64,
}

impl GaussianTruncation {
    pub fn new(model: &MixtureModel, t: f64) -> Self {
        let eff = model.dim().min(2 * model.k()) as f64;
        Self {
            t,
            phi: 2.0 * (-t * t * eff / 8.0).exp(),
            radius: t * model.scale() * eff.sqrt(),
        }
    }

    /// Smallest `t > 1` with `phi(t) < 1/4`, nudged up by a relative 1e-9.
    pub fn smallest_admissible(model: &MixtureModel) -> Self {
        let eff = model.dim().min(2 * model.k()) as f64;
        let t = (8.0 * 8f64.ln() / eff).sqrt().max(1.0) * (1.0 + 1e-9);
        Self::new(model, t)
    }

    pub fn is_admissible(&self) -> bool {
        self.t > 1.0 && self.phi < 0.25
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Cells with `P(V_i)` at or below this are almost empty. Default
    /// `min(c k / sqrt(eta_max), 0.1 / k)`.
    #[serde(default)]
    pub tau_empty: Option<f64>,
    #[serde(default = "default_tau_in")]
    pub tau_in: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Gaussian truncation parameter; default is the smallest admissible value.
    #[serde(default)]
    pub t: Option<f64>,
}

fn default_tau_in() -> f64 {
    0.5
}

fn default_c() -> f64 {
    3.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tau_empty: None, tau_in: default_tau_in(), c: default_c(), t: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedThresholds {
    pub tau_empty: f64,
    pub tau_in: f64,
    pub c: f64,
    pub t: Option<f64>,
}

impl Thresholds {
    pub fn resolve(&self, model: &MixtureModel) -> Result<ResolvedThresholds> {
        if !(self.c > 0.0) || !(self.tau_in > 0.0 && self.tau_in <= 1.0) {
            return Err(Error::Config("need c > 0 and 0 < tau_in <= 1".into()));
        }
        let k = model.k() as f64;
        let tau_empty = match self.tau_empty {
            Some(t) => t,
            None => match model.separation_stats() {
                Ok(sep) => (self.c * k / sep.eta_max.sqrt()).min(0.1 / k),
                Err(_) => 0.1 / k,
            },
        };
        let t = match model.kind() {
            ModelKind::Ball => None,
            ModelKind::Gaussian => {
                Some(self.t.unwrap_or_else(|| GaussianTruncation::smallest_admissible(model).t))
            }
        };
        Ok(ResolvedThresholds { tau_empty, tau_in: self.tau_in, c: self.c, t })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierInternals {
    /// `T_i`: components with positive mass in `V_i`.
    pub t_sets: Vec<Vec<usize>>,
    /// `A_i`: true centers strictly inside `V_i`.
    pub a_sets: Vec<Vec<usize>>,
    /// `B_i = T_i \ A_i`.
    pub b_sets: Vec<Vec<usize>>,
    pub mass: Vec<Vec<f64>>,
    pub total_mass: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub blocks: Vec<Block>,
    pub valid_partition: bool,
    pub violations: Vec<String>,
    pub thresholds: ResolvedThresholds,
    pub internals: ClassifierInternals,
    /// Absent for single-component models.
    pub snr: Option<SnrGate>,
}

impl AssociationReport {
    pub fn count(&self, kind: AssociationKind) -> usize {
        self.blocks.iter().filter(|b| b.kind == kind).count()
    }

    /// Multiset of `(kind, |fitted|, |true|)`, sorted.
    pub fn signature(&self) -> Vec<(AssociationKind, usize, usize)> {
        let mut sig: Vec<_> = self.blocks.iter().map(|b| (b.kind, b.fitted.len(), b.truth.len())).collect();
        sig.sort();
        sig
    }

    /// Whether every block error is within its bound.
    pub fn within_bounds(&self) -> bool {
        self.blocks.iter().all(|b| b.bound.is_none_or(|bd| b.error <= bd))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,fitted,true,error,bound")?;
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        for b in &self.blocks {
            let bound = b.bound.map(|x| format!("{x:?}")).unwrap_or_default();
            writeln!(w, "{},{},{},{:?},{}", b.kind.as_str(), join(&b.fitted), join(&b.truth), b.error, bound)?;
        }
        Ok(())
    }
}

struct Bounds {
    fit_one: f64,
    fit_many: f64,
    empty: f64,
}

fn theorem_bounds(model: &MixtureModel, c: f64, t: Option<f64>) -> Option<Bounds> {
    let sep = model.separation_stats().ok()?;
    let k = model.k() as f64;
    let root = sep.eta_max.sqrt();
    Some(match model.kind() {
        ModelKind::Ball => Bounds {
            fit_one: sep.delta_max * 8.0 * c * k * k / root,
            fit_many: sep.delta_max * 11.0 * c * k * k / root,
            empty: c * k / root,
        },
        ModelKind::Gaussian => {
            let tr = GaussianTruncation::new(model, t.expect("gaussian thresholds carry t"));
            let st = tr.t.sqrt();
            Bounds {
                fit_one: sep.delta_max * (7.0 * k * k * c * st / root + 7.0 * k * tr.phi),
                fit_many: sep.delta_max * (9.0 * k * k * c * st / root + 7.0 * k * tr.phi),
                empty: c * k * st / root + tr.phi,
            }
        }
    })
}

pub fn classify(solution: &Solution, pop: &Population, thresholds: &Thresholds) -> Result<AssociationReport> {
    let model = pop.model();
    solution.check_dim(model.dim())?;
    solution.require_distinct()?;
    let th = thresholds.resolve(model)?;
    let stats = pop.cell_stats(solution)?;
    let m = solution.m();
    let k = model.k();

    let t_sets: Vec<Vec<usize>> = (0..m).map(|i| (0..k).filter(|&s| stats.mass[i][s] > 0.0).collect()).collect();
    let mut a_sets = vec![Vec::new(); m];
    for s in 0..k {
        let c = model.center(s);
        let d: Vec<f64> = solution.centers().iter().map(|b| dist2(b, c)).collect();
        let (best, &dmin) = d.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if d.iter().enumerate().all(|(i, &x)| i == best || x > dmin) {
            a_sets[best].push(s);
        }
    }
    let b_sets = (0..m)
        .map(|i| t_sets[i].iter().copied().filter(|s| !a_sets[i].contains(s)).collect())
        .collect();

    let bounds = theorem_bounds(model, th.c, th.t);
    let mut blocks = Vec::new();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..m {
        if stats.total_mass[i] <= th.tau_empty {
            blocks.push(Block {
                kind: AssociationKind::AlmostEmpty,
                fitted: vec![i],
                truth: Vec::new(),
                error: stats.total_mass[i],
                bound: bounds.as_ref().map(|b| b.empty),
            });
            continue;
        }
        let heavy: Vec<usize> = (0..k).filter(|&s| stats.mass[i][s] >= th.tau_in).collect();
        if heavy.len() >= 2 {
            let mut mean = vec![0.0; model.dim()];
            for &s in &heavy {
                for (a, x) in mean.iter_mut().zip(model.center(s)) {
                    *a += x / heavy.len() as f64;
                }
            }
            blocks.push(Block {
                kind: AssociationKind::OneFitMany,
                fitted: vec![i],
                truth: heavy,
                error: norm(&sub(solution.center(i), &mean)),
                bound: bounds.as_ref().map(|b| b.fit_many),
            });
            continue;
        }
        let mut dominant = 0;
        for s in 1..k {
            if stats.mass[i][s] > stats.mass[i][dominant] {
                dominant = s;
            }
        }
        groups.entry(dominant).or_default().push(i);
    }
    for (s, fitted) in groups {
        let error = fitted
            .iter()
            .map(|&i| dist2(solution.center(i), model.center(s)).sqrt())
            .fold(0.0, f64::max);
        blocks.push(Block {
            kind: if fitted.len() >= 2 { AssociationKind::ManyFitOne } else { AssociationKind::OneFitOne },
            fitted,
            truth: vec![s],
            error,
            bound: bounds.as_ref().map(|b| b.fit_one),
        });
    }
    blocks.sort_by(|a, b| {
        let key = |x: &Block| (x.truth.is_empty(), x.truth.first().copied(), x.fitted.first().copied());
        key(a).cmp(&key(b))
    });

    let mut violations = Vec::new();
    for s in 0..k {
        let owners: Vec<usize> = (0..blocks.len()).filter(|&a| blocks[a].truth.contains(&s)).collect();
        match owners.len() {
            0 => violations.push(format!("true center {s} is not covered by any block")),
            1 => {}
            _ => {
                let fitted: Vec<String> = owners.iter().map(|&a| format!("{:?}", blocks[a].fitted)).collect();
                violations.push(format!("true center {s} is claimed by fitted sets {}", fitted.join(" and ")));
            }
        }
    }

    let snr = if k >= 2 { Some(snr_gate(model, th.c, th.t)?) } else { None };
    Ok(AssociationReport {
        blocks,
        valid_partition: violations.is_empty(),
        violations,
        thresholds: th,
        internals: ClassifierInternals {
            t_sets,
            a_sets,
            b_sets,
            mass: stats.mass,
            total_mass: stats.total_mass,
        },
        snr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BallGuarantee,
    GaussianGuarantee,
    BelowThreshold,
    InvalidT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Premise {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrGate {
    pub regime: Regime,
    pub premises: Vec<Premise>,
    pub truncation: Option<GaussianTruncation>,
    pub note: String,
}

impl SnrGate {
    pub fn guaranteed(&self) -> bool {
        matches!(self.regime, Regime::BallGuarantee | Regime::GaussianGuarantee)
    }
}

pub fn snr_gate(model: &MixtureModel, c: f64, t: Option<f64>) -> Result<SnrGate> {
    let sep = model.separation_stats()?;
    let k = model.k() as f64;
    let premise = |name: &str, lhs: f64, rhs: f64, strict: bool| Premise {
        name: name.into(),
        lhs,
        rhs,
        holds: if strict { lhs > rhs } else { lhs >= rhs },
    };
    let (premises, truncation, ok) = match model.kind() {
        ModelKind::Ball => (
            vec![
                premise("eta_max > 4 c^2 k^4", sep.eta_max, 4.0 * c * c * k.powi(4), true),
                premise("eta_min >= 10 c k^2 sqrt(eta_max)", sep.eta_min, 10.0 * c * k * k * sep.eta_max.sqrt(), false),
            ],
            None,
            Regime::BallGuarantee,
        ),
        ModelKind::Gaussian => {
            let tr = match t {
                Some(t) => GaussianTruncation::new(model, t),
                None => GaussianTruncation::smallest_admissible(model),
            };
            if !tr.is_admissible() {
                return Ok(SnrGate {
                    regime: Regime::InvalidT,
                    premises: vec![
                        premise("t > 1", tr.t, 1.0, true),
                        premise("1/4 > phi(t)", 0.25, tr.phi, true),
                    ],
                    truncation: Some(tr),
                    note: format!("invalid truncation: t = {} gives phi(t) = {}", tr.t, tr.phi),
                });
            }
            (
                vec![
                    premise("eta_max >= 16 c^2 k^4 t", sep.eta_max, 16.0 * c * c * k.powi(4) * tr.t, false),
                    premise(
                        "eta_min >= 8 c sqrt(t) k^2 sqrt(eta_max) + 7 k phi eta_max",
                        sep.eta_min,
                        8.0 * c * tr.t.sqrt() * k * k * sep.eta_max.sqrt() + 7.0 * k * tr.phi * sep.eta_max,
                        false,
                    ),
                ],
                Some(tr),
                Regime::GaussianGuarantee,
            )
        }
    };
    let all = premises.iter().all(|p| p.holds);
    Ok(SnrGate {
        regime: if all { ok } else { Regime::BelowThreshold },
        premises,
        truncation,
        note: if all { "within guaranteed regime".into() } else { "outside guaranteed regime".into() },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub i: usize,
    pub j: usize,
    pub s: usize,
    pub d_ij: f64,
    pub big_d_ijs: f64,
    pub rho: f64,
    pub rho_stderr: f64,
    /// `d_ij * rho` and its standard error.
    pub d_rho: f64,
    pub d_rho_stderr: f64,
    /// `D_ijs^2 / d_ij * rho` and its standard error.
    pub dd_rho: f64,
    pub dd_rho_stderr: f64,
    pub rho_exceeds_lambda: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyViolation {
    pub i: usize,
    pub j: usize,
    pub s: usize,
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyBoundReport {
    pub threshold: f64,
    pub lambda: f64,
    pub entries: Vec<FamilyEntry>,
    /// Entries exceeding `k/2` by more than four standard errors.
    pub violations: Vec<FamilyViolation>,
}

impl FamilyBoundReport {
    pub fn entry(&self, i: usize, j: usize, s: usize) -> Option<&FamilyEntry> {
        let (a, b) = (i.min(j), i.max(j));
        self.entries.iter().find(|e| e.i == a && e.j == b && e.s == s)
    }
}

/// Both boundary inequalities for every adjacent pair and every component.
pub fn family_bound_check(
    solution: &Solution,
    model: &MixtureModel,
    est: &BoundaryEstimator,
    lambda: f64,
) -> Result<FamilyBoundReport> {
    solution.check_dim(model.dim())?;
    let vor = build_voronoi(solution)?;
    let threshold = model.k() as f64 / 2.0;
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    for &(i, j) in &vor.adjacency {
        for s in 0..model.k() {
            let q = boundary_quantities(solution, model, i, j, s, est)?;
            let ratio = q.big_d_ijs * q.big_d_ijs / q.d_ij;
            let e = FamilyEntry {
                i,
                j,
                s,
                d_ij: q.d_ij,
                big_d_ijs: q.big_d_ijs,
                rho: q.rho,
                rho_stderr: q.rho_stderr,
                d_rho: q.d_ij * q.rho,
                d_rho_stderr: q.d_ij * q.rho_stderr,
                dd_rho: ratio * q.rho,
                dd_rho_stderr: ratio * q.rho_stderr,
                rho_exceeds_lambda: q.rho > lambda,
            };
            for (name, v, se) in [("d*rho", e.d_rho, e.d_rho_stderr), ("D^2/d*rho", e.dd_rho, e.dd_rho_stderr)] {
                if v > threshold + 4.0 * se {
                    violations.push(FamilyViolation { i, j, s, quantity: name.into(), value: v, stderr: se });
                }
            }
            entries.push(e);
        }
    }
    Ok(FamilyBoundReport { threshold, lambda, entries, violations })
}
