//! Landscape analysis for the population k-means objective.
//!
//! The crate builds balanced mixture models (uniform balls or spherical
//! Gaussians), evaluates empirical and population k-means objectives, runs
//! Lloyd iterations, measures Voronoi-cell statistics, and classifies
//! candidate local minima into many-fit-one, one-fit-many, one-fit-one and
//! almost-empty associations.

pub mod classify;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lloyd;
pub mod model;
pub mod objective;
pub mod population;
pub mod survey;
pub mod vector;
pub mod verify;

pub use classify::{
    classify, family_bound_check, snr_gate, AssociationKind, AssociationReport, Block, FamilyBoundReport,
    GaussianTruncation, SnrGate, Thresholds,
};
pub use error::{Error, Result};
pub use geometry::{assign, build_voronoi, BoundaryQuantities, CellStats, Solution, VoronoiDiagram};
pub use lloyd::{kmeanspp_init, run_lloyd, EmptyCellPolicy, Init, LloydConfig, LloydTarget, TrajectoryLog};
pub use model::{MixtureModel, ModelConfig, ModelKind, SampleSet, SeparationStats};
pub use objective::{empirical_objective, DirectionalSlice, Grad1D};
pub use population::{Estimate, Estimator, Population};
pub use verify::Certificate;
