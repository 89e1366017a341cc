//! Generalized k-means++ seeding (k-variates++) and its distributed,
//! streaming, online and differentially private specializations, together
//! with estimators, exact small-instance oracles, baselines, synthetic data
//! generators and an experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod density;
pub mod distributed;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod privacy;
pub mod sampling;
pub mod seeding;
pub mod streaming;

pub use density::{DensityKind, DensityModel, LocalDensity};
pub use distributed::{
    dkmeans_private, dkmeans_protected, forgy_spread, kmeans_parallel_baseline, MessageLog,
    PeerNetwork,
};
pub use error::{Error, Result};
pub use geometry::{
    brute_force_optimum, centroid, enclosing_radius, kmeans_potential, log_factor, potential,
    sq_dist, CenterSet, Dataset, Distortion, Generator, Point, PotentialBreakdown, Provenance,
    RadiusNorm,
};
pub use privacy::{
    dp_kvariates, epsilon_tilde, likelihood_exact, lr_bound_rhs, DpConfig, DpMode, SpreadMethod,
    SpreadReport,
};
pub use seeding::{
    estimate_eta, kmeanspp_seed, kvariates_seed, lloyd_refine, DrawLog, ProbeFunction,
    SeedingConfig,
};
pub use streaming::{
    build_synopses_online, build_synopses_uniform, okmeans_run, skmeans, MinibatchStream,
    SynopsisBuilder, SynopsisSet,
};
