//! Capacitated spatial clustering toolkit.
//!
//! Implements the capacitated k-means heuristic and its neural variant
//! (priority scoring via a small graph network trained on heuristic
//! teacher solutions), seeding strategies, naive baselines, brute-force
//! verification oracles, and a cluster-first-route-second CVRP
//! construction with a sweep baseline.

pub mod bench;
pub mod error;
pub mod export;
pub mod instance;
pub mod knn;
pub mod nn;
pub mod rng;
pub mod routing;
pub mod scoring;
pub mod solver;

pub use error::{Error, Result};
pub use instance::{CvrpInstance, GmmSpec, ProblemInstance};
pub use knn::KnnGraph;
pub use scoring::{ModelConfig, ScoreModel};
pub use solver::{Assignment, Centers, ClusterResult, SolverConfig};

