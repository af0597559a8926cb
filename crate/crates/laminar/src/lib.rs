//! Locally adaptive metric learning for point clouds.
//!
//! `laminar` learns a Riemannian metric from the shape of a data set alone:
//! a continuous planar flow is trained to transport the input points to a
//! standard normal, an analytic radial map carries the Gaussian onto the
//! uniform unit ball (the *pseudo-cdf*), and the Jacobian of the composed
//! transformation defines a per-point metric tensor. Distances between data
//! points are then geodesic shortest paths in a k-nearest-neighbour graph
//! whose edges are weighted by local Mahalanobis lengths.
//!
//! The crate is organised around the pipeline stages:
//!
//! * [`data`] — seeded toy data set generators and CSV I/O,
//! * [`flow`] — the continuous planar flow: dynamics, RK4 integration with
//!   Jacobian propagation, maximum-likelihood training, checkpoints,
//! * [`sphere`] — the Gaussian-to-ball radial map and its exact Jacobian,
//! * [`metric`] — metric tensors, Mahalanobis edge weights, ground-truth
//!   metrics for analytic transformations, Gaussian Wasserstein comparison,
//! * [`graph`] — kNN graph construction and Dijkstra geodesics,
//! * [`cluster`] — k-medoids on precomputed distances and Jaccard scoring,
//! * [`viz`] — SVG renderings of tensor fields, distance maps and ratio maps,
//! * [`pipeline`] — configuration and end-to-end orchestration used by the
//!   `laminar` binary and the runnable examples.
//!
//! Every run is reproducible: all randomness flows from explicit seeds
//! through a fixed, documented generator (ChaCha8), and the binary file
//! formats round-trip bit-exactly.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability, and the `acceptance` integration test for the end-to-end
//! verification suite.

pub mod cluster;
pub mod data;
pub mod error;
pub mod flow;
pub mod graph;
pub mod linalg;
pub mod metric;
pub mod pipeline;
pub mod special;
pub mod sphere;
pub mod stats;
pub mod transform;
pub mod viz;

pub use cluster::{jaccard_best_match, k_medoids, ClusteringResult};
pub use data::{generate, DatasetKind, DatasetSpec, PointCloud};
pub use error::{Error, Result};
pub use flow::{FlowModel, FlowState, TrainConfig, TrainReport};
pub use graph::{
    build_graph, distance_matrix, distance_matrix_connected, knn, shortest_paths, DensityGraph,
    DistanceMatrix, DistanceResult, PseudoCdf,
};
pub use metric::{
    ground_truth_metric, mahalanobis, metric_tensor, wasserstein_gaussian, MetricTensorField,
};
pub use pipeline::PipelineConfig;
pub use transform::GroundTruthTransform;
