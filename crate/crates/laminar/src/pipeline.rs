//! End-to-end orchestration: one JSON config in, a reproducible directory of
//! artifacts out.
//!
//! All randomness derives from the config's master seed through a fixed
//! split (SplitMix64 of `seed ^ stage`), so a config file alone pins every
//! byte of the output on a given platform.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::cluster;
use crate::data::{self, DatasetKind, DatasetSpec};
use crate::error::{Error, Result};
use crate::flow::{self, FlowModel, TrainConfig};
use crate::graph::{self, DistanceMatrix, PseudoCdf};
use crate::metric::{self, MetricTensorField};
use crate::stats;
use crate::transform::GroundTruthTransform;
use crate::viz;

/// Where the points come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    /// Generate from a dataset description; the seed comes from the master
    /// seed's dataset stage.
    Dataset { kind: DatasetKind, n_points: usize },
    /// Load an existing CSV (header row, optional trailing `label` column).
    Csv { path: PathBuf },
}

/// One fully reproducible run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub data: DataSource,
    /// Flow hyperparameters; the `seed` field is ignored and replaced by the
    /// master seed's training stage.
    #[serde(default)]
    pub flow: TrainConfig,
    /// Neighbour count of the density graph.
    #[serde(default = "default_graph_k")]
    pub graph_k: usize,
    /// Number of clusters for k-medoids; falls back to the data set's
    /// ground-truth cluster count; clustering is skipped if neither exists.
    #[serde(default)]
    pub cluster_k: Option<usize>,
    /// Point whose distance row feeds the figures.
    #[serde(default)]
    pub query_index: usize,
    /// Master seed; split per stage.
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn default_graph_k() -> usize {
    20
}

/// Stage indices of the master-seed split.
pub mod stage {
    pub const DATASET: u64 = 0;
    pub const TRAIN: u64 = 1;
    pub const CLUSTER: u64 = 2;
}

/// SplitMix64 of `master ^ stage`; documented so replays can be constructed
/// in any language.
pub fn stage_seed(master: u64, stage: u64) -> u64 {
    let mut z = master ^ stage.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Artifact paths and summary numbers of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub data_csv: PathBuf,
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
    pub tensors_bin: PathBuf,
    pub distances_bin: PathBuf,
    pub labels_csv: Option<PathBuf>,
    pub final_loss: f64,
    pub component_sizes: Vec<usize>,
    /// `(truth_label, best_jaccard)` when ground-truth labels exist and
    /// clustering ran.
    pub jaccard: Option<Vec<(usize, f64)>>,
}

/// Run the full pipeline described by `config`.
pub fn run(config: &PipelineConfig) -> Result<RunSummary> {
    std::fs::create_dir_all(&config.out_dir)?;
    let out = |name: &str| config.out_dir.join(name);

    // data
    let (cloud, spec) = match &config.data {
        DataSource::Dataset { kind, n_points } => {
            let spec = DatasetSpec {
                kind: kind.clone(),
                n_points: *n_points,
                seed: stage_seed(config.seed, stage::DATASET),
            };
            (data::generate(&spec)?, Some(spec))
        }
        DataSource::Csv { path } => (data::load_csv(path)?, None),
    };
    let data_csv = out("data.csv");
    data::save_csv(&cloud, &data_csv, spec.as_ref())?;

    // flow training
    let mut train_cfg = config.flow.clone();
    train_cfg.seed = stage_seed(config.seed, stage::TRAIN);
    let (model, report) = flow::train(&cloud.points.view(), &train_cfg)?;
    let checkpoint = out("model.ckpt");
    model.save(&checkpoint)?;
    let loss_csv = out("loss.csv");
    save_loss_csv(&report.losses, &loss_csv)?;

    // pseudo-cdf, tensors, graph, distances
    let pseudo = PseudoCdf::compute(&cloud.points.view(), &model)?;
    data::save_matrix_csv(&pseudo.coords.view(), &out("pseudo_cdf.csv"))?;
    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    let tensors_bin = out("tensors.bin");
    field.save(&tensors_bin)?;
    let density = graph::build_graph(&cloud.points.view(), &pseudo, &field, config.graph_k)?;
    save_edges_csv(&density, &out("edges.csv"))?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    let distances = graph::distance_matrix(&density, &all)?;
    let distances_bin = out("distances.bin");
    distances.save(&distances_bin)?;
    let component_sizes = density.component_sizes();

    // clustering
    let k_clusters = config
        .cluster_k
        .or_else(|| spec.as_ref().and_then(|s| s.n_clusters()));
    let mut labels_csv = None;
    let mut jaccard = None;
    if let Some(k) = k_clusters {
        let result = cluster::k_medoids(
            &distances.values.view(),
            k,
            stage_seed(config.seed, stage::CLUSTER),
        )?;
        let path = out("labels.csv");
        cluster::save_labels_csv(&result.assignment, &path)?;
        labels_csv = Some(path);
        if let Some(truth) = &cloud.labels {
            jaccard = Some(cluster::jaccard_best_match(truth, &result.assignment)?);
        }
    }

    // figures from the query point
    let q = config.query_index.min(cloud.len() - 1);
    let lam_row: Vec<f64> = distances.values.row(q).to_vec();
    viz::distance_map(
        &cloud.points.view(),
        &lam_row,
        q,
        25,
        &out("fig_distance.svg"),
    )?;
    let euc = graph::pairwise_euclidean(&cloud.points.view());
    let euc_row: Vec<f64> = euc.row(q).to_vec();
    viz::distance_map(
        &cloud.points.view(),
        &euc_row,
        q,
        25,
        &out("fig_distance_euclid.svg"),
    )?;
    if lam_row
        .iter()
        .enumerate()
        .all(|(i, d)| i == q || (d.is_finite() && *d > 0.0))
    {
        viz::ratio_map(
            &cloud.points.view(),
            &lam_row,
            &euc_row,
            q,
            &out("fig_ratio.svg"),
        )?;
    }
    if cloud.dim() == 2 {
        viz::render_tensor_field(
            &cloud.points.view(),
            &field.tensors,
            &out("fig_tensors.svg"),
        )?;
    }

    Ok(RunSummary {
        data_csv,
        checkpoint,
        loss_csv,
        tensors_bin,
        distances_bin,
        labels_csv,
        final_loss: report.losses.last().copied().unwrap_or(f64::NAN),
        component_sizes,
        jaccard,
    })
}

fn save_loss_csv(losses: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in losses.iter().enumerate() {
        out.push_str(&format!("{e},{l}\n"));
    }
    crate::flow::write_atomic(path, out.as_bytes())
}

fn save_edges_csv(graph: &graph::DensityGraph, path: &Path) -> Result<()> {
    let mut out = String::from("i,j,weight\n");
    for (i, adj) in graph.adjacency.iter().enumerate() {
        for &(j, w) in adj {
            if i < j {
                out.push_str(&format!("{i},{j},{w}\n"));
            }
        }
    }
    crate::flow::write_atomic(path, out.as_bytes())
}

/// Train a model from a CSV and persist checkpoint + loss log
/// (the `train` subcommand).
pub fn train_from_csv(
    data_csv: &Path,
    checkpoint: &Path,
    loss_csv: &Path,
    cfg: &TrainConfig,
) -> Result<(FlowModel, Vec<f64>)> {
    let cloud = data::load_csv(data_csv)?;
    let (model, report) = flow::train(&cloud.points.view(), cfg)?;
    if let Some(epoch) = report.aborted_at_epoch {
        eprintln!("warning: non-finite loss at epoch {epoch}; keeping last finite parameters");
    }
    model.save(checkpoint)?;
    save_loss_csv(&report.losses, loss_csv)?;
    Ok((model, report.losses))
}

/// Artifacts written by the `distances` subcommand.
pub struct DistancesOutput {
    pub matrix: DistanceMatrix,
    pub component_sizes: Vec<usize>,
}

/// Pseudo-cdf, tensor field, graph and distance rows for `sources`
/// (`None` = all points), persisted under `out_dir`.
pub fn distances_from_checkpoint(
    checkpoint: &Path,
    data_csv: &Path,
    k: usize,
    sources: Option<Vec<usize>>,
    out_dir: &Path,
) -> Result<DistancesOutput> {
    let model = FlowModel::load(checkpoint)?;
    let cloud = data::load_csv(data_csv)?;
    if cloud.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: cloud.dim(),
            context: format!(
                "model {} vs data {}",
                checkpoint.display(),
                data_csv.display()
            ),
        });
    }
    std::fs::create_dir_all(out_dir)?;
    let pseudo = PseudoCdf::compute(&cloud.points.view(), &model)?;
    data::save_matrix_csv(&pseudo.coords.view(), &out_dir.join("pseudo_cdf.csv"))?;
    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    field.save(&out_dir.join("tensors.bin"))?;
    let density = graph::build_graph(&cloud.points.view(), &pseudo, &field, k)?;
    save_edges_csv(&density, &out_dir.join("edges.csv"))?;
    let component_sizes = density.component_sizes();
    if component_sizes.len() > 1 {
        eprintln!(
            "warning: density graph has {} components (sizes {:?}); unreachable pairs are marked",
            component_sizes.len(),
            component_sizes
        );
    }
    let sources = sources.unwrap_or_else(|| (0..cloud.len()).collect());
    let matrix = graph::distance_matrix(&density, &sources)?;
    matrix.save(&out_dir.join("distances.bin"))?;
    matrix.save_csv(&out_dir.join("distances.csv"))?;
    Ok(DistancesOutput {
        matrix,
        component_sizes,
    })
}

/// Per-point Wasserstein comparison of a trained model's tensors against the
/// ground-truth metric of `transform` (the `compare` subcommand).
pub struct CompareOutput {
    pub median: f64,
    pub p90: f64,
    pub aligned_median: f64,
    pub aligned_scale: f64,
}

pub fn compare_to_ground_truth(
    checkpoint: &Path,
    data_csv: &Path,
    transform: &GroundTruthTransform,
    scores_csv: &Path,
) -> Result<CompareOutput> {
    let model = FlowModel::load(checkpoint)?;
    let cloud = data::load_csv(data_csv)?;
    if cloud.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: cloud.dim(),
            context: "compare data vs model".into(),
        });
    }
    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    let mut targets = Vec::with_capacity(cloud.len());
    for row in cloud.points.outer_iter() {
        targets.push(metric::ground_truth_metric(&row, transform)?);
    }
    let raw: Vec<f64> = field
        .tensors
        .iter()
        .zip(targets.iter())
        .map(|(s, t)| metric::wasserstein_gaussian(s, t))
        .collect::<Result<_>>()?;
    let aligned = metric::scale_aligned_wasserstein(&field.tensors, &targets)?;
    // scores CSV: coordinates, raw and scale-aligned distances
    let mut text = String::from("x1,x2,w2,w2_aligned\n");
    for (i, row) in cloud.points.outer_iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            row[0], row[1], raw[i], aligned.scores[i]
        ));
    }
    crate::flow::write_atomic(scores_csv, text.as_bytes())?;
    Ok(CompareOutput {
        median: stats::median(&raw),
        p90: stats::quantile(&raw, 0.9),
        aligned_median: aligned.median,
        aligned_scale: aligned.scale,
    })
}

/// Mean NLL of a stored checkpoint on a data set; lets callers verify a
/// reloaded model reproduces its training loss.
pub fn checkpoint_loss(checkpoint: &Path, data_csv: &Path, n_steps: usize) -> Result<f64> {
    let model = FlowModel::load(checkpoint)?;
    let cloud = data::load_csv(data_csv)?;
    flow::mean_negative_log_likelihood(&model, &cloud.points.view(), n_steps)
}

/// Euclidean k-medoids baseline on raw coordinates (for comparisons).
pub fn euclidean_cluster(points: &ArrayView2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let euc = graph::pairwise_euclidean(points);
    Ok(cluster::k_medoids(&euc.view(), k, seed)?.assignment)
}
