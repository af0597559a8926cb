//! k-medoids with learned geodesic distances versus plain Euclidean
//! distances, scored by per-cluster Jaccard overlap with the ground truth.
//!
//! ```text
//! cargo run --release --example cluster_compare
//! ```

use laminar::cluster::{jaccard_best_match, k_medoids};
use laminar::data::{generate, DatasetKind, DatasetSpec};
use laminar::flow::{train, TrainConfig};
use laminar::graph::{build_graph, distance_matrix_connected, pairwise_euclidean, PseudoCdf};
use laminar::metric::MetricTensorField;

fn main() -> laminar::Result<()> {
    let spec = DatasetSpec {
        kind: DatasetKind::FilamentClusters { noise: 0.06 },
        n_points: 900,
        seed: 1007,
    };
    let cloud = generate(&spec)?;
    let truth = cloud.labels.clone().expect("filaments carry labels");
    let k_clusters = 3;

    let cfg = TrainConfig {
        epochs: 150,
        seed: 1,
        ..TrainConfig::default()
    };
    println!("training on filaments ({} points)...", cloud.len());
    let (model, _) = train(&cloud.points.view(), &cfg)?;
    let pseudo = PseudoCdf::compute(&cloud.points.view(), &model)?;
    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    let graph = build_graph(&cloud.points.view(), &pseudo, &field, 20)?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    let learned = distance_matrix_connected(&graph, &all)?;

    let lam = k_medoids(&learned.values.view(), k_clusters, 0)?;
    let euc_matrix = pairwise_euclidean(&cloud.points.view());
    let euc = k_medoids(&euc_matrix.view(), k_clusters, 0)?;

    println!("\ncluster  learned  euclidean");
    let lam_scores = jaccard_best_match(&truth, &lam.assignment)?;
    let euc_scores = jaccard_best_match(&truth, &euc.assignment)?;
    for ((label, l), (_, e)) in lam_scores.iter().zip(euc_scores.iter()) {
        println!("{label:>7}  {l:>7.4}  {e:>9.4}");
    }
    let mean = |s: &[(usize, f64)]| s.iter().map(|(_, v)| v).sum::<f64>() / s.len() as f64;
    println!(
        "   mean  {:>7.4}  {:>9.4}",
        mean(&lam_scores),
        mean(&euc_scores)
    );
    Ok(())
}
