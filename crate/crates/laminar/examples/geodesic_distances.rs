//! Geodesic distances from a query point on two moons: build the density
//! graph, run Dijkstra, and render the distance map next to its Euclidean
//! counterpart plus the standardized log-ratio comparison.
//!
//! ```text
//! cargo run --release --example geodesic_distances
//! ```

use laminar::data::{generate, DatasetKind, DatasetSpec};
use laminar::flow::{train, TrainConfig};
use laminar::graph::{build_graph, distance_matrix, pairwise_euclidean, PseudoCdf};
use laminar::metric::MetricTensorField;
use laminar::viz;

fn main() -> laminar::Result<()> {
    let out_dir = std::path::PathBuf::from("target/laminar-examples/geodesic_distances");
    std::fs::create_dir_all(&out_dir)?;

    let spec = DatasetSpec {
        kind: DatasetKind::TwoMoons { noise: 0.08 },
        n_points: 1200,
        seed: 5,
    };
    let cloud = generate(&spec)?;

    let cfg = TrainConfig {
        epochs: 150,
        seed: 13,
        ..TrainConfig::default()
    };
    println!("training on two moons ({} points)...", cloud.len());
    let (model, _) = train(&cloud.points.view(), &cfg)?;

    let pseudo = PseudoCdf::compute(&cloud.points.view(), &model)?;
    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    let graph = build_graph(&cloud.points.view(), &pseudo, &field, 20)?;
    println!(
        "graph: {} nodes, {} edges, components {:?}",
        graph.n_nodes,
        graph.edge_count(),
        graph.component_sizes()
    );

    let query = 0usize;
    let dm = distance_matrix(&graph, &[query])?;
    let lam: Vec<f64> = dm.row(0).to_vec();
    let euc = pairwise_euclidean(&cloud.points.view());
    let euc_q: Vec<f64> = euc.row(query).to_vec();

    viz::distance_map(
        &cloud.points.view(),
        &lam,
        query,
        25,
        &out_dir.join("flow_metric.svg"),
    )?;
    viz::distance_map(
        &cloud.points.view(),
        &euc_q,
        query,
        25,
        &out_dir.join("euclidean.svg"),
    )?;
    let values = viz::ratio_map(
        &cloud.points.view(),
        &lam,
        &euc_q,
        query,
        &out_dir.join("ratio.svg"),
    )?;

    let negative = values.iter().filter(|v| **v < 0.0).count();
    println!(
        "ratio map: {negative} of {} points have relatively smaller flow-metric distances",
        values.len()
    );
    println!("figures in {}", out_dir.display());
    Ok(())
}
