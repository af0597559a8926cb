//! The whole pipeline from a single config: generate, train, build the
//! density graph, compute all-pairs geodesic distances, cluster, and render
//! the figures — everything lands in one output directory.
//!
//! ```text
//! cargo run --release --example full_pipeline
//! ```

use laminar::data::DatasetKind;
use laminar::flow::TrainConfig;
use laminar::pipeline::{run, DataSource, PipelineConfig};

fn main() -> laminar::Result<()> {
    let config = PipelineConfig {
        data: DataSource::Dataset {
            kind: DatasetKind::TwoMoons { noise: 0.1 },
            n_points: 800,
        },
        flow: TrainConfig {
            epochs: 120,
            ..TrainConfig::default()
        },
        graph_k: 20,
        cluster_k: Some(2),
        query_index: 0,
        seed: 7,
        out_dir: "target/laminar-examples/full_pipeline".into(),
    };
    // the same config can be stored and replayed via `laminar run --config`
    println!("{}", serde_json::to_string_pretty(&config)?);

    let summary = run(&config)?;
    println!("\nfinal loss: {:.4}", summary.final_loss);
    println!("graph components: {:?}", summary.component_sizes);
    if let Some(jaccard) = &summary.jaccard {
        println!("cluster  jaccard");
        for (label, score) in jaccard {
            println!("{label:>7}  {score:.4}");
        }
    }
    println!("artifacts in {}", config.out_dir.display());
    Ok(())
}
