//! Learn metric tensors on a sheared disk and compare them against the
//! analytic ground truth, point by point, with the Gaussian Wasserstein
//! distance. Renders the colour-wheel tensor field and the per-point
//! difference heat map.
//!
//! ```text
//! cargo run --release --example metric_tensors
//! ```

use laminar::data::{generate, DatasetKind, DatasetSpec};
use laminar::flow::{train, TrainConfig};
use laminar::metric::{
    ground_truth_metric, scale_aligned_wasserstein, wasserstein_gaussian, MetricTensorField,
};
use laminar::stats;
use laminar::transform::GroundTruthTransform;
use laminar::viz;
use ndarray::Array2;

fn main() -> laminar::Result<()> {
    let out_dir = std::path::PathBuf::from("target/laminar-examples/metric_tensors");
    std::fs::create_dir_all(&out_dir)?;

    let shear = GroundTruthTransform::shear();
    let spec = DatasetSpec {
        kind: DatasetKind::TransformedDisk {
            transform: shear.clone(),
        },
        n_points: 1500,
        seed: 21,
    };
    let cloud = generate(&spec)?;

    let cfg = TrainConfig {
        epochs: 150,
        seed: 3,
        ..TrainConfig::default()
    };
    println!("training on the sheared disk ({} points)...", cloud.len());
    let (model, _) = train(&cloud.points.view(), &cfg)?;

    let field = MetricTensorField::compute(&cloud.points.view(), &model)?;
    let targets: Vec<Array2<f64>> = cloud
        .points
        .outer_iter()
        .map(|row| ground_truth_metric(&row, &shear))
        .collect::<laminar::Result<_>>()?;

    let raw: Vec<f64> = field
        .tensors
        .iter()
        .zip(targets.iter())
        .map(|(s, t)| wasserstein_gaussian(s, t))
        .collect::<laminar::Result<_>>()?;
    println!(
        "W2 vs ground truth: median {:.4}, p90 {:.4}",
        stats::median(&raw),
        stats::quantile(&raw, 0.9)
    );
    let aligned = scale_aligned_wasserstein(&field.tensors, &targets)?;
    println!(
        "after global rescale by {:.3}: median {:.4}",
        aligned.scale, aligned.median
    );

    viz::render_tensor_field(
        &cloud.points.view(),
        &field.tensors,
        &out_dir.join("learned.svg"),
    )?;
    viz::render_tensor_field(
        &cloud.points.view(),
        &targets,
        &out_dir.join("ground_truth.svg"),
    )?;
    viz::render_scalar_map(
        &cloud.points.view(),
        &aligned.scores,
        "wasserstein",
        &out_dir.join("difference.svg"),
    )?;
    viz::render_color_wheel(&out_dir.join("wheel.svg"))?;
    println!("figures in {}", out_dir.display());
    Ok(())
}
