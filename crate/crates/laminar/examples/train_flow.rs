//! Train the continuous planar flow on two moons and check how Gaussian the
//! pushforward is.
//!
//! ```text
//! cargo run --release --example train_flow
//! ```

use laminar::data::{generate, DatasetKind, DatasetSpec};
use laminar::flow::{train, TrainConfig};
use laminar::sphere;
use laminar::stats;
use laminar::FlowModel;

fn main() -> laminar::Result<()> {
    let out_dir = std::path::PathBuf::from("target/laminar-examples/train_flow");
    std::fs::create_dir_all(&out_dir)?;

    let spec = DatasetSpec {
        kind: DatasetKind::TwoMoons { noise: 0.1 },
        n_points: 1000,
        seed: 42,
    };
    let cloud = generate(&spec)?;

    let cfg = TrainConfig {
        epochs: 120,
        seed: 7,
        ..TrainConfig::default()
    };
    println!(
        "training {} epochs on {} points...",
        cfg.epochs,
        cloud.len()
    );
    let (model, report) = train(&cloud.points.view(), &cfg)?;
    println!(
        "mean negative log-likelihood: {:.4} -> {:.4}",
        report.losses[0],
        report.losses.last().unwrap()
    );

    // how close is the pushforward to N(0, I)?
    let states = model.integrate_batch(&cloud.points.view(), false)?;
    for c in 0..2 {
        let coords: Vec<f64> = states.iter().map(|s| s.z[c]).collect();
        println!(
            "coordinate {c}: KS vs N(0,1) = {:.4}",
            stats::ks_standard_normal(&coords)
        );
    }
    // and the ball image to uniform?
    let mut norms_sq = Vec::with_capacity(states.len());
    for s in &states {
        let b = sphere::to_ball(&s.z.view())?;
        norms_sq.push(b.iter().map(|v| v * v).sum::<f64>());
    }
    println!(
        "ball norms²: KS vs U(0,1) = {:.4}",
        stats::ks_uniform01(&norms_sq)
    );

    let ckpt = out_dir.join("moons.ckpt");
    model.save(&ckpt)?;
    let reloaded = FlowModel::load(&ckpt)?;
    assert_eq!(
        reloaded.hypernet.params_flat(),
        model.hypernet.params_flat()
    );
    println!("checkpoint round-trip OK: {}", ckpt.display());
    Ok(())
}
