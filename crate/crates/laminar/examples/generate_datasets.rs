//! Generate one CSV (plus JSON sidecar) for every built-in data set family.
//!
//! ```text
//! cargo run --release --example generate_datasets
//! ```

use laminar::data::{generate, save_csv, DatasetKind, DatasetSpec};
use laminar::transform::GroundTruthTransform;

fn main() -> laminar::Result<()> {
    let out_dir = std::path::PathBuf::from("target/laminar-examples/datasets");
    std::fs::create_dir_all(&out_dir)?;

    let sets: Vec<(&str, DatasetKind)> = vec![
        ("uniform_disk", DatasetKind::UniformDisk),
        (
            "sheared_disk",
            DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::shear(),
            },
        ),
        (
            "stretched_disk",
            DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::stretch(3.0, 1.0),
            },
        ),
        (
            "swirled_disk",
            DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::Swirl { strength: 1.0 },
            },
        ),
        (
            "bent_disk",
            DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::SinusoidalBend {
                    amplitude: 0.5,
                    frequency: 3.0,
                },
            },
        ),
        ("two_moons", DatasetKind::TwoMoons { noise: 0.1 }),
        (
            "rings",
            DatasetKind::ConcentricRings {
                radii: vec![1.0, 2.2],
                noise: 0.08,
            },
        ),
        (
            "blobs",
            DatasetKind::AnisotropicBlobs {
                centers: vec![[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]],
                covariances: vec![
                    [[1.0, 0.0], [0.0, 0.05]],
                    [[0.05, 0.0], [0.0, 1.0]],
                    [[0.4, 0.3], [0.3, 0.4]],
                ],
            },
        ),
        ("filaments", DatasetKind::FilamentClusters { noise: 0.06 }),
    ];

    for (name, kind) in sets {
        let spec = DatasetSpec {
            kind,
            n_points: 2000,
            seed: 7,
        };
        let cloud = generate(&spec)?;
        let path = out_dir.join(format!("{name}.csv"));
        save_csv(&cloud, &path, Some(&spec))?;
        println!(
            "{name:>15}: {} points{} -> {}",
            cloud.len(),
            cloud
                .labels
                .as_ref()
                .map(|l| format!(", {} clusters", l.iter().max().unwrap() + 1))
                .unwrap_or_default(),
            path.display()
        );
    }
    Ok(())
}
