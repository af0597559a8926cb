//! Seeded toy data sets and their CSV persistence.
//!
//! Every generator draws from a ChaCha8 stream seeded with the spec's `seed`
//! field, so identical specs produce bit-identical clouds on every platform
//! (no dependence on the process RNG). Data sets with known ground truth
//! ship labels; transformed disks ship the exact transform so the learned
//! metric can be scored against it.

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg;
use crate::transform::GroundTruthTransform;

/// A point set with optional ground-truth labels.
#[derive(Debug, Clone)]
pub struct PointCloud {
    /// N×d coordinates.
    pub points: Array2<f64>,
    /// Cluster label per row, where the generator defines one.
    pub labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Which toy distribution to draw.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetKind {
    /// Area-uniform unit disk (radius sampled as √U).
    UniformDisk,
    /// Uniform disk pushed through an analytic transform; the transform is
    /// recorded for ground-truth metric comparisons.
    TransformedDisk { transform: GroundTruthTransform },
    /// Two interleaved half-circles with Gaussian jitter; labeled.
    TwoMoons { noise: f64 },
    /// Concentric circles at the given radii with Gaussian jitter; labeled.
    ConcentricRings { radii: Vec<f64>, noise: f64 },
    /// Gaussian blobs with per-blob covariance; labeled.
    AnisotropicBlobs {
        centers: Vec<[f64; 2]>,
        covariances: Vec<[[f64; 2]; 2]>,
    },
    /// Two parallel elongated filaments plus a compact blob; labeled.
    FilamentClusters { noise: f64 },
}

/// Fully deterministic description of a data set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n_points: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// Number of ground-truth clusters, where defined.
    pub fn n_clusters(&self) -> Option<usize> {
        match &self.kind {
            DatasetKind::UniformDisk | DatasetKind::TransformedDisk { .. } => None,
            DatasetKind::TwoMoons { .. } => Some(2),
            DatasetKind::ConcentricRings { radii, .. } => Some(radii.len()),
            DatasetKind::AnisotropicBlobs { centers, .. } => Some(centers.len()),
            DatasetKind::FilamentClusters { .. } => Some(3),
        }
    }
}

/// Draw the data set described by `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<PointCloud> {
    if spec.n_points == 0 {
        return Err(Error::InvalidInput("n_points must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_points;
    match &spec.kind {
        DatasetKind::UniformDisk => Ok(PointCloud {
            points: uniform_disk(n, &mut rng),
            labels: None,
        }),
        DatasetKind::TransformedDisk { transform } => {
            if let Some(d) = transform.dim() {
                if d != 2 {
                    return Err(Error::InvalidInput(format!(
                        "transformed_disk is 2-D; transform expects dimension {d}"
                    )));
                }
            }
            let disk = uniform_disk(n, &mut rng);
            let mut out = Array2::<f64>::zeros((n, 2));
            for (i, row) in disk.outer_iter().enumerate() {
                let y = transform.apply(&row)?;
                out[(i, 0)] = y[0];
                out[(i, 1)] = y[1];
            }
            Ok(PointCloud {
                points: out,
                labels: None,
            })
        }
        DatasetKind::TwoMoons { noise } => {
            if !(*noise >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "noise must be >= 0, got {noise}"
                )));
            }
            let n0 = n - n / 2;
            let mut points = Array2::<f64>::zeros((n, 2));
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let (base_x, base_y, label) = if i < n0 {
                    (t.cos(), t.sin(), 0)
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin(), 1)
                };
                let gx: f64 = StandardNormal.sample(&mut rng);
                let gy: f64 = StandardNormal.sample(&mut rng);
                points[(i, 0)] = base_x + noise * gx;
                points[(i, 1)] = base_y + noise * gy;
                labels.push(label);
            }
            Ok(PointCloud {
                points,
                labels: Some(labels),
            })
        }
        DatasetKind::ConcentricRings { radii, noise } => {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return Err(Error::InvalidInput(
                    "radii must be positive and non-empty".into(),
                ));
            }
            if !(*noise >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "noise must be >= 0, got {noise}"
                )));
            }
            let mut points = Array2::<f64>::zeros((n, 2));
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let ring = i % radii.len(); // balanced assignment
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let g: f64 = StandardNormal.sample(&mut rng);
                let r = radii[ring] + noise * g;
                points[(i, 0)] = r * theta.cos();
                points[(i, 1)] = r * theta.sin();
                labels.push(ring);
            }
            Ok(PointCloud {
                points,
                labels: Some(labels),
            })
        }
        DatasetKind::AnisotropicBlobs {
            centers,
            covariances,
        } => {
            if centers.is_empty() || centers.len() != covariances.len() {
                return Err(Error::InvalidInput(
                    "need one covariance per blob center, at least one blob".into(),
                ));
            }
            let mut chols = Vec::with_capacity(covariances.len());
            for cov in covariances {
                let m = ndarray::array![[cov[0][0], cov[0][1]], [cov[1][0], cov[1][1]]];
                chols.push(
                    linalg::cholesky(&m)
                        .map_err(|_| Error::InvalidInput("blob covariance is not SPD".into()))?,
                );
            }
            let mut points = Array2::<f64>::zeros((n, 2));
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let blob = i % centers.len();
                let g =
                    Array1::from_iter((0..2).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
                let offset = chols[blob].dot(&g);
                points[(i, 0)] = centers[blob][0] + offset[0];
                points[(i, 1)] = centers[blob][1] + offset[1];
                labels.push(blob);
            }
            Ok(PointCloud {
                points,
                labels: Some(labels),
            })
        }
        DatasetKind::FilamentClusters { noise } => {
            if !(*noise >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "noise must be >= 0, got {noise}"
                )));
            }
            // two long filaments plus one compact blob off to the side
            let mut points = Array2::<f64>::zeros((n, 2));
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let part = i % 3;
                let g: f64 = StandardNormal.sample(&mut rng);
                match part {
                    0 | 1 => {
                        let t: f64 = rng.random_range(-2.0..2.0);
                        let y0 = if part == 0 { 0.6 } else { -0.6 };
                        points[(i, 0)] = t;
                        points[(i, 1)] = y0 + noise * g;
                    }
                    _ => {
                        let g2: f64 = StandardNormal.sample(&mut rng);
                        points[(i, 0)] = 3.2 + 0.25 * g;
                        points[(i, 1)] = 0.25 * g2;
                    }
                }
                labels.push(part);
            }
            Ok(PointCloud {
                points,
                labels: Some(labels),
            })
        }
    }
}

fn uniform_disk(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut points = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        let r = rng.random_range(0.0..1.0f64).sqrt(); // area-uniform
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        points[(i, 0)] = r * theta.cos();
        points[(i, 1)] = r * theta.sin();
    }
    points
}

/// Sidecar path of a data CSV: `foo.csv` → `foo.spec.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("spec.json")
}

/// Write `cloud` as CSV (`x1,..,xd[,label]`, header row) plus a JSON sidecar
/// recording `spec` when given.
pub fn save_csv(cloud: &PointCloud, path: &Path, spec: Option<&DatasetSpec>) -> Result<()> {
    let d = cloud.dim();
    let mut out = String::new();
    for c in 0..d {
        if c > 0 {
            out.push(',');
        }
        out.push_str(&format!("x{}", c + 1));
    }
    if cloud.labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, row) in cloud.points.outer_iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        if let Some(labels) = &cloud.labels {
            out.push(',');
            out.push_str(&labels[i].to_string());
        }
        out.push('\n');
    }
    crate::flow::write_atomic(path, out.as_bytes())?;
    if let Some(spec) = spec {
        let json = serde_json::to_vec_pretty(spec)?;
        crate::flow::write_atomic(&sidecar_path(path), &json)?;
    }
    Ok(())
}

/// Read a CSV written by [`save_csv`] (or any numeric CSV with a header; a
/// trailing `label` column becomes the labels).
pub fn load_csv(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::BadFormat(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let has_labels = columns.last().is_some_and(|c| c.trim() == "label");
    let d = if has_labels {
        columns.len() - 1
    } else {
        columns.len()
    };
    if d == 0 {
        return Err(Error::BadFormat(format!(
            "{}: no coordinate columns",
            path.display()
        )));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::BadFormat(format!(
                "{}:{}: expected {} fields, got {}",
                path.display(),
                lineno + 2,
                columns.len(),
                fields.len()
            )));
        }
        for f in &fields[..d] {
            values.push(f.trim().parse::<f64>().map_err(|e| {
                Error::BadFormat(format!("{}:{}: {e}", path.display(), lineno + 2))
            })?);
        }
        if has_labels {
            labels.push(fields[d].trim().parse::<usize>().map_err(|e| {
                Error::BadFormat(format!("{}:{}: {e}", path.display(), lineno + 2))
            })?);
        }
        n += 1;
    }
    let points = Array2::from_shape_vec((n, d), values).expect("counted while parsing");
    Ok(PointCloud {
        points,
        labels: if has_labels { Some(labels) } else { None },
    })
}

/// Load the dataset spec recorded next to a CSV, if present.
pub fn load_sidecar(csv_path: &Path) -> Result<Option<DatasetSpec>> {
    let p = sidecar_path(csv_path);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p)?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Write any numeric matrix as a plain CSV with `c1..cd` headers.
pub fn save_matrix_csv(matrix: &ArrayView2<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in 0..matrix.ncols() {
        if c > 0 {
            out.push(',');
        }
        out.push_str(&format!("c{}", c + 1));
    }
    out.push('\n');
    for row in matrix.outer_iter() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    crate::flow::write_atomic(path, out.as_bytes())
}
