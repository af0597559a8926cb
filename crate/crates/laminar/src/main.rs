//! `laminar` command-line tool: thin subcommand wrappers around the library
//! pipeline. Exit codes: 0 success, 1 runtime/data error, 2 usage error
//! (from argument parsing).

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use laminar::data::{self, DatasetKind, DatasetSpec};
use laminar::flow::TrainConfig;
use laminar::pipeline;
use laminar::transform::GroundTruthTransform;
use laminar::viz;
use laminar::{DistanceMatrix, MetricTensorField};

#[derive(Parser)]
#[command(
    name = "laminar",
    about = "Locally adaptive metric learning: flow-based metric tensors and \
             density-aware geodesic distances for point clouds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kind {
    UniformDisk,
    ShearedDisk,
    StretchedDisk,
    SwirledDisk,
    BentDisk,
    TwoMoons,
    Rings,
    Blobs,
    Filaments,
}

impl Kind {
    fn to_dataset(self, noise: f64) -> DatasetKind {
        match self {
            Kind::UniformDisk => DatasetKind::UniformDisk,
            Kind::ShearedDisk => DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::shear(),
            },
            Kind::StretchedDisk => DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::stretch(3.0, 1.0),
            },
            Kind::SwirledDisk => DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::Swirl { strength: 1.0 },
            },
            Kind::BentDisk => DatasetKind::TransformedDisk {
                transform: GroundTruthTransform::SinusoidalBend {
                    amplitude: 0.5,
                    frequency: 3.0,
                },
            },
            Kind::TwoMoons => DatasetKind::TwoMoons { noise },
            Kind::Rings => DatasetKind::ConcentricRings {
                radii: vec![1.0, 2.2],
                noise,
            },
            Kind::Blobs => DatasetKind::AnisotropicBlobs {
                centers: vec![[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]],
                covariances: vec![
                    [[1.0, 0.0], [0.0, 0.05]],
                    [[0.05, 0.0], [0.0, 1.0]],
                    [[0.4, 0.3], [0.3, 0.4]],
                ],
            },
            Kind::Filaments => DatasetKind::FilamentClusters { noise },
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TransformName {
    Identity,
    Shear,
    Stretch,
    Swirl,
    Bend,
}

impl TransformName {
    fn to_transform(self) -> GroundTruthTransform {
        match self {
            TransformName::Identity => GroundTruthTransform::Identity,
            TransformName::Shear => GroundTruthTransform::shear(),
            TransformName::Stretch => GroundTruthTransform::stretch(3.0, 1.0),
            TransformName::Swirl => GroundTruthTransform::Swirl { strength: 1.0 },
            TransformName::Bend => GroundTruthTransform::SinusoidalBend {
                amplitude: 0.5,
                frequency: 3.0,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy data set as CSV plus a JSON sidecar recording the spec.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian jitter for the noisy generators.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the flow to a CSV and write a checkpoint plus a loss log.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss log CSV (defaults to `<out>.loss.csv`).
        #[arg(long)]
        loss_log: Option<PathBuf>,
        #[arg(long, default_value_t = TrainConfig::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = TrainConfig::default().flow_width)]
        flow_width: usize,
        #[arg(long, default_value_t = TrainConfig::default().hidden_width)]
        hidden_width: usize,
        #[arg(long, default_value_t = TrainConfig::default().n_steps_train)]
        steps_train: usize,
        #[arg(long, default_value_t = TrainConfig::default().n_steps_inference)]
        steps_inference: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute pseudo-cdf, tensors, graph and geodesic distances.
    Distances {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Source point indices; all points when omitted.
        #[arg(long)]
        source: Vec<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// k-medoids on a stored distance matrix; prints Jaccard scores when the
    /// data CSV carries ground-truth labels.
    Cluster {
        #[arg(long)]
        distances: PathBuf,
        #[arg(long)]
        k: usize,
        /// Data CSV with a label column for Jaccard scoring.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score learned tensors against the ground-truth metric of a transform.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Transform to compare against; defaults to the one recorded in the
        /// data CSV's sidecar.
        #[arg(long, value_enum)]
        transform: Option<TransformName>,
        /// Per-point scores CSV (defaults to `<data dir>/compare_scores.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a figure.
    Viz {
        #[command(subcommand)]
        figure: Figure,
    },
    /// Run the whole pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum Figure {
    /// Distance map from one source row of a stored distance matrix.
    Distance {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        distances: PathBuf,
        /// Row of the distance matrix to plot.
        #[arg(long, default_value_t = 0)]
        row: usize,
        #[arg(long, default_value_t = 25)]
        k_contour: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Standardized log-ratio map between two stored distance matrices.
    Ratio {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        lam: PathBuf,
        /// Second matrix; plain Euclidean distances from the same source
        /// when omitted.
        #[arg(long)]
        euclid: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        row: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Colour-wheel rendering of a stored tensor field.
    Tensors {
        #[arg(long)]
        tensors: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference colour wheel legend.
    Wheel {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> laminar::Result<()> {
    match command {
        Command::Generate {
            kind,
            n,
            seed,
            noise,
            out,
        } => {
            let spec = DatasetSpec {
                kind: kind.to_dataset(noise),
                n_points: n,
                seed,
            };
            let cloud = data::generate(&spec)?;
            data::save_csv(&cloud, &out, Some(&spec))?;
            println!(
                "wrote {} points ({} columns{}) to {}",
                cloud.len(),
                cloud.dim(),
                if cloud.labels.is_some() {
                    " + label"
                } else {
                    ""
                },
                out.display()
            );
            Ok(())
        }
        Command::Train {
            data,
            out,
            loss_log,
            epochs,
            learning_rate,
            flow_width,
            hidden_width,
            steps_train,
            steps_inference,
            seed,
        } => {
            let cfg = TrainConfig {
                epochs,
                learning_rate,
                flow_width,
                hidden_width,
                n_steps_train: steps_train,
                n_steps_inference: steps_inference,
                seed,
                ..TrainConfig::default()
            };
            let loss_log = loss_log.unwrap_or_else(|| out.with_extension("loss.csv"));
            let (_, losses) = pipeline::train_from_csv(&data, &out, &loss_log, &cfg)?;
            println!(
                "trained {} epochs; loss {:.6} -> {:.6}; checkpoint {}",
                losses.len(),
                losses.first().unwrap_or(&f64::NAN),
                losses.last().unwrap_or(&f64::NAN),
                out.display()
            );
            Ok(())
        }
        Command::Distances {
            model,
            data,
            k,
            source,
            out_dir,
        } => {
            let sources = if source.is_empty() {
                None
            } else {
                Some(source)
            };
            let output = pipeline::distances_from_checkpoint(&model, &data, k, sources, &out_dir)?;
            println!(
                "wrote {} distance rows over {} nodes to {} ({} unreachable pairs)",
                output.matrix.sources.len(),
                output.matrix.n_nodes,
                out_dir.display(),
                output.matrix.unreachable_pairs()
            );
            Ok(())
        }
        Command::Cluster {
            distances,
            k,
            data,
            out,
            seed,
        } => {
            let matrix = DistanceMatrix::load(&distances)?;
            if matrix.sources.len() != matrix.n_nodes {
                return Err(laminar::Error::InvalidInput(format!(
                    "clustering needs a full matrix: {} rows for {} nodes",
                    matrix.sources.len(),
                    matrix.n_nodes
                )));
            }
            let result = laminar::k_medoids(&matrix.values.view(), k, seed)?;
            laminar::cluster::save_labels_csv(&result.assignment, &out)?;
            println!("medoids: {:?}", result.medoids);
            if let Some(path) = data {
                let cloud = data::load_csv(&path)?;
                if let Some(truth) = &cloud.labels {
                    println!("cluster  jaccard");
                    for (label, score) in laminar::jaccard_best_match(truth, &result.assignment)? {
                        println!("{label:>7}  {score:.4}");
                    }
                }
            }
            Ok(())
        }
        Command::Compare {
            model,
            data,
            transform,
            out,
        } => {
            let transform = match transform {
                Some(t) => t.to_transform(),
                None => match data::load_sidecar(&data)? {
                    Some(DatasetSpec {
                        kind: DatasetKind::TransformedDisk { transform },
                        ..
                    }) => transform,
                    _ => {
                        return Err(laminar::Error::InvalidInput(
                            "no --transform given and no transformed-disk sidecar found".into(),
                        ))
                    }
                },
            };
            let scores = out.unwrap_or_else(|| {
                data.parent()
                    .unwrap_or_else(|| std::path::Path::new("."))
                    .join("compare_scores.csv")
            });
            let result = pipeline::compare_to_ground_truth(&model, &data, &transform, &scores)?;
            println!(
                "wasserstein vs ground truth: median {:.6}, p90 {:.6}",
                result.median, result.p90
            );
            println!(
                "scale-aligned (c = {:.4}): median {:.6}",
                result.aligned_scale, result.aligned_median
            );
            Ok(())
        }
        Command::Viz { figure } => render(figure),
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg: laminar::PipelineConfig = serde_json::from_str(&text)?;
            let summary = pipeline::run(&cfg)?;
            println!("final loss {:.6}", summary.final_loss);
            println!("components {:?}", summary.component_sizes);
            if let Some(jaccard) = &summary.jaccard {
                println!("cluster  jaccard");
                for (label, score) in jaccard {
                    println!("{label:>7}  {score:.4}");
                }
            }
            println!("artifacts in {}", cfg.out_dir.display());
            Ok(())
        }
    }
}

fn render(figure: Figure) -> laminar::Result<()> {
    match figure {
        Figure::Distance {
            data,
            distances,
            row,
            k_contour,
            out,
        } => {
            let cloud = data::load_csv(&data)?;
            let matrix = DistanceMatrix::load(&distances)?;
            let query = *matrix
                .sources
                .get(row)
                .ok_or_else(|| laminar::Error::InvalidInput(format!("row {row} out of range")))?;
            let d: Vec<f64> = matrix.row(row).to_vec();
            viz::distance_map(&cloud.points.view(), &d, query, k_contour, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Figure::Ratio {
            data,
            lam,
            euclid,
            row,
            out,
        } => {
            let cloud = data::load_csv(&data)?;
            let lam_m = DistanceMatrix::load(&lam)?;
            let query = *lam_m
                .sources
                .get(row)
                .ok_or_else(|| laminar::Error::InvalidInput(format!("row {row} out of range")))?;
            let lam_d: Vec<f64> = lam_m.row(row).to_vec();
            let euc_d: Vec<f64> = match euclid {
                Some(path) => {
                    let m = DistanceMatrix::load(&path)?;
                    m.row(row).to_vec()
                }
                None => laminar::graph::pairwise_euclidean(&cloud.points.view())
                    .row(query)
                    .to_vec(),
            };
            viz::ratio_map(&cloud.points.view(), &lam_d, &euc_d, query, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Figure::Tensors { tensors, out } => {
            let field = MetricTensorField::load(&tensors)?;
            viz::render_tensor_field(&field.points.view(), &field.tensors, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Figure::Wheel { out } => {
            viz::render_color_wheel(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
