//! Acceptance suite: one test per pipeline-level requirement, each pinned to
//! a numeric tolerance and a runtime budget. Run with
//! `cargo test --test acceptance -- --nocapture` to see one line per check.

use std::time::{Duration, Instant};

use laminar::cluster::{k_medoids, mean_jaccard};
use laminar::data::{generate, DatasetKind, DatasetSpec};
use laminar::flow::{loss_and_grad, train, TrainConfig};
use laminar::flow::{FlowModel, HyperNetwork};
use laminar::graph::{
    build_graph, distance_matrix, pairwise_euclidean, shortest_paths, DensityGraph, PseudoCdf,
};
use laminar::metric::{ground_truth_metric, scale_aligned_wasserstein, MetricTensorField};
use laminar::pipeline::{run, DataSource, PipelineConfig};
use laminar::sphere;
use laminar::stats;
use laminar::transform::GroundTruthTransform;
use laminar::viz::ratio_map_values;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(name: &str, detail: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    println!("ACCEPTANCE {name}: PASS — {detail} [{elapsed:.2?} of {budget:.0?} budget]");
    assert!(
        elapsed <= budget,
        "{name} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
}

fn random_model(dim: usize, flow_width: usize, gain: f64, seed: u64, n_steps: usize) -> FlowModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = HyperNetwork::init(dim, flow_width, 8, &mut rng);
    net.weights_out.mapv_inplace(|v| v * gain);
    net.bias_out.mapv_inplace(|v| v * gain);
    FlowModel::with_identity_standardization(net, n_steps)
}

fn gauss_vec(rng: &mut ChaCha8Rng, d: usize) -> Array1<f64> {
    Array1::from_iter((0..d).map(|_| -> f64 { StandardNormal.sample(rng) }))
}

/// trace(∂f/∂z) = −dlogp/dt at 1,000 random (z, t, model) samples, to 1e-12.
#[test]
fn a01_divergence_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut count = 0;
    for model_idx in 0..20 {
        let d = [1, 2, 3, 5][model_idx % 4];
        let model = random_model(d, 4 + model_idx % 5, 5.0, 1000 + model_idx as u64, 8);
        for _ in 0..50 {
            let z = gauss_vec(&mut rng, d) * 2.0;
            let t = rng.random_range(0.0..1.0);
            let (_, dlogp) = model.dynamics(&z.view(), t).unwrap();
            let jac = model.dynamics_jacobian(&z.view(), t).unwrap();
            let trace: f64 = (0..d).map(|i| jac[(i, i)]).sum();
            worst = worst.max((trace + dlogp).abs());
            count += 1;
        }
    }
    assert_eq!(count, 1000);
    assert!(worst < 1e-12, "divergence identity violated by {worst:e}");
    report(
        "a01_divergence_identity",
        &format!("max |trace + dlogp| = {worst:.2e} over 1000 samples"),
        start,
        Duration::from_secs(1),
    );
}

/// Analytic ball-map Jacobian vs central finite differences (< 1e-6,
/// radii spanning 1e-6 to 8) and integrated flow Jacobian vs finite
/// differences (< 1e-4).
#[test]
fn a02_jacobian_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    // --- ball map ---
    let mut worst_sphere = 0.0f64;
    let mut count = 0;
    let eps = 1e-6;
    for &d in &[2usize, 3, 5] {
        let mut radii: Vec<f64> = (0..330)
            .map(|_| 10f64.powf(rng.random_range(-6.0..0.9031))) // up to 8
            .collect();
        radii.push(1e-6);
        radii.push(8.0);
        for r in radii {
            let dir = gauss_vec(&mut rng, d);
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let z = &dir * (r / norm);
            let jac = sphere::to_ball_jacobian(&z.view()).unwrap();
            let mut max_err = 0.0f64;
            let mut max_mag = 0.0f64;
            for c in 0..d {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[c] += eps;
                zm[c] -= eps;
                let bp = sphere::to_ball(&zp.view()).unwrap();
                let bm = sphere::to_ball(&zm.view()).unwrap();
                for row in 0..d {
                    let fd = (bp[row] - bm[row]) / (2.0 * eps);
                    max_err = max_err.max((jac[(row, c)] - fd).abs());
                    max_mag = max_mag.max(fd.abs());
                }
            }
            worst_sphere = worst_sphere.max(max_err / max_mag);
            count += 1;
        }
    }
    assert!(count >= 996, "need ~1000 sphere samples, got {count}");
    assert!(
        worst_sphere < 1e-6,
        "ball-map Jacobian off by {worst_sphere:.2e} relative"
    );

    // --- integrated flow Jacobian ---
    let mut worst_flow = 0.0f64;
    let eps = 1e-5;
    for seed in 0..6 {
        let d = [2, 3][seed % 2];
        let model = random_model(d, 6, 5.0, 7000 + seed as u64, 32);
        for _ in 0..6 {
            let x = gauss_vec(&mut rng, d) * 1.5;
            let jac = model.integrate(&x.view(), true).unwrap().jacobian.unwrap();
            let mut max_err = 0.0f64;
            let mut max_mag = 0.0f64;
            for c in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += eps;
                xm[c] -= eps;
                let zp = model.integrate(&xp.view(), false).unwrap().z;
                let zm = model.integrate(&xm.view(), false).unwrap().z;
                for row in 0..d {
                    let fd = (zp[row] - zm[row]) / (2.0 * eps);
                    max_err = max_err.max((jac[(row, c)] - fd).abs());
                    max_mag = max_mag.max(fd.abs());
                }
            }
            worst_flow = worst_flow.max(max_err / max_mag);
        }
    }
    assert!(
        worst_flow < 1e-4,
        "flow Jacobian off by {worst_flow:.2e} relative"
    );
    report(
        "a02_jacobian_oracles",
        &format!("ball map {worst_sphere:.2e}, flow {worst_flow:.2e} relative error"),
        start,
        Duration::from_secs(30),
    );
}

/// Loss gradient vs central finite differences for every hypernetwork
/// parameter of a tiny model, relative error < 1e-3.
#[test]
fn a03_training_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut points = Array2::<f64>::zeros((16, 2));
    for v in points.iter_mut() {
        *v = rng.random_range(-1.5..1.5);
    }
    let mut net = HyperNetwork::init(2, 2, 4, &mut rng);
    net.weights_out.mapv_inplace(|v| v * 3.0);
    let n_steps = 4;
    let rows: Vec<usize> = (0..16).collect();
    let (_, grad) = loss_and_grad(&net, &points.view(), &rows, n_steps).unwrap();
    let mut params = net.params_flat();
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for p in 0..params.len() {
        let orig = params[p];
        params[p] = orig + eps;
        net.set_params_flat(&params);
        let (lp, _) = loss_and_grad(&net, &points.view(), &rows, n_steps).unwrap();
        params[p] = orig - eps;
        net.set_params_flat(&params);
        let (lm, _) = loss_and_grad(&net, &points.view(), &rows, n_steps).unwrap();
        params[p] = orig;
        net.set_params_flat(&params);
        let fd = (lp - lm) / (2.0 * eps);
        let rel = (grad[p] - fd).abs() / fd.abs().max(grad[p].abs()).max(1e-6);
        worst = worst.max(rel);
        assert!(rel < 1e-3, "parameter {p}: analytic {} vs fd {fd}", grad[p]);
    }
    report(
        "a03_training_gradient_check",
        &format!(
            "worst relative error {worst:.2e} over {} parameters",
            params.len()
        ),
        start,
        Duration::from_secs(60),
    );
}

/// Exact standard-normal samples pushed through the ball map have
/// ‖·‖^d ~ U(0,1): KS < 0.02 at n = 10,000 for d in {2, 3, 5}.
#[test]
fn a04_inverse_transform_exactness() {
    let start = Instant::now();
    let mut detail = String::new();
    for &d in &[2usize, 3, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(404 + d as u64);
        let mut norms_d = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let z = gauss_vec(&mut rng, d);
            let b = sphere::to_ball(&z.view()).unwrap();
            let n = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            norms_d.push(n.powi(d as i32));
        }
        let ks = stats::ks_uniform01(&norms_d);
        assert!(ks < 0.02, "d = {d}: KS = {ks}");
        detail.push_str(&format!("d={d}: KS {ks:.4}; "));
    }
    report(
        "a04_inverse_transform_exactness",
        detail.trim_end(),
        start,
        Duration::from_secs(5),
    );
}

/// Train on two moons with default settings; the pushforward must be close
/// to N(0, I): ball norms² KS < 0.1 and per-coordinate normal KS < 0.1.
#[test]
fn a05_pushforward_quality() {
    let start = Instant::now();
    let spec = DatasetSpec {
        kind: DatasetKind::TwoMoons { noise: 0.1 },
        n_points: 2000,
        seed: 42,
    };
    let cloud = generate(&spec).unwrap();
    let cfg = TrainConfig {
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, report_t) = train(&cloud.points.view(), &cfg).unwrap();
    assert!(report_t.aborted_at_epoch.is_none(), "training aborted");
    let states = model.integrate_batch(&cloud.points.view(), false).unwrap();
    let mut ks_coord = 0.0f64;
    for c in 0..2 {
        let coords: Vec<f64> = states.iter().map(|s| s.z[c]).collect();
        ks_coord = ks_coord.max(stats::ks_standard_normal(&coords));
    }
    let mut norms_sq = Vec::with_capacity(states.len());
    for s in &states {
        let b = sphere::to_ball(&s.z.view()).unwrap();
        norms_sq.push(b.iter().map(|v| v * v).sum::<f64>());
    }
    let ks_ball = stats::ks_uniform01(&norms_sq);
    assert!(ks_ball < 0.1, "ball norms² KS = {ks_ball}");
    assert!(ks_coord < 0.1, "per-coordinate KS = {ks_coord}");
    report(
        "a05_pushforward_quality",
        &format!("ball norms² KS {ks_ball:.4}, worst coordinate KS {ks_coord:.4}"),
        start,
        Duration::from_secs(600),
    );
}

/// Dijkstra equals Floyd–Warshall on 100 random graphs with up to 50 nodes.
/// Integer edge weights keep every path sum exact, so equality is literal.
#[test]
fn a06_dijkstra_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for graph_idx in 0..100 {
        let n = rng.random_range(2..=50);
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_range(0.0..1.0) < 0.2 {
                    let w = rng.random_range(1..100) as f64;
                    adjacency[a].push((b, w));
                    adjacency[b].push((a, w));
                }
            }
        }
        let graph = DensityGraph {
            n_nodes: n,
            k: 0,
            adjacency: adjacency.clone(),
        };
        let mut fw = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in fw.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for (a, adj) in adjacency.iter().enumerate() {
            for &(b, w) in adj {
                fw[a][b] = fw[a][b].min(w);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = fw[i][k] + fw[k][j];
                    if via < fw[i][j] {
                        fw[i][j] = via;
                    }
                }
            }
        }
        for s in 0..n {
            let res = shortest_paths(&graph, s);
            for j in 0..n {
                assert_eq!(
                    res.distances[j], fw[s][j],
                    "graph {graph_idx}, source {s}, target {j}"
                );
            }
        }
    }
    report(
        "a06_dijkstra_exactness",
        "100 graphs, exact equality",
        start,
        Duration::from_secs(10),
    );
}

/// Identity tensors and k = N−1 reduce geodesics to plain Euclidean
/// distances (N = 200, tolerance 1e-10).
#[test]
fn a07_euclidean_reduction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let n = 200;
    let mut pts = Array2::<f64>::zeros((n, 2));
    for v in pts.iter_mut() {
        *v = rng.random_range(-2.0..2.0);
    }
    let pseudo = PseudoCdf {
        coords: pts.clone(),
    };
    let field = MetricTensorField {
        points: pts.clone(),
        tensors: (0..n).map(|_| Array2::eye(2)).collect(),
        regularized: vec![false; n],
    };
    let graph = build_graph(&pts.view(), &pseudo, &field, n - 1).unwrap();
    let all: Vec<usize> = (0..n).collect();
    let geodesic = distance_matrix(&graph, &all).unwrap();
    let euclid = pairwise_euclidean(&pts.view());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((geodesic.values[(i, j)] - euclid[(i, j)]).abs());
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
    report(
        "a07_euclidean_reduction",
        &format!("max |geodesic − euclidean| = {worst:.2e} over {n}×{n}"),
        start,
        Duration::from_secs(10),
    );
}

/// Train on a sheared disk; the learned tensors (up to one global scalar)
/// must sit at least 2× closer to the shear ground truth A·Aᵀ than to the
/// identity metric.
#[test]
fn a08_shear_metric_recovery() {
    let start = Instant::now();
    let shear = GroundTruthTransform::shear();
    let spec = DatasetSpec {
        kind: DatasetKind::TransformedDisk {
            transform: shear.clone(),
        },
        n_points: 3000,
        seed: 21,
    };
    let cloud = generate(&spec).unwrap();
    let cfg = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let (model, _) = train(&cloud.points.view(), &cfg).unwrap();
    let field = MetricTensorField::compute(&cloud.points.view(), &model).unwrap();
    let targets: Vec<Array2<f64>> = cloud
        .points
        .outer_iter()
        .map(|row| ground_truth_metric(&row, &shear).unwrap())
        .collect();
    let identity: Vec<Array2<f64>> = (0..cloud.len()).map(|_| Array2::eye(2)).collect();
    let vs_truth = scale_aligned_wasserstein(&field.tensors, &targets).unwrap();
    let vs_identity = scale_aligned_wasserstein(&field.tensors, &identity).unwrap();
    assert!(
        2.0 * vs_truth.median <= vs_identity.median,
        "median W2 vs ground truth {} is not 2x smaller than vs identity {}",
        vs_truth.median,
        vs_identity.median
    );
    report(
        "a08_shear_metric_recovery",
        &format!(
            "median W2: vs A·Aᵀ {:.4}, vs identity {:.4} ({:.2}×)",
            vs_truth.median,
            vs_identity.median,
            vs_identity.median / vs_truth.median
        ),
        start,
        Duration::from_secs(900),
    );
}

/// On a two-mode data set, standardized log-ratio values (flow metric vs
/// Euclidean) are negative on the query's own mode and positive on the
/// opposite mode: along-mode travel is relatively cheaper.
#[test]
fn a09_ratio_map_mode_structure() {
    let start = Instant::now();
    let spec = DatasetSpec {
        kind: DatasetKind::TwoMoons { noise: 0.08 },
        n_points: 1600,
        seed: 5,
    };
    let cloud = generate(&spec).unwrap();
    let labels = cloud.labels.clone().unwrap();
    let cfg = TrainConfig {
        seed: 13,
        ..TrainConfig::default()
    };
    let (model, _) = train(&cloud.points.view(), &cfg).unwrap();
    let pseudo = PseudoCdf::compute(&cloud.points.view(), &model).unwrap();
    let field = MetricTensorField::compute(&cloud.points.view(), &model).unwrap();
    let graph = build_graph(&cloud.points.view(), &pseudo, &field, 20).unwrap();
    assert_eq!(graph.component_sizes().len(), 1, "graph must be connected");
    let query = 0usize;
    let dm = distance_matrix(&graph, &[query]).unwrap();
    let lam: Vec<f64> = dm.row(0).to_vec();
    let euc: Vec<f64> = pairwise_euclidean(&cloud.points.view()).row(query).to_vec();
    let values = ratio_map_values(&lam, &euc, query).unwrap();
    let mut own = Vec::new();
    let mut opposite = Vec::new();
    let mut vi = 0;
    for (i, &label) in labels.iter().enumerate() {
        if i == query {
            continue;
        }
        if label == labels[query] {
            own.push(values[vi]);
        } else {
            opposite.push(values[vi]);
        }
        vi += 1;
    }
    let own_mean = stats::mean(&own);
    let opp_mean = stats::mean(&opposite);
    assert!(
        own_mean < 0.0,
        "own-mode mean {own_mean} should be negative"
    );
    assert!(
        opp_mean > 0.0,
        "opposite-mode mean {opp_mean} should be positive"
    );
    report(
        "a09_ratio_map_mode_structure",
        &format!("own-mode mean {own_mean:.4}, opposite-mode mean {opp_mean:.4}"),
        start,
        Duration::from_secs(900),
    );
}

/// k-medoids with learned geodesic distances vs Euclidean distances on three
/// structured data sets × five seeds: the learned metric's mean best-match
/// Jaccard must be at least as good overall and strictly better on at least
/// two of the three data sets.
#[test]
fn a10_clustering_improvement() {
    let start = Instant::now();
    let datasets: Vec<(&str, DatasetKind, usize)> = vec![
        ("two_moons", DatasetKind::TwoMoons { noise: 0.08 }, 2),
        (
            "anisotropic_blobs",
            DatasetKind::AnisotropicBlobs {
                centers: vec![[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]],
                covariances: vec![
                    [[1.0, 0.0], [0.0, 0.05]],
                    [[0.05, 0.0], [0.0, 1.0]],
                    [[0.4, 0.3], [0.3, 0.4]],
                ],
            },
            3,
        ),
        (
            "filaments",
            DatasetKind::FilamentClusters { noise: 0.06 },
            3,
        ),
    ];
    let mut all_lam = Vec::new();
    let mut all_euc = Vec::new();
    let mut strictly_better = 0;
    let mut detail = String::new();
    for (name, kind, k_clusters) in datasets {
        let mut lam_scores = Vec::new();
        let mut euc_scores = Vec::new();
        for seed in 1..=5u64 {
            let spec = DatasetSpec {
                kind: kind.clone(),
                n_points: 1200,
                seed: seed * 1000 + 7,
            };
            let cloud = generate(&spec).unwrap();
            let labels = cloud.labels.clone().unwrap();
            let cfg = TrainConfig {
                epochs: 150,
                seed,
                ..TrainConfig::default()
            };
            let (model, _) = train(&cloud.points.view(), &cfg).unwrap();
            let pseudo = PseudoCdf::compute(&cloud.points.view(), &model).unwrap();
            let field = MetricTensorField::compute(&cloud.points.view(), &model).unwrap();
            let graph = build_graph(&cloud.points.view(), &pseudo, &field, 20).unwrap();
            let all: Vec<usize> = (0..cloud.len()).collect();
            let dm = distance_matrix(&graph, &all).unwrap();
            let lam_assign = k_medoids(&dm.values.view(), k_clusters, seed)
                .unwrap()
                .assignment;
            lam_scores.push(mean_jaccard(&labels, &lam_assign).unwrap());
            let euclid = pairwise_euclidean(&cloud.points.view());
            let euc_assign = k_medoids(&euclid.view(), k_clusters, seed)
                .unwrap()
                .assignment;
            euc_scores.push(mean_jaccard(&labels, &euc_assign).unwrap());
        }
        let lam_mean = stats::mean(&lam_scores);
        let euc_mean = stats::mean(&euc_scores);
        if lam_mean > euc_mean {
            strictly_better += 1;
        }
        detail.push_str(&format!("{name}: {lam_mean:.3} vs {euc_mean:.3}; "));
        all_lam.extend(lam_scores);
        all_euc.extend(euc_scores);
    }
    let overall_lam = stats::mean(&all_lam);
    let overall_euc = stats::mean(&all_euc);
    assert!(
        overall_lam >= overall_euc,
        "mean Jaccard with learned distances {overall_lam} < Euclidean {overall_euc}"
    );
    assert!(
        strictly_better >= 2,
        "learned metric strictly better on only {strictly_better} of 3 data sets"
    );
    report(
        "a10_clustering_improvement",
        &format!("{detail}overall {overall_lam:.3} vs {overall_euc:.3}"),
        start,
        Duration::from_secs(1800),
    );
}

/// The same config run twice produces byte-identical artifacts.
#[test]
fn a11_end_to_end_determinism() {
    let start = Instant::now();
    let base = std::env::temp_dir().join("laminar_acceptance_determinism");
    let _ = std::fs::remove_dir_all(&base);
    let mut outputs = Vec::new();
    for run_idx in 0..2 {
        let config = PipelineConfig {
            data: DataSource::Dataset {
                kind: DatasetKind::TwoMoons { noise: 0.1 },
                n_points: 400,
            },
            flow: TrainConfig {
                flow_width: 16,
                hidden_width: 16,
                n_steps_train: 16,
                n_steps_inference: 32,
                epochs: 60,
                ..TrainConfig::default()
            },
            graph_k: 12,
            cluster_k: Some(2),
            query_index: 0,
            seed: 2024,
            out_dir: base.join(format!("run{run_idx}")),
        };
        let summary = run(&config).unwrap();
        outputs.push((config.out_dir.clone(), summary));
    }
    for file in [
        "data.csv",
        "model.ckpt",
        "distances.bin",
        "labels.csv",
        "loss.csv",
    ] {
        let a = std::fs::read(outputs[0].0.join(file)).unwrap();
        let b = std::fs::read(outputs[1].0.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    report(
        "a11_end_to_end_determinism",
        "data.csv, model.ckpt, distances.bin, labels.csv, loss.csv byte-identical",
        start,
        Duration::from_secs(600),
    );
}
