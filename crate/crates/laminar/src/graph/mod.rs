//! Density graph: kNN in the pseudo-cdf, Mahalanobis edge weights in data
//! space, geodesic distances by Dijkstra.
//!
//! Neighbourhoods are found in the unit ball (where the data is uniform, so
//! `k` nearest neighbours means the same thing everywhere), while the edge
//! weights are measured back in the original data coordinates with the local
//! metric tensors. Long-range distances are shortest paths in this graph.

mod dijkstra;
mod kdtree;

pub use dijkstra::{shortest_paths, DistanceResult};
pub use kdtree::KdTree;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowModel;
use crate::metric::{self, MetricTensorField};
use crate::sphere;

/// Image of the data under flow + ball map; rows are aligned with the input
/// point cloud and every row has norm < 1.
#[derive(Debug, Clone)]
pub struct PseudoCdf {
    pub coords: Array2<f64>,
}

impl PseudoCdf {
    /// Push every row of `points` through the trained flow and the radial
    /// ball map.
    pub fn compute(points: &ArrayView2<f64>, model: &FlowModel) -> Result<PseudoCdf> {
        let states = model.integrate_batch(points, false)?;
        let d = points.ncols();
        let mut coords = Array2::<f64>::zeros((points.nrows(), d));
        for (i, state) in states.iter().enumerate() {
            let ball = sphere::to_ball(&state.z.view())?;
            for c in 0..d {
                coords[(i, c)] = ball[c];
            }
        }
        Ok(PseudoCdf { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }
}

/// Exact k-nearest-neighbour indices for every row of `points` (Euclidean,
/// ties broken by lower index, a point is never its own neighbour).
pub fn knn(points: &ArrayView2<f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k < n_points (k = {k}, n = {n})"
        )));
    }
    let tree = KdTree::build(points);
    let rows: Vec<usize> = (0..n).collect();
    Ok(rows
        .into_par_iter()
        .map(|i| {
            let row = points.row(i);
            tree.knn(row.as_slice().expect("contiguous row"), k, Some(i))
        })
        .collect())
}

/// Symmetrized kNN graph with Mahalanobis edge weights.
#[derive(Debug, Clone)]
pub struct DensityGraph {
    pub n_nodes: usize,
    /// Neighbour count the edge set was built from.
    pub k: usize,
    /// Undirected adjacency: `(j, w)` appears in `adjacency[i]` iff `(i, w)`
    /// appears in `adjacency[j]`.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl DensityGraph {
    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Connected-component label per node (labels are 0-based, ordered by
    /// first appearance).
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n_nodes];
        let mut next = 0;
        for start in 0..self.n_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(node) = stack.pop() {
                for &(adj, _) in &self.adjacency[node] {
                    if label[adj] == usize::MAX {
                        label[adj] = next;
                        stack.push(adj);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Sizes of the connected components.
    pub fn component_sizes(&self) -> Vec<usize> {
        let labels = self.components();
        let n_components = labels.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0; n_components];
        for l in labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Build the density graph: union of directed kNN relations in the
/// pseudo-cdf, each edge weighted by the Mahalanobis distance between the
/// original-space endpoints under their mean tensor.
pub fn build_graph(
    data: &ArrayView2<f64>,
    pseudo: &PseudoCdf,
    field: &MetricTensorField,
    k: usize,
) -> Result<DensityGraph> {
    let n = data.nrows();
    if pseudo.len() != n || field.len() != n {
        return Err(Error::InvalidInput(format!(
            "misaligned inputs: {n} points, {} pseudo rows, {} tensors",
            pseudo.len(),
            field.len()
        )));
    }
    let neighbours = knn(&pseudo.coords.view(), k)?;
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, neigh) in neighbours.iter().enumerate() {
        for &j in neigh {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    let weights: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            metric::mahalanobis(
                &data.row(i),
                &data.row(j),
                &field.tensors[i],
                &field.tensors[j],
            )
        })
        .collect::<Result<_>>()?;
    let mut adjacency = vec![Vec::new(); n];
    for (&(i, j), &w) in pairs.iter().zip(weights.iter()) {
        if !w.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite edge weight between {i} and {j}"
            )));
        }
        adjacency[i].push((j, w));
        adjacency[j].push((i, w));
    }
    Ok(DensityGraph {
        n_nodes: n,
        k,
        adjacency,
    })
}

/// Geodesic distances from each of `sources` to every node. Rows follow the
/// order of `sources`; unreachable pairs hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub sources: Vec<usize>,
    pub n_nodes: usize,
    /// `sources.len() × n_nodes`, row-major.
    pub values: Array2<f64>,
}

impl DistanceMatrix {
    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn unreachable_pairs(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }
}

/// Run Dijkstra from every source. Per-source runs are independent and
/// execute in parallel; results are assembled in source order, so the output
/// is identical to a sequential sweep.
pub fn distance_matrix(graph: &DensityGraph, sources: &[usize]) -> Result<DistanceMatrix> {
    for &s in sources {
        if s >= graph.n_nodes {
            return Err(Error::InvalidInput(format!(
                "source {s} out of range for {} nodes",
                graph.n_nodes
            )));
        }
    }
    let rows: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|&s| shortest_paths(graph, s).distances)
        .collect();
    let mut values = Array2::<f64>::zeros((sources.len(), graph.n_nodes));
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            values[(r, c)] = v;
        }
    }
    Ok(DistanceMatrix {
        sources: sources.to_vec(),
        n_nodes: graph.n_nodes,
        values,
    })
}

/// Full pairwise Euclidean distance matrix — the baseline metric the learned
/// distances are compared against.
pub fn pairwise_euclidean(points: &ArrayView2<f64>) -> Array2<f64> {
    let n = points.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

/// [`distance_matrix`] that demands full connectivity, failing with component
/// sizes and the advice to raise `k` when any pair is unreachable.
pub fn distance_matrix_connected(
    graph: &DensityGraph,
    sources: &[usize],
) -> Result<DistanceMatrix> {
    let sizes = graph.component_sizes();
    if sizes.len() > 1 {
        return Err(Error::Disconnected {
            n_components: sizes.len(),
            sizes,
            k: graph.k,
        });
    }
    distance_matrix(graph, sources)
}

/// Distance-matrix file layout (little-endian):
///
/// ```text
/// magic b"LAMDIST1" | version u32 | n_sources u64 | n_nodes u64
/// sources       n_sources × u64
/// values        n_sources × n_nodes × f64, row-major (+inf where unreachable)
/// unreachable   ceil(n_sources·n_nodes / 8) bytes, row-major bitmap, LSB first
/// ```
impl DistanceMatrix {
    pub fn save(&self, path: &Path) -> Result<()> {
        let r = self.sources.len();
        let n = self.n_nodes;
        let mut buf = Vec::with_capacity(28 + 8 * r + 8 * r * n + r * n / 8 + 1);
        buf.extend_from_slice(b"LAMDIST1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(r as u64).to_le_bytes());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        for &s in &self.sources {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for v in self.values.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut bitmap = vec![0u8; r * n.div_ceil(8).max(1) * 8 / 8];
        bitmap.resize((r * n).div_ceil(8), 0);
        for (idx, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                bitmap[idx / 8] |= 1 << (idx % 8);
            }
        }
        buf.extend_from_slice(&bitmap);
        crate::flow::write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<DistanceMatrix> {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 28 || &bytes[..8] != b"LAMDIST1" {
            return Err(Error::BadFormat(format!(
                "{}: not a distance matrix",
                path.display()
            )));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("length 4"));
        if version != 1 {
            return Err(Error::BadFormat(format!(
                "unsupported distance matrix version {version}"
            )));
        }
        let r = u64::from_le_bytes(bytes[12..20].try_into().expect("length 8")) as usize;
        let n = u64::from_le_bytes(bytes[20..28].try_into().expect("length 8")) as usize;
        let expect = 28 + 8 * r + 8 * r * n + (r * n).div_ceil(8);
        if bytes.len() != expect {
            return Err(Error::BadFormat(format!(
                "distance matrix size mismatch: {} bytes, expected {expect}",
                bytes.len()
            )));
        }
        let mut off = 28;
        let mut sources = Vec::with_capacity(r);
        for _ in 0..r {
            sources.push(
                u64::from_le_bytes(bytes[off..off + 8].try_into().expect("length 8")) as usize,
            );
            off += 8;
        }
        let mut raw = Vec::with_capacity(r * n);
        for _ in 0..r * n {
            raw.push(f64::from_le_bytes(
                bytes[off..off + 8].try_into().expect("length 8"),
            ));
            off += 8;
        }
        let bitmap = &bytes[off..];
        for (idx, v) in raw.iter_mut().enumerate() {
            if bitmap[idx / 8] & (1 << (idx % 8)) != 0 {
                *v = f64::INFINITY;
            }
        }
        let values = Array2::from_shape_vec((r, n), raw).expect("shape follows from header");
        Ok(DistanceMatrix {
            sources,
            n_nodes: n,
            values,
        })
    }

    /// CSV export: header `source,d_0,...,d_{N-1}`, unreachable as `inf`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("source");
        for c in 0..self.n_nodes {
            out.push_str(&format!(",d_{c}"));
        }
        out.push('\n');
        for (r, &s) in self.sources.iter().enumerate() {
            out.push_str(&s.to_string());
            for c in 0..self.n_nodes {
                let v = self.values[(r, c)];
                if v.is_finite() {
                    out.push_str(&format!(",{v}"));
                } else {
                    out.push_str(",inf");
                }
            }
            out.push('\n');
        }
        crate::flow::write_atomic(path, out.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_field(points: &Array2<f64>) -> MetricTensorField {
        let n = points.nrows();
        let d = points.ncols();
        MetricTensorField {
            points: points.clone(),
            tensors: (0..n).map(|_| Array2::eye(d)).collect(),
            regularized: vec![false; n],
        }
    }

    fn euclid(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn knn_rejects_k_out_of_range() {
        let pts = array![[0.0], [1.0], [2.0]];
        assert!(matches!(knn(&pts.view(), 3), Err(Error::InvalidInput(_))));
        assert!(matches!(knn(&pts.view(), 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn identity_tensors_give_euclidean_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts = Array2::<f64>::zeros((40, 2));
        for v in pts.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let pseudo = PseudoCdf {
            coords: pts.clone(),
        };
        let field = identity_field(&pts);
        let graph = build_graph(&pts.view(), &pseudo, &field, 5).unwrap();
        for (i, adj) in graph.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                let expect = euclid(pts.row(i), pts.row(j));
                assert!((w - expect).abs() < 1e-12);
                assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn edge_count_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 120;
        let k = 7;
        let mut pts = Array2::<f64>::zeros((n, 2));
        for v in pts.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let pseudo = PseudoCdf {
            coords: pts.clone(),
        };
        let field = identity_field(&pts);
        let graph = build_graph(&pts.view(), &pseudo, &field, k).unwrap();
        let e = graph.edge_count();
        assert!(e >= n * k / 2 && e <= n * k, "e = {e} for n = {n}, k = {k}");
        // symmetry of the adjacency
        for (i, adj) in graph.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                assert!(graph.adjacency[j].iter().any(|&(b, wb)| b == i && wb == w));
            }
        }
    }

    #[test]
    fn separated_blobs_disconnect_at_small_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let mut pts = Array2::<f64>::zeros((n, 2));
        for (i, mut row) in pts.outer_iter_mut().enumerate() {
            let center = if i < n / 2 { -50.0 } else { 50.0 };
            row[0] = center + rng.random_range(-0.5..0.5);
            row[1] = rng.random_range(-0.5..0.5);
        }
        let pseudo = PseudoCdf {
            coords: pts.clone(),
        };
        let field = identity_field(&pts);
        let graph = build_graph(&pts.view(), &pseudo, &field, 4).unwrap();
        let sizes = graph.component_sizes();
        assert!(sizes.len() >= 2, "components: {sizes:?}");
        let err = distance_matrix_connected(&graph, &[0]).unwrap_err();
        assert!(err.to_string().contains("increase k"), "{err}");
    }

    #[test]
    fn distance_matrix_path_graph() {
        let g = DensityGraph {
            n_nodes: 3,
            k: 1,
            adjacency: vec![vec![(1, 1.0)], vec![(0, 1.0), (2, 2.0)], vec![(1, 2.0)]],
        };
        let m = distance_matrix(&g, &[0, 1, 2]).unwrap();
        let expect = array![[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]];
        assert_eq!(m.values, expect);
        // rows equal individual runs
        for (r, &s) in m.sources.iter().enumerate() {
            let single = shortest_paths(&g, s);
            assert_eq!(m.row(r).to_vec(), single.distances);
        }
    }

    #[test]
    fn full_matrix_is_symmetric_on_random_connected_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 30;
        let mut adjacency = vec![Vec::new(); n];
        // ring + chords guarantees connectivity
        for i in 0..n {
            let j = (i + 1) % n;
            let w = rng.random_range(1..50) as f64;
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for _ in 0..25 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                let w = rng.random_range(1..50) as f64;
                adjacency[a].push((b, w));
                adjacency[b].push((a, w));
            }
        }
        let g = DensityGraph {
            n_nodes: n,
            k: 0,
            adjacency,
        };
        let all: Vec<usize> = (0..n).collect();
        let m = distance_matrix(&g, &all).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.values[(i, j)], m.values[(j, i)]);
            }
            assert_eq!(m.values[(i, i)], 0.0);
        }
    }

    #[test]
    fn matrix_file_round_trip() {
        let values = array![[0.0, 1.5, f64::INFINITY], [1.5, 0.0, 2.5]];
        let m = DistanceMatrix {
            sources: vec![0, 1],
            n_nodes: 3,
            values,
        };
        let dir = std::env::temp_dir().join("laminar_dist_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dist.bin");
        m.save(&path).unwrap();
        let loaded = DistanceMatrix::load(&path).unwrap();
        assert_eq!(loaded, m);
        let csv_path = dir.join("dist.csv");
        m.save_csv(&csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("source,d_0,d_1,d_2\n"));
        assert!(text.contains("inf"));
    }
}
