//! k-medoids clustering over a precomputed distance matrix, plus Jaccard
//! scoring against ground-truth labels.
//!
//! Centers are restricted to data points, so any distance matrix works —
//! there is no mean to take. The implementation is PAM: a greedy
//! cost-minimizing BUILD seeding followed by best-improvement SWAP passes
//! until no swap lowers the total cost. Both phases are deterministic; ties
//! always resolve to the lowest index.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// A k-medoids partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringResult {
    /// Indices of the k medoid points.
    pub medoids: Vec<usize>,
    /// Cluster label per point: the position (0..k) of its medoid.
    pub assignment: Vec<usize>,
}

impl ClusteringResult {
    /// Sum of distances from every point to its medoid.
    pub fn total_cost(&self, distances: &ArrayView2<f64>) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| distances[(i, self.medoids[c])])
            .sum()
    }
}

/// PAM k-medoids on an N×N distance matrix.
///
/// `distances` must be finite with a zero diagonal — an unreachable pair
/// upstream (infinite geodesic distance) is reported as an input error
/// pointing at the graph connectivity, not silently absorbed.
///
/// The algorithm itself draws no randomness; `_seed` is accepted for
/// signature stability with randomized initializations and ignored.
pub fn k_medoids(distances: &ArrayView2<f64>, k: usize, _seed: u64) -> Result<ClusteringResult> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "distance matrix must be square, got {:?}",
            distances.dim()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    if distances.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "distance matrix contains non-finite entries; the density graph is \
             likely disconnected — rebuild distances with a larger k"
                .into(),
        ));
    }

    // BUILD: greedily add the medoid that minimizes the assignment cost.
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    // nearest[i] = distance from i to its closest chosen medoid
    let mut nearest = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best_point = usize::MAX;
        let mut best_cost = f64::INFINITY;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            let mut cost = 0.0;
            for j in 0..n {
                cost += nearest[j].min(distances[(j, cand)]);
            }
            if cost < best_cost {
                best_cost = cost;
                best_point = cand;
            }
        }
        medoids.push(best_point);
        for j in 0..n {
            nearest[j] = nearest[j].min(distances[(j, best_point)]);
        }
    }

    // SWAP: best-improvement passes. Cost strictly decreases, so this
    // terminates; a tiny threshold keeps float noise from cycling.
    let mut cost = assignment_cost(distances, &medoids);
    loop {
        let mut best_swap: Option<(usize, usize, f64)> = None;
        for m_pos in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[m_pos] = cand;
                let new_cost = assignment_cost(distances, &trial);
                let improvement = cost - new_cost;
                if improvement > 1e-12 * (1.0 + cost)
                    && best_swap.is_none_or(|(_, _, best)| new_cost < best)
                {
                    best_swap = Some((m_pos, cand, new_cost));
                }
            }
        }
        match best_swap {
            Some((m_pos, cand, new_cost)) => {
                medoids[m_pos] = cand;
                cost = new_cost;
            }
            None => break,
        }
    }

    medoids.sort_unstable();
    let assignment = assign(distances, &medoids);
    Ok(ClusteringResult {
        medoids,
        assignment,
    })
}

fn assign(distances: &ArrayView2<f64>, medoids: &[usize]) -> Vec<usize> {
    (0..distances.nrows())
        .map(|i| {
            let mut best = 0;
            let mut best_d = distances[(i, medoids[0])];
            for (c, &m) in medoids.iter().enumerate().skip(1) {
                let d = distances[(i, m)];
                if d < best_d {
                    best_d = d;
                    best = c; // ties keep the lower medoid index
                }
            }
            best
        })
        .collect()
}

fn assignment_cost(distances: &ArrayView2<f64>, medoids: &[usize]) -> f64 {
    (0..distances.nrows())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| distances[(i, m)])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Jaccard index `|A ∩ B| / |A ∪ B|` of two index sets given as sorted,
/// deduplicated slices. Empty-vs-empty is 0.
pub fn jaccard_index(a: &[usize], b: &[usize]) -> f64 {
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn clusters_of(labels: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| {
            let members: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == id)
                .map(|(i, _)| i)
                .collect();
            (id, members)
        })
        .collect()
}

/// For each ground-truth cluster, the best Jaccard overlap over all
/// predicted clusters.
///
/// Returns `(truth_label, best_score)` pairs sorted by truth label.
pub fn jaccard_best_match(
    truth_labels: &[usize],
    predicted_labels: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if truth_labels.len() != predicted_labels.len() {
        return Err(Error::InvalidInput(format!(
            "label arrays differ in length: {} vs {}",
            truth_labels.len(),
            predicted_labels.len()
        )));
    }
    if truth_labels.is_empty() {
        return Err(Error::InvalidInput("labels are empty".into()));
    }
    let truth = clusters_of(truth_labels);
    let pred = clusters_of(predicted_labels);
    Ok(truth
        .into_iter()
        .map(|(id, members)| {
            let best = pred
                .iter()
                .map(|(_, p)| jaccard_index(&members, p))
                .fold(0.0f64, f64::max);
            (id, best)
        })
        .collect())
}

/// Mean of the per-truth-cluster best-match scores.
pub fn mean_jaccard(truth_labels: &[usize], predicted_labels: &[usize]) -> Result<f64> {
    let scores = jaccard_best_match(truth_labels, predicted_labels)?;
    Ok(scores.iter().map(|(_, s)| s).sum::<f64>() / scores.len() as f64)
}

/// Export labels as a one-column CSV aligned with the input row order.
pub fn save_labels_csv(labels: &[usize], path: &std::path::Path) -> Result<()> {
    let mut out = String::from("label\n");
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    crate::flow::write_atomic(path, out.as_bytes())
}
