//! Single-source shortest paths with a binary heap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::DensityGraph;

/// Result of one single-source shortest-path run. Unreachable nodes carry
/// `f64::INFINITY` and a `None` predecessor — infinity is a marker here, and
/// must be filtered before any statistics.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub source: usize,
    pub distances: Vec<f64>,
    pub predecessors: Vec<Option<usize>>,
}

impl DistanceResult {
    pub fn is_reachable(&self, node: usize) -> bool {
        self.distances[node].is_finite()
    }

    /// Path from the source to `node`, inclusive, if reachable.
    pub fn path_to(&self, node: usize) -> Option<Vec<usize>> {
        if !self.is_reachable(node) {
            return None;
        }
        let mut path = vec![node];
        let mut cur = node;
        while let Some(prev) = self.predecessors[cur] {
            path.push(prev);
            cur = prev;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the cheapest first
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact Dijkstra from `source` over the graph's nonnegative edge weights.
pub fn shortest_paths(graph: &DensityGraph, source: usize) -> DistanceResult {
    let n = graph.n_nodes;
    assert!(source < n, "source {source} out of range for {n} nodes");
    let mut distances = vec![f64::INFINITY; n];
    let mut predecessors = vec![None; n];
    let mut heap = BinaryHeap::new();
    distances[source] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        node: source,
    });

    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > distances[node] {
            continue; // stale entry
        }
        for &(next, weight) in &graph.adjacency[node] {
            let candidate = cost + weight;
            if candidate < distances[next] {
                distances[next] = candidate;
                predecessors[next] = Some(node);
                heap.push(HeapEntry {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }
    DistanceResult {
        source,
        distances,
        predecessors,
    }
}
