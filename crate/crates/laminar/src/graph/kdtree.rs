//! Exact k-nearest-neighbour search with a median-split KD-tree.
//!
//! Splits on the axis of largest spread, leaf size 16. Ties in neighbour
//! distance are broken by lower point index, and the pruning bound is strict
//! so equal-distance candidates in far subtrees are still visited — results
//! match a brute-force `(distance, index)` sort exactly.

use ndarray::ArrayView2;

const LEAF_SIZE: usize = 16;

enum Node {
    Leaf {
        start: usize,
        len: usize,
    },
    Split {
        axis: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// KD-tree over the rows of a points matrix.
pub struct KdTree {
    coords: Vec<f64>,
    dim: usize,
    perm: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl KdTree {
    pub fn build(points: &ArrayView2<f64>) -> KdTree {
        let (n, dim) = points.dim();
        assert!(n > 0, "cannot build a KD-tree over zero points");
        let coords: Vec<f64> = points.iter().copied().collect();
        let mut tree = KdTree {
            coords,
            dim,
            perm: (0..n).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        let root = tree.build_node(0, n);
        tree.root = root;
        tree
    }

    fn coord(&self, point: usize, axis: usize) -> f64 {
        self.coords[point * self.dim + axis]
    }

    fn build_node(&mut self, start: usize, len: usize) -> usize {
        if len <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, len });
            return self.nodes.len() - 1;
        }
        // split on the axis with the largest spread
        let mut best_axis = 0;
        let mut best_spread = -1.0;
        for axis in 0..self.dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &p in &self.perm[start..start + len] {
                let v = self.coord(p, axis);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_axis = axis;
            }
        }
        if best_spread == 0.0 {
            // all points coincide; no useful split
            self.nodes.push(Node::Leaf { start, len });
            return self.nodes.len() - 1;
        }
        let mid = len / 2;
        let dim = self.dim;
        let coords = std::mem::take(&mut self.coords);
        self.perm[start..start + len].select_nth_unstable_by(mid, |&a, &b| {
            coords[a * dim + best_axis]
                .total_cmp(&coords[b * dim + best_axis])
                .then(a.cmp(&b))
        });
        self.coords = coords;
        let threshold = self.coord(self.perm[start + mid], best_axis);
        let left = self.build_node(start, mid);
        let right = self.build_node(start + mid, len - mid);
        self.nodes.push(Node::Split {
            axis: best_axis,
            threshold,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    /// Indices of the k nearest neighbours of `query` by Euclidean distance,
    /// never including `exclude` itself, sorted by `(distance, index)`.
    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
        assert_eq!(query.len(), self.dim);
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search(self.root, query, k, exclude, &mut best);
        best.into_iter().map(|(_, i)| i).collect()
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        best: &mut Vec<(f64, usize)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, len } => {
                for &p in &self.perm[start..start + len] {
                    if Some(p) == exclude {
                        continue;
                    }
                    let mut d2 = 0.0;
                    for a in 0..self.dim {
                        let diff = self.coord(p, a) - query[a];
                        d2 += diff * diff;
                    }
                    let cand = (d2, p);
                    if best.len() < k {
                        let pos = best.partition_point(|&(bd, bi)| (bd, bi) < cand);
                        best.insert(pos, cand);
                    } else if let Some(&worst) = best.last() {
                        if cand < worst {
                            let pos = best.partition_point(|&(bd, bi)| (bd, bi) < cand);
                            best.insert(pos, cand);
                            best.pop();
                        }
                    }
                }
            }
            Node::Split {
                axis,
                threshold,
                left,
                right,
            } => {
                let diff = query[axis] - threshold;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, exclude, best);
                // visit the far side unless it is strictly beyond the worst
                // kept distance (equality may hide lower-index ties)
                let prune =
                    best.len() == k && diff * diff > best.last().expect("k > 0 candidates").0;
                if !prune {
                    self.search(far, query, k, exclude, best);
                }
            }
        }
    }
}
