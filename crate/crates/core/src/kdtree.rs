//! Exact k-nearest-neighbor search over a fixed point set.
//!
//! A balanced kd-tree built once and then queried read-only; queries from
//! multiple threads are safe. Results are exact (no approximation) and
//! deterministic: ties in distance are broken by ascending point id, and
//! pruning keeps subtrees whose boundary lies exactly at the current worst
//! distance so equal-distance points with smaller ids are never missed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

#[derive(Debug, Clone, Copy)]
struct Node {
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

/// Immutable spatial index over a point cloud.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    nodes: Vec<Node>,
    root: i32,
}

/// Heap entry ordered so that the *worst* candidate (largest distance,
/// then largest id) sits on top of the max-heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    id: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // dist2 is always finite and nonnegative here.
        self.dist2
            .partial_cmp(&other.dist2)
            .unwrap()
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    /// Builds the index. Errors on an empty cloud.
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let points = cloud.points.clone();
        let mut ids: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_node(&mut ids, &points, 0, &mut nodes);
        Ok(Self {
            points,
            nodes,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> &Point3 {
        &self.points[id]
    }

    /// Returns the `min(k, N)` nearest points to `q` as `(id, distance)`,
    /// sorted by nondecreasing distance, ties by ascending id.
    pub fn knn(&self, q: &Point3, k: usize) -> Vec<(usize, f64)> {
        assert!(k >= 1, "k must be at least 1");
        let k = k.min(self.points.len());
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, q, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort_unstable();
        out.into_iter()
            .map(|c| (c.id as usize, c.dist2.sqrt()))
            .collect()
    }

    /// Distance from `q` to its nearest indexed point.
    pub fn nearest_distance(&self, q: &Point3) -> f64 {
        self.knn(q, 1)[0].1
    }

    fn search(&self, node: i32, q: &Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        if node < 0 {
            return;
        }
        let n = self.nodes[node as usize];
        let p = &self.points[n.point as usize];
        let cand = Candidate {
            dist2: (q - p).norm_squared(),
            id: n.point,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }

        let axis = n.axis as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, q, k, heap);
        // <= keeps boundary ties reachable for the id tie-break.
        if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
            self.search(far, q, k, heap);
        }
    }
}

fn build_node(ids: &mut [u32], points: &[Point3], depth: usize, nodes: &mut Vec<Node>) -> i32 {
    if ids.is_empty() {
        return -1;
    }
    let axis = depth % 3;
    ids.sort_unstable_by(|&a, &b| {
        points[a as usize][axis]
            .partial_cmp(&points[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mid = ids.len() / 2;
    let idx = nodes.len();
    nodes.push(Node {
        point: ids[mid],
        axis: axis as u8,
        left: -1,
        right: -1,
    });
    let (left_ids, rest) = ids.split_at_mut(mid);
    let right_ids = &mut rest[1..];
    let left = build_node(left_ids, points, depth + 1, nodes);
    let right = build_node(right_ids, points, depth + 1, nodes);
    nodes[idx].left = left;
    nodes[idx].right = right;
    idx as i32
}
