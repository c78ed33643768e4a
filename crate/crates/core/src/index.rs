//! Exact k-nearest-neighbor and radius search over a cloud's positions.
//!
//! A plain kd-tree with bounding boxes per node. Candidate ordering is the
//! pair (squared distance, original index), so equidistant points always
//! resolve to the lowest index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::{squared_distance, Point3};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
struct Node {
    lo: Point3,
    hi: Point3,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Immutable spatial index. Holds its own copy of the positions.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn box_distance2(q: &Point3, lo: &Point3, hi: &Point3) -> f64 {
    let mut d2 = 0.0;
    for a in 0..3 {
        let d = if q[a] < lo[a] {
            lo[a] - q[a]
        } else if q[a] > hi[a] {
            q[a] - hi[a]
        } else {
            0.0
        };
        d2 += d * d;
    }
    d2
}

impl NeighborIndex {
    pub fn new(points: &[Point3]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SIZE {
            let axis = (0..3)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap();
            if hi[axis] > lo[axis] {
                let mid = start + (end - start) / 2;
                let points = &self.points;
                self.order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
                    points[x][axis].total_cmp(&points[y][axis])
                });
                let left = self.build(start, mid);
                let right = self.build(mid, end);
                self.nodes[id].children = Some((left, right));
            }
        }
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// The `k` nearest points, ascending by distance then by index.
    pub fn k_nearest(&self, query: &Point3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.points.len() {
            return Err(Error::KOutOfRange {
                k,
                len: self.points.len(),
            });
        }
        Ok(self.k_nearest_unchecked(query, k))
    }

    /// Like [`k_nearest`](Self::k_nearest) but clamps `k` to `1..=len`.
    pub fn k_nearest_clamped(&self, query: &Point3, k: usize) -> Vec<Neighbor> {
        self.k_nearest_unchecked(query, k.clamp(1, self.points.len().max(1)))
    }

    fn k_nearest_unchecked(&self, query: &Point3, k: usize) -> Vec<Neighbor> {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if heap.len() == k && box_distance2(query, &node.lo, &node.hi) > heap.peek().unwrap().d2 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let dl = box_distance2(query, &self.nodes[l].lo, &self.nodes[l].hi);
                    let dr = box_distance2(query, &self.nodes[r].lo, &self.nodes[r].hi);
                    // Nearer child goes on top of the stack.
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        let c = Candidate {
                            d2: squared_distance(query, &self.points[i]),
                            index: i,
                        };
                        if heap.len() < k {
                            heap.push(c);
                        } else if c < *heap.peek().unwrap() {
                            heap.pop();
                            heap.push(c);
                        }
                    }
                }
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.d2.sqrt(),
            })
            .collect()
    }

    pub fn nearest(&self, query: &Point3) -> Neighbor {
        self.k_nearest_unchecked(query, 1)[0]
    }

    /// Up to `k` nearest points other than the indexed point `self_index`.
    pub fn k_nearest_excluding(&self, self_index: usize, k: usize) -> Vec<Neighbor> {
        let want = (k + 1).min(self.points.len());
        let mut found = self.k_nearest_unchecked(&self.points[self_index], want);
        match found.iter().position(|n| n.index == self_index) {
            Some(pos) => {
                found.remove(pos);
            }
            None => {
                found.pop();
            }
        }
        found.truncate(k);
        found
    }

    /// Every point with distance ≤ `radius`, ascending by distance then index.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if self.points.is_empty() || !(radius >= 0.0) {
            return out;
        }
        // Slack keeps boundary points whose rounded sqrt equals the radius.
        let prune = radius * radius * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_distance2(query, &node.lo, &node.hi) > prune {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        let d = squared_distance(query, &self.points[i]).sqrt();
                        if d <= radius {
                            out.push(Neighbor { index: i, distance: d });
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
        out
    }
}
