//! Exact k-nearest-neighbor machinery: a k-d tree for queries, a
//! brute-force scan with the same contract, and leave-one-out average
//! i-distances over a point set.
//!
//! All distances are Euclidean. Results are sorted by distance, ties
//! broken by ascending reference index, so the tree and the scan agree
//! bit-for-bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

const LEAF_SIZE: usize = 16;

/// One query result: distance to a reference point and its index in the
/// original reference list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub distance: f64,
    pub index: usize,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let diff = a[i] - b[i];
        acc += diff * diff;
    }
    acc
}

/// Candidate ordered so that the "worst" neighbor (largest distance,
/// then largest index) sits on top of a max-heap.
#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    index: u32,
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

enum Node {
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        start: usize,
        end: usize,
    },
}

/// Immutable exact k-NN index over a fixed reference point list.
pub struct NeighborIndex {
    points: Vec<f64>,
    d: usize,
    s: usize,
    nodes: Vec<Node>,
    perm: Vec<u32>,
    root: usize,
}

impl NeighborIndex {
    /// Build the index over `s` points given as a flat row-major slice.
    pub fn build(points: &[f64], d: usize) -> Result<Self> {
        if d == 0 || points.is_empty() {
            return Err(Error::EmptyDataset("cannot index an empty point set".into()));
        }
        if points.len() % d != 0 {
            return Err(Error::LengthMismatch(format!(
                "{} values do not form rows of dimension {d}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                column: format!("{}", pos % d),
            });
        }
        let s = points.len() / d;
        let mut index = NeighborIndex {
            points: points.to_vec(),
            d,
            s,
            nodes: Vec::new(),
            perm: (0..s as u32).collect(),
            root: 0,
        };
        index.root = index.build_node(0, s);
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.s
    }

    pub fn is_empty(&self) -> bool {
        self.s == 0
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn coord(&self, point: u32, axis: usize) -> f64 {
        self.points[point as usize * self.d + axis]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        // Split on the axis with the largest spread.
        let mut axis = 0;
        let mut best_spread = f64::NEG_INFINITY;
        for a in 0..self.d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &p in &self.perm[start..end] {
                let v = self.coord(p, a);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        if best_spread == 0.0 {
            // All points identical in every axis; nothing to split on.
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mid = (end - start) / 2;
        let points = std::mem::take(&mut self.points);
        self.perm[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize * self.d + axis]
                .total_cmp(&points[b as usize * self.d + axis])
                .then(a.cmp(&b))
        });
        self.points = points;
        let value = self.coord(self.perm[start + mid], axis);

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end }); // placeholder
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[slot] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        slot
    }

    /// Exact k nearest neighbors of `query`, optionally excluding one
    /// reference index, sorted by (distance, index).
    pub fn knn(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
        if query.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: query.len(),
            });
        }
        if let Some(e) = exclude {
            if e >= self.s {
                return Err(Error::InvalidArgument(format!(
                    "exclude index {e} out of range for {} references",
                    self.s
                )));
            }
        }
        let effective = self.s - usize::from(exclude.is_some());
        if k == 0 || k > effective {
            return Err(Error::InvalidK { k, max: effective });
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, exclude, &mut heap);
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                distance: c.d2.sqrt(),
                index: c.index as usize,
            })
            .collect())
    }

    /// Distances only, same contract as [`NeighborIndex::knn`].
    pub fn knn_distances(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<f64>> {
        Ok(self.knn(query, k, exclude)?.into_iter().map(|n| n.distance).collect())
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.perm[start..end] {
                    if exclude == Some(p as usize) {
                        continue;
                    }
                    let d2 = dist_sq(query, &self.points[p as usize * self.d..(p as usize + 1) * self.d]);
                    let cand = Candidate { d2, index: p };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand.cmp(heap.peek().unwrap()) == Ordering::Less {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, exclude, heap);
                // A far-side point at exactly the plane distance can still
                // win a tie on index, so only prune on strict inequality.
                if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

/// Full-scan k-NN with the contract of [`NeighborIndex::knn`].
pub fn brute_force_knn(
    refs: &[f64],
    d: usize,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<Neighbor>> {
    if d == 0 || refs.is_empty() {
        return Err(Error::EmptyDataset("cannot scan an empty point set".into()));
    }
    if refs.len() % d != 0 || query.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: query.len(),
        });
    }
    let s = refs.len() / d;
    if let Some(e) = exclude {
        if e >= s {
            return Err(Error::InvalidArgument(format!(
                "exclude index {e} out of range for {s} references"
            )));
        }
    }
    let effective = s - usize::from(exclude.is_some());
    if k == 0 || k > effective {
        return Err(Error::InvalidK { k, max: effective });
    }
    let mut all: Vec<(f64, usize)> = (0..s)
        .filter(|&i| exclude != Some(i))
        .map(|i| (dist_sq(query, &refs[i * d..(i + 1) * d]), i))
        .collect();
    all.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    Ok(all
        .into_iter()
        .map(|(d2, index)| Neighbor {
            distance: d2.sqrt(),
            index,
        })
        .collect())
}

/// Leave-one-out average i-distances of a point set.
///
/// Entry `i` (1-based) is the mean over points `x` of the distance from
/// `x` to its i-th nearest neighbor among the other points, so the
/// profile has length `s - 1` and is non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgDistanceProfile {
    values: Vec<f64>,
}

impl AvgDistanceProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset("empty distance profile".into()));
        }
        for pair in values.windows(2) {
            if !(pair[1] >= pair[0]) {
                return Err(Error::InvalidArgument(
                    "average i-distances must be non-decreasing".into(),
                ));
            }
        }
        if values[0] < 0.0 || !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "average i-distances must be finite and non-negative".into(),
            ));
        }
        Ok(AvgDistanceProfile { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Compute the leave-one-out average i-distance profile of `fit_points`.
///
/// Work is chunked so partial sums are reduced in a fixed order and the
/// result is reproducible bit-for-bit regardless of thread count.
pub fn average_i_distances(fit_points: &[f64], d: usize) -> Result<AvgDistanceProfile> {
    if d == 0 || fit_points.len() % d != 0 {
        return Err(Error::LengthMismatch(format!(
            "{} values do not form rows of dimension {d}",
            fit_points.len()
        )));
    }
    let s = fit_points.len() / d;
    if s < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points for average i-distances, got {s}"
        )));
    }

    let chunk = 64;
    let partials: Vec<Vec<f64>> = (0..s)
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|queries| {
            let mut sums = vec![0.0; s - 1];
            let mut row: Vec<f64> = Vec::with_capacity(s - 1);
            for &j in queries {
                row.clear();
                let q = &fit_points[j * d..(j + 1) * d];
                for other in 0..s {
                    if other == j {
                        continue;
                    }
                    row.push(dist_sq(q, &fit_points[other * d..(other + 1) * d]));
                }
                row.sort_unstable_by(f64::total_cmp);
                for (i, &d2) in row.iter().enumerate() {
                    sums[i] += d2.sqrt();
                }
            }
            sums
        })
        .collect();

    let mut sums = vec![0.0; s - 1];
    for part in &partials {
        for (acc, v) in sums.iter_mut().zip(part) {
            *acc += v;
        }
    }
    for v in &mut sums {
        *v /= s as f64;
    }
    AvgDistanceProfile::new(sums)
}
