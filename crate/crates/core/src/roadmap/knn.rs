use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{ConfigMetric, Configuration, DOF};

const HEADING: usize = 2;

#[derive(Debug, Clone, Copy)]
struct Node {
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// Exact k-nearest-neighbor index under the configuration metric.
///
/// Points are split in the scaled space; the heading axis is treated as a
/// circle when bounding the distance to a far subtree. Leaf distances use
/// [`ConfigMetric::distance`] so results agree bitwise with a linear scan.
#[derive(Debug, Clone)]
pub struct KdTree {
    metric: ConfigMetric,
    points: Vec<Configuration>,
    scaled: Vec<[f64; DOF]>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(metric: ConfigMetric) -> Self {
        Self {
            metric,
            points: Vec::new(),
            scaled: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn from_points(metric: ConfigMetric, points: &[Configuration]) -> Self {
        let mut tree = Self::new(metric);
        for q in points {
            tree.insert(*q);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds a point; its index is the insertion order.
    pub fn insert(&mut self, q: Configuration) -> usize {
        let idx = self.points.len();
        let s = self.metric.scaled(&q);
        self.points.push(q);
        self.scaled.push(s);
        if idx == 0 {
            self.nodes.push(Node {
                axis: 0,
                left: None,
                right: None,
            });
            return idx;
        }
        let mut cur = 0;
        loop {
            let node = self.nodes[cur];
            let go_right = s[node.axis] >= self.scaled[cur][node.axis];
            let next = if go_right { node.right } else { node.left };
            match next {
                Some(n) => cur = n,
                None => {
                    let axis = (node.axis + 1) % DOF;
                    self.nodes.push(Node {
                        axis,
                        left: None,
                        right: None,
                    });
                    if go_right {
                        self.nodes[cur].right = Some(idx);
                    } else {
                        self.nodes[cur].left = Some(idx);
                    }
                    return idx;
                }
            }
        }
    }

    /// The `k` nearest points as `(index, distance)`, ordered by distance then index.
    pub fn nearest(&self, q: &Configuration, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let s = self.metric.scaled(q);
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, &s, k, &mut heap);
        let mut out: Vec<_> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist)).collect()
    }

    fn search(
        &self,
        cur: usize,
        q: &Configuration,
        s: &[f64; DOF],
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        let cand = Candidate {
            dist: self.metric.distance(&self.points[cur], q),
            index: cur,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(cand);
        }
        let node = self.nodes[cur];
        let split = self.scaled[cur][node.axis];
        let right_first = s[node.axis] >= split;
        let (near, far) = if right_first {
            (node.right, node.left)
        } else {
            (node.left, node.right)
        };
        if let Some(n) = near {
            self.search(n, q, s, k, heap);
        }
        if let Some(f) = far {
            let bound = self.gap(s[node.axis], split, node.axis, right_first);
            // shrink the bound slightly so rounding never prunes an exact tie
            if heap.len() < k
                || bound * (1.0 - 1e-12) <= heap.peek().expect("heap is nonempty").dist
            {
                self.search(f, q, s, k, heap);
            }
        }
    }

    /// Lower bound on the scaled distance from coordinate `v` to the far side of `split`.
    fn gap(&self, v: f64, split: f64, axis: usize, far_is_left: bool) -> f64 {
        let linear = (v - split).abs();
        if axis != HEADING {
            return linear;
        }
        let half = 0.5 * self.metric.heading_period();
        if far_is_left {
            // far side is [-half, split): reach it directly or by wrapping past +half
            linear.min(half - v)
        } else {
            // far side is [split, half]: reach it directly or by wrapping past -half
            linear.min(v + half)
        }
        .max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Configuration], q: &Configuration, k: usize) -> Vec<(usize, f64)> {
        let m = ConfigMetric::default();
        let mut all: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, m.distance(p, q)))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn arb_config() -> impl Strategy<Value = Configuration> {
        (
            0.0f64..10.0,
            0.0f64..6.0,
            -3.2f64..3.2,
            -1.8f64..1.8,
            -1.0f64..0.5,
        )
            .prop_map(|(x, y, t, p, ti)| Configuration::new(x, y, t, p, ti))
    }

    #[test]
    fn empty_and_small() {
        let m = ConfigMetric::default();
        let mut t = KdTree::new(m);
        let q = Configuration::new(0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(t.nearest(&q, 3).is_empty());
        t.insert(q);
        assert_eq!(t.nearest(&q, 3), vec![(0, 0.0)]);
    }

    #[test]
    fn heading_wraps_around() {
        let m = ConfigMetric::default();
        let pts = [
            Configuration::new(0.0, 0.0, 3.1, 0.0, 0.0),
            Configuration::new(0.0, 0.0, 0.0, 0.0, 0.0),
        ];
        let t = KdTree::from_points(m, &pts);
        let q = Configuration::new(0.0, 0.0, -3.1, 0.0, 0.0);
        assert_eq!(t.nearest(&q, 1)[0].0, 0);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            pts in prop::collection::vec(arb_config(), 1..120),
            q in arb_config(),
            k in 1usize..8,
        ) {
            let t = KdTree::from_points(ConfigMetric::default(), &pts);
            prop_assert_eq!(t.nearest(&q, k), brute(&pts, &q, k));
        }

        #[test]
        fn duplicate_points_tie_by_index(q in arb_config(), n in 2usize..10) {
            let pts = vec![q; n];
            let t = KdTree::from_points(ConfigMetric::default(), &pts);
            let got: Vec<usize> = t.nearest(&q, 3).into_iter().map(|(i, _)| i).collect();
            prop_assert_eq!(got, (0..n.min(3)).collect::<Vec<_>>());
        }
    }
}
