//! Exact-nearest-neighbor k-d tree over 3D points.
//!
//! Median split on the widest axis, leaf size 16. Ties between equidistant
//! candidates break toward the lowest original index, and pruning only
//! discards subtrees that are strictly farther than the incumbent — every
//! query returns exactly what a brute-force scan would.

use crate::geometry::{Vec3, WorldPoint};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Inner {
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Bounds {
    lo: Vec3,
    hi: Vec3,
}

impl Bounds {
    fn of(points: &[WorldPoint], order: &[u32]) -> Bounds {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in order {
            let p = points[i as usize];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Bounds { lo, hi }
    }

    fn center(&self) -> Vec3 {
        (self.lo + self.hi) * 0.5
    }

    fn half_diagonal(&self) -> f64 {
        ((self.hi - self.lo) * 0.5).norm()
    }

    /// Squared distance from a point to the box (0 inside).
    fn dist_sq_to_point(&self, q: &WorldPoint) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let d = (self.lo[a] - q[a]).max(0.0).max(q[a] - self.hi[a]);
            d2 += d * d;
        }
        d2
    }

    /// Lower bound on the distance from the box to a line through `origin`
    /// along unit `dir`: distance from the box center to the line, minus
    /// the half-diagonal.
    fn dist_lower_bound_to_line(&self, origin: &WorldPoint, dir: &Vec3) -> f64 {
        let rel = self.center() - origin.coords;
        let perp = rel - dir * rel.dot(dir);
        (perp.norm() - self.half_diagonal()).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct KdTree3 {
    points: Vec<WorldPoint>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    bounds: Vec<Bounds>,
    root: usize,
}

impl KdTree3 {
    pub fn build(points: &[WorldPoint]) -> KdTree3 {
        let mut tree = KdTree3 {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
            root: 0,
        };
        if !points.is_empty() {
            tree.root = tree.split(0, points.len());
        }
        tree
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let bounds = Bounds::of(&self.points, &self.order[start..end]);
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            self.bounds.push(bounds);
            return self.nodes.len() - 1;
        }
        // Widest axis, deterministic comparator (coordinate, then index).
        let extent = bounds.hi - bounds.lo;
        let axis = if extent[0] >= extent[1] && extent[0] >= extent[2] {
            0
        } else if extent[1] >= extent[2] {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            let (pa, pb) = (points[a as usize][axis], points[b as usize][axis]);
            pa.partial_cmp(&pb).unwrap().then(a.cmp(&b))
        });
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes.push(Node::Inner { left, right });
        self.bounds.push(bounds);
        self.nodes.len() - 1
    }

    /// Nearest point to `q`: `(original index, squared distance)`. Ties go
    /// to the lowest index, exactly as a brute-force scan in index order.
    pub fn nearest(&self, q: &WorldPoint) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        self.nearest_rec(self.root, q, &mut best);
        best
    }

    fn nearest_rec(&self, node: usize, q: &WorldPoint, best: &mut Option<(usize, f64)>) {
        if let Some((_, best_d2)) = best {
            // Strictly-farther pruning keeps equidistant lower indices
            // reachable.
            if self.bounds[node].dist_sq_to_point(q) > *best_d2 {
                return;
            }
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i as usize] - q).norm_squared();
                    let better = match best {
                        None => true,
                        Some((bi, bd2)) => d2 < *bd2 || (d2 == *bd2 && (i as usize) < *bi),
                    };
                    if better {
                        *best = Some((i as usize, d2));
                    }
                }
            }
            Node::Inner { left, right } => {
                let (first, second) = if self.bounds[left].dist_sq_to_point(q)
                    <= self.bounds[right].dist_sq_to_point(q)
                {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_rec(first, q, best);
                self.nearest_rec(second, q, best);
            }
        }
    }

    /// The `k` nearest points to `q` as `(index, squared distance)` sorted
    /// ascending, ties toward lower indices.
    pub fn k_nearest(&self, q: &WorldPoint, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        // Incumbents sorted ascending; worst at the back.
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        self.k_nearest_rec(self.root, q, k, &mut best);
        best
    }

    fn k_nearest_rec(&self, node: usize, q: &WorldPoint, k: usize, best: &mut Vec<(usize, f64)>) {
        if best.len() == k {
            if self.bounds[node].dist_sq_to_point(q) > best[k - 1].1 {
                return;
            }
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i as usize] - q).norm_squared();
                    let cand = (i as usize, d2);
                    let pos = best
                        .binary_search_by(|probe| {
                            probe
                                .1
                                .partial_cmp(&cand.1)
                                .unwrap()
                                .then(probe.0.cmp(&cand.0))
                        })
                        .unwrap_or_else(|e| e);
                    if pos < k {
                        best.insert(pos, cand);
                        best.truncate(k);
                    }
                }
            }
            Node::Inner { left, right } => {
                let (first, second) = if self.bounds[left].dist_sq_to_point(q)
                    <= self.bounds[right].dist_sq_to_point(q)
                {
                    (left, right)
                } else {
                    (right, left)
                };
                self.k_nearest_rec(first, q, k, best);
                self.k_nearest_rec(second, q, k, best);
            }
        }
    }

    /// Point minimizing perpendicular distance to the line
    /// `{origin + s·dir, s ∈ ℝ}` (`dir` unit): `(index, squared
    /// perpendicular distance)`. Matches a brute-force line-distance scan.
    pub fn nearest_to_line(&self, origin: &WorldPoint, dir: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        self.nearest_line_rec(self.root, origin, dir, &mut best);
        best
    }

    fn nearest_line_rec(
        &self,
        node: usize,
        origin: &WorldPoint,
        dir: &Vec3,
        best: &mut Option<(usize, f64)>,
    ) {
        if let Some((_, best_d2)) = best {
            let lb = self.bounds[node].dist_lower_bound_to_line(origin, dir);
            if lb * lb > *best_d2 {
                return;
            }
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let rel = self.points[i as usize] - origin;
                    let along = rel.dot(dir);
                    let d2 = (rel.norm_squared() - along * along).max(0.0);
                    let better = match best {
                        None => true,
                        Some((bi, bd2)) => d2 < *bd2 || (d2 == *bd2 && (i as usize) < *bi),
                    };
                    if better {
                        *best = Some((i as usize, d2));
                    }
                }
            }
            Node::Inner { left, right } => {
                let (lb_l, lb_r) = (
                    self.bounds[left].dist_lower_bound_to_line(origin, dir),
                    self.bounds[right].dist_lower_bound_to_line(origin, dir),
                );
                let (first, second) = if lb_l <= lb_r {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_line_rec(first, origin, dir, best);
                self.nearest_line_rec(second, origin, dir, best);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random_points(n: usize, seed: f64) -> Vec<WorldPoint> {
        let mut state = seed;
        let mut next = move || {
            state = (state * 9301.0 + 49297.0) % 233280.0;
            state / 233280.0 * 100.0 - 50.0
        };
        (0..n)
            .map(|_| WorldPoint::new(next(), next(), next()))
            .collect()
    }

    fn brute_nearest(points: &[WorldPoint], q: &WorldPoint) -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p - q).norm_squared();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn nearest_matches_brute_force() {
        let points = pseudo_random_points(1000, 3.0);
        let queries = pseudo_random_points(500, 19.0);
        let tree = KdTree3::build(&points);
        for q in &queries {
            assert_eq!(tree.nearest(q).unwrap(), brute_nearest(&points, q));
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // Duplicate points: index 2 and 0 equidistant from the query.
        let points = vec![
            WorldPoint::new(1.0, 0.0, 0.0),
            WorldPoint::new(5.0, 0.0, 0.0),
            WorldPoint::new(1.0, 0.0, 0.0),
        ];
        let tree = KdTree3::build(&points);
        assert_eq!(tree.nearest(&WorldPoint::origin()).unwrap().0, 0);
    }

    #[test]
    fn k_nearest_matches_brute_force() {
        let points = pseudo_random_points(300, 7.0);
        let tree = KdTree3::build(&points);
        for q in pseudo_random_points(50, 23.0) {
            let got = tree.k_nearest(&q, 8);
            let mut all: Vec<(usize, f64)> = points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - q).norm_squared()))
                .collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            all.truncate(8);
            assert_eq!(got, all);
        }
    }

    #[test]
    fn line_nearest_matches_brute_force() {
        let points = pseudo_random_points(800, 13.0);
        let tree = KdTree3::build(&points);
        let mut state = 31.0;
        let mut next = move || {
            state = (state * 9301.0 + 49297.0) % 233280.0;
            state / 233280.0 * 2.0 - 1.0
        };
        for _ in 0..200 {
            let origin = WorldPoint::new(next() * 60.0, next() * 60.0, next() * 60.0);
            let dir = Vec3::new(next(), next(), next());
            if dir.norm() < 1e-6 {
                continue;
            }
            let dir = dir.normalize();
            let got = tree.nearest_to_line(&origin, &dir).unwrap();
            let mut best = (0usize, f64::INFINITY);
            for (i, p) in points.iter().enumerate() {
                let rel = p - origin;
                let along = rel.dot(&dir);
                let d2 = (rel.norm_squared() - along * along).max(0.0);
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            assert_eq!(got.0, best.0);
            assert!((got.1 - best.1).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_tree_returns_none() {
        let tree = KdTree3::build(&[]);
        assert!(tree.nearest(&WorldPoint::origin()).is_none());
        assert!(tree
            .nearest_to_line(&WorldPoint::origin(), &Vec3::z())
            .is_none());
    }
}
