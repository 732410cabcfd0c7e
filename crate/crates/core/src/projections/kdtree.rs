use nalgebra::Vector3;

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

/// Median-split 3-d tree over a fixed point set.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vector3<f64>>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        let mut ids: Vec<usize> = (0..points.len()).collect();
        let mut tree = Self { points, nodes: Vec::new(), root: None };
        tree.root = tree.build(&mut ids, 0);
        tree
    }

    fn build(&mut self, ids: &mut [usize], depth: usize) -> Option<usize> {
        if ids.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let mid = ids.len() / 2;
        let points = &self.points;
        ids.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let point = ids[mid];
        let (lo, hi) = ids.split_at_mut(mid);
        let left = self.build(lo, depth + 1);
        let right = self.build(&mut hi[1..], depth + 1);
        self.nodes.push(Node { point, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Index of the point closest to `q`.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<usize> {
        self.k_nearest(q, 1).first().map(|&(i, _)| i)
    }

    /// The `k` closest points as `(index, squared distance)`, nearest first.
    pub fn k_nearest(&self, q: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k > 0 {
            self.search(self.root, q, k, &mut best);
        }
        best
    }

    fn search(&self, node: Option<usize>, q: &Vector3<f64>, k: usize, best: &mut Vec<(usize, f64)>) {
        let Some(n) = node else { return };
        let node = &self.nodes[n];
        let p = &self.points[node.point];
        let d2 = (p - q).norm_squared();
        if best.len() < k || d2 < best[best.len() - 1].1 {
            let pos = best.partition_point(|&(_, d)| d <= d2);
            best.insert(pos, (node.point, d2));
            best.truncate(k);
        }
        let delta = q[node.axis] - p[node.axis];
        let (near, far) = if delta < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
        self.search(near, q, k, best);
        if best.len() < k || delta * delta < best[best.len() - 1].1 {
            self.search(far, q, k, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn matches_linear_scan() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let pts: Vec<Vector3<f64>> = (0..500)
            .map(|_| Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let tree = KdTree::new(pts.clone());
        for _ in 0..200 {
            let q = Vector3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let mut all: Vec<(usize, f64)> = pts.iter().enumerate().map(|(i, p)| (i, (p - q).norm_squared())).collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1));
            assert_eq!(tree.nearest(&q), Some(all[0].0));
            let k5: Vec<f64> = tree.k_nearest(&q, 5).iter().map(|x| x.1).collect();
            let expect: Vec<f64> = all[..5].iter().map(|x| x.1).collect();
            assert_eq!(k5, expect);
        }
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::new(Vec::new());
        assert!(tree.is_empty());
        assert_eq!(tree.nearest(&Vector3::zeros()), None);
    }
}
