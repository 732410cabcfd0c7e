//! Projection onto a high-resolution triangle mesh.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::Vector3;

use super::{KdTree, Projection};
use crate::mesh::SurfaceMesh;
use crate::Result;

/// Closest point to `p` on the triangle `(a, b, c)` by region classification
/// of the barycentric coordinates.
pub fn closest_point_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Nearest-vertex search in a KD-tree over the target vertices, followed by
/// orthogonal projection onto the triangles around the `k_nearest` closest
/// vertices (one by default).
#[derive(Debug)]
pub struct ExplicitProjection {
    target: Arc<SurfaceMesh>,
    tree: KdTree,
    k_nearest: usize,
    cache: Option<Mutex<HashMap<[u64; 3], Vector3<f64>>>>,
}

impl ExplicitProjection {
    pub fn new(target: Arc<SurfaceMesh>) -> Self {
        let tree = KdTree::new(target.vertices().to_vec());
        Self { target, tree, k_nearest: 1, cache: None }
    }

    pub fn with_k_nearest(mut self, k: usize) -> Self {
        self.k_nearest = k.max(1);
        self
    }

    /// Memoize results per input point.
    pub fn cached(mut self) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn target(&self) -> &SurfaceMesh {
        &self.target
    }

    fn closest(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let mut best = (f64::INFINITY, *p);
        for (v, _) in self.tree.k_nearest(p, self.k_nearest) {
            for &t in self.target.vertex_triangles(v) {
                let [a, b, c] = self.target.triangles()[t].map(|i| self.target.vertices()[i]);
                let q = closest_point_on_triangle(p, &a, &b, &c);
                let d = (q - p).norm_squared();
                if d < best.0 {
                    best = (d, q);
                }
            }
        }
        best.1
    }
}

impl Projection for ExplicitProjection {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let Some(cache) = &self.cache else {
            return Ok(self.closest(p));
        };
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        if let Some(q) = cache.lock().expect("cache lock").get(&key) {
            return Ok(*q);
        }
        let q = self.closest(p);
        cache.lock().expect("cache lock").insert(key, q);
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh;
    use crate::projections::SphereProjection;
    use rand::{Rng, SeedableRng};

    #[test]
    fn vertex_and_face_cases() {
        let square = SurfaceMesh::build(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let proj = ExplicitProjection::new(Arc::new(square));
        let v = Vector3::new(1.0, 1.0, 0.0);
        assert_eq!(proj.project(&v).unwrap(), v);
        let q = proj.project(&Vector3::new(0.3, 0.6, 0.7)).unwrap();
        assert!((q - Vector3::new(0.3, 0.6, 0.0)).norm() < 1e-15);
    }

    fn brute_force(m: &SurfaceMesh, p: &Vector3<f64>) -> Vector3<f64> {
        m.triangles()
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| m.vertices()[i]);
                // independent oracle: dense barycentric sampling refined by the planar foot
                let n = (b - a).cross(&(c - a)).normalize();
                let foot = p - n * n.dot(&(p - a));
                let inside = {
                    let area = |x: &Vector3<f64>, y: &Vector3<f64>, z: &Vector3<f64>| (y - x).cross(&(z - x)).dot(&n);
                    area(&a, &b, &foot) >= 0.0 && area(&b, &c, &foot) >= 0.0 && area(&c, &a, &foot) >= 0.0
                };
                if inside {
                    return foot;
                }
                let seg = |x: &Vector3<f64>, y: &Vector3<f64>| {
                    let t = ((p - x).dot(&(y - x)) / (y - x).norm_squared()).clamp(0.0, 1.0);
                    x + (y - x) * t
                };
                [seg(&a, &b), seg(&b, &c), seg(&c, &a)]
                    .into_iter()
                    .min_by(|u, v| (u - p).norm().total_cmp(&(v - p).norm()))
                    .unwrap()
            })
            .min_by(|u, v| (u - p).norm().total_cmp(&(v - p).norm()))
            .unwrap()
    }

    #[test]
    fn matches_brute_force_on_icosphere() {
        let sphere = SphereProjection::new(1.0);
        let m = Arc::new(mesh::icosahedron(1.0).refined(3, Some(&sphere)).unwrap());
        let proj = ExplicitProjection::new(m.clone());
        let cached = ExplicitProjection::new(m.clone()).cached().with_k_nearest(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let dir = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = dir.normalize() * rng.gen_range(0.9..1.1);
            let expect = brute_force(&m, &p);
            let got = proj.project(&p).unwrap();
            assert!((got - expect).norm() < 1e-12, "{got} vs {expect}");
            assert_eq!(cached.project(&p).unwrap(), cached.project(&p).unwrap());
            assert!((cached.project(&p).unwrap() - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn output_lies_on_a_triangle() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(2.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 1.0, 0.5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for _ in 0..500 {
            let p = Vector3::new(rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0));
            let q = closest_point_on_triangle(&p, &a, &b, &c);
            // barycentric coordinates of q
            let (e1, e2, r) = (b - a, c - a, q - a);
            let g = nalgebra::Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
            let l = g.try_inverse().unwrap() * nalgebra::Vector2::new(e1.dot(&r), e2.dot(&r));
            let tol = 1e-12;
            assert!(l.x >= -tol && l.y >= -tol && l.x + l.y <= 1.0 + tol);
            assert!((a + e1 * l.x + e2 * l.y - q).norm() < 1e-12);
            for _ in 0..20 {
                let (s, t): (f64, f64) = (rng.gen(), rng.gen());
                let (s, t) = if s + t > 1.0 { (1.0 - s, 1.0 - t) } else { (s, t) };
                let other = a + e1 * s + e2 * t;
                assert!((p - q).norm() <= (p - other).norm() + 1e-12);
            }
        }
    }
}
