//! Gauss rules on the reference segment `[0, 1]` and the reference triangle.
//!
//! Triangle rules are collapsed tensor products: Gauss–Jacobi (weight `1-u`)
//! in the collapsed direction times Gauss–Legendre, mapped through
//! `(u, v) -> (u, v (1 - u))`. All weights are positive and all points are
//! interior.

use nalgebra::{DMatrix, Vector2};

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePoint {
    pub position: Vector2<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    degree: usize,
    points: Vec<QuadraturePoint>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn points(&self) -> &[QuadraturePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QuadraturePoint> {
        self.points.iter()
    }
}

impl<'a> IntoIterator for &'a QuadratureRule {
    type Item = &'a QuadraturePoint;
    type IntoIter = std::slice::Iter<'a, QuadraturePoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Golub–Welsch nodes and weights for the Jacobi weight
/// `(1-t)^alpha (1+t)^beta` on `[-1, 1]`.
fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Vec<(f64, f64)> {
    let ab = alpha + beta;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let s = 2.0 * k + ab;
        t[(i, i)] = if i == 0 { (beta - alpha) / (ab + 2.0) } else { (beta * beta - alpha * alpha) / (s * (s + 2.0)) };
        if i + 1 < n {
            let k1 = k + 1.0;
            let s1 = 2.0 * k1 + ab;
            let off = (4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + ab) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))).sqrt();
            t[(i, i + 1)] = off;
            t[(i + 1, i)] = off;
        }
    }
    // integral of the weight: 2^(a+b+1) G(a+1) G(b+1) / G(a+b+2), integer a, b here
    let mu0 = 2f64.powf(ab + 1.0) * factorial(alpha as usize) * factorial(beta as usize)
        / factorial(alpha as usize + beta as usize + 1);
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn segment_rule(degree: usize) -> Vec<(f64, f64)> {
    let n = degree / 2 + 1;
    gauss_jacobi(n, 0.0, 0.0).into_iter().map(|(t, w)| ((t + 1.0) / 2.0, w / 2.0)).collect()
}

/// Quadrature rule on the `dim`-dimensional reference element, exact for
/// polynomials of total degree `degree`.
pub fn rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree { requested: degree, max: MAX_DEGREE });
    }
    let points = match dim {
        1 => segment_rule(degree)
            .into_iter()
            .map(|(x, w)| QuadraturePoint { position: Vector2::new(x, 0.0), weight: w })
            .collect(),
        2 => {
            let n = degree / 2 + 1;
            // int_0^1 g(u) (1-u) du = 1/4 sum w g((t+1)/2) for the (1, 0) weight
            let collapsed: Vec<(f64, f64)> =
                gauss_jacobi(n, 1.0, 0.0).into_iter().map(|(t, w)| ((t + 1.0) / 2.0, w / 4.0)).collect();
            let line = segment_rule(degree);
            let mut pts = Vec::with_capacity(n * n);
            for &(u, wu) in &collapsed {
                for &(v, wv) in &line {
                    pts.push(QuadraturePoint { position: Vector2::new(u, v * (1.0 - u)), weight: wu * wv });
                }
            }
            pts
        }
        d => return Err(Error::UnsupportedDimension(d)),
    };
    Ok(QuadratureRule { dim, degree, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// int over the unit triangle of x^p y^q = p! q! / (p+q+2)!
    fn triangle_monomial(p: usize, q: usize) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    #[test]
    fn centroid_rule() {
        let r = rule(2, 1).unwrap();
        assert_eq!(r.len(), 1);
        let p = &r.points()[0];
        assert!((p.position - Vector2::new(1.0 / 3.0, 1.0 / 3.0)).norm() < 1e-15);
        assert!((p.weight - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spot_checks() {
        let r = rule(2, 4).unwrap();
        let v: f64 = r.iter().map(|q| q.weight * q.position.x.powi(2) * q.position.y.powi(2)).sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-16);
        let s = rule(1, 3).unwrap();
        assert_eq!(s.len(), 2);
        let v: f64 = s.iter().map(|q| q.weight * q.position.x.powi(3)).sum();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exactness_sweep() {
        for degree in 0..=MAX_DEGREE {
            let tri = rule(2, degree).unwrap();
            let total: f64 = tri.iter().map(|q| q.weight).sum();
            assert!((total - 0.5).abs() < 1e-14);
            for q in tri.iter() {
                let (x, y) = (q.position.x, q.position.y);
                assert!(q.weight > 0.0 && x >= 0.0 && y >= 0.0 && x + y <= 1.0);
            }
            for p in 0..=degree {
                for q in 0..=(degree - p) {
                    let exact = triangle_monomial(p, q);
                    let v: f64 = tri
                        .iter()
                        .map(|pt| pt.weight * pt.position.x.powi(p as i32) * pt.position.y.powi(q as i32))
                        .sum();
                    assert!(((v - exact) / exact).abs() < 1e-13, "deg {degree} x^{p} y^{q}: {v} vs {exact}");
                }
            }
            let seg = rule(1, degree).unwrap();
            let total: f64 = seg.iter().map(|q| q.weight).sum();
            assert!((total - 1.0).abs() < 1e-14);
            for p in 0..=degree {
                let v: f64 = seg.iter().map(|q| q.weight * q.position.x.powi(p as i32)).sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!(((v - exact) / exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn degree_limit() {
        match rule(2, 21) {
            Err(Error::QuadratureDegree { max, .. }) => assert_eq!(max, MAX_DEGREE),
            other => panic!("unexpected {other:?}"),
        }
        assert!(rule(3, 2).is_err());
    }
}
