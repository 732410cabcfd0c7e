//! Projection onto the zero level set `{psi = 0}` by fixed-point iteration
//! along the level-set gradient.

use nalgebra::{Matrix3, Vector3};

use super::{AnalyticSurface, Projection};
use crate::mesh::{self, SurfaceMesh};
use crate::{Error, Result};

/// A level-set function with gradient and, optionally, Hessian.
pub trait LevelSet: Send + Sync {
    fn value(&self, x: &Vector3<f64>) -> f64;
    fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64>;
    fn hessian(&self, _x: &Vector3<f64>) -> Option<Matrix3<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicitScheme {
    /// `x <- x - grad psi(x) psi(x) / |grad psi(x)|^2`; lands on the surface
    /// near, but not exactly at, the closest point.
    Simple,
    /// Simple step as predictor, then re-shoot from the start point along the
    /// predictor's normal by the predicted distance; drives the iterate toward
    /// the closest point.
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitResult {
    pub point: Vector3<f64>,
    pub iterations: usize,
    /// `|psi| / |grad psi|` at `point`.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ImplicitProjection<L> {
    level_set: L,
    scheme: ImplicitScheme,
    max_iter: usize,
    tolerance: Option<f64>,
}

impl<L: LevelSet> ImplicitProjection<L> {
    pub fn new(level_set: L, scheme: ImplicitScheme) -> Self {
        Self { level_set, scheme, max_iter: 10, tolerance: None }
    }

    pub fn simple(level_set: L) -> Self {
        Self::new(level_set, ImplicitScheme::Simple)
    }

    pub fn improved(level_set: L) -> Self {
        Self::new(level_set, ImplicitScheme::Improved)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Absolute residual tolerance; the default is `1e-12 (1 + |p|)`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn level_set(&self) -> &L {
        &self.level_set
    }

    pub fn scheme(&self) -> ImplicitScheme {
        self.scheme
    }

    fn residual(&self, x: &Vector3<f64>) -> Result<(f64, f64, Vector3<f64>)> {
        let psi = self.level_set.value(x);
        let grad = self.level_set.gradient(x);
        let gn = grad.norm();
        if gn == 0.0 || !gn.is_finite() {
            return Err(Error::VanishingGradient((*x).into()));
        }
        Ok((psi, psi.abs() / gn, grad))
    }

    /// Run the iteration from `p`. Non-convergence is reported through
    /// [`ImplicitResult::converged`], not as an error.
    pub fn iterate(&self, p: &Vector3<f64>) -> Result<ImplicitResult> {
        let tol = self.tolerance.unwrap_or(1e-12 * (1.0 + p.norm()));
        let sign0 = self.level_set.value(p).signum();
        let mut x = *p;
        for it in 0..=self.max_iter {
            let (psi, residual, grad) = self.residual(&x)?;
            if residual <= tol || it == self.max_iter {
                return Ok(ImplicitResult { point: x, iterations: it, residual, converged: residual <= tol });
            }
            let predictor = x - grad * (psi / grad.norm_squared());
            x = match self.scheme {
                ImplicitScheme::Simple => predictor,
                ImplicitScheme::Improved => {
                    let dist = sign0 * (predictor - p).norm();
                    let g = self.level_set.gradient(&predictor);
                    let gn = g.norm();
                    if gn == 0.0 {
                        return Err(Error::VanishingGradient(predictor.into()));
                    }
                    p - g * (dist / gn)
                }
            };
        }
        unreachable!("loop returns at it == max_iter")
    }
}

impl<L: LevelSet> Projection for ImplicitProjection<L> {
    /// Fails with [`Error::NoConvergence`] when the residual tolerance is not
    /// met within the iteration limit; use [`ImplicitProjection::iterate`] for
    /// the flagged iterate.
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let r = self.iterate(p)?;
        if !r.converged {
            return Err(Error::NoConvergence { iterations: r.iterations, residual: r.residual });
        }
        Ok(r.point)
    }
}

/// Normal `grad psi / |grad psi|` and mean curvature `div` of it, evaluated
/// from the level-set Hessian.
fn implicit_normal_and_curvature<L: LevelSet>(ls: &L, x: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let g = ls.gradient(x);
    let gn = g.norm();
    let n = g / gn;
    let h = ls.hessian(x).expect("level set without Hessian");
    (n, (h.trace() - n.dot(&(h * n))) / gn)
}

impl<L: LevelSet> AnalyticSurface for ImplicitProjection<L> {
    fn normal(&self, on_surface: &Vector3<f64>) -> Vector3<f64> {
        implicit_normal_and_curvature(&self.level_set, on_surface).0
    }

    /// Requires a level set with Hessian.
    fn mean_curvature(&self, on_surface: &Vector3<f64>) -> f64 {
        implicit_normal_and_curvature(&self.level_set, on_surface).1
    }
}

/// `|x|^2 - r^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereLevelSet {
    pub radius: f64,
}

impl LevelSet for SphereLevelSet {
    fn value(&self, x: &Vector3<f64>) -> f64 {
        x.norm_squared() - self.radius * self.radius
    }

    fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        x * 2.0
    }

    fn hessian(&self, _x: &Vector3<f64>) -> Option<Matrix3<f64>> {
        Some(Matrix3::identity() * 2.0)
    }
}

/// `x^2/a^2 + y^2/b^2 + z^2/c^2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidLevelSet {
    pub axes: [f64; 3],
}

impl LevelSet for EllipsoidLevelSet {
    fn value(&self, x: &Vector3<f64>) -> f64 {
        (0..3).map(|i| (x[i] / self.axes[i]).powi(2)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| 2.0 * x[i] / (self.axes[i] * self.axes[i]))
    }

    fn hessian(&self, _x: &Vector3<f64>) -> Option<Matrix3<f64>> {
        Some(Matrix3::from_diagonal(&Vector3::from_fn(|i, _| 2.0 / (self.axes[i] * self.axes[i]))))
    }
}

/// Closest-point projection onto an axis-aligned ellipsoid. Normals and
/// curvature come from the level set; the improved implicit scheme on the same
/// level set is available through [`EllipsoidProjection::implicit`].
#[derive(Debug, Clone)]
pub struct EllipsoidProjection {
    inner: ImplicitProjection<EllipsoidLevelSet>,
}

impl EllipsoidProjection {
    /// Iteration limit of the ellipsoid projection. The improved scheme
    /// contracts linearly with a rate proportional to distance times
    /// curvature, so points off coarse meshes need more than the generic
    /// default of 10 steps to reach the residual tolerance.
    pub const MAX_ITER: usize = 100;

    pub fn new(axes: [f64; 3]) -> Self {
        assert!(axes.iter().all(|&a| a > 0.0));
        Self { inner: ImplicitProjection::improved(EllipsoidLevelSet { axes }).with_max_iter(Self::MAX_ITER) }
    }

    pub fn axes(&self) -> [f64; 3] {
        self.inner.level_set.axes
    }

    pub fn implicit(&self) -> &ImplicitProjection<EllipsoidLevelSet> {
        &self.inner
    }
}

impl Projection for EllipsoidProjection {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        if *p == Vector3::zeros() {
            return Err(Error::UndefinedProjection((*p).into()));
        }
        Ok(ellipsoid_closest_point(self.axes(), p))
    }
}

/// Closest point on the ellipsoid from the stationarity condition
/// `x_i = a_i^2 p_i / (a_i^2 + t)`, solving the constraint for the multiplier
/// `t > -min a_i^2` by bisection. Unlike the improved scheme, whose iterates
/// meet the level set long before they align with the normal, this is exact to
/// rounding.
fn ellipsoid_closest_point(axes: [f64; 3], p: &Vector3<f64>) -> Vector3<f64> {
    let sq = axes.map(|a| a * a);
    let m = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let point = |t: f64| Vector3::from_fn(|i, _| if p[i] == 0.0 { 0.0 } else { sq[i] * p[i] / (sq[i] + t) });
    let constraint = |x: &Vector3<f64>| (0..3).map(|i| x[i] * x[i] / sq[i]).sum::<f64>() - 1.0;

    let (mut lo, mut hi) = (-m, axes.iter().copied().fold(0.0, f64::max) * p.norm());
    // degenerate case: no root above -m, the minimum sits on the focal disk
    let at_lo = Vector3::from_fn(|i, _| if sq[i] == m { 0.0 } else { sq[i] * p[i] / (sq[i] - m) });
    if p.iter().zip(&sq).all(|(pi, &s)| s != m || *pi == 0.0) && constraint(&at_lo) <= 0.0 {
        let mut x = at_lo;
        let j = (0..3).find(|&i| sq[i] == m).expect("minimum axis");
        x[j] = (-constraint(&at_lo) * sq[j]).sqrt();
        return x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if constraint(&point(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    point(0.5 * (lo + hi))
}

impl AnalyticSurface for EllipsoidProjection {
    fn normal(&self, on_surface: &Vector3<f64>) -> Vector3<f64> {
        self.inner.normal(on_surface)
    }

    fn mean_curvature(&self, on_surface: &Vector3<f64>) -> f64 {
        self.inner.mean_curvature(on_surface)
    }
}

/// Genus-two surface
/// `psi = 2y(y^2 - 3x^2)(1 - z^2) + (x^2 + y^2)^2 - (9z^2 - 1)(1 - z^2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Genus2LevelSet;

impl LevelSet for Genus2LevelSet {
    fn value(&self, p: &Vector3<f64>) -> f64 {
        let (x, y, z) = (p.x, p.y, p.z);
        let r2 = x * x + y * y;
        let w = 1.0 - z * z;
        2.0 * y * (y * y - 3.0 * x * x) * w + r2 * r2 - (9.0 * z * z - 1.0) * w
    }

    fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        let r2 = x * x + y * y;
        let w = 1.0 - z * z;
        Vector3::new(
            -12.0 * x * y * w + 4.0 * x * r2,
            (6.0 * y * y - 6.0 * x * x) * w + 4.0 * y * r2,
            -4.0 * y * (y * y - 3.0 * x * x) * z - 18.0 * z * w + 2.0 * z * (9.0 * z * z - 1.0),
        )
    }

    fn hessian(&self, p: &Vector3<f64>) -> Option<Matrix3<f64>> {
        let (x, y, z) = (p.x, p.y, p.z);
        let r2 = x * x + y * y;
        let w = 1.0 - z * z;
        let c = y * (y * y - 3.0 * x * x);
        let hxx = -12.0 * y * w + 4.0 * r2 + 8.0 * x * x;
        let hyy = 12.0 * y * w + 4.0 * r2 + 8.0 * y * y;
        let hxy = -12.0 * x * w + 8.0 * x * y;
        let hxz = 24.0 * x * y * z;
        let hyz = -2.0 * z * (6.0 * y * y - 6.0 * x * x);
        let hzz = -4.0 * c - 18.0 * w + 36.0 * z * z + 2.0 * (9.0 * z * z - 1.0) + 36.0 * z * z;
        Some(Matrix3::new(hxx, hxy, hxz, hxy, hyy, hyz, hxz, hyz, hzz))
    }
}

/// Marching-tetrahedra triangulation of the genus-two surface on a grid of
/// spacing about `cell`. The grid is shifted off the symmetry planes so no
/// grid point lies on the surface.
pub fn genus2_reference_mesh(cell: f64) -> Result<SurfaceMesh> {
    let lo = [-2.05 + 0.0137, -2.2 + 0.0071, -1.2 + 0.0113];
    let hi = [2.05 + 0.0137, 1.45 + 0.0071, 1.2 + 0.0113];
    let cells = [0, 1, 2].map(|i| ((hi[i] - lo[i]) / cell).ceil() as usize);
    mesh::implicit_surface(|p| Genus2LevelSet.value(p), lo, hi, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn simple_scheme_hand_iteration() {
        let proj = ImplicitProjection::simple(SphereLevelSet { radius: 1.0 }).with_max_iter(1);
        let r = proj.iterate(&Vector3::new(2.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.point - Vector3::new(1.25, 0.0, 0.0)).norm() < 1e-15);
        let r = proj.with_max_iter(2).iterate(&Vector3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((r.point - Vector3::new(1.025, 0.0, 0.0)).norm() < 1e-15);
        assert!(!r.converged);
    }

    #[test]
    fn on_surface_point_is_fixed() {
        let p = Vector3::new(0.0, 0.6, 0.8);
        for proj in [
            ImplicitProjection::simple(SphereLevelSet { radius: 1.0 }),
            ImplicitProjection::improved(SphereLevelSet { radius: 1.0 }),
        ] {
            let r = proj.iterate(&p).unwrap();
            assert_eq!(r.iterations, 0);
            assert_eq!(r.point, p);
        }
    }

    #[test]
    fn improved_scheme_reaches_closest_point() {
        let proj = ImplicitProjection::improved(SphereLevelSet { radius: 1.0 }).with_max_iter(50);
        let r = proj.iterate(&Vector3::new(2.0, 0.0, 0.0)).unwrap();
        assert!(r.converged);
        assert!((r.point - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    fn alignment(ls: &impl LevelSet, p: &Vector3<f64>, x: &Vector3<f64>) -> f64 {
        let d = p - x;
        if d.norm() == 0.0 {
            return 0.0;
        }
        let n = ls.gradient(x).normalize();
        (d - n * n.dot(&d)).norm() / d.norm()
    }

    #[test]
    fn improved_scheme_has_closest_point_alignment() {
        let ls = EllipsoidLevelSet { axes: [1.0, 1.25, 0.75] };
        // A residual of tol pins the direction only to about sqrt(tol), so run
        // to a tighter residual than the default.
        let improved = ImplicitProjection::improved(ls).with_max_iter(100).with_tolerance(1e-14);
        let simple = ImplicitProjection::simple(ls);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut simple_misaligned = 0;
        for _ in 0..100 {
            let dir = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let on = EllipsoidProjection::new(ls.axes).project(&dir).unwrap();
            let p = on + ls.gradient(&on).normalize() * rng.gen_range(-0.2..0.2) + dir * 0.05;
            let r = improved.iterate(&p).unwrap();
            assert!(r.converged);
            assert!(alignment(&ls, &p, &r.point) < 1e-6);
            let s = simple.iterate(&p).unwrap();
            assert!(s.residual < 1e-10);
            if alignment(&ls, &p, &s.point) > 1e-6 {
                simple_misaligned += 1;
            }
            assert!((improved.project(&r.point).unwrap() - r.point).norm() < 1e-10);
        }
        assert!(simple_misaligned > 0);
    }

    #[test]
    fn ellipsoid_projection() {
        let e = EllipsoidProjection::new([1.5, 1.5, 1.5]);
        let s = super::super::SphereProjection::new(1.5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..20 {
            let p = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert!((e.project(&p).unwrap() - s.project(&p).unwrap()).norm() < 1e-10);
        }
        let e = EllipsoidProjection::new([1.0, 1.25, 0.75]);
        assert!((e.project(&Vector3::new(2.0, 0.0, 0.0)).unwrap() - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        let on = Vector3::new(0.0, 0.0, 0.75);
        assert!((e.project(&on).unwrap() - on).norm() < 1e-12);
        assert!(e.project(&Vector3::zeros()).is_err());
        // idempotence and residual
        for _ in 0..100 {
            let p = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let q = e.project(&p).unwrap();
            assert!(EllipsoidLevelSet { axes: e.axes() }.value(&q).abs() < 1e-10);
            assert!((e.project(&q).unwrap() - q).norm() < 1e-10);
        }
    }

    #[test]
    fn multiplier_fallback_matches_sampling() {
        use std::f64::consts::{PI, TAU};
        let axes = [1.0, 1.25, 0.75];
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let samples: Vec<Vector3<f64>> = (0..200)
            .flat_map(|i| {
                (0..400).map(move |j| {
                    let (th, ph) = (PI * (i as f64 + 0.5) / 200.0, TAU * j as f64 / 400.0);
                    Vector3::new(th.sin() * ph.cos(), 1.25 * th.sin() * ph.sin(), 0.75 * th.cos())
                })
            })
            .collect();
        let mut points: Vec<Vector3<f64>> = vec![Vector3::new(0.2, 0.3, 0.0), Vector3::new(0.1, 0.0, 0.0)];
        points.extend(
            (0..20).map(|_| Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))),
        );
        for p in points {
            let q = ellipsoid_closest_point(axes, &p);
            assert!(EllipsoidLevelSet { axes }.value(&q).abs() < 1e-12);
            let best = samples.iter().map(|s| (s - p).norm()).fold(f64::INFINITY, f64::min);
            assert!((q - p).norm() <= best + 1e-12);
            assert!(best - (q - p).norm() < 1e-2);
        }
    }

    #[test]
    fn implicit_curvature_oracle() {
        let sphere = ImplicitProjection::improved(SphereLevelSet { radius: 2.0 });
        let q = Vector3::new(0.0, 2.0, 0.0);
        assert!((sphere.mean_curvature(&q) - 1.0).abs() < 1e-15);
        assert!((sphere.normal(&q) - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn genus2_derivatives_match_finite_differences() {
        let ls = Genus2LevelSet;
        let h = 1e-6;
        for p in [Vector3::new(0.3, -0.7, 0.2), Vector3::new(1.1, 0.4, -0.5)] {
            let g = ls.gradient(&p);
            let hs = ls.hessian(&p).unwrap();
            for c in 0..3 {
                let mut e = Vector3::zeros();
                e[c] = h;
                let fd = (ls.value(&(p + e)) - ls.value(&(p - e))) / (2.0 * h);
                assert!((fd - g[c]).abs() < 1e-7);
                let fdg = (ls.gradient(&(p + e)) - ls.gradient(&(p - e))) / (2.0 * h);
                assert!((fdg - hs.column(c)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let proj = ImplicitProjection::simple(SphereLevelSet { radius: 1.0 });
        assert!(matches!(proj.iterate(&Vector3::zeros()), Err(Error::VanishingGradient(_))));
    }
}
