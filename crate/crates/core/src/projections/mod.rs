//! Closest-point maps onto smooth surfaces.
//!
//! [`Projection`] is the common interface: a map from a neighborhood of the
//! surface onto the surface, optionally with its 3x3 Jacobian.
//! [`AnalyticSurface`] adds the exact unit normal and mean curvature at
//! surface points, used as error oracles.

mod explicit;
mod implicit;
mod kdtree;

pub use explicit::{closest_point_on_triangle, ExplicitProjection};
pub use implicit::{
    genus2_reference_mesh, EllipsoidLevelSet, EllipsoidProjection, Genus2LevelSet, ImplicitProjection, ImplicitResult,
    ImplicitScheme, LevelSet, SphereLevelSet,
};
pub use kdtree::KdTree;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

pub trait Projection: Send + Sync {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>>;

    /// Jacobian of the projection at `p`, if the map offers one.
    fn jacobian(&self, _p: &Vector3<f64>) -> Option<Result<Matrix3<f64>>> {
        None
    }

    /// Whether [`Projection::jacobian`] returns `Some`.
    fn has_jacobian(&self) -> bool {
        false
    }
}

/// A surface with a closest-point projection and closed-form differential
/// geometry. Normals point outward; the mean curvature is the sum of the
/// principal curvatures with the sign convention `H = 2` on the unit sphere.
pub trait AnalyticSurface: Projection {
    fn normal(&self, on_surface: &Vector3<f64>) -> Vector3<f64>;
    fn mean_curvature(&self, on_surface: &Vector3<f64>) -> f64;
}

impl<P: Projection + ?Sized> Projection for &P {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        (**self).project(p)
    }

    fn jacobian(&self, p: &Vector3<f64>) -> Option<Result<Matrix3<f64>>> {
        (**self).jacobian(p)
    }

    fn has_jacobian(&self) -> bool {
        (**self).has_jacobian()
    }
}

impl<P: Projection + ?Sized> Projection for std::sync::Arc<P> {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        (**self).project(p)
    }

    fn jacobian(&self, p: &Vector3<f64>) -> Option<Result<Matrix3<f64>>> {
        (**self).jacobian(p)
    }

    fn has_jacobian(&self) -> bool {
        (**self).has_jacobian()
    }
}

/// Sphere of radius `r` centered at the origin: `p -> r p / |p|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereProjection {
    pub radius: f64,
}

impl SphereProjection {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { radius }
    }
}

impl Projection for SphereProjection {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let n = p.norm();
        if n == 0.0 {
            return Err(Error::UndefinedProjection((*p).into()));
        }
        Ok(p * (self.radius / n))
    }

    fn jacobian(&self, p: &Vector3<f64>) -> Option<Result<Matrix3<f64>>> {
        let n = p.norm();
        if n == 0.0 {
            return Some(Err(Error::UndefinedProjection((*p).into())));
        }
        let u = p / n;
        Some(Ok((Matrix3::identity() - u * u.transpose()) * (self.radius / n)))
    }

    fn has_jacobian(&self) -> bool {
        true
    }
}

impl AnalyticSurface for SphereProjection {
    fn normal(&self, on_surface: &Vector3<f64>) -> Vector3<f64> {
        on_surface.normalize()
    }

    fn mean_curvature(&self, _on_surface: &Vector3<f64>) -> f64 {
        2.0 / self.radius
    }
}

/// Torus around the z-axis with center-circle radius `big_r` and tube radius
/// `small_r`. Points are first projected onto the center circle, then moved
/// `small_r` toward `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusProjection {
    pub big_r: f64,
    pub small_r: f64,
}

impl TorusProjection {
    pub fn new(big_r: f64, small_r: f64) -> Self {
        assert!(0.0 < small_r && small_r < big_r);
        Self { big_r, small_r }
    }

    fn center_point(&self, p: &Vector3<f64>) -> Result<(Vector3<f64>, f64)> {
        let rho = p.x.hypot(p.y);
        if rho <= f64::EPSILON * (1.0 + p.norm()) {
            return Err(Error::UndefinedProjection((*p).into()));
        }
        let c = Vector3::new(p.x, p.y, 0.0) * (self.big_r / rho);
        Ok((c, rho))
    }
}

impl Projection for TorusProjection {
    fn project(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        let (c, _) = self.center_point(p)?;
        let d = p - c;
        let dn = d.norm();
        if dn == 0.0 {
            return Err(Error::UndefinedProjection((*p).into()));
        }
        Ok(c + d * (self.small_r / dn))
    }

    fn jacobian(&self, p: &Vector3<f64>) -> Option<Result<Matrix3<f64>>> {
        Some((|| {
            let (c, rho) = self.center_point(p)?;
            let d = p - c;
            let dn = d.norm();
            if dn == 0.0 {
                return Err(Error::UndefinedProjection((*p).into()));
            }
            let q = Vector3::new(p.x, p.y, 0.0) / rho;
            let planar = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
            let dc = (planar - q * q.transpose()) * (self.big_r / rho);
            let u = d / dn;
            let tangential = (Matrix3::identity() - u * u.transpose()) / dn;
            Ok(dc + tangential * (Matrix3::identity() - dc) * self.small_r)
        })())
    }

    fn has_jacobian(&self) -> bool {
        true
    }
}

impl AnalyticSurface for TorusProjection {
    fn normal(&self, on_surface: &Vector3<f64>) -> Vector3<f64> {
        let rho = on_surface.x.hypot(on_surface.y);
        let c = Vector3::new(on_surface.x, on_surface.y, 0.0) * (self.big_r / rho);
        (on_surface - c).normalize()
    }

    fn mean_curvature(&self, on_surface: &Vector3<f64>) -> f64 {
        let rho = on_surface.x.hypot(on_surface.y);
        let cos_v = (rho - self.big_r) / self.small_r;
        1.0 / self.small_r + cos_v / (self.big_r + self.small_r * cos_v)
    }
}
