//! Curved element geometries and the derived differential quantities.
//!
//! Two flavors map the reference triangle onto the curved surface:
//! [`ParametrizedGeometry`] interpolates the parametrization into a Lagrange
//! basis, [`LocalFunctionGeometry`] evaluates a differentiable local function
//! directly. [`CurvedSurface`] chooses between them by order.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Vector2, Vector3};

use crate::gridfunctions::{GridFunction, LagrangeExpansion, LocalFunction, ReferenceHessians};
use crate::lagrange::LagrangeBasis;
use crate::mesh::{FlatElementGeometry, SurfaceMesh};
use crate::quadrature;
use crate::reference::LocalGeometry;
use crate::{Error, Result};

/// Relative threshold on `det(J J^T) / tr(J J^T)^2` below which the Jacobian
/// counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-14;

/// Order of the Lagrange interpolant used for curvature when a local function
/// offers no second derivatives.
pub const CURVATURE_FALLBACK_ORDER: usize = 4;

/// A map from the reference triangle into R^3.
pub trait SurfaceGeometry {
    fn global(&self, local: &Vector2<f64>) -> Result<Vector3<f64>>;

    /// Rows are the tangent vectors `dX/dx_1`, `dX/dx_2`.
    fn jacobian_transposed(&self, local: &Vector2<f64>) -> Result<Matrix2x3<f64>>;

    /// `[d11 X, d12 X, d22 X]`, where the geometry has second derivatives.
    fn second_derivatives(&self, _local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        None
    }

    /// First fundamental form `I = J^T J` with `J` the 3x2 Jacobian.
    fn first_fundamental_form(&self, local: &Vector2<f64>) -> Result<Matrix2<f64>> {
        let jt = self.jacobian_transposed(local)?;
        Ok(jt * jt.transpose())
    }

    /// `J I^-1`; its transpose is a left inverse of the Jacobian.
    fn jacobian_inverse_transposed(&self, local: &Vector2<f64>) -> Result<Matrix3x2<f64>> {
        let jt = self.jacobian_transposed(local)?;
        Ok(jt.transpose() * gram_inverse(&jt)?)
    }

    fn integration_element(&self, local: &Vector2<f64>) -> Result<f64> {
        let jt = self.jacobian_transposed(local)?;
        gram_inverse(&jt)?;
        Ok((jt * jt.transpose()).determinant().sqrt())
    }

    /// Unit normal `(d1 X x d2 X) / |d1 X x d2 X|`.
    fn normal(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        let jt = self.jacobian_transposed(local)?;
        gram_inverse(&jt)?;
        let (t1, t2): (Vector3<f64>, Vector3<f64>) = (jt.row(0).transpose(), jt.row(1).transpose());
        Ok(t1.cross(&t2).normalize())
    }

    /// `II_ab = -(d_a d_b X) . n`.
    fn second_fundamental_form(&self, local: &Vector2<f64>) -> Result<Matrix2<f64>> {
        let d2 = self.second_derivatives(local).ok_or(Error::NotDifferentiable)??;
        let n = self.normal(local)?;
        let (a, b, c) = (-d2[0].dot(&n), -d2[1].dot(&n), -d2[2].dot(&n));
        Ok(Matrix2::new(a, b, b, c))
    }

    /// `H = tr(I^-1 II)`; `+2` on the outward-oriented unit sphere.
    fn mean_curvature(&self, local: &Vector2<f64>) -> Result<f64> {
        let jt = self.jacobian_transposed(local)?;
        let inv = gram_inverse(&jt)?;
        Ok((inv * self.second_fundamental_form(local)?).trace())
    }

    /// Surface gradient of the normal field, `J I^-1 II I^-1 J^T`.
    fn normal_gradient(&self, local: &Vector2<f64>) -> Result<Matrix3<f64>> {
        let jit = self.jacobian_inverse_transposed(local)?;
        Ok(jit * self.second_fundamental_form(local)? * jit.transpose())
    }

    /// Area by quadrature of the given degree.
    fn volume(&self, quad_degree: usize) -> Result<f64> {
        quadrature::rule(2, quad_degree)?.iter().map(|q| Ok(q.weight * self.integration_element(&q.position)?)).sum()
    }

    /// Reference coordinates of the point closest to `target` by Gauss-Newton
    /// from the barycenter; stops when the tangential residual `|J^T r|` drops
    /// below `1e-12` times the element diameter.
    fn local(&self, target: &Vector3<f64>) -> Result<Vector2<f64>> {
        let mut x = Vector2::new(1.0 / 3.0, 1.0 / 3.0);
        let corners = [Vector2::zeros(), Vector2::x(), Vector2::y()]
            .iter()
            .map(|c| self.global(c))
            .collect::<Result<Vec<_>>>()?;
        let diameter = (0..3).map(|i| (corners[i] - corners[(i + 1) % 3]).norm()).fold(0.0, f64::max);
        let tol = 1e-12 * diameter.max(f64::MIN_POSITIVE);
        let mut residual = f64::INFINITY;
        for _ in 0..100 {
            let r = self.global(&x)? - target;
            let jt = self.jacobian_transposed(&x)?;
            let g = jt * r;
            residual = g.norm();
            if residual <= tol {
                return Ok(x);
            }
            x -= gram_inverse(&jt)? * g;
        }
        Err(Error::NoConvergence { iterations: 100, residual })
    }
}

/// `(J^T J)^-1` from the transposed Jacobian, with the rank check.
fn gram_inverse(jt: &Matrix2x3<f64>) -> Result<Matrix2<f64>> {
    let gram = jt * jt.transpose();
    let trace = gram.trace();
    let ratio = gram.determinant() / (trace * trace);
    if !(ratio > RANK_TOLERANCE) {
        return Err(Error::DegenerateGeometry(ratio));
    }
    gram.try_inverse().ok_or(Error::DegenerateGeometry(ratio))
}

impl SurfaceGeometry for FlatElementGeometry {
    fn global(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        Ok(FlatElementGeometry::global(self, local))
    }

    fn jacobian_transposed(&self, _local: &Vector2<f64>) -> Result<Matrix2x3<f64>> {
        Ok(FlatElementGeometry::jacobian_transposed(self))
    }

    fn second_derivatives(&self, _local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        Some(Ok([Vector3::zeros(); 3]))
    }
}

/// `X_e^k = sum_j xi^j phi_j` for an order-`k` Lagrange basis.
#[derive(Debug, Clone)]
pub struct ParametrizedGeometry {
    basis: Arc<LagrangeBasis>,
    coefficients: Vec<Vector3<f64>>,
    element: usize,
}

impl ParametrizedGeometry {
    pub fn new(basis: Arc<LagrangeBasis>, coefficients: Vec<Vector3<f64>>, element: usize) -> Result<Self> {
        if coefficients.len() != basis.size() {
            return Err(Error::LengthMismatch { expected: basis.size(), got: coefficients.len() });
        }
        Ok(Self { basis, coefficients, element })
    }

    /// Interpolate `f` at the basis nodes.
    pub fn interpolate<F>(basis: Arc<LagrangeBasis>, element: usize, f: F) -> Result<Self>
    where
        F: FnMut(&Vector2<f64>) -> Result<Vector3<f64>>,
    {
        let coefficients = basis.interpolate(f)?;
        Ok(Self { basis, coefficients, element })
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn element(&self) -> usize {
        self.element
    }

    pub fn coefficients(&self) -> &[Vector3<f64>] {
        &self.coefficients
    }

    fn expansion(&self) -> LagrangeExpansion<'_> {
        LagrangeExpansion { basis: &self.basis, coefficients: &self.coefficients }
    }
}

impl SurfaceGeometry for ParametrizedGeometry {
    fn global(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        Ok(self.expansion().value(local))
    }

    fn jacobian_transposed(&self, local: &Vector2<f64>) -> Result<Matrix2x3<f64>> {
        Ok(self.expansion().jacobian(local).transpose())
    }

    fn second_derivatives(&self, local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        Some(Ok(self.expansion().hessians(local)))
    }
}

/// `X = f ∘ mu_e` evaluated through a bound local function.
pub struct LocalFunctionGeometry<'a> {
    local_function: Box<dyn LocalFunction + 'a>,
    flat: FlatElementGeometry,
    curvature: Option<ParametrizedGeometry>,
}

impl std::fmt::Debug for LocalFunctionGeometry<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFunctionGeometry")
            .field("element", &self.local_function.bound_element())
            .finish_non_exhaustive()
    }
}

impl<'a> LocalFunctionGeometry<'a> {
    /// Binds `local_function` to `element`. Without second derivatives from
    /// the local function, curvature comes from an interpolant of order
    /// [`CURVATURE_FALLBACK_ORDER`].
    pub fn new(mut local_function: Box<dyn LocalFunction + 'a>, mesh: &SurfaceMesh, element: usize) -> Result<Self> {
        local_function.bind(element)?;
        let probe = Vector2::new(1.0 / 3.0, 1.0 / 3.0);
        let curvature = match local_function.reference_hessians(&probe) {
            Some(_) => None,
            None => {
                let basis = Arc::new(LagrangeBasis::triangle(CURVATURE_FALLBACK_ORDER)?);
                Some(ParametrizedGeometry::interpolate(basis, element, |x| local_function.evaluate(x))?)
            }
        };
        Ok(Self { local_function, flat: mesh.element_geometry(element), curvature })
    }

    pub fn element(&self) -> usize {
        self.local_function.bound_element().expect("bound at construction")
    }
}

impl SurfaceGeometry for LocalFunctionGeometry<'_> {
    fn global(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        self.local_function.evaluate(local)
    }

    /// `D(mu_e)^T (Df)_e^T`.
    fn jacobian_transposed(&self, local: &Vector2<f64>) -> Result<Matrix2x3<f64>> {
        let df = self.local_function.derivative(local)?;
        Ok(self.flat.jacobian_transposed() * df.transpose())
    }

    fn second_derivatives(&self, local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        match &self.curvature {
            Some(fallback) => fallback.second_derivatives(local),
            None => self.local_function.reference_hessians(local),
        }
    }

    fn second_fundamental_form(&self, local: &Vector2<f64>) -> Result<Matrix2<f64>> {
        match &self.curvature {
            Some(fallback) => fallback.second_fundamental_form(local),
            None => {
                let d2 = self.second_derivatives(local).ok_or(Error::NotDifferentiable)??;
                let n = self.normal(local)?;
                let (a, b, c) = (-d2[0].dot(&n), -d2[1].dot(&n), -d2[2].dot(&n));
                Ok(Matrix2::new(a, b, b, c))
            }
        }
    }

    fn mean_curvature(&self, local: &Vector2<f64>) -> Result<f64> {
        match &self.curvature {
            Some(fallback) => fallback.mean_curvature(local),
            None => {
                let inv = gram_inverse(&self.jacobian_transposed(local)?)?;
                Ok((inv * self.second_fundamental_form(local)?).trace())
            }
        }
    }
}

/// Element geometry chosen by [`CurvedSurface`].
#[derive(Debug)]
pub enum ElementGeometry<'a> {
    Parametrized(ParametrizedGeometry),
    LocalFunction(LocalFunctionGeometry<'a>),
}

impl SurfaceGeometry for ElementGeometry<'_> {
    fn global(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        match self {
            Self::Parametrized(g) => g.global(local),
            Self::LocalFunction(g) => g.global(local),
        }
    }

    fn jacobian_transposed(&self, local: &Vector2<f64>) -> Result<Matrix2x3<f64>> {
        match self {
            Self::Parametrized(g) => g.jacobian_transposed(local),
            Self::LocalFunction(g) => g.jacobian_transposed(local),
        }
    }

    fn second_derivatives(&self, local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        match self {
            Self::Parametrized(g) => g.second_derivatives(local),
            Self::LocalFunction(g) => g.second_derivatives(local),
        }
    }

    fn second_fundamental_form(&self, local: &Vector2<f64>) -> Result<Matrix2<f64>> {
        match self {
            Self::Parametrized(g) => g.second_fundamental_form(local),
            Self::LocalFunction(g) => g.second_fundamental_form(local),
        }
    }

    fn mean_curvature(&self, local: &Vector2<f64>) -> Result<f64> {
        match self {
            Self::Parametrized(g) => g.mean_curvature(local),
            Self::LocalFunction(g) => g.mean_curvature(local),
        }
    }
}

/// An edge of a curved element: the element geometry composed with the
/// edge's segment map `eta`.
#[derive(Debug)]
pub struct IntersectionGeometry<G> {
    element: G,
    eta: LocalGeometry,
}

impl<G: SurfaceGeometry> IntersectionGeometry<G> {
    pub fn new(element: G, eta: LocalGeometry) -> Self {
        Self { element, eta }
    }

    pub fn global(&self, t: f64) -> Result<Vector3<f64>> {
        self.element.global(&self.eta.global2(&[t]))
    }

    /// Tangent `d/dt X(eta(t))`.
    pub fn tangent(&self, t: f64) -> Result<Vector3<f64>> {
        let jt = self.element.jacobian_transposed(&self.eta.global2(&[t]))?;
        let d = self.eta.jacobian_transposed();
        Ok(jt.transpose() * Vector2::new(d[(0, 0)], d[(0, 1)]))
    }

    pub fn integration_element(&self, t: f64) -> Result<f64> {
        Ok(self.tangent(t)?.norm())
    }

    pub fn element_geometry(&self) -> &G {
        &self.element
    }
}

/// A reference mesh with a parametrization onto the curved surface.
///
/// Positive `order` interpolates the parametrization into Lagrange bases of
/// that order; `order <= 0` evaluates the grid function directly and requires
/// it to be differentiable.
#[derive(Debug, Clone)]
pub struct CurvedSurface<G> {
    mesh: Arc<SurfaceMesh>,
    grid_function: G,
    order: i32,
    basis: Option<Arc<LagrangeBasis>>,
}

impl<G: GridFunction> CurvedSurface<G> {
    pub fn new(grid_function: G, order: i32) -> Result<Self> {
        let basis = if order > 0 {
            Some(Arc::new(LagrangeBasis::triangle(order as usize)?))
        } else if grid_function.is_differentiable() {
            None
        } else {
            return Err(Error::Config("a non-positive order needs a differentiable grid function".into()));
        };
        Ok(Self { mesh: grid_function.mesh().clone(), grid_function, order, basis })
    }

    pub fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn grid_function(&self) -> &G {
        &self.grid_function
    }

    /// Mutable access for moving surfaces; geometries created earlier borrow
    /// the surface and must be dropped first.
    pub fn grid_function_mut(&mut self) -> &mut G {
        &mut self.grid_function
    }

    pub fn element_geometry(&self, element: usize) -> Result<ElementGeometry<'_>> {
        Ok(match &self.basis {
            Some(basis) => ElementGeometry::Parametrized(self.interpolated(basis.clone(), element)?),
            None => ElementGeometry::LocalFunction(LocalFunctionGeometry::new(
                self.grid_function.local_function(),
                &self.mesh,
                element,
            )?),
        })
    }

    /// Interpolated geometry of an arbitrary order, independent of the
    /// surface's own order.
    pub fn parametrized_geometry(&self, element: usize, order: usize) -> Result<ParametrizedGeometry> {
        let basis = match &self.basis {
            Some(b) if b.order() == order => b.clone(),
            _ => Arc::new(LagrangeBasis::triangle(order)?),
        };
        self.interpolated(basis, element)
    }

    fn interpolated(&self, basis: Arc<LagrangeBasis>, element: usize) -> Result<ParametrizedGeometry> {
        let mut lf = self.grid_function.local_function();
        lf.bind(element)?;
        ParametrizedGeometry::interpolate(basis, element, |x| lf.evaluate(x))
    }

    pub fn intersection_geometry(
        &self,
        element: usize,
        local_edge: usize,
    ) -> Result<IntersectionGeometry<ElementGeometry<'_>>> {
        let is = self.mesh.intersections(element).into_iter().nth(local_edge).ok_or(Error::IndexOutOfRange {
            what: "local edge",
            index: local_edge,
            len: 3,
        })?;
        Ok(IntersectionGeometry::new(self.element_geometry(element)?, is.geometry_in_inside))
    }

    /// Sum of element areas.
    pub fn area(&self, quad_degree: usize) -> Result<f64> {
        (0..self.mesh.num_triangles()).map(|e| self.element_geometry(e)?.volume(quad_degree)).sum()
    }
}
