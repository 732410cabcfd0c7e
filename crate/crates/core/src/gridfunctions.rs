//! Functions on the reference mesh with values in R^3, localized per element
//! through bind/unbind.
//!
//! A [`GridFunction`] `f` is evaluated on element `e` through its local
//! function `f_e = f ∘ mu_e`, where `mu_e` is the affine map from the reference
//! triangle onto the flat element. Derivatives come in two forms: the global
//! derivative `(Df)_e` (3x3) and the reference Jacobian `D(f_e)` (3x2), related
//! by `D(f_e) = (Df)_e D(mu_e)`.

use std::sync::Arc;

use nalgebra::{Matrix2x3, Matrix3, Matrix3x2, Vector2, Vector3};

use crate::lagrange::{self, LagrangeBasis};
use crate::mesh::{FlatElementGeometry, LagrangeNumbering, SurfaceMesh};
use crate::projections::Projection;
use crate::{Error, Result};

pub type VectorFn = Arc<dyn Fn(&Vector3<f64>) -> Result<Vector3<f64>> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vector3<f64>) -> Result<Matrix3<f64>> + Send + Sync>;

/// Second derivatives `[d11, d12, d22]` of a map from reference coordinates.
pub type ReferenceHessians = [Vector3<f64>; 3];

pub trait GridFunction: Send + Sync {
    fn mesh(&self) -> &Arc<SurfaceMesh>;

    fn local_function(&self) -> Box<dyn LocalFunction + '_>;

    /// Whether local functions provide derivatives.
    fn is_differentiable(&self) -> bool;
}

/// Per-element view of a grid function. Evaluation requires a bound element.
pub trait LocalFunction {
    fn bind(&mut self, element: usize) -> Result<()>;

    fn unbind(&mut self);

    fn bound_element(&self) -> Option<usize>;

    fn evaluate(&self, local: &Vector2<f64>) -> Result<Vector3<f64>>;

    /// Global derivative `(Df)_e` at the point `mu_e(local)`.
    fn derivative(&self, local: &Vector2<f64>) -> Result<Matrix3<f64>>;

    /// `D(f_e)`, the derivative with respect to reference coordinates.
    fn reference_jacobian(&self, local: &Vector2<f64>) -> Result<Matrix3x2<f64>>;

    /// Second reference derivatives of `f_e`, where available.
    fn reference_hessians(&self, _local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        None
    }
}

fn bound(element: Option<usize>) -> Result<usize> {
    element.ok_or(Error::Unbound)
}

fn check_element(mesh: &SurfaceMesh, element: usize) -> Result<()> {
    if element >= mesh.num_triangles() {
        return Err(Error::IndexOutOfRange { what: "element", index: element, len: mesh.num_triangles() });
    }
    Ok(())
}

/// `(D mu_e)^+`: the pseudo-inverse of the flat element Jacobian, mapping
/// tangential global vectors to reference vectors.
fn flat_pseudo_inverse(flat: &FlatElementGeometry) -> Result<Matrix2x3<f64>> {
    let jt = flat.jacobian_transposed();
    let gram = jt * jt.transpose();
    let inv = gram.try_inverse().ok_or(Error::DegenerateGeometry(0.0))?;
    Ok(inv * jt)
}

/// Evaluation of `sum_j xi^j phi_j` and its reference derivatives.
#[derive(Debug, Clone)]
pub(crate) struct LagrangeExpansion<'a> {
    pub basis: &'a LagrangeBasis,
    pub coefficients: &'a [Vector3<f64>],
}

impl LagrangeExpansion<'_> {
    pub fn value(&self, x: &Vector2<f64>) -> Vector3<f64> {
        lagrange::combine(self.coefficients, &self.basis.evaluate(x))
    }

    pub fn jacobian(&self, x: &Vector2<f64>) -> Matrix3x2<f64> {
        self.basis
            .gradients(x)
            .iter()
            .zip(self.coefficients)
            .fold(Matrix3x2::zeros(), |acc, (g, c)| acc + c * g.transpose())
    }

    pub fn hessians(&self, x: &Vector2<f64>) -> ReferenceHessians {
        let mut out = [Vector3::zeros(); 3];
        for (h, c) in self.basis.hessians(x).iter().zip(self.coefficients) {
            out[0] += c * h[(0, 0)];
            out[1] += c * h[(0, 1)];
            out[2] += c * h[(1, 1)];
        }
        out
    }
}

/// A closed-form map `R^3 -> R^3`, optionally with its Jacobian.
#[derive(Clone)]
pub struct AnalyticGridFunction {
    mesh: Arc<SurfaceMesh>,
    function: VectorFn,
    jacobian: Option<JacobianFn>,
}

impl std::fmt::Debug for AnalyticGridFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticGridFunction").field("differentiable", &self.jacobian.is_some()).finish_non_exhaustive()
    }
}

impl AnalyticGridFunction {
    pub fn new(mesh: Arc<SurfaceMesh>, function: VectorFn, jacobian: Option<JacobianFn>) -> Self {
        Self { mesh, function, jacobian }
    }

    /// The projection as a grid function; differentiable iff the projection
    /// has a Jacobian.
    pub fn from_projection<P: Projection + 'static>(mesh: Arc<SurfaceMesh>, projection: P) -> Self {
        let projection = Arc::new(projection);
        let jacobian: Option<JacobianFn> = projection.has_jacobian().then(|| {
            let p = projection.clone();
            Arc::new(move |x: &Vector3<f64>| p.jacobian(x).unwrap_or(Err(Error::NotDifferentiable))) as JacobianFn
        });
        let function: VectorFn = Arc::new(move |x: &Vector3<f64>| projection.project(x));
        Self { mesh, function, jacobian }
    }

    pub fn function(&self) -> &VectorFn {
        &self.function
    }
}

struct AnalyticLocal<'a> {
    gf: &'a AnalyticGridFunction,
    element: Option<(usize, FlatElementGeometry)>,
}

impl AnalyticLocal<'_> {
    fn flat(&self) -> Result<&FlatElementGeometry> {
        self.element.as_ref().map(|(_, g)| g).ok_or(Error::Unbound)
    }
}

impl LocalFunction for AnalyticLocal<'_> {
    fn bind(&mut self, element: usize) -> Result<()> {
        check_element(&self.gf.mesh, element)?;
        self.element = Some((element, self.gf.mesh.element_geometry(element)));
        Ok(())
    }

    fn unbind(&mut self) {
        self.element = None;
    }

    fn bound_element(&self) -> Option<usize> {
        self.element.as_ref().map(|(e, _)| *e)
    }

    fn evaluate(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        (self.gf.function)(&self.flat()?.global(local))
    }

    fn derivative(&self, local: &Vector2<f64>) -> Result<Matrix3<f64>> {
        let x = self.flat()?.global(local);
        let jac = self.gf.jacobian.as_ref().ok_or(Error::NotDifferentiable)?;
        jac(&x)
    }

    fn reference_jacobian(&self, local: &Vector2<f64>) -> Result<Matrix3x2<f64>> {
        Ok(self.derivative(local)? * self.flat()?.jacobian_transposed().transpose())
    }
}

impl GridFunction for AnalyticGridFunction {
    fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    fn local_function(&self) -> Box<dyn LocalFunction + '_> {
        Box::new(AnalyticLocal { gf: self, element: None })
    }

    fn is_differentiable(&self) -> bool {
        self.jacobian.is_some()
    }
}

/// A closed-form map interpolated element by element into the order-`k`
/// Lagrange basis.
#[derive(Clone)]
pub struct AnalyticDiscreteFunction {
    mesh: Arc<SurfaceMesh>,
    function: VectorFn,
    basis: Arc<LagrangeBasis>,
}

impl std::fmt::Debug for AnalyticDiscreteFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticDiscreteFunction").field("order", &self.basis.order()).finish_non_exhaustive()
    }
}

impl AnalyticDiscreteFunction {
    pub fn new(mesh: Arc<SurfaceMesh>, function: VectorFn, order: usize) -> Result<Self> {
        Ok(Self { mesh, function, basis: Arc::new(LagrangeBasis::triangle(order)?) })
    }

    pub fn from_projection<P: Projection + 'static>(
        mesh: Arc<SurfaceMesh>,
        projection: P,
        order: usize,
    ) -> Result<Self> {
        let function: VectorFn = Arc::new(move |x: &Vector3<f64>| projection.project(x));
        Self::new(mesh, function, order)
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }
}

struct CoefficientLocal<'a> {
    mesh: &'a SurfaceMesh,
    basis: &'a LagrangeBasis,
    element: Option<usize>,
    coefficients: Vec<Vector3<f64>>,
    pseudo_inverse: Matrix2x3<f64>,
    fill: Box<dyn Fn(usize, &mut Vec<Vector3<f64>>) -> Result<()> + 'a>,
}

/// Local function of an element-wise Lagrange expansion whose coefficients
/// `fill` writes on bind.
pub(crate) fn coefficient_local<'a>(
    mesh: &'a SurfaceMesh,
    basis: &'a LagrangeBasis,
    fill: impl Fn(usize, &mut Vec<Vector3<f64>>) -> Result<()> + 'a,
) -> Box<dyn LocalFunction + 'a> {
    Box::new(CoefficientLocal {
        mesh,
        basis,
        element: None,
        coefficients: Vec::with_capacity(basis.size()),
        pseudo_inverse: Matrix2x3::zeros(),
        fill: Box::new(fill),
    })
}

impl CoefficientLocal<'_> {
    fn expansion(&self) -> Result<LagrangeExpansion<'_>> {
        bound(self.element)?;
        Ok(LagrangeExpansion { basis: self.basis, coefficients: &self.coefficients })
    }
}

impl LocalFunction for CoefficientLocal<'_> {
    fn bind(&mut self, element: usize) -> Result<()> {
        check_element(self.mesh, element)?;
        self.element = None;
        self.coefficients.clear();
        (self.fill)(element, &mut self.coefficients)?;
        self.pseudo_inverse = flat_pseudo_inverse(&self.mesh.element_geometry(element))?;
        self.element = Some(element);
        Ok(())
    }

    fn unbind(&mut self) {
        self.element = None;
        self.coefficients.clear();
    }

    fn bound_element(&self) -> Option<usize> {
        self.element
    }

    fn evaluate(&self, local: &Vector2<f64>) -> Result<Vector3<f64>> {
        Ok(self.expansion()?.value(local))
    }

    /// Tangential derivative `D(f_e) (D mu_e)^+`.
    fn derivative(&self, local: &Vector2<f64>) -> Result<Matrix3<f64>> {
        Ok(self.reference_jacobian(local)? * self.pseudo_inverse)
    }

    fn reference_jacobian(&self, local: &Vector2<f64>) -> Result<Matrix3x2<f64>> {
        Ok(self.expansion()?.jacobian(local))
    }

    fn reference_hessians(&self, local: &Vector2<f64>) -> Option<Result<ReferenceHessians>> {
        Some(self.expansion().map(|e| e.hessians(local)))
    }
}

impl GridFunction for AnalyticDiscreteFunction {
    fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    fn local_function(&self) -> Box<dyn LocalFunction + '_> {
        let fill = move |element: usize, out: &mut Vec<Vector3<f64>>| {
            let flat = self.mesh.element_geometry(element);
            for x in self.basis.node_positions() {
                out.push((self.function)(&flat.global(&x))?);
            }
            Ok(())
        };
        coefficient_local(&self.mesh, &self.basis, fill)
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// Globally continuous order-`k` Lagrange function with one coefficient in
/// R^3 per global node (see [`LagrangeNumbering`]).
#[derive(Debug, Clone)]
pub struct DiscreteGridViewFunction {
    mesh: Arc<SurfaceMesh>,
    basis: Arc<LagrangeBasis>,
    numbering: Arc<LagrangeNumbering>,
    coefficients: Vec<Vector3<f64>>,
}

impl DiscreteGridViewFunction {
    /// All coefficients zero.
    pub fn new(mesh: Arc<SurfaceMesh>, order: usize) -> Result<Self> {
        let basis = Arc::new(LagrangeBasis::triangle(order)?);
        let numbering = Arc::new(LagrangeNumbering::new(&mesh, order)?);
        let coefficients = vec![Vector3::zeros(); numbering.len()];
        Ok(Self { mesh, basis, numbering, coefficients })
    }

    /// Interpolant of `f` evaluated at the flat positions of the global nodes.
    pub fn interpolate_global<F>(mesh: Arc<SurfaceMesh>, order: usize, f: F) -> Result<Self>
    where
        F: FnMut(&Vector3<f64>) -> Result<Vector3<f64>>,
    {
        let mut gf = Self::new(mesh, order)?;
        gf.interpolate(f)?;
        Ok(gf)
    }

    pub fn interpolate<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(&Vector3<f64>) -> Result<Vector3<f64>>,
    {
        let positions = self.node_positions();
        for (c, x) in self.coefficients.iter_mut().zip(&positions) {
            *c = f(x)?;
        }
        Ok(())
    }

    /// Flat (reference mesh) position of every global node.
    pub fn node_positions(&self) -> Vec<Vector3<f64>> {
        self.numbering
            .owners()
            .into_iter()
            .map(|(e, j)| self.mesh.element_geometry(e).global(&self.basis.node_position(j)))
            .collect()
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn basis(&self) -> &Arc<LagrangeBasis> {
        &self.basis
    }

    pub fn numbering(&self) -> &Arc<LagrangeNumbering> {
        &self.numbering
    }

    pub fn coefficients(&self) -> &[Vector3<f64>] {
        &self.coefficients
    }

    pub fn set_coefficients(&mut self, coefficients: Vec<Vector3<f64>>) -> Result<()> {
        if coefficients.len() != self.coefficients.len() {
            return Err(Error::LengthMismatch { expected: self.coefficients.len(), got: coefficients.len() });
        }
        self.coefficients = coefficients;
        Ok(())
    }

    /// Coefficients as a flat `[x0, y0, z0, x1, ...]` vector.
    pub fn read_coefficients(&self) -> Vec<f64> {
        self.coefficients.iter().flat_map(|c| c.iter().copied()).collect()
    }

    /// Replace the coefficients from a flat `[x0, y0, z0, x1, ...]` vector.
    pub fn update_coefficients(&mut self, flat: &[f64]) -> Result<()> {
        let expected = 3 * self.coefficients.len();
        if flat.len() != expected {
            return Err(Error::LengthMismatch { expected, got: flat.len() });
        }
        for (c, chunk) in self.coefficients.iter_mut().zip(flat.chunks_exact(3)) {
            *c = Vector3::new(chunk[0], chunk[1], chunk[2]);
        }
        Ok(())
    }

    /// Coefficients of one element in canonical local order.
    pub fn element_coefficients(&self, element: usize) -> Vec<Vector3<f64>> {
        self.numbering.element(element).iter().map(|&g| self.coefficients[g]).collect()
    }
}

impl GridFunction for DiscreteGridViewFunction {
    fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    fn local_function(&self) -> Box<dyn LocalFunction + '_> {
        let fill = move |element: usize, out: &mut Vec<Vector3<f64>>| {
            out.extend(self.numbering.element(element).iter().map(|&g| self.coefficients[g]));
            Ok(())
        };
        coefficient_local(&self.mesh, &self.basis, fill)
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh;
    use crate::projections::SphereProjection;
    use rand::{Rng, SeedableRng};

    fn random_local(rng: &mut impl Rng) -> Vector2<f64> {
        loop {
            let p = Vector2::new(rng.gen::<f64>(), rng.gen::<f64>());
            if p.x + p.y <= 1.0 {
                return p;
            }
        }
    }

    fn identity(mesh: Arc<SurfaceMesh>) -> AnalyticGridFunction {
        AnalyticGridFunction::new(mesh, Arc::new(|x| Ok(*x)), Some(Arc::new(|_| Ok(Matrix3::identity()))))
    }

    #[test]
    fn bind_protocol() {
        let m = Arc::new(mesh::icosahedron(1.0));
        let gf = identity(m.clone());
        let mut lf = gf.local_function();
        assert!(matches!(lf.evaluate(&Vector2::zeros()), Err(Error::Unbound)));
        lf.bind(3).unwrap();
        assert_eq!(lf.bound_element(), Some(3));
        assert_eq!(lf.evaluate(&Vector2::zeros()).unwrap(), m.vertices()[m.triangles()[3][0]]);
        lf.bind(7).unwrap();
        assert_eq!(lf.evaluate(&Vector2::new(1.0, 0.0)).unwrap(), m.vertices()[m.triangles()[7][1]]);
        lf.unbind();
        assert!(lf.evaluate(&Vector2::zeros()).is_err());
        assert!(lf.bind(20).is_err());
    }

    #[test]
    fn analytic_localization_and_chain_rule() {
        let m = Arc::new(mesh::icosahedron(1.0));
        let sphere = SphereProjection::new(1.0);
        let gf = AnalyticGridFunction::from_projection(m.clone(), sphere);
        assert!(gf.is_differentiable());
        let mut lf = gf.local_function();
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let h = 1e-6;
        for _ in 0..20 {
            let e = rng.gen_range(0..m.num_triangles());
            let x = random_local(&mut rng) * 0.98 + Vector2::new(0.01, 0.01);
            lf.bind(e).unwrap();
            let expect = sphere.project(&m.element_geometry(e).global(&x)).unwrap();
            let v = lf.evaluate(&x).unwrap();
            assert!((v - expect).norm() < 1e-13);
            assert!((v.norm() - 1.0).abs() < 1e-14);
            let jac = lf.reference_jacobian(&x).unwrap();
            for a in 0..2 {
                let mut d = Vector2::zeros();
                d[a] = h;
                let fd = (lf.evaluate(&(x + d)).unwrap() - lf.evaluate(&(x - d)).unwrap()) / (2.0 * h);
                assert!((fd - jac.column(a)).norm() < 1e-6);
            }
        }
        let plain = AnalyticGridFunction::new(m, Arc::new(|x| Ok(*x)), None);
        assert!(!plain.is_differentiable());
        let mut lf = plain.local_function();
        lf.bind(0).unwrap();
        assert!(matches!(lf.derivative(&Vector2::zeros()), Err(Error::NotDifferentiable)));
    }

    #[test]
    fn discrete_reproduces_polynomials() {
        let m = Arc::new(mesh::icosahedron(1.0));
        let mut rng = rand::rngs::StdRng::seed_from_u64(22);
        for k in 1..=4 {
            let poly = move |x: &Vector3<f64>| -> Result<Vector3<f64>> {
                Ok(Vector3::new(x.x.powi(k as i32) - x.y, x.y * x.z.powi(k as i32 - 1), 2.0 + x.z))
            };
            let adf = AnalyticDiscreteFunction::new(m.clone(), Arc::new(poly), k).unwrap();
            let dgvf = DiscreteGridViewFunction::interpolate_global(m.clone(), k, poly).unwrap();
            let mut a = adf.local_function();
            let mut d = dgvf.local_function();
            for _ in 0..20 {
                let e = rng.gen_range(0..m.num_triangles());
                let x = random_local(&mut rng);
                a.bind(e).unwrap();
                d.bind(e).unwrap();
                let expect = poly(&m.element_geometry(e).global(&x)).unwrap();
                assert!((a.evaluate(&x).unwrap() - expect).norm() < 1e-11);
                assert!((d.evaluate(&x).unwrap() - expect).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn affine_map_and_tangential_derivative() {
        let m = Arc::new(mesh::unit_triangle());
        let a = Matrix3::new(1.0, 2.0, 0.5, -1.0, 0.3, 0.0, 0.2, 0.1, 3.0);
        let b = Vector3::new(0.1, -0.2, 0.3);
        let f: VectorFn = Arc::new(move |x| Ok(a * x + b));
        let adf = AnalyticDiscreteFunction::new(m.clone(), f.clone(), 1).unwrap();
        let mut lf = adf.local_function();
        lf.bind(0).unwrap();
        let x = Vector2::new(0.2, 0.3);
        assert!((lf.evaluate(&x).unwrap() - f(&Vector3::new(0.2, 0.3, 0.0)).unwrap()).norm() < 1e-12);
        // the flat element is the xy-plane: the tangential derivative is A P
        let p = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
        assert!((lf.derivative(&x).unwrap() - a * p).norm() < 1e-12);
    }

    #[test]
    fn analytic_discrete_error_order() {
        let sphere = SphereProjection::new(1.0);
        let mut errors = Vec::new();
        let mut hs = Vec::new();
        let mut m = mesh::icosahedron(1.0);
        for _ in 0..3 {
            let mesh = Arc::new(m.clone());
            let gf = AnalyticDiscreteFunction::from_projection(mesh.clone(), sphere, 2).unwrap();
            let mut lf = gf.local_function();
            let mut err: f64 = 0.0;
            for e in 0..mesh.num_triangles() {
                lf.bind(e).unwrap();
                for q in crate::quadrature::rule(2, 6).unwrap().iter() {
                    let exact = sphere.project(&mesh.element_geometry(e).global(&q.position)).unwrap();
                    err = err.max((lf.evaluate(&q.position).unwrap() - exact).norm());
                }
            }
            errors.push(err);
            hs.push(mesh.grid_width());
            m = m.refine_uniform(Some(&sphere)).unwrap();
        }
        let eoc = (errors[1] / errors[2]).ln() / (hs[1] / hs[2]).ln();
        assert!((eoc - 3.0).abs() < 0.3, "eoc {eoc}");
    }

    #[test]
    fn dgvf_interpolation_continuity_and_coefficients() {
        let m = Arc::new(mesh::icosahedron(1.0));
        let sphere = SphereProjection::new(1.0);
        let k1 = DiscreteGridViewFunction::interpolate_global(m.clone(), 1, |x| sphere.project(x)).unwrap();
        assert!(k1.coefficients().iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));

        let id = DiscreteGridViewFunction::interpolate_global(m.clone(), 3, |x| Ok(*x)).unwrap();
        let mut lf = id.local_function();
        lf.bind(5).unwrap();
        let x = Vector2::new(0.3, 0.3);
        assert!((lf.evaluate(&x).unwrap() - m.element_geometry(5).global(&x)).norm() < 1e-14);
        drop(lf);

        for k in 1..=4 {
            let gf = DiscreteGridViewFunction::interpolate_global(m.clone(), k, |x| sphere.project(x)).unwrap();
            let (mut a, mut b) = (gf.local_function(), gf.local_function());
            let mut jump: f64 = 0.0;
            for e in 0..m.num_triangles() {
                for is in m.intersections(e) {
                    let Some((o, _)) = is.outside else { continue };
                    a.bind(e).unwrap();
                    b.bind(o).unwrap();
                    let gout = is.geometry_in_outside.as_ref().unwrap();
                    for i in 0..5 {
                        let t = i as f64 / 4.0;
                        let xa = is.geometry_in_inside.global2(&[t]);
                        let xb = gout.global2(&[t]);
                        jump = jump.max((a.evaluate(&xa).unwrap() - b.evaluate(&xb).unwrap()).norm());
                    }
                }
            }
            assert!(jump <= 1e-13, "k={k} jump {jump}");
        }
    }

    #[test]
    fn coefficient_update() {
        let m = Arc::new(mesh::octahedron());
        let mut gf = DiscreteGridViewFunction::interpolate_global(m.clone(), 2, |x| Ok(*x)).unwrap();
        let flat = gf.read_coefficients();
        let before = {
            let mut lf = gf.local_function();
            lf.bind(2).unwrap();
            lf.evaluate(&Vector2::new(0.25, 0.5)).unwrap()
        };
        gf.update_coefficients(&flat).unwrap();
        assert_eq!(gf.read_coefficients(), flat);
        let doubled: Vec<f64> = flat.iter().map(|v| 2.0 * v).collect();
        gf.update_coefficients(&doubled).unwrap();
        let mut lf = gf.local_function();
        lf.bind(2).unwrap();
        assert!((lf.evaluate(&Vector2::new(0.25, 0.5)).unwrap() - before * 2.0).norm() < 1e-15);
        drop(lf);
        assert!(matches!(gf.update_coefficients(&flat[1..]), Err(Error::LengthMismatch { .. })));
        assert!(gf.set_coefficients(vec![]).is_err());
    }
}
