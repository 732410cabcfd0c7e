//! Lagrange finite elements on curved surfaces: a conforming scalar space,
//! element-wise assembly into CSR storage and a conjugate gradient solver.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3x2, Vector2, Vector3};
use rayon::prelude::*;

use crate::geometry::{CurvedSurface, ElementGeometry, SurfaceGeometry};
use crate::gridfunctions::GridFunction;
use crate::lagrange::LagrangeBasis;
use crate::mesh::{LagrangeNumbering, SurfaceMesh};
use crate::quadrature;
use crate::{Error, Result};

/// The continuous order-`r` Lagrange space over a mesh.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    mesh: Arc<SurfaceMesh>,
    basis: Arc<LagrangeBasis>,
    numbering: Arc<LagrangeNumbering>,
}

impl ScalarSpace {
    pub fn new(mesh: Arc<SurfaceMesh>, order: usize) -> Result<Self> {
        let basis = Arc::new(LagrangeBasis::triangle(order)?);
        let numbering = Arc::new(LagrangeNumbering::new(&mesh, order)?);
        Ok(Self { mesh, basis, numbering })
    }

    pub fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
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

    pub fn dofs(&self) -> usize {
        self.numbering.len()
    }
}

/// Compressed sparse row matrix with sorted, unique columns in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    ncols: usize,
    row_offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the sparsity of the given element index sets.
    pub fn from_pattern<'a>(n: usize, elements: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in elements {
            for &i in dofs {
                rows[i].extend_from_slice(dofs);
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut columns = Vec::new();
        row_offsets.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            columns.extend(r);
            row_offsets.push(columns.len());
        }
        let values = vec![0.0; columns.len()];
        Self { ncols: n, row_offsets, columns, values }
    }

    /// Dense rows to CSR, dropping exact zeros.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut row_offsets = vec![0];
        let (mut columns, mut values) = (Vec::new(), Vec::new());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    columns.push(j);
                    values.push(a[(i, j)]);
                }
            }
            row_offsets.push(columns.len());
        }
        Self { ncols: a.ncols(), row_offsets, columns, values }
    }

    pub fn nrows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        self.columns[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Entry `(i, j)`; zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Add to an entry inside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside the sparsity pattern");
        self.values[k] += v;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.columns[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, rows in parallel; every row sums in column order.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        });
    }

    /// `max |A - Aᵀ| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.nrows() {
            for (j, a) in self.row(i) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows(), self.ncols);
        for i in 0..self.nrows() {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }
}

/// Geometry and shape function data at one quadrature point of an element.
#[derive(Debug, Clone)]
pub struct PointData {
    pub local: Vector2<f64>,
    pub global: Vector3<f64>,
    /// Quadrature weight times integration element.
    pub weight: f64,
    pub normal: Vector3<f64>,
    pub jacobian_inverse_transposed: Matrix3x2<f64>,
    /// Shape function values in canonical local order.
    pub values: Vec<f64>,
    /// Tangential gradients of the shape functions.
    pub gradients: Vec<Vector3<f64>>,
}

pub struct ElementData<'a, 'g> {
    pub element: usize,
    pub geometry: &'a ElementGeometry<'g>,
    pub points: Vec<PointData>,
}

/// Local matrix and load vector. With `block` components per node, local
/// index `j * block + c` addresses component `c` of shape function `j`.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n), rhs: DVector::zeros(n) }
    }
}

/// Assemble a global system from per-element kernels. Elements are computed
/// in parallel and scattered in element order, so the result does not depend
/// on the number of worker threads.
pub fn assemble<G, K>(
    space: &ScalarSpace,
    surface: &CurvedSurface<G>,
    quad_degree: usize,
    block: usize,
    kernel: K,
) -> Result<(CsrMatrix, Vec<f64>)>
where
    G: GridFunction,
    K: Fn(&ElementData) -> Result<LocalSystem> + Sync,
{
    let mesh = space.mesh();
    if !Arc::ptr_eq(mesh, surface.mesh()) && mesh.triangles() != surface.mesh().triangles() {
        return Err(Error::Config("space and surface live on different meshes".into()));
    }
    if block == 0 {
        return Err(Error::Config("block size must be positive".into()));
    }
    let rule = quadrature::rule(2, quad_degree)?;
    let basis = space.basis();
    let tabulated: Vec<(Vec<f64>, Vec<Vector2<f64>>)> =
        rule.iter().map(|q| (basis.evaluate(&q.position), basis.gradients(&q.position))).collect();
    let numbering = space.numbering();
    let local_size = basis.size() * block;

    let element_system = |e: usize| -> Result<LocalSystem> {
        let geometry = surface.element_geometry(e)?;
        let mut points = Vec::with_capacity(rule.len());
        for (q, (values, reference_gradients)) in rule.iter().zip(&tabulated) {
            let jit = geometry.jacobian_inverse_transposed(&q.position)?;
            points.push(PointData {
                local: q.position,
                global: geometry.global(&q.position)?,
                weight: q.weight * geometry.integration_element(&q.position)?,
                normal: geometry.normal(&q.position)?,
                jacobian_inverse_transposed: jit,
                values: values.clone(),
                gradients: reference_gradients.iter().map(|g| jit * g).collect(),
            });
        }
        let local = kernel(&ElementData { element: e, geometry: &geometry, points })?;
        if local.matrix.shape() != (local_size, local_size) || local.rhs.len() != local_size {
            return Err(Error::LengthMismatch { expected: local_size, got: local.rhs.len() });
        }
        Ok(local)
    };
    let systems: Vec<LocalSystem> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| element_system(e).map_err(|err| err.at_element(e)))
        .collect::<Result<_>>()?;

    let global_dofs = |e: usize| -> Vec<usize> {
        numbering.element(e).iter().flat_map(|&g| (0..block).map(move |c| g * block + c)).collect()
    };
    let dofs: Vec<Vec<usize>> = (0..mesh.num_triangles()).map(global_dofs).collect();
    let n = space.dofs() * block;
    let mut matrix = CsrMatrix::from_pattern(n, dofs.iter().map(|d| d.as_slice()));
    let mut rhs = vec![0.0; n];
    for (local, d) in systems.iter().zip(&dofs) {
        for (a, &i) in d.iter().enumerate() {
            rhs[i] += local.rhs[a];
            for (b, &j) in d.iter().enumerate() {
                matrix.add(i, j, local.matrix[(a, b)]);
            }
        }
    }
    Ok((matrix, rhs))
}

/// `∫ φ_i φ_j` with a load `∫ f φ_i`.
pub fn mass_kernel<F>(load: F) -> impl Fn(&ElementData) -> Result<LocalSystem> + Sync
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
{
    move |data| {
        let n = data.points[0].values.len();
        let mut local = LocalSystem::zeros(n);
        for p in &data.points {
            let f = load(&p.global);
            for i in 0..n {
                local.rhs[i] += p.weight * f * p.values[i];
                for j in 0..n {
                    local.matrix[(i, j)] += p.weight * p.values[i] * p.values[j];
                }
            }
        }
        Ok(local)
    }
}

/// `∫ ∇φ_i · ∇φ_j` with the tangential gradient.
pub fn stiffness_kernel(data: &ElementData) -> Result<LocalSystem> {
    let n = data.points[0].values.len();
    let mut local = LocalSystem::zeros(n);
    for p in &data.points {
        for i in 0..n {
            for j in 0..n {
                local.matrix[(i, j)] += p.weight * p.gradients[i].dot(&p.gradients[j]);
            }
        }
    }
    Ok(local)
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` of the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`,
/// starting from zero. Stops at relative residual `tol`.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize, jacobi: bool) -> Result<CgResult> {
    cg_solve_from(a, b, vec![0.0; b.len()], tol, max_iter, jacobi)
}

/// [`cg_solve`] from a given initial guess.
pub fn cg_solve_from(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
    jacobi: bool,
) -> Result<CgResult> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::LengthMismatch { expected: a.nrows(), got: n });
    }
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: x.len() });
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgResult { x: vec![0.0; n], iterations: 0, residual: 0.0, converged: true });
    }
    let inverse_diagonal: Vec<f64> =
        if jacobi { a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect() } else { vec![1.0; n] };
    let true_residual = |x: &[f64], r: &mut Vec<f64>| {
        a.mul_vec(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        dot(r, r).sqrt() / b_norm
    };
    let mut r = vec![0.0; n];
    let mut residual = true_residual(&x, &mut r);
    let mut iterations = 0;
    // the recursively updated residual drifts from the true one, so restart
    // from the current iterate until the true residual meets the tolerance
    for _restart in 0..4 {
        if residual <= tol || iterations >= max_iter {
            break;
        }
        let mut z: Vec<f64> = r.iter().zip(&inverse_diagonal).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut recursive = residual;
        while recursive > tol && iterations < max_iter {
            a.mul_vec(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::Config("matrix is not positive definite".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            recursive = dot(&r, &r).sqrt() / b_norm;
            for i in 0..n {
                z[i] = r[i] * inverse_diagonal[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        residual = true_residual(&x, &mut r);
    }
    Ok(CgResult { x, iterations, residual, converged: residual <= tol })
}
