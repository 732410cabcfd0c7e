//! The numerical experiments behind the `curvedsurf` binary: geometric error
//! orders of interpolated surfaces, a vector Helmholtz problem on the sphere
//! and mean curvature flow of a discrete parametrization.
//!
//! Every study returns plain rows; [`Csv`] renders them with a commented
//! configuration header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::fem::{self, ElementData, LocalSystem, ScalarSpace};
use crate::geometry::{CurvedSurface, SurfaceGeometry};
use crate::gridfunctions::{AnalyticGridFunction, DiscreteGridViewFunction, GridFunction};
use crate::io::{self, Encoding, HigherOrderMeshData, ParsedFieldData};
use crate::mesh::{self, SurfaceMesh};
use crate::projections::{
    genus2_reference_mesh, AnalyticSurface, EllipsoidProjection, Genus2LevelSet, ImplicitProjection, Projection,
    SphereProjection, TorusProjection,
};
use crate::quadrature;
use crate::{Error, Result};

/// How new reference vertices are placed under red refinement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Refinement {
    /// Edge midpoints are projected onto the surface.
    #[default]
    Projected,
    /// Edge midpoints stay on the flat level-0 triangles; only the
    /// interpolation nodes of the curved surface are projected.
    Flat,
}

/// A closed surface with a closest-point projection and exact normals and
/// curvature.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticGeometry {
    Sphere { radius: f64 },
    Ellipsoid { axes: [f64; 3] },
    Torus { big_r: f64, small_r: f64 },
    Genus2,
}

impl AnalyticGeometry {
    pub fn projection(&self) -> Arc<dyn AnalyticSurface> {
        match *self {
            Self::Sphere { radius } => Arc::new(SphereProjection::new(radius)),
            Self::Ellipsoid { axes } => Arc::new(EllipsoidProjection::new(axes)),
            Self::Torus { big_r, small_r } => Arc::new(TorusProjection::new(big_r, small_r)),
            Self::Genus2 => Arc::new(ImplicitProjection::improved(Genus2LevelSet)),
        }
    }

    /// Level-0 reference mesh with vertices on the surface.
    pub fn base_mesh(&self) -> Result<SurfaceMesh> {
        Ok(match *self {
            Self::Sphere { radius } => mesh::icosahedron(radius),
            Self::Ellipsoid { axes } => mesh::ellipsoid(axes),
            Self::Torus { big_r, small_r } => mesh::torus(big_r, small_r, 12, 6),
            Self::Genus2 => {
                let coarse = genus2_reference_mesh(0.25)?;
                let p = self.projection();
                let vertices = coarse.vertices().iter().map(|x| p.project(x)).collect::<Result<_>>()?;
                SurfaceMesh::build(vertices, coarse.triangles().to_vec())?
            }
        })
    }

    /// Reference mesh after `level` projected red refinements.
    pub fn mesh(&self, level: usize) -> Result<SurfaceMesh> {
        self.refined_mesh(level, Refinement::Projected)
    }

    pub fn refined_mesh(&self, level: usize, refinement: Refinement) -> Result<SurfaceMesh> {
        match refinement {
            Refinement::Projected => self.base_mesh()?.refined(level, Some(&self.projection())),
            Refinement::Flat => self.base_mesh()?.refined(level, None),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Sphere { radius } => format!("sphere radius={radius}"),
            Self::Ellipsoid { axes } => format!("ellipsoid axes={},{},{}", axes[0], axes[1], axes[2]),
            Self::Torus { big_r, small_r } => format!("torus radii={big_r},{small_r}"),
            Self::Genus2 => "genus2".into(),
        }
    }
}

/// A table with `# key = value` configuration lines above a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    pub config: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(config: Vec<(&str, String)>, header: &[&str]) -> Self {
        Self {
            config: config.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), num)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Experimental order between two consecutive levels.
pub fn eoc(h: [f64; 2], err: [f64; 2]) -> f64 {
    (err[0] / err[1]).ln() / (h[0] / h[1]).ln()
}

// geometric errors

#[derive(Debug, Clone)]
pub struct GeometryErrorsConfig {
    pub geometry: AnalyticGeometry,
    pub orders: Vec<usize>,
    pub levels: Vec<usize>,
    pub refinement: Refinement,
    /// Degree of the sampling rule; `2k + 2` when unset.
    pub quad_degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryErrorRow {
    pub order: usize,
    pub level: usize,
    pub h: f64,
    pub position: f64,
    pub normal: f64,
    /// `None` for flat elements, whose curvature vanishes identically.
    pub curvature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySlopes {
    pub order: usize,
    pub position: f64,
    pub normal: f64,
    pub curvature: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GeometryErrors {
    pub rows: Vec<GeometryErrorRow>,
    pub slopes: Vec<GeometrySlopes>,
    pub csv: Csv,
}

/// Maximum errors of position, normal and mean curvature of the order-`k`
/// interpolated surface, sampled at quadrature points.
pub fn element_max_errors<P: AnalyticSurface + ?Sized>(
    mesh: &Arc<SurfaceMesh>,
    projection: &Arc<P>,
    order: usize,
    quad_degree: usize,
) -> Result<[f64; 3]>
where
    Arc<P>: Projection + 'static,
{
    let cs = CurvedSurface::new(AnalyticGridFunction::from_projection(mesh.clone(), projection.clone()), order as i32)?;
    let rule = quadrature::rule(2, quad_degree)?;
    let per_element = |e: usize| -> Result<[f64; 3]> {
        let g = cs.element_geometry(e)?;
        let flat = mesh.element_geometry(e);
        let mut worst = [0.0f64; 3];
        for q in &rule {
            let exact = projection.project(&flat.global(&q.position))?;
            worst[0] = worst[0].max((g.global(&q.position)? - exact).norm());
            worst[1] = worst[1].max((g.normal(&q.position)? - projection.normal(&exact)).norm());
            if order > 1 {
                let h = g.mean_curvature(&q.position)?;
                worst[2] = worst[2].max((h - projection.mean_curvature(&exact)).abs());
            }
        }
        Ok(worst)
    };
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| per_element(e).map_err(|err| err.at_element(e)))
        .try_reduce(|| [0.0; 3], |a, b| Ok([a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]))
}

pub fn geometry_errors(config: &GeometryErrorsConfig) -> Result<GeometryErrors> {
    check_orders(&config.orders, 4)?;
    if config.levels.len() < 2 {
        return Err(Error::Config("need at least two refinement levels".into()));
    }
    let projection = config.geometry.projection();
    let meshes: Vec<Arc<SurfaceMesh>> = config
        .levels
        .iter()
        .map(|&l| config.geometry.refined_mesh(l, config.refinement).map(Arc::new))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for &k in &config.orders {
        let q = config.quad_degree.unwrap_or(2 * k + 2);
        let mut level_rows = Vec::new();
        for (&level, m) in config.levels.iter().zip(&meshes) {
            let [position, normal, curvature] = element_max_errors(m, &projection, k, q)?;
            level_rows.push(GeometryErrorRow {
                order: k,
                level,
                h: m.grid_width(),
                position,
                normal,
                curvature: (k > 1).then_some(curvature),
            });
        }
        let h: Vec<f64> = level_rows.iter().map(|r| r.h).collect();
        let column = |f: fn(&GeometryErrorRow) -> f64| level_rows.iter().map(f).collect::<Vec<_>>();
        slopes.push(GeometrySlopes {
            order: k,
            position: loglog_slope(&h, &column(|r| r.position)),
            normal: loglog_slope(&h, &column(|r| r.normal)),
            curvature: (k > 1).then(|| loglog_slope(&h, &column(|r| r.curvature.unwrap_or(f64::NAN)))),
        });
        rows.extend(level_rows);
    }

    let mut csv = Csv::new(
        vec![
            ("study", "geometry-errors".into()),
            ("geometry", config.geometry.describe()),
            ("orders", join(&config.orders)),
            ("levels", join(&config.levels)),
            ("refinement", format!("{:?}", config.refinement).to_lowercase()),
            ("quad_degree", config.quad_degree.map_or("2k+2".into(), |q| q.to_string())),
        ],
        &["order", "level", "h", "err_position", "err_normal", "err_curvature"],
    );
    for r in &rows {
        csv.rows.push(vec![
            r.order.to_string(),
            r.level.to_string(),
            num(r.h),
            num(r.position),
            num(r.normal),
            opt(r.curvature),
        ]);
    }
    for s in &slopes {
        csv.rows.push(vec![
            s.order.to_string(),
            "slope".into(),
            String::new(),
            num(s.position),
            num(s.normal),
            opt(s.curvature),
        ]);
    }
    Ok(GeometryErrors { rows, slopes, csv })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn check_orders(orders: &[usize], max: usize) -> Result<()> {
    if orders.is_empty() || orders.iter().any(|&k| k == 0 || k > max) {
        return Err(Error::Config(format!("orders must lie in 1..={max}")));
    }
    Ok(())
}

// vector Helmholtz

/// Tangential field on the unit sphere, the rotated surface gradient of
/// `xyz`, extended constantly along rays.
pub fn helmholtz_solution(x: &Vector3<f64>) -> Vector3<f64> {
    let p = x / x.norm();
    Vector3::new(p.x * (p.y * p.y - p.z * p.z), p.y * (p.z * p.z - p.x * p.x), p.z * (p.x * p.x - p.y * p.y))
}

/// `-div grad u + u` for [`helmholtz_solution`]; the field is an eigenfunction
/// of the vector Laplacian, see `scripts/helmholtz_load.py`.
pub fn helmholtz_load(x: &Vector3<f64>) -> Vector3<f64> {
    12.0 * helmholtz_solution(x)
}

#[derive(Debug, Clone)]
pub struct HelmholtzConfig {
    pub orders: Vec<usize>,
    pub levels: Vec<usize>,
    pub beta: f64,
    pub quad_degree: Option<usize>,
    /// Level-0 mesh; an icosahedron when unset. Vertices are projected
    /// onto the unit sphere.
    pub base_mesh: Option<Arc<SurfaceMesh>>,
    pub solver_tolerance: f64,
}

impl Default for HelmholtzConfig {
    fn default() -> Self {
        Self {
            orders: vec![1, 2, 3],
            levels: (0..=4).collect(),
            beta: 10.0,
            quad_degree: None,
            base_mesh: None,
            solver_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzRow {
    pub order: usize,
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub error: f64,
    pub eoc: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct HelmholtzResult {
    pub rows: Vec<HelmholtzRow>,
    pub csv: Csv,
}

/// Solve on one reference mesh with `r = k`. Returns the L2 error against
/// the exact solution, the number of vector unknowns and CG iterations.
pub fn helmholtz_level(
    mesh: Arc<SurfaceMesh>,
    order: usize,
    beta: f64,
    quad_degree: usize,
    tol: f64,
) -> Result<(f64, usize, usize)> {
    let sphere = SphereProjection::new(1.0);
    let h = mesh.grid_width();
    let omega = beta / (h * h);
    let cs = CurvedSurface::new(AnalyticGridFunction::from_projection(mesh.clone(), sphere), order as i32)?;
    let space = ScalarSpace::new(mesh, order)?;

    let kernel = |d: &ElementData| -> Result<LocalSystem> {
        let better = cs.parametrized_geometry(d.element, order + 1)?;
        let n_local = d.points[0].values.len();
        let mut local = LocalSystem::zeros(3 * n_local);
        let mut g = vec![Matrix3::zeros(); 3 * n_local];
        for p in &d.points {
            let n = p.normal;
            let proj = Matrix3::identity() - n * n.transpose();
            let w = d.geometry.normal_gradient(&p.local)?;
            let nt = better.normal(&p.local)?;
            let load = proj * helmholtz_load(&p.global);
            // covariant derivative of P (phi_j e_c)
            for j in 0..n_local {
                for c in 0..3 {
                    g[3 * j + c] = proj.column(c) * p.gradients[j].transpose() - w * (n[c] * p.values[j]);
                }
            }
            for i in 0..n_local {
                for c in 0..3 {
                    let a = 3 * i + c;
                    local.rhs[a] += p.weight * p.values[i] * load[c];
                    for j in 0..n_local {
                        let phi = p.values[i] * p.values[j];
                        for e in 0..3 {
                            let b = 3 * j + e;
                            let value = g[a].dot(&g[b]) + phi * proj[(c, e)] + omega * phi * nt[c] * nt[e];
                            local.matrix[(a, b)] += p.weight * value;
                        }
                    }
                }
            }
        }
        Ok(local)
    };
    let (matrix, rhs) = fem::assemble(&space, &cs, quad_degree, 3, kernel)?;
    let solution = fem::cg_solve(&matrix, &rhs, tol, 20 * rhs.len(), true)?;
    if !solution.converged {
        return Err(Error::NoConvergence { iterations: solution.iterations, residual: solution.residual });
    }

    let rule = quadrature::rule(2, quad_degree)?;
    let basis = space.basis();
    let numbering = space.numbering();
    let tabulated: Vec<Vec<f64>> = rule.iter().map(|q| basis.evaluate(&q.position)).collect();
    let squared: f64 = (0..cs.mesh().num_triangles())
        .into_par_iter()
        .map(|e| -> Result<f64> {
            let g = cs.element_geometry(e)?;
            let dofs = numbering.element(e);
            let mut sum = 0.0;
            for (q, phi) in rule.iter().zip(&tabulated) {
                let x = g.global(&q.position)?;
                let mut uh = Vector3::zeros();
                for (j, &d) in dofs.iter().enumerate() {
                    uh += phi[j] * Vector3::new(solution.x[3 * d], solution.x[3 * d + 1], solution.x[3 * d + 2]);
                }
                sum += q.weight * g.integration_element(&q.position)? * (uh - helmholtz_solution(&x)).norm_squared();
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok((squared.sqrt(), space.dofs(), solution.iterations))
}

pub fn helmholtz(config: &HelmholtzConfig) -> Result<HelmholtzResult> {
    check_orders(&config.orders, 4)?;
    if config.levels.is_empty() {
        return Err(Error::Config("need at least one refinement level".into()));
    }
    let sphere = SphereProjection::new(1.0);
    let base = match &config.base_mesh {
        Some(m) => {
            let vertices = m.vertices().iter().map(|x| sphere.project(x)).collect::<Result<_>>()?;
            SurfaceMesh::build(vertices, m.triangles().to_vec())?
        }
        None => mesh::icosahedron(1.0),
    };
    let mut rows: Vec<HelmholtzRow> = Vec::new();
    for &k in &config.orders {
        let q = config.quad_degree.unwrap_or(2 * k + 2);
        for &level in &config.levels {
            let m = Arc::new(base.refined(level, Some(&sphere))?);
            let h = m.grid_width();
            let (error, dofs, iterations) = helmholtz_level(m, k, config.beta, q, config.solver_tolerance)?;
            let eoc = rows.last().filter(|r| r.order == k).map(|r| eoc([r.h, h], [r.error, error]));
            rows.push(HelmholtzRow { order: k, level, h, dofs, error, eoc, iterations });
        }
    }
    let mut csv = Csv::new(
        vec![
            ("study", "helmholtz".into()),
            ("geometry", "sphere radius=1".into()),
            ("base_mesh", if config.base_mesh.is_some() { "file".into() } else { "icosahedron".into() }),
            ("orders", join(&config.orders)),
            ("levels", join(&config.levels)),
            ("beta", config.beta.to_string()),
            ("quad_degree", config.quad_degree.map_or("2k+2".into(), |q| q.to_string())),
            ("solver", format!("jacobi-cg tol={:e}", config.solver_tolerance)),
        ],
        &["order", "level", "h", "dofs", "l2_error", "eoc", "cg_iterations"],
    );
    for r in &rows {
        csv.rows.push(vec![
            r.order.to_string(),
            r.level.to_string(),
            num(r.h),
            (3 * r.dofs).to_string(),
            num(r.error),
            r.eoc.map_or(String::new(), |e| format!("{e:.4}")),
            r.iterations.to_string(),
        ]);
    }
    Ok(HelmholtzResult { rows, csv })
}

// mean curvature flow

#[derive(Debug, Clone)]
pub enum InitialSurface {
    Analytic(AnalyticGeometry),
    /// Nodes of a higher-order mesh file.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct McfConfig {
    pub initial: InitialSurface,
    /// Refinements of the base mesh; ignored for files.
    pub level: usize,
    /// Order of the discrete parametrization.
    pub order: usize,
    /// `0.1 h^2` when unset.
    pub tau: Option<f64>,
    pub t_end: f64,
    /// Radial amplitude `a` of `(1 + a cos(3 phi) sin^2(theta)) x`.
    pub perturbation: f64,
    pub quad_degree: Option<usize>,
    /// Directory for the VTU snapshots; none are written when unset.
    pub output: Option<PathBuf>,
    pub snapshots: usize,
    pub encoding: Encoding,
}

impl Default for McfConfig {
    fn default() -> Self {
        Self {
            initial: InitialSurface::Analytic(AnalyticGeometry::Sphere { radius: 1.0 }),
            level: 2,
            order: 2,
            tau: None,
            t_end: 0.2,
            perturbation: 0.2,
            quad_degree: None,
            output: None,
            snapshots: 10,
            encoding: Encoding::Ascii,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McfRow {
    pub step: usize,
    pub time: f64,
    pub area: f64,
    /// `∫ |X| dΓ / area`.
    pub mean_radius: f64,
}

#[derive(Debug, Clone)]
pub struct McfResult {
    pub rows: Vec<McfRow>,
    /// Reason for an early stop, after which the last state was written.
    pub stopped: Option<String>,
    pub snapshots: Vec<PathBuf>,
    pub csv: Csv,
}

/// Radial bumps with threefold symmetry around the z-axis.
pub fn perturb(x: &Vector3<f64>, amplitude: f64) -> Vector3<f64> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return *x;
    }
    let phi = x.y.atan2(x.x);
    let sin2_polar = (x.x * x.x + x.y * x.y) / r2;
    x * (1.0 + amplitude * (3.0 * phi).cos() * sin2_polar)
}

fn initial_parametrization(config: &McfConfig) -> Result<DiscreteGridViewFunction> {
    let amplitude = config.perturbation;
    match &config.initial {
        InitialSurface::Analytic(geometry) => {
            let p = geometry.projection();
            let m = Arc::new(geometry.mesh(config.level)?);
            DiscreteGridViewFunction::interpolate_global(m, config.order, |x| Ok(perturb(&p.project(x)?, amplitude)))
        }
        InitialSurface::File(path) => {
            let data = read_mesh(path)?;
            let cs = CurvedSurface::new(data, 0)?;
            let mut gf = DiscreteGridViewFunction::new(cs.mesh().clone(), config.order)?;
            let positions = gf.basis().node_positions();
            let owners = gf.numbering().owners();
            let mut values = Vec::with_capacity(owners.len());
            for (e, j) in owners {
                values.push(perturb(&cs.element_geometry(e)?.global(&positions[j])?, amplitude));
            }
            gf.set_coefficients(values)?;
            Ok(gf)
        }
    }
}

fn surface_measures(cs: &CurvedSurface<DiscreteGridViewFunction>, quad_degree: usize) -> Result<(f64, f64)> {
    let rule = quadrature::rule(2, quad_degree)?;
    let parts = (0..cs.mesh().num_triangles())
        .into_par_iter()
        .map(|e| -> Result<(f64, f64)> {
            let g = cs.element_geometry(e)?;
            let mut acc = (0.0, 0.0);
            for q in &rule {
                let w = q.weight * g.integration_element(&q.position)?;
                acc.0 += w;
                acc.1 += w * g.global(&q.position)?.norm();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let (area, radial) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((area, radial / area))
}

/// Backward Euler in position with the geometry of the previous step:
/// `(M + tau A) X_s = M X_{s-1}` on `Γ_{s-1}`.
pub fn mcf(config: &McfConfig) -> Result<McfResult> {
    if config.order == 0 || config.order > 4 {
        return Err(Error::Config("order must lie in 1..=4".into()));
    }
    if !(config.t_end > 0.0) {
        return Err(Error::Config("end time must be positive".into()));
    }
    let gf = initial_parametrization(config)?;
    let mesh = gf.mesh().clone();
    let h = mesh.grid_width();
    let tau = config.tau.unwrap_or(0.1 * h * h);
    if !(tau > 0.0) {
        return Err(Error::Config("time step must be positive".into()));
    }
    let steps = (config.t_end / tau).round().max(1.0) as usize;
    let q = config.quad_degree.unwrap_or(2 * config.order + 2);
    let space = ScalarSpace::new(mesh.clone(), config.order)?;
    let mut cs = CurvedSurface::new(gf, 0)?;
    let every = (steps / config.snapshots.max(1)).max(1);

    let mut snapshots = Vec::new();
    let mut write_snapshot = |cs: &CurvedSurface<DiscreteGridViewFunction>, step: usize| -> Result<()> {
        if let Some(dir) = &config.output {
            let path = dir.join(format!("mcf_{step:06}.vtu"));
            let data = HigherOrderMeshData::from_curved_surface(cs, config.order)?;
            io::write_vtu(&path, &data, &ParsedFieldData::default(), config.encoding)?;
            snapshots.push(path);
        }
        Ok(())
    };

    let (area, mean_radius) = surface_measures(&cs, q)?;
    let mut rows = vec![McfRow { step: 0, time: 0.0, area, mean_radius }];
    write_snapshot(&cs, 0)?;
    let min_integration_element = 1e-12 * h * h;
    let mut stopped = None;
    for step in 1..=steps {
        let kernel = |d: &ElementData| -> Result<LocalSystem> {
            let n = d.points[0].values.len();
            let mut local = LocalSystem::zeros(3 * n);
            for p in &d.points {
                if d.geometry.integration_element(&p.local)? < min_integration_element {
                    return Err(Error::DegenerateGeometry(0.0));
                }
                for i in 0..n {
                    for c in 0..3 {
                        local.rhs[3 * i + c] += p.weight * p.values[i] * p.global[c];
                    }
                    for j in 0..n {
                        let value = p.weight * (p.values[i] * p.values[j] + tau * p.gradients[i].dot(&p.gradients[j]));
                        for c in 0..3 {
                            local.matrix[(3 * i + c, 3 * j + c)] += value;
                        }
                    }
                }
            }
            Ok(local)
        };
        let solved = fem::assemble(&space, &cs, q, 3, kernel).and_then(|(matrix, rhs)| {
            let start = cs.grid_function().read_coefficients();
            fem::cg_solve_from(&matrix, &rhs, start, 1e-12, 10 * rhs.len(), true)
        });
        let solution = match solved {
            Ok(s) if s.converged => s,
            Ok(s) => {
                stopped = Some(format!("step {step}: solver stopped at residual {:e}", s.residual));
                break;
            }
            Err(e) => {
                stopped = Some(format!("step {step}: {e}"));
                break;
            }
        };
        cs.grid_function_mut().update_coefficients(&solution.x)?;
        let (area, mean_radius) = surface_measures(&cs, q)?;
        rows.push(McfRow { step, time: step as f64 * tau, area, mean_radius });
        if step % every == 0 || step == steps {
            write_snapshot(&cs, step)?;
        }
    }
    if stopped.is_some() {
        let last = rows.last().map_or(0, |r| r.step);
        write_snapshot(&cs, last)?;
    }

    let initial = match &config.initial {
        InitialSurface::Analytic(g) => g.describe(),
        InitialSurface::File(p) => format!("file {}", p.display()),
    };
    let mut csv = Csv::new(
        vec![
            ("study", "mcf".into()),
            ("initial", initial),
            ("level", config.level.to_string()),
            ("order", config.order.to_string()),
            ("tau", format!("{tau:e}")),
            ("t_end", config.t_end.to_string()),
            ("perturbation", config.perturbation.to_string()),
            ("quad_degree", q.to_string()),
        ],
        &["step", "time", "area", "mean_radius"],
    );
    for r in &rows {
        csv.rows.push(vec![r.step.to_string(), num(r.time), num(r.area), num(r.mean_radius)]);
    }
    if let Some(reason) = &stopped {
        csv.config.push(("stopped".into(), reason.clone()));
    }
    Ok(McfResult { rows, stopped, snapshots, csv })
}

// conversion

/// Read `.msh` or `.vtu` by extension.
pub fn read_mesh(path: &Path) -> Result<HigherOrderMeshData> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("msh") => io::read_msh4(path),
        Some("vtu") => Ok(io::read_vtu(path)?.0),
        _ => Err(Error::Config(format!("unknown mesh format: {}", path.display()))),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConvertConfig {
    pub order: Option<usize>,
    /// Re-interpolate onto this surface instead of the file geometry.
    pub project: Option<AnalyticGeometry>,
    pub encoding: Encoding,
}

/// Convert a mesh file to VTU. Point and cell data of a VTU input survive
/// when the order and the nodes are unchanged.
pub fn convert(input: &Path, output: &Path, config: &ConvertConfig) -> Result<()> {
    let (data, fields) = match input.extension().and_then(|e| e.to_str()) {
        Some("vtu") => io::read_vtu(input)?,
        _ => (read_mesh(input)?, ParsedFieldData::default()),
    };
    let order = config.order.unwrap_or(data.order());
    let (out, fields) = match &config.project {
        Some(geometry) => {
            let gf = AnalyticGridFunction::from_projection(data.mesh().clone(), geometry.projection());
            (
                HigherOrderMeshData::from_curved_surface(&CurvedSurface::new(gf, order as i32)?, order)?,
                Default::default(),
            )
        }
        None if order != data.order() => {
            let cs = CurvedSurface::new(data, order as i32)?;
            (HigherOrderMeshData::from_curved_surface(&cs, order)?, Default::default())
        }
        None => (data, fields),
    };
    io::write_vtu(output, &out, &fields, config.encoding)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_and_eoc() {
        let h = [1.0, 0.5, 0.25];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        assert!((loglog_slope(&h, &e) - 3.0).abs() < 1e-12);
        assert!((eoc([0.2, 0.1], [4e-2, 1e-2]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn manufactured_field_is_tangential() {
        for x in [Vector3::new(0.3, -0.5, 0.8), Vector3::new(2.0, 1.0, -1.0)] {
            let u = helmholtz_solution(&x);
            assert!(u.dot(&x).abs() < 1e-14 * x.norm());
            assert_eq!(helmholtz_load(&x), 12.0 * u);
        }
    }

    #[test]
    fn load_matches_symbolic_values() {
        // exact values printed by scripts/helmholtz_load.py
        let cases = [
            (Vector3::new(1.0, 2.0, 2.0), Vector3::new(0.0, 8.0 / 3.0, -8.0 / 3.0)),
            (Vector3::new(2.0, -3.0, 6.0), Vector3::new(-648.0, -1152.0, -360.0) / 343.0),
        ];
        for (x, f) in cases {
            assert!((helmholtz_load(&x) - f).norm() < 1e-14);
        }
    }

    #[test]
    fn perturbation_is_radial() {
        let x = Vector3::new(0.6, 0.0, 0.8);
        let y = perturb(&x, 0.2);
        assert!(y.cross(&x).norm() < 1e-15);
        assert!((y.norm() - (1.0 + 0.2 * 0.36)).abs() < 1e-15);
        assert_eq!(perturb(&Vector3::z(), 0.2), Vector3::z());
    }

    #[test]
    fn csv_is_reproducible() {
        let config = GeometryErrorsConfig {
            geometry: AnalyticGeometry::Sphere { radius: 1.0 },
            orders: vec![2],
            levels: vec![0, 1],
            refinement: Refinement::Projected,
            quad_degree: None,
        };
        let a = geometry_errors(&config).unwrap().csv.render();
        let b = geometry_errors(&config).unwrap().csv.render();
        assert_eq!(a, b);
        assert!(a.starts_with("# study = geometry-errors\n"));
        assert!(a.contains("order,level,h,err_position,err_normal,err_curvature"));
    }

    #[test]
    fn flat_elements_have_no_curvature_column() {
        let config = GeometryErrorsConfig {
            geometry: AnalyticGeometry::Sphere { radius: 1.0 },
            orders: vec![1],
            levels: vec![0, 1],
            refinement: Refinement::Projected,
            quad_degree: None,
        };
        let r = geometry_errors(&config).unwrap();
        assert!(r.rows.iter().all(|row| row.curvature.is_none()));
        assert!(r.slopes[0].curvature.is_none());
    }

    #[test]
    fn invalid_configs() {
        let mut config = GeometryErrorsConfig {
            geometry: AnalyticGeometry::Sphere { radius: 1.0 },
            orders: vec![5],
            levels: vec![0, 1],
            refinement: Refinement::Projected,
            quad_degree: None,
        };
        assert!(matches!(geometry_errors(&config), Err(Error::Config(_))));
        config.orders = vec![1];
        config.levels = vec![0];
        assert!(matches!(geometry_errors(&config), Err(Error::Config(_))));
        let mcf_config = McfConfig { tau: Some(-1.0), ..Default::default() };
        assert!(matches!(mcf(&mcf_config), Err(Error::Config(_))));
    }

    #[test]
    fn short_flow_shrinks_the_sphere() {
        let config = McfConfig { level: 1, tau: Some(1e-3), t_end: 0.01, perturbation: 0.0, ..Default::default() };
        let r = mcf(&config).unwrap();
        assert!(r.stopped.is_none());
        assert_eq!(r.rows.len(), 11);
        for w in r.rows.windows(2) {
            assert!(w[1].area < w[0].area);
        }
        let expected = (1.0f64 - 4.0 * 0.01).sqrt();
        assert!((r.rows[10].mean_radius - expected).abs() < 0.02 * expected);
    }

    #[test]
    fn conversion_reinterpolates_onto_the_sphere() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("coarse.vtu");
        let m = Arc::new(mesh::icosahedron(1.0));
        let data = HigherOrderMeshData::new(m.clone(), 1, {
            (0..m.num_triangles()).flat_map(|e| m.triangles()[e].map(|v| m.vertices()[v])).collect()
        })
        .unwrap();
        io::write_vtu(&input, &data, &ParsedFieldData::default(), Encoding::Ascii).unwrap();
        let output = dir.path().join("fine.vtu");
        let config = ConvertConfig {
            order: Some(4),
            project: Some(AnalyticGeometry::Sphere { radius: 1.0 }),
            encoding: Encoding::Base64,
        };
        convert(&input, &output, &config).unwrap();
        let (fine, _) = io::read_vtu(&output).unwrap();
        assert_eq!(fine.order(), 4);
        assert!(fine.nodes().iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));

        let again = dir.path().join("again.vtu");
        convert(&output, &again, &ConvertConfig { encoding: Encoding::Base64, ..Default::default() }).unwrap();
        assert_eq!(std::fs::read(&output).unwrap(), std::fs::read(&again).unwrap());
    }
}
