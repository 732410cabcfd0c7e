//! C ABI over `curvedsurf`: read MSH 4.1 and VTU meshes, build interpolated
//! sphere meshes, query and write them.
//!
//! Every function returns a [`CsStatus`]; on failure the message is available
//! from [`cs_last_error_message`] on the same thread. Meshes are opaque
//! [`CsMesh`] handles released with [`cs_mesh_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use curvedsurf::geometry::CurvedSurface;
use curvedsurf::gridfunctions::AnalyticGridFunction;
use curvedsurf::io::{self, Encoding, HigherOrderMeshData, ParsedFieldData};
use curvedsurf::mesh;
use curvedsurf::projections::SphereProjection;
use curvedsurf::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidString = 2,
    Io = 3,
    Parse = 4,
    InvalidMesh = 5,
    Geometry = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// A higher-order triangle mesh with the point and cell data read with it.
pub struct CsMesh {
    data: HigherOrderMeshData,
    fields: ParsedFieldData,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsMeshInfo {
    pub order: usize,
    pub num_vertices: usize,
    pub num_elements: usize,
    /// Lagrange nodes per element, `(order + 1)(order + 2) / 2`.
    pub nodes_per_element: usize,
    pub num_point_fields: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match root(&e) {
            Error::Io(_) => CsStatus::Io,
            Error::Parse { .. } | Error::Format(_) => CsStatus::Parse,
            Error::DegenerateTriangle { .. } | Error::NonManifoldEdge(..) | Error::InconsistentOrientation(..) => {
                CsStatus::InvalidMesh
            }
            Error::UndefinedProjection(_)
            | Error::VanishingGradient(_)
            | Error::DegenerateGeometry(_)
            | Error::NoConvergence { .. }
            | Error::NotDifferentiable => CsStatus::Geometry,
            _ => CsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Element { source, .. } => root(source),
        other => other,
    }
}

fn fail<T>(status: CsStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CsStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(CsStatus::Panic, message)
    });
    match outcome {
        Ok(()) => CsStatus::Ok,
        Err(Failure(status, message)) => {
            let message = CString::new(message.replace('\0', " ")).expect("interior NUL removed");
            LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
            status
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return fail(CsStatus::NullArgument, "path is null");
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(CsStatus::InvalidString, "path is not valid UTF-8"),
    }
}

unsafe fn mesh_arg<'a>(mesh: *const CsMesh) -> Result<&'a CsMesh, Failure> {
    mesh.as_ref().map_or_else(|| fail(CsStatus::NullArgument, "mesh is null"), Ok)
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(CsStatus::NullArgument, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |m| m.as_ptr()))
}

/// Read a `.msh` (MSH 4.1 ASCII) or `.vtu` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_read(path: *const c_char, out: *mut *mut CsMesh) -> CsStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return fail(CsStatus::NullArgument, "output pointer is null");
        }
        let read = match path.extension().and_then(|e| e.to_str()) {
            Some("msh") => io::read_msh4(&path).map(|data| (data, ParsedFieldData::default())),
            Some("vtu") => io::read_vtu(&path),
            _ => return fail(CsStatus::InvalidArgument, format!("unknown mesh format: {}", path.display())),
        };
        let (data, fields) = read.map_err(|e| {
            let Failure(status, message) = e.into();
            Failure(status, format!("{}: {message}", path.display()))
        })?;
        store(out, Box::into_raw(Box::new(CsMesh { data, fields })))
    })
}

/// Icosahedral sphere mesh after `level` projected refinements, with
/// order-`order` nodes on the sphere.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_sphere(radius: f64, level: usize, order: usize, out: *mut *mut CsMesh) -> CsStatus {
    guard(|| {
        if !(radius > 0.0 && radius.is_finite()) {
            return fail(CsStatus::InvalidArgument, format!("radius must be positive, got {radius}"));
        }
        let projection = SphereProjection::new(radius);
        let flat = Arc::new(mesh::icosahedron(radius).refined(level, Some(&projection))?);
        let surface = CurvedSurface::new(AnalyticGridFunction::from_projection(flat, projection), order as i32)?;
        let data = HigherOrderMeshData::from_curved_surface(&surface, order)?;
        store(out, Box::into_raw(Box::new(CsMesh { data, fields: ParsedFieldData::default() })))
    })
}

/// Write the mesh and its point and cell data as VTU; `binary` selects
/// appended base64 arrays instead of ascii.
///
/// # Safety
/// `mesh` must come from this library and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_write_vtu(mesh: *const CsMesh, path: *const c_char, binary: bool) -> CsStatus {
    guard(|| {
        let mesh = mesh_arg(mesh)?;
        let path = path_arg(path)?;
        let encoding = if binary { Encoding::Base64 } else { Encoding::Ascii };
        io::write_vtu(&path, &mesh.data, &mesh.fields, encoding)?;
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library and `info` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_info(mesh: *const CsMesh, info: *mut CsMeshInfo) -> CsStatus {
    guard(|| {
        let mesh = mesh_arg(mesh)?;
        let order = mesh.data.order();
        store(
            info,
            CsMeshInfo {
                order,
                num_vertices: mesh.data.mesh().num_vertices(),
                num_elements: mesh.data.mesh().num_triangles(),
                nodes_per_element: (order + 1) * (order + 2) / 2,
                num_point_fields: mesh.fields.point_data.len(),
            },
        )
    })
}

/// Copy the nodes of `element` as `x, y, z` triples into `out`, which holds
/// `len` doubles. Corners come first, then the edge nodes of the edges
/// (v0, v1), (v0, v2), (v1, v2), then interior nodes.
///
/// # Safety
/// `mesh` must come from this library and `out` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_element_nodes(
    mesh: *const CsMesh,
    element: usize,
    out: *mut f64,
    len: usize,
) -> CsStatus {
    guard(|| {
        let mesh = mesh_arg(mesh)?;
        let count = mesh.data.mesh().num_triangles();
        if element >= count {
            return fail(CsStatus::InvalidArgument, format!("element {element} out of range ({count} elements)"));
        }
        let nodes = mesh.data.element_nodes(element);
        if len < 3 * nodes.len() {
            return fail(CsStatus::InvalidArgument, format!("buffer holds {len} values, need {}", 3 * nodes.len()));
        }
        if out.is_null() {
            return fail(CsStatus::NullArgument, "output pointer is null");
        }
        let buffer = std::slice::from_raw_parts_mut(out, 3 * nodes.len());
        for (chunk, p) in buffer.chunks_exact_mut(3).zip(nodes) {
            chunk.copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// Surface area of the curved mesh by quadrature of degree `quad_degree`.
///
/// # Safety
/// `mesh` must come from this library and `area` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_area(mesh: *const CsMesh, quad_degree: usize, area: *mut f64) -> CsStatus {
    guard(|| {
        let mesh = mesh_arg(mesh)?;
        let surface = CurvedSurface::new(mesh.data.clone(), mesh.data.order() as i32)?;
        store(area, surface.area(quad_degree)?)
    })
}

/// Release a mesh; null is ignored.
///
/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_mesh_free(mesh: *mut CsMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}
