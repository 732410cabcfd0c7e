//! Curved higher-order surface meshes.
//!
//! A flat reference triangulation plus a coordinate mapping (an analytic
//! closest-point projection, an interpolated Lagrange function, or the nodes
//! of a higher-order mesh file) define a piece-wise polynomial or exact curved
//! surface. Every element geometry exposes the quantities needed by surface
//! finite elements: Jacobians, integration elements, normals and mean
//! curvature.
//!
//! Module overview:
//!
//! * [`reference`]: reference triangle/segment and the affine sub-entity maps.
//! * [`lagrange`]: Lagrange simplex bases up to order 6.
//! * [`quadrature`]: collapsed Gauss rules on the triangle and segment.
//! * [`mesh`]: flat reference mesh, topology, refinement, mesh generators.
//! * [`projections`]: closest-point maps onto sphere, ellipsoid, torus,
//!   implicit level sets and fine triangle meshes.
//! * [`gridfunctions`]: analytic and discrete grid functions with the
//!   bind/unbind local-function protocol.
//! * [`geometry`]: curved element geometries and the [`geometry::CurvedSurface`] facade.
//! * [`io`]: MSH 4.1 reader and VTK XML (.vtu) Lagrange writer/reader.
//! * [`fem`]: Lagrange spaces, CSR assembly and conjugate gradients.
//! * [`studies`]: the geometric error, vector Helmholtz and mean curvature flow
//!   studies driven by the `curvedsurf` binary.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod gridfunctions;
pub mod io;
pub mod lagrange;
pub mod mesh;
pub mod projections;
pub mod quadrature;
pub mod reference;
pub mod studies;

pub use error::{Error, Result};

pub use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Vector2, Vector3};
