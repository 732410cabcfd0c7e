//! Higher-order surface mesh files: a Gmsh MSH 4.1 reader and a VTK XML
//! (`.vtu`) writer and reader with Lagrange triangle cells.

mod msh;
pub mod ordering;
mod vtu;

pub use msh::{parse_msh4, read_msh4};
pub use vtu::{parse_vtu, read_vtu, vtu_string, write_vtu, Encoding};

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::geometry::{CurvedSurface, SurfaceGeometry};
use crate::gridfunctions::{self, GridFunction, LocalFunction};
use crate::lagrange::LagrangeBasis;
use crate::mesh::{LagrangeNumbering, SurfaceMesh};
use crate::{Error, Result};

/// A reference mesh of corner vertices with the Lagrange nodes of every
/// element, in canonical local order.
#[derive(Debug, Clone)]
pub struct HigherOrderMeshData {
    mesh: Arc<SurfaceMesh>,
    basis: Arc<LagrangeBasis>,
    nodes: Vec<Vector3<f64>>,
}

impl HigherOrderMeshData {
    /// `nodes` holds `(k+1)(k+2)/2` points per element, element by element.
    /// Corner nodes must coincide with the mesh vertices.
    pub fn new(mesh: Arc<SurfaceMesh>, order: usize, nodes: Vec<Vector3<f64>>) -> Result<Self> {
        let basis = Arc::new(LagrangeBasis::triangle(order)?);
        let expected = basis.size() * mesh.num_triangles();
        if nodes.len() != expected {
            return Err(Error::LengthMismatch { expected, got: nodes.len() });
        }
        for (e, tri) in mesh.triangles().iter().enumerate() {
            for (c, &v) in tri.iter().enumerate() {
                let node = nodes[e * basis.size() + c];
                let vertex = mesh.vertices()[v];
                if (node - vertex).norm() > 1e-12 * (1.0 + vertex.norm()) {
                    return Err(Error::Format(format!("element {e}: corner node {c} does not match vertex {v}")));
                }
            }
        }
        Ok(Self { mesh, basis, nodes })
    }

    /// Sample a curved surface at the Lagrange nodes of `order`. Nodes
    /// shared between elements take the value from one owning element, so
    /// the mesh vertices are the curved corner images.
    pub fn from_curved_surface<G: GridFunction>(surface: &CurvedSurface<G>, order: usize) -> Result<Self> {
        let mesh = surface.mesh();
        let basis = Arc::new(LagrangeBasis::triangle(order)?);
        let numbering = LagrangeNumbering::new(mesh, order)?;
        let positions = basis.node_positions();
        let mut values: Vec<Option<Vector3<f64>>> = vec![None; numbering.len()];
        for e in 0..mesh.num_triangles() {
            let geometry = surface.element_geometry(e).map_err(|err| err.at_element(e))?;
            for (j, &g) in numbering.element(e).iter().enumerate() {
                if values[g].is_none() {
                    values[g] = Some(geometry.global(&positions[j]).map_err(|err| err.at_element(e))?);
                }
            }
        }
        let values: Vec<Vector3<f64>> = values.into_iter().map(|v| v.expect("every node owned")).collect();
        let nodes = (0..mesh.num_triangles())
            .flat_map(|e| numbering.element(e).iter().map(|&g| values[g]).collect::<Vec<_>>())
            .collect();
        let curved = SurfaceMesh::build(values[..mesh.num_vertices()].to_vec(), mesh.triangles().to_vec())?;
        Self::new(Arc::new(curved), order, nodes)
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

    /// Lagrange nodes of one element in canonical order.
    pub fn element_nodes(&self, element: usize) -> &[Vector3<f64>] {
        let n = self.basis.size();
        &self.nodes[element * n..(element + 1) * n]
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    /// The element-wise Lagrange expansion of the file nodes as a grid
    /// function over the corner mesh.
    pub fn as_grid_function(&self) -> &Self {
        self
    }

    /// One value per global node of [`LagrangeNumbering`] for this order,
    /// taken from an owning element.
    pub(crate) fn global_nodes(&self) -> Result<(LagrangeNumbering, Vec<Vector3<f64>>)> {
        let numbering = LagrangeNumbering::new(&self.mesh, self.order())?;
        let mut values = vec![Vector3::zeros(); numbering.len()];
        for (g, (e, j)) in numbering.owners().into_iter().enumerate() {
            values[g] = self.element_nodes(e)[j];
        }
        Ok((numbering, values))
    }
}

impl GridFunction for HigherOrderMeshData {
    fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    fn local_function(&self) -> Box<dyn LocalFunction + '_> {
        gridfunctions::coefficient_local(&self.mesh, &self.basis, move |e, out| {
            out.extend_from_slice(self.element_nodes(e));
            Ok(())
        })
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

/// A named data array with `components` values per point or cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub components: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { components: 1, values }
    }

    pub fn vectors(values: &[Vector3<f64>]) -> Self {
        Self { components: 3, values: values.iter().flat_map(|v| v.iter().copied()).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.components.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Point and cell data arrays by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedFieldData {
    pub point_data: BTreeMap<String, Field>,
    pub cell_data: BTreeMap<String, Field>,
}

impl ParsedFieldData {
    pub fn is_empty(&self) -> bool {
        self.point_data.is_empty() && self.cell_data.is_empty()
    }

    pub(crate) fn check(&self, points: usize, cells: usize) -> Result<()> {
        for (kind, fields, n) in [("point", &self.point_data, points), ("cell", &self.cell_data, cells)] {
            for (name, f) in fields {
                if f.components == 0 || f.values.len() != n * f.components {
                    return Err(Error::Format(format!(
                        "{kind} field {name:?}: {} values for {n} entries with {} components",
                        f.values.len(),
                        f.components
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Split `nodes` (one array per element) into corner vertices numbered by
/// ascending node id and triangles.
pub(crate) fn corner_mesh(
    elements: &[Vec<u64>],
    coordinates: impl Fn(u64) -> Result<Vector3<f64>>,
) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>)> {
    let mut ids: BTreeMap<u64, usize> = elements.iter().flat_map(|e| e[..3].iter().map(|&t| (t, 0))).collect();
    let mut vertices = Vec::with_capacity(ids.len());
    for (i, (&tag, slot)) in ids.iter_mut().enumerate() {
        *slot = i;
        vertices.push(coordinates(tag)?);
    }
    let triangles = elements.iter().map(|e| [ids[&e[0]], ids[&e[1]], ids[&e[2]]]).collect();
    Ok((vertices, triangles))
}
