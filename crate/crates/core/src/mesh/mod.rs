//! The flat reference triangulation: storage, topology, element maps,
//! intersections, uniform refinement and global Lagrange node numbering.

mod builders;

pub use builders::{ellipsoid, icosahedron, implicit_surface, octahedron, tetrahedron, torus, unit_triangle};

use std::collections::HashMap;

use nalgebra::{Matrix2x3, Vector2, Vector3};

use crate::lagrange::{self, NodeKind};
use crate::projections::Projection;
use crate::reference::{oriented_edge_local_geometry, LocalGeometry, TRIANGLE_EDGES};
use crate::{Error, Result};

/// Index-based triangle surface mesh with derived edge and vertex adjacency.
///
/// Invariants checked by [`SurfaceMesh::build`]: indices in range, positive
/// triangle areas, at most two triangles per edge, and opposite traversal of
/// every interior edge by its two triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<Vec<(usize, usize)>>,
    vertex_triangles: Vec<Vec<usize>>,
}

/// Affine map from the reference triangle onto a flat mesh triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatElementGeometry {
    pub corners: [Vector3<f64>; 3],
}

impl FlatElementGeometry {
    pub fn new(corners: [Vector3<f64>; 3]) -> Self {
        Self { corners }
    }

    pub fn global(&self, local: &Vector2<f64>) -> Vector3<f64> {
        let [v0, v1, v2] = &self.corners;
        v0 + (v1 - v0) * local.x + (v2 - v0) * local.y
    }

    /// Rows `v1 - v0` and `v2 - v0`.
    pub fn jacobian_transposed(&self) -> Matrix2x3<f64> {
        let [v0, v1, v2] = &self.corners;
        Matrix2x3::from_rows(&[(v1 - v0).transpose(), (v2 - v0).transpose()])
    }

    pub fn integration_element(&self) -> f64 {
        let [v0, v1, v2] = &self.corners;
        (v1 - v0).cross(&(v2 - v0)).norm()
    }

    pub fn area(&self) -> f64 {
        0.5 * self.integration_element()
    }
}

/// One edge of an element seen from that element.
#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub local_edge: usize,
    pub edge: usize,
    /// Neighbor triangle and its local edge index; `None` on the boundary.
    pub outside: Option<(usize, usize)>,
    /// Segment map into this element's reference triangle.
    pub geometry_in_inside: LocalGeometry,
    /// Segment map into the neighbor's reference triangle.
    pub geometry_in_outside: Option<LocalGeometry>,
}

impl Intersection {
    pub fn is_boundary(&self) -> bool {
        self.outside.is_none()
    }
}

/// Global vertex a triangle's local edge starts from when walking the
/// triangle's corners cyclically.
fn traversal_start(tri: &[usize; 3], local_edge: usize) -> usize {
    match local_edge {
        0 => tri[0],
        1 => tri[2],
        _ => tri[1],
    }
}

impl SurfaceMesh {
    pub fn build(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for tri in &triangles {
            for &v in tri {
                if v >= nv {
                    return Err(Error::IndexOutOfRange { what: "vertex", index: v, len: nv });
                }
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            let geo = FlatElementGeometry::new(tri.map(|v| vertices[v]));
            let scale = TRIANGLE_EDGES
                .iter()
                .map(|&[a, b]| (geo.corners[a] - geo.corners[b]).norm_squared())
                .fold(0.0, f64::max);
            let degenerate = tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2];
            if degenerate || geo.integration_element() <= 1e-14 * scale {
                return Err(Error::DegenerateTriangle { triangle: t, vertices: *tri });
            }
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (le, &[a, b]) in TRIANGLE_EDGES.iter().enumerate() {
                let key = sorted_pair(tri[a], tri[b]);
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push(Vec::new());
                    edges.len() - 1
                });
                edge_triangles[id].push((t, le));
                te[le] = id;
            }
            triangle_edges.push(te);
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }
        for (id, adj) in edge_triangles.iter().enumerate() {
            let [a, b] = edges[id];
            if adj.len() > 2 {
                return Err(Error::NonManifoldEdge(a, b, adj.len()));
            }
            if let [(t0, e0), (t1, e1)] = adj[..] {
                if traversal_start(&triangles[t0], e0) == traversal_start(&triangles[t1], e1) {
                    return Err(Error::InconsistentOrientation(t0, t1, a, b));
                }
            }
        }
        Ok(Self { vertices, triangles, edges, triangle_edges, edge_triangles, vertex_triangles })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Unique edges as `[lo, hi]` global vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge ids of a triangle's local edges.
    pub fn triangle_edges(&self, element: usize) -> [usize; 3] {
        self.triangle_edges[element]
    }

    /// `(triangle, local edge)` pairs incident to an edge.
    pub fn edge_triangles(&self, edge: usize) -> &[(usize, usize)] {
        &self.edge_triangles[edge]
    }

    pub fn vertex_triangles(&self, vertex: usize) -> &[usize] {
        &self.vertex_triangles[vertex]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edge_triangles.iter().filter(|a| a.len() == 1).count()
    }

    pub fn is_closed(&self) -> bool {
        self.num_boundary_edges() == 0
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn element_geometry(&self, element: usize) -> FlatElementGeometry {
        FlatElementGeometry::new(self.triangles[element].map(|v| self.vertices[v]))
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|e| self.element_geometry(e).area()).sum()
    }

    /// Longest edge length.
    pub fn grid_width(&self) -> f64 {
        self.edges.iter().map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm()).fold(0.0, f64::max)
    }

    /// Intersections of an element with its neighbors and the boundary.
    ///
    /// Both sides parametrize a shared edge from its lower to its higher
    /// global vertex index, so `mu_inside(eta_inside(t)) == mu_outside(eta_outside(t))`.
    pub fn intersections(&self, element: usize) -> Vec<Intersection> {
        (0..3)
            .map(|le| {
                let edge = self.triangle_edges[element][le];
                let reversed_in = |t: usize, e: usize| {
                    let [a, b] = TRIANGLE_EDGES[e];
                    let tri = &self.triangles[t];
                    tri[a] > tri[b]
                };
                let outside = self.edge_triangles[edge].iter().copied().find(|&(t, _)| t != element);
                Intersection {
                    local_edge: le,
                    edge,
                    outside,
                    geometry_in_inside: oriented_edge_local_geometry(le, reversed_in(element, le))
                        .expect("local edge in range"),
                    geometry_in_outside: outside
                        .map(|(t, e)| oriented_edge_local_geometry(e, reversed_in(t, e)).expect("local edge in range")),
                }
            })
            .collect()
    }

    /// Red refinement: every triangle splits into four through its edge
    /// midpoints. New vertex `V + edge` is the midpoint of `edge`, replaced by
    /// its projection when one is given.
    pub fn refine_uniform(&self, projection: Option<&dyn Projection>) -> Result<Self> {
        let nv = self.num_vertices();
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.num_edges());
        for &[a, b] in &self.edges {
            let mid = (self.vertices[a] + self.vertices[b]) * 0.5;
            vertices.push(match projection {
                Some(p) => p.project(&mid)?,
                None => mid,
            });
        }
        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [e0, e1, e2] = self.triangle_edges[t];
            let (ab, ac, bc) = (nv + e0, nv + e1, nv + e2);
            triangles.push([a, ab, ac]);
            triangles.push([ab, b, bc]);
            triangles.push([ac, bc, c]);
            triangles.push([ab, bc, ac]);
        }
        Self::build(vertices, triangles)
    }

    /// Apply `refine_uniform` `levels` times.
    pub fn refined(&self, levels: usize, projection: Option<&dyn Projection>) -> Result<Self> {
        let mut mesh = self.clone();
        for _ in 0..levels {
            mesh = mesh.refine_uniform(projection)?;
        }
        Ok(mesh)
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Global enumeration of the order-`k` Lagrange nodes of a mesh: vertices
/// first, then `k-1` nodes per edge running from the edge's lower to its
/// higher vertex index, then the interior nodes of each element.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeNumbering {
    order: usize,
    local_size: usize,
    count: usize,
    indices: Vec<usize>,
}

impl LagrangeNumbering {
    pub fn new(mesh: &SurfaceMesh, order: usize) -> Result<Self> {
        let nodes = lagrange::LagrangeBasis::triangle(order)?.nodes().to_vec();
        let nv = mesh.num_vertices();
        let per_edge = order - 1;
        let ne = mesh.num_edges();
        let n_int = lagrange::interior_count(order);
        let mut indices = Vec::with_capacity(nodes.len() * mesh.num_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let tedges = mesh.triangle_edges(t);
            for node in &nodes {
                let g = match node.kind {
                    NodeKind::Vertex(c) => tri[c],
                    NodeKind::Edge { edge, step } => {
                        let [a, b] = TRIANGLE_EDGES[edge];
                        let pos = if tri[a] < tri[b] { step - 1 } else { order - 1 - step };
                        nv + tedges[edge] * per_edge + pos
                    }
                    NodeKind::Interior(m) => nv + ne * per_edge + t * n_int + m,
                };
                indices.push(g);
            }
        }
        Ok(Self { order, local_size: nodes.len(), count: nv + ne * per_edge + mesh.num_triangles() * n_int, indices })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of global nodes.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn local_size(&self) -> usize {
        self.local_size
    }

    /// Global indices of an element's nodes in canonical local order.
    pub fn element(&self, element: usize) -> &[usize] {
        &self.indices[element * self.local_size..(element + 1) * self.local_size]
    }

    pub fn num_elements(&self) -> usize {
        self.indices.len() / self.local_size.max(1)
    }

    /// For every global node, one `(element, local index)` that carries it.
    pub fn owners(&self) -> Vec<(usize, usize)> {
        let mut owner = vec![(usize::MAX, 0); self.count];
        for e in 0..self.num_elements() {
            for (j, &g) in self.element(e).iter().enumerate() {
                if owner[g].0 == usize::MAX {
                    owner[g] = (e, j);
                }
            }
        }
        owner
    }
}
