//! Reference elements and the affine local geometries that embed a
//! sub-entity's reference element into its element's reference element.
//!
//! Edge numbering of the reference triangle, used throughout the crate:
//!
//! | edge | corners  |
//! |------|----------|
//! | 0    | (v0, v1) |
//! | 1    | (v0, v2) |
//! | 2    | (v1, v2) |
//!
//! An edge is parametrized from its first listed corner (t = 0) to its second
//! (t = 1).

use nalgebra::{DMatrix, DVector, Vector2};

use crate::{Error, Result};

/// Corner pairs of the three triangle edges.
pub const TRIANGLE_EDGES: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];

/// Corner coordinates of the reference triangle.
pub const TRIANGLE_CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    dim: usize,
    corners: Vec<Vec<f64>>,
    /// `sub_entities[codim]` lists the corner indices of each sub-entity.
    sub_entities: Vec<Vec<Vec<usize>>>,
}

impl ReferenceElement {
    pub fn triangle() -> Self {
        Self {
            dim: 2,
            corners: TRIANGLE_CORNERS.iter().map(|c| c.to_vec()).collect(),
            sub_entities: vec![
                vec![vec![0, 1, 2]],
                TRIANGLE_EDGES.iter().map(|e| e.to_vec()).collect(),
                vec![vec![0], vec![1], vec![2]],
            ],
        }
    }

    pub fn segment() -> Self {
        Self {
            dim: 1,
            corners: vec![vec![0.0], vec![1.0]],
            sub_entities: vec![vec![vec![0, 1]], vec![vec![0], vec![1]]],
        }
    }

    pub fn point() -> Self {
        Self { dim: 0, corners: vec![vec![]], sub_entities: vec![vec![vec![0]]] }
    }

    pub fn of_dim(dim: usize) -> Result<Self> {
        match dim {
            0 => Ok(Self::point()),
            1 => Ok(Self::segment()),
            2 => Ok(Self::triangle()),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sub-entities of the given codimension.
    pub fn size(&self, codim: usize) -> usize {
        self.sub_entities.get(codim).map_or(0, Vec::len)
    }

    pub fn corner(&self, i: usize) -> &[f64] {
        &self.corners[i]
    }

    pub fn sub_entity_corners(&self, codim: usize, index: usize) -> &[usize] {
        &self.sub_entities[codim][index]
    }

    /// Barycenter of the element.
    pub fn center(&self) -> Vec<f64> {
        let n = self.corners.len() as f64;
        (0..self.dim).map(|d| self.corners.iter().map(|c| c[d]).sum::<f64>() / n).collect()
    }

    /// Measure of the element (1/2 for the triangle, 1 for the segment).
    pub fn volume(&self) -> f64 {
        match self.dim {
            2 => 0.5,
            _ => 1.0,
        }
    }
}

/// Affine map `x -> origin + jt^T x` from a `domain_dim`-dimensional reference
/// element into `range_dim` reference coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGeometry {
    origin: DVector<f64>,
    jt: DMatrix<f64>,
}

impl LocalGeometry {
    pub fn new(origin: DVector<f64>, jacobian_transposed: DMatrix<f64>) -> Self {
        assert_eq!(origin.len(), jacobian_transposed.ncols());
        Self { origin, jt: jacobian_transposed }
    }

    /// Segment map between two reference-triangle points.
    fn segment_between(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { origin: DVector::from_column_slice(&a), jt: DMatrix::from_row_slice(1, 2, &[b[0] - a[0], b[1] - a[1]]) }
    }

    pub fn domain_dim(&self) -> usize {
        self.jt.nrows()
    }

    pub fn range_dim(&self) -> usize {
        self.jt.ncols()
    }

    pub fn global(&self, local: &[f64]) -> DVector<f64> {
        assert_eq!(local.len(), self.domain_dim());
        &self.origin + self.jt.transpose() * DVector::from_column_slice(local)
    }

    /// Image of a point for maps into the reference triangle.
    pub fn global2(&self, local: &[f64]) -> Vector2<f64> {
        let g = self.global(local);
        Vector2::new(g[0], g[1])
    }

    pub fn jacobian_transposed(&self) -> &DMatrix<f64> {
        &self.jt
    }
}

/// The identity map of the `dim`-dimensional reference element.
pub fn identity_local_geometry(dim: usize) -> Result<LocalGeometry> {
    match dim {
        1 | 2 => Ok(LocalGeometry { origin: DVector::zeros(dim), jt: DMatrix::identity(dim, dim) }),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Map from the reference segment onto edge `edge_index` of the reference
/// triangle, from its first to its second corner.
pub fn edge_local_geometry(reference: &ReferenceElement, edge_index: usize) -> Result<LocalGeometry> {
    if reference.dim() != 2 {
        return Err(Error::UnsupportedDimension(reference.dim()));
    }
    oriented_edge_local_geometry(edge_index, false)
}

/// Like [`edge_local_geometry`], optionally running the edge backwards.
pub fn oriented_edge_local_geometry(edge_index: usize, reversed: bool) -> Result<LocalGeometry> {
    let [a, b] =
        *TRIANGLE_EDGES.get(edge_index).ok_or(Error::IndexOutOfRange { what: "edge", index: edge_index, len: 3 })?;
    let (a, b) = if reversed { (b, a) } else { (a, b) };
    Ok(LocalGeometry::segment_between(TRIANGLE_CORNERS[a], TRIANGLE_CORNERS[b]))
}
