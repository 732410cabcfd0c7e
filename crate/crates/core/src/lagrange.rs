//! Lagrange bases on the reference simplex.
//!
//! Nodes sit on the equispaced lattice `x = (i/k, j/k)`. Each shape function
//! is written as a product of univariate factors in the barycentric
//! coordinates of its lattice point, which gives the nodal property by
//! construction and closed-form first and second derivatives.
//!
//! Canonical node order (used by every element-local coefficient vector in
//! the crate): the corners, then `k-1` nodes per edge in reference edge order
//! (see [`crate::reference`]) running from the edge's first to its second
//! corner, then interior nodes row by row (`j` outer, `i` inner).

use nalgebra::{Matrix2, Vector2};

use crate::{Error, Result};

pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Vertex(usize),
    /// `step` in `1..k`, counted from the edge's first corner.
    Edge {
        edge: usize,
        step: usize,
    },
    Interior(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagrangeNode {
    /// Lattice coordinates; the reference position is `lattice / k`.
    pub lattice: [usize; 2],
    pub kind: NodeKind,
}

/// Canonical node list of the order-`order` triangle.
pub fn triangle_nodes(order: usize) -> Vec<LagrangeNode> {
    let k = order;
    let mut nodes = vec![
        LagrangeNode { lattice: [0, 0], kind: NodeKind::Vertex(0) },
        LagrangeNode { lattice: [k, 0], kind: NodeKind::Vertex(1) },
        LagrangeNode { lattice: [0, k], kind: NodeKind::Vertex(2) },
    ];
    for edge in 0..3 {
        for step in 1..k {
            let lattice = match edge {
                0 => [step, 0],
                1 => [0, step],
                _ => [k - step, step],
            };
            nodes.push(LagrangeNode { lattice, kind: NodeKind::Edge { edge, step } });
        }
    }
    let mut m = 0;
    for j in 1..k {
        for i in 1..k.saturating_sub(j) {
            nodes.push(LagrangeNode { lattice: [i, j], kind: NodeKind::Interior(m) });
            m += 1;
        }
    }
    nodes
}

fn segment_nodes(order: usize) -> Vec<LagrangeNode> {
    let mut nodes = vec![
        LagrangeNode { lattice: [0, 0], kind: NodeKind::Vertex(0) },
        LagrangeNode { lattice: [order, 0], kind: NodeKind::Vertex(1) },
    ];
    for i in 1..order {
        nodes.push(LagrangeNode { lattice: [i, 0], kind: NodeKind::Interior(i - 1) });
    }
    nodes
}

/// Number of interior nodes of an order-`order` triangle.
pub fn interior_count(order: usize) -> usize {
    if order < 3 {
        0
    } else {
        (order - 1) * (order - 2) / 2
    }
}

/// Lagrange basis of order `k` on the reference segment (`dim = 1`) or
/// triangle (`dim = 2`). One-dimensional bases read only the first component
/// of their argument and report the second derivative component as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis {
    order: usize,
    dim: usize,
    nodes: Vec<LagrangeNode>,
    /// Barycentric multi-index of each node, `(k - i - j, i, j)`.
    multi: Vec<[usize; 3]>,
}

/// Value, first and second derivative of `prod_{s<a} (k*l - s)/(s+1)`.
fn univariate(order: usize, a: usize, l: f64) -> [f64; 3] {
    let k = order as f64;
    let (mut v, mut d1, mut d2) = (1.0, 0.0, 0.0);
    for s in 0..a {
        let scale = 1.0 / (s as f64 + 1.0);
        let g = (k * l - s as f64) * scale;
        let dg = k * scale;
        d2 = d2 * g + 2.0 * d1 * dg;
        d1 = d1 * g + v * dg;
        v *= g;
    }
    [v, d1, d2]
}

const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl LagrangeBasis {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder { order, min: 1, max: MAX_ORDER });
        }
        let nodes = match dim {
            1 => segment_nodes(order),
            2 => triangle_nodes(order),
            d => return Err(Error::UnsupportedDimension(d)),
        };
        let multi = nodes.iter().map(|n| [order - n.lattice[0] - n.lattice[1], n.lattice[0], n.lattice[1]]).collect();
        Ok(Self { order, dim, nodes, multi })
    }

    pub fn triangle(order: usize) -> Result<Self> {
        Self::new(2, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[LagrangeNode] {
        &self.nodes
    }

    pub fn node_position(&self, j: usize) -> Vector2<f64> {
        let [i, jj] = self.nodes[j].lattice;
        let k = self.order as f64;
        Vector2::new(i as f64 / k, jj as f64 / k)
    }

    pub fn node_positions(&self) -> Vec<Vector2<f64>> {
        (0..self.size()).map(|j| self.node_position(j)).collect()
    }

    fn barycentric(&self, x: &Vector2<f64>) -> [f64; 3] {
        match self.dim {
            1 => [1.0 - x[0], x[0], 0.0],
            _ => [1.0 - x[0] - x[1], x[0], x[1]],
        }
    }

    fn factors(&self, x: &Vector2<f64>) -> impl Iterator<Item = [[f64; 3]; 3]> + '_ {
        let lambda = self.barycentric(x);
        self.multi.iter().map(move |alpha| {
            [
                univariate(self.order, alpha[0], lambda[0]),
                univariate(self.order, alpha[1], lambda[1]),
                univariate(self.order, alpha[2], lambda[2]),
            ]
        })
    }

    fn bary_grad(&self, m: usize) -> Vector2<f64> {
        match (self.dim, m) {
            (1, 0) => Vector2::new(-1.0, 0.0),
            (1, 1) => Vector2::new(1.0, 0.0),
            (1, _) => Vector2::zeros(),
            _ => Vector2::from(BARY_GRAD[m]),
        }
    }

    pub fn evaluate(&self, x: &Vector2<f64>) -> Vec<f64> {
        self.factors(x).map(|f| f[0][0] * f[1][0] * f[2][0]).collect()
    }

    /// Gradients with respect to reference coordinates.
    pub fn gradients(&self, x: &Vector2<f64>) -> Vec<Vector2<f64>> {
        self.factors(x)
            .map(|f| {
                let mut g = Vector2::zeros();
                for m in 0..3 {
                    let others: f64 = (0..3).filter(|&o| o != m).map(|o| f[o][0]).product();
                    g += self.bary_grad(m) * (f[m][1] * others);
                }
                g
            })
            .collect()
    }

    pub fn hessians(&self, x: &Vector2<f64>) -> Vec<Matrix2<f64>> {
        self.factors(x)
            .map(|f| {
                let mut h = Matrix2::zeros();
                for m in 0..3 {
                    for n in 0..3 {
                        let d2 = if m == n {
                            f[m][2] * (0..3).filter(|&o| o != m).map(|o| f[o][0]).product::<f64>()
                        } else {
                            let rest = 3 - m - n;
                            f[m][1] * f[n][1] * f[rest][0]
                        };
                        if d2 != 0.0 {
                            h += self.bary_grad(m) * self.bary_grad(n).transpose() * d2;
                        }
                    }
                }
                h
            })
            .collect()
    }

    /// Nodal interpolation: the coefficient of node `j` is `f(x_j)`.
    pub fn interpolate<T, F>(&self, mut f: F) -> Result<Vec<T>>
    where
        F: FnMut(&Vector2<f64>) -> Result<T>,
    {
        (0..self.size()).map(|j| f(&self.node_position(j))).collect()
    }
}

/// `sum_j coefficients[j] * weights[j]` for vector-valued coefficients.
pub fn combine<const R: usize>(
    coefficients: &[nalgebra::SVector<f64, R>],
    weights: &[f64],
) -> nalgebra::SVector<f64, R> {
    coefficients.iter().zip(weights).fold(nalgebra::SVector::zeros(), |acc, (c, w)| acc + c * *w)
}
