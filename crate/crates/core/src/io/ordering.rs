//! File node orderings of Lagrange triangles.
//!
//! Gmsh and VTK order the nodes of a degree-`k` triangle the same way: the
//! corners `(0,0), (k,0), (0,k)`, then the edge nodes along `0->1`, `1->2`,
//! `2->0`, then the interior nodes as a degree `k-3` triangle of the same
//! layout shifted by `(1,1)`. Positions below are lattice points `(i, j)`
//! with reference coordinates `(i/k, j/k)`.

use std::collections::HashMap;

use crate::lagrange;

/// Lattice points of the degree-`k` triangle in file order.
pub fn file_lattice(order: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::with_capacity((order + 1) * (order + 2) / 2);
    push_recursive(order, [0, 0], &mut out);
    out
}

fn push_recursive(k: usize, shift: [usize; 2], out: &mut Vec<[usize; 2]>) {
    let at = |i: usize, j: usize| [shift[0] + i, shift[1] + j];
    if k == 0 {
        out.push(at(0, 0));
        return;
    }
    out.extend([at(0, 0), at(k, 0), at(0, k)]);
    out.extend((1..k).map(|i| at(i, 0)));
    out.extend((1..k).map(|i| at(k - i, i)));
    out.extend((1..k).map(|i| at(0, k - i)));
    if k >= 3 {
        push_recursive(k - 3, [shift[0] + 1, shift[1] + 1], out);
    }
}

/// `map[f]` is the canonical local index of the node at file position `f`.
pub fn file_to_canonical(order: usize) -> Vec<usize> {
    let canonical: HashMap<[usize; 2], usize> =
        lagrange::triangle_nodes(order).iter().enumerate().map(|(c, n)| (n.lattice, c)).collect();
    file_lattice(order).iter().map(|l| canonical[l]).collect()
}

/// Inverse of [`file_to_canonical`].
pub fn canonical_to_file(order: usize) -> Vec<usize> {
    let forward = file_to_canonical(order);
    let mut inverse = vec![0; forward.len()];
    for (f, &c) in forward.iter().enumerate() {
        inverse[c] = f;
    }
    inverse
}

/// Reorder file-ordered node data into canonical order.
pub fn to_canonical<T: Copy>(order: usize, file: &[T]) -> Vec<T> {
    canonical_to_file(order).iter().map(|&f| file[f]).collect()
}

/// Reorder canonical node data into file order.
pub fn to_file<T: Copy>(order: usize, canonical: &[T]) -> Vec<T> {
    file_to_canonical(order).iter().map(|&c| canonical[c]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_layouts() {
        assert_eq!(file_lattice(1), vec![[0, 0], [1, 0], [0, 1]]);
        assert_eq!(file_lattice(2), vec![[0, 0], [2, 0], [0, 2], [1, 0], [1, 1], [0, 1]]);
        // Gmsh 10-node triangle: 4,5 on edge 0-1, 6,7 on 1-2, 8,9 on 2-0, center last
        assert_eq!(
            file_lattice(3),
            vec![[0, 0], [3, 0], [0, 3], [1, 0], [2, 0], [2, 1], [1, 2], [0, 2], [0, 1], [1, 1]]
        );
        // interior of the quartic is a linear triangle
        assert_eq!(&file_lattice(4)[12..], &[[1, 1], [2, 1], [1, 2]]);
        // canonical order of the quadratic: corners, edge (0,1), edge (0,2), edge (1,2)
        assert_eq!(file_to_canonical(2), vec![0, 1, 2, 3, 5, 4]);
    }

    #[test]
    fn permutations_are_bijective() {
        for k in 1..=lagrange::MAX_ORDER {
            let n = (k + 1) * (k + 2) / 2;
            let f2c = file_to_canonical(k);
            let c2f = canonical_to_file(k);
            let mut seen = vec![false; n];
            for &c in &f2c {
                assert!(!seen[c]);
                seen[c] = true;
            }
            for i in 0..n {
                assert_eq!(c2f[f2c[i]], i);
                assert_eq!(f2c[c2f[i]], i);
            }
            let data: Vec<usize> = (0..n).collect();
            assert_eq!(to_canonical(k, &to_file(k, &data)), data);
        }
    }
}
