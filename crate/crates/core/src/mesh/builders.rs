//! Programmatic reference meshes. All closed meshes are oriented with
//! outward normals.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::SurfaceMesh;
use crate::Result;

fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

fn build(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> SurfaceMesh {
    SurfaceMesh::build(vertices, triangles).expect("builder produces a valid mesh")
}

/// The triangle `(0,0,0), (1,0,0), (0,1,0)`.
pub fn unit_triangle() -> SurfaceMesh {
    build(vec![v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.)], vec![[0, 1, 2]])
}

pub fn tetrahedron() -> SurfaceMesh {
    build(
        vec![v(1., 1., 1.), v(1., -1., -1.), v(-1., 1., -1.), v(-1., -1., 1.)],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
}

/// Octahedron with vertices on the unit sphere.
pub fn octahedron() -> SurfaceMesh {
    let vertices = vec![v(1., 0., 0.), v(-1., 0., 0.), v(0., 1., 0.), v(0., -1., 0.), v(0., 0., 1.), v(0., 0., -1.)];
    let triangles = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    build(vertices, triangles)
}

/// Icosahedron inscribed in the sphere of the given radius.
pub fn icosahedron(radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        v(-1., t, 0.),
        v(1., t, 0.),
        v(-1., -t, 0.),
        v(1., -t, 0.),
        v(0., -1., t),
        v(0., 1., t),
        v(0., -1., -t),
        v(0., 1., -t),
        v(t, 0., -1.),
        v(t, 0., 1.),
        v(-t, 0., -1.),
        v(-t, 0., 1.),
    ];
    let vertices = raw.iter().map(|p| p.normalize() * radius).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    build(vertices, triangles)
}

/// Icosahedron with vertices scaled onto the ellipsoid with semi-axes `axes`.
pub fn ellipsoid(axes: [f64; 3]) -> SurfaceMesh {
    let ico = icosahedron(1.0);
    let vertices = ico.vertices().iter().map(|p| v(p.x * axes[0], p.y * axes[1], p.z * axes[2])).collect();
    build(vertices, ico.triangles().to_vec())
}

/// Structured torus around the z-axis with `n_major` segments along the
/// center circle of radius `big_r` and `n_minor` around the tube of radius
/// `small_r`. Vertices lie on the torus.
pub fn torus(big_r: f64, small_r: f64, n_major: usize, n_minor: usize) -> SurfaceMesh {
    use std::f64::consts::TAU;
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = TAU * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let w = TAU * j as f64 / n_minor as f64;
            let rho = big_r + small_r * w.cos();
            vertices.push(v(rho * u.cos(), rho * u.sin(), small_r * w.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    build(vertices, triangles)
}

/// Kuhn subdivision of the unit cube into six tetrahedra sharing the main
/// diagonal; conforming across neighboring cubes.
const KUHN: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Triangulate `{psi = 0}` inside the box `[lo, hi]` by marching tetrahedra on
/// a grid with `cells` cells per axis. The surface is oriented along the
/// gradient of `psi` (outward where `psi > 0` outside). Vertices are linear
/// edge interpolants, so they lie near but not on the level set.
pub fn implicit_surface<F>(psi: F, lo: [f64; 3], hi: [f64; 3], cells: [usize; 3]) -> Result<SurfaceMesh>
where
    F: Fn(&Vector3<f64>) -> f64,
{
    let [nx, ny, nz] = cells;
    let point = |i: usize, j: usize, k: usize| {
        v(
            lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
            lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            lo[2] + (hi[2] - lo[2]) * k as f64 / nz as f64,
        )
    };
    let gid = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let mut values = vec![0.0; (nx + 1) * (ny + 1) * (nz + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                values[gid(i, j, k)] = psi(&point(i, j, k));
            }
        }
    }

    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut on_edge: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::new();
    let mut crossing = |a: (usize, Vector3<f64>), b: (usize, Vector3<f64>), vertices: &mut Vec<Vector3<f64>>| {
        let key = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        *on_edge.entry(key).or_insert_with(|| {
            let (fa, fb) = (values[a.0], values[b.0]);
            let s = fa / (fa - fb);
            vertices.push(a.1 + (b.1 - a.1) * s);
            vertices.len() - 1
        })
    };

    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                for perm in KUHN {
                    let mut c = [i, j, k];
                    let mut tet = [(gid(i, j, k), point(i, j, k)); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = (gid(c[0], c[1], c[2]), point(c[0], c[1], c[2]));
                    }
                    let (inside, outside): (Vec<_>, Vec<_>) = tet.iter().copied().partition(|p| values[p.0] < 0.0);
                    if inside.is_empty() || outside.is_empty() {
                        continue;
                    }
                    let centroid =
                        |s: &[(usize, Vector3<f64>)]| s.iter().map(|p| p.1).sum::<Vector3<f64>>() / s.len() as f64;
                    let dir = centroid(&outside) - centroid(&inside);
                    let polygon: Vec<usize> = match (inside.len(), outside.len()) {
                        (1, 3) => outside.iter().map(|&o| crossing(inside[0], o, &mut vertices)).collect(),
                        (3, 1) => inside.iter().map(|&n| crossing(n, outside[0], &mut vertices)).collect(),
                        _ => vec![
                            crossing(inside[0], outside[0], &mut vertices),
                            crossing(inside[0], outside[1], &mut vertices),
                            crossing(inside[1], outside[1], &mut vertices),
                            crossing(inside[1], outside[0], &mut vertices),
                        ],
                    };
                    for t in 1..polygon.len() - 1 {
                        let mut tri = [polygon[0], polygon[t], polygon[t + 1]];
                        let n = (vertices[tri[1]] - vertices[tri[0]]).cross(&(vertices[tri[2]] - vertices[tri[0]]));
                        if n.dot(&dir) < 0.0 {
                            tri.swap(1, 2);
                        }
                        triangles.push(tri);
                    }
                }
            }
        }
    }
    SurfaceMesh::build(vertices, triangles)
}
