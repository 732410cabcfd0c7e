//! Gmsh MSH 4.1 ASCII reader for triangle meshes of order 1 to 4.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;

use super::{corner_mesh, ordering, HigherOrderMeshData};
use crate::mesh::SurfaceMesh;
use crate::{Error, Result};

/// Triangle element type codes by order.
const TRIANGLE_TYPES: [(u32, usize); 4] = [(2, 1), (9, 2), (21, 3), (23, 4)];

/// Two-dimensional element types that are not triangles: quadrangles of
/// orders 1 to 4 and the incomplete serendipity triangles.
const OTHER_2D_TYPES: [u32; 8] = [3, 10, 16, 20, 22, 24, 25, 36];

pub fn read_msh4(path: impl AsRef<Path>) -> Result<HigherOrderMeshData> {
    parse_msh4(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line().ok_or_else(|| Error::parse(self.line, format!("unexpected end of file, expected {what}")))
    }

    fn numbers<T: std::str::FromStr>(&mut self, what: &str, min: usize) -> Result<Vec<T>> {
        let line = self.expect_line(what)?;
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| Error::parse(self.line, format!("invalid number {t:?} in {what}"))))
            .collect::<Result<Vec<T>>>()?;
        if values.len() < min {
            return Err(Error::parse(
                self.line,
                format!("{what}: expected at least {min} values, got {}", values.len()),
            ));
        }
        Ok(values)
    }

    fn skip_section(&mut self, name: &str) -> Result<()> {
        let end = format!("$End{name}");
        while let Some(l) = self.next_line() {
            if l == end {
                return Ok(());
            }
        }
        Err(Error::parse(self.line, format!("missing {end}")))
    }

    fn end_section(&mut self, name: &str) -> Result<()> {
        let l = self.expect_line(name)?;
        if l != format!("$End{name}") {
            return Err(Error::parse(self.line, format!("expected $End{name}, found {l:?}")));
        }
        Ok(())
    }
}

/// Parse MSH 4.1 ASCII text. Triangles of a single order form the mesh;
/// point and line elements are ignored.
pub fn parse_msh4(text: &str) -> Result<HigherOrderMeshData> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let mut format_seen = false;
    let mut coordinates: HashMap<u64, Vector3<f64>> = HashMap::new();
    let mut elements: Vec<Vec<u64>> = Vec::new();
    let mut order: Option<usize> = None;

    while let Some(header) = lines.next_line() {
        let Some(name) = header.strip_prefix('$') else {
            return Err(Error::parse(lines.line, format!("expected a section header, found {header:?}")));
        };
        match name {
            "MeshFormat" => {
                let line = lines.expect_line("format line")?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 3 {
                    return Err(Error::parse(lines.line, "format line needs version, file type and data size"));
                }
                if !fields[0].starts_with("4.") {
                    return Err(Error::parse(lines.line, format!("unsupported MSH version {}", fields[0])));
                }
                if fields[1] != "0" {
                    return Err(Error::parse(lines.line, "binary MSH files are not supported"));
                }
                lines.end_section("MeshFormat")?;
                format_seen = true;
            }
            "PartitionedEntities" => {
                return Err(Error::parse(lines.line, "partitioned MSH files are not supported"));
            }
            "Nodes" => {
                let head: Vec<usize> = lines.numbers("nodes header", 4)?;
                for _ in 0..head[0] {
                    let block: Vec<usize> = lines.numbers("node block header", 4)?;
                    let (parametric, count) = (block[2] != 0, block[3]);
                    let mut tags = Vec::with_capacity(count);
                    while tags.len() < count {
                        tags.extend(lines.numbers::<u64>("node tags", 1)?);
                    }
                    if tags.len() != count {
                        return Err(Error::parse(lines.line, "too many node tags in block"));
                    }
                    for tag in tags {
                        let xyz: Vec<f64> = lines.numbers("node coordinates", 3)?;
                        if !parametric && xyz.len() != 3 {
                            return Err(Error::parse(lines.line, "expected three coordinates"));
                        }
                        coordinates.insert(tag, Vector3::new(xyz[0], xyz[1], xyz[2]));
                    }
                }
                lines.end_section("Nodes")?;
            }
            "Elements" => {
                let head: Vec<usize> = lines.numbers("elements header", 4)?;
                for _ in 0..head[0] {
                    let block: Vec<u64> = lines.numbers("element block header", 4)?;
                    let (dim, kind, count) = (block[0], block[2] as u32, block[3] as usize);
                    let block_line = lines.line;
                    let triangle_order = TRIANGLE_TYPES.iter().find(|t| t.0 == kind).map(|t| t.1);
                    if dim == 2 && triangle_order.is_none() {
                        let what = if OTHER_2D_TYPES.contains(&kind) { "non-triangle" } else { "unknown" };
                        return Err(Error::parse(block_line, format!("{what} 2-d element type {kind}")));
                    }
                    for _ in 0..count {
                        let row: Vec<u64> = lines.numbers("element", 2)?;
                        let Some(k) = triangle_order.filter(|_| dim == 2) else { continue };
                        let n = (k + 1) * (k + 2) / 2;
                        if row.len() != n + 1 {
                            return Err(Error::parse(lines.line, format!("element type {kind} needs {n} nodes")));
                        }
                        match order {
                            Some(o) if o != k => {
                                return Err(Error::parse(lines.line, format!("mixed triangle orders {o} and {k}")));
                            }
                            _ => order = Some(k),
                        }
                        elements.push(row[1..].to_vec());
                    }
                }
                lines.end_section("Elements")?;
            }
            other => lines.skip_section(other)?,
        }
    }
    if !format_seen {
        return Err(Error::parse(0, "missing $MeshFormat section"));
    }
    let order = order.ok_or_else(|| Error::Format("no triangle elements".into()))?;

    let lookup = |tag: u64| {
        coordinates.get(&tag).copied().ok_or_else(|| Error::Format(format!("element references unknown node {tag}")))
    };
    let (vertices, triangles) = corner_mesh(&elements, lookup)?;
    let mut nodes = Vec::with_capacity(elements.len() * (order + 1) * (order + 2) / 2);
    for e in &elements {
        let file: Vec<Vector3<f64>> = e.iter().map(|&t| lookup(t)).collect::<Result<_>>()?;
        nodes.extend(ordering::to_canonical(order, &file));
    }
    HigherOrderMeshData::new(Arc::new(SurfaceMesh::build(vertices, triangles)?), order, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CurvedSurface, SurfaceGeometry};
    use nalgebra::Vector2;

    fn fixture(name: &str) -> String {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn single_linear_triangle() {
        let data = parse_msh4(&fixture("triangle_p1.msh")).unwrap();
        assert_eq!(data.order(), 1);
        assert_eq!(data.mesh().num_vertices(), 3);
        assert_eq!(data.mesh().num_triangles(), 1);
        assert_eq!(data.mesh().vertices()[1], Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn quadratic_sphere_patch() {
        let text = fixture("sphere_patch_p2.msh");
        let data = parse_msh4(&text).unwrap();
        assert_eq!(data.order(), 2);
        assert_eq!(data.mesh().num_triangles(), 2);
        // nodes 4, 5, 6 of the first element lie on the edges 0-1, 1-2, 2-0
        let s = 0.5f64.sqrt();
        let cs = CurvedSurface::new(data.clone(), 2).unwrap();
        let g = cs.element_geometry(0).unwrap();
        assert!((g.global(&Vector2::new(0.5, 0.0)).unwrap() - Vector3::new(s, s, 0.0)).norm() < 1e-15);
        assert!((g.global(&Vector2::new(0.5, 0.5)).unwrap() - Vector3::new(0.0, s, s)).norm() < 1e-15);
        assert!((g.global(&Vector2::new(0.0, 0.5)).unwrap() - Vector3::new(s, 0.0, s)).norm() < 1e-15);
        for p in data.nodes() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        // corners agree with an order-1 reading of the same file
        let linear =
            text.replace("2 1 9 2", "2 1 2 2").replace("1 1 2 3 4 5 6", "1 1 2 3").replace("2 3 7 1 8 9 6", "2 3 7 1");
        let p1 = parse_msh4(&linear).unwrap();
        assert_eq!(p1.mesh().vertices(), data.mesh().vertices());
        assert_eq!(p1.mesh().triangles(), data.mesh().triangles());
    }

    #[test]
    fn format_errors() {
        let text = fixture("triangle_p1.msh");
        let v2 = text.replace("4.1 0 8", "2.2 0 8");
        assert!(matches!(parse_msh4(&v2), Err(Error::Parse { line: 2, .. })));
        let binary = text.replace("4.1 0 8", "4.1 1 8");
        assert!(matches!(parse_msh4(&binary), Err(Error::Parse { .. })));
        let partitioned = text.replace("$Entities", "$PartitionedEntities");
        assert!(matches!(parse_msh4(&partitioned), Err(Error::Parse { .. })));
        let quad = text.replace("2 1 2 1", "2 1 3 1").replace("1 1 2 3", "1 1 2 3 1");
        match parse_msh4(&quad) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("non-triangle")),
            other => panic!("{other:?}"),
        }
        let truncated: String = text.lines().take(14).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_msh4(&truncated), Err(Error::Parse { .. })));
        let garbage = text.replace("1 0 0", "1 zero 0");
        match parse_msh4(&garbage) {
            Err(Error::Parse { line, .. }) => assert!(line > 10),
            other => panic!("{other:?}"),
        }
    }
}
