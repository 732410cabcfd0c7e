//! VTK XML unstructured grids with linear (type 5), quadratic (type 22) and
//! arbitrary-order Lagrange (type 69) triangle cells.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use nalgebra::Vector3;

use super::{corner_mesh, ordering, Field, HigherOrderMeshData, ParsedFieldData};
use crate::mesh::{LagrangeNumbering, SurfaceMesh};
use crate::{Error, Result};

const VTK_TRIANGLE: u8 = 5;
const VTK_QUADRATIC_TRIANGLE: u8 = 22;
const VTK_LAGRANGE_TRIANGLE: u8 = 69;

/// How data arrays are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Inline decimal text.
    #[default]
    Ascii,
    /// One `AppendedData` section, base64 encoded, with a `UInt64` byte
    /// count in front of every array.
    Base64,
}

/// Write the mesh nodes with point and cell data. Points follow the global
/// [`LagrangeNumbering`] of the mesh, so `fields.point_data` holds one
/// tuple per global node and `fields.cell_data` one per triangle.
pub fn write_vtu(
    path: impl AsRef<Path>,
    data: &HigherOrderMeshData,
    fields: &ParsedFieldData,
    encoding: Encoding,
) -> Result<()> {
    std::fs::write(path, vtu_string(data, fields, encoding)?)?;
    Ok(())
}

pub fn read_vtu(path: impl AsRef<Path>) -> Result<(HigherOrderMeshData, ParsedFieldData)> {
    parse_vtu(&std::fs::read_to_string(path)?)
}

enum Payload {
    Floats(Vec<f64>),
    Ints(Vec<i64>),
    Bytes(Vec<u8>),
}

struct Array<'a> {
    name: &'a str,
    components: usize,
    payload: Payload,
}

impl Array<'_> {
    fn vtk_type(&self) -> &'static str {
        match self.payload {
            Payload::Floats(_) => "Float64",
            Payload::Ints(_) => "Int64",
            Payload::Bytes(_) => "UInt8",
        }
    }

    fn le_bytes(&self) -> Vec<u8> {
        match &self.payload {
            Payload::Floats(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Payload::Ints(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Payload::Bytes(v) => v.clone(),
        }
    }

    fn ascii(&self, indent: &str) -> String {
        let tokens: Vec<String> = match &self.payload {
            Payload::Floats(v) => v.iter().map(|x| format!("{x:?}")).collect(),
            Payload::Ints(v) => v.iter().map(|x| x.to_string()).collect(),
            Payload::Bytes(v) => v.iter().map(|x| x.to_string()).collect(),
        };
        let mut out = String::new();
        for row in tokens.chunks(self.components.max(1)) {
            let _ = writeln!(out, "{indent}{}", row.join(" "));
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn vtu_string(data: &HigherOrderMeshData, fields: &ParsedFieldData, encoding: Encoding) -> Result<String> {
    let order = data.order();
    let (numbering, points) = data.global_nodes()?;
    let cells = data.mesh().num_triangles();
    fields.check(numbering.len(), cells)?;

    let mut connectivity = Vec::with_capacity(cells * numbering.local_size());
    for e in 0..cells {
        connectivity.extend(ordering::to_file(order, numbering.element(e)).into_iter().map(|g| g as i64));
    }
    let n = numbering.local_size() as i64;
    let offsets: Vec<i64> = (1..=cells as i64).map(|c| c * n).collect();
    let cell_type = if order == 1 { VTK_TRIANGLE } else { VTK_LAGRANGE_TRIANGLE };

    fn field_arrays(map: &std::collections::BTreeMap<String, Field>) -> Vec<Array<'_>> {
        map.iter()
            .map(|(k, f)| Array { name: k, components: f.components, payload: Payload::Floats(f.values.clone()) })
            .collect()
    }
    let sections: [(&str, Vec<Array>); 4] = [
        ("PointData", field_arrays(&fields.point_data)),
        ("CellData", field_arrays(&fields.cell_data)),
        (
            "Points",
            vec![Array {
                name: "Points",
                components: 3,
                payload: Payload::Floats(points.iter().flat_map(|p| p.iter().copied()).collect()),
            }],
        ),
        (
            "Cells",
            vec![
                Array {
                    name: "connectivity",
                    components: numbering.local_size(),
                    payload: Payload::Ints(connectivity),
                },
                Array { name: "offsets", components: 1, payload: Payload::Ints(offsets) },
                Array { name: "types", components: 1, payload: Payload::Bytes(vec![cell_type; cells]) },
            ],
        ),
    ];

    let mut out = String::new();
    let mut appended = String::new();
    out.push_str("<?xml version=\"1.0\"?>\n");
    out.push_str(
        "<VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\" header_type=\"UInt64\">\n",
    );
    out.push_str("  <UnstructuredGrid>\n");
    let _ = writeln!(out, "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{cells}\">", numbering.len());
    for (section, arrays) in &sections {
        if arrays.is_empty() {
            continue;
        }
        let _ = writeln!(out, "      <{section}>");
        for a in arrays {
            let components = match *section {
                "Cells" => String::new(),
                _ => format!(" NumberOfComponents=\"{}\"", a.components),
            };
            let head = format!("        <DataArray type=\"{}\" Name=\"{}\"{components}", a.vtk_type(), escape(a.name));
            match encoding {
                Encoding::Ascii => {
                    let _ = writeln!(out, "{head} format=\"ascii\">");
                    out.push_str(&a.ascii("          "));
                    out.push_str("        </DataArray>\n");
                }
                Encoding::Base64 => {
                    let _ = writeln!(out, "{head} format=\"appended\" offset=\"{}\"/>", appended.len());
                    let bytes = a.le_bytes();
                    appended.push_str(&STANDARD.encode((bytes.len() as u64).to_le_bytes()));
                    appended.push_str(&STANDARD.encode(&bytes));
                }
            }
        }
        let _ = writeln!(out, "      </{section}>");
    }
    out.push_str("    </Piece>\n");
    out.push_str("  </UnstructuredGrid>\n");
    if encoding == Encoding::Base64 {
        out.push_str("  <AppendedData encoding=\"base64\">\n");
        let _ = writeln!(out, "   _{appended}");
        out.push_str("  </AppendedData>\n");
    }
    out.push_str("</VTKFile>\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    I64,
    U64,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "Int8" => Self::I8,
            "UInt8" => Self::U8,
            "Int16" => Self::I16,
            "UInt16" => Self::U16,
            "Int32" => Self::I32,
            "UInt32" => Self::U32,
            "Int64" => Self::I64,
            "UInt64" => Self::U64,
            "Float32" => Self::F32,
            "Float64" => Self::F64,
            _ => return None,
        })
    }

    fn width(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::I64 | Self::U64 | Self::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
            Self::I64 => i64::from_le_bytes(b.try_into().unwrap()) as f64,
            Self::U64 => u64::from_le_bytes(b.try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b.try_into().unwrap()),
        }
    }
}

struct Reader<'a, 'input> {
    doc: &'a roxmltree::Document<'input>,
    appended: Option<&'a str>,
    header_u64: bool,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn line(&self, node: roxmltree::Node) -> usize {
        self.doc.text_pos_at(node.range().start).row as usize
    }

    fn err(&self, node: roxmltree::Node, msg: impl Into<String>) -> Error {
        Error::parse(self.line(node), msg)
    }

    fn attr<T: std::str::FromStr>(&self, node: roxmltree::Node, name: &str) -> Result<Option<T>> {
        node.attribute(name)
            .map(|v| v.trim().parse::<T>().map_err(|_| self.err(node, format!("invalid {name} attribute {v:?}"))))
            .transpose()
    }

    /// Decode one `[header][data]` block at the start of `text`. Header and
    /// data may be encoded as one base64 stream or as two.
    fn block(&self, node: roxmltree::Node, text: &str) -> Result<Vec<u8>> {
        let hbytes: usize = if self.header_u64 { 8 } else { 4 };
        let hchars = hbytes.div_ceil(3) * 4;
        let bad = |_| self.err(node, "invalid base64 data");
        let prefix = text.get(..hchars).ok_or_else(|| self.err(node, "truncated base64 data"))?;
        // a joint stream has no padding after the header and decodes to more bytes
        let head = STANDARD.decode(prefix).map_err(bad)?;
        if head.len() < hbytes {
            return Err(self.err(node, "truncated base64 header"));
        }
        let count = if self.header_u64 {
            u64::from_le_bytes(head[..8].try_into().unwrap()) as usize
        } else {
            u32::from_le_bytes(head[..4].try_into().unwrap()) as usize
        };
        if head.len() == hbytes {
            let chars = count.div_ceil(3) * 4;
            let body = text.get(hchars..hchars + chars).ok_or_else(|| self.err(node, "truncated base64 data"))?;
            return STANDARD.decode(body).map_err(bad);
        }
        let chars = (hbytes + count).div_ceil(3) * 4;
        let all = text.get(..chars).ok_or_else(|| self.err(node, "truncated base64 data"))?;
        let mut bytes = STANDARD.decode(all).map_err(bad)?;
        bytes.drain(..hbytes);
        Ok(bytes)
    }

    fn values(&self, node: roxmltree::Node) -> Result<Vec<f64>> {
        let kind = node.attribute("type").ok_or_else(|| self.err(node, "DataArray without type"))?;
        let scalar = Scalar::parse(kind).ok_or_else(|| self.err(node, format!("unsupported data type {kind:?}")))?;
        let format = node.attribute("format").unwrap_or("ascii");
        let bytes = match format {
            "ascii" => {
                let text = node.text().unwrap_or("");
                return text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| self.err(node, format!("invalid number {t:?}"))))
                    .collect();
            }
            "binary" => {
                let text: String = node.text().unwrap_or("").split_whitespace().collect();
                self.block(node, &text)?
            }
            "appended" => {
                let offset: usize =
                    self.attr(node, "offset")?.ok_or_else(|| self.err(node, "appended array without offset"))?;
                let appended = self.appended.ok_or_else(|| self.err(node, "missing AppendedData section"))?;
                let text = appended.get(offset..).ok_or_else(|| self.err(node, "offset beyond appended data"))?;
                self.block(node, text)?
            }
            other => return Err(self.err(node, format!("unsupported format {other:?}"))),
        };
        if bytes.len() % scalar.width() != 0 {
            return Err(self.err(node, "data length is not a multiple of the value size"));
        }
        Ok(bytes.chunks_exact(scalar.width()).map(|c| scalar.decode(c)).collect())
    }

    fn indices(&self, node: roxmltree::Node) -> Result<Vec<u64>> {
        self.values(node)?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as u64)
                } else {
                    Err(self.err(node, format!("invalid index {v}")))
                }
            })
            .collect()
    }

    fn fields(&self, section: Option<roxmltree::Node>) -> Result<Vec<(String, Field)>> {
        let Some(section) = section else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for a in section.children().filter(|c| c.has_tag_name("DataArray")) {
            let name = a.attribute("Name").ok_or_else(|| self.err(a, "data array without Name"))?;
            let components = self.attr(a, "NumberOfComponents")?.unwrap_or(1);
            out.push((name.to_string(), Field { components, values: self.values(a)? }));
        }
        Ok(out)
    }
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(tag))
}

/// Parse a single-piece unstructured grid of triangles of one order.
/// Point data is returned in the global node order of the resulting mesh.
pub fn parse_vtu(text: &str) -> Result<(HigherOrderMeshData, ParsedFieldData)> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::parse(e.pos().row as usize, e.to_string()))?;
    let root = doc.root_element();
    let at = |n: roxmltree::Node, msg: &str| Error::parse(doc.text_pos_at(n.range().start).row as usize, msg);
    if !root.has_tag_name("VTKFile") || root.attribute("type") != Some("UnstructuredGrid") {
        return Err(at(root, "not a VTK UnstructuredGrid file"));
    }
    if root.attribute("byte_order").is_some_and(|b| b != "LittleEndian") {
        return Err(at(root, "only little-endian data is supported"));
    }
    if root.attribute("compressor").is_some() {
        return Err(at(root, "compressed data is not supported"));
    }
    let header_u64 = match root.attribute("header_type").unwrap_or("UInt32") {
        "UInt32" => false,
        "UInt64" => true,
        other => return Err(at(root, &format!("unsupported header_type {other}"))),
    };
    let appended = match child(root, "AppendedData") {
        Some(a) => {
            if a.attribute("encoding") != Some("base64") {
                return Err(at(a, "only base64 appended data is supported"));
            }
            let raw = a.text().unwrap_or("").trim_start();
            Some(raw.strip_prefix('_').ok_or_else(|| at(a, "appended data must start with '_'"))?.trim_end())
        }
        None => None,
    };
    let reader = Reader { doc: &doc, appended, header_u64 };

    let grid = child(root, "UnstructuredGrid").ok_or_else(|| at(root, "missing UnstructuredGrid"))?;
    let pieces: Vec<_> = grid.children().filter(|c| c.has_tag_name("Piece")).collect();
    let [piece] = pieces[..] else {
        return Err(at(grid, "expected exactly one Piece"));
    };
    let num_points: usize = reader.attr(piece, "NumberOfPoints")?.ok_or_else(|| at(piece, "missing NumberOfPoints"))?;
    let num_cells: usize = reader.attr(piece, "NumberOfCells")?.ok_or_else(|| at(piece, "missing NumberOfCells"))?;

    let points_node =
        child(piece, "Points").and_then(|p| child(p, "DataArray")).ok_or_else(|| at(piece, "missing Points"))?;
    let coords = reader.values(points_node)?;
    if coords.len() != 3 * num_points {
        return Err(at(points_node, "point array does not hold three coordinates per point"));
    }
    let points: Vec<Vector3<f64>> = coords.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();

    let cells_node = child(piece, "Cells").ok_or_else(|| at(piece, "missing Cells"))?;
    let named = |name: &str| {
        cells_node
            .children()
            .find(|c| c.has_tag_name("DataArray") && c.attribute("Name") == Some(name))
            .ok_or_else(|| at(cells_node, &format!("missing {name} array")))
    };
    let (conn_node, types_node) = (named("connectivity")?, named("types")?);
    let connectivity = reader.indices(conn_node)?;
    let offsets = reader.indices(named("offsets")?)?;
    let types = reader.indices(types_node)?;
    if offsets.len() != num_cells || types.len() != num_cells {
        return Err(at(cells_node, "offsets and types need one entry per cell"));
    }

    let mut order = None;
    let mut elements = Vec::with_capacity(num_cells);
    let mut start = 0usize;
    for (c, (&end, &kind)) in offsets.iter().zip(&types).enumerate() {
        let end = end as usize;
        if end < start || end > connectivity.len() {
            return Err(at(cells_node, &format!("cell {c}: invalid offset {end}")));
        }
        let ids = &connectivity[start..end];
        start = end;
        let k = match (kind as u8, ids.len()) {
            (VTK_TRIANGLE, 3) => 1,
            (VTK_QUADRATIC_TRIANGLE, 6) => 2,
            (VTK_LAGRANGE_TRIANGLE, n) => (1..=crate::lagrange::MAX_ORDER)
                .find(|k| (k + 1) * (k + 2) / 2 == n)
                .ok_or_else(|| at(cells_node, &format!("cell {c}: no Lagrange triangle has {n} nodes")))?,
            (VTK_TRIANGLE | VTK_QUADRATIC_TRIANGLE, n) => {
                return Err(at(cells_node, &format!("cell {c}: type {kind} with {n} nodes")));
            }
            _ => return Err(at(types_node, &format!("cell {c}: unsupported cell type {kind}"))),
        };
        match order {
            Some(o) if o != k => {
                return Err(at(cells_node, &format!("mixed triangle orders {o} and {k}")));
            }
            _ => order = Some(k),
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= num_points) {
            return Err(at(conn_node, &format!("cell {c}: point {bad} out of range")));
        }
        elements.push(ids.to_vec());
    }
    let order = order.ok_or_else(|| Error::Format("no cells".into()))?;

    let (vertices, triangles) = corner_mesh(&elements, |i| Ok(points[i as usize]))?;
    let mesh = Arc::new(SurfaceMesh::build(vertices, triangles)?);
    let canonical: Vec<Vec<u64>> = elements.iter().map(|e| ordering::to_canonical(order, e)).collect();
    let nodes = canonical.iter().flatten().map(|&i| points[i as usize]).collect();
    let data = HigherOrderMeshData::new(mesh.clone(), order, nodes)?;

    // file point carrying each global node
    let numbering = LagrangeNumbering::new(&mesh, order)?;
    let source: Vec<usize> = numbering.owners().into_iter().map(|(e, j)| canonical[e][j] as usize).collect();

    let mut fields = ParsedFieldData::default();
    for (name, f) in reader.fields(child(piece, "PointData"))? {
        if f.components == 0 || f.values.len() != num_points * f.components {
            return Err(Error::Format(format!("point field {name:?} has {} values", f.values.len())));
        }
        let values = source.iter().flat_map(|&p| f.values[p * f.components..(p + 1) * f.components].to_vec()).collect();
        fields.point_data.insert(name, Field { components: f.components, values });
    }
    for (name, f) in reader.fields(child(piece, "CellData"))? {
        fields.cell_data.insert(name, f);
    }
    fields.check(numbering.len(), num_cells)?;
    Ok((data, fields))
}
