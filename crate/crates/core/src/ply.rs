//! PLY reading and writing (ASCII and binary little-endian).
//!
//! Only the `vertex` element is interpreted. Its `x`, `y`, `z` properties are
//! required; `red`, `green`, `blue` and `nx`, `ny`, `nz` are picked up when
//! all three of a group are declared. Every other property or element is
//! skipped.

use std::fmt::Write as _;

use crate::cloud::{norm, Point3, PointCloud, Rgb8, NORMAL_TOLERANCE};
use crate::error::{Error, Result};
use crate::numfmt::sig9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

impl Element {
    fn fixed_stride(&self) -> Option<usize> {
        self.properties
            .iter()
            .map(|p| match p {
                Property::Scalar { ty, .. } => Some(ty.size()),
                Property::List { .. } => None,
            })
            .sum()
    }

    fn slot(&self, name: &str) -> Option<usize> {
        self.properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))
    }
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn header_err(line: usize, reason: impl Into<String>) -> Error {
    Error::PlyHeader {
        line,
        reason: reason.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();

    loop {
        let rest = &bytes[offset..];
        let Some(eol) = rest.iter().position(|&b| b == b'\n') else {
            return Err(header_err(line_no + 1, "header not terminated by end_header"));
        };
        line_no += 1;
        let raw = &rest[..eol];
        offset += eol + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header is not valid text"))?
            .trim_end_matches('\r')
            .trim();

        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "missing `ply` magic"));
            }
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                let kind = words.next().unwrap_or("");
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::PlyUnsupportedFormat(kind.to_string()))
                    }
                    other => return Err(header_err(line_no, format!("unknown format `{other}`"))),
                });
            }
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| header_err(line_no, "element without a name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| header_err(line_no, "element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ty = words
                    .next()
                    .ok_or_else(|| header_err(line_no, "property without a type"))?;
                let prop = if ty == "list" {
                    let count = words.next().and_then(Scalar::parse);
                    let item = words.next().and_then(Scalar::parse);
                    match (count, item, words.next()) {
                        (Some(count), Some(item), Some(_)) => Property::List { count, item },
                        _ => return Err(header_err(line_no, "malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(ty)
                        .ok_or_else(|| header_err(line_no, format!("unknown type `{ty}`")))?;
                    let name = words
                        .next()
                        .ok_or_else(|| header_err(line_no, "property without a name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(header_err(line_no, format!("unexpected keyword `{other}`"))),
        }
    }

    let format = format.ok_or_else(|| header_err(line_no, "no format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: offset,
        body_line: line_no + 1,
    })
}

struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<[usize; 3]>,
    normal: Option<[usize; 3]>,
}

impl VertexLayout {
    fn from_element(el: &Element, header_line: usize) -> Result<Self> {
        let group = |names: [&str; 3]| -> Option<[usize; 3]> {
            Some([el.slot(names[0])?, el.slot(names[1])?, el.slot(names[2])?])
        };
        let xyz = group(["x", "y", "z"])
            .ok_or_else(|| header_err(header_line, "vertex element lacks x, y, z"))?;
        Ok(Self {
            xyz,
            rgb: group(["red", "green", "blue"]),
            normal: group(["nx", "ny", "nz"]),
        })
    }
}

struct Builder {
    positions: Vec<Point3>,
    colors: Option<Vec<Rgb8>>,
    normals: Option<Vec<Point3>>,
}

impl Builder {
    fn new(layout: &VertexLayout, capacity: usize) -> Self {
        Self {
            positions: Vec::with_capacity(capacity),
            colors: layout.rgb.map(|_| Vec::with_capacity(capacity)),
            normals: layout.normal.map(|_| Vec::with_capacity(capacity)),
        }
    }

    fn push(&mut self, layout: &VertexLayout, values: &[f64], location: impl Fn() -> String) -> Result<()> {
        let pick = |slots: [usize; 3]| [values[slots[0]], values[slots[1]], values[slots[2]]];
        self.positions.push(pick(layout.xyz));
        if let (Some(colors), Some(slots)) = (self.colors.as_mut(), layout.rgb) {
            colors.push(pick(slots).map(|c| c.round().clamp(0.0, 255.0) as u8));
        }
        if let (Some(normals), Some(slots)) = (self.normals.as_mut(), layout.normal) {
            let mut n = pick(slots);
            let len = norm(&n);
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::PlyPayload {
                    location: location(),
                    token: format!("normal {n:?}"),
                });
            }
            if (len - 1.0).abs() > NORMAL_TOLERANCE {
                n = n.map(|c| c / len);
            }
            normals.push(n);
        }
        Ok(())
    }

    fn finish(self) -> Result<PointCloud> {
        let mut cloud = PointCloud::new(self.positions)?;
        if let Some(c) = self.colors {
            cloud = cloud.with_colors(c)?;
        }
        if let Some(n) = self.normals {
            cloud = cloud.with_normals(n)?;
        }
        Ok(cloud)
    }
}

/// Parses a PLY byte stream into a [`PointCloud`].
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err(header.body_line - 1, "no vertex element"))?;
    let vertex = &header.elements[vertex_pos];
    let layout = VertexLayout::from_element(vertex, header.body_line - 1)?;
    let body = &bytes[header.body_offset..];
    match header.format {
        PlyFormat::Ascii => parse_ascii_body(&header, vertex_pos, &layout, body),
        PlyFormat::BinaryLittleEndian => parse_binary_body(&header, vertex_pos, &layout, body),
    }
}

fn parse_ascii_body(
    header: &Header,
    vertex_pos: usize,
    layout: &VertexLayout,
    body: &[u8],
) -> Result<PointCloud> {
    let text = std::str::from_utf8(body).map_err(|e| Error::PlyPayload {
        location: format!("byte {}", header.body_offset + e.valid_up_to()),
        token: "<invalid utf-8>".into(),
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header.body_line + i, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    // One record per line for every element ahead of the vertices.
    for el in &header.elements[..vertex_pos] {
        for _ in 0..el.count {
            if lines.next().is_none() {
                return Err(Error::PlyVertexCount {
                    declared: header.elements[vertex_pos].count,
                    found: 0,
                });
            }
        }
    }

    let vertex = &header.elements[vertex_pos];
    let mut builder = Builder::new(layout, vertex.count);
    let mut values = Vec::with_capacity(vertex.properties.len());
    for found in 0..vertex.count {
        let Some((line_no, line)) = lines.next() else {
            return Err(Error::PlyVertexCount {
                declared: vertex.count,
                found,
            });
        };
        values.clear();
        let mut tokens = line.split_whitespace();
        let next_number = |tokens: &mut std::str::SplitWhitespace<'_>| -> Result<f64> {
            let tok = tokens.next().ok_or_else(|| Error::PlyPayload {
                location: format!("line {line_no}"),
                token: "<missing value>".into(),
            })?;
            tok.parse::<f64>().map_err(|_| Error::PlyPayload {
                location: format!("line {line_no}"),
                token: tok.to_string(),
            })
        };
        for prop in &vertex.properties {
            match prop {
                Property::Scalar { .. } => {
                    let v = next_number(&mut tokens)?;
                    values.push(v);
                }
                Property::List { .. } => {
                    let n = next_number(&mut tokens)? as usize;
                    for _ in 0..n {
                        next_number(&mut tokens)?;
                    }
                    values.push(f64::NAN);
                }
            }
        }
        builder.push(layout, &values, || format!("line {line_no}"))?;
    }
    builder.finish()
}

fn parse_binary_body(
    header: &Header,
    vertex_pos: usize,
    layout: &VertexLayout,
    body: &[u8],
) -> Result<PointCloud> {
    let vertex = &header.elements[vertex_pos];
    let truncated = |found: usize| Error::PlyVertexCount {
        declared: vertex.count,
        found,
    };
    let mut cursor = 0usize;
    for el in &header.elements[..vertex_pos] {
        for _ in 0..el.count {
            cursor = skip_binary_record(el, body, cursor).ok_or_else(|| truncated(0))?;
        }
    }

    let mut builder = Builder::new(layout, vertex.count);
    let mut values = Vec::with_capacity(vertex.properties.len());
    for found in 0..vertex.count {
        let record_start = cursor;
        values.clear();
        for prop in &vertex.properties {
            match prop {
                Property::Scalar { ty, .. } => {
                    let end = cursor + ty.size();
                    let b = body.get(cursor..end).ok_or_else(|| truncated(found))?;
                    values.push(ty.read_le(b));
                    cursor = end;
                }
                Property::List { count, item } => {
                    let end = cursor + count.size();
                    let b = body.get(cursor..end).ok_or_else(|| truncated(found))?;
                    let n = count.read_le(b) as usize;
                    cursor = end + n * item.size();
                    if cursor > body.len() {
                        return Err(truncated(found));
                    }
                    values.push(f64::NAN);
                }
            }
        }
        let offset = header.body_offset + record_start;
        builder.push(layout, &values, || format!("byte {offset}"))?;
    }
    builder.finish()
}

fn skip_binary_record(el: &Element, body: &[u8], mut cursor: usize) -> Option<usize> {
    if let Some(stride) = el.fixed_stride() {
        cursor += stride;
        return (cursor <= body.len()).then_some(cursor);
    }
    for prop in &el.properties {
        match prop {
            Property::Scalar { ty, .. } => cursor += ty.size(),
            Property::List { count, item } => {
                let b = body.get(cursor..cursor + count.size())?;
                cursor += count.size() + count.read_le(b) as usize * item.size();
            }
        }
        if cursor > body.len() {
            return None;
        }
    }
    Some(cursor)
}

/// Serializes a cloud. Coordinates and normals are written as `double`.
pub fn write_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", cloud.len());
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.colors().is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    if cloud.normals().is_some() {
        header.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    let colors = cloud.colors();
    let normals = cloud.normals();
    match format {
        PlyFormat::Ascii => {
            let mut line = String::new();
            for (i, p) in cloud.positions().iter().enumerate() {
                line.clear();
                let _ = write!(line, "{} {} {}", sig9(p[0]), sig9(p[1]), sig9(p[2]));
                if let Some(c) = colors {
                    let _ = write!(line, " {} {} {}", c[i][0], c[i][1], c[i][2]);
                }
                if let Some(n) = normals {
                    let _ = write!(line, " {} {} {}", sig9(n[i][0]), sig9(n[i][1]), sig9(n[i][2]));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for (i, p) in cloud.positions().iter().enumerate() {
                for v in p {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(c) = colors {
                    out.extend_from_slice(&c[i]);
                }
                if let Some(n) = normals {
                    for v in &n[i] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

pub fn read_ply_file(path: impl AsRef<std::path::Path>) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    parse_ply(&bytes)
}

pub fn write_ply_file(
    path: impl AsRef<std::path::Path>,
    cloud: &PointCloud,
    format: PlyFormat,
) -> Result<()> {
    std::fs::write(path, write_ply(cloud, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ascii(header_props: &str, count: usize, body: &str) -> Vec<u8> {
        format!("ply\nformat ascii 1.0\nelement vertex {count}\n{header_props}end_header\n{body}")
            .into_bytes()
    }

    const XYZ: &str = "property float x\nproperty float y\nproperty float z\n";
    const RGB: &str = "property uchar red\nproperty uchar green\nproperty uchar blue\n";

    #[test]
    fn single_colored_vertex() {
        let c = parse_ply(&ascii(&format!("{XYZ}{RGB}"), 1, "0 0 0 255 0 0\n")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.colors().unwrap(), &[[255, 0, 0]]);
        assert!(c.normals().is_none());
    }

    #[test]
    fn geometry_only() {
        let c = parse_ply(&ascii(XYZ, 2, "0 0 0\n1 2 3\n")).unwrap();
        assert_eq!(c.positions()[1], [1.0, 2.0, 3.0]);
        assert!(c.colors().is_none() && c.normals().is_none());
    }

    #[test]
    fn vertex_count_mismatch() {
        let err = parse_ply(&ascii(XYZ, 2, "0 0 0\n")).unwrap_err();
        assert!(matches!(err, Error::PlyVertexCount { declared: 2, found: 1 }));
    }

    #[test]
    fn non_numeric_payload_names_line() {
        let err = parse_ply(&ascii(XYZ, 1, "0 zero 0\n")).unwrap_err();
        match err {
            Error::PlyPayload { location, token } => {
                assert_eq!(location, "line 8");
                assert_eq!(token, "zero");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn big_endian_rejected() {
        let bytes = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(bytes), Err(Error::PlyUnsupportedFormat(_))));
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(parse_ply(b"plx\n"), Err(Error::PlyHeader { line: 1, .. })));
        let no_end = b"ply\nformat ascii 1.0\nelement vertex 1\n";
        assert!(matches!(parse_ply(no_end), Err(Error::PlyHeader { .. })));
        let bad_prop = b"ply\nformat ascii 1.0\nproperty float x\nend_header\n";
        assert!(matches!(parse_ply(bad_prop), Err(Error::PlyHeader { line: 3, .. })));
    }

    #[test]
    fn unknown_properties_and_elements_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n\
                    property float x\nproperty float y\nproperty float z\nproperty float intensity\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    1 2 3 0.5\n4 5 6 0.25\n3 0 1 1\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(c.positions(), &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
    }

    #[test]
    fn binary_with_float32_and_leading_element() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement camera 1\nproperty list uchar float k\n\
element vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n\
property uchar green\nproperty uchar blue\nend_header\n"
            .to_vec();
        bytes.push(2);
        bytes.extend_from_slice(&1f32.to_le_bytes());
        bytes.extend_from_slice(&2f32.to_le_bytes());
        for v in [0.5f32, -1.0, 3.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&[10, 20, 30]);
        let c = parse_ply(&bytes).unwrap();
        assert_eq!(c.positions(), &[[0.5, -1.0, 3.25]]);
        assert_eq!(c.colors().unwrap(), &[[10, 20, 30]]);

        bytes.pop();
        assert!(matches!(parse_ply(&bytes), Err(Error::PlyVertexCount { declared: 1, found: 0 })));
    }

    #[test]
    fn written_header_declares_normals() {
        let c = PointCloud::new(vec![[0.0; 3]])
            .unwrap()
            .with_normals(vec![[0.0, 1.0, 0.0]])
            .unwrap();
        let text = String::from_utf8(write_ply(&c, PlyFormat::Ascii)).unwrap();
        assert!(text.contains("property double nx\nproperty double ny\nproperty double nz\n"));
        assert_eq!(parse_ply(text.as_bytes()).unwrap(), c);
    }

    #[test]
    fn one_point_round_trip() {
        let c = PointCloud::new(vec![[0.1, -2.5, 1e-7]])
            .unwrap()
            .with_colors(vec![[1, 2, 3]])
            .unwrap();
        for f in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            assert_eq!(parse_ply(&write_ply(&c, f)).unwrap(), c);
        }
    }
}
