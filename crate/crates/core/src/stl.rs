//! STL triangle-mesh reading and writing (binary and ASCII).
//!
//! Format detection follows the structural rule: a buffer is *binary* STL
//! iff it is at least 84 bytes long and the header's triangle count is
//! exactly consistent with the byte length (`84 + 50·count`), regardless of
//! whether it happens to start with `solid`.  Otherwise a `solid` prefix
//! means ASCII.  Parse errors always carry the byte offset of the first
//! offending input byte.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// One mesh facet: the stored normal and three vertices (cm).
///
/// The stored normal is kept as-is from the file; geometric routines that
/// need a reliable orientation recompute it from the vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub normal: Vec3,
    pub vertices: [Vec3; 3],
}

impl Triangle {
    /// Normal recomputed from the vertex winding, `(v1−v0)×(v2−v0)`
    /// (not normalized; zero for degenerate triangles).
    pub fn geometric_normal(&self) -> Vec3 {
        let [v0, v1, v2] = self.vertices;
        (v1 - v0).cross(v2 - v0)
    }
}

/// A triangle soup as read from an STL file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub triangles: Vec<Triangle>,
}

impl TriangleMesh {
    /// Axis-aligned bounding box over all vertices; `None` when empty.
    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flat_map(|t| t.vertices.iter());
        let first = *it.next()?;
        let mut lo = first;
        let mut hi = first;
        for v in self.triangles.iter().flat_map(|t| t.vertices.iter()) {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            lo.z = lo.z.min(v.z);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
            hi.z = hi.z.max(v.z);
        }
        Some((lo, hi))
    }
}

/// Axis-aligned closed box as 12 triangles with outward winding.
pub fn box_mesh(lo: Vec3, hi: Vec3) -> TriangleMesh {
    let p = |bx: bool, by: bool, bz: bool| {
        Vec3::new(
            if bx { hi.x } else { lo.x },
            if by { hi.y } else { lo.y },
            if bz { hi.z } else { lo.z },
        )
    };
    // Each face as an outward-wound quad (two triangles).
    let faces = [
        // -x, +x
        ([p(false, false, false), p(false, false, true), p(false, true, true), p(false, true, false)], Vec3::new(-1.0, 0.0, 0.0)),
        ([p(true, false, false), p(true, true, false), p(true, true, true), p(true, false, true)], Vec3::new(1.0, 0.0, 0.0)),
        // -y, +y
        ([p(false, false, false), p(true, false, false), p(true, false, true), p(false, false, true)], Vec3::new(0.0, -1.0, 0.0)),
        ([p(false, true, false), p(false, true, true), p(true, true, true), p(true, true, false)], Vec3::new(0.0, 1.0, 0.0)),
        // -z, +z
        ([p(false, false, false), p(false, true, false), p(true, true, false), p(true, false, false)], Vec3::new(0.0, 0.0, -1.0)),
        ([p(false, false, true), p(true, false, true), p(true, true, true), p(false, true, true)], Vec3::new(0.0, 0.0, 1.0)),
    ];
    let mut triangles = Vec::with_capacity(12);
    for (quad, normal) in faces {
        triangles.push(Triangle {
            normal,
            vertices: [quad[0], quad[1], quad[2]],
        });
        triangles.push(Triangle {
            normal,
            vertices: [quad[0], quad[2], quad[3]],
        });
    }
    TriangleMesh { triangles }
}

/// Closed UV sphere: `segments` around the equator, `rings` from pole to
/// pole (at least 3 and 2 respectively).  Shared vertices are computed with
/// identical expressions, so the mesh is exactly watertight.
pub fn uv_sphere(center: Vec3, radius: f64, segments: usize, rings: usize) -> TriangleMesh {
    assert!(segments >= 3 && rings >= 2, "sphere needs ≥3 segments, ≥2 rings");
    let vertex = |i: usize, j: usize| -> Vec3 {
        let phi = std::f64::consts::PI * i as f64 / rings as f64;
        let theta = std::f64::consts::TAU * (j % segments) as f64 / segments as f64;
        center
            + Vec3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            )
    };
    let mut triangles = Vec::with_capacity(2 * segments * (rings - 1));
    for i in 0..rings {
        for j in 0..segments {
            let (v00, v10, v11, v01) = (
                vertex(i, j),
                vertex(i + 1, j),
                vertex(i + 1, j + 1),
                vertex(i, j + 1),
            );
            if i + 1 < rings {
                push_with_normal(&mut triangles, [v00, v10, v11]);
            }
            if i > 0 {
                push_with_normal(&mut triangles, [v00, v11, v01]);
            }
        }
    }
    TriangleMesh { triangles }
}

fn push_with_normal(triangles: &mut Vec<Triangle>, vertices: [Vec3; 3]) {
    let t = Triangle {
        normal: Vec3::ZERO,
        vertices,
    };
    let normal = t.geometric_normal().normalized().unwrap_or(Vec3::ZERO);
    triangles.push(Triangle { normal, ..t });
}

const BINARY_HEADER_LEN: usize = 80;
const BINARY_PREFIX_LEN: usize = BINARY_HEADER_LEN + 4;
const BINARY_TRIANGLE_LEN: usize = 50;

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::StlParse {
        offset,
        message: message.into(),
    }
}

/// Parses a byte buffer as STL, auto-detecting binary vs ASCII.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    if let Some(count) = consistent_binary_count(bytes) {
        return parse_binary(bytes, count);
    }
    if bytes.starts_with(b"solid") {
        return parse_ascii(bytes);
    }
    if bytes.len() < BINARY_PREFIX_LEN {
        return Err(parse_error(
            bytes.len(),
            format!(
                "file is {} bytes, too short for a binary STL header, and does not start with 'solid'",
                bytes.len()
            ),
        ));
    }
    // Long enough for binary but the count disagrees with the length.
    let count = u32::from_le_bytes(bytes[BINARY_HEADER_LEN..BINARY_PREFIX_LEN].try_into().unwrap())
        as usize;
    let expected = BINARY_PREFIX_LEN + count * BINARY_TRIANGLE_LEN;
    if bytes.len() < expected {
        Err(parse_error(
            bytes.len(),
            format!(
                "binary STL truncated: header declares {count} triangles ({expected} bytes), got {}",
                bytes.len()
            ),
        ))
    } else {
        Err(parse_error(
            expected,
            format!(
                "binary STL has {} trailing bytes after {count} declared triangles",
                bytes.len() - expected
            ),
        ))
    }
}

/// Binary-consistency check: `Some(count)` iff the length matches exactly.
fn consistent_binary_count(bytes: &[u8]) -> Option<usize> {
    if bytes.len() < BINARY_PREFIX_LEN {
        return None;
    }
    let count = u32::from_le_bytes(bytes[BINARY_HEADER_LEN..BINARY_PREFIX_LEN].try_into().ok()?)
        as usize;
    let expected = count
        .checked_mul(BINARY_TRIANGLE_LEN)
        .and_then(|n| n.checked_add(BINARY_PREFIX_LEN))?;
    (bytes.len() == expected).then_some(count)
}

fn parse_binary(bytes: &[u8], count: usize) -> Result<TriangleMesh> {
    let mut triangles = Vec::with_capacity(count);
    let mut offset = BINARY_PREFIX_LEN;
    for _ in 0..count {
        let mut floats = [0.0_f64; 12];
        for f in floats.iter_mut() {
            let raw = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !raw.is_finite() {
                return Err(parse_error(
                    offset,
                    format!("non-finite float {raw} in binary triangle data"),
                ));
            }
            *f = raw as f64;
            offset += 4;
        }
        offset += 2; // attribute byte count, ignored
        triangles.push(Triangle {
            normal: Vec3::new(floats[0], floats[1], floats[2]),
            vertices: [
                Vec3::new(floats[3], floats[4], floats[5]),
                Vec3::new(floats[6], floats[7], floats[8]),
                Vec3::new(floats[9], floats[10], floats[11]),
            ],
        });
    }
    Ok(TriangleMesh { triangles })
}

/// Whitespace-separated tokenizer that remembers each token's byte offset.
struct Tokenizer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Tokenizer { bytes, pos: 0 }
    }

    fn skip_whitespace(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token and its starting byte offset; `None` at end of input.
    fn next_token(&mut self) -> Option<(usize, &'a str)> {
        self.skip_whitespace();
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        // STL keywords and numbers are ASCII; anything else fails keyword /
        // float matching downstream with the right offset.
        let token = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("\u{FFFD}");
        Some((start, token))
    }

    /// Consumes the rest of the current line (solid names may contain spaces).
    fn skip_rest_of_line(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<()> {
        match self.next_token() {
            Some((_, token)) if token.eq_ignore_ascii_case(keyword) => Ok(()),
            Some((offset, token)) => Err(parse_error(
                offset,
                format!("expected '{keyword}', found '{token}'"),
            )),
            None => Err(parse_error(
                self.bytes.len(),
                format!("unexpected end of file, expected '{keyword}'"),
            )),
        }
    }

    fn expect_float(&mut self) -> Result<f64> {
        match self.next_token() {
            Some((offset, token)) => {
                let value: f64 = token
                    .parse()
                    .map_err(|_| parse_error(offset, format!("expected a number, found '{token}'")))?;
                if !value.is_finite() {
                    return Err(parse_error(offset, format!("non-finite number '{token}'")));
                }
                Ok(value)
            }
            None => Err(parse_error(
                self.bytes.len(),
                "unexpected end of file, expected a number".to_string(),
            )),
        }
    }

    fn expect_vec3(&mut self) -> Result<Vec3> {
        let x = self.expect_float()?;
        let y = self.expect_float()?;
        let z = self.expect_float()?;
        Ok(Vec3::new(x, y, z))
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleMesh> {
    let mut tok = Tokenizer::new(bytes);
    tok.expect_keyword("solid")?;
    tok.skip_rest_of_line();

    let mut triangles = Vec::new();
    loop {
        let (offset, token) = match tok.next_token() {
            Some(t) => t,
            None => {
                return Err(parse_error(
                    bytes.len(),
                    "unexpected end of file, expected 'facet' or 'endsolid'".to_string(),
                ))
            }
        };
        if token.eq_ignore_ascii_case("endsolid") {
            tok.skip_rest_of_line();
            tok.skip_whitespace();
            if tok.pos < bytes.len() {
                return Err(parse_error(
                    tok.pos,
                    "unexpected content after 'endsolid'".to_string(),
                ));
            }
            return Ok(TriangleMesh { triangles });
        }
        if !token.eq_ignore_ascii_case("facet") {
            return Err(parse_error(
                offset,
                format!("expected 'facet' or 'endsolid', found '{token}'"),
            ));
        }
        tok.expect_keyword("normal")?;
        let normal = tok.expect_vec3()?;
        tok.expect_keyword("outer")?;
        tok.expect_keyword("loop")?;
        let mut vertices = [Vec3::ZERO; 3];
        for v in vertices.iter_mut() {
            tok.expect_keyword("vertex")?;
            *v = tok.expect_vec3()?;
        }
        tok.expect_keyword("endloop")?;
        tok.expect_keyword("endfacet")?;
        triangles.push(Triangle { normal, vertices });
    }
}

/// Encodes a mesh as binary STL.  Coordinates are stored at `f32`
/// precision, as the format requires.
pub fn encode_stl_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(BINARY_PREFIX_LEN + mesh.triangles.len() * BINARY_TRIANGLE_LEN);
    let mut header = [0_u8; BINARY_HEADER_LEN];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for t in &mesh.triangles {
        for v in [t.normal, t.vertices[0], t.vertices[1], t.vertices[2]] {
            for c in v.to_array() {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0_u16.to_le_bytes());
    }
    out
}

/// Encodes a mesh as ASCII STL.  Numbers use the shortest decimal form
/// that round-trips the `f64` value exactly.
pub fn encode_stl_ascii(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    out.push_str("solid mesh\n");
    for t in &mesh.triangles {
        let n = t.normal;
        out.push_str(&format!("  facet normal {} {} {}\n", n.x, n.y, n.z));
        out.push_str("    outer loop\n");
        for v in t.vertices {
            out.push_str(&format!("      vertex {} {} {}\n", v.x, v.y, v.z));
        }
        out.push_str("    endloop\n");
        out.push_str("  endfacet\n");
    }
    out.push_str("endsolid mesh\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_mesh() -> TriangleMesh {
        TriangleMesh {
            triangles: vec![
                Triangle {
                    normal: Vec3::new(0.0, 0.0, 1.0),
                    vertices: [
                        Vec3::new(0.0, 0.0, 0.0),
                        Vec3::new(1.0, 0.0, 0.0),
                        Vec3::new(0.0, 1.0, 0.0),
                    ],
                },
                Triangle {
                    normal: Vec3::new(1.0, 0.0, 0.0),
                    vertices: [
                        Vec3::new(2.5, -1.25, 0.5),
                        Vec3::new(2.5, 1.0, 0.0),
                        Vec3::new(2.5, 0.0, 3.0),
                    ],
                },
            ],
        }
    }

    #[test]
    fn binary_round_trip_is_exact_for_f32_values() {
        let mesh = sample_mesh();
        let bytes = encode_stl_binary(&mesh);
        assert_eq!(bytes.len(), 84 + 2 * 50);
        let parsed = parse_stl(&bytes).unwrap();
        assert_eq!(parsed, mesh);
    }

    #[test]
    fn ascii_round_trip_is_exact() {
        let mesh = sample_mesh();
        let text = encode_stl_ascii(&mesh);
        let parsed = parse_stl(text.as_bytes()).unwrap();
        assert_eq!(parsed, mesh);
    }

    #[test]
    fn ascii_survives_full_f64_precision() {
        let mesh = TriangleMesh {
            triangles: vec![Triangle {
                normal: Vec3::new(0.1, 0.2, 0.3),
                vertices: [
                    Vec3::new(std::f64::consts::PI, 1.0 / 3.0, -2.0 / 7.0),
                    Vec3::new(1e-17, 1e17, 123.456_789_012_345_67),
                    Vec3::new(-0.0, 5.5, 0.1 + 0.2),
                ],
            }],
        };
        let parsed = parse_stl(encode_stl_ascii(&mesh).as_bytes()).unwrap();
        assert_eq!(parsed, mesh);
    }

    #[test]
    fn binary_wins_even_with_solid_prefix() {
        // A binary file whose 80-byte header starts with "solid": the
        // length-consistency rule must classify it as binary anyway.
        let mesh = sample_mesh();
        let mut bytes = encode_stl_binary(&mesh);
        bytes[..6].copy_from_slice(b"solid ");
        let parsed = parse_stl(&bytes).unwrap();
        assert_eq!(parsed, mesh);
    }

    #[test]
    fn ascii_longer_than_84_bytes_still_parses() {
        let text = encode_stl_ascii(&sample_mesh());
        assert!(text.len() > 84);
        assert!(parse_stl(text.as_bytes()).is_ok());
    }

    #[test]
    fn truncated_binary_reports_offset_at_end() {
        let mut bytes = encode_stl_binary(&sample_mesh());
        bytes.truncate(bytes.len() - 7);
        let err = parse_stl(&bytes).unwrap_err();
        match err {
            Error::StlParse { offset, .. } => assert_eq!(offset, bytes.len()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_report_offset_after_last_triangle() {
        let mut bytes = encode_stl_binary(&sample_mesh());
        let expected_end = bytes.len();
        bytes.extend_from_slice(b"junk");
        let err = parse_stl(&bytes).unwrap_err();
        match err {
            Error::StlParse { offset, message } => {
                assert_eq!(offset, expected_end);
                assert!(message.contains("trailing"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_binary_float_reports_its_offset() {
        let mut bytes = encode_stl_binary(&sample_mesh());
        // Second triangle, first vertex, y component:
        // 84 + 50 (tri 0) + 12 (normal) + 4 (x).
        let offset = 84 + 50 + 12 + 4;
        bytes[offset..offset + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = parse_stl(&bytes).unwrap_err();
        match err {
            Error::StlParse { offset: o, message } => {
                assert_eq!(o, offset);
                assert!(message.contains("non-finite"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ascii_bad_token_reports_its_offset() {
        let text = "solid s\n facet normal 0 0 1\n outer loop\n vertex 0 0 oops\n";
        let err = parse_stl(text.as_bytes()).unwrap_err();
        let expected = text.find("oops").unwrap();
        match err {
            Error::StlParse { offset, message } => {
                assert_eq!(offset, expected);
                assert!(message.contains("oops"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ascii_missing_keyword_reports_offset() {
        let text = "solid s\n facet normal 0 0 1\n inner loop\n";
        let err = parse_stl(text.as_bytes()).unwrap_err();
        let expected = text.find("inner").unwrap();
        match err {
            Error::StlParse { offset, message } => {
                assert_eq!(offset, expected);
                assert!(message.contains("outer"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ascii_truncation_reports_end_of_file() {
        let text = "solid s\n facet normal 0 0 1\n outer loop\n vertex 0 0 1\n";
        let err = parse_stl(text.as_bytes()).unwrap_err();
        match err {
            Error::StlParse { offset, .. } => assert_eq!(offset, text.len()),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ascii_non_finite_number_is_rejected() {
        let text = "solid s\n facet normal 0 0 nan\n";
        let err = parse_stl(text.as_bytes()).unwrap_err();
        let expected = text.find("nan").unwrap();
        match err {
            Error::StlParse { offset, .. } => assert_eq!(offset, expected),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn garbage_input_is_rejected_with_offset() {
        let err = parse_stl(b"not an stl file").unwrap_err();
        assert!(matches!(err, Error::StlParse { .. }));
        let empty = parse_stl(b"").unwrap_err();
        match empty {
            Error::StlParse { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_ascii_solid_parses_to_empty_mesh() {
        let parsed = parse_stl(b"solid empty\nendsolid empty\n").unwrap();
        assert!(parsed.triangles.is_empty());
    }

    #[test]
    fn bounding_box_covers_all_vertices() {
        let mesh = sample_mesh();
        let (lo, hi) = mesh.bounding_box().unwrap();
        assert_eq!(lo, Vec3::new(0.0, -1.25, 0.0));
        assert_eq!(hi, Vec3::new(2.5, 1.0, 3.0));
        assert!(TriangleMesh::default().bounding_box().is_none());
    }

    #[test]
    fn geometric_normal_follows_winding() {
        let t = Triangle {
            normal: Vec3::ZERO,
            vertices: [
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
            ],
        };
        assert_eq!(t.geometric_normal(), Vec3::new(0.0, 0.0, 4.0));
    }
}
