//! ASCII PLY point-cloud codec. Vertices carry x/y/z and optionally
//! nx/ny/nz; unknown properties and non-vertex elements are skipped with a
//! warning. Coordinates are written with shortest-round-trip formatting, so
//! write → read is lossless well beyond the 9-significant-digit contract.

use super::IoError;
use crate::cloud::PointCloud;
use crate::geometry::{Vec3, WorldPoint};

pub fn write_ply(cloud: &PointCloud) -> Vec<u8> {
    let with_normals = cloud.normals.is_some();
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\ncomment generated by slscan\n");
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if with_normals {
        out.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        out.push_str(&format!("{} {} {}", p.x, p.y, p.z));
        if let Some(normals) = &cloud.normals {
            let n = normals[i];
            out.push_str(&format!(" {} {} {}", n.x, n.y, n.z));
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Debug)]
pub struct PlyReadResult {
    pub cloud: PointCloud,
    pub warnings: Vec<String>,
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

pub fn read_ply(bytes: &[u8]) -> Result<PlyReadResult, IoError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| IoError::MalformedHeader("PLY is not valid UTF-8".into()))?;
    let mut lines = text.lines();

    if lines.next().map(str::trim) != Some("ply") {
        return Err(IoError::MalformedHeader("missing 'ply' magic".into()));
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut warnings = Vec::new();
    let mut format_seen = false;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| IoError::MalformedHeader("header ended before end_header".into()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                let rest: Vec<&str> = parts.collect();
                if rest != ["ascii", "1.0"] {
                    return Err(IoError::MalformedHeader(format!(
                        "unsupported format {:?} (only ascii 1.0)",
                        rest.join(" ")
                    )));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = parts
                    .next()
                    .ok_or_else(|| IoError::MalformedHeader("element without name".into()))?;
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| IoError::MalformedHeader("element without count".into()))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| {
                    IoError::MalformedHeader("property before any element".into())
                })?;
                let tokens: Vec<&str> = parts.collect();
                let name = tokens
                    .last()
                    .ok_or_else(|| IoError::MalformedHeader("property without name".into()))?;
                if tokens.first() == Some(&"list") {
                    element.properties.push(format!("list:{name}"));
                } else {
                    element.properties.push((*name).to_string());
                }
            }
            Some(other) => {
                warnings.push(format!("ignored header line starting with {other:?}"));
            }
            None => {}
        }
    }
    if !format_seen {
        return Err(IoError::MalformedHeader("missing format line".into()));
    }

    let mut cloud = PointCloud::default();
    let mut body: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    let total: usize = elements.iter().map(|e| e.count).sum();
    if body.len() != total {
        return Err(IoError::CountMismatch {
            expected: total,
            got: body.len(),
        });
    }
    body.reverse(); // pop from the front cheaply

    for element in &elements {
        if element.name != "vertex" {
            if element.count > 0 {
                warnings.push(format!(
                    "skipped element {:?} ({} rows)",
                    element.name, element.count
                ));
            }
            for _ in 0..element.count {
                body.pop();
            }
            continue;
        }

        let find = |name: &str| element.properties.iter().position(|p| p == name);
        let (xi, yi, zi) = match (find("x"), find("y"), find("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => {
                return Err(IoError::MalformedHeader(
                    "vertex element lacks x/y/z properties".into(),
                ))
            }
        };
        let normal_idx = match (find("nx"), find("ny"), find("nz")) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        };
        for p in &element.properties {
            if !matches!(p.as_str(), "x" | "y" | "z" | "nx" | "ny" | "nz") {
                warnings.push(format!("skipped vertex property {p:?}"));
            }
        }

        let mut points = Vec::with_capacity(element.count);
        let mut normals = normal_idx.map(|_| Vec::with_capacity(element.count));
        for row in 0..element.count {
            let line = body.pop().expect("count checked above");
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < element.properties.len() {
                return Err(IoError::MalformedBody(format!(
                    "vertex row {row} has {} fields, expected {}",
                    fields.len(),
                    element.properties.len()
                )));
            }
            let num = |i: usize| -> Result<f64, IoError> {
                fields[i].parse().map_err(|_| {
                    IoError::MalformedBody(format!("bad number {:?} in row {row}", fields[i]))
                })
            };
            points.push(WorldPoint::new(num(xi)?, num(yi)?, num(zi)?));
            if let (Some(ns), Some((a, b, c))) = (&mut normals, normal_idx) {
                ns.push(Vec3::new(num(a)?, num(b)?, num(c)?));
            }
        }
        cloud.points = points;
        cloud.normals = normals;
    }

    Ok(PlyReadResult { cloud, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cloud_has_zero_count_header() {
        let bytes = write_ply(&PointCloud::default());
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("element vertex 0\n"));
        assert!(read_ply(&bytes).unwrap().cloud.is_empty());
    }

    #[test]
    fn round_trip_points_and_normals() {
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut state = 1234.5678f64;
        for _ in 0..1000 {
            state = (state * 7919.0 + 1.0) % 104729.0;
            let a = state / 104729.0 * 2000.0 - 1000.0;
            state = (state * 7919.0 + 1.0) % 104729.0;
            let b = state / 104729.0 * 2000.0 - 1000.0;
            state = (state * 7919.0 + 1.0) % 104729.0;
            let c = state / 104729.0 * 2000.0 - 1000.0;
            points.push(WorldPoint::new(a, b, c));
            normals.push(Vec3::new(a, b, c).normalize());
        }
        let cloud = PointCloud::new(points).with_normals(normals).unwrap();
        let parsed = read_ply(&write_ply(&cloud)).unwrap().cloud;
        assert_eq!(parsed.len(), cloud.len());
        for i in 0..cloud.len() {
            assert!((parsed.points[i] - cloud.points[i]).norm() < 1e-6);
            assert!(
                (parsed.normals.as_ref().unwrap()[i] - cloud.normals.as_ref().unwrap()[i]).norm()
                    < 1e-6
            );
        }
    }

    #[test]
    fn writer_is_byte_deterministic() {
        let cloud = PointCloud::new(vec![
            WorldPoint::new(0.1, -2.5, 3e-7),
            WorldPoint::new(1e9, 2.0, -0.0),
        ]);
        assert_eq!(write_ply(&cloud), write_ply(&cloud));
    }

    #[test]
    fn unknown_properties_are_skipped_with_warning() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nend_header\n1 2 3 255\n4 5 6 0\n";
        let result = read_ply(text.as_bytes()).unwrap();
        assert_eq!(result.cloud.len(), 2);
        assert_eq!(result.cloud.points[1], WorldPoint::new(4.0, 5.0, 6.0));
        assert!(result.warnings.iter().any(|w| w.contains("red")));
    }

    #[test]
    fn count_mismatch_is_detected() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n4 5 6\n";
        assert!(matches!(
            read_ply(text.as_bytes()),
            Err(IoError::CountMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn binary_ply_is_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(
            read_ply(text.as_bytes()),
            Err(IoError::MalformedHeader(_))
        ));
    }
}
