//! Procedural fixture geometry.

use super::SurfaceKind;
use crate::geometry::WorldPoint;

/// Two triangles spanning the quad `a, b, c, d` (in order around the rim).
pub fn rectangle_mesh(a: WorldPoint, b: WorldPoint, c: WorldPoint, d: WorldPoint) -> SurfaceKind {
    SurfaceKind::Mesh {
        vertices: vec![a, b, c, d],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    }
}

fn append(kind: &mut Vec<WorldPoint>, tris: &mut Vec<[usize; 3]>, other: SurfaceKind) {
    if let SurfaceKind::Mesh {
        vertices,
        triangles,
    } = other
    {
        let base = kind.len();
        kind.extend(vertices);
        tris.extend(
            triangles
                .iter()
                .map(|t| [t[0] + base, t[1] + base, t[2] + base]),
        );
    }
}

/// Upright open cup: cylindrical wall, bottom disk, and a flat handle tab.
/// The handle breaks the rotational symmetry so registration can observe
/// rotations about the cup axis. Axis is +y through `center` (the bottom
/// center); `height` extends toward −y (up, in image convention).
pub fn cup_mesh(center: WorldPoint, radius: f64, height: f64, segments: usize) -> SurfaceKind {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    let ring = |angle: f64, y: f64| {
        WorldPoint::new(
            center.x + radius * angle.cos(),
            center.y - y,
            center.z + radius * angle.sin(),
        )
    };

    // Wall: one band of quads.
    for s in 0..segments {
        let a0 = s as f64 / segments as f64 * std::f64::consts::TAU;
        let a1 = (s + 1) as f64 / segments as f64 * std::f64::consts::TAU;
        let base = vertices.len();
        vertices.push(ring(a0, 0.0));
        vertices.push(ring(a1, 0.0));
        vertices.push(ring(a1, height));
        vertices.push(ring(a0, height));
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }

    // Bottom disk fan.
    let center_idx = vertices.len();
    vertices.push(center);
    for s in 0..segments {
        let a0 = s as f64 / segments as f64 * std::f64::consts::TAU;
        let a1 = (s + 1) as f64 / segments as f64 * std::f64::consts::TAU;
        let base = vertices.len();
        vertices.push(ring(a0, 0.0));
        vertices.push(ring(a1, 0.0));
        triangles.push([center_idx, base, base + 1]);
    }

    // Handle: a flat tab sticking out radially at angle 0, spanning the
    // middle half of the wall.
    let tab = rectangle_mesh(
        WorldPoint::new(center.x + radius, center.y - 0.25 * height, center.z),
        WorldPoint::new(center.x + radius * 1.45, center.y - 0.32 * height, center.z),
        WorldPoint::new(center.x + radius * 1.45, center.y - 0.68 * height, center.z),
        WorldPoint::new(center.x + radius, center.y - 0.75 * height, center.z),
    );
    append(&mut vertices, &mut triangles, tab);

    SurfaceKind::Mesh {
        vertices,
        triangles,
    }
}

/// Background plane patch with a small foreground patch between it and the
/// projector, sized for the test rig: part of the background is camera-
/// visible but in the foreground patch's projector shadow.
pub fn two_plane_occluder() -> SurfaceKind {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    append(
        &mut vertices,
        &mut triangles,
        rectangle_mesh(
            WorldPoint::new(-400.0, -300.0, 700.0),
            WorldPoint::new(400.0, -300.0, 700.0),
            WorldPoint::new(400.0, 300.0, 700.0),
            WorldPoint::new(-400.0, 300.0, 700.0),
        ),
    );
    // Foreground patch, off to the side the projector shines from.
    append(
        &mut vertices,
        &mut triangles,
        rectangle_mesh(
            WorldPoint::new(40.0, -60.0, 520.0),
            WorldPoint::new(160.0, -60.0, 520.0),
            WorldPoint::new(160.0, 60.0, 520.0),
            WorldPoint::new(40.0, 60.0, 520.0),
        ),
    );
    SurfaceKind::Mesh {
        vertices,
        triangles,
    }
}
