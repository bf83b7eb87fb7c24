//! Ray-cast rendering and exact ground truth.

use super::{Rig, Surface, SurfaceKind};
use crate::cloud::PointCloud;
use crate::codec::{CorrespondenceMap, PixelStatus};
use crate::geometry::{pixel_ray, project, PixelPoint, Vec3, WorldPoint};
use crate::image::{quantize_u8, GrayImage};
use rayon::prelude::*;

/// Offset to keep secondary rays from re-hitting their origin surface.
const RAY_EPSILON: f64 = 1e-6;

/// Nearest intersection of a ray with the surface: `(t, unit normal)`,
/// normal oriented against the ray direction.
fn intersect(kind: &SurfaceKind, origin: &WorldPoint, dir: &Vec3) -> Option<(f64, Vec3)> {
    match kind {
        SurfaceKind::Plane { point, normal } => {
            let denom = dir.dot(normal);
            if denom.abs() < 1e-12 {
                return None;
            }
            let t = (point - origin).dot(normal) / denom;
            (t > RAY_EPSILON).then(|| {
                let n = if denom > 0.0 {
                    -normal.into_inner()
                } else {
                    normal.into_inner()
                };
                (t, n)
            })
        }
        SurfaceKind::Sphere { center, radius } => {
            let oc = origin - center;
            let b = oc.dot(dir);
            let c = oc.norm_squared() - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sqrt_disc = disc.sqrt();
            let t = if -b - sqrt_disc > RAY_EPSILON {
                -b - sqrt_disc
            } else if -b + sqrt_disc > RAY_EPSILON {
                -b + sqrt_disc
            } else {
                return None;
            };
            let hit = origin + dir * t;
            let mut n = (hit - center) / *radius;
            if n.dot(dir) > 0.0 {
                n = -n;
            }
            Some((t, n))
        }
        SurfaceKind::Mesh {
            vertices,
            triangles,
        } => {
            // Möller–Trumbore over every triangle; desk-scale meshes don't
            // need an acceleration structure.
            let mut best: Option<(f64, Vec3)> = None;
            for tri in triangles {
                let v0 = vertices[tri[0]];
                let e1 = vertices[tri[1]] - v0;
                let e2 = vertices[tri[2]] - v0;
                let pvec = dir.cross(&e2);
                let det = e1.dot(&pvec);
                if det.abs() < 1e-14 {
                    continue;
                }
                let inv_det = 1.0 / det;
                let tvec = origin - v0;
                let u = tvec.dot(&pvec) * inv_det;
                if !(0.0..=1.0).contains(&u) {
                    continue;
                }
                let qvec = tvec.cross(&e1);
                let v = dir.dot(&qvec) * inv_det;
                if v < 0.0 || u + v > 1.0 {
                    continue;
                }
                let t = e2.dot(&qvec) * inv_det;
                if t <= RAY_EPSILON {
                    continue;
                }
                if best.map_or(true, |(bt, _)| t < bt) {
                    let mut n = e1.cross(&e2).normalize();
                    if n.dot(dir) > 0.0 {
                        n = -n;
                    }
                    best = Some((t, n));
                }
            }
            best
        }
    }
}

fn occluded(kind: &SurfaceKind, from: &WorldPoint, to: &WorldPoint) -> bool {
    let delta = to - from;
    let dist = delta.norm();
    if dist < RAY_EPSILON {
        return false;
    }
    let dir = delta / dist;
    let origin = from + dir * RAY_EPSILON;
    match intersect(kind, &origin, &dir) {
        Some((t, _)) => t < dist - 2.0 * RAY_EPSILON,
        None => false,
    }
}

/// Exact per-pixel scene description as seen by the rig's camera.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    /// Camera-frame hit depth (λ of the projection equation); NaN on miss.
    pub depth: Vec<f64>,
    /// Exact continuous projector coordinates; valid where the pixel is a
    /// surface hit, inside the projector frame, and unshadowed.
    pub corr: CorrespondenceMap,
    pub hit: Vec<bool>,
    pub projector_visible: Vec<bool>,
    pub unshadowed: Vec<bool>,
    /// Hit normals (camera frame, unit, toward the camera); zero on miss.
    normals: Vec<Vec3>,
}

impl GroundTruth {
    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    /// Camera-frame cloud of all valid (lit, unshadowed) pixels with
    /// analytic normals and pixel provenance.
    pub fn cloud(&self, rig: &Rig) -> PointCloud {
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut provenance = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let i = self.index(col, row);
                if self.corr.status[i] != PixelStatus::Valid {
                    continue;
                }
                let pixel = PixelPoint::new(col as f64 + 0.5, row as f64 + 0.5);
                let point = crate::geometry::back_project(
                    &rig.camera,
                    &RigidPose::identity(),
                    pixel,
                    self.depth[i],
                )
                .expect("valid pixels back-project");
                points.push(point);
                normals.push(self.normals[i]);
                provenance.push([col as u32, row as u32]);
            }
        }
        PointCloud::new(points)
            .with_normals(normals)
            .expect("normals are unit by construction")
            .with_provenance(provenance)
            .expect("counts match")
    }
}

use crate::geometry::RigidTransform as RigidPose;

struct TracedPixel {
    depth: f64,
    proj: Option<PixelPoint>,
    hit: bool,
    visible: bool,
    unshadowed: bool,
    normal: Vec3,
}

fn trace_pixel(rig: &Rig, surface: &Surface, col: usize, row: usize) -> TracedPixel {
    let miss = TracedPixel {
        depth: f64::NAN,
        proj: None,
        hit: false,
        visible: false,
        unshadowed: false,
        normal: Vec3::zeros(),
    };
    let pixel = PixelPoint::new(col as f64 + 0.5, row as f64 + 0.5);
    let Ok((origin, dir)) = pixel_ray(&rig.camera, &rig.camera_pose, pixel) else {
        return miss;
    };
    let Some((t, normal_world)) = intersect(&surface.kind, &origin, &dir) else {
        return miss;
    };
    let hit_point = origin + dir * t;
    let depth = rig.camera_pose.apply(&hit_point).z;

    let projected = project(&rig.projector, &rig.projector_pose, &hit_point);
    let (proj_px, visible) = match projected {
        Ok((px, _))
            if px.u >= 0.0
                && px.u < rig.projector.image_width as f64
                && px.v >= 0.0
                && px.v < rig.projector.image_height as f64 =>
        {
            (Some(px), true)
        }
        _ => (None, false),
    };
    let unshadowed =
        visible && !occluded(&surface.kind, &hit_point, &rig.projector_pose.center());

    TracedPixel {
        depth,
        proj: proj_px,
        hit: true,
        visible,
        unshadowed,
        // Normals are reported in the camera frame, like the clouds.
        normal: rig.camera_pose.rotate(&normal_world),
    }
}

/// Casts every camera ray once and assembles full ground truth.
pub fn ground_truth(rig: &Rig, surface: &Surface) -> GroundTruth {
    let (w, h) = (
        rig.camera.image_width as usize,
        rig.camera.image_height as usize,
    );
    let rows: Vec<Vec<TracedPixel>> = (0..h)
        .into_par_iter()
        .map(|row| (0..w).map(|col| trace_pixel(rig, surface, col, row)).collect())
        .collect();

    let n = w * h;
    let mut gt = GroundTruth {
        width: w,
        height: h,
        depth: vec![f64::NAN; n],
        corr: CorrespondenceMap::empty(w, h, rig.projector.image_width, rig.projector.image_height),
        hit: vec![false; n],
        projector_visible: vec![false; n],
        unshadowed: vec![false; n],
        normals: vec![Vec3::zeros(); n],
    };
    gt.corr.has_x = true;
    gt.corr.has_y = true;
    let direct = 255.0 * surface.albedo;
    let global = 2.0 * (surface.ambient + surface.interreflection);
    for (row, traced) in rows.into_iter().enumerate() {
        for (col, px) in traced.into_iter().enumerate() {
            let i = row * w + col;
            gt.depth[i] = px.depth;
            gt.hit[i] = px.hit;
            gt.projector_visible[i] = px.visible;
            gt.unshadowed[i] = px.unshadowed;
            gt.normals[i] = px.normal;
            let status = if !px.hit {
                PixelStatus::NoData
            } else if !px.visible {
                PixelStatus::OutOfRange
            } else if !px.unshadowed {
                PixelStatus::LowDirect
            } else {
                PixelStatus::Valid
            };
            gt.corr.status[i] = status;
            if let Some(p) = px.proj {
                gt.corr.proj_x[i] = p.u;
                gt.corr.proj_y[i] = p.v;
            }
            if status == PixelStatus::Valid {
                gt.corr.direct[i] = direct as f32;
                gt.corr.global[i] = global as f32;
            }
        }
    }
    gt
}

/// Renders the camera view for each pattern in one pass: the scene geometry
/// is traced once and every pattern is sampled nearest-neighbor at the
/// ground-truth projector coordinate.
pub fn render_stack(rig: &Rig, surface: &Surface, patterns: &[&GrayImage]) -> Vec<GrayImage> {
    let gt = ground_truth(rig, surface);
    render_with_truth(&gt, surface, patterns)
}

/// Like [`render_stack`] but reusing an existing ground-truth pass.
pub fn render_with_truth(
    gt: &GroundTruth,
    surface: &Surface,
    patterns: &[&GrayImage],
) -> Vec<GrayImage> {
    patterns
        .iter()
        .map(|pattern| {
            GrayImage::from_fn(gt.width, gt.height, |col, row| {
                let i = gt.index(col, row);
                if gt.corr.status[i] == PixelStatus::Valid {
                    let u = gt.corr.proj_x[i].floor() as usize;
                    let v = gt.corr.proj_y[i].floor() as usize;
                    let sample = pattern.get(
                        u.min(pattern.width() - 1),
                        v.min(pattern.height() - 1),
                    ) as f64;
                    quantize_u8(
                        surface.albedo * sample + surface.ambient + surface.interreflection,
                    )
                } else {
                    quantize_u8(surface.ambient)
                }
            })
        })
        .collect()
}

/// Renders a single pattern.
pub fn render(rig: &Rig, surface: &Surface, pattern: &GrayImage) -> GrayImage {
    render_stack(rig, surface, &[pattern])
        .pop()
        .expect("one pattern in, one image out")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::{CameraModel, RigidTransform};
    use approx::assert_relative_eq;
    use nalgebra::Unit;

    pub(crate) fn test_rig() -> Rig {
        let camera = CameraModel::new(400.0, 400.0, 160.0, 120.0, 320, 240).unwrap();
        let projector = CameraModel::new(500.0, 500.0, 320.0, 180.0, 640, 360).unwrap();
        let projector_pose = RigidTransform::rotation_about_point(
            Unit::new_normalize(crate::geometry::Vec3::y()),
            -0.3,
            &WorldPoint::new(0.0, 0.0, 600.0),
        );
        Rig {
            camera,
            camera_pose: RigidTransform::identity(),
            projector,
            projector_pose,
        }
    }

    fn plane_surface(z: f64) -> Surface {
        Surface::new(
            SurfaceKind::Plane {
                point: WorldPoint::new(0.0, 0.0, z),
                normal: Unit::new_normalize(-crate::geometry::Vec3::z()),
            },
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn white_pattern_lights_all_visible_pixels() {
        let rig = test_rig();
        let surface = plane_surface(600.0);
        let white = GrayImage::constant(640, 360, 255);
        let image = render(&rig, &surface, &white);
        let gt = ground_truth(&rig, &surface);
        let mut lit = 0;
        for i in 0..image.len() {
            if gt.corr.status[i] == PixelStatus::Valid {
                assert_eq!(image.as_slice()[i], 255);
                lit += 1;
            } else {
                assert_eq!(image.as_slice()[i], 0);
            }
        }
        assert!(lit > 10_000, "only {lit} lit pixels");
    }

    #[test]
    fn black_pattern_leaves_only_ambient() {
        let rig = test_rig();
        let mut surface = plane_surface(600.0);
        surface.ambient = 12.0;
        let black = GrayImage::constant(640, 360, 0);
        let image = render(&rig, &surface, &black);
        assert!(image.as_slice().iter().all(|v| *v == 12));
    }

    #[test]
    fn plane_depth_is_exact() {
        let rig = test_rig();
        let surface = plane_surface(600.0);
        let gt = ground_truth(&rig, &surface);
        // Center pixel looks straight down the axis.
        let center = gt.index(160, 120);
        assert!(gt.hit[center]);
        assert_relative_eq!(gt.depth[center], 600.0, epsilon = 1e-6);
        // Fronto-parallel plane: camera-frame z-depth is constant.
        for i in 0..gt.depth.len() {
            if gt.hit[i] {
                assert_relative_eq!(gt.depth[i], 600.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sphere_depth_minimum_at_subcenter_pixel() {
        let rig = test_rig();
        let surface = Surface::new(
            SurfaceKind::Sphere {
                center: WorldPoint::new(0.0, 0.0, 600.0),
                radius: 80.0,
            },
            0.9,
            5.0,
        )
        .unwrap();
        let gt = ground_truth(&rig, &surface);
        let mut min_depth = f64::INFINITY;
        let mut argmin = (0usize, 0usize);
        for row in 0..gt.height {
            for col in 0..gt.width {
                let i = gt.index(col, row);
                if gt.hit[i] && gt.depth[i] < min_depth {
                    min_depth = gt.depth[i];
                    argmin = (col, row);
                }
            }
        }
        // Sphere center projects to the principal point (160, 120).
        assert!(
            (argmin.0 as i64 - 160).abs() <= 1 && (argmin.1 as i64 - 120).abs() <= 1,
            "nearest pixel at {argmin:?}"
        );
        assert_relative_eq!(min_depth, 520.0, epsilon = 0.5);
    }

    #[test]
    fn ground_truth_triangulates_back_to_depth() {
        let rig = test_rig();
        let surface = plane_surface(580.0);
        let gt = ground_truth(&rig, &surface);
        let scan = rig.scan_rig();
        let opts = crate::triangulation::TriangulateOptions::default();
        let (cloud, stats) = crate::triangulation::triangulate_map(&gt.corr, &scan, &opts).unwrap();
        assert_eq!(stats.emitted, gt.corr.valid_count());
        for p in &cloud.points {
            assert_relative_eq!(p.z, 580.0, epsilon = 1e-3);
        }
        // Spot-check depth agreement via provenance.
        let prov = cloud.provenance.as_ref().unwrap();
        for (k, p) in cloud.points.iter().enumerate().step_by(997) {
            let i = gt.index(prov[k][0] as usize, prov[k][1] as usize);
            assert_relative_eq!(p.z, gt.depth[i], epsilon = 1e-3);
        }
    }

    #[test]
    fn occluder_shadows_are_marked() {
        let rig = test_rig();
        let surface = Surface::new(super::super::two_plane_occluder(), 0.9, 3.0).unwrap();
        let gt = ground_truth(&rig, &surface);
        let shadowed = gt
            .hit
            .iter()
            .zip(&gt.projector_visible)
            .zip(&gt.unshadowed)
            .filter(|((h, v), u)| **h && **v && !**u)
            .count();
        assert!(shadowed > 100, "expected a shadow region, got {shadowed}");
    }

    #[test]
    fn rendering_is_deterministic() {
        let rig = test_rig();
        let surface = plane_surface(600.0);
        let pattern = GrayImage::from_fn(640, 360, |c, r| ((c ^ r) % 256) as u8);
        let a = render(&rig, &surface, &pattern);
        let b = render(&rig, &surface, &pattern);
        assert_eq!(a, b);
    }
}
