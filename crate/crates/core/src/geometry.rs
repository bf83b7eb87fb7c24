//! Pinhole camera/projector model, lens distortion, rigid transforms, and
//! projection — the shared math substrate.
//!
//! Conventions:
//! - A [`RigidTransform`] maps world coordinates into device coordinates,
//!   `x_dev = R x_world + t`. The camera looks down +z.
//! - Pixel `(col, row)` covers the half-open square `[col, col+1) × [row, row+1)`;
//!   its center is `(col + 0.5, row + 0.5)`.
//! - Lens distortion acts on normalized camera coordinates, before the
//!   intrinsic matrix is applied.

use nalgebra::{Matrix3, Point3, Unit, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// 3D point in scene units (millimetres by convention).
pub type WorldPoint = Point3<f64>;

/// Continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance_to(&self, other: &PixelPoint) -> f64 {
        ((self.u - other.u).powi(2) + (self.v - other.v).powi(2)).sqrt()
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point is behind the camera (z_cam = {z})")]
    BehindCamera { z: f64 },
    #[error("undistortion did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("not a rotation matrix (orthonormality/determinant error {0:.3e})")]
    InvalidRotation(f64),
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
}

/// Radial (k1, k2, k3) and tangential (p1, p2) lens distortion.
///
/// All-zero coefficients mean an ideal pinhole. Serialized as the 5-element
/// array `[k1, k2, p1, p2, k3]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistortionCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl DistortionCoeffs {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(k1: f64, k2: f64, p1: f64, p2: f64, k3: f64) -> Self {
        Self { k1, k2, k3, p1, p2 }
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Coefficients in file order `[k1, k2, p1, p2, k3]`.
    pub fn as_array(&self) -> [f64; 5] {
        [self.k1, self.k2, self.p1, self.p2, self.k3]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            k1: a[0],
            k2: a[1],
            p1: a[2],
            p2: a[3],
            k3: a[4],
        }
    }
}

impl Serialize for DistortionCoeffs {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistortionCoeffs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Self::from_array(<[f64; 5]>::deserialize(deserializer)?))
    }
}

/// Intrinsic model of a camera or projector (the projector is a reverse
/// camera and uses the same parameterization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length in pixels along x.
    pub fx: f64,
    /// Focal length in pixels along y.
    pub fy: f64,
    /// Principal point x in pixels.
    pub cx: f64,
    /// Principal point y in pixels.
    pub cy: f64,
    /// Axis skew in pixels; 0 in practice.
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub dist: DistortionCoeffs,
    #[serde(rename = "width")]
    pub image_width: u32,
    #[serde(rename = "height")]
    pub image_height: u32,
}

impl CameraModel {
    /// A distortion-free model. Fails if a focal length is not positive or
    /// any parameter is non-finite. A principal point outside the sensor is
    /// accepted (see [`CameraModel::principal_point_in_sensor`]).
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, GeometryError> {
        let model = Self {
            fx,
            fy,
            cx,
            cy,
            skew: 0.0,
            dist: DistortionCoeffs::zero(),
            image_width,
            image_height,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_distortion(mut self, dist: DistortionCoeffs) -> Self {
        self.dist = dist;
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        let params = [self.fx, self.fy, self.cx, self.cy, self.skew];
        if params.iter().any(|p| !p.is_finite())
            || self.dist.as_array().iter().any(|p| !p.is_finite())
        {
            return Err(GeometryError::InvalidCamera("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Whether the principal point falls on the sensor. Projectors commonly
    /// have it outside; callers may warn but must not reject.
    pub fn principal_point_in_sensor(&self) -> bool {
        self.cx >= 0.0
            && self.cx < self.image_width as f64
            && self.cy >= 0.0
            && self.cy < self.image_height as f64
    }

    /// The 3×3 intrinsic matrix K.
    pub fn intrinsic_matrix(&self) -> Mat3 {
        Mat3::new(
            self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0,
        )
    }

    /// Distorted normalized coordinates → pixel.
    pub fn normalized_to_pixel(&self, xd: f64, yd: f64) -> PixelPoint {
        PixelPoint::new(
            self.fx * xd + self.skew * yd + self.cx,
            self.fy * yd + self.cy,
        )
    }

    /// Pixel → undistorted normalized coordinates (inverts intrinsics, then
    /// the distortion polynomial).
    pub fn pixel_to_normalized(&self, pixel: PixelPoint) -> Result<(f64, f64), GeometryError> {
        let yd = (pixel.v - self.cy) / self.fy;
        let xd = (pixel.u - self.cx - self.skew * yd) / self.fx;
        undistort(&self.dist, xd, yd)
    }

    /// Removes lens distortion from a pixel coordinate, keeping intrinsics.
    pub fn undistort_pixel(&self, pixel: PixelPoint) -> Result<PixelPoint, GeometryError> {
        if self.dist.is_zero() {
            return Ok(pixel);
        }
        let (x, y) = self.pixel_to_normalized(pixel)?;
        Ok(self.normalized_to_pixel_ideal(x, y))
    }

    /// Undistorted normalized coordinates → pixel through K only (no
    /// distortion re-applied).
    pub fn normalized_to_pixel_ideal(&self, x: f64, y: f64) -> PixelPoint {
        PixelPoint::new(self.fx * x + self.skew * y + self.cx, self.fy * y + self.cy)
    }
}

fn mat3_max_rotation_error(r: &Mat3) -> f64 {
    let gram = r.transpose() * r;
    let mut err: f64 = (r.determinant() - 1.0).abs();
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((gram[(i, j)] - target).abs());
        }
    }
    err
}

/// Projects an arbitrary 3×3 matrix to the nearest rotation (SVD, with
/// determinant guard against reflections).
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let d = (u * v_t).determinant();
    let u = if d < 0.0 {
        let mut u = u;
        u.column_mut(2).scale_mut(-1.0);
        u
    } else {
        u
    };
    u * v_t
}

/// Rotation + translation mapping world coordinates into device coordinates:
/// `x_dev = R x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    #[serde(rename = "R", with = "mat3_rows")]
    pub rotation: Mat3,
    #[serde(rename = "t", with = "vec3_array")]
    pub translation: Vec3,
}

pub const ROTATION_TOLERANCE: f64 = 1e-9;

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validates `RᵀR = I` and `det R = +1` within [`ROTATION_TOLERANCE`].
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        let err = mat3_max_rotation_error(&rotation);
        if err > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation(err));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Skips the rotation check. For matrices from trusted math or from
    /// files whose printed precision is below the validation tolerance.
    pub fn new_unchecked(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Projects `rotation` to the nearest true rotation, then constructs.
    pub fn new_projected(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation: nearest_rotation(&rotation),
            translation,
        }
    }

    pub fn from_axis_angle(axis: Unit<Vec3>, angle: f64) -> Self {
        Self {
            rotation: Mat3::from(nalgebra::Rotation3::from_axis_angle(&axis, angle)),
            translation: Vec3::zeros(),
        }
    }

    /// Rotation about an axis through `center` (not through the origin).
    pub fn rotation_about_point(axis: Unit<Vec3>, angle: f64, center: &Point3<f64>) -> Self {
        let r = Mat3::from(nalgebra::Rotation3::from_axis_angle(&axis, angle));
        let t = center.coords - r * center.coords;
        Self {
            rotation: r,
            translation: t,
        }
    }

    pub fn apply(&self, p: &WorldPoint) -> WorldPoint {
        WorldPoint::from(self.rotation * p.coords + self.translation)
    }

    /// Rotates a direction vector (no translation).
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `compose(a, b)` applies `b` first: `compose(a, b)·x = a·(b·x)`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Device origin expressed in world coordinates.
    pub fn center(&self) -> WorldPoint {
        WorldPoint::from(-(self.rotation.transpose() * self.translation))
    }

    /// Rotation angle in radians, in [0, π].
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    pub fn max_rotation_error(&self) -> f64 {
        mat3_max_rotation_error(&self.rotation)
    }
}

mod mat3_rows {
    use super::Mat3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat3, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ];
        rows.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Mat3, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(deserializer)?;
        Ok(Mat3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ))
    }
}

mod vec3_array {
    use super::Vec3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, serializer: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(deserializer)?;
        Ok(Vec3::new(a[0], a[1], a[2]))
    }
}

/// Applies the radial–tangential polynomial to normalized coordinates.
pub fn distort(dist: &DistortionCoeffs, x: f64, y: f64) -> (f64, f64) {
    let r2 = x * x + y * y;
    let radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3));
    let xd = x * radial + 2.0 * dist.p1 * x * y + dist.p2 * (r2 + 2.0 * x * x);
    let yd = y * radial + dist.p1 * (r2 + 2.0 * y * y) + 2.0 * dist.p2 * x * y;
    (xd, yd)
}

/// 2×2 Jacobian of [`distort`] at (x, y), row-major.
fn distort_jacobian(dist: &DistortionCoeffs, x: f64, y: f64) -> [f64; 4] {
    let r2 = x * x + y * y;
    let radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3));
    // d(radial)/d(r2)
    let dr = dist.k1 + r2 * (2.0 * dist.k2 + 3.0 * dist.k3 * r2);
    let dxdx = radial + 2.0 * x * x * dr + 2.0 * dist.p1 * y + 6.0 * dist.p2 * x;
    let dxdy = 2.0 * x * y * dr + 2.0 * dist.p1 * x + 2.0 * dist.p2 * y;
    let dydx = dxdy;
    let dydy = radial + 2.0 * y * y * dr + 6.0 * dist.p1 * y + 2.0 * dist.p2 * x;
    [dxdx, dxdy, dydx, dydy]
}

const UNDISTORT_MAX_ITERATIONS: usize = 50;
const UNDISTORT_TOLERANCE: f64 = 1e-9;

/// Inverts [`distort`]: finds (x, y) with `distort(x, y) = (xd, yd)`.
///
/// A 1D bisection on the (monotone) radial profile seeds a damped Newton
/// iteration on the full 2D polynomial. Converges to well below 1e-9 for
/// every coefficient set in scope; the caller is responsible for staying in
/// the region where the polynomial is invertible.
pub fn undistort(dist: &DistortionCoeffs, xd: f64, yd: f64) -> Result<(f64, f64), GeometryError> {
    if dist.is_zero() {
        return Ok((xd, yd));
    }

    let radial_only = |r: f64| {
        let r2 = r * r;
        r * (1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3)))
    };

    // Seed: invert the radial profile for the observed radius by bisection.
    let rd = (xd * xd + yd * yd).sqrt();
    let (mut x, mut y) = (xd, yd);
    if rd > 0.0 {
        let mut hi = rd;
        let mut grew = 0;
        while radial_only(hi) < rd && grew < 60 {
            hi *= 2.0;
            grew += 1;
        }
        if radial_only(hi) >= rd {
            let mut lo = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if radial_only(mid) < rd {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let scale = 0.5 * (lo + hi) / rd;
            x = xd * scale;
            y = yd * scale;
        }
    }

    let residual = |x: f64, y: f64| {
        let (fx, fy) = distort(dist, x, y);
        let (ex, ey) = (fx - xd, fy - yd);
        (ex, ey, (ex * ex + ey * ey).sqrt())
    };

    let (mut ex, mut ey, mut err) = residual(x, y);
    for iter in 0..UNDISTORT_MAX_ITERATIONS {
        if err <= UNDISTORT_TOLERANCE * 1e-3 {
            return Ok((x, y));
        }
        let j = distort_jacobian(dist, x, y);
        let det = j[0] * j[3] - j[1] * j[2];
        if det.abs() < 1e-300 {
            return Err(GeometryError::NoConvergence {
                residual: err,
                iterations: iter,
            });
        }
        let dx = -(j[3] * ex - j[1] * ey) / det;
        let dy = -(-j[2] * ex + j[0] * ey) / det;

        // Backtrack until the residual shrinks.
        let mut alpha = 1.0;
        loop {
            let (nex, ney, nerr) = residual(x + alpha * dx, y + alpha * dy);
            if nerr < err || alpha < 1.0 / 1024.0 {
                x += alpha * dx;
                y += alpha * dy;
                (ex, ey, err) = (nex, ney, nerr);
                break;
            }
            alpha *= 0.5;
        }
    }

    if err <= UNDISTORT_TOLERANCE {
        Ok((x, y))
    } else {
        Err(GeometryError::NoConvergence {
            residual: err,
            iterations: UNDISTORT_MAX_ITERATIONS,
        })
    }
}

/// Projects a world point into a device: distortion in normalized
/// coordinates, then intrinsics. Returns the pixel and the depth `λ = z_cam`.
pub fn project(
    model: &CameraModel,
    pose: &RigidTransform,
    point: &WorldPoint,
) -> Result<(PixelPoint, f64), GeometryError> {
    let cam = pose.apply(point);
    if cam.z <= 0.0 {
        return Err(GeometryError::BehindCamera { z: cam.z });
    }
    let (xd, yd) = distort(&model.dist, cam.x / cam.z, cam.y / cam.z);
    Ok((model.normalized_to_pixel(xd, yd), cam.z))
}

/// Inverse of [`project`] given the depth: recovers the world point whose
/// projection is `pixel` at `z_cam = depth`.
pub fn back_project(
    model: &CameraModel,
    pose: &RigidTransform,
    pixel: PixelPoint,
    depth: f64,
) -> Result<WorldPoint, GeometryError> {
    let (x, y) = model.pixel_to_normalized(pixel)?;
    let cam = Vec3::new(x * depth, y * depth, depth);
    Ok(pose.invert().apply(&WorldPoint::from(cam)))
}

/// World-space ray through a pixel: `(origin, unit direction)`. The origin
/// is the device center; points along the ray have positive depth.
pub fn pixel_ray(
    model: &CameraModel,
    pose: &RigidTransform,
    pixel: PixelPoint,
) -> Result<(WorldPoint, Vec3), GeometryError> {
    let (x, y) = model.pixel_to_normalized(pixel)?;
    let dir_cam = Vec3::new(x, y, 1.0);
    let dir_world = (pose.rotation.transpose() * dir_cam).normalize();
    Ok((pose.center(), dir_world))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn table_8_1_camera() -> CameraModel {
        CameraModel::new(1440.38101, 1437.11605, 667.836875, 354.202552, 1280, 720).unwrap()
    }

    pub(crate) fn table_8_2_distortion() -> DistortionCoeffs {
        DistortionCoeffs::from_array([5.4658e-01, -2.0200e+01, -2.2032e-02, 8.2588e-03, 2.1111e+02])
    }

    fn table_8_5_pose() -> RigidTransform {
        RigidTransform::new_unchecked(
            Mat3::new(
                0.96523178,
                -0.06801648,
                0.25239131,
                -0.05246011,
                0.89550287,
                0.4419531,
                -0.25607724,
                -0.43982765,
                0.86079968,
            ),
            Vec3::new(-257.85891969, -53.58173962, 1944.10591591),
        )
    }

    #[test]
    fn project_identity_case() {
        let model = CameraModel::new(1.0, 1.0, 0.0, 0.0, 2, 2).unwrap();
        let (px, depth) = project(
            &model,
            &RigidTransform::identity(),
            &WorldPoint::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert_eq!((px.u, px.v), (0.0, 0.0));
        assert_eq!(depth, 1.0);
    }

    #[test]
    fn project_analytic_case() {
        let model = CameraModel::new(100.0, 100.0, 640.0, 360.0, 1280, 720).unwrap();
        let (px, depth) = project(
            &model,
            &RigidTransform::identity(),
            &WorldPoint::new(1.0, 0.0, 2.0),
        )
        .unwrap();
        assert_relative_eq!(px.u, 690.0, max_relative = 1e-15);
        assert_relative_eq!(px.v, 360.0, max_relative = 1e-15);
        assert_eq!(depth, 2.0);
    }

    #[test]
    fn project_matches_matrix_oracle() {
        // Expected values computed beforehand with an explicit 3x4
        // multiply + divide on the intrinsics and pose used below.
        let model = table_8_1_camera();
        let pose = table_8_5_pose();
        let (px, depth) = project(&model, &pose, &WorldPoint::new(100.0, 100.0, 100.0)).unwrap();
        assert_relative_eq!(px.u, 562.854511625331, epsilon = 1e-8);
        assert_relative_eq!(px.v, 409.117319087411, epsilon = 1e-8);
        assert_relative_eq!(depth, 1960.595394910, epsilon = 1e-8);
    }

    #[test]
    fn project_rejects_points_behind_camera() {
        let model = CameraModel::new(1.0, 1.0, 0.0, 0.0, 2, 2).unwrap();
        let err = project(
            &model,
            &RigidTransform::identity(),
            &WorldPoint::new(0.0, 0.0, -1.0),
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::BehindCamera { .. }));
    }

    #[test]
    fn distort_zero_coeffs_is_identity() {
        let (x, y) = distort(&DistortionCoeffs::zero(), 0.3, -0.2);
        assert_eq!((x, y), (0.3, -0.2));
    }

    #[test]
    fn distort_origin_is_fixed_point() {
        let d = table_8_2_distortion();
        assert_eq!(distort(&d, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn distort_single_radial_term() {
        let d = DistortionCoeffs {
            k1: 0.1,
            ..Default::default()
        };
        let (x, y) = distort(&d, 0.5, 0.0);
        assert_relative_eq!(x, 0.5125, max_relative = 1e-15);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn undistort_zero_coeffs() {
        assert_eq!(
            undistort(&DistortionCoeffs::zero(), 0.3, 0.4).unwrap(),
            (0.3, 0.4)
        );
    }

    #[test]
    fn undistort_round_trip_single_term() {
        let d = DistortionCoeffs {
            k1: 0.1,
            ..Default::default()
        };
        let (xd, yd) = distort(&d, 0.5, 0.0);
        let (x, y) = undistort(&d, xd, yd).unwrap();
        assert_relative_eq!(x, 0.5, epsilon = 1e-9);
        assert!(y.abs() < 1e-9);
    }

    #[test]
    fn undistort_round_trip_grid_table_8_2() {
        // 10x10 grid of normalized points with r < 0.4.
        let d = table_8_2_distortion();
        for i in 0..10 {
            for j in 0..10 {
                let x = -0.28 + 0.056 * i as f64;
                let y = -0.28 + 0.056 * j as f64;
                if (x * x + y * y).sqrt() >= 0.4 {
                    continue;
                }
                let (xd, yd) = distort(&d, x, y);
                let (xu, yu) = undistort(&d, xd, yd).unwrap();
                let (xr, yr) = distort(&d, xu, yu);
                assert!(
                    ((xr - xd).powi(2) + (yr - yd).powi(2)).sqrt() < 1e-9,
                    "round trip failed at ({x}, {y})"
                );
            }
        }
    }

    #[test]
    fn compose_with_identity() {
        let t = RigidTransform::rotation_about_point(
            Unit::new_normalize(Vec3::new(1.0, 2.0, 0.5)),
            0.7,
            &WorldPoint::new(1.0, -2.0, 3.0),
        );
        let c = RigidTransform::identity().compose(&t);
        assert_relative_eq!(c.rotation, t.rotation, epsilon = 1e-15);
        assert_relative_eq!(c.translation, t.translation, epsilon = 1e-15);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform {
            rotation: Mat3::from(nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1)),
            translation: Vec3::new(4.0, -1.0, 9.0),
        };
        let c = t.compose(&t.invert());
        assert_relative_eq!(c.rotation, Mat3::identity(), epsilon = 1e-12);
        assert!(c.translation.norm() < 1e-12);
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        let z = Unit::new_normalize(Vec3::z());
        let quarter = RigidTransform::from_axis_angle(z, std::f64::consts::FRAC_PI_2);
        let half = quarter.compose(&quarter);
        let expected = RigidTransform::from_axis_angle(z, std::f64::consts::PI);
        assert_relative_eq!(half.rotation, expected.rotation, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_rotation() {
        let m = Mat3::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidTransform::new(m, Vec3::zeros()).is_err());
    }

    #[test]
    fn camera_model_json_layout() {
        let model = table_8_1_camera().with_distortion(table_8_2_distortion());
        let json = serde_json::to_value(&model).unwrap();
        assert_eq!(json["fx"], 1440.38101);
        assert_eq!(json["width"], 1280);
        let dist = json["dist"].as_array().unwrap();
        assert_eq!(dist.len(), 5);
        assert_eq!(dist[0], 5.4658e-01);
        assert_eq!(dist[4], 2.1111e+02);
        let back: CameraModel = serde_json::from_value(json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rigid_transform_json_is_row_major() {
        let t = RigidTransform::from_axis_angle(Unit::new_normalize(Vec3::z()), 0.5);
        let json = serde_json::to_value(&t).unwrap();
        let r = json["R"].as_array().unwrap();
        assert_eq!(r.len(), 3);
        // Row 0 of a z-rotation is [cos, -sin, 0].
        assert_relative_eq!(
            r[0].as_array().unwrap()[1].as_f64().unwrap(),
            -0.5f64.sin(),
            epsilon = 1e-15
        );
        let back: RigidTransform = serde_json::from_value(json).unwrap();
        assert_relative_eq!(back.rotation, t.rotation, epsilon = 1e-15);
    }

    #[test]
    fn back_project_inverts_project() {
        let model = table_8_1_camera();
        let pose = RigidTransform::rotation_about_point(
            Unit::new_normalize(Vec3::new(0.2, 1.0, -0.3)),
            0.4,
            &WorldPoint::new(10.0, 5.0, -2.0),
        );
        let x = WorldPoint::new(55.0, -20.0, 900.0);
        let (px, depth) = project(&model, &pose, &x).unwrap();
        let back = back_project(&model, &pose, px, depth).unwrap();
        assert_relative_eq!(back, x, epsilon = 1e-9);
    }

    #[test]
    fn back_project_inverts_project_with_distortion() {
        let model = table_8_1_camera().with_distortion(table_8_2_distortion());
        let pose = RigidTransform::identity();
        let x = WorldPoint::new(120.0, -60.0, 1000.0);
        let (px, depth) = project(&model, &pose, &x).unwrap();
        let back = back_project(&model, &pose, px, depth).unwrap();
        assert_relative_eq!(back, x, epsilon = 1e-6);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_rigid() -> impl Strategy<Value = RigidTransform> {
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.0..std::f64::consts::PI,
            -100.0..100.0f64,
            -100.0..100.0f64,
            -100.0..100.0f64,
        )
            .prop_filter_map("zero axis", |(ax, ay, az, angle, tx, ty, tz)| {
                let axis = Vec3::new(ax, ay, az);
                if axis.norm() < 1e-3 {
                    return None;
                }
                let mut t =
                    RigidTransform::from_axis_angle(Unit::new_normalize(axis), angle);
                t.translation = Vec3::new(tx, ty, tz);
                Some(t)
            })
    }

    proptest! {
        #[test]
        fn compose_and_invert_stay_rigid(a in arb_rigid(), b in arb_rigid()) {
            prop_assert!(a.compose(&b).max_rotation_error() < 1e-9);
            prop_assert!(a.invert().max_rotation_error() < 1e-9);
            prop_assert!(a.compose(&b.invert()).max_rotation_error() < 1e-9);
        }

        #[test]
        fn compose_is_application_order(a in arb_rigid(), b in arb_rigid(),
                                        px in -10.0..10.0f64, py in -10.0..10.0f64, pz in -10.0..10.0f64) {
            let p = WorldPoint::new(px, py, pz);
            let lhs = a.compose(&b).apply(&p);
            let rhs = a.apply(&b.apply(&p));
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }

        #[test]
        fn distort_undistort_round_trip(x in -0.35..0.35f64, y in -0.35..0.35f64,
                                        k1 in -0.3..0.3f64, k2 in -0.5..0.5f64,
                                        p1 in -0.05..0.05f64, p2 in -0.05..0.05f64) {
            prop_assume!((x * x + y * y).sqrt() < 0.5);
            let d = DistortionCoeffs { k1, k2, k3: 0.0, p1, p2 };
            let (xd, yd) = distort(&d, x, y);
            let (xu, yu) = undistort(&d, xd, yd).unwrap();
            let (xr, yr) = distort(&d, xu, yu);
            prop_assert!(((xr - xd).powi(2) + (yr - yd).powi(2)).sqrt() < 1e-9);
        }

        #[test]
        fn project_back_project_recovers_point(pose in arb_rigid(),
                                               x in -50.0..50.0f64, y in -50.0..50.0f64, z in 200.0..2000.0f64) {
            let model = CameraModel::new(1400.0, 1395.0, 640.0, 360.0, 1280, 720).unwrap();
            let world = pose.invert().apply(&WorldPoint::new(x, y, z));
            let (px, depth) = project(&model, &pose, &world).unwrap();
            let back = back_project(&model, &pose, px, depth).unwrap();
            prop_assert!((back - world).norm() < 1e-9);
        }
    }
}
