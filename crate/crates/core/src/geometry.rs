//! World frame, array orientation and the angular view of a point from the array.
//!
//! The world frame has the ground at `z = 0` and `z` pointing up. An [`ArrayPose`]
//! places the array phase center somewhere in that frame and orients its boresight.
//! Directions are reported in the array frame: azimuth is positive toward the
//! array's left (+y for an unrotated array) and downtilt is positive toward the ground.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub const ORIGIN: Point3D = Point3D { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn offset(&self, by: Point3D) -> Point3D {
        Point3D::new(self.x + by.x, self.y + by.y, self.z + by.z)
    }

    fn sub(&self, other: &Point3D) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }

    fn from_array(v: [f64; 3]) -> Point3D {
        Point3D::new(v[0], v[1], v[2])
    }
}

/// Euclidean distance in meters.
pub fn distance(p: &Point3D, q: &Point3D) -> f64 {
    let d = p.sub(q);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Azimuth/downtilt pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub downtilt: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        azimuth: 0.0,
        downtilt: 0.0,
    };

    /// Builds a direction, wrapping azimuth into [-180, 180) and clamping downtilt to [-90, 90].
    pub fn new(azimuth: f64, downtilt: f64) -> Self {
        Self {
            azimuth: wrap_degrees(azimuth),
            downtilt: downtilt.clamp(-90.0, 90.0),
        }
    }

    pub fn az_rad(&self) -> f64 {
        self.azimuth.to_radians()
    }

    pub fn tilt_rad(&self) -> f64 {
        self.downtilt.to_radians()
    }

    /// Unit vector in the array frame (x boresight, y left, z up).
    pub fn unit_vector(&self) -> [f64; 3] {
        let (sa, ca) = self.az_rad().sin_cos();
        let (st, ct) = self.tilt_rad().sin_cos();
        [ct * ca, ct * sa, -st]
    }

    /// Angle between two directions, in degrees.
    pub fn separation(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
        dot.acos().to_degrees()
    }
}

fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360.0 for tiny negative inputs
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Proper rotation stored as a row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Rotation about +z (counter-clockwise seen from above).
    pub fn about_z(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation about +y. A positive angle tips +x toward -z.
    pub fn about_y(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    pub fn about_x(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation { m }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn apply_inverse(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn rotate_point(&self, p: &Point3D) -> Point3D {
        Point3D::from_array(self.apply([p.x, p.y, p.z]))
    }
}

/// Position and orientation of the array phase center in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPose {
    pub position: Point3D,
    /// Maps array-frame vectors into the world frame.
    pub orientation: Rotation,
}

impl ArrayPose {
    /// Array at `position`, boresight turned `yaw_deg` from +x and pitched
    /// `mech_downtilt_deg` toward the ground.
    pub fn new(position: Point3D, yaw_deg: f64, mech_downtilt_deg: f64) -> Self {
        Self {
            position,
            orientation: Rotation::about_z(yaw_deg).compose(&Rotation::about_y(mech_downtilt_deg)),
        }
    }

    /// Applies a world-frame rotation to both the position and the orientation.
    pub fn rotated(&self, r: &Rotation) -> Self {
        Self {
            position: r.rotate_point(&self.position),
            orientation: r.compose(&self.orientation),
        }
    }

    /// World-frame point reached by travelling `range` meters along `dir`.
    pub fn point_at(&self, dir: &Direction, range: f64) -> Point3D {
        let u = self.orientation.apply(dir.unit_vector());
        Point3D::new(
            self.position.x + range * u[0],
            self.position.y + range * u[1],
            self.position.z + range * u[2],
        )
    }
}

/// Direction of `point` as seen from the array, in the array frame.
pub fn direction_to(point: &Point3D, pose: &ArrayPose) -> Result<Direction> {
    let d = point.sub(&pose.position);
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if norm < 1e-12 {
        return Err(Error::DegenerateDirection);
    }
    let local = pose.orientation.apply_inverse(d);
    let horiz = local[0].hypot(local[1]);
    let az = local[1].atan2(local[0]).to_degrees();
    let tilt = (-local[2]).atan2(horiz).to_degrees();
    Ok(Direction::new(az, tilt))
}
