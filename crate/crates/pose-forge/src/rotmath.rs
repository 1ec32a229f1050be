//! Quaternion and rotation algebra used by every other module.
//!
//! Conventions, fixed once so that serialized artifacts are stable:
//!
//! - Quaternions are scalar-first `[s, vx, vy, vz]`, unit norm, Hamilton
//!   product, and canonical sign (`s >= 0`; at `s == 0` the first non-zero
//!   vector component is made positive). A quaternion and its negation
//!   describe the same rotation; canonicalization picks one representative
//!   deterministically.
//! - `Quaternion::rotate` applies the rotation as a coordinate map: for a
//!   camera attitude `q(R_BC)` it takes body-frame coordinates to
//!   camera-frame coordinates.
//! - Axis-angle extraction returns the minimal-angle representative
//!   (angle in `[0, 180]` degrees); an axis-angle built with an angle above
//!   180 degrees round-trips to the equivalent flipped-axis form, which is
//!   the same rotation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for unit-norm and orthonormality invariants maintained by
/// constructing operations.
pub const UNIT_TOL: f64 = 1e-9;

/// Looser tolerance accepted when validating rotation matrices from
/// external sources.
pub const MATRIX_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RotError {
    #[error("quaternion components have near-zero norm")]
    ZeroNorm,
    #[error("rotation axis must be unit length, got |axis| = {norm}")]
    NonUnitAxis { norm: f64 },
    #[error("matrix is not a rotation: {reason}")]
    NotARotation { reason: String },
}

/// Plain 3-vector. Field semantics (frame, units) are documented at each
/// use site; the type itself is frame-agnostic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn unit_x() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub const fn unit_y() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub const fn unit_z() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn dot(self, rhs: Self) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Self) -> Self {
        Self::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` when the norm is below
    /// `1e-12`.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-angle form of a rotation. The axis is unit length whenever the
/// angle is meaningfully non-zero; at angle 0 the axis is fixed to +x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle_deg: f64,
}

impl AxisAngle {
    pub fn new(axis: Vec3, angle_deg: f64) -> Self {
        Self { axis, angle_deg }
    }
}

/// Unit quaternion with canonical sign. Fields are private so that every
/// value in circulation satisfies the invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    s: f64,
    v: Vec3,
}

impl Quaternion {
    /// Build from raw components, normalizing and canonicalizing.
    pub fn new(s: f64, vx: f64, vy: f64, vz: f64) -> Result<Self, RotError> {
        let v = Vec3::new(vx, vy, vz);
        let norm = (s * s + v.norm_squared()).sqrt();
        if norm < 1e-12 {
            return Err(RotError::ZeroNorm);
        }
        let inv = 1.0 / norm;
        Ok(Self {
            s: s * inv,
            v: v * inv,
        }
        .canonicalized())
    }

    pub const fn identity() -> Self {
        Self {
            s: 1.0,
            v: Vec3::zero(),
        }
    }

    pub fn scalar(&self) -> f64 {
        self.s
    }

    pub fn vector(&self) -> Vec3 {
        self.v
    }

    /// `[s, vx, vy, vz]`, the order used by every serialized artifact.
    pub fn components(&self) -> [f64; 4] {
        [self.s, self.v.x, self.v.y, self.v.z]
    }

    pub fn from_components(c: [f64; 4]) -> Result<Self, RotError> {
        Self::new(c[0], c[1], c[2], c[3])
    }

    fn canonicalized(self) -> Self {
        let flip = if self.s < 0.0 {
            true
        } else if self.s == 0.0 {
            // Resolve the remaining two-fold ambiguity at 180 degrees by the
            // first non-zero vector component.
            let first = if self.v.x != 0.0 {
                self.v.x
            } else if self.v.y != 0.0 {
                self.v.y
            } else {
                self.v.z
            };
            first < 0.0
        } else {
            false
        };
        if flip {
            Self {
                s: -self.s,
                v: -self.v,
            }
        } else {
            self
        }
    }

    fn renormalized(self) -> Self {
        let norm = (self.s * self.s + self.v.norm_squared()).sqrt();
        let inv = 1.0 / norm;
        Self {
            s: self.s * inv,
            v: self.v * inv,
        }
    }

    /// Hamilton product `self * rhs`, renormalized and canonicalized.
    pub fn multiply(&self, rhs: &Quaternion) -> Quaternion {
        let (s, v) = hamilton(self.s, self.v, rhs.s, rhs.v);
        Quaternion { s, v }.renormalized().canonicalized()
    }

    /// `(s, -v)`; equals the inverse for unit quaternions.
    pub fn conjugate(&self) -> Quaternion {
        Quaternion {
            s: self.s,
            v: -self.v,
        }
        .canonicalized()
    }

    /// Four-component dot product. Equals the scalar part of
    /// `self * conj(rhs)` without any sign canonicalization, which is what
    /// the unfolded attitude-error metric needs.
    pub fn dot(&self, rhs: &Quaternion) -> f64 {
        self.s * rhs.s + self.v.dot(rhs.v)
    }

    /// Raw Hamilton product parts `(scalar, vector)` of `self * rhs`, with
    /// no renormalization or sign canonicalization applied.
    pub fn product_parts(&self, rhs: &Quaternion) -> (f64, Vec3) {
        hamilton(self.s, self.v, rhs.s, rhs.v)
    }

    /// Minimal axis-angle representative: angle `2*acos(s)` in degrees
    /// (canonical sign keeps it in `[0, 180]`), axis `+x` when the angle
    /// vanishes.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let angle_deg = 2.0 * self.s.clamp(-1.0, 1.0).acos().to_degrees();
        let axis = match self.v.normalized() {
            Some(a) if self.v.norm() > 1e-9 => a,
            _ => Vec3::unit_x(),
        };
        AxisAngle::new(axis, angle_deg)
    }

    /// Rotation by `aa.angle_deg` about `aa.axis`. Rejects a non-unit axis
    /// unless the angle is negligible.
    pub fn from_axis_angle(aa: &AxisAngle) -> Result<Quaternion, RotError> {
        if aa.angle_deg.abs() <= 1e-9 {
            return Ok(Quaternion::identity());
        }
        let norm = aa.axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(RotError::NonUnitAxis { norm });
        }
        let half = 0.5 * aa.angle_deg.to_radians();
        Ok(Quaternion {
            s: half.cos(),
            v: aa.axis * half.sin(),
        }
        .renormalized()
        .canonicalized())
    }

    /// Rotation angle between two attitudes, folded to `[0, 180]` degrees.
    /// This folded form is what label assignment minimizes.
    pub fn angular_distance_deg(&self, rhs: &Quaternion) -> f64 {
        let angle = self.multiply(&rhs.conjugate()).to_axis_angle().angle_deg;
        angle.min(360.0 - angle)
    }

    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let (s, x, y, z) = (self.s, self.v.x, self.v.y, self.v.z);
        RotationMatrix {
            m: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - s * z),
                    2.0 * (x * z + s * y),
                ],
                [
                    2.0 * (x * y + s * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - s * x),
                ],
                [
                    2.0 * (x * z - s * y),
                    2.0 * (y * z + s * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    /// Shepperd extraction, branching on the largest of trace and diagonal
    /// entries for numerical stability.
    pub fn from_rotation_matrix(r: &RotationMatrix) -> Quaternion {
        let m = &r.m;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace > m[0][0] && trace > m[1][1] && trace > m[2][2] {
            let t = (1.0 + trace).sqrt();
            let k = 0.5 / t;
            Quaternion {
                s: 0.5 * t,
                v: Vec3::new(
                    (m[2][1] - m[1][2]) * k,
                    (m[0][2] - m[2][0]) * k,
                    (m[1][0] - m[0][1]) * k,
                ),
            }
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let t = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            let k = 0.5 / t;
            Quaternion {
                s: (m[2][1] - m[1][2]) * k,
                v: Vec3::new(
                    0.5 * t,
                    (m[0][1] + m[1][0]) * k,
                    (m[0][2] + m[2][0]) * k,
                ),
            }
        } else if m[1][1] >= m[2][2] {
            let t = (1.0 - m[0][0] + m[1][1] - m[2][2]).sqrt();
            let k = 0.5 / t;
            Quaternion {
                s: (m[0][2] - m[2][0]) * k,
                v: Vec3::new(
                    (m[0][1] + m[1][0]) * k,
                    0.5 * t,
                    (m[1][2] + m[2][1]) * k,
                ),
            }
        } else {
            let t = (1.0 - m[0][0] - m[1][1] + m[2][2]).sqrt();
            let k = 0.5 / t;
            Quaternion {
                s: (m[1][0] - m[0][1]) * k,
                v: Vec3::new(
                    (m[0][2] + m[2][0]) * k,
                    (m[1][2] + m[2][1]) * k,
                    0.5 * t,
                ),
            }
        };
        q.renormalized().canonicalized()
    }

    /// Apply the rotation to a vector (`R(q) * v`). For an attitude
    /// `q(R_BC)` this maps body-frame coordinates to camera-frame
    /// coordinates.
    pub fn rotate(&self, p: Vec3) -> Vec3 {
        // q p q* expanded: p + 2 s (v x p) + 2 v x (v x p)
        let t = self.v.cross(p) * 2.0;
        p + t * self.s + self.v.cross(t)
    }
}

fn hamilton(s1: f64, v1: Vec3, s2: f64, v2: Vec3) -> (f64, Vec3) {
    (
        s1 * s2 - v1.dot(v2),
        v2 * s1 + v1 * s2 + v1.cross(v2),
    )
}

/// 3x3 orthonormal matrix, row-major: `m[row][col]`. As a coordinate map
/// it acts on column vectors, `y_i = sum_j m[i][j] x_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix {
    m: [[f64; 3]; 3],
}

impl RotationMatrix {
    /// Validate orthonormality (within `MATRIX_TOL` elementwise) and a +1
    /// determinant before accepting external data.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, RotError> {
        let candidate = Self { m };
        let rtr = candidate.transpose().compose(&candidate);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                let err = (rtr.m[i][j] - expect).abs();
                if err > MATRIX_TOL {
                    return Err(RotError::NotARotation {
                        reason: format!("R^T R deviates from identity by {err:.3e} at ({i},{j})"),
                    });
                }
            }
        }
        let det = candidate.determinant();
        if (det - 1.0).abs() > MATRIX_TOL {
            return Err(RotError::NotARotation {
                reason: format!("determinant is {det}, expected +1"),
            });
        }
        Ok(candidate)
    }

    pub(crate) fn from_rows_unchecked(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * p.x + self.m[0][1] * p.y + self.m[0][2] * p.z,
            self.m[1][0] * p.x + self.m[1][1] * p.y + self.m[1][2] * p.z,
            self.m[2][0] * p.x + self.m[2][1] * p.y + self.m[2][2] * p.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = self.m[j][i];
            }
        }
        Self { m: t }
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        Self { m: out }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}
