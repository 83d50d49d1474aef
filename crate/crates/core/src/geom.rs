//! Small geometric vocabulary: unit directions, rotations, rays and frames.

use crate::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

const UNIT_TOL: f64 = 1e-9;

/// Unit 3-vector. Euclidean norm is 1 within 1e-9 by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vec3);

impl Direction {
    /// Wraps a vector that is already unit length.
    pub fn new(v: Vec3) -> Result<Self> {
        if (v.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!(
                "direction norm {} deviates from 1 by more than {UNIT_TOL}",
                v.norm()
            )));
        }
        Ok(Direction(v))
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::invalid("cannot normalize a near-zero vector"));
        }
        Ok(Direction(v / n))
    }

    pub fn from_components(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalize(Vec3::new(x, y, z))
    }

    pub fn x_axis() -> Self {
        Direction(Vec3::x())
    }
    pub fn y_axis() -> Self {
        Direction(Vec3::y())
    }
    pub fn z_axis() -> Self {
        Direction(Vec3::z())
    }

    #[inline]
    pub fn vec(&self) -> Vec3 {
        self.0
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.0.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0.z
    }

    #[inline]
    pub fn dot(&self, other: Direction) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn flipped(&self) -> Direction {
        Direction(-self.0)
    }
}

/// Proper rotation: 3x3 orthonormal matrix with determinant +1 (within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn new(m: Mat3) -> Result<Self> {
        let gram = m * m.transpose();
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - target).abs());
            }
        }
        if dev > UNIT_TOL {
            return Err(Error::invalid(format!(
                "matrix is not orthonormal (max deviation {dev:.3e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!(
                "matrix determinant {det} is not +1"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    pub fn from_axis_angle(axis: Direction, angle: f64) -> Self {
        let r = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_unchecked(axis.vec()),
            angle,
        );
        Rotation(*r.matrix())
    }

    /// Builds a rotation whose columns are the given orthonormal frame, i.e.
    /// the map taking +x to `x`, +y to `y` and +z to `z`.
    pub fn from_frame(x: Vec3, y: Vec3, z: Vec3) -> Result<Self> {
        Self::new(Mat3::from_columns(&[x, y, z]))
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0 * v
    }

    #[inline]
    pub fn apply_direction(&self, d: Direction) -> Direction {
        // Orthonormal map preserves length.
        Direction(self.0 * d.vec())
    }

    /// Inverse rotation (transpose).
    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Composition: `self.compose(other)` applies `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }
}

/// Ray with unit direction.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Direction) -> Self {
        Ray {
            origin,
            dir: dir.vec(),
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Deterministic orthonormal basis completion: returns (e1, e2) such that
/// (e1, e2, n) is right-handed. The reference axis is picked as the cardinal
/// axis least aligned with `n`, so results are stable under small
/// perturbations of `n` away from axis-aligned configurations.
pub fn orthonormal_basis(n: Direction) -> (Vec3, Vec3) {
    let nv = n.vec();
    let ax = nv.x.abs();
    let ay = nv.y.abs();
    let az = nv.z.abs();
    let helper = if ax <= ay && ax <= az {
        Vec3::x()
    } else if ay <= az {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (helper - nv * helper.dot(&nv)).normalize();
    let e2 = nv.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_rejects_non_unit() {
        assert!(Direction::new(Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(Direction::new(Vec3::new(0.0, 0.0, 1.0)).is_ok());
        assert!(Direction::normalize(Vec3::zeros()).is_err());
    }

    #[test]
    fn rotation_rejects_reflection() {
        let mut m = Mat3::identity();
        m[(0, 0)] = -1.0;
        assert!(Rotation::new(m).is_err());
    }

    #[test]
    fn rotation_roundtrip() {
        let r = Rotation::from_axis_angle(Direction::from_components(1.0, 2.0, 3.0).unwrap(), 0.7);
        let v = Vec3::new(0.3, -1.2, 2.0);
        let back = r.inverse().apply(r.apply(v));
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn basis_is_orthonormal_right_handed() {
        for d in [
            Direction::z_axis(),
            Direction::from_components(1.0, -2.0, 0.5).unwrap(),
            Direction::from_components(0.0, 1.0, 0.0).unwrap(),
        ] {
            let (e1, e2) = orthonormal_basis(d);
            assert!(e1.dot(&e2).abs() < 1e-12);
            assert!(e1.dot(&d.vec()).abs() < 1e-12);
            assert!((e1.cross(&e2) - d.vec()).norm() < 1e-12);
        }
    }
}
