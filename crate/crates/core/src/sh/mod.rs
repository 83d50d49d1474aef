//! Real spherical-harmonics algebra: basis evaluation, projection, rotation,
//! Wigner 3-j symbols and triple-product integrals.
//!
//! Coefficients are flattened with l ascending and m ascending from -l to +l
//! within each band, so (l, m) lives at index `l*l + l + m`. The basis is the
//! real orthonormal one common in rendering (no Condon-Shortley phase):
//! Y_{1,-1} ∝ y, Y_{1,0} ∝ z, Y_{1,1} ∝ x.

mod basis;
mod quadrature;
mod rotation;
mod wigner;

pub use basis::{eval_basis, eval_basis_all, write_basis_all};
pub use quadrature::{gauss_legendre, project, SphereQuadrature};
pub use rotation::{
    apply_rotation_blocks, rotate, rotation_blocks_len, write_rotation_blocks, ShRotation,
};
pub use wigner::{gaunt_real, triple_product, triple_product_with, wigner3j, GauntTable};

use crate::geom::Direction;
use crate::{Error, Result};

/// Coefficient vector of a real spherical-harmonics expansion up to band
/// limit `order`, i.e. (order+1)^2 coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SHVector {
    order: usize,
    coeffs: Vec<f64>,
}

/// Flattened index of (l, m).
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    (l * l) as usize + (l as i64 + m) as usize
}

/// Number of coefficients for a band limit.
#[inline]
pub const fn sh_count(order: usize) -> usize {
    (order + 1) * (order + 1)
}

impl SHVector {
    pub fn zeros(order: usize) -> Self {
        SHVector {
            order,
            coeffs: vec![0.0; sh_count(order)],
        }
    }

    pub fn new(order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != sh_count(order) {
            return Err(Error::invalid(format!(
                "order {order} requires {} coefficients, got {}",
                sh_count(order),
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("non-finite SH coefficient"));
        }
        Ok(SHVector { order, coeffs })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, l: usize, m: i64) -> f64 {
        self.coeffs[sh_index(l, m)]
    }

    #[inline]
    pub fn set_coeff(&mut self, l: usize, m: i64, v: f64) {
        self.coeffs[sh_index(l, m)] = v;
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.coeffs[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        self.coeffs[i] = v;
    }

    /// Reconstructs the band-limited function at a direction.
    pub fn eval(&self, d: Direction) -> f64 {
        // Shading evaluates this per hit; keep common band limits off the heap.
        let mut stack = [0.0; sh_count(8)];
        let mut spill;
        let basis = if self.coeffs.len() <= stack.len() {
            &mut stack[..self.coeffs.len()]
        } else {
            spill = vec![0.0; self.coeffs.len()];
            &mut spill[..]
        };
        write_basis_all(self.order, d, basis);
        self.coeffs
            .iter()
            .zip(basis.iter())
            .map(|(c, y)| c * y)
            .sum()
    }

    /// L2 norm of the coefficients in one band.
    pub fn band_norm(&self, l: usize) -> f64 {
        let lo = l * l;
        let hi = (l + 1) * (l + 1);
        self.coeffs[lo..hi].iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Zero-pads or truncates to a new band limit.
    pub fn resized(&self, order: usize) -> SHVector {
        let mut out = SHVector::zeros(order);
        let n = out.len().min(self.len());
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn scaled(&self, s: f64) -> SHVector {
        SHVector {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// self + other * s. Band limits must match.
    pub fn axpy(&mut self, other: &SHVector, s: f64) {
        assert_eq!(self.order, other.order, "band limit mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += b * s;
        }
    }

    pub fn add(&self, other: &SHVector) -> SHVector {
        let mut out = self.clone();
        out.axpy(other, 1.0);
        out
    }

    /// Serializes as a 32-bit little-endian band limit followed by the
    /// coefficients as 32-bit little-endian floats in flattening order.
    pub fn write_to(&self, w: &mut impl std::io::Write) -> Result<()> {
        w.write_all(&(self.order as u32).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl std::io::Read) -> Result<Self> {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let order = u32::from_le_bytes(b4) as usize;
        if order > 16 {
            return Err(Error::Format(format!("implausible SH band limit {order}")));
        }
        let mut coeffs = Vec::with_capacity(sh_count(order));
        for _ in 0..sh_count(order) {
            r.read_exact(&mut b4)?;
            coeffs.push(f32::from_le_bytes(b4) as f64);
        }
        SHVector::new(order, coeffs).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_flattening() {
        assert_eq!(sh_index(0, 0), 0);
        assert_eq!(sh_index(1, -1), 1);
        assert_eq!(sh_index(1, 0), 2);
        assert_eq!(sh_index(1, 1), 3);
        assert_eq!(sh_index(2, -2), 4);
        assert_eq!(sh_index(2, 2), 8);
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(SHVector::new(1, vec![0.0; 3]).is_err());
        assert!(SHVector::new(1, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn serialization_roundtrip() {
        let v = SHVector::new(2, (0..9).map(|i| i as f64 * 0.25).collect()).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 9 * 4);
        let back = SHVector::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.order(), 2);
        for i in 0..9 {
            assert!((back.get(i) - v.get(i)).abs() < 1e-7);
        }
    }
}
