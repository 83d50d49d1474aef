//! Deterministic sphere quadrature on a latitude-longitude product grid.
//!
//! Latitudes sit at Gauss-Legendre nodes in cos(theta) so the rule integrates
//! band-limited integrands essentially exactly; longitudes are equally spaced
//! midpoints. Weights are the per-node solid angles (GL weight times
//! 2 pi / n_phi), which sum to 4 pi.

use crate::geom::Direction;
use crate::sh::SHVector;
use crate::{Error, Result};

pub struct SphereQuadrature {
    dirs: Vec<Direction>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    pub const DEFAULT_THETA: usize = 256;
    pub const DEFAULT_PHI: usize = 512;

    pub fn with_default_resolution() -> Self {
        Self::new(Self::DEFAULT_THETA, Self::DEFAULT_PHI)
    }

    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        assert!(n_theta >= 2 && n_phi >= 2, "quadrature resolution too small");
        let (nodes, gl_weights) = gauss_legendre(n_theta);
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        for (ct, w_theta) in nodes.iter().zip(gl_weights.iter()) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                let v = crate::geom::Vec3::new(st * phi.cos(), st * phi.sin(), *ct);
                dirs.push(Direction::new(v.normalize()).expect("unit by construction"));
                weights.push(w_theta * dphi);
            }
        }
        SphereQuadrature { dirs, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Direction, f64)> + '_ {
        self.dirs.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates f over the sphere.
    pub fn integrate(&self, mut f: impl FnMut(Direction) -> f64) -> f64 {
        self.nodes().map(|(d, w)| w * f(d)).sum()
    }
}

/// Projects a function onto the real SH basis up to `order` using the given
/// quadrature: coeff(l, m) = integral of f * Y_{l,m}.
pub fn project(
    f: impl Fn(Direction) -> f64,
    order: usize,
    quad: &SphereQuadrature,
) -> Result<SHVector> {
    if quad.len() < 8 {
        return Err(Error::invalid("quadrature resolution below minimum"));
    }
    let n = super::sh_count(order);
    let mut coeffs = vec![0.0; n];
    let mut basis = vec![0.0; n];
    for (d, w) in quad.nodes() {
        let fv = f(d) * w;
        super::basis::write_basis_all(order, d, &mut basis);
        for (c, y) in coeffs.iter_mut().zip(basis.iter()) {
            *c += fv * y;
        }
    }
    SHVector::new(order, coeffs)
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Deterministic for a given n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess (Abramowitz & Stegun 25.4.30 style).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::eval_basis;

    #[test]
    fn weights_sum_to_sphere_area() {
        let q = SphereQuadrature::new(32, 64);
        let total: f64 = q.integrate(|_| 1.0);
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // integral of t^6 over [-1,1] = 2/7
        let v: f64 = x.iter().zip(w.iter()).map(|(t, w)| w * t.powi(6)).sum();
        assert!((v - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn constant_projects_onto_dc_only() {
        let q = SphereQuadrature::new(32, 64);
        let v = project(|_| 1.0, 2, &q).unwrap();
        assert!((v.coeff(0, 0) - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-6);
        for l in 1..=2usize {
            for m in -(l as i64)..=(l as i64) {
                assert!(v.coeff(l, m).abs() < 1e-6, "leak into ({l},{m})");
            }
        }
    }

    #[test]
    fn basis_function_projects_onto_itself() {
        let q = SphereQuadrature::new(64, 128);
        let f = |d: Direction| eval_basis(1, 0, d).unwrap();
        let v = project(f, 2, &q).unwrap();
        assert!((v.coeff(1, 0) - 1.0).abs() < 1e-6);
        assert!(v.coeff(2, 1).abs() < 1e-8);
        assert!(v.coeff(0, 0).abs() < 1e-8);
    }

    #[test]
    fn orthonormality_up_to_band_4() {
        let q = SphereQuadrature::new(64, 128);
        for l1 in 0..=4i64 {
            for m1 in -l1..=l1 {
                for l2 in l1..=4i64 {
                    for m2 in -l2..=l2 {
                        let dot = q.integrate(|d| {
                            eval_basis(l1, m1, d).unwrap() * eval_basis(l2, m2, d).unwrap()
                        });
                        let expect = if l1 == l2 && m1 == m2 { 1.0 } else { 0.0 };
                        assert!(
                            (dot - expect).abs() < 1e-6,
                            "<Y{l1}{m1}, Y{l2}{m2}> = {dot}"
                        );
                    }
                }
            }
        }
    }
}
