//! Real orthonormal spherical-harmonics basis.
//!
//! Associated Legendre values come from the standard stable recurrences; the
//! Condon-Shortley phase is dropped so that band 1 is a plain permutation of
//! the Cartesian components (Y_{1,-1}, Y_{1,0}, Y_{1,1}) ∝ (y, z, x).

use crate::geom::Direction;
use crate::{Error, Result};

/// Evaluates the real orthonormal basis function Y_{l,m} at a unit direction.
pub fn eval_basis(l: i64, m: i64, d: Direction) -> Result<f64> {
    if l < 0 || m.abs() > l {
        return Err(Error::invalid(format!("invalid SH indices (l={l}, m={m})")));
    }
    let all = eval_basis_all(l as usize, d);
    Ok(all[super::sh_index(l as usize, m)])
}

/// Evaluates every basis function for l = 0..=order at once, in flattening
/// order. Shares the Legendre recurrence across bands, which is what the
/// projection and reconstruction loops want.
pub fn eval_basis_all(order: usize, d: Direction) -> Vec<f64> {
    let mut out = vec![0.0; super::sh_count(order)];
    write_basis_all(order, d, &mut out);
    out
}

/// Non-allocating variant of [`eval_basis_all`]; `out` must hold
/// (order+1)^2 values.
pub fn write_basis_all(order: usize, d: Direction, out: &mut [f64]) {
    debug_assert_eq!(out.len(), super::sh_count(order));
    let z = d.z();
    // Azimuth handling without atan2: accumulate cos(m phi), sin(m phi) from
    // the projection of d onto the xy-plane via the usual complex powers.
    let sxy = (d.x() * d.x() + d.y() * d.y()).sqrt();
    let (cp, sp) = if sxy > 1e-300 {
        (d.x() / sxy, d.y() / sxy)
    } else {
        (1.0, 0.0)
    };

    // P[m] holds P_l^m(z) without Condon-Shortley phase, scaled by
    // sin^m(theta) already (sxy powers folded in below through pmm).
    // We iterate m outer, l inner using:
    //   P_mm = (2m-1)!! * sxy^m
    //   P_{m+1,m} = z (2m+1) P_mm
    //   P_lm = ((2l-1) z P_{l-1,m} - (l+m-1) P_{l-2,m}) / (l-m)
    let mut cos_m = 1.0; // cos(m phi)
    let mut sin_m = 0.0; // sin(m phi)
    let mut pmm = 1.0;
    for m in 0..=order {
        if m > 0 {
            let (c, s) = (cos_m, sin_m);
            cos_m = c * cp - s * sp;
            sin_m = s * cp + c * sp;
            pmm *= (2 * m - 1) as f64 * sxy;
        }
        let mut p_prev = pmm; // P_{m,m}
        let mut p_curr = if m < order {
            z * (2 * m + 1) as f64 * pmm // P_{m+1,m}
        } else {
            0.0
        };
        for l in m..=order {
            let p = if l == m {
                p_prev
            } else if l == m + 1 {
                p_curr
            } else {
                let lf = l as f64;
                let mf = m as f64;
                let p_next =
                    ((2.0 * lf - 1.0) * z * p_curr - (lf + mf - 1.0) * p_prev) / (lf - mf);
                p_prev = p_curr;
                p_curr = p_next;
                p_next
            };
            let k = norm_constant(l, m);
            if m == 0 {
                out[super::sh_index(l, 0)] = k * p;
            } else {
                let v = std::f64::consts::SQRT_2 * k * p;
                out[super::sh_index(l, m as i64)] = v * cos_m;
                out[super::sh_index(l, -(m as i64))] = v * sin_m;
            }
        }
    }
}

/// sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)
fn norm_constant(l: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}
