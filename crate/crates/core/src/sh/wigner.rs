//! Wigner 3-j symbols, real-basis Gaunt coefficients, and SH triple products.
//!
//! The triple-product operator is the workhorse for combining three band
//! limited spherical functions (lighting, visibility, phase) without leaving
//! coefficient space: integral of A * B * C over the sphere equals
//! sum_ijk G[i][j][k] a_i b_j c_k where G is the real Gaunt tensor.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::sh::{sh_count, sh_index, SHVector};
use crate::{Error, Result};

const MAX_FACTORIAL: usize = 170;

fn factorials() -> &'static [f64; MAX_FACTORIAL + 1] {
    static TABLE: OnceLock<[f64; MAX_FACTORIAL + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; MAX_FACTORIAL + 1];
        for i in 1..=MAX_FACTORIAL {
            t[i] = t[i - 1] * i as f64;
        }
        t
    })
}

fn fact(n: i64) -> f64 {
    debug_assert!((0..=MAX_FACTORIAL as i64).contains(&n));
    factorials()[n as usize]
}

/// Wigner 3-j symbol (l1 l2 l3; m1 m2 m3) by the Racah sum.
///
/// Returns 0 for arguments violating the selection rules (m1+m2+m3 != 0,
/// triangle inequality, |m| > l). Valid for moderate l (factorial table
/// limited); our band limits stay far below that.
pub fn wigner3j(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if l1 < 0 || l2 < 0 || l3 < 0 {
        return 0.0;
    }
    if m1.abs() > l1 || m2.abs() > l2 || m3.abs() > l3 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    if l3 < (l1 - l2).abs() || l3 > l1 + l2 {
        return 0.0;
    }
    // Structural zero: all-zero m with odd l1+l2+l3 vanishes identically, and
    // the alternating Racah sum would only cancel to rounding noise.
    if m1 == 0 && m2 == 0 && m3 == 0 && (l1 + l2 + l3) % 2 == 1 {
        return 0.0;
    }

    // Triangle coefficient.
    let delta = (fact(l1 + l2 - l3) * fact(l1 - l2 + l3) * fact(-l1 + l2 + l3)
        / fact(l1 + l2 + l3 + 1))
    .sqrt();

    let prefactor = (fact(l1 + m1)
        * fact(l1 - m1)
        * fact(l2 + m2)
        * fact(l2 - m2)
        * fact(l3 + m3)
        * fact(l3 - m3))
    .sqrt();

    let t_min = 0i64
        .max(l2 - l3 - m1)
        .max(l1 - l3 + m2);
    let t_max = (l1 + l2 - l3)
        .min(l1 - m1)
        .min(l2 + m2);

    let mut sum = 0.0;
    let mut t = t_min;
    while t <= t_max {
        let denom = fact(t)
            * fact(l3 - l2 + m1 + t)
            * fact(l3 - l1 - m2 + t)
            * fact(l1 + l2 - l3 - t)
            * fact(l1 - m1 - t)
            * fact(l2 + m2 - t);
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
        t += 1;
    }

    let phase = if (l1 - l2 - m3) % 2 == 0 { 1.0 } else { -1.0 };
    phase * delta * prefactor * sum
}

/// Gaunt coefficient for the *complex* orthonormal SH basis:
/// integral of Y_{l1 m1} Y_{l2 m2} Y_{l3 m3} over the sphere.
fn gaunt_complex(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    let w0 = wigner3j(l1, l2, l3, 0, 0, 0);
    if w0 == 0.0 {
        return 0.0;
    }
    let wm = wigner3j(l1, l2, l3, m1, m2, m3);
    if wm == 0.0 {
        return 0.0;
    }
    let norm = ((2 * l1 + 1) as f64 * (2 * l2 + 1) as f64 * (2 * l3 + 1) as f64
        / (4.0 * std::f64::consts::PI))
        .sqrt();
    norm * w0 * wm
}

/// Expansion of one real basis function over the complex basis: the real
/// function R_{l,m} equals sum over m' of c_{m'} Y_l^{m'}, where only
/// m' = +-|m| contribute. Returns [(m', coefficient)].
///
/// Our real basis carries no Condon-Shortley phase, so the relation to the
/// CS-phased complex basis picks up (-1)^m factors:
///   m > 0:  R = ((-1)^m Y_l^m + Y_l^-m) / sqrt(2)
///   m = 0:  R = Y_l^0
///   m < 0:  R = ((-1)^m Y_l^|m| - Y_l^-|m|) / (i sqrt(2))
fn real_to_complex(m: i64) -> Vec<(i64, Complex64)> {
    use std::f64::consts::FRAC_1_SQRT_2;
    let sign = if m.abs() % 2 == 0 { 1.0 } else { -1.0 };
    if m > 0 {
        vec![
            (m, Complex64::new(sign * FRAC_1_SQRT_2, 0.0)),
            (-m, Complex64::new(FRAC_1_SQRT_2, 0.0)),
        ]
    } else if m == 0 {
        vec![(0, Complex64::new(1.0, 0.0))]
    } else {
        let mu = -m;
        // 1/(i sqrt(2)) = -i/sqrt(2)
        vec![
            (mu, Complex64::new(0.0, -sign * FRAC_1_SQRT_2)),
            (-mu, Complex64::new(0.0, FRAC_1_SQRT_2)),
        ]
    }
}

/// Gaunt coefficient for the *real* orthonormal basis:
/// integral of R_{l1 m1} R_{l2 m2} R_{l3 m3} over the sphere.
pub fn gaunt_real(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if l3 < (l1 - l2).abs() || l3 > l1 + l2 || (l1 + l2 + l3) % 2 != 0 {
        return 0.0;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (mm1, c1) in real_to_complex(m1) {
        for (mm2, c2) in real_to_complex(m2) {
            for (mm3, c3) in real_to_complex(m3) {
                if mm1 + mm2 + mm3 != 0 {
                    continue;
                }
                let g = gaunt_complex(l1, l2, l3, mm1, mm2, mm3);
                if g != 0.0 {
                    acc += c1 * c2 * c3 * g;
                }
            }
        }
    }
    debug_assert!(acc.im.abs() < 1e-10, "real Gaunt has imaginary residue");
    acc.re
}

/// Sparse real Gaunt tensor for a fixed band limit, stored as nonzero
/// (i, j, k, value) entries over flattened indices.
pub struct GauntTable {
    order: usize,
    entries: Vec<(u16, u16, u16, f64)>,
}

impl GauntTable {
    pub fn build(order: usize) -> Self {
        let n = sh_count(order);
        assert!(n <= u16::MAX as usize, "band limit too large for table index");
        let mut entries = Vec::new();
        for l1 in 0..=order as i64 {
            for m1 in -l1..=l1 {
                let i = sh_index(l1 as usize, m1);
                for l2 in 0..=order as i64 {
                    for m2 in -l2..=l2 {
                        let j = sh_index(l2 as usize, m2);
                        for l3 in 0..=order as i64 {
                            for m3 in -l3..=l3 {
                                let k = sh_index(l3 as usize, m3);
                                let g = gaunt_real(l1, l2, l3, m1, m2, m3);
                                if g.abs() > 1e-14 {
                                    entries.push((i as u16, j as u16, k as u16, g));
                                }
                            }
                        }
                    }
                }
            }
        }
        GauntTable { order, entries }
    }

    /// Process-wide cache keyed on band limit; building the table is much
    /// more expensive than a pointer clone.
    pub fn shared(order: usize) -> Arc<GauntTable> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GauntTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("gaunt cache poisoned");
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(GauntTable::build(order)))
            .clone()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    /// Stored nonzero entries as (i, j, k, value) over flattened indices.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(i, j, k, g)| (i as usize, j as usize, k as usize, g))
    }

    /// Coefficients of the product A*B re-projected onto the basis:
    /// out_k = sum_ij G[i][j][k] a_i b_j.
    pub fn product(&self, a: &SHVector, b: &SHVector) -> SHVector {
        assert_eq!(a.order(), self.order, "operand band limit mismatch");
        assert_eq!(b.order(), self.order, "operand band limit mismatch");
        let mut out = vec![0.0; sh_count(self.order)];
        for &(i, j, k, g) in &self.entries {
            out[k as usize] += g * a.get(i as usize) * b.get(j as usize);
        }
        SHVector::new(self.order, out).expect("finite by construction")
    }

    /// integral of A*B*C over the sphere = sum_ijk G[i][j][k] a_i b_j c_k.
    pub fn triple(&self, a: &SHVector, b: &SHVector, c: &SHVector) -> f64 {
        assert_eq!(a.order(), self.order, "operand band limit mismatch");
        assert_eq!(b.order(), self.order, "operand band limit mismatch");
        assert_eq!(c.order(), self.order, "operand band limit mismatch");
        let mut acc = 0.0;
        for &(i, j, k, g) in &self.entries {
            acc += g * a.get(i as usize) * b.get(j as usize) * c.get(k as usize);
        }
        acc
    }
}

/// Triple product integral using the shared Gaunt table for the operands'
/// common band limit. All three vectors must share one band limit.
pub fn triple_product(a: &SHVector, b: &SHVector, c: &SHVector) -> Result<f64> {
    if a.order() != b.order() || b.order() != c.order() {
        return Err(Error::invalid(format!(
            "triple product operands must share a band limit (got {}, {}, {})",
            a.order(),
            b.order(),
            c.order()
        )));
    }
    let table = GauntTable::shared(a.order());
    Ok(table.triple(a, b, c))
}

/// Same integral, with a caller-provided table (avoids cache traffic in
/// hot loops).
pub fn triple_product_with(table: &GauntTable, a: &SHVector, b: &SHVector, c: &SHVector) -> f64 {
    table.triple(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rules_yield_zero() {
        assert_eq!(wigner3j(1, 1, 1, 0, 0, 1), 0.0); // m sum nonzero
        assert_eq!(wigner3j(1, 1, 3, 0, 0, 0), 0.0); // triangle violated
        assert_eq!(wigner3j(1, 1, 2, 2, 0, -2), 0.0); // |m| > l
    }

    #[test]
    fn known_symbols() {
        // (1 1 0; 0 0 0) = -1/sqrt(3)
        assert!((wigner3j(1, 1, 0, 0, 0, 0) + 1.0 / 3f64.sqrt()).abs() < 1e-14);
        // (1 1 2; 0 0 0) = sqrt(2/15)
        assert!((wigner3j(1, 1, 2, 0, 0, 0) - (2.0 / 15.0f64).sqrt()).abs() < 1e-14);
        // (2 2 2; 0 0 0) = -sqrt(2/35)
        assert!((wigner3j(2, 2, 2, 0, 0, 0) + (2.0 / 35.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn odd_parity_symbols_vanish_at_zero_m() {
        for l1 in 0..=4i64 {
            for l2 in 0..=4i64 {
                for l3 in 0..=4i64 {
                    if (l1 + l2 + l3) % 2 == 1 {
                        assert_eq!(wigner3j(l1, l2, l3, 0, 0, 0), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn gaunt_dc_reduces_to_orthonormality() {
        // integral Y00 * R * R' = delta_{RR'} / (2 sqrt(pi))
        let inv = 0.5 / std::f64::consts::PI.sqrt();
        for l in 0..=3i64 {
            for m in -l..=l {
                let g = gaunt_real(0, l, l, 0, m, m);
                assert!((g - inv).abs() < 1e-12, "({l},{m}): {g}");
                if m < l {
                    let off = gaunt_real(0, l, l, 0, m, m + 1);
                    assert!(off.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn table_is_symmetric_in_all_slots() {
        let t = GauntTable::build(2);
        let mut map = HashMap::new();
        for &(i, j, k, g) in &t.entries {
            map.insert((i, j, k), g);
        }
        for (&(i, j, k), &g) in &map {
            for perm in [(j, i, k), (k, j, i), (i, k, j)] {
                let other = map.get(&perm).copied().unwrap_or(0.0);
                assert!((g - other).abs() < 1e-12, "asymmetric at {i},{j},{k}");
            }
        }
    }
}
