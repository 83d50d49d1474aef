//! Rotation of real SH coefficient vectors.
//!
//! Band 0 is invariant and band 1 is a signed permutation of the spatial
//! rotation matrix. Higher bands come from the Ivanic-Ruedenberg recurrence,
//! which builds each band's (2l+1)x(2l+1) block from the band-1 block and the
//! previous band. Rotating coefficients by R gives the coefficients of
//! f(R^-1 x), so evaluating the rotated vector at d matches evaluating the
//! original at R^-1 d.

use crate::geom::Rotation;
use crate::sh::SHVector;

/// Precomputed per-band rotation blocks up to a band limit. Build once,
/// apply to many coefficient vectors.
pub struct ShRotation {
    order: usize,
    // Bands packed back to back: band l is (2l+1)^2 entries starting at
    // block_offset(l), row-major, indexed by (m + l, n + l).
    blocks: Vec<f64>,
}

/// Start of the band-l block in the packed layout: sum of (2j+1)^2, j < l.
const fn block_offset(l: usize) -> usize {
    (4 * l * l * l - l) / 3
}

/// Packed length of all rotation blocks up to a band limit.
pub const fn rotation_blocks_len(order: usize) -> usize {
    block_offset(order + 1)
}

/// Fills `out` (`rotation_blocks_len(order)` entries) with the packed
/// per-band blocks of `r`. The free-function form lets hot paths keep the
/// storage on the stack; [`ShRotation`] wraps it for everyone else.
pub fn write_rotation_blocks(order: usize, r: &Rotation, out: &mut [f64]) {
    assert_eq!(
        out.len(),
        rotation_blocks_len(order),
        "block storage length mismatch"
    );
    out[0] = 1.0;
    if order >= 1 {
        write_band1(r, &mut out[1..10]);
    }
    for l in 2..=order {
        let (prev, rest) = out.split_at_mut(block_offset(l));
        let size = 2 * l + 1;
        next_band_into(
            l,
            &prev[1..10],
            &prev[block_offset(l - 1)..],
            &mut rest[..size * size],
        );
    }
}

/// Applies packed rotation blocks to a coefficient slice. The slices must
/// be equally long and hold a whole number of bands within `order`.
pub fn apply_rotation_blocks(order: usize, blocks: &[f64], src: &[f64], dst: &mut [f64]) {
    assert_eq!(src.len(), dst.len(), "coefficient slice length mismatch");
    let mut base = 0;
    for l in 0.. {
        if base == src.len() {
            break;
        }
        let size = 2 * l + 1;
        assert!(
            l <= order && base + size <= src.len(),
            "coefficient count {} is not a whole band set within order {order}",
            src.len(),
        );
        let block = &blocks[block_offset(l)..];
        for row in 0..size {
            let mut acc = 0.0;
            for col in 0..size {
                acc += block[row * size + col] * src[base + col];
            }
            dst[base + row] = acc;
        }
        base += size;
    }
}

impl ShRotation {
    pub fn new(order: usize, r: &Rotation) -> Self {
        let mut blocks = vec![0.0; rotation_blocks_len(order)];
        write_rotation_blocks(order, r, &mut blocks);
        ShRotation { order, blocks }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn apply(&self, v: &SHVector) -> SHVector {
        assert!(
            v.order() <= self.order,
            "vector band limit {} exceeds rotation band limit {}",
            v.order(),
            self.order
        );
        let mut out = vec![0.0; v.len()];
        self.apply_coeffs(v.coeffs(), &mut out);
        SHVector::new(v.order(), out).expect("finite by construction")
    }

    /// Slice form of `apply` for allocation-free hot paths.
    pub fn apply_coeffs(&self, src: &[f64], dst: &mut [f64]) {
        apply_rotation_blocks(self.order, &self.blocks, src, dst);
    }

    /// Entry of the band-l block at SH orders (m, n), both in [-l, l].
    pub fn band_entry(&self, l: usize, m: i64, n: i64) -> f64 {
        let size = 2 * l + 1;
        self.blocks[block_offset(l) + (m + l as i64) as usize * size + (n + l as i64) as usize]
    }
}

/// Rotates a coefficient vector: the result represents f(R^-1 x).
pub fn rotate(v: &SHVector, r: &Rotation) -> SHVector {
    ShRotation::new(v.order(), r).apply(v)
}

/// Band-1 block. With the real basis ordered (m = -1, 0, 1) = k(y, z, x),
/// the block is the spatial rotation matrix with rows/columns permuted
/// through that axis mapping.
fn write_band1(r: &Rotation, block: &mut [f64]) {
    // SH order m -> spatial axis row index in the 3x3 rotation matrix.
    const AXIS: [usize; 3] = [1, 2, 0]; // m=-1 -> y, m=0 -> z, m=1 -> x
    for (row, &ri) in AXIS.iter().enumerate() {
        for (col, &ci) in AXIS.iter().enumerate() {
            block[row * 3 + col] = r.entry(ri, ci);
        }
    }
}

struct BandRef<'a> {
    l: i64,
    data: &'a [f64],
}

impl BandRef<'_> {
    fn get(&self, m: i64, n: i64) -> f64 {
        debug_assert!(m.abs() <= self.l && n.abs() <= self.l);
        let size = (2 * self.l + 1) as usize;
        self.data[(m + self.l) as usize * size + (n + self.l) as usize]
    }
}

fn next_band_into(l_usize: usize, band1: &[f64], prev: &[f64], block: &mut [f64]) {
    let l = l_usize as i64;
    let r1 = BandRef { l: 1, data: band1 };
    let m_prev = BandRef { l: l - 1, data: prev };

    // Centered product P used by all three recurrence terms.
    let p = |i: i64, a: i64, b: i64| -> f64 {
        if b == l {
            r1.get(i, 1) * m_prev.get(a, l - 1) - r1.get(i, -1) * m_prev.get(a, -l + 1)
        } else if b == -l {
            r1.get(i, 1) * m_prev.get(a, -l + 1) + r1.get(i, -1) * m_prev.get(a, l - 1)
        } else {
            r1.get(i, 0) * m_prev.get(a, b)
        }
    };

    let u_term = |m: i64, n: i64| p(0, m, n);

    let v_term = |m: i64, n: i64| -> f64 {
        if m == 0 {
            p(1, 1, n) + p(-1, -1, n)
        } else if m > 0 {
            let d1 = if m == 1 { 2.0f64.sqrt() } else { 1.0 };
            let d2 = if m == 1 { 0.0 } else { 1.0 };
            p(1, m - 1, n) * d1 - p(-1, -m + 1, n) * d2
        } else {
            let d1 = if m == -1 { 0.0 } else { 1.0 };
            let d2 = if m == -1 { 2.0f64.sqrt() } else { 1.0 };
            p(1, m + 1, n) * d1 + p(-1, -m - 1, n) * d2
        }
    };

    let w_term = |m: i64, n: i64| -> f64 {
        if m > 0 {
            p(1, m + 1, n) + p(-1, -m - 1, n)
        } else {
            // m < 0; the m == 0 case never reaches here (w coefficient is 0).
            p(1, m - 1, n) - p(-1, -m + 1, n)
        }
    };

    let size = (2 * l + 1) as usize;
    for m in -l..=l {
        for n in -l..=l {
            let d = if n.abs() == l {
                (2 * l * (2 * l - 1)) as f64
            } else {
                ((l + n) * (l - n)) as f64
            };
            let am = m.abs();
            let u = (((l + m) * (l - m)) as f64 / d).sqrt();
            let v = 0.5
                * ((if m == 0 { 2.0 } else { 1.0 }) * ((l + am - 1) * (l + am)) as f64 / d)
                    .sqrt()
                * (if m == 0 { -1.0 } else { 1.0 });
            let w = -0.5
                * (((l - am - 1) * (l - am)) as f64 / d).sqrt()
                * (if m == 0 { 0.0 } else { 1.0 });

            let mut entry = 0.0;
            if u != 0.0 {
                entry += u * u_term(m, n);
            }
            if v != 0.0 {
                entry += v * v_term(m, n);
            }
            if w != 0.0 {
                entry += w * w_term(m, n);
            }
            block[(m + l) as usize * size + (n + l) as usize] = entry;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Direction, Vec3};
    use crate::sh::{sh_count, SHVector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_rotation(rng: &mut StdRng) -> Rotation {
        let axis = Direction::normalize(Vec3::new(
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
        ))
        .unwrap();
        Rotation::from_axis_angle(axis, rng.random::<f64>() * 6.0)
    }

    fn random_direction(rng: &mut StdRng) -> Direction {
        loop {
            let v = Vec3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            if v.norm_squared() > 1e-3 && v.norm_squared() < 1.0 {
                return Direction::normalize(v).unwrap();
            }
        }
    }

    #[test]
    fn identity_rotation_is_identity_map() {
        let mut rng = StdRng::seed_from_u64(7);
        let coeffs: Vec<f64> = (0..sh_count(4)).map(|_| rng.random::<f64>() - 0.5).collect();
        let v = SHVector::new(4, coeffs).unwrap();
        let rotated = rotate(&v, &Rotation::identity());
        for i in 0..v.len() {
            assert!((rotated.get(i) - v.get(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn rotated_vector_matches_pointwise_evaluation() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let coeffs: Vec<f64> =
                (0..sh_count(4)).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let v = SHVector::new(4, coeffs).unwrap();
            let rotated = rotate(&v, &r);
            for _ in 0..10 {
                let d = random_direction(&mut rng);
                let lhs = rotated.eval(d);
                let back = r.inverse().apply_direction(d);
                let rhs = v.eval(back);
                assert!(
                    (lhs - rhs).abs() < 1e-10,
                    "rotation mismatch: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn band_norms_are_invariant() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let r = random_rotation(&mut rng);
            let coeffs: Vec<f64> =
                (0..sh_count(4)).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let v = SHVector::new(4, coeffs).unwrap();
            let rotated = rotate(&v, &r);
            for l in 0..=4 {
                let a = v.band_norm(l);
                let b = rotated.band_norm(l);
                assert!((a - b).abs() < 1e-10, "band {l} norm changed: {a} -> {b}");
            }
        }
    }

    #[test]
    fn composition_matches_composed_rotation() {
        let mut rng = StdRng::seed_from_u64(11);
        let r1 = random_rotation(&mut rng);
        let r2 = random_rotation(&mut rng);
        let coeffs: Vec<f64> = (0..sh_count(3)).map(|_| rng.random::<f64>() - 0.5).collect();
        let v = SHVector::new(3, coeffs).unwrap();
        let seq = rotate(&rotate(&v, &r1), &r2);
        let combined = rotate(&v, &r2.compose(&r1));
        for i in 0..v.len() {
            assert!((seq.get(i) - combined.get(i)).abs() < 1e-10);
        }
    }
}
