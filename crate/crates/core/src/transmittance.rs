//! Per-vertex directional transmittance: bake a small cubemap of "how much
//! light survives from direction w to this vertex" by casting rays against
//! the strand set, project it to 2-band SH stored per vertex, and evaluate
//! (optionally biased) at shading time.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accel::CapsuleBvh;
use crate::container;
use crate::geom::{Direction, Ray, Rotation, Vec3};
use crate::sh::{self, SHVector};
use crate::strand::HairGeometry;
use crate::{Error, Result};

/// SH band limit for baked transmittance: 2 bands beyond DC, 9 coefficients.
pub const TRANSMITTANCE_ORDER: usize = 2;

/// Six-face cubemap of transmittance in [0, 1]. Face order: +x, -x, +y, -y,
/// +z, -z; texel (i, j) covers [2i/res - 1, 2(i+1)/res - 1] x likewise in
/// the face plane's (a, b) coordinates.
#[derive(Clone)]
pub struct TransmittanceCubemap {
    res: usize,
    faces: Vec<f64>,
}

impl TransmittanceCubemap {
    pub fn new(res: usize) -> Self {
        assert!(res >= 2);
        TransmittanceCubemap {
            res,
            faces: vec![0.0; 6 * res * res],
        }
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn value(&self, face: usize, i: usize, j: usize) -> f64 {
        self.faces[(face * self.res + j) * self.res + i]
    }

    pub fn set_value(&mut self, face: usize, i: usize, j: usize, v: f64) {
        self.faces[(face * self.res + j) * self.res + i] = v;
    }

    /// Center direction of a texel.
    pub fn texel_direction(res: usize, face: usize, i: usize, j: usize) -> Direction {
        let a = 2.0 * (i as f64 + 0.5) / res as f64 - 1.0;
        let b = 2.0 * (j as f64 + 0.5) / res as f64 - 1.0;
        let v = match face {
            0 => Vec3::new(1.0, a, b),
            1 => Vec3::new(-1.0, a, b),
            2 => Vec3::new(a, 1.0, b),
            3 => Vec3::new(a, -1.0, b),
            4 => Vec3::new(a, b, 1.0),
            _ => Vec3::new(a, b, -1.0),
        };
        Direction::normalize(v).expect("cube texel directions are nonzero")
    }

    /// Exact solid angle of a texel's spherical projection, via the
    /// difference of corner terms atan2(x y, sqrt(x^2 + y^2 + 1)). The sum
    /// over a whole face is exactly 2 pi / 3, so all weights total 4 pi.
    pub fn texel_solid_angle(res: usize, i: usize, j: usize) -> f64 {
        fn corner(x: f64, y: f64) -> f64 {
            (x * y).atan2((x * x + y * y + 1.0).sqrt())
        }
        let x0 = 2.0 * i as f64 / res as f64 - 1.0;
        let x1 = 2.0 * (i as f64 + 1.0) / res as f64 - 1.0;
        let y0 = 2.0 * j as f64 / res as f64 - 1.0;
        let y1 = 2.0 * (j as f64 + 1.0) / res as f64 - 1.0;
        corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0)
    }

    /// Iterates (direction, solid angle, value) over every texel.
    pub fn texels(&self) -> impl Iterator<Item = (Direction, f64, f64)> + '_ {
        let res = self.res;
        (0..6).flat_map(move |face| {
            (0..res).flat_map(move |j| {
                (0..res).map(move |i| {
                    (
                        Self::texel_direction(res, face, i, j),
                        Self::texel_solid_angle(res, i, j),
                        self.value(face, i, j),
                    )
                })
            })
        })
    }

    pub fn in_range(&self) -> bool {
        self.faces.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Bake controls. The exclusion radius keeps a vertex's own fiber from
/// occluding it: segments of the same strand within `exclusion_radius_factor
/// x local radius` of arc length are skipped (nothing in the source model
/// says how self-shadowing at the vertex itself should behave; the fiber's
/// own body is accounted for by the phase function instead).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TransmittanceBakeParams {
    pub cubemap_res: usize,
    pub exclusion_radius_factor: f64,
    pub order: usize,
}

impl Default for TransmittanceBakeParams {
    fn default() -> Self {
        TransmittanceBakeParams {
            cubemap_res: 16,
            exclusion_radius_factor: 20.0,
            order: TRANSMITTANCE_ORDER,
        }
    }
}

/// Casts one ray per texel from the vertex position; the texel records the
/// product of (1 - alpha) over distinct strands crossed, self-excluded as
/// described on [`TransmittanceBakeParams`].
pub fn bake_vertex_cubemap(
    geometry: &HairGeometry,
    bvh: &CapsuleBvh,
    vertex_index: usize,
    res: usize,
    self_exclusion_radius: f64,
) -> Result<TransmittanceCubemap> {
    if res < 8 {
        return Err(Error::invalid("cubemap resolution must be at least 8"));
    }
    if vertex_index >= geometry.vertex_count() {
        return Err(Error::invalid(format!(
            "vertex {vertex_index} out of range ({} vertices)",
            geometry.vertex_count()
        )));
    }
    let (vertex, strand_index) = geometry.vertex(vertex_index);
    let origin = vertex.position;
    let arc = vertex.arc_length;
    let strand_u32 = strand_index as u32;
    let strands = geometry.strands();

    let mut map = TransmittanceCubemap::new(res);
    for face in 0..6 {
        for j in 0..res {
            for i in 0..res {
                let dir = TransmittanceCubemap::texel_direction(res, face, i, j);
                let t = bvh.transmittance(
                    &Ray::new(origin, dir),
                    1e-9,
                    f64::INFINITY,
                    |s| strands[s as usize].alpha,
                    |cap| arc_excluded(strands, strand_u32, arc, self_exclusion_radius, cap),
                );
                map.set_value(face, i, j, t);
            }
        }
    }
    Ok(map)
}

/// True when `cap` belongs to `strand` and its arc-length span intersects
/// [arc - radius, arc + radius]: the self-exclusion window a point on a
/// fiber applies to its own strand, shared by the baker and by the
/// reference tracer's shadow rays.
pub fn arc_excluded(
    strands: &[crate::strand::Strand],
    strand: u32,
    arc: f64,
    radius: f64,
    cap: &crate::strand::Capsule,
) -> bool {
    if cap.strand != strand {
        return false;
    }
    let verts = &strands[cap.strand as usize].vertices;
    let a0 = verts[cap.segment as usize].arc_length;
    let a1 = verts[cap.segment as usize + 1].arc_length;
    a1 >= arc - radius && a0 <= arc + radius
}

/// SH projection of the cubemap with exact per-texel solid-angle weights.
pub fn project_to_sh(map: &TransmittanceCubemap, order: usize) -> SHVector {
    let n = sh::sh_count(order);
    let mut coeffs = vec![0.0; n];
    let mut basis = vec![0.0; n];
    for (dir, omega, value) in map.texels() {
        sh::write_basis_all(order, dir, &mut basis);
        let fv = value * omega;
        for (c, y) in coeffs.iter_mut().zip(basis.iter()) {
            *c += fv * y;
        }
    }
    SHVector::new(order, coeffs).expect("finite by construction")
}

/// SH reconstruction clamped to the physical range [0, 1].
pub fn eval_v(v: &SHVector, w: Direction) -> f64 {
    v.eval(w).clamp(0.0, 1.0)
}

/// Bias that suppresses leaking from back lights: max(0, (V - bias)/(1 - bias)).
pub fn biased_v(v: &SHVector, w: Direction, bias: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&bias));
    ((eval_v(v, w) - bias) / (1.0 - bias)).max(0.0)
}

/// Rotates baked vectors into a new groom orientation (bake pose -> world).
pub fn apply_orientation(v: &SHVector, r: &Rotation) -> SHVector {
    sh::rotate(v, r)
}

/// Mean absolute difference between the clamped SH reconstruction and the
/// raw cubemap, over all texels (solid-angle weighted).
pub fn reconstruction_error(map: &TransmittanceCubemap, v: &SHVector) -> f64 {
    let mut err = 0.0;
    let mut total = 0.0;
    for (dir, omega, value) in map.texels() {
        err += (eval_v(v, dir) - value).abs() * omega;
        total += omega;
    }
    err / total
}

pub struct BakedTransmittance {
    pub vectors: Vec<SHVector>,
    /// Per-vertex mean absolute SH reconstruction error.
    pub errors: Vec<f64>,
}

impl BakedTransmittance {
    pub fn error_summary(&self) -> (f64, f64) {
        let mean = self.errors.iter().sum::<f64>() / self.errors.len().max(1) as f64;
        let max = self.errors.iter().cloned().fold(0.0, f64::max);
        (mean, max)
    }
}

/// Bakes every vertex: cubemap, projection, and reconstruction error.
/// Parallel over vertices; deterministic (vertex order fixed, cells pure).
pub fn bake_all(geometry: &HairGeometry, params: &TransmittanceBakeParams) -> Result<BakedTransmittance> {
    if params.order > 8 {
        return Err(Error::invalid("transmittance SH order unreasonably high"));
    }
    let bvh = CapsuleBvh::build(geometry.capsules());
    let results: Vec<Result<(SHVector, f64)>> = (0..geometry.vertex_count())
        .into_par_iter()
        .map(|vi| {
            let (vertex, _) = geometry.vertex(vi);
            let excl = params.exclusion_radius_factor * vertex.radius;
            let map = bake_vertex_cubemap(geometry, &bvh, vi, params.cubemap_res, excl)?;
            let v = project_to_sh(&map, params.order);
            let err = reconstruction_error(&map, &v);
            Ok((v, err))
        })
        .collect();
    let mut vectors = Vec::with_capacity(results.len());
    let mut errors = Vec::with_capacity(results.len());
    for r in results {
        let (v, e) = r?;
        vectors.push(v);
        errors.push(e);
    }
    let baked = BakedTransmittance { vectors, errors };
    let (mean, max) = baked.error_summary();
    log::info!(
        "baked transmittance for {} vertices: SH reconstruction error mean {mean:.4}, max {max:.4}",
        baked.vectors.len()
    );
    Ok(baked)
}

const SIDECAR_MAGIC: &[u8; 8] = b"HAIRVTSH";
const SIDECAR_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct SidecarHeader {
    pub params: TransmittanceBakeParams,
    pub strand_alpha: f64,
    pub geometry_file: String,
}

/// Sidecar layout after the common header: u32 vertex count, u32 SH order,
/// then per vertex (order+1)^2 little-endian f32 coefficients.
pub fn write_sidecar(
    w: &mut impl Write,
    vectors: &[SHVector],
    header: &SidecarHeader,
) -> Result<()> {
    if vectors.is_empty() {
        return Err(Error::invalid("no vectors to write"));
    }
    let order = vectors[0].order();
    if vectors.iter().any(|v| v.order() != order) {
        return Err(Error::invalid("mixed SH orders in sidecar"));
    }
    container::write_header(w, SIDECAR_MAGIC, SIDECAR_VERSION, header)?;
    container::write_u32(w, vectors.len() as u32)?;
    container::write_u32(w, order as u32)?;
    for v in vectors {
        let floats: Vec<f32> = v.coeffs().iter().map(|c| *c as f32).collect();
        container::write_f32_slice(w, &floats)?;
    }
    Ok(())
}

pub fn read_sidecar(r: &mut impl Read) -> Result<(Vec<SHVector>, SidecarHeader)> {
    let (_, header): (u32, SidecarHeader) =
        container::read_header(r, SIDECAR_MAGIC, SIDECAR_VERSION)?;
    let count = container::read_u32(r)? as usize;
    let order = container::read_u32(r)? as usize;
    if order > 8 || count > 1 << 26 {
        return Err(Error::Format("sidecar header out of range".into()));
    }
    let n = sh::sh_count(order);
    let mut vectors = Vec::with_capacity(count);
    for _ in 0..count {
        let floats = container::read_f32_vec(r, n)?;
        vectors.push(SHVector::new(
            order,
            floats.into_iter().map(f64::from).collect(),
        )?);
    }
    Ok((vectors, header))
}

pub fn save_sidecar(path: &Path, vectors: &[SHVector], header: &SidecarHeader) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sidecar(&mut w, vectors, header)
}

pub fn load_sidecar(path: &Path) -> Result<(Vec<SHVector>, SidecarHeader)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path).map_err(|e| {
        Error::invalid(format!("cannot open transmittance sidecar {}: {e}", path.display()))
    })?);
    read_sidecar(&mut r)
}

/// Validation scenes for the baking pipeline. Each ends with a two-vertex
/// probe strand at the origin whose first vertex (`vertex_count() - 2`) is
/// the intended bake target.
pub mod scenes {
    use crate::geom::Vec3;
    use crate::strand::HairGeometry;

    fn with_probe(mut polylines: Vec<(Vec<(Vec3, f64)>, f64)>) -> HairGeometry {
        polylines.push((
            vec![
                (Vec3::new(-0.1, 0.0, 0.0), 0.01),
                (Vec3::new(0.1, 0.0, 0.0), 0.01),
            ],
            0.5,
        ));
        HairGeometry::new(polylines).unwrap()
    }

    /// Concentric latitude rings of opaque strands enclosing the probe; the
    /// probe vertex sees (almost) nothing in any direction.
    pub fn enclosing_shell_groom() -> HairGeometry {
        let mut polylines = Vec::new();
        let rings = 36;
        for k in 0..rings {
            let theta = (k as f64 + 0.5) * std::f64::consts::PI / rings as f64;
            let (st, ct) = theta.sin_cos();
            let mut pts = Vec::new();
            let segs = 64;
            for s in 0..=segs {
                let phi = std::f64::consts::TAU * s as f64 / segs as f64;
                pts.push((Vec3::new(st * phi.cos(), st * phi.sin(), ct), 0.08));
            }
            polylines.push((pts, 1.0));
        }
        with_probe(polylines)
    }

    /// Smooth half-occlusion: nested translucent domes above the probe,
    /// each dome a single strand (latitude rings joined into one polyline),
    /// so a ray attenuates once per dome regardless of how many rings it
    /// grazes. Dome k caps polar angles up to 7.5 deg * k; the per-dome
    /// alphas realize a staircase of V(theta) = exp(-1.8 cos theta) above
    /// the horizon, continuous at the horizon. Low-order SH fits this
    /// profile well, unlike a hard-edged occluder.
    pub fn layered_half_occlusion_groom() -> HairGeometry {
        let layers = 12usize;
        let band = |j: usize| (7.5 * j as f64).to_radians();
        let target = |theta: f64| (-1.8 * theta.cos().max(0.0)).exp();
        // Band j midpoint transmittance, band `layers` + 1 being open sky.
        let v_mid = |j: usize| -> f64 {
            if j > layers {
                1.0
            } else {
                target(0.5 * (band(j - 1) + band(j)))
            }
        };
        let mut polylines = Vec::new();
        for k in 1..=layers {
            let alpha = 1.0 - v_mid(k) / v_mid(k + 1);
            let radius = 1.0 + 0.08 * k as f64;
            let fiber = 0.05 * radius;
            let mut pts = Vec::new();
            // Rings every 5 degrees; fiber half-width ~2.9 degrees keeps
            // the dome gap-free.
            let mut theta = 2.5f64.to_radians();
            while theta < band(k) {
                let ring_r = radius * theta.sin();
                let z = radius * theta.cos();
                let segs = ((std::f64::consts::TAU * ring_r / 0.15).ceil() as usize).max(8);
                for s in 0..=segs {
                    let phi = std::f64::consts::TAU * s as f64 / segs as f64;
                    pts.push((Vec3::new(ring_r * phi.cos(), ring_r * phi.sin(), z), fiber));
                }
                theta += 5.0f64.to_radians();
            }
            polylines.push((pts, alpha.clamp(0.0, 1.0)));
        }
        with_probe(polylines)
    }
}
