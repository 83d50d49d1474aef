//! Far-field illumination in spherical harmonics: environment-map
//! projection, a canonical-frame phase-function LUT with absorption
//! factored out of the bake, and the triple-product shading path that ties
//! visibility, environment, and phase together.

use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::container;
use crate::fiber::{
    angles_from_directions, bravais_index, longitudinal_m, AzimuthalLUT, FiberMaterial, Mode,
    COS2_FLOOR, MODE_COUNT,
};
use crate::geom::{orthonormal_basis, Direction, Rotation};
use crate::image::FrameBuffer;
use crate::sh::{
    apply_rotation_blocks, rotation_blocks_len, sh_count, triple_product_with, write_basis_all,
    write_rotation_blocks, GauntTable, SHVector, ShRotation, SphereQuadrature,
};
use crate::{Error, Result};

/// Default SH order for environment maps (9 coefficients per channel).
pub const ENVIRONMENT_ORDER: usize = 2;
/// Default sample count of the phase LUT over x = (sin theta_r + 1)/2.
pub const PHASE_LUT_SAMPLES: usize = 128;
/// Default SH order of the phase LUT (4 coefficients per mode).
pub const PHASE_LUT_ORDER: usize = 1;
/// TT absorption applied at shading time: exp(-4 sigma_a).
pub const TT_ABSORPTION_SCALE: f64 = 4.0;
/// Factorized TRT absorption applied at shading time: exp(-11/2 sigma_a).
pub const TRT_ABSORPTION_SCALE: f64 = 5.5;

/// Distant illumination as one SH vector per color channel.
#[derive(Debug, Clone)]
pub struct EnvironmentSH {
    channels: [SHVector; 3],
    source: Option<String>,
}

impl EnvironmentSH {
    pub fn new(channels: [SHVector; 3], source: Option<String>) -> Result<Self> {
        let order = channels[0].order();
        if channels.iter().any(|c| c.order() != order) {
            return Err(Error::invalid(
                "environment channels must share one SH order",
            ));
        }
        if channels
            .iter()
            .any(|c| c.coeffs().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::invalid(
                "environment SH coefficients must be finite",
            ));
        }
        Ok(EnvironmentSH { channels, source })
    }

    pub fn order(&self) -> usize {
        self.channels[0].order()
    }

    pub fn channel(&self, i: usize) -> &SHVector {
        &self.channels[i]
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    /// Band-limited radiance arriving from `d`; reconstruction is left
    /// unclamped so that integrals against it stay linear.
    pub fn eval(&self, d: Direction) -> Rgb {
        Rgb::from_channels(|i| self.channels[i].eval(d))
    }

    pub fn scaled(&self, s: f64) -> EnvironmentSH {
        EnvironmentSH {
            channels: [
                self.channels[0].scaled(s),
                self.channels[1].scaled(s),
                self.channels[2].scaled(s),
            ],
            source: self.source.clone(),
        }
    }

    pub fn rotated(&self, r: &Rotation) -> EnvironmentSH {
        EnvironmentSH {
            channels: [
                crate::sh::rotate(&self.channels[0], r),
                crate::sh::rotate(&self.channels[1], r),
                crate::sh::rotate(&self.channels[2], r),
            ],
            source: self.source.clone(),
        }
    }
}

/// Direction of the texel center (i, j) of an equirectangular map: row 0
/// lies at the +z pole, phi runs with the pixel column from +x.
pub fn equirect_direction(i: usize, j: usize, width: usize, height: usize) -> Direction {
    let theta = std::f64::consts::PI * (j as f64 + 0.5) / height as f64;
    let phi = std::f64::consts::TAU * (i as f64 + 0.5) / width as f64;
    Direction::from_components(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
        .expect("equirectangular texel direction")
}

/// Projects an equirectangular radiance map onto SH per channel. Each row
/// is weighted by its exact solid angle (delta_phi times the cosine span),
/// so the weights tile 4 pi and a constant map projects exactly to DC.
pub fn project_envmap(image: &FrameBuffer, order: usize) -> Result<EnvironmentSH> {
    let (w, h) = (image.width(), image.height());
    if w < 8 || h < 4 {
        return Err(Error::invalid("environment map must be at least 8x4"));
    }
    if !image.is_finite() {
        return Err(Error::invalid("environment map has non-finite texels"));
    }
    let n = sh_count(order);
    let mut coeffs = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut basis = vec![0.0; n];
    for j in 0..h {
        let theta_top = std::f64::consts::PI * j as f64 / h as f64;
        let theta_bot = std::f64::consts::PI * (j + 1) as f64 / h as f64;
        let texel_weight = std::f64::consts::TAU / w as f64 * (theta_top.cos() - theta_bot.cos());
        for i in 0..w {
            let d = equirect_direction(i, j, w, h);
            write_basis_all(order, d, &mut basis);
            let rgb = image.pixel(i, j);
            for c in 0..3 {
                let v = rgb.channel(c) * texel_weight;
                for (acc, b) in coeffs[c].iter_mut().zip(&basis) {
                    *acc += v * b;
                }
            }
        }
    }
    let [r, g, b] = coeffs;
    EnvironmentSH::new(
        [
            SHVector::new(order, r)?,
            SHVector::new(order, g)?,
            SHVector::new(order, b)?,
        ],
        None,
    )
}

/// Canonical-frame SH projections of the three scattering modes, sampled
/// over x = (sin theta_r + 1)/2. The canonical frame puts the tangent on
/// +z and the outgoing direction in the xz-plane with positive x.
/// Absorption is deliberately left out of the bake; shading scales the TT
/// and TRT vectors by their exponentials.
#[derive(Debug, Clone)]
pub struct PhaseSHLUT {
    order: usize,
    samples: Vec<[SHVector; MODE_COUNT]>,
}

impl PhaseSHLUT {
    pub fn new(order: usize, samples: Vec<[SHVector; MODE_COUNT]>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("phase LUT needs at least two samples"));
        }
        if samples
            .iter()
            .any(|s| s.iter().any(|v| v.order() != order))
        {
            return Err(Error::invalid("phase LUT samples must share one SH order"));
        }
        Ok(PhaseSHLUT { order, samples })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn sample(&self, j: usize) -> &[SHVector; MODE_COUNT] {
        &self.samples[j]
    }

    /// Longitudinal angle of sample j; x_j = j/(N-1).
    pub fn sample_theta_r(&self, j: usize) -> f64 {
        let x = j as f64 / (self.samples.len() - 1) as f64;
        (2.0 * x - 1.0).asin()
    }

    /// Bracketing sample index and interpolation fraction at sin(theta_r).
    fn bracket(&self, sin_theta_r: f64) -> (usize, f64) {
        let x = (sin_theta_r.clamp(-1.0, 1.0) + 1.0) * 0.5;
        let t = x * (self.samples.len() - 1) as f64;
        let j0 = (t.floor() as usize).min(self.samples.len() - 2);
        (j0, t - j0 as f64)
    }

    /// Per-mode coefficients at sin(theta_r), linearly interpolated
    /// between the two bracketing samples.
    pub fn fetch(&self, sin_theta_r: f64) -> [SHVector; MODE_COUNT] {
        let (j0, f) = self.bracket(sin_theta_r);
        let lo = &self.samples[j0];
        let hi = &self.samples[j0 + 1];
        std::array::from_fn(|m| {
            let mut v = lo[m].scaled(1.0 - f);
            v.axpy(&hi[m], f);
            v
        })
    }

    /// Combines fetched mode vectors for one absorption coefficient:
    /// a^R + a^TT exp(-4 sigma_a) + a^TRT exp(-11/2 sigma_a).
    pub fn combine(modes: &[SHVector; MODE_COUNT], sigma_a: f64) -> SHVector {
        let mut out = modes[Mode::R as usize].clone();
        out.axpy(
            &modes[Mode::Tt as usize],
            (-TT_ABSORPTION_SCALE * sigma_a).exp(),
        );
        out.axpy(
            &modes[Mode::Trt as usize],
            (-TRT_ABSORPTION_SCALE * sigma_a).exp(),
        );
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBakeParams {
    pub samples: usize,
    pub order: usize,
    pub quad_theta: usize,
    pub quad_phi: usize,
}

impl Default for PhaseBakeParams {
    fn default() -> Self {
        PhaseBakeParams {
            samples: PHASE_LUT_SAMPLES,
            order: PHASE_LUT_ORDER,
            quad_theta: 64,
            quad_phi: 128,
        }
    }
}

/// Projects one mode's canonical-frame phase slice at outgoing angle
/// theta_r onto SH, weighting each incident direction by `attenuation` of
/// its difference angle. The bake passes a constant 1 (unit absorption);
/// the factorization check passes the exact sigma_a-dependent exponential.
/// Both paths share this code so that at sigma_a = 0 they agree bitwise.
fn project_mode(
    material: &FiberMaterial,
    lut: &AzimuthalLUT,
    mode: Mode,
    theta_r: f64,
    order: usize,
    quad: &SphereQuadrature,
    attenuation: &(dyn Fn(f64) -> f64 + Sync),
) -> SHVector {
    let w_r = Direction::from_components(theta_r.cos(), 0.0, theta_r.sin())
        .expect("canonical outgoing direction");
    let u = Direction::z_axis();
    let n = sh_count(order);
    let mut coeffs = vec![0.0; n];
    let mut basis = vec![0.0; n];
    for (d, w) in quad.nodes() {
        let a = angles_from_directions(d, w_r, u);
        let cos_d = a.theta_d.cos();
        let inv_cos2 = 1.0 / (cos_d * cos_d).max(COS2_FLOOR);
        let m = longitudinal_m(mode, a.theta_h, material);
        let nv = lut.sample(mode, a.theta_d, a.phi);
        let f = m * nv * inv_cos2 * attenuation(a.theta_d) * w;
        write_basis_all(order, d, &mut basis);
        for (acc, b) in coeffs.iter_mut().zip(&basis) {
            *acc += f * b;
        }
    }
    SHVector::new(order, coeffs).expect("projection coefficient count")
}

pub fn bake_phase_sh_lut(
    material: &FiberMaterial,
    lut: &AzimuthalLUT,
    params: &PhaseBakeParams,
) -> Result<PhaseSHLUT> {
    if params.samples < 2 {
        return Err(Error::invalid("phase LUT needs at least two samples"));
    }
    let quad = SphereQuadrature::new(params.quad_theta, params.quad_phi);
    let samples: Vec<[SHVector; MODE_COUNT]> = (0..params.samples)
        .into_par_iter()
        .map(|j| {
            let x = j as f64 / (params.samples - 1) as f64;
            let theta_r = (2.0 * x - 1.0).asin();
            [Mode::R, Mode::Tt, Mode::Trt].map(|mode| {
                project_mode(material, lut, mode, theta_r, params.order, &quad, &|_| 1.0)
            })
        })
        .collect();
    PhaseSHLUT::new(params.order, samples)
}

/// Difference angle at which the exact TRT exponent 8 (1 - 3/(2 eta'^2))
/// equals the factorized 11/2, if one exists for this refraction index.
pub fn trt_crossing_theta_d(eta: f64) -> Option<f64> {
    let s2 = (4.8 - eta * eta) / 3.8;
    (0.0..1.0).contains(&s2).then(|| s2.sqrt().asin())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrtFactorizationEntry {
    pub sigma_a: f64,
    /// Relative L2 distance between the factorized TRT coefficients and a
    /// direct projection carrying the exact absorption, pooled over all
    /// LUT samples.
    pub relative_l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrtFactorizationReport {
    pub eta: f64,
    pub samples: usize,
    pub order: usize,
    pub crossing_theta_d: Option<f64>,
    pub entries: Vec<TrtFactorizationEntry>,
}

impl fmt::Display for TrtFactorizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "TRT absorption factorization check (eta = {}, {} samples, SH order {})",
            self.eta, self.samples, self.order
        )?;
        match self.crossing_theta_d {
            Some(t) => writeln!(
                f,
                "exponents coincide at theta_d = {:.4} rad ({:.2} deg)",
                t,
                t.to_degrees()
            )?,
            None => writeln!(f, "exponents never coincide for this index")?,
        }
        writeln!(f, "{:>10}  {:>14}", "sigma_a", "rel L2 error")?;
        for e in &self.entries {
            writeln!(f, "{:>10.4}  {:>14.6e}", e.sigma_a, e.relative_l2)?;
        }
        Ok(())
    }
}

/// Measures the error of replacing the theta_d-dependent TRT absorption
/// exp(-8 sigma_a (1 - 3/(2 eta'^2))) by the constant-exponent
/// exp(-11/2 sigma_a) at the SH coefficient level. Both sides reuse the
/// unit-absorption projection path, so sigma_a = 0 reports exactly zero.
pub fn validate_trt_factorization(
    material: &FiberMaterial,
    lut: &AzimuthalLUT,
    params: &PhaseBakeParams,
    sigma_a_samples: &[f64],
) -> Result<TrtFactorizationReport> {
    if params.samples < 2 {
        return Err(Error::invalid("phase LUT needs at least two samples"));
    }
    let quad = SphereQuadrature::new(params.quad_theta, params.quad_phi);
    let thetas: Vec<f64> = (0..params.samples)
        .map(|j| {
            let x = j as f64 / (params.samples - 1) as f64;
            (2.0 * x - 1.0).asin()
        })
        .collect();
    let unit: Vec<SHVector> = thetas
        .par_iter()
        .map(|&t| project_mode(material, lut, Mode::Trt, t, params.order, &quad, &|_| 1.0))
        .collect();
    let eta = material.eta;
    let mut entries = Vec::with_capacity(sigma_a_samples.len());
    for &s in sigma_a_samples {
        let atten = move |theta_d: f64| {
            let ep = bravais_index(theta_d, eta);
            (-8.0 * s * (1.0 - 3.0 / (2.0 * ep * ep))).exp()
        };
        let direct: Vec<SHVector> = thetas
            .par_iter()
            .map(|&t| project_mode(material, lut, Mode::Trt, t, params.order, &quad, &atten))
            .collect();
        let factor = (-TRT_ABSORPTION_SCALE * s).exp();
        let mut num = 0.0;
        let mut den = 0.0;
        for (d, u) in direct.iter().zip(&unit) {
            for (dv, uv) in d.coeffs().iter().zip(u.coeffs()) {
                let fv = uv * factor;
                num += (dv - fv) * (dv - fv);
                den += dv * dv;
            }
        }
        let relative_l2 = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
        entries.push(TrtFactorizationEntry {
            sigma_a: s,
            relative_l2,
        });
    }
    Ok(TrtFactorizationReport {
        eta,
        samples: params.samples,
        order: params.order,
        crossing_theta_d: trt_crossing_theta_d(eta),
        entries,
    })
}

/// Rotation carrying the canonical LUT frame onto world space: +z lands on
/// the tangent u and +x on the normal-plane projection of w_r (any
/// normal-plane axis when w_r is parallel to u).
pub fn canonical_to_world(w_r: Direction, u: Direction) -> Rotation {
    let sin_theta_r = w_r.dot(u);
    let tangential = w_r.vec() - u.vec() * sin_theta_r;
    let norm = tangential.norm();
    let x_axis = if norm > 1e-9 {
        tangential / norm
    } else {
        orthonormal_basis(u).0
    };
    let y_axis = u.vec().cross(&x_axis);
    Rotation::from_frame(x_axis, y_axis, u.vec()).expect("canonical frame axes")
}

/// Far-field radiance leaving along w_r: fetch the canonical phase vectors
/// at sin(theta_r), rotate them into world space, apply the two absorption
/// exponentials per channel, and evaluate the visibility x environment x
/// phase triple product. Negative values (SH ringing) are logged at debug
/// level and clamped to zero after the product, not per factor.
pub fn shade_far(
    v_sh: &SHVector,
    env: &EnvironmentSH,
    lut: &PhaseSHLUT,
    w_r: Direction,
    u: Direction,
    sigma_a: Rgb,
) -> Rgb {
    let modes = lut.fetch(w_r.dot(u).clamp(-1.0, 1.0));
    let rot = ShRotation::new(lut.order(), &canonical_to_world(w_r, u));
    let world: [SHVector; MODE_COUNT] = std::array::from_fn(|m| rot.apply(&modes[m]));
    let order = v_sh.order().max(env.order()).max(lut.order());
    let table = GauntTable::shared(order);
    // Zero-padding to the common band limit leaves the integral unchanged.
    let v_sh = v_sh.resized(order);
    Rgb::from_channels(|c| {
        let phase = PhaseSHLUT::combine(&world, sigma_a.channel(c)).resized(order);
        let env_c = env.channel(c).resized(order);
        let value = triple_product_with(&table, &v_sh, &env_c, &phase);
        if value < 0.0 {
            log::debug!("far-field triple product clamped from {value:.3e}");
        }
        value.max(0.0)
    })
}

/// Band limit ceiling of the prepared far-field shader.
pub const MAX_SHADE_ORDER: usize = 8;
/// The per-hit buffers stay on the stack up to this LUT order (stack cost
/// is zeroing them, so the cap hugs the realistic orders); beyond it the
/// shader falls back to heap rotation.
const ROT_STACK_ORDER: usize = 2;
const ROT_STACK_LEN: usize = rotation_blocks_len(ROT_STACK_ORDER);
const ROT_STACK_COUNT: usize = sh_count(ROT_STACK_ORDER);

/// `shade_far` with the per-frame work hoisted out: the environment is
/// contracted against the Gaunt tensor and the absorption exponentials are
/// evaluated once, so each shading point costs a LUT-order rotation plus a
/// few hundred multiply-adds and (up to LUT order 2) never touches the
/// heap. Values match `shade_far` up to summation order.
pub struct FarFieldShader<'a> {
    lut: &'a PhaseSHLUT,
    /// Coefficient count at the common band limit of visibility,
    /// environment, and phase.
    n: usize,
    phase_n: usize,
    /// Per-channel TT and TRT attenuation for the fixed absorption.
    att_tt: Rgb,
    att_trt: Rgb,
    /// pair[c][k * n + i] = sum_j G[i][j][k] env_c[j]; dotting with the
    /// visibility over i and the world-frame phase over k completes the
    /// triple product.
    pair: [Vec<f64>; 3],
}

impl<'a> FarFieldShader<'a> {
    pub fn new(
        env: &EnvironmentSH,
        lut: &'a PhaseSHLUT,
        visibility_order: usize,
        sigma_a: Rgb,
    ) -> Result<FarFieldShader<'a>> {
        let order = visibility_order.max(env.order()).max(lut.order());
        if order > MAX_SHADE_ORDER {
            return Err(Error::invalid(format!(
                "far-field shading supports SH order at most {MAX_SHADE_ORDER}, got {order}"
            )));
        }
        let n = sh_count(order);
        let table = GauntTable::shared(order);
        let mut pair = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for (c, slot) in pair.iter_mut().enumerate() {
            let env_c = env.channel(c);
            for (i, j, k, g) in table.entries() {
                if j < env_c.len() {
                    slot[k * n + i] += g * env_c.get(j);
                }
            }
        }
        Ok(FarFieldShader {
            lut,
            n,
            phase_n: sh_count(lut.order()),
            att_tt: (sigma_a * TT_ABSORPTION_SCALE).exp_neg(),
            att_trt: (sigma_a * TRT_ABSORPTION_SCALE).exp_neg(),
            pair,
        })
    }

    /// Far-field radiance leaving along w_r; see `shade_far` for the
    /// definition this accelerates.
    pub fn shade(&self, v_sh: &SHVector, w_r: Direction, u: Direction) -> Rgb {
        let v = v_sh.coeffs();
        assert!(
            v.len() <= self.n,
            "visibility band limit exceeds the prepared shader"
        );
        let sin_theta_r = w_r.dot(u).clamp(-1.0, 1.0);
        let rot_order = self.lut.order();
        if rot_order > ROT_STACK_ORDER {
            let modes = self.lut.fetch(sin_theta_r);
            let rot = ShRotation::new(rot_order, &canonical_to_world(w_r, u));
            let world: [SHVector; MODE_COUNT] = std::array::from_fn(|m| rot.apply(&modes[m]));
            return self.contract(v, [world[0].coeffs(), world[1].coeffs(), world[2].coeffs()]);
        }
        let (j0, f) = self.lut.bracket(sin_theta_r);
        let lo = self.lut.sample(j0);
        let hi = self.lut.sample(j0 + 1);
        let mut canonical = [[0.0; ROT_STACK_COUNT]; MODE_COUNT];
        for m in 0..MODE_COUNT {
            for ((x, a), b) in canonical[m][..self.phase_n]
                .iter_mut()
                .zip(lo[m].coeffs())
                .zip(hi[m].coeffs())
            {
                *x = a * (1.0 - f) + b * f;
            }
        }
        let mut blocks = [0.0; ROT_STACK_LEN];
        let blocks = &mut blocks[..rotation_blocks_len(rot_order)];
        write_rotation_blocks(rot_order, &canonical_to_world(w_r, u), blocks);
        let mut world = [[0.0; ROT_STACK_COUNT]; MODE_COUNT];
        for m in 0..MODE_COUNT {
            apply_rotation_blocks(
                rot_order,
                blocks,
                &canonical[m][..self.phase_n],
                &mut world[m][..self.phase_n],
            );
        }
        self.contract(
            v,
            [
                &world[0][..self.phase_n],
                &world[1][..self.phase_n],
                &world[2][..self.phase_n],
            ],
        )
    }

    fn contract(&self, v: &[f64], world: [&[f64]; MODE_COUNT]) -> Rgb {
        Rgb::from_channels(|c| {
            let a_tt = self.att_tt.channel(c);
            let a_trt = self.att_trt.channel(c);
            let pair = &self.pair[c];
            let mut value = 0.0;
            for k in 0..self.phase_n {
                let phase_k = world[Mode::R as usize][k]
                    + a_tt * world[Mode::Tt as usize][k]
                    + a_trt * world[Mode::Trt as usize][k];
                let row = &pair[k * self.n..k * self.n + v.len()];
                let mut vis_env = 0.0;
                for (vi, pi) in v.iter().zip(row) {
                    vis_env += vi * pi;
                }
                value += phase_k * vis_env;
            }
            if value < 0.0 {
                log::debug!("far-field triple product clamped from {value:.3e}");
            }
            value.max(0.0)
        })
    }
}

pub const PHASE_LUT_MAGIC: &[u8; 8] = b"HAIRPSHL";
const PHASE_LUT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseLutHeader {
    pub material: FiberMaterial,
    pub samples: usize,
    pub order: usize,
    pub modes: usize,
    pub quantized: bool,
}

/// Round-trip statistics of the quantized export, per mode.
#[derive(Debug, Clone)]
pub struct QuantizationReport {
    pub offset: [f64; MODE_COUNT],
    pub scale: [f64; MODE_COUNT],
    pub max_abs_error: [f64; MODE_COUNT],
}

impl fmt::Display for QuantizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "8-bit quantization round trip:")?;
        for (m, name) in ["R", "TT", "TRT"].iter().enumerate() {
            writeln!(
                f,
                "  {:>3}: offset {:+.6e}, scale {:.6e}, max abs error {:.6e}",
                name, self.offset[m], self.scale[m], self.max_abs_error[m]
            )?;
        }
        Ok(())
    }
}

/// Container layout after the common header: u32 sample count, u32 order,
/// u32 mode count, u32 quantized flag. Float payload: per sample, per
/// mode, the f32 coefficients. Quantized payload: per mode, f64 offset and
/// f64 scale, then per sample the coefficient bytes where
/// value = offset + scale * byte / 255.
pub fn write_phase_sh_lut(
    w: &mut impl Write,
    lut: &PhaseSHLUT,
    material: &FiberMaterial,
    quantize: bool,
) -> Result<Option<QuantizationReport>> {
    let header = PhaseLutHeader {
        material: material.clone(),
        samples: lut.sample_count(),
        order: lut.order(),
        modes: MODE_COUNT,
        quantized: quantize,
    };
    container::write_header(w, PHASE_LUT_MAGIC, PHASE_LUT_VERSION, &header)?;
    container::write_u32(w, lut.sample_count() as u32)?;
    container::write_u32(w, lut.order() as u32)?;
    container::write_u32(w, MODE_COUNT as u32)?;
    container::write_u32(w, quantize as u32)?;
    if !quantize {
        for j in 0..lut.sample_count() {
            for mode in lut.sample(j) {
                let data: Vec<f32> = mode.coeffs().iter().map(|&v| v as f32).collect();
                container::write_f32_slice(w, &data)?;
            }
        }
        return Ok(None);
    }
    let mut report = QuantizationReport {
        offset: [0.0; MODE_COUNT],
        scale: [0.0; MODE_COUNT],
        max_abs_error: [0.0; MODE_COUNT],
    };
    for m in 0..MODE_COUNT {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..lut.sample_count() {
            for &v in lut.sample(j)[m].coeffs() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let scale = if hi > lo { hi - lo } else { 1.0 };
        container::write_f64(w, lo)?;
        container::write_f64(w, scale)?;
        let mut bytes = Vec::with_capacity(lut.sample_count() * sh_count(lut.order()));
        let mut max_err = 0.0f64;
        for j in 0..lut.sample_count() {
            for &v in lut.sample(j)[m].coeffs() {
                let q = (((v - lo) / scale * 255.0).round()).clamp(0.0, 255.0) as u8;
                let back = lo + scale * q as f64 / 255.0;
                max_err = max_err.max((back - v).abs());
                bytes.push(q);
            }
        }
        w.write_all(&bytes).map_err(Error::from)?;
        report.offset[m] = lo;
        report.scale[m] = scale;
        report.max_abs_error[m] = max_err;
    }
    Ok(Some(report))
}

pub fn read_phase_sh_lut(r: &mut impl Read) -> Result<(PhaseSHLUT, PhaseLutHeader)> {
    let (_, header): (u32, PhaseLutHeader) =
        container::read_header(r, PHASE_LUT_MAGIC, PHASE_LUT_VERSION)?;
    let samples = container::read_u32(r)? as usize;
    let order = container::read_u32(r)? as usize;
    let modes = container::read_u32(r)? as usize;
    let quantized = container::read_u32(r)? != 0;
    if samples != header.samples
        || order != header.order
        || modes != MODE_COUNT
        || quantized != header.quantized
    {
        return Err(Error::Format(
            "phase LUT header disagrees with binary layout".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::Format("phase LUT sample count below two".into()));
    }
    let n = sh_count(order);
    let mut data = vec![[(); MODE_COUNT].map(|_| SHVector::zeros(order)); samples];
    if !quantized {
        for sample in data.iter_mut() {
            for mode in sample.iter_mut() {
                let raw = container::read_f32_vec(r, n)?;
                *mode = SHVector::new(order, raw.iter().map(|&v| v as f64).collect())?;
            }
        }
    } else {
        for m in 0..MODE_COUNT {
            let offset = container::read_f64(r)?;
            let scale = container::read_f64(r)?;
            let mut bytes = vec![0u8; samples * n];
            r.read_exact(&mut bytes).map_err(Error::from)?;
            for (j, chunk) in bytes.chunks_exact(n).enumerate() {
                let coeffs: Vec<f64> = chunk
                    .iter()
                    .map(|&q| offset + scale * q as f64 / 255.0)
                    .collect();
                data[j][m] = SHVector::new(order, coeffs)?;
            }
        }
    }
    Ok((PhaseSHLUT::new(order, data)?, header))
}
