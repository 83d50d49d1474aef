//! Single-fiber scattering: geometry angles, Henyey-Greenstein longitudinal
//! lobes with the width-to-g fit, Bravais indices and Fresnel, the baked
//! azimuthal table for the R/TT/TRT modes, and full phase evaluation.
//!
//! The phase function factors per mode p into M_p(theta_h) * N_p(theta_d,
//! phi) * A_p(sigma_a) / cos^2(theta_d). M is a Henyey-Greenstein lobe
//! standing in for a Gaussian, N comes from a baked 2D table over
//! (theta_d, phi) with absorption factored out, and A_p reapplies absorption
//! as a closed-form exponential per mode.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::container;
use crate::geom::{orthonormal_basis, Direction};
use crate::{Error, Result};

pub const MODE_COUNT: usize = 3;

/// Scattering path through the fiber: surface reflection, double
/// transmission, or transmission-internal reflection-transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    R = 0,
    Tt = 1,
    Trt = 2,
}

pub const MODES: [Mode; MODE_COUNT] = [Mode::R, Mode::Tt, Mode::Trt];

/// Full angle set for one scattering configuration, measured against the
/// fiber tangent u. Inclinations are from the normal plane (so sin(theta) =
/// direction . u); azimuths live in the normal plane against a fixed
/// reference axis derived deterministically from u.
#[derive(Clone, Copy, Debug)]
pub struct ScatteringAngles {
    pub theta_i: f64,
    pub theta_r: f64,
    pub phi_i: f64,
    pub phi_r: f64,
    /// Difference angle (theta_r - theta_i) / 2.
    pub theta_d: f64,
    /// Half angle (theta_i + theta_r) / 2.
    pub theta_h: f64,
    /// Relative azimuth phi_r - phi_i, wrapped to (-pi, pi].
    pub phi: f64,
    /// Azimuthal half angle (phi_i + phi_r) / 2; kept for completeness, no
    /// implemented term consumes it.
    pub phi_h: f64,
}

impl ScatteringAngles {
    pub fn new(theta_i: f64, theta_r: f64, phi_i: f64, phi_r: f64) -> Self {
        ScatteringAngles {
            theta_i,
            theta_r,
            phi_i,
            phi_r,
            theta_d: 0.5 * (theta_r - theta_i),
            theta_h: 0.5 * (theta_i + theta_r),
            phi: wrap_angle(phi_r - phi_i),
            phi_h: 0.5 * (phi_i + phi_r),
        }
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Decomposes an (incident, outgoing, tangent) triple into scattering angles.
/// Directions parallel to the tangent get azimuth 0 by convention (the
/// normal-plane projection vanishes there).
pub fn angles_from_directions(w_i: Direction, w_r: Direction, u: Direction) -> ScatteringAngles {
    let (e1, e2) = orthonormal_basis(u);
    let decompose = |w: Direction| -> (f64, f64) {
        let s = w.dot(u).clamp(-1.0, 1.0);
        let theta = s.asin();
        let in_plane = w.vec() - s * u.vec();
        let phi = if in_plane.norm_squared() < 1e-24 {
            0.0
        } else {
            in_plane.dot(&e2).atan2(in_plane.dot(&e1))
        };
        (theta, phi)
    };
    let (theta_i, phi_i) = decompose(w_i);
    let (theta_r, phi_r) = decompose(w_r);
    ScatteringAngles::new(theta_i, theta_r, phi_i, phi_r)
}

/// Henyey-Greenstein lobe, normalized to unit integral over the sphere:
/// (1/4pi)(1 - g^2) / (1 + g^2 - 2 g cos)^{3/2}.
pub fn hg_lobe(g: f64, cos_angle: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&g));
    debug_assert!(cos_angle.abs() <= 1.0 + 1e-9);
    let denom = 1.0 + g * g - 2.0 * g * cos_angle;
    (1.0 - g * g) / (4.0 * std::f64::consts::PI * denom * denom.sqrt())
}

/// Fits the HG shape parameter to a Gaussian profile of angular standard
/// deviation `beta`, minimizing the weighted L2 difference of the two
/// peak-normalized profiles over theta in [0, pi]. The weight is the squared
/// Gaussian itself, which concentrates the fit on the lobe's support; this
/// reproduces the expected widths-to-g mapping (10 deg -> 0.76, 5 deg ->
/// 0.87, 20 deg -> 0.58) where a plain solid-angle-weighted sphere fit does
/// not (see the decision notes shipped with the repo history).
pub fn fit_g(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < std::f64::consts::FRAC_PI_4) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, pi/4), got {beta}"
        )));
    }
    const N: usize = 2048;
    let dt = std::f64::consts::PI / N as f64;
    let mut thetas = [0.0f64; N];
    let mut gauss = [0.0f64; N];
    for i in 0..N {
        let t = (i as f64 + 0.5) * dt;
        thetas[i] = t;
        gauss[i] = (-t * t / (2.0 * beta * beta)).exp();
    }
    let objective = |g: f64| -> f64 {
        let peak_scale = (1.0 - g) * (1.0 - g) * (1.0 - g);
        let mut acc = 0.0;
        for (t, gz) in thetas.iter().zip(gauss.iter()) {
            let denom = 1.0 + g * g - 2.0 * g * t.cos();
            let hg = peak_scale / (denom * denom.sqrt());
            let diff = hg - gz;
            acc += gz * gz * diff * diff * dt;
        }
        acc
    };

    // Golden-section search; unimodal objective on (0, 1).
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (lo, hi) = (0.01f64, 0.999f64);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
        if b - a < 1e-6 {
            break;
        }
    }
    let g = 0.5 * (a + b);
    if b - a > 1e-4 {
        return Err(Error::Convergence(format!(
            "g fit bracket stalled at [{a}, {b}] for beta = {beta}"
        )));
    }
    if g <= lo + 1e-4 || g >= hi - 1e-4 {
        return Err(Error::Convergence(format!(
            "g fit ran into the domain boundary (g = {g}) for beta = {beta}"
        )));
    }
    Ok(g)
}

/// Longitudinal lobe parameters for one mode.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LobeParams {
    /// Angular width (Gaussian-equivalent standard deviation), radians.
    pub beta: f64,
    /// Longitudinal shift, radians.
    pub alpha: f64,
    /// Fitted HG shape parameter.
    pub g: f64,
}

/// Fiber optical description. The TT and TRT lobes derive from the R lobe:
/// beta_TT = beta_R / 2, beta_TRT = 2 beta_R, alpha_TT = -alpha_R / 2,
/// alpha_TRT = -3 alpha_R / 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberMaterial {
    pub sigma_a: Rgb,
    pub eta: f64,
    pub r: LobeParams,
    pub tt: LobeParams,
    pub trt: LobeParams,
}

impl FiberMaterial {
    pub const DEFAULT_ETA: f64 = 1.55;

    pub fn new(sigma_a: Rgb, eta: f64, beta_r: f64, alpha_r: f64) -> Result<Self> {
        if sigma_a.min_component() < 0.0 {
            return Err(Error::invalid("sigma_a must be non-negative"));
        }
        if !(eta > 1.0 && eta < 3.0) {
            return Err(Error::invalid(format!("eta out of range: {eta}")));
        }
        let (beta_tt, beta_trt) = (0.5 * beta_r, 2.0 * beta_r);
        let (alpha_tt, alpha_trt) = (-0.5 * alpha_r, -1.5 * alpha_r);
        Ok(FiberMaterial {
            sigma_a,
            eta,
            r: LobeParams {
                beta: beta_r,
                alpha: alpha_r,
                g: fit_g(beta_r)?,
            },
            tt: LobeParams {
                beta: beta_tt,
                alpha: alpha_tt,
                g: fit_g(beta_tt)?,
            },
            trt: LobeParams {
                beta: beta_trt,
                alpha: alpha_trt,
                g: fit_g(beta_trt)?,
            },
        })
    }

    /// Brown-ish default: beta_R = 10 deg, alpha_R = -10 deg, eta = 1.55.
    pub fn default_brown(sigma_a: Rgb) -> Result<Self> {
        FiberMaterial::new(
            sigma_a,
            Self::DEFAULT_ETA,
            10.0f64.to_radians(),
            (-10.0f64).to_radians(),
        )
    }

    pub fn lobe(&self, mode: Mode) -> &LobeParams {
        match mode {
            Mode::R => &self.r,
            Mode::Tt => &self.tt,
            Mode::Trt => &self.trt,
        }
    }

    /// Per-mode absorption factor at the given difference angle,
    /// componentwise over RGB: A_R = 1, A_TT = exp(-4 sigma_a),
    /// A_TRT = exp(-8 sigma_a (1 - 3/(2 eta'^2))).
    pub fn absorption_factor(&self, mode: Mode, theta_d: f64) -> Rgb {
        match mode {
            Mode::R => Rgb::WHITE,
            Mode::Tt => (self.sigma_a * 4.0).exp_neg(),
            Mode::Trt => {
                let eta_p = bravais_index(theta_d, self.eta);
                let k = 8.0 * (1.0 - 3.0 / (2.0 * eta_p * eta_p));
                (self.sigma_a * k).exp_neg()
            }
        }
    }
}

/// Longitudinal lobe for a mode: HG(g_mode, cos(theta_h - alpha_mode)).
pub fn longitudinal_m(mode: Mode, theta_h: f64, material: &FiberMaterial) -> f64 {
    let lobe = material.lobe(mode);
    hg_lobe(lobe.g, (theta_h - lobe.alpha).cos())
}

const MAX_BRAVAIS_ANGLE: f64 = 89.0 * std::f64::consts::PI / 180.0;

/// Perpendicular (Bravais) virtual refraction index for oblique incidence:
/// eta'(theta_d) = sqrt(eta^2 - sin^2 theta_d) / cos theta_d, clamped at 89
/// degrees where it diverges.
pub fn bravais_index(theta_d: f64, eta: f64) -> f64 {
    let t = theta_d.abs().min(MAX_BRAVAIS_ANGLE);
    let s = t.sin();
    (eta * eta - s * s).sqrt() / t.cos()
}

/// Parallel companion index eta''(theta_d) = eta^2 cos theta_d /
/// sqrt(eta^2 - sin^2 theta_d); used for the p-polarized Fresnel half.
pub fn bravais_index_parallel(theta_d: f64, eta: f64) -> f64 {
    let t = theta_d.abs().min(MAX_BRAVAIS_ANGLE);
    let s = t.sin();
    eta * eta * t.cos() / (eta * eta - s * s).sqrt()
}

/// Polarization-averaged dielectric Fresnel reflectance at azimuthal
/// incidence cosine `cos_gamma`, with separate indices for the s and p
/// halves (the Bravais pair). Returns 1 under total internal reflection.
pub fn fresnel_split(eta_perp: f64, eta_par: f64, cos_gamma: f64) -> f64 {
    let cos_i = cos_gamma.clamp(0.0, 1.0);
    let sin2 = 1.0 - cos_i * cos_i;
    let term = |eta: f64, parallel: bool| -> f64 {
        let ct2 = 1.0 - sin2 / (eta * eta);
        if ct2 <= 0.0 {
            return 1.0;
        }
        let cos_t = ct2.sqrt();
        let r = if parallel {
            (eta * cos_i - cos_t) / (eta * cos_i + cos_t)
        } else {
            (cos_i - eta * cos_t) / (cos_i + eta * cos_t)
        };
        r * r
    };
    0.5 * (term(eta_perp, false) + term(eta_par, true))
}

/// Baked azimuthal factors N_p(theta_d, phi), absorption factored out.
/// theta_d spans [-pi/2, pi/2], phi spans [0, pi] (even in phi); grids are
/// endpoint-inclusive and sampled bilinearly.
#[derive(Clone)]
pub struct AzimuthalLUT {
    res_theta: usize,
    res_phi: usize,
    /// grids[mode][ti * res_phi + pi]
    grids: [Arc<Vec<f32>>; MODE_COUNT],
}

/// Bake controls; defaults follow the documented grid (64 x 128), a 1024
/// interval root-search grid, and a 0.05 Jacobian floor near caustics.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AzimuthalBakeParams {
    pub res_theta: usize,
    pub res_phi: usize,
    pub root_grid: usize,
    pub jacobian_floor: f64,
}

impl Default for AzimuthalBakeParams {
    fn default() -> Self {
        AzimuthalBakeParams {
            res_theta: 64,
            res_phi: 128,
            root_grid: 1024,
            jacobian_floor: 0.05,
        }
    }
}

/// The azimuthal deflection of mode p as a function of the normalized offset
/// h in (-1, 1): Phi_p(h) = 2p gamma_t - 2 gamma_i + p pi, with sin gamma_i
/// = h and sin gamma_t = h / eta'.
fn azimuthal_mapping(p: usize, h: f64, eta_perp: f64) -> f64 {
    let gamma_i = h.asin();
    let gamma_t = (h / eta_perp).asin();
    2.0 * p as f64 * gamma_t - 2.0 * gamma_i + p as f64 * std::f64::consts::PI
}

fn azimuthal_mapping_slope(p: usize, h: f64, eta_perp: f64) -> f64 {
    2.0 * p as f64 / (eta_perp * eta_perp - h * h).sqrt() - 2.0 / (1.0 - h * h).sqrt()
}

/// Fresnel attenuation for a whole mode path at offset h: entry reflection
/// for R; entry and exit transmission for TT; one extra internal bounce for
/// TRT. Reciprocity makes the internal Fresnel equal the entry one, so the
/// products reduce to F, (1-F)^2 and (1-F)^2 F.
fn mode_attenuation(p: usize, h: f64, eta_perp: f64, eta_par: f64) -> f64 {
    let cos_gamma = (1.0 - h * h).max(0.0).sqrt();
    let f = fresnel_split(eta_perp, eta_par, cos_gamma);
    match p {
        0 => f,
        1 => (1.0 - f) * (1.0 - f),
        _ => (1.0 - f) * (1.0 - f) * f,
    }
}

/// Sum over roots of Phi_p(h) = phi (mod 2pi) of attenuation / (2 |dPhi/dh|),
/// for one table cell. `phi` may be any angle; the root structure is even in
/// phi, which the symmetry tests exercise directly through this function.
pub fn azimuthal_value(
    material: &FiberMaterial,
    theta_d: f64,
    phi: f64,
    mode: Mode,
    params: &AzimuthalBakeParams,
) -> f64 {
    let p = mode as usize;
    let eta_perp = bravais_index(theta_d, material.eta);
    let eta_par = bravais_index_parallel(theta_d, material.eta);
    let n = params.root_grid;
    // Keep clear of h = +-1 where the slope diverges.
    let h_eps = 1e-7;
    let h_at = |i: usize| -> f64 { -1.0 + h_eps + (2.0 - 2.0 * h_eps) * i as f64 / n as f64 };
    let mut mapping = Vec::with_capacity(n + 1);
    for i in 0..=n {
        mapping.push(azimuthal_mapping(p, h_at(i), eta_perp));
    }

    let mut total = 0.0;
    for k in -2i32..=2 {
        let target = phi + k as f64 * std::f64::consts::TAU;
        for i in 0..n {
            let f0 = mapping[i] - target;
            let f1 = mapping[i + 1] - target;
            if f0 == 0.0 {
                // Exact grid hit: attribute to this cell only.
                total += root_contribution(p, h_at(i), eta_perp, eta_par, params);
                continue;
            }
            if f0 * f1 < 0.0 {
                let mut lo = h_at(i);
                let mut hi = h_at(i + 1);
                let mut flo = f0;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let fm = azimuthal_mapping(p, mid, eta_perp) - target;
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                total += root_contribution(p, 0.5 * (lo + hi), eta_perp, eta_par, params);
            }
        }
    }
    total
}

fn root_contribution(
    p: usize,
    h: f64,
    eta_perp: f64,
    eta_par: f64,
    params: &AzimuthalBakeParams,
) -> f64 {
    let slope = azimuthal_mapping_slope(p, h, eta_perp)
        .abs()
        .max(params.jacobian_floor);
    mode_attenuation(p, h, eta_perp, eta_par) / (2.0 * slope)
}

impl AzimuthalLUT {
    pub fn res_theta(&self) -> usize {
        self.res_theta
    }

    pub fn res_phi(&self) -> usize {
        self.res_phi
    }

    pub fn grid(&self, mode: Mode) -> &[f32] {
        &self.grids[mode as usize]
    }

    /// Cell indices and bilinear weights for one coordinate.
    fn cell(&self, theta_d: f64, phi: f64) -> (usize, usize, f64, f64) {
        let tf = (theta_d.clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
            + std::f64::consts::FRAC_PI_2)
            / std::f64::consts::PI
            * (self.res_theta - 1) as f64;
        let pf = wrap_angle(phi).abs() / std::f64::consts::PI * (self.res_phi - 1) as f64;
        let t0 = (tf as usize).min(self.res_theta - 2);
        let p0 = (pf as usize).min(self.res_phi - 2);
        let ft = (tf - t0 as f64).clamp(0.0, 1.0);
        let fp = (pf - p0 as f64).clamp(0.0, 1.0);
        (t0, p0, ft, fp)
    }

    fn lerp_cell(&self, mode: Mode, (t0, p0, ft, fp): (usize, usize, f64, f64)) -> f64 {
        let grid = &self.grids[mode as usize];
        let at = |t: usize, p: usize| grid[t * self.res_phi + p] as f64;
        (1.0 - ft) * ((1.0 - fp) * at(t0, p0) + fp * at(t0, p0 + 1))
            + ft * ((1.0 - fp) * at(t0 + 1, p0) + fp * at(t0 + 1, p0 + 1))
    }

    /// Bilinear lookup; phi is folded to [0, pi] by the even symmetry.
    pub fn sample(&self, mode: Mode, theta_d: f64, phi: f64) -> f64 {
        self.lerp_cell(mode, self.cell(theta_d, phi))
    }

    /// All three modes at one coordinate, sharing the cell setup.
    pub fn sample_all(&self, theta_d: f64, phi: f64) -> [f64; MODE_COUNT] {
        let cell = self.cell(theta_d, phi);
        std::array::from_fn(|m| self.lerp_cell(MODES[m], cell))
    }
}

/// Bakes the azimuthal table for all three modes. Deterministic: the same
/// material and parameters produce bit-identical grids at any thread count
/// (cells are independent pure computations).
pub fn bake_azimuthal_lut(
    material: &FiberMaterial,
    params: &AzimuthalBakeParams,
) -> Result<AzimuthalLUT> {
    if params.res_theta < 16 || params.res_phi < 16 {
        return Err(Error::invalid(format!(
            "azimuthal grid must be at least 16 x 16, got {} x {}",
            params.res_theta, params.res_phi
        )));
    }
    if params.root_grid < 64 {
        return Err(Error::invalid("root search grid too coarse (< 64)"));
    }
    if params.jacobian_floor <= 0.0 {
        return Err(Error::invalid("jacobian floor must be positive"));
    }
    let rt = params.res_theta;
    let rp = params.res_phi;
    let grids: Vec<Arc<Vec<f32>>> = MODES
        .iter()
        .map(|&mode| {
            let rows: Vec<Vec<f32>> = (0..rt)
                .into_par_iter()
                .map(|ti| {
                    let theta_d = -std::f64::consts::FRAC_PI_2
                        + std::f64::consts::PI * ti as f64 / (rt - 1) as f64;
                    (0..rp)
                        .map(|pi| {
                            let phi = std::f64::consts::PI * pi as f64 / (rp - 1) as f64;
                            azimuthal_value(material, theta_d, phi, mode, params) as f32
                        })
                        .collect()
                })
                .collect();
            Arc::new(rows.into_iter().flatten().collect())
        })
        .collect();
    let grids: [Arc<Vec<f32>>; MODE_COUNT] = grids.try_into().map_err(|_| {
        Error::Format("internal: mode count mismatch".into())
    })?;
    for g in &grids {
        if !g.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Format("bake produced non-finite or negative entries".into()));
        }
    }
    Ok(AzimuthalLUT {
        res_theta: rt,
        res_phi: rp,
        grids,
    })
}

const LUT_MAGIC: &[u8; 8] = b"HAIRALUT";
const LUT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct AzimuthalLutHeader {
    pub material: FiberMaterial,
    pub bake: AzimuthalBakeParams,
}

/// Container layout after the common header: u32 mode count, u32 res_theta,
/// u32 res_phi, 4 x f64 domain bounds, then per mode a row-major f32 grid.
pub fn write_azimuthal_lut(
    w: &mut impl Write,
    lut: &AzimuthalLUT,
    header: &AzimuthalLutHeader,
) -> Result<()> {
    container::write_header(w, LUT_MAGIC, LUT_VERSION, header)?;
    container::write_u32(w, MODE_COUNT as u32)?;
    container::write_u32(w, lut.res_theta as u32)?;
    container::write_u32(w, lut.res_phi as u32)?;
    for bound in [
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        0.0,
        std::f64::consts::PI,
    ] {
        container::write_f64(w, bound)?;
    }
    for g in &lut.grids {
        container::write_f32_slice(w, g)?;
    }
    Ok(())
}

pub fn read_azimuthal_lut(r: &mut impl Read) -> Result<(AzimuthalLUT, AzimuthalLutHeader)> {
    let (_, header): (u32, AzimuthalLutHeader) =
        container::read_header(r, LUT_MAGIC, LUT_VERSION)?;
    let modes = container::read_u32(r)? as usize;
    if modes != MODE_COUNT {
        return Err(Error::Format(format!("expected 3 modes, found {modes}")));
    }
    let res_theta = container::read_u32(r)? as usize;
    let res_phi = container::read_u32(r)? as usize;
    if !(2..=65536).contains(&res_theta) || !(2..=65536).contains(&res_phi) {
        return Err(Error::Format("unreasonable table resolution".into()));
    }
    for _ in 0..4 {
        container::read_f64(r)?; // domain bounds are fixed by this version
    }
    let mut grids = Vec::with_capacity(MODE_COUNT);
    for _ in 0..MODE_COUNT {
        let data = container::read_f32_vec(r, res_theta * res_phi)?;
        if !data.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Format("table contains invalid entries".into()));
        }
        grids.push(Arc::new(data));
    }
    let grids: [Arc<Vec<f32>>; MODE_COUNT] = grids
        .try_into()
        .map_err(|_| Error::Format("internal: mode count mismatch".into()))?;
    Ok((
        AzimuthalLUT {
            res_theta,
            res_phi,
            grids,
        },
        header,
    ))
}

pub const COS2_FLOOR: f64 = 1e-4;

/// Full phase function: sum over modes of M_p(theta_h) N_p(theta_d, phi)
/// A_p(sigma_a) / cos^2(theta_d), componentwise over RGB. The cos^2 floor
/// (1e-4) bounds the grazing-incidence divergence.
pub fn eval_phase(
    material: &FiberMaterial,
    lut: &AzimuthalLUT,
    w_i: Direction,
    w_r: Direction,
    u: Direction,
) -> Rgb {
    let angles = angles_from_directions(w_i, w_r, u);
    eval_phase_angles(material, lut, &angles)
}

pub fn eval_phase_angles(
    material: &FiberMaterial,
    lut: &AzimuthalLUT,
    angles: &ScatteringAngles,
) -> Rgb {
    let cos_d = angles.theta_d.cos();
    let inv_cos2 = 1.0 / (cos_d * cos_d).max(COS2_FLOOR);
    let n = lut.sample_all(angles.theta_d, angles.phi);
    let mut out = Rgb::BLACK;
    for &mode in &MODES {
        let m = longitudinal_m(mode, angles.theta_h, material);
        let a = material.absorption_factor(mode, angles.theta_d);
        out += a * (m * n[mode as usize] * inv_cos2);
    }
    out
}
