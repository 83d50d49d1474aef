//! Ground-truth oracles: a single-scattering path tracer ("reference") and
//! a direct sphere-quadrature shader. Both evaluate the exact model — true
//! shadow rays, the azimuthal LUT phase, no spherical-harmonics shortcuts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::color::Rgb;
use crate::geom::{Direction, Ray, Vec3};
use crate::image::FrameBuffer;
use crate::render::TracedScene;
use crate::scene::{Camera, RenderSettings, Scene};
use crate::sh::SphereQuadrature;
use crate::transmittance::{arc_excluded, TransmittanceBakeParams};
use crate::{Error, Result};

/// Shadow rays start this far along to escape the surface they left.
const SHADOW_T_MIN: f64 = 1e-6;

/// Strand context of a shading point; its own fiber is excluded from
/// shadow rays over the same arc-length window the baker uses.
#[derive(Debug, Clone, Copy)]
pub struct HitContext {
    pub strand: u32,
    pub arc_length: f64,
    pub radius: f64,
}

/// Ray-cast transmittance from `x` toward `dir`: the product of
/// (1 - alpha) over distinct strands crossed within t_max.
pub fn ray_transmittance(
    ts: &TracedScene,
    x: Vec3,
    dir: Direction,
    t_max: f64,
    hit: Option<&HitContext>,
) -> f64 {
    let strands = ts.scene.geometry.strands();
    let exclusion = hit.map(|h| {
        (
            h.strand,
            h.arc_length,
            TransmittanceBakeParams::default().exclusion_radius_factor * h.radius,
        )
    });
    ts.bvh.transmittance(
        &Ray::new(x, dir),
        SHADOW_T_MIN,
        t_max,
        |s| strands[s as usize].alpha,
        |cap| match exclusion {
            Some((strand, arc, radius)) => arc_excluded(strands, strand, arc, radius, cap),
            None => false,
        },
    )
}

/// Exact radiance at a fiber interaction: direct lights through shadow
/// rays plus, when an environment is present, one uniform-sphere sample of
/// the (unclamped) SH environment with true visibility.
fn shade_interaction(
    ts: &TracedScene,
    x: Vec3,
    w_o: Direction,
    u: Direction,
    hit: &HitContext,
    rng: &mut ChaCha8Rng,
) -> Rgb {
    let scene = ts.scene;
    let mut out = Rgb::BLACK;
    for light in &scene.lights {
        let (w_l, radiance, t_max) = light.sample(x);
        let t = ray_transmittance(ts, x, w_l, t_max, Some(hit));
        if t > 0.0 {
            out += radiance
                * crate::fiber::eval_phase(&scene.material, &scene.azimuthal, w_l, w_o, u)
                * t;
        }
    }
    if let Some(env) = &scene.environment {
        let w = uniform_sphere(rng);
        let t = ray_transmittance(ts, x, w, f64::INFINITY, Some(hit));
        if t > 0.0 {
            let phase = crate::fiber::eval_phase(&scene.material, &scene.azimuthal, w, w_o, u);
            // pdf = 1 / 4pi; the environment reconstruction stays
            // unclamped so the estimator targets the band-limited field
            // the SH path integrates.
            out += env.eval(w) * phase * (t * 4.0 * std::f64::consts::PI);
        }
    }
    out
}

pub fn uniform_sphere(rng: &mut ChaCha8Rng) -> Direction {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Direction::from_components(r * phi.cos(), r * phi.sin(), z)
        .unwrap_or_else(|_| Direction::z_axis())
}

fn trace_sample(
    ts: &TracedScene,
    settings: &RenderSettings,
    ray: &Ray,
    rng: &mut ChaCha8Rng,
) -> Rgb {
    let w_o = Direction::normalize(-ray.dir).expect("view direction");
    for crossing in ts.crossings(ray) {
        // Russian roulette on coverage: interact with probability alpha,
        // otherwise pass through unweighted. Expectation matches
        // front-to-back alpha compositing; exactly one phase evaluation
        // happens per traced interaction (single scattering).
        let hit = ts.hit_info(ray, &crossing);
        if rng.random::<f64>() < hit.alpha {
            let ctx = HitContext {
                strand: hit.strand,
                arc_length: hit.arc_length,
                radius: hit.radius,
            };
            return shade_interaction(ts, hit.position, w_o, hit.tangent, &ctx, rng);
        }
    }
    settings.background
}

/// Path-traced single-scattering reference. Each pixel owns an independent
/// ChaCha8 stream derived from (seed, pixel index), so output is
/// bit-identical for a fixed seed at any thread count. Primary rays are
/// stratified on the largest square grid that fits spp; leftovers jitter
/// uniformly. Pixels clamp at zero (environment ringing can push
/// low-sample estimates slightly negative).
pub fn trace_reference(
    scene: &Scene,
    camera: &Camera,
    settings: &RenderSettings,
    spp: usize,
    seed: u64,
) -> Result<FrameBuffer> {
    if spp == 0 {
        return Err(Error::invalid("reference needs spp >= 1"));
    }
    let ts = TracedScene::new(scene);
    let width = camera.width();
    let strata = (spp as f64).sqrt().floor() as usize;
    let rows: Vec<(Vec<Rgb>, Vec<f64>)> = (0..camera.height())
        .into_par_iter()
        .map(|py| {
            let mut colors = Vec::with_capacity(width);
            let mut alphas = Vec::with_capacity(width);
            for px in 0..width {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((py * width + px) as u64 + 1);
                let mut acc = Rgb::BLACK;
                let mut hits = 0usize;
                for s in 0..spp {
                    let (jx, jy) = if s < strata * strata {
                        let sx = s % strata;
                        let sy = s / strata;
                        (
                            (sx as f64 + rng.random::<f64>()) / strata as f64,
                            (sy as f64 + rng.random::<f64>()) / strata as f64,
                        )
                    } else {
                        (rng.random::<f64>(), rng.random::<f64>())
                    };
                    let ray = camera.sampled_ray(px, py, jx, jy);
                    let sample = trace_sample(&ts, settings, &ray, &mut rng);
                    if sample != settings.background {
                        hits += 1;
                    }
                    acc += sample;
                }
                colors.push((acc / spp as f64).clamped_non_negative());
                alphas.push(hits as f64 / spp as f64);
            }
            (colors, alphas)
        })
        .collect();
    let mut image = FrameBuffer::new(width, camera.height());
    for (py, (colors, alphas)) in rows.iter().enumerate() {
        image.set_row(py, colors, alphas);
    }
    Ok(image)
}

/// Deterministic sphere quadrature of L_far * V_true * S plus the analytic
/// delta lights — the point-level oracle for shade_point. V_true is
/// ray-cast per node; the environment is the unclamped SH reconstruction.
pub fn quadrature_shade(
    ts: &TracedScene,
    x: Vec3,
    w_o: Direction,
    u: Direction,
    hit: Option<&HitContext>,
    resolution: usize,
) -> Rgb {
    let scene = ts.scene;
    let mut out = Rgb::BLACK;
    if let Some(env) = &scene.environment {
        let quad = SphereQuadrature::new(resolution, 2 * resolution);
        for (w, weight) in quad.nodes() {
            let v = ray_transmittance(ts, x, w, f64::INFINITY, hit);
            if v <= 0.0 {
                continue;
            }
            let phase = crate::fiber::eval_phase(&scene.material, &scene.azimuthal, w, w_o, u);
            out += env.eval(w) * phase * (v * weight);
        }
    }
    for light in &scene.lights {
        let (w_l, radiance, t_max) = light.sample(x);
        let v = ray_transmittance(ts, x, w_l, t_max, hit);
        if v > 0.0 {
            out += radiance
                * crate::fiber::eval_phase(&scene.material, &scene.azimuthal, w_l, w_o, u)
                * v;
        }
    }
    out
}
