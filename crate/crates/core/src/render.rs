//! Camera rendering: ray-cast strand visibility, exact depth-sorted
//! transparency compositing, and the two shading paths — ours (baked
//! transmittance + SH far field) and the Kajiya-Kay baseline.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::accel::{merge_strand_crossings, CapsuleBvh, StrandCrossing};
use crate::color::Rgb;
use crate::farfield::FarFieldShader;
use crate::fiber::eval_phase;
use crate::geom::{Direction, Ray, Vec3};
use crate::image::FrameBuffer;
use crate::scene::{Camera, KajiyaParams, Light, RenderSettings, Scene};
use crate::sh::SHVector;
use crate::transmittance::biased_v;
use crate::Result;

/// Compositing stops once accumulated opacity reaches this.
pub const OPACITY_CUTOFF: f64 = 0.999;
/// Primary rays start here to dodge self-intersection at the aperture.
const CAMERA_T_MIN: f64 = 1e-6;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Shader {
    Ours,
    Kajiya,
}

/// Ray-tracing view of a scene: the capsule BVH, flattened vertex offsets
/// for per-vertex transmittance lookups, and the prepared far-field shader
/// when the scene carries environment lighting.
pub struct TracedScene<'a> {
    pub scene: &'a Scene,
    pub bvh: CapsuleBvh,
    offsets: Vec<usize>,
    far: Option<FarFieldShader<'a>>,
}

/// Interpolated surface data at a strand crossing.
#[derive(Debug, Clone)]
pub struct HitInfo {
    pub t: f64,
    pub position: Vec3,
    pub tangent: Direction,
    pub alpha: f64,
    pub strand: u32,
    pub arc_length: f64,
    pub radius: f64,
    pub v_sh: SHVector,
}

impl<'a> TracedScene<'a> {
    pub fn new(scene: &'a Scene) -> TracedScene<'a> {
        let bvh = CapsuleBvh::build(scene.geometry.capsules());
        let mut offsets = Vec::with_capacity(scene.geometry.strands().len());
        let mut acc = 0usize;
        for s in scene.geometry.strands() {
            offsets.push(acc);
            acc += s.vertices.len();
        }
        let far = match (&scene.environment, &scene.phase_lut) {
            (Some(env), Some(lut)) => {
                let v_order = scene.transmittance.first().map_or(0, |v| v.order());
                let shader = FarFieldShader::new(env, lut, v_order, scene.material.sigma_a)
                    .expect("scene construction caps SH orders");
                Some(shader)
            }
            _ => None,
        };
        TracedScene {
            scene,
            bvh,
            offsets,
            far,
        }
    }

    /// All strand crossings along the ray, sorted front-to-back.
    pub fn crossings(&self, ray: &Ray) -> Vec<StrandCrossing> {
        let mut hits = Vec::new();
        self.bvh
            .intersect_all(ray, CAMERA_T_MIN, f64::INFINITY, &mut hits);
        merge_strand_crossings(&mut hits, self.bvh.capsules())
    }

    pub fn hit_info(&self, ray: &Ray, crossing: &StrandCrossing) -> HitInfo {
        let capsule = &self.bvh.capsules()[crossing.capsule as usize];
        let position = ray.at(crossing.t_enter);
        let ab = capsule.b - capsule.a;
        let len2 = ab.norm_squared().max(1e-18);
        let s = ((position - capsule.a).dot(&ab) / len2).clamp(0.0, 1.0);
        let strand = &self.scene.geometry.strands()[capsule.strand as usize];
        let v0 = capsule.segment as usize;
        let (va, vb) = (&strand.vertices[v0], &strand.vertices[v0 + 1]);
        let base = self.offsets[capsule.strand as usize] + v0;
        let mut v_sh = self.scene.transmittance[base].scaled(1.0 - s);
        v_sh.axpy(&self.scene.transmittance[base + 1], s);
        let tangent = Direction::normalize(va.tangent.vec() * (1.0 - s) + vb.tangent.vec() * s)
            .unwrap_or(va.tangent);
        HitInfo {
            t: crossing.t_enter,
            position,
            tangent,
            alpha: strand.alpha,
            strand: capsule.strand,
            arc_length: va.arc_length * (1.0 - s) + vb.arc_length * s,
            radius: va.radius * (1.0 - s) + vb.radius * s,
            v_sh,
        }
    }
}

/// Direct term: sum over lights of incident radiance, baked visibility
/// through the bias remap, and the fiber phase function.
pub fn shade_direct(
    scene: &Scene,
    settings: &RenderSettings,
    x: Vec3,
    w_o: Direction,
    u: Direction,
    v_sh: &SHVector,
) -> Rgb {
    let mut out = Rgb::BLACK;
    for light in &scene.lights {
        let (w_l, radiance, _) = light.sample(x);
        let v = biased_v(v_sh, w_l, settings.bias);
        if v <= 0.0 {
            continue;
        }
        out += radiance * eval_phase(&scene.material, &scene.azimuthal, w_l, w_o, u) * v;
    }
    out
}

/// Full shading at a hit: direct lights plus the far-field SH term when an
/// environment is present.
pub fn shade_point(ts: &TracedScene, settings: &RenderSettings, hit: &HitInfo, w_o: Direction) -> Rgb {
    let scene = ts.scene;
    let mut out = shade_direct(scene, settings, hit.position, w_o, hit.tangent, &hit.v_sh);
    if let Some(far) = &ts.far {
        out += far.shade(&hit.v_sh, w_o, hit.tangent);
    }
    out
}

/// Kajiya-Kay baseline: diffuse sin(t, l), specular
/// (cos(t,l) cos(t,e) + sin(t,l) sin(t,e))^p, constant ambient. No
/// shadowing of any kind — that is the point of the comparison.
pub fn kajiya_kay_shade(
    params: &KajiyaParams,
    lights: &[Light],
    x: Vec3,
    w_o: Direction,
    u: Direction,
) -> Rgb {
    let mut out = params.ambient;
    let cos_te = u.dot(w_o).clamp(-1.0, 1.0);
    let sin_te = (1.0 - cos_te * cos_te).max(0.0).sqrt();
    for light in lights {
        let (w_l, radiance, _) = light.sample(x);
        let cos_tl = u.dot(w_l).clamp(-1.0, 1.0);
        let sin_tl = (1.0 - cos_tl * cos_tl).max(0.0).sqrt();
        let spec = (cos_tl * cos_te + sin_tl * sin_te).max(0.0).powf(params.exponent);
        out += radiance * (params.diffuse * sin_tl + params.specular * spec);
    }
    out
}

fn shade_crossing(
    ts: &TracedScene,
    settings: &RenderSettings,
    shader: Shader,
    ray: &Ray,
    crossing: &StrandCrossing,
) -> (Rgb, f64) {
    let hit = ts.hit_info(ray, crossing);
    let w_o = Direction::normalize(-ray.dir).expect("view direction");
    let color = match shader {
        Shader::Ours => shade_point(ts, settings, &hit, w_o),
        Shader::Kajiya => kajiya_kay_shade(
            &settings.kajiya,
            &ts.scene.lights,
            hit.position,
            w_o,
            hit.tangent,
        ),
    };
    (color, hit.alpha)
}

/// Front-to-back compositing of the sorted crossings; stops at the opacity
/// cutoff or the hit cap. Returns premultiplied hair color and coverage.
pub fn composite_pixel(
    ts: &TracedScene,
    settings: &RenderSettings,
    shader: Shader,
    ray: &Ray,
    crossings: &[StrandCrossing],
) -> (Rgb, f64) {
    let mut color = Rgb::BLACK;
    let mut opacity = 0.0;
    for (count, crossing) in crossings.iter().enumerate() {
        if opacity >= OPACITY_CUTOFF || count >= settings.max_hits {
            break;
        }
        let (shaded, alpha) = shade_crossing(ts, settings, shader, ray, crossing);
        let weight = alpha * (1.0 - opacity);
        color += shaded * weight;
        opacity += weight;
    }
    (color, opacity)
}

/// Pass 1: primary-ray strand crossings for every pixel, row-major.
pub fn collect_visibility(ts: &TracedScene, camera: &Camera) -> Vec<Vec<StrandCrossing>> {
    (0..camera.height())
        .into_par_iter()
        .flat_map_iter(|py| {
            (0..camera.width()).map(move |px| (px, py))
        })
        .map(|(px, py)| ts.crossings(&camera.primary_ray(px, py)))
        .collect()
}

/// Pass 2: shade and composite a precollected visibility buffer.
pub fn shade_pass(
    ts: &TracedScene,
    camera: &Camera,
    settings: &RenderSettings,
    shader: Shader,
    visibility: &[Vec<StrandCrossing>],
) -> FrameBuffer {
    let rows: Vec<(Vec<Rgb>, Vec<f64>)> = (0..camera.height())
        .into_par_iter()
        .map(|py| {
            let mut colors = Vec::with_capacity(camera.width());
            let mut alphas = Vec::with_capacity(camera.width());
            for px in 0..camera.width() {
                let ray = camera.primary_ray(px, py);
                let crossings = &visibility[py * camera.width() + px];
                let (hair, opacity) = composite_pixel(ts, settings, shader, &ray, crossings);
                colors.push(hair + settings.background * (1.0 - opacity));
                alphas.push(opacity);
            }
            (colors, alphas)
        })
        .collect();
    let mut image = FrameBuffer::new(camera.width(), camera.height());
    for (py, (colors, alphas)) in rows.iter().enumerate() {
        image.set_row(py, colors, alphas);
    }
    image
}

/// Single-pass render; deterministic for fixed scene and settings.
pub fn render(
    scene: &Scene,
    camera: &Camera,
    settings: &RenderSettings,
    shader: Shader,
) -> Result<FrameBuffer> {
    let ts = TracedScene::new(scene);
    let visibility = collect_visibility(&ts, camera);
    Ok(shade_pass(&ts, camera, settings, shader, &visibility))
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub repetitions: usize,
    pub width: usize,
    pub height: usize,
    /// Medians in milliseconds.
    pub visibility_ms: f64,
    pub ours_shading_ms: f64,
    pub kajiya_shading_ms: f64,
    /// ours / kajiya shading-only cost.
    pub shading_ratio: f64,
}

impl BenchReport {
    pub fn ours_total_ms(&self) -> f64 {
        self.visibility_ms + self.ours_shading_ms
    }

    pub fn kajiya_total_ms(&self) -> f64 {
        self.visibility_ms + self.kajiya_shading_ms
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "bench {}x{}, {} repetitions (medians)",
            self.width, self.height, self.repetitions
        )?;
        writeln!(f, "{:>22}  {:>10}", "pass", "ms/frame")?;
        writeln!(f, "{:>22}  {:>10.3}", "visibility", self.visibility_ms)?;
        writeln!(f, "{:>22}  {:>10.3}", "shading (ours)", self.ours_shading_ms)?;
        writeln!(
            f,
            "{:>22}  {:>10.3}",
            "shading (kajiya)", self.kajiya_shading_ms
        )?;
        writeln!(f, "{:>22}  {:>10.3}", "total (ours)", self.ours_total_ms())?;
        writeln!(
            f,
            "{:>22}  {:>10.3}",
            "total (kajiya)",
            self.kajiya_total_ms()
        )?;
        writeln!(
            f,
            "shading-only ours/kajiya ratio: {:.3}",
            self.shading_ratio
        )
    }
}

fn median_ms(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

fn time_ms(mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    f();
    start.elapsed().as_secs_f64() * 1e3
}

/// Times the two shaders over identical visibility work and reports the
/// shading-only cost ratio.
pub fn bench(
    scene: &Scene,
    camera: &Camera,
    settings: &RenderSettings,
    repetitions: usize,
) -> Result<BenchReport> {
    let reps = repetitions.max(1);
    let ts = TracedScene::new(scene);
    let visibility = collect_visibility(&ts, camera);
    let mut vis = Vec::with_capacity(reps);
    let mut ours = Vec::with_capacity(reps);
    let mut kajiya = Vec::with_capacity(reps);
    for _ in 0..reps {
        vis.push(time_ms(|| {
            std::hint::black_box(collect_visibility(&ts, camera));
        }));
        ours.push(time_ms(|| {
            std::hint::black_box(shade_pass(&ts, camera, settings, Shader::Ours, &visibility));
        }));
        kajiya.push(time_ms(|| {
            std::hint::black_box(shade_pass(
                &ts,
                camera,
                settings,
                Shader::Kajiya,
                &visibility,
            ));
        }));
    }
    let ours_ms = median_ms(&mut ours);
    let kajiya_ms = median_ms(&mut kajiya);
    Ok(BenchReport {
        repetitions: reps,
        width: camera.width(),
        height: camera.height(),
        visibility_ms: median_ms(&mut vis),
        ours_shading_ms: ours_ms,
        kajiya_shading_ms: kajiya_ms,
        shading_ratio: ours_ms / kajiya_ms.max(1e-9),
    })
}
