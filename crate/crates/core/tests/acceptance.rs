//! Acceptance gate for the whole pipeline. Every criterion prints exactly
//! one PASS/FAIL line with its headline numbers; the process exits nonzero
//! if any criterion fails. Each check pits the implementation against an
//! independent oracle (closed forms, exact rational arithmetic, sphere
//! quadrature, or the path-traced reference).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num::traits::{Signed, ToPrimitive, Zero};
use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strandshade::accel::CapsuleBvh;
use strandshade::farfield::{
    bake_phase_sh_lut, canonical_to_world, project_envmap, validate_trt_factorization,
    EnvironmentSH, PhaseBakeParams, PhaseSHLUT,
};
use strandshade::fiber::{
    bake_azimuthal_lut, eval_phase, fit_g, hg_lobe, AzimuthalBakeParams, FiberMaterial, MODES,
};
use strandshade::image::{compare_images, FrameBuffer};
use strandshade::reference::trace_reference;
use strandshade::render::{bench, render, Shader};
use strandshade::scene::{Camera, Light, RenderSettings, Scene};
use strandshade::sh::{
    rotate, triple_product, wigner3j, ShRotation, SphereQuadrature,
};
use strandshade::strand::{generate_curl_groom, HairGeometry};
use strandshade::transmittance::{
    bake_all, bake_vertex_cubemap, biased_v, eval_v, project_to_sh, reconstruction_error, scenes,
    TransmittanceBakeParams, TRANSMITTANCE_ORDER,
};
use strandshade::{Direction, Rgb, Rotation, SHVector, Vec3};

type CriterionResult = Result<String, String>;

fn main() {
    let criteria: &[(&str, fn() -> CriterionResult)] = &[
        ("longitudinal width-to-g fit", criterion_1_g_fit),
        ("Henyey-Greenstein unit integral", criterion_2_hg_unit_integral),
        ("SH algebra vs quadrature and exact 3-j", criterion_3_sh_algebra),
        ("far-field shading vs quadrature oracle", criterion_4_farfield_oracle),
        ("transmittance baking pipeline", criterion_5_transmittance),
        ("end-to-end fidelity vs reference", criterion_6_fidelity),
        ("shading cost ratio", criterion_7_shading_cost),
        ("TRT factorization report", criterion_8_trt_report),
    ];
    let mut failed = 0usize;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        let n = i + 1;
        match outcome {
            Ok(Ok(detail)) => println!("acceptance {n} ({name}): PASS [{secs:.1}s] {detail}"),
            Ok(Err(reason)) => {
                failed += 1;
                println!("acceptance {n} ({name}): FAIL [{secs:.1}s] {reason}");
            }
            Err(panic) => {
                failed += 1;
                let msg = panic
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| panic.downcast_ref::<&str>().copied())
                    .unwrap_or("panic");
                println!("acceptance {n} ({name}): FAIL [{secs:.1}s] panicked: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} acceptance criteria failed", criteria.len());
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- helpers

const BETA_R: f64 = 10.0 * std::f64::consts::PI / 180.0;
const ALPHA_R: f64 = -10.0 * std::f64::consts::PI / 180.0;

fn default_material(sigma_a: Rgb) -> FiberMaterial {
    FiberMaterial::new(sigma_a, FiberMaterial::DEFAULT_ETA, BETA_R, ALPHA_R).unwrap()
}

fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    loop {
        let v = Vec3::new(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
        );
        let n2 = v.norm_squared();
        if n2 > 1e-4 && n2 < 1.0 {
            return Direction::normalize(v).unwrap();
        }
    }
}

fn random_sh(rng: &mut ChaCha8Rng, order: usize) -> SHVector {
    let mut v = SHVector::zeros(order);
    for i in 0..v.len() {
        v.set(i, 2.0 * rng.random::<f64>() - 1.0);
    }
    v
}

/// SH vector reconstructing the constant 1 at the given order.
fn ones_sh(order: usize) -> SHVector {
    let mut v = SHVector::zeros(order);
    v.set(0, 2.0 * std::f64::consts::PI.sqrt());
    v
}

/// Smooth band-2 environment whose DC dwarfs the higher bands, keeping the
/// reconstruction positive and the shading clamp inert.
fn smooth_environment(rng: &mut ChaCha8Rng) -> EnvironmentSH {
    let channels = std::array::from_fn(|_| {
        let mut v = random_sh(rng, 2).scaled(0.3);
        v.set(0, 2.0 * std::f64::consts::PI.sqrt());
        v
    });
    EnvironmentSH::new(channels, None).unwrap()
}

// --------------------------------------------------------- criterion 1/2

fn criterion_1_g_fit() -> CriterionResult {
    let start = Instant::now();
    let cases = [(10.0, 0.752), (5.0, 0.865), (20.0, 0.578)];
    let mut parts = Vec::new();
    for (deg, want) in cases {
        let g = fit_g((deg as f64).to_radians()).map_err(|e| e.to_string())?;
        if (g - want).abs() > 0.02 {
            return Err(format!("g({deg} deg) = {g:.5}, want {want} +- 0.02"));
        }
        parts.push(format!("g({deg} deg) = {g:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        return Err(format!("fits took {secs:.2}s, budget is 1s"));
    }
    Ok(format!("{} in {:.0} ms", parts.join(", "), secs * 1e3))
}

fn criterion_2_hg_unit_integral() -> CriterionResult {
    let material = default_material(Rgb::BLACK);
    let quad = SphereQuadrature::new(128, 256);
    let mut worst = 0.0f64;
    for mode in MODES {
        let g = material.lobe(mode).g;
        let integral: f64 = quad.nodes().map(|(d, w)| w * hg_lobe(g, d.z())).sum();
        let err = (integral - 1.0).abs();
        worst = worst.max(err);
        if err > 1e-3 {
            return Err(format!(
                "{mode:?} lobe (g = {g:.4}) integrates to {integral:.6}, want 1 +- 1e-3"
            ));
        }
    }
    Ok(format!("all three lobes integrate to 1 within {worst:.1e}"))
}

// ----------------------------------------------------------- criterion 3

fn factorial(n: i64) -> BigInt {
    assert!(n >= 0, "factorial of negative {n}");
    (1..=n).map(BigInt::from).product::<BigInt>().max(BigInt::from(1))
}

/// Wigner 3-j by the Racah sum in exact rational arithmetic: the value is
/// sign * sqrt(rational), so the only rounding is one conversion and one
/// square root.
fn wigner3j_exact(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0
        || l3 < (l1 - l2).abs()
        || l3 > l1 + l2
        || m1.abs() > l1
        || m2.abs() > l2
        || m3.abs() > l3
    {
        return 0.0;
    }
    let t_min = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let t_max = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let den = factorial(t)
            * factorial(l1 + l2 - l3 - t)
            * factorial(l1 - m1 - t)
            * factorial(l2 + m2 - t)
            * factorial(l3 - l2 + m1 + t)
            * factorial(l3 - l1 - m2 + t);
        let term = BigRational::new(BigInt::from(1), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let triangle = BigRational::new(
        factorial(l1 + l2 - l3) * factorial(l1 - l2 + l3) * factorial(-l1 + l2 + l3),
        factorial(l1 + l2 + l3 + 1),
    );
    let m_factors = factorial(l1 + m1)
        * factorial(l1 - m1)
        * factorial(l2 + m2)
        * factorial(l2 - m2)
        * factorial(l3 + m3)
        * factorial(l3 - m3);
    let square = &sum * &sum * triangle * BigRational::from(m_factors);
    let negative = sum.is_negative() ^ ((l1 - l2 - m3).rem_euclid(2) == 1);
    let magnitude = square.to_f64().expect("rational to f64").sqrt();
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

fn criterion_3_sh_algebra() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // Triple products against direct quadrature of the reconstructions.
    let quad = SphereQuadrature::new(32, 64);
    let mut max_rel = 0.0f64;
    for _ in 0..100 {
        let a = random_sh(&mut rng, 2);
        let b = random_sh(&mut rng, 2);
        let c = random_sh(&mut rng, 2);
        let tp = triple_product(&a, &b, &c).map_err(|e| e.to_string())?;
        let q: f64 = quad
            .nodes()
            .map(|(d, w)| w * a.eval(d) * b.eval(d) * c.eval(d))
            .sum();
        let rel = (tp - q).abs() / q.abs().max(1e-12);
        max_rel = max_rel.max(rel);
        if rel > 1e-5 {
            return Err(format!(
                "triple product {tp:.9} vs quadrature {q:.9} (relative {rel:.2e})"
            ));
        }
    }

    // Rotation: (R f)(d) must equal f(R^-1 d) pointwise.
    let mut max_rot = 0.0f64;
    for _ in 0..20 {
        let v = random_sh(&mut rng, 2);
        let axis = random_direction(&mut rng);
        let rotation = Rotation::from_axis_angle(axis, rng.random::<f64>() * 6.0);
        let rotated = rotate(&v, &rotation);
        let inverse = rotation.inverse();
        for _ in 0..50 {
            let d = random_direction(&mut rng);
            let err = (rotated.eval(d) - v.eval(inverse.apply_direction(d))).abs();
            max_rot = max_rot.max(err);
            if err > 1e-6 {
                return Err(format!("rotation identity violated by {err:.2e}"));
            }
        }
    }

    // Every 3-j symbol with l <= 4 against the exact rational Racah sum.
    let mut checked = 0usize;
    let mut max_w = 0.0f64;
    for l1 in 0..=4i64 {
        for l2 in 0..=4i64 {
            for l3 in 0..=4i64 {
                for m1 in -l1..=l1 {
                    for m2 in -l2..=l2 {
                        for m3 in -l3..=l3 {
                            let want = wigner3j_exact(l1, l2, l3, m1, m2, m3);
                            let got = wigner3j(l1, l2, l3, m1, m2, m3);
                            let err = (got - want).abs();
                            max_w = max_w.max(err);
                            checked += 1;
                            if err > 1e-12 {
                                return Err(format!(
                                    "3-j ({l1} {l2} {l3}; {m1} {m2} {m3}) = {got:.15}, exact {want:.15}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(format!(
        "100 triple products within {max_rel:.1e}; rotation within {max_rot:.1e}; {checked} 3-j symbols within {max_w:.1e}"
    ))
}

// ----------------------------------------------------------- criterion 4

fn criterion_4_farfield_oracle() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let material = default_material(Rgb::BLACK);
    let azimuthal = bake_azimuthal_lut(
        &material,
        &AzimuthalBakeParams {
            res_theta: 32,
            res_phi: 64,
            ..AzimuthalBakeParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let luts: Vec<PhaseSHLUT> = (1..=3)
        .map(|order| {
            bake_phase_sh_lut(
                &material,
                &azimuthal,
                &PhaseBakeParams {
                    samples: 64,
                    order,
                    quad_theta: 64,
                    quad_phi: 128,
                },
            )
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let env = smooth_environment(&mut rng);
    let v_one = ones_sh(2);
    let quad = SphereQuadrature::new(64, 128);

    let configs: Vec<(Direction, Direction, Rgb)> = (0..50)
        .map(|_| {
            (
                random_direction(&mut rng),
                random_direction(&mut rng),
                Rgb::new(rng.random(), rng.random(), rng.random()),
            )
        })
        .collect();

    // (a) With S band-limited exactly as shade_far sees it (fetched,
    // combined, rotated), quadrature must agree to 1e-4 relative.
    let mut max_rel = 0.0f64;
    for (w_r, u, sigma) in &configs {
        let lut = &luts[0];
        let got = strandshade::farfield::shade_far(&v_one, &env, lut, *w_r, *u, *sigma);
        let modes = lut.fetch(w_r.dot(*u).clamp(-1.0, 1.0));
        let rot = ShRotation::new(lut.order(), &canonical_to_world(*w_r, *u));
        let world: [SHVector; 3] = std::array::from_fn(|m| rot.apply(&modes[m]));
        for c in 0..3 {
            let phase = PhaseSHLUT::combine(&world, sigma.channel(c));
            let q: f64 = quad
                .nodes()
                .map(|(d, w)| w * env.channel(c).eval(d) * phase.eval(d))
                .sum();
            let rel = (got.channel(c) - q.max(0.0)).abs() / q.abs().max(1e-12);
            max_rel = max_rel.max(rel);
            if rel > 1e-4 {
                return Err(format!(
                    "band-limited oracle: shade_far {got:?} vs quadrature {q:.9} (channel {c}, relative {rel:.2e})"
                ));
            }
        }
    }

    // (b) Against the true phase function the residual must fall with L.
    let mut mean_err = [0.0f64; 3];
    for (w_r, u, sigma) in &configs {
        let material_c = FiberMaterial::new(*sigma, material.eta, BETA_R, ALPHA_R)
            .map_err(|e| e.to_string())?;
        let mut truth = Rgb::BLACK;
        for (d, w) in quad.nodes() {
            truth += env.eval(d) * eval_phase(&material_c, &azimuthal, d, *w_r, *u) * w;
        }
        for (i, lut) in luts.iter().enumerate() {
            let got = strandshade::farfield::shade_far(&v_one, &env, lut, *w_r, *u, *sigma);
            let mut rel = 0.0;
            for c in 0..3 {
                rel += (got.channel(c) - truth.channel(c)).abs() / truth.channel(c).abs().max(1e-9);
            }
            mean_err[i] += rel / 3.0;
        }
    }
    for e in &mut mean_err {
        *e /= configs.len() as f64;
    }
    if !(mean_err[2] < mean_err[0]) {
        return Err(format!(
            "full-S residual did not fall with order: L1 {:.4}, L2 {:.4}, L3 {:.4}",
            mean_err[0], mean_err[1], mean_err[2]
        ));
    }

    Ok(format!(
        "band-limited oracle within {max_rel:.1e}; full-S residual falls {:.4} (L1) -> {:.4} (L2) -> {:.4} (L3)",
        mean_err[0], mean_err[1], mean_err[2]
    ))
}

// ----------------------------------------------------------- criterion 5

fn criterion_5_transmittance() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let params = TransmittanceBakeParams::default();

    // Empty occluder: a lone strand sees the whole sky from every vertex.
    let lone = HairGeometry::new(vec![(
        vec![
            (Vec3::new(0.0, 0.0, -1.0), 0.05),
            (Vec3::new(0.0, 0.0, 0.0), 0.05),
            (Vec3::new(0.0, 0.0, 1.0), 0.05),
        ],
        0.7,
    )])
    .unwrap();
    let baked = bake_all(&lone, &params).map_err(|e| e.to_string())?;
    for v in &baked.vectors {
        for _ in 0..200 {
            let d = random_direction(&mut rng);
            let value = eval_v(v, d);
            if (value - 1.0).abs() > 0.02 {
                return Err(format!("empty-occluder pipeline returned {value:.4} toward {d:?}"));
            }
        }
    }

    // Enclosure: the probe vertex inside an opaque shell sees nothing.
    let shell = scenes::enclosing_shell_groom();
    let probe = shell.vertex_count() - 2;
    let bvh = CapsuleBvh::build(shell.capsules());
    let map = bake_vertex_cubemap(&shell, &bvh, probe, params.cubemap_res, 0.2)
        .map_err(|e| e.to_string())?;
    let v_shell = project_to_sh(&map, TRANSMITTANCE_ORDER);
    let quad = SphereQuadrature::new(32, 64);
    let mean: f64 = quad.nodes().map(|(d, w)| w * eval_v(&v_shell, d)).sum::<f64>()
        / (4.0 * std::f64::consts::PI);
    if mean > 0.05 {
        return Err(format!("enclosure mean transmittance {mean:.4} > 0.05"));
    }

    // Smooth half occlusion: order-2 SH reconstructs the cubemap closely.
    let layered = scenes::layered_half_occlusion_groom();
    let probe = layered.vertex_count() - 2;
    let bvh = CapsuleBvh::build(layered.capsules());
    let map = bake_vertex_cubemap(&layered, &bvh, probe, params.cubemap_res, 0.2)
        .map_err(|e| e.to_string())?;
    let v_layered = project_to_sh(&map, TRANSMITTANCE_ORDER);
    let mae = reconstruction_error(&map, &v_layered);
    if mae > 0.08 {
        return Err(format!("half-occlusion SH mean absolute error {mae:.4} > 0.08"));
    }

    // Bias law: the remapped value is exactly zero wherever V <= bias.
    let bias = 0.4;
    let mut clamped = 0usize;
    for _ in 0..500 {
        let d = random_direction(&mut rng);
        if eval_v(&v_layered, d) <= bias {
            clamped += 1;
            let b = biased_v(&v_layered, d, bias);
            if b != 0.0 {
                return Err(format!("biased visibility {b:.2e} despite V <= bias"));
            }
        }
    }
    if clamped == 0 {
        return Err("bias law untested: no direction fell below the bias".into());
    }

    Ok(format!(
        "empty occluder 1 +- 0.02; enclosure mean {mean:.4}; half-occlusion MAE {mae:.4}; bias law exact on {clamped} directions"
    ))
}

// --------------------------------------------------------- criterion 6/7

/// Analytic sky: warm toward the horizon, cool toward the zenith, with a
/// gentle azimuthal swing so the projection has nontrivial bands.
fn synthetic_sky() -> FrameBuffer {
    let (w, h) = (64usize, 32usize);
    let mut image = FrameBuffer::new(w, h);
    for j in 0..h {
        let theta = (j as f64 + 0.5) / h as f64 * std::f64::consts::PI;
        let t = theta.cos() * 0.5 + 0.5; // 1 at +z, 0 at -z
        for i in 0..w {
            let phi = (i as f64 + 0.5) / w as f64 * std::f64::consts::TAU;
            let swing = 1.0 + 0.25 * phi.sin();
            let zenith = Rgb::new(0.35, 0.5, 0.95);
            let horizon = Rgb::new(1.0, 0.72, 0.45);
            let c = (zenith * t + horizon * (1.0 - t)) * swing;
            image.set_pixel(i, j, c, 1.0);
        }
    }
    image
}

fn fidelity_scene() -> &'static (Scene, RenderSettings) {
    static SCENE: OnceLock<(Scene, RenderSettings)> = OnceLock::new();
    SCENE.get_or_init(|| {
        let geometry = generate_curl_groom(200, 12, 5, 0.55);
        let material = default_material(Rgb::new(0.12, 0.22, 0.4));
        let azimuthal = bake_azimuthal_lut(&material, &AzimuthalBakeParams::default()).unwrap();
        let baked = bake_all(&geometry, &TransmittanceBakeParams::default()).unwrap();
        let phase = bake_phase_sh_lut(&material, &azimuthal, &PhaseBakeParams::default()).unwrap();
        let env = project_envmap(&synthetic_sky(), 2).unwrap();
        let light = Light::Directional {
            toward: Direction::normalize(Vec3::new(0.5, -1.0, 0.8)).unwrap(),
            radiance: Rgb::new(0.9, 0.85, 0.8),
        };
        let scene = Scene::new(
            geometry,
            material,
            azimuthal,
            baked.vectors,
            vec![light],
            Some(env),
            Some(phase),
        )
        .unwrap();
        (scene, RenderSettings::default())
    })
}

fn fidelity_camera(res: usize) -> Camera {
    let (scene, _) = fidelity_scene();
    let (lo, hi) = scene.geometry.bounding_box();
    let center = (lo + hi) * 0.5;
    let extent = (hi - lo).norm();
    Camera::new(
        center + Vec3::new(0.0, -1.5 * extent, 0.3 * extent),
        center,
        Vec3::new(0.0, 0.0, 1.0),
        45f64.to_radians(),
        res,
        res,
    )
    .unwrap()
}

/// Per-channel least-squares scale of `img` against `reference`; the
/// brightness tuning both renderers get before comparison.
fn optimally_scaled(img: &FrameBuffer, reference: &FrameBuffer) -> FrameBuffer {
    let mut num = [0.0f64; 3];
    let mut den = [0.0f64; 3];
    for (pi, pr) in img.pixels().iter().zip(reference.pixels()) {
        for c in 0..3 {
            num[c] += pr.channel(c) * pi.channel(c);
            den[c] += pi.channel(c) * pi.channel(c);
        }
    }
    let scale: [f64; 3] = std::array::from_fn(|c| if den[c] > 0.0 { num[c] / den[c] } else { 1.0 });
    let mut out = FrameBuffer::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.pixel(x, y);
            out.set_pixel(
                x,
                y,
                Rgb::new(
                    p.channel(0) * scale[0],
                    p.channel(1) * scale[1],
                    p.channel(2) * scale[2],
                ),
                img.alpha(x, y),
            );
        }
    }
    out
}

fn criterion_6_fidelity() -> CriterionResult {
    let start = Instant::now();
    let (scene, settings) = fidelity_scene();
    let camera = fidelity_camera(128);
    let ours = render(scene, &camera, settings, Shader::Ours).map_err(|e| e.to_string())?;
    let kajiya = render(scene, &camera, settings, Shader::Kajiya).map_err(|e| e.to_string())?;
    let reference =
        trace_reference(scene, &camera, settings, 1024, 7).map_err(|e| e.to_string())?;
    let rmse_ours = compare_images(&optimally_scaled(&ours, &reference), &reference)
        .map_err(|e| e.to_string())?
        .rmse;
    let rmse_kajiya = compare_images(&optimally_scaled(&kajiya, &reference), &reference)
        .map_err(|e| e.to_string())?
        .rmse;
    let secs = start.elapsed().as_secs_f64();
    if !(rmse_ours < rmse_kajiya) {
        return Err(format!(
            "RMSE ours {rmse_ours:.5} not below kajiya {rmse_kajiya:.5} against the 1024-spp reference"
        ));
    }
    if secs >= 600.0 {
        return Err(format!("fidelity run took {secs:.0}s, budget is 600s"));
    }
    Ok(format!(
        "RMSE to 1024-spp reference: ours {rmse_ours:.5} < kajiya {rmse_kajiya:.5} ({secs:.0}s)"
    ))
}

fn criterion_7_shading_cost() -> CriterionResult {
    let (scene, settings) = fidelity_scene();
    let camera = fidelity_camera(64);
    let report = bench(scene, &camera, settings, 3).map_err(|e| e.to_string())?;
    if report.shading_ratio > 5.0 {
        return Err(format!(
            "shading-only ours/kajiya ratio {:.2} exceeds 5 (ours {:.2} ms, kajiya {:.2} ms)",
            report.shading_ratio, report.ours_shading_ms, report.kajiya_shading_ms
        ));
    }
    Ok(format!(
        "shading-only ours/kajiya ratio {:.2} (visibility {:.2} ms, ours {:.2} ms, kajiya {:.2} ms per 64x64 frame)",
        report.shading_ratio, report.visibility_ms, report.ours_shading_ms, report.kajiya_shading_ms
    ))
}

// ----------------------------------------------------------- criterion 8

fn criterion_8_trt_report() -> CriterionResult {
    let material = default_material(Rgb::BLACK);
    let azimuthal = bake_azimuthal_lut(
        &material,
        &AzimuthalBakeParams {
            res_theta: 32,
            res_phi: 64,
            ..AzimuthalBakeParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let report = validate_trt_factorization(
        &material,
        &azimuthal,
        &PhaseBakeParams {
            samples: 64,
            order: 1,
            quad_theta: 64,
            quad_phi: 128,
        },
        &[0.0, 0.1, 0.2, 0.5, 1.0],
    )
    .map_err(|e| e.to_string())?;
    let zero = &report.entries[0];
    if zero.sigma_a != 0.0 || zero.relative_l2 != 0.0 {
        return Err(format!(
            "sigma_a = 0 error must be exactly zero, got {:.3e}",
            zero.relative_l2
        ));
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("trt_factorization.txt");
    std::fs::write(&path, report.to_string()).map_err(|e| e.to_string())?;
    let worst = report
        .entries
        .iter()
        .map(|e| e.relative_l2)
        .fold(0.0, f64::max);
    Ok(format!(
        "sigma_a = 0 exact; max rel L2 {worst:.3e} at sigma_a = 1; report written to {}",
        path.display()
    ))
}
