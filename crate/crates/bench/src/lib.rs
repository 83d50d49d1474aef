//! Shared fixtures for the criterion benchmarks: a deterministic material,
//! its azimuthal table, and a small fully-baked curl scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strandshade::farfield::{bake_phase_sh_lut, EnvironmentSH, PhaseBakeParams};
use strandshade::fiber::{bake_azimuthal_lut, AzimuthalBakeParams, AzimuthalLUT, FiberMaterial};
use strandshade::scene::{Camera, Light, RenderSettings, Scene};
use strandshade::sh::SHVector;
use strandshade::strand::generate_curl_groom;
use strandshade::transmittance::{bake_all, TransmittanceBakeParams};
use strandshade::{Direction, Rgb, Vec3};

pub fn material() -> FiberMaterial {
    FiberMaterial::new(
        Rgb::new(0.15, 0.25, 0.45),
        1.55,
        10f64.to_radians(),
        (-10f64).to_radians(),
    )
    .unwrap()
}

pub fn azimuthal(material: &FiberMaterial) -> AzimuthalLUT {
    bake_azimuthal_lut(
        material,
        &AzimuthalBakeParams {
            res_theta: 32,
            res_phi: 64,
            ..AzimuthalBakeParams::default()
        },
    )
    .unwrap()
}

pub fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    loop {
        let v = Vec3::new(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
        );
        if v.norm_squared() > 1e-6 && v.norm_squared() < 1.0 {
            return Direction::normalize(v).unwrap();
        }
    }
}

pub fn random_sh(rng: &mut ChaCha8Rng, order: usize) -> SHVector {
    let mut v = SHVector::zeros(order);
    for i in 0..v.len() {
        v.set(i, 2.0 * rng.random::<f64>() - 1.0);
    }
    v
}

/// Smooth environment with a dominant positive DC term so reconstructed
/// radiance stays positive nearly everywhere.
fn bench_environment(rng: &mut ChaCha8Rng) -> EnvironmentSH {
    let channels = std::array::from_fn(|_| {
        let mut v = random_sh(rng, 2).scaled(0.3);
        v.set(0, 2.0 * std::f64::consts::PI.sqrt());
        v
    });
    EnvironmentSH::new(channels, None).unwrap()
}

/// A baked ~50-strand curl groom under an SH environment and one
/// directional light, framed by a camera at the given resolution.
pub fn small_scene(res: usize) -> (Scene, Camera, RenderSettings) {
    let material = material();
    let azimuthal = azimuthal(&material);
    let geometry = generate_curl_groom(50, 12, 77, 0.55);
    let baked = bake_all(
        &geometry,
        &TransmittanceBakeParams {
            cubemap_res: 8,
            ..TransmittanceBakeParams::default()
        },
    )
    .unwrap();
    let phase = bake_phase_sh_lut(
        &material,
        &azimuthal,
        &PhaseBakeParams {
            samples: 32,
            order: 1,
            quad_theta: 32,
            quad_phi: 64,
        },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let environment = bench_environment(&mut rng);
    let light = Light::Directional {
        toward: Direction::normalize(Vec3::new(0.4, -1.0, 0.8)).unwrap(),
        radiance: Rgb::new(1.2, 1.1, 1.0),
    };
    let (lo, hi) = geometry.bounding_box();
    let center = (lo + hi) * 0.5;
    let extent = (hi - lo).norm();
    let scene = Scene::new(
        geometry,
        material,
        azimuthal,
        baked.vectors,
        vec![light],
        Some(environment),
        Some(phase),
    )
    .unwrap();
    let camera = Camera::new(
        center + Vec3::new(0.0, -1.6 * extent, 0.35 * extent),
        center,
        Vec3::new(0.0, 0.0, 1.0),
        45f64.to_radians(),
        res,
        res,
    )
    .unwrap();
    (scene, camera, RenderSettings::default())
}
