//! Scene assembly: geometry, material, lights, camera, and settings, plus
//! the TOML description format that binds them to files on disk.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::farfield::{
    bake_phase_sh_lut, project_envmap, read_phase_sh_lut, EnvironmentSH, PhaseBakeParams,
    PhaseSHLUT, ENVIRONMENT_ORDER, MAX_SHADE_ORDER,
};
use crate::fiber::{
    bake_azimuthal_lut, read_azimuthal_lut, AzimuthalBakeParams, AzimuthalLUT, FiberMaterial,
};
use crate::geom::{Direction, Ray, Rotation, Vec3};
use crate::image::FrameBuffer;
use crate::strand::{generate_curl_groom, HairGeometry};
use crate::transmittance::{apply_orientation, load_sidecar};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum Light {
    /// `toward` points from any shading point toward the light.
    Directional { toward: Direction, radiance: Rgb },
    /// Intensity falls off with inverse squared distance.
    Point { position: Vec3, intensity: Rgb },
}

impl Light {
    /// Direction toward the light from `x`, incident radiance there, and
    /// the parametric distance a shadow ray may travel.
    pub fn sample(&self, x: Vec3) -> (Direction, Rgb, f64) {
        match self {
            Light::Directional { toward, radiance } => (*toward, *radiance, f64::INFINITY),
            Light::Point {
                position,
                intensity,
            } => {
                let to_light = position - x;
                let dist2 = to_light.norm_squared().max(1e-12);
                let dist = dist2.sqrt();
                let dir = Direction::normalize(to_light)
                    .unwrap_or_else(|_| Direction::z_axis());
                (dir, *intensity / dist2, dist)
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Light {
        match self {
            Light::Directional { toward, radiance } => Light::Directional {
                toward: *toward,
                radiance: *radiance * s,
            },
            Light::Point {
                position,
                intensity,
            } => Light::Point {
                position: *position,
                intensity: *intensity * s,
            },
        }
    }
}

/// Pinhole camera; pixel (0, 0) is the top-left corner.
#[derive(Debug, Clone)]
pub struct Camera {
    position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half_fov: f64,
    width: usize,
    height: usize,
}

impl Camera {
    pub fn new(
        position: Vec3,
        look_at: Vec3,
        up: Vec3,
        fov: f64,
        width: usize,
        height: usize,
    ) -> Result<Camera> {
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(Error::invalid("camera fov must lie in (0, pi)"));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("camera resolution must be non-zero"));
        }
        let forward = Direction::normalize(look_at - position)
            .map_err(|_| Error::invalid("camera look_at coincides with position"))?
            .vec();
        let right = forward.cross(&up);
        if right.norm() < 1e-9 {
            return Err(Error::invalid("camera up is parallel to the view axis"));
        }
        let right = right / right.norm();
        let up = right.cross(&forward);
        Ok(Camera {
            position,
            forward,
            right,
            up,
            tan_half_fov: (fov * 0.5).tan(),
            width,
            height,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    /// Ray through the pixel at fractional offset (jx, jy) in [0, 1)^2;
    /// (0.5, 0.5) is the pixel center.
    pub fn sampled_ray(&self, px: usize, py: usize, jx: f64, jy: f64) -> Ray {
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + jx) / self.width as f64 - 1.0) * self.tan_half_fov * aspect;
        let sy = (1.0 - 2.0 * (py as f64 + jy) / self.height as f64) * self.tan_half_fov;
        let dir = self.forward + self.right * sx + self.up * sy;
        Ray::new(
            self.position,
            Direction::normalize(dir).expect("camera ray direction"),
        )
    }

    pub fn primary_ray(&self, px: usize, py: usize) -> Ray {
        self.sampled_ray(px, py, 0.5, 0.5)
    }
}

/// Kajiya-Kay baseline parameters: diffuse sin(t, l) and powered specular
/// terms per light plus a constant ambient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KajiyaParams {
    pub diffuse: Rgb,
    pub specular: Rgb,
    pub exponent: f64,
    pub ambient: Rgb,
}

impl Default for KajiyaParams {
    fn default() -> Self {
        KajiyaParams {
            diffuse: Rgb::splat(0.6),
            specular: Rgb::splat(0.3),
            exponent: 32.0,
            ambient: Rgb::splat(0.05),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderSettings {
    /// Dead zone of the baked transmittance: directions with V <= bias
    /// shade black, the rest rescale to keep 1 mapping to 1.
    pub bias: f64,
    /// Transparent hit cap per pixel.
    pub max_hits: usize,
    pub background: Rgb,
    pub kajiya: KajiyaParams,
    pub threads: Option<usize>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            bias: 0.1,
            max_hits: 32,
            background: Rgb::BLACK,
            kajiya: KajiyaParams::default(),
            threads: None,
        }
    }
}

/// Everything the shaders read. Construction validates that the baked
/// transmittance covers every geometry vertex.
pub struct Scene {
    pub geometry: HairGeometry,
    pub material: FiberMaterial,
    pub azimuthal: AzimuthalLUT,
    /// Per-vertex visibility SH, indexed like the flattened vertex list.
    pub transmittance: Vec<crate::sh::SHVector>,
    pub lights: Vec<Light>,
    pub environment: Option<EnvironmentSH>,
    pub phase_lut: Option<PhaseSHLUT>,
}

impl Scene {
    pub fn new(
        geometry: HairGeometry,
        material: FiberMaterial,
        azimuthal: AzimuthalLUT,
        transmittance: Vec<crate::sh::SHVector>,
        lights: Vec<Light>,
        environment: Option<EnvironmentSH>,
        phase_lut: Option<PhaseSHLUT>,
    ) -> Result<Scene> {
        if transmittance.len() != geometry.vertex_count() {
            return Err(Error::invalid(format!(
                "transmittance covers {} vertices, geometry has {}",
                transmittance.len(),
                geometry.vertex_count()
            )));
        }
        if environment.is_some() && phase_lut.is_none() {
            return Err(Error::invalid(
                "environment lighting requires a phase SH LUT",
            ));
        }
        let max_order = transmittance
            .iter()
            .map(|v| v.order())
            .chain(environment.iter().map(|e| e.order()))
            .chain(phase_lut.iter().map(|l| l.order()))
            .max()
            .unwrap_or(0);
        if max_order > MAX_SHADE_ORDER {
            return Err(Error::invalid(format!(
                "scene SH order {max_order} exceeds the shading limit {MAX_SHADE_ORDER}"
            )));
        }
        Ok(Scene {
            geometry,
            material,
            azimuthal,
            transmittance,
            lights,
            environment,
            phase_lut,
        })
    }
}

fn default_strand_alpha() -> f64 {
    0.5
}

fn default_env_order() -> usize {
    ENVIRONMENT_ORDER
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default)]
    pub rotation_axis: Option<[f64; 3]>,
    #[serde(default)]
    pub rotation_angle: f64,
    #[serde(default)]
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurlConfig {
    pub strands: usize,
    pub vertices: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Hair text file; mutually exclusive with `curl`.
    pub path: Option<String>,
    /// Procedural curl groom parameters.
    pub curl: Option<CurlConfig>,
    #[serde(default = "default_strand_alpha")]
    pub alpha: f64,
    /// Baked vertex transmittance sidecar. Required by the render command.
    pub transmittance: Option<String>,
    pub transform: Option<TransformConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub sigma_a: [f64; 3],
    pub eta: Option<f64>,
    pub beta_r_deg: Option<f64>,
    pub alpha_r_deg: Option<f64>,
    /// Prebaked azimuthal LUT; baked with defaults when absent.
    pub lut: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub direction: Option<[f64; 3]>,
    pub position: Option<[f64; 3]>,
    pub rgb: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub path: String,
    #[serde(default = "default_env_order")]
    pub order: usize,
    /// Prebaked phase SH LUT; baked with defaults when absent.
    pub phase_lut: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsConfig {
    pub bias: Option<f64>,
    pub max_hits: Option<usize>,
    pub background: Option<[f64; 3]>,
    pub kajiya_diffuse: Option<[f64; 3]>,
    pub kajiya_specular: Option<[f64; 3]>,
    pub kajiya_exponent: Option<f64>,
    pub kajiya_ambient: Option<[f64; 3]>,
    pub threads: Option<usize>,
}

/// On-disk scene description. Paths resolve relative to the TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub lights: Vec<LightConfig>,
    pub environment: Option<EnvironmentConfig>,
    pub camera: CameraConfig,
    #[serde(default)]
    pub settings: SettingsConfig,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn rgb(a: [f64; 3]) -> Rgb {
    Rgb::new(a[0], a[1], a[2])
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<SceneConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn camera(&self) -> Result<Camera> {
        Camera::new(
            vec3(self.camera.position),
            vec3(self.camera.look_at),
            vec3(self.camera.up),
            self.camera.fov_deg.to_radians(),
            self.camera.width,
            self.camera.height,
        )
    }

    pub fn settings(&self) -> RenderSettings {
        let defaults = RenderSettings::default();
        let kd = KajiyaParams::default();
        RenderSettings {
            bias: self.settings.bias.unwrap_or(defaults.bias),
            max_hits: self.settings.max_hits.unwrap_or(defaults.max_hits),
            background: self
                .settings
                .background
                .map(rgb)
                .unwrap_or(defaults.background),
            kajiya: KajiyaParams {
                diffuse: self.settings.kajiya_diffuse.map(rgb).unwrap_or(kd.diffuse),
                specular: self
                    .settings
                    .kajiya_specular
                    .map(rgb)
                    .unwrap_or(kd.specular),
                exponent: self.settings.kajiya_exponent.unwrap_or(kd.exponent),
                ambient: self.settings.kajiya_ambient.map(rgb).unwrap_or(kd.ambient),
            },
            threads: self.settings.threads,
        }
    }

    pub fn material(&self) -> Result<FiberMaterial> {
        FiberMaterial::new(
            rgb(self.material.sigma_a),
            self.material.eta.unwrap_or(FiberMaterial::DEFAULT_ETA),
            self.material.beta_r_deg.unwrap_or(10.0).to_radians(),
            self.material.alpha_r_deg.unwrap_or(-10.0).to_radians(),
        )
    }

    /// Geometry in its authored frame, before any transform. Transmittance
    /// sidecars are baked in this frame and rotated at load time.
    pub fn load_geometry_untransformed(&self, base: &Path) -> Result<HairGeometry> {
        match (&self.geometry.path, &self.geometry.curl) {
            (Some(path), None) => HairGeometry::load(&resolve(base, path), self.geometry.alpha),
            (None, Some(curl)) => Ok(generate_curl_groom(
                curl.strands,
                curl.vertices,
                curl.seed,
                self.geometry.alpha,
            )),
            _ => Err(Error::invalid(
                "geometry needs exactly one of `path` or `curl`",
            )),
        }
    }

    pub fn load_geometry(&self, base: &Path) -> Result<HairGeometry> {
        let geometry = self.load_geometry_untransformed(base)?;
        Ok(match &self.geometry.transform {
            Some(t) => {
                let rotation = match t.rotation_axis {
                    Some(axis) => Rotation::from_axis_angle(
                        Direction::normalize(vec3(axis))
                            .map_err(|_| Error::invalid("transform rotation axis is zero"))?,
                        t.rotation_angle,
                    ),
                    None => Rotation::identity(),
                };
                geometry.transformed(&rotation, vec3(t.translation))
            }
            None => geometry,
        })
    }

    pub fn lights(&self) -> Result<Vec<Light>> {
        self.lights
            .iter()
            .map(|l| match l.kind.as_str() {
                "directional" => {
                    let d = l.direction.ok_or_else(|| {
                        Error::invalid("directional light needs `direction`")
                    })?;
                    Ok(Light::Directional {
                        toward: Direction::normalize(vec3(d))
                            .map_err(|_| Error::invalid("light direction is zero"))?,
                        radiance: rgb(l.rgb),
                    })
                }
                "point" => {
                    let p = l
                        .position
                        .ok_or_else(|| Error::invalid("point light needs `position`"))?;
                    Ok(Light::Point {
                        position: vec3(p),
                        intensity: rgb(l.rgb),
                    })
                }
                other => Err(Error::invalid(format!("unknown light type `{other}`"))),
            })
            .collect()
    }

    /// Builds the full runtime scene: loads or bakes the azimuthal LUT,
    /// loads the transmittance sidecar (rotating it with the transform),
    /// and projects or loads the environment pieces.
    pub fn build(&self, base: &Path) -> Result<Scene> {
        let material = self.material()?;
        let geometry = self.load_geometry(base)?;
        let azimuthal = match &self.material.lut {
            Some(path) => {
                let mut f = std::fs::File::open(resolve(base, path))?;
                read_azimuthal_lut(&mut f)?.0
            }
            None => bake_azimuthal_lut(&material, &AzimuthalBakeParams::default())?,
        };
        let transmittance = match &self.geometry.transmittance {
            Some(path) => {
                let (vectors, _) = load_sidecar(&resolve(base, path))?;
                match &self.geometry.transform {
                    Some(t) if t.rotation_axis.is_some() => {
                        let rotation = Rotation::from_axis_angle(
                            Direction::normalize(vec3(t.rotation_axis.unwrap()))
                                .map_err(|_| Error::invalid("transform rotation axis is zero"))?,
                            t.rotation_angle,
                        );
                        vectors
                            .iter()
                            .map(|v| apply_orientation(v, &rotation))
                            .collect()
                    }
                    _ => vectors,
                }
            }
            None => {
                return Err(Error::invalid(
                    "scene has no transmittance sidecar; run bake-transmittance first",
                ))
            }
        };
        let (environment, phase_lut) = match &self.environment {
            Some(env) => {
                let image = FrameBuffer::read_pfm(&resolve(base, &env.path))?;
                let sh = project_envmap(&image, env.order)?;
                let lut = match &env.phase_lut {
                    Some(path) => {
                        let mut f = std::fs::File::open(resolve(base, path))?;
                        read_phase_sh_lut(&mut f)?.0
                    }
                    None => bake_phase_sh_lut(&material, &azimuthal, &PhaseBakeParams::default())?,
                };
                (Some(sh), Some(lut))
            }
            None => (None, None),
        };
        Scene::new(
            geometry,
            material,
            azimuthal,
            transmittance,
            self.lights()?,
            environment,
            phase_lut,
        )
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
