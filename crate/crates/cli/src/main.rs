//! `strandshade` — bake, render, compare, and bench from the command line.
//!
//! Every command is deterministic given its flags; `reference` demands an
//! explicit seed. Exit codes: 0 success, 1 invalid input (bad flags or
//! malformed configs), 2 runtime failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use strandshade::fiber::{
    bake_azimuthal_lut, read_azimuthal_lut, write_azimuthal_lut, AzimuthalBakeParams,
    AzimuthalLutHeader, FiberMaterial, MODES,
};
use strandshade::farfield::{
    bake_phase_sh_lut, read_phase_sh_lut, validate_trt_factorization, write_phase_sh_lut,
    PhaseBakeParams,
};
use strandshade::image::{compare_images, FrameBuffer};
use strandshade::reference::trace_reference;
use strandshade::render::{bench, render, Shader};
use strandshade::scene::SceneConfig;
use strandshade::transmittance::{bake_all, save_sidecar, SidecarHeader, TransmittanceBakeParams};
use strandshade::{Error, Result, Rgb};

#[derive(Parser)]
#[command(
    name = "strandshade",
    version,
    about = "Hair shading toolkit: bake scattering tables and transmittance, render, compare, bench"
)]
struct Cli {
    /// Cap the worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bake the azimuthal scattering table for a fiber material.
    BakeLut(BakeLutArgs),
    /// Bake per-vertex transmittance SH for a scene's geometry.
    BakeTransmittance(BakeTransmittanceArgs),
    /// Bake the phase-function SH table over reflected directions.
    BakePhaseSh(BakePhaseShArgs),
    /// Render a scene with the SH hair shader or the Kajiya-Kay baseline.
    Render(RenderArgs),
    /// Path-trace the single-scattering reference for a scene.
    Reference(ReferenceArgs),
    /// Compare two PFM images and print error metrics.
    Compare(CompareArgs),
    /// Time visibility and shading for both shaders and print the ratio.
    Bench(BenchArgs),
}

/// Fiber material from flags, optionally seeded by a scene file's
/// `[material]` section. Explicit flags win over the file.
#[derive(Args)]
struct MaterialArgs {
    /// Scene TOML supplying material defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Absorption coefficient as `r,g,b`.
    #[arg(long, value_parser = parse_rgb)]
    sigma_a: Option<Rgb>,
    /// Refractive index.
    #[arg(long)]
    eta: Option<f64>,
    /// R-lobe longitudinal width, degrees.
    #[arg(long)]
    beta_r_deg: Option<f64>,
    /// R-lobe longitudinal shift, degrees.
    #[arg(long)]
    alpha_r_deg: Option<f64>,
}

fn parse_rgb(s: &str) -> std::result::Result<Rgb, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected `r,g,b`, got `{s}`"));
    }
    let mut v = [0.0f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad component `{part}`: {e}"))?;
    }
    Ok(Rgb::new(v[0], v[1], v[2]))
}

impl MaterialArgs {
    fn resolve(&self) -> Result<FiberMaterial> {
        let base = match &self.config {
            Some(path) => Some(SceneConfig::load(path)?.material),
            None => None,
        };
        let sigma_a = self.sigma_a.unwrap_or_else(|| {
            base.as_ref()
                .map(|m| Rgb::new(m.sigma_a[0], m.sigma_a[1], m.sigma_a[2]))
                .unwrap_or(Rgb::BLACK)
        });
        let eta = self
            .eta
            .or(base.as_ref().and_then(|m| m.eta))
            .unwrap_or(FiberMaterial::DEFAULT_ETA);
        let beta_r = self
            .beta_r_deg
            .or(base.as_ref().and_then(|m| m.beta_r_deg))
            .unwrap_or(10.0);
        let alpha_r = self
            .alpha_r_deg
            .or(base.as_ref().and_then(|m| m.alpha_r_deg))
            .unwrap_or(-10.0);
        FiberMaterial::new(sigma_a, eta, beta_r.to_radians(), alpha_r.to_radians())
    }
}

#[derive(Args)]
struct BakeLutArgs {
    #[command(flatten)]
    material: MaterialArgs,
    /// Table resolution along the difference angle.
    #[arg(long, default_value_t = 64)]
    res_theta: usize,
    /// Table resolution along the relative azimuth.
    #[arg(long, default_value_t = 128)]
    res_phi: usize,
    /// Output table file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BakeTransmittanceArgs {
    /// Scene TOML; its geometry is baked in the authored frame.
    #[arg(long)]
    scene: PathBuf,
    /// Cubemap face resolution per vertex.
    #[arg(long, default_value_t = 16)]
    cubemap_res: usize,
    /// Self-exclusion radius as a multiple of the local strand radius.
    #[arg(long, default_value_t = 20.0)]
    exclusion_radius_factor: f64,
    /// Output sidecar file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BakePhaseShArgs {
    #[command(flatten)]
    material: MaterialArgs,
    /// Prebaked azimuthal table; baked at default resolution when absent.
    #[arg(long)]
    lut: Option<PathBuf>,
    /// SH order of the baked table.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Number of reflected-direction samples.
    #[arg(long, default_value_t = 128)]
    samples: usize,
    /// Store coefficients quantized to 8 bits per mode and report the
    /// round-trip error.
    #[arg(long)]
    quantize: bool,
    /// TRT factorization report path (default: `<out>.trt.txt`).
    #[arg(long)]
    trt_report: Option<PathBuf>,
    /// Output table file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShaderArg {
    Ours,
    Kajiya,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Output linear PFM image.
    #[arg(long)]
    out: PathBuf,
    /// Also write an 8-bit gamma-encoded PPM preview.
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ShaderArg::Ours)]
    shader: ShaderArg,
    /// Override the camera width from the scene file.
    #[arg(long)]
    width: Option<usize>,
    /// Override the camera height from the scene file.
    #[arg(long)]
    height: Option<usize>,
    /// Override the visibility bias from the scene file.
    #[arg(long)]
    bias: Option<f64>,
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Output linear PFM image.
    #[arg(long)]
    out: PathBuf,
    /// Also write an 8-bit gamma-encoded PPM preview.
    #[arg(long)]
    ppm: Option<PathBuf>,
    /// Samples per pixel.
    #[arg(long, default_value_t = 64)]
    spp: usize,
    /// RNG seed; mandatory so every run is reproducible.
    #[arg(long)]
    seed: u64,
    /// Override the camera width from the scene file.
    #[arg(long)]
    width: Option<usize>,
    /// Override the camera height from the scene file.
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// First image (PFM).
    a: PathBuf,
    /// Second image (PFM).
    b: PathBuf,
    /// Fail (exit 2) when the overall RMSE exceeds this bound.
    #[arg(long)]
    max_rmse: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Timing repetitions; medians are reported.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Override the camera width from the scene file.
    #[arg(long)]
    width: Option<usize>,
    /// Override the camera height from the scene file.
    #[arg(long)]
    height: Option<usize>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    setup_threads(cli.threads);
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(if err.is_validation() { 1 } else { 2 });
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BakeLut(args) => bake_lut_cmd(args),
        Command::BakeTransmittance(args) => bake_transmittance_cmd(args),
        Command::BakePhaseSh(args) => bake_phase_sh_cmd(args),
        Command::Render(args) => render_cmd(cli, args),
        Command::Reference(args) => reference_cmd(cli, args),
        Command::Compare(args) => compare_cmd(args),
        Command::Bench(args) => bench_cmd(cli, args),
    }
}

/// Caps the global worker pool. A second call (flag already applied in
/// main, scene settings trying again) is a harmless no-op.
fn setup_threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::debug!("thread pool already configured: {e}");
        }
    }
}

/// Paths inside a scene file resolve against the file's directory.
fn scene_base(scene_path: &Path) -> PathBuf {
    match scene_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn bake_lut_cmd(args: &BakeLutArgs) -> Result<()> {
    let material = args.material.resolve()?;
    for mode in MODES {
        let lobe = material.lobe(mode);
        println!(
            "{mode:?}: beta {:.3} deg, alpha {:.3} deg, g {:.5}",
            lobe.beta.to_degrees(),
            lobe.alpha.to_degrees(),
            lobe.g
        );
    }
    let params = AzimuthalBakeParams {
        res_theta: args.res_theta,
        res_phi: args.res_phi,
        ..AzimuthalBakeParams::default()
    };
    let lut = bake_azimuthal_lut(&material, &params)?;
    let header = AzimuthalLutHeader {
        material,
        bake: params,
    };
    let mut w = create_out(&args.out)?;
    write_azimuthal_lut(&mut w, &lut, &header)?;
    w.flush()?;
    println!(
        "wrote {} ({}x{} per mode, 3 modes)",
        args.out.display(),
        lut.res_theta(),
        lut.res_phi()
    );
    Ok(())
}

fn bake_transmittance_cmd(args: &BakeTransmittanceArgs) -> Result<()> {
    let config = SceneConfig::load(&args.scene)?;
    let geometry = config.load_geometry_untransformed(&scene_base(&args.scene))?;
    let params = TransmittanceBakeParams {
        cubemap_res: args.cubemap_res,
        exclusion_radius_factor: args.exclusion_radius_factor,
        ..TransmittanceBakeParams::default()
    };
    let baked = bake_all(&geometry, &params)?;
    let (mean, max) = baked.error_summary();
    let header = SidecarHeader {
        params,
        strand_alpha: config.geometry.alpha,
        geometry_file: config
            .geometry
            .path
            .clone()
            .unwrap_or_else(|| "procedural-curl".into()),
    };
    save_sidecar(&args.out, &baked.vectors, &header)?;
    println!(
        "baked {} vertices; SH reconstruction error mean {mean:.4}, max {max:.4}",
        baked.vectors.len()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn bake_phase_sh_cmd(args: &BakePhaseShArgs) -> Result<()> {
    let material = args.material.resolve()?;
    let azimuthal = match &args.lut {
        Some(path) => {
            let mut r = BufReader::new(File::open(path)?);
            read_azimuthal_lut(&mut r)?.0
        }
        None => bake_azimuthal_lut(&material, &AzimuthalBakeParams::default())?,
    };
    let params = PhaseBakeParams {
        samples: args.samples,
        order: args.order,
        ..PhaseBakeParams::default()
    };
    let lut = bake_phase_sh_lut(&material, &azimuthal, &params)?;
    let mut w = create_out(&args.out)?;
    let quant = write_phase_sh_lut(&mut w, &lut, &material, args.quantize)?;
    w.flush()?;
    drop(w);
    println!(
        "wrote {} ({} samples, order {})",
        args.out.display(),
        lut.sample_count(),
        lut.order()
    );
    if let Some(report) = quant {
        let mut r = BufReader::new(File::open(&args.out)?);
        let (reread, _) = read_phase_sh_lut(&mut r)?;
        let mut max_err = 0.0f64;
        for j in 0..lut.sample_count() {
            for (a, b) in lut.sample(j).iter().zip(reread.sample(j).iter()) {
                for (ca, cb) in a.coeffs().iter().zip(b.coeffs()) {
                    max_err = max_err.max((ca - cb).abs());
                }
            }
        }
        println!("quantization round-trip max |error|: {max_err:.3e}");
        for (i, mode) in MODES.iter().enumerate() {
            println!(
                "  {mode:?}: offset {:+.5e}, scale {:.5e}, max |error| {:.3e}",
                report.offset[i], report.scale[i], report.max_abs_error[i]
            );
        }
    }
    let trt = validate_trt_factorization(&material, &azimuthal, &params, TRT_SIGMAS)?;
    let report_path = args
        .trt_report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("trt.txt"));
    std::fs::write(&report_path, trt.to_string())?;
    println!("wrote TRT factorization report to {}", report_path.display());
    Ok(())
}

const TRT_SIGMAS: &[f64] = &[0.0, 0.1, 0.2, 0.5, 1.0];

/// Applies resolution overrides, builds the runtime scene, and returns it
/// with the camera and settings. Shared by render, reference, and bench.
fn build_scene(
    cli: &Cli,
    scene_path: &Path,
    width: Option<usize>,
    height: Option<usize>,
) -> Result<(
    strandshade::scene::Scene,
    strandshade::scene::Camera,
    strandshade::scene::RenderSettings,
)> {
    let mut config = SceneConfig::load(scene_path)?;
    if let Some(w) = width {
        config.camera.width = w;
    }
    if let Some(h) = height {
        config.camera.height = h;
    }
    let settings = config.settings();
    if cli.threads.is_none() {
        setup_threads(settings.threads);
    }
    let scene = config.build(&scene_base(scene_path))?;
    let camera = config.camera()?;
    Ok((scene, camera, settings))
}

fn write_images(image: &FrameBuffer, out: &Path, ppm: Option<&PathBuf>) -> Result<()> {
    image.write_pfm(out)?;
    if let Some(p) = ppm {
        image.write_ppm(p)?;
    }
    Ok(())
}

fn render_cmd(cli: &Cli, args: &RenderArgs) -> Result<()> {
    let (scene, camera, mut settings) = build_scene(cli, &args.scene, args.width, args.height)?;
    if let Some(b) = args.bias {
        settings.bias = b;
    }
    let shader = match args.shader {
        ShaderArg::Ours => Shader::Ours,
        ShaderArg::Kajiya => Shader::Kajiya,
    };
    let start = std::time::Instant::now();
    let image = render(&scene, &camera, &settings, shader)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_images(&image, &args.out, args.ppm.as_ref())?;
    println!(
        "rendered {}x{} in {elapsed:.2}s -> {}",
        camera.width(),
        camera.height(),
        args.out.display()
    );
    Ok(())
}

fn reference_cmd(cli: &Cli, args: &ReferenceArgs) -> Result<()> {
    let (scene, camera, settings) = build_scene(cli, &args.scene, args.width, args.height)?;
    let start = std::time::Instant::now();
    let image = trace_reference(&scene, &camera, &settings, args.spp, args.seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_images(&image, &args.out, args.ppm.as_ref())?;
    println!(
        "traced {}x{} at {} spp (seed {}) in {elapsed:.2}s -> {}",
        camera.width(),
        camera.height(),
        args.spp,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let a = FrameBuffer::read_pfm(&args.a)?;
    let b = FrameBuffer::read_pfm(&args.b)?;
    let metrics = compare_images(&a, &b)?;
    println!("{metrics}");
    if let Some(bound) = args.max_rmse {
        if metrics.rmse > bound {
            return Err(Error::Convergence(format!(
                "RMSE {:.6} exceeds bound {bound:.6}",
                metrics.rmse
            )));
        }
    }
    Ok(())
}

fn bench_cmd(cli: &Cli, args: &BenchArgs) -> Result<()> {
    let (scene, camera, settings) = build_scene(cli, &args.scene, args.width, args.height)?;
    let report = bench(&scene, &camera, &settings, args.repetitions)?;
    print!("{report}");
    Ok(())
}
