//! End-to-end tests of the `strandshade` binary: every subcommand runs
//! against a small on-disk scene and the exit-code contract is checked
//! (0 ok, 1 bad input, 2 runtime failure).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use strandshade::farfield::read_phase_sh_lut;
use strandshade::image::FrameBuffer;
use strandshade::transmittance::load_sidecar;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strandshade"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn strandshade");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Three collinear vertices, one strand. The default self-exclusion window
/// (20 radii = the full strand) leaves every vertex completely unoccluded.
fn write_strand(dir: &Path) {
    std::fs::write(
        dir.join("strand.hair"),
        "-1 0 0 0.05\n0 0 0 0.05\n1 0 0 0.05\n",
    )
    .unwrap();
}

fn write_scene(dir: &Path, with_sidecar: bool) -> PathBuf {
    let sidecar = if with_sidecar {
        "transmittance = \"trans.sidecar\"\n"
    } else {
        ""
    };
    let toml = format!(
        r#"
[geometry]
path = "strand.hair"
alpha = 0.6
{sidecar}
[material]
sigma_a = [0.1, 0.2, 0.4]

[[lights]]
type = "directional"
direction = [0.3, -1.0, 0.5]
rgb = [1.0, 0.9, 0.8]

[camera]
position = [0.0, -6.0, 1.0]
look_at = [0.0, 0.0, 0.0]
fov_deg = 35.0
width = 16
height = 16
"#
    );
    let path = dir.join("scene.toml");
    std::fs::write(&path, toml).unwrap();
    path
}

#[test]
fn bake_lut_is_deterministic_and_validates_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.lut");
    let b = dir.path().join("b.lut");
    let out = run_ok(bin().args(["bake-lut", "--out"]).arg(&a));
    // The fitted g values land in the header and on stdout.
    let text = stdout(&out);
    assert!(text.contains("g 0.7"), "R-lobe g missing: {text}");
    run_ok(bin().args(["bake-lut", "--out"]).arg(&b));
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "reruns must be bit-identical"
    );

    let bad = bin()
        .args(["bake-lut", "--res-theta", "8", "--out"])
        .arg(dir.path().join("c.lut"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!stderr(&bad).is_empty());
}

#[test]
fn bake_transmittance_single_strand_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    write_strand(dir.path());
    let scene = write_scene(dir.path(), true);
    run_ok(
        bin()
            .args(["bake-transmittance", "--scene"])
            .arg(&scene)
            .arg("--out")
            .arg(dir.path().join("trans.sidecar")),
    );
    let (vectors, header) = load_sidecar(&dir.path().join("trans.sidecar")).unwrap();
    assert_eq!(vectors.len(), 3);
    assert_eq!(header.strand_alpha, 0.6);
    let dc = 2.0 * std::f64::consts::PI.sqrt();
    for v in &vectors {
        assert!((v.coeffs()[0] - dc).abs() < 1e-6, "dc {}", v.coeffs()[0]);
        for c in &v.coeffs()[1..] {
            assert!(c.abs() < 1e-6);
        }
    }
}

#[test]
fn missing_geometry_file_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), false); // strand.hair never written
    let out = bin()
        .args(["bake-transmittance", "--scene"])
        .arg(&scene)
        .arg("--out")
        .arg(dir.path().join("t.sidecar"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!stderr(&out).is_empty());
}

#[test]
fn render_without_sidecar_gives_actionable_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_strand(dir.path());
    let scene = write_scene(dir.path(), false);
    let out = bin()
        .args(["render", "--scene"])
        .arg(&scene)
        .arg("--out")
        .arg(dir.path().join("img.pfm"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("bake-transmittance"),
        "error should say what to run: {}",
        stderr(&out)
    );
}

#[test]
fn bake_phase_sh_header_tracks_order_and_reports_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let l1 = dir.path().join("l1.pshl");
    let l2 = dir.path().join("l2.pshl");
    let out = run_ok(
        bin()
            .args(["bake-phase-sh", "--samples", "16", "--quantize", "--out"])
            .arg(&l1),
    );
    assert!(stdout(&out).contains("round-trip"), "{}", stdout(&out));
    run_ok(
        bin()
            .args(["bake-phase-sh", "--samples", "16", "--order", "2", "--out"])
            .arg(&l2),
    );

    let mut r = std::io::BufReader::new(std::fs::File::open(&l1).unwrap());
    let (lut1, h1) = read_phase_sh_lut(&mut r).unwrap();
    assert_eq!(h1.samples, 16);
    assert_eq!(h1.order, 1);
    assert!(h1.quantized);
    assert_eq!(lut1.order(), 1);

    let mut r = std::io::BufReader::new(std::fs::File::open(&l2).unwrap());
    let (lut2, h2) = read_phase_sh_lut(&mut r).unwrap();
    assert_eq!(h2.order, 2);
    assert_eq!(lut2.order(), 2);
    assert!(
        std::fs::metadata(&l2).unwrap().len() > std::fs::metadata(&l1).unwrap().len(),
        "higher order must mean a bigger file"
    );

    // The TRT factorization report is always written next to the table.
    let report = std::fs::read_to_string(dir.path().join("l1.trt.txt")).unwrap();
    assert!(report.contains("TRT absorption factorization"), "{report}");
}

#[test]
fn render_reference_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    write_strand(dir.path());
    let scene = write_scene(dir.path(), true);
    run_ok(
        bin()
            .args(["bake-transmittance", "--scene"])
            .arg(&scene)
            .arg("--out")
            .arg(dir.path().join("trans.sidecar")),
    );
    let ours = dir.path().join("ours.pfm");
    run_ok(
        bin()
            .args(["render", "--threads", "1", "--scene"])
            .arg(&scene)
            .arg("--out")
            .arg(&ours)
            .arg("--ppm")
            .arg(dir.path().join("ours.ppm")),
    );
    assert!(FrameBuffer::read_pfm(&ours).unwrap().is_finite());
    assert!(dir.path().join("ours.ppm").exists());

    let reference = dir.path().join("ref.pfm");
    run_ok(
        bin()
            .args(["reference", "--spp", "9", "--seed", "11", "--scene"])
            .arg(&scene)
            .arg("--out")
            .arg(&reference),
    );

    // Identical inputs -> zero metrics; the bound passes.
    let same = run_ok(
        bin()
            .args(["compare", "--max-rmse", "1e-12"])
            .arg(&ours)
            .arg(&ours),
    );
    assert!(stdout(&same).contains("RMSE 0.000000"), "{}", stdout(&same));

    // Different images with a tiny bound -> runtime failure (exit 2).
    let diff = bin()
        .args(["compare", "--max-rmse", "1e-12"])
        .arg(&ours)
        .arg(&reference)
        .output()
        .unwrap();
    assert_eq!(diff.status.code(), Some(2), "stderr: {}", stderr(&diff));
}

#[test]
fn reference_requires_an_explicit_seed() {
    let dir = tempfile::tempdir().unwrap();
    write_strand(dir.path());
    let scene = write_scene(dir.path(), true);
    let out = bin()
        .args(["reference", "--spp", "4", "--scene"])
        .arg(&scene)
        .arg("--out")
        .arg(dir.path().join("r.pfm"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--seed"), "{}", stderr(&out));
}

#[test]
fn bench_prints_the_shading_ratio() {
    let dir = tempfile::tempdir().unwrap();
    write_strand(dir.path());
    let scene = write_scene(dir.path(), true);
    run_ok(
        bin()
            .args(["bake-transmittance", "--scene"])
            .arg(&scene)
            .arg("--out")
            .arg(dir.path().join("trans.sidecar")),
    );
    let out = run_ok(
        bin()
            .args(["bench", "--repetitions", "1", "--width", "8", "--height", "8", "--scene"])
            .arg(&scene),
    );
    assert!(
        stdout(&out).contains("ours/kajiya ratio"),
        "{}",
        stdout(&out)
    );
}
