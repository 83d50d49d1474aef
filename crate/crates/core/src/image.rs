//! Float image buffers and the two on-disk formats: PFM for lossless linear
//! data (renders, LUT dumps) and PPM for quick gamma-encoded previews.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::color::Rgb;
use crate::{Error, Result};

/// Linear RGB image with an alpha/coverage channel.
#[derive(Clone)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
    alpha: Vec<f64>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty framebuffer");
        FrameBuffer {
            width,
            height,
            pixels: vec![Rgb::BLACK; width * height],
            alpha: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn alpha(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.width + x]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: Rgb, a: f64) {
        let i = y * self.width + x;
        self.pixels[i] = c;
        self.alpha[i] = a;
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// Rows are stored top-to-bottom; `set_row` writes one horizontal stripe
    /// (used by the pixel-parallel renderers).
    pub fn set_row(&mut self, y: usize, row_pixels: &[Rgb], row_alpha: &[f64]) {
        assert_eq!(row_pixels.len(), self.width);
        assert_eq!(row_alpha.len(), self.width);
        let base = y * self.width;
        self.pixels[base..base + self.width].copy_from_slice(row_pixels);
        self.alpha[base..base + self.width].copy_from_slice(row_alpha);
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.is_finite()) && self.alpha.iter().all(|a| a.is_finite())
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write_pfm_color(&mut w, self.width, self.height, |x, y| self.pixel(x, y))
    }

    pub fn read_pfm(path: &Path) -> Result<Self> {
        let (width, height, channels, data) = read_pfm_raw(path)?;
        let mut fb = FrameBuffer::new(width, height);
        for y in 0..height {
            for x in 0..width {
                let i = y * width + x;
                let c = match channels {
                    3 => Rgb::new(
                        data[3 * i] as f64,
                        data[3 * i + 1] as f64,
                        data[3 * i + 2] as f64,
                    ),
                    _ => Rgb::splat(data[i] as f64),
                };
                fb.set_pixel(x, y, c, 1.0);
            }
        }
        Ok(fb)
    }

    /// 8-bit PPM preview with gamma 2.2 encode; values clamp to [0, 1].
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let encode = |v: f64| -> u8 {
            let v = v.clamp(0.0, 1.0).powf(1.0 / 2.2);
            (v * 255.0 + 0.5) as u8
        };
        let mut row = Vec::with_capacity(self.width * 3);
        for y in 0..self.height {
            row.clear();
            for x in 0..self.width {
                let p = self.pixel(x, y);
                row.extend_from_slice(&[encode(p.r), encode(p.g), encode(p.b)]);
            }
            w.write_all(&row)?;
        }
        Ok(())
    }
}

/// Streams a color PFM (little-endian, rows bottom-to-top per the format).
pub fn write_pfm_color(
    w: &mut impl Write,
    width: usize,
    height: usize,
    pixel: impl Fn(usize, usize) -> Rgb,
) -> Result<()> {
    write!(w, "PF\n{width} {height}\n-1.0\n")?;
    let mut row = Vec::with_capacity(width * 12);
    for y in (0..height).rev() {
        row.clear();
        for x in 0..width {
            let p = pixel(x, y);
            for v in [p.r as f32, p.g as f32, p.b as f32] {
                row.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Streams a grayscale PFM.
pub fn write_pfm_gray(
    w: &mut impl Write,
    width: usize,
    height: usize,
    value: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    write!(w, "Pf\n{width} {height}\n-1.0\n")?;
    let mut row = Vec::with_capacity(width * 4);
    for y in (0..height).rev() {
        row.clear();
        for x in 0..width {
            row.extend_from_slice(&(value(x, y) as f32).to_le_bytes());
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Reads a PFM; returns (width, height, channels, top-to-bottom row-major data).
fn read_pfm_raw(path: &Path) -> Result<(usize, usize, usize, Vec<f32>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let magic = read_token(&mut r)?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Format(format!("not a PFM file (magic {other:?})"))),
    };
    let width: usize = read_token(&mut r)?
        .parse()
        .map_err(|_| Error::Format("bad PFM width".into()))?;
    let height: usize = read_token(&mut r)?
        .parse()
        .map_err(|_| Error::Format("bad PFM height".into()))?;
    let scale: f64 = read_token(&mut r)?
        .parse()
        .map_err(|_| Error::Format("bad PFM scale".into()))?;
    if width == 0 || height == 0 || width * height > 1 << 28 {
        return Err(Error::Format("unreasonable PFM dimensions".into()));
    }
    let little_endian = scale < 0.0;
    let mag = scale.abs();

    let count = width * height * channels;
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    let mut data = vec![0f32; count];
    // PFM stores rows bottom-to-top; flip to top-to-bottom here.
    for y_file in 0..height {
        let y = height - 1 - y_file;
        for i in 0..width * channels {
            let src = (y_file * width * channels + i) * 4;
            let quad: [u8; 4] = bytes[src..src + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(quad)
            } else {
                f32::from_be_bytes(quad)
            };
            data[y * width * channels + i] = v * mag as f32;
        }
    }
    Ok((width, height, channels, data))
}

/// Reads whitespace-delimited header tokens (PFM headers are ASCII).
fn read_token(r: &mut impl BufRead) -> Result<String> {
    let mut token = String::new();
    loop {
        let mut byte = [0u8; 1];
        match r.read_exact(&mut byte) {
            Ok(()) => {}
            Err(e) => return Err(Error::Io(e)),
        }
        let c = byte[0] as char;
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(c);
        if token.len() > 64 {
            return Err(Error::Format("oversized PFM header token".into()));
        }
    }
}

/// Image difference metrics in linear space.
#[derive(Debug, Clone, Copy)]
pub struct ImageMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub rmse_per_channel: [f64; 3],
    pub mae_per_channel: [f64; 3],
}

impl std::fmt::Display for ImageMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RMSE {:.6} (r {:.6} g {:.6} b {:.6}) | MAE {:.6} (r {:.6} g {:.6} b {:.6})",
            self.rmse,
            self.rmse_per_channel[0],
            self.rmse_per_channel[1],
            self.rmse_per_channel[2],
            self.mae,
            self.mae_per_channel[0],
            self.mae_per_channel[1],
            self.mae_per_channel[2],
        )
    }
}

pub fn compare_images(a: &FrameBuffer, b: &FrameBuffer) -> Result<ImageMetrics> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::invalid(format!(
            "image size mismatch: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let n = (a.width * a.height) as f64;
    let mut sum_sq = [0.0f64; 3];
    let mut sum_abs = [0.0f64; 3];
    for (pa, pb) in a.pixels.iter().zip(b.pixels.iter()) {
        for c in 0..3 {
            let d = pa.channel(c) - pb.channel(c);
            sum_sq[c] += d * d;
            sum_abs[c] += d.abs();
        }
    }
    let rmse_per_channel = [
        (sum_sq[0] / n).sqrt(),
        (sum_sq[1] / n).sqrt(),
        (sum_sq[2] / n).sqrt(),
    ];
    let mae_per_channel = [sum_abs[0] / n, sum_abs[1] / n, sum_abs[2] / n];
    let rmse = ((sum_sq[0] + sum_sq[1] + sum_sq[2]) / (3.0 * n)).sqrt();
    let mae = (sum_abs[0] + sum_abs[1] + sum_abs[2]) / (3.0 * n);
    Ok(ImageMetrics {
        rmse,
        mae,
        rmse_per_channel,
        mae_per_channel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_roundtrip_color() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pfm");
        let mut fb = FrameBuffer::new(7, 5);
        for y in 0..5 {
            for x in 0..7 {
                let v = (y * 7 + x) as f64;
                fb.set_pixel(x, y, Rgb::new(v, v * 0.5, -v), 1.0);
            }
        }
        fb.write_pfm(&path).unwrap();
        let back = FrameBuffer::read_pfm(&path).unwrap();
        assert_eq!(back.width(), 7);
        assert_eq!(back.height(), 5);
        for y in 0..5 {
            for x in 0..7 {
                let a = fb.pixel(x, y);
                let b = back.pixel(x, y);
                assert!((a.r - b.r).abs() < 1e-6 && (a.g - b.g).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identical_images_have_zero_rmse() {
        let fb = FrameBuffer::new(4, 4);
        let m = compare_images(&fb, &fb).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
    }

    #[test]
    fn constant_offset_has_exact_mae() {
        let a = FrameBuffer::new(8, 8);
        let mut b = FrameBuffer::new(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                b.set_pixel(x, y, Rgb::splat(0.1), 1.0);
            }
        }
        let m = compare_images(&a, &b).unwrap();
        assert!((m.mae - 0.1).abs() < 1e-12);
        assert!((m.rmse - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rmse_dominates_mae() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(5);
        let mut a = FrameBuffer::new(16, 16);
        let mut b = FrameBuffer::new(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                a.set_pixel(x, y, Rgb::splat(rng.random()), 1.0);
                b.set_pixel(x, y, Rgb::splat(rng.random()), 1.0);
            }
        }
        let m = compare_images(&a, &b).unwrap();
        assert!(m.rmse >= m.mae && m.mae >= 0.0);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let a = FrameBuffer::new(4, 4);
        let b = FrameBuffer::new(5, 4);
        assert!(compare_images(&a, &b).is_err());
    }
}
