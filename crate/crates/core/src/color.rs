//! Linear RGB triple used for radiance, absorption and throughput.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb {
        r: 0.0,
        g: 0.0,
        b: 0.0,
    };
    pub const WHITE: Rgb = Rgb {
        r: 1.0,
        g: 1.0,
        b: 1.0,
    };

    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb { r, g, b }
    }

    pub fn splat(v: f64) -> Self {
        Rgb { r: v, g: v, b: v }
    }

    /// Componentwise e^{-self}, used for absorption factors.
    pub fn exp_neg(&self) -> Rgb {
        Rgb::new((-self.r).exp(), (-self.g).exp(), (-self.b).exp())
    }

    pub fn max_component(&self) -> f64 {
        self.r.max(self.g).max(self.b)
    }

    pub fn min_component(&self) -> f64 {
        self.r.min(self.g).min(self.b)
    }

    pub fn luminance(&self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }

    pub fn mean(&self) -> f64 {
        (self.r + self.g + self.b) / 3.0
    }

    pub fn clamped_non_negative(&self) -> Rgb {
        Rgb::new(self.r.max(0.0), self.g.max(0.0), self.b.max(0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn channel(&self, i: usize) -> f64 {
        match i {
            0 => self.r,
            1 => self.g,
            _ => self.b,
        }
    }

    pub fn from_channels(f: impl Fn(usize) -> f64) -> Rgb {
        Rgb::new(f(0), f(1), f(2))
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        Rgb::new(self.r + o.r, self.g + o.g, self.b + o.b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        Rgb::new(self.r - o.r, self.g - o.g, self.b - o.b)
    }
}

impl Mul for Rgb {
    type Output = Rgb;
    fn mul(self, o: Rgb) -> Rgb {
        Rgb::new(self.r * o.r, self.g * o.g, self.b * o.b)
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }
}

impl MulAssign<f64> for Rgb {
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Mul<Rgb> for f64 {
    type Output = Rgb;
    fn mul(self, c: Rgb) -> Rgb {
        c * self
    }
}

impl Div<f64> for Rgb {
    type Output = Rgb;
    fn div(self, s: f64) -> Rgb {
        Rgb::new(self.r / s, self.g / s, self.b / s)
    }
}
