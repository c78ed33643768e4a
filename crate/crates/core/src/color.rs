//! Color-space conversions: RGB8 ↔ normalized YCbCr, and RGB8 → CIELAB.

use serde::{Deserialize, Serialize};

use crate::cloud::Rgb8;

/// Luma coefficients of a YCbCr matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YcbcrMatrix {
    #[default]
    Bt709,
    Bt601,
}

impl YcbcrMatrix {
    /// (Kr, Kb).
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            YcbcrMatrix::Bt709 => (0.2126, 0.0722),
            YcbcrMatrix::Bt601 => (0.299, 0.114),
        }
    }
}

/// Full-range YCbCr with every channel in [0,1]; chroma is centered at 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ycbcr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub fn chroma(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

pub fn rgb_to_ycbcr(rgb: Rgb8, matrix: YcbcrMatrix) -> Ycbcr {
    let (kr, kb) = matrix.coefficients();
    let kg = 1.0 - kr - kb;
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let y = kr * r + kg * g + kb * b;
    Ycbcr {
        y,
        cb: (b - y) / (2.0 * (1.0 - kb)) + 0.5,
        cr: (r - y) / (2.0 * (1.0 - kr)) + 0.5,
    }
}

/// Inverse of [`rgb_to_ycbcr`], returning unclamped RGB in [0,1] units.
pub fn ycbcr_to_rgb(c: Ycbcr, matrix: YcbcrMatrix) -> [f64; 3] {
    let (kr, kb) = matrix.coefficients();
    let kg = 1.0 - kr - kb;
    let r = c.y + 2.0 * (1.0 - kr) * (c.cr - 0.5);
    let b = c.y + 2.0 * (1.0 - kb) * (c.cb - 0.5);
    let g = (c.y - kr * r - kb * b) / kg;
    [r, g, b]
}

/// BT.709 luma in [0,1].
pub fn luma(rgb: Rgb8) -> f64 {
    rgb_to_ycbcr(rgb, YcbcrMatrix::Bt709).y
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

// D65 reference white.
const WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

/// sRGB (D65) to CIELAB.
pub fn rgb_to_lab(rgb: Rgb8) -> Lab {
    let [r, g, b] = rgb.map(|c| srgb_to_linear(c as f64 / 255.0));
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let f = |t: f64| {
        const EPS: f64 = 216.0 / 24389.0;
        const KAPPA: f64 = 24389.0 / 27.0;
        if t > EPS {
            t.cbrt()
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x / WHITE[0]), f(y / WHITE[1]), f(z / WHITE[2]));
    Lab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}
