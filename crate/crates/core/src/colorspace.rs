//! CIELAB geometry, sRGB (D65) conversion, gamut membership and the
//! CIEDE2000 color difference.
//!
//! All math is done in `f64`. The display gamut is sRGB with a D65 white
//! point; a Lab color is "in gamut" when its unclamped gamma-encoded sRGB
//! channels all lie in `[0, 1]` up to [`GAMUT_TOLERANCE`].

#![allow(clippy::many_single_char_names)]
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel slack allowed by [`in_gamut`].
pub const GAMUT_TOLERANCE: f64 = 1e-6;

// D65 reference white, taken as the matrix image of RGB (1, 1, 1) so that
// sRGB white maps to exactly L* = 100.
const WHITE_X: f64 = RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2];
const WHITE_Y: f64 = RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2];
const WHITE_Z: f64 = RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2];

/// Linear sRGB to XYZ (D65).
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

fn xyz_to_rgb_matrix() -> &'static [[f64; 3]; 3] {
    static INV: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    INV.get_or_init(|| invert3(&RGB_TO_XYZ))
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
        ],
    ]
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// A point in CIELAB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl From<[f64; 3]> for LabColor {
    fn from(v: [f64; 3]) -> Self {
        LabColor::new(v[0], v[1], v[2])
    }
}

impl From<LabColor> for [f64; 3] {
    fn from(c: LabColor) -> Self {
        [c.l, c.a, c.b]
    }
}

impl LabColor {
    pub const WHITE: LabColor = LabColor { l: 100.0, a: 0.0, b: 0.0 };
    pub const BLACK: LabColor = LabColor { l: 0.0, a: 0.0, b: 0.0 };

    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        LabColor { l, a, b }
    }

    /// Builds a color from lightness, chroma and hue angle in radians.
    pub fn from_lch(l: f64, chroma: f64, hue_rad: f64) -> Self {
        LabColor::new(l, chroma * hue_rad.cos(), chroma * hue_rad.sin())
    }

    pub fn chroma(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// Hue angle in degrees, in `[0, 360)`. Neutral colors report 0.
    pub fn hue_angle(&self) -> f64 {
        let h = self.b.atan2(self.a).to_degrees();
        let h = if h < 0.0 { h + 360.0 } else { h };
        if h >= 360.0 {
            0.0
        } else {
            h
        }
    }

    pub fn hue_radians(&self) -> f64 {
        self.b.atan2(self.a)
    }

    /// Euclidean distance in Lab (CIE76 ΔE).
    pub fn distance(&self, other: &LabColor) -> f64 {
        let dl = self.l - other.l;
        let da = self.a - other.a;
        let db = self.b - other.b;
        (dl * dl + da * da + db * db).sqrt()
    }

    pub fn lerp(&self, other: &LabColor, t: f64) -> LabColor {
        LabColor::new(
            self.l + (other.l - self.l) * t,
            self.a + (other.a - self.a) * t,
            self.b + (other.b - self.b) * t,
        )
    }

    pub fn to_array(self) -> [f64; 3] {
        self.into()
    }

    /// Parses `#RRGGBB` (the `#` is optional, case-insensitive).
    pub fn from_hex(s: &str) -> Result<LabColor> {
        Ok(srgb_to_lab(RgbColor::from_hex(s)?))
    }

    /// Gamut-clips, converts to sRGB and formats as `#RRGGBB`.
    pub fn to_hex(&self) -> String {
        match lab_to_srgb(gamut_clip(*self)) {
            SrgbConversion::InGamut(rgb) => rgb.to_hex(),
            SrgbConversion::OutOfGamut { clamped, .. } => clamped.to_hex(),
        }
    }
}

impl fmt::Display for LabColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lab({:.3}, {:.3}, {:.3})", self.l, self.a, self.b)
    }
}

/// Gamma-encoded sRGB with channels in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RgbColor {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl RgbColor {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        RgbColor { r, g, b }
    }

    pub fn from_u8(r: u8, g: u8, b: u8) -> Self {
        RgbColor::new(r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0)
    }

    pub fn to_u8(&self) -> [u8; 3] {
        let q = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q(self.r), q(self.g), q(self.b)]
    }

    pub fn from_hex(s: &str) -> Result<RgbColor> {
        let err = |reason| Error::ColorParse { input: s.to_string(), reason };
        let digits = s.trim();
        let digits = digits.strip_prefix('#').unwrap_or(digits);
        if digits.len() != 6 || !digits.is_ascii() {
            return Err(err("expected #RRGGBB"));
        }
        let channel = |i: usize| {
            u8::from_str_radix(&digits[i..i + 2], 16).map_err(|_| err("non-hex digit"))
        };
        Ok(RgbColor::from_u8(channel(0)?, channel(2)?, channel(4)?))
    }

    pub fn to_hex(&self) -> String {
        let [r, g, b] = self.to_u8();
        format!("#{r:02X}{g:02X}{b:02X}")
    }
}

/// Outcome of converting Lab to sRGB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SrgbConversion {
    InGamut(RgbColor),
    /// At least one channel left `[0, 1]`; `raw` holds the unclamped values.
    OutOfGamut { clamped: RgbColor, raw: [f64; 3] },
}

impl SrgbConversion {
    pub fn is_in_gamut(&self) -> bool {
        matches!(self, SrgbConversion::InGamut(_))
    }

    pub fn color(&self) -> RgbColor {
        match *self {
            SrgbConversion::InGamut(c) => c,
            SrgbConversion::OutOfGamut { clamped, .. } => clamped,
        }
    }
}

const DELTA: f64 = 6.0 / 29.0;

fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(u: f64) -> f64 {
    if u > DELTA {
        u * u * u
    } else {
        3.0 * DELTA * DELTA * (u - 4.0 / 29.0)
    }
}

fn gamma_encode(c: f64) -> f64 {
    let m = c.abs();
    let e = if m <= 0.0031308 { 12.92 * m } else { 1.055 * m.powf(1.0 / 2.4) - 0.055 };
    e.copysign(c)
}

fn gamma_decode(c: f64) -> f64 {
    let m = c.abs();
    let d = if m <= 0.04045 { m / 12.92 } else { ((m + 0.055) / 1.055).powf(2.4) };
    d.copysign(c)
}

fn lab_to_raw_srgb(c: LabColor) -> [f64; 3] {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;
    let xyz = [WHITE_X * lab_f_inv(fx), WHITE_Y * lab_f_inv(fy), WHITE_Z * lab_f_inv(fz)];
    let lin = mul3(xyz_to_rgb_matrix(), xyz);
    [gamma_encode(lin[0]), gamma_encode(lin[1]), gamma_encode(lin[2])]
}

/// Converts to sRGB via XYZ, signalling when the color is not displayable.
pub fn lab_to_srgb(c: LabColor) -> SrgbConversion {
    let raw = lab_to_raw_srgb(c);
    let inside = raw
        .iter()
        .all(|&v| (-GAMUT_TOLERANCE..=1.0 + GAMUT_TOLERANCE).contains(&v));
    let clamped = RgbColor::new(raw[0].clamp(0.0, 1.0), raw[1].clamp(0.0, 1.0), raw[2].clamp(0.0, 1.0));
    if inside {
        SrgbConversion::InGamut(clamped)
    } else {
        SrgbConversion::OutOfGamut { clamped, raw }
    }
}

pub fn srgb_to_lab(c: RgbColor) -> LabColor {
    let lin = [gamma_decode(c.r), gamma_decode(c.g), gamma_decode(c.b)];
    let xyz = mul3(&RGB_TO_XYZ, lin);
    let fx = lab_f(xyz[0] / WHITE_X);
    let fy = lab_f(xyz[1] / WHITE_Y);
    let fz = lab_f(xyz[2] / WHITE_Z);
    LabColor::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

pub fn in_gamut(c: LabColor) -> bool {
    lab_to_srgb(c).is_in_gamut()
}

/// Pulls an out-of-gamut color toward the neutral axis, holding L* and hue
/// fixed. L* outside `[0, 100]` is clamped first since no chroma can fix it.
pub fn gamut_clip(c: LabColor) -> LabColor {
    if in_gamut(c) {
        return c;
    }
    let l = c.l.clamp(0.0, 100.0);
    let hue = c.hue_radians();
    let chroma = c.chroma();
    if chroma == 0.0 || l == 0.0 || l == 100.0 {
        return LabColor::new(l, 0.0, 0.0);
    }
    let (mut lo, mut hi) = (0.0, chroma);
    if in_gamut(LabColor::from_lch(l, chroma, hue)) {
        return LabColor::from_lch(l, chroma, hue);
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if in_gamut(LabColor::from_lch(l, mid, hue)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    LabColor::from_lch(l, lo, hue)
}

/// Largest in-gamut chroma at lightness `l` and hue `hue_rad`.
pub fn max_chroma(l: f64, hue_rad: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if in_gamut(LabColor::from_lch(l, mid, hue_rad)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// CIEDE2000 color difference with unit parametric factors.
pub fn delta_e_2000(x: LabColor, y: LabColor) -> f64 {
    const POW25_7: f64 = 6_103_515_625.0;

    let c1 = x.chroma();
    let c2 = y.chroma();
    let c_bar = 0.5 * (c1 + c2);
    let c_bar7 = c_bar.powi(7);
    let g = 0.5 * (1.0 - (c_bar7 / (c_bar7 + POW25_7)).sqrt());

    let a1p = x.a * (1.0 + g);
    let a2p = y.a * (1.0 + g);
    let c1p = a1p.hypot(x.b);
    let c2p = a2p.hypot(y.b);

    let hue = |b: f64, ap: f64| {
        if b == 0.0 && ap == 0.0 {
            0.0
        } else {
            let h = b.atan2(ap).to_degrees();
            if h < 0.0 {
                h + 360.0
            } else {
                h
            }
        }
    };
    let h1p = hue(x.b, a1p);
    let h2p = hue(y.b, a2p);

    let dlp = y.l - x.l;
    let dcp = c2p - c1p;
    let chroma_product = c1p * c2p;

    let dhp = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let d_big_hp = 2.0 * chroma_product.sqrt() * (dhp.to_radians() / 2.0).sin();

    let l_bar = 0.5 * (x.l + y.l);
    let cp_bar = 0.5 * (c1p + c2p);
    let hp_bar = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        0.5 * (h1p + h2p)
    } else if h1p + h2p < 360.0 {
        0.5 * (h1p + h2p + 360.0)
    } else {
        0.5 * (h1p + h2p - 360.0)
    };

    let t = 1.0 - 0.17 * (hp_bar - 30.0).to_radians().cos()
        + 0.24 * (2.0 * hp_bar).to_radians().cos()
        + 0.32 * (3.0 * hp_bar + 6.0).to_radians().cos()
        - 0.20 * (4.0 * hp_bar - 63.0).to_radians().cos();

    let l50 = (l_bar - 50.0) * (l_bar - 50.0);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * cp_bar;
    let sh = 1.0 + 0.015 * cp_bar * t;

    let d_theta = 30.0 * (-((hp_bar - 275.0) / 25.0).powi(2)).exp();
    let cp_bar7 = cp_bar.powi(7);
    let rc = 2.0 * (cp_bar7 / (cp_bar7 + POW25_7)).sqrt();
    let rt = -(2.0 * d_theta * PI / 180.0).sin() * rc;

    let tl = dlp / sl;
    let tc = dcp / sc;
    let th = d_big_hp / sh;
    (tl * tl + tc * tc + th * th + rt * tc * th).max(0.0).sqrt()
}
