//! Analytic ellipse phantoms rasterized at pixel centers.
//!
//! The image covers `[-1, 1]^2`. Pixel `(row, col)` has its center at
//! `x = -1 + (col + 0.5) * 2/n`, `y = 1 - (row + 0.5) * 2/n`, so row 0 is the
//! top of the image and `y` points up. Ellipse rotation is counter-clockwise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::image::Image;
use crate::scalar::Real;

const SHEPP_LOGAN_ORIGINAL: &str = include_str!("../data/shepp_logan.toml");
const SHEPP_LOGAN_MODIFIED: &str = include_str!("../data/shepp_logan_modified.toml");

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseSpec {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_axis_a: f64,
    pub semi_axis_b: f64,
    /// Radians, counter-clockwise.
    pub rotation: f64,
    pub additive_intensity: f64,
}

impl EllipseSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.center_x,
            self.center_y,
            self.semi_axis_a,
            self.semi_axis_b,
            self.rotation,
            self.additive_intensity,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return invalid("ellipse parameters must be finite");
        }
        if self.semi_axis_a <= 0.0 || self.semi_axis_b <= 0.0 {
            return invalid("ellipse semi-axes must be strictly positive");
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.rotation.sin_cos();
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let a = self.semi_axis_a;
        let b = self.semi_axis_b;
        (u * u) / (a * a) + (v * v) / (b * b) <= 1.0
    }
}

/// Which intensity table to use for Shepp-Logan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SheppLoganVariant {
    /// Original 1974 intensities (skull 2.0, brain 1.02 after overlap).
    Original,
    /// High-contrast intensities with interior ellipses clearly visible.
    #[default]
    Modified,
}

/// On-disk ellipse record. Angles are stored in degrees.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct EllipseRecord {
    center_x: f64,
    center_y: f64,
    a: f64,
    b: f64,
    #[serde(default)]
    theta_deg: f64,
    intensity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PhantomFile {
    ellipse: Vec<EllipseRecord>,
}

/// Parses a phantom description: a TOML document with one `[[ellipse]]`
/// table per ellipse, keys `center_x`, `center_y`, `a`, `b`, `theta_deg`, `intensity`.
pub fn parse_phantom_spec(text: &str) -> Result<Vec<EllipseSpec>> {
    let file: PhantomFile =
        toml::from_str(text).map_err(|e| Error::Format(format!("phantom spec: {e}")))?;
    let spec: Vec<EllipseSpec> = file
        .ellipse
        .into_iter()
        .map(|r| EllipseSpec {
            center_x: r.center_x,
            center_y: r.center_y,
            semi_axis_a: r.a,
            semi_axis_b: r.b,
            rotation: r.theta_deg.to_radians(),
            additive_intensity: r.intensity,
        })
        .collect();
    for e in &spec {
        e.validate()?;
    }
    Ok(spec)
}

pub fn load_phantom_spec(path: impl AsRef<Path>) -> Result<Vec<EllipseSpec>> {
    parse_phantom_spec(&std::fs::read_to_string(path)?)
}

pub fn format_phantom_spec(spec: &[EllipseSpec]) -> String {
    let file = PhantomFile {
        ellipse: spec
            .iter()
            .map(|e| EllipseRecord {
                center_x: e.center_x,
                center_y: e.center_y,
                a: e.semi_axis_a,
                b: e.semi_axis_b,
                theta_deg: e.rotation.to_degrees(),
                intensity: e.additive_intensity,
            })
            .collect(),
    };
    toml::to_string(&file).expect("phantom spec serializes")
}

/// The canonical 10-ellipse Shepp-Logan table.
pub fn shepp_logan_table(variant: SheppLoganVariant) -> Vec<EllipseSpec> {
    let text = match variant {
        SheppLoganVariant::Original => SHEPP_LOGAN_ORIGINAL,
        SheppLoganVariant::Modified => SHEPP_LOGAN_MODIFIED,
    };
    parse_phantom_spec(text).expect("bundled Shepp-Logan table is valid")
}

#[inline]
pub fn pixel_center(n: usize, row: usize, col: usize) -> (f64, f64) {
    let h = 2.0 / n as f64;
    (-1.0 + (col as f64 + 0.5) * h, 1.0 - (row as f64 + 0.5) * h)
}

/// Rasterizes an additive ellipse phantom: each pixel takes the sum of the
/// intensities of the ellipses containing its center.
pub fn ellipse_phantom<T: Real>(spec: &[EllipseSpec], n: usize) -> Result<Image<T>> {
    if n == 0 {
        return invalid("phantom side length must be at least 1");
    }
    if spec.is_empty() {
        return invalid("phantom spec must contain at least one ellipse");
    }
    for e in spec {
        e.validate()?;
    }
    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (x, y) = pixel_center(n, row, col);
            let v = spec
                .iter()
                .filter(|e| e.contains(x, y))
                .fold(0.0, |acc, e| acc + e.additive_intensity);
            data.push(T::lit(v));
        }
    }
    Image::from_vec(n, data)
}

/// Shepp-Logan phantom in the requested variant.
pub fn shepp_logan_variant<T: Real>(n: usize, variant: SheppLoganVariant) -> Result<Image<T>> {
    ellipse_phantom(&shepp_logan_table(variant), n)
}

/// Shepp-Logan phantom with the default (modified) intensities.
pub fn shepp_logan<T: Real>(n: usize) -> Result<Image<T>> {
    shepp_logan_variant(n, SheppLoganVariant::default())
}
