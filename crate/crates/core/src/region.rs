//! Regions of the spectral plane and closed contours around them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Rect {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
}

impl Region {
    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidContour(format!("radius {radius}")));
        }
        Ok(Region::Disk {
            center: [center.re, center.im],
            radius,
        })
    }

    pub fn rect(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max)
            || ![re_min, re_max, im_min, im_max]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::InvalidContour(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Region::Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Disk { center, radius } => {
                (z - Complex64::new(center[0], center[1])).norm() <= radius
            }
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => z.re >= re_min && z.re <= re_max && z.im >= im_min && z.im <= im_max,
        }
    }

    pub fn center(&self) -> Complex64 {
        match *self {
            Region::Disk { center, .. } => Complex64::new(center[0], center[1]),
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => Complex64::new(0.5 * (re_min + re_max), 0.5 * (im_min + im_max)),
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. } => 2.0 * radius,
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => (re_max - re_min).hypot(im_max - im_min),
        }
    }

    /// Counterclockwise boundary point at parameter `t` in `[0, 1)`.
    pub fn boundary_point(&self, t: f64) -> Complex64 {
        match *self {
            Region::Disk { center, radius } => {
                Complex64::new(center[0], center[1]) + Complex64::from_polar(radius, 2.0 * PI * t)
            }
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let w = re_max - re_min;
                let h = im_max - im_min;
                let mut s = t.rem_euclid(1.0) * 2.0 * (w + h);
                if s < w {
                    return Complex64::new(re_min + s, im_min);
                }
                s -= w;
                if s < h {
                    return Complex64::new(re_max, im_min + s);
                }
                s -= h;
                if s < w {
                    return Complex64::new(re_max - s, im_max);
                }
                s -= w;
                Complex64::new(re_min, im_max - s)
            }
        }
    }

    /// Rectangle grown (or shrunk, for negative `delta`) by `delta` on every side.
    pub fn inflate(&self, delta: f64) -> Result<Self> {
        match *self {
            Region::Disk { center, radius } => {
                Region::disk(Complex64::new(center[0], center[1]), radius + delta)
            }
            Region::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => Region::rect(
                re_min - delta,
                re_max + delta,
                im_min - delta,
                im_max + delta,
            ),
        }
    }
}

/// A region boundary traversed counterclockwise with an initial sample count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contour {
    pub region: Region,
    pub samples: usize,
}

pub const MIN_CONTOUR_SAMPLES: usize = 64;

impl Contour {
    pub fn new(region: Region, samples: usize) -> Result<Self> {
        if samples < MIN_CONTOUR_SAMPLES || !samples.is_multiple_of(2) {
            return Err(Error::InvalidContour(format!(
                "{samples} samples (need an even count >= {MIN_CONTOUR_SAMPLES})"
            )));
        }
        Ok(Contour { region, samples })
    }

    pub fn circle(center: Complex64, radius: f64, samples: usize) -> Result<Self> {
        Self::new(Region::disk(center, radius)?, samples)
    }

    pub fn rect(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        samples: usize,
    ) -> Result<Self> {
        Self::new(Region::rect(re_min, re_max, im_min, im_max)?, samples)
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.region.boundary_point(t)
    }
}
