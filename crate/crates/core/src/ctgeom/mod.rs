//! Fan-beam CT geometry, analytic phantom, projector and FBP.
//!
//! Coordinates are in units of image half-widths: an `n x n` image covers
//! `[-1, 1] x [-1, 1]`, row 0 at the top (`y = +1`), column 0 on the left.
//! Pixel `(i, j)` has its centre at `x = -1 + (j + 0.5) h`,
//! `y = 1 - (i + 0.5) h` with `h = 2 / n`.
//!
//! The source sits at `D (cos beta, sin beta)` and the detector is an
//! equiangular arc centred on the source-to-origin line. Bin `b` sees the ray
//! rotated counter-clockwise from the central ray by
//! `gamma_b = (b - (n_bins - 1) / 2) * d_gamma`, `d_gamma = 2 * fan_half_angle / n_bins`.

mod fbp;
mod phantom;
mod projector;

pub use fbp::{fan_kernel, fbp_fan, filter_projection_direct, filter_projection_fft, FilterKind, ReconFilter};
pub use phantom::{modified_shepp_logan_table, shepp_logan, shepp_logan_at, Ellipse};
pub use projector::{forward_project_fan, ray_integral};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Radius (half-widths) of the disk the fan must cover: the image's inscribed
/// circle, which holds the phantom.
pub const FIELD_OF_VIEW_RADIUS: f64 = 1.0;
/// Relative margin added to the field of view when sizing the fan.
pub const FAN_MARGIN: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct FanBeamGeometry {
    n_bins: usize,
    n_angles: usize,
    source_to_center: f64,
    fan_half_angle: f64,
}

/// Serialized form; `fan_half_angle` is derived when omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GeometrySpec {
    n_bins: usize,
    n_angles: usize,
    source_to_center: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fan_half_angle: Option<f64>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            n_bins: 888,
            n_angles: 984,
            source_to_center: 2.5,
            fan_half_angle: None,
        }
    }
}

impl TryFrom<GeometrySpec> for FanBeamGeometry {
    type Error = Error;

    fn try_from(s: GeometrySpec) -> Result<Self> {
        match s.fan_half_angle {
            Some(gamma) => FanBeamGeometry::with_fan_angle(s.n_bins, s.n_angles, s.source_to_center, gamma),
            None => FanBeamGeometry::new(s.n_bins, s.n_angles, s.source_to_center),
        }
    }
}

impl From<FanBeamGeometry> for GeometrySpec {
    fn from(g: FanBeamGeometry) -> Self {
        GeometrySpec {
            n_bins: g.n_bins,
            n_angles: g.n_angles,
            source_to_center: g.source_to_center,
            fan_half_angle: Some(g.fan_half_angle),
        }
    }
}

impl Default for FanBeamGeometry {
    /// 888 bins x 984 views, source at 2.5 half-widths.
    fn default() -> Self {
        FanBeamGeometry::new(888, 984, 2.5).expect("default geometry is valid")
    }
}

impl FanBeamGeometry {
    /// Geometry whose fan covers the field of view with a 2% margin.
    pub fn new(n_bins: usize, n_angles: usize, source_to_center: f64) -> Result<Self> {
        let sine = FIELD_OF_VIEW_RADIUS * (1.0 + FAN_MARGIN) / source_to_center;
        if !(source_to_center > FIELD_OF_VIEW_RADIUS * (1.0 + FAN_MARGIN)) {
            return Err(Error::InvalidParameter(format!(
                "source_to_center {source_to_center} leaves no room for the field of view"
            )));
        }
        Self::with_fan_angle(n_bins, n_angles, source_to_center, sine.asin())
    }

    pub fn with_fan_angle(n_bins: usize, n_angles: usize, source_to_center: f64, fan_half_angle: f64) -> Result<Self> {
        if n_bins < 2 || n_angles < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bins and 2 angles, got {n_bins}x{n_angles}"
            )));
        }
        if !(source_to_center > 1.0) || !source_to_center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "source_to_center must exceed 1 half-width, got {source_to_center}"
            )));
        }
        if !(fan_half_angle > 0.0 && fan_half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "fan_half_angle must lie in (0, pi/2), got {fan_half_angle}"
            )));
        }
        Ok(FanBeamGeometry {
            n_bins,
            n_angles,
            source_to_center,
            fan_half_angle,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn source_to_center(&self) -> f64 {
        self.source_to_center
    }

    pub fn fan_half_angle(&self) -> f64 {
        self.fan_half_angle
    }

    /// Angular spacing between detector bins.
    pub fn bin_spacing(&self) -> f64 {
        2.0 * self.fan_half_angle / self.n_bins as f64
    }

    /// Fan angle of bin `b` relative to the central ray.
    pub fn bin_angle(&self, b: usize) -> f64 {
        (b as f64 - (self.n_bins as f64 - 1.0) / 2.0) * self.bin_spacing()
    }

    pub fn angle_spacing(&self) -> f64 {
        std::f64::consts::TAU / self.n_angles as f64
    }

    /// Source rotation angle of view `a`, uniform over `[0, 2 pi)`.
    pub fn view_angle(&self, a: usize) -> f64 {
        a as f64 * self.angle_spacing()
    }

    pub fn source_position(&self, a: usize) -> (f64, f64) {
        let beta = self.view_angle(a);
        (self.source_to_center * beta.cos(), self.source_to_center * beta.sin())
    }

    /// Source position and unit direction of the ray through bin `b` at view `a`.
    pub fn ray(&self, b: usize, a: usize) -> ((f64, f64), (f64, f64)) {
        let beta = self.view_angle(a);
        let (cx, cy) = (-beta.cos(), -beta.sin());
        let (sg, cg) = self.bin_angle(b).sin_cos();
        let dir = (cx * cg - cy * sg, cx * sg + cy * cg);
        (self.source_position(a), dir)
    }

    pub fn sinogram_shape(&self) -> (usize, usize) {
        (self.n_bins, self.n_angles)
    }
}
