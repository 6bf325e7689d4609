//! Equiangular fan-beam filtered backprojection.
//!
//! 1. Each projection is weighted by `D cos(gamma)`.
//! 2. It is convolved with the fan-beam kernel
//!    `g(n) = 1/2 (n a / sin(n a))^2 k(n) / a^2`, where `a` is the bin
//!    spacing and `k` the band-limited ramp `k(0) = 1/4`,
//!    `k(odd n) = -1/(pi n)^2`, optionally apodized by a Hann window in
//!    frequency.
//! 3. The filtered views are backprojected with weight `1/L^2` (`L` the
//!    source-to-pixel distance), linearly interpolating between bins, and the
//!    sum is scaled by the view spacing.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::FanBeamGeometry;
use crate::grid::{Image2D, Sinogram};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ramp,
    Hanning,
}

/// Reconstruction filter: a ramp, optionally Hann-apodized, cut off at a
/// fraction of the Nyquist frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconFilter {
    pub kind: FilterKind,
    pub cutoff: f64,
}

impl Default for ReconFilter {
    fn default() -> Self {
        ReconFilter {
            kind: FilterKind::Hanning,
            cutoff: 1.0,
        }
    }
}

impl ReconFilter {
    pub fn ramp() -> Self {
        ReconFilter {
            kind: FilterKind::Ramp,
            cutoff: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "filter cutoff must lie in (0, 1], got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Frequency weight at `nu`, the fraction of Nyquist in `[0, 1]`.
    fn window(&self, nu: f64) -> f64 {
        if nu > self.cutoff {
            return 0.0;
        }
        match self.kind {
            FilterKind::Ramp => 1.0,
            FilterKind::Hanning => 0.5 * (1.0 + (PI * nu / self.cutoff).cos()),
        }
    }
}

fn padded_len(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

/// Spatial fan-beam kernel for lags `-(n-1) ..= n-1`, stored at `lag + n - 1`.
pub fn fan_kernel(geom: &FanBeamGeometry, filt: &ReconFilter) -> Result<Vec<f64>> {
    filt.validate()?;
    let n = geom.n_bins();
    let alpha = geom.bin_spacing();
    let len = padded_len(n);

    // Band-limited ramp on a circular grid of `len` samples.
    let mut spectrum: Vec<Complex64> = (0..len)
        .map(|k| {
            let lag = if k <= len / 2 { k as i64 } else { k as i64 - len as i64 };
            let v = match lag {
                0 => 0.25,
                l if l % 2 != 0 => -1.0 / (PI * PI * (l * l) as f64),
                _ => 0.0,
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut spectrum);
    for (k, s) in spectrum.iter_mut().enumerate() {
        let nu = 2.0 * k.min(len - k) as f64 / len as f64;
        *s *= filt.window(nu);
    }
    planner.plan_fft_inverse(len).process(&mut spectrum);
    let scale = 1.0 / len as f64;

    let kernel = (0..2 * n - 1)
        .map(|idx| {
            let lag = idx as i64 - (n as i64 - 1);
            let k = spectrum[lag.rem_euclid(len as i64) as usize].re * scale;
            let fan = if lag == 0 {
                1.0
            } else {
                let g = lag as f64 * alpha;
                (g / g.sin()).powi(2)
            };
            0.5 * fan * k / (alpha * alpha)
        })
        .collect();
    Ok(kernel)
}

fn weighted_projection(sino: &Sinogram, geom: &FanBeamGeometry, view: usize) -> Vec<f64> {
    let d = geom.source_to_center();
    (0..geom.n_bins())
        .map(|b| sino.get(b, view) * d * geom.bin_angle(b).cos())
        .collect()
}

/// Reference O(n^2) convolution of one (already weighted) projection.
pub fn filter_projection_direct(projection: &[f64], kernel: &[f64], bin_spacing: f64) -> Vec<f64> {
    let n = projection.len();
    assert_eq!(kernel.len(), 2 * n - 1);
    (0..n)
        .map(|m| {
            let acc: f64 = projection
                .iter()
                .enumerate()
                .map(|(b, &p)| p * kernel[m + n - 1 - b])
                .sum();
            acc * bin_spacing
        })
        .collect()
}

/// Precomputed spectrum of the fan kernel for FFT convolution.
struct SpectralFilter {
    n: usize,
    len: usize,
    kernel_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    bin_spacing: f64,
}

impl SpectralFilter {
    fn new(kernel: &[f64], bin_spacing: f64) -> Self {
        let n = kernel.len().div_ceil(2);
        let len = padded_len(n);
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut kernel_spectrum = vec![Complex64::new(0.0, 0.0); len];
        for (idx, &k) in kernel.iter().enumerate() {
            let lag = idx as i64 - (n as i64 - 1);
            kernel_spectrum[lag.rem_euclid(len as i64) as usize] = Complex64::new(k, 0.0);
        }
        forward.process(&mut kernel_spectrum);
        SpectralFilter {
            n,
            len,
            kernel_spectrum,
            forward,
            inverse,
            bin_spacing,
        }
    }

    fn apply(&self, projection: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &p) in buf.iter_mut().zip(projection) {
            b.re = p;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = self.bin_spacing / self.len as f64;
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }
}

/// FFT convolution of one (already weighted) projection with `kernel`.
pub fn filter_projection_fft(projection: &[f64], kernel: &[f64], bin_spacing: f64) -> Vec<f64> {
    assert_eq!(kernel.len(), 2 * projection.len() - 1);
    SpectralFilter::new(kernel, bin_spacing).apply(projection)
}

/// Reconstructs an `n_out x n_out` image over `[-1, 1]^2` from a fan-beam
/// sinogram of shape `(n_bins, n_angles)`.
pub fn fbp_fan(sino: &Sinogram, geom: &FanBeamGeometry, filt: &ReconFilter, n_out: usize) -> Result<Image2D> {
    if sino.shape() != geom.sinogram_shape() {
        return Err(Error::ShapeMismatch {
            what: "sinogram vs fan-beam geometry",
            expected: geom.sinogram_shape(),
            found: sino.shape(),
        });
    }
    if n_out == 0 {
        return Err(Error::InvalidDimensions { rows: 0, cols: 0 });
    }
    let kernel = fan_kernel(geom, filt)?;
    let spectral = SpectralFilter::new(&kernel, geom.bin_spacing());
    let n_bins = geom.n_bins();
    let n_angles = geom.n_angles();

    // Filtered views, view-major.
    let filtered: Vec<Vec<f64>> = (0..n_angles)
        .into_par_iter()
        .map(|a| spectral.apply(&weighted_projection(sino, geom, a)))
        .collect();

    let views: Vec<(f64, f64)> = (0..n_angles).map(|a| geom.view_angle(a).sin_cos()).collect();
    let d = geom.source_to_center();
    let inv_spacing = 1.0 / geom.bin_spacing();
    let center_bin = (n_bins as f64 - 1.0) / 2.0;
    let h = 2.0 / n_out as f64;
    let d_beta = geom.angle_spacing();

    let mut out = vec![0.0; n_out * n_out];
    out.par_chunks_mut(n_out).enumerate().for_each(|(i, row)| {
        let y = 1.0 - (i as f64 + 0.5) * h;
        for (j, px) in row.iter_mut().enumerate() {
            let x = -1.0 + (j as f64 + 0.5) * h;
            let mut acc = 0.0;
            for (view, &(sb, cb)) in filtered.iter().zip(&views) {
                // Source at D(cb, sb); central ray direction c = -(cb, sb).
                let vx = x - d * cb;
                let vy = y - d * sb;
                let along = -(cb * vx + sb * vy);
                let across = -cb * vy + sb * vx;
                let gamma = across.atan2(along);
                let pos = gamma * inv_spacing + center_bin;
                if pos < 0.0 || pos > (n_bins - 1) as f64 {
                    continue;
                }
                let k = (pos.floor() as usize).min(n_bins - 2);
                let w = pos - k as f64;
                let val = (1.0 - w) * view[k] + w * view[k + 1];
                acc += val / (vx * vx + vy * vy);
            }
            *px = acc * d_beta;
        }
    });
    Image2D::from_vec(n_out, n_out, out)
}
