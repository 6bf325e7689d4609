//! Ray-driven forward projection (Joseph's method).
//!
//! The ray is stepped one pixel at a time along its dominant axis. At each
//! column (or row) centre the image is linearly interpolated across the
//! other axis, and the samples are weighted by the ray length per step,
//! `h / |cos|` of the angle to the dominant axis.

use rayon::prelude::*;

use super::FanBeamGeometry;
use crate::grid::{Image2D, Sinogram};
use crate::{Error, Result};

/// Line integral of a square image along the ray `origin + t * dir`, `t > 0`.
///
/// `dir` must be a unit vector. Pixels outside the grid count as zero.
pub fn ray_integral(image: &Image2D, origin: (f64, f64), dir: (f64, f64)) -> f64 {
    let n = image.rows();
    debug_assert_eq!(n, image.cols());
    let h = 2.0 / n as f64;
    let (ox, oy) = origin;
    let (dx, dy) = dir;
    let data = image.data();

    let sample = |major: usize, minor_pos: f64, along_cols: bool| -> f64 {
        let fl = minor_pos.floor();
        let w = minor_pos - fl;
        let k = fl as isize;
        let fetch = |m: isize| -> f64 {
            if m < 0 || m >= n as isize {
                return 0.0;
            }
            let m = m as usize;
            if along_cols {
                data[m * n + major]
            } else {
                data[major * n + m]
            }
        };
        (1.0 - w) * fetch(k) + w * fetch(k + 1)
    };

    let mut sum = 0.0;
    if dx.abs() >= dy.abs() {
        // Step over columns; interpolate between rows.
        for j in 0..n {
            let x = -1.0 + (j as f64 + 0.5) * h;
            let t = (x - ox) / dx;
            if t <= 0.0 {
                continue;
            }
            let y = oy + t * dy;
            let row_pos = (1.0 - y) / h - 0.5;
            if row_pos <= -1.0 || row_pos >= n as f64 {
                continue;
            }
            sum += sample(j, row_pos, true);
        }
        sum * h / dx.abs()
    } else {
        // Step over rows; interpolate between columns.
        for i in 0..n {
            let y = 1.0 - (i as f64 + 0.5) * h;
            let t = (y - oy) / dy;
            if t <= 0.0 {
                continue;
            }
            let x = ox + t * dx;
            let col_pos = (x + 1.0) / h - 0.5;
            if col_pos <= -1.0 || col_pos >= n as f64 {
                continue;
            }
            sum += sample(i, col_pos, false);
        }
        sum * h / dy.abs()
    }
}

/// Fan-beam sinogram of a square image: rows are detector bins, columns views.
pub fn forward_project_fan(image: &Image2D, geom: &FanBeamGeometry) -> Result<Sinogram> {
    if image.rows() != image.cols() {
        return Err(Error::ShapeMismatch {
            what: "forward projection input (must be square)",
            expected: (image.rows(), image.rows()),
            found: image.shape(),
        });
    }
    let (n_bins, n_angles) = geom.sinogram_shape();
    let mut out = vec![0.0; n_bins * n_angles];
    out.par_chunks_mut(n_angles).enumerate().for_each(|(b, row)| {
        for (a, v) in row.iter_mut().enumerate() {
            let (src, dir) = geom.ray(b, a);
            *v = ray_integral(image, src, dir);
        }
    });
    Image2D::from_vec(n_bins, n_angles, out)
}
