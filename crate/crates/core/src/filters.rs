//! Sinogram denoising estimators.
//!
//! * [`median3x3`]: clipped 3x3 median, the baseline.
//! * [`llmmse_point`]: local LMMSE under the nonstationary mean/variance
//!   model, `p = a*q + b` with `a = (v_q - s2) / v_q` and `b = (1 - a) * mean_q`.
//! * [`llmmse_block`]: the blockwise variant. Each pixel lies in every window
//!   centred within radius `r` of it; averaging the per-window estimates
//!   `a_k*q + b_k` over those windows equals `mean(a)*q + mean(b)`, so the
//!   whole filter costs a handful of box means.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boxstats::{
    box_mean_variance, fill_pair_sums, fill_value_and_square_sums, BoxRadius, BoxWorkspace, WindowCounts,
};
use crate::grid::Image2D;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Radius for both the local statistics and the coefficient averaging.
    pub radius: BoxRadius,
    /// Floor for `v_q` in the gain division.
    pub variance_floor: f64,
    /// Clamp the gain `a` into `[0, 1]`.
    pub clamp_coefficients: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            radius: BoxRadius(1),
            variance_floor: 1e-12,
            clamp_coefficients: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance_floor > 0.0) || !self.variance_floor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "variance_floor must be > 0, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }

    pub fn unclamped(mut self) -> Self {
        self.clamp_coefficients = false;
        self
    }
}

/// Gain and offset maps of the local linear estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMaps {
    pub a: Image2D,
    pub b: Image2D,
}

/// Median of the clipped 3x3 neighbourhood. Border windows with an even
/// number of elements (4 or 6) take the lower of the two middle values.
pub fn median3x3(q: &Image2D) -> Image2D {
    let (rows, cols) = q.shape();
    let mut out = Vec::with_capacity(q.len());
    let mut window = [0.0f64; 9];
    for i in 0..rows {
        let (r0, r1) = (i.saturating_sub(1), (i + 1).min(rows - 1));
        for j in 0..cols {
            let (c0, c1) = (j.saturating_sub(1), (j + 1).min(cols - 1));
            let mut n = 0;
            for s in r0..=r1 {
                for t in c0..=c1 {
                    window[n] = q.get(s, t);
                    n += 1;
                }
            }
            let w = &mut window[..n];
            let k = (n - 1) / 2;
            let (_, m, _) = w.select_nth_unstable_by(k, f64::total_cmp);
            out.push(*m);
        }
    }
    Image2D::from_parts(rows, cols, out)
}

/// Gain `a = 1 - s2 / max(v_q, eps)` (i.e. `(v_q - s2) / v_q`) and offset
/// `b = (1 - a) * mean_q`, with `a` clamped to `[0, 1]` when configured.
pub fn compute_coefficients(q: &Image2D, sigma2: &Image2D, cfg: &FilterConfig) -> Result<CoefficientMaps> {
    cfg.validate()?;
    q.ensure_same_shape(sigma2, "noise variance map")?;
    let (mean, var) = box_mean_variance(q, cfg.radius);
    let mut a = Vec::with_capacity(q.len());
    let mut b = Vec::with_capacity(q.len());
    for ((&v, &s2), &m) in var.data().iter().zip(sigma2.data()).zip(mean.data()) {
        // Written as 1 - s2/v so that s2 == 0 gives a gain of exactly one.
        let mut gain = 1.0 - s2 / v.max(cfg.variance_floor);
        if cfg.clamp_coefficients {
            gain = gain.clamp(0.0, 1.0);
        }
        a.push(gain);
        b.push((1.0 - gain) * m);
    }
    let (rows, cols) = q.shape();
    Ok(CoefficientMaps {
        a: Image2D::from_vec(rows, cols, a)?,
        b: Image2D::from_vec(rows, cols, b)?,
    })
}

fn affine(a: &Image2D, q: &Image2D, b: &Image2D) -> Result<Image2D> {
    let data = a
        .data()
        .iter()
        .zip(q.data())
        .zip(b.data())
        .map(|((a, q), b)| a * q + b)
        .collect();
    Image2D::from_vec(q.rows(), q.cols(), data)
}

/// Pointwise local LMMSE estimate `a*q + b`.
pub fn llmmse_point(q: &Image2D, sigma2: &Image2D, cfg: &FilterConfig) -> Result<Image2D> {
    let c = compute_coefficients(q, sigma2, cfg)?;
    affine(&c.a, q, &c.b)
}

/// Blockwise local LMMSE estimate `mean_r(a)*q + mean_r(b)`.
///
/// Numerically identical to composing [`compute_coefficients`] with
/// [`box_mean`](crate::boxstats::box_mean), but computed in a handful of
/// reused buffers.
pub fn llmmse_block(q: &Image2D, sigma2: &Image2D, cfg: &FilterConfig) -> Result<Image2D> {
    let mut out = Vec::new();
    llmmse_block_into(q, sigma2, cfg, &mut BlockWorkspace::default(), &mut out)?;
    Image2D::from_vec(q.rows(), q.cols(), out)
}

/// Scratch buffers for [`llmmse_block_into`]; they grow to the largest grid
/// seen and are reused afterwards.
#[derive(Debug, Default)]
pub struct BlockWorkspace {
    boxes: BoxWorkspace,
    a: Vec<f64>,
    b: Vec<f64>,
    row: Vec<f64>,
}

/// [`llmmse_block`] into a caller-owned output buffer (row-major, resized to
/// the grid length).
///
/// Two streaming passes: the first turns window statistics of `q` into the
/// coefficient maps, the second averages them and applies the estimate.
pub fn llmmse_block_into(
    q: &Image2D,
    sigma2: &Image2D,
    cfg: &FilterConfig,
    ws: &mut BlockWorkspace,
    out: &mut Vec<f64>,
) -> Result<()> {
    cfg.validate()?;
    q.ensure_same_shape(sigma2, "noise variance map")?;
    let (rows, cols) = q.shape();
    let r = cfg.radius;
    let counts = WindowCounts::new(rows, cols, r);
    let BlockWorkspace { boxes, a, b, row } = ws;
    a.resize(q.len(), 0.0);
    b.resize(q.len(), 0.0);
    out.resize(q.len(), 0.0);
    row.resize(2 * cols, 0.0);

    boxes.stream_window_sums(
        rows,
        2 * cols,
        r,
        |i, dst, line| fill_value_and_square_sums(q.row(i), r, dst, line),
        |i, sums| {
            let (mean, mean_sq) = row.split_at_mut(cols);
            counts.normalize_row(i, &sums[..cols], mean);
            counts.normalize_row(i, &sums[cols..], mean_sq);
            let span = i * cols..(i + 1) * cols;
            let s2 = &sigma2.data()[span.clone()];
            for (j, (ak, bk)) in a[span.clone()].iter_mut().zip(&mut b[span]).enumerate() {
                let m = mean[j];
                let v = (mean_sq[j] - m * m).max(0.0);
                // Written as 1 - s2/v so that s2 == 0 gives a gain of exactly one.
                let mut gain = 1.0 - s2[j] / v.max(cfg.variance_floor);
                if cfg.clamp_coefficients {
                    gain = gain.clamp(0.0, 1.0);
                }
                *ak = gain;
                *bk = (1.0 - gain) * m;
            }
        },
    );

    let (a, b) = (&*a, &*b);
    boxes.stream_window_sums(
        rows,
        2 * cols,
        r,
        |i, dst, _| fill_pair_sums(&a[i * cols..(i + 1) * cols], &b[i * cols..(i + 1) * cols], r, dst),
        |i, sums| {
            let (a_bar, b_bar) = row.split_at_mut(cols);
            counts.normalize_row(i, &sums[..cols], a_bar);
            counts.normalize_row(i, &sums[cols..], b_bar);
            let span = i * cols..(i + 1) * cols;
            for ((o, &qk), (ak, bk)) in out[span.clone()].iter_mut().zip(&q.data()[span]).zip(a_bar.iter().zip(b_bar.iter())) {
                *o = ak * qk + bk;
            }
        },
    );

    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: k / cols,
            col: k % cols,
        });
    }
    Ok(())
}

/// Sinogram filtering methods selectable from configs and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "med")]
    Median,
    #[serde(rename = "llmmse")]
    Llmmse,
    /// Pointwise LLMMSE with the gain left unclamped.
    #[serde(rename = "llmmse-raw")]
    LlmmseRaw,
    #[serde(rename = "llmmse-b")]
    LlmmseBlock,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::None,
        Method::Median,
        Method::Llmmse,
        Method::LlmmseRaw,
        Method::LlmmseBlock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Median => "med",
            Method::Llmmse => "llmmse",
            Method::LlmmseRaw => "llmmse-raw",
            Method::LlmmseBlock => "llmmse-b",
        }
    }

    /// Whether the method consumes a noise variance map.
    pub fn needs_noise_variance(self) -> bool {
        matches!(self, Method::Llmmse | Method::LlmmseRaw | Method::LlmmseBlock)
    }

    /// Applies the method. `sigma2` is required by the LLMMSE variants.
    pub fn apply(self, q: &Image2D, sigma2: Option<&Image2D>, cfg: &FilterConfig) -> Result<Image2D> {
        let need = || {
            sigma2.ok_or_else(|| {
                Error::InvalidParameter(format!("method {} needs a noise variance map", self.name()))
            })
        };
        match self {
            Method::None => Ok(q.clone()),
            Method::Median => Ok(median3x3(q)),
            Method::Llmmse => llmmse_point(q, need()?, cfg),
            Method::LlmmseRaw => llmmse_point(q, need()?, &cfg.clone().unclamped()),
            Method::LlmmseBlock => llmmse_block(q, need()?, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}
