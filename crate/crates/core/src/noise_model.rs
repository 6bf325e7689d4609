//! Nonstationary Gaussian noise for low-dose sinograms.
//!
//! A noise-free sinogram value `p` in detector bin `i` is observed as
//!
//! ```text
//! q = p + sqrt(f_i * exp(p / eta)) * u,    u ~ N(0, 1)
//! ```
//!
//! where `f_i` is a per-bin system factor and `eta` an exponential scale.
//! The same relation, evaluated on a local mean of `q`, gives the noise
//! variance map consumed by the LLMMSE filters.

use serde::{Deserialize, Serialize};

use crate::boxstats::{box_mean, BoxRadius};
use crate::grid::{Image2D, Sinogram};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// System factor `f`: one value for all bins, or one per detector bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemFactor {
    Scalar(f64),
    PerBin(Vec<f64>),
}

impl SystemFactor {
    #[inline]
    pub fn for_bin(&self, bin: usize) -> f64 {
        match self {
            SystemFactor::Scalar(f) => *f,
            SystemFactor::PerBin(v) => v[bin],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub f: SystemFactor,
    pub eta: f64,
    /// Multiplier applied to the estimated noise variance (not the std).
    pub variance_scale: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            f: SystemFactor::Scalar(22500.0),
            eta: 22000.0,
            variance_scale: 0.8,
            seed: 20150101,
        }
    }
}

impl NoiseParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks parameter ranges, and the per-bin length against `n_bins`.
    pub fn validate(&self, n_bins: usize) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match &self.f {
            SystemFactor::Scalar(f) if !positive(*f) => {
                return Err(Error::InvalidParameter(format!("f must be > 0, got {f}")))
            }
            SystemFactor::PerBin(v) => {
                if v.len() != n_bins {
                    return Err(Error::InvalidParameter(format!(
                        "per-bin f has {} entries but the sinogram has {n_bins} detector bins",
                        v.len()
                    )));
                }
                if let Some(i) = v.iter().position(|&f| !positive(f)) {
                    return Err(Error::InvalidParameter(format!(
                        "per-bin f[{i}] must be > 0, got {}",
                        v[i]
                    )));
                }
            }
            _ => {}
        }
        if !positive(self.eta) {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if !positive(self.variance_scale) {
            return Err(Error::InvalidParameter(format!(
                "variance_scale must be > 0, got {}",
                self.variance_scale
            )));
        }
        Ok(())
    }
}

/// `f * exp(p / eta)`, or `None` when it is not finite.
#[inline]
pub fn model_variance(p: f64, f: f64, eta: f64) -> Option<f64> {
    let v = f * (p / eta).exp();
    v.is_finite().then_some(v)
}

/// Adds signal-dependent Gaussian noise. Deviate `(i, j)` is drawn from
/// counter `i * cols + j`, so the output depends only on `(p, params)`.
pub fn add_noise(p: &Sinogram, params: &NoiseParams) -> Result<Sinogram> {
    params.validate(p.rows())?;
    let rng = CounterRng::new(params.seed);
    let cols = p.cols();
    let mut out = Vec::with_capacity(p.len());
    for (k, &value) in p.data().iter().enumerate() {
        let (row, col) = (k / cols, k % cols);
        let var = model_variance(value, params.f.for_bin(row), params.eta)
            .ok_or(Error::NumericalOverflow { row, col, value })?;
        out.push(value + var.sqrt() * rng.standard_normal(k as u64));
    }
    Image2D::from_vec(p.rows(), cols, out)
}

/// Per-pixel noise variance `scale * f_i * exp(mean_r(q) / eta)`.
pub fn estimate_noise_variance(q: &Sinogram, params: &NoiseParams, r: BoxRadius) -> Result<Image2D> {
    params.validate(q.rows())?;
    let mean = box_mean(q, r);
    let cols = q.cols();
    let mut out = Vec::with_capacity(q.len());
    for (k, &m) in mean.data().iter().enumerate() {
        let (row, col) = (k / cols, k % cols);
        let var = model_variance(m, params.f.for_bin(row), params.eta)
            .map(|v| params.variance_scale * v)
            .filter(|v| v.is_finite())
            .ok_or(Error::NumericalOverflow { row, col, value: m })?;
        out.push(var);
    }
    Image2D::from_vec(q.rows(), cols, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(rows: usize, cols: usize, v: f64) -> Image2D {
        Image2D::new_filled(rows, cols, v).unwrap()
    }

    fn sample_stats(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
        for v in values {
            n += 1;
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        (mean, s2 / n as f64 - mean * mean, n)
    }

    #[test]
    fn zero_signal_has_std_150() {
        let params = NoiseParams::default();
        assert_eq!(model_variance(0.0, 22500.0, 22000.0).unwrap().sqrt(), 150.0);
        let p = constant(1000, 1000, 0.0);
        let q = add_noise(&p, &params).unwrap();
        let (mean, var, n) = sample_stats(q.data().iter().copied());
        let std = var.sqrt();
        assert!((std / 150.0 - 1.0).abs() < 0.005, "std {std}");
        assert!(mean.abs() < 3.0 * 150.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn vanishing_factor_leaves_signal() {
        let params = NoiseParams {
            f: SystemFactor::Scalar(1e-30),
            ..NoiseParams::default()
        };
        let p = Image2D::from_fn(20, 30, |i, j| (i * 100 + j) as f64).unwrap();
        let q = add_noise(&p, &params).unwrap();
        for (a, b) in p.data().iter().zip(q.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn variance_at_eta_is_f_times_e() {
        let params = NoiseParams::default().with_seed(3);
        let p = constant(1000, 1000, 22000.0);
        let q = add_noise(&p, &params).unwrap();
        let (_, var, _) = sample_stats(q.data().iter().map(|v| v - 22000.0));
        let predicted = 22500.0 * std::f64::consts::E;
        assert!((predicted - 61_161.5).abs() < 1.0);
        assert!((var / predicted - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn deterministic_for_equal_seed() {
        let p = Image2D::from_fn(16, 9, |i, j| (i + j) as f64 * 100.0).unwrap();
        let a = add_noise(&p, &NoiseParams::default()).unwrap();
        let b = add_noise(&p, &NoiseParams::default()).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = add_noise(&p, &NoiseParams::default().with_seed(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn per_bin_factor_scales_rows() {
        let params = NoiseParams {
            f: SystemFactor::PerBin(vec![100.0, 400.0]),
            ..NoiseParams::default()
        };
        let p = constant(2, 200_000, 0.0);
        let q = add_noise(&p, &params).unwrap();
        let (_, v0, _) = sample_stats(q.row(0).iter().copied());
        let (_, v1, _) = sample_stats(q.row(1).iter().copied());
        assert!((v0 / 100.0 - 1.0).abs() < 0.02);
        assert!((v1 / 400.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn per_bin_length_must_match() {
        let params = NoiseParams {
            f: SystemFactor::PerBin(vec![1.0; 3]),
            ..NoiseParams::default()
        };
        assert!(matches!(
            add_noise(&constant(4, 4, 0.0), &params),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let p = constant(2, 2, 0.0);
        for bad in [
            NoiseParams { eta: 0.0, ..NoiseParams::default() },
            NoiseParams { variance_scale: -1.0, ..NoiseParams::default() },
            NoiseParams { f: SystemFactor::Scalar(0.0), ..NoiseParams::default() },
        ] {
            assert!(add_noise(&p, &bad).is_err());
        }
    }

    #[test]
    fn overflow_names_the_index() {
        let mut data = vec![0.0; 6];
        data[4] = 1.0e8;
        let p = Image2D::from_vec(2, 3, data).unwrap();
        match add_noise(&p, &NoiseParams::default()) {
            Err(Error::NumericalOverflow { row: 1, col: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            estimate_noise_variance(&p, &NoiseParams::default(), BoxRadius(0)),
            Err(Error::NumericalOverflow { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn estimate_on_constants() {
        let params = NoiseParams::default();
        let zero = estimate_noise_variance(&constant(5, 5, 0.0), &params, BoxRadius(1)).unwrap();
        assert!(zero.data().iter().all(|&v| v == 18000.0));

        let c = 5000.0;
        let expect = 0.8 * 22500.0 * (c / 22000.0f64).exp();
        let est = estimate_noise_variance(&constant(5, 5, c), &params, BoxRadius(1)).unwrap();
        assert!(est.data().iter().all(|&v| (v - expect).abs() < 1e-9 * expect));
    }

    #[test]
    fn estimate_is_positive_and_monotone() {
        let params = NoiseParams::default();
        let mut prev = 0.0;
        for c in [-30000.0, -1000.0, 0.0, 10.0, 22000.0, 44000.0] {
            let v = estimate_noise_variance(&constant(3, 3, c), &params, BoxRadius(1)).unwrap();
            let x = v.get(1, 1);
            assert!(x > 0.0 && x > prev);
            prev = x;
        }
    }

    #[test]
    fn estimate_matches_composed_oracle() {
        let params = NoiseParams::default();
        let q = Image2D::from_fn(9, 11, |i, j| ((i * 37 + j * 91) % 23) as f64 * 1000.0).unwrap();
        let est = estimate_noise_variance(&q, &params, BoxRadius(1)).unwrap();
        for i in 0..9usize {
            for j in 0..11usize {
                let mut s = 0.0;
                let mut n = 0.0;
                for a in i.saturating_sub(1)..=(i + 1).min(8) {
                    for b in j.saturating_sub(1)..=(j + 1).min(10) {
                        s += q.get(a, b);
                        n += 1.0;
                    }
                }
                let expect = 0.8 * 22500.0 * (s / n / 22000.0).exp();
                assert!((est.get(i, j) - expect).abs() <= 1e-9 * expect);
            }
        }
    }
}
