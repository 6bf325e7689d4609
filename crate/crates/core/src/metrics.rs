//! Evaluation: SNR, line profiles, edge width and filter timing.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::grid::Image2D;
use crate::{Error, Result};

/// Signal-to-noise ratio in dB, or an exact match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Snr {
    Db(f64),
    /// Test image identical to the reference.
    Exact,
}

impl Snr {
    /// The dB value, with `Exact` mapped to positive infinity.
    pub fn db(self) -> f64 {
        match self {
            Snr::Db(v) => v,
            Snr::Exact => f64::INFINITY,
        }
    }
}

/// `10 log10(sum(ref^2) / sum((ref - test)^2))`.
pub fn snr_db(reference: &Image2D, test: &Image2D) -> Result<Snr> {
    reference.ensure_same_shape(test, "snr")?;
    let mut signal = 0.0;
    let mut error = 0.0;
    for (&r, &t) in reference.data().iter().zip(test.data()) {
        signal += r * r;
        error += (r - t) * (r - t);
    }
    if signal == 0.0 {
        return Err(Error::InvalidParameter(
            "SNR reference image is identically zero".into(),
        ));
    }
    if error == 0.0 {
        return Ok(Snr::Exact);
    }
    Ok(Snr::Db(10.0 * (signal / error).log10()))
}

/// Values of column `col` for rows `row_start..=row_end`, all 1-based.
/// Returned indices are the 1-based row numbers.
pub fn extract_profile(image: &Image2D, row_start: usize, row_end: usize, col: usize) -> Result<Vec<(usize, f64)>> {
    let (rows, cols) = image.shape();
    if row_start == 0 || row_start > row_end || row_end > rows || col == 0 || col > cols {
        return Err(Error::IndexOutOfRange(format!(
            "profile rows {row_start}..={row_end}, column {col} on a {rows}x{cols} image (1-based)"
        )));
    }
    Ok((row_start..=row_end)
        .map(|r| (r, image.get(r - 1, col - 1)))
        .collect())
}

/// 10%-90% rise distance across the profile's principal transition.
///
/// The principal transition runs from the global minimum to the global
/// maximum (in profile order). Walking from the first extremum toward the
/// second, the 90% crossing is the first point that reaches
/// `low + 0.9 * range`; the 10% crossing is the last point at or beyond
/// `low + 0.1 * range` before it. Both are linearly interpolated and the
/// distance is returned in index units.
pub fn edge_width(profile: &[(usize, f64)]) -> Result<f64> {
    if profile.len() < 2 {
        return Err(Error::FlatProfile);
    }
    let (imin, low) = profile
        .iter()
        .enumerate()
        .map(|(k, &(_, v))| (k, v))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (imax, high) = profile
        .iter()
        .enumerate()
        .map(|(k, &(_, v))| (k, v))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let range = high - low;
    if !(range > 0.0) {
        return Err(Error::FlatProfile);
    }
    // Normalize so the transition always rises from 0 to 1 along `order`.
    let order: Vec<usize> = if imin < imax {
        (imin..=imax).collect()
    } else {
        (imax..=imin).rev().collect()
    };
    let level = |k: usize| (profile[order[k]].1 - low) / range;
    let pos = |k: usize| profile[order[k]].0 as f64;
    let interp = |k: usize, target: f64| {
        let (a, b) = (level(k), level(k + 1));
        pos(k) + (target - a) / (b - a) * (pos(k + 1) - pos(k))
    };

    let upper = (0..order.len() - 1)
        .find(|&k| level(k + 1) >= 0.9)
        .expect("the maximum reaches the 90% level");
    let t90 = interp(upper, 0.9);
    let lower = (0..=upper)
        .rev()
        .find(|&k| level(k) <= 0.1)
        .expect("the minimum sits below the 10% level");
    let t10 = interp(lower, 0.1);
    Ok((t90 - t10).abs())
}

/// Median wall-clock seconds of `runs` timed calls, after one warm-up call.
pub fn time_filter<T>(runs: usize, mut f: impl FnMut() -> T) -> f64 {
    let runs = runs.max(1);
    std::hint::black_box(f());
    let mut samples: Vec<f64> = (0..runs)
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(f());
            t0.elapsed().as_secs_f64()
        })
        .collect();
    median(&mut samples)
}

pub(crate) fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// One row of the method comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub snr_db: f64,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub profile: Option<Vec<(usize, f64)>>,
}

/// Writes `method,snr_db,runtime_seconds` rows with a header.
pub fn write_report_csv<W: Write>(writer: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))
}

/// Writes a long-format profile table: `method,row,value`.
pub fn write_profiles_csv<W: Write>(writer: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "row", "value"]).map_err(csv_error)?;
    for r in reports {
        for (row, value) in r.profile.iter().flatten() {
            w.write_record([r.method.clone(), row.to_string(), value.to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| Error::io("<profile csv>", e))
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Image2D {
        Image2D::from_fn(rows, cols, f).unwrap()
    }

    #[test]
    fn snr_twenty_db() {
        // ref = 10 everywhere, test = ref + 1: ratio 100.
        let r = Image2D::new_filled(4, 4, 10.0).unwrap();
        let t = Image2D::new_filled(4, 4, 11.0).unwrap();
        assert!((snr_db(&r, &t).unwrap().db() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn snr_exact_and_zero_reference() {
        let r = img(3, 3, |i, j| (i + j) as f64);
        assert_eq!(snr_db(&r, &r).unwrap(), Snr::Exact);
        assert_eq!(Snr::Exact.db(), f64::INFINITY);
        let z = Image2D::zeros(3, 3).unwrap();
        assert!(matches!(snr_db(&z, &r), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            snr_db(&r, &Image2D::zeros(3, 4).unwrap()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn profile_extraction() {
        let c = Image2D::new_filled(256, 256, 0.3).unwrap();
        let p = extract_profile(&c, 203, 209, 126).unwrap();
        assert_eq!(p.len(), 7);
        assert!(p.iter().all(|&(_, v)| v == 0.3));
        assert_eq!(p[0].0, 203);

        let ramp = img(20, 5, |i, _| i as f64 + 1.0);
        let p = extract_profile(&ramp, 3, 8, 2).unwrap();
        assert!(p.iter().all(|&(r, v)| v == r as f64));
    }

    #[test]
    fn profile_out_of_range() {
        let c = Image2D::zeros(10, 10).unwrap();
        for (a, b, col) in [(0, 3, 1), (4, 3, 1), (1, 11, 1), (1, 3, 0), (1, 3, 11)] {
            assert!(matches!(extract_profile(&c, a, b, col), Err(Error::IndexOutOfRange(_))));
        }
    }

    fn as_profile(v: &[f64]) -> Vec<(usize, f64)> {
        v.iter().enumerate().map(|(i, &x)| (i, x)).collect()
    }

    #[test]
    fn edge_width_of_step_and_ramp() {
        let w = edge_width(&as_profile(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        assert!((w - 0.8).abs() < 1e-12);
        let ramp: Vec<f64> = (0..=10).map(f64::from).collect();
        assert!((edge_width(&as_profile(&ramp)).unwrap() - 8.0).abs() < 1e-12);
        let falling: Vec<f64> = ramp.iter().rev().copied().collect();
        assert!((edge_width(&as_profile(&falling)).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn edge_width_spans_min_to_max() {
        // Rise from the minimum at index 1 to the maximum at index 5.
        let v = [0.5, 0.0, 0.05, 0.5, 0.95, 1.0, 0.3];
        let w = edge_width(&as_profile(&v)).unwrap();
        // 10% level 0.1 crossed at 2 + 0.05/0.45; 90% level at 3 + 0.4/0.45.
        let expect = (3.0 + 0.4 / 0.45) - (2.0 + 0.05 / 0.45);
        assert!((w - expect).abs() < 1e-12);
    }

    #[test]
    fn edge_width_ignores_wiggles_before_the_edge() {
        let v = [0.0, 0.08, 0.02, 0.0, 1.0, 1.0];
        assert!((edge_width(&as_profile(&v)).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn flat_profile_rejected() {
        assert!(matches!(edge_width(&as_profile(&[2.0; 5])), Err(Error::FlatProfile)));
        assert!(matches!(edge_width(&as_profile(&[2.0])), Err(Error::FlatProfile)));
    }

    #[test]
    fn timing_is_nonnegative_and_ordered() {
        let data: Vec<f64> = (0..200_000).map(f64::from).collect();
        let noop = time_filter(5, || ());
        let work = time_filter(5, || data.iter().map(|x| x.sqrt()).sum::<f64>());
        assert!(noop >= 0.0);
        assert!(noop < work);
    }

    #[test]
    fn report_csv_layout() {
        let rows = vec![
            EvalReport {
                method: "none".into(),
                snr_db: 12.5,
                runtime_seconds: 0.0,
                profile: Some(vec![(3, 0.5)]),
            },
            EvalReport {
                method: "llmmse-b".into(),
                snr_db: 14.25,
                runtime_seconds: 0.125,
                profile: None,
            },
        ];
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,snr_db,runtime_seconds\nnone,12.5,0.0\nllmmse-b,14.25,0.125\n"
        );
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "method,row,value\nnone,3,0.5\n");
    }

    proptest! {
        #[test]
        fn snr_decreases_with_error_scale(c1 in 0.01f64..10.0, extra in 0.01f64..10.0, seed in any::<u64>()) {
            let mut s = seed | 1;
            let noise = img(8, 8, |_, _| {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            });
            let reference = img(8, 8, |i, j| 1.0 + (i * j) as f64);
            let t1 = reference.zip_map(&noise, |r, n| r + c1 * n).unwrap();
            let t2 = reference.zip_map(&noise, |r, n| r + (c1 + extra) * n).unwrap();
            prop_assume!(noise.data().iter().any(|&v| v != 0.0));
            prop_assert!(snr_db(&reference, &t1).unwrap().db() > snr_db(&reference, &t2).unwrap().db());
        }

        #[test]
        fn constant_offset_lowers_snr(offset in 1e-3f64..5.0) {
            let reference = img(6, 6, |i, j| (i + 2 * j) as f64 + 1.0);
            let shifted = reference.map(|v| v + offset).unwrap();
            let more = reference.map(|v| v + 2.0 * offset).unwrap();
            prop_assert!(snr_db(&reference, &shifted).unwrap().db().is_finite());
            prop_assert!(snr_db(&reference, &shifted).unwrap().db() > snr_db(&reference, &more).unwrap().db());
        }

        #[test]
        fn edge_width_affine_invariant(scale in 0.1f64..100.0, shift in -50.0f64..50.0, jump in 1usize..8) {
            let base: Vec<f64> = (0..10).map(|i| if i < jump { 0.0 } else if i == jump { 0.4 } else { 1.0 }).collect();
            let moved: Vec<f64> = base.iter().map(|v| v * scale + shift).collect();
            let w0 = edge_width(&as_profile(&base)).unwrap();
            let w1 = edge_width(&as_profile(&moved)).unwrap();
            prop_assert!((w0 - w1).abs() < 1e-9);
        }
    }
}
