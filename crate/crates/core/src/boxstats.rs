//! Local window statistics via moving sums.
//!
//! Every window is the axis-aligned square of Chebyshev radius `r` around a
//! pixel, clipped to the grid. Sums are computed with two separable running
//! passes (rows, then columns), so the cost per pixel does not depend on `r`.
//! Means divide by the exact clipped element count.

use serde::{Deserialize, Serialize};

use crate::grid::Image2D;

/// Chebyshev radius of a square window. `BoxRadius(1)` is the 3x3 mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxRadius(pub usize);

impl BoxRadius {
    /// Interior window side, `2r + 1`.
    pub fn side(self) -> usize {
        2 * self.0 + 1
    }
}

/// Running sum over one line: `out[j] = sum(src[max(0, j-r) ..= min(n-1, j+r)])`.
fn running_sum_line(src: &[f64], r: usize, out: &mut [f64]) {
    if r == 0 {
        out.copy_from_slice(src);
        return;
    }
    let n = src.len();
    let mut acc: f64 = src[..n.min(r + 1)].iter().sum();
    out[0] = acc;
    for j in 1..n {
        if j + r < n {
            acc += src[j + r];
        }
        if j > r {
            acc -= src[j - r - 1];
        }
        out[j] = acc;
    }
}

/// Row pass on raw row-major data.
fn moving_sum_rows_into(src: &[f64], cols: usize, r: BoxRadius, dst: &mut [f64]) {
    for (s, d) in src.chunks_exact(cols).zip(dst.chunks_exact_mut(cols)) {
        running_sum_line(s, r.0, d);
    }
}

/// Column pass on raw row-major data. The running accumulator is a whole row
/// wide, so the pass walks memory contiguously.
fn moving_sum_cols_into(src: &[f64], cols: usize, r: BoxRadius, dst: &mut [f64]) {
    let r = r.0;
    if r == 0 {
        dst.copy_from_slice(src);
        return;
    }
    let rows = src.len() / cols;
    let line = |i: usize| &src[i * cols..(i + 1) * cols];
    let (first, rest) = dst.split_at_mut(cols);
    first.fill(0.0);
    for i in 0..rows.min(r + 1) {
        add_assign(first, line(i));
    }
    let mut prev: &[f64] = first;
    for (k, out) in rest.chunks_exact_mut(cols).enumerate() {
        let i = k + 1;
        out.copy_from_slice(prev);
        if i + r < rows {
            add_assign(out, line(i + r));
        }
        if i > r {
            sub_assign(out, line(i - r - 1));
        }
        prev = out;
    }
}

#[inline]
fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

#[inline]
fn sub_assign(acc: &mut [f64], v: &[f64]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a -= x;
    }
}

/// Horizontal moving sum of every row.
pub fn moving_sum_rows(image: &Image2D, r: BoxRadius) -> Image2D {
    let (rows, cols) = image.shape();
    let mut out = vec![0.0; rows * cols];
    moving_sum_rows_into(image.data(), cols, r, &mut out);
    Image2D::from_parts(rows, cols, out)
}

/// Vertical moving sum of every column.
pub fn moving_sum_cols(image: &Image2D, r: BoxRadius) -> Image2D {
    let (rows, cols) = image.shape();
    let mut out = vec![0.0; rows * cols];
    moving_sum_cols_into(image.data(), cols, r, &mut out);
    Image2D::from_parts(rows, cols, out)
}

/// Sum over each clipped window.
pub fn box_sum(image: &Image2D, r: BoxRadius) -> Image2D {
    moving_sum_cols(&moving_sum_rows(image, r), r)
}

/// Reusable buffers for the streaming window sums behind [`box_mean_into`]
/// and the blockwise filter.
#[derive(Debug, Default)]
pub struct BoxWorkspace {
    ring: Vec<f64>,
    acc: Vec<f64>,
    line: Vec<f64>,
}

impl BoxWorkspace {
    /// Window sums of a `rows`-row grid, one output row at a time.
    ///
    /// `fill_row(i, dst, line)` writes the horizontal moving sums of input
    /// row `i` into `dst` (`line` is a spare row-sized buffer). Rows may
    /// carry several channels side by side; `width` is their total length.
    /// `emit(i, sums)` then receives the finished window sums of row `i`.
    ///
    /// The column accumulation performs exactly the additions and
    /// subtractions of a full column pass over the row-pass output, so the
    /// results are bit-identical to [`box_sum`]; only the horizontal sums of
    /// the `2r + 2` rows in flight are kept.
    pub(crate) fn stream_window_sums(
        &mut self,
        rows: usize,
        width: usize,
        r: BoxRadius,
        mut fill_row: impl FnMut(usize, &mut [f64], &mut Vec<f64>),
        mut emit: impl FnMut(usize, &[f64]),
    ) {
        let r = r.0;
        let BoxWorkspace { ring, acc, line } = self;
        acc.clear();
        acc.resize(width, 0.0);
        if r == 0 {
            for i in 0..rows {
                fill_row(i, acc, line);
                emit(i, acc);
            }
            return;
        }
        let slots = (2 * r + 2).min(rows);
        ring.resize(slots * width, 0.0);
        let slot = |i: usize| (i % slots) * width..(i % slots + 1) * width;

        for i in 0..rows.min(r + 1) {
            let s = slot(i);
            fill_row(i, &mut ring[s.clone()], line);
            add_assign(acc, &ring[s]);
        }
        emit(0, acc);
        for i in 1..rows {
            if i + r < rows {
                let s = slot(i + r);
                fill_row(i + r, &mut ring[s.clone()], line);
                add_assign(acc, &ring[s]);
            }
            if i > r {
                sub_assign(acc, &ring[slot(i - r - 1)]);
            }
            emit(i, acc);
        }
    }
}

/// Clipped window sizes, factored by axis.
///
/// Box-summing an all-ones grid is separable: the count at `(i, j)` is the
/// row-direction count at `j` times the column-direction count at `i`. Both
/// factors are small integers, so the product is exact.
pub(crate) struct WindowCounts {
    along_rows: Vec<f64>,
    along_cols: Vec<f64>,
}

impl WindowCounts {
    pub(crate) fn new(rows: usize, cols: usize, r: BoxRadius) -> Self {
        let ones = |n: usize| {
            let mut out = vec![0.0; n];
            running_sum_line(&vec![1.0; n], r.0, &mut out);
            out
        };
        WindowCounts {
            along_rows: ones(rows),
            along_cols: ones(cols),
        }
    }

    /// Divides the window sums of row `i`, written into `out`.
    #[inline]
    pub(crate) fn normalize_row(&self, i: usize, sums: &[f64], out: &mut [f64]) {
        let rc = self.along_rows[i];
        for ((o, &s), &cc) in out.iter_mut().zip(sums).zip(&self.along_cols) {
            *o = s / (rc * cc);
        }
    }
}

/// Number of grid elements in each clipped window, `|w(i, j)|`.
pub fn window_counts(rows: usize, cols: usize, r: BoxRadius) -> Image2D {
    let counts = WindowCounts::new(rows, cols, r);
    let data = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .map(|(i, j)| counts.along_rows[i] * counts.along_cols[j])
        .collect();
    Image2D::from_parts(rows, cols, data)
}

pub fn box_mean(image: &Image2D, r: BoxRadius) -> Image2D {
    let mut out = Vec::new();
    box_mean_into(image, r, &mut BoxWorkspace::default(), &mut out);
    Image2D::from_parts(image.rows(), image.cols(), out)
}

/// [`box_mean`] into a caller-owned buffer (row-major, resized to the image
/// length), reusing `ws` across calls.
pub fn box_mean_into(image: &Image2D, r: BoxRadius, ws: &mut BoxWorkspace, out: &mut Vec<f64>) {
    let (rows, cols) = image.shape();
    out.resize(image.len(), 0.0);
    let counts = WindowCounts::new(rows, cols, r);
    let src = image.data();
    ws.stream_window_sums(
        rows,
        cols,
        r,
        |i, dst, _| running_sum_line(&src[i * cols..(i + 1) * cols], r.0, dst),
        |i, sums| counts.normalize_row(i, sums, &mut out[i * cols..(i + 1) * cols]),
    );
}

/// Local mean and population variance in one go. Variance is clamped at zero.
pub fn box_mean_variance(image: &Image2D, r: BoxRadius) -> (Image2D, Image2D) {
    let (rows, cols) = image.shape();
    let counts = WindowCounts::new(rows, cols, r);
    let mut mean = vec![0.0; image.len()];
    let mut var = vec![0.0; image.len()];
    let mut ws = BoxWorkspace::default();
    let mut m2 = vec![0.0; cols];
    ws.stream_window_sums(
        rows,
        2 * cols,
        r,
        |i, dst, line| fill_value_and_square_sums(image.row(i), r, dst, line),
        |i, sums| {
            let m = &mut mean[i * cols..(i + 1) * cols];
            counts.normalize_row(i, &sums[..cols], m);
            counts.normalize_row(i, &sums[cols..], &mut m2);
            for ((v, &mk), &sq) in var[i * cols..(i + 1) * cols].iter_mut().zip(m.iter()).zip(&m2) {
                *v = (sq - mk * mk).max(0.0);
            }
        },
    );
    (Image2D::from_parts(rows, cols, mean), Image2D::from_parts(rows, cols, var))
}

/// Horizontal moving sums of a row and of its squares, side by side in `dst`.
pub(crate) fn fill_value_and_square_sums(row: &[f64], r: BoxRadius, dst: &mut [f64], line: &mut Vec<f64>) {
    let cols = row.len();
    line.clear();
    line.extend(row.iter().map(|v| v * v));
    let (values, squares) = dst.split_at_mut(cols);
    running_sum_line(row, r.0, values);
    running_sum_line(line, r.0, squares);
}

/// Horizontal moving sums of two rows, side by side in `dst`.
pub(crate) fn fill_pair_sums(a: &[f64], b: &[f64], r: BoxRadius, dst: &mut [f64]) {
    let (left, right) = dst.split_at_mut(a.len());
    running_sum_line(a, r.0, left);
    running_sum_line(b, r.0, right);
}

/// Local population variance, `E[x^2] - E[x]^2` over each clipped window.
pub fn box_variance(image: &Image2D, r: BoxRadius) -> Image2D {
    box_mean_variance(image, r).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window_oracle(img: &Image2D, i: usize, j: usize, r: usize) -> Vec<f64> {
        let mut v = Vec::new();
        for s in i.saturating_sub(r)..=(i + r).min(img.rows() - 1) {
            for t in j.saturating_sub(r)..=(j + r).min(img.cols() - 1) {
                v.push(img.get(s, t));
            }
        }
        v
    }

    fn grid(rows: usize, cols: usize, values: &[f64]) -> Image2D {
        Image2D::from_vec(rows, cols, values[..rows * cols].to_vec()).unwrap()
    }

    #[test]
    fn row_sum_small_example() {
        let g = Image2D::from_vec(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(moving_sum_rows(&g, BoxRadius(1)).data(), &[3.0, 6.0, 9.0, 7.0]);
        assert_eq!(moving_sum_rows(&g, BoxRadius(0)).data(), g.data());
    }

    #[test]
    fn radius_larger_than_grid() {
        let g = Image2D::from_vec(1, 3, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(moving_sum_rows(&g, BoxRadius(10)).data(), &[7.0, 7.0, 7.0]);
        assert_eq!(window_counts(2, 3, BoxRadius(10)).data(), &[6.0; 6]);
    }

    #[test]
    fn mean_of_constant_is_constant() {
        let g = Image2D::new_filled(7, 5, 3.25).unwrap();
        for r in 0..5 {
            let m = box_mean(&g, BoxRadius(r));
            assert!(m.data().iter().all(|&v| (v - 3.25).abs() < 1e-15));
            let v = box_variance(&g, BoxRadius(r));
            assert!(v.data().iter().all(|&x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn centered_impulse() {
        let mut data = vec![0.0; 25];
        data[12] = 1.0;
        let g = Image2D::from_vec(5, 5, data).unwrap();
        let m = box_mean(&g, BoxRadius(2));
        let counts = window_counts(5, 5, BoxRadius(2));
        assert_eq!(counts.get(2, 2), 25.0);
        assert_eq!(counts.get(0, 0), 9.0);
        for i in 0..5 {
            for j in 0..5 {
                assert!((m.get(i, j) - 1.0 / counts.get(i, j)).abs() < 1e-15);
            }
        }
        assert!((m.get(2, 2) - 1.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_variance() {
        let g = Image2D::from_vec(1, 2, vec![0.0, 2.0]).unwrap();
        assert_eq!(box_variance(&g, BoxRadius(1)).data(), &[1.0, 1.0]);
    }

    #[test]
    fn running_sums_match_oracle_on_64_rows() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let data: Vec<f64> = (0..64 * 40)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let g = Image2D::from_vec(64, 40, data).unwrap();
        let out = moving_sum_rows(&g, BoxRadius(5));
        for i in 0..64 {
            for j in 0..40usize {
                let expect: f64 = (j.saturating_sub(5)..=(j + 5).min(39)).map(|t| g.get(i, t)).sum();
                assert!((out.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn mean_and_variance_match_double_loop(
            rows in 1usize..=32,
            cols in 1usize..=32,
            r in 0usize..=4,
            values in proptest::collection::vec(-10.0f64..10.0, 32 * 32),
        ) {
            let g = grid(rows, cols, &values);
            let (mean, var) = box_mean_variance(&g, BoxRadius(r));
            for i in 0..rows {
                for j in 0..cols {
                    let w = window_oracle(&g, i, j, r);
                    let n = w.len() as f64;
                    let m = w.iter().sum::<f64>() / n;
                    let v = w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                    prop_assert!((mean.get(i, j) - m).abs() <= 1e-9);
                    prop_assert!((var.get(i, j) - v).abs() <= 1e-9);
                    prop_assert!(var.get(i, j) >= 0.0);
                }
            }
        }

        #[test]
        fn radius_zero_is_identity(
            rows in 1usize..=16,
            cols in 1usize..=16,
            values in proptest::collection::vec(-1.0e3f64..1.0e3, 256),
        ) {
            let g = grid(rows, cols, &values);
            prop_assert_eq!(box_mean(&g, BoxRadius(0)), g.clone());
            prop_assert!(box_variance(&g, BoxRadius(0)).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn factored_counts_equal_box_sum_of_ones() {
        for (rows, cols, r) in [(1, 1, 0), (7, 3, 1), (12, 17, 4), (5, 40, 9)] {
            let ones = Image2D::new_filled(rows, cols, 1.0).unwrap();
            assert_eq!(window_counts(rows, cols, BoxRadius(r)), box_sum(&ones, BoxRadius(r)));
        }
    }

    #[test]
    fn streamed_mean_equals_full_passes_bitwise() {
        let mut seed = 7u64;
        for (rows, cols, r) in [(1, 9, 2), (9, 1, 3), (17, 23, 0), (17, 23, 1), (30, 12, 5), (6, 8, 20)] {
            let g = Image2D::from_fn(rows, cols, |_, _| {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (seed >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
            })
            .unwrap();
            let r = BoxRadius(r);
            let sums = box_sum(&g, r);
            let counts = window_counts(rows, cols, r);
            let expect = sums.zip_map(&counts, |s, n| s / n).unwrap();
            assert_eq!(box_mean(&g, r), expect);
            let (m, _) = box_mean_variance(&g, r);
            assert_eq!(m, expect);
        }
    }
}
