//! Dense row-major 2D grids and their on-disk formats.
//!
//! The same container holds attenuation images and sinograms. For sinograms
//! rows index detector bins and columns index view angles.
//!
//! Two file formats are supported:
//!
//! * **SGF1** raw: a 16-byte header (`b"SGF1"`, rows `u32` LE, cols `u32` LE,
//!   four zero bytes) followed by `rows * cols` little-endian `f32` values in
//!   row-major order.
//! * **PGM** (`P5`, 8-bit) for visual inspection, with a linear display window.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// A sinogram is a grid indexed by (detector bin, view angle).
pub type Sinogram = Image2D;

const SGF_MAGIC: &[u8; 4] = b"SGF1";
const SGF_HEADER_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image2D {
    pub fn new_filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        check_dims(rows, cols)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        Ok(Image2D {
            rows,
            cols,
            data: vec![value; rows * cols],
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new_filled(rows, cols, 0.0)
    }

    /// Wraps row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Image2D { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// Internal constructor for results of finite arithmetic on validated grids.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Image2D { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: grids have at least one element.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Image2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other, "zip_map")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    /// Multiplies every element by `factor`.
    ///
    /// # Panics
    /// If the product is not finite.
    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor).expect("scaled grid must stay finite")
    }

    pub fn ensure_same_shape(&self, other: &Image2D, what: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                what,
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Rounds every value to the nearest `f32`, as a save/load cycle would.
    pub fn quantized_f32(&self) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&v| v as f32 as f64).collect();
        Self::from_vec(self.rows, self.cols, data)
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions { rows, cols });
    }
    if rows.checked_mul(cols).is_none() {
        return Err(Error::DimensionOverflow {
            rows: rows as u64,
            cols: cols as u64,
        });
    }
    Ok(())
}

/// Serializes to SGF1 bytes. Fails if a value overflows `f32`.
pub fn encode_raw(image: &Image2D) -> Result<Vec<u8>> {
    let rows = u32::try_from(image.rows).map_err(|_| Error::DimensionOverflow {
        rows: image.rows as u64,
        cols: image.cols as u64,
    })?;
    let cols = u32::try_from(image.cols).map_err(|_| Error::DimensionOverflow {
        rows: image.rows as u64,
        cols: image.cols as u64,
    })?;
    let mut out = Vec::with_capacity(SGF_HEADER_LEN + 4 * image.len());
    out.extend_from_slice(SGF_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for (k, &v) in image.data.iter().enumerate() {
        let single = v as f32;
        if !single.is_finite() {
            return Err(Error::NonFinite {
                row: k / image.cols,
                col: k % image.cols,
            });
        }
        out.extend_from_slice(&single.to_le_bytes());
    }
    Ok(out)
}

pub fn write_raw<W: Write>(mut writer: W, image: &Image2D) -> io::Result<()> {
    let bytes = encode_raw(image).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    writer.write_all(&bytes)
}

/// Parses SGF1 bytes.
pub fn decode_raw(bytes: &[u8]) -> Result<Image2D> {
    if bytes.len() < SGF_HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != SGF_MAGIC {
            return Err(Error::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(Error::Truncated {
            expected: SGF_HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != SGF_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as u64;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions {
            rows: rows as usize,
            cols: cols as usize,
        });
    }
    let payload_len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .filter(|&n| usize::try_from(n).is_ok() && n <= u64::MAX - SGF_HEADER_LEN as u64)
        .ok_or(Error::DimensionOverflow { rows, cols })?;
    let expected = SGF_HEADER_LEN as u64 + payload_len;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingData {
            extra: found - expected,
        });
    }
    let data = bytes[SGF_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Image2D::from_vec(rows as usize, cols as usize, data)
}

pub fn read_raw<R: Read>(mut reader: R) -> Result<Image2D> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<reader>", e))?;
    decode_raw(&bytes)
}

pub fn save_raw(path: impl AsRef<Path>, image: &Image2D) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_raw(image)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Image2D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&bytes)
}

/// Maps `value` from `[window_min, window_max]` to a byte, round half up.
#[inline]
fn window_to_byte(value: f64, window_min: f64, window_max: f64) -> u8 {
    let scaled = (value - window_min) / (window_max - window_min) * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encodes an 8-bit binary PGM with the given display window.
pub fn encode_pgm(image: &Image2D, window_min: f64, window_max: f64) -> Result<Vec<u8>> {
    if !(window_max > window_min) || !window_min.is_finite() || !window_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "degenerate display window [{window_min}, {window_max}]"
        )));
    }
    let header = format!("P5\n{} {}\n255\n", image.cols, image.rows);
    let mut out = Vec::with_capacity(header.len() + image.len());
    out.extend_from_slice(header.as_bytes());
    out.extend(
        image
            .data
            .iter()
            .map(|&v| window_to_byte(v, window_min, window_max)),
    );
    Ok(out)
}

pub fn save_pgm(path: impl AsRef<Path>, image: &Image2D, window_min: f64, window_max: f64) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(image, window_min, window_max)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_filled_shapes() {
        let one = Image2D::new_filled(1, 1, 0.0).unwrap();
        assert_eq!(one.data(), &[0.0]);
        let g = Image2D::new_filled(2, 3, 1.5).unwrap();
        assert_eq!(g.shape(), (2, 3));
        assert!(g.data().iter().all(|&v| v == 1.5));
        let canvas = Image2D::new_filled(256, 256, 0.0).unwrap();
        assert_eq!(canvas.len(), 65536);
    }

    #[test]
    fn new_filled_rejects_zero_dims() {
        assert!(matches!(
            Image2D::new_filled(0, 3, 1.0),
            Err(Error::InvalidDimensions { rows: 0, cols: 3 })
        ));
        assert!(matches!(
            Image2D::new_filled(3, 0, 1.0),
            Err(Error::InvalidDimensions { .. })
        ));
    }

    #[test]
    fn from_vec_rejects_nan_and_bad_length() {
        assert!(matches!(
            Image2D::from_vec(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
        assert!(matches!(
            Image2D::from_vec(2, 2, vec![0.0; 3]),
            Err(Error::LengthMismatch { len: 3, .. })
        ));
    }

    #[test]
    fn raw_round_trip_3x3() {
        let g = Image2D::from_vec(3, 3, (1..=9).map(|v| v as f64 * 0.25 - 1.0).collect()).unwrap();
        let bytes = encode_raw(&g).unwrap();
        assert_eq!(bytes.len(), 16 + 36);
        assert_eq!(&bytes[..4], b"SGF1");
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        assert_eq!(decode_raw(&bytes).unwrap(), g);
    }

    #[test]
    fn raw_bad_magic() {
        let mut bytes = encode_raw(&Image2D::zeros(2, 2).unwrap()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_raw(&bytes), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn raw_truncated_payload() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SGF1");
        bytes.extend_from_slice(&10u32.to_le_bytes());
        bytes.extend_from_slice(&10u32.to_le_bytes());
        bytes.extend_from_slice(&[0; 4]);
        for _ in 0..50 {
            bytes.extend_from_slice(&1.0f32.to_le_bytes());
        }
        assert!(matches!(
            decode_raw(&bytes),
            Err(Error::Truncated {
                expected: 416,
                found: 216
            })
        ));
    }

    #[test]
    fn raw_trailing_and_header_only() {
        let mut bytes = encode_raw(&Image2D::zeros(1, 2).unwrap()).unwrap();
        bytes.push(7);
        assert!(matches!(decode_raw(&bytes), Err(Error::TrailingData { extra: 1 })));
        assert!(matches!(decode_raw(b"SGF1\x01"), Err(Error::Truncated { .. })));
    }

    #[cfg(target_pointer_width = "32")]
    #[test]
    fn raw_dimension_overflow() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SGF1");
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&[0; 4]);
        assert!(matches!(decode_raw(&bytes), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn raw_huge_header_is_truncation_not_allocation() {
        // On 64-bit hosts u32 x u32 x 4 fits; the short payload must be reported.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SGF1");
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&[0; 4]);
        let err = decode_raw(&bytes).unwrap_err();
        assert!(matches!(
            err,
            Error::Truncated { .. } | Error::DimensionOverflow { .. }
        ));
    }

    #[test]
    fn pgm_window_clamps_and_rounds() {
        let low = Image2D::new_filled(2, 3, -1.0).unwrap();
        let bytes = encode_pgm(&low, -1.0, 1.0).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 0));

        let high = Image2D::new_filled(2, 3, 1.0).unwrap();
        let bytes = encode_pgm(&high, -1.0, 1.0).unwrap();
        assert!(bytes[header.len()..].iter().all(|&b| b == 255));

        let mid = Image2D::new_filled(1, 1, 0.5).unwrap();
        let bytes = encode_pgm(&mid, 0.0, 1.0).unwrap();
        assert_eq!(*bytes.last().unwrap(), 128);

        let out_of_window = Image2D::from_vec(1, 2, vec![-5.0, 5.0]).unwrap();
        let bytes = encode_pgm(&out_of_window, 0.0, 1.0).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);
    }

    #[test]
    fn pgm_rejects_degenerate_window() {
        let g = Image2D::zeros(2, 2).unwrap();
        assert!(matches!(encode_pgm(&g, 1.0, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(encode_pgm(&g, 2.0, 1.0), Err(Error::InvalidParameter(_))));
    }

    proptest! {
        #[test]
        fn raw_round_trip_is_bit_exact(
            rows in 1usize..12,
            cols in 1usize..12,
            seed in proptest::collection::vec(-1.0e30f32..1.0e30f32, 144),
        ) {
            let data = seed[..rows * cols].iter().map(|&v| v as f64).collect();
            let g = Image2D::from_vec(rows, cols, data).unwrap();
            let back = decode_raw(&encode_raw(&g).unwrap()).unwrap();
            prop_assert_eq!(back.shape(), g.shape());
            for (a, b) in back.data().iter().zip(g.data()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn pgm_size_is_header_plus_pixels(rows in 1usize..300, cols in 1usize..300) {
            let g = Image2D::zeros(rows, cols).unwrap();
            let bytes = encode_pgm(&g, 0.0, 1.0).unwrap();
            let header_len = bytes.len() - rows * cols;
            prop_assert!(header_len <= 15);
        }
    }
}
