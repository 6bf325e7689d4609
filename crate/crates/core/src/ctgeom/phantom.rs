use crate::grid::Image2D;
use crate::{Error, Result};

const MODIFIED_SHEPP_LOGAN: &str = include_str!("../../data/modified_shepp_logan.csv");

/// One ellipse of an additive phantom, in half-width units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_x: f64,
    pub semi_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Counter-clockwise rotation, degrees.
    pub rotation_deg: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        let u = dx * c + dy * s;
        let v = dy * c - dx * s;
        (u / self.semi_x).powi(2) + (v / self.semi_y).powi(2) <= 1.0
    }
}

fn parse_table(text: &str) -> Result<Vec<Ellipse>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let v: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("phantom table line {line:?}: {e}")))?;
            if v.len() != 6 {
                return Err(Error::Config(format!("phantom table line {line:?}: expected 6 fields")));
            }
            Ok(Ellipse {
                intensity: v[0],
                semi_x: v[1],
                semi_y: v[2],
                center_x: v[3],
                center_y: v[4],
                rotation_deg: v[5],
            })
        })
        .collect()
}

/// The ten-ellipse modified Shepp-Logan table shipped in `data/`.
pub fn modified_shepp_logan_table() -> Vec<Ellipse> {
    parse_table(MODIFIED_SHEPP_LOGAN).expect("bundled phantom table parses")
}

/// Phantom value at a point: the sum of intensities of every covering ellipse.
pub fn shepp_logan_at(x: f64, y: f64) -> f64 {
    modified_shepp_logan_table()
        .iter()
        .filter(|e| e.contains(x, y))
        .map(|e| e.intensity)
        .sum()
}

/// `n x n` modified Shepp-Logan phantom sampled at pixel centres.
pub fn shepp_logan(n: usize) -> Result<Image2D> {
    let table = modified_shepp_logan_table();
    let h = 2.0 / n as f64;
    Image2D::from_fn(n, n, |i, j| {
        let x = -1.0 + (j as f64 + 0.5) * h;
        let y = 1.0 - (i as f64 + 0.5) * h;
        table
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum()
    })
}
