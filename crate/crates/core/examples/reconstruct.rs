//! Noise-free projection and fan-beam FBP of the phantom, with the ramp and
//! Hann-apodized filters.

use ldct::ctgeom::{fbp_fan, forward_project_fan, shepp_logan, FanBeamGeometry, ReconFilter};
use ldct::grid::save_pgm;
use ldct::metrics::snr_db;

fn main() -> ldct::Result<()> {
    let n = 128;
    let geom = FanBeamGeometry::new(444, 492, 2.5)?;
    let phantom = shepp_logan(n)?;
    let sino = forward_project_fan(&phantom, &geom)?;
    println!(
        "fan half-angle {:.4} rad, {} bins x {} views",
        geom.fan_half_angle(),
        geom.n_bins(),
        geom.n_angles()
    );

    let h = 2.0 / n as f64;
    for (name, filt) in [("ramp", ReconFilter::ramp()), ("hanning", ReconFilter::default())] {
        let recon = fbp_fan(&sino, &geom, &filt, n)?;
        let (mut se, mut count) = (0.0, 0);
        for i in 0..n {
            for j in 0..n {
                let x = -1.0 + (j as f64 + 0.5) * h;
                let y = 1.0 - (i as f64 + 0.5) * h;
                if x * x + y * y <= 1.0 {
                    se += (recon.get(i, j) - phantom.get(i, j)).powi(2);
                    count += 1;
                }
            }
        }
        println!(
            "{name:<8} rmse (inscribed disk) {:.4}   snr {:.2} dB",
            (se / count as f64).sqrt(),
            snr_db(&phantom, &recon)?.db()
        );
        save_pgm(format!("recon_{name}.pgm"), &recon, 0.0, 0.5)?;
    }
    Ok(())
}
