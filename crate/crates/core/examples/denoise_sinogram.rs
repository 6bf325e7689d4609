//! Simulates a low-dose sinogram and compares the filters in the sinogram
//! domain (mean squared error against the noise-free sinogram).

use ldct::cli::{filter_stage, noise_stage, project_stage, PipelineConfig};
use ldct::ctgeom::shepp_logan;
use ldct::filters::Method;
use ldct::metrics::time_filter;

fn main() -> ldct::Result<()> {
    let cfg = PipelineConfig::default();
    let clean = project_stage(&shepp_logan(cfg.phantom_size)?, &cfg.geometry, cfg.sinogram_scale)?;
    let noisy = noise_stage(&clean, &cfg.noise)?;
    println!(
        "sinogram {}x{}: values {:.0}..{:.0}",
        clean.rows(),
        clean.cols(),
        clean.min(),
        clean.max()
    );

    for method in Method::ALL {
        let filtered = filter_stage(&noisy, method, &cfg)?;
        let mse = filtered
            .zip_map(&clean, |a, b| (a - b).powi(2))?
            .mean();
        let secs = time_filter(3, || filter_stage(&noisy, method, &cfg));
        println!("{:<11} mse {mse:>10.1}   {secs:.4} s", method.name());
    }
    Ok(())
}
