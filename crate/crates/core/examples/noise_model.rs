//! Empirical check of the signal-dependent noise model: at each constant
//! signal level the sample variance should track `f * exp(p / eta)`.

use ldct::boxstats::BoxRadius;
use ldct::noise_model::{add_noise, estimate_noise_variance, model_variance, NoiseParams, SystemFactor};
use ldct::Image2D;

fn main() -> ldct::Result<()> {
    let params = NoiseParams::default();
    let SystemFactor::Scalar(f) = params.f else { unreachable!() };
    let eta = params.eta;
    println!("f = {f}, eta = {eta}, seed = {}", params.seed);
    println!("{:>10} {:>14} {:>14} {:>8}", "p", "predicted var", "sample var", "ratio");

    for p in [0.0, eta / 2.0, eta, 2.0 * eta] {
        let clean = Image2D::new_filled(1, 100_000, p)?;
        let noisy = add_noise(&clean, &params)?;
        let n = noisy.len() as f64;
        let mean = noisy.mean();
        let var = noisy.data().iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n;
        let predicted = model_variance(p, f, eta).expect("finite");
        println!("{p:>10.0} {predicted:>14.1} {var:>14.1} {:>8.4}", var / predicted);
    }

    // The filters see the variance estimated from the noisy data itself.
    let noisy = add_noise(&Image2D::new_filled(64, 64, 11000.0)?, &params)?;
    let est = estimate_noise_variance(&noisy, &params, BoxRadius(1))?;
    println!(
        "3x3 estimate at p = 11000: mean {:.1} (0.8 x model = {:.1})",
        est.mean(),
        0.8 * model_variance(11000.0, f, eta).unwrap()
    );
    Ok(())
}
