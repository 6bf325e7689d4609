//! Full experiment: phantom, projection, noise, every filter, FBP, metrics.
//!
//! ```text
//! cargo run --release --example pipeline                      # desk scale
//! cargo run --release --example pipeline -- configs/paper_scale.json
//! ```

use ldct::cli::{cmd_pipeline, PipelineConfig};

fn main() -> ldct::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let summary = cmd_pipeline(&cfg)?;
    println!("{:<10} {:>10} {:>12} {:>11}", "method", "snr (dB)", "runtime (s)", "edge width");
    for o in &summary.outcomes {
        println!(
            "{:<10} {:>10.4} {:>12.4} {:>11}",
            o.report.method,
            o.report.snr_db,
            o.report.runtime_seconds,
            o.edge_width.map_or("flat".into(), |w| format!("{w:.3}"))
        );
    }
    println!("outputs in {}", summary.output_dir.display());
    Ok(())
}
