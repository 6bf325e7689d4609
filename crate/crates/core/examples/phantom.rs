//! Writes the modified Shepp-Logan phantom as SGF1 and PGM.
//!
//! ```text
//! cargo run --release --example phantom -- [size] [out_dir]
//! ```

use std::path::PathBuf;

use ldct::ctgeom::{modified_shepp_logan_table, shepp_logan};
use ldct::grid::{save_pgm, save_raw};

fn main() -> ldct::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(256, |s| s.parse().expect("size must be an integer"));
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "ldct-examples".into()));
    std::fs::create_dir_all(&dir).map_err(|e| ldct::Error::Io { path: dir.clone(), source: e })?;

    for (k, e) in modified_shepp_logan_table().iter().enumerate() {
        println!(
            "ellipse {:>2}: intensity {:+.2}  axes ({:.4}, {:.4})  centre ({:+.3}, {:+.4})  {:+.0} deg",
            k + 1,
            e.intensity,
            e.semi_x,
            e.semi_y,
            e.center_x,
            e.center_y,
            e.rotation_deg
        );
    }

    let p = shepp_logan(n)?;
    save_raw(dir.join("phantom.sgf"), &p)?;
    save_pgm(dir.join("phantom.pgm"), &p, 0.0, 0.5)?;
    println!("{n}x{n} phantom: min {:.3}, max {:.3}, mean {:.4}", p.min(), p.max(), p.mean());
    println!("wrote {}/phantom.{{sgf,pgm}}", dir.display());
    Ok(())
}
