//! Box statistics via separable moving sums: the cost per pixel does not
//! depend on the window radius.

use std::time::Instant;

use ldct::boxstats::{box_mean, box_mean_variance, BoxRadius};
use ldct::Image2D;

fn main() -> ldct::Result<()> {
    let small = Image2D::from_vec(1, 4, vec![1.0, 2.0, 3.0, 4.0])?;
    println!("box_mean([1 2 3 4], r=1) = {:?}", box_mean(&small, BoxRadius(1)).data());

    let (rows, cols) = (888, 984);
    let grid = Image2D::from_fn(rows, cols, |i, j| ((i * 131 + j * 71) % 257) as f64)?;
    println!("\n{rows}x{cols} grid");
    for r in [1, 5, 15, 45] {
        let t0 = Instant::now();
        let (mean, var) = box_mean_variance(&grid, BoxRadius(r));
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "r = {r:>2} (window {:>2}x{:<2}): {dt:.4} s, mean {:.3}, min variance {:.3}",
            2 * r + 1,
            2 * r + 1,
            mean.mean(),
            var.min()
        );
    }
    Ok(())
}
