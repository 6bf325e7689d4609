//! Radius independence and linear scaling of the box-filter based operations.

use ldct::cli::{cmd_bench, write_bench_csv};

fn main() -> ldct::Result<()> {
    let rows = cmd_bench(&[(512, 512), (888, 984), (1024, 1024)], &[1, 5, 15], 9)?;
    write_bench_csv(std::io::stdout().lock(), &rows)
}
