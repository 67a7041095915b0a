//! Calibrates the constants for one growth exponent and prints the report.
//!
//! cargo run --release --example calibrate -- [p] [grid_n] [out.toml]

use std::path::Path;
use std::time::Instant;

use tractdim::calibrate::{calibrate, CalibrationBudget};

fn main() -> tractdim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mut budget = CalibrationBudget::default();
    if let Some(n) = args.get(1).and_then(|s| s.parse().ok()) {
        budget.grid_n = n;
    }
    let start = Instant::now();
    let consts = calibrate(p, &budget)?;
    eprintln!("calibrated p = {p} in {:.1} s", start.elapsed().as_secs_f64());
    print!("{}", consts.to_report()?);
    if let Some(out) = args.get(2) {
        consts.write(Path::new(out))?;
    }
    Ok(())
}
