//! Bowen-zero estimates over a range of translations l, with the band for the
//! entire function and the monotone-trend report.
//!
//! cargo run --release --example hypdim_sweep -- [p]

use tractdim::pressure::{hypdim_sweep, trend_report, BowenOptions};
use tractdim::CalibratedConstants;

fn main() -> tractdim::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let consts = CalibratedConstants::bundled(p).expect("bundled constants exist for p = 0.5, 1, 2");
    let cfg = consts.radius()?;
    let ls = [cfg.l_min + 1.0, 1e3, 1e4, 1e5, 1e6];
    let rows = hypdim_sweep(&ls, p, &cfg, Some(&consts), &BowenOptions::default());
    for r in &rows {
        if let (Some(e), Some(b)) = (r.estimate, r.entire_band) {
            println!("l = {:>12.3}  h = {:.5}  entire band [{:.5}, {:.5}]", r.l, e.value, b.0, b.1);
        }
    }
    print!("{}", trend_report(&rows, 2e-4));
    Ok(())
}
