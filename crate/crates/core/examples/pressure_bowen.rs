//! Pressure P(t) from the lattice operator, and the Bowen zero.
//!
//! cargo run --release --example pressure_bowen -- [p] [l]

use tractdim::model::ModelParams;
use tractdim::pressure::{bowen_zero, pressure_estimate, BowenOptions, PressureOptions};
use tractdim::CalibratedConstants;

fn main() -> tractdim::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let p = args.first().copied().unwrap_or(1.0);
    let consts = CalibratedConstants::bundled(p).expect("bundled constants exist for p = 0.5, 1, 2");
    let cfg = consts.radius()?;
    let l = args.get(1).copied().unwrap_or(cfg.l_min + 1.0);
    let m = ModelParams::new(p, l)?;
    let opts = PressureOptions::default();
    println!("p = {p}, l = {l:.3}, r = {:.3}", cfg.r);
    for t in [1.05, 1.1, 1.3, 1.5, 2.0] {
        let est = pressure_estimate(t, &m, &cfg, &opts)?;
        println!("P({t}) = {:>10.6}  spread {:.1e}  rows {}", est.value, est.spread, est.rows);
    }
    let res = bowen_zero(&m, &cfg, &BowenOptions::default())?;
    let e = res.estimate;
    println!(
        "Bowen zero h = {:.5} in [{:.5}, {:.5}], |P(h)| = {:.1e} after {} bisections",
        e.value,
        e.lo,
        e.hi,
        e.residual,
        res.steps.len()
    );
    Ok(())
}
