//! Runs the verification suite and prints the JSON report.
//!
//! cargo run --release --example verify_bounds -- [p]

use tractdim::model::ModelParams;
use tractdim::verify::{run_verify, VerifyOptions};
use tractdim::CalibratedConstants;

fn main() -> tractdim::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let consts = CalibratedConstants::bundled(p).expect("bundled constants exist for p = 0.5, 1, 2");
    let cfg = consts.radius()?;
    let m = ModelParams::new(p, cfg.l_min + 1.0)?;
    let report = run_verify(&m, &cfg, &consts, &VerifyOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.pass {
        std::process::exit(3);
    }
    Ok(())
}
