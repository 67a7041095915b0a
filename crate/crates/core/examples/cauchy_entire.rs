//! Evaluates the entire approximation E and E' from its Cauchy-integral
//! representation, inside and outside the tract region.
//!
//! cargo run --release --example cauchy_entire -- [p]

use tractdim::cauchy::{eval_E_with_deriv, representation};
use tractdim::model::ModelParams;
use tractdim::{CalibratedConstants, ComplexValue};

fn main() -> tractdim::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let consts = CalibratedConstants::bundled(p).expect("bundled constants exist for p = 0.5, 1, 2");
    let m = ModelParams::new(p, 0.0)?;
    println!("p = {p}, D = {}, C = {}", consts.d_est, consts.c_est);
    for z in [
        ComplexValue::new(6.0, 0.0),
        ComplexValue::new(8.0, 0.5),
        ComplexValue::new(0.5, 2.0),
        ComplexValue::new(-20.0, 5.0),
    ] {
        let rep = representation(z, &m, &consts, 1e-10)?;
        let (e, de, err) = eval_E_with_deriv(z, &m, &consts, 1e-10)?;
        println!(
            "z = {z:<10} in G_D: {:<5} E = {e:.6e}  E' = {de:.6e}  |E - f| = {:.3e}  err ~ {err:.1e}  panels = {}",
            rep.in_tract,
            if rep.in_tract { rep.correction.norm() } else { f64::NAN },
            rep.panels
        );
    }
    Ok(())
}
