//! Evaluates φ, the inner exponent of τ, log f and log f' at a few points,
//! and checks that φ inverts τ.
//!
//! cargo run --release --example model_maps -- [p] [l]

use tractdim::model::{log_f, log_f_prime, phi, tau, tau_inner, ModelParams};
use tractdim::ComplexValue;

fn main() -> tractdim::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let p = args.first().copied().unwrap_or(1.0);
    let l = args.get(1).copied().unwrap_or(0.0);
    let m = ModelParams::new(p, l)?;
    let e = std::f64::consts::E;
    for y in [
        ComplexValue::new(e * e, 0.0),
        ComplexValue::new(10.0, 1.0),
        ComplexValue::new(50.0, -3.0),
    ] {
        let z = y + l;
        let u = tau_inner(z, &m)?;
        let lf = log_f(z, &m)?;
        let lfp = log_f_prime(z, &m)?;
        let back = phi(tau(z, &m)?, &m)?;
        println!("z = {z}");
        println!("  u = (Log(z-l))^(1+p)  = {u}");
        println!("  log|f| = {:.6}, arg f = {:.6}", lf.log_mod, lf.arg);
        println!("  log|f'| = {:.6}", lfp.log_mod);
        println!("  |phi_l(tau_l(z)) - z| = {:.2e}", (back - z).norm());
    }
    Ok(())
}
