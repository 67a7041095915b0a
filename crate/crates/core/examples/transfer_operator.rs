//! Transfer operator L_t 1(w) for the model map and the entire function,
//! with the truncation index and tail estimate.
//!
//! cargo run --release --example transfer_operator -- [p]

use tractdim::model::ModelParams;
use tractdim::transfer::{transfer_entire, transfer_model};
use tractdim::{CalibratedConstants, ComplexValue};

fn main() -> tractdim::Result<()> {
    let p: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let consts = CalibratedConstants::bundled(p).expect("bundled constants exist for p = 0.5, 1, 2");
    let cfg = consts.radius()?;
    let m = ModelParams::new(p, cfg.l_min + 1.0)?;
    println!("p = {p}, r = {:.3}, l = {:.3}", cfg.r, m.l());
    println!("{:>10} {:>5} {:>14} {:>10} {:>6} {:>14}", "|w|/r", "t", "L_f", "tail", "K", "L_E / L_f");
    for scale in [1.5, 10.0, 1e3] {
        for t in [1.2, 1.5, 2.0] {
            let w = ComplexValue::from_polar(scale * cfg.r, 0.4);
            let v = transfer_model(w, t, &m, &cfg, 1e-8)?;
            let e = transfer_entire(w, t, &m, &cfg, &consts, 1e-8, 4)?;
            println!(
                "{scale:>10} {t:>5} {:>14.6e} {:>10.1e} {:>6} {:>14.8}",
                v.value,
                v.tail_bound,
                v.k,
                e.value / v.value
            );
        }
    }
    match transfer_model(ComplexValue::new(2.0 * cfg.r, 0.0), 1.0, &m, &cfg, 1e-8) {
        Err(e) => println!("t = 1: {e}"),
        Ok(v) => println!("t = 1 unexpectedly converged: {v:?}"),
    }
    Ok(())
}
