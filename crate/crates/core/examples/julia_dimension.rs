//! Box-counting estimates: synthetic masks first, then the surviving set of
//! the model map with survivors and undecided orbits counted in and out.
//!
//! cargo run --release --example julia_dimension -- [resolution]

use tractdim::julia::{box_dimension, dyadic_boxes, mask_dimension, Mask, Window};
use tractdim::model::ModelParams;
use tractdim::{CalibratedConstants, ComplexValue};

fn main() -> tractdim::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let boxes = dyadic_boxes(0, 7);
    let px = 1.0 / n as f64;
    let (_, line) = mask_dimension(&Mask::segment(n, n, (2.0, 5.0), (n as f64 - 3.0, n as f64 * 0.7)), &boxes, px)?;
    let (_, square) = mask_dimension(&Mask::filled(n, n), &boxes, px)?;
    println!("segment: {:.4}   filled square: {:.4}", line.value, square.value);

    let consts = CalibratedConstants::bundled(1.0).expect("bundled constants");
    let cfg = consts.radius()?;
    let m = ModelParams::new(1.0, cfg.l_min + 1.0)?;
    let window = Window::centered(ComplexValue::new(m.l() + 20.0, 0.0), 40.0, 40.0)?;
    let rep = box_dimension(&window, n, &m, &cfg, 50, &boxes)?;
    println!("undecided fraction {:.4}, surviving fraction {:.2e}", rep.undecided_fraction, rep.julia_fraction);
    println!("upper variant: {:.4} (fit residual {:.3})", rep.upper.value, rep.upper.residual);
    match rep.lower {
        Some(d) => println!("lower variant: {:.4}", d.value),
        None => println!("lower variant: no pixel survived all steps"),
    }
    println!("scale,count_upper,count_lower");
    for k in 0..rep.scales.len() {
        println!("{:e},{},{}", rep.scales[k], rep.counts_upper[k], rep.counts_lower[k]);
    }
    Ok(())
}
