//! Renders the escape-time picture of the model map near its tract as a PGM.
//!
//! cargo run --release --example julia_render -- [out.pgm] [size]

use std::path::PathBuf;

use tractdim::julia::{render, write_pgm, RenderOptions, Window};
use tractdim::model::ModelParams;
use tractdim::{CalibratedConstants, ComplexValue};

fn main() -> tractdim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map(String::as_str).unwrap_or("julia.pgm"));
    let size: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(512);
    let consts = CalibratedConstants::bundled(1.0).expect("bundled constants");
    let cfg = consts.radius()?;
    let m = ModelParams::new(1.0, cfg.l_min + 1.0)?;
    let window = Window::centered(ComplexValue::new(m.l() + 20.0, 0.0), 40.0, 40.0)?;
    let opts = RenderOptions {
        width: size,
        height: size,
        n_max: 50,
        supersample: true,
    };
    let img = render(&window, &opts, &m, &cfg)?;
    write_pgm(&img, &out)?;
    println!("wrote {} ({size}x{size})", out.display());
    Ok(())
}
