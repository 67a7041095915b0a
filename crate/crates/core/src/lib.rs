//! Thermodynamic formalism for the logarithmic-tract model maps
//! `f_l(z) = exp(exp((Log(z - l))^(1+p)))` and the entire functions `E_l`
//! that approximate them.
//!
//! The crate evaluates the maps in overflow-safe logarithmic form, computes
//! `E_l` from Cauchy integrals over the boundary of a tract region, sums the
//! transfer operator `L_t 1(w)` with an explicit tail estimate, estimates
//! topological pressure by iterating the operator on a lattice, locates the
//! Bowen zero, and samples Julia sets for box-counting estimates.
//!
//! ```
//! use tractdim::model::{log_abs_f, LogModulus, ModelParams};
//! use tractdim::ComplexValue;
//!
//! let m = ModelParams::new(1.0, 0.0).unwrap();
//! let z = ComplexValue::new(std::f64::consts::E.powi(2), 0.0);
//! let LogModulus::Finite(v) = log_abs_f(z, &m).unwrap() else { unreachable!() };
//! assert!((v - std::f64::consts::E.powi(4)).abs() < 1e-9);
//! ```

pub type ComplexValue = num_complex::Complex64;

pub mod app;
pub mod calibrate;
pub mod cauchy;
pub mod config;
pub mod error;
pub mod grid;
pub mod julia;
pub mod model;
pub mod numeric;
pub mod pressure;
pub mod quad;
pub mod tract;
pub mod transfer;
pub mod verify;

pub use calibrate::CalibratedConstants;
pub use error::{Error, Result};
pub use model::ModelParams;
pub use tract::RadiusConfig;
