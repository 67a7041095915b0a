//! Numerical calibration of the constants `C`, `D`, `r0`, the Koebe constant
//! and the operator-ratio constant, and their on-disk report.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::representation;
use crate::error::{Error, Result};
use crate::model::{phi_prime, ModelParams};
use crate::tract::{estimate_d, in_g, l_threshold, RadiusConfig, TractRegion};
use crate::transfer::{transfer_entire, transfer_model};

/// How the calibration samples are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBudget {
    /// Points per axis of each of the two sample grids.
    pub grid_n: usize,
    pub koebe_samples: usize,
    pub kcal_samples: usize,
    /// Preimages refined with the entire function per operator-ratio sample.
    pub refine_budget: usize,
    /// Quadrature tolerance for `E`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for CalibrationBudget {
    fn default() -> Self {
        CalibrationBudget {
            grid_n: 200,
            koebe_samples: 1000,
            kcal_samples: 100,
            refine_budget: 4,
            tol: 1e-9,
            seed: 1,
        }
    }
}

/// Record of what the calibration measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub inside_grid: String,
    pub outside_grid: String,
    pub koebe_grid: String,
    pub kcal_grid: String,
    pub max_correction: f64,
    pub max_correction_deriv: f64,
    pub max_outside: f64,
    pub max_koebe_ratio: f64,
    pub max_operator_ratio: f64,
    pub budget: CalibrationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    pub p: f64,
    /// Bound on `|E - f|`, `|E' - f'|` in `G_D` and on `|E|` off it.
    pub c_est: f64,
    pub d_est: f64,
    pub r0_est: f64,
    pub k_est: f64,
    pub kcal: f64,
    pub record: Option<CalibrationRecord>,
}

const BUNDLED: [(f64, &str); 3] = [
    (0.5, include_str!("../data/constants_p0.5.toml")),
    (1.0, include_str!("../data/constants_p1.toml")),
    (2.0, include_str!("../data/constants_p2.toml")),
];

impl CalibratedConstants {
    /// Constants with only the cutoff known; enough to evaluate `E`.
    pub fn with_cutoff(p: f64, d_est: f64) -> Self {
        CalibratedConstants {
            p,
            c_est: f64::NAN,
            d_est,
            r0_est: f64::NAN,
            k_est: f64::NAN,
            kcal: f64::NAN,
            record: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p, self.c_est, self.d_est, self.r0_est, self.k_est, self.kcal];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("calibrated constants must be positive and finite".into()));
        }
        if !(self.d_est > 3.0) {
            return Err(Error::Config(format!("D_est = {} must exceed 3", self.d_est)));
        }
        if !(self.r0_est > 4.0 * self.c_est) {
            return Err(Error::Config("r0_est must exceed 4 C_est".into()));
        }
        Ok(())
    }

    /// Default working radius `r0/2`.
    pub fn radius(&self) -> Result<RadiusConfig> {
        RadiusConfig::new(0.5 * self.r0_est, self.r0_est, self.d_est)
    }

    pub fn radius_at(&self, r: f64) -> Result<RadiusConfig> {
        RadiusConfig::new(r, self.r0_est, self.d_est)
    }

    pub fn to_report(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_report(text: &str) -> Result<Self> {
        let c: CalibratedConstants = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_report()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        CalibratedConstants::from_report(&std::fs::read_to_string(path)?)
    }

    /// Shipped constants for `p ∈ {0.5, 1, 2}`.
    pub fn bundled(p: f64) -> Option<Self> {
        BUNDLED
            .iter()
            .find(|(q, _)| (q - p).abs() < 1e-12)
            .and_then(|(_, text)| CalibratedConstants::from_report(text).ok())
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// Runs the full calibration for growth exponent `p`.
pub fn calibrate(p: f64, budget: &CalibrationBudget) -> Result<CalibratedConstants> {
    if budget.grid_n < 2 {
        return Err(Error::Config("calibration grid needs at least 2 points per axis".into()));
    }
    let d = estimate_d(p)?;
    let base = CalibratedConstants::with_cutoff(p, d);
    let params = ModelParams::new(p, 0.0)?;
    let n = budget.grid_n;
    let g_d = TractRegion::new(d, 1.0, p)?;

    // inside G_D: x log-spaced on [D, 100 D], y = q w(x) with q uniform in (-1, 1)
    let inside: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let x = d * 100f64.powf(i as f64 / (n - 1) as f64) * (1.0 + 1e-9);
            let q = -1.0 + (2 * j + 1) as f64 / n as f64;
            Complex64::new(x, q * g_d.half_width(x))
        })
        .collect();
    let inside_vals: Vec<(f64, f64)> = inside
        .par_iter()
        .map(|&z| representation(z, &params, &base, budget.tol).map(|r| (r.correction.norm(), r.correction_deriv.norm())))
        .collect::<Result<_>>()?;
    let max_corr = max_of(inside_vals.iter().map(|v| v.0));
    let max_corr_d = max_of(inside_vals.iter().map(|v| v.1));

    // outside G_D: polar grid, modulus log-spaced on [0.1, 1000], plus the corner point D
    let mut outside: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let rho = 0.1 * 1e4f64.powf(i as f64 / (n - 1) as f64);
            let th = -PI + (j + 1) as f64 * 2.0 * PI / n as f64;
            Complex64::from_polar(rho, th)
        })
        .filter(|z| !in_g(*z, &g_d))
        .collect();
    outside.push(Complex64::new(d, 0.0));
    let outside_vals: Vec<f64> = outside
        .par_iter()
        .map(|&z| representation(z, &params, &base, budget.tol).map(|r| r.correction.norm()))
        .collect::<Result<_>>()?;
    let max_out = max_of(outside_vals.into_iter());

    let c_est = 2.0 * max_corr.max(max_corr_d).max(max_out);
    let r0_est = 8.0 * c_est;

    // Koebe distortion of φ' over vertical steps of length ≤ 2π
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let koebe_pts: Vec<(Complex64, f64)> = (0..budget.koebe_samples)
        .map(|_| {
            let u = r0_est.ln() + rng.gen_range(0.0..20.0);
            let v = rng.gen_range(-1e3..1e3);
            (Complex64::new(u, v), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let koebe: Vec<f64> = koebe_pts
        .par_iter()
        .map(|&(xi, y)| {
            let a = phi_prime(xi, &params)?.norm();
            let b = phi_prime(xi + Complex64::new(0.0, y), &params)?.norm();
            Ok((b / a).max(a / b))
        })
        .collect::<Result<_>>()?;
    let max_koebe = max_of(koebe.into_iter()).max(1.0);

    // operator ratios at the smallest admissible translation
    let mut consts = CalibratedConstants {
        c_est,
        r0_est,
        k_est: 1.1 * max_koebe,
        kcal: 1.0,
        ..base
    };
    let cfg = consts.radius()?;
    let l = l_threshold(cfg.r, d) + 1.0;
    let lparams = ModelParams::new(p, l)?;
    let samples: Vec<(Complex64, f64)> = (0..budget.kcal_samples)
        .map(|_| {
            let u = cfg.log_r() + rng.gen_range(0.1..6.0);
            let v = rng.gen_range(-PI..PI);
            (Complex64::from_polar(u.exp(), v), rng.gen_range(1.1..2.0))
        })
        .collect();
    let ratios: Vec<f64> = samples
        .par_iter()
        .map(|&(w, t)| {
            let m = transfer_model(w, t, &lparams, &cfg, 1e-8)?;
            let e = transfer_entire(w, t, &lparams, &cfg, &consts, 1e-8, budget.refine_budget)?;
            let q = (e.value / m.value).powf(1.0 / t);
            Ok(q.max(1.0 / q))
        })
        .collect::<Result<_>>()?;
    let max_ratio = max_of(ratios.into_iter()).max(1.0);
    consts.kcal = 1.05 * max_ratio;

    consts.record = Some(CalibrationRecord {
        inside_grid: format!("{n} x {n}: x = D 100^(i/(n-1)), y = q w_D(x), q = -1 + (2j+1)/n"),
        outside_grid: format!("{n} x {n}: |z| = 0.1 1e4^(i/(n-1)), arg = -pi + 2 pi (j+1)/n, outside G_D; plus z = D"),
        koebe_grid: format!(
            "{} random xi = u + iv, u in [log r0, log r0 + 20], |v| <= 1e3, step in [0, 2 pi]",
            budget.koebe_samples
        ),
        kcal_grid: format!(
            "{} random w with log|w| in [log r + 0.1, log r + 6], t in [1.1, 2], l = {l}",
            budget.kcal_samples
        ),
        max_correction: max_corr,
        max_correction_deriv: max_corr_d,
        max_outside: max_out,
        max_koebe_ratio: max_koebe,
        max_operator_ratio: max_ratio,
        budget: *budget,
    });
    consts.validate()?;
    Ok(consts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_constants_are_valid() {
        for p in [0.5, 1.0, 2.0] {
            let c = CalibratedConstants::bundled(p).expect("bundled constants");
            assert_eq!(c.p, p);
            assert!(c.r0_est > 4.0 * c.c_est && c.d_est > 3.0);
            assert!(c.kcal >= 1.0 && c.k_est >= 1.0);
        }
        assert!(CalibratedConstants::bundled(0.7).is_none());
    }

    #[test]
    fn report_round_trip() {
        let c = CalibratedConstants::bundled(1.0).unwrap();
        let back = CalibratedConstants::from_report(&c.to_report().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn small_calibration_is_consistent() {
        let budget = CalibrationBudget {
            grid_n: 8,
            koebe_samples: 50,
            kcal_samples: 4,
            refine_budget: 2,
            tol: 1e-8,
            seed: 3,
        };
        let c = calibrate(1.0, &budget).unwrap();
        let rec = c.record.as_ref().unwrap();
        assert!(rec.max_correction <= c.c_est / 2.0 && rec.max_outside <= c.c_est / 2.0);
        assert!(c.r0_est > 4.0 * c.c_est);
    }
}
