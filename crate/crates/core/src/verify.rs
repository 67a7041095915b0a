//! Numerical checks of the comparison bounds between the model and the
//! entire function, distortion, decay of the transfer operator and its
//! divergence at `t = 1`. Sampling is seeded, so the report is reproducible
//! and independent of the worker count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calibrate::CalibratedConstants;
use crate::cauchy::{eval_E, representation};
use crate::error::{Error, Result};
use crate::model::{phi, phi_prime, ModelParams};
use crate::tract::{in_g, RadiusConfig, TractRegion};
use crate::transfer::{partial_sum, transfer_entire, transfer_model};

/// Largest `Re τ` sampled, keeping `|f|` representable.
const MAX_LOG_F: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub approx_samples: usize,
    pub operator_samples: usize,
    pub koebe_samples: usize,
    pub decay_samples: usize,
    pub refine_budget: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            approx_samples: 200,
            operator_samples: 100,
            koebe_samples: 200,
            decay_samples: 40,
            refine_budget: 4,
            tol: 1e-9,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub limit: f64,
    pub samples: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub p: f64,
    pub l: f64,
    pub r: f64,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, worst: f64, limit: f64, samples: usize, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        worst,
        limit,
        samples,
        detail,
    }
}

/// `|log2 ratio|`, so that `ratio ∈ [1/2, 2]` iff the value is `≤ 1`.
fn log2_dev(ratio: f64) -> f64 {
    ratio.log2().abs()
}

/// Points of `{|f_l| > r}` as `z = φ_l(ξ)` with `log r < Re ξ ≤ 600`, denser near `|f_l| = r`.
fn tract_samples(rng: &mut ChaCha8Rng, n: usize, cfg: &RadiusConfig) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let s: f64 = rng.gen_range(0.0..1.0);
            let u = cfg.log_r() + 1e-3 + s.powi(3) * (MAX_LOG_F - cfg.log_r());
            Complex64::new(u, rng.gen_range(-PI..PI))
        })
        .collect()
}

/// `|E - f|`, `|E' - f'|` and the two modulus ratios on `{|f_l| > r}`; `|E|` off `G_D + l`.
pub fn check_approximation(
    params: &ModelParams,
    cfg: &RadiusConfig,
    consts: &CalibratedConstants,
    n: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>> {
    let xis = tract_samples(rng, n, cfg);
    let inside: Vec<(f64, f64, f64, f64)> = xis
        .par_iter()
        .map(|&xi| {
            let z = phi(xi, params)?;
            let rep = representation(z, params, consts, tol)?;
            if !rep.in_tract {
                return Err(Error::Domain(format!("sample {z} of {{|f_l| > r}} lies outside G_D + l")));
            }
            // E = f + correction; ratios formed without cancellation
            let f = xi.exp();
            let fp = f / phi_prime(xi, params)?;
            let (c0, c1) = (rep.correction, rep.correction_deriv);
            Ok((c0.norm(), c1.norm(), (1.0 + c0 / f).norm(), (1.0 + c1 / fp).norm()))
        })
        .collect::<Result<_>>()?;
    let region = TractRegion::new(consts.d_est, 1.0, params.p())?;
    let mut outside = Vec::with_capacity(n);
    while outside.len() < n {
        let rho = 0.1 * 1e4f64.powf(rng.gen_range(0.0..1.0));
        let y = Complex64::from_polar(rho, rng.gen_range(-PI..PI));
        if !in_g(y, &region) {
            outside.push(y + params.l());
        }
    }
    let off: Vec<f64> = outside
        .par_iter()
        .map(|&z| eval_E(z, params, consts, tol).map(|q| q.value.norm()))
        .collect::<Result<_>>()?;

    let c = consts.c_est;
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let de = max(&mut inside.iter().map(|v| v.0));
    let dd = max(&mut inside.iter().map(|v| v.1));
    let re = max(&mut inside.iter().map(|v| log2_dev(v.2)));
    let rd = max(&mut inside.iter().map(|v| log2_dev(v.3)));
    let eo = max(&mut off.iter().copied());
    Ok(vec![
        check("approx_value", de, c, n, de <= c, "max |E - f| on {|f_l| > r}".into()),
        check("approx_deriv", dd, c, n, dd <= c, "max |E' - f'| on {|f_l| > r}".into()),
        check("ratio_value", re, 1.0, n, re <= 1.0, "max |log2 |E/f|| on {|f_l| > r}".into()),
        check("ratio_deriv", rd, 1.0, n, rd <= 1.0, "max |log2 |E'/f'|| on {|f_l| > r}".into()),
        check("off_tract", eo, c, n, eo <= c, "max |E| outside G_D + l".into()),
    ])
}

/// Ratio of the entire to the model operator against `[Kcal^-t, Kcal^t]`.
pub fn check_operator_ratio(
    params: &ModelParams,
    cfg: &RadiusConfig,
    consts: &CalibratedConstants,
    n: usize,
    refine_budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Check> {
    let samples: Vec<(Complex64, f64)> = (0..n)
        .map(|_| {
            let u = cfg.log_r() + rng.gen_range(0.1..6.0);
            (Complex64::from_polar(u.exp(), rng.gen_range(-PI..PI)), rng.gen_range(1.1..2.0))
        })
        .collect();
    // normalized so the bound reads worst ≤ log Kcal
    let devs: Vec<f64> = samples
        .par_iter()
        .map(|&(w, t)| {
            let m = transfer_model(w, t, params, cfg, 1e-8)?;
            let e = transfer_entire(w, t, params, cfg, consts, 1e-8, refine_budget)?;
            Ok((e.value / m.value).ln().abs() / t)
        })
        .collect::<Result<_>>()?;
    let worst = devs.iter().copied().fold(0.0, f64::max);
    let limit = consts.kcal.ln();
    Ok(check(
        "operator_ratio",
        worst,
        limit,
        n,
        worst <= limit && consts.kcal <= 2.0,
        format!("max |log(L_E 1 / L_f 1)| / t against log Kcal, Kcal = {}", consts.kcal),
    ))
}

/// `|φ'(ξ + iy)| / |φ'(ξ)|` for `Re ξ ≥ log r0`, `0 ≤ y ≤ 2π`, against `K_est`.
pub fn check_koebe(params: &ModelParams, consts: &CalibratedConstants, n: usize, rng: &mut ChaCha8Rng) -> Result<Check> {
    let base = ModelParams::new(params.p(), 0.0)?;
    let pts: Vec<(Complex64, f64)> = (0..n)
        .map(|_| {
            let xi = Complex64::new(consts.r0_est.ln() + rng.gen_range(0.0..20.0), rng.gen_range(-1e3..1e3));
            (xi, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let ratios: Vec<f64> = pts
        .par_iter()
        .map(|&(xi, y)| {
            let a = phi_prime(xi, &base)?.norm();
            let b = phi_prime(xi + Complex64::new(0.0, y), &base)?.norm();
            Ok((a / b).max(b / a))
        })
        .collect::<Result<_>>()?;
    let worst = ratios.iter().copied().fold(1.0, f64::max);
    Ok(check(
        "koebe",
        worst,
        consts.k_est,
        n,
        worst <= consts.k_est,
        "max two-sided ratio of |phi'| over vertical steps up to 2 pi".into(),
    ))
}

/// `L_t 1(w) (log |w|)^δ` stays within a factor 50 over `|w| ∈ [r, 10^6]`, `t = 1.5`.
pub fn check_decay(params: &ModelParams, cfg: &RadiusConfig, n: usize) -> Result<Check> {
    let t = 1.5;
    let delta = (t - 1.0) / 2.0;
    let top = 1e6f64.max(2.0 * cfg.r);
    let ws: Vec<Complex64> = (0..n)
        .map(|k| {
            let s = k as f64 / (n.max(2) - 1) as f64;
            let modulus = cfg.r * (1.0 + 1e-9) * (top / cfg.r).powf(s);
            Complex64::from_polar(modulus, PI * (2.0 * (k % 7) as f64 / 7.0 - 1.0) * 0.999)
        })
        .collect();
    let prods: Vec<f64> = ws
        .par_iter()
        .map(|&w| transfer_model(w, t, params, cfg, 1e-8).map(|v| v.value * w.norm().ln().powf(delta)))
        .collect::<Result<_>>()?;
    let hi = prods.iter().copied().fold(0.0, f64::max);
    let lo = prods.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    Ok(check(
        "decay",
        ratio,
        50.0,
        n,
        ratio <= 50.0,
        format!("max/min of L_1.5 1(w) (log|w|)^{delta} over r <= |w| <= 1e6"),
    ))
}

/// Increments `S_{10K} - S_K` at `t = 1` do not shrink, and the operator refuses `t = 1`.
pub fn check_divergence(params: &ModelParams, cfg: &RadiusConfig) -> Result<Check> {
    let w = Complex64::from_polar(2.0 * cfg.r, 0.7);
    let incs: Vec<f64> = [100u64, 1000, 10000]
        .iter()
        .map(|&k| partial_sum(w, 1.0, params, k, 10 * k))
        .collect::<Result<_>>()?;
    let c = 0.5 * incs[0];
    let worst = incs.iter().copied().fold(f64::INFINITY, f64::min);
    let refused = matches!(transfer_model(w, 1.0, params, cfg, 1e-8), Err(Error::Divergence { .. }));
    Ok(check(
        "divergence_t1",
        worst,
        c,
        incs.len(),
        c > 0.0 && worst >= c && refused,
        format!("S_10K - S_K at t = 1 for K = 100, 1000, 10000: {incs:?}; t = 1 rejected: {refused}"),
    ))
}

pub fn run_verify(
    params: &ModelParams,
    cfg: &RadiusConfig,
    consts: &CalibratedConstants,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = check_approximation(params, cfg, consts, opts.approx_samples, opts.tol, &mut rng)?;
    checks.push(check_operator_ratio(params, cfg, consts, opts.operator_samples, opts.refine_budget, &mut rng)?);
    checks.push(check_koebe(params, consts, opts.koebe_samples, &mut rng)?);
    checks.push(check_decay(params, cfg, opts.decay_samples)?);
    checks.push(check_divergence(params, cfg)?);
    Ok(VerifyReport {
        p: params.p(),
        l: params.l(),
        r: cfg.r,
        seed: opts.seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
