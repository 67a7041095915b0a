//! Transfer operators `L_t h(w) = Σ_k |(log φ_l)'(ξ_k)|^t h(φ_l(ξ_k))` with
//! `ξ_k = log|w| + i(Arg w + 2πk)`.
//!
//! The sum over `|k| ≤ K` is taken term by term. The two one-sided tails are
//! replaced by the midpoint-rule identity
//! `Σ_{k>K} g(k) = ∫_{K+½}^∞ g + g'(K+½)/24 - 7 g'''(K+½)/5760 + …`,
//! with the integral done by Gauss–Kronrod panels in `s = ln(x / (K+½))`
//! and cut where an explicit majorant of the remainder is negligible. The
//! terms are kept in logarithmic form, so `|Im ξ|` may be astronomically large.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::calibrate::CalibratedConstants;
use crate::cauchy::eval_E_with_deriv;
use crate::error::{Error, Result};
use crate::model::{preimage_point, ModelParams, PreimagePoint, XiLog};
use crate::numeric::{wrap_angle, CompensatedSum};
use crate::quad::gk15_nodes;
use crate::tract::RadiusConfig;
use crate::ComplexValue;

/// Default relative accuracy of a transfer sum.
pub const DEFAULT_EPS_TAIL: f64 = 1e-8;

const K_START_MIN: u64 = 8;
const K_MAX: u64 = 1 << 22;
const MAX_TAIL_PANELS: usize = 20_000;

/// `ξ_k = log|w| + i(Arg w + 2πk)`.
pub fn preimage_xi(w: ComplexValue, k: i64) -> ComplexValue {
    Complex64::new(w.norm().ln(), w.im.atan2(w.re) + 2.0 * PI * k as f64)
}

/// Elementary overestimate of `Σ_{|k|>K} |(log φ_l)'(ξ_k)|^t` at `u = log|w|`,
/// from `|(log φ_l)'(ξ)| ≤ |ξ|^{-1} / (1+p)` and an integral comparison.
pub fn tail_bound(u: f64, k: u64, t: f64, p: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::Divergence { t });
    }
    let kf = k as f64;
    if k == 0 || 2.0 * PI * kf < u.max(E * E) {
        return Err(Error::Domain(format!("truncation index {k} too small for u = {u}")));
    }
    let c = (1.0 / (1.0 + p)).powf(t);
    let integral = c * (2.0 * PI * kf).powf(1.0 - t) / (PI * (t - 1.0));
    let first = 2.0 * c * (2.0 * PI * (kf + 0.5)).powf(-t);
    Ok(integral + first)
}

/// One weighted preimage `z = φ_l(ξ)`: `weight` already includes `|(log φ_l)'(ξ)|^t`
/// and any quadrature or correction coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub log_abs_z: f64,
    pub arg_z: f64,
}

/// The terms representing `L_t` at one point, plus error accounting.
#[derive(Debug, Clone)]
pub struct TermExpansion {
    pub terms: Vec<Term>,
    /// Truncation index: `|k| ≤ K` summed directly.
    pub k: u64,
    /// Estimated error of the midpoint-rule identity.
    pub em_err: f64,
    /// Embedded-rule error of the tail integrals.
    pub quad_err: f64,
    /// Majorant of the tail integrals beyond their cut.
    pub remainder: f64,
}

impl TermExpansion {
    pub fn error(&self) -> f64 {
        self.em_err + self.quad_err + self.remainder
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).collect::<CompensatedSum>().value()
    }
}

fn term_at(xi: XiLog, t: f64, params: &ModelParams) -> (f64, PreimagePoint) {
    let pt = preimage_point(xi, params);
    ((t * pt.log_weight).exp(), pt)
}

/// Term for continuous index `x > 0` on one side (`sign = ±1`).
fn side_term(u: f64, v: f64, log_x: f64, sign: f64, t: f64, params: &ModelParams) -> (f64, PreimagePoint) {
    // |Im ξ| = 2πx + sign·v
    let x = log_x.exp();
    let log_height = if x.is_finite() && x < 1e12 {
        (2.0 * PI * x + sign * v).ln()
    } else {
        (2.0 * PI).ln() + log_x + (sign * v / (2.0 * PI) * (-log_x).exp()).ln_1p()
    };
    term_at(XiLog::from_log_height(u, log_height, sign), t, params)
}

fn push(terms: &mut Vec<Term>, weight: f64, pt: &PreimagePoint) {
    terms.push(Term {
        weight,
        log_abs_z: pt.log_abs_z,
        arg_z: pt.arg_z,
    });
}

/// `log` of the majorant of `∫_X^∞` over both sides, `X = e^{log_x} ≥ 1`,
/// using `|ξ| ≥ 2πx - π ≥ πx`.
fn log_remainder(log_x: f64, t: f64, p: f64) -> f64 {
    let beta = t * p / (1.0 + p);
    let log_pix = PI.ln() + log_x;
    2f64.ln() - t * (1.0 + p).ln() - t * PI.ln() + (1.0 - t) * log_x - beta * log_pix.ln() - (t - 1.0).ln()
}

/// Builds the term list for `w = e^{u + iv}`. `eps` is an absolute target for the
/// total error of the weight sum.
pub fn expand_terms(u: f64, v: f64, t: f64, params: &ModelParams, eps: f64) -> Result<TermExpansion> {
    if !(t > 1.0) {
        return Err(Error::Divergence { t });
    }
    let v = wrap_angle(v);
    let p = params.p();
    let mut k = ((u.max(E * E) / (2.0 * PI)).ceil() as u64).max(K_START_MIN);
    // choose K from the size of the third-derivative term of the midpoint identity
    let em = |k: u64| {
        let x = k as f64 + 0.5;
        let g: f64 = [1.0, -1.0]
            .iter()
            .map(|&s| side_term(u, v, x.ln(), s, t, params).0)
            .sum();
        t * (t + 1.0) * (t + 2.0) / 288.0 * g / x.powi(3)
    };
    while em(k) > 0.25 * eps {
        k *= 2;
        if k > K_MAX {
            return Err(Error::Domain(format!("transfer truncation exceeded {K_MAX} terms")));
        }
    }
    let em_err = em(k);

    let mut terms = Vec::with_capacity(2 * k as usize + 64);
    let (w0, pt0) = term_at(XiLog::from_xi(Complex64::new(u, v))?, t, params);
    push(&mut terms, w0, &pt0);
    for j in 1..=k {
        for s in [1.0, -1.0] {
            let xi = Complex64::new(u, v + s * 2.0 * PI * j as f64);
            let (w, pt) = term_at(XiLog::from_xi(xi)?, t, params);
            // g'(K+½)/24 ≈ (g(K+1) - g(K))/24
            let w = if j == k { w * (1.0 - 1.0 / 24.0) } else { w };
            push(&mut terms, w, &pt);
        }
    }
    let kf = k as f64;
    for s in [1.0, -1.0] {
        let (w, pt) = side_term(u, v, (kf + 1.0).ln(), s, t, params);
        push(&mut terms, w / 24.0, &pt);
    }

    // tail integrals in s = ln(x / (K+½)); panel widths grow to the decay scale
    let base = (kf + 0.5).ln();
    let cap = (2.0 / (t - 1.0)).max(1.0);
    let target = 0.25 * eps;
    let mut quad_err = 0.0;
    let mut a = 0.0;
    let mut width: f64 = 0.5;
    let mut panels = 0;
    let remainder = loop {
        let rem = log_remainder(base + a, t, p).exp();
        if rem <= target {
            break rem;
        }
        if panels >= MAX_TAIL_PANELS {
            return Err(Error::Domain(format!("transfer tail did not decay (t = {t})")));
        }
        let b = a + width;
        for s in [1.0, -1.0] {
            let mut kr = 0.0;
            let mut gs = 0.0;
            for (node, wk, wg) in gk15_nodes(a, b) {
                let log_x = base + node;
                let (_, pt) = side_term(u, v, log_x, s, t, params);
                // dx = x ds, formed in log space since x itself may overflow
                let gx = (t * pt.log_weight + log_x).exp();
                kr += wk * gx;
                gs += wg * gx;
                push(&mut terms, wk * gx, &pt);
            }
            quad_err += (kr - gs).abs();
        }
        a = b;
        width = (width * 2.0).min(cap).max(0.5);
        panels += 1;
    };

    Ok(TermExpansion {
        terms,
        k,
        em_err,
        quad_err,
        remainder,
    })
}

/// `Σ_{k_lo < |k| ≤ k_hi} |(log φ_l)'(ξ_k)|^t`, summed directly in ascending `|k|`.
pub fn partial_sum(w: ComplexValue, t: f64, params: &ModelParams, k_lo: u64, k_hi: u64) -> Result<f64> {
    let u = w.norm().ln();
    let v = w.im.atan2(w.re);
    let mut acc = CompensatedSum::new();
    for j in (k_lo + 1)..=k_hi {
        for s in [1.0, -1.0] {
            let xi = Complex64::new(u, v + s * 2.0 * PI * j as f64);
            acc.add(term_at(XiLog::from_xi(xi)?, t, params).0);
        }
    }
    Ok(acc.value())
}

/// A value of `L_t 1(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferValue {
    pub value: f64,
    /// Estimated total error of `value` from truncation and tail evaluation.
    pub tail_bound: f64,
    /// Directly summed index range `|k| ≤ K`.
    #[serde(rename = "K")]
    pub k: u64,
    /// Number of weighted terms (direct terms and tail quadrature nodes).
    pub terms: u64,
    /// Fraction of direct terms evaluated with the entire function.
    pub refined_fraction: f64,
    /// Refined terms that fell back to the model term.
    pub fallbacks: u64,
}

fn check_point(w: ComplexValue, cfg: &RadiusConfig) -> Result<()> {
    if !(w.norm() > cfg.r) || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("|w| = {} must exceed r = {}", w.norm(), cfg.r)));
    }
    Ok(())
}

/// Model operator `L_{f_l,t} 1(w)`. `eps_tail` is relative to the value.
pub fn transfer_model(
    w: ComplexValue,
    t: f64,
    params: &ModelParams,
    cfg: &RadiusConfig,
    eps_tail: f64,
) -> Result<TransferValue> {
    if !(t > 1.0) {
        return Err(Error::Divergence { t });
    }
    check_point(w, cfg)?;
    let u = w.norm().ln();
    let v = w.im.atan2(w.re);
    // the untruncated head is a lower bound and fixes the absolute target
    let rough = expand_terms(u, v, t, params, f64::INFINITY)?.weight_sum();
    let exp = expand_terms(u, v, t, params, eps_tail * rough)?;
    Ok(TransferValue {
        value: exp.weight_sum(),
        tail_bound: exp.error(),
        k: exp.k,
        terms: exp.terms.len() as u64,
        refined_fraction: 0.0,
        fallbacks: 0,
    })
}

/// Newton solve of `E_l(z) = w` on the branch `log E_l(z) = ξ`, seeded at the model preimage.
fn refine_preimage(
    seed: ComplexValue,
    w: ComplexValue,
    xi: ComplexValue,
    params: &ModelParams,
    consts: &CalibratedConstants,
) -> Result<(ComplexValue, ComplexValue, ComplexValue)> {
    let tol = 1e-10 * w.norm().max(1.0);
    let mut z = seed;
    for _ in 0..12 {
        let (e, de, _) = eval_E_with_deriv(z, params, consts, tol)?;
        let mut le = e.ln();
        le.im += 2.0 * PI * ((xi.im - le.im) / (2.0 * PI)).round();
        if (e - w).norm() <= 1e-8 * w.norm() {
            return Ok((z, e, de));
        }
        let step = (le - xi) * e / de;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            break;
        }
    }
    Err(Error::NonConvergence {
        best: z,
        err_est: f64::NAN,
        tol: 1e-8,
    })
}

/// Entire operator `L_{E_l,t} 1(w)`: the first `refine_budget` direct terms in the
/// order `k = 0, 1, -1, 2, -2, …` use the actual preimages of `E_l`, the rest
/// use model terms.
pub fn transfer_entire(
    w: ComplexValue,
    t: f64,
    params: &ModelParams,
    cfg: &RadiusConfig,
    consts: &CalibratedConstants,
    eps_tail: f64,
    refine_budget: usize,
) -> Result<TransferValue> {
    let base = transfer_model(w, t, params, cfg, eps_tail)?;
    if refine_budget == 0 {
        return Ok(base);
    }
    let u = w.norm().ln();
    let v = w.im.atan2(w.re);
    let mut value = base.value;
    let mut refined = 0u64;
    let mut fallbacks = 0u64;
    let mut extra_err = 0.0;
    let order = (0..refine_budget as i64).map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) });
    for kk in order {
        if kk.unsigned_abs() > base.k {
            break;
        }
        let xi = Complex64::new(u, v + 2.0 * PI * kk as f64);
        let (model_w, pt) = term_at(XiLog::from_xi(xi)?, t, params);
        let model_w = if kk.unsigned_abs() == base.k { model_w * (1.0 - 1.0 / 24.0) } else { model_w };
        let seed = Complex64::from_polar(pt.log_abs_z.exp(), pt.arg_z);
        match refine_preimage(seed, w, xi, params, consts) {
            Ok((z, e, de)) => {
                let log_deriv = de.norm() * z.norm() / e.norm();
                let mut ew = log_deriv.powf(-t);
                if kk.unsigned_abs() == base.k {
                    ew *= 1.0 - 1.0 / 24.0;
                }
                value += ew - model_w;
                refined += 1;
            }
            Err(_) => {
                fallbacks += 1;
                extra_err += model_w * (2f64.powf(t) - 1.0);
            }
        }
    }
    let direct = 2 * base.k + 1;
    Ok(TransferValue {
        value,
        tail_bound: base.tail_bound + extra_err,
        k: base.k,
        terms: base.terms,
        refined_fraction: refined as f64 / direct as f64,
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(r: f64) -> RadiusConfig {
        RadiusConfig { r, l_min: 0.0 }
    }

    #[test]
    fn preimage_examples() {
        let r = 50.0;
        let xi = preimage_xi(c(r * E, 0.0), 0);
        assert!((xi.re - (1.0 + r.ln())).abs() < 1e-14 && xi.im == 0.0);
        let w = c(120.0, 0.0);
        assert_eq!(preimage_xi(w, 3).conj(), preimage_xi(w, -3));
        let w = c(-40.0, 77.0);
        for k in [-5, 0, 9] {
            assert!((preimage_xi(w, k).exp() - w).norm() < 1e-12 * w.norm());
        }
    }

    #[test]
    fn tail_bound_power_law() {
        let a = tail_bound(6.0, 100, 2.0, 1.0).unwrap();
        let b = tail_bound(6.0, 200, 2.0, 1.0).unwrap();
        assert!(b <= 0.5 * a);
        assert!(matches!(tail_bound(6.0, 100, 1.0, 1.0), Err(Error::Divergence { .. })));
        let x = tail_bound(6.0, 100, 1.001, 1.0).unwrap();
        let y = tail_bound(6.0, 100, 1.0001, 1.0).unwrap();
        assert!(y > 5.0 * x);
    }

    #[test]
    fn tail_bound_dominates_partial_sums() {
        let m = ModelParams::new(1.0, 30.0).unwrap();
        for (w, t) in [(c(200.0, 10.0), 1.3), (c(-90.0, -500.0), 2.0), (c(3e4, 0.0), 1.1)] {
            let k = 40;
            let s = partial_sum(w, t, &m, k, 10 * k).unwrap();
            assert!(s <= tail_bound(w.norm().ln(), k, t, 1.0).unwrap());
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let m = ModelParams::new(1.0, 120.0).unwrap();
        let w = c(300.0, 180.0);
        let a = transfer_model(w, 1.4, &m, &cfg(200.0), 1e-8).unwrap();
        let b = transfer_model(w.conj(), 1.4, &m, &cfg(200.0), 1e-8).unwrap();
        assert!((a.value - b.value).abs() <= 1e-13 * a.value);
    }

    #[test]
    fn tail_accounting_against_brute_force() {
        // direct summation over a long range plus the explicit bound beyond it
        let m = ModelParams::new(1.0, 50.0).unwrap();
        let w = c(400.0, -50.0);
        let t = 2.0;
        let tv = transfer_model(w, t, &m, &cfg(100.0), 1e-10).unwrap();
        let big = 200_000;
        let direct = partial_sum(w, t, &m, 0, big).unwrap()
            + term_at(XiLog::from_xi(preimage_xi(w, 0)).unwrap(), t, &m).0;
        let rest = tail_bound(w.norm().ln(), big, t, 1.0).unwrap();
        assert!(tv.value >= direct - tv.tail_bound);
        assert!(tv.value <= direct + rest + tv.tail_bound);
        assert!(tv.tail_bound < 1e-3 * tv.value);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        assert!(matches!(
            transfer_model(c(500.0, 0.0), 1.0, &m, &cfg(100.0), 1e-8),
            Err(Error::Divergence { .. })
        ));
        assert!(matches!(
            transfer_model(c(50.0, 0.0), 1.5, &m, &cfg(100.0), 1e-8),
            Err(Error::Domain(_))
        ));
    }
}
