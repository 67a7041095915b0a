//! The model maps `f_l(z) = exp(exp((Log(z - l))^(1+p)))`, their logarithmic
//! lifts `τ_l`, the inverse branches `φ_l = φ + l` with
//! `φ(ξ) = exp((Log ξ)^(1/(1+p)))`, and derivatives.
//!
//! Every power `w^α` is `exp(α Log w)` with the principal logarithm, so all
//! maps are real on the real axis to the right of `e + l`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_one_minus, principal_log, wrap_angle, LogComplex, EXP_THRESHOLD};
use crate::ComplexValue;

/// The growth exponent `p` and the translation `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p: f64,
    l: f64,
}

impl ModelParams {
    pub fn new(p: f64, l: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!("p must be positive and finite, got {p}")));
        }
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::Domain(format!("l must be nonnegative and finite, got {l}")));
        }
        Ok(ModelParams { p, l })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn with_l(&self, l: f64) -> Result<Self> {
        ModelParams::new(self.p, l)
    }
}

/// `log |f_l(z)|`, or which way it overflowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogModulus {
    Finite(f64),
    /// `Re u` exceeded the threshold; `positive` is the sign of `cos(Im u)`,
    /// i.e. whether `|f_l(z)|` is astronomically large or astronomically small.
    Overflow { positive: bool },
}

impl LogModulus {
    /// Whether `|f_l(z)| > r`, given `log_r = log r`.
    pub fn exceeds(&self, log_r: f64) -> bool {
        match *self {
            LogModulus::Finite(v) => v > log_r,
            LogModulus::Overflow { positive } => positive,
        }
    }
}

/// Outcome of one dynamical step in logarithmic coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftStep {
    /// `Log f_l(z)`.
    Value(ComplexValue),
    /// `Re (Log(z - l))^(1+p)` exceeded the exponent threshold; carries that exponent.
    Overflow { inner: ComplexValue },
}

fn real_pow(w: ComplexValue, alpha: f64) -> Result<ComplexValue> {
    if w.re == 0.0 && w.im == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok((principal_log(w)? * alpha).exp())
}

fn check_half_plane(xi: ComplexValue) -> Result<()> {
    if !(xi.re > 1.0) || !xi.im.is_finite() {
        return Err(Error::Domain(format!("ξ = {xi} outside the half-plane Re ξ > 1")));
    }
    Ok(())
}

/// `φ_l(ξ) = exp((Log ξ)^(1/(1+p))) + l`.
pub fn phi(xi: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    check_half_plane(xi)?;
    let a = real_pow(principal_log(xi)?, 1.0 / (1.0 + params.p))?;
    Ok(a.exp() + params.l)
}

/// `φ'(ξ)`, the derivative of the untranslated branch.
pub fn phi_prime(xi: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    check_half_plane(xi)?;
    let p = params.p;
    let lam = principal_log(xi)?;
    let a = real_pow(lam, 1.0 / (1.0 + p))?;
    Ok(a.exp() / (1.0 + p) * real_pow(lam, -p / (1.0 + p))? / xi)
}

/// `(log φ_l)'(ξ) = φ'(ξ) / (φ(ξ) + l)`.
///
/// Its modulus is the reciprocal of the logarithmic derivative
/// `|f_l'(z)| |z| / |f_l(z)|` at `z = φ_l(ξ)`.
pub fn log_phi_l_deriv(xi: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    check_half_plane(xi)?;
    let p = params.p;
    let lam = principal_log(xi)?;
    let a = real_pow(lam, 1.0 / (1.0 + p))?;
    let phi0 = a.exp();
    let dphi = phi0 / (1.0 + p) * real_pow(lam, -p / (1.0 + p))? / xi;
    Ok(dphi / (phi0 + params.l))
}

fn shifted_log(z: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    let w = z - params.l;
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(Error::Domain(format!("z - l = {w} lies on the branch cut")));
    }
    if w.norm() <= 1.0 {
        return Err(Error::Domain(format!("|z - l| = {} must exceed 1", w.norm())));
    }
    principal_log(w)
}

/// The inner exponent `u = (Log(z - l))^(1+p)`; `τ_l(z) = e^u`, `f_l(z) = e^(e^u)`.
pub fn tau_inner(z: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    real_pow(shifted_log(z, params)?, 1.0 + params.p)
}

/// `τ_l(z) = exp(u)`; fails if `Re u` is above the exponent threshold.
pub fn tau(z: ComplexValue, params: &ModelParams) -> Result<ComplexValue> {
    let u = tau_inner(z, params)?;
    if u.re > EXP_THRESHOLD {
        return Err(Error::Overflow(format!("Re u = {} at z = {z}", u.re)));
    }
    Ok(u.exp())
}

fn log_modulus_from_inner(u: ComplexValue) -> LogModulus {
    if u.re > EXP_THRESHOLD {
        LogModulus::Overflow {
            positive: u.im.cos() > 0.0,
        }
    } else {
        LogModulus::Finite(u.re.exp() * u.im.cos())
    }
}

/// `log |f_l(z)| = Re τ_l(z) = e^(Re u) cos(Im u)`.
pub fn log_abs_f(z: ComplexValue, params: &ModelParams) -> Result<LogModulus> {
    Ok(log_modulus_from_inner(tau_inner(z, params)?))
}

/// `f_l(z)` in logarithmic form.
pub fn log_f(z: ComplexValue, params: &ModelParams) -> Result<LogComplex> {
    Ok(LogComplex::from_exponent(tau(z, params)?))
}

/// `f_l'(z) = f_l(z) τ_l(z) u'(z)` in logarithmic form.
pub fn log_f_prime(z: ComplexValue, params: &ModelParams) -> Result<LogComplex> {
    let p = params.p;
    let lw = shifted_log(z, params)?;
    let u = real_pow(lw, 1.0 + p)?;
    if u.re > EXP_THRESHOLD {
        return Err(Error::Overflow(format!("Re u = {} at z = {z}", u.re)));
    }
    let tau = u.exp();
    let du = (1.0 + p) * real_pow(lw, p)? / (z - params.l);
    let ldu = principal_log(du)?;
    Ok(LogComplex::new(tau.re + u.re + ldu.re, tau.im + u.im + ldu.im))
}

/// One step of the dynamics on `ζ = Log z`, returning `Log f_l(z)`.
///
/// `z` itself is never formed: `Log(z - l) = ζ + Log(1 - l e^(-ζ))`, with the
/// correction taken from a power series when `|l e^(-ζ)| < 1/2`.
pub fn log_lift_step(zeta: ComplexValue, params: &ModelParams) -> Result<LiftStep> {
    let x = params.l * (-zeta).exp();
    let corr = log_one_minus(x)?;
    let lw = Complex64::new(zeta.re + corr.re, wrap_angle(zeta.im + corr.im));
    let u = real_pow(lw, 1.0 + params.p)?;
    if u.re > EXP_THRESHOLD {
        return Ok(LiftStep::Overflow { inner: u });
    }
    let t = u.exp();
    Ok(LiftStep::Value(Complex64::new(t.re, wrap_angle(t.im))))
}

/// Sign-aware `log |f_l(z)|` from the lift's overflow payload.
pub fn lift_overflow_modulus(inner: ComplexValue) -> LogModulus {
    log_modulus_from_inner(inner)
}

/// A point `ξ` of the right half-plane held through `Log ξ`, so that
/// `|Im ξ|` may exceed the floating-point range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiLog {
    /// `log |ξ|`
    pub log_abs: f64,
    /// `arg ξ`, in (-π/2, π/2)
    pub arg: f64,
}

impl XiLog {
    pub fn from_xi(xi: ComplexValue) -> Result<Self> {
        let l = principal_log(xi)?;
        Ok(XiLog {
            log_abs: l.re,
            arg: l.im,
        })
    }

    /// `ξ = u + iσ(V)` where `log V = log_v`, `V > 0`.
    pub fn from_log_height(u: f64, log_v: f64, sign: f64) -> Self {
        // u / V, underflowing harmlessly for huge V
        let ratio = u * (-log_v).exp();
        let log_abs = log_v + 0.5 * (ratio * ratio).ln_1p();
        let arg = sign * (std::f64::consts::FRAC_PI_2 - ratio.atan());
        XiLog { log_abs, arg }
    }
}

/// The model preimage `z = φ_l(ξ)` together with the transfer weight at `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimagePoint {
    /// `log |(log φ_l)'(ξ)|`
    pub log_weight: f64,
    /// `log |z|`
    pub log_abs_z: f64,
    /// `arg z`
    pub arg_z: f64,
}

/// Log-domain evaluation of the preimage geometry; valid for any `|ξ|`.
pub fn preimage_point(xi: XiLog, params: &ModelParams) -> PreimagePoint {
    let p = params.p;
    let lam = Complex64::new(xi.log_abs, xi.arg);
    // Re Λ = log|ξ| > 0 on the working half-plane, so Λ ≠ 0
    let llam = lam.ln();
    let a = (llam / (1.0 + p)).exp();
    let log_dphi = a.re - (1.0 + p).ln() - p / (1.0 + p) * llam.re - xi.log_abs;
    let (log_abs_z, arg_z) = if a.re <= 600.0 {
        let z = a.exp() + params.l;
        (z.norm().ln(), z.im.atan2(z.re))
    } else {
        let x = -params.l * (-a).exp();
        let corr = -log_one_minus(x).unwrap_or_default();
        (a.re + corr.re, wrap_angle(a.im + corr.im))
    };
    PreimagePoint {
        log_weight: log_dphi - log_abs_z,
        log_abs_z,
        arg_z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(1.0, f64::INFINITY).is_err());
        assert!(ModelParams::new(0.5, 0.0).is_ok());
    }

    #[test]
    fn phi_examples() {
        for p in [0.5, 1.0, 2.0] {
            let m = ModelParams::new(p, 0.0).unwrap();
            assert!(rel(phi(c(E, 0.0), &m).unwrap().re, E) < 1e-15);
        }
        let m = ModelParams::new(1.0, 0.0).unwrap();
        let v = phi(c(4f64.exp(), 0.0), &m).unwrap();
        assert!(rel(v.re, 2f64.exp()) < 1e-14 && v.im == 0.0);
        let m = ModelParams::new(1.0, 100.0).unwrap();
        let v = phi(c(4f64.exp(), 0.0), &m).unwrap();
        assert!(rel(v.re, 2f64.exp() + 100.0) < 1e-14);
        assert!(phi(c(0.5, 3.0), &m).is_err());
    }

    #[test]
    fn tau_inner_examples() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        let u = tau_inner(c(2f64.exp(), 0.0), &m).unwrap();
        assert!(rel(u.re, 4.0) < 1e-14 && u.im == 0.0);
        for (p, l) in [(0.5, 0.0), (1.0, 37.0), (2.0, 1e4)] {
            let m = ModelParams::new(p, l).unwrap();
            let u = tau_inner(c(E + l, 0.0), &m).unwrap();
            assert!((u.re - 1.0).abs() < 1e-12, "{p} {l}: {u}");
        }
        assert!(tau_inner(c(-3.0, 0.0), &m).is_err());
        assert!(tau_inner(c(0.5, 0.1), &m).is_err());
    }

    #[test]
    fn tau_inner_matches_central_difference() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        let x = 2f64.exp() * (1.0 + 1e-6);
        let h = 1e-5;
        let fd = (tau_inner(c(x + h, 0.0), &m).unwrap().re - tau_inner(c(x - h, 0.0), &m).unwrap().re)
            / (2.0 * h);
        // d/dx (ln x)^2 = 2 ln x / x
        let exact = 2.0 * x.ln() / x;
        assert!(rel(fd, exact) < 1e-6);
        // and the value is consistent with a first-order expansion from e^2
        let u0 = 4.0;
        let u = tau_inner(c(x, 0.0), &m).unwrap().re;
        assert!(rel(u, u0 + exact * (x - 2f64.exp())) < 1e-6);
    }

    #[test]
    fn log_abs_f_examples() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        match log_abs_f(c(2f64.exp(), 0.0), &m).unwrap() {
            LogModulus::Finite(v) => assert!(rel(v, 4f64.exp()) < 1e-13),
            o => panic!("{o:?}"),
        }
        let m = ModelParams::new(2.0, 50.0).unwrap();
        match log_abs_f(c(E + 50.0, 0.0), &m).unwrap() {
            LogModulus::Finite(v) => assert!(rel(v, E) < 1e-12),
            o => panic!("{o:?}"),
        }
        let m = ModelParams::new(1.0, 0.0).unwrap();
        assert_eq!(
            log_abs_f(c(1e15, 0.0), &m).unwrap(),
            LogModulus::Overflow { positive: true }
        );
    }

    #[test]
    fn log_phi_l_deriv_closed_form() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        let v = log_phi_l_deriv(c(4f64.exp(), 0.0), &m).unwrap();
        let expect = 0.25 * (-4f64).exp();
        assert!(rel(v.re, expect) < 1e-14 && v.im.abs() < 1e-18);
        assert!((expect - 0.0045790).abs() < 1e-7);
    }

    #[test]
    fn log_phi_l_deriv_conjugate_symmetry() {
        let m = ModelParams::new(1.5, 20.0).unwrap();
        for xi in [c(3.0, 4.0), c(7.5, -120.0), c(2.0, 1e3)] {
            let a = log_phi_l_deriv(xi, &m).unwrap();
            let b = log_phi_l_deriv(xi.conj(), &m).unwrap();
            assert!((a.conj() - b).norm() <= 1e-15 * a.norm());
        }
    }

    #[test]
    fn lift_examples() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        match log_lift_step(c(1.0, 0.0), &m).unwrap() {
            LiftStep::Value(v) => assert!(rel(v.re, E) < 1e-14 && v.im == 0.0),
            o => panic!("{o:?}"),
        }
        match log_lift_step(c(2.0, 0.0), &m).unwrap() {
            LiftStep::Value(v) => assert!(rel(v.re, 4f64.exp()) < 1e-13),
            o => panic!("{o:?}"),
        }
        match log_lift_step(c(60.0, 0.0), &m).unwrap() {
            LiftStep::Overflow { inner } => assert!((inner.re - 3600.0).abs() < 1e-9),
            o => panic!("{o:?}"),
        }
        // with a translation the lift agrees with the direct route
        let m = ModelParams::new(1.0, 300.0).unwrap();
        let z = c(305.0, 0.7);
        let direct = tau(z, &m).unwrap();
        match log_lift_step(principal_log(z).unwrap(), &m).unwrap() {
            LiftStep::Value(v) => {
                assert!((v.re - direct.re).abs() < 1e-10 * direct.norm());
                assert!((wrap_angle(v.im - direct.im)).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn lift_series_and_direct_agree_across_switch() {
        let m = ModelParams::new(1.0, 10.0).unwrap();
        // |l e^{-ζ}| = 1/2 at Re ζ = ln 20
        let zeta_in = c((20f64).ln() + 1e-13, 0.3);
        let zeta_out = c((20f64).ln() - 1e-13, 0.3);
        let a = match log_lift_step(zeta_in, &m).unwrap() {
            LiftStep::Value(v) => v,
            _ => unreachable!(),
        };
        let b = match log_lift_step(zeta_out, &m).unwrap() {
            LiftStep::Value(v) => v,
            _ => unreachable!(),
        };
        assert!((a - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn log_form_preimage_matches_direct() {
        let m = ModelParams::new(1.0, 250.0).unwrap();
        for xi in [c(5.6, 0.3), c(6.0, 1e4), c(9.0, -3e7)] {
            let pt = preimage_point(XiLog::from_xi(xi).unwrap(), &m);
            let d = log_phi_l_deriv(xi, &m).unwrap();
            assert!((pt.log_weight - d.norm().ln()).abs() < 1e-12);
            let z = phi(xi, &m).unwrap();
            assert!((pt.log_abs_z - z.norm().ln()).abs() < 1e-12);
            assert!((pt.arg_z - z.im.atan2(z.re)).abs() < 1e-12);
        }
        // large-height constructor agrees with the direct one
        let u = 6.0;
        let v: f64 = 1e12;
        let a = XiLog::from_log_height(u, v.ln(), -1.0);
        let b = XiLog::from_xi(c(u, -v)).unwrap();
        assert!((a.log_abs - b.log_abs).abs() < 1e-14 && (a.arg - b.arg).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_f_matches_difference_quotient() {
        let m = ModelParams::new(1.0, 0.0).unwrap();
        let z = c(4.5, 0.3);
        let h = 1e-6;
        let fz = |z| log_f(z, &m).unwrap().to_complex().unwrap();
        let fd = (fz(z + h) - fz(z - h)) / (2.0 * h);
        let d = log_f_prime(z, &m).unwrap().to_complex().unwrap();
        assert!((fd - d).norm() < 1e-6 * d.norm());
    }
}
