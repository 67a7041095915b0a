//! The entire function `E` and its derivative from the Cauchy-integral
//! representations over the boundaries of `G_{D+1,5/6}` and `G_{D-1,7/6}`.
//!
//! Outside `G_D`, `E(z) = (1/2πi) ∫_Ľ f(t)/(t - z) dt`; inside,
//! `E(z) = f(z) + (1/2πi) ∫_L̂ f(t)/(t - z) dt`, both contours clockwise.
//! Translated maps use `E_l(z) = E(z - l)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::calibrate::CalibratedConstants;
use crate::error::{Error, Result};
use crate::model::{log_f, log_f_prime, tau_inner, ModelParams};
use crate::numeric::{LogComplex, EXP_THRESHOLD};
use crate::quad;
use crate::tract::{boundary_point_with_tangent, distance_to_boundary, in_g, TractRegion};
use crate::ComplexValue;

/// Points closer than this to the contour are refused.
pub const MIN_CONTOUR_DISTANCE: f64 = 1e-3;

const MAX_DEPTH: u32 = 30;
const MAX_TRUNCATION: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Region on the right: lower branch inward, segment upward, upper branch outward.
    Clockwise,
    CounterClockwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub region: TractRegion,
    /// Abscissa where both branches are cut.
    pub truncation_x: f64,
    pub orientation: Orientation,
}

impl ContourSpec {
    pub fn new(region: TractRegion, truncation_x: f64, orientation: Orientation) -> Result<Self> {
        if !(truncation_x > region.x0()) || !truncation_x.is_finite() {
            return Err(Error::Domain(format!(
                "truncation abscissa {truncation_x} must exceed x0 = {}",
                region.x0()
            )));
        }
        Ok(ContourSpec {
            region,
            truncation_x,
            orientation,
        })
    }

    /// `Ľ`: boundary of `G_{D+1, 5/6}`, clockwise.
    pub fn inner(d: f64, p: f64, truncation_x: f64) -> Result<Self> {
        ContourSpec::new(TractRegion::new(d + 1.0, 5.0 / 6.0, p)?, truncation_x, Orientation::Clockwise)
    }

    /// `L̂`: boundary of `G_{D-1, 7/6}`, clockwise.
    pub fn outer(d: f64, p: f64, truncation_x: f64) -> Result<Self> {
        ContourSpec::new(TractRegion::new(d - 1.0, 7.0 / 6.0, p)?, truncation_x, Orientation::Clockwise)
    }

    /// Parameter breakpoints: corners first, then geometric points along the branches.
    /// With `upper_only` the list covers `[0, s_max]`.
    fn breakpoints(&self, near: Option<ComplexValue>, upper_only: bool) -> Vec<f64> {
        let g = &self.region;
        let x0 = g.x0();
        let w0 = g.corner();
        let s_max = g.param_at(self.truncation_x);
        let mut pos = vec![0.5 * w0, w0];
        let mut x = x0;
        loop {
            x *= 1.5;
            if x >= self.truncation_x {
                break;
            }
            pos.push(g.param_at(x));
        }
        pos.push(s_max);
        if let Some(z) = near {
            let z = Complex64::new(z.re, z.im.abs());
            if z.re > x0 && z.re < self.truncation_x {
                let s = g.param_at(z.re);
                let h = 0.25 * (z.im.abs() - g.half_width(z.re)).abs().max(1e-3);
                for v in [s - h, s, s + h] {
                    if v > w0 && v < s_max {
                        pos.push(v);
                    }
                }
            }
        }
        pos.sort_by(|a, b| a.total_cmp(b));
        pos.dedup();
        if upper_only {
            pos.insert(0, 0.0);
            return pos;
        }
        let mut out: Vec<f64> = pos.iter().rev().map(|s| -s).collect();
        out.push(0.0);
        out.extend(pos);
        out
    }
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: ComplexValue,
    pub err_est: f64,
    pub panels: usize,
}

/// `(1/2πi) ∫ kernel(ζ) dζ` over several kernels at once on the truncated
/// contour, or on its upper half `Im ζ ≥ 0`.
fn contour_integral<const N: usize, K>(
    kernel: K,
    contour: &ContourSpec,
    tol: f64,
    near: Option<ComplexValue>,
    upper_only: bool,
) -> Result<quad::Integral<N>>
where
    K: Fn(ComplexValue) -> Result<[ComplexValue; N]>,
{
    let sign = match contour.orientation {
        Orientation::Clockwise => 1.0,
        Orientation::CounterClockwise => -1.0,
    };
    let scale = Complex64::new(0.0, -sign / (2.0 * PI));
    let region = contour.region;
    let integrand = |s: f64| {
        let (z, dz) = boundary_point_with_tangent(s, &region);
        let mut v = kernel(z)?;
        for c in v.iter_mut() {
            *c *= dz * scale;
        }
        Ok(v)
    };
    quad::integrate(integrand, &contour.breakpoints(near, upper_only), tol, MAX_DEPTH)
}

/// Adaptive contour quadrature of `(1/2πi) ∫ kernel(ζ) dζ`.
pub fn quad_cauchy<K>(kernel: K, contour: &ContourSpec, tol: f64) -> Result<QuadResult>
where
    K: Fn(ComplexValue) -> Result<ComplexValue>,
{
    let r = contour_integral(|z| Ok([kernel(z)?]), contour, tol, None, false)?;
    Ok(QuadResult {
        value: r.value[0],
        err_est: r.err_est,
        panels: r.panels,
    })
}

/// `f(ζ)` for the untranslated model, as a plain number. On the contours
/// `|f|` is tiny far out, so an overflowing inner exponent with
/// `cos(Im u) < 0` gives zero.
pub fn f_on_contour(zeta: ComplexValue, p: f64) -> Result<ComplexValue> {
    let params = ModelParams::new(p, 0.0)?;
    let u = tau_inner(zeta, &params)?;
    if u.re > EXP_THRESHOLD {
        if u.im.cos() < 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Overflow(format!("f overflows on the contour at {zeta}")));
    }
    let tau = u.exp();
    if tau.re > EXP_THRESHOLD {
        return Err(Error::Overflow(format!("f overflows on the contour at {zeta}")));
    }
    Ok(tau.exp())
}

/// Upper bound for the part of the contour integral beyond `x`.
///
/// On both branches `|f(ζ)| ≤ exp(-g)` with `g = ½ exp(½ (ln x)^(1+p))`
/// convex in `ln x`, and `|ζ - z| ≥ |ζ|/2`, giving
/// `(2 (1 + w') / π) exp(-g(x)) / g'(x)` for both branches and both kernels.
pub fn truncation_tail(x: f64, region: &TractRegion) -> f64 {
    let p = region.p();
    let lx = x.ln();
    let g = 0.5 * (0.5 * lx.powf(1.0 + p)).exp();
    let dg = g * 0.5 * (1.0 + p) * lx.powf(p);
    let slope =
        region.kappa() * PI / (1.0 + p) * lx.powf(-p) * (1.0 - p / lx).abs().max(1.0);
    2.0 * (1.0 + slope) / PI * (-g).exp() / dg
}

fn choose_truncation(z: ComplexValue, region: &TractRegion, d: f64, tol: f64) -> Result<(f64, f64)> {
    let mut x = (2.0 * (z.norm() + 1.0)).max(region.x0() + 1.0).max(d + 1.0);
    loop {
        let tail = truncation_tail(x, region);
        if tail <= 0.1 * tol {
            return Ok((x, tail));
        }
        x *= 1.25;
        if x > MAX_TRUNCATION {
            return Err(Error::Domain(format!("no truncation point found for z = {z}")));
        }
    }
}

/// Raw pieces of the representation of `E` and `E'` at an untranslated point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Representation {
    /// Whether `z ∈ G_D` (and so `f(z)` is part of the value).
    pub in_tract: bool,
    /// `(1/2πi) ∫ f(t)/(t-z) dt` over the applicable contour.
    pub correction: ComplexValue,
    /// `(1/2πi) ∫ f(t)/(t-z)^2 dt`.
    pub correction_deriv: ComplexValue,
    pub err_est: f64,
    pub truncation_x: f64,
    pub panels: usize,
}

/// Which contour applies: `Ľ` off `G_D`, `L̂` on it.
pub fn contour_for(y: ComplexValue, p: f64, d: f64, tol: f64) -> Result<ContourSpec> {
    let in_tract = in_g(y, &TractRegion::new(d, 1.0, p)?);
    let region = if in_tract {
        TractRegion::new(d - 1.0, 7.0 / 6.0, p)?
    } else {
        TractRegion::new(d + 1.0, 5.0 / 6.0, p)?
    };
    let (x, _) = choose_truncation(y, &region, d, tol)?;
    ContourSpec::new(region, x, Orientation::Clockwise)
}

/// Integrates over a given clockwise contour (used for cross-checks between `Ľ` and `L̂`).
pub fn representation_on(y: ComplexValue, p: f64, d: f64, region: TractRegion, tol: f64) -> Result<Representation> {
    let dist = distance_to_boundary(y, &region);
    if dist < MIN_CONTOUR_DISTANCE {
        return Err(Error::Conditioning {
            distance: dist,
            minimum: MIN_CONTOUR_DISTANCE,
        });
    }
    let (x, tail) = choose_truncation(y, &region, d, tol)?;
    let contour = ContourSpec::new(region, x, Orientation::Clockwise)?;
    // f is real on the real axis and the contour is symmetric, so the lower
    // half at y is the conjugate of the upper half at conj(y)
    let half = |pt: ComplexValue, tol: f64| {
        let kernel = |t: ComplexValue| {
            let f = f_on_contour(t, p)?;
            let k = 1.0 / (t - pt);
            Ok([f * k, f * k * k])
        };
        contour_integral(kernel, &contour, tol, Some(pt), true)
    };
    let a = half(y, 0.25 * tol)?;
    let b = if y.im == 0.0 { a } else { half(y.conj(), 0.25 * tol)? };
    let r = quad::Integral {
        value: [a.value[0] + b.value[0].conj(), a.value[1] + b.value[1].conj()],
        err_est: a.err_est + b.err_est,
        panels: a.panels + b.panels,
    };
    Ok(Representation {
        in_tract: in_g(y, &TractRegion::new(d, 1.0, p)?),
        correction: r.value[0],
        correction_deriv: r.value[1],
        err_est: r.err_est + tail,
        truncation_x: x,
        panels: r.panels,
    })
}

/// The representation prescribed for `y = z - l`.
pub fn representation(z: ComplexValue, params: &ModelParams, consts: &CalibratedConstants, tol: f64) -> Result<Representation> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let y = z - params.l();
    let p = params.p();
    let d = consts.d_est;
    let contour = contour_for(y, p, d, tol)?;
    representation_on(y, p, d, contour.region, tol)
}

fn untranslated(params: &ModelParams) -> Result<ModelParams> {
    ModelParams::new(params.p(), 0.0)
}

/// `E_l(z)` with its error estimate. Inside `G_D + l` the value includes
/// `f_l(z)`, which must be representable.
#[allow(non_snake_case)]
pub fn eval_E(z: ComplexValue, params: &ModelParams, consts: &CalibratedConstants, tol: f64) -> Result<QuadResult> {
    let rep = representation(z, params, consts, tol)?;
    let value = if rep.in_tract {
        let f = log_f(z - params.l(), &untranslated(params)?)?;
        let f = f
            .to_complex()
            .ok_or_else(|| Error::Overflow(format!("|f| not representable at z = {z}")))?;
        f + rep.correction
    } else {
        rep.correction
    };
    Ok(QuadResult {
        value,
        err_est: rep.err_est,
        panels: rep.panels,
    })
}

/// `f_l(z)` in log form and the correction `E_l(z) - f_l(z)`; requires `z ∈ G_D + l`.
#[allow(non_snake_case)]
pub fn eval_E_in_tract(
    z: ComplexValue,
    params: &ModelParams,
    consts: &CalibratedConstants,
    tol: f64,
) -> Result<(LogComplex, QuadResult)> {
    let rep = representation(z, params, consts, tol)?;
    if !rep.in_tract {
        return Err(Error::Domain(format!("z = {z} is not in the tract region G_D + l")));
    }
    let f = log_f(z - params.l(), &untranslated(params)?)?;
    Ok((
        f,
        QuadResult {
            value: rep.correction,
            err_est: rep.err_est,
            panels: rep.panels,
        },
    ))
}

/// `E_l'(z)`; inside `G_D + l` this is `f_l'(z)` plus the derivative correction.
#[allow(non_snake_case)]
pub fn eval_E_deriv(z: ComplexValue, params: &ModelParams, consts: &CalibratedConstants, tol: f64) -> Result<QuadResult> {
    let rep = representation(z, params, consts, tol)?;
    let value = if rep.in_tract {
        let fp = log_f_prime(z - params.l(), &untranslated(params)?)?;
        let fp = fp
            .to_complex()
            .ok_or_else(|| Error::Overflow(format!("|f'| not representable at z = {z}")))?;
        fp + rep.correction_deriv
    } else {
        rep.correction_deriv
    };
    Ok(QuadResult {
        value,
        err_est: rep.err_est,
        panels: rep.panels,
    })
}

/// `E_l(z)` and `E_l'(z)` from one quadrature pass.
#[allow(non_snake_case)]
pub fn eval_E_with_deriv(
    z: ComplexValue,
    params: &ModelParams,
    consts: &CalibratedConstants,
    tol: f64,
) -> Result<(ComplexValue, ComplexValue, f64)> {
    let rep = representation(z, params, consts, tol)?;
    if rep.in_tract {
        let m = untranslated(params)?;
        let y = z - params.l();
        let f = log_f(y, &m)?
            .to_complex()
            .ok_or_else(|| Error::Overflow(format!("|f| not representable at z = {z}")))?;
        let fp = log_f_prime(y, &m)?
            .to_complex()
            .ok_or_else(|| Error::Overflow(format!("|f'| not representable at z = {z}")))?;
        Ok((f + rep.correction, fp + rep.correction_deriv, rep.err_est))
    } else {
        Ok((rep.correction, rep.correction_deriv, rep.err_est))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residue_kernel(z: ComplexValue) -> impl Fn(ComplexValue) -> Result<ComplexValue> {
        move |t: ComplexValue| Ok(1.0 / ((t + 1.0) * (t + 1.0) * (t - z)))
    }

    #[test]
    fn residue_oracle_both_orientations() {
        let g = TractRegion::new(3.0, 1.0, 1.0).unwrap();
        let h = |z: ComplexValue| 1.0 / ((z + 1.0) * (z + 1.0));
        for (z, inside) in [(c(6.0, 0.5), true), (c(20.0, -3.0), true), (c(-2.0, 4.0), false), (c(8.0, 9.0), false)] {
            for (o, s) in [(Orientation::Clockwise, -1.0), (Orientation::CounterClockwise, 1.0)] {
                let spec = ContourSpec::new(g, 1e5, o).unwrap();
                let r = quad_cauchy(residue_kernel(z), &spec, 1e-11).unwrap();
                let expect = if inside { h(z) * s } else { c(0.0, 0.0) };
                assert!((r.value - expect).norm() < 1e-8, "{z} {o:?}: {} vs {expect}", r.value);
            }
        }
    }

    #[test]
    fn conjugate_point_conjugate_value() {
        let g = TractRegion::new(3.0, 1.0, 1.0).unwrap();
        let spec = ContourSpec::new(g, 1e4, Orientation::Clockwise).unwrap();
        let z = c(5.0, 1.3);
        let a = quad_cauchy(residue_kernel(z), &spec, 1e-11).unwrap();
        let b = quad_cauchy(residue_kernel(z.conj()), &spec, 1e-11).unwrap();
        assert!((a.value.conj() - b.value).norm() < 1e-12);
        // the representation of E is conjugate-symmetric by construction
        for p in [0.5, 1.0, 2.0] {
            let d = crate::tract::estimate_d(p).unwrap();
            for z in [c(0.3, 0.7), c(d + 2.0, 0.4), c(-40.0, 3.0)] {
                let g = contour_for(z, p, d, 1e-9).unwrap().region;
                let a = representation_on(z, p, d, g, 1e-9).unwrap();
                let b = representation_on(z.conj(), p, d, g, 1e-9).unwrap();
                assert_eq!(a.correction.conj(), b.correction);
                assert_eq!(a.correction_deriv.conj(), b.correction_deriv);
            }
        }
    }

    #[test]
    fn tail_bound_decreases() {
        let g = TractRegion::new(4.0, 5.0 / 6.0, 1.0).unwrap();
        let a = truncation_tail(10.0, &g);
        let b = truncation_tail(20.0, &g);
        assert!(b < a && b < 1e-3, "{a} {b}");
    }

    #[test]
    fn truncation_tail_dominates_actual_tail() {
        let p = 1.0;
        let g = TractRegion::new(4.0, 5.0 / 6.0, p).unwrap();
        let z = c(-3.0, 1.0);
        let x = 12.0;
        let near = ContourSpec::new(g, x, Orientation::Clockwise).unwrap();
        let far = ContourSpec::new(g, 400.0, Orientation::Clockwise).unwrap();
        let k = |t: ComplexValue| Ok(f_on_contour(t, p)? / (t - z));
        let a = quad_cauchy(k, &near, 1e-14).unwrap();
        let b = quad_cauchy(k, &far, 1e-14).unwrap();
        assert!((a.value - b.value).norm() <= truncation_tail(x, &g) + 1e-13);
    }
}
