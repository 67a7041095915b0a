//! Regions `G_{x0,κ} = {x > x0, |y| < κπx / ((1+p)(ln x)^p)}`, their
//! boundaries, tract membership and the disjoint-type radius bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_abs_f, ModelParams};
use crate::ComplexValue;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TractRegion {
    x0: f64,
    kappa: f64,
    p: f64,
}

impl TractRegion {
    pub fn new(x0: f64, kappa: f64, p: f64) -> Result<Self> {
        if !(x0.is_finite() && x0 > 1.0) {
            return Err(Error::Domain(format!("x0 must exceed 1, got {x0}")));
        }
        if !(kappa > 0.0 && kappa <= 2.0) {
            return Err(Error::Domain(format!("kappa must lie in (0, 2], got {kappa}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!("p must be positive, got {p}")));
        }
        Ok(TractRegion { x0, kappa, p })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Half-width `κπx / ((1+p)(ln x)^p)` of the region at abscissa `x > 1`.
    pub fn half_width(&self, x: f64) -> f64 {
        self.kappa * std::f64::consts::PI * x / ((1.0 + self.p) * x.ln().powf(self.p))
    }

    /// Derivative of [`half_width`](Self::half_width) in `x`.
    pub fn half_width_slope(&self, x: f64) -> f64 {
        let lx = x.ln();
        self.kappa * std::f64::consts::PI / (1.0 + self.p) * lx.powf(-self.p) * (1.0 - self.p / lx)
    }

    /// Parameter value where the upper branch starts (top of the vertical segment).
    pub fn corner(&self) -> f64 {
        self.half_width(self.x0)
    }

    /// Parameter of the boundary point with abscissa `x ≥ x0` on the upper branch.
    pub fn param_at(&self, x: f64) -> f64 {
        self.corner() + (x - self.x0)
    }
}

/// `Re z > x0` and `|Im z| < half_width(Re z)`.
pub fn in_g(z: ComplexValue, region: &TractRegion) -> bool {
    z.re > region.x0 && z.im.abs() < region.half_width(z.re)
}

/// Arc-parameterization of `∂G_{x0,κ}`: the vertical segment is `|s| ≤ w(x0)`
/// with `s = 0` at `x0`; beyond it `s` grows with the abscissa along the upper
/// branch (`s > 0`) or the lower branch (`s < 0`).
///
/// Increasing `s` runs down the lower branch toward `x0`, up the segment and
/// out along the upper branch, which keeps the region on the right.
pub fn boundary_point(s: f64, region: &TractRegion) -> ComplexValue {
    boundary_point_with_tangent(s, region).0
}

/// Boundary point and `dζ/ds`.
pub fn boundary_point_with_tangent(s: f64, region: &TractRegion) -> (ComplexValue, ComplexValue) {
    let w0 = region.corner();
    if s.abs() <= w0 {
        return (Complex64::new(region.x0, s), Complex64::new(0.0, 1.0));
    }
    let x = region.x0 + (s.abs() - w0);
    let y = region.half_width(x);
    let dy = region.half_width_slope(x);
    if s > 0.0 {
        (Complex64::new(x, y), Complex64::new(1.0, dy))
    } else {
        (Complex64::new(x, -y), Complex64::new(-1.0, dy))
    }
}

/// Distance from `z` to the boundary of the region, up to sampling precision.
pub fn distance_to_boundary(z: ComplexValue, region: &TractRegion) -> f64 {
    let x0 = region.x0;
    let w0 = region.corner();
    // vertical segment
    let ys = z.im.clamp(-w0, w0);
    let mut best = (z - Complex64::new(x0, ys)).norm();
    // branches: coarse scan in x followed by golden-section refinement
    let dist = |x: f64| (z - Complex64::new(x, region.half_width(x).copysign(z.im))).norm();
    let hi = (z.norm() * 2.0 + 4.0 * x0).max(x0 + 10.0);
    let n = 400;
    let ratio = (hi / x0).powf(1.0 / n as f64);
    let mut xs = Vec::with_capacity(n + 1);
    let mut x = x0;
    for _ in 0..=n {
        xs.push(x);
        x *= ratio;
    }
    let (mut imin, mut dmin) = (0, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let d = dist(x);
        if d < dmin {
            dmin = d;
            imin = i;
        }
    }
    let (mut a, mut b) = (xs[imin.saturating_sub(1)], xs[(imin + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best = best.min(dist(0.5 * (a + b))).min(dmin);
    best
}

/// Working radius `r` and the translation threshold `l_r = max(0, r - D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusConfig {
    pub r: f64,
    pub l_min: f64,
}

impl RadiusConfig {
    /// Checks `r ≥ r0/2` and derives `l_min` from `d`.
    pub fn new(r: f64, r0: f64, d: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(Error::Domain(format!("radius must exceed 1, got {r}")));
        }
        if r < 0.5 * r0 {
            return Err(Error::Domain(format!("radius {r} below r0/2 = {}", 0.5 * r0)));
        }
        Ok(RadiusConfig {
            r,
            l_min: l_threshold(r, d),
        })
    }

    pub fn log_r(&self) -> f64 {
        self.r.ln()
    }
}

/// `max(0, r - d)`.
pub fn l_threshold(r: f64, d: f64) -> f64 {
    (r - d).max(0.0)
}

/// Smallest translation for which the tract of `f_l` avoids the closed disk of radius `r`.
pub fn min_l_for_disjoint(cfg: &RadiusConfig) -> f64 {
    cfg.l_min
}

/// `|f_l(z)| > r`. Points on the branch cut or within distance 1 of `l` are
/// outside; when `log |f_l|` overflows the sign of `cos(Im u)` decides.
pub fn in_omega(z: ComplexValue, params: &ModelParams, cfg: &RadiusConfig) -> bool {
    match log_abs_f(z, params) {
        Ok(m) => m.exceeds(cfg.log_r()),
        Err(_) => false,
    }
}

/// Whether the band estimate `log |f(z)| ≤ -½ exp(½ (ln x)^(1+p))` holds on
/// `x ∈ [x_start, 200 x_start]` and relative widths `κ ∈ [5/6, 7/6]`, sampled.
pub fn band_bound_holds(x_start: f64, p: f64) -> bool {
    let params = match ModelParams::new(p, 0.0) {
        Ok(m) => m,
        Err(_) => return false,
    };
    let unit = match TractRegion::new(x_start.max(1.0 + 1e-9), 1.0, p) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let nx = 120;
    let nk = 17;
    for i in 0..=nx {
        let x = x_start * 200f64.powf(i as f64 / nx as f64);
        let lx = x.ln();
        let bound = -0.5 * (0.5 * lx.powf(1.0 + p)).exp();
        for j in 0..nk {
            let q = 5.0 / 6.0 + (j as f64) * (2.0 / 6.0) / (nk - 1) as f64;
            let z = Complex64::new(x, q * unit.half_width(x));
            match log_abs_f(z, &params) {
                Ok(crate::model::LogModulus::Finite(v)) if v <= bound => {}
                Ok(crate::model::LogModulus::Overflow { positive: false }) => {}
                _ => return false,
            }
        }
    }
    true
}

/// First point `3 · 1.02^k`, `k ≥ 1`, from which the band estimate holds.
pub fn estimate_d(p: f64) -> Result<f64> {
    let mut x = 3.0;
    for _ in 0..400 {
        x *= 1.02;
        if band_bound_holds(x, p) {
            return Ok(x);
        }
    }
    Err(Error::Degenerate(format!("band estimate never held for p = {p}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn membership_examples() {
        let g = TractRegion::new(3.0, 1.0, 1.0).unwrap();
        assert!(in_g(c(10.0, 0.0), &g));
        assert!(!in_g(c(2.0, 0.0), &g));
        assert!(!in_g(c(10.0, 20.0), &g));
        assert!((g.half_width(10.0) - 6.82).abs() < 0.01);
    }

    #[test]
    fn boundary_parameterization() {
        let g = TractRegion::new(3.0, 1.0, 1.0).unwrap();
        assert_eq!(boundary_point(0.0, &g), c(3.0, 0.0));
        for s in [0.5, 3.0, 9.0, 40.0, 500.0] {
            let a = boundary_point(s, &g);
            let b = boundary_point(-s, &g);
            assert_eq!(a.conj(), b);
            if s > g.corner() {
                assert!((a.im - g.half_width(a.re)).abs() < 1e-12 * a.im);
            }
        }
        // continuity at the corner
        let w0 = g.corner();
        let a = boundary_point(w0 - 1e-12, &g);
        let b = boundary_point(w0 + 1e-12, &g);
        assert!((a - b).norm() < 1e-10);
        // tangent matches a difference quotient
        for s in [-30.0, -1.0, 2.0, 25.0] {
            let (_, t) = boundary_point_with_tangent(s, &g);
            let h = 1e-6;
            let fd = (boundary_point(s + h, &g) - boundary_point(s - h, &g)) / (2.0 * h);
            assert!((fd - t).norm() < 1e-6);
        }
    }

    #[test]
    fn omega_examples() {
        let e = std::f64::consts::E;
        let cfg = RadiusConfig { r: 100.0, l_min: 0.0 };
        for l in [0.0, 40.0] {
            let m = ModelParams::new(1.0, l).unwrap();
            assert!(!in_omega(c(e + l, 0.0), &m, &cfg));
            assert!(in_omega(c(e * e + l, 0.0), &m, &cfg));
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(l_threshold(100.0, 20.0), 80.0);
        assert_eq!(l_threshold(10.0, 20.0), 0.0);
        let cfg = RadiusConfig::new(100.0, 150.0, 20.0).unwrap();
        assert_eq!(min_l_for_disjoint(&cfg), 80.0);
        assert!(RadiusConfig::new(50.0, 150.0, 20.0).is_err());
    }

    #[test]
    fn distance_is_small_on_boundary() {
        let g = TractRegion::new(3.0, 5.0 / 6.0, 1.0).unwrap();
        for s in [-20.0, -0.5, 1.0, 7.0] {
            let z = boundary_point(s, &g);
            assert!(distance_to_boundary(z, &g) < 1e-6);
        }
        assert!((distance_to_boundary(c(-1.0, 0.0), &g) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn band_estimate_cutoff() {
        let d1 = estimate_d(1.0).unwrap();
        assert!(d1 > 3.0 && d1 < 3.5, "{d1}");
        let d2 = estimate_d(2.0).unwrap();
        assert!(d2 >= d1, "{d2}");
    }
}
