//! Adaptive 7/15-point Gauss–Kronrod integration of complex-valued
//! functions over a real parameter interval.
//!
//! Panels are refined by repeatedly bisecting the panel with the largest
//! error estimate. The final sum is taken in panel order, so results do not
//! depend on the refinement history beyond the panel set itself.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes of the 15-point rule mapped to `[a, b]`, with Kronrod and Gauss
/// weights (Gauss weight zero at nodes not in the 7-point rule).
pub(crate) fn gk15_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    out[0] = (c, h * WGK[7], h * WG[3]);
    for j in 0..7 {
        let wg = if j % 2 == 1 { h * WG[j / 2] } else { 0.0 };
        out[1 + 2 * j] = (c - h * XGK[j], h * WGK[j], wg);
        out[2 + 2 * j] = (c + h * XGK[j], h * WGK[j], wg);
    }
    out
}

/// One 15-point panel: Kronrod estimate, `max |kronrod - gauss|` and the
/// Kronrod estimate of `∫ max_i |f_i|`.
fn gk15<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<([Complex64; N], f64, f64)>
where
    F: Fn(f64) -> Result<[Complex64; N]>,
{
    let mut k = [Complex64::new(0.0, 0.0); N];
    let mut g = [Complex64::new(0.0, 0.0); N];
    let mut mass = 0.0;
    for (x, wk, wg) in gk15_nodes(a, b) {
        let v = f(x)?;
        if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain(format!("integrand not finite at parameter {x}")));
        }
        for i in 0..N {
            k[i] += v[i] * wk;
            g[i] += v[i] * wg;
        }
        mass += wk.abs() * v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    let err = (0..N).map(|i| (k[i] - g[i]).norm()).fold(0.0, f64::max);
    Ok((k, err, mass))
}

#[derive(Debug, Clone)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    depth: u32,
    value: [Complex64; N],
    err: f64,
    mass: f64,
}

/// Heap key: largest error first, earliest created first among equals.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    err: f64,
    seq: usize,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [Complex64; N],
    pub err_est: f64,
    pub panels: usize,
}

/// Upper limit on the number of panels of one integration.
pub const MAX_PANELS: usize = 20_000;

/// Relative accuracy floor: errors below this fraction of `∫ |f|` are rounding noise.
const ROUNDING_FLOOR: f64 = 50.0 * f64::EPSILON;

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting with one panel
/// per consecutive pair of breakpoints.
///
/// The loop stops once the summed error estimate is below `tol`, or below the
/// rounding floor relative to `∫ |f|` when that is larger; the reported
/// `err_est` is the summed estimate either way.
pub fn integrate<const N: usize, F>(f: F, breaks: &[f64], tol: f64, max_depth: u32) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[Complex64; N]>,
{
    if breaks.len() < 2 {
        return Err(Error::Domain("integration needs at least two breakpoints".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut panels: Vec<Panel<N>> = Vec::with_capacity(4 * breaks.len());
    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    let mut mass = 0.0;
    for w in breaks.windows(2) {
        let (value, e, m) = gk15(&f, w[0], w[1])?;
        heap.push(Key { err: e, seq: panels.len() });
        panels.push(Panel {
            a: w[0],
            b: w[1],
            depth: 0,
            value,
            err: e,
            mass: m,
        });
        err += e;
        mass += m;
    }
    // panels that were split keep their slot but stop counting
    let mut live = panels.len();
    while err > tol.max(ROUNDING_FLOOR * mass) {
        let next = loop {
            match heap.pop() {
                Some(k) if panels[k.seq].depth >= max_depth => continue,
                other => break other,
            }
        };
        let Some(Key { seq: i, .. }) = next else {
            return Err(non_convergence(&panels, err, tol));
        };
        if live >= MAX_PANELS {
            return Err(non_convergence(&panels, err, tol));
        }
        let p = panels[i].clone();
        let m = 0.5 * (p.a + p.b);
        let (lv, le, lm) = gk15(&f, p.a, m)?;
        let (rv, re, rm) = gk15(&f, m, p.b)?;
        err += le + re - p.err;
        mass += lm + rm - p.mass;
        panels[i].err = f64::NAN;
        for (a, b, value, e, pm) in [(p.a, m, lv, le, lm), (m, p.b, rv, re, rm)] {
            heap.push(Key { err: e, seq: panels.len() });
            panels.push(Panel {
                a,
                b,
                depth: p.depth + 1,
                value,
                err: e,
                mass: pm,
            });
        }
        live += 1;
        // the running sums drift; refresh them now and then
        if live % 256 == 0 {
            err = panels.iter().filter(|p| !p.err.is_nan()).map(|p| p.err).sum();
            mass = panels.iter().filter(|p| !p.err.is_nan()).map(|p| p.mass).sum();
        }
    }
    let err = panels.iter().filter(|p| !p.err.is_nan()).map(|p| p.err).sum();
    Ok(Integral {
        value: sum_panels(&panels),
        err_est: err,
        panels: live,
    })
}

fn non_convergence<const N: usize>(panels: &[Panel<N>], err: f64, tol: f64) -> Error {
    Error::NonConvergence {
        best: sum_panels(panels)[0],
        err_est: err,
        tol,
    }
}

fn sum_panels<const N: usize>(panels: &[Panel<N>]) -> [Complex64; N] {
    let mut leaves: Vec<&Panel<N>> = panels.iter().filter(|p| !p.err.is_nan()).collect();
    leaves.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = [Complex64::new(0.0, 0.0); N];
    for (i, o) in out.iter_mut().enumerate() {
        let re: CompensatedSum = leaves.iter().map(|p| p.value[i].re).collect();
        let im: CompensatedSum = leaves.iter().map(|p| p.value[i].im).collect();
        *o = Complex64::new(re.value(), im.value());
    }
    out
}
