//! Topological pressure from iterates of the lattice transfer operator, the
//! Bowen zero by bisection, and sweeps over the translation `l`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibratedConstants;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridOperator, GridOptions, Lattice};
use crate::model::ModelParams;
use crate::numeric::median;
use crate::tract::{min_l_for_disjoint, RadiusConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    pub grid: GridOptions,
    pub n_max: usize,
    pub base_points: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            grid: GridOptions {
                nu: 256,
                nv: 128,
                u_span: 40.0,
                eps_rel: 1e-7,
            },
            n_max: 12,
            base_points: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub t: f64,
    pub value: f64,
    pub spread: f64,
    pub n_used: usize,
    /// Base point `w0` and its growth rate at the last iterate.
    pub per_point: Vec<(Complex64, f64)>,
    /// Lattice rows that were built.
    pub rows: usize,
}

/// Base nodes spread over the lattice interior.
pub fn base_nodes(lattice: &Lattice, count: usize) -> Vec<usize> {
    (1..=count)
        .map(|k| {
            let i = (k * (lattice.nu - 1)) / (count + 1);
            let j = (lattice.nv / 2 + k * lattice.nv / (count + 1)) % lattice.nv;
            lattice.index(i.max(1), j)
        })
        .collect()
}

/// Iterates `h_{n+1} = L h_n` from `h_0 = 1` and reads off growth rates at the base points.
pub fn pressure_estimate(
    t: f64,
    params: &ModelParams,
    cfg: &RadiusConfig,
    opts: &PressureOptions,
) -> Result<PressureEstimate> {
    if !(t > 1.0) {
        return Err(Error::Divergence { t });
    }
    if opts.n_max < 3 {
        return Err(Error::Config("n_max must be at least 3".into()));
    }
    let g = &opts.grid;
    let lattice = Lattice::for_radius(cfg, g.u_span, g.nu, g.nv)?;
    let bases = base_nodes(&lattice, opts.base_points.max(1));
    let mut op = GridOperator::new(lattice, t)?;
    op.build_closure(&bases, params, g.eps_rel)?;
    let support = op.support();

    let mut h = GridFunction::constant(lattice, 1.0, op.delta);
    // slopes[n][b] = log(h_{n+1}(b) / h_n(b)) with h normalized each step
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(opts.n_max);
    for _ in 0..opts.n_max {
        let next = op.apply(&h)?;
        let row: Vec<f64> = bases.iter().map(|&b| (next.values[b] / h.values[b]).ln()).collect();
        if row.iter().any(|s| !s.is_finite()) {
            return Err(Error::Degenerate(format!("iterate vanished at a base point (t = {t})")));
        }
        slopes.push(row);
        let scale = support.iter().map(|&k| next.values[k]).fold(0.0, f64::max);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Degenerate(format!("iterate degenerate (t = {t})")));
        }
        h = next;
        h.values.iter_mut().for_each(|x| *x /= scale);
    }
    let last = slopes.last().cloned().unwrap_or_default();
    let value = median(&mut last.clone());
    let spread = slopes[slopes.len() - 3..]
        .iter()
        .flat_map(|r| r.iter().map(|s| (s - value).abs()))
        .fold(0.0, f64::max);
    let per_point = bases
        .iter()
        .zip(&last)
        .map(|(&b, &s)| {
            let (u, v) = lattice.node(b);
            (Complex64::from_polar(u.exp(), v), s)
        })
        .collect();
    Ok(PressureEstimate {
        t,
        value,
        spread,
        n_used: opts.n_max,
        per_point,
        rows: support.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimMethod {
    Bowen,
    Boxcount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub method: DimMethod,
    /// `|P(value)|` for the Bowen zero, fit residual for box counting.
    pub residual: f64,
    /// Pressure spread at the returned point (Bowen only).
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BowenOptions {
    pub t_lo: f64,
    pub t_hi: f64,
    pub tol_t: f64,
    pub tol_p: f64,
    pub pressure: PressureOptions,
}

impl Default for BowenOptions {
    fn default() -> Self {
        BowenOptions {
            t_lo: 1.00001,
            t_hi: 1.9,
            tol_t: 1e-4,
            tol_p: 1e-3,
            pressure: PressureOptions::default(),
        }
    }
}

/// One bisection step record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub t: f64,
    pub pressure: f64,
    pub spread: f64,
}

/// Bowen zero together with the bracket history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenResult {
    pub estimate: DimEstimate,
    pub steps: Vec<BisectionStep>,
}

const MIN_BRACKET: f64 = 1e-12;
const MAX_BISECTIONS: usize = 60;

/// Bisection on the sign of the pressure. Returns the midpoint of the final
/// bracket; the residual is the pressure there.
pub fn bowen_zero(params: &ModelParams, cfg: &RadiusConfig, opts: &BowenOptions) -> Result<BowenResult> {
    let (mut lo, mut hi) = (opts.t_lo, opts.t_hi);
    if !(lo > 1.0 && hi > lo) {
        return Err(Error::Bracket(format!("need 1 < t_lo < t_hi, got ({lo}, {hi})")));
    }
    let p_lo = pressure_estimate(lo, params, cfg, &opts.pressure)?;
    let p_hi = pressure_estimate(hi, params, cfg, &opts.pressure)?;
    if !(p_lo.value > 0.0 && p_hi.value < 0.0) {
        return Err(Error::Bracket(format!(
            "pressure does not change sign on [{lo}, {hi}]: P = {} and {}; widen the initial bracket",
            p_lo.value, p_hi.value
        )));
    }
    // stop once the bracket is narrow and the midpoint residual is within
    // tolerance plus spread; past the resolution floor noise dominates
    let mut steps = Vec::new();
    let (value, residual, spread) = loop {
        let mid = 0.5 * (lo + hi);
        let pm = pressure_estimate(mid, params, cfg, &opts.pressure)?;
        steps.push(BisectionStep {
            lo,
            hi,
            t: mid,
            pressure: pm.value,
            spread: pm.spread,
        });
        let narrow = hi - lo <= opts.tol_t;
        if (narrow && pm.value.abs() <= opts.tol_p + pm.spread) || hi - lo <= MIN_BRACKET || steps.len() >= MAX_BISECTIONS {
            break (mid, pm.value.abs(), pm.spread);
        }
        if pm.value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    };
    Ok(BowenResult {
        estimate: DimEstimate {
            value,
            lo,
            hi,
            method: DimMethod::Bowen,
            residual,
            spread,
        },
        steps,
    })
}

/// One row of an `l` sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub l: f64,
    pub estimate: Option<DimEstimate>,
    /// Half-width of the band for the entire function, `t log Kcal` in pressure
    /// converted to `t` through the local pressure slope.
    pub entire_band: Option<(f64, f64)>,
    pub error: Option<String>,
}

/// Runs the Bowen solver for each `l`, in input order; failures are recorded.
pub fn hypdim_sweep(
    l_values: &[f64],
    p: f64,
    cfg: &RadiusConfig,
    consts: Option<&CalibratedConstants>,
    opts: &BowenOptions,
) -> Vec<SweepRow> {
    l_values
        .par_iter()
        .map(|&l| {
            let run = || -> Result<SweepRow> {
                if l < min_l_for_disjoint(cfg) {
                    return Err(Error::Domain(format!(
                        "l = {l} below the disjoint-type threshold {}",
                        min_l_for_disjoint(cfg)
                    )));
                }
                let params = ModelParams::new(p, l)?;
                let res = bowen_zero(&params, cfg, opts)?;
                let est = res.estimate;
                let band = match consts {
                    Some(c) => {
                        let shift = est.value * c.kcal.ln();
                        // pressure slope from the last two bracket evaluations
                        let slope = local_slope(&res.steps).unwrap_or(-1.0);
                        let dt = (shift / slope.abs()).abs();
                        Some((est.value - dt, est.value + dt))
                    }
                    None => None,
                };
                Ok(SweepRow {
                    l,
                    estimate: Some(est),
                    entire_band: band,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| SweepRow {
                l,
                estimate: None,
                entire_band: None,
                error: Some(e.to_string()),
            })
        })
        .collect()
}

fn local_slope(steps: &[BisectionStep]) -> Option<f64> {
    let n = steps.len();
    if n < 2 {
        return None;
    }
    let (a, b) = (&steps[n - 2], &steps[n - 1]);
    if (a.t - b.t).abs() < 1e-15 {
        return None;
    }
    Some((a.pressure - b.pressure) / (a.t - b.t))
}

/// Plain-text summary of a sweep with its monotonicity check.
pub fn trend_report(rows: &[SweepRow], tol: f64) -> String {
    let mut out = String::from("l\tdim\tlo\thi\n");
    let mut prev: Option<f64> = None;
    let mut monotone = true;
    for r in rows {
        match &r.estimate {
            Some(e) => {
                out.push_str(&format!("{}\t{:.6}\t{:.6}\t{:.6}\n", r.l, e.value, e.lo, e.hi));
                if let Some(p) = prev {
                    if e.value > p + tol {
                        monotone = false;
                    }
                }
                prev = Some(e.value);
            }
            None => out.push_str(&format!("{}\tfailed: {}\n", r.l, r.error.as_deref().unwrap_or("?"))),
        }
    }
    out.push_str(&format!(
        "non-increasing in l within {tol:e}: {}\n",
        if monotone { "yes" } else { "no" }
    ));
    out
}
