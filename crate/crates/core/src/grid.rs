//! Test functions on a lattice in `(u, v) = (log|w|, arg w)` and the transfer
//! operator as a sparse matrix acting on them.
//!
//! Between nodes, functions are read by bilinear interpolation, periodic in
//! `v`. Below `u_min` the first row is used; above `u_max` values follow
//! `h(u_max, v) (u_max / u)^δ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::CompensatedSum;
use crate::tract::RadiusConfig;
use crate::transfer::expand_terms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub u_min: f64,
    pub u_max: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Lattice {
    pub fn new(u_min: f64, u_max: f64, nu: usize, nv: usize) -> Result<Self> {
        if !(u_min.is_finite() && u_max > u_min) {
            return Err(Error::Domain(format!("bad lattice range [{u_min}, {u_max}]")));
        }
        if nu < 2 || nv < 2 {
            return Err(Error::Domain("lattice needs at least 2 nodes per axis".into()));
        }
        Ok(Lattice { u_min, u_max, nu, nv })
    }

    /// Lattice over `u ∈ [log r, log r + span]`.
    pub fn for_radius(cfg: &RadiusConfig, span: f64, nu: usize, nv: usize) -> Result<Self> {
        Lattice::new(cfg.log_r(), cfg.log_r() + span, nu, nv)
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn du(&self) -> f64 {
        (self.u_max - self.u_min) / (self.nu - 1) as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * PI / self.nv as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.du()
    }

    /// `v_j = -π + (j+1) 2π/nv`, so the nodes cover (-π, π].
    pub fn v(&self, j: usize) -> f64 {
        -PI + (j + 1) as f64 * self.dv()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn node(&self, idx: usize) -> (f64, f64) {
        (self.u(idx / self.nv), self.v(idx % self.nv))
    }

    /// Nearest node to `(u, v)`.
    pub fn nearest(&self, u: f64, v: f64) -> usize {
        let i = ((u - self.u_min) / self.du()).round().clamp(0.0, (self.nu - 1) as f64) as usize;
        let jf = ((v + PI) / self.dv() - 1.0).round();
        let j = (jf as i64).rem_euclid(self.nv as i64) as usize;
        self.index(i, j)
    }

    /// Interpolation weights `(node, coefficient)` for the value at `(u, v)`.
    pub fn stencil(&self, u: f64, v: f64, delta: f64) -> [(usize, f64); 4] {
        let (u, scale) = if u > self.u_max {
            (self.u_max, (self.u_max / u).powf(delta))
        } else {
            (u.max(self.u_min), 1.0)
        };
        let x = (u - self.u_min) / self.du();
        let i0 = (x.floor() as usize).min(self.nu - 2);
        let fu = (x - i0 as f64).clamp(0.0, 1.0);
        let y = (v + PI) / self.dv() - 1.0;
        let jf = y.floor();
        let fv = y - jf;
        let j0 = (jf as i64).rem_euclid(self.nv as i64) as usize;
        let j1 = (j0 + 1) % self.nv;
        [
            (self.index(i0, j0), scale * (1.0 - fu) * (1.0 - fv)),
            (self.index(i0, j1), scale * (1.0 - fu) * fv),
            (self.index(i0 + 1, j0), scale * fu * (1.0 - fv)),
            (self.index(i0 + 1, j1), scale * fu * fv),
        ]
    }
}

/// Nonnegative values on a lattice with decay exponent `δ` for the extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub lattice: Lattice,
    pub delta: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(lattice: Lattice, value: f64, delta: f64) -> Self {
        GridFunction {
            lattice,
            delta,
            values: vec![value; lattice.len()],
        }
    }

    pub fn from_fn(lattice: Lattice, delta: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..lattice.len())
            .map(|idx| {
                let (u, v) = lattice.node(idx);
                f(u, v)
            })
            .collect();
        GridFunction { lattice, delta, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.lattice.index(i, j)]
    }

    /// Interpolated value at `(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.lattice
            .stencil(u, v, self.delta)
            .iter()
            .map(|&(k, c)| c * self.values[k])
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// One row of the operator matrix: `(Lh)(node) = Σ coef · h[col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cols: Vec<usize>,
    pub coefs: Vec<f64>,
    /// Error estimate of the row sum for `h ≡ 1`.
    pub err: f64,
}

impl Row {
    pub fn apply(&self, h: &[f64]) -> f64 {
        self.cols
            .iter()
            .zip(&self.coefs)
            .map(|(&k, &c)| c * h[k])
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn sum(&self) -> f64 {
        self.coefs.iter().cloned().collect::<CompensatedSum>().value()
    }
}

/// Builds the row of the transfer operator at lattice node `idx`.
pub fn operator_row(lattice: &Lattice, idx: usize, t: f64, params: &ModelParams, eps_rel: f64) -> Result<Row> {
    let (u, v) = lattice.node(idx);
    let delta = 0.5 * (t - 1.0);
    let rough = expand_terms(u, v, t, params, f64::INFINITY)?.weight_sum();
    let exp = expand_terms(u, v, t, params, eps_rel * rough)?;
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4 * exp.terms.len());
    for term in &exp.terms {
        for (k, c) in lattice.stencil(term.log_abs_z, term.arg_z, delta) {
            if c != 0.0 {
                entries.push((k, c * term.weight));
            }
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut cols = Vec::new();
    let mut coefs: Vec<f64> = Vec::new();
    let mut acc = CompensatedSum::new();
    for (n, &(k, c)) in entries.iter().enumerate() {
        acc.add(c);
        if n + 1 == entries.len() || entries[n + 1].0 != k {
            cols.push(k);
            coefs.push(acc.value());
            acc = CompensatedSum::new();
        }
    }
    Ok(Row {
        cols,
        coefs,
        err: exp.error(),
    })
}

/// The transfer operator restricted to the rows that are actually needed.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub lattice: Lattice,
    pub t: f64,
    pub delta: f64,
    rows: Vec<Option<Row>>,
}

impl GridOperator {
    pub fn new(lattice: Lattice, t: f64) -> Result<Self> {
        if !(t > 1.0) {
            return Err(Error::Divergence { t });
        }
        Ok(GridOperator {
            lattice,
            t,
            delta: 0.5 * (t - 1.0),
            rows: vec![None; lattice.len()],
        })
    }

    pub fn row(&self, idx: usize) -> Option<&Row> {
        self.rows[idx].as_ref()
    }

    /// Nodes whose rows are built.
    pub fn support(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&k| self.rows[k].is_some()).collect()
    }

    /// Builds the listed rows (in parallel, stored by index).
    pub fn build_rows(&mut self, nodes: &[usize], params: &ModelParams, eps_rel: f64) -> Result<()> {
        let todo: Vec<usize> = nodes.iter().cloned().filter(|&k| self.rows[k].is_none()).collect();
        let lattice = self.lattice;
        let t = self.t;
        let built: Vec<Row> = todo
            .par_iter()
            .map(|&k| operator_row(&lattice, k, t, params, eps_rel))
            .collect::<Result<_>>()?;
        for (k, row) in todo.into_iter().zip(built) {
            self.rows[k] = Some(row);
        }
        Ok(())
    }

    /// Builds every row reachable from `start`, so that iterates at `start`
    /// can be computed exactly on the lattice.
    pub fn build_closure(&mut self, start: &[usize], params: &ModelParams, eps_rel: f64) -> Result<()> {
        let mut frontier: Vec<usize> = start.to_vec();
        frontier.sort_unstable();
        frontier.dedup();
        while !frontier.is_empty() {
            self.build_rows(&frontier, params, eps_rel)?;
            let mut next: Vec<usize> = frontier
                .iter()
                .flat_map(|&k| self.rows[k].as_ref().map(|r| r.cols.clone()).unwrap_or_default())
                .filter(|&c| self.rows[c].is_none())
                .collect();
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        Ok(())
    }

    pub fn build_all(&mut self, params: &ModelParams, eps_rel: f64) -> Result<()> {
        let all: Vec<usize> = (0..self.lattice.len()).collect();
        self.build_rows(&all, params, eps_rel)
    }

    /// `Lh` on the built rows; other nodes keep the value of `h`.
    pub fn apply(&self, h: &GridFunction) -> Result<GridFunction> {
        if h.lattice != self.lattice {
            return Err(Error::Domain("grid function lives on a different lattice".into()));
        }
        let values: Vec<f64> = (0..self.lattice.len())
            .into_par_iter()
            .map(|k| match &self.rows[k] {
                Some(row) => row.apply(&h.values),
                None => h.values[k],
            })
            .collect();
        Ok(GridFunction {
            lattice: self.lattice,
            delta: self.delta,
            values,
        })
    }
}

/// Options for grid operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub nu: usize,
    pub nv: usize,
    /// `u_max - log r`.
    pub u_span: f64,
    /// Relative accuracy of each row sum.
    pub eps_rel: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            nu: 512,
            nv: 256,
            u_span: 40.0,
            eps_rel: 1e-8,
        }
    }
}

/// `(L_t h)` at every lattice node.
pub fn apply_operator_grid(h: &GridFunction, t: f64, params: &ModelParams, eps_rel: f64) -> Result<GridFunction> {
    let mut op = GridOperator::new(h.lattice, t)?;
    if (h.delta - op.delta).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "grid function decay {} does not match (t - 1)/2 = {}",
            h.delta, op.delta
        )));
    }
    op.build_all(params, eps_rel)?;
    op.apply(h)
}
