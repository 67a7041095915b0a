//! Run configuration: a TOML file with one section per subcommand.
//!
//! Every field has a default, so an empty file (or no file) is a valid
//! configuration. Only the worker count may be overridden from the
//! environment, through `TRACTDIM_WORKERS`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibratedConstants, CalibrationBudget};
use crate::error::{Error, Result};
use crate::grid::GridOptions;
use crate::model::ModelParams;
use crate::pressure::{BowenOptions, PressureOptions};
use crate::tract::{min_l_for_disjoint, RadiusConfig};

pub const WORKERS_ENV: &str = "TRACTDIM_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    /// Translation; defaults to one above the disjoint-type threshold.
    pub l: Option<f64>,
    /// Radius of the escape disk; defaults to `r0/2`.
    pub r: Option<f64>,
    /// Calibrated constants file; the bundled one for `p` is used otherwise.
    pub constants: Option<PathBuf>,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub seed: u64,
    pub calibrate: CalibrateSection,
    pub eval: EvalSection,
    pub transfer: TransferSection,
    pub pressure: PressureSection,
    pub hypdim: HypdimSection,
    pub julia: JuliaSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 1.0,
            l: None,
            r: None,
            constants: None,
            workers: None,
            out: PathBuf::from("out"),
            seed: 1,
            calibrate: CalibrateSection::default(),
            eval: EvalSection::default(),
            transfer: TransferSection::default(),
            pressure: PressureSection::default(),
            hypdim: HypdimSection::default(),
            julia: JuliaSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub grid_n: usize,
    pub koebe_samples: usize,
    pub kcal_samples: usize,
    pub refine_budget: usize,
    pub tol: f64,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        let b = CalibrationBudget::default();
        CalibrateSection {
            grid_n: b.grid_n,
            koebe_samples: b.koebe_samples,
            kcal_samples: b.kcal_samples,
            refine_budget: b.refine_budget,
            tol: b.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Points `[re, im]`; empty means the single point `l + e^2`.
    pub points: Vec<[f64; 2]>,
    pub tol: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            points: Vec::new(),
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    /// `|w| / r` multipliers.
    pub moduli: Vec<f64>,
    pub args: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Translations; empty means the run's `l`.
    pub l_values: Vec<f64>,
    pub eps_tail: f64,
    /// Also evaluate the entire operator with this many refined preimages (0 = off).
    pub refine_budget: usize,
}

impl Default for TransferSection {
    fn default() -> Self {
        TransferSection {
            moduli: vec![1.5, 10.0, 100.0],
            args: vec![0.0, 1.0, 3.0],
            t_values: vec![1.2, 1.5, 2.0],
            l_values: Vec::new(),
            eps_tail: 1e-8,
            refine_budget: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureSection {
    pub t_values: Vec<f64>,
    pub nu: usize,
    pub nv: usize,
    pub u_span: f64,
    pub eps_rel: f64,
    pub n_max: usize,
    pub base_points: usize,
}

impl Default for PressureSection {
    fn default() -> Self {
        let o = PressureOptions::default();
        PressureSection {
            t_values: vec![1.1, 1.3, 1.5, 2.0],
            nu: o.grid.nu,
            nv: o.grid.nv,
            u_span: o.grid.u_span,
            eps_rel: o.grid.eps_rel,
            n_max: o.n_max,
            base_points: o.base_points,
        }
    }
}

impl PressureSection {
    pub fn options(&self) -> PressureOptions {
        PressureOptions {
            grid: GridOptions {
                nu: self.nu,
                nv: self.nv,
                u_span: self.u_span,
                eps_rel: self.eps_rel,
            },
            n_max: self.n_max,
            base_points: self.base_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypdimSection {
    /// Empty means the run's `l` only.
    pub l_values: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub tol_t: f64,
    pub tol_p: f64,
    /// Report the band for the entire function from the operator-ratio constant.
    pub entire_band: bool,
    /// Tolerance of the monotone-trend check.
    pub trend_tol: f64,
}

impl Default for HypdimSection {
    fn default() -> Self {
        let b = BowenOptions::default();
        HypdimSection {
            l_values: Vec::new(),
            t_lo: b.t_lo,
            t_hi: b.t_hi,
            tol_t: b.tol_t,
            tol_p: b.tol_p,
            entire_band: true,
            trend_tol: 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JuliaSection {
    /// Window center as an offset from `l` on the real axis.
    pub center_offset: f64,
    pub center_im: f64,
    pub width: f64,
    pub height: f64,
    pub resolution: usize,
    pub n_max: usize,
    pub supersample: bool,
    /// Box sizes `2^box_lo ..= 2^box_hi` pixels.
    pub box_lo: u32,
    pub box_hi: u32,
}

impl Default for JuliaSection {
    fn default() -> Self {
        JuliaSection {
            center_offset: 20.0,
            center_im: 0.0,
            width: 40.0,
            height: 40.0,
            resolution: 2048,
            n_max: 50,
            supersample: false,
            box_lo: 0,
            box_hi: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub approx_samples: usize,
    pub operator_samples: usize,
    pub koebe_samples: usize,
    pub decay_samples: usize,
    pub tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            approx_samples: 200,
            operator_samples: 100,
            koebe_samples: 200,
            decay_samples: 40,
            tol: 1e-9,
        }
    }
}

/// Everything derived from a validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub constants: CalibratedConstants,
    pub radius: RadiusConfig,
    pub params: ModelParams,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => RunConfig::from_toml(&std::fs::read_to_string(p)?),
            None => Ok(RunConfig::default()),
        }
    }

    /// Worker count: explicit value, else the environment, else the configuration.
    pub fn workers(&self, explicit: Option<usize>) -> Result<Option<usize>> {
        if explicit.is_some() {
            return Ok(explicit);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {s:?}"))),
            Err(_) => Ok(self.workers),
        }
    }

    pub fn budget(&self) -> CalibrationBudget {
        let c = &self.calibrate;
        CalibrationBudget {
            grid_n: c.grid_n,
            koebe_samples: c.koebe_samples,
            kcal_samples: c.kcal_samples,
            refine_budget: c.refine_budget,
            tol: c.tol,
            seed: self.seed,
        }
    }

    pub fn bowen(&self) -> BowenOptions {
        let h = &self.hypdim;
        BowenOptions {
            t_lo: h.t_lo,
            t_hi: h.t_hi,
            tol_t: h.tol_t,
            tol_p: h.tol_p,
            pressure: self.pressure.options(),
        }
    }

    /// Loads the constants from the configured file or the bundled set.
    pub fn constants(&self) -> Result<CalibratedConstants> {
        let c = match &self.constants {
            Some(path) => CalibratedConstants::read(path)?,
            None => CalibratedConstants::bundled(self.p).ok_or_else(|| {
                Error::Config(format!(
                    "no bundled constants for p = {}; run `calibrate` and set `constants`",
                    self.p
                ))
            })?,
        };
        if (c.p - self.p).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "constants were calibrated for p = {}, run uses p = {}",
                c.p, self.p
            )));
        }
        Ok(c)
    }

    /// Checks option ranges without touching the constants.
    pub fn validate_options(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.p > 0.0 && self.p.is_finite()) {
            return bad("p must be positive");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        let t = &self.transfer;
        if t.t_values.iter().any(|&x| !(x > 1.0)) {
            return bad("transfer t values must exceed 1");
        }
        if t.moduli.iter().any(|&m| !(m > 1.0)) {
            return bad("transfer moduli are multiples of r and must exceed 1");
        }
        if !(t.eps_tail > 0.0) {
            return bad("eps_tail must be positive");
        }
        let pr = &self.pressure;
        if pr.t_values.iter().any(|&x| !(x > 1.0)) {
            return bad("pressure t values must exceed 1");
        }
        if pr.nu < 4 || pr.nv < 4 || pr.n_max < 3 || pr.base_points == 0 || !(pr.u_span > 0.0) {
            return bad("pressure grid needs nu, nv >= 4, n_max >= 3, base_points >= 1, u_span > 0");
        }
        let h = &self.hypdim;
        if !(h.t_lo > 1.0 && h.t_hi > h.t_lo && h.tol_t > 0.0 && h.tol_p > 0.0) {
            return bad("hypdim needs 1 < t_lo < t_hi and positive tolerances");
        }
        let j = &self.julia;
        if j.resolution == 0 || j.n_max == 0 || !(j.width > 0.0 && j.height > 0.0) {
            return bad("julia window and resolution must be positive");
        }
        if j.box_hi < j.box_lo + 3 {
            return bad("julia box sizes need at least 4 dyadic scales");
        }
        if !(self.eval.tol > 0.0 && self.calibrate.tol > 0.0 && self.verify.tol > 0.0) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }

    /// Constants, radius and parameters, with `l` checked against the
    /// disjoint-type threshold when `dynamics` is set.
    pub fn resolve(&self, dynamics: bool) -> Result<Resolved> {
        self.validate_options()?;
        let constants = self.constants()?;
        let radius = match self.r {
            Some(r) => constants.radius_at(r)?,
            None => constants.radius()?,
        };
        let l = self.l.unwrap_or(min_l_for_disjoint(&radius) + 1.0);
        if dynamics {
            let floor = min_l_for_disjoint(&radius);
            let mut all = vec![l];
            all.extend(&self.transfer.l_values);
            all.extend(&self.hypdim.l_values);
            if let Some(&bad) = all.iter().find(|&&x| x < floor) {
                return Err(Error::Config(format!(
                    "l = {bad} is below the disjoint-type threshold {floor} for r = {}",
                    radius.r
                )));
            }
        }
        Ok(Resolved {
            params: ModelParams::new(self.p, l)?,
            constants,
            radius,
        })
    }
}
