//! Subcommand runners behind the `tractdim` binary. Each writes its artifacts
//! into the output directory and returns their paths.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::calibrate::calibrate;
use crate::cauchy::eval_E;
use crate::config::{Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::julia::{box_dimension, dyadic_boxes, render, write_pgm, RenderOptions, Window};
use crate::model::{log_f, phi, tau_inner, ModelParams};
use crate::pressure::{hypdim_sweep, pressure_estimate, trend_report};
use crate::transfer::{transfer_entire, transfer_model};
use crate::verify::{run_verify, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Calibrate,
    Eval,
    Transfer,
    Pressure,
    Hypdim,
    JuliaRender,
    JuliaDim,
    Verify,
}

impl Command {
    /// Subcommands that iterate the dynamics and need a disjoint-type `l`.
    pub fn is_dynamics(self) -> bool {
        !matches!(self, Command::Calibrate | Command::Eval)
    }
}

/// Outcome of a run: written files, and whether all checks passed (`verify`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub success: bool,
}

/// Runs `cmd` on a pool of `workers` threads (the global pool when `None`).
pub fn run(cmd: Command, cfg: &RunConfig, workers: Option<usize>) -> Result<RunOutput> {
    cfg.validate_options()?;
    std::fs::create_dir_all(&cfg.out)?;
    let workers = cfg.workers(workers)?;
    match workers {
        Some(0) => Err(Error::Config("worker count must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(cmd, cfg)),
        None => dispatch(cmd, cfg),
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<RunOutput> {
    if cmd == Command::Calibrate {
        return run_calibrate(cfg);
    }
    let res = cfg.resolve(cmd.is_dynamics())?;
    match cmd {
        Command::Calibrate => unreachable!(),
        Command::Eval => run_eval(cfg, &res),
        Command::Transfer => run_transfer(cfg, &res),
        Command::Pressure => run_pressure(cfg, &res),
        Command::Hypdim => run_hypdim(cfg, &res),
        Command::JuliaRender => run_julia_render(cfg, &res),
        Command::JuliaDim => run_julia_dim(cfg, &res),
        Command::Verify => run_verify_cmd(cfg, &res),
    }
}

fn ok(files: Vec<PathBuf>) -> Result<RunOutput> {
    Ok(RunOutput { files, success: true })
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run_calibrate(cfg: &RunConfig) -> Result<RunOutput> {
    let c = calibrate(cfg.p, &cfg.budget())?;
    let path = cfg.out.join(format!("constants_p{}.toml", cfg.p));
    c.write(&path)?;
    ok(vec![path])
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    z: [f64; 2],
    p: f64,
    l: f64,
    /// `u = (Log(z - l))^(1+p)`.
    tau_inner: Option<[f64; 2]>,
    log_abs_f: Option<f64>,
    arg_f: Option<f64>,
    /// `φ_l(z)` when `Re z > 0`.
    phi: Option<[f64; 2]>,
    e: Option<[f64; 2]>,
    e_err: Option<f64>,
    errors: Vec<String>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn run_eval(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    let m = &res.params;
    let points = if cfg.eval.points.is_empty() {
        vec![[m.l() + std::f64::consts::E.powi(2), 0.0]]
    } else {
        cfg.eval.points.clone()
    };
    let rows: Vec<EvalRecord> = points
        .iter()
        .map(|&[re, im]| {
            let z = Complex64::new(re, im);
            let mut errors = Vec::new();
            let mut note = |e: Error| {
                let msg = e.to_string();
                if !errors.contains(&msg) {
                    errors.push(msg);
                }
            };
            let u = tau_inner(z, m).map_err(&mut note).ok();
            let lf = log_f(z, m).map_err(&mut note).ok();
            let ph = if re > 0.0 { phi(z, m).map_err(&mut note).ok() } else { None };
            let e = eval_E(z, m, &res.constants, cfg.eval.tol).map_err(&mut note).ok();
            EvalRecord {
                z: [re, im],
                p: m.p(),
                l: m.l(),
                tau_inner: u.map(pair),
                log_abs_f: lf.map(|v| v.log_mod),
                arg_f: lf.map(|v| v.arg),
                phi: ph.map(pair),
                e: e.map(|q| pair(q.value)),
                e_err: e.map(|q| q.err_est),
                errors,
            }
        })
        .collect();
    let path = cfg.out.join("eval.jsonl");
    write_jsonl(&path, &rows)?;
    ok(vec![path])
}

#[derive(Debug, Serialize)]
struct TransferRow {
    l: f64,
    t: f64,
    w_re: f64,
    w_im: f64,
    value: f64,
    tail_bound: f64,
    #[serde(rename = "K")]
    k: u64,
    terms: u64,
    entire_value: Option<f64>,
    entire_tail_bound: Option<f64>,
    error: Option<String>,
}

fn run_transfer(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    use rayon::prelude::*;
    let tc = &cfg.transfer;
    let ls = if tc.l_values.is_empty() { vec![res.params.l()] } else { tc.l_values.clone() };
    let mut jobs = Vec::new();
    for &l in &ls {
        for &t in &tc.t_values {
            for &m in &tc.moduli {
                for &a in &tc.args {
                    jobs.push((l, t, Complex64::from_polar(m * res.radius.r, a)));
                }
            }
        }
    }
    let rows: Vec<TransferRow> = jobs
        .par_iter()
        .map(|&(l, t, w)| {
            let run = || -> Result<TransferRow> {
                let m = ModelParams::new(cfg.p, l)?;
                let v = transfer_model(w, t, &m, &res.radius, tc.eps_tail)?;
                let e = if tc.refine_budget > 0 {
                    Some(transfer_entire(w, t, &m, &res.radius, &res.constants, tc.eps_tail, tc.refine_budget)?)
                } else {
                    None
                };
                Ok(TransferRow {
                    l,
                    t,
                    w_re: w.re,
                    w_im: w.im,
                    value: v.value,
                    tail_bound: v.tail_bound,
                    k: v.k,
                    terms: v.terms,
                    entire_value: e.map(|e| e.value),
                    entire_tail_bound: e.map(|e| e.tail_bound),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| TransferRow {
                l,
                t,
                w_re: w.re,
                w_im: w.im,
                value: f64::NAN,
                tail_bound: f64::NAN,
                k: 0,
                terms: 0,
                entire_value: None,
                entire_tail_bound: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let path = cfg.out.join("transfer.csv");
    write_csv(&path, &rows)?;
    ok(vec![path])
}

#[derive(Debug, Serialize)]
struct PressureRow {
    l: f64,
    t: f64,
    pressure: f64,
    spread: f64,
    n_used: usize,
    rows: usize,
}

fn run_pressure(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    use rayon::prelude::*;
    let opts = cfg.pressure.options();
    let ests = cfg
        .pressure
        .t_values
        .par_iter()
        .map(|&t| pressure_estimate(t, &res.params, &res.radius, &opts))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<PressureRow> = ests
        .iter()
        .map(|e| PressureRow {
            l: res.params.l(),
            t: e.t,
            pressure: e.value,
            spread: e.spread,
            n_used: e.n_used,
            rows: e.rows,
        })
        .collect();
    let csv_path = cfg.out.join("pressure.csv");
    let json_path = cfg.out.join("pressure.jsonl");
    write_csv(&csv_path, &rows)?;
    write_jsonl(&json_path, &ests)?;
    ok(vec![csv_path, json_path])
}

#[derive(Debug, Serialize)]
struct HypdimRow {
    l: f64,
    /// `|P(h)|` at the returned zero.
    pressure: Option<f64>,
    spread: Option<f64>,
    h_lo: Option<f64>,
    h: Option<f64>,
    h_hi: Option<f64>,
    band_lo: Option<f64>,
    band_hi: Option<f64>,
    error: Option<String>,
}

fn run_hypdim(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    let ls = if cfg.hypdim.l_values.is_empty() {
        vec![res.params.l()]
    } else {
        cfg.hypdim.l_values.clone()
    };
    let consts = cfg.hypdim.entire_band.then_some(&res.constants);
    let sweep = hypdim_sweep(&ls, cfg.p, &res.radius, consts, &cfg.bowen());
    let rows: Vec<HypdimRow> = sweep
        .iter()
        .map(|r| HypdimRow {
            l: r.l,
            pressure: r.estimate.map(|e| e.residual),
            spread: r.estimate.map(|e| e.spread),
            h_lo: r.estimate.map(|e| e.lo),
            h: r.estimate.map(|e| e.value),
            h_hi: r.estimate.map(|e| e.hi),
            band_lo: r.entire_band.map(|b| b.0),
            band_hi: r.entire_band.map(|b| b.1),
            error: r.error.clone(),
        })
        .collect();
    let csv_path = cfg.out.join("hypdim.csv");
    let json_path = cfg.out.join("hypdim.jsonl");
    let trend_path = cfg.out.join("trend.txt");
    write_csv(&csv_path, &rows)?;
    write_jsonl(&json_path, &sweep)?;
    std::fs::write(&trend_path, trend_report(&sweep, cfg.hypdim.trend_tol))?;
    ok(vec![csv_path, json_path, trend_path])
}

fn julia_window(cfg: &RunConfig, res: &Resolved) -> Result<Window> {
    let j = &cfg.julia;
    Window::centered(
        Complex64::new(res.params.l() + j.center_offset, j.center_im),
        j.width,
        j.height,
    )
}

fn run_julia_render(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    let j = &cfg.julia;
    let width = j.resolution;
    let height = ((j.resolution as f64) * j.height / j.width).round().max(1.0) as usize;
    let opts = RenderOptions {
        width,
        height,
        n_max: j.n_max,
        supersample: j.supersample,
    };
    let img = render(&julia_window(cfg, res)?, &opts, &res.params, &res.radius)?;
    let path = cfg.out.join("julia.pgm");
    write_pgm(&img, &path)?;
    ok(vec![path])
}

fn run_julia_dim(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    let j = &cfg.julia;
    let report = box_dimension(
        &julia_window(cfg, res)?,
        j.resolution,
        &res.params,
        &res.radius,
        j.n_max,
        &dyadic_boxes(j.box_lo, j.box_hi),
    )?;
    let json_path = cfg.out.join("boxcount.json");
    let csv_path = cfg.out.join("boxcount.csv");
    std::fs::write(&json_path, report.to_json()? + "\n")?;
    report.write_csv(&csv_path)?;
    ok(vec![json_path, csv_path])
}

fn run_verify_cmd(cfg: &RunConfig, res: &Resolved) -> Result<RunOutput> {
    let v = &cfg.verify;
    let opts = VerifyOptions {
        approx_samples: v.approx_samples,
        operator_samples: v.operator_samples,
        koebe_samples: v.koebe_samples,
        decay_samples: v.decay_samples,
        refine_budget: cfg.calibrate.refine_budget,
        tol: v.tol,
        seed: cfg.seed,
    };
    let report = run_verify(&res.params, &res.radius, &res.constants, &opts)?;
    let path = cfg.out.join("verify.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(RunOutput {
        files: vec![path],
        success: report.pass,
    })
}
