//! Acceptance suite. Criteria run sequentially inside one test so that the
//! runtime limits are measured without interference; each prints one line.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tractdim::app::{run, Command};
use tractdim::cauchy::{f_on_contour, quad_cauchy, representation, truncation_tail, ContourSpec, Orientation};
use tractdim::config::RunConfig;
use tractdim::julia::{box_dimension, dyadic_boxes, mask_dimension, Mask, Window};
use tractdim::model::{
    log_phi_l_deriv, phi, preimage_point, tau, tau_inner, ModelParams, XiLog,
};
use tractdim::pressure::{bowen_zero, hypdim_sweep, pressure_estimate, BowenOptions, PressureOptions};
use tractdim::tract::{in_g, TractRegion};
use tractdim::transfer::{partial_sum, tail_bound, transfer_model};
use tractdim::verify::{check_approximation, check_operator_ratio};
use tractdim::{CalibratedConstants, ComplexValue, Error, RadiusConfig};

const PS: [f64; 3] = [0.5, 1.0, 2.0];

type Outcome = Result<String, String>;

fn setup(p: f64) -> (CalibratedConstants, RadiusConfig, ModelParams) {
    let c = CalibratedConstants::bundled(p).expect("bundled constants");
    let cfg = c.radius().unwrap();
    let m = ModelParams::new(p, cfg.l_min + 1.0).unwrap();
    (c, cfg, m)
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn c1_coordinates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for p in PS {
        let (_, cfg, m) = setup(p);
        for _ in 0..1000 {
            let xi = Complex64::new(cfg.log_r() + rng.gen_range(0.0..40.0), rng.gen_range(-1e3..1e3));
            let z = phi(xi, &m).map_err(|e| e.to_string())?;
            let back = tau(z, &m).map_err(|e| e.to_string())?;
            worst = worst.max(rel(back, xi));
            // the other direction from a point of the tract
            let y = Complex64::new(m.l() + rng.gen_range(3.0..15.0), rng.gen_range(-0.3..0.3));
            if let Ok(w) = tau(y, &m) {
                if w.re > 0.0 {
                    worst = worst.max(rel(phi(w, &m).map_err(|e| e.to_string())?, y));
                }
            }
            // reality on the real axis
            let x = rng.gen_range(1.5..1e6);
            let fx = phi(Complex64::new(x, 0.0), &m).map_err(|e| e.to_string())?;
            worst = worst.max(fx.im.abs() / fx.re.abs());
            let ux = tau_inner(Complex64::new(m.l() + std::f64::consts::E + x, 0.0), &m).map_err(|e| e.to_string())?;
            worst = worst.max(ux.im.abs() / ux.re.abs());
        }
    }
    ensure(worst <= 1e-10, format!("worst relative deviation {worst:e} > 1e-10"))?;
    Ok(format!("worst relative deviation {worst:.2e} over 3000 samples"))
}

fn c2_derivative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let p = PS[k % 3];
        let (_, cfg, m) = setup(p);
        let xi = Complex64::new(cfg.log_r() + rng.gen_range(0.0..30.0), rng.gen_range(-200.0..200.0));
        let h = 1e-4 * xi.norm();
        let lp = |x: Complex64| phi(x, &m).map(|v| v.ln());
        let fd = (lp(xi + h).unwrap() - lp(xi - h).unwrap()) / (2.0 * h);
        let d = log_phi_l_deriv(xi, &m).map_err(|e| e.to_string())?;
        worst = worst.max(rel(d, fd));
    }
    ensure(worst <= 1e-6, format!("worst relative error {worst:e} > 1e-6"))?;
    Ok(format!("worst relative error {worst:.2e} over 100 samples"))
}

fn c3_divergence_boundary() -> Outcome {
    let (_, cfg, m) = setup(1.0);
    let w = Complex64::from_polar(2.0 * cfg.r, 0.7);
    let incs: Vec<f64> = [100u64, 1000, 10000]
        .iter()
        .map(|&k| partial_sum(w, 1.0, &m, k, 10 * k).unwrap())
        .collect();
    let c = 0.5 * incs[0];
    ensure(incs.iter().all(|&d| d >= c), format!("t = 1 increments {incs:?} fall below c = {c:e}"))?;
    ensure(
        matches!(transfer_model(w, 1.0, &m, &cfg, 1e-8), Err(Error::Divergence { .. })),
        "t = 1 was not rejected".into(),
    )?;

    let t = 1.2;
    let u = w.norm().ln();
    let v = transfer_model(w, t, &m, &cfg, 1e-8).map_err(|e| e.to_string())?;
    let xi0 = XiLog::from_xi(Complex64::new(u, w.arg())).unwrap();
    let head = (t * preimage_point(xi0, &m).log_weight).exp();
    let k = 20_000u64;
    let s_k = head + partial_sum(w, t, &m, 0, k).unwrap();
    let s_2k = s_k + partial_sum(w, t, &m, k, 2 * k).unwrap();
    let tb_k = tail_bound(u, k, t, m.p()).unwrap();
    let tb_2k = tail_bound(u, 2 * k, t, m.p()).unwrap();
    ensure(s_2k - s_k <= tb_k, format!("doubling increment {:e} exceeds tail bound {tb_k:e}", s_2k - s_k))?;
    let gap = v.value - s_2k;
    ensure(
        gap >= -v.tail_bound && gap <= tb_2k + v.tail_bound,
        format!("truncated value {} vs S_2K {s_2k}: gap {gap:e} outside [0, {tb_2k:e}] +- {:e}", v.value, v.tail_bound),
    )?;
    Ok(format!(
        "t=1 increments {:.3e} {:.3e} {:.3e} >= c = {c:.2e}; t=1.2: S_2K - S_K = {:.2e} <= {tb_k:.2e}, value - S_2K = {gap:.2e} <= {tb_2k:.2e}",
        incs[0],
        incs[1],
        incs[2],
        s_2k - s_k
    ))
}

fn c4_decay() -> Outcome {
    let (_, cfg, m) = setup(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for k in 0..200 {
        let s = k as f64 / 199.0;
        let modulus = cfg.r * (1.0 + 1e-9) * (1e6 / cfg.r).powf(s);
        let w = Complex64::from_polar(modulus, rng.gen_range(-PI..PI));
        let val = transfer_model(w, 1.5, &m, &cfg, 1e-8).map_err(|e| e.to_string())?.value;
        let prod = val * modulus.ln().powf(0.25);
        hi = hi.max(prod);
        lo = lo.min(prod);
    }
    ensure(hi / lo <= 50.0, format!("max/min = {} > 50", hi / lo))?;
    Ok(format!("max/min of L 1(w) (log|w|)^0.25 = {:.3} over 200 points", hi / lo))
}

fn c5_small_in_l() -> Outcome {
    let (_, cfg, m) = setup(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let ws: Vec<Complex64> = (0..1000)
        .map(|_| Complex64::from_polar(cfg.r * rng.gen_range(0.0f64..10.0).exp() * (1.0 + 1e-9), rng.gen_range(-PI..PI)))
        .collect();
    let mut ls = vec![cfg.l_min + 1.0, 1e2, 1e3, 1e4];
    ls.sort_by(f64::total_cmp);
    let mut sups = Vec::new();
    for &l in &ls {
        let ml = m.with_l(l).unwrap();
        let mut sup = 0.0f64;
        for &w in &ws {
            sup = sup.max(transfer_model(w, 1.5, &ml, &cfg, 1e-8).map_err(|e| e.to_string())?.value);
        }
        sups.push(sup);
    }
    ensure(sups.windows(2).all(|p| p[1] <= p[0]), format!("sups {sups:?} not non-increasing in l = {ls:?}"))?;
    ensure(*sups.last().unwrap() < 0.1, format!("sup at l = 1e4 is {}", sups.last().unwrap()))?;
    let s: Vec<String> = sups.iter().map(|v| format!("{v:.3e}")).collect();
    Ok(format!("sup over 1000 w at l = {ls:.1?}: {}", s.join(", ")))
}

fn c6_approximation() -> Outcome {
    let mut lines = Vec::new();
    for p in PS {
        let (c, cfg, m) = setup(p);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let checks = check_approximation(&m, &cfg, &c, 200, 1e-9, &mut rng).map_err(|e| e.to_string())?;
        // |E - f| ≤ C also on G_D points where |f| may be below r
        let g = TractRegion::new(c.d_est, 1.0, p).unwrap();
        let x_top = (600f64.ln()).powf(1.0 / (1.0 + p)).exp();
        let mut worst_g = 0.0f64;
        for _ in 0..200 {
            let x = c.d_est + rng.gen_range(0.01..1.0) * (x_top - c.d_est);
            let y = Complex64::new(x, rng.gen_range(-0.99..0.99) * g.half_width(x));
            let rep = representation(y + m.l(), &m, &c, 1e-9).map_err(|e| e.to_string())?;
            ensure(rep.in_tract, format!("sample {y} not classified in G_D"))?;
            worst_g = worst_g.max(rep.correction.norm()).max(rep.correction_deriv.norm());
        }
        for ch in &checks {
            ensure(ch.pass, format!("p = {p}: {} worst {} limit {}", ch.name, ch.worst, ch.limit))?;
        }
        ensure(worst_g <= c.c_est, format!("p = {p}: |E - f| on G_D reached {worst_g} > C = {}", c.c_est))?;
        let w = |n: &str| checks.iter().find(|c| c.name == n).unwrap().worst;
        lines.push(format!(
            "p={p}: |E-f| {:.2e} |E'-f'| {:.2e} G_D {:.2e} log2-ratios {:.1e}/{:.1e} off {:.2e} (C {:.1})",
            w("approx_value"),
            w("approx_deriv"),
            worst_g,
            w("ratio_value"),
            w("ratio_deriv"),
            w("off_tract"),
            c.c_est
        ));
    }
    Ok(lines.join("; "))
}

fn c7_operator() -> Outcome {
    let mut lines = Vec::new();
    for p in PS {
        let (c, cfg, m) = setup(p);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ch = check_operator_ratio(&m, &cfg, &c, 100, 4, &mut rng).map_err(|e| e.to_string())?;
        ensure(c.kcal <= 2.0, format!("p = {p}: Kcal = {} > 2", c.kcal))?;
        ensure(ch.pass, format!("p = {p}: max |log ratio|/t = {} > log Kcal = {}", ch.worst, ch.limit))?;
        lines.push(format!("p={p}: {:.2e} <= log Kcal {:.2e}", ch.worst, ch.limit));
    }
    Ok(lines.join("; "))
}

fn c8_pressure() -> Outcome {
    let mut lines = Vec::new();
    for p in PS {
        let (_, cfg, m) = setup(p);
        let start = Instant::now();
        let opts = PressureOptions::default();
        let ests: Vec<_> = [1.1, 1.3, 1.5, 2.0]
            .iter()
            .map(|&t| pressure_estimate(t, &m, &cfg, &opts).unwrap())
            .collect();
        for w in ests.windows(2) {
            ensure(
                w[0].value - w[1].value > w[0].spread + w[1].spread,
                format!("p = {p}: P({}) = {} vs P({}) = {}", w[0].t, w[0].value, w[1].t, w[1].value),
            )?;
        }
        let bo = BowenOptions::default();
        let a = bowen_zero(&m, &cfg, &bo).map_err(|e| format!("p = {p}: {e}"))?.estimate;
        let b = bowen_zero(&m, &cfg, &BowenOptions { tol_t: bo.tol_t / 2.0, ..bo })
            .map_err(|e| format!("p = {p}, halved tol_t: {e}"))?
            .estimate;
        ensure(a.residual <= bo.tol_p + a.spread, format!("p = {p}: |P(h)| = {} > tol_P + spread", a.residual))?;
        ensure(b.lo >= a.lo && b.hi <= a.hi, format!("p = {p}: brackets not nested: {a:?} {b:?}"))?;
        ensure(a.lo <= a.value && a.value <= a.hi, format!("p = {p}: value outside bracket"))?;
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 600.0, format!("p = {p}: {secs:.0} s > 10 min"))?;
        lines.push(format!(
            "p={p}: P = {:.3}/{:.3}/{:.3}/{:.3}, h = {:.5} |P(h)| {:.1e}, {secs:.1} s",
            ests[0].value, ests[1].value, ests[2].value, ests[3].value, a.value, a.residual
        ));
    }
    Ok(lines.join("; "))
}

fn c9_hypdim_trend() -> Outcome {
    let (c, cfg, _) = setup(1.0);
    let base = cfg.l_min;
    let ls = [base + 1.0, 3.0 * base, 10.0 * base, 30.0 * base, 100.0 * base];
    let rows = hypdim_sweep(&ls, 1.0, &cfg, Some(&c), &BowenOptions::default());
    let mut est = Vec::new();
    for r in &rows {
        match r.estimate {
            Some(e) => est.push(e),
            None => return Err(format!("l = {} failed: {:?}", r.l, r.error)),
        }
    }
    for (i, w) in est.windows(2).enumerate() {
        let tol = (w[0].hi - w[0].lo) + (w[1].hi - w[1].lo);
        ensure(w[1].value <= w[0].value + tol, format!("h rises from l = {} to l = {}", ls[i], ls[i + 1]))?;
    }
    ensure(est.iter().all(|e| e.value >= 0.95), "an estimate fell below 0.95".into())?;
    let last = est.last().unwrap().value;
    ensure(last <= 1.2, format!("largest-l estimate {last} > 1.2"))?;
    let hs: Vec<String> = est.iter().map(|e| format!("{:.5}", e.value)).collect();
    Ok(format!("h over l = l_min+1 .. 100 l_min: {}", hs.join(", ")))
}

fn c10_box_counting() -> Outcome {
    let n = 2048;
    let boxes = dyadic_boxes(0, 7);
    let px = 1.0 / n as f64;
    let (_, line) = mask_dimension(&Mask::segment(n, n, (3.0, 7.0), (2040.0, 1500.0)), &boxes, px).unwrap();
    let (_, square) = mask_dimension(&Mask::filled(n, n), &boxes, px).unwrap();
    ensure((line.value - 1.0).abs() <= 0.05, format!("segment gave {}", line.value))?;
    ensure((square.value - 2.0).abs() <= 0.05, format!("square gave {}", square.value))?;

    let (_, cfg, m) = setup(1.0);
    let window = Window::centered(ComplexValue::new(m.l() + 20.0, 0.0), 40.0, 40.0).unwrap();
    let rep = box_dimension(&window, n, &m, &cfg, 50, &boxes).map_err(|e| e.to_string())?;
    let synth = format!("synthetic {:.3}/{:.3}", line.value, square.value);
    let lower = rep.lower.map_or("none".to_string(), |d| format!("{:.3}", d.value));
    let summary = format!(
        "{synth}; julia upper {:.3} lower {lower} estimate {:.3}, undecided {:.3}",
        rep.upper.value, rep.fitted_dim.value, rep.undecided_fraction
    );
    let Some(lo) = rep.lower else {
        return Err(format!("{summary}: no pixel survived {} steps, so the lower variant is empty", rep.n_max));
    };
    let est = rep.fitted_dim.value;
    ensure(
        lo.value <= est && est <= rep.upper.value && (1.2..=1.8).contains(&est),
        format!("{summary}: estimate outside [1.2, 1.8] or not bracketed"),
    )?;
    Ok(summary)
}

fn c11_quadrature() -> Outcome {
    let g = TractRegion::new(3.0, 1.0, 1.0).unwrap();
    let h = |z: Complex64| 1.0 / ((z + 1.0) * (z + 1.0));
    let mut worst = 0.0f64;
    for (z, inside) in [
        (Complex64::new(6.0, 0.5), true),
        (Complex64::new(40.0, -3.0), true),
        (Complex64::new(-2.0, 4.0), false),
        (Complex64::new(8.0, 9.0), false),
        (Complex64::new(0.0, 0.0), false),
    ] {
        ensure(in_g(z, &g) == inside, format!("{z} misclassified"))?;
        for (o, s) in [(Orientation::Clockwise, -1.0), (Orientation::CounterClockwise, 1.0)] {
            for x in [1e5, 2e5] {
                let spec = ContourSpec::new(g, x, o).unwrap();
                let r = quad_cauchy(|t| Ok(h(t) / (t - z)), &spec, 1e-11).map_err(|e| e.to_string())?;
                let expect = if inside { s * h(z) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((r.value - expect).norm());
            }
        }
    }
    ensure(worst <= 1e-8, format!("residue oracle error {worst:e}"))?;

    // doubling the truncation point of the integral defining E
    let mut doubling = 0.0f64;
    let mut smallest = f64::INFINITY;
    for p in PS {
        let d = tractdim::tract::estimate_d(p).unwrap();
        let region = TractRegion::new(d + 1.0, 5.0 / 6.0, p).unwrap();
        let z = Complex64::new(-3.0, 1.5);
        let mut x = 2.0 * (z.norm() + 1.0);
        while truncation_tail(x, &region) > 1e-12 {
            x *= 1.25;
        }
        let k = |t: Complex64| Ok(f_on_contour(t, p)? / (t - z));
        let a = quad_cauchy(k, &ContourSpec::new(region, x, Orientation::Clockwise).unwrap(), 1e-12)
            .map_err(|e| e.to_string())?;
        let b = quad_cauchy(k, &ContourSpec::new(region, 2.0 * x, Orientation::Clockwise).unwrap(), 1e-12)
            .map_err(|e| e.to_string())?;
        let diff = (a.value - b.value).norm();
        ensure(
            diff <= truncation_tail(x, &region) + a.err_est + b.err_est + 1e-12,
            format!("p = {p}: doubling changed the integral by {diff:e}"),
        )?;
        doubling = doubling.max(diff);
        smallest = smallest.min(a.value.norm());
    }
    Ok(format!("residue error {worst:.2e}; truncation doubling change {doubling:.2e} (integrals >= {smallest:.2e})"))
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for n in [1usize, 4, 8] {
        let cfg = RunConfig {
            out: dir.path().join(format!("w{n}")),
            ..RunConfig::default()
        };
        let res = run(Command::Verify, &cfg, Some(n)).map_err(|e| e.to_string())?;
        ensure(res.success, format!("verify reported failing checks with {n} workers"))?;
        outputs.push(std::fs::read(&res.files[0]).map_err(|e| e.to_string())?);
    }
    ensure(
        outputs.windows(2).all(|w| w[0] == w[1]),
        "verify output differs across worker counts".into(),
    )?;
    Ok(format!("verify.json identical for 1, 4, 8 workers ({} bytes), all checks pass", outputs[0].len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, u64, fn() -> Outcome); 12] = [
        ("coordinate identities", 1, c1_coordinates),
        ("derivative correctness", 1, c2_derivative),
        ("transfer divergence boundary", 30, c3_divergence_boundary),
        ("decay law", 30, c4_decay),
        ("smallness in l", 120, c5_small_in_l),
        ("approximation bounds", 300, c6_approximation),
        ("operator comparability", 600, c7_operator),
        ("pressure behavior", 1800, c8_pressure),
        ("hyperbolic-dimension trend", 3600, c9_hypdim_trend),
        ("box-count proxy", 600, c10_box_counting),
        ("quadrature oracle", 30, c11_quadrature),
        ("determinism", 600, c12_determinism),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let out = match out {
            Ok(msg) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("{msg}; took {:.1} s, limit {limit} s", elapsed.as_secs_f64()))
            }
            o => o,
        };
        let (tag, msg) = match &out {
            Ok(m) => ("PASS", m.clone()),
            Err(m) => ("FAIL", m.clone()),
        };
        writeln!(err, "[{tag}] {:>2}. {name} ({:.2} s): {msg}", i + 1, elapsed.as_secs_f64()).unwrap();
        if out.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
