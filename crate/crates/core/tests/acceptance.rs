//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use anisoheat::cases;
use anisoheat::heatkernel::*;
use anisoheat::lattice::{builtin_case, convolution_power, llt_error, PowerMethod};
use anisoheat::legendre::{kappa, LFTransform};
use anisoheat::levi::*;
use anisoheat::symbol::{homogeneous_order, MultiIndex, Rational, Weight, WeightedSymbol};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn run(&mut self, id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let slow = limit.is_some_and(|l| took > l);
        let (ok, detail) = match res {
            Ok(d) if !slow => (true, d),
            Ok(d) => (false, format!("{d}; runtime {took:.1?} exceeds {:?}", limit.unwrap())),
            Err(d) => (false, d),
        };
        if !ok {
            self.failed += 1;
        }
        println!("{} criterion {id}: {title} [{took:.1?}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gauss(t: f64, x: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp()
}

fn one_dim(m: u32, c: f64) -> WeightedSymbol {
    WeightedSymbol::new(Weight::new(vec![m]).unwrap(), [(MultiIndex(vec![2 * m]), Complex64::new(c, 0.0))]).unwrap()
}

fn homogeneous_orders() -> Check {
    let want = [Rational::new(3, 4), Rational::new(5, 12), Rational::new(3, 4)];
    for (id, w) in (1..=3).zip(want) {
        let mu = cases::mu(id).map_err(err)?;
        ensure(mu == w, || format!("example {id}: mu = {mu}, expected {w}"))?;
    }
    for d in 1..=4usize {
        for m in 1..=4u32 {
            let mu = homogeneous_order(&Weight::uniform(m, d).map_err(err)?);
            ensure(mu == Rational::new(d as i64, 2 * m as i64), || format!("d = {d}, m = {m}: {mu}"))?;
        }
    }
    Ok("3/4, 5/12, 3/4 and d/2m for d, m <= 4".into())
}

fn gaussian_oracle() -> Check {
    let p = one_dim(1, 1.0);
    let bx = BoxSpec::cube(1, 8.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for t in [0.25, 1.0, 4.0] {
        let k = compute_kernel(&p, t, &bx, 512).map_err(err)?;
        let dev = k
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - Complex64::new(gauss(t, k.point(i)[0]), 0.0)).norm())
            .fold(0.0, f64::max);
        let rel = dev / gauss(t, 0.0);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("t = {t}: max deviation {rel:e} of peak"))?;
    }
    Ok(format!("max deviation {worst:.2e} of peak"))
}

fn scaling() -> Check {
    let mut out = Vec::new();
    for id in 1..=3 {
        let p = cases::example_symbol(id).map_err(err)?;
        let bx = suggest_box(&p, 1.0, 60.0).map_err(err)?;
        let r = scaling_check(&p, &p.spatial_exponent(), &[0.5, 2.0, 8.0], &bx, 256).map_err(err)?;
        ensure(r.max_error <= 1e-6, || format!("example {id}: {:?}", r.per_t))?;
        out.push(format!("ex{id} {:.1e}", r.max_error));
    }
    Ok(out.join(", "))
}

fn legendre() -> Check {
    let lap = LFTransform::grid(&one_dim(1, 1.0)).map_err(err)?;
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let x = -5.0 + 0.05 * i as f64;
        let exact = x * x / 4.0;
        let v = lap.eval(&[x]).map_err(err)?;
        worst = worst.max((v - exact).abs() / exact.max(1e-300));
        ensure((v - exact).abs() <= 1e-6 * exact, || format!("x = {x}: {v} vs {exact}"))?;
    }
    let mut worst_cf: f64 = 0.0;
    for m in 1..=4u32 {
        let p = one_dim(m, 1.0);
        let (cf, gr) = (LFTransform::closed_form(&p).map_err(err)?, LFTransform::grid(&p).map_err(err)?);
        // kappa(m) |x|^{omega} against the grid sup
        let w = 2.0 * m as f64 / (2.0 * m as f64 - 1.0);
        for i in 1..=20 {
            let x = 0.25 * i as f64;
            let (a, b) = (cf.eval(&[x]).map_err(err)?, gr.eval(&[x]).map_err(err)?);
            ensure((a - kappa(m) * x.powf(w)).abs() <= 1e-12 * a, || format!("m = {m}: closed form off kappa"))?;
            worst_cf = worst_cf.max((a - b).abs() / a);
            ensure((a - b).abs() <= 1e-6 * a, || format!("m = {m}, x = {x}: {a} vs {b}"))?;
        }
    }
    ensure(kappa(1) == 0.25, || format!("kappa(1) = {}", kappa(1)))?;
    Ok(format!("x^2/4 rel {worst:.1e}; kappa vs grid rel {worst_cf:.1e}; kappa(1) = 1/4"))
}

fn estimates() -> Check {
    let mut out = Vec::new();
    for id in 1..=3 {
        let p = cases::example_symbol(id).map_err(err)?;
        let lf = LFTransform::new(&p).map_err(err)?;
        let bx = suggest_box(&p, 1.0, 60.0).map_err(err)?;
        let k = compute_kernel(&p, 1.0, &bx, 256).map_err(err)?;
        let fit = estimate_fit(std::slice::from_ref(&k), &lf, p.mu()).map_err(err)?;
        ensure(fit.c.is_finite() && fit.m.is_finite() && fit.m > 0.0 && fit.shell_stable, || {
            format!("example {id}: C = {}, M = {}, shells {:?}", fit.c, fit.m, fit.residual_by_shell)
        })?;
        let mut rays = Vec::new();
        for axis in 0..p.dim() {
            let r = ray_radius_for_level(&lf, 1.0, axis, RAY_LEVEL).map_err(err)?;
            let s = ray_decay_exponent(&p, 1.0, axis, r).map_err(err)?;
            let w = lf.omega()[axis];
            ensure((s - w).abs() <= 0.05 * w, || format!("example {id} axis {}: slope {s} vs omega {w}", axis + 1))?;
            rays.push(format!("{s:.3}/{w:.3}"));
        }
        out.push(format!("ex{id} C={:.3} M={:.3} rays {}", fit.c, fit.m, rays.join(" ")));
    }
    Ok(out.join("; "))
}

fn rockland() -> Check {
    let p = WeightedSymbol::new(
        Weight::new(vec![3, 4]).unwrap(),
        [(MultiIndex(vec![6, 0]), Complex64::new(1.0, 0.0)), (MultiIndex(vec![0, 8]), Complex64::new(1.0, 0.0))],
    )
    .map_err(err)?;
    let rows = rockland_compare(&p, 1.0).map_err(err)?;
    let near = |v: f64, w: f64| (v - w).abs() <= 0.05 * w;
    let (a1, a2) = (&rows[0], &rows[1]);
    ensure(near(a2.kernel_exponent, 8.0 / 7.0) && near(a2.rsharp_exponent, 8.0 / 7.0), || format!("axis 2: {a2:?}"))?;
    ensure(near(a2.norm_exponent, 8.0 / 7.0), || format!("axis 2 norm: {a2:?}"))?;
    ensure(near(a1.kernel_exponent, 6.0 / 5.0) && near(a1.rsharp_exponent, 6.0 / 5.0), || format!("axis 1: {a1:?}"))?;
    ensure(near(a1.norm_exponent, 6.0 / 7.0), || format!("axis 1 norm: {a1:?}"))?;
    Ok(format!(
        "axis 1 kernel {:.3} R# {:.3} norm {:.3}; axis 2 kernel {:.3} R# {:.3} norm {:.3}",
        a1.kernel_exponent, a1.rsharp_exponent, a1.norm_exponent, a2.kernel_exponent, a2.rsharp_exponent, a2.norm_exponent
    ))
}

fn local_limits() -> Check {
    let mut out = Vec::new();
    for (id, ns) in [(1u32, [25u32, 50, 100, 200]), (3, [25, 50, 100, 200]), (2, [100, 400, 1600, 6400])] {
        let case = builtin_case(id).map_err(err)?;
        let errs: Vec<f64> =
            ns.iter().map(|&n| llt_error(&case, n, None).map(|e| e.normalized_error)).collect::<Result<_, _>>().map_err(err)?;
        ensure(errs.windows(2).all(|w| w[1] < w[0]), || format!("example {id}: {errs:?} not decreasing"))?;
        let a = convolution_power(&case.phi, 8, PowerMethod::Fft).map_err(err)?;
        let b = convolution_power(&case.phi, 8, PowerMethod::Direct).map_err(err)?;
        let dev = b.iter().map(|(x, v)| (a.get(&x) - v).norm()).fold(0.0, f64::max);
        ensure(dev <= 1e-10, || format!("example {id}: fft vs direct {dev:e}"))?;
        let shown: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
        out.push(format!("ex{id} [{}] fft-direct {dev:.0e}", shown.join(" ")));
    }
    Ok(out.join("; "))
}

fn sine_operator() -> VarCoeffOperator {
    VarCoeffOperator::new(
        Weight::new(vec![1]).unwrap(),
        vec![(MultiIndex(vec![2]), Coefficient::function("1+0.5sin(x)", |x| Complex64::new(1.0 + 0.5 * x[0].sin(), 0.0)))],
        vec![1.0],
        0.5,
        0.5,
    )
    .unwrap()
}

fn levi_pipeline() -> Check {
    let h = sine_operator();
    let cfg = LeviConfig { t_max: 1.0, ..LeviConfig::default() };
    let step = 0.25;
    let ys: Vec<Vec<f64>> = (-14..=14).map(|i| vec![i as f64 * step]).collect();
    let probe = |y: f64| ys.iter().position(|v| v[0] == y).unwrap();
    let cols = [probe(-1.0), probe(0.5), probe(2.0)];
    let fs = fundamental_solution(&h, ys.clone(), &cfg).map_err(err)?;

    // (i)
    let ie = fs.integral_equation_residual().map_err(err)?;
    ensure(ie <= 1e-3, || format!("(i) integral-equation residual {ie:e}"))?;

    // (ii)
    let ts = [0.25, 0.5, 0.75];
    let ws: Vec<Vec<f64>> = (-4..=4).map(|i| vec![0.5 * i as f64]).collect();
    let steps = FdSteps::default();
    let res = residual_check(&fs, &cols, &ts, &ws, steps, true).map_err(err)?;
    ensure(res.normalized <= 5e-3, || format!("(ii) heat residual {:e}", res.normalized))?;
    let res_mid = residual_check(&fs, &cols[1..2], &ts, &ws, steps, true).map_err(err)?;
    let fine = fundamental_solution(&h, vec![vec![0.5]], &cfg.refined()).map_err(err)?;
    let res_fine = residual_check(&fine, &[0], &ts, &ws, steps.refined(), true).map_err(err)?;
    let drop = res_mid.normalized / res_fine.normalized;
    ensure(drop >= 2.0, || format!("(ii) refinement {:e} -> {:e}", res_mid.normalized, res_fine.normalized))?;

    // (iii)
    let xs: Vec<Vec<f64>> = (-4..=4).map(|i| vec![0.25 * i as f64]).collect();
    let ai = approximate_identity_check(&fs, &|y| (-y[0] * y[0]).exp(), &[0.2, 0.1, 0.05, 0.025], &xs, step, true)
        .map_err(err)?;
    ensure(ai.windows(2).all(|w| w[1].1 < w[0].1), || format!("(iii) {ai:?}"))?;

    // (iv)
    let fits = fs.bound_fits().map_err(err)?;
    ensure(fits.z.c.is_finite() && fits.z.m.is_finite() && fits.z.m > 0.0 && fits.z.shell_stable, || {
        format!("(iv) C = {}, M = {}, shells {:?}", fits.z.c, fits.z.m, fits.z.residual_by_shell)
    })?;

    // (v)
    let control = residual_check(&fs, &cols, &ts, &ws, steps, false).map_err(err)?;
    ensure(control.normalized > 5e-3, || format!("(v) residual without W only {:e}", control.normalized))?;

    let ai: Vec<String> = ai.iter().map(|(_, e)| format!("{e:.1e}")).collect();
    Ok(format!(
        "(i) {ie:.1e} (ii) {:.1e} -> {:.1e} (x{drop:.0}) (iii) [{}] (iv) C={:.3} M={:.3} (v) {:.2e}",
        res.normalized,
        res_fine.normalized,
        ai.join(" "),
        fits.z.c,
        fits.z.m,
        control.normalized
    ))
}

fn constant_collapse() -> Check {
    let mut out = Vec::new();
    for m in [1u32, 2] {
        let p = one_dim(m, 1.0);
        let h = VarCoeffOperator::constant(&p).map_err(err)?;
        let cfg = LeviConfig { time_nodes: 8, ..LeviConfig::default() };
        let fs = fundamental_solution(&h, vec![vec![0.0], vec![1.0]], &cfg).map_err(err)?;
        let lay = fs.layout().clone();
        let mut peak: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for col in 0..2 {
            for t in lay.times() {
                for wi in (0..lay.grid().len()).step_by(3) {
                    let mut x = vec![0.0];
                    lay.point(col, t, wi, &mut x);
                    let g = fs.levi.gp(t, &x, &lay.columns()[col]);
                    let z = fs.z(col, t, &x).map_err(err)?;
                    peak = peak.max(g.norm() * t.powf(fs.levi.mu()));
                    gap = gap.max((z - g).norm() * t.powf(fs.levi.mu()));
                }
            }
        }
        let k = fs.series.k.weighted_sup();
        let phi = fs.series.phi.weighted_sup();
        let w = fs.w.weighted_sup();
        let worst = k.max(phi).max(w).max(gap);
        ensure(worst <= 1e-12 * peak, || format!("m = {m}: K {k:e}, phi {phi:e}, W {w:e}, Z - G_p {gap:e}"))?;
        // G_p is the heat kernel of the frozen symbol
        if m == 1 {
            let g = fs.levi.gp(0.5, &[0.3], &[0.0]).re;
            ensure((g - gauss(0.5, 0.3)).abs() <= 1e-10, || format!("G_p {g} vs Gaussian"))?;
        }
        out.push(format!("m={m}: max {worst:e} of peak {peak:.3}"));
    }
    Ok(out.join("; "))
}

fn main() {
    let mut r = Report { failed: 0 };
    r.run(1, "homogeneous orders", Some(Duration::from_secs(1)), homogeneous_orders);
    r.run(2, "Gaussian kernel oracle", Some(Duration::from_secs(5)), gaussian_oracle);
    r.run(3, "scaling identity", Some(Duration::from_secs(60)), scaling);
    r.run(4, "Legendre-Fenchel oracle", None, legendre);
    r.run(5, "estimate fit and ray exponents", None, estimates);
    r.run(6, "Rockland comparison", None, rockland);
    r.run(7, "local limit theorems", Some(Duration::from_secs(600)), local_limits);
    r.run(8, "Levi pipeline", Some(Duration::from_secs(900)), levi_pipeline);
    r.run(9, "constant-coefficient collapse", None, constant_collapse);
    if r.failed > 0 {
        println!("{} criteria failed", r.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
