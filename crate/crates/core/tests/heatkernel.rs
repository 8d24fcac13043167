use anisoheat::anisotropy::DilationExponent;
use anisoheat::cases::{example1_symbol, example2_symbol, example3_symbol};
use anisoheat::heatkernel::*;
use anisoheat::legendre::LFTransform;
use anisoheat::symbol::{MultiIndex, Weight, WeightedSymbol};
use num_complex::Complex64;
use std::f64::consts::PI;

fn mono(m: u32, c: f64) -> WeightedSymbol {
    WeightedSymbol::new(Weight::new(vec![m]).unwrap(), [(MultiIndex(vec![2 * m]), Complex64::new(c, 0.0))]).unwrap()
}

fn gauss(t: f64, x: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp()
}

fn max_dev(k: &KernelGrid, f: impl Fn(&[f64]) -> Complex64) -> f64 {
    k.values.iter().enumerate().map(|(i, v)| (v - f(&k.point(i))).norm()).fold(0.0, f64::max)
}

#[test]
fn gaussian_oracle() {
    let bx = BoxSpec::cube(1, 8.0).unwrap();
    for t in [0.25, 1.0, 4.0] {
        let k = compute_kernel(&mono(1, 1.0), t, &bx, 512).unwrap();
        let dev = max_dev(&k, |x| Complex64::new(gauss(t, x[0]), 0.0));
        assert!(dev <= 1e-6 * k.peak(), "t = {t}: {dev}");
        assert_eq!(k.meta.normalization, NORMALIZATION);
    }
    let k = compute_kernel(&mono(1, 1.0), 1.0, &bx, 512).unwrap();
    assert!((k.eval(&[2.0]).unwrap().re - (4.0 * PI).powf(-0.5) * (-1f64).exp()).abs() < 1e-10);
}

#[test]
fn time_derivative_oracle() {
    let bx = BoxSpec::cube(1, 8.0).unwrap();
    let p = mono(1, 1.0);
    let k1 = compute_kernel_derivative(&p, 1.0, 1, &MultiIndex(vec![0]), &bx, 256).unwrap();
    assert!((k1.eval(&[0.0]).unwrap().re + 0.5 * (4.0 * PI).powf(-0.5)).abs() < 1e-10);
    let k0 = compute_kernel_derivative(&p, 1.0, 0, &MultiIndex(vec![0]), &bx, 256).unwrap();
    assert_eq!(k0.values, compute_kernel(&p, 1.0, &bx, 256).unwrap().values);
    let kb = compute_kernel_derivative(&p, 1.0, 0, &MultiIndex(vec![1]), &bx, 256).unwrap();
    assert!(kb.eval(&[0.0]).unwrap().norm() < 1e-14);
}

#[test]
fn derivatives_match_finite_differences() {
    let p = example3_symbol();
    let t = 1.0;
    let bx = BoxSpec::cube(2, 10.0).unwrap();
    let n = 256;
    let kt = compute_kernel_derivative(&p, t, 1, &MultiIndex(vec![0, 0]), &bx, n).unwrap();
    let h = 1e-3;
    let plus = compute_kernel(&p, t + h, &bx, n).unwrap();
    let minus = compute_kernel(&p, t - h, &bx, n).unwrap();
    let peak = kt.peak();
    for (i, v) in kt.values.iter().enumerate() {
        let fd = (plus.values[i] - minus.values[i]) / (2.0 * h);
        assert!((v - fd).norm() <= 1e-5 * peak, "{:?}", kt.point(i));
    }
    // D = i d/dx: the kernel of xi_1 e^{-tP} is i dK/dx_1
    let k = compute_kernel(&p, t, &bx, n).unwrap();
    let kx = compute_kernel_derivative(&p, t, 0, &MultiIndex(vec![1, 0]), &bx, n).unwrap();
    let peak = kx.peak();
    let dx = 0.02;
    let at = |x: &[f64; 2], s: f64| k.eval(&[x[0] + s * dx, x[1]]).unwrap();
    for x in [[0.0, 0.0], [0.7, -0.3], [-1.1, 1.9], [2.0, 0.5]] {
        let fd = (at(&x, -2.0) - at(&x, -1.0) * 8.0 + at(&x, 1.0) * 8.0 - at(&x, 2.0)) / (12.0 * dx);
        let want = Complex64::new(0.0, 1.0) * fd;
        assert!((kx.eval(&x).unwrap() - want).norm() <= 1e-5 * peak, "{x:?}");
    }
}

#[test]
fn unit_mass_of_builtin_kernels() {
    for p in [example1_symbol(), example2_symbol(), example3_symbol()] {
        for t in [0.5, 2.0] {
            let bx = suggest_box(&p, t, 60.0).unwrap();
            let k = compute_kernel(&p, t, &bx, 256).unwrap();
            assert!((k.mass() - 1.0).norm() <= 1e-6, "{} t = {t}: {}", p.label(), k.mass());
        }
    }
}

#[test]
fn reality_and_conjugate_symmetry() {
    let p = example3_symbol();
    let bx = BoxSpec::cube(2, 10.0).unwrap();
    let k = compute_kernel(&p, 1.0, &bx, 128).unwrap();
    assert!(k.imaginary_residue() <= 1e-12);
    // real coefficients, odd cross term: K(-x) = conj K(x)
    let p = example1_symbol();
    let k = compute_kernel(&p, 1.0, &BoxSpec::cube(2, 12.0).unwrap(), 128).unwrap();
    assert!(k.imaginary_residue() > 1e-6);
    let n = 128;
    for i in 1..n {
        for j in 1..n {
            let a = k.values[i * n + j];
            let b = k.values[(n - i) * n + (n - j)];
            assert!((a - b.conj()).norm() <= 1e-12 * k.peak());
        }
    }
}

#[test]
fn gaussian_scaling() {
    let p = mono(1, 1.0);
    let bx = BoxSpec::cube(1, 8.0).unwrap();
    let e = DilationExponent::diagonal(vec![0.5]).unwrap();
    let r = scaling_check(&p, &e, &[1.0, 4.0], &bx, 512).unwrap();
    assert!(r.per_t[0].1 < 1e-14);
    assert!(r.per_t[1].1 <= 1e-8);
    let k4 = compute_kernel(&p, 4.0, &bx, 512).unwrap();
    let k1 = compute_kernel(&p, 1.0, &bx, 512).unwrap();
    for x in [0.0, 1.0, 3.0, -5.5] {
        assert!((k4.eval(&[x]).unwrap() - k1.eval(&[x / 2.0]).unwrap() * 0.5).norm() <= 1e-8);
    }
}

#[test]
fn wrong_exponent_breaks_scaling() {
    let p = example2_symbol();
    let bx = suggest_box(&p, 1.0, 60.0).unwrap();
    let good = scaling_check(&p, &p.spatial_exponent(), &[2.0], &bx, 128).unwrap();
    let bad = scaling_check(&p, &DilationExponent::diagonal(vec![0.25, 0.25]).unwrap(), &[2.0], &bx, 128).unwrap();
    assert!(good.max_error <= 1e-6 && bad.max_error > 1e-3, "{} {}", good.max_error, bad.max_error);
}

#[test]
fn gaussian_envelope_fit() {
    let p = mono(1, 1.0);
    let lf = LFTransform::new(&p).unwrap();
    let bx = BoxSpec::cube(1, 16.0).unwrap();
    let ks: Vec<KernelGrid> = [0.5, 1.0, 2.0].iter().map(|&t| compute_kernel(&p, t, &bx, 512).unwrap()).collect();
    let fit = estimate_fit(&ks, &lf, 0.5).unwrap();
    assert!((fit.m - 1.0).abs() < 1e-12, "{}", fit.m);
    assert!((fit.c - (4.0 * PI).powf(-0.5)).abs() < 1e-6);
    assert!(fit.shell_stable);
    // twice the symbol: exponent x^2 / 8t, half of the reference x^2 / 4t
    let q = mono(1, 2.0);
    let kq: Vec<KernelGrid> = [0.5, 1.0, 2.0].iter().map(|&t| compute_kernel(&q, t, &bx, 512).unwrap()).collect();
    let against_p = estimate_fit(&kq, &lf, 0.5).unwrap();
    let against_q = estimate_fit(&kq, &LFTransform::new(&q).unwrap(), 0.5).unwrap();
    let ratio = against_q.m / against_p.m;
    assert!((ratio - 2.0).abs() <= 0.2, "{} {}", against_p.m, against_q.m);
}

#[test]
fn quartic_ray_exponent() {
    // K for xi^4 decays like exp(-c |x|^{4/3})
    let p = mono(2, 1.0);
    let lf = LFTransform::new(&p).unwrap();
    let r = ray_radius_for_level(&lf, 1.0, 0, RAY_LEVEL).unwrap();
    let s = ray_decay_exponent(&p, 1.0, 0, r).unwrap();
    assert!((s - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{s}");
}

#[test]
fn too_small_box_is_reported() {
    let p = mono(1, 1.0);
    let opts = KernelOptions { budget: 1 << 10, ..KernelOptions::default() };
    let err = compute_kernel_with(&p, 100.0, 0, &MultiIndex(vec![0]), &BoxSpec::cube(1, 1.0).unwrap(), 64, &opts);
    assert!(err.is_err());
    let neg = mono(1, -1.0);
    assert!(compute_kernel(&neg, 1.0, &BoxSpec::cube(1, 8.0).unwrap(), 64).is_err());
}
