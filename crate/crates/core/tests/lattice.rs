use anisoheat::lattice::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bernoulli() -> LatticeFunction {
    LatticeFunction::from_points(1, &[(vec![0], c(0.5)), (vec![1], c(0.5))]).unwrap()
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

#[test]
fn delta_is_the_identity() {
    let phi = builtin_case(1).unwrap().phi;
    assert_eq!(convolve(&LatticeFunction::delta(2), &phi).unwrap(), phi);
    assert_eq!(convolution_power(&phi, 1, PowerMethod::Fft).unwrap(), phi);
}

#[test]
fn bernoulli_square_and_power() {
    let b = bernoulli();
    let sq = convolve(&b, &b).unwrap();
    assert_eq!(sq.get(&[0]), c(0.25));
    assert_eq!(sq.get(&[1]), c(0.5));
    assert_eq!(sq.get(&[2]), c(0.25));
    assert_eq!(sq.support_points().len(), 3);
    for method in [PowerMethod::Direct, PowerMethod::Fft] {
        let p = convolution_power(&b, 10, method).unwrap();
        for k in 0..=10 {
            assert!((p.get(&[k as i64]) - c(binomial(10, k) / 1024.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn minkowski_support() {
    let phi = builtin_case(3).unwrap().phi.trim();
    let sq = convolve(&phi, &phi).unwrap().trim();
    assert_eq!(sq.offset(), &[-4, -4]);
    assert_eq!(sq.shape(), &[9, 9]);
    assert_eq!(sq.mass(), phi.mass() * phi.mass());
}

#[test]
fn associativity_is_exact() {
    for id in 1..=3 {
        let phi = builtin_case(id).unwrap().phi;
        let sq = convolve(&phi, &phi).unwrap();
        assert_eq!(convolve(&sq, &phi).unwrap(), convolve(&phi, &sq).unwrap(), "case {id}");
    }
}

#[test]
fn builtin_tables() {
    let s3 = 3f64.sqrt();
    let case1 = builtin_case(1).unwrap();
    assert_eq!(case1.phi.get(&[0, 0]), c(8.0 / (22.0 + 2.0 * s3)));
    assert_eq!(case1.mu, num_rational::Ratio::new(3, 4));
    let case2 = builtin_case(2).unwrap();
    assert_eq!(case2.phi.get(&[0, 0]), c(326.0 / 512.0));
    assert_eq!(case2.mu, num_rational::Ratio::new(5, 12));
    let case3 = builtin_case(3).unwrap();
    assert_eq!((case3.prefactor)(&[0, 0]), c(2.0));
    assert_eq!((case3.prefactor)(&[1, 0]), c(0.0));
    assert_eq!((case3.prefactor)(&[-3, 5]), c(2.0));
    // e^{-i pi x_2 / 3} for case 1
    assert!(((case1.prefactor)(&[7, 3]) - c(-1.0)).norm() < 1e-15);
    for case in [&case1, &case2, &case3] {
        assert_eq!(case.mu, case.symbol.homogeneous_order());
    }
}

#[test]
fn mass_identity() {
    for id in 1..=3 {
        let phi = builtin_case(id).unwrap().phi;
        let m = phi.mass();
        for n in [2u32, 7, 16] {
            let p = convolution_power(&phi, n, PowerMethod::Fft).unwrap();
            let want = m.powu(n);
            assert!((p.mass() - want).norm() <= 1e-12 * want.norm(), "case {id}, n = {n}");
        }
    }
}

#[test]
fn fft_matches_direct_on_builtins() {
    for id in 1..=3 {
        let phi = builtin_case(id).unwrap().phi;
        let a = convolution_power(&phi, 8, PowerMethod::Fft).unwrap();
        let b = convolution_power(&phi, 8, PowerMethod::Direct).unwrap();
        let dev = b.iter().map(|(x, v)| (a.get(&x) - v).norm()).fold(0.0, f64::max);
        assert!(dev <= 1e-10, "case {id}: {dev}");
    }
}

#[test]
fn memory_budget_is_enforced() {
    let phi = builtin_case(2).unwrap().phi;
    let err = convolution_power_with_budget(&phi, 4000, PowerMethod::Fft, 1 << 16).unwrap_err();
    assert!(err.to_string().contains("required") || err.to_string().contains("budget"), "{err}");
    assert!(convolution_power(&phi, 0, PowerMethod::Direct).is_err());
}

#[test]
fn sup_norm_follows_attractor_scale() {
    for id in 1..=3 {
        let case = builtin_case(id).unwrap();
        let mu = *case.mu.numer() as f64 / *case.mu.denom() as f64;
        let scaled: Vec<f64> = [16u32, 32, 64, 128, 256]
            .iter()
            .map(|&n| (n as f64).powf(mu) * llt_error(&case, n, None).unwrap().sup_power)
            .collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 2.0, "case {id}: {scaled:?}");
    }
}

#[test]
fn attractor_explains_bulk() {
    let case = builtin_case(3).unwrap();
    let r = llt_error(&case, 100, None).unwrap();
    assert!(r.sup_error < 0.1 * r.sup_power, "{r:?}");
    let r1 = llt_error(&builtin_case(1).unwrap(), 50, None).unwrap();
    assert!((r1.normalized_error - 50f64.powf(0.75) * r1.sup_error).abs() < 1e-15);
}

#[test]
fn explicit_window_too_small() {
    let case = builtin_case(1).unwrap();
    assert!(llt_error(&case, 200, Some(&[8, 8])).is_err());
}

fn random_phi() -> impl Strategy<Value = LatticeFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 49).prop_map(|v| {
        let values = v.into_iter().map(|(re, im)| Complex64::new(re, im) / 7.0).collect();
        LatticeFunction::new(vec![-3, -3], vec![7, 7], values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn fft_direct_equivalence(phi in random_phi(), n in 1u32..=8) {
        let a = convolution_power(&phi, n, PowerMethod::Fft).unwrap();
        let b = convolution_power(&phi, n, PowerMethod::Direct).unwrap();
        let dev = b.iter().map(|(x, v)| (a.get(&x) - v).norm()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-10, "{}", dev);
        let want = phi.mass().powu(n);
        prop_assert!((a.mass() - want).norm() <= 1e-12 * want.norm().max(1e-300) + 1e-15);
    }
}
