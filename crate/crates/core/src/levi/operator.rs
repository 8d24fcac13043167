//! Variable-coefficient operators `H = sum a_beta(x) D^beta` and their frozen symbols.

use crate::anisotropy::{consistency, HomogeneousNorm};
use crate::error::{check_dim, Error, Result};
use crate::heatkernel::{compute_kernel, compute_kernel_derivative, suggest_box, BoxSpec};
use crate::numeric::sampling::rng;
use crate::symbol::{
    anisotropic_sphere, format_rational, weighted_degree_m, MultiIndex, Rational, Weight, WeightedSymbol,
    POSITIVITY_TOL,
};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

pub type CoefFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A bounded coefficient `a_beta(x)`.
#[derive(Clone)]
pub struct Coefficient {
    f: CoefFn,
    constant: Option<Complex64>,
    description: String,
}

impl Coefficient {
    pub fn constant(c: Complex64) -> Self {
        Self { f: Arc::new(move |_| c), constant: Some(c), description: format!("{c}") }
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn function(description: impl Into<String>, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), constant: None, description: description.into() }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self.constant {
            Some(c) => c,
            None => (self.f)(x),
        }
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        self.constant
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    fn is_zero(&self) -> bool {
        self.constant == Some(Complex64::new(0.0, 0.0))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({})", self.description)
    }
}

/// `H = sum_{|beta:m| <= 2} a_beta(x) D^beta` on `R^d` in the standard basis.
#[derive(Debug, Clone)]
pub struct VarCoeffOperator {
    weight: Weight,
    coeffs: Vec<(MultiIndex, Coefficient)>,
    alpha: Vec<f64>,
    hoelder_constant: f64,
    delta: f64,
    label: String,
}

impl VarCoeffOperator {
    /// `alpha` are the Hoelder exponents (consistent with `m`), `hoelder_constant`
    /// bounds the principal coefficients' quotients and `delta` is the declared
    /// uniform ellipticity constant.
    pub fn new(
        weight: Weight,
        coeffs: Vec<(MultiIndex, Coefficient)>,
        alpha: Vec<f64>,
        hoelder_constant: f64,
        delta: f64,
    ) -> Result<Self> {
        let d = weight.dim();
        check_dim(d, alpha.len())?;
        let two = Rational::from_integer(2);
        let mut seen = std::collections::BTreeSet::new();
        let mut principal = false;
        for (beta, c) in &coeffs {
            check_dim(d, beta.dim())?;
            let deg = weighted_degree_m(beta, &weight)?;
            if deg > two {
                return Err(Error::DegreeTooHigh { beta: beta.0.clone(), degree: format_rational(deg) });
            }
            if !seen.insert(beta.clone()) {
                return Err(Error::invalid(format!("coefficient for {beta} given twice")));
            }
            principal |= deg == two && !c.is_zero();
        }
        if !principal {
            return Err(Error::invalid("operator has no principal coefficient"));
        }
        if consistency(&alpha, weight.as_slice()).is_none() {
            return Err(Error::invalid(format!(
                "alpha {alpha:?} is not consistent with m {:?}",
                weight.as_slice()
            )));
        }
        if !(hoelder_constant >= 0.0 && hoelder_constant.is_finite()) {
            return Err(Error::invalid("Hoelder constant must be finite and non-negative"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("ellipticity constant delta must be positive"));
        }
        Ok(Self { weight, coeffs, alpha, hoelder_constant, delta, label: String::new() })
    }

    /// Constant-coefficient operator with the given symbol (`alpha = omega(m)`).
    pub fn constant(p: &WeightedSymbol) -> Result<Self> {
        if !p.has_identity_basis() {
            return Err(Error::invalid("variable-coefficient operators use the standard basis"));
        }
        let coeffs = p.terms().iter().map(|(b, a)| (b.clone(), Coefficient::constant(*a))).collect();
        let alpha = crate::anisotropy::omega(p.weight().as_slice());
        Ok(Self::new(p.weight().clone(), coeffs, alpha, 0.0, 1.0)?.labeled(p.label()))
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn coeffs(&self) -> &[(MultiIndex, Coefficient)] {
        &self.coeffs
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn hoelder_constant(&self) -> f64 {
        self.hoelder_constant
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_principal(&self, beta: &MultiIndex) -> bool {
        weighted_degree_m(beta, &self.weight).expect("validated") == Rational::from_integer(2)
    }

    /// `|beta:2m|`, half the weighted degree.
    pub fn half_degree(&self, beta: &MultiIndex) -> f64 {
        let r = weighted_degree_m(beta, &self.weight).expect("validated");
        *r.numer() as f64 / *r.denom() as f64 / 2.0
    }

    pub fn principal_coeffs(&self) -> impl Iterator<Item = &(MultiIndex, Coefficient)> {
        self.coeffs.iter().filter(|(b, _)| self.is_principal(b))
    }

    pub fn lower_coeffs(&self) -> impl Iterator<Item = &(MultiIndex, Coefficient)> {
        self.coeffs.iter().filter(|(b, c)| !self.is_principal(b) && !c.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|(_, c)| c.as_constant().is_some())
    }

    pub fn has_constant_principal_part(&self) -> bool {
        self.principal_coeffs().all(|(_, c)| c.as_constant().is_some())
    }

    pub fn is_purely_principal(&self) -> bool {
        self.lower_coeffs().next().is_none()
    }

    /// `P_p(y, .)`, the principal symbol frozen at `y`.
    pub fn frozen_symbol(&self, y: &[f64]) -> Result<WeightedSymbol> {
        check_dim(self.dim(), y.len())?;
        let terms = self.principal_coeffs().map(|(b, c)| (b.clone(), c.eval(y)));
        WeightedSymbol::new(self.weight.clone(), terms)
            .map_err(|_| Error::NotPositiveDefinite { min_re: 0.0 })
            .map(|p| p.labeled(format!("{}@{y:?}", self.label)))
    }

    /// `P(x, .)`, the full symbol at `x`.
    pub fn full_symbol(&self, x: &[f64]) -> Result<WeightedSymbol> {
        check_dim(self.dim(), x.len())?;
        let terms = self.coeffs.iter().map(|(b, c)| (b.clone(), c.eval(x)));
        WeightedSymbol::new(self.weight.clone(), terms).map(|p| p.labeled(format!("{}@{x:?}", self.label)))
    }

    /// Reference symbol `R(xi) = Re P_p(0, xi)`.
    pub fn reference_symbol(&self) -> Result<WeightedSymbol> {
        let origin = vec![0.0; self.dim()];
        let terms = self
            .principal_coeffs()
            .map(|(b, c)| (b.clone(), Complex64::new(c.eval(&origin).re, 0.0)));
        WeightedSymbol::new(self.weight.clone(), terms)
            .map_err(|_| Error::Degenerate("reference symbol Re P_p(0, .) vanishes".into()))
            .map(|p| p.labeled("reference"))
    }

    pub fn mu(&self) -> f64 {
        self.weight.exponents().iter().sum()
    }

    /// `sigma = gamma / a` with `gamma = 1 / (2 max m - 1)` and `alpha = omega / a`.
    pub fn sigma(&self) -> f64 {
        let a = consistency(&self.alpha, self.weight.as_slice()).expect("validated");
        1.0 / (2 * self.weight.max() - 1) as f64 / a
    }

    /// `max |beta:2m|` over the lower-order terms, `None` when there are none.
    pub fn eta(&self) -> Option<f64> {
        self.lower_coeffs().map(|(b, _)| self.half_degree(b)).reduce(f64::max)
    }

    /// `rho = max(sigma, 1 - eta)`; `sigma` alone for purely principal operators.
    pub fn rho(&self) -> f64 {
        match self.eta() {
            Some(eta) => self.sigma().max(1.0 - eta),
            None => self.sigma(),
        }
    }

    /// Samples the operator over `domain`: coefficient bounds, ellipticity and
    /// Hoelder quotients of the principal coefficients.
    pub fn certify(&self, domain: &BoxSpec, samples: usize) -> Result<OperatorCertificate> {
        let d = self.dim();
        check_dim(d, domain.dim())?;
        if samples < 2 {
            return Err(Error::invalid("need at least two sample points"));
        }
        let mut r = rng(17);
        let points: Vec<Vec<f64>> = (0..samples)
            .map(|_| (0..d).map(|k| r.gen_range(domain.min[k]..=domain.max[k])).collect())
            .collect();
        let sup: Vec<CoefficientBound> = self
            .coeffs
            .iter()
            .map(|(b, c)| CoefficientBound {
                beta: b.0.clone(),
                sup: points.iter().map(|x| c.eval(x).norm()).fold(0.0, f64::max),
            })
            .collect();
        let ellipticity = uniform_ellipticity_constant(self, &points, 256 * d)?;
        let norm = HomogeneousNorm::standard(self.alpha.clone())?;
        let mut quotient: f64 = 0.0;
        for x in &points {
            for _ in 0..4 {
                let h: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0) * 10f64.powf(r.gen_range(-4.0..0.0))).collect();
                let y: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
                let dist = norm.eval(&h);
                if dist == 0.0 {
                    continue;
                }
                for (_, c) in self.principal_coeffs() {
                    quotient = quotient.max((c.eval(x) - c.eval(&y)).norm() / dist);
                }
            }
        }
        let bounded = sup.iter().all(|s| s.sup.is_finite());
        let hoelder_ok = quotient <= self.hoelder_constant * (1.0 + 1e-9) + 1e-12;
        let elliptic = ellipticity.positive && ellipticity.delta >= self.delta * (1.0 - 1e-9);
        Ok(OperatorCertificate {
            sup,
            ellipticity: ellipticity.delta,
            hoelder_quotient: quotient,
            mu: self.mu(),
            sigma: self.sigma(),
            rho: self.rho(),
            valid: bounded && hoelder_ok && elliptic,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientBound {
    pub beta: Vec<u32>,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorCertificate {
    pub sup: Vec<CoefficientBound>,
    pub ellipticity: f64,
    pub hoelder_quotient: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipticity {
    pub delta: f64,
    pub positive: bool,
}

/// `min Re P_p(y, xi) / R(xi)` over the given `y` and sampled anisotropic-sphere `xi`.
pub fn uniform_ellipticity_constant(h: &VarCoeffOperator, y_samples: &[Vec<f64>], xi_samples: usize) -> Result<Ellipticity> {
    let d = h.dim();
    if y_samples.is_empty() {
        return Err(Error::invalid("need at least one y sample"));
    }
    let r = h.reference_symbol()?;
    let sphere = anisotropic_sphere(h.weight(), xi_samples.max(2 * d), 13);
    let mut rvals = Vec::with_capacity(sphere.len());
    for xi in &sphere {
        let v = r.evaluate_coords(xi).re;
        if !(v > POSITIVITY_TOL) {
            return Err(Error::Degenerate(format!("reference symbol R vanishes at xi = {xi:?}")));
        }
        rvals.push(v);
    }
    let principal: Vec<&(MultiIndex, Coefficient)> = h.principal_coeffs().collect();
    let mut delta = f64::INFINITY;
    for y in y_samples {
        check_dim(d, y.len())?;
        let a: Vec<Complex64> = principal.iter().map(|(_, c)| c.eval(y)).collect();
        for (xi, rv) in sphere.iter().zip(&rvals) {
            let p: f64 = principal.iter().zip(&a).map(|((b, _), a)| a.re * b.monomial(xi)).sum();
            delta = delta.min(p / rv);
        }
    }
    Ok(Ellipticity { delta, positive: delta > POSITIVITY_TOL })
}

fn reference_box(p: &WeightedSymbol, t: f64, x: &[f64]) -> Result<BoxSpec> {
    let bx = suggest_box(p, t, 40.0)?;
    let half: Vec<f64> = (0..p.dim()).map(|k| bx.max[k].max(1.25 * x[k].abs() + 1.0)).collect();
    BoxSpec::symmetric(&half)
}

fn reference_points(d: usize) -> usize {
    match d {
        1 => 2048,
        2 => 256,
        _ => 32,
    }
}

/// `G_p(t, x; y)`: the heat kernel of the frozen symbol `P_p(y, .)` at `x`.
pub fn frozen_kernel(h: &VarCoeffOperator, t: f64, x: &[f64], y: &[f64]) -> Result<Complex64> {
    check_dim(h.dim(), x.len())?;
    let p = h.frozen_symbol(y)?;
    let bx = reference_box(&p, t, x)?;
    compute_kernel(&p, t, &bx, reference_points(h.dim()))?.eval(x)
}

/// `K(t, x, y)` from its spectral form
/// `F^{-1}[(P_p(y, .) - P(x, .)) exp(-t P_p(y, .))](x - y)`.
pub fn levi_k(h: &VarCoeffOperator, t: f64, x: &[f64], y: &[f64]) -> Result<Complex64> {
    check_dim(h.dim(), x.len())?;
    let p = h.frozen_symbol(y)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let bx = reference_box(&p, t, &diff)?;
    let n = reference_points(h.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    for (beta, c) in h.coeffs() {
        let mut w = -c.eval(x);
        if h.is_principal(beta) {
            w += c.eval(y);
        }
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += w * compute_kernel_derivative(&p, t, 0, beta, &bx, n)?.eval(&diff)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn exponents_of_sine_operator() {
        let h = sine_operator();
        assert_eq!(h.mu(), 0.5);
        assert_eq!(h.sigma(), 0.5);
        assert_eq!(h.rho(), 0.5);
        assert!(h.is_purely_principal());
    }

    #[test]
    fn ellipticity_of_sine_operator() {
        let h = sine_operator();
        let ys: Vec<Vec<f64>> = (0..=64).map(|i| vec![-4.0 + 8.0 * i as f64 / 64.0]).chain([vec![-std::f64::consts::FRAC_PI_2]]).collect();
        let e = uniform_ellipticity_constant(&h, &ys, 16).unwrap();
        assert!((e.delta - 0.5).abs() < 1e-12);
        assert!(e.positive);
    }

    #[test]
    fn sign_change_is_not_elliptic() {
        let h = VarCoeffOperator::new(
            Weight::new(vec![1]).unwrap(),
            vec![(MultiIndex(vec![2]), Coefficient::function("x", |x| Complex64::new(x[0], 0.0)))],
            vec![1.0],
            1.0,
            0.1,
        )
        .unwrap();
        let ys: Vec<Vec<f64>> = vec![vec![1.0], vec![-1.0]];
        // R(xi) = Re P_p(0, xi) vanishes identically for a(x) = x
        assert!(uniform_ellipticity_constant(&h, &ys, 16).is_err());
        let shifted = VarCoeffOperator::new(
            Weight::new(vec![1]).unwrap(),
            vec![(MultiIndex(vec![2]), Coefficient::function("1-x", |x| Complex64::new(1.0 - x[0], 0.0)))],
            vec![1.0],
            1.0,
            0.1,
        )
        .unwrap();
        let e = uniform_ellipticity_constant(&shifted, &[vec![0.0], vec![2.0]], 16).unwrap();
        assert!(!e.positive);
    }
}
