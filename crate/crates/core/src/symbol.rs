//! Constant-coefficient weighted-monomial symbols `P(xi) = sum a_beta xi^beta`.
//!
//! Sign convention: with `D = i d/dx`, the operator `c * d^beta` has symbol
//! `c * (-i)^{|beta|} xi^beta`, and `K^t = F^{-1}(exp(-t P))` with
//! `F^{-1} g(x) = (2 pi)^{-d} int exp(-i xi.x) g(xi) d xi`.

use crate::anisotropy::{mat_vec, Dilation, DilationExponent};
use crate::error::{check_dim, Error, Result};
use crate::numeric::sampling::{rng, sphere_directions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `xi^beta` as a coordinate monomial.
    #[inline]
    pub fn monomial(&self, xi: &[f64]) -> f64 {
        let mut p = 1.0;
        for (x, &b) in xi.iter().zip(&self.0) {
            if b > 0 {
                p *= x.powi(b as i32);
            }
        }
        p
    }

    /// `z^beta` for complex coordinates.
    pub fn monomial_complex(&self, z: &[Complex64]) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for (x, &b) in z.iter().zip(&self.0) {
            if b > 0 {
                p *= x.powu(b);
            }
        }
        p
    }

    /// All `gamma <= self` componentwise, `gamma != self`.
    pub fn proper_lower(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::new())];
        for &b in &self.0 {
            let mut next = Vec::new();
            for g in &out {
                for v in 0..=b {
                    let mut e = g.0.clone();
                    e.push(v);
                    next.push(MultiIndex(e));
                }
            }
            out = next;
        }
        out.retain(|g| g != self);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Weight `m = (m_1, ..., m_d)`, all `m_k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Weight(Vec<u32>);

impl Weight {
    pub fn new(m: Vec<u32>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::invalid("weight must have at least one entry"));
        }
        if m.iter().any(|&v| v == 0) {
            return Err(Error::invalid(format!("weight {m:?} has a zero entry")));
        }
        Ok(Self(m))
    }

    pub fn uniform(m: u32, d: usize) -> Result<Self> {
        Self::new(vec![m; d])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Eigenvalues `1/(2 m_k)` of the canonical exponent `E_v^{2m}`.
    pub fn exponents(&self) -> Vec<f64> {
        self.0.iter().map(|&m| 1.0 / (2 * m) as f64).collect()
    }

    pub fn max(&self) -> u32 {
        *self.0.iter().max().expect("non-empty")
    }

    pub fn min(&self) -> u32 {
        *self.0.iter().min().expect("non-empty")
    }
}

/// `|beta:2m| = sum beta_k / (2 m_k)`, exact.
pub fn weighted_degree(beta: &MultiIndex, m: &Weight) -> Result<Rational> {
    check_dim(m.dim(), beta.dim())?;
    Ok(beta
        .0
        .iter()
        .zip(m.as_slice())
        .map(|(&b, &mk)| Rational::new(b as i64, 2 * mk as i64))
        .sum())
}

/// `|beta:m| = sum beta_k / m_k`, exact.
pub fn weighted_degree_m(beta: &MultiIndex, m: &Weight) -> Result<Rational> {
    Ok(weighted_degree(beta, m)? * 2)
}

/// `mu = sum 1 / (2 m_k)`, exact.
pub fn homogeneous_order(m: &Weight) -> Rational {
    m.as_slice().iter().map(|&mk| Rational::new(1, 2 * mk as i64)).sum()
}

pub fn format_rational(r: Rational) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            let p: i64 = p.trim().parse().ok()?;
            (q != 0).then(|| Rational::new(p, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Symbol `P(xi) = sum_beta a_beta u^beta`, `u = B xi`, where the rows of `B` are
/// the basis vectors. Every term satisfies `|beta:m| <= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSymbol {
    weight: Weight,
    terms: BTreeMap<MultiIndex, Complex64>,
    basis: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
    identity_basis: bool,
    label: String,
}

impl WeightedSymbol {
    pub fn new(weight: Weight, terms: impl IntoIterator<Item = (MultiIndex, Complex64)>) -> Result<Self> {
        let d = weight.dim();
        Self::with_basis(weight, terms, DMatrix::identity(d, d))
    }

    /// Symbol entered in the coordinates `u = B xi` of a non-standard basis.
    pub fn with_basis(
        weight: Weight,
        terms: impl IntoIterator<Item = (MultiIndex, Complex64)>,
        basis: DMatrix<f64>,
    ) -> Result<Self> {
        let d = weight.dim();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis.nrows() });
        }
        let basis_inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("basis matrix is singular"))?;
        let mut map = BTreeMap::new();
        let two = Rational::from_integer(2);
        let mut has_principal = false;
        for (beta, a) in terms {
            check_dim(d, beta.dim())?;
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::invalid(format!("coefficient of {beta} is not finite")));
            }
            let deg = weighted_degree_m(&beta, &weight)?;
            if deg > two {
                return Err(Error::DegreeTooHigh { beta: beta.0.clone(), degree: format_rational(deg) });
            }
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            if deg == two {
                has_principal = true;
            }
            *map.entry(beta).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        if !has_principal {
            return Err(Error::invalid("symbol has no term with |beta:m| = 2"));
        }
        let identity_basis = basis == DMatrix::identity(d, d);
        Ok(Self { weight, terms: map, basis, basis_inv, identity_basis, label: String::new() })
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

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.terms
    }

    /// Rows are the basis vectors.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.basis_inv
    }

    pub fn has_identity_basis(&self) -> bool {
        self.identity_basis
    }

    /// `|det B|`, the Jacobian between standard and basis coordinates.
    pub fn basis_det_abs(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// `u = B xi`.
    pub fn to_coords(&self, xi: &[f64]) -> Vec<f64> {
        if self.identity_basis {
            xi.to_vec()
        } else {
            mat_vec(&self.basis, xi)
        }
    }

    /// Spatial coordinates `c = B^{-T} x`, dual to `u`.
    pub fn spatial_coords(&self, x: &[f64]) -> Vec<f64> {
        if self.identity_basis {
            x.to_vec()
        } else {
            mat_vec(&self.basis_inv.transpose(), x)
        }
    }

    /// `x = B^T c`.
    pub fn spatial_from_coords(&self, c: &[f64]) -> Vec<f64> {
        if self.identity_basis {
            c.to_vec()
        } else {
            mat_vec(&self.basis.transpose(), c)
        }
    }

    /// `P(xi)` for `xi` in standard dual coordinates.
    pub fn evaluate(&self, xi: &[f64]) -> Result<Complex64> {
        check_dim(self.dim(), xi.len())?;
        Ok(self.evaluate_coords(&self.to_coords(xi)))
    }

    /// `P` at basis coordinates `u`, unchecked.
    #[inline]
    pub fn evaluate_coords(&self, u: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (beta, a) in &self.terms {
            acc += a * beta.monomial(u);
        }
        acc
    }

    /// `P` at complex basis coordinates.
    pub fn evaluate_coords_complex(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (beta, a) in &self.terms {
            acc += a * beta.monomial_complex(z);
        }
        acc
    }

    /// `P` at standard coordinates, unchecked (hot path).
    #[inline]
    pub fn evaluate_unchecked(&self, xi: &[f64]) -> Complex64 {
        if self.identity_basis {
            return self.evaluate_coords(xi);
        }
        let d = self.dim();
        let mut u = [0.0f64; 8];
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.basis[(i, j)] * xi[j];
            }
            u[i] = s;
        }
        self.evaluate_coords(&u[..d])
    }

    pub fn degree_m(&self, beta: &MultiIndex) -> Rational {
        weighted_degree_m(beta, &self.weight).expect("validated dimension")
    }

    pub fn is_principal_term(&self, beta: &MultiIndex) -> bool {
        self.degree_m(beta) == Rational::from_integer(2)
    }

    fn filtered(&self, keep: impl Fn(&MultiIndex) -> bool) -> BTreeMap<MultiIndex, Complex64> {
        self.terms.iter().filter(|(b, _)| keep(b)).map(|(b, a)| (b.clone(), *a)).collect()
    }

    /// Terms with `|beta:m| = 2`.
    pub fn principal_part(&self) -> WeightedSymbol {
        Self {
            terms: self.filtered(|b| self.is_principal_term(b)),
            ..self.clone()
        }
    }

    /// Terms with `|beta:m| < 2`; may be empty.
    pub fn lower_terms(&self) -> BTreeMap<MultiIndex, Complex64> {
        self.filtered(|b| !self.is_principal_term(b))
    }

    pub fn is_purely_principal(&self) -> bool {
        self.terms.keys().all(|b| self.is_principal_term(b))
    }

    /// `R(xi) = Re P_p(xi)` at basis coordinates.
    pub fn r_coords(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(b, _)| self.is_principal_term(b))
            .map(|(b, a)| a.re * b.monomial(u))
            .sum()
    }

    /// Multiply every coefficient by `c`.
    pub fn scaled(&self, c: f64) -> WeightedSymbol {
        Self {
            terms: self.terms.iter().map(|(b, a)| (b.clone(), a * c)).collect(),
            ..self.clone()
        }
    }

    pub fn with_terms(&self, terms: impl IntoIterator<Item = (MultiIndex, Complex64)>) -> Result<WeightedSymbol> {
        Ok(Self::with_basis(self.weight.clone(), terms, self.basis.clone())?.labeled(self.label.clone()))
    }

    pub fn homogeneous_order(&self) -> Rational {
        homogeneous_order(&self.weight)
    }

    pub fn mu(&self) -> f64 {
        let r = self.homogeneous_order();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// Canonical dual exponent `E*`: `P_p(t^{E*} xi) = t P_p(xi)`.
    pub fn dual_exponent(&self) -> DilationExponent {
        DilationExponent::new(self.basis_inv.clone(), self.weight.exponents()).expect("validated basis")
    }

    /// Canonical spatial exponent `E`, eigenvectors `v_k` (rows of `B`).
    pub fn spatial_exponent(&self) -> DilationExponent {
        DilationExponent::new(self.basis.transpose(), self.weight.exponents()).expect("validated basis")
    }

    /// Is the principal part `sum c_k u_k^{2 m_k}` with real positive `c_k`?
    pub fn diagonal_coefficients(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let mut c = vec![0.0; d];
        for (beta, a) in &self.terms {
            if !self.is_principal_term(beta) {
                continue;
            }
            let nz: Vec<usize> = (0..d).filter(|&k| beta.0[k] > 0).collect();
            if nz.len() != 1 || a.im != 0.0 || a.re <= 0.0 {
                return None;
            }
            c[nz[0]] = a.re;
        }
        c.iter().all(|v| *v > 0.0).then_some(c)
    }
}

/// Points on the anisotropic unit sphere `sum |u_k|^{2 m_k} = 1`, in basis coordinates.
pub fn anisotropic_sphere(m: &Weight, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = m.dim();
    sphere_directions(d, samples, seed)
        .into_iter()
        .map(|th| scale_to_sphere(m, &th, 1.0))
        .collect()
}

/// Dilate `u` along `t^{E*}` so that `sum |u_k|^{2 m_k} = level`.
pub fn scale_to_sphere(m: &Weight, u: &[f64], level: f64) -> Vec<f64> {
    let s: f64 = u.iter().zip(m.as_slice()).map(|(x, &mk)| x.abs().powi(2 * mk as i32)).sum();
    let t = level / s;
    u.iter()
        .zip(m.as_slice())
        .map(|(x, &mk)| x * t.powf(1.0 / (2 * mk) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCertificate {
    pub positive: bool,
    pub min_re: f64,
    pub max_abs: f64,
    pub samples: usize,
}

pub const POSITIVITY_TOL: f64 = 1e-12;

pub fn default_samples(d: usize) -> usize {
    10_000 * d
}

/// Sample `R = Re P_p` over the anisotropic unit sphere.
pub fn is_positive_definite(p: &WeightedSymbol, samples: usize) -> Result<PositivityCertificate> {
    let d = p.dim();
    if samples < 2 * d {
        return Err(Error::invalid(format!("need at least {} sphere samples, got {samples}", 2 * d)));
    }
    let pp = p.principal_part();
    let mut min_re = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for u in anisotropic_sphere(p.weight(), samples, 3) {
        let v = pp.evaluate_coords(&u);
        min_re = min_re.min(v.re);
        max_abs = max_abs.max(v.norm());
    }
    let positive = max_abs > 0.0 && min_re > POSITIVITY_TOL * max_abs;
    Ok(PositivityCertificate { positive, min_re, max_abs, samples })
}

/// Largest relative error of `t P(xi) = P(t^{E*} xi)` over random `(t, xi)`.
pub fn verify_homogeneity(p: &WeightedSymbol, e: &impl Dilation, trials: usize, seed: u64) -> Result<f64> {
    check_dim(p.dim(), e.dim())?;
    let mut r = rng(seed);
    let d = p.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let t = 10f64.powf(r.gen_range(-2.0..2.0));
        let xi: Vec<f64> = (0..d).map(|_| r.gen_range(-2.0..2.0)).collect();
        let lhs = p.evaluate(&xi)? * t;
        let rhs = p.evaluate(&e.dilate(t, &xi)?)?;
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

/// `Q(tau, xi) = i tau + P(xi)`.
#[derive(Debug, Clone)]
pub struct HeatOperatorSymbol {
    pub symbol: WeightedSymbol,
    pub nondegenerate: bool,
    /// `min |Q| / max |Q|` over the sampled sphere of `R (+) V*`.
    pub min_ratio: f64,
}

impl HeatOperatorSymbol {
    pub fn eval(&self, tau: f64, xi: &[f64]) -> Result<Complex64> {
        Ok(Complex64::new(0.0, tau) + self.symbol.evaluate(xi)?)
    }
}

/// Heat-operator symbol and its nondegeneracy verdict.
///
/// Over the sphere `|tau| + sum |u_k|^{2 m_k} = 1`, `|Q|` is smallest at
/// `tau = -Im P(xi)`, where it equals `|Re P(xi)|`; the verdict therefore
/// requires `Re P` to keep a strict sign on the sampled anisotropic sphere.
pub fn heat_operator_symbol(p: &WeightedSymbol, samples: usize) -> Result<HeatOperatorSymbol> {
    let d = p.dim();
    if samples < 2 * d {
        return Err(Error::invalid(format!("need at least {} sphere samples, got {samples}", 2 * d)));
    }
    let pp = p.principal_part();
    let mut min_q = f64::INFINITY;
    let mut max_q: f64 = 0.0;
    let (mut neg, mut pos) = (false, false);
    let levels = 16;
    for u in anisotropic_sphere(p.weight(), samples, 5) {
        let v = pp.evaluate_coords(&u);
        if v.re > 0.0 {
            pos = true;
        } else if v.re < 0.0 {
            neg = true;
        }
        // |Q| on the joint sphere at s = 1 - |tau|, and the worst tau for this direction
        for l in 0..=levels {
            let s = l as f64 / levels as f64;
            if s == 0.0 {
                max_q = max_q.max(1.0);
                continue;
            }
            let ps = v * s;
            let tau = 1.0 - s;
            for sign in [1.0, -1.0] {
                let q = (Complex64::new(0.0, sign * tau) + ps).norm();
                min_q = min_q.min(q);
                max_q = max_q.max(q);
            }
        }
        // exact minimiser over the joint sphere: s = 1 / (1 + |Im P|)
        let s_star = 1.0 / (1.0 + v.im.abs());
        min_q = min_q.min(v.re.abs() * s_star);
    }
    let min_ratio = min_q / max_q;
    let nondegenerate = !(pos && neg) && min_ratio > POSITIVITY_TOL;
    Ok(HeatOperatorSymbol { symbol: p.clone(), nondegenerate, min_ratio })
}

/// Young-type constant: minimal `M` with `|xi^gamma nu^{beta-gamma}| <= M (R(xi) + R(nu))`,
/// for one principal `beta` and `gamma < beta`, over an `n`-point-per-axis grid on `[-1,1]^{2d}`.
pub fn young_constant(p: &WeightedSymbol, beta: &MultiIndex, gamma: &MultiIndex, n: usize) -> Result<f64> {
    let d = p.dim();
    check_dim(d, beta.dim())?;
    check_dim(d, gamma.dim())?;
    if n < 2 {
        return Err(Error::invalid("grid needs at least 2 points per axis"));
    }
    let rest = MultiIndex(beta.0.iter().zip(&gamma.0).map(|(b, g)| b - g.min(b)).collect());
    let axis: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let total = n.pow(2 * d as u32);
    let mut pt = vec![0.0; 2 * d];
    let mut best: f64 = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        for v in pt.iter_mut() {
            *v = axis[rem % n];
            rem /= n;
        }
        let (xi, nu) = pt.split_at(d);
        let denom = p.r_coords(xi) + p.r_coords(nu);
        if denom <= 0.0 {
            continue;
        }
        let num = (gamma.monomial(xi) * rest.monomial(nu)).abs();
        best = best.max(num / denom);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn degrees() {
        let m = Weight::new(vec![2, 1]).unwrap();
        assert_eq!(weighted_degree_m(&MultiIndex(vec![4, 0]), &m).unwrap(), Rational::from_integer(2));
        assert_eq!(weighted_degree_m(&MultiIndex(vec![2, 1]), &m).unwrap(), Rational::from_integer(2));
        assert_eq!(weighted_degree(&MultiIndex(vec![0, 0]), &m).unwrap(), Rational::from_integer(0));
        assert!(weighted_degree(&MultiIndex(vec![1]), &m).is_err());
    }

    #[test]
    fn rejects_high_degree() {
        let m = Weight::new(vec![2, 1]).unwrap();
        let err = WeightedSymbol::new(m, [(MultiIndex(vec![5, 0]), c(1.0))]).unwrap_err();
        match err {
            Error::DegreeTooHigh { beta, degree } => {
                assert_eq!(beta, vec![5, 0]);
                assert_eq!(degree, "5/2");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn principal_part_drops_lower() {
        let m = Weight::new(vec![2]).unwrap();
        let p = WeightedSymbol::new(m, [(MultiIndex(vec![4]), c(1.0)), (MultiIndex(vec![2]), c(1.0))]).unwrap();
        let pp = p.principal_part();
        assert_eq!(pp.terms().len(), 1);
        assert!(pp.terms().contains_key(&MultiIndex(vec![4])));
        assert_eq!(pp.principal_part(), pp);
    }

    #[test]
    fn rational_round_trip() {
        for s in ["3/4", "2", "5/12"] {
            assert_eq!(format_rational(parse_rational(s).unwrap()), s);
        }
        assert!(parse_rational("1/0").is_none());
    }
}
