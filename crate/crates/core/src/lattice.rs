//! Finitely supported functions on `Z^d`, their convolution powers, and the
//! local-limit comparison against attractor heat kernels.

use crate::cases;
use crate::error::{check_dim, Error, Result};
use crate::heatkernel::{compute_kernel_axes, BoxSpec, KernelOptions};
use crate::numeric::fft::fft_nd;
use crate::numeric::next_pow2;
use crate::symbol::{MultiIndex, Rational, WeightedSymbol};
use num_complex::Complex64;
use rustfft::FftDirection;
use std::fmt;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on the number of torus points in an FFT power.
pub const DEFAULT_BUDGET: usize = 1 << 24;

/// Complex function on `Z^d` stored densely on the box `offset + [0, shape)`.
#[derive(Debug, Clone)]
pub struct LatticeFunction {
    offset: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<Complex64>,
}

impl LatticeFunction {
    pub fn new(offset: Vec<i64>, shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        check_dim(offset.len(), shape.len())?;
        if offset.is_empty() {
            return Err(Error::invalid("lattice functions need d >= 1"));
        }
        let total: usize = shape.iter().product();
        if total != values.len() {
            return Err(Error::invalid(format!("{} values for a box of {total} points", values.len())));
        }
        Ok(LatticeFunction { offset, shape, values })
    }

    /// Builds the function from `(x, value)` pairs; repeated points are summed.
    pub fn from_points(d: usize, points: &[(Vec<i64>, Complex64)]) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("lattice functions need d >= 1"));
        }
        if points.is_empty() {
            return Ok(Self::zero(d));
        }
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for (x, _) in points {
            check_dim(d, x.len())?;
            for k in 0..d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let mut f = LatticeFunction { offset: lo, values: vec![ZERO; shape.iter().product()], shape };
        for (x, v) in points {
            let i = f.index_of(x).expect("inside bounding box");
            f.values[i] += v;
        }
        Ok(f)
    }

    /// The function that vanishes identically (empty box at the origin).
    pub fn zero(d: usize) -> Self {
        LatticeFunction { offset: vec![0; d], shape: vec![0; d], values: Vec::new() }
    }

    pub fn delta(d: usize) -> Self {
        LatticeFunction { offset: vec![0; d], shape: vec![1; d], values: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn index_of(&self, x: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for k in 0..self.dim() {
            let i = x[k] - self.offset[k];
            if i < 0 || i as usize >= self.shape[k] {
                return None;
            }
            idx = idx * self.shape[k] + i as usize;
        }
        Some(idx)
    }

    fn point_of(&self, mut flat: usize) -> Vec<i64> {
        let d = self.dim();
        let mut x = vec![0i64; d];
        for k in (0..d).rev() {
            x[k] = self.offset[k] + (flat % self.shape[k]) as i64;
            flat /= self.shape[k];
        }
        x
    }

    /// Value at `x` (zero outside the stored box).
    pub fn get(&self, x: &[i64]) -> Complex64 {
        if x.len() != self.dim() {
            return ZERO;
        }
        self.index_of(x).map_or(ZERO, |i| self.values[i])
    }

    /// All stored points with their values, in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.values.iter().enumerate().map(|(f, v)| (self.point_of(f), *v))
    }

    /// Nonzero entries only.
    pub fn support_points(&self) -> Vec<(Vec<i64>, Complex64)> {
        self.iter().filter(|(_, v)| *v != ZERO).collect()
    }

    pub fn mass(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest box holding every nonzero value.
    pub fn trim(&self) -> Self {
        let d = self.dim();
        let mut lo = vec![usize::MAX; d];
        let mut hi = vec![0usize; d];
        let mut any = false;
        let mut idx = vec![0usize; d];
        for (f, v) in self.values.iter().enumerate() {
            if *v == ZERO {
                continue;
            }
            any = true;
            let mut rem = f;
            for k in (0..d).rev() {
                idx[k] = rem % self.shape[k];
                rem /= self.shape[k];
            }
            for k in 0..d {
                lo[k] = lo[k].min(idx[k]);
                hi[k] = hi[k].max(idx[k]);
            }
        }
        if !any {
            return Self::zero(d);
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let offset: Vec<i64> = self.offset.iter().zip(&lo).map(|(o, l)| o + *l as i64).collect();
        let mut out = LatticeFunction { offset, values: vec![ZERO; shape.iter().product()], shape };
        for f in 0..out.values.len() {
            let x = out.point_of(f);
            out.values[f] = self.get(&x);
        }
        out
    }
}

impl PartialEq for LatticeFunction {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.trim(), other.trim());
        a.offset == b.offset && a.shape == b.shape && a.values == b.values
    }
}

impl fmt::Display for LatticeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lattice function on {:?} + {:?}", self.offset, self.shape)
    }
}

/// Direct convolution; the result lives on the Minkowski sum of the two boxes.
pub fn convolve(phi: &LatticeFunction, psi: &LatticeFunction) -> Result<LatticeFunction> {
    check_dim(phi.dim(), psi.dim())?;
    let d = phi.dim();
    if phi.values.is_empty() || psi.values.is_empty() {
        return Ok(LatticeFunction::zero(d));
    }
    // fixed operand order makes the result independent of argument order, bit for bit
    let (phi, psi) = if canonical_key(phi) <= canonical_key(psi) { (phi, psi) } else { (psi, phi) };
    let shape: Vec<usize> = phi.shape.iter().zip(&psi.shape).map(|(a, b)| a + b - 1).collect();
    let offset: Vec<i64> = phi.offset.iter().zip(&psi.offset).map(|(a, b)| a + b).collect();
    let mut values = vec![ZERO; shape.iter().product()];
    let mut ia = vec![0usize; d];
    let mut ib = vec![0usize; d];
    for (fa, va) in phi.values.iter().enumerate() {
        if *va == ZERO {
            continue;
        }
        unravel(fa, &phi.shape, &mut ia);
        for (fb, vb) in psi.values.iter().enumerate() {
            unravel(fb, &psi.shape, &mut ib);
            let mut out = 0usize;
            for k in 0..d {
                out = out * shape[k] + ia[k] + ib[k];
            }
            values[out] += va * vb;
        }
    }
    Ok(LatticeFunction { offset, shape, values })
}

fn canonical_key(f: &LatticeFunction) -> (&[usize], &[i64], Vec<(u64, u64)>) {
    (&f.shape, &f.offset, f.values.iter().map(|v| (v.re.to_bits(), v.im.to_bits())).collect())
}

fn unravel(mut f: usize, shape: &[usize], idx: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] = f % shape[k];
        f /= shape[k];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMethod {
    Direct,
    Fft,
}

/// `phi^(n)`, the `n`-fold convolution of `phi` with itself.
pub fn convolution_power(phi: &LatticeFunction, n: u32, method: PowerMethod) -> Result<LatticeFunction> {
    convolution_power_with_budget(phi, n, method, DEFAULT_BUDGET)
}

pub fn convolution_power_with_budget(
    phi: &LatticeFunction,
    n: u32,
    method: PowerMethod,
    budget: usize,
) -> Result<LatticeFunction> {
    if n == 0 {
        return Err(Error::invalid("convolution power needs n >= 1"));
    }
    let d = phi.dim();
    if phi.values.is_empty() {
        return Ok(LatticeFunction::zero(d));
    }
    if n == 1 {
        return Ok(phi.clone());
    }
    match method {
        PowerMethod::Direct => {
            let mut acc = phi.clone();
            for _ in 1..n {
                acc = convolve(&acc, phi)?;
            }
            Ok(acc)
        }
        PowerMethod::Fft => {
            // exact torus: no wrap-around can occur
            let out_shape: Vec<usize> = phi.shape.iter().map(|s| n as usize * (s - 1) + 1).collect();
            let torus: Vec<usize> = out_shape.iter().map(|&s| next_pow2(s)).collect();
            let required = torus.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
            if required > budget {
                return Err(Error::MemoryBudget { required, budget });
            }
            let periodic = torus_power(phi, n, &torus, &vec![0; d]);
            let offset: Vec<i64> = phi.offset.iter().map(|o| o * n as i64).collect();
            let mut values = vec![ZERO; out_shape.iter().product()];
            let mut idx = vec![0usize; d];
            for (f, v) in values.iter_mut().enumerate() {
                unravel(f, &out_shape, &mut idx);
                let mut t = 0usize;
                for k in 0..d {
                    let x = phi.offset[k] * n as i64 + idx[k] as i64;
                    t = t * torus[k] + x.rem_euclid(torus[k] as i64) as usize;
                }
                *v = periodic[t];
            }
            Ok(LatticeFunction { offset, shape: out_shape, values })
        }
    }
}

/// Periodisation of `phi^(n)` on the torus `prod Z / torus_k`, with `phi`
/// placed so that the point `anchor` lands on torus index 0.
fn torus_power(phi: &LatticeFunction, n: u32, torus: &[usize], anchor: &[i64]) -> Vec<Complex64> {
    let d = phi.dim();
    let total: usize = torus.iter().product();
    let mut buf = vec![ZERO; total];
    let mut idx = vec![0usize; d];
    for (f, v) in phi.values.iter().enumerate() {
        unravel(f, &phi.shape, &mut idx);
        let mut t = 0usize;
        for k in 0..d {
            let x = phi.offset[k] + idx[k] as i64 - anchor[k];
            t = t * torus[k] + x.rem_euclid(torus[k] as i64) as usize;
        }
        buf[t] += v;
    }
    fft_nd(&mut buf, torus, FftDirection::Forward);
    for v in buf.iter_mut() {
        *v = v.powu(n);
    }
    fft_nd(&mut buf, torus, FftDirection::Inverse);
    let scale = 1.0 / total as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// `phi^(n)` on the centred window `[-half_k, half_k)`, computed on a torus of
/// side `2 half_k` that is smaller than the full support.
///
/// The window is accepted when `|phi^(n)|` on its outer sixteenth stays below
/// `shell_tol` of its maximum; wrap-around then only moves mass of that size.
pub fn bulk_power(phi: &LatticeFunction, n: u32, half: &[usize], shell_tol: f64) -> Result<BulkPower> {
    check_dim(phi.dim(), half.len())?;
    if n == 0 {
        return Err(Error::invalid("convolution power needs n >= 1"));
    }
    let d = phi.dim();
    let torus: Vec<usize> = half.iter().map(|h| 2 * h).collect();
    if torus.iter().any(|&s| s < 16) {
        return Err(Error::invalid("bulk window half-widths must be at least 8"));
    }
    let raw = torus_power(phi, n, &torus, &vec![0; d]);
    // reorder to the centred window
    let total = raw.len();
    let mut values = vec![ZERO; total];
    let mut idx = vec![0usize; d];
    let mut peak = 0f64;
    let mut shell = 0f64;
    for (f, v) in values.iter_mut().enumerate() {
        unravel(f, &torus, &mut idx);
        let mut t = 0usize;
        let mut outer = false;
        for k in 0..d {
            let h = half[k];
            t = t * torus[k] + (idx[k] + h) % torus[k];
            let dist = (idx[k] as i64 - h as i64).unsigned_abs() as usize;
            outer |= dist + torus[k] / 16 >= h;
        }
        *v = raw[t];
        peak = peak.max(v.norm());
        if outer {
            shell = shell.max(v.norm());
        }
    }
    let ratio = if peak > 0.0 { shell / peak } else { 0.0 };
    if ratio > shell_tol {
        return Err(Error::BoxTooSmall { ratio });
    }
    let offset: Vec<i64> = half.iter().map(|&h| -(h as i64)).collect();
    Ok(BulkPower { power: LatticeFunction { offset, shape: torus, values }, shell_ratio: ratio })
}

#[derive(Debug, Clone)]
pub struct BulkPower {
    pub power: LatticeFunction,
    /// Max of `|phi^(n)|` on the outer sixteenth of the window over its peak.
    pub shell_ratio: f64,
}

/// A lattice function together with its attractor and oscillatory prefactor.
pub struct LLTCase {
    pub phi: LatticeFunction,
    pub symbol: WeightedSymbol,
    pub prefactor: Box<dyn Fn(&[i64]) -> Complex64 + Send + Sync>,
    pub mu: Rational,
    pub label: String,
}

impl fmt::Debug for LLTCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LLTCase").field("label", &self.label).field("mu", &self.mu).field("phi", &self.phi).finish()
    }
}

pub fn builtin_case(id: u32) -> Result<LLTCase> {
    let symbol = cases::example_symbol(id)?;
    let phi = LatticeFunction::from_points(2, &cases::phi_table(id)?)?;
    Ok(LLTCase {
        phi,
        mu: symbol.homogeneous_order(),
        symbol,
        prefactor: Box::new(move |x| cases::prefactor(id, x)),
        label: format!("example{id}"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LltError {
    pub n: u32,
    pub sup_error: f64,
    pub normalized_error: f64,
    /// `sup |phi^(n)|` over the window, for scale.
    pub sup_power: f64,
    pub half: Vec<usize>,
}

/// Shell tolerance used when certifying an LLT window.
pub const LLT_SHELL_TOL: f64 = 1e-12;

/// Sup-norm distance between `phi^(n)` and `prefactor * K^n` on integer points.
///
/// With `half = None` the window starts at the scale suggested by the
/// attractor and doubles until `phi^(n)` is negligible on its rim; an explicit
/// window that is too small is an error.
pub fn llt_error(case: &LLTCase, n: u32, half: Option<&[usize]>) -> Result<LltError> {
    let d = case.phi.dim();
    check_dim(d, case.symbol.dim())?;
    let (bulk, half) = match half {
        Some(h) => (bulk_power(&case.phi, n, h, LLT_SHELL_TOL)?, h.to_vec()),
        None => {
            // start at 4 n^{max eigenvalue of E} per axis
            let lam = case.symbol.spatial_exponent().max_eigenvalue();
            let h0 = next_pow2((4.0 * (n as f64).powf(lam)).ceil() as usize).max(16);
            let mut h = vec![h0; d];
            loop {
                match bulk_power(&case.phi, n, &h, LLT_SHELL_TOL) {
                    Ok(b) => break (b, h),
                    Err(Error::BoxTooSmall { ratio }) => {
                        let required = h.iter().map(|v| 4 * v).product::<usize>();
                        if required > DEFAULT_BUDGET {
                            return Err(Error::BoxTooSmall { ratio });
                        }
                        h.iter_mut().for_each(|v| *v *= 2);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    };
    let kernel = kernel_on_window(&case.symbol, n as f64, &half)?;
    let mut sup = 0f64;
    for ((x, v), kv) in bulk.power.iter().zip(&kernel) {
        let err = (v - (case.prefactor)(&x) * kv).norm();
        sup = sup.max(err);
    }
    let mu = *case.mu.numer() as f64 / *case.mu.denom() as f64;
    Ok(LltError {
        n,
        sup_error: sup,
        normalized_error: (n as f64).powf(mu) * sup,
        sup_power: bulk.power.sup_norm(),
        half,
    })
}

/// `K^t` at the integer points of `[-half_k, half_k)`, row-major.
///
/// The grid is refined by powers of two until the symbol has decayed on the
/// dual boundary; small `t` needs frequencies beyond `pi`.
fn kernel_on_window(p: &WeightedSymbol, t: f64, half: &[usize]) -> Result<Vec<Complex64>> {
    let d = half.len();
    let bx = BoxSpec::new(half.iter().map(|&h| -(h as f64)).collect(), half.iter().map(|&h| h as f64).collect())?;
    let opts = KernelOptions::default();
    let mut over = 1usize;
    loop {
        let ns: Vec<usize> = half.iter().map(|h| 2 * h * over).collect();
        match compute_kernel_axes(p, t, 0, &MultiIndex::zero(d), &bx, &ns, &opts) {
            Ok(k) if over == 1 => return Ok(k.values),
            Ok(k) => {
                let coarse: Vec<usize> = half.iter().map(|h| 2 * h).collect();
                let mut idx = vec![0usize; d];
                let values = (0..coarse.iter().product::<usize>())
                    .map(|f| {
                        unravel(f, &coarse, &mut idx);
                        let g = idx.iter().zip(&ns).fold(0, |acc, (i, n)| acc * n + i * over);
                        k.values[g]
                    })
                    .collect();
                return Ok(values);
            }
            Err(Error::DualTruncation { .. }) if over < 16 => over *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn trim_drops_zero_slabs() {
        let f = LatticeFunction::new(vec![-1, -1], vec![3, 3], vec![ZERO, ZERO, ZERO, ZERO, c(1.0), c(2.0), ZERO, ZERO, ZERO]).unwrap();
        let t = f.trim();
        assert_eq!(t.offset(), &[0, 0]);
        assert_eq!(t.shape(), &[1, 2]);
        assert_eq!(f, t);
    }

    #[test]
    fn fft_power_matches_binomial() {
        let b = LatticeFunction::from_points(1, &[(vec![0], c(0.5)), (vec![1], c(0.5))]).unwrap();
        let p = convolution_power(&b, 10, PowerMethod::Fft).unwrap();
        let mut binom = 1.0;
        for k in 0..=10i64 {
            assert!((p.get(&[k]).re - binom / 1024.0).abs() < 1e-15);
            binom = binom * (10 - k) as f64 / (k + 1) as f64;
        }
    }
}
