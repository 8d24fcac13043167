//! Legendre-Fenchel transform `R#(x) = sup_xi { xi.x - R(xi) }` of `R = Re P_p`.

use crate::anisotropy::{consistency, omega, Dilation, DilationExponent, HomogeneousNorm};
use crate::error::{check_dim, Error, Result};
use crate::numeric::optimize::maximize;
use crate::numeric::sampling::{rng, sphere_directions};
use crate::symbol::{is_positive_definite, WeightedSymbol};
use rand::Rng;

/// `kappa = (2m - 1) (2m)^{-2m/(2m-1)}`, so that `sup_xi (x xi - xi^{2m}) = kappa |x|^{2m/(2m-1)}`.
pub fn kappa(m: u32) -> f64 {
    let n = (2 * m) as f64;
    (n - 1.0) * n.powf(-n / (n - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum LfMode {
    ClosedFormDiagonal { coefficients: Vec<f64> },
    Grid { half_width: f64, points: usize },
}

#[derive(Debug, Clone)]
pub struct LFTransform {
    source: WeightedSymbol,
    mode: LfMode,
    table: Option<SphereTable>,
}

const MAX_DOUBLINGS: usize = 40;
const START_HALF_WIDTH: f64 = 4.0;

impl LFTransform {
    /// Closed form when the principal part is diagonal, grid supremum otherwise.
    pub fn new(source: &WeightedSymbol) -> Result<Self> {
        let pp = source.principal_part();
        match pp.diagonal_coefficients() {
            Some(c) => Self::build(pp, LfMode::ClosedFormDiagonal { coefficients: c }),
            None => Self::grid(source),
        }
    }

    pub fn grid(source: &WeightedSymbol) -> Result<Self> {
        let pp = source.principal_part();
        let points = match pp.dim() {
            1 => 2049,
            2 => 129,
            d => {
                return Err(Error::invalid(format!(
                    "grid-mode transform supports d <= 2 (got d = {d}); use a diagonal symbol"
                )))
            }
        };
        Self::build(pp, LfMode::Grid { half_width: START_HALF_WIDTH, points })
    }

    pub fn closed_form(source: &WeightedSymbol) -> Result<Self> {
        let pp = source.principal_part();
        let c = pp
            .diagonal_coefficients()
            .ok_or_else(|| Error::invalid("closed form requires a diagonal principal part sum c_k u_k^{2 m_k}, c_k > 0"))?;
        Self::build(pp, LfMode::ClosedFormDiagonal { coefficients: c })
    }

    fn build(pp: WeightedSymbol, mode: LfMode) -> Result<Self> {
        let cert = is_positive_definite(&pp, 2000 * pp.dim())?;
        if !cert.positive {
            return Err(Error::NotPositiveDefinite { min_re: cert.min_re });
        }
        let mut t = Self { source: pp, mode, table: None };
        if matches!(t.mode, LfMode::Grid { .. }) && t.source.dim() == 2 {
            t.table = Some(SphereTable::build(&t, 2048)?);
        }
        Ok(t)
    }

    pub fn source(&self) -> &WeightedSymbol {
        &self.source
    }

    pub fn mode(&self) -> &LfMode {
        &self.mode
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// `omega(m)`: the homogeneity exponents of `R#` in basis coordinates.
    pub fn omega(&self) -> Vec<f64> {
        omega(self.source.weight().as_slice())
    }

    /// `R#(x)` for `x` in standard coordinates.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        self.eval_coords(&self.source.spatial_coords(x))
    }

    /// `R#` at spatial basis coordinates `c`.
    pub fn eval_coords(&self, c: &[f64]) -> Result<f64> {
        match &self.mode {
            LfMode::ClosedFormDiagonal { coefficients } => Ok(closed_form_value(
                coefficients,
                self.source.weight().as_slice(),
                c,
            )),
            LfMode::Grid { half_width, points } => self.grid_sup(c, *half_width, *points),
        }
    }

    /// Fast evaluation: exact for closed form and d = 1, sphere table for d = 2 grid mode.
    pub fn eval_fast(&self, c: &[f64]) -> Result<f64> {
        match (&self.mode, &self.table) {
            (LfMode::Grid { .. }, Some(tab)) => Ok(tab.eval(c)),
            (LfMode::Grid { .. }, None) if c.len() == 1 => {
                let w = self.omega()[0];
                if c[0] == 0.0 {
                    return Ok(0.0);
                }
                let unit = self.eval_coords(&[c[0].signum()])?;
                Ok(unit * c[0].abs().powf(w))
            }
            _ => self.eval_coords(c),
        }
    }

    fn grid_sup(&self, c: &[f64], half_width: f64, points: usize) -> Result<f64> {
        if c.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let f = |u: &[f64]| u.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() - self.source.r_coords(u);
        let r = maximize(f, &vec![0.0; c.len()], half_width, points, MAX_DOUBLINGS)?;
        Ok(r.value.max(0.0))
    }

    /// `R#` of `M R`, via `(M R)#(x) = M R#(x / M)`.
    pub fn eval_scaled(&self, factor: f64, x: &[f64]) -> Result<f64> {
        let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
        Ok(factor * self.eval(&y)?)
    }
}

fn closed_form_value(coef: &[f64], m: &[u32], c: &[f64]) -> f64 {
    coef.iter()
        .zip(m)
        .zip(c)
        .map(|((&ck, &mk), &x)| {
            let n = (2 * mk) as f64;
            kappa(mk) * ck.powf(-1.0 / (n - 1.0)) * x.abs().powf(n / (n - 1.0))
        })
        .sum()
}

/// Closed-form transform of `sum c_k xi_k^{2 m_k}` in standard coordinates.
pub fn lf_closed_form_diagonal(c: &[f64], m: &[u32]) -> Result<impl Fn(&[f64]) -> f64> {
    check_dim(m.len(), c.len())?;
    if c.iter().any(|v| !(*v > 0.0)) || m.iter().any(|&v| v == 0) {
        return Err(Error::invalid("diagonal closed form needs c_k > 0 and m_k >= 1"));
    }
    let (c, m) = (c.to_vec(), m.to_vec());
    Ok(move |x: &[f64]| closed_form_value(&c, &m, x))
}

/// Values of `R#` on the unit sphere of `N(c) = sum |c_k|^{omega_k}` indexed by polar angle.
/// `R#` is homogeneous of degree one under `s^{I-E}`, as is `N`, so
/// `R#(c) = N(c) R#(theta)` with `theta = N(c)^{-(I-E)} c`.
#[derive(Debug, Clone)]
struct SphereTable {
    omega: Vec<f64>,
    values: Vec<f64>,
}

impl SphereTable {
    fn build(t: &LFTransform, n: usize) -> Result<Self> {
        let omega = t.omega();
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let dir = [phi.cos(), phi.sin()];
            let theta = radial_to_unit(&omega, &dir);
            values.push(t.eval_coords(&theta)?);
        }
        Ok(Self { omega, values })
    }

    fn eval(&self, c: &[f64]) -> f64 {
        let s: f64 = c.iter().zip(&self.omega).map(|(x, w)| x.abs().powf(*w)).sum();
        if s == 0.0 {
            return 0.0;
        }
        let theta: Vec<f64> = c.iter().zip(&self.omega).map(|(x, w)| x * s.powf(-1.0 / w)).collect();
        let phi = theta[1].atan2(theta[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let n = self.values.len();
        let pos = phi / (2.0 * std::f64::consts::PI) * n as f64;
        let i0 = pos.floor() as i64;
        let f = pos - i0 as f64;
        // periodic cubic Lagrange on nodes i0-1 .. i0+2
        let at = |k: i64| self.values[k.rem_euclid(n as i64) as usize];
        let (p0, p1, p2, p3) = (at(i0 - 1), at(i0), at(i0 + 1), at(i0 + 2));
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        s * (w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3)
    }
}

/// Point `r * dir` with `sum |r dir_k|^{omega_k} = 1`.
fn radial_to_unit(omega: &[f64], dir: &[f64]) -> Vec<f64> {
    let n = |r: f64| dir.iter().zip(omega).map(|(x, w)| (r * x).abs().powf(*w)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0);
    while n(hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if n(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    dir.iter().map(|x| r * x).collect()
}

/// Max relative error of `R#(t^{I-E} x) = t R#(x)` over random `(t, x)`; `e` is the spatial exponent.
pub fn lf_scaling_check(t: &LFTransform, e: &DilationExponent, trials: usize, seed: u64) -> Result<f64> {
    check_dim(t.dim(), e.dim())?;
    let ie = e.complement()?;
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let s = 10f64.powf(r.gen_range(-1.5..1.5));
        let x: Vec<f64> = (0..t.dim()).map(|_| r.gen_range(-3.0..3.0)).collect();
        let lhs = t.eval(&ie.dilate(s, &x)?)?;
        let rhs = s * t.eval(&x)?;
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

/// Outcome of the sampled perspective subadditivity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    pub holds: bool,
    pub worst_excess: f64,
    pub trials: usize,
}

/// Samples `R#(t^{-E}(x-y)) <= R#((t-s)^{-E}(x-z)) + R#(s^{-E}(z-y))`.
pub fn lf_subadditivity_check(t: &LFTransform, e: &DilationExponent, trials: usize, seed: u64) -> Result<SubadditivityReport> {
    check_dim(t.dim(), e.dim())?;
    let d = t.dim();
    let mut r = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let tt = 10f64.powf(r.gen_range(-1.0..1.0));
        let s = tt * r.gen_range(0.01..0.99);
        let mut pt = || -> Vec<f64> { (0..d).map(|_| r.gen_range(-3.0..3.0)).collect() };
        let (x, y, z) = (pt(), pt(), pt());
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p - q).collect() };
        let lhs = t.eval(&e.dilate(1.0 / tt, &diff(&x, &y))?)?;
        let rhs = t.eval(&e.dilate(1.0 / (tt - s), &diff(&x, &z))?)? + t.eval(&e.dilate(1.0 / s, &diff(&z, &y))?)?;
        let excess = (lhs - rhs) / rhs.abs().max(1.0);
        worst = worst.max(excess);
    }
    Ok(SubadditivityReport { holds: worst <= 1e-9, worst_excess: worst, trials })
}

/// `max |x| / R#(x)` over spheres of the given radii.
pub fn lf_superlinearity_check(t: &LFTransform, radii: &[f64]) -> Result<Vec<f64>> {
    let d = t.dim();
    let dirs = sphere_directions(d, 64, 17);
    radii
        .iter()
        .map(|&rad| {
            let mut best: f64 = 0.0;
            for dir in &dirs {
                let x: Vec<f64> = dir.iter().map(|v| v * rad).collect();
                best = best.max(rad / t.eval(&x)?);
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubscaleFit {
    pub a: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Fitted constant at the base sampling density.
    pub m: f64,
    /// Fitted constant at twice the density.
    pub m_refined: f64,
}

/// Fit `M` in `|x|_v^alpha <= M t^sigma (R#(t^{-E} x))^theta` for `0 < t <= t_max`.
pub fn lf_subscale_fit(t: &LFTransform, alpha: &[f64], e: &DilationExponent, t_max: f64) -> Result<SubscaleFit> {
    let m = t.source().weight();
    let a = consistency(alpha, m.as_slice())
        .ok_or_else(|| Error::invalid(format!("alpha {alpha:?} is not consistent with m {:?}", m.as_slice())))?;
    let gamma = 1.0 / (2 * m.max() - 1) as f64;
    let (sigma, theta) = (gamma / a, 1.0 / a);
    let norm = HomogeneousNorm::new(e.basis().clone(), alpha.to_vec())?;
    let fit = |density: usize| -> Result<f64> {
        let d = t.dim();
        let dirs = sphere_directions(d, 8 * density, 23);
        let mut best: f64 = 0.0;
        for it in 0..density {
            let tt = t_max * 10f64.powf(-4.0 * it as f64 / (density - 1) as f64);
            for ir in 0..density {
                let rad = 10f64.powf(-3.0 + 6.0 * ir as f64 / (density - 1) as f64);
                for dir in &dirs {
                    let x: Vec<f64> = e.from_coords(dir).iter().map(|v| v * rad).collect();
                    let q = t.eval(&e.dilate(1.0 / tt, &x)?)?;
                    let bound = tt.powf(sigma) * q.powf(theta);
                    if bound > 0.0 {
                        best = best.max(norm.eval(&x) / bound);
                    }
                }
            }
        }
        Ok(best)
    };
    Ok(SubscaleFit { a, sigma, theta, m: fit(12)?, m_refined: fit(24)? })
}
