//! The parametrix construction `Z = G_p + W` and its certificates.

use super::family::Family;
use super::kernel::{apply, apply_at, iterate_k, Layout, LeftKernel, SpaceTimeKernel, Tag};
use super::operator::{uniform_ellipticity_constant, Coefficient, Ellipticity, VarCoeffOperator};
use crate::error::{check_dim, Error, Result};
use crate::heatkernel::{fit_envelope, ray_radius_for_level, BoxSpec, EstimateFit};
use crate::legendre::LFTransform;
use crate::symbol::{anisotropic_sphere, MultiIndex, WeightedSymbol};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// `-ln` of the relative level at which the self-similar grids are truncated.
const DECAY_LEVEL: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeviConfig {
    pub t_max: f64,
    /// Number of graded time rows `J`.
    pub time_nodes: usize,
    /// Spacing of the self-similar offset grid.
    pub w_step: f64,
    /// Half widths of the offset grid; derived from the operator when `None`.
    pub w_half: Option<Vec<f64>>,
    /// Gauss-Legendre points per half of each time integral.
    pub gauss: usize,
    pub n_max: usize,
    /// Series stops once `sup |K_n| <= tail_tol sup |K_1|` (weighted sup norms).
    pub tail_tol: f64,
    /// Node spacing of tabulated frozen families.
    pub z_step: f64,
}

impl Default for LeviConfig {
    fn default() -> Self {
        Self { t_max: 1.0, time_nodes: 16, w_step: 0.5, w_half: None, gauss: 12, n_max: 40, tail_tol: 1e-8, z_step: 0.25 }
    }
}

impl LeviConfig {
    /// One refinement: twice the time rows, half the offset spacing, 1.5x Gauss points.
    pub fn refined(&self) -> Self {
        Self {
            time_nodes: 2 * self.time_nodes,
            w_step: 0.5 * self.w_step,
            gauss: self.gauss * 3 / 2,
            ..self.clone()
        }
    }
}

/// Operator data and frozen profiles for one parametrix construction.
pub struct Levi {
    op: VarCoeffOperator,
    cfg: LeviConfig,
    family: Family,
    principal: Vec<(usize, Coefficient)>,
    lower: Vec<(usize, Coefficient, f64)>,
    mu: f64,
    rho: f64,
    e: Vec<f64>,
    layout: Arc<Layout>,
    reference: WeightedSymbol,
    ellipticity: Ellipticity,
    spread: f64,
}

fn sample_box(bx: &BoxSpec, per_axis: usize) -> Vec<Vec<f64>> {
    let d = bx.dim();
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut f| {
            let mut p = vec![0.0; d];
            for k in (0..d).rev() {
                let i = f % per_axis;
                f /= per_axis;
                p[k] = bx.min[k] + (bx.max[k] - bx.min[k]) * i as f64 / (per_axis - 1) as f64;
            }
            p
        })
        .collect()
}

fn column_box(columns: &[Vec<f64>], margin: &[f64]) -> Result<BoxSpec> {
    let d = margin.len();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for c in columns {
        check_dim(d, c.len())?;
        for k in 0..d {
            min[k] = min[k].min(c[k] - margin[k]);
            max[k] = max[k].max(c[k] + margin[k]);
        }
    }
    BoxSpec::new(min, max)
}

impl Levi {
    pub fn new(op: VarCoeffOperator, columns: Vec<Vec<f64>>, cfg: LeviConfig) -> Result<Self> {
        let d = op.dim();
        if columns.is_empty() {
            return Err(Error::invalid("need at least one source point y"));
        }
        if cfg.gauss < 2 || cfg.n_max < 1 || !(cfg.tail_tol > 0.0) || !(cfg.z_step > 0.0) {
            return Err(Error::invalid("invalid Levi configuration"));
        }
        let e = op.weight().exponents();
        let reference = op.reference_symbol()?;
        let per_axis = match d {
            1 => 401,
            2 => 41,
            _ => 9,
        };
        let sphere = anisotropic_sphere(op.weight(), 64 * d, 19);
        let principal_at = |y: &[f64], xi: &[f64]| -> Complex64 {
            op.principal_coeffs().map(|(b, c)| c.eval(y) * b.monomial(xi)).sum()
        };
        // sample the coefficients where the construction will freeze them
        let mut margin: Vec<f64> = e.iter().map(|ek| 4.0 * cfg.t_max.powf(*ek) + 1.0).collect();
        let mut w_half = cfg.w_half.clone().unwrap_or_default();
        let mut ellipticity = Ellipticity { delta: 0.0, positive: false };
        let mut spread: f64 = 0.0;
        for _ in 0..2 {
            let ys = sample_box(&column_box(&columns, &margin)?, per_axis);
            ellipticity = uniform_ellipticity_constant(&op, &ys, 64 * d)?;
            if !ellipticity.positive {
                return Err(Error::NotPositiveDefinite { min_re: ellipticity.delta });
            }
            spread = 0.0;
            for y in &ys {
                for xi in &sphere {
                    spread = spread.max(principal_at(y, xi).norm() / reference.evaluate_coords(xi).re);
                }
            }
            if cfg.w_half.is_none() {
                let lf = LFTransform::new(&reference)?;
                w_half = (0..d)
                    .map(|k| Ok(spread * ray_radius_for_level(&lf, 1.0, k, DECAY_LEVEL / spread)?))
                    .collect::<Result<_>>()?;
            }
            margin = (0..d).map(|k| 2.0 * w_half[k] * cfg.t_max.powf(e[k]) + 1.0).collect();
        }
        check_dim(d, w_half.len())?;
        let mut betas = vec![MultiIndex::zero(d)];
        let mut index_of = |b: &MultiIndex| -> usize {
            match betas.iter().position(|x| x == b) {
                Some(i) => i,
                None => {
                    betas.push(b.clone());
                    betas.len() - 1
                }
            }
        };
        let principal: Vec<(usize, Coefficient)> =
            op.principal_coeffs().map(|(b, c)| (index_of(b), c.clone())).collect();
        let lower: Vec<(usize, Coefficient, f64)> =
            op.lower_coeffs().map(|(b, c)| (index_of(b), c.clone(), op.half_degree(b))).collect();
        let table_half: Vec<f64> = (0..d).map(|k| 2f64.powf(e[k]) * 2.0 * w_half[k] + 1.0).collect();
        let family = Family::build(&op, &betas, &table_half, &column_box(&columns, &margin)?, cfg.z_step)?;
        let rho = op.rho();
        let layout = Arc::new(Layout::new(cfg.t_max, rho, cfg.time_nodes, &w_half, cfg.w_step, e.clone(), columns)?);
        Ok(Self { mu: op.mu(), rho, e, op, cfg, family, principal, lower, layout, reference, ellipticity, spread })
    }

    pub fn operator(&self) -> &VarCoeffOperator {
        &self.op
    }

    pub fn config(&self) -> &LeviConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn reference(&self) -> &WeightedSymbol {
        &self.reference
    }

    pub fn ellipticity(&self) -> Ellipticity {
        self.ellipticity
    }

    /// `sup |P_p(y, xi)| / R(xi)` over the sampled region.
    pub fn spread(&self) -> f64 {
        self.spread
    }

    #[inline]
    fn scaled_offset(&self, tau: f64, x: &[f64], z: &[f64], w: &mut [f64]) {
        for k in 0..self.e.len() {
            w[k] = (x[k] - z[k]) * tau.powf(-self.e[k]);
        }
    }

    /// `K(tau, x, z) = F^{-1}[(P_p(z, .) - P(x, .)) exp(-tau P_p(z, .))](x - z)`.
    pub fn k(&self, tau: f64, x: &[f64], z: &[f64]) -> Complex64 {
        let d = self.e.len();
        let mut w = [0.0f64; 8];
        self.scaled_offset(tau, x, z, &mut w[..d]);
        let top = tau.powf(-self.mu - 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        if let Some(coef) = self.family.scalar_coefficient() {
            let cz = coef.eval(z).re;
            let cx = coef.eval(x).re;
            if cz != cx {
                acc += self.family.scalar_gamma(self.principal[0].0, cz, w[0]) * ((cz - cx) * top);
            }
            for (b, c, deg) in &self.lower {
                let a = c.eval(x);
                if a != Complex64::new(0.0, 0.0) {
                    acc -= a * tau.powf(-self.mu - deg) * self.family.scalar_gamma(*b, cz, w[0]);
                }
            }
            return acc;
        }
        for (b, c) in &self.principal {
            if c.as_constant().is_some() {
                continue;
            }
            let diff = c.eval(z) - c.eval(x);
            if diff != Complex64::new(0.0, 0.0) {
                acc += diff * top * self.family.gamma(*b, &w[..d], z);
            }
        }
        for (b, c, deg) in &self.lower {
            let a = c.eval(x);
            if a != Complex64::new(0.0, 0.0) {
                acc -= a * tau.powf(-self.mu - deg) * self.family.gamma(*b, &w[..d], z);
            }
        }
        acc
    }

    /// `G_p(tau, x - z; z)`.
    pub fn gp(&self, tau: f64, x: &[f64], z: &[f64]) -> Complex64 {
        let d = self.e.len();
        let mut w = [0.0f64; 8];
        self.scaled_offset(tau, x, z, &mut w[..d]);
        let g = match self.family.scalar_coefficient() {
            Some(coef) => self.family.scalar_gamma(0, coef.eval(z).re, w[0]),
            None => self.family.gamma(0, &w[..d], z),
        };
        g * tau.powf(-self.mu)
    }

    /// `K` as the left factor of `L`.
    pub fn kernel_k(&self) -> KernelK<'_> {
        KernelK(self)
    }

    /// `G_p` as the left factor of `L`.
    pub fn kernel_gp(&self) -> KernelGp<'_> {
        KernelGp(self)
    }

    /// Storage exponent of `K`, `K_n` and `phi`: `mu + 1 - rho`.
    pub fn q_k(&self) -> f64 {
        self.mu + 1.0 - self.rho
    }

    /// Storage exponent of `W`: `mu - rho`.
    pub fn q_w(&self) -> f64 {
        self.mu - self.rho
    }

    /// `K` sampled on the layout.
    pub fn k_kernel(&self) -> SpaceTimeKernel {
        let lay = self.layout.clone();
        let cols = lay.columns().to_vec();
        SpaceTimeKernel::from_fn(Tag::K, lay, self.q_k(), |col, t, x| self.k(t, x, &cols[col]))
    }
}

pub struct KernelK<'a>(&'a Levi);

impl LeftKernel for KernelK<'_> {
    fn eval(&self, tau: f64, x: &[f64], z: &[f64]) -> Complex64 {
        self.0.k(tau, x, z)
    }

    fn singularity(&self) -> f64 {
        self.0.q_k()
    }
}

pub struct KernelGp<'a>(&'a Levi);

impl LeftKernel for KernelGp<'_> {
    fn eval(&self, tau: f64, x: &[f64], z: &[f64]) -> Complex64 {
        self.0.gp(tau, x, z)
    }

    fn singularity(&self) -> f64 {
        self.0.mu
    }
}

#[derive(Debug, Clone)]
pub struct PhiSeries {
    pub k: SpaceTimeKernel,
    pub phi: SpaceTimeKernel,
    /// `sup t^{mu+1-rho} |K_n|` for `n = 1, 2, ...`.
    pub term_norms: Vec<f64>,
    /// Last term norm relative to the first.
    pub tail: f64,
}

/// `phi = sum_n K_n`, truncated once the relative term norm drops below `tail_tol`.
pub fn phi_sum(levi: &Levi, n_max: usize, tail_tol: f64) -> Result<PhiSeries> {
    let k = levi.k_kernel();
    if !k.is_finite() {
        return Err(Error::Degenerate("K has non-finite samples".into()));
    }
    let n1 = k.weighted_sup();
    let mut norms = vec![n1];
    let mut phi = k.clone().retag(Tag::Phi);
    if n1 == 0.0 {
        return Ok(PhiSeries { k, phi, term_norms: norms, tail: 0.0 });
    }
    let left = levi.kernel_k();
    let mut prev = k.clone();
    for _ in 1..n_max {
        let next = iterate_k(&left, &prev, levi.cfg.gauss)?;
        let nn = next.weighted_sup();
        norms.push(nn);
        phi.add_assign(&next.clone().retag(Tag::Phi))?;
        if nn <= tail_tol * n1 {
            return Ok(PhiSeries { k, phi, term_norms: norms, tail: nn / n1 });
        }
        prev = next;
    }
    Err(Error::SeriesNotConverged { terms: n_max, last: norms.last().copied().unwrap_or(0.0) / n1 })
}

/// `W = int_0^t int G_p(t - s, x - z; z) phi(s, z, y) dz ds`.
pub fn correction_w(levi: &Levi, phi: &SpaceTimeKernel) -> Result<SpaceTimeKernel> {
    apply(&levi.kernel_gp(), phi, Tag::W, levi.q_w(), levi.cfg.gauss)
}

pub struct FundamentalSolution {
    pub levi: Levi,
    pub series: PhiSeries,
    pub w: SpaceTimeKernel,
}

/// Builds `Z = G_p + W` for source points `columns`.
pub fn fundamental_solution(h: &VarCoeffOperator, columns: Vec<Vec<f64>>, cfg: &LeviConfig) -> Result<FundamentalSolution> {
    let levi = Levi::new(h.clone(), columns, cfg.clone())?;
    let series = phi_sum(&levi, cfg.n_max, cfg.tail_tol)?;
    let w = correction_w(&levi, &series.phi)?;
    Ok(FundamentalSolution { levi, series, w })
}

impl FundamentalSolution {
    pub fn layout(&self) -> &Arc<Layout> {
        self.levi.layout()
    }

    fn y(&self, col: usize) -> &[f64] {
        &self.layout().columns()[col]
    }

    /// `Z(t, x, y_col)` with `W` interpolated from the grid.
    pub fn z(&self, col: usize, t: f64, x: &[f64]) -> Result<Complex64> {
        Ok(self.levi.gp(t, x, self.y(col)) + self.w.eval(col, t, x)?)
    }

    /// `Z(t, x, y_col)` for several `x`, with `W` evaluated by direct quadrature;
    /// `with_w = false` returns `G_p` alone.
    pub fn z_direct(&self, col: usize, t: f64, xs: &[Vec<f64>], with_w: bool) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = xs.iter().map(|x| self.levi.gp(t, x, self.y(col))).collect();
        if with_w {
            let w = apply_at(&self.levi.kernel_gp(), &self.series.phi, col, t, xs, self.levi.cfg.gauss)?;
            for (o, v) in out.iter_mut().zip(w) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// `Z` on `(t_j, x_i, y_col)` for the graded times `j >= 1`, flattened in that order.
    pub fn z_tensor(&self, xs: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        let lay = self.layout();
        let mut out = Vec::with_capacity(lay.time_nodes() * xs.len() * lay.columns().len());
        for t in lay.times() {
            for x in xs {
                for col in 0..lay.columns().len() {
                    out.push(self.z(col, t, x)?);
                }
            }
        }
        Ok(out)
    }

    /// `sup |phi - K - L(phi)| / sup |K|` in the weighted norm, with `L` evaluated
    /// on a Gauss rule twice as fine as the one that built `phi`.
    pub fn integral_equation_residual(&self) -> Result<f64> {
        let nk = self.series.k.weighted_sup();
        if nk == 0.0 {
            return Ok(self.series.phi.weighted_sup());
        }
        let lphi = apply(&self.levi.kernel_k(), &self.series.phi, Tag::Custom, self.levi.q_k(), 2 * self.levi.cfg.gauss)?;
        let r = self.series.phi.combine(1.0, &self.series.k, -1.0)?.combine(1.0, &lphi, -1.0)?;
        Ok(r.weighted_sup() / nk)
    }

    /// Envelope fits `|F| <= C t^{-q} exp(-M R#(t^{-E}(x - y)))` for `K`, `W` and `Z`.
    pub fn bound_fits(&self) -> Result<BoundFits> {
        let lf = LFTransform::new(self.levi.reference())?;
        let lay = self.layout();
        let nw = lay.grid().len();
        let mut qs = Vec::with_capacity(nw);
        for wi in 0..nw {
            qs.push(lf.eval_fast(&lay.grid().point(wi))?);
        }
        let samples = |f: &dyn Fn(usize, usize, usize) -> f64| -> Vec<(f64, f64)> {
            let mut out = Vec::new();
            let mut peak: f64 = 0.0;
            let mut raw = Vec::new();
            for col in 0..lay.columns().len() {
                for j in 1..=lay.time_nodes() {
                    for wi in 0..nw {
                        let a = f(col, j, wi);
                        peak = peak.max(a);
                        raw.push((qs[wi], a));
                    }
                }
            }
            for (q, a) in raw {
                if a >= 1e-10 * peak && a > 0.0 {
                    out.push((q, a.ln()));
                }
            }
            out
        };
        let fit = |s: Vec<(f64, f64)>| -> Result<Option<EstimateFit>> {
            if s.is_empty() {
                Ok(None)
            } else {
                fit_envelope(&s).map(Some)
            }
        };
        let mu = self.levi.mu();
        let k = fit(samples(&|c, j, wi| self.series.k.stored_row(c, j)[wi].norm()))?;
        let w = fit(samples(&|c, j, wi| self.w.stored_row(c, j)[wi].norm()))?;
        let z = fit(samples(&|c, j, wi| {
            let t = lay.time(j);
            let (_, x, wv) = self.w.node(c, j, wi);
            ((self.levi.gp(t, &x, self.y(c)) + wv) * t.powf(mu)).norm()
        }))?;
        Ok(BoundFits { k, w, z: z.ok_or_else(|| Error::Degenerate("Z vanishes on the grid".into()))? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundFits {
    /// `None` when the kernel vanishes identically.
    pub k: Option<EstimateFit>,
    pub w: Option<EstimateFit>,
    pub z: EstimateFit,
}

/// Central finite-difference weights for the `k`-th derivative on the
/// points `-r..=r` at unit spacing (Fornberg's recursion).
pub fn fd_weights(k: usize, r: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..=2 * r).map(|i| i as f64 - r as f64).collect();
    let n = xs.len();
    let mut c = vec![vec![0.0; k + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=k.min(i)).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=k.min(i)).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[k]).collect()
}

/// Half width of the fourth-order central stencil for a `k`-th derivative.
fn fd_radius(k: usize) -> usize {
    (k + 1) / 2 + 1
}

/// Relative finite-difference steps: `dt = c_t t`, `dx_k = c_x t^{e_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdSteps {
    pub c_t: f64,
    pub c_x: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self { c_t: 0.05, c_x: 0.2 }
    }
}

impl FdSteps {
    pub fn refined(&self) -> Self {
        Self { c_t: 0.5 * self.c_t, c_x: 0.5 * self.c_x }
    }
}

/// `((d_t + H_x) Z)(t, x0)` by fourth-order central differences, and `Z(t, x0)`.
///
/// `z(t, xs)` returns `Z(t, x)` for each `x`.
pub fn heat_residual(
    h: &VarCoeffOperator,
    z: &dyn Fn(f64, &[Vec<f64>]) -> Result<Vec<Complex64>>,
    t: f64,
    x0: &[f64],
    steps: FdSteps,
) -> Result<(Complex64, Complex64)> {
    let d = h.dim();
    check_dim(d, x0.len())?;
    let e = h.weight().exponents();
    let dt = steps.c_t * t;
    if !(t - 2.0 * dt > 0.0) {
        return Err(Error::invalid("time stencil reaches t <= 0"));
    }
    let tw = fd_weights(1, 2);
    let mut dz_dt = Complex64::new(0.0, 0.0);
    for (i, wgt) in tw.iter().enumerate() {
        if *wgt == 0.0 {
            continue;
        }
        let ti = t + (i as f64 - 2.0) * dt;
        dz_dt += z(ti, &[x0.to_vec()])?[0] * *wgt;
    }
    dz_dt /= dt;
    let dx: Vec<f64> = e.iter().map(|ek| steps.c_x * t.powf(*ek)).collect();
    let radius: Vec<usize> = (0..d)
        .map(|k| h.coeffs().iter().map(|(b, _)| fd_radius(b.0[k] as usize)).max().unwrap_or(0))
        .collect();
    let shape: Vec<usize> = radius.iter().map(|r| 2 * r + 1).collect();
    let total: usize = shape.iter().product();
    let mut pts = Vec::with_capacity(total);
    for mut f in 0..total {
        let mut p = x0.to_vec();
        for k in (0..d).rev() {
            let i = f % shape[k];
            f /= shape[k];
            p[k] += (i as f64 - radius[k] as f64) * dx[k];
        }
        pts.push(p);
    }
    let vals = z(t, &pts)?;
    let centre: usize = {
        let mut c = 0;
        for k in 0..d {
            c = c * shape[k] + radius[k];
        }
        c
    };
    let mut hz = Complex64::new(0.0, 0.0);
    for (beta, coef) in h.coeffs() {
        let ws: Vec<Vec<f64>> = (0..d).map(|k| fd_weights(beta.0[k] as usize, radius[k])).collect();
        let mut deriv = Complex64::new(0.0, 0.0);
        for (f, v) in vals.iter().enumerate() {
            let mut rem = f;
            let mut wgt = 1.0;
            for k in (0..d).rev() {
                let i = rem % shape[k];
                rem /= shape[k];
                wgt *= ws[k][i] / dx[k].powi(beta.0[k] as i32);
            }
            if wgt != 0.0 {
                deriv += v * wgt;
            }
        }
        // D^beta = i^{|beta|} d^beta
        hz += coef.eval(x0) * Complex64::new(0.0, 1.0).powu(beta.order()) * deriv;
    }
    Ok((dz_dt + hz, vals[centre]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `sup t^{mu+1} |(d_t + H) Z| / sup t^mu |Z|` over the interior points.
    pub normalized: f64,
    pub points: usize,
}

/// Heat-equation residual of `Z` at `t in t_list`, `x = y + t^E w` for `w in w_list`,
/// for the listed columns; `with_w = false` drops the correction `W`.
pub fn residual_check(
    fs: &FundamentalSolution,
    columns: &[usize],
    t_list: &[f64],
    w_list: &[Vec<f64>],
    steps: FdSteps,
    with_w: bool,
) -> Result<ResidualReport> {
    let lay = fs.layout();
    let mu = fs.levi.mu();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    let mut points = 0;
    for &col in columns {
        let zf = |t: f64, xs: &[Vec<f64>]| fs.z_direct(col, t, xs, with_w);
        for &t in t_list {
            if t + 2.0 * steps.c_t * t > lay.t_max() * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("time stencil at t = {t} leaves (0, T]")));
            }
            for w in w_list {
                check_dim(lay.dim(), w.len())?;
                let x: Vec<f64> = (0..lay.dim())
                    .map(|k| lay.columns()[col][k] + t.powf(lay.exponents()[k]) * w[k])
                    .collect();
                let (res, zv) = heat_residual(fs.levi.operator(), &zf, t, &x, steps)?;
                num = num.max(t.powf(mu + 1.0) * res.norm());
                den = den.max(t.powf(mu) * zv.norm());
                points += 1;
            }
        }
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("Z vanishes at every residual point".into()));
    }
    Ok(ResidualReport { normalized: num / den, points })
}

/// `max_x |sum_col cell Z(t, x, y_col) f(y_col) - f(x)|` for each `t`; the
/// columns act as quadrature nodes of volume `cell`.
pub fn approximate_identity_check(
    fs: &FundamentalSolution,
    f: &dyn Fn(&[f64]) -> f64,
    t_list: &[f64],
    xs: &[Vec<f64>],
    cell: f64,
    with_w: bool,
) -> Result<Vec<(f64, f64)>> {
    let lay = fs.layout();
    let fy: Vec<f64> = lay.columns().iter().map(|y| f(y)).collect();
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let mut acc = vec![Complex64::new(0.0, 0.0); xs.len()];
        for col in 0..lay.columns().len() {
            if fy[col] == 0.0 {
                continue;
            }
            let z = fs.z_direct(col, t, xs, with_w)?;
            for (a, v) in acc.iter_mut().zip(z) {
                *a += v * (cell * fy[col]);
            }
        }
        let err = xs.iter().zip(&acc).map(|(x, a)| (a - f(x)).norm()).fold(0.0, f64::max);
        out.push((t, err));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_second_derivative() {
        let w = fd_weights(2, 2);
        let exact = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(exact) {
            assert!((a - b).abs() < 1e-13);
        }
        let w1 = fd_weights(1, 2);
        let exact1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w1.iter().zip(exact1) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
