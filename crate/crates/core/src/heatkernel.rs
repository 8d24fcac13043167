//! Heat kernels `K^t = F^{-1}(exp(-t P))` of constant-coefficient symbols,
//! computed by FFT on uniform grids, plus scaling, estimate and decay checks.

use crate::anisotropy::{Dilation, DilationExponent};
use crate::error::{check_dim, Error, Result};
use crate::legendre::LFTransform;
use crate::numeric::fft::{fft_nd, signed_index};
use crate::numeric::grid::{TensorGrid, UniformAxis};
use crate::numeric::interp::interp_nd;
use crate::numeric::optimize::{golden_min, maximize, nelder_mead};
use crate::numeric::is_pow2;
use crate::numeric::sampling::sphere_directions;
use crate::symbol::{default_samples, is_positive_definite, MultiIndex, WeightedSymbol};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use std::f64::consts::PI;

pub const NORMALIZATION: &str = "F^-1 g(x) = (2 pi)^-d int exp(-i xi.x) g(xi) dxi";

/// Axis-aligned box `[min_k, max_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxSpec {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        check_dim(min.len(), max.len())?;
        if min.is_empty() || min.iter().zip(&max).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid(format!("invalid box {min:?} .. {max:?}")));
        }
        Ok(Self { min, max })
    }

    pub fn symmetric(half: &[f64]) -> Result<Self> {
        Self::new(half.iter().map(|h| -h).collect(), half.to_vec())
    }

    pub fn cube(d: usize, half: f64) -> Result<Self> {
        Self::symmetric(&vec![half; d])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Bounding box of the image of this box under `t^E`.
    pub fn dilated(&self, e: &DilationExponent, t: f64) -> Result<Self> {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for corner in 0..(1usize << d) {
            let x: Vec<f64> = (0..d)
                .map(|k| if corner >> k & 1 == 1 { self.max[k] } else { self.min[k] })
                .collect();
            let y = e.dilate(t, &x)?;
            for k in 0..d {
                lo[k] = lo[k].min(y[k]);
                hi[k] = hi[k].max(y[k]);
            }
        }
        Self::new(lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOptions {
    /// Maximal number of internal grid points (all axes together).
    pub budget: usize,
    /// Largest admissible `|K|` on the outer shell of the padded grid, relative to the peak.
    pub shell_tol: f64,
    /// Largest admissible `|integrand|` on the dual boundary, relative to its maximum.
    pub dual_tol: f64,
    /// Lagrange order for off-grid evaluation.
    pub interp_order: usize,
    /// Skip the sampled positivity certificate (the caller has already checked it).
    pub assume_positive: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { budget: 1 << 24, shell_tol: 1e-12, dual_tol: 1e-16, interp_order: 8, assume_positive: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMeta {
    pub symbol: String,
    pub mu: f64,
    pub normalization: &'static str,
    pub time_order: u32,
    pub beta: Vec<u32>,
    /// Internal padding factor per axis used to suppress periodic images.
    pub padding: usize,
}

/// Complex kernel samples on `x_j = min + j (max - min) / n`.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub grid: TensorGrid,
    pub t: f64,
    pub values: Vec<Complex64>,
    pub meta: KernelMeta,
    interp_order: usize,
}

impl KernelGrid {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cell-volume weighted sum of the samples.
    pub fn mass(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.grid.point(flat)
    }

    /// Off-grid value by separable Lagrange interpolation.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        check_dim(self.dim(), x.len())?;
        match interp_nd(&self.grid, &self.values, x, self.interp_order) {
            Some(v) => Ok(v),
            None => {
                if self.outer_shell_ratio() < 1e-13 {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    Err(Error::OutOfRange { point: x.to_vec() })
                }
            }
        }
    }

    /// `max |K|` outside the concentric half-size box, relative to the peak.
    pub fn outer_shell_ratio(&self) -> f64 {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut worst: f64 = 0.0;
        for (f, v) in self.values.iter().enumerate() {
            self.grid.unravel(f, &mut idx);
            let outer = idx.iter().zip(&self.grid.axes).any(|(&i, a)| {
                let q = i as f64 / (a.len - 1) as f64;
                !(0.25..=0.75).contains(&q)
            });
            if outer {
                worst = worst.max(v.norm());
            }
        }
        worst / self.peak()
    }

    /// Largest `|Im K|` relative to the peak.
    pub fn imaginary_residue(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / self.peak()
    }
}

/// Axis for the requested box: `n` points, spacing `(max - min) / n`.
pub fn box_axes(bx: &BoxSpec, n: usize) -> Vec<UniformAxis> {
    (0..bx.dim())
        .map(|k| UniformAxis::new(bx.min[k], (bx.max[k] - bx.min[k]) / n as f64, n))
        .collect()
}

pub fn compute_kernel(p: &WeightedSymbol, t: f64, bx: &BoxSpec, n: usize) -> Result<KernelGrid> {
    compute_kernel_derivative(p, t, 0, &MultiIndex::zero(p.dim()), bx, n)
}

/// Inverse transform of `(-P)^k xi^beta exp(-t P)`.
pub fn compute_kernel_derivative(
    p: &WeightedSymbol,
    t: f64,
    k: u32,
    beta: &MultiIndex,
    bx: &BoxSpec,
    n: usize,
) -> Result<KernelGrid> {
    compute_kernel_with(p, t, k, beta, bx, n, &KernelOptions::default())
}

pub fn compute_kernel_with(
    p: &WeightedSymbol,
    t: f64,
    k: u32,
    beta: &MultiIndex,
    bx: &BoxSpec,
    n: usize,
    opts: &KernelOptions,
) -> Result<KernelGrid> {
    compute_kernel_axes(p, t, k, beta, bx, &vec![n; p.dim()], opts)
}

/// As `compute_kernel_with`, with its own power-of-two point count per axis.
pub fn compute_kernel_axes(
    p: &WeightedSymbol,
    t: f64,
    k: u32,
    beta: &MultiIndex,
    bx: &BoxSpec,
    ns: &[usize],
    opts: &KernelOptions,
) -> Result<KernelGrid> {
    let d = p.dim();
    check_dim(d, bx.dim())?;
    check_dim(d, beta.dim())?;
    check_dim(d, ns.len())?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t = {t} must be positive")));
    }
    if let Some(n) = ns.iter().find(|&&n| !is_pow2(n) || n < 2) {
        return Err(Error::invalid(format!("points per axis must be a power of two >= 2, got {n}")));
    }
    if !opts.assume_positive {
        let cert = is_positive_definite(p, default_samples(d))?;
        if !cert.positive {
            return Err(Error::NotPositiveDefinite { min_re: cert.min_re });
        }
    }
    let axes: Vec<UniformAxis> =
        (0..d).map(|j| UniformAxis::new(bx.min[j], (bx.max[j] - bx.min[j]) / ns[j] as f64, ns[j])).collect();
    let mut pad = 2usize;
    loop {
        let bigs: Vec<usize> = ns.iter().map(|n| pad * n).collect();
        let required = bigs.iter().product::<usize>();
        if required > opts.budget {
            return Err(Error::MemoryBudget { required, budget: opts.budget });
        }
        let (vals, shell) = transform_padded(p, t, k, beta, &axes, &bigs, opts)?;
        if shell <= opts.shell_tol || 2usize.pow(d as u32) * required > opts.budget {
            if shell > opts.shell_tol {
                return Err(Error::BoxTooSmall { ratio: shell });
            }
            let values = extract_window(&vals, &bigs, ns);
            return Ok(KernelGrid {
                grid: TensorGrid::new(axes),
                t,
                values,
                meta: KernelMeta {
                    symbol: p.label().to_string(),
                    mu: p.mu(),
                    normalization: NORMALIZATION,
                    time_order: k,
                    beta: beta.0.clone(),
                    padding: pad,
                },
                interp_order: opts.interp_order,
            });
        }
        pad *= 2;
    }
}

/// Kernel on the internal grid of `bigs[k]` points per axis centred on the
/// requested box; returns the samples and the outer-shell ratio.
fn transform_padded(
    p: &WeightedSymbol,
    t: f64,
    k: u32,
    beta: &MultiIndex,
    axes: &[UniformAxis],
    bigs: &[usize],
    opts: &KernelOptions,
) -> Result<(Vec<Complex64>, f64)> {
    let d = axes.len();
    let x0: Vec<f64> = axes.iter().zip(bigs).map(|(a, big)| a.start - ((big - a.len) / 2) as f64 * a.step).collect();
    let dxi: Vec<f64> = axes.iter().zip(bigs).map(|(a, &big)| 2.0 * PI / (big as f64 * a.step)).collect();
    let total: usize = bigs.iter().product();
    let last = bigs[d - 1];
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let has_beta = beta.order() > 0;
    data.par_chunks_mut(last).enumerate().for_each(|(row, chunk)| {
        let mut xi = [0.0f64; 8];
        let mut rem = row;
        for ax in (0..d.saturating_sub(1)).rev() {
            xi[ax] = signed_index(rem % bigs[ax], bigs[ax]) as f64 * dxi[ax];
            rem /= bigs[ax];
        }
        for (j, slot) in chunk.iter_mut().enumerate() {
            xi[d - 1] = signed_index(j, last) as f64 * dxi[d - 1];
            let xi = &xi[..d];
            let pv = p.evaluate_unchecked(xi);
            let mut g = (-t * pv).exp();
            if k > 0 {
                g *= (-pv).powu(k);
            }
            if has_beta {
                g *= beta.monomial(xi);
            }
            let phase: f64 = xi.iter().zip(&x0).map(|(a, b)| a * b).sum();
            *slot = g * Complex64::from_polar(1.0, -phase);
        }
    });
    // dual boundary: the slabs around q = big/2 on any axis
    let mut gmax: f64 = 0.0;
    let mut edge: f64 = 0.0;
    let mut idx = vec![0usize; d];
    for (f, v) in data.iter().enumerate() {
        let a = v.norm();
        gmax = gmax.max(a);
        unravel(f, bigs, &mut idx);
        if idx.iter().zip(bigs).any(|(&i, &b)| i == b / 2 || i == b / 2 + 1 || i == b / 2 - 1) {
            edge = edge.max(a);
        }
    }
    if gmax == 0.0 || !gmax.is_finite() {
        return Err(Error::Degenerate("integrand vanishes or overflows on the dual grid".into()));
    }
    if edge > opts.dual_tol * gmax {
        return Err(Error::DualTruncation { residue: edge / gmax });
    }
    fft_nd(&mut data, bigs, FftDirection::Forward);
    let scale: f64 = dxi.iter().map(|v| v / (2.0 * PI)).product();
    let mut peak: f64 = 0.0;
    for v in data.iter_mut() {
        *v *= scale;
        peak = peak.max(v.norm());
    }
    let mut shell: f64 = 0.0;
    for (f, v) in data.iter().enumerate() {
        unravel(f, bigs, &mut idx);
        if idx.iter().zip(bigs).any(|(&i, &b)| {
            let slab = (b / 16).max(1);
            i < slab || i >= b - slab
        }) {
            shell = shell.max(v.norm());
        }
    }
    Ok((data, shell / peak))
}

fn unravel(mut f: usize, shape: &[usize], idx: &mut [usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] = f % shape[k];
        f /= shape[k];
    }
}

fn extract_window(vals: &[Complex64], bigs: &[usize], ns: &[usize]) -> Vec<Complex64> {
    let d = ns.len();
    let total: usize = ns.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for f in 0..total {
        unravel(f, ns, &mut idx);
        let mut g = 0;
        for k in 0..d {
            g = g * bigs[k] + idx[k] + (bigs[k] - ns[k]) / 2;
        }
        out.push(vals[g]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// `(t, max |K^t(x) - t^{-mu} K^1(t^{-E} x)| / max |K^t|)`.
    pub per_t: Vec<(f64, f64)>,
    pub max_error: f64,
}

/// Compares `K^t(x)` with `t^{-mu} K^1(t^{-E} x)` on the grid of `K^t`, `mu = tr E`.
pub fn scaling_check(p: &WeightedSymbol, e: &DilationExponent, t_list: &[f64], bx: &BoxSpec, n: usize) -> Result<ScalingReport> {
    check_dim(p.dim(), e.dim())?;
    let mu = e.trace();
    let k1 = compute_kernel(p, 1.0, bx, n)?;
    let mut per_t = Vec::new();
    let mut buf = vec![0.0; p.dim()];
    for &t in t_list {
        let bt = bx.dilated(e, t)?;
        let kt = compute_kernel(p, t, &bt, n)?;
        let peak = kt.peak();
        let scale = t.powf(-mu);
        let mut worst: f64 = 0.0;
        for (f, v) in kt.values.iter().enumerate() {
            let x = kt.point(f);
            e.dilate_unchecked(1.0 / t, &x, &mut buf);
            let inside = (0..p.dim()).all(|k| {
                let a = &k1.grid.axes[k];
                buf[k] >= a.start && buf[k] <= a.end()
            });
            if !inside {
                continue;
            }
            let r = k1.eval(&buf)? * scale;
            worst = worst.max((v - r).norm() / peak);
        }
        per_t.push((t, worst));
    }
    let max_error = per_t.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(ScalingReport { per_t, max_error })
}

/// The logarithmic decay-constant sweep `M_j = 2^{(j - 32)/8}`, 64 values.
pub fn m_sweep() -> Vec<f64> {
    (0..64).map(|j| 2f64.powf((j as f64 - 32.0) / 8.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateFit {
    pub c: f64,
    pub m: f64,
    /// `C` restricted to each dyadic shell of `q = R#(t^{-E} x)` at the fitted `M`;
    /// entry 0 is the core `q < 1`, entry `j >= 1` covers `2^{j-1} <= q < 2^j`.
    pub residual_by_shell: Vec<f64>,
    pub shell_stable: bool,
}

/// Fits `|K^t(x)| <= C t^{-mu} exp(-M R#(t^{-E} x))` over a sequence of kernels.
pub fn estimate_fit(kernels: &[KernelGrid], lf: &LFTransform, mu: f64) -> Result<EstimateFit> {
    if kernels.is_empty() {
        return Err(Error::invalid("estimate fit needs at least one kernel"));
    }
    let p = lf.source();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for kg in kernels {
        check_dim(p.dim(), kg.dim())?;
        let peak = kg.peak();
        let floor = 1e-10 * peak;
        let tmu = kg.t.powf(mu);
        for (f, v) in kg.values.iter().enumerate() {
            let a = v.norm();
            if a < floor {
                continue;
            }
            let x = kg.point(f);
            let c: Vec<f64> = p.spatial_coords(&x).iter().map(|v| v / kg.t).collect();
            let q = kg.t * lf.eval_fast(&c)?;
            samples.push((q, (a * tmu).ln()));
        }
    }
    fit_envelope(&samples)
}

/// Sweeps `M` for samples `(q, ln a)` and returns the largest `M` for which
/// `sup a exp(M q)` is finite and flat over the two outermost dyadic shells of `q`.
pub fn fit_envelope(samples: &[(f64, f64)]) -> Result<EstimateFit> {
    let shells_for = |m: f64| -> Vec<f64> {
        let mut shells: Vec<f64> = Vec::new();
        for &(q, la) in samples {
            let j = if q < 1.0 { 0 } else { q.log2().floor() as usize + 1 };
            if shells.len() <= j {
                shells.resize(j + 1, f64::NAN);
            }
            let v = (la + m * q).exp();
            if shells[j].is_nan() || v > shells[j] {
                shells[j] = v;
            }
        }
        shells
    };
    let admissible = |shells: &[f64]| -> bool {
        let filled: Vec<f64> = shells.iter().cloned().filter(|v| !v.is_nan()).collect();
        if filled.len() < 3 {
            return false;
        }
        let (a, b) = (filled[filled.len() - 2], filled[filled.len() - 1]);
        filled.iter().all(|v| v.is_finite()) && b <= a * (1.0 + 1e-3)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for m in m_sweep() {
        let shells = shells_for(m);
        if admissible(&shells) {
            best = Some((m, shells));
        }
    }
    let (m, shells) = best.ok_or(Error::NoAdmissibleM)?;
    let c = shells.iter().cloned().filter(|v| !v.is_nan()).fold(0.0, f64::max);
    Ok(EstimateFit { c, m, residual_by_shell: shells.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect(), shell_stable: true })
}

/// Integration surface for the ray integral: `xi_k = u_k - i eta_k` and, for
/// `j != k`, `xi_j = exp(i alpha_j(u_k)) u_j - i eta_j` with
/// `alpha_j(u_k) = b_j + a_j tanh(u_k / ell)`. The pulled-back volume form is
/// `prod_j exp(i alpha_j(u_k)) du`.
#[derive(Debug, Clone)]
struct RayContour {
    k: usize,
    ell: f64,
    /// `[eta_k, then (eta_j, a_j, b_j) for each j != k]`
    theta: Vec<f64>,
}

impl RayContour {
    fn point(&self, u: &[f64], z: &mut [Complex64]) -> Complex64 {
        let tk = (u[self.k] / self.ell).tanh();
        let mut phase = 0.0;
        let mut i = 1;
        for j in 0..u.len() {
            if j == self.k {
                z[j] = Complex64::new(u[j], -self.theta[0]);
            } else {
                let (eta, a, b) = (self.theta[i], self.theta[i + 1], self.theta[i + 2]);
                i += 3;
                let alpha = b + a * tk;
                phase += alpha;
                z[j] = Complex64::from_polar(u[j], alpha) - Complex64::new(0.0, eta);
            }
        }
        Complex64::from_polar(1.0, phase)
    }
}

/// `ln |K^t(r v_k)|` along the `k`-th eigen-direction `v_k`, accurate far into the tail.
///
/// The integration surface is deformed off the real space (see `RayContour`) so
/// that the integrand no longer oscillates across the dominant saddle points;
/// the deformation parameters minimise the pointwise bound `max Re(exponent)`.
pub fn ray_log_kernel(p: &WeightedSymbol, t: f64, k: usize, r: f64) -> Result<f64> {
    let d = p.dim();
    if k >= d {
        return Err(Error::invalid(format!("ray index {k} out of range for d = {d}")));
    }
    if !(t > 0.0 && r >= 0.0) {
        return Err(Error::invalid("ray evaluation needs t > 0 and r >= 0"));
    }
    let mk = p.weight().as_slice()[k];
    let ck = p
        .terms()
        .iter()
        .find(|(b, _)| b.0[k] == 2 * mk && b.order() == 2 * mk)
        .map(|(_, a)| a.re)
        .unwrap_or(1.0)
        .max(1e-12);
    // saddle scale of the one-dimensional problem along the ray
    let rho = (r / (2.0 * mk as f64 * t * ck)).powf(1.0 / (2 * mk - 1) as f64).max(1e-3);
    let mut contour = RayContour { k, ell: 0.5 * rho, theta: vec![0.0; 1 + 3 * (d - 1)] };
    let exponent = |c: &RayContour, u: &[f64]| -> (Complex64, Complex64) {
        let mut z = [Complex64::new(0.0, 0.0); 8];
        let jac = c.point(u, &mut z[..d]);
        (-p.evaluate_coords_complex(&z[..d]) * t - Complex64::new(0.0, r) * z[k], jac)
    };
    let principal = p.principal_part();
    // decay at infinity: Re P_p > 0 on the rotated real space, along the whole homotopy
    let valid = |c: &RayContour| -> bool {
        let dirs = sphere_directions(d, 96, 7);
        (1..=4).all(|lam| {
            let mut scaled = c.clone();
            scaled.theta.iter_mut().enumerate().for_each(|(i, v)| *v *= if i % 3 == 0 { 0.0 } else { lam as f64 / 4.0 });
            [-1e3, -1.0, 0.0, 1.0, 1e3].iter().all(|&tk| {
                dirs.iter().all(|v| {
                    let mut u = v.clone();
                    let mut z = [Complex64::new(0.0, 0.0); 8];
                    // place the outer coordinate so that tanh(u_k / ell) sweeps its range
                    u[k] = if tk == 0.0 { v[k] } else { tk * scaled.ell + v[k] };
                    scaled.point(&u, &mut z[..d]);
                    let w: Vec<Complex64> = z[..d].iter().zip(&u).enumerate().map(|(j, (zj, uj))| if j == k { Complex64::new(*uj, 0.0) } else { *zj }).collect();
                    let val = principal.evaluate_coords_complex(&w);
                    val.re > 1e-3 * val.norm()
                })
            })
        })
    };
    let bound = |c: &RayContour| -> Option<(Vec<f64>, f64)> {
        if d > 1 && !valid(c) {
            return None;
        }
        let m = maximize(|u| exponent(c, u).0.re, &vec![0.0; d], 2.0 * rho.max(1.0), if d == 1 { 65 } else { 33 }, 30).ok()?;
        m.value.is_finite().then_some((m.point, m.value))
    };
    let eta_hi = 2.0 * rho + 1e-9;
    let (eta, _) = golden_min(
        |e| {
            let mut c = contour.clone();
            c.theta[0] = e;
            bound(&c).map_or(f64::INFINITY, |v| v.1)
        },
        0.0,
        eta_hi,
        60,
    );
    contour.theta[0] = eta;
    if d > 1 && p.terms().values().any(|a| a.im != 0.0) {
        let mut step = vec![0.1 * rho; contour.theta.len()];
        for j in 0..d - 1 {
            step[2 + 3 * j] = 0.1;
            step[3 + 3 * j] = 0.1;
        }
        let (theta, _) = nelder_mead(
            |th| {
                let c = RayContour { theta: th.to_vec(), ..contour.clone() };
                bound(&c).map_or(f64::INFINITY, |v| v.1)
            },
            &contour.theta,
            &step,
            400,
        );
        contour.theta = theta;
    }
    let (center, f0) = bound(&contour).ok_or_else(|| Error::Degenerate("no admissible ray contour".into()))?;
    // extent along each axis where the integrand drops by e^{-50}
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for j in 0..d {
        for (sign, out) in [(-1.0, &mut lo[j]), (1.0, &mut hi[j])] {
            let mut l = 0.05;
            loop {
                let mut u = center.clone();
                u[j] += sign * l;
                if exponent(&contour, &u).0.re < f0 - 50.0 || l > 1e6 {
                    break;
                }
                l *= 1.5;
            }
            *out = center[j] + sign * l * 1.5;
        }
    }
    let integrate = |npts: usize| -> f64 {
        let hs: Vec<f64> = (0..d).map(|j| (hi[j] - lo[j]) / npts as f64).collect();
        let total = npts.pow(d as u32);
        let sum: Complex64 = (0..total)
            .into_par_iter()
            .map(|f| {
                let mut u = [0.0f64; 8];
                let mut rem = f;
                for j in (0..d).rev() {
                    u[j] = lo[j] + (rem % npts) as f64 * hs[j];
                    rem /= npts;
                }
                let (e, jac) = exponent(&contour, &u[..d]);
                (e - f0).exp() * jac
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let vol: f64 = hs.iter().product();
        (sum * vol).norm().ln()
    };
    let mut npts = if d == 1 { 512 } else { 128 };
    let mut prev = integrate(npts);
    loop {
        npts *= 2;
        let next = integrate(npts);
        if (next - prev).abs() < 1e-9 || npts >= if d == 1 { 1 << 16 } else { 1 << 11 } {
            prev = next;
            break;
        }
        prev = next;
    }
    let ln_k = prev + f0 - d as f64 * (2.0 * PI).ln() - p.basis_det_abs().ln();
    Ok(ln_k)
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Level of `t R#(x / t)` at the outer end of the ray fits; the fit window is
/// the decade below it.
pub const RAY_LEVEL: f64 = 5000.0;

/// Log-log slope of the upper envelope of `-ln|K^t|` along `v_k` over `[r_max/10, r_max]`.
pub fn ray_decay_exponent(p: &WeightedSymbol, t: f64, k: usize, r_max: f64) -> Result<f64> {
    let bins = 10;
    let per_bin = 3;
    let mut xs = Vec::with_capacity(bins);
    let mut ys = Vec::with_capacity(bins);
    for b in 0..bins {
        let mut best = f64::NEG_INFINITY;
        let mut r_best = 0.0;
        for s in 0..per_bin {
            let frac = (b as f64 + (s as f64 + 0.5) / per_bin as f64) / bins as f64;
            let r = r_max * 10f64.powf(frac - 1.0);
            let v = ray_log_kernel(p, t, k, r)?;
            if v > best {
                best = v;
                r_best = r;
            }
        }
        xs.push(r_best.ln());
        ys.push((-best).ln());
    }
    Ok(regression_slope(&xs, &ys))
}

/// Radius along `v_k` where `R#(t^{-E} x)` reaches `level`.
pub fn ray_radius_for_level(lf: &LFTransform, t: f64, k: usize, level: f64) -> Result<f64> {
    let d = lf.dim();
    let mut e = vec![0.0; d];
    e[k] = 1.0;
    let unit = lf.eval_coords(&e)?;
    let w = lf.omega()[k];
    // t R#(c / t) = t^{1 - w} unit r^w along the axis
    Ok((level / (unit * t.powf(1.0 - w))).powf(1.0 / w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocklandRow {
    pub axis: usize,
    /// Fitted decay exponent of the kernel itself.
    pub kernel_exponent: f64,
    /// Fitted exponent of `t R#(x / t)` along the ray.
    pub rsharp_exponent: f64,
    /// Fitted exponent of `(|x|_h^{2m} / t)^{1/(2m-1)}` with `|x|_h^{2m} = sum |c_k|^{2 m_k}`, `m = max m_k`.
    pub norm_exponent: f64,
}

/// Decay exponents along each eigen-ray for the kernel, the transform bound and the norm bound.
pub fn rockland_compare(p: &WeightedSymbol, t: f64) -> Result<Vec<RocklandRow>> {
    let lf = LFTransform::new(p)?;
    let m = p.weight().as_slice().to_vec();
    let big_m = *m.iter().max().expect("non-empty") as f64;
    let d = p.dim();
    let mut rows = Vec::with_capacity(d);
    for k in 0..d {
        let r_max = ray_radius_for_level(&lf, t, k, RAY_LEVEL)?;
        let kernel_exponent = ray_decay_exponent(p, t, k, r_max)?;
        let rs: Vec<f64> = (0..16).map(|i| r_max * 10f64.powf(i as f64 / 15.0 - 1.0)).collect();
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let mut c = vec![0.0; d];
        let mut ys_r = Vec::new();
        let mut ys_n = Vec::new();
        for &r in &rs {
            c.iter_mut().for_each(|v| *v = 0.0);
            c[k] = r / t;
            ys_r.push((t * lf.eval_coords(&c)?).ln());
            let hom: f64 = (r.abs()).powi(2 * m[k] as i32);
            ys_n.push(((hom / t).powf(1.0 / (2.0 * big_m - 1.0))).ln());
        }
        rows.push(RocklandRow {
            axis: k,
            kernel_exponent,
            rsharp_exponent: regression_slope(&xs, &ys_r),
            norm_exponent: regression_slope(&xs, &ys_n),
        });
    }
    Ok(rows)
}

/// A box that contains the region where `|K^t| > tol * peak`, judged from `R#`.
pub fn suggest_box(p: &WeightedSymbol, t: f64, level: f64) -> Result<BoxSpec> {
    let lf = LFTransform::new(p)?;
    let d = p.dim();
    let e = p.spatial_exponent();
    let mut half = vec![0.0f64; d];
    for k in 0..d {
        let r = ray_radius_for_level(&lf, t, k, level)?;
        let mut c = vec![0.0; d];
        c[k] = r;
        let x = e.from_coords(&c);
        for j in 0..d {
            half[j] = half[j].max(x[j].abs());
        }
    }
    BoxSpec::symmetric(&half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Weight;

    fn lap1() -> WeightedSymbol {
        WeightedSymbol::new(Weight::new(vec![1]).unwrap(), [(MultiIndex(vec![2]), Complex64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn gaussian_value_at_origin() {
        let k = compute_kernel(&lap1(), 1.0, &BoxSpec::cube(1, 8.0).unwrap(), 256).unwrap();
        let v = k.eval(&[0.0]).unwrap();
        assert!((v.re - (4.0 * PI).powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_on_ray() {
        for &r in &[3.0, 10.0, 40.0] {
            let ln = ray_log_kernel(&lap1(), 1.0, 0, r).unwrap();
            let exact = -0.5 * (4.0 * PI).ln() - r * r / 4.0;
            assert!((ln - exact).abs() < 1e-6 * exact.abs().max(1.0), "r={r}: {ln} vs {exact}");
        }
    }
}
