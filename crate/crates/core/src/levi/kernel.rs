//! Space-time kernels in self-similar storage and the Volterra quadrature
//! `L(F)(t, x, y) = int_0^t int k(t - s, x, z) F(s, z, y) dz ds`.
//!
//! A kernel `F(t, x, y)` is stored per source point `y` ("column") as
//! `S(u, w) = t^q F(t, y + t^E w, y)` with `u = (t / T)^p` on a uniform grid in
//! `u` and `w` on a uniform grid. Both time integrals are split at `t / 2` and the
//! power singularity of each half is removed by `s = (t/2) sigma^{1/p}`.

use crate::error::{check_dim, Error, Result};
use crate::numeric::grid::{TensorGrid, UniformAxis};
use crate::numeric::interp::{interp_nd, stencil};
use crate::numeric::quad::gauss_legendre_unit;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

const U_ORDER: usize = 6;
const W_ORDER: usize = 8;
/// The first time row is sampled at `T * T0_FRACTION` and stands for `t -> 0`.
pub const T0_FRACTION: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Geometry shared by every kernel of one construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    t_max: f64,
    grade: f64,
    time_nodes: usize,
    w: TensorGrid,
    e: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl Layout {
    /// `e` are the eigenvalues of the (diagonal) spatial exponent; the `w` grid
    /// is `[-w_half_k, w_half_k]` with spacing `w_step`.
    pub fn new(
        t_max: f64,
        grade: f64,
        time_nodes: usize,
        w_half: &[f64],
        w_step: f64,
        e: Vec<f64>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let d = e.len();
        check_dim(d, w_half.len())?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid("T must be positive"));
        }
        if !(grade > 0.0) {
            return Err(Error::invalid("time grading exponent must be positive"));
        }
        if time_nodes < U_ORDER {
            return Err(Error::invalid(format!("need at least {U_ORDER} time nodes, got {time_nodes}")));
        }
        if !(w_step > 0.0) || w_half.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("self-similar grid needs positive half widths and step"));
        }
        if columns.is_empty() {
            return Err(Error::invalid("need at least one source point"));
        }
        for c in &columns {
            check_dim(d, c.len())?;
        }
        let axes = w_half
            .iter()
            .map(|&h| {
                let n = (h / w_step).ceil() as usize;
                UniformAxis::new(-(n as f64) * w_step, w_step, 2 * n + 1)
            })
            .collect();
        Ok(Self { t_max, grade, time_nodes, w: TensorGrid::new(axes), e, columns })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn grade(&self) -> f64 {
        self.grade
    }

    pub fn time_nodes(&self) -> usize {
        self.time_nodes
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.w
    }

    pub fn exponents(&self) -> &[f64] {
        &self.e
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    pub fn mu(&self) -> f64 {
        self.e.iter().sum()
    }

    fn u_axis(&self) -> UniformAxis {
        UniformAxis::new(0.0, 1.0 / self.time_nodes as f64, self.time_nodes + 1)
    }

    /// Time of row `j`; row 0 stands for the limit `t -> 0`.
    pub fn time(&self, j: usize) -> f64 {
        if j == 0 {
            self.t_max * T0_FRACTION
        } else {
            self.t_max * (j as f64 / self.time_nodes as f64).powf(1.0 / self.grade)
        }
    }

    /// The graded times `t_1 < ... < t_J = T`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.time_nodes).map(|j| self.time(j)).collect()
    }

    fn row_len(&self) -> usize {
        self.w.len()
    }

    fn rows_per_column(&self) -> usize {
        self.time_nodes + 1
    }

    /// `x = y + t^E w` for grid node `wi` of column `col`.
    pub fn point(&self, col: usize, t: f64, wi: usize, out: &mut [f64]) {
        self.w.point_into(wi, out);
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.columns[col][k] + t.powf(self.e[k]) * *o;
        }
    }

    /// `w = t^{-E} (x - y)` for column `col`.
    pub fn offset(&self, col: usize, t: f64, x: &[f64], out: &mut [f64]) {
        for k in 0..self.e.len() {
            out[k] = (x[k] - self.columns[col][k]) * t.powf(-self.e[k]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tag {
    FrozenKernel,
    K,
    Kn(usize),
    Phi,
    W,
    Z,
    Custom,
}

/// Kernel `F(t, x, y)` on a [`Layout`], stored as `S = t^q F` in self-similar offsets.
#[derive(Debug, Clone)]
pub struct SpaceTimeKernel {
    tag: Tag,
    layout: Arc<Layout>,
    q: f64,
    values: Vec<Complex64>,
}

impl SpaceTimeKernel {
    pub fn zeros(tag: Tag, layout: Arc<Layout>, q: f64) -> Self {
        let n = layout.columns.len() * layout.rows_per_column() * layout.row_len();
        Self { tag, layout, q, values: vec![ZERO; n] }
    }

    /// Samples `f(col, t, x)` at every node.
    pub fn from_fn(tag: Tag, layout: Arc<Layout>, q: f64, f: impl Fn(usize, f64, &[f64]) -> Complex64 + Sync) -> Self {
        let mut out = Self::zeros(tag, layout, q);
        let lay = out.layout.clone();
        let nw = lay.row_len();
        let rows = lay.rows_per_column();
        out.values.par_chunks_mut(nw).enumerate().for_each(|(r, chunk)| {
            let (col, j) = (r / rows, r % rows);
            let t = lay.time(j);
            let tq = t.powf(q);
            let mut x = vec![0.0; lay.dim()];
            for (wi, v) in chunk.iter_mut().enumerate() {
                lay.point(col, t, wi, &mut x);
                *v = f(col, t, &x) * tq;
            }
        });
        out
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn retag(mut self, tag: Tag) -> Self {
        self.tag = tag;
        self
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// The storage exponent `q` in `S = t^q F`.
    pub fn weight_exponent(&self) -> f64 {
        self.q
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn stored_row(&self, col: usize, j: usize) -> &[Complex64] {
        let nw = self.layout.row_len();
        let start = (col * self.layout.rows_per_column() + j) * nw;
        &self.values[start..start + nw]
    }

    /// `F` at node `(col, j, wi)` together with its `(t, x)`.
    pub fn node(&self, col: usize, j: usize, wi: usize) -> (f64, Vec<f64>, Complex64) {
        let t = self.layout.time(j);
        let mut x = vec![0.0; self.layout.dim()];
        self.layout.point(col, t, wi, &mut x);
        (t, x, self.stored_row(col, j)[wi] * t.powf(-self.q))
    }

    /// `S(u, .)` for column `col`, interpolated in `u`.
    pub fn row_at(&self, col: usize, u: f64) -> Result<Vec<Complex64>> {
        let st = stencil(&self.layout.u_axis(), u, U_ORDER)
            .ok_or_else(|| Error::invalid(format!("time outside (0, T]: u = {u}")))?;
        let mut row = vec![ZERO; self.layout.row_len()];
        for i in 0..st.len {
            let w = st.weights[i];
            if w == 0.0 {
                continue;
            }
            for (r, v) in row.iter_mut().zip(self.stored_row(col, st.start + i)) {
                *r += v * w;
            }
        }
        Ok(row)
    }

    /// `F(t, x, y_col)` by interpolation; zero outside the stored offsets.
    pub fn eval(&self, col: usize, t: f64, x: &[f64]) -> Result<Complex64> {
        let lay = &self.layout;
        check_dim(lay.dim(), x.len())?;
        if col >= lay.columns.len() {
            return Err(Error::invalid(format!("column {col} out of range")));
        }
        if !(t > 0.0 && t <= lay.t_max * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!("t = {t} outside (0, T]")));
        }
        let row = self.row_at(col, (t / lay.t_max).powf(lay.grade).min(1.0))?;
        let mut w = vec![0.0; lay.dim()];
        lay.offset(col, t, x, &mut w);
        Ok(interp_nd(&lay.w, &row, &w, W_ORDER).unwrap_or(ZERO) * t.powf(-self.q))
    }

    /// `sup |S|` over the rows `t > 0`: the sup of `t^q |F|`.
    pub fn weighted_sup(&self) -> f64 {
        let lay = &self.layout;
        let mut best: f64 = 0.0;
        for col in 0..lay.columns.len() {
            for j in 1..lay.rows_per_column() {
                for v in self.stored_row(col, j) {
                    best = best.max(v.norm());
                }
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout || (self.q - other.q).abs() > 1e-14 {
            return Err(Error::invalid("kernels live on different grids"));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// `a self + b other` on the same grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * a + y * b).collect();
        Ok(Self { tag: Tag::Custom, layout: self.layout.clone(), q: self.q, values })
    }
}

/// Left factor `k(tau, x, z)` of the Volterra product.
pub trait LeftKernel: Sync {
    fn eval(&self, tau: f64, x: &[f64], z: &[f64]) -> Complex64;
    /// `q` such that `tau^q k(tau, x, x - tau^E v)` stays bounded as `tau -> 0`.
    fn singularity(&self) -> f64;
}

/// Everything about `L(F)(t, ., y_col)` that does not depend on `x`.
struct Prepared<'a> {
    f: &'a SpaceTimeKernel,
    col: usize,
    t: f64,
    near: Vec<(f64, f64, Vec<Complex64>)>,
    far: Vec<(f64, f64, Vec<Complex64>)>,
}

fn is_zero(row: &[Complex64]) -> bool {
    row.iter().all(|v| *v == ZERO)
}

impl<'a> Prepared<'a> {
    fn new(left: &dyn LeftKernel, f: &'a SpaceTimeKernel, col: usize, t: f64, gauss: usize) -> Result<Self> {
        let lay = &f.layout;
        let mu = lay.mu();
        let p_near = mu + 1.0 - f.q;
        let p_far = mu + 1.0 - left.singularity();
        if !(p_near > 0.0 && p_far > 0.0) {
            return Err(Error::invalid(format!(
                "time integrand not integrable (exponents {p_near}, {p_far})"
            )));
        }
        let (nodes, weights) = gauss_legendre_unit(gauss);
        let cell = lay.w.cell_volume();
        let half = 0.5 * t;
        let u_of = |s: f64| (s / lay.t_max).powf(lay.grade).min(1.0);
        let mut near = Vec::with_capacity(gauss);
        let mut far = Vec::with_capacity(gauss);
        for (sg, wg) in nodes.iter().zip(&weights) {
            // s near 0: the singularity of F
            let s = half * sg.powf(1.0 / p_near);
            let row = f.row_at(col, u_of(s))?;
            if !is_zero(&row) {
                near.push((s, wg * half.powf(p_near) / p_near * cell, row));
            }
            // tau = t - s near 0: the singularity of k
            let tau = half * sg.powf(1.0 / p_far);
            let s = t - tau;
            let row = f.row_at(col, u_of(s))?;
            if !is_zero(&row) {
                far.push((tau, wg * half.powf(p_far) / p_far * cell * s.powf(-f.q), row));
            }
        }
        Ok(Self { f, col, t, near, far })
    }

    fn eval(&self, left: &dyn LeftKernel, x: &[f64]) -> Complex64 {
        let lay = &self.f.layout;
        let d = lay.dim();
        let y = &lay.columns[self.col];
        let mut v = [0.0f64; 8];
        let mut z = [0.0f64; 8];
        let mut w = [0.0f64; 8];
        let mut acc = ZERO;
        for (s, wt, row) in &self.near {
            let tau = self.t - s;
            let mut se = [0.0f64; 8];
            for k in 0..d {
                se[k] = s.powf(lay.e[k]);
            }
            let mut part = ZERO;
            for (vi, sv) in row.iter().enumerate() {
                if *sv == ZERO {
                    continue;
                }
                lay.w.point_into(vi, &mut v[..d]);
                for k in 0..d {
                    z[k] = y[k] + se[k] * v[k];
                }
                part += left.eval(tau, x, &z[..d]) * sv;
            }
            acc += part * *wt;
        }
        let ql = left.singularity();
        for (tau, wt, row) in &self.far {
            let s = self.t - tau;
            let tq = tau.powf(ql);
            let (mut te, mut si) = ([0.0f64; 8], [0.0f64; 8]);
            for k in 0..d {
                te[k] = tau.powf(lay.e[k]);
                si[k] = s.powf(-lay.e[k]);
            }
            let mut part = ZERO;
            for vi in 0..lay.w.len() {
                lay.w.point_into(vi, &mut v[..d]);
                for k in 0..d {
                    z[k] = x[k] - te[k] * v[k];
                    w[k] = (z[k] - y[k]) * si[k];
                }
                let fv = match interp_nd(&lay.w, row, &w[..d], W_ORDER) {
                    Some(fv) if fv != ZERO => fv,
                    _ => continue,
                };
                part += left.eval(*tau, x, &z[..d]) * tq * fv;
            }
            acc += part * *wt;
        }
        acc
    }
}

/// `L(F)` on the nodes of `F`'s layout, stored with exponent `q_out`.
pub fn apply(left: &dyn LeftKernel, f: &SpaceTimeKernel, tag: Tag, q_out: f64, gauss: usize) -> Result<SpaceTimeKernel> {
    let mut out = SpaceTimeKernel::zeros(tag, f.layout.clone(), q_out);
    let lay = f.layout.clone();
    let nw = lay.row_len();
    let rows = lay.rows_per_column();
    out.values.par_chunks_mut(nw).enumerate().try_for_each(|(r, chunk)| -> Result<()> {
        let (col, j) = (r / rows, r % rows);
        let t = lay.time(j);
        let prep = Prepared::new(left, f, col, t, gauss)?;
        if prep.near.is_empty() && prep.far.is_empty() {
            return Ok(());
        }
        let tq = t.powf(q_out);
        let mut x = vec![0.0; lay.dim()];
        for (wi, v) in chunk.iter_mut().enumerate() {
            lay.point(col, t, wi, &mut x);
            *v = prep.eval(left, &x) * tq;
        }
        Ok(())
    })?;
    if !out.is_finite() {
        return Err(Error::Degenerate("space-time quadrature produced non-finite values".into()));
    }
    Ok(out)
}

/// `L(F)(t, x, y_col)` for several `x` at one time `t`.
pub fn apply_at(left: &dyn LeftKernel, f: &SpaceTimeKernel, col: usize, t: f64, xs: &[Vec<f64>], gauss: usize) -> Result<Vec<Complex64>> {
    let lay = &f.layout;
    if col >= lay.columns.len() {
        return Err(Error::invalid(format!("column {col} out of range")));
    }
    if !(t > 0.0 && t <= lay.t_max * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("t = {t} outside (0, T]")));
    }
    let prep = Prepared::new(left, f, col, t, gauss)?;
    xs.iter()
        .map(|x| {
            check_dim(lay.dim(), x.len())?;
            Ok(prep.eval(left, x))
        })
        .collect()
}

/// One step of the series: `K_{n+1} = L_{K_1}(K_n)`, stored like `K_n`.
pub fn iterate_k(k1: &dyn LeftKernel, k_prev: &SpaceTimeKernel, gauss: usize) -> Result<SpaceTimeKernel> {
    let n = match k_prev.tag {
        Tag::K => 1,
        Tag::Kn(n) => n,
        _ => 0,
    };
    apply(k1, k_prev, Tag::Kn(n + 1), k_prev.q, gauss)
}
