//! Tables of the frozen profiles `Gamma_beta(w; z) = F^{-1}[xi^beta exp(-P_p(z, xi))](w)`.

use super::operator::{Coefficient, VarCoeffOperator};
use crate::error::{Error, Result};
use crate::heatkernel::{compute_kernel_axes, BoxSpec, KernelOptions};
use crate::numeric::grid::{TensorGrid, UniformAxis};
use crate::numeric::interp::{interp_nd, stencil};
use crate::numeric::next_pow2;
use crate::symbol::{MultiIndex, Weight, WeightedSymbol};
use num_complex::Complex64;
use rayon::prelude::*;

const TABLE_ORDER: usize = 8;
const Z_ORDER: usize = 4;
const MAX_Z_NODES: usize = 4096;

pub(crate) enum Family {
    /// `d = 1`, `P_p(z, xi) = c(z) xi^{2m}` with `c` real: every profile is a
    /// rescaling of the profile of `xi^{2m}`.
    Scalar { m: u32, coef: Coefficient, grid: TensorGrid, tables: Vec<Vec<Complex64>>, orders: Vec<u32> },
    /// Profiles tabulated at the nodes of a `z` grid (one node when the
    /// principal part is constant), Lagrange-interpolated in `z`.
    Tabulated { zgrid: Option<TensorGrid>, grid: TensorGrid, tables: Vec<Vec<Vec<Complex64>>> },
}

fn scalar_principal(h: &VarCoeffOperator) -> Option<(u32, Coefficient)> {
    if h.dim() != 1 || h.has_constant_principal_part() {
        return None;
    }
    let p: Vec<_> = h.principal_coeffs().collect();
    if p.len() != 1 {
        return None;
    }
    Some((h.weight().as_slice()[0], p[0].1.clone()))
}

fn table(p: &WeightedSymbol, betas: &[MultiIndex], half: &[f64], ns: &[usize]) -> Result<Vec<Vec<Complex64>>> {
    let bx = BoxSpec::symmetric(half)?;
    let opts = KernelOptions { assume_positive: true, ..KernelOptions::default() };
    betas.iter().map(|b| Ok(compute_kernel_axes(p, 1.0, 0, b, &bx, ns, &opts)?.values)).collect()
}

/// Grid of `n` points on `[-half, half)` (the layout used by the FFT tables).
fn table_grid(half: &[f64], ns: &[usize]) -> TensorGrid {
    TensorGrid::new(half.iter().zip(ns).map(|(&h, &n)| UniformAxis::new(-h, 2.0 * h / n as f64, n)).collect())
}

impl Family {
    /// `half[k]` bounds the profile arguments that are needed; `domain` bounds the
    /// frozen points `z`; `z_step` is the node spacing for tabulated families.
    pub(crate) fn build(
        h: &VarCoeffOperator,
        betas: &[MultiIndex],
        half: &[f64],
        domain: &BoxSpec,
        z_step: f64,
    ) -> Result<Self> {
        let d = h.dim();
        if let Some((m, coef)) = scalar_principal(h) {
            if coef.eval(&[0.0]).im == 0.0 {
                // c(z) >= delta c(0), so the rescaling c^{-1/2m} stays below this
                let stretch = (h.delta() * coef.eval(&[0.0]).re).powf(-1.0 / (2 * m) as f64).max(1.0);
                let hw = [half[0] * stretch];
                let ns = [next_pow2((2.0 * hw[0] * 32.0).ceil() as usize)];
                let unit = WeightedSymbol::new(Weight::new(vec![m])?, [(MultiIndex(vec![2 * m]), Complex64::new(1.0, 0.0))])?;
                let tables = table(&unit, betas, &hw, &ns)?;
                let orders = betas.iter().map(|b| b.order()).collect();
                return Ok(Family::Scalar { m, coef, grid: table_grid(&hw, &ns), tables, orders });
            }
        }
        let per_axis = match d {
            1 => 32.0,
            2 => 4.0,
            _ => 2.0,
        };
        let ns: Vec<usize> = half.iter().map(|hk| next_pow2((2.0 * hk * per_axis).ceil() as usize).max(16)).collect();
        let grid = table_grid(half, &ns);
        if h.has_constant_principal_part() {
            let p = h.frozen_symbol(&vec![0.0; d])?;
            return Ok(Family::Tabulated { zgrid: None, grid, tables: vec![table(&p, betas, half, &ns)?] });
        }
        let axes: Vec<UniformAxis> = (0..d)
            .map(|k| {
                let n = ((domain.max[k] - domain.min[k]) / z_step).ceil() as usize + 1;
                UniformAxis::new(domain.min[k], z_step, n.max(Z_ORDER))
            })
            .collect();
        let zgrid = TensorGrid::new(axes);
        if zgrid.len() > MAX_Z_NODES {
            return Err(Error::MemoryBudget { required: zgrid.len(), budget: MAX_Z_NODES });
        }
        let tables = (0..zgrid.len())
            .into_par_iter()
            .map(|f| table(&h.frozen_symbol(&zgrid.point(f))?, betas, half, &ns))
            .collect::<Result<Vec<_>>>()?;
        Ok(Family::Tabulated { zgrid: Some(zgrid), grid, tables })
    }

    /// `Gamma_beta(w; z)` for the profile with index `b`.
    pub(crate) fn gamma(&self, b: usize, w: &[f64], z: &[f64]) -> Complex64 {
        match self {
            Family::Scalar { coef, .. } => self.scalar_gamma(b, coef.eval(z).re, w[0]),
            Family::Tabulated { zgrid: None, grid, tables } => lookup(grid, &tables[0][b], w),
            Family::Tabulated { zgrid: Some(zg), grid, tables } => {
                let d = zg.dim();
                let mut sts = Vec::with_capacity(d);
                for k in 0..d {
                    let ax = &zg.axes[k];
                    let zk = z[k].clamp(ax.start, ax.end());
                    sts.push(stencil(ax, zk, Z_ORDER).expect("clamped"));
                }
                let count: usize = sts.iter().map(|s| s.len).product();
                let mut idx = vec![0usize; d];
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..count {
                    let mut rem = c;
                    let mut wt = 1.0;
                    for k in (0..d).rev() {
                        let j = rem % sts[k].len;
                        rem /= sts[k].len;
                        idx[k] = sts[k].start + j;
                        wt *= sts[k].weights[j];
                    }
                    if wt != 0.0 {
                        acc += lookup(grid, &tables[zg.ravel(&idx)][b], w) * wt;
                    }
                }
                acc
            }
        }
    }

    /// The coefficient of a scalar family, so callers can reuse `c(z)`.
    pub(crate) fn scalar_coefficient(&self) -> Option<&Coefficient> {
        match self {
            Family::Scalar { coef, .. } => Some(coef),
            _ => None,
        }
    }

    /// Profile `b` of a scalar family for the coefficient value `c`.
    #[inline]
    pub(crate) fn scalar_gamma(&self, b: usize, c: f64, w: f64) -> Complex64 {
        match self {
            Family::Scalar { m, grid, tables, orders, .. } => {
                let s = c.powf(-1.0 / (2 * m) as f64);
                lookup(grid, &tables[b], &[s * w]) * s.powi(orders[b] as i32 + 1)
            }
            _ => unreachable!("scalar profile requested from a tabulated family"),
        }
    }
}

#[inline]
fn lookup(grid: &TensorGrid, values: &[Complex64], w: &[f64]) -> Complex64 {
    interp_nd(grid, values, w, TABLE_ORDER).unwrap_or(Complex64::new(0.0, 0.0))
}
