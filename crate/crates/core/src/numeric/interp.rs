//! Local Lagrange interpolation on uniform grids.

use super::grid::{TensorGrid, UniformAxis};
use num_complex::Complex64;

pub const MAX_ORDER: usize = 16;

/// Interpolation weights for `order` consecutive nodes starting at `start`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub start: usize,
    pub len: usize,
    pub weights: [f64; MAX_ORDER],
}

/// Lagrange stencil of `order` nodes around `x`, or `None` if `x` lies outside the axis.
pub fn stencil(axis: &UniformAxis, x: f64, order: usize) -> Option<Stencil> {
    let order = order.min(axis.len).min(MAX_ORDER);
    debug_assert!(order >= 1);
    let s = (x - axis.start) / axis.step;
    let last = (axis.len - 1) as f64;
    let tol = 1e-9;
    if !(s >= -tol && s <= last + tol) {
        return None;
    }
    let base = s.floor() as i64 - (order as i64 / 2 - 1);
    let start = base.clamp(0, (axis.len - order) as i64) as usize;
    let local = s - start as f64;
    let mut weights = [0.0; MAX_ORDER];
    // exact node hit avoids 0/0-free but ill-conditioned products
    let nearest = local.round();
    if (local - nearest).abs() < 1e-14 && nearest >= 0.0 && (nearest as usize) < order {
        weights[nearest as usize] = 1.0;
        return Some(Stencil { start, len: order, weights });
    }
    for j in 0..order {
        let mut w = 1.0;
        for k in 0..order {
            if k != j {
                w *= (local - k as f64) / (j as f64 - k as f64);
            }
        }
        weights[j] = w;
    }
    Some(Stencil { start, len: order, weights })
}

/// Interpolate 1-d samples; `None` outside the axis.
pub fn interp_1d(axis: &UniformAxis, values: &[Complex64], x: f64, order: usize) -> Option<Complex64> {
    let st = stencil(axis, x, order)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..st.len {
        acc += values[st.start + j] * st.weights[j];
    }
    Some(acc)
}

/// Separable tensor-product interpolation of row-major samples on `grid`.
pub fn interp_nd(grid: &TensorGrid, values: &[Complex64], x: &[f64], order: usize) -> Option<Complex64> {
    match grid.dim() {
        1 => interp_1d(&grid.axes[0], values, x[0], order),
        2 => {
            let s0 = stencil(&grid.axes[0], x[0], order)?;
            let s1 = stencil(&grid.axes[1], x[1], order)?;
            let n1 = grid.axes[1].len;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..s0.len {
                let row = (s0.start + i) * n1 + s1.start;
                let mut inner = Complex64::new(0.0, 0.0);
                for j in 0..s1.len {
                    inner += values[row + j] * s1.weights[j];
                }
                acc += inner * s0.weights[i];
            }
            Some(acc)
        }
        d => {
            let stencils: Option<Vec<Stencil>> =
                (0..d).map(|k| stencil(&grid.axes[k], x[k], order)).collect();
            let stencils = stencils?;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = vec![0usize; d];
            let count: usize = stencils.iter().map(|s| s.len).product();
            for c in 0..count {
                let mut rem = c;
                let mut w = 1.0;
                for k in (0..d).rev() {
                    let j = rem % stencils[k].len;
                    rem /= stencils[k].len;
                    idx[k] = stencils[k].start + j;
                    w *= stencils[k].weights[j];
                }
                acc += values[grid.ravel(&idx)] * w;
            }
            Some(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_up_to_order_minus_one() {
        let axis = UniformAxis::new(-1.0, 0.1, 21);
        let vals: Vec<Complex64> = axis
            .nodes()
            .iter()
            .map(|x| Complex64::new(x.powi(3) - 2.0 * x, 0.0))
            .collect();
        for &x in &[-0.95, -0.333, 0.0, 0.41, 0.999, 1.0] {
            let v = interp_1d(&axis, &vals, x, 4).unwrap();
            assert!((v.re - (x.powi(3) - 2.0 * x)).abs() < 1e-12, "x={x}");
        }
        assert!(interp_1d(&axis, &vals, 1.2, 4).is_none());
    }

    #[test]
    fn two_dimensional_bilinear_exactness() {
        let g = TensorGrid::new(vec![UniformAxis::new(0.0, 0.5, 5), UniformAxis::new(-1.0, 0.25, 9)]);
        let vals: Vec<Complex64> = (0..g.len())
            .map(|f| {
                let p = g.point(f);
                Complex64::new(p[0] * p[1] + p[0], p[1])
            })
            .collect();
        let v = interp_nd(&g, &vals, &[1.3, 0.1], 4).unwrap();
        assert!((v.re - (1.3 * 0.1 + 1.3)).abs() < 1e-12);
        assert!((v.im - 0.1).abs() < 1e-12);
    }
}
