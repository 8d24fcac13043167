//! Global maximisation of smooth functions on boxes by grid search followed by zooming.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// Half-width of the coarse box that contained the argmax in its interior.
    pub half_width: f64,
}

/// Maximise `f` starting from a coarse grid of `points` per axis on the box
/// `center +- half_width`. The box doubles while the coarse argmax sits on its
/// boundary; after `max_doublings` the search fails with `BoundaryArgmax`.
pub fn maximize(
    f: impl Fn(&[f64]) -> f64,
    center: &[f64],
    half_width: f64,
    points: usize,
    max_doublings: usize,
) -> Result<MaxResult> {
    let mut l = half_width;
    let mut doublings = 0;
    let (mut best, mut step) = loop {
        let h = 2.0 * l / (points - 1) as f64;
        let origin: Vec<f64> = center.iter().map(|c| c - l).collect();
        let (idx, _) = grid_argmax(&f, &origin, h, points);
        if idx.iter().all(|&i| i > 0 && i < points - 1) {
            let u: Vec<f64> = idx.iter().zip(&origin).map(|(&i, o)| o + i as f64 * h).collect();
            break (u, h);
        }
        if doublings >= max_doublings {
            return Err(Error::BoundaryArgmax { doublings, half_width: l });
        }
        l *= 2.0;
        doublings += 1;
    };
    let zoom_pts = 9;
    let mut iters = 0;
    let scale = 1.0 + best.iter().map(|v| v.abs()).fold(0.0, f64::max);
    while step > 1e-13 * scale && iters < 400 {
        let half = 2.0 * step;
        let h = 2.0 * half / (zoom_pts - 1) as f64;
        let origin: Vec<f64> = best.iter().map(|u| u - half).collect();
        let (idx, _) = grid_argmax(&f, &origin, h, zoom_pts);
        best = idx.iter().zip(&origin).map(|(&i, o)| o + i as f64 * h).collect();
        if idx.iter().all(|&i| i > 0 && i < zoom_pts - 1) {
            step = h;
        }
        iters += 1;
    }
    let value = f(&best);
    Ok(MaxResult { point: best, value, half_width: l })
}

fn grid_argmax(f: &impl Fn(&[f64]) -> f64, origin: &[f64], h: f64, n: usize) -> (Vec<usize>, f64) {
    let d = origin.len();
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = vec![0; d];
    let mut idx = vec![0usize; d];
    let mut u = vec![0.0; d];
    let total = n.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            idx[k] = rem % n;
            rem /= n;
            u[k] = origin[k] + idx[k] as f64 * h;
        }
        let v = f(&u);
        if v > best {
            best = v;
            best_idx.copy_from_slice(&idx);
        }
    }
    (best_idx, best)
}

/// Minimise a unimodal function on `[a, b]` by golden-section search.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Nelder-Mead simplex minimisation from `x0` with initial edge lengths `step`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = f(&x);
        simplex.push((x, v));
    }
    let along = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect() };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v / n as f64);
        }
        let worst = simplex[n].clone();
        let xr = along(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = along(&centroid, &worst.0, 0.5);
            let fc = f(&xc);
            if fc < worst.1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = along(&best, &item.0, 0.5);
                    let v = f(&x);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_shifted_quadratic_max() {
        let r = maximize(|u| -(u[0] - 7.3).powi(2) - (u[1] + 0.2).powi(2), &[0.0, 0.0], 1.0, 33, 10).unwrap();
        assert!((r.point[0] - 7.3).abs() < 1e-10 && (r.point[1] + 0.2).abs() < 1e-10);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 100);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let (x, _) = nelder_mead(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.0, 1.0], &[0.5, 0.5], 2000);
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }
}
