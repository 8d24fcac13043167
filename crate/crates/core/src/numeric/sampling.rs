//! Deterministic direction sampling for sphere sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviate (Box-Muller).
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Unit directions in `R^d`.
///
/// d = 1 gives `{-1, +1}`; d = 2 an equiangular grid of `n` angles starting at 0
/// (so axes and diagonals are hit when `n` is a multiple of 8); d >= 3 uses
/// seeded Gaussian directions with the coordinate axes prepended.
pub fn sphere_directions(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    match d {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n.max(4))
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n.max(4) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(n + 2 * d);
            for k in 0..d {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[k] = s;
                    out.push(e);
                }
            }
            let mut r = rng(seed);
            while out.len() < n.max(2 * d) {
                let v: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
                let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 1e-12 {
                    out.push(v.into_iter().map(|x| x / nrm).collect());
                }
            }
            out
        }
    }
}

/// Structured directions on the unit sphere of `R^d` that include all
/// coordinate axes and, for d = 2, 3, the 45-degree diagonals of each plane.
pub fn structured_directions(d: usize, resolution: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = resolution.max(8).div_ceil(8) * 8;
            sphere_directions(2, n, 0)
        }
        3 => {
            let n = resolution.max(8).div_ceil(8) * 8;
            let mut out = Vec::new();
            let lat_steps = n / 2;
            for i in 0..=lat_steps {
                let lat = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / lat_steps as f64;
                let ring = if i == 0 || i == lat_steps { 1 } else { n };
                for j in 0..ring {
                    let lon = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    out.push(vec![lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]);
                }
            }
            out
        }
        _ => sphere_directions(d, resolution, 7),
    }
}
