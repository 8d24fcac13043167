//! The three built-in lattice examples: coefficient tables, attractor symbols
//! and prefactors.

use crate::error::{Error, Result};
use crate::symbol::{MultiIndex, Rational, Weight, WeightedSymbol};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn term(beta: [u32; 2], a: Complex64) -> (MultiIndex, Complex64) {
    (MultiIndex(beta.to_vec()), a)
}

/// `(2 xi_1^4 + (sqrt3 - 1) xi_1^2 xi_2 + 4 xi_2^2) / (22 + 2 sqrt3)`, `m = (2, 1)`.
pub fn example1_symbol() -> WeightedSymbol {
    let s3 = 3f64.sqrt();
    let den = 22.0 + 2.0 * s3;
    WeightedSymbol::new(
        Weight::new(vec![2, 1]).expect("static"),
        [
            term([4, 0], c(2.0 / den, 0.0)),
            term([2, 1], c((s3 - 1.0) / den, 0.0)),
            term([0, 2], c(4.0 / den, 0.0)),
        ],
    )
    .expect("static")
    .labeled("example1")
}

/// `(xi_1^6 + 2 xi_2^4 - 2i xi_1^3 xi_2^2) / 64`, `m = (3, 2)`.
pub fn example2_symbol() -> WeightedSymbol {
    WeightedSymbol::new(
        Weight::new(vec![3, 2]).expect("static"),
        [
            term([6, 0], c(1.0 / 64.0, 0.0)),
            term([0, 4], c(2.0 / 64.0, 0.0)),
            term([3, 2], c(0.0, -2.0 / 64.0)),
        ],
    )
    .expect("static")
    .labeled("example2")
}

fn example3_basis() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])
}

/// `u_1^2 / 8 + u_2^4 / 16` with `u = (xi_1 + xi_2, xi_1 - xi_2)`, `m = (1, 2)`.
///
/// The quartic coefficient is the one produced by the fourth-order Taylor
/// expansion of `-log phi_hat` at the origin.
pub fn example3_symbol() -> WeightedSymbol {
    WeightedSymbol::with_basis(
        Weight::new(vec![1, 2]).expect("static"),
        [term([2, 0], c(1.0 / 8.0, 0.0)), term([0, 4], c(1.0 / 16.0, 0.0))],
        example3_basis(),
    )
    .expect("static")
    .labeled("example3")
}

/// Variant with quartic coefficient `23/384`, kept for comparison.
pub fn example3_printed_symbol() -> WeightedSymbol {
    WeightedSymbol::with_basis(
        Weight::new(vec![1, 2]).expect("static"),
        [term([2, 0], c(1.0 / 8.0, 0.0)), term([0, 4], c(23.0 / 384.0, 0.0))],
        example3_basis(),
    )
    .expect("static")
    .labeled("example3-printed")
}

pub fn example_symbol(id: u32) -> Result<WeightedSymbol> {
    match id {
        1 => Ok(example1_symbol()),
        2 => Ok(example2_symbol()),
        3 => Ok(example3_symbol()),
        _ => Err(Error::invalid(format!("unknown built-in case {id}; expected 1, 2 or 3"))),
    }
}

/// Nonzero entries of the built-in `phi`, as `(x, phi(x))`.
pub fn phi_table(id: u32) -> Result<Vec<(Vec<i64>, Complex64)>> {
    let mut out = Vec::new();
    let mut put = |x: [i64; 2], v: Complex64| out.push((x.to_vec(), v));
    match id {
        1 => {
            let s3 = 3f64.sqrt();
            let den = 22.0 + 2.0 * s3;
            put([0, 0], c(8.0 / den, 0.0));
            for s in [-1, 1] {
                put([s, 0], c((5.0 + s3) / den, 0.0));
                put([2 * s, 0], c(-2.0 / den, 0.0));
                put([s, -1], c(0.0, (s3 - 1.0) / den));
                put([s, 1], c(0.0, -(s3 - 1.0) / den));
            }
            put([0, 1], c(2.0 / den, -2.0 / den));
            put([0, -1], c(2.0 / den, 2.0 / den));
        }
        2 => {
            let mut acc = std::collections::BTreeMap::<[i64; 2], f64>::new();
            let mut add = |x: [i64; 2], v: f64| *acc.entry(x).or_insert(0.0) += v;
            // even part
            add([0, 0], 326.0);
            for s in [-1, 1] {
                add([2 * s, 0], -20.0);
                add([4 * s, 0], 1.0);
                add([0, s], 64.0);
                add([0, 2 * s], -16.0);
            }
            // odd part
            add([1, 0], 76.0);
            add([-1, 0], 52.0);
            add([3, 0], -4.0);
            add([-3, 0], 4.0);
            for s in [-1, 1] {
                add([1, s], -6.0);
                add([-1, s], 6.0);
                add([3, s], 2.0);
                add([-3, s], -2.0);
            }
            for (x, v) in acc {
                if v != 0.0 {
                    put(x, c(v / 512.0, 0.0));
                }
            }
        }
        3 => {
            put([0, 0], c(3.0 / 8.0, 0.0));
            for s in [-1, 1] {
                put([s, s], c(1.0 / 8.0, 0.0));
                put([s, -s], c(1.0 / 4.0, 0.0));
                put([2 * s, -2 * s], c(-1.0 / 16.0, 0.0));
            }
        }
        _ => return Err(Error::invalid(format!("unknown built-in case {id}; expected 1, 2 or 3"))),
    }
    Ok(out)
}

/// Oscillatory prefactor multiplying the attractor kernel.
pub fn prefactor(id: u32, x: &[i64]) -> Complex64 {
    let pi = std::f64::consts::PI;
    match id {
        1 => Complex64::from_polar(1.0, -pi * x[1] as f64 / 3.0),
        3 => {
            if (x[0] + x[1]).rem_euclid(2) == 0 {
                c(2.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }
        _ => c(1.0, 0.0),
    }
}

/// Point where `|phi_hat|` attains its maximum (one representative).
pub fn xi0(id: u32) -> [f64; 2] {
    match id {
        1 => [0.0, std::f64::consts::PI / 3.0],
        _ => [0.0, 0.0],
    }
}

pub fn mu(id: u32) -> Result<Rational> {
    Ok(example_symbol(id)?.homogeneous_order())
}
