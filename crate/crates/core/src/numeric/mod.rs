//! Small numerical building blocks shared by the analysis modules.

pub mod fft;
pub mod grid;
pub mod interp;
pub mod optimize;
pub mod quad;
pub mod sampling;

/// Smallest power of two that is `>= n` (and at least 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

pub fn is_pow2(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}
