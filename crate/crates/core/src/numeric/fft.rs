use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place separable FFT of a row-major array with the given shape.
///
/// `Forward` uses the kernel `exp(-2 pi i jk/N)`; no normalization is applied
/// in either direction.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "buffer does not match shape");
    let mut planner = FftPlanner::<f64>::new();
    let d = shape.len();
    for axis in 0..d {
        let n = shape[axis];
        if n <= 1 {
            continue;
        }
        let fft = planner.plan_fft(n, direction);
        let stride: usize = shape[axis + 1..].iter().product();
        if stride == 1 {
            // contiguous rows
            fft.process(data);
            continue;
        }
        let outer: usize = shape[..axis].iter().product();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            let base = o * n * stride;
            for s in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride + s];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride + s] = *v;
                }
            }
        }
    }
}

/// Signed frequency index of FFT bin `q` for a length-`n` transform.
#[inline]
pub fn signed_index(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_identity_up_to_scale() {
        let shape = [4usize, 8];
        let orig: Vec<Complex64> = (0..32)
            .map(|k| Complex64::new(k as f64 * 0.3 - 1.0, (k * k) as f64 * 0.01))
            .collect();
        let mut buf = orig.clone();
        fft_nd(&mut buf, &shape, FftDirection::Forward);
        fft_nd(&mut buf, &shape, FftDirection::Inverse);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / 32.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_in_two_dimensions() {
        let shape = [3usize, 5];
        let data: Vec<Complex64> = (0..15).map(|k| Complex64::new((k as f64).sin(), (k as f64).cos())).collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &shape, FftDirection::Forward);
        for p in 0..3 {
            for q in 0..5 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..3 {
                    for k in 0..5 {
                        let ph = -2.0 * std::f64::consts::PI * ((p * j) as f64 / 3.0 + (q * k) as f64 / 5.0);
                        acc += data[j * 5 + k] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - fast[p * 5 + q]).norm() < 1e-12);
            }
        }
    }
}
