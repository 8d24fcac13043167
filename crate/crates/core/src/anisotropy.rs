//! Dilation groups `t^E`, anisotropic homogeneous norms, the exponent vector
//! `omega(m)`, Hoelder consistency and comparability of homogeneous functions.

use crate::error::{check_dim, Error, Result};
use crate::numeric::sampling::sphere_directions;
use nalgebra::DMatrix;

/// Anything that acts as a one-parameter dilation group on `R^d`.
pub trait Dilation {
    fn dim(&self) -> usize;
    fn dilate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;
}

/// Diagonalizable exponent with real positive spectrum: `E v_k = lambda_k v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationExponent {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl DilationExponent {
    /// `basis` holds the eigenvectors as columns.
    pub fn new(basis: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(Error::invalid("dilation exponent needs d >= 1"));
        }
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis.nrows() });
        }
        if let Some(l) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("eigenvalue {l} is not strictly positive")));
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("eigenbasis is singular"))?;
        if !inverse.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("eigenbasis is numerically singular"));
        }
        Ok(Self { basis, inverse, eigenvalues })
    }

    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        Self::new(DMatrix::identity(d, d), eigenvalues)
    }

    /// The canonical `E_v^alpha` with `E w_k = w_k / alpha_k`.
    pub fn from_exponents(basis: DMatrix<f64>, alpha: &[f64]) -> Result<Self> {
        Self::new(basis, alpha.iter().map(|a| 1.0 / a).collect())
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// `I - E`, which must again have positive spectrum.
    pub fn complement(&self) -> Result<Self> {
        Self::new(self.basis.clone(), self.eigenvalues.iter().map(|l| 1.0 - l).collect())
    }

    /// Adjoint exponent acting on the dual space: eigenvectors are the rows of `basis^{-1}`.
    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.inverse.transpose(),
            inverse: self.basis.transpose(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }

    /// Matrix of `t^E`.
    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let d = self.eigenvalues.len();
        let diag = DMatrix::from_fn(d, d, |i, j| if i == j { t.powf(self.eigenvalues[i]) } else { 0.0 });
        &self.basis * diag * &self.inverse
    }

    pub fn operator_norm(&self, t: f64) -> f64 {
        self.matrix(t).singular_values().max()
    }

    /// Eigen-coordinates of `x`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, x)
    }

    pub fn from_coords(&self, c: &[f64]) -> Vec<f64> {
        mat_vec(&self.basis, c)
    }

    /// `t^E x` without argument checks, for hot loops.
    pub fn dilate_unchecked(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.eigenvalues.len();
        let ln_t = t.ln();
        let mut c = [0.0f64; 8];
        let mut cv;
        let c: &mut [f64] = if d <= 8 {
            &mut c[..d]
        } else {
            cv = vec![0.0; d];
            &mut cv
        };
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.inverse[(i, j)] * x[j];
            }
            c[i] = s * (ln_t * self.eigenvalues[i]).exp();
        }
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.basis[(i, j)] * c[j];
            }
            out[i] = s;
        }
    }
}

impl Dilation for DilationExponent {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn dilate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        if !(t > 0.0) {
            return Err(Error::invalid(format!("dilation parameter t = {t} must be positive")));
        }
        let mut out = vec![0.0; x.len()];
        self.dilate_unchecked(t, x, &mut out);
        Ok(out)
    }
}

/// Arbitrary real exponent matrix, dilated through the matrix exponential.
/// Used to probe non-diagonalizable or rotational members of an exponent set.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExponent {
    pub matrix: DMatrix<f64>,
}

impl MatrixExponent {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("exponent matrix must be square and non-empty"));
        }
        Ok(Self { matrix })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

impl Dilation for MatrixExponent {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn dilate(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        if !(t > 0.0) {
            return Err(Error::invalid(format!("dilation parameter t = {t} must be positive")));
        }
        let m = (&self.matrix * t.ln()).exp();
        Ok(mat_vec(&m, x))
    }
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

/// `|x|_v^alpha = sum_k |c_k|^{alpha_k}` where `c` are the coordinates of `x` in the basis `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousNorm {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    alpha: Vec<f64>,
}

impl HomogeneousNorm {
    /// `basis` holds the vectors `v_k` as columns.
    pub fn new(basis: DMatrix<f64>, alpha: Vec<f64>) -> Result<Self> {
        let d = alpha.len();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: basis.nrows() });
        }
        if alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::invalid("norm exponents must be positive"));
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("norm basis is singular"))?;
        Ok(Self { basis, inverse, alpha })
    }

    pub fn standard(alpha: Vec<f64>) -> Result<Self> {
        let d = alpha.len();
        Self::new(DMatrix::identity(d, d), alpha)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// The exponent `E_v^alpha` under which this norm is homogeneous of degree one.
    pub fn exponent(&self) -> DilationExponent {
        DilationExponent::from_exponents(self.basis.clone(), &self.alpha)
            .expect("validated basis and exponents")
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = mat_vec(&self.inverse, x);
        c.iter().zip(&self.alpha).map(|(c, a)| c.abs().powf(*a)).sum()
    }
}

pub fn homogeneous_norm(x: &[f64], norm: &HomogeneousNorm) -> Result<f64> {
    check_dim(norm.alpha.len(), x.len())?;
    Ok(norm.eval(x))
}

/// `omega_k = 2 m_k / (2 m_k - 1)`.
pub fn omega(m: &[u32]) -> Vec<f64> {
    m.iter().map(|&mk| (2 * mk) as f64 / (2 * mk - 1) as f64).collect()
}

/// Returns `a` with `alpha = omega(m) / a`, if such a scalar exists.
pub fn consistency(alpha: &[f64], m: &[u32]) -> Option<f64> {
    if alpha.len() != m.len() || alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0)) {
        return None;
    }
    let w = omega(m);
    let a0 = w[0] / alpha[0];
    for (wk, ak) in w.iter().zip(alpha) {
        let a = wk / ak;
        if (a - a0).abs() > 1e-12 * a0.abs().max(1.0) {
            return None;
        }
    }
    Some(a0)
}

/// Min and max of `q / r` over sampled points of the unit sphere of `r`.
///
/// Both functions must be homogeneous of degree one under `e`, so the ratio is
/// constant along orbits and the sampled extremes bound it globally.
pub fn compare_homogeneous(
    q: impl Fn(&[f64]) -> f64,
    r: impl Fn(&[f64]) -> f64,
    e: &DilationExponent,
    samples: usize,
) -> Result<(f64, f64)> {
    let d = e.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut buf = vec![0.0; d];
    for dir in sphere_directions(d, samples, 11) {
        let x = e.from_coords(&dir);
        let rx = r(&x);
        if !(rx > 0.0) {
            return Err(Error::Degenerate(format!("reference function is {rx} at {x:?}")));
        }
        e.dilate_unchecked(1.0 / rx, &x, &mut buf);
        let rn = r(&buf);
        if !(rn > 0.0) {
            return Err(Error::Degenerate(format!("reference function is {rn} at {buf:?}")));
        }
        let ratio = q(&buf) / rn;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilate_examples() {
        let e = DilationExponent::diagonal(vec![0.5]).unwrap();
        assert!((e.dilate(4.0, &[1.0]).unwrap()[0] - 2.0).abs() < 1e-15);
        let e = DilationExponent::diagonal(vec![0.25, 0.5]).unwrap();
        let y = e.dilate(16.0, &[1.0, 1.0]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-14 && (y[1] - 4.0).abs() < 1e-14);
        assert!(e.dilate(0.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn omega_and_consistency() {
        assert_eq!(omega(&[1]), vec![2.0]);
        let w = omega(&[1, 2]);
        assert!((w[1] - 4.0 / 3.0).abs() < 1e-15);
        let n = HomogeneousNorm::standard(w.clone()).unwrap();
        assert!((n.eval(&[1.0, 1.0]) - 2.0).abs() < 1e-15);
        assert!((consistency(&w, &[1, 2]).unwrap() - 1.0).abs() < 1e-15);
        assert!((consistency(&[1.0, 2.0 / 3.0], &[1, 2]).unwrap() - 2.0).abs() < 1e-12);
        assert!(consistency(&[1.0, 1.0], &[1, 2]).is_none());
    }

    #[test]
    fn compare_scalar_multiple() {
        let e = DilationExponent::diagonal(vec![0.5, 0.25]).unwrap();
        let r = |x: &[f64]| x[0] * x[0] + x[1].powi(4);
        let (lo, hi) = compare_homogeneous(|x| 2.0 * r(x), r, &e, 64).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }
}
