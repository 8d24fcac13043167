/// Uniformly spaced nodes `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformAxis {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, len }
    }

    /// Symmetric axis `-half..=half` with `len` nodes (`len` odd keeps 0 on the grid).
    pub fn symmetric(half: f64, len: usize) -> Self {
        assert!(len >= 2);
        let step = 2.0 * half / (len - 1) as f64;
        Self { start: -half, step, len }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.coord(self.len - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.coord(i)).collect()
    }
}

/// Tensor product of uniform axes with row-major flattening (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub axes: Vec<UniformAxis>,
}

impl TensorGrid {
    pub fn new(axes: Vec<UniformAxis>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    /// Product of the axis steps.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].len;
            out[k] = flat % n;
            flat /= n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, a) in self.axes.iter().enumerate() {
            flat = flat * a.len + idx[k];
        }
        flat
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unravel(flat, &mut idx);
        idx.iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect()
    }

    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].len;
            out[k] = self.axes[k].coord(rem % n);
            rem /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ravel_unravel_round_trip() {
        let g = TensorGrid::new(vec![UniformAxis::new(0.0, 1.0, 3), UniformAxis::new(-1.0, 0.5, 4)]);
        let mut idx = [0usize; 2];
        for f in 0..g.len() {
            g.unravel(f, &mut idx);
            assert_eq!(g.ravel(&idx), f);
        }
        assert_eq!(g.point(5), vec![1.0, -0.5]);
    }
}
