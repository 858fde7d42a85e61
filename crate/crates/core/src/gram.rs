use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;

/// A symmetric `n×n` matrix of kernel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    /// Evaluates `entry(i, j)` for `i <= j` and mirrors the result.
    pub fn from_pairs(n: usize, mut entry: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j)?;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self { n, values })
    }

    /// Builds the matrix from its upper triangle listed row by row
    /// (`(i, j)` for `i <= j`), as produced by [`Gram::upper_pairs`].
    pub fn from_upper(n: usize, upper: &[f64]) -> Self {
        assert_eq!(upper.len(), n * (n + 1) / 2, "upper triangle has the wrong length");
        let mut values = vec![0.0; n * n];
        for ((i, j), &v) in Self::upper_pairs(n).zip(upper) {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        Self { n, values }
    }

    pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrors_upper_triangle() {
        let g = Gram::from_pairs(3, |i, j| Ok((10 * i + j) as f64)).unwrap();
        assert_eq!(g.get(2, 0), 2.0);
        assert_eq!(g.get(0, 2), 2.0);
        let upper: Vec<f64> = Gram::upper_pairs(3).map(|(i, j)| (10 * i + j) as f64).collect();
        assert_eq!(Gram::from_upper(3, &upper), g);
    }
}
