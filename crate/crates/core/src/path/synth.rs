//! Synthetic benchmark paths.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::PiecewiseLinearPath;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, lower_mul};
use crate::rng::{fill_normal, Role};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// `t ↦ t·v`.
    Line(Vec<f64>),
    /// `t ↦ (sin 15t, cos 30t + 3eᵗ)`, shifted to start at 0.
    Benchmark2d,
    /// `t ↦ cos 15t + 3eᵗ`, shifted to start at 0.
    CosExp,
    /// Independent channels of a centred Gaussian process with covariance
    /// `exp(-gamma (s - t)²)` sampled on `[-2, 2]`, mapped to `[0, 1]`.
    GpRbf { dim: usize, gamma: f64 },
}

impl PathKind {
    /// Parses a kind name. `dim` sets the dimension of `line` (unit vector
    /// along the first axis) and `gp_rbf` (with `gamma = 5`).
    pub fn parse(name: &str, dim: usize) -> Result<Self> {
        match name {
            "line" => {
                let mut v = vec![0.0; dim.max(1)];
                v[0] = 1.0;
                Ok(PathKind::Line(v))
            }
            "paper_2d" => Ok(PathKind::Benchmark2d),
            "cos_exp" => Ok(PathKind::CosExp),
            "gp_rbf" => Ok(PathKind::GpRbf { dim: dim.max(1), gamma: 5.0 }),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Samples a path of the given kind at `n_samples` equally spaced times.
/// `seed` only matters for `GpRbf`.
pub fn synth_path(kind: &PathKind, n_samples: usize, seed: u64) -> Result<PiecewiseLinearPath> {
    if n_samples < 2 {
        return Err(Error::TooFewRows(n_samples));
    }
    let times: Vec<f64> = (0..n_samples)
        .map(|i| if i + 1 == n_samples { 1.0 } else { i as f64 / (n_samples - 1) as f64 })
        .collect();
    let (dim, mut values) = match kind {
        PathKind::Line(v) => {
            if v.is_empty() {
                return Err(Error::InvalidPath("empty direction".into()));
            }
            let values = times.iter().flat_map(|&t| v.iter().map(move |c| t * c)).collect();
            (v.len(), values)
        }
        PathKind::Benchmark2d => {
            let values = times
                .iter()
                .flat_map(|&t| [libm::sin(15.0 * t), libm::cos(30.0 * t) + 3.0 * libm::exp(t)])
                .collect();
            (2, values)
        }
        PathKind::CosExp => (1, times.iter().map(|&t| libm::cos(15.0 * t) + 3.0 * libm::exp(t)).collect()),
        PathKind::GpRbf { dim, gamma } => (*dim, gp_rbf_values(*dim, *gamma, n_samples, seed)?),
    };
    let base: Vec<f64> = values[..dim].to_vec();
    for row in values.chunks_exact_mut(dim) {
        for (v, b) in row.iter_mut().zip(&base) {
            *v -= b;
        }
    }
    PiecewiseLinearPath::new(times, values, dim)
}

fn gp_rbf_values(dim: usize, gamma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidPath("dimension must be at least 1".into()));
    }
    let grid: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = grid[i] - grid[j];
            gram[i * n + j] = libm::exp(-gamma * d * d);
        }
    }
    let mut jitter = JITTER_START;
    let factor = loop {
        let mut a = gram.clone();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        if let Some(l) = cholesky(&a, n) {
            break l;
        }
        if jitter >= JITTER_MAX {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        jitter = (2.0 * jitter).min(JITTER_MAX);
    };
    let mut values = vec![0.0; n * dim];
    let mut z = vec![0.0; n];
    for c in 0..dim {
        fill_normal(seed, Role::PathChannel { channel: c as u32 }, 1.0, &mut z);
        for (i, v) in lower_mul(&factor, &z).into_iter().enumerate() {
            values[i * dim + c] = v;
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_kind() {
        let p = synth_path(&PathKind::parse("line", 1).unwrap(), 2, 0).unwrap();
        assert_eq!(p.times(), &[0.0, 1.0]);
        assert_eq!(p.end_point(), &[1.0]);
    }

    #[test]
    fn benchmark_path_values() {
        let p = synth_path(&PathKind::Benchmark2d, 100, 0).unwrap();
        assert_eq!(p.len(), 100);
        assert_eq!(p.point(0), &[0.0, 0.0]);
        let t = p.times()[37];
        let expected = [libm::sin(15.0 * t), libm::cos(30.0 * t) + 3.0 * libm::exp(t) - 4.0];
        assert!((p.point(37)[0] - expected[0]).abs() < 1e-14);
        assert!((p.point(37)[1] - expected[1]).abs() < 1e-14);
    }

    #[test]
    fn gp_paths_are_deterministic() {
        let kind = PathKind::parse("gp_rbf", 2).unwrap();
        let a = synth_path(&kind, 50, 9).unwrap();
        let b = synth_path(&kind, 50, 9).unwrap();
        let c = synth_path(&kind, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.point(0), &[0.0, 0.0]);
    }

    #[test]
    fn unknown_kind() {
        assert!(matches!(PathKind::parse("spiral", 1), Err(Error::UnknownKind(_))));
        assert!(synth_path(&PathKind::CosExp, 1, 0).is_err());
    }
}
