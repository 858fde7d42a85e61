//! Truncated path signatures and the signature-kernel series
//! `Σ_n ⟨S_n(x), S_n(y)⟩`, used as an independent check on the PDE solvers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::path::PiecewiseLinearPath;

pub const MAX_LEVEL: usize = 15;
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Bound on the neglected levels, `Σ_{n>L} (‖x‖₁‖y‖₁)ⁿ/(n!)²`.
    pub tail_bound: f64,
    /// Set when the tail bound exceeds 1, i.e. the truncation is too coarse
    /// for the value to mean much.
    pub truncation_warning: bool,
}

/// Signature levels `0..=level`, level `n` stored densely with `dⁿ`
/// coefficients (multi-index in base `d`, first letter most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub dim: usize,
    pub levels: Vec<Vec<f64>>,
}

impl Signature {
    fn identity(dim: usize, level: usize) -> Self {
        let mut levels: Vec<Vec<f64>> = (0..=level).map(|n| vec![0.0; dim.pow(n as u32)]).collect();
        levels[0][0] = 1.0;
        Self { dim, levels }
    }

    /// `self ⊗ exp(v)` (Chen's identity for appending a linear piece with
    /// increment `v`). Level `n` of the product is
    /// `Σ_k S_{n-k} ⊗ v^{⊗k}/k!`, evaluated by Horner's rule from the top
    /// level down so lower levels are still the old ones when read.
    fn extend_linear(&mut self, v: &[f64]) {
        let d = self.dim;
        for n in (1..self.levels.len()).rev() {
            let mut acc = self.levels[0].clone();
            for j in 1..=n {
                let c = 1.0 / (n - j + 1) as f64;
                let mut next = Vec::with_capacity(acc.len() * d);
                for &a in &acc {
                    next.extend(v.iter().map(|&vi| a * vi * c));
                }
                for (x, s) in next.iter_mut().zip(&self.levels[j]) {
                    *x += s;
                }
                acc = next;
            }
            self.levels[n] = acc;
        }
    }

    /// Signature of `x` restricted to `[0, s]`, truncated at `level`.
    pub fn of_path(x: &PiecewiseLinearPath, s: f64, level: usize) -> Result<Self> {
        check_capacity(x.dim(), level)?;
        let mut sig = Self::identity(x.dim(), level);
        for piece in x.pieces_until(s) {
            sig.extend_linear(&piece);
        }
        Ok(sig)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
            .sum()
    }
}

fn check_capacity(dim: usize, level: usize) -> Result<()> {
    if level == 0 {
        return Err(Error::InvalidParams("truncation level must be at least 1".into()));
    }
    if level > MAX_LEVEL || dim > MAX_DIM {
        return Err(Error::Capacity(format!(
            "signature oracle supports level <= {MAX_LEVEL} and dimension <= {MAX_DIM}, got level {level}, dimension {dim}"
        )));
    }
    Ok(())
}

/// `Σ_{n>level} cⁿ/(n!)²`.
pub fn factorial_tail(c: f64, level: usize) -> f64 {
    let mut term = 1.0;
    for n in 1..=level {
        term *= c / (n as f64 * n as f64);
    }
    let mut tail = 0.0;
    let mut n = level;
    loop {
        n += 1;
        term *= c / (n as f64 * n as f64);
        tail += term;
        if term <= tail * f64::EPSILON || term == 0.0 || n > level + 1000 {
            break;
        }
    }
    tail
}

/// `Σ_{n<=level} ⟨S_n(x|[0,s]), S_n(y|[0,t])⟩` with the factorial-decay tail
/// bound.
pub fn sig_series_oracle(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    s: f64,
    t: f64,
    level: usize,
) -> Result<SeriesValue> {
    x.check_same_dim(y)?;
    let sx = Signature::of_path(x, s, level)?;
    let sy = Signature::of_path(y, t, level)?;
    let c = x.one_variation_until(s) * y.one_variation_until(t);
    let tail_bound = factorial_tail(c, level);
    Ok(SeriesValue {
        value: sx.inner(&sy),
        tail_bound,
        truncation_warning: tail_bound > 1.0,
    })
}
