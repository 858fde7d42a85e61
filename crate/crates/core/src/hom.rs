//! Two-parameter kernel of homogeneous controlled ResNets (weights shared
//! across layers) and the classical signature kernel.
//!
//! Both are computed with the explicit first-order marching scheme
//! `K(m,n) = K(m-1,n) + K(m,n-1) - K(m-1,n-1) + (σ_A² V_φ(Σ(m-1,n-1)) + σ_b²)⟨Δx_m, Δy_n⟩`,
//! which is also the exact infinite-width kernel of a network whose layers
//! are the partition steps.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gram::Gram;
use crate::inhom::PSD_CLAMP_TOL;
use crate::params::KernelParams;
use crate::path::{Partition, PiecewiseLinearPath};
use crate::vphi::{v_phi, Psd2};

/// Kernel values on a rectangular grid, `values[i * t_len + j] = K(s_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSurface {
    pub s_grid: Partition,
    pub t_grid: Partition,
    pub values: Vec<f64>,
    /// `K^{x,x}(s_i, s_i)`; empty for the plain signature kernel.
    pub diag_xx: Vec<f64>,
    /// `K^{y,y}(t_j, t_j)`; empty for the plain signature kernel.
    pub diag_yy: Vec<f64>,
}

impl KernelSurface {
    pub fn rows(&self) -> usize {
        self.s_grid.points().len()
    }

    pub fn cols(&self) -> usize {
        self.t_grid.points().len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    /// `K(1, 1)`.
    pub fn corner(&self) -> f64 {
        *self.values.last().expect("surface is never empty")
    }

    /// Value at the grid point nearest to `(s, t)`.
    pub fn nearest(&self, s: f64, t: f64) -> f64 {
        self.get(self.s_grid.nearest(s), self.t_grid.nearest(t))
    }
}

/// Gram matrix of increments, `g[m * cols + n] = ⟨Δx_m, Δy_n⟩`.
fn increment_products(x: &PiecewiseLinearPath, d1: &Partition, y: &PiecewiseLinearPath, d2: &Partition) -> Vec<f64> {
    let dim = x.dim();
    let dx = x.increments(d1);
    let dy = y.increments(d2);
    let mut out = Vec::with_capacity(d1.depth() * d2.depth());
    for a in dx.chunks_exact(dim) {
        out.extend(dy.chunks_exact(dim).map(|b| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()));
    }
    out
}

fn update(params: &KernelParams, sxx: f64, k: f64, syy: f64, m: usize, n: usize) -> Result<f64> {
    let sigma = Psd2::clamped(sxx, k, syy, PSD_CLAMP_TOL).ok_or(Error::SurfaceBreakdown { m, n })?;
    Ok(params.drift(v_phi(params.activation(), &sigma)?))
}

/// `K^{x,x}(s_m, s_m)` for every point of `part`.
///
/// The `x`-against-`x` surface is symmetric, so only its lower triangle is
/// swept, keeping two rows. Entry `(m, n)` with `n <= m` needs the
/// diagonal only up to index `m - 1`, which is already known.
pub fn diagonal_values(x: &PiecewiseLinearPath, part: &Partition, params: &KernelParams) -> Result<Vec<f64>> {
    let m_max = part.depth();
    let g = increment_products(x, part, x, part);
    let s0 = params.init_var();
    let mut diag = Vec::with_capacity(m_max + 1);
    diag.push(s0);
    let mut prev = vec![s0; m_max + 1];
    let mut cur = vec![s0; m_max + 1];
    for m in 1..=m_max {
        cur[0] = s0;
        for n in 1..=m {
            // K(m-1, m) = K(m, m-1) by symmetry
            let up = if n == m { cur[m - 1] } else { prev[n] };
            let lag = prev[n - 1];
            let inc = g[(m - 1) * m_max + (n - 1)];
            let drift = if inc == 0.0 { 0.0 } else { update(params, diag[m - 1], lag, diag[n - 1], m, n)? * inc };
            cur[n] = up + cur[n - 1] - lag + drift;
        }
        diag.push(cur[m]);
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(diag)
}

/// Row-major sweep of the cross surface given both diagonals. Returns every
/// row if `keep_all`, otherwise only the last one.
fn cross_sweep(
    g: &[f64],
    rows: usize,
    cols: usize,
    diag_xx: &[f64],
    diag_yy: &[f64],
    params: &KernelParams,
    keep_all: bool,
) -> Result<Vec<f64>> {
    let s0 = params.init_var();
    let mut all = if keep_all { Vec::with_capacity(rows * cols) } else { Vec::new() };
    let mut prev = vec![s0; cols];
    let mut cur = vec![s0; cols];
    if keep_all {
        all.extend_from_slice(&prev);
    }
    for m in 1..rows {
        cur[0] = s0;
        for n in 1..cols {
            let lag = prev[n - 1];
            let inc = g[(m - 1) * (cols - 1) + (n - 1)];
            let drift = if inc == 0.0 { 0.0 } else { update(params, diag_xx[m - 1], lag, diag_yy[n - 1], m, n)? * inc };
            cur[n] = prev[n] + cur[n - 1] - lag + drift;
        }
        if keep_all {
            all.extend_from_slice(&cur);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(if keep_all { all } else { prev })
}

/// The full surface `K^{x,y}` on `d1 × d2`: first the two diagonals, then
/// the cross surface using them in `Σ` at the lagged indices.
pub fn discrete_surface(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    d1: &Partition,
    d2: &Partition,
    params: &KernelParams,
) -> Result<KernelSurface> {
    x.check_same_dim(y)?;
    let diag_xx = diagonal_values(x, d1, params)?;
    let diag_yy = diagonal_values(y, d2, params)?;
    let g = increment_products(x, d1, y, d2);
    let values = cross_sweep(&g, d1.depth() + 1, d2.depth() + 1, &diag_xx, &diag_yy, params, true)?;
    Ok(KernelSurface {
        s_grid: d1.clone(),
        t_grid: d2.clone(),
        values,
        diag_xx,
        diag_yy,
    })
}

/// `K^{x,y}(1, 1)` from precomputed diagonals, keeping two rows only.
pub fn cross_corner(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    d1: &Partition,
    d2: &Partition,
    diag_xx: &[f64],
    diag_yy: &[f64],
    params: &KernelParams,
) -> Result<f64> {
    x.check_same_dim(y)?;
    let g = increment_products(x, d1, y, d2);
    let last = cross_sweep(&g, d1.depth() + 1, d2.depth() + 1, diag_xx, diag_yy, params, false)?;
    Ok(*last.last().expect("non-empty row"))
}

/// Signature kernel via
/// `k(m,n) = k(m-1,n) + k(m,n-1) - k(m-1,n-1)(1 - ⟨Δx_m, Δy_n⟩)`, boundary 1.
pub fn sig_kernel_surface(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    d1: &Partition,
    d2: &Partition,
) -> Result<KernelSurface> {
    x.check_same_dim(y)?;
    let g = increment_products(x, d1, y, d2);
    let (rows, cols) = (d1.depth() + 1, d2.depth() + 1);
    let mut values = vec![1.0; rows * cols];
    for m in 1..rows {
        for n in 1..cols {
            let inc = g[(m - 1) * (cols - 1) + (n - 1)];
            let lag = values[(m - 1) * cols + n - 1];
            values[m * cols + n] = values[(m - 1) * cols + n] + values[m * cols + n - 1] - lag * (1.0 - inc);
        }
    }
    Ok(KernelSurface {
        s_grid: d1.clone(),
        t_grid: d2.clone(),
        values,
        diag_xx: Vec::new(),
        diag_yy: Vec::new(),
    })
}

/// Identity-activation kernel from the signature kernel of the paths scaled
/// by `σ_A`: `(σ_a² + β)·k_sig(σ_A x, σ_A y)(s, t) − β` with `β = σ_b²/σ_A²`,
/// evaluated at the grid point of a uniform `grid_m` grid nearest `(s, t)`.
pub fn closed_form_hom_id(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    s: f64,
    t: f64,
    params: &KernelParams,
    grid_m: usize,
) -> Result<f64> {
    if grid_m < 2 {
        return Err(Error::InvalidParams("grid needs at least 2 steps".into()));
    }
    let part = Partition::uniform(grid_m);
    let w = params.sigma_w();
    let k = sig_kernel_surface(&x.scaled(w), &y.scaled(w), &part, &part)?.nearest(s, t);
    Ok(affine_from_sig(k, params))
}

/// `(σ_a² + σ_b²/σ_A²)·k − σ_b²/σ_A²`.
pub fn affine_from_sig(k: f64, params: &KernelParams) -> f64 {
    let beta = params.sigma_b() * params.sigma_b() / (params.sigma_w() * params.sigma_w());
    (params.init_var() + beta) * k - beta
}

/// Terminal kernel `K(x_i, x_j)(1, 1)` on a uniform grid of `grid_m`
/// steps; each path's diagonal is computed once.
pub fn gram_hom(paths: &[PiecewiseLinearPath], params: &KernelParams, grid_m: usize) -> Result<Gram> {
    let part = Partition::uniform(grid_m.max(1));
    let diags = paths
        .iter()
        .enumerate()
        .map(|(i, p)| diagonal_values(p, &part, params).map_err(|e| e.at_pair(i, i)))
        .collect::<Result<Vec<_>>>()?;
    Gram::from_pairs(paths.len(), |i, j| {
        if i == j {
            return Ok(*diags[i].last().expect("non-empty diagonal"));
        }
        cross_corner(&paths[i], &paths[j], &part, &part, &diags[i], &diags[j], params).map_err(|e| e.at_pair(i, j))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vphi::Activation;
    use approx::assert_abs_diff_eq;

    const I0_2: f64 = 2.279_585_302_336_067;

    fn params(a: f64, w: f64, b: f64, act: Activation) -> KernelParams {
        KernelParams::new(a, w, b, act).unwrap()
    }

    #[test]
    fn constant_paths_give_flat_surfaces() {
        let zero = PiecewiseLinearPath::constant(2).unwrap();
        let p = params(0.8, 1.0, 0.5, Activation::Relu);
        let part = Partition::uniform(8);
        let s = discrete_surface(&zero, &zero, &part, &part, &p).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.8 * 0.8));
        let k = sig_kernel_surface(&zero, &zero, &part, &part).unwrap();
        assert!(k.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn orthogonal_lines_give_unit_signature_kernel() {
        let e1 = PiecewiseLinearPath::line(&[1.0, 0.0]).unwrap();
        let e2 = PiecewiseLinearPath::line(&[0.0, 1.0]).unwrap();
        let part = Partition::uniform(16);
        let k = sig_kernel_surface(&e1, &e2, &part, &part).unwrap();
        assert!(k.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn line_corner_near_bessel_value() {
        let x = PiecewiseLinearPath::line(&[1.0]).unwrap();
        let part = Partition::uniform(512);
        let k = sig_kernel_surface(&x, &x, &part, &part).unwrap();
        assert_abs_diff_eq!(k.corner(), I0_2, epsilon = 5e-3);
        let p = params(1.0, 1.0, 0.0, Activation::Id);
        let s = discrete_surface(&x, &x, &part, &part, &p).unwrap();
        assert_abs_diff_eq!(s.corner(), I0_2, epsilon = 5e-3);
        let p = params(1.0, 1.0, 1.0, Activation::Id);
        let c = closed_form_hom_id(&x, &x, 1.0, 1.0, &p, 512).unwrap();
        assert_abs_diff_eq!(c, 2.0 * I0_2 - 1.0, epsilon = 1e-2);
    }

    #[test]
    fn diagonal_pass_matches_full_surface() {
        let x = PiecewiseLinearPath::new(alloc::vec![0.0, 0.4, 1.0], alloc::vec![0.0, 0.0, 1.0, -0.5, 0.3, 0.8], 2).unwrap();
        let p = params(0.5, 1.1, 0.7, Activation::Relu);
        let part = Partition::uniform(20);
        let s = discrete_surface(&x, &x, &part, &part, &p).unwrap();
        for i in 0..s.rows() {
            assert_eq!(s.get(i, i), s.diag_xx[i]);
            for j in 0..s.cols() {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
        let corner = cross_corner(&x, &x, &part, &part, &s.diag_xx, &s.diag_yy, &p).unwrap();
        assert_eq!(corner, s.corner());
    }
}
