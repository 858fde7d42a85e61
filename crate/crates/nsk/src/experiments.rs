//! Monte Carlo experiments: width and depth convergence, Gaussianity of the
//! readout, and the two figure recipes built from them.

use serde::Serialize;

use nsk_core::hom::{cross_corner, diagonal_values};
use nsk_core::path::{synth_path, PathKind};
use nsk_core::resnet::{cde_euler, init_weights};
use nsk_core::rng::sub_seed;
use nsk_core::{Activation, KernelParams, Mode, Partition, PiecewiseLinearPath, SimConfig};

use crate::ensemble::{par_ensemble, par_map};
use crate::error::{Error, Result};
use crate::stats::{self, KsResult, SlopeFit};

/// Namespace of the synthetic input paths drawn for an experiment.
pub const PATH_TAG: u64 = 0x7061_7468;
/// Observation count of the GP-RBF inputs.
pub const GP_SAMPLES: usize = 50;
/// Observation count of the deterministic benchmark path.
pub const BENCHMARK_SAMPLES: usize = 100;

/// Two independent GP-RBF sample paths (`exp(-5(s-t)²)` on `[-2, 2]`).
pub fn gp_pair(seed: u64, dim: usize) -> Result<(PiecewiseLinearPath, PiecewiseLinearPath)> {
    let kind = PathKind::GpRbf { dim, gamma: 5.0 };
    let x = synth_path(&kind, GP_SAMPLES, sub_seed(seed, PATH_TAG, 0))?;
    let y = synth_path(&kind, GP_SAMPLES, sub_seed(seed, PATH_TAG, 1))?;
    Ok((x, y))
}

pub fn benchmark_path() -> Result<PiecewiseLinearPath> {
    Ok(synth_path(&PathKind::Benchmark2d, BENCHMARK_SAMPLES, 0)?)
}

/// `K^{x,y}(1, 1)` of the homogeneous kernel on a uniform grid.
pub fn hom_kernel(x: &PiecewiseLinearPath, y: &PiecewiseLinearPath, params: &KernelParams, grid: usize) -> Result<f64> {
    let part = Partition::uniform(grid);
    let dx = diagonal_values(x, &part, params)?;
    let dy = diagonal_values(y, &part, params)?;
    Ok(cross_corner(x, y, &part, &part, &dx, &dy, params)?)
}

fn hom_config(params: &KernelParams, width: usize, depth: usize, dim: usize, seed: u64) -> Result<SimConfig> {
    Ok(SimConfig::new(width, dim, Partition::uniform(depth), Mode::Homogeneous, params.clone(), seed)?)
}

fn check_counts(name: &str, values: &[usize]) -> Result<()> {
    if values.is_empty() || values.contains(&0) {
        return Err(Error::Usage(format!("{name} must be a non-empty list of positive integers")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct WidthSweep {
    pub params: KernelParams,
    pub widths: Vec<usize>,
    pub depth: usize,
    pub realizations: usize,
    pub seed: u64,
    pub x: PiecewiseLinearPath,
    pub y: PiecewiseLinearPath,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthRow {
    pub n: usize,
    pub mse: f64,
    /// Standard error of the MSE estimate.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthReport {
    /// Kernel on the network's own depth-`M` partition.
    pub target: f64,
    pub rows: Vec<WidthRow>,
    pub fit: SlopeFit,
}

/// Mean squared error of `(1/N)⟨S(x), S(y)⟩` against the homogeneous kernel
/// for each width. Every width reuses the same seed.
pub fn width_sweep(spec: &WidthSweep) -> Result<WidthReport> {
    check_counts("widths", &spec.widths)?;
    let target = hom_kernel(&spec.x, &spec.y, &spec.params, spec.depth)?;
    let mut rows = Vec::with_capacity(spec.widths.len());
    for &n in &spec.widths {
        let cfg = hom_config(&spec.params, n, spec.depth, spec.x.dim(), spec.seed)?;
        let ens = par_ensemble(&cfg, &[&spec.x, &spec.y], spec.realizations).map_err(|e| e.in_stage(format!("width {n}")))?;
        let sq: Vec<f64> = ens.inner_products(0, 1).iter().map(|v| (v - target) * (v - target)).collect();
        let (mse, stderr) = stats::mean_and_stderr(&sq);
        rows.push(WidthRow { n, mse, stderr });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let mses: Vec<f64> = rows.iter().map(|r| r.mse).collect();
    let fit = stats::loglog_slope(&ns, &mses)?;
    Ok(WidthReport { target, rows, fit })
}

#[derive(Debug, Clone)]
pub struct DepthSweep {
    pub params: KernelParams,
    pub width: usize,
    pub depths: Vec<usize>,
    pub reference_depth: usize,
    pub realizations: usize,
    pub seed: u64,
    pub x: PiecewiseLinearPath,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub m: usize,
    pub w1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthReport {
    pub rows: Vec<DepthRow>,
    pub fit: SlopeFit,
}

/// W₁ between readouts at depth `M` and at the reference depth, the same
/// homogeneous weights being used at every depth within a realization.
pub fn depth_sweep(spec: &DepthSweep) -> Result<DepthReport> {
    check_counts("depths", &spec.depths)?;
    let cfg = hom_config(&spec.params, spec.width, spec.reference_depth, spec.x.dim(), spec.seed)?;
    let act = spec.params.activation();
    let mut all_depths = spec.depths.clone();
    all_depths.push(spec.reference_depth);
    let per_realization = par_map(spec.realizations, |r| {
        let w = init_weights(&cfg.realization(r));
        all_depths
            .iter()
            .map(|&m| {
                let s = cde_euler(&w, act, &spec.x, &Partition::uniform(m))?;
                Ok(w.readout.iter().zip(&s).map(|(a, b)| a * b).sum())
            })
            .collect::<nsk_core::Result<Vec<f64>>>()
            .map_err(|e| Error::from(e).in_stage(format!("realization {r}")))
    })?;
    let column = |k: usize| per_realization.iter().map(|v| v[k]).collect::<Vec<f64>>();
    let reference = column(spec.depths.len());
    let rows = spec
        .depths
        .iter()
        .enumerate()
        .map(|(k, &m)| Ok(DepthRow { m, w1: stats::wasserstein1_1d(&column(k), &reference)? }))
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let w1s: Vec<f64> = rows.iter().map(|r| r.w1).collect();
    let fit = stats::loglog_slope(&ms, &w1s)?;
    Ok(DepthReport { rows, fit })
}

#[derive(Debug, Clone)]
pub struct Gaussianity {
    pub params: KernelParams,
    pub widths: Vec<usize>,
    pub depth: usize,
    pub realizations: usize,
    /// Grid of the solver that supplies the limiting variance.
    pub variance_grid: usize,
    pub seed: u64,
    pub x: PiecewiseLinearPath,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianityRow {
    pub n: usize,
    pub ks: KsResult,
    #[serde(skip)]
    pub qq: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianityReport {
    pub variance: f64,
    pub rows: Vec<GaussianityRow>,
    /// KS statistic strictly decreasing in `N`.
    pub monotone: bool,
}

/// KS and QQ diagnostics of the readout `⟨ψ, S_1(x)⟩` against
/// `N(0, K(x, x)(1, 1))` for each width.
pub fn gaussianity(spec: &Gaussianity) -> Result<GaussianityReport> {
    check_counts("widths", &spec.widths)?;
    let variance = hom_kernel(&spec.x, &spec.x, &spec.params, spec.variance_grid)?;
    let mut rows = Vec::with_capacity(spec.widths.len());
    for &n in &spec.widths {
        let cfg = hom_config(&spec.params, n, spec.depth, spec.x.dim(), spec.seed)?;
        let ens = par_ensemble(&cfg, &[&spec.x], spec.realizations).map_err(|e| e.in_stage(format!("width {n}")))?;
        let readouts = ens.readouts(0);
        rows.push(GaussianityRow {
            n,
            ks: stats::ks_statistic(&readouts, variance)?,
            qq: stats::qq_points(&readouts, variance)?,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].ks.stat < w[0].ks.stat);
    Ok(GaussianityReport { variance, rows, monotone })
}

/// Width sweep of the mean-squared-error figure: linear homogeneous network
/// on a GP-RBF pair.
pub fn fig_mse(seed: u64) -> Result<WidthSweep> {
    let (x, y) = gp_pair(seed, 1)?;
    Ok(WidthSweep {
        params: KernelParams::new(1.0, 1.0, 0.0, Activation::Id)?,
        widths: vec![50, 100, 200, 400, 800],
        depth: 200,
        realizations: 250,
        seed,
        x,
        y,
    })
}

/// QQ figure: ReLU homogeneous network on the 2-d benchmark path.
pub fn fig_qq(seed: u64) -> Result<Gaussianity> {
    Ok(Gaussianity {
        params: KernelParams::new(0.5, 1.0, 1.2, Activation::Relu)?,
        widths: vec![10, 100, 500],
        depth: 100,
        realizations: 250,
        variance_grid: 1000,
        seed,
        x: benchmark_path()?,
    })
}
