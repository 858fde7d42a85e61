#![allow(dead_code)]

use nsk_core::path::{synth_path, PathKind};
use nsk_core::rng::{stream, Role};
use nsk_core::{Activation, KernelParams, PiecewiseLinearPath};
use rand_distr::{Distribution, StandardNormal, Uniform};

pub const I0_2: f64 = 2.279_585_302_336_067;

pub fn params(a: f64, w: f64, b: f64, act: Activation) -> KernelParams {
    KernelParams::new(a, w, b, act).unwrap()
}

pub fn line(v: &[f64]) -> PiecewiseLinearPath {
    PiecewiseLinearPath::line(v).unwrap()
}

/// Random walk with `knots` pieces at random times, rescaled so that
/// `‖ẋ‖_{L²} = norm`.
pub fn random_path(seed: u64, index: u64, knots: usize, dim: usize, norm: f64) -> PiecewiseLinearPath {
    let mut rng = stream(seed, Role::Derived { tag: 0xbeef, index });
    let u = Uniform::new(0.05, 1.0).unwrap();
    let mut gaps: Vec<f64> = (0..knots).map(|_| u.sample(&mut rng)).collect();
    let total: f64 = gaps.iter().sum();
    gaps.iter_mut().for_each(|g| *g /= total);
    let mut times = vec![0.0];
    for g in &gaps[..knots - 1] {
        times.push(times.last().unwrap() + g);
    }
    times.push(1.0);
    let mut values = vec![0.0; dim];
    for k in 0..knots {
        for c in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(values[k * dim + c] + z);
        }
    }
    let p = PiecewiseLinearPath::new(times, values, dim).unwrap();
    let l2 = p.norms().l2_deriv;
    p.scaled(norm / l2)
}

pub fn gp_path(seed: u64, dim: usize) -> PiecewiseLinearPath {
    synth_path(&PathKind::GpRbf { dim, gamma: 5.0 }, 50, seed).unwrap()
}

/// GP-RBF sample rescaled to `‖ẋ‖_{L²} = 1`.
pub fn gp_unit_path(seed: u64, dim: usize) -> PiecewiseLinearPath {
    let p = gp_path(seed, dim);
    let l2 = p.norms().l2_deriv;
    p.scaled(1.0 / l2)
}

pub fn benchmark_path() -> PiecewiseLinearPath {
    synth_path(&PathKind::Benchmark2d, 100, 0).unwrap()
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Smallest eigenvalue of a symmetric matrix given row-major.
pub fn min_eigenvalue(n: usize, values: &[f64]) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(n, n, values);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Least-squares slope of `log ys` against `log xs`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
