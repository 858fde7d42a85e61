//! Piecewise-linear paths on the normalised interval `[0, 1]`.
//!
//! Every path starts at the origin (`x(0) = 0`). Derivatives are the
//! constant slopes of the linear pieces; at an interior knot the slope of
//! the interval to the right is used, at `t = 1` the slope of the last one.

mod synth;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use synth::{synth_path, PathKind};

/// Knots closer than this are merged when refining partitions.
const KNOT_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    times: Vec<f64>,
    /// Row-major, `times.len() * dim` entries.
    values: Vec<f64>,
    dim: usize,
}

/// Norms of a path: its 1-variation and the L² norm of its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNorms {
    pub one_var: f64,
    pub l2_deriv: f64,
}

impl PiecewiseLinearPath {
    /// Builds a path from knot times and row-major values, checking the
    /// basepoint and time conventions.
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be at least 1".into()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least two knots".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} values for {} knots of dimension {dim}",
                values.len(),
                times.len()
            )));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(Error::InvalidPath("times must start at 0 and end at 1".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite value".into()));
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidPath("path must start at the origin".into()));
        }
        Ok(Self { times, values, dim })
    }

    /// Sorts raw observations by time, maps the time range affinely onto
    /// `[0, 1]` and subtracts the first observation.
    pub fn from_observations(mut rows: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows(rows.len()));
        }
        let dim = rows[0].1.len();
        if dim == 0 {
            return Err(Error::InvalidPath("observations carry no values".into()));
        }
        for (t, v) in &rows {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: v.len() });
            }
            if !t.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPath("non-finite observation".into()));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateTimestamp(w[0].0));
        }
        let t0 = rows[0].0;
        let span = rows[rows.len() - 1].0 - t0;
        let last = rows.len() - 1;
        let origin = rows[0].1.clone();
        let mut times = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (k, (t, v)) in rows.iter().enumerate() {
            times.push(match k {
                0 => 0.0,
                k if k == last => 1.0,
                _ => (t - t0) / span,
            });
            values.extend(v.iter().zip(&origin).map(|(a, b)| a - b));
        }
        // Rescaling may collapse timestamps that were distinct but very close.
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("timestamps collapse after rescaling".into()));
        }
        Self::new(times, values, dim)
    }

    /// The straight line `t ↦ t·direction`.
    pub fn line(direction: &[f64]) -> Result<Self> {
        let mut values = vec![0.0; direction.len()];
        values.extend_from_slice(direction);
        Self::new(vec![0.0, 1.0], values, direction.len())
    }

    /// The path that stays at the origin.
    pub fn constant(dim: usize) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![0.0; 2 * dim], dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn end_point(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// Index of the linear piece used at time `t` (right-continuous, last
    /// piece at `t = 1`).
    pub fn segment(&self, t: f64) -> usize {
        let after = self.times.partition_point(|&s| s <= t);
        after.saturating_sub(1).min(self.times.len() - 2)
    }

    fn segment_slope_into(&self, k: usize, out: &mut [f64]) {
        let dt = self.times[k + 1] - self.times[k];
        let (a, b) = (self.point(k), self.point(k + 1));
        for ((o, x0), x1) in out.iter_mut().zip(a).zip(b) {
            *o = (x1 - x0) / dt;
        }
    }

    pub fn derivative_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.segment_slope_into(self.segment(t), &mut out);
        out
    }

    pub fn value_at_into(&self, t: f64, out: &mut [f64]) {
        if t >= 1.0 {
            out.copy_from_slice(self.end_point());
            return;
        }
        if t <= 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let k = self.segment(t);
        let frac = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let (a, b) = (self.point(k), self.point(k + 1));
        for ((o, x0), x1) in out.iter_mut().zip(a).zip(b) {
            *o = x0 + frac * (x1 - x0);
        }
    }

    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.value_at_into(t, &mut out);
        out
    }

    /// `x(b) - x(a)`.
    pub fn increment(&self, a: f64, b: f64) -> Vec<f64> {
        if a == b {
            return vec![0.0; self.dim];
        }
        let mut xa = vec![0.0; self.dim];
        let mut xb = vec![0.0; self.dim];
        self.value_at_into(a, &mut xa);
        self.value_at_into(b, &mut xb);
        xb.iter().zip(&xa).map(|(p, q)| p - q).collect()
    }

    /// Increments over every interval of `partition`, row-major
    /// (`partition.depth() * dim` entries).
    pub fn increments(&self, partition: &Partition) -> Vec<f64> {
        let pts = partition.points();
        let mut prev = vec![0.0; self.dim];
        let mut cur = vec![0.0; self.dim];
        self.value_at_into(pts[0], &mut prev);
        let mut out = Vec::with_capacity(partition.depth() * self.dim);
        for &t in &pts[1..] {
            self.value_at_into(t, &mut cur);
            out.extend(cur.iter().zip(&prev).map(|(p, q)| p - q));
            core::mem::swap(&mut prev, &mut cur);
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            dim: self.dim,
        }
    }

    pub fn norms(&self) -> PathNorms {
        let mut one_var = 0.0;
        let mut l2 = 0.0;
        for k in 0..self.len() - 1 {
            let dt = self.times[k + 1] - self.times[k];
            let sq = sq_dist(self.point(k), self.point(k + 1));
            one_var += libm::sqrt(sq);
            l2 += sq / dt;
        }
        PathNorms {
            one_var,
            l2_deriv: libm::sqrt(l2),
        }
    }

    /// 1-variation of the path restricted to `[0, s]`.
    pub fn one_variation_until(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let mut total = 0.0;
        let mut prev = vec![0.0; self.dim];
        let mut cur = vec![0.0; self.dim];
        for &t in self.times[1..].iter() {
            let t = t.min(s);
            self.value_at_into(t, &mut cur);
            total += libm::sqrt(sq_dist(&prev, &cur));
            core::mem::swap(&mut prev, &mut cur);
            if t >= s {
                break;
            }
        }
        total
    }

    /// Increments of the linear pieces of the path restricted to `[0, s]`.
    pub(crate) fn pieces_until(&self, s: f64) -> Vec<Vec<f64>> {
        let s = s.clamp(0.0, 1.0);
        let mut out = Vec::new();
        let mut prev = vec![0.0; self.dim];
        for &t in self.times[1..].iter() {
            let t = t.min(s);
            let cur = self.value_at(t);
            if t > 0.0 {
                out.push(cur.iter().zip(&prev).map(|(a, b)| a - b).collect());
            }
            prev = cur;
            if t >= s {
                break;
            }
        }
        out
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

/// `⟨ẋ_s, ẏ_t⟩`.
pub fn deriv_inner(x: &PiecewiseLinearPath, y: &PiecewiseLinearPath, s: f64, t: f64) -> Result<f64> {
    x.check_same_dim(y)?;
    Ok(dot(&x.derivative_at(s), &y.derivative_at(t)))
}

/// `∫_0^t ⟨ẋ_u, ẏ_u⟩ du`, exact for piecewise-linear paths.
pub fn integral_deriv_inner(x: &PiecewiseLinearPath, y: &PiecewiseLinearPath, t: f64) -> Result<f64> {
    x.check_same_dim(y)?;
    let t = t.clamp(0.0, 1.0);
    let knots = merge_knots(&[x.times(), y.times()]);
    let mut total = 0.0;
    let mut sx = vec![0.0; x.dim];
    let mut sy = vec![0.0; y.dim];
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1].min(t));
        if b <= a {
            break;
        }
        let mid = 0.5 * (a + b);
        x.segment_slope_into(x.segment(mid), &mut sx);
        y.segment_slope_into(y.segment(mid), &mut sy);
        total += dot(&sx, &sy) * (b - a);
    }
    Ok(total)
}

/// Strictly increasing partition `0 = t_0 < … < t_M = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPartition("need at least two points".into()));
        }
        if points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(Error::InvalidPartition("must start at 0 and end at 1".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPartition("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `M` equal steps. Panics if `m == 0`.
    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "a partition needs at least one step");
        let mut points: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        points[m] = 1.0;
        Self { points }
    }

    /// `steps` equal steps refined by every knot in `knot_sets`.
    pub fn refined(steps: usize, knot_sets: &[&[f64]]) -> Self {
        let uniform = Self::uniform(steps.max(1));
        let mut sets: Vec<&[f64]> = knot_sets.to_vec();
        sets.push(uniform.points());
        Self {
            points: merge_knots(&sets),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of intervals `M`.
    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    pub fn mesh(&self) -> f64 {
        self.steps().fold(0.0, f64::max)
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let after = self.points.partition_point(|&p| p < t);
        match after {
            0 => 0,
            n if n >= self.points.len() => self.points.len() - 1,
            n => {
                if t - self.points[n - 1] <= self.points[n] - t {
                    n - 1
                } else {
                    n
                }
            }
        }
    }
}

fn merge_knots(sets: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= KNOT_MERGE_TOL => {}
            _ => out.push(t),
        }
    }
    // Endpoints are exact even if a nearby knot won the merge.
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out[0] = 0.0;
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum()
}
