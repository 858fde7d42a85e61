//! The map `V_φ(Σ) = E_{z∼N(0,Σ)}[φ(z₁)φ(z₂)]` on 2×2 covariance blocks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::{zero_rays, PolarRule};

/// Slack allowed in `v12² ≤ v11·v22`.
pub const PSD_TOL: f64 = 1e-10;

/// Node count used when a tabulated activation is evaluated by quadrature.
pub const DEFAULT_QUADRATURE_NODES: usize = 200;

/// A 2×2 positive semidefinite matrix `[[v11, v12], [v12, v22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psd2 {
    pub v11: f64,
    pub v12: f64,
    pub v22: f64,
}

impl Psd2 {
    pub fn new(v11: f64, v12: f64, v22: f64) -> Result<Self> {
        let ok = v11.is_finite()
            && v12.is_finite()
            && v22.is_finite()
            && v11 >= 0.0
            && v22 >= 0.0
            && v12 * v12 <= v11 * v22 + PSD_TOL;
        if ok {
            Ok(Self { v11, v12, v22 })
        } else {
            Err(Error::InvalidPsd { v11, v12, v22 })
        }
    }

    /// The rank-one block `[[v, v], [v, v]]`.
    pub fn diagonal(v: f64) -> Result<Self> {
        Self::new(v, v, v)
    }

    /// Accepts an off-diagonal that overshoots `√(v11·v22)` by at most
    /// `tol·max(1, √(v11·v22))` and clamps it back onto the cone.
    pub fn clamped(v11: f64, v12: f64, v22: f64, tol: f64) -> Option<Self> {
        if !(v11.is_finite() && v12.is_finite() && v22.is_finite()) || v11 < 0.0 || v22 < 0.0 {
            return None;
        }
        let p = libm::sqrt(v11 * v22);
        let excess = v12.abs() - p;
        if excess <= 0.0 {
            Some(Self { v11, v12, v22 })
        } else if excess <= tol * p.max(1.0) {
            Some(Self {
                v11,
                v12: p.copysign(v12),
                v22,
            })
        } else {
            None
        }
    }

    pub fn swapped(self) -> Self {
        Self {
            v11: self.v22,
            v12: self.v12,
            v22: self.v11,
        }
    }

    /// Membership in `PSD₂(R)`: both diagonal entries in `[1/R, R]`.
    pub fn in_psd2_r(&self, r: f64) -> bool {
        let inside = |v: f64| v >= 1.0 / r && v <= r;
        inside(self.v11) && inside(self.v22)
    }
}

/// A user activation given by samples, linearly interpolated between them
/// and linearly extrapolated beyond the end samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    ys: Vec<f64>,
    bound: f64,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidActivation(format!(
                "need matching sample vectors of length >= 2, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidActivation("non-finite sample".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidActivation("abscissae must be strictly increasing".into()));
        }
        let bound = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y.abs() / (1.0 + x.abs()))
            .fold(0.0, f64::max);
        Ok(Self { xs, ys, bound })
    }

    /// The smallest `M` with `|φ(x)| ≤ M(1 + |x|)` over the samples.
    pub fn linear_bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = self.xs.partition_point(|&s| s <= x).clamp(1, n - 1) - 1;
        let (x0, x1, y0, y1) = (self.xs[k], self.xs[k + 1], self.ys[k], self.ys[k + 1]);
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Id,
    Relu,
    Erf,
    Tabulated(Tabulated),
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Id => x,
            Activation::Relu => x.max(0.0),
            Activation::Erf => libm::erf(x),
            Activation::Tabulated(t) => t.eval(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Id => "id",
            Activation::Relu => "relu",
            Activation::Erf => "erf",
            Activation::Tabulated(_) => "tabulated",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "id" | "identity" | "linear" => Ok(Activation::Id),
            "relu" => Ok(Activation::Relu),
            "erf" => Ok(Activation::Erf),
            other => Err(Error::InvalidParams(String::from("unknown activation `") + other + "`")),
        }
    }
}

/// Correlation `v12 / √(v11·v22)` clamped to `[-1, 1]`; zero for a
/// degenerate block with zero off-diagonal.
pub fn gamma(sigma: &Psd2) -> Result<f64> {
    let p = libm::sqrt(sigma.v11 * sigma.v22);
    if p == 0.0 {
        if sigma.v12 == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidPsd {
                v11: sigma.v11,
                v12: sigma.v12,
                v22: sigma.v22,
            })
        }
    } else {
        Ok((sigma.v12 / p).clamp(-1.0, 1.0))
    }
}

/// Closed forms for the identity, ReLU (arc-cosine) and erf activations;
/// tabulated activations fall back to [`v_phi_quadrature`].
pub fn v_phi(act: &Activation, sigma: &Psd2) -> Result<f64> {
    match act {
        Activation::Id => Ok(sigma.v12),
        Activation::Relu => {
            let p = libm::sqrt(sigma.v11 * sigma.v22);
            if p == 0.0 {
                // one coordinate is almost surely zero
                return Ok(0.0);
            }
            let g = (sigma.v12 / p).clamp(-1.0, 1.0);
            Ok(p / (2.0 * PI) * (PI * g + libm::sqrt(1.0 - g * g) - g * libm::acos(g)))
        }
        Activation::Erf => {
            let denom = libm::sqrt((0.5 + sigma.v11) * (0.5 + sigma.v22));
            Ok(2.0 / PI * libm::asin((sigma.v12 / denom).clamp(-1.0, 1.0)))
        }
        Activation::Tabulated(_) => v_phi_quadrature(act, sigma, DEFAULT_QUADRATURE_NODES),
    }
}

/// `E[φ(αZ₁)·φ(β(γZ₁ + √(1-γ²)Z₂))]` with `α = √v11`, `β = √v22`, by a
/// polar product rule split along the rays where either argument vanishes.
/// Independent of the closed forms; accurate to ~1e-12 for id, ReLU and erf
/// at `nodes = 200`.
pub fn v_phi_quadrature(act: &Activation, sigma: &Psd2, nodes: usize) -> Result<f64> {
    Ok(v_phi_with_rule(act, sigma, &PolarRule::new(nodes.max(10))))
}

/// [`v_phi_quadrature`] with a prebuilt rule, for repeated evaluation.
pub fn v_phi_with_rule(act: &Activation, sigma: &Psd2, rule: &PolarRule) -> f64 {
    let alpha = libm::sqrt(sigma.v11);
    let beta = libm::sqrt(sigma.v22);
    let p = alpha * beta;
    let g = if p == 0.0 { 0.0 } else { (sigma.v12 / p).clamp(-1.0, 1.0) };
    let s = libm::sqrt(1.0 - g * g);
    rule.expect(
        |z1, z2| act.apply(alpha * z1) * act.apply(beta * (g * z1 + s * z2)),
        &zero_rays(g),
    )
}
