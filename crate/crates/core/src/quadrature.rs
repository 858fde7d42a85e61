//! Gauss quadrature rules (Golub–Welsch) and Gaussian expectations that
//! stay accurate for integrands with kinks at the origin.
//!
//! Tensor Gauss–Hermite rules converge only algebraically when the
//! integrand has a kink (ReLU, for instance, gives errors of order 1e-3 with
//! 200 nodes). The routines here split the domain along the kinks instead:
//! one-dimensional expectations use half-range rules on `(0, ∞)`, and
//! bivariate expectations go to polar coordinates where a ray through the
//! origin never crosses a kink of a positively homogeneous integrand.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::linalg::tridiagonal_eigen;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn from_jacobi(diag: &[f64], off: &[f64], total_mass: f64) -> Self {
        let (nodes, z0) = tridiagonal_eigen(diag, off).expect("Jacobi matrix eigenvalues converge");
        let mut pairs: Vec<(f64, f64)> = nodes
            .into_iter()
            .zip(z0)
            .map(|(x, v)| (x, total_mass * v * v))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    /// Gauss–Legendre on `[-1, 1]`.
    pub fn legendre(n: usize) -> Self {
        let diag = alloc::vec![0.0; n];
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / libm::sqrt(4.0 * k * k - 1.0)
            })
            .collect();
        Self::from_jacobi(&diag, &off, 2.0)
    }

    /// Generalised Gauss–Laguerre for the weight `u^alpha e^{-u}` on
    /// `(0, ∞)`, `alpha > -1`.
    pub fn laguerre(n: usize, alpha: f64) -> Self {
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0 + alpha).collect();
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                libm::sqrt(k * (k + alpha))
            })
            .collect();
        Self::from_jacobi(&diag, &off, libm::tgamma(alpha + 1.0))
    }

    /// Probabilists' Gauss–Hermite, weights normalised to a probability
    /// measure: `E[f(Z)] ≈ Σ w_k f(z_k)` for `Z ~ N(0, 1)`.
    pub fn hermite(n: usize) -> Self {
        let diag = alloc::vec![0.0; n];
        let off: Vec<f64> = (1..n).map(|k| libm::sqrt(k as f64)).collect();
        Self::from_jacobi(&diag, &off, 1.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `E[f(Z)]` for `Z ~ N(0, 1)`, folding the two half-lines onto `(0, ∞)`.
/// Converges geometrically when `f(z) + f(-z)` is a smooth function of `z²`
/// on `z > 0`, which covers `φ(z)²` for kinked `φ` such as ReLU.
pub fn expect_normal(f: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    // z = sqrt(2u): E f(Z) = 1/(2 sqrt(pi)) ∫ (f(z) + f(-z)) u^{-1/2} e^{-u} du
    let rule = GaussRule::laguerre(nodes, -0.5);
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| {
            let z = libm::sqrt(2.0 * u);
            w * (f(z) + f(-z))
        })
        .sum();
    sum / (2.0 * libm::sqrt(PI))
}

/// Product rule in polar coordinates for `E[g(Z₁, Z₂)]`, `Z` standard
/// bivariate normal: Gauss–Laguerre in `u = r²/2` and Gauss–Legendre on
/// each angular arc between caller-supplied break angles.
#[derive(Debug, Clone)]
pub struct PolarRule {
    radial: GaussRule,
    angular: GaussRule,
}

impl PolarRule {
    /// `nodes` radial nodes and `nodes / 4` (at least 8) angular nodes per
    /// arc.
    pub fn new(nodes: usize) -> Self {
        Self {
            radial: GaussRule::laguerre(nodes, 0.0),
            angular: GaussRule::legendre((nodes / 4).max(8)),
        }
    }

    /// `E[g(Z₁, Z₂)]` where `g` is smooth on every sector bounded by the
    /// rays at angles `breaks` (radians, any order, taken mod 2π).
    pub fn expect(&self, g: impl Fn(f64, f64) -> f64, breaks: &[f64]) -> f64 {
        let mut cuts: Vec<f64> = breaks.iter().map(|&b| wrap_angle(b)).collect();
        cuts.push(0.0);
        cuts.push(2.0 * PI);
        cuts.sort_by(f64::total_cmp);
        let radii: Vec<f64> = self.radial.nodes.iter().map(|&u| libm::sqrt(2.0 * u)).collect();
        let mut total = 0.0;
        for arc in cuts.windows(2) {
            let (a, b) = (arc[0], arc[1]);
            let half = 0.5 * (b - a);
            if half <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            for (&xi, &wa) in self.angular.nodes.iter().zip(&self.angular.weights) {
                let theta = mid + half * xi;
                let (s, c) = libm::sincos(theta);
                let radial: f64 = radii
                    .iter()
                    .zip(&self.radial.weights)
                    .map(|(&r, &wr)| wr * g(r * c, r * s))
                    .sum();
                total += half * wa * radial;
            }
        }
        total / (2.0 * PI)
    }
}

fn wrap_angle(b: f64) -> f64 {
    let r = libm::fmod(b, 2.0 * PI);
    if r < 0.0 {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Angles of the rays on which `α Z₁` or `β(γ Z₁ + √(1-γ²) Z₂)` vanishes.
pub(crate) fn zero_rays(gamma: f64) -> [f64; 4] {
    let theta0 = libm::acos(gamma.clamp(-1.0, 1.0));
    [FRAC_PI_2, 3.0 * FRAC_PI_2, theta0 + FRAC_PI_2, theta0 + 3.0 * FRAC_PI_2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = GaussRule::legendre(10);
        let int = |f: &dyn Fn(f64) -> f64| -> f64 { r.nodes.iter().zip(&r.weights).map(|(&x, &w)| w * f(x)).sum() };
        assert_abs_diff_eq!(int(&|_| 1.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(&|x| x.powi(18)), 2.0 / 19.0, epsilon = 1e-14);
    }

    #[test]
    fn laguerre_moments() {
        // ∫ u^k e^{-u} du = k!
        let r = GaussRule::laguerre(20, 0.0);
        let m5: f64 = r.nodes.iter().zip(&r.weights).map(|(&u, &w)| w * u.powi(5)).sum();
        assert_abs_diff_eq!(m5, 120.0, epsilon = 1e-9);
        let r = GaussRule::laguerre(200, 0.0);
        let m0: f64 = r.weights.iter().sum();
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hermite_moments() {
        let r = GaussRule::hermite(30);
        let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(&z, &w)| w * z.powi(4)).sum();
        assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_expectations_with_kinks() {
        assert_abs_diff_eq!(expect_normal(|z| z * z, 50), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(expect_normal(|z| z.max(0.0).powi(2), 50), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(expect_normal(|z| z.max(0.0).powi(4), 50), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(expect_normal(libm::cos, 50), libm::exp(-0.5), epsilon = 1e-13);
    }

    #[test]
    fn polar_rule_handles_relu_products() {
        let rule = PolarRule::new(64);
        let gamma: f64 = 0.3;
        let s = libm::sqrt(1.0 - gamma * gamma);
        let v = rule.expect(|z1, z2| z1.max(0.0) * (gamma * z1 + s * z2).max(0.0), &zero_rays(gamma));
        let closed = (PI * gamma + s - gamma * libm::acos(gamma)) / (2.0 * PI);
        assert_abs_diff_eq!(v, closed, epsilon = 1e-14);
    }
}
