use alloc::format;

use crate::error::{Error, Result};
use crate::vphi::Activation;

/// `(σ_a, σ_A, σ_b, φ)`: initial-state scale, weight scale, bias scale and
/// activation, shared by both network families.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    sigma_a: f64,
    sigma_w: f64,
    sigma_b: f64,
    activation: Activation,
}

impl KernelParams {
    pub fn new(sigma_a: f64, sigma_w: f64, sigma_b: f64, activation: Activation) -> Result<Self> {
        let ok = sigma_a.is_finite() && sigma_w.is_finite() && sigma_b.is_finite();
        if !ok || sigma_a <= 0.0 || sigma_w <= 0.0 || sigma_b < 0.0 {
            return Err(Error::InvalidParams(format!(
                "need sigma_a > 0, sigma_A > 0, sigma_b >= 0; got ({sigma_a}, {sigma_w}, {sigma_b})"
            )));
        }
        Ok(Self {
            sigma_a,
            sigma_w,
            sigma_b,
            activation,
        })
    }

    pub fn sigma_a(&self) -> f64 {
        self.sigma_a
    }

    /// `σ_A`, the weight-matrix scale.
    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    /// Same parameters with weight scale 1 and bias scale `σ_b/σ_A`: the
    /// kernel for paths scaled by `σ_A` under these parameters is the
    /// original kernel.
    pub fn normalized(&self) -> Self {
        Self {
            sigma_a: self.sigma_a,
            sigma_w: 1.0,
            sigma_b: self.sigma_b / self.sigma_w,
            activation: self.activation.clone(),
        }
    }

    /// The per-step drift coefficient `σ_A² V_φ(Σ) + σ_b²`.
    #[inline]
    pub(crate) fn drift(&self, v: f64) -> f64 {
        self.sigma_w * self.sigma_w * v + self.sigma_b * self.sigma_b
    }

    pub(crate) fn init_var(&self) -> f64 {
        self.sigma_a * self.sigma_a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(KernelParams::new(1.0, 1.0, 0.0, Activation::Id).is_ok());
        assert!(KernelParams::new(0.0, 1.0, 0.0, Activation::Id).is_err());
        assert!(KernelParams::new(1.0, -1.0, 0.0, Activation::Id).is_err());
        assert!(KernelParams::new(1.0, 1.0, -0.1, Activation::Id).is_err());
        assert!(KernelParams::new(1.0, f64::NAN, 0.0, Activation::Id).is_err());
    }

    #[test]
    fn normalized_params() {
        let p = KernelParams::new(0.5, 2.0, 1.2, Activation::Relu).unwrap().normalized();
        assert_eq!((p.sigma_a(), p.sigma_w(), p.sigma_b()), (0.5, 1.0, 0.6));
    }
}
