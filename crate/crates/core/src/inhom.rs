//! Kernel of inhomogeneous controlled ResNets (independent weights per
//! layer): the discrete recursion on a partition, the limiting ODE and its
//! closed forms.

use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::gram::Gram;
use crate::params::KernelParams;
use crate::path::{dot, integral_deriv_inner, Partition, PiecewiseLinearPath};
use crate::vphi::{v_phi, Psd2};

/// Off-diagonal overshoot tolerated (and clamped) before a covariance block
/// counts as having left the PSD cone.
pub(crate) const PSD_CLAMP_TOL: f64 = 1e-8;

/// `(κ^{x,x}, κ^{x,y}, κ^{y,y})` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTriple {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl KernelTriple {
    pub fn splat(v: f64) -> Self {
        Self { xx: v, xy: v, yy: v }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<KernelTriple>,
}

impl KernelTrajectory {
    pub fn last(&self) -> KernelTriple {
        *self.states.last().expect("trajectory has at least the initial state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeMethod {
    Euler,
    Rk4,
}

impl FromStr for OdeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(OdeMethod::Euler),
            "rk4" => Ok(OdeMethod::Rk4),
            other => Err(Error::InvalidParams(alloc::format!("unknown ODE method `{other}`"))),
        }
    }
}

/// Inner products of the increments of `x` and `y` over one step.
#[derive(Debug, Clone, Copy)]
struct Drivers {
    xx: f64,
    xy: f64,
    yy: f64,
}

/// The right-hand side `(σ_A² V_φ(Σ) + σ_b²)·driver` for all three
/// components, where `Σ` is assembled from `k`.
fn rhs(params: &KernelParams, k: KernelTriple, d: Drivers, step: usize) -> Result<KernelTriple> {
    let act = params.activation();
    let breakdown = || Error::PsdBreakdown { step };
    let sigma = Psd2::clamped(k.xx, k.xy, k.yy, PSD_CLAMP_TOL).ok_or_else(breakdown)?;
    let sxx = Psd2::diagonal(k.xx).map_err(|_| breakdown())?;
    let syy = Psd2::diagonal(k.yy).map_err(|_| breakdown())?;
    Ok(KernelTriple {
        xx: params.drift(v_phi(act, &sxx)?) * d.xx,
        xy: params.drift(v_phi(act, &sigma)?) * d.xy,
        yy: params.drift(v_phi(act, &syy)?) * d.yy,
    })
}

fn step_drivers(x: &PiecewiseLinearPath, y: &PiecewiseLinearPath, part: &Partition) -> Vec<Drivers> {
    let dim = x.dim();
    let dx = x.increments(part);
    let dy = y.increments(part);
    part.steps()
        .enumerate()
        .map(|(i, h)| {
            let (a, b) = (&dx[i * dim..(i + 1) * dim], &dy[i * dim..(i + 1) * dim]);
            Drivers {
                xx: dot(a, a) / h,
                xy: dot(a, b) / h,
                yy: dot(b, b) / h,
            }
        })
        .collect()
}

fn add(k: KernelTriple, f: KernelTriple, c: f64) -> KernelTriple {
    KernelTriple {
        xx: k.xx + c * f.xx,
        xy: k.xy + c * f.xy,
        yy: k.yy + c * f.yy,
    }
}

/// The coupled recursion
/// `κ(t_i) = κ(t_{i-1}) + (σ_A² V_φ(Σ(t_{i-1})) + σ_b²)⟨Δx, Δy⟩/Δt_i`
/// for `(xx, xy, yy)` started at `σ_a²`: the infinite-width kernel of the
/// network with this partition as its layer structure.
pub fn discrete_kernel(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    part: &Partition,
    params: &KernelParams,
) -> Result<KernelTrajectory> {
    x.check_same_dim(y)?;
    let drivers = step_drivers(x, y, part);
    let mut k = KernelTriple::splat(params.init_var());
    let mut states = Vec::with_capacity(drivers.len() + 1);
    states.push(k);
    for (i, d) in drivers.into_iter().enumerate() {
        k = add(k, rhs(params, k, d, i + 1)?, 1.0);
        states.push(k);
    }
    Ok(KernelTrajectory {
        times: part.points().to_vec(),
        states,
    })
}

/// Integrates the kernel ODE on `steps` uniform steps refined by the knots
/// of both paths, so that the derivatives are constant on every step.
pub fn solve_ode(
    x: &PiecewiseLinearPath,
    y: &PiecewiseLinearPath,
    params: &KernelParams,
    steps: usize,
    method: OdeMethod,
) -> Result<KernelTrajectory> {
    x.check_same_dim(y)?;
    if steps == 0 {
        return Err(Error::InvalidParams("need at least one step".into()));
    }
    let part = Partition::refined(steps, &[x.times(), y.times()]);
    match method {
        // one Euler step over a step with constant derivatives is exactly
        // one step of the recursion
        OdeMethod::Euler => discrete_kernel(x, y, &part, params),
        OdeMethod::Rk4 => {
            let drivers = step_drivers(x, y, &part);
            let mut k = KernelTriple::splat(params.init_var());
            let mut states = Vec::with_capacity(drivers.len() + 1);
            states.push(k);
            for (i, d) in drivers.into_iter().enumerate() {
                // drivers are already multiplied by the step size
                let k1 = rhs(params, k, d, i + 1)?;
                let k2 = rhs(params, add(k, k1, 0.5), d, i + 1)?;
                let k3 = rhs(params, add(k, k2, 0.5), d, i + 1)?;
                let k4 = rhs(params, add(k, k3, 1.0), d, i + 1)?;
                k = KernelTriple {
                    xx: k.xx + (k1.xx + 2.0 * k2.xx + 2.0 * k3.xx + k4.xx) / 6.0,
                    xy: k.xy + (k1.xy + 2.0 * k2.xy + 2.0 * k3.xy + k4.xy) / 6.0,
                    yy: k.yy + (k1.yy + 2.0 * k2.yy + 2.0 * k3.yy + k4.yy) / 6.0,
                };
                states.push(k);
            }
            Ok(KernelTrajectory {
                times: part.points().to_vec(),
                states,
            })
        }
    }
}

/// `(σ_a² + σ_b²/σ_A²)·exp(σ_A² ∫_0^t ⟨ẋ, ẏ⟩) − σ_b²/σ_A²`, the kernel for
/// the identity activation.
pub fn closed_form_id(x: &PiecewiseLinearPath, y: &PiecewiseLinearPath, t: f64, params: &KernelParams) -> Result<f64> {
    let w2 = params.sigma_w() * params.sigma_w();
    let beta = params.sigma_b() * params.sigma_b() / w2;
    let integral = integral_deriv_inner(x, y, t)?;
    Ok((params.init_var() + beta) * libm::exp(w2 * integral) - beta)
}

/// `(σ_a² + 2σ_b²/σ_A²)·exp((σ_A²/2) ∫_0^t |ẋ|²) − 2σ_b²/σ_A²`, the ReLU
/// kernel on the diagonal.
pub fn closed_form_relu_diag(x: &PiecewiseLinearPath, t: f64, params: &KernelParams) -> f64 {
    let w2 = params.sigma_w() * params.sigma_w();
    let beta = 2.0 * params.sigma_b() * params.sigma_b() / w2;
    let integral = integral_deriv_inner(x, x, t).expect("a path has its own dimension");
    (params.init_var() + beta) * libm::exp(0.5 * w2 * integral) - beta
}

/// Terminal kernel `κ(x_i, x_j)(1)` for every pair; each pair is solved
/// on its own.
pub fn gram(paths: &[PiecewiseLinearPath], params: &KernelParams, steps: usize, method: OdeMethod) -> Result<Gram> {
    Gram::from_pairs(paths.len(), |i, j| {
        solve_ode(&paths[i], &paths[j], params, steps, method)
            .map(|traj| traj.last().xy)
            .map_err(|e| e.at_pair(i, j))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vphi::Activation;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::E;

    fn params(a: f64, w: f64, b: f64, act: Activation) -> KernelParams {
        KernelParams::new(a, w, b, act).unwrap()
    }

    fn unit_line() -> PiecewiseLinearPath {
        PiecewiseLinearPath::line(&[1.0]).unwrap()
    }

    #[test]
    fn constant_paths_stay_at_initial_value() {
        let zero = PiecewiseLinearPath::constant(1).unwrap();
        let p = params(0.7, 1.3, 0.4, Activation::Relu);
        let traj = discrete_kernel(&zero, &zero, &Partition::uniform(10), &p).unwrap();
        assert!(traj.states.iter().all(|k| *k == KernelTriple::splat(0.7 * 0.7)));
        // x constant, y moving: k_xx and k_xy frozen, k_yy grows
        let traj = discrete_kernel(&zero, &unit_line(), &Partition::uniform(10), &p).unwrap();
        let last = traj.last();
        assert_eq!((last.xx, last.xy), (0.7 * 0.7, 0.7 * 0.7));
        assert!(last.yy > 0.7 * 0.7);
    }

    #[test]
    fn identity_kernel_on_line() {
        let p = params(1.0, 1.0, 0.0, Activation::Id);
        let x = unit_line();
        let d = discrete_kernel(&x, &x, &Partition::uniform(1000), &p).unwrap().last().xy;
        assert_abs_diff_eq!(d, E, epsilon = 3e-3);
        let r = solve_ode(&x, &x, &p, 1000, OdeMethod::Rk4).unwrap().last().xy;
        assert_abs_diff_eq!(r, E, epsilon = 1e-9);
        let p = params(1.0, 1.0, 1.0, Activation::Id);
        let r = solve_ode(&x, &x, &p, 1000, OdeMethod::Rk4).unwrap().last().xy;
        assert_abs_diff_eq!(r, 2.0 * E - 1.0, epsilon = 1e-8);
    }

    #[test]
    fn closed_forms() {
        let x = unit_line();
        let p = params(1.0, 1.0, 0.0, Activation::Id);
        assert_abs_diff_eq!(closed_form_id(&x, &x, 1.0, &p).unwrap(), E, epsilon = 1e-15);
        assert_eq!(closed_form_id(&x, &x, 0.0, &p).unwrap(), 1.0);
        let e1 = PiecewiseLinearPath::line(&[1.0, 0.0]).unwrap();
        let e2 = PiecewiseLinearPath::line(&[0.0, 1.0]).unwrap();
        let p2 = params(0.3, 2.0, 0.0, Activation::Id);
        assert_abs_diff_eq!(closed_form_id(&e1, &e2, 1.0, &p2).unwrap(), 0.09, epsilon = 1e-15);
        let pr = params(1.0, core::f64::consts::SQRT_2, 0.0, Activation::Relu);
        assert_abs_diff_eq!(closed_form_relu_diag(&x, 1.0, &pr), E, epsilon = 1e-14);
        let zero = PiecewiseLinearPath::constant(1).unwrap();
        assert_eq!(closed_form_relu_diag(&zero, 1.0, &pr), 1.0);
    }

    #[test]
    fn euler_is_the_recursion_on_the_refined_grid() {
        let x = PiecewiseLinearPath::new(alloc::vec![0.0, 0.3, 1.0], alloc::vec![0.0, 1.0, -0.5], 1).unwrap();
        let p = params(0.5, 1.0, 0.2, Activation::Erf);
        let a = solve_ode(&x, &x, &p, 10, OdeMethod::Euler).unwrap();
        let b = discrete_kernel(&x, &x, &Partition::refined(10, &[x.times()]), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("rk4".parse::<OdeMethod>().unwrap(), OdeMethod::Rk4);
        assert!("midpoint".parse::<OdeMethod>().is_err());
    }
}
