//! Neural signature kernels and the randomly initialised controlled ResNets
//! whose infinite-width limits they describe.
//!
//! The crate is `no_std` (with `alloc`) and contains only numerics:
//!
//! * [`path`]: piecewise-linear paths on `[0, 1]`, partitions and the
//!   synthetic benchmark paths.
//! * [`vphi`]: the Gaussian expectation map `V_φ` on 2×2 covariance blocks,
//!   closed forms plus an independent quadrature route.
//! * [`inhom`]: the kernel of inhomogeneous (per-layer weights) networks:
//!   discrete recursion, ODE solver and closed forms.
//! * [`hom`]: the two-parameter neural signature kernel of homogeneous
//!   networks, the classical signature kernel, and a truncated signature
//!   series oracle in [`signature`].
//! * [`resnet`]: finite-width simulation with counter-keyed randomness
//!   ([`rng`]).
//!
//! File formats, statistics and the command line live in the `nsk` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod gram;
pub mod hom;
pub mod inhom;
pub mod linalg;
pub mod params;
pub mod path;
pub mod quadrature;
pub mod resnet;
pub mod rng;
pub mod signature;
pub mod vphi;

pub use error::{Error, Result};
pub use gram::Gram;
pub use hom::KernelSurface;
pub use inhom::{KernelTrajectory, KernelTriple, OdeMethod};
pub use params::KernelParams;
pub use path::{Partition, PiecewiseLinearPath};
pub use resnet::{Mode, ResNetWeights, SimConfig};
pub use vphi::{Activation, Psd2};
