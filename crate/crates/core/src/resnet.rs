//! Finite-width controlled ResNets
//! `S_{i+1} = S_i + Σ_j (A_j φ(S_i) + b_j) Δx^j_{i+1}` with Gaussian
//! initialisation, in the homogeneous (shared weights) and inhomogeneous
//! (fresh weights every layer, variance scaled by `1/Δt_i`) variants.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::KernelParams;
use crate::path::{Partition, PiecewiseLinearPath};
use crate::rng::{derive_seed, fill_normal, sub_seed, Role};
use crate::vphi::Activation;

/// Hidden states are checked for overflow this often.
pub const FINITE_CHECK_EVERY: usize = 32;

const MODE_TAG: u64 = 0x6d6f6465;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Homogeneous,
    Inhomogeneous,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Homogeneous => "hom",
            Mode::Inhomogeneous => "inhom",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hom" | "homogeneous" => Ok(Mode::Homogeneous),
            "inhom" | "inhomogeneous" => Ok(Mode::Inhomogeneous),
            other => Err(Error::InvalidParams(alloc::format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub width: usize,
    pub dim: usize,
    pub partition: Partition,
    pub mode: Mode,
    pub params: KernelParams,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(width: usize, dim: usize, partition: Partition, mode: Mode, params: KernelParams, seed: u64) -> Result<Self> {
        if width == 0 || dim == 0 {
            return Err(Error::InvalidParams("width and path dimension must be at least 1".into()));
        }
        Ok(Self {
            width,
            dim,
            partition,
            mode,
            params,
            seed,
        })
    }

    /// The configuration of realization `r` of an ensemble.
    pub fn realization(&self, r: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, r),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layers {
    /// `A_j` (row-major `N×N`) and `b_j`, one per channel.
    Shared { matrices: Vec<Vec<f64>>, biases: Vec<Vec<f64>> },
    /// Drawn on demand from keyed streams; storing `d·M·N²` entries would
    /// not fit in memory for realistic sizes.
    PerLayer { seed: u64, steps: Vec<f64>, sigma_w: f64, sigma_b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResNetWeights {
    width: usize,
    dim: usize,
    /// Initial state `a`, entries `N(0, σ_a²)`.
    pub initial: Vec<f64>,
    /// Readout vector, entries `N(0, 1/N)`.
    pub readout: Vec<f64>,
    layers: Layers,
}

/// Weights of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub matrices: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl ResNetWeights {
    /// Homogeneous weights given explicitly.
    pub fn from_parts(initial: Vec<f64>, readout: Vec<f64>, matrices: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let width = initial.len();
        let dim = matrices.len();
        let ok = width > 0
            && dim > 0
            && readout.len() == width
            && biases.len() == dim
            && matrices.iter().all(|m| m.len() == width * width)
            && biases.iter().all(|b| b.len() == width);
        if !ok {
            return Err(Error::InvalidParams("inconsistent weight shapes".into()));
        }
        Ok(Self {
            width,
            dim,
            initial,
            readout,
            layers: Layers::Shared { matrices, biases },
        })
    }

    pub fn mode(&self) -> Mode {
        match self.layers {
            Layers::Shared { .. } => Mode::Homogeneous,
            Layers::PerLayer { .. } => Mode::Inhomogeneous,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weights of layer `i` (1-based, the step from `t_{i-1}` to `t_i`). For
    /// homogeneous weights every layer is the same.
    pub fn layer(&self, i: usize) -> Layer {
        match &self.layers {
            Layers::Shared { matrices, biases } => Layer {
                matrices: matrices.clone(),
                biases: biases.clone(),
            },
            Layers::PerLayer { .. } => {
                let mut layer = Layer {
                    matrices: vec![vec![0.0; self.width * self.width]; self.dim],
                    biases: vec![vec![0.0; self.width]; self.dim],
                };
                self.fill_layer(i, &mut layer);
                layer
            }
        }
    }

    fn fill_layer(&self, i: usize, layer: &mut Layer) {
        if let Layers::PerLayer { seed, steps, sigma_w, sigma_b } = &self.layers {
            let dt = steps[i - 1];
            let sd_a = sigma_w / libm::sqrt(self.width as f64 * dt);
            let sd_b = sigma_b / libm::sqrt(dt);
            for j in 0..self.dim {
                let key = (j as u32, i as u32);
                fill_normal(*seed, Role::Matrix { channel: key.0, layer: key.1 }, sd_a, &mut layer.matrices[j]);
                fill_normal(*seed, Role::Bias { channel: key.0, layer: key.1 }, sd_b, &mut layer.biases[j]);
            }
        }
    }
}

/// Samples all weights of `config`. Every object comes from its own keyed
/// stream, and the keys include the mode.
pub fn init_weights(config: &SimConfig) -> ResNetWeights {
    let n = config.width;
    let d = config.dim;
    let p = &config.params;
    let seed = sub_seed(config.seed, MODE_TAG, config.mode as u64);
    let mut initial = vec![0.0; n];
    fill_normal(seed, Role::Initial, p.sigma_a(), &mut initial);
    let mut readout = vec![0.0; n];
    fill_normal(seed, Role::Readout, 1.0 / libm::sqrt(n as f64), &mut readout);
    let layers = match config.mode {
        Mode::Homogeneous => {
            let sd_a = p.sigma_w() / libm::sqrt(n as f64);
            let matrices = (0..d)
                .map(|j| {
                    let mut m = vec![0.0; n * n];
                    fill_normal(seed, Role::Matrix { channel: j as u32, layer: 0 }, sd_a, &mut m);
                    m
                })
                .collect();
            let biases = (0..d)
                .map(|j| {
                    let mut b = vec![0.0; n];
                    fill_normal(seed, Role::Bias { channel: j as u32, layer: 0 }, p.sigma_b(), &mut b);
                    b
                })
                .collect();
            Layers::Shared { matrices, biases }
        }
        Mode::Inhomogeneous => Layers::PerLayer {
            seed,
            steps: config.partition.steps().collect(),
            sigma_w: p.sigma_w(),
            sigma_b: p.sigma_b(),
        },
    };
    ResNetWeights {
        width: n,
        dim: d,
        initial,
        readout,
        layers,
    }
}

/// One layer applied to a batch of states: for each state `s` with path
/// increment `dx`, `s += Σ_j dx_j (A_j φ(s) + b_j)`. Each matrix row is read
/// once for the whole batch.
fn apply_layer(layer: &Layer, act: &Activation, states: &mut [Vec<f64>], incs: &[&[f64]], phi: &mut [Vec<f64>]) {
    let n = states.first().map_or(0, Vec::len);
    for (p, s) in phi.iter_mut().zip(states.iter()) {
        for (pv, &sv) in p.iter_mut().zip(s) {
            *pv = act.apply(sv);
        }
    }
    for (j, (a, b)) in layer.matrices.iter().zip(&layer.biases).enumerate() {
        if incs.iter().all(|dx| dx[j] == 0.0) {
            continue;
        }
        for (r, row) in a.chunks_exact(n).enumerate() {
            for ((s, p), dx) in states.iter_mut().zip(phi.iter()).zip(incs) {
                let dxj = dx[j];
                if dxj != 0.0 {
                    let dotp: f64 = row.iter().zip(p).map(|(u, v)| u * v).sum();
                    s[r] += dxj * (dotp + b[r]);
                }
            }
        }
    }
}

fn check_finite(states: &[Vec<f64>], layer: usize) -> Result<()> {
    if states.iter().all(|s| s.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer })
    }
}

/// Runs the recursion over `part` for every path at once and returns the
/// terminal states. `on_layer` sees the states after each layer.
fn run(
    weights: &ResNetWeights,
    act: &Activation,
    part: &Partition,
    paths: &[&PiecewiseLinearPath],
    mut on_layer: impl FnMut(&[Vec<f64>]),
) -> Result<Vec<Vec<f64>>> {
    let d = weights.dim;
    for p in paths {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { left: d, right: p.dim() });
        }
    }
    let incs: Vec<Vec<f64>> = paths.iter().map(|p| p.increments(part)).collect();
    let mut states: Vec<Vec<f64>> = vec![weights.initial.clone(); paths.len()];
    let mut phi = states.clone();
    let mut layer = weights.layer(1);
    let shared = weights.mode() == Mode::Homogeneous;
    let depth = part.depth();
    for i in 1..=depth {
        if !shared {
            weights.fill_layer(i, &mut layer);
        }
        let step: Vec<&[f64]> = incs.iter().map(|v| &v[(i - 1) * d..i * d]).collect();
        apply_layer(&layer, act, &mut states, &step, &mut phi);
        if i % FINITE_CHECK_EVERY == 0 || i == depth {
            check_finite(&states, i)?;
        }
        on_layer(&states);
    }
    Ok(states)
}

fn readout_of(weights: &ResNetWeights, state: &[f64]) -> f64 {
    weights.readout.iter().zip(state).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// Hidden state at every partition point, starting with the initial one.
    pub trajectory: Vec<Vec<f64>>,
    pub readout: f64,
}

fn check_weights(weights: &ResNetWeights, config: &SimConfig) -> Result<()> {
    if weights.mode() != config.mode {
        return Err(Error::ModeMismatch {
            expected: config.mode.name(),
        });
    }
    if let Layers::PerLayer { steps, .. } = &weights.layers {
        if steps.len() != config.partition.depth() {
            return Err(Error::InvalidParams("weights were drawn for a different partition".into()));
        }
    }
    Ok(())
}

pub fn forward(weights: &ResNetWeights, config: &SimConfig, x: &PiecewiseLinearPath) -> Result<ForwardPass> {
    check_weights(weights, config)?;
    let mut trajectory = vec![weights.initial.clone()];
    let last = run(weights, config.params.activation(), &config.partition, &[x], |s| {
        trajectory.push(s[0].clone())
    })?;
    Ok(ForwardPass {
        readout: readout_of(weights, &last[0]),
        trajectory,
    })
}

/// Terminal hidden states for several paths under the same weights.
pub fn terminal_states(weights: &ResNetWeights, config: &SimConfig, paths: &[&PiecewiseLinearPath]) -> Result<Vec<Vec<f64>>> {
    check_weights(weights, config)?;
    run(weights, config.params.activation(), &config.partition, paths, |_| {})
}

/// Euler solution of the neural CDE `dS = Σ_j (A_j φ(S) + b_j) dx^j` on
/// `fine`, for homogeneous weights. This is the same recursion as
/// [`forward`], on a (typically much finer) partition.
pub fn cde_euler(weights: &ResNetWeights, act: &Activation, x: &PiecewiseLinearPath, fine: &Partition) -> Result<Vec<f64>> {
    if weights.mode() != Mode::Homogeneous {
        return Err(Error::ModeMismatch { expected: "homogeneous" });
    }
    Ok(run(weights, act, fine, &[x], |_| {})?.remove(0))
}

/// One realization of the inhomogeneous network's readout. With
/// `ẋ ≈ Δx/Δt` and the per-layer Gaussians read as Brownian increments
/// over `Δt`, this forward pass is an Euler–Maruyama step of
/// `dS = Σ_j (σ_A/√N) ẋ^j dW^j φ(S) + σ_b ẋ^j dB^j`.
pub fn sde_euler_inhom(config: &SimConfig, x: &PiecewiseLinearPath) -> Result<f64> {
    if config.mode != Mode::Inhomogeneous {
        return Err(Error::ModeMismatch { expected: "inhomogeneous" });
    }
    Ok(forward(&init_weights(config), config, x)?.readout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    /// Readout value per path.
    pub readouts: Vec<f64>,
    /// `(1/N)⟨S(x_i), S(x_j)⟩`, row-major `n×n`.
    pub inner_products: Vec<f64>,
}

/// Realization `r` of the ensemble seeded by `config.seed`.
pub fn realization(config: &SimConfig, paths: &[&PiecewiseLinearPath], r: u64) -> Result<RealizationOutput> {
    let cfg = config.realization(r);
    let weights = init_weights(&cfg);
    let wrap = |e: Error| Error::Realization {
        index: r as usize,
        source: Box::new(e),
    };
    let states = terminal_states(&weights, &cfg, paths).map_err(wrap)?;
    let n = paths.len();
    let scale = 1.0 / config.width as f64;
    let mut inner_products = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = scale * states[i].iter().zip(&states[j]).map(|(a, b)| a * b).sum::<f64>();
            inner_products[i * n + j] = v;
            inner_products[j * n + i] = v;
        }
    }
    Ok(RealizationOutput {
        readouts: states.iter().map(|s| readout_of(&weights, s)).collect(),
        inner_products,
    })
}

/// Realizations `0..count`, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub paths: usize,
    pub realizations: Vec<RealizationOutput>,
}

impl Ensemble {
    /// Readouts of path `i` across realizations.
    pub fn readouts(&self, i: usize) -> Vec<f64> {
        self.realizations.iter().map(|r| r.readouts[i]).collect()
    }

    /// `(1/N)⟨S(x_i), S(x_j)⟩` across realizations.
    pub fn inner_products(&self, i: usize, j: usize) -> Vec<f64> {
        self.realizations.iter().map(|r| r.inner_products[i * self.paths + j]).collect()
    }
}

/// Sequential Monte Carlo ensemble; realization `r` depends only on
/// `(config.seed, r)`.
pub fn mc_ensemble(config: &SimConfig, paths: &[&PiecewiseLinearPath], count: usize) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::InvalidParams("need at least one realization".into()));
    }
    let realizations = (0..count as u64)
        .map(|r| realization(config, paths, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        paths: paths.len(),
        realizations,
    })
}
