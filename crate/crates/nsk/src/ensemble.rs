//! Parallel versions of the core ensemble and Gram routines.
//!
//! Work items are keyed (realization index, pair index) and collected in
//! order, so results are bitwise identical to the sequential versions for
//! any number of threads.

use rayon::prelude::*;

use nsk_core::hom::{cross_corner, diagonal_values};
use nsk_core::inhom::solve_ode;
use nsk_core::resnet::{realization, Ensemble};
use nsk_core::{Gram, KernelParams, OdeMethod, Partition, PiecewiseLinearPath, SimConfig};

use crate::error::{Error, Result};

pub fn par_ensemble(config: &SimConfig, paths: &[&PiecewiseLinearPath], count: usize) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::Usage("need at least one realization".into()));
    }
    let realizations = (0..count as u64)
        .into_par_iter()
        .map(|r| realization(config, paths, r))
        .collect::<nsk_core::Result<Vec<_>>>()?;
    Ok(Ensemble {
        paths: paths.len(),
        realizations,
    })
}

/// Runs `f` for every realization index in parallel, in order.
pub fn par_map<T: Send>(count: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(f).collect()
}

pub fn par_gram_inhom(paths: &[PiecewiseLinearPath], params: &KernelParams, steps: usize, method: OdeMethod) -> Result<Gram> {
    let pairs: Vec<_> = Gram::upper_pairs(paths.len()).collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| {
            solve_ode(&paths[i], &paths[j], params, steps, method)
                .map(|t| t.last().xy)
                .map_err(|e| pair_error(e, i, j))
        })
        .collect::<nsk_core::Result<Vec<_>>>()?;
    Ok(Gram::from_upper(paths.len(), &upper))
}

pub fn par_gram_hom(paths: &[PiecewiseLinearPath], params: &KernelParams, grid: usize) -> Result<Gram> {
    let part = Partition::uniform(grid.max(1));
    let diags = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| diagonal_values(p, &part, params).map_err(|e| pair_error(e, i, i)))
        .collect::<nsk_core::Result<Vec<_>>>()?;
    let pairs: Vec<_> = Gram::upper_pairs(paths.len()).collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                return Ok(*diags[i].last().expect("non-empty diagonal"));
            }
            cross_corner(&paths[i], &paths[j], &part, &part, &diags[i], &diags[j], params).map_err(|e| pair_error(e, i, j))
        })
        .collect::<nsk_core::Result<Vec<_>>>()?;
    Ok(Gram::from_upper(paths.len(), &upper))
}

fn pair_error(e: nsk_core::Error, i: usize, j: usize) -> nsk_core::Error {
    nsk_core::Error::Pair {
        i,
        j,
        source: Box::new(e),
    }
}
