//! Exhaustive search over a uniform phase grid: the performance upper bound
//! the learned policy is scored against, plus operation-count estimates for
//! the search and for a forward pass of the actor.

use std::f64::consts::TAU;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::env::PhaseVector;
use crate::error::{Error, Result};
use crate::noma::evaluate_noma;
use crate::par::{self, Execution};

/// Largest admissible `M * log2(N)`.
pub const GRID_GUARD_BITS: u32 = 40;

/// `N` phases per element, `{0, 2pi/N, ..., (N-1) 2pi/N}`, over `M` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    num_elements: usize,
    steps_per_element: usize,
}

impl GridSpec {
    pub fn new(num_elements: usize, steps_per_element: usize) -> Result<Self> {
        if num_elements == 0 || steps_per_element == 0 {
            return Err(Error::Parameter("grid needs at least one element and one step".into()));
        }
        let bits = num_elements as f64 * (steps_per_element as f64).log2();
        if bits > f64::from(GRID_GUARD_BITS) + 1e-9 {
            return Err(Error::GridTooLarge {
                elements: num_elements,
                steps: steps_per_element,
                limit: GRID_GUARD_BITS,
            });
        }
        Ok(GridSpec {
            num_elements,
            steps_per_element,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn steps_per_element(&self) -> usize {
        self.steps_per_element
    }

    pub fn step_size(&self) -> f64 {
        TAU / self.steps_per_element as f64
    }

    /// `N^M`.
    pub fn total(&self) -> u64 {
        (self.steps_per_element as u64).pow(self.num_elements as u32)
    }

    pub fn phase(&self, level: usize) -> f64 {
        level as f64 * self.step_size()
    }

    /// Per-element levels of a linear index; element 0 is the most significant digit.
    pub fn decode(&self, mut index: u64) -> Vec<usize> {
        let n = self.steps_per_element as u64;
        let mut levels = vec![0; self.num_elements];
        for slot in levels.iter_mut().rev() {
            *slot = (index % n) as usize;
            index /= n;
        }
        levels
    }

    pub fn encode(&self, levels: &[usize]) -> u64 {
        levels
            .iter()
            .fold(0u64, |acc, &l| acc * self.steps_per_element as u64 + l as u64)
    }

    pub fn phases(&self, levels: &[usize]) -> Vec<f64> {
        levels.iter().map(|&l| self.phase(l)).collect()
    }

    /// Nearest grid level of each phase (mod 2pi).
    pub fn snap_levels(&self, phases: &[f64]) -> Vec<usize> {
        let n = self.steps_per_element;
        phases
            .iter()
            .map(|&t| ((t.rem_euclid(TAU) / self.step_size()).round() as usize) % n)
            .collect()
    }

    pub fn snap(&self, phases: &[f64]) -> Vec<f64> {
        self.phases(&self.snap_levels(phases))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_phases: PhaseVector,
    pub best_levels: Vec<usize>,
    pub best_index: u64,
    pub best_sum_rate: f64,
    pub evaluations: u64,
}

/// Candidates within this much of the maximum count as tied. Rate-equivalent
/// grid points (e.g. a common rotation of every phase) differ only by
/// rounding, so exact comparison would make the winner arithmetic-dependent.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Best NOMA sum rate over every grid point. Among candidates within
/// [`TIE_TOLERANCE`] of the maximum the lowest lexicographic index wins;
/// `best_sum_rate` is the maximum itself.
pub fn exhaustive_search(channels: &ChannelRealization, config: &SystemConfig, grid: GridSpec) -> Result<OracleResult> {
    exhaustive_search_with(channels, config, grid, Execution::Parallel)
}

struct Partial {
    max: f64,
    /// `(index, rate)` of every candidate within tolerance of `max`, ascending.
    near_max: Vec<(u64, f64)>,
    evaluations: u64,
}

pub fn exhaustive_search_with(
    channels: &ChannelRealization,
    config: &SystemConfig,
    grid: GridSpec,
    exec: Execution,
) -> Result<OracleResult> {
    if grid.num_elements() != channels.num_elements() {
        return Err(Error::dim("oracle grid elements", channels.num_elements(), grid.num_elements()));
    }
    // one partition per level of the leading element
    let n = grid.steps_per_element();
    let per_partition = grid.total() / n as u64;
    let partials = par::try_map_indexed(n, exec, |lead| -> Result<Partial> {
        let start = lead as u64 * per_partition;
        let mut p = Partial {
            max: f64::NEG_INFINITY,
            near_max: Vec::new(),
            evaluations: 0,
        };
        for index in start..start + per_partition {
            let phases = grid.phases(&grid.decode(index));
            let rate = evaluate_noma(channels, config, &phases)?.sum_rate;
            p.evaluations += 1;
            if rate > p.max {
                p.max = rate;
                p.near_max.retain(|&(_, r)| r >= rate - TIE_TOLERANCE);
            }
            if rate >= p.max - TIE_TOLERANCE {
                p.near_max.push((index, rate));
            }
        }
        Ok(p)
    })?;

    let max = partials.iter().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("oracle sum rate".into()));
    }
    // anything within tolerance of the global max was within tolerance of its partition's max
    let (best_index, _) = partials
        .iter()
        .flat_map(|p| p.near_max.iter())
        .find(|&&(_, r)| r >= max - TIE_TOLERANCE)
        .copied()
        .expect("the maximum itself qualifies");
    let levels = grid.decode(best_index);
    Ok(OracleResult {
        best_phases: PhaseVector::new(grid.phases(&levels))?,
        best_levels: levels,
        best_index,
        best_sum_rate: max,
        evaluations: partials.iter().map(|p| p.evaluations).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complexity {
    /// `K * N^M`.
    pub exhaustive_ops: u64,
    /// `S * n * U * A`.
    pub ddpg_ops: u64,
    /// Set when either count overflowed and was clamped to `u64::MAX`.
    pub saturated: bool,
}

/// Operation counts of exhaustive search over `K` users, `M` elements and
/// `N` steps, and of an actor with `S` inputs, `n` hidden layers of `U`
/// units and `A` outputs.
pub fn complexity_estimate(
    num_users: u64,
    num_elements: u64,
    steps: u64,
    state_dim: u64,
    hidden_layers: u64,
    hidden_units: u64,
    action_dim: u64,
) -> Result<Complexity> {
    if [num_users, num_elements, steps, state_dim, hidden_layers, hidden_units, action_dim].contains(&0) {
        return Err(Error::Parameter("complexity_estimate arguments must be positive".into()));
    }
    let exhaustive = u32::try_from(num_elements)
        .ok()
        .and_then(|m| steps.checked_pow(m))
        .and_then(|grid| grid.checked_mul(num_users));
    let ddpg = state_dim
        .checked_mul(hidden_layers)
        .and_then(|x| x.checked_mul(hidden_units))
        .and_then(|x| x.checked_mul(action_dim));
    Ok(Complexity {
        exhaustive_ops: exhaustive.unwrap_or(u64::MAX),
        ddpg_ops: ddpg.unwrap_or(u64::MAX),
        saturated: exhaustive.is_none() || ddpg.is_none(),
    })
}
