//! Reinforcement-learning environment around one IRS-NOMA cell.
//!
//! The agent observes the BS -> IRS channel and the SINRs its previous
//! action produced. The IRS -> user channels stay inside the environment.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{path_loss_linear, sample_scenario, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::noma::{evaluate_noma, RateReport};

/// Wraps a phase into `[0, 2pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly 2pi
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// IRS phase shifts, one per element, each in `[0, 2pi)`. The reflection
/// coefficients `e^{j theta}` are unit-modulus by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    /// Wraps every entry into `[0, 2pi)`. Non-finite phases are rejected.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("phase vector".into()));
        }
        Ok(PhaseVector(theta.into_iter().map(wrap_phase).collect()))
    }

    pub fn zeros(num_elements: usize) -> Self {
        PhaseVector(vec![0.0; num_elements])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.0.iter().map(|&t| Complex64::cis(t)).collect()
    }
}

impl std::ops::Deref for PhaseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// Real parts of `h_t` followed by imaginary parts.
    pub h_t_parts: Vec<f64>,
    pub prev_phases: Vec<f64>,
    pub prev_sinrs: Vec<f64>,
}

impl EnvState {
    /// `[h_t parts, prev_phases, prev_sinrs]`, length 3M + K.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.h_t_parts.clone();
        out.extend_from_slice(&self.prev_phases);
        out.extend_from_slice(&self.prev_sinrs);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    /// Sum rate minus the best sum rate seen before this step.
    pub reward: f64,
    pub sum_rate: f64,
    pub is_new_max: bool,
    pub rates: RateReport,
}

#[derive(Debug, Clone, PartialEq)]
enum ChannelMode {
    /// New realization on every reset.
    Fresh,
    /// The same realization for every episode.
    Fixed(ChannelRealization),
}

/// Single-owner environment. Independent instances can run on different threads.
#[derive(Debug, Clone)]
pub struct IrsEnv {
    config: SystemConfig,
    mode: ChannelMode,
    channels: Option<ChannelRealization>,
    state: Option<EnvState>,
    running_max: f64,
    h_t_scale: f64,
}

impl IrsEnv {
    /// Environment that draws a fresh channel realization at every reset.
    pub fn new(config: SystemConfig) -> Result<Self> {
        Self::build(config, ChannelMode::Fresh)
    }

    /// Environment that keeps `channels` across resets.
    pub fn with_fixed_channel(config: SystemConfig, channels: ChannelRealization) -> Result<Self> {
        if channels.num_elements() != config.num_elements {
            return Err(Error::dim("fixed channel elements", config.num_elements, channels.num_elements()));
        }
        if channels.num_users() != config.num_users {
            return Err(Error::dim("fixed channel users", config.num_users, channels.num_users()));
        }
        Self::build(config, ChannelMode::Fixed(channels))
    }

    fn build(config: SystemConfig, mode: ChannelMode) -> Result<Self> {
        config.validate()?;
        let pl = path_loss_linear(
            config.dist_bs_irs_m,
            config.pl_exp_bs_irs,
            config.ref_loss_db,
            config.ref_dist_m,
        )?;
        Ok(IrsEnv {
            config,
            mode,
            channels: None,
            state: None,
            running_max: 0.0,
            h_t_scale: 1.0 / pl.sqrt(),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// Length of [`IrsEnv::observed_state_vector`]: 2M + K.
    pub fn observation_dim(&self) -> usize {
        2 * self.config.num_elements + self.config.num_users
    }

    pub fn action_dim(&self) -> usize {
        self.config.num_elements
    }

    pub fn running_max(&self) -> f64 {
        self.running_max
    }

    /// The BS -> IRS channel of the current episode, if reset has been called.
    pub fn h_t(&self) -> Option<&[Complex64]> {
        self.channels.as_ref().map(|c| c.h_t.as_slice())
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<EnvState> {
        let channels = match &self.mode {
            ChannelMode::Fresh => sample_scenario(&self.config, rng)?,
            ChannelMode::Fixed(c) => c.clone(),
        };
        let m = self.config.num_elements;
        let mut h_t_parts: Vec<f64> = channels.h_t.iter().map(|z| z.re).collect();
        h_t_parts.extend(channels.h_t.iter().map(|z| z.im));
        let state = EnvState {
            h_t_parts,
            prev_phases: vec![0.0; m],
            prev_sinrs: vec![0.0; self.config.num_users],
        };
        self.channels = Some(channels);
        self.running_max = 0.0;
        self.state = Some(state.clone());
        Ok(state)
    }

    pub fn step(&mut self, action: &PhaseVector) -> Result<StepOutcome> {
        let channels = self
            .channels
            .as_ref()
            .ok_or_else(|| Error::State("step called before reset".into()))?;
        if action.len() != self.config.num_elements {
            return Err(Error::dim("step action", self.config.num_elements, action.len()));
        }
        // PhaseVector is wrapped on construction; wrap again for vectors built elsewhere
        let phases: Vec<f64> = action.iter().map(|&t| wrap_phase(t)).collect();
        let rates = evaluate_noma(channels, &self.config, &phases)?;
        let sum_rate = rates.sum_rate;
        let reward = sum_rate - self.running_max;
        let is_new_max = sum_rate > self.running_max;
        if is_new_max {
            self.running_max = sum_rate;
        }
        let state = self.state.as_mut().expect("state is set with channels");
        state.prev_phases = phases;
        state.prev_sinrs = rates.per_user_sinr.clone();
        Ok(StepOutcome {
            next_state: state.clone(),
            reward,
            sum_rate,
            is_new_max,
            rates,
        })
    }

    /// Agent-facing observation: standardized `h_t` real parts, imaginary
    /// parts, then `log10(1 + sinr)` of the previous step.
    pub fn observed_state_vector(&self, state: &EnvState) -> Vec<f64> {
        let scale = self.h_t_scale;
        state
            .h_t_parts
            .iter()
            .map(|x| x * scale)
            .chain(state.prev_sinrs.iter().map(|g| (1.0 + g).log10()))
            .collect()
    }
}
