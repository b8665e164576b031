use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DdpgAgent, ReplayBuffer, Transition};
use crate::config::TrainConfig;
use crate::env::{IrsEnv, PhaseVector, StepOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub sum_rate: f64,
    /// Best sum rate of the episode so far, this step included.
    pub best_sum_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub steps: Vec<StepRecord>,
    pub episode_best: Vec<f64>,
    /// Best sum rate over the whole run and the action that achieved it.
    pub best_sum_rate: f64,
    pub best_action: Option<PhaseVector>,
    pub critic_updates: usize,
}

impl TrainingLog {
    /// Mean sum rate over the steps in `[start, end)`.
    pub fn mean_sum_rate(&self, start: usize, end: usize) -> f64 {
        let window = &self.steps[start..end];
        window.iter().map(|s| s.sum_rate).sum::<f64>() / window.len() as f64
    }

    /// CSV with columns `episode,step,reward,sum_rate,best_sum_rate`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.steps.is_empty() {
            w.write_record(["episode", "step", "reward", "sum_rate", "best_sum_rate"])?;
        }
        for rec in &self.steps {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `cfg.num_episodes` episodes of `cfg.steps_per_episode` steps,
/// seeded from `cfg.seed`.
pub fn train(agent: &mut DdpgAgent, env: &mut IrsEnv, cfg: &TrainConfig) -> Result<TrainingLog> {
    train_with(agent, env, cfg, |_, _| {})
}

/// As [`train`], calling `on_step` with every executed action and its outcome.
///
/// Each step: act with OU noise, store the transition, and once the buffer
/// holds a full batch, sample it uniformly, fit the critic to the bootstrapped
/// targets, take one sampled policy-gradient step on the actor and blend both
/// targets toward their main networks.
pub fn train_with<F>(agent: &mut DdpgAgent, env: &mut IrsEnv, cfg: &TrainConfig, mut on_step: F) -> Result<TrainingLog>
where
    F: FnMut(&PhaseVector, &StepOutcome),
{
    cfg.validate()?;
    if agent.state_dim() != env.observation_dim() || agent.action_dim() != env.action_dim() {
        return Err(Error::dim("agent/environment", env.observation_dim(), agent.state_dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut log = TrainingLog {
        best_sum_rate: f64::NEG_INFINITY,
        ..TrainingLog::default()
    };

    for episode in 0..cfg.num_episodes {
        let state = env.reset(&mut rng)?;
        agent.noise.reset();
        let mut observation = env.observed_state_vector(&state);
        for step in 0..cfg.steps_per_episode {
            let action = agent.select_action(&observation, true, &mut rng)?;
            let outcome = env.step(&action)?;
            let next_observation = env.observed_state_vector(&outcome.next_state);
            on_step(&action, &outcome);

            if outcome.sum_rate > log.best_sum_rate {
                log.best_sum_rate = outcome.sum_rate;
                log.best_action = Some(action.clone());
            }
            log.steps.push(StepRecord {
                episode,
                step,
                reward: outcome.reward,
                sum_rate: outcome.sum_rate,
                best_sum_rate: env.running_max(),
            });

            buffer.push(Transition {
                state: observation,
                action: action.into_vec(),
                reward: outcome.reward,
                next_state: next_observation.clone(),
            })?;

            if buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut rng)?;
                let targets = agent.compute_targets(&batch)?;
                agent.critic_update(&batch, &targets)?;
                agent.actor_update(&batch)?;
                agent.soft_update_targets()?;
                log.critic_updates += 1;
                if !agent.is_finite() {
                    return Err(Error::NonFinite(format!("networks after episode {episode} step {step}")));
                }
            }

            observation = next_observation;
        }
        log.episode_best.push(env.running_max());
    }
    if log.steps.is_empty() {
        log.best_sum_rate = 0.0;
    }
    Ok(log)
}
