//! DDPG agent for IRS phase control: deterministic actor, scalar critic,
//! slowly tracking target copies of both, replay memory and OU exploration.
//!
//! The actor ends in `tanh`; output `o` maps to the phase `pi * (o + 1)`.
//! The critic sees the action in the same normalised `[-1, 1)` coordinates
//! (`theta / pi - 1`), so the actor's output feeds the critic unchanged.

mod noise;
mod replay;
mod train;

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng;

use crate::config::TrainConfig;
use crate::env::PhaseVector;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, DenseNet};

pub use noise::OuProcess;
pub use replay::{ReplayBuffer, Transition};
pub use train::{train, train_with, StepRecord, TrainingLog};

/// Scale applied to the actor's output layer at initialisation.
const ACTOR_OUTPUT_INIT_SCALE: f64 = 1e-3;

pub fn phase_from_actor_output(o: f64) -> f64 {
    PI * (o + 1.0)
}

pub fn normalize_phase(theta: f64) -> f64 {
    theta / PI - 1.0
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: DenseNet,
    pub critic: DenseNet,
    pub target_actor: DenseNet,
    pub target_critic: DenseNet,
    pub noise: OuProcess,
    state_dim: usize,
    action_dim: usize,
    cfg: TrainConfig,
}

impl DdpgAgent {
    /// Actor `S -> H -> H -> A` (relu, relu, tanh) and critic `S+A -> H -> H -> 1`
    /// (relu, relu, linear), targets initialised as copies.
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, cfg: &TrainConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden_units;
        let mut actor = DenseNet::new(
            &[state_dim, h, h, action_dim],
            &[Activation::Relu, Activation::Relu, Activation::Tanh],
            rng,
        )?;
        actor.scale_output_layer(ACTOR_OUTPUT_INIT_SCALE);
        let critic = DenseNet::new(
            &[state_dim + action_dim, h, h, 1],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            rng,
        )?;
        Self::from_networks(actor.clone(), critic.clone(), actor, critic, cfg)
    }

    pub fn from_networks(
        actor: DenseNet,
        critic: DenseNet,
        target_actor: DenseNet,
        target_critic: DenseNet,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let state_dim = actor.input_dim();
        let action_dim = actor.output_dim();
        if critic.input_dim() != state_dim + action_dim {
            return Err(Error::dim("critic input", state_dim + action_dim, critic.input_dim()));
        }
        if critic.output_dim() != 1 {
            return Err(Error::dim("critic output", 1, critic.output_dim()));
        }
        if target_actor.layers().len() != actor.layers().len() || target_critic.layers().len() != critic.layers().len() {
            return Err(Error::Parameter("target networks must mirror the main networks".into()));
        }
        Ok(DdpgAgent {
            actor,
            critic,
            target_actor,
            target_critic,
            noise: OuProcess::new(action_dim, cfg.ou_theta, cfg.ou_sigma, cfg.ou_mu, cfg.ou_dt),
            state_dim,
            action_dim,
            cfg: cfg.clone(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Actor output mapped to phases, plus OU noise when exploring, wrapped into `[0, 2pi)`.
    pub fn select_action<R: Rng + ?Sized>(&mut self, state: &[f64], explore: bool, rng: &mut R) -> Result<PhaseVector> {
        let mut theta = self.deterministic_phases(state)?;
        if explore {
            for (t, n) in theta.iter_mut().zip(self.noise.sample(rng)) {
                *t += n;
            }
        }
        PhaseVector::new(theta)
    }

    /// The policy's action without exploration noise.
    pub fn greedy_action(&self, state: &[f64]) -> Result<PhaseVector> {
        PhaseVector::new(self.deterministic_phases(state)?)
    }

    fn deterministic_phases(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(Error::dim("actor state", self.state_dim, state.len()));
        }
        Ok(self
            .actor
            .predict_one(state)?
            .into_iter()
            .map(phase_from_actor_output)
            .collect())
    }

    pub fn compute_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        compute_targets(batch, &self.target_actor, &self.target_critic, self.cfg.gamma_discount)
    }

    pub fn critic_update(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        critic_update(&mut self.critic, batch, targets, self.cfg.critic_lr)
    }

    pub fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64> {
        actor_update(&mut self.actor, &self.critic, batch, self.cfg.actor_lr)
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        self.target_critic.soft_update(&self.critic, self.cfg.tau)?;
        self.target_actor.soft_update(&self.actor, self.cfg.tau)
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.target_actor.is_finite() && self.target_critic.is_finite()
    }

    /// Writes `actor.net`, `critic.net`, `target_actor.net` and
    /// `target_critic.net` into `dir`. The replay buffer is not saved.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.actor.save_to_path(&dir.join("actor.net"))?;
        self.critic.save_to_path(&dir.join("critic.net"))?;
        self.target_actor.save_to_path(&dir.join("target_actor.net"))?;
        self.target_critic.save_to_path(&dir.join("target_critic.net"))
    }

    pub fn load(dir: &Path, cfg: &TrainConfig) -> Result<Self> {
        Self::from_networks(
            DenseNet::load_from_path(&dir.join("actor.net"))?,
            DenseNet::load_from_path(&dir.join("critic.net"))?,
            DenseNet::load_from_path(&dir.join("target_actor.net"))?,
            DenseNet::load_from_path(&dir.join("target_critic.net"))?,
            cfg,
        )
    }
}

fn stack_rows<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>, width: usize, what: &'static str) -> Result<Array2<f64>> {
    let n = rows.len();
    let mut out = Array2::zeros((n, width));
    for (i, row) in rows.enumerate() {
        if row.len() != width {
            return Err(Error::dim(what, width, row.len()));
        }
        out.row_mut(i).assign(&ndarray::ArrayView1::from(row));
    }
    Ok(out)
}

/// `[state | theta / pi - 1]` per transition.
fn critic_inputs(batch: &[&Transition], state_dim: usize, action_dim: usize) -> Result<Array2<f64>> {
    let mut x = Array2::zeros((batch.len(), state_dim + action_dim));
    for (i, t) in batch.iter().enumerate() {
        if t.state.len() != state_dim {
            return Err(Error::dim("transition state", state_dim, t.state.len()));
        }
        if t.action.len() != action_dim {
            return Err(Error::dim("transition action", action_dim, t.action.len()));
        }
        let mut row = x.row_mut(i);
        for (j, v) in t.state.iter().enumerate() {
            row[j] = *v;
        }
        for (j, a) in t.action.iter().enumerate() {
            row[state_dim + j] = normalize_phase(*a);
        }
    }
    Ok(x)
}

fn concat_columns(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(ndarray::Axis(1), &[a.view(), b.view()]).expect("same row count")
}

/// `r + gamma * Q'(s', mu'(s'))` for every transition.
pub fn compute_targets(
    batch: &[&Transition],
    target_actor: &DenseNet,
    target_critic: &DenseNet,
    gamma: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Parameter("compute_targets needs a non-empty batch".into()));
    }
    let next = stack_rows(batch.iter().map(|t| t.next_state.as_slice()), target_actor.input_dim(), "next_state")?;
    let next_actions = target_actor.predict(next.view())?;
    let q_next = target_critic.predict(concat_columns(&next, &next_actions).view())?;
    Ok(batch
        .iter()
        .zip(q_next.column(0))
        .map(|(t, q)| t.reward + gamma * q)
        .collect())
}

/// Mean squared TD error and its gradient with respect to the critic parameters.
pub fn critic_loss_and_gradients(
    critic: &DenseNet,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(f64, crate::nn::Gradients)> {
    if targets.len() != batch.len() {
        return Err(Error::dim("critic targets", batch.len(), targets.len()));
    }
    if batch.is_empty() {
        return Err(Error::Parameter("critic update needs a non-empty batch".into()));
    }
    let action_dim = critic.input_dim() - batch[0].state.len();
    let x = critic_inputs(batch, batch[0].state.len(), action_dim)?;
    let (q, cache) = critic.forward(x.view())?;
    let n = batch.len() as f64;
    let residuals: Vec<f64> = targets.iter().zip(q.column(0)).map(|(y, q)| y - q).collect();
    let loss = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss".into()));
    }
    let dq = Array2::from_shape_fn((batch.len(), 1), |(i, _)| -2.0 * residuals[i] / n);
    let (grads, _) = critic.backward(&cache, dq.view())?;
    Ok((loss, grads))
}

/// One Adam step on the critic. Returns the loss before the update.
pub fn critic_update(critic: &mut DenseNet, batch: &[&Transition], targets: &[f64], lr: f64) -> Result<f64> {
    let (loss, grads) = critic_loss_and_gradients(critic, batch, targets)?;
    critic.adam_step(&grads, lr, AdamConfig::default())?;
    Ok(loss)
}

/// Mean `Q(s, mu(s))` over the batch and its gradient with respect to the
/// actor parameters, chained through the critic's action input.
pub fn actor_objective_and_gradients(
    actor: &DenseNet,
    critic: &DenseNet,
    batch: &[&Transition],
) -> Result<(f64, crate::nn::Gradients)> {
    if batch.is_empty() {
        return Err(Error::Parameter("actor update needs a non-empty batch".into()));
    }
    let state_dim = actor.input_dim();
    let states = stack_rows(batch.iter().map(|t| t.state.as_slice()), state_dim, "state")?;
    let (actions, actor_cache) = actor.forward(states.view())?;
    let (q, critic_cache) = critic.forward(concat_columns(&states, &actions).view())?;
    let n = batch.len() as f64;
    let objective = q.sum() / n;
    let dj_dq = Array2::from_elem((batch.len(), 1), 1.0 / n);
    let (_, dj_dinput) = critic.backward(&critic_cache, dj_dq.view())?;
    let dj_daction = dj_dinput.slice(s![.., state_dim..]).to_owned();
    let (grads, _) = actor.backward(&actor_cache, dj_daction.view())?;
    Ok((objective, grads))
}

/// One Adam ascent step on the actor objective (descent on its negation).
/// Returns the mean Q estimate before the update.
pub fn actor_update(actor: &mut DenseNet, critic: &DenseNet, batch: &[&Transition], lr: f64) -> Result<f64> {
    let (objective, mut grads) = actor_objective_and_gradients(actor, critic, batch)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite("actor objective".into()));
    }
    grads.scale(-1.0);
    actor.adam_step(&grads, lr, AdamConfig::default())?;
    Ok(objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use ndarray::{array, Array1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Layer {
        Layer {
            weights,
            bias,
            activation,
        }
    }

    fn constant_critic(state_dim: usize, action_dim: usize, value: f64) -> DenseNet {
        DenseNet::from_layers(vec![linear(
            Array2::zeros((1, state_dim + action_dim)),
            array![value],
            Activation::Linear,
        )])
        .unwrap()
    }

    fn transition(state: Vec<f64>, action: Vec<f64>, reward: f64) -> Transition {
        Transition {
            next_state: state.clone(),
            state,
            action,
            reward,
        }
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden_units: 4,
            batch_size: 4,
            buffer_capacity: 100,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_output_layer_selects_mid_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = DdpgAgent::new(3, 2, &small_cfg(), &mut rng).unwrap();
        agent.actor.scale_output_layer(0.0);
        let a = agent.select_action(&[0.1, 0.2, 0.3], false, &mut rng).unwrap();
        assert_eq!(a.as_slice(), &[PI, PI]);
    }

    #[test]
    fn greedy_selection_is_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = DdpgAgent::new(3, 2, &small_cfg(), &mut rng).unwrap();
        let s = [0.5, -0.2, 1.0];
        let a = agent.select_action(&s, false, &mut rng).unwrap();
        let b = agent.select_action(&s, false, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, agent.greedy_action(&s).unwrap());
        assert!(agent.select_action(&[0.0; 2], false, &mut rng).is_err());
    }

    #[test]
    fn exploration_wraps_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut agent = DdpgAgent::new(1, 1, &small_cfg(), &mut rng).unwrap();
        // saturate the tanh at +1 so the clean phase is 2pi
        let last = agent.actor.layers_mut().last_mut().unwrap();
        last.weights.fill(0.0);
        last.bias.fill(50.0);
        agent.noise = OuProcess::new(1, 0.15, 0.0, 0.0, 1.0);
        agent.noise.x[0] = 0.1 / 0.85;
        let a = agent.select_action(&[0.0], true, &mut rng).unwrap();
        assert!((a[0] - 0.1).abs() < 1e-12, "{}", a[0]);
    }

    #[test]
    fn targets_examples() {
        let actor = DenseNet::from_layers(vec![linear(array![[0.0]], array![0.0], Activation::Tanh)]).unwrap();
        let batch_owned = [transition(vec![1.0], vec![1.0], 1.0), transition(vec![2.0], vec![2.0], -0.5)];
        let batch: Vec<&Transition> = batch_owned.iter().collect();

        let critic = constant_critic(1, 1, 2.0);
        assert_eq!(compute_targets(&batch, &actor, &critic, 0.0).unwrap(), vec![1.0, -0.5]);
        let y = compute_targets(&batch[..1], &actor, &critic, 0.05).unwrap();
        assert!((y[0] - 1.1).abs() < 1e-15);

        let zero = constant_critic(1, 1, 0.0);
        let t0 = transition(vec![1.0], vec![1.0], 0.0);
        assert_eq!(compute_targets(&[&t0], &actor, &zero, 0.05).unwrap(), vec![0.0]);
        assert!(compute_targets(&[], &actor, &zero, 0.05).is_err());
    }

    #[test]
    fn critic_loss_examples() {
        let mut critic = constant_critic(1, 1, 0.0);
        let t = transition(vec![1.0], vec![1.0], 0.0);
        let loss = critic_update(&mut critic, &[&t], &[1.0], 1e-3).unwrap();
        assert_eq!(loss, 1.0);

        // targets equal to predictions: zero loss and zero gradient
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agent = DdpgAgent::new(2, 2, &small_cfg(), &mut rng).unwrap();
        let owned = [transition(vec![0.1, 0.2], vec![1.0, 2.0], 0.0), transition(vec![-0.3, 0.4], vec![3.0, 0.5], 0.0)];
        let batch: Vec<&Transition> = owned.iter().collect();
        let x = critic_inputs(&batch, 2, 2).unwrap();
        let q: Vec<f64> = agent.critic.predict(x.view()).unwrap().column(0).to_vec();
        let (loss, grads) = critic_loss_and_gradients(&agent.critic, &batch, &q).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.flatten().iter().all(|g| *g == 0.0));
        let mut critic = agent.critic.clone();
        critic_update(&mut critic, &batch, &q, 1e-3).unwrap();
        assert_eq!(critic.params(), agent.critic.params());
        assert!(critic_update(&mut critic, &batch, &q[..1], 1e-3).is_err());
    }

    #[test]
    fn critic_rejects_non_finite_targets() {
        let mut critic = constant_critic(1, 1, 0.0);
        let before = critic.clone();
        let t = transition(vec![1.0], vec![1.0], 0.0);
        assert!(matches!(critic_update(&mut critic, &[&t], &[f64::NAN], 1e-3), Err(Error::NonFinite(_))));
        assert_eq!(critic, before);
    }

    #[test]
    fn action_blind_critic_leaves_actor_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agent = DdpgAgent::new(3, 2, &small_cfg(), &mut rng).unwrap();
        let critic = constant_critic(3, 2, 1.7);
        let t = transition(vec![0.2, -0.1, 0.4], vec![1.0, 2.0], 0.0);
        let mut actor = agent.actor.clone();
        let q = actor_update(&mut actor, &critic, &[&t], 1e-3).unwrap();
        assert_eq!(q, 1.7);
        assert_eq!(actor.params(), agent.actor.params());
    }

    #[test]
    fn actor_gradient_matches_hand_chain_rule() {
        // actor: o = tanh(w s + b); critic: Q = c_s s + c_a o + d
        let (w, b, cs, ca, d) = (0.7, -0.2, 0.3, 1.5, 0.1);
        let s = 0.9;
        let actor = DenseNet::from_layers(vec![linear(array![[w]], array![b], Activation::Tanh)]).unwrap();
        let critic = DenseNet::from_layers(vec![linear(array![[cs, ca]], array![d], Activation::Linear)]).unwrap();
        let t = transition(vec![s], vec![1.0], 0.0);
        let (j, grads) = actor_objective_and_gradients(&actor, &critic, &[&t]).unwrap();
        let o = (w * s + b).tanh();
        assert!((j - (cs * s + ca * o + d)).abs() < 1e-15);
        let dtanh = 1.0 - o * o;
        let g = grads.flatten();
        assert!((g[0] - ca * dtanh * s).abs() < 1e-15);
        assert!((g[1] - ca * dtanh).abs() < 1e-15);
    }

    #[test]
    fn soft_update_targets_blends_both_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut agent = DdpgAgent::new(2, 1, &small_cfg(), &mut rng).unwrap();
        let perturb = |n: &mut DenseNet| {
            let p: Vec<f64> = n.params().iter().map(|x| x + 0.5).collect();
            n.set_params(&p).unwrap();
        };
        perturb(&mut agent.actor);
        perturb(&mut agent.critic);
        let prev_ta = agent.target_actor.params();
        let prev_tc = agent.target_critic.params();
        agent.soft_update_targets().unwrap();
        for (new, (m, old)) in agent.target_actor.params().iter().zip(agent.actor.params().iter().zip(&prev_ta)) {
            assert_eq!(*new, 0.05 * m + 0.95 * old);
        }
        for (new, (m, old)) in agent.target_critic.params().iter().zip(agent.critic.params().iter().zip(&prev_tc)) {
            assert_eq!(*new, 0.05 * m + 0.95 * old);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let agent = DdpgAgent::new(4, 2, &small_cfg(), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        agent.save(dir.path()).unwrap();
        let loaded = DdpgAgent::load(dir.path(), &small_cfg()).unwrap();
        assert_eq!(loaded.actor, agent.actor);
        assert_eq!(loaded.critic, agent.critic);
        assert_eq!(loaded.target_actor, agent.target_actor);
        assert_eq!(loaded.target_critic, agent.target_critic);
    }
}
