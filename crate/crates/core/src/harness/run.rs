use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{write_rows, AtomicFile, ExperimentKind, ExperimentSpec, ResultRow, Scheme};
use crate::channel::{sample_scenario, ChannelRealization};
use crate::config::{PhasePolicy, SystemConfig, TrainConfig};
use crate::ddpg::{self, DdpgAgent, TrainingLog};
use crate::env::{IrsEnv, PhaseVector};
use crate::error::{Error, Result};
use crate::noma::{evaluate_noma, evaluate_noma_with, evaluate_oma, RateReport};
use crate::oracle::{exhaustive_search_with, GridSpec};
use crate::par::{self, Execution};

/// Seeds of one Monte-Carlo run, derived as `seed + run`. Every random
/// stream a run uses is a function of this seed and the sweep point alone,
/// so any run can be reproduced in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub run_seed: u64,
}

#[derive(Clone, Copy)]
enum Stream {
    Channel = 1,
    Agent = 2,
    Phases = 3,
}

impl RunSeeds {
    pub fn new(base: u64, run: usize) -> Self {
        RunSeeds {
            run_seed: base.wrapping_add(run as u64),
        }
    }

    /// Seeds for the one policy shared by all runs of a sweep point.
    pub fn shared(base: u64) -> Self {
        RunSeeds {
            run_seed: base ^ 0x5eed_5eed_0000_0000,
        }
    }

    fn rng(&self, point: usize, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.run_seed);
        // stream 0 of each point's seed is left to the training loop
        rng.set_stream(point as u64 * 8 + stream as u64);
        rng
    }

    pub fn channel_rng(&self, point: usize) -> ChaCha8Rng {
        self.rng(point, Stream::Channel)
    }

    pub fn agent_rng(&self, point: usize) -> ChaCha8Rng {
        self.rng(point, Stream::Agent)
    }

    pub fn phase_rng(&self, point: usize) -> ChaCha8Rng {
        self.rng(point, Stream::Phases)
    }

    /// Seed handed to the training loop, which draws from stream 0.
    pub fn train_seed(&self, point: usize) -> u64 {
        if point == 0 {
            return self.run_seed;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.run_seed);
        rng.set_stream(point as u64 * 8);
        rng.gen()
    }
}

/// Outcome of training an agent on one fixed channel.
#[derive(Debug, Clone)]
pub struct DdpgSearch {
    pub agent: DdpgAgent,
    pub log: TrainingLog,
    /// Best executed action and its sum rate.
    pub best_phases: PhaseVector,
    pub best_sum_rate: f64,
    /// Best executed action snapped to the grid, and its sum rate.
    pub best_snapped: Option<(Vec<f64>, f64)>,
}

/// Trains a fresh agent on `channels`, keeping the best action it executed.
/// With a grid, every executed action is also scored after snapping to it.
pub fn train_on_channel(
    system: &SystemConfig,
    train: &TrainConfig,
    channels: &ChannelRealization,
    seeds: RunSeeds,
    point: usize,
    grid: Option<GridSpec>,
) -> Result<DdpgSearch> {
    let mut env = IrsEnv::with_fixed_channel(system.clone(), channels.clone())?;
    let cfg = TrainConfig {
        seed: seeds.train_seed(point),
        ..train.clone()
    };
    let mut agent = DdpgAgent::new(env.observation_dim(), env.action_dim(), &cfg, &mut seeds.agent_rng(point))?;
    let mut snapped_best: Option<(Vec<f64>, f64)> = None;
    let mut snap_error = None;
    let log = ddpg::train_with(&mut agent, &mut env, &cfg, |action, _| {
        let Some(grid) = grid else { return };
        let snapped = grid.snap(action);
        match evaluate_noma(channels, system, &snapped) {
            Ok(r) => {
                if snapped_best.as_ref().is_none_or(|(_, best)| r.sum_rate > *best) {
                    snapped_best = Some((snapped, r.sum_rate));
                }
            }
            Err(e) => snap_error = Some(e),
        }
    })?;
    if let Some(e) = snap_error {
        return Err(e);
    }
    let best_phases = log
        .best_action
        .clone()
        .ok_or_else(|| Error::Config("training needs at least one episode and step".into()))?;
    Ok(DdpgSearch {
        agent,
        best_sum_rate: log.best_sum_rate,
        log,
        best_phases,
        best_snapped: snapped_best,
    })
}

/// Trains a fresh agent on a fresh channel every episode.
pub fn run_training(system: &SystemConfig, train: &TrainConfig, seeds: RunSeeds, point: usize) -> Result<(DdpgAgent, TrainingLog)> {
    let mut env = IrsEnv::new(system.clone())?;
    let cfg = TrainConfig {
        seed: seeds.train_seed(point),
        ..train.clone()
    };
    let mut agent = DdpgAgent::new(env.observation_dim(), env.action_dim(), &cfg, &mut seeds.agent_rng(point))?;
    let log = ddpg::train(&mut agent, &mut env, &cfg)?;
    Ok((agent, log))
}

/// Runs the noiseless policy for `steps` steps on `channels`; returns the best
/// action seen and its sum rate.
pub fn greedy_rollout(
    agent: &DdpgAgent,
    system: &SystemConfig,
    channels: &ChannelRealization,
    steps: usize,
) -> Result<(PhaseVector, f64)> {
    if steps == 0 {
        return Err(Error::Config("a rollout needs at least one step".into()));
    }
    let mut env = IrsEnv::with_fixed_channel(system.clone(), channels.clone())?;
    if agent.state_dim() != env.observation_dim() || agent.action_dim() != env.action_dim() {
        return Err(Error::Config(format!(
            "policy expects {} inputs and {} phases but the system has {} and {}",
            agent.state_dim(),
            agent.action_dim(),
            env.observation_dim(),
            env.action_dim()
        )));
    }
    // a fixed channel makes reset deterministic, the rng is never drawn from
    let mut state = env.reset(&mut ChaCha8Rng::seed_from_u64(0))?;
    let mut best: Option<(PhaseVector, f64)> = None;
    for _ in 0..steps {
        let action = agent.greedy_action(&env.observed_state_vector(&state))?;
        let outcome = env.step(&action)?;
        if best.as_ref().is_none_or(|(_, b)| outcome.sum_rate > *b) {
            best = Some((action, outcome.sum_rate));
        }
        state = outcome.next_state;
    }
    Ok(best.expect("at least one step"))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let output = spec.output.as_deref().map(AtomicFile::create).transpose()?;
    let log_output = match spec.kind {
        ExperimentKind::TrainCurve => spec.train_log.as_deref().map(AtomicFile::create).transpose()?,
        _ => None,
    };
    let policy = match spec.kind {
        ExperimentKind::PolicyEval => {
            let dir = spec.checkpoint.as_deref().expect("validated");
            Some(DdpgAgent::load(dir, &spec.train).map_err(|e| Error::Config(format!("checkpoint {}: {e}", dir.display())))?)
        }
        _ => None,
    };

    let rows = match spec.kind {
        ExperimentKind::UpperboundCompare => run_upperbound_compare(spec)?,
        ExperimentKind::OracleOnly => oracle_only(spec)?,
        ExperimentKind::TrainCurve => {
            let (rows, logs) = train_curve(spec)?;
            if let Some(out) = log_output {
                out.commit(|w| write_training_logs(&logs, w))?;
            }
            rows
        }
        ExperimentKind::PolicyEval => policy_eval(spec, policy.as_ref().expect("loaded above"))?,
        ExperimentKind::NomaVsOmaUsers | ExperimentKind::PowerSweep | ExperimentKind::EpsilonSweep => sweep(spec)?,
    };
    if let Some(out) = output {
        out.commit(|w| write_rows(&rows, w))?;
    }
    Ok(rows)
}

/// Per run: the oracle's best sum rate and the best grid-snapped sum rate a
/// DDPG agent reached while training on the same channel.
pub fn run_upperbound_compare(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let system = &spec.system;
    let grid = GridSpec::new(system.num_elements, spec.sweep.grid_steps)?;
    let inner = inner_execution(spec);
    per_run(spec, |run, seeds| {
        let channels = sample_scenario(system, &mut seeds.channel_rng(0))?;
        let start = Instant::now();
        let oracle = exhaustive_search_with(&channels, system, grid, inner)?;
        let oracle_time = elapsed(spec, start);
        let oracle_rates = evaluate_noma(&channels, system, &oracle.best_phases)?;

        let start = Instant::now();
        let search = train_on_channel(system, &spec.train, &channels, seeds, 0, Some(grid))?;
        let (snapped, snapped_rate) = search.best_snapped.expect("grid given");
        let ddpg_rates = evaluate_noma(&channels, system, &snapped)?;
        let ddpg_time = elapsed(spec, start);

        let row = RowBuilder::new(spec, run, system);
        Ok(vec![
            row.with(Scheme::Oracle, oracle.best_sum_rate, Some(oracle_rates.nearest_user_rate()), oracle_time),
            row.with(Scheme::Ddpg, snapped_rate, Some(ddpg_rates.nearest_user_rate()), ddpg_time),
        ])
    })
}

fn oracle_only(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let system = &spec.system;
    let grid = GridSpec::new(system.num_elements, spec.sweep.grid_steps)?;
    let inner = inner_execution(spec);
    per_run(spec, |run, seeds| {
        let channels = sample_scenario(system, &mut seeds.channel_rng(0))?;
        let start = Instant::now();
        let oracle = exhaustive_search_with(&channels, system, grid, inner)?;
        let rates = evaluate_noma(&channels, system, &oracle.best_phases)?;
        Ok(vec![RowBuilder::new(spec, run, system).with(
            Scheme::Oracle,
            oracle.best_sum_rate,
            Some(rates.nearest_user_rate()),
            elapsed(spec, start),
        )])
    })
}

fn train_curve(spec: &ExperimentSpec) -> Result<(Vec<ResultRow>, Vec<TrainingLog>)> {
    let system = &spec.system;
    let results = par::try_map_indexed(spec.sweep.runs, spec.execution, |run| -> Result<_> {
        let seeds = RunSeeds::new(spec.seed, run);
        let start = Instant::now();
        let (agent, log) = if spec.sweep.fresh_channels {
            run_training(system, &spec.train, seeds, 0)?
        } else {
            let channels = sample_scenario(system, &mut seeds.channel_rng(0))?;
            let search = train_on_channel(system, &spec.train, &channels, seeds, 0, None)?;
            (search.agent, search.log)
        };
        if let Some(dir) = &spec.checkpoint {
            agent.save(&dir.join(format!("run-{run}")))?;
        }
        let row = RowBuilder::new(spec, run, system).with(Scheme::Ddpg, log.best_sum_rate, None, elapsed(spec, start));
        Ok((row, log))
    })?;
    Ok(results.into_iter().unzip())
}

fn policy_eval(spec: &ExperimentSpec, agent: &DdpgAgent) -> Result<Vec<ResultRow>> {
    let system = &spec.system;
    per_run(spec, |run, seeds| {
        let channels = sample_scenario(system, &mut seeds.channel_rng(0))?;
        let start = Instant::now();
        let (phases, best) = greedy_rollout(agent, system, &channels, spec.train.steps_per_episode)?;
        let ddpg_rates = evaluate_noma(&channels, system, &phases)?;
        let ddpg_time = elapsed(spec, start);

        let start = Instant::now();
        let random = random_phases(system.num_elements, &mut seeds.phase_rng(0));
        let baseline = evaluate_noma(&channels, system, &random)?;
        let row = RowBuilder::new(spec, run, system);
        Ok(vec![
            row.with(Scheme::Ddpg, best, Some(ddpg_rates.nearest_user_rate()), ddpg_time),
            row.with(Scheme::Noma, baseline.sum_rate, Some(baseline.nearest_user_rate()), elapsed(spec, start)),
        ])
    })
}

/// The user-count, power and SIC-residual sweeps: for each user count and
/// run, draw a channel, fix the phases once with the configured policy, then
/// score every sweep value with those phases.
fn sweep(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let points: Vec<SystemConfig> = spec
        .sweep
        .users
        .iter()
        .map(|&k| {
            let mut cfg = spec.system.clone();
            cfg.set_num_users(k)?;
            Ok(cfg)
        })
        .collect::<Result<_>>()?;

    let shared: Vec<Option<DdpgAgent>> = if spec.sweep.phase_policy == PhasePolicy::Ddpg && spec.sweep.share_policy {
        let seeds = RunSeeds::shared(spec.seed);
        par::try_map_indexed(points.len(), spec.execution, |point| {
            run_training(&points[point], &spec.train, seeds, point).map(|(agent, _)| Some(agent))
        })?
    } else {
        vec![None; points.len()]
    };

    let grid_steps = spec.sweep.grid_steps;
    let inner = inner_execution(spec);
    per_run(spec, |run, seeds| {
        let mut rows = Vec::new();
        for (point, system) in points.iter().enumerate() {
            let start = Instant::now();
            let channels = sample_scenario(system, &mut seeds.channel_rng(point))?;
            let phases = choose_phases(spec, system, &channels, seeds, point, grid_steps, shared[point].as_ref(), inner)?;
            let setup_time = elapsed(spec, start);
            let row = RowBuilder::new(spec, run, system);

            match spec.kind {
                ExperimentKind::NomaVsOmaUsers => {
                    let start = Instant::now();
                    let noma = evaluate_noma(&channels, system, &phases)?;
                    let oma = evaluate_oma(&channels, system, &phases)?;
                    let t = setup_time + elapsed(spec, start);
                    rows.push(row.with(Scheme::Noma, noma.sum_rate, Some(noma.nearest_user_rate()), t));
                    rows.push(row.with(Scheme::Oma, oma.sum_rate, Some(oma.nearest_user_rate()), t));
                }
                ExperimentKind::PowerSweep => {
                    for &p in &spec.sweep.power_levels_dbm {
                        let start = Instant::now();
                        let at_power = SystemConfig {
                            tx_power_dbm: p,
                            ..system.clone()
                        };
                        let noma = evaluate_noma(&channels, &at_power, &phases)?;
                        let oma = evaluate_oma(&channels, &at_power, &phases)?;
                        let t = setup_time + elapsed(spec, start);
                        let row = RowBuilder::new(spec, run, &at_power);
                        rows.push(row.with(Scheme::Noma, noma.sum_rate, Some(noma.nearest_user_rate()), t));
                        rows.push(row.with(Scheme::Oma, oma.sum_rate, Some(oma.nearest_user_rate()), t));
                    }
                }
                ExperimentKind::EpsilonSweep => {
                    for &eps in &spec.sweep.epsilons {
                        let start = Instant::now();
                        let noma: RateReport = evaluate_noma_with(&channels, system, &phases, system.tx_power_dbm, eps)?;
                        let t = setup_time + elapsed(spec, start);
                        let mut row = row.clone();
                        row.epsilon = eps;
                        rows.push(row.with(Scheme::Noma, noma.sum_rate, Some(noma.nearest_user_rate()), t));
                    }
                }
                _ => unreachable!("sweep called for {}", spec.kind),
            }
        }
        Ok(rows)
    })
}

#[allow(clippy::too_many_arguments)]
fn choose_phases(
    spec: &ExperimentSpec,
    system: &SystemConfig,
    channels: &ChannelRealization,
    seeds: RunSeeds,
    point: usize,
    grid_steps: usize,
    shared: Option<&DdpgAgent>,
    inner: Execution,
) -> Result<Vec<f64>> {
    Ok(match spec.sweep.phase_policy {
        PhasePolicy::Random => random_phases(system.num_elements, &mut seeds.phase_rng(point)),
        PhasePolicy::Oracle => {
            let grid = GridSpec::new(system.num_elements, grid_steps)?;
            exhaustive_search_with(channels, system, grid, inner)?.best_phases.into_vec()
        }
        PhasePolicy::Ddpg => match shared {
            Some(agent) => greedy_rollout(agent, system, channels, spec.train.steps_per_episode)?.0.into_vec(),
            None => train_on_channel(system, &spec.train, channels, seeds, point, None)?
                .best_phases
                .into_vec(),
        },
    })
}

fn random_phases<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// Runs are the parallel unit; nested searches stay on their replica's thread.
fn inner_execution(spec: &ExperimentSpec) -> Execution {
    if spec.sweep.runs > 1 {
        Execution::Sequential
    } else {
        spec.execution
    }
}

fn per_run<F>(spec: &ExperimentSpec, f: F) -> Result<Vec<ResultRow>>
where
    F: Fn(usize, RunSeeds) -> Result<Vec<ResultRow>> + Sync + Send,
{
    let per_run = par::try_map_indexed(spec.sweep.runs, spec.execution, |run| f(run, RunSeeds::new(spec.seed, run)))?;
    Ok(per_run.into_iter().flatten().collect())
}

fn elapsed(spec: &ExperimentSpec, start: Instant) -> f64 {
    if spec.deterministic {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

#[derive(Clone)]
struct RowBuilder {
    experiment: ExperimentKind,
    seed: u64,
    run: usize,
    num_users: usize,
    num_elements: usize,
    tx_power_dbm: f64,
    epsilon: f64,
}

impl RowBuilder {
    fn new(spec: &ExperimentSpec, run: usize, system: &SystemConfig) -> Self {
        RowBuilder {
            experiment: spec.kind,
            seed: spec.seed,
            run,
            num_users: system.num_users,
            num_elements: system.num_elements,
            tx_power_dbm: system.tx_power_dbm,
            epsilon: system.sic_residual_eps,
        }
    }

    fn with(&self, scheme: Scheme, sum_rate: f64, user_rate: Option<f64>, wall_time_s: f64) -> ResultRow {
        ResultRow {
            experiment: self.experiment,
            seed: self.seed,
            run: self.run,
            num_users: self.num_users,
            num_elements: self.num_elements,
            tx_power_dbm: self.tx_power_dbm,
            epsilon: self.epsilon,
            scheme,
            sum_rate,
            user_rate,
            wall_time_s,
        }
    }
}

/// Training logs of every run, columns `run,episode,step,reward,sum_rate,best_sum_rate`.
fn write_training_logs(logs: &[TrainingLog], out: &mut dyn std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["run", "episode", "step", "reward", "sum_rate", "best_sum_rate"])?;
    for (run, log) in logs.iter().enumerate() {
        for step in &log.steps {
            w.write_record(&[
                run.to_string(),
                step.episode.to_string(),
                step.step.to_string(),
                step.reward.to_string(),
                step.sum_rate.to_string(),
                step.best_sum_rate.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
