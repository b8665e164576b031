//! Scenario and training parameters, plus the flat `key = value` file format
//! both are loaded from.
//!
//! A config file is a list of `key = value` lines. Blank lines and lines
//! starting with `#` are ignored; list values are comma separated. Every key
//! is optional and falls back to the documented default. Unknown keys are an
//! error so that typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noma::allocate_power;

/// Physical-layer and scenario parameters. Defaults follow the simulation
/// table of the reference setup (K = 32 users, M = 16 elements, 40 dBm).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_users: usize,
    pub num_elements: usize,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    /// Rician factor of the BS->IRS link, linear scale.
    pub rician_k1: f64,
    /// Rician factor of the IRS->user links, linear scale.
    pub rician_k2: f64,
    pub pl_exp_bs_irs: f64,
    pub pl_exp_irs_user: f64,
    pub dist_bs_irs_m: f64,
    pub dist_user_min_m: f64,
    pub dist_user_max_m: f64,
    pub sic_residual_eps: f64,
    /// NOMA power split, user 1 (farthest) first.
    pub power_coeffs: Vec<f64>,
    /// Path loss at `ref_dist_m`, in dB (negative).
    pub ref_loss_db: f64,
    pub ref_dist_m: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let num_users = 32;
        SystemConfig {
            num_users,
            num_elements: 16,
            tx_power_dbm: 40.0,
            bandwidth_hz: 10e6,
            noise_psd_dbm_hz: -174.0,
            rician_k1: 10.0,
            rician_k2: 10.0,
            pl_exp_bs_irs: 2.0,
            pl_exp_irs_user: 2.8,
            dist_bs_irs_m: 50.0,
            dist_user_min_m: 200.0,
            dist_user_max_m: 1500.0,
            sic_residual_eps: 0.0,
            power_coeffs: allocate_power(num_users).expect("K > 0"),
            ref_loss_db: -15.0,
            ref_dist_m: 1.0,
        }
    }
}

impl SystemConfig {
    /// Default scenario resized to `num_users` users and `num_elements` elements.
    pub fn with_dims(num_users: usize, num_elements: usize) -> Result<Self> {
        let mut cfg = SystemConfig {
            num_elements,
            ..SystemConfig::default()
        };
        cfg.set_num_users(num_users)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Changes K and resets the power split to the geometric allocation.
    pub fn set_num_users(&mut self, num_users: usize) -> Result<()> {
        self.power_coeffs = allocate_power(num_users)?;
        self.num_users = num_users;
        Ok(())
    }

    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_power_watts(&self) -> Result<f64> {
        crate::noma::noise_power_watts(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let param = |msg: String| Err(Error::Parameter(msg));
        if self.num_users == 0 {
            return param("num_users must be positive".into());
        }
        if self.num_elements == 0 {
            return param("num_elements must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return param(format!("bandwidth_hz must be positive, got {}", self.bandwidth_hz));
        }
        if !(self.rician_k1 >= 0.0) || !(self.rician_k2 >= 0.0) {
            return param("rician factors must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.sic_residual_eps) {
            return param(format!(
                "sic_residual_eps must lie in [0, 1], got {}",
                self.sic_residual_eps
            ));
        }
        for (name, d) in [
            ("dist_bs_irs_m", self.dist_bs_irs_m),
            ("dist_user_min_m", self.dist_user_min_m),
            ("dist_user_max_m", self.dist_user_max_m),
            ("ref_dist_m", self.ref_dist_m),
        ] {
            if !(d > 0.0) {
                return param(format!("{name} must be positive, got {d}"));
            }
        }
        if self.dist_user_min_m > self.dist_user_max_m {
            return param("dist_user_min_m exceeds dist_user_max_m".into());
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("pl_exp_bs_irs", self.pl_exp_bs_irs),
            ("pl_exp_irs_user", self.pl_exp_irs_user),
            ("ref_loss_db", self.ref_loss_db),
        ] {
            if !v.is_finite() {
                return param(format!("{name} must be finite"));
            }
        }
        validate_power_coeffs(&self.power_coeffs, self.num_users)
    }

    fn from_kv(kv: &mut KvConfig) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        if let Some(k) = kv.take::<usize>("num_users")? {
            cfg.set_num_users(k).map_err(|e| Error::Config(e.to_string()))?;
        }
        kv.take_into("num_elements", &mut cfg.num_elements)?;
        kv.take_into("tx_power_dbm", &mut cfg.tx_power_dbm)?;
        kv.take_into("bandwidth_hz", &mut cfg.bandwidth_hz)?;
        kv.take_into("noise_psd_dbm_hz", &mut cfg.noise_psd_dbm_hz)?;
        kv.take_into("rician_k1", &mut cfg.rician_k1)?;
        kv.take_into("rician_k2", &mut cfg.rician_k2)?;
        kv.take_into("pl_exp_bs_irs", &mut cfg.pl_exp_bs_irs)?;
        kv.take_into("pl_exp_irs_user", &mut cfg.pl_exp_irs_user)?;
        kv.take_into("dist_bs_irs_m", &mut cfg.dist_bs_irs_m)?;
        kv.take_into("dist_user_min_m", &mut cfg.dist_user_min_m)?;
        kv.take_into("dist_user_max_m", &mut cfg.dist_user_max_m)?;
        kv.take_into("sic_residual_eps", &mut cfg.sic_residual_eps)?;
        kv.take_into("ref_loss_db", &mut cfg.ref_loss_db)?;
        kv.take_into("ref_dist_m", &mut cfg.ref_dist_m)?;
        if let Some(beta) = kv.take_list::<f64>("power_coeffs")? {
            cfg.power_coeffs = beta;
        }
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

fn validate_power_coeffs(beta: &[f64], num_users: usize) -> Result<()> {
    if beta.len() != num_users {
        return Err(Error::Parameter(format!(
            "power_coeffs has {} entries but num_users = {num_users}",
            beta.len()
        )));
    }
    let total: f64 = beta.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "power_coeffs must sum to 1, got {total}"
        )));
    }
    for k in 0..beta.len() {
        let tail: f64 = beta[k + 1..].iter().sum();
        if k + 1 < beta.len() && !(beta[k] > tail) {
            return Err(Error::Parameter(format!(
                "power_coeffs[{k}] = {} must exceed the sum of weaker users' coefficients {tail}",
                beta[k]
            )));
        }
        if !(beta[k] > 0.0) {
            return Err(Error::Parameter("power_coeffs must be positive".into()));
        }
    }
    Ok(())
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// DDPG hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma_discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub steps_per_episode: usize,
    pub num_episodes: usize,
    pub seed: u64,
    /// Width of both hidden layers of actor and critic.
    pub hidden_units: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_mu: f64,
    pub ou_dt: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            actor_lr: 5e-4,
            critic_lr: 1e-3,
            gamma_discount: 0.05,
            tau: 0.05,
            batch_size: 64,
            buffer_capacity: 10_000,
            steps_per_episode: 1000,
            num_episodes: 10,
            seed: 0,
            hidden_units: 256,
            ou_theta: 0.15,
            ou_sigma: 0.1,
            ou_mu: 0.0,
            ou_dt: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let param = |msg: &str| Err(Error::Parameter(msg.to_string()));
        if !(0.0..=1.0).contains(&self.gamma_discount) {
            return param("gamma_discount must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return param("tau must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return param("batch_size must be in 1..=buffer_capacity");
        }
        if self.steps_per_episode == 0 {
            return param("steps_per_episode must be positive");
        }
        if self.hidden_units == 0 {
            return param("hidden_units must be positive");
        }
        if !(self.actor_lr >= 0.0) || !(self.critic_lr >= 0.0) {
            return param("learning rates must be non-negative");
        }
        if !(self.ou_theta > 0.0) || !(self.ou_sigma >= 0.0) || !(self.ou_dt > 0.0) {
            return param("ou_theta and ou_dt must be positive, ou_sigma non-negative");
        }
        if !self.ou_mu.is_finite() {
            return param("ou_mu must be finite");
        }
        Ok(())
    }

    fn from_kv(kv: &mut KvConfig) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        kv.take_into("actor_lr", &mut cfg.actor_lr)?;
        kv.take_into("critic_lr", &mut cfg.critic_lr)?;
        kv.take_into("gamma_discount", &mut cfg.gamma_discount)?;
        kv.take_into("tau", &mut cfg.tau)?;
        kv.take_into("batch_size", &mut cfg.batch_size)?;
        kv.take_into("buffer_capacity", &mut cfg.buffer_capacity)?;
        kv.take_into("steps_per_episode", &mut cfg.steps_per_episode)?;
        kv.take_into("num_episodes", &mut cfg.num_episodes)?;
        kv.take_into("seed", &mut cfg.seed)?;
        kv.take_into("hidden_units", &mut cfg.hidden_units)?;
        kv.take_into("ou_theta", &mut cfg.ou_theta)?;
        kv.take_into("ou_sigma", &mut cfg.ou_sigma)?;
        kv.take_into("ou_mu", &mut cfg.ou_mu)?;
        kv.take_into("ou_dt", &mut cfg.ou_dt)?;
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// How phases are chosen in the sweep experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePolicy {
    /// Uniform random phases, drawn once per run.
    Random,
    /// Phases found by a DDPG agent.
    Ddpg,
    /// Exhaustive search on the phase grid.
    Oracle,
}

impl FromStr for PhasePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(PhasePolicy::Random),
            "ddpg" => Ok(PhasePolicy::Ddpg),
            "oracle" => Ok(PhasePolicy::Oracle),
            other => Err(format!("unknown phase policy {other:?} (random|ddpg|oracle)")),
        }
    }
}

impl std::fmt::Display for PhasePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhasePolicy::Random => "random",
            PhasePolicy::Ddpg => "ddpg",
            PhasePolicy::Oracle => "oracle",
        })
    }
}

/// Experiment-level knobs shared by the sweep subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub runs: usize,
    pub users: Vec<usize>,
    pub power_levels_dbm: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub grid_steps: usize,
    pub phase_policy: PhasePolicy,
    /// Train one DDPG policy per sweep point and reuse it across runs
    /// instead of training on every run's channel.
    pub share_policy: bool,
    /// `train` draws a fresh channel every episode instead of keeping each
    /// run's channel for the whole run.
    pub fresh_channels: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            runs: 10,
            users: vec![2, 4, 8],
            power_levels_dbm: (1..=8).map(|i| f64::from(i) * 10.0).collect(),
            epsilons: vec![0.0, 1e-3, 1e-2, 1e-1],
            grid_steps: 16,
            phase_policy: PhasePolicy::Random,
            share_policy: false,
            fresh_channels: false,
        }
    }
}

impl SweepConfig {
    fn from_kv(kv: &mut KvConfig) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        kv.take_into("runs", &mut cfg.runs)?;
        if let Some(v) = kv.take_list("users")? {
            cfg.users = v;
        }
        if let Some(v) = kv.take_list("power_levels_dbm")? {
            cfg.power_levels_dbm = v;
        }
        if let Some(v) = kv.take_list("epsilons")? {
            cfg.epsilons = v;
        }
        kv.take_into("grid_steps", &mut cfg.grid_steps)?;
        kv.take_into("phase_policy", &mut cfg.phase_policy)?;
        kv.take_into("share_policy", &mut cfg.share_policy)?;
        kv.take_into("fresh_channels", &mut cfg.fresh_channels)?;
        Ok(cfg)
    }
}

/// Everything a config file can set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub system: SystemConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvConfig::parse(text)?;
        let system = SystemConfig::from_kv(&mut kv)?;
        let train = TrainConfig::from_kv(&mut kv)?;
        let sweep = SweepConfig::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(FileConfig {
            system,
            train,
            sweep,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Raw `key = value` pairs, consumed key by key.
#[derive(Debug, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value`, got {line:?}"))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            if entries
                .insert(key.clone(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config(format!("line {line_no}: duplicate key `{key}`")));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|e| {
                Error::Config(format!("line {line}: bad value {value:?} for `{key}`: {e}"))
            }),
        }
    }

    fn take_into<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, value)) = self.entries.remove(key) else {
            return Ok(None);
        };
        value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                item.parse().map_err(|e| {
                    Error::Config(format!("line {line}: bad list item {item:?} for `{key}`: {e}"))
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Fails if any key was never consumed.
    pub fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
        }
        Ok(())
    }
}

/// One entry per recognised config key: (key, default, meaning).
pub fn key_reference() -> String {
    let s = SystemConfig::default();
    let t = TrainConfig::default();
    let w = SweepConfig::default();
    let join = |v: &[String]| v.join(",");
    let rows: Vec<(&str, String, &str)> = vec![
        ("num_users", s.num_users.to_string(), "number of NOMA users K"),
        ("num_elements", s.num_elements.to_string(), "number of IRS elements M"),
        ("tx_power_dbm", s.tx_power_dbm.to_string(), "BS transmit power (dBm)"),
        ("bandwidth_hz", s.bandwidth_hz.to_string(), "system bandwidth (Hz)"),
        ("noise_psd_dbm_hz", s.noise_psd_dbm_hz.to_string(), "noise power spectral density (dBm/Hz)"),
        ("rician_k1", s.rician_k1.to_string(), "Rician factor BS->IRS (linear)"),
        ("rician_k2", s.rician_k2.to_string(), "Rician factor IRS->users (linear)"),
        ("pl_exp_bs_irs", s.pl_exp_bs_irs.to_string(), "path-loss exponent BS->IRS"),
        ("pl_exp_irs_user", s.pl_exp_irs_user.to_string(), "path-loss exponent IRS->users"),
        ("dist_bs_irs_m", s.dist_bs_irs_m.to_string(), "BS-IRS distance (m)"),
        ("dist_user_min_m", s.dist_user_min_m.to_string(), "minimum IRS-user distance (m)"),
        ("dist_user_max_m", s.dist_user_max_m.to_string(), "maximum IRS-user distance (m)"),
        ("sic_residual_eps", s.sic_residual_eps.to_string(), "imperfect-SIC residual fraction in [0,1]"),
        ("power_coeffs", "2^(K-k)/(2^K-1)".into(), "comma-separated NOMA power split, farthest user first"),
        ("ref_loss_db", s.ref_loss_db.to_string(), "path loss at the reference distance (dB)"),
        ("ref_dist_m", s.ref_dist_m.to_string(), "path-loss reference distance (m)"),
        ("actor_lr", t.actor_lr.to_string(), "actor Adam learning rate"),
        ("critic_lr", t.critic_lr.to_string(), "critic Adam learning rate"),
        ("gamma_discount", t.gamma_discount.to_string(), "discount factor"),
        ("tau", t.tau.to_string(), "soft target-update coefficient"),
        ("batch_size", t.batch_size.to_string(), "mini-batch size"),
        ("buffer_capacity", t.buffer_capacity.to_string(), "replay buffer capacity"),
        ("steps_per_episode", t.steps_per_episode.to_string(), "environment steps per episode"),
        ("num_episodes", t.num_episodes.to_string(), "training episodes"),
        ("seed", t.seed.to_string(), "training seed (overridden by --seed)"),
        ("hidden_units", t.hidden_units.to_string(), "units in each of the two hidden layers"),
        ("ou_theta", t.ou_theta.to_string(), "OU mean-reversion rate"),
        ("ou_sigma", t.ou_sigma.to_string(), "OU noise scale (radians)"),
        ("ou_mu", t.ou_mu.to_string(), "OU long-run mean"),
        ("ou_dt", t.ou_dt.to_string(), "OU time step"),
        ("runs", w.runs.to_string(), "Monte-Carlo runs (overridden by --runs)"),
        ("users", join(&w.users.iter().map(|u| u.to_string()).collect::<Vec<_>>()), "user counts swept by sweep-users/sweep-power/sweep-eps"),
        ("power_levels_dbm", join(&w.power_levels_dbm.iter().map(|p| p.to_string()).collect::<Vec<_>>()), "transmit powers swept by sweep-power"),
        ("epsilons", join(&w.epsilons.iter().map(|e| e.to_string()).collect::<Vec<_>>()), "SIC residuals swept by sweep-eps"),
        ("grid_steps", w.grid_steps.to_string(), "phase steps N per element for the exhaustive search"),
        ("phase_policy", w.phase_policy.to_string(), "phase source for sweeps: random|ddpg|oracle"),
        ("share_policy", w.share_policy.to_string(), "train one DDPG policy per sweep point instead of per run"),
        ("fresh_channels", w.fresh_channels.to_string(), "train: new channel every episode instead of one channel per run"),
    ];
    let mut out = String::from("CONFIG KEYS (key = value, one per line, '#' comments):\n");
    for (key, default, meaning) in rows {
        let _ = writeln!(out, "  {key:<18} {meaning} [default: {default}]");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_the_reference_table() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_users, 32);
        assert_eq!(cfg.num_elements, 16);
        assert_eq!(cfg.tx_power_dbm, 40.0);
        assert_eq!(cfg.bandwidth_hz, 1e7);
        assert_eq!(cfg.noise_psd_dbm_hz, -174.0);
        assert_eq!((cfg.rician_k1, cfg.rician_k2), (10.0, 10.0));
        assert_eq!((cfg.pl_exp_bs_irs, cfg.pl_exp_irs_user), (2.0, 2.8));
        assert_eq!(cfg.dist_bs_irs_m, 50.0);
        assert_eq!((cfg.dist_user_min_m, cfg.dist_user_max_m), (200.0, 1500.0));

        let t = TrainConfig::default();
        t.validate().unwrap();
        assert_eq!((t.actor_lr, t.critic_lr), (5e-4, 1e-3));
        assert_eq!((t.gamma_discount, t.tau), (0.05, 0.05));
        assert_eq!((t.batch_size, t.buffer_capacity), (64, 10_000));
        assert_eq!(t.steps_per_episode, 1000);
    }

    #[test]
    fn parses_flat_file() {
        let text = "# desk scale\nnum_users = 4\nnum_elements=8\n\ntx_power_dbm = 30\nepsilons = 0, 0.01\nphase_policy = ddpg\n";
        let cfg = FileConfig::parse(text).unwrap();
        assert_eq!(cfg.system.num_users, 4);
        assert_eq!(cfg.system.power_coeffs.len(), 4);
        assert_eq!(cfg.system.num_elements, 8);
        assert_eq!(cfg.system.tx_power_dbm, 30.0);
        assert_eq!(cfg.sweep.epsilons, vec![0.0, 0.01]);
        assert_eq!(cfg.sweep.phase_policy, PhasePolicy::Ddpg);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let err = FileConfig::parse("num_user = 4\n").unwrap_err();
        assert!(err.to_string().contains("num_user"), "{err}");
        assert!(err.is_config());
        assert!(FileConfig::parse("tau = 0.1\ntau = 0.2\n").is_err());
        assert!(FileConfig::parse("just a line\n").is_err());
    }

    #[test]
    fn rejects_invalid_power_split() {
        // sums to one but violates the dominance condition
        let err = FileConfig::parse("num_users = 3\npower_coeffs = 0.4, 0.35, 0.25\n").unwrap_err();
        assert!(err.to_string().contains("power_coeffs"), "{err}");
        assert!(FileConfig::parse("num_users = 2\npower_coeffs = 0.6, 0.3\n").is_err());
        assert!(FileConfig::parse("num_users = 2\npower_coeffs = 0.7, 0.3\n").is_ok());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(FileConfig::parse("sic_residual_eps = 1.5\n").is_err());
        assert!(FileConfig::parse("dist_user_min_m = 2000\n").is_err());
        assert!(FileConfig::parse("dist_bs_irs_m = 0\n").is_err());
        assert!(FileConfig::parse("batch_size = 20000\n").is_err());
        assert!(FileConfig::parse("tau = -0.1\n").is_err());
        assert!(FileConfig::parse("num_users = 0\n").is_err());
    }

    #[test]
    fn key_reference_lists_every_key() {
        let text = key_reference();
        for key in ["num_users", "power_coeffs", "ref_loss_db", "ou_sigma", "share_policy", "hidden_units"] {
            assert!(text.contains(key), "missing {key}");
        }
    }
}
