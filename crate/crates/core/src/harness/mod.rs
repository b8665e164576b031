//! Monte-Carlo experiments over the simulator, their CSV output, and the
//! command-line front end.

mod cli;
mod run;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{SweepConfig, SystemConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::par::Execution;

pub use cli::{cli_main, Cli};
pub use run::{
    greedy_rollout, run_experiment, run_training, run_upperbound_compare, train_on_channel, DdpgSearch, RunSeeds,
};

/// Header of every results CSV.
pub const CSV_HEADER: &str = "experiment,seed,run,K,M,tx_power_dbm,epsilon,scheme,sum_rate,user_rate,wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    UpperboundCompare,
    TrainCurve,
    NomaVsOmaUsers,
    PowerSweep,
    EpsilonSweep,
    OracleOnly,
    /// Greedy rollouts of a saved policy.
    PolicyEval,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::UpperboundCompare => "upperbound_compare",
            ExperimentKind::TrainCurve => "train_curve",
            ExperimentKind::NomaVsOmaUsers => "noma_vs_oma_users",
            ExperimentKind::PowerSweep => "power_sweep",
            ExperimentKind::EpsilonSweep => "epsilon_sweep",
            ExperimentKind::OracleOnly => "oracle_only",
            ExperimentKind::PolicyEval => "policy_eval",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Noma,
    Oma,
    Oracle,
    Ddpg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub run: usize,
    #[serde(rename = "K")]
    pub num_users: usize,
    #[serde(rename = "M")]
    pub num_elements: usize,
    pub tx_power_dbm: f64,
    pub epsilon: f64,
    pub scheme: Scheme,
    pub sum_rate: f64,
    /// Rate of the tracked (nearest) user, where the experiment records one.
    pub user_rate: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub system: SystemConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Zero the wall-time column so repeated runs are byte-identical.
    pub deterministic: bool,
    /// Policy checkpoint directory: read by `policy_eval`, written by `train_curve`.
    pub checkpoint: Option<PathBuf>,
    /// Per-step training log written by `train_curve`.
    pub train_log: Option<PathBuf>,
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, system: SystemConfig, train: TrainConfig, sweep: SweepConfig, seed: u64) -> Self {
        ExperimentSpec {
            kind,
            system,
            train,
            sweep,
            seed,
            output: None,
            deterministic: false,
            checkpoint: None,
            train_log: None,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.train.validate()?;
        if self.sweep.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let empty = match self.kind {
            ExperimentKind::NomaVsOmaUsers => self.sweep.users.is_empty().then_some("users"),
            ExperimentKind::PowerSweep => self.sweep.power_levels_dbm.is_empty().then_some("power_levels_dbm"),
            ExperimentKind::EpsilonSweep => self.sweep.epsilons.is_empty().then_some("epsilons"),
            _ => None,
        };
        if let Some(key) = empty {
            return Err(Error::Config(format!("{} needs a non-empty `{key}` list", self.kind)));
        }
        for &k in &self.sweep.users {
            if k == 0 || k > crate::noma::MAX_USERS {
                return Err(Error::Config(format!("users entries must lie in 1..={}, got {k}", crate::noma::MAX_USERS)));
            }
        }
        if self.sweep.power_levels_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("power_levels_dbm entries must be finite".into()));
        }
        if self.sweep.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Config("epsilons entries must lie in [0, 1]".into()));
        }
        if self.kind == ExperimentKind::PolicyEval && self.checkpoint.is_none() {
            return Err(Error::Config("policy evaluation needs a checkpoint directory".into()));
        }
        Ok(())
    }
}

/// Serializes rows (header first) to `out`.
pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A file written under a temporary name and renamed into place on commit,
/// so readers never see a partial CSV. Created up front so an unwritable
/// destination fails before any compute.
#[derive(Debug)]
pub struct AtomicFile {
    target: PathBuf,
    temp: PathBuf,
    file: Option<File>,
}

impl AtomicFile {
    pub fn create(target: &Path) -> Result<Self> {
        let name = target
            .file_name()
            .ok_or_else(|| Error::Config(format!("output path {} has no file name", target.display())))?;
        let mut temp_name = std::ffi::OsString::from(".");
        temp_name.push(name);
        temp_name.push(format!(".tmp{}", std::process::id()));
        let temp = target.with_file_name(temp_name);
        let file = File::create(&temp)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", target.display())))?;
        Ok(AtomicFile {
            target: target.to_path_buf(),
            temp,
            file: Some(file),
        })
    }

    pub fn commit(mut self, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let file = self.file.take().expect("file present until commit");
        let mut out = BufWriter::new(file);
        write(&mut out)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&self.temp, &self.target)?;
        Ok(())
    }
}

impl Drop for AtomicFile {
    fn drop(&mut self) {
        if self.file.is_some() {
            let _ = fs::remove_file(&self.temp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            experiment: ExperimentKind::OracleOnly,
            seed: 3,
            run: 1,
            num_users: 2,
            num_elements: 4,
            tx_power_dbm: 40.0,
            epsilon: 0.0,
            scheme: Scheme::Oracle,
            sum_rate: 1.5,
            user_rate: None,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_rows(&[row()], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("oracle_only,3,1,2,4,40.0,0.0,oracle,1.5,,0.0"));
        assert_eq!(lines.next(), None);

        let mut out = Vec::new();
        write_rows(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn atomic_file_commits_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("r.csv");
        let f = AtomicFile::create(&target).unwrap();
        assert!(!target.exists());
        f.commit(|w| Ok(w.write_all(b"x\n")?)).unwrap();
        assert_eq!(fs::read_to_string(&target).unwrap(), "x\n");

        let abandoned = AtomicFile::create(&dir.path().join("q.csv")).unwrap();
        drop(abandoned);
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("r.csv")]);

        assert!(AtomicFile::create(&dir.path().join("missing/r.csv")).unwrap_err().is_config());
    }

    #[test]
    fn spec_validation() {
        let sys = SystemConfig::with_dims(2, 2).unwrap();
        let mut spec = ExperimentSpec::new(
            ExperimentKind::NomaVsOmaUsers,
            sys,
            TrainConfig::default(),
            SweepConfig::default(),
            1,
        );
        spec.validate().unwrap();
        spec.sweep.users.clear();
        assert!(spec.validate().unwrap_err().to_string().contains("users"));
        spec.kind = ExperimentKind::OracleOnly;
        spec.validate().unwrap();
        spec.sweep.runs = 0;
        assert!(spec.validate().is_err());
        spec.sweep.runs = 1;
        spec.kind = ExperimentKind::PolicyEval;
        assert!(spec.validate().is_err());
    }
}
