use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-noma")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("c.cfg");
    std::fs::write(
        &path,
        "# two users, two elements\nnum_users = 2\nnum_elements = 2\ngrid_steps = 4\nruns = 3\n\
         num_episodes = 1\nsteps_per_episode = 16\nhidden_units = 8\nbatch_size = 8\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn oracle_writes_header_and_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("r.csv");
    let o = cli(&["oracle", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap(), "--runs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "experiment,seed,run,K,M,tx_power_dbm,epsilon,scheme,sum_rate,user_rate,wall_time_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("oracle_only,1,0,2,2,"));
    assert!(lines[2].starts_with("oracle_only,1,1,2,2,"));
}

#[test]
fn stdout_when_no_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = cli(&["sweep-users", "--config", &cfg, "--deterministic"]);
    assert!(o.status.success());
    // default users list 2,4,8 x 3 runs x 2 schemes
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 18);
}

#[test]
fn missing_config_exits_2_naming_the_flag() {
    let o = cli(&["oracle", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn unknown_flag_prints_usage_and_exits_2() {
    let o = cli(&["sweep-power", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "num_usres = 4\n").unwrap();
    let o = cli(&["oracle", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("num_usres"));
}

#[test]
fn grid_guard_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.cfg");
    std::fs::write(&path, "num_users = 2\nnum_elements = 16\ngrid_steps = 16\n").unwrap();
    let o = cli(&["oracle", "--config", path.to_str().unwrap(), "--runs", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("40"));
}

#[test]
fn failure_while_writing_results_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let occupied = dir.path().join("taken");
    std::fs::create_dir(&occupied).unwrap();
    std::fs::write(occupied.join("keep"), "x").unwrap();
    let o = cli(&["oracle", "--config", &cfg, "--out", occupied.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_documents_config_keys() {
    let o = cli(&["--help"]);
    assert!(o.status.success());
    let help = String::from_utf8(o.stdout).unwrap();
    for key in [
        "num_users", "num_elements", "tx_power_dbm", "bandwidth_hz", "noise_psd_dbm_hz", "rician_k1", "rician_k2",
        "pl_exp_bs_irs", "pl_exp_irs_user", "dist_bs_irs_m", "dist_user_min_m", "dist_user_max_m", "sic_residual_eps",
        "power_coeffs", "actor_lr", "critic_lr", "gamma_discount", "tau", "batch_size", "buffer_capacity",
        "steps_per_episode", "num_episodes", "seed", "hidden_units", "ou_theta", "ou_sigma",
    ] {
        assert!(help.contains(key), "help lacks {key}");
    }
    for cmd in ["train", "eval", "oracle", "sweep-users", "sweep-power", "sweep-eps", "compare-upperbound"] {
        assert!(help.contains(cmd), "help lacks {cmd}");
    }
}

#[test]
fn repeated_commands_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    for cmd in ["sweep-eps", "compare-upperbound", "train"] {
        let run = |i: usize| {
            let out = dir.path().join(format!("{cmd}{i}.csv"));
            let o = cli(&[cmd, "--config", &cfg, "--seed", "4", "--deterministic", "--out", out.to_str().unwrap()]);
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
            std::fs::read(out).unwrap()
        };
        assert_eq!(run(0), run(1), "{cmd}");
    }
}

#[test]
fn train_then_eval_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let ckpt = dir.path().join("ckpt");
    let log = dir.path().join("log.csv");
    let o = cli(&[
        "train", "--config", &cfg, "--runs", "1", "--checkpoint", ckpt.to_str().unwrap(), "--log", log.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(log).unwrap();
    assert!(log.starts_with("run,episode,step,reward,sum_rate,best_sum_rate\n"));
    assert_eq!(log.lines().count(), 1 + 16);

    let o = cli(&["eval", "--config", &cfg, "--runs", "2", "--checkpoint", ckpt.join("run-0").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("policy_eval")).count(), 4);

    let o = cli(&["eval", "--config", &cfg, "--checkpoint", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            irs_noma::config::FileConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
