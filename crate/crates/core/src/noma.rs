//! Power-domain NOMA: power split, SINR with (im)perfect SIC, sum rate, and
//! the equal-share OMA baseline.
//!
//! Users are indexed farthest first. User k decodes and cancels users
//! `1..k` before decoding its own signal, and sees users `k+1..K` as
//! interference. With imperfect SIC a fraction `eps` of the cancelled
//! users' power remains.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Per-user SINRs and rates (bits/s/Hz) for one phase configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_sinr: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
}

impl RateReport {
    /// Rate of the nearest user (user K).
    pub fn nearest_user_rate(&self) -> f64 {
        *self.per_user_rate.last().expect("reports are never empty")
    }
}

/// Largest user count whose geometric split keeps `beta_k > sum_{j>k} beta_j`
/// in double precision.
pub const MAX_USERS: usize = 54;

/// Geometric split `beta_k = 2^(K-k) / (2^K - 1)`, farthest user first.
pub fn allocate_power(num_users: usize) -> Result<Vec<f64>> {
    if num_users == 0 {
        return Err(Error::Parameter("allocate_power needs at least one user".into()));
    }
    if num_users > MAX_USERS {
        return Err(Error::Parameter(format!(
            "allocate_power: at most {MAX_USERS} users, got {num_users} (beyond that the split's dominance is lost to rounding)"
        )));
    }
    let k = num_users as i32;
    // divide by 2^K first so large K stays finite
    let denom = 1.0 - 2f64.powi(-k);
    Ok((1..=k).map(|i| 2f64.powi(-i) / denom).collect())
}

/// Noise power in watts for a PSD in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_watts(noise_psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let dbm = noise_psd_dbm_hz + 10.0 * bandwidth_hz.log10();
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

/// SINR of every user under SIC with residual fraction `eps`.
/// `eps = 0` is perfect cancellation.
pub fn sinr_noma(
    gains: &[Complex64],
    p_watts: f64,
    beta: &[f64],
    noise_watts: f64,
    eps: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("eps must lie in [0, 1], got {eps}")));
    }
    if !(noise_watts > 0.0) {
        return Err(Error::Parameter(format!(
            "noise power must be positive, got {noise_watts}"
        )));
    }
    if !(p_watts >= 0.0) {
        return Err(Error::Parameter(format!(
            "transmit power must be non-negative, got {p_watts}"
        )));
    }
    if beta.len() != gains.len() {
        return Err(Error::dim("sinr_noma power_coeffs", gains.len(), beta.len()));
    }
    let num_users = gains.len();
    Ok((0..num_users)
        .map(|k| {
            let g2 = gains[k].norm_sqr();
            let signal = g2 * beta[k] * p_watts;
            let residual: f64 = (0..k).map(|j| g2 * beta[j] * p_watts).sum();
            let interference: f64 = (k + 1..num_users).map(|i| g2 * beta[i] * p_watts).sum();
            signal / (eps * residual + interference + noise_watts)
        })
        .collect())
}

/// `log2(1 + sinr)` per user and their sum.
pub fn sum_rate(sinrs: &[f64]) -> Result<RateReport> {
    if sinrs.is_empty() {
        return Err(Error::Parameter("sum_rate needs at least one user".into()));
    }
    if let Some(bad) = sinrs.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("SINR must be non-negative, got {bad}")));
    }
    let per_user_rate: Vec<f64> = sinrs.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(RateReport {
        sum_rate: per_user_rate.iter().sum(),
        per_user_sinr: sinrs.to_vec(),
        per_user_rate,
    })
}

/// Equal time/frequency share: each user is interference-free at full power
/// for a 1/K fraction of the resource.
pub fn oma_sum_rate(gains: &[Complex64], p_watts: f64, noise_watts: f64) -> Result<RateReport> {
    if gains.is_empty() {
        return Err(Error::Parameter("oma_sum_rate needs at least one user".into()));
    }
    if !(noise_watts > 0.0) {
        return Err(Error::Parameter(format!(
            "noise power must be positive, got {noise_watts}"
        )));
    }
    let share = gains.len() as f64;
    let per_user_sinr: Vec<f64> = gains.iter().map(|g| g.norm_sqr() * p_watts / noise_watts).collect();
    if let Some(bad) = per_user_sinr.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("SNR must be non-negative, got {bad}")));
    }
    let per_user_rate: Vec<f64> = per_user_sinr.iter().map(|s| (1.0 + s).log2() / share).collect();
    Ok(RateReport {
        sum_rate: per_user_rate.iter().sum(),
        per_user_sinr,
        per_user_rate,
    })
}

/// NOMA rates of `channels` under `phases`, using the config's power, split and eps.
pub fn evaluate_noma(channels: &ChannelRealization, config: &SystemConfig, phases: &[f64]) -> Result<RateReport> {
    evaluate_noma_with(channels, config, phases, config.tx_power_dbm, config.sic_residual_eps)
}

/// As [`evaluate_noma`] with the transmit power and SIC residual overridden.
pub fn evaluate_noma_with(
    channels: &ChannelRealization,
    config: &SystemConfig,
    phases: &[f64],
    tx_power_dbm: f64,
    eps: f64,
) -> Result<RateReport> {
    let gains = channels.gains(phases)?;
    let sinrs = sinr_noma(
        &gains,
        crate::config::dbm_to_watts(tx_power_dbm),
        &config.power_coeffs,
        config.noise_power_watts()?,
        eps,
    )?;
    sum_rate(&sinrs)
}

pub fn evaluate_oma(channels: &ChannelRealization, config: &SystemConfig, phases: &[f64]) -> Result<RateReport> {
    let gains = channels.gains(phases)?;
    oma_sum_rate(&gains, config.tx_power_watts(), config.noise_power_watts()?)
}
