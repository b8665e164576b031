//! Rician fading channels for the BS -> IRS -> user cascade.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// One draw of every channel in the scenario. Users are ordered farthest
/// first, so `h_r[0]` is user 1 and `h_r[K - 1]` the nearest user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS -> IRS, path loss included.
    pub h_t: Vec<Complex64>,
    /// IRS -> user k, path loss included.
    pub h_r: Vec<Vec<Complex64>>,
    pub user_distances_m: Vec<f64>,
}

impl ChannelRealization {
    pub fn num_users(&self) -> usize {
        self.h_r.len()
    }

    pub fn num_elements(&self) -> usize {
        self.h_t.len()
    }

    /// Cascaded gain of every user under the given phases, user 1 first.
    pub fn gains(&self, phases: &[f64]) -> Result<Vec<Complex64>> {
        self.h_r
            .iter()
            .map(|h_r| effective_gain(h_r, phases, &self.h_t))
            .collect()
    }
}

/// Circularly symmetric complex Gaussian with unit total variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `sqrt(pl) * (sqrt(k/(k+1)) * los + sqrt(1/(k+1)) * nlos)` with i.i.d.
/// CN(0, 1) scattering. An infinite `k_factor` yields the pure LoS vector.
pub fn sample_rician<R: Rng + ?Sized>(
    los_component: &[Complex64],
    k_factor: f64,
    path_loss_linear: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if !(k_factor >= 0.0) {
        return Err(Error::Parameter(format!(
            "Rician factor must be non-negative, got {k_factor}"
        )));
    }
    if !(path_loss_linear > 0.0) || !path_loss_linear.is_finite() {
        return Err(Error::Parameter(format!(
            "path loss must be positive and finite, got {path_loss_linear}"
        )));
    }
    if let Some(bad) = los_component.iter().find(|c| (c.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::Parameter(format!(
            "LoS component entries must have unit modulus, found |{bad}| = {}",
            bad.norm()
        )));
    }
    let (los_w, nlos_w) = if k_factor.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k_factor / (k_factor + 1.0)).sqrt(), (1.0 / (k_factor + 1.0)).sqrt())
    };
    let amplitude = path_loss_linear.sqrt();
    Ok(los_component
        .iter()
        .map(|&los| {
            // always draw, so the random stream does not depend on k
            let nlos = complex_normal(rng);
            (los * los_w + nlos * nlos_w) * amplitude
        })
        .collect())
}

/// Power-law path loss `10^(ref_loss_db/10) * (d / d_ref)^(-exponent)`.
pub fn path_loss_linear(
    distance_m: f64,
    exponent: f64,
    ref_loss_db: f64,
    ref_dist_m: f64,
) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Parameter(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    if !(ref_dist_m > 0.0) {
        return Err(Error::Parameter(format!(
            "reference distance must be positive, got {ref_dist_m}"
        )));
    }
    Ok(10f64.powf(ref_loss_db / 10.0) * (distance_m / ref_dist_m).powf(-exponent))
}

/// `h_r^H diag(e^{j theta}) h_t`.
pub fn effective_gain(h_r_k: &[Complex64], phases: &[f64], h_t: &[Complex64]) -> Result<Complex64> {
    let m = h_t.len();
    if h_r_k.len() != m {
        return Err(Error::dim("effective_gain h_r", m, h_r_k.len()));
    }
    if phases.len() != m {
        return Err(Error::dim("effective_gain phases", m, phases.len()));
    }
    Ok(h_r_k
        .iter()
        .zip(phases)
        .zip(h_t)
        .map(|((hr, &theta), ht)| hr.conj() * Complex64::cis(theta) * ht)
        .sum())
}

/// All-ones line-of-sight vector used for every link.
pub fn los_vector(num_elements: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); num_elements]
}

/// Draws user distances (sorted farthest first) and every channel of one scenario.
pub fn sample_scenario<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    let m = config.num_elements;
    let mut user_distances_m: Vec<f64> = (0..config.num_users)
        .map(|_| rng.gen_range(config.dist_user_min_m..=config.dist_user_max_m))
        .collect();
    user_distances_m.sort_by(|a, b| b.total_cmp(a));

    let los = los_vector(m);
    let pl_t = path_loss_linear(
        config.dist_bs_irs_m,
        config.pl_exp_bs_irs,
        config.ref_loss_db,
        config.ref_dist_m,
    )?;
    let h_t = sample_rician(&los, config.rician_k1, pl_t, rng)?;
    let h_r = user_distances_m
        .iter()
        .map(|&d| {
            let pl = path_loss_linear(d, config.pl_exp_irs_user, config.ref_loss_db, config.ref_dist_m)?;
            sample_rician(&los, config.rician_k2, pl, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization {
        h_t,
        h_r,
        user_distances_m,
    })
}
