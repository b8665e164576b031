use rand::Rng;
use rand_distr::StandardNormal;

/// Ornstein-Uhlenbeck exploration noise, one independent coordinate per action.
#[derive(Debug, Clone, PartialEq)]
pub struct OuProcess {
    pub x: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
    pub dt: f64,
}

impl OuProcess {
    /// Starts at `mu` in every coordinate.
    pub fn new(dim: usize, theta: f64, sigma: f64, mu: f64, dt: f64) -> Self {
        OuProcess {
            x: vec![mu; dim],
            theta,
            sigma,
            mu,
            dt,
        }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|x| *x = self.mu);
    }

    /// `x <- x + theta (mu - x) dt + sigma sqrt(dt) xi` and returns the new state.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let diffusion = self.sigma * self.dt.sqrt();
        for x in &mut self.x {
            let xi: f64 = rng.sample(StandardNormal);
            *x += self.theta * (self.mu - *x) * self.dt + diffusion * xi;
        }
        &self.x
    }
}
