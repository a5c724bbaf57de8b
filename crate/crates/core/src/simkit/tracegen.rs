//! Random input traces with normally distributed transition gaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::DigitalTrace;
use crate::error::{Error, Result};

/// Smallest admissible gap between consecutive transitions.
pub const DEFAULT_GAP_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scope {
    /// Independent gap sequence per input.
    Local,
    /// One gap sequence shared by all inputs; each event goes to a random input.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceGenConfig {
    pub mu: f64,
    pub sigma: f64,
    /// Transitions per input (LOCAL) or in total (GLOBAL).
    pub count: usize,
    pub scope: Scope,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub gap_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_GAP_FLOOR
}

impl TraceGenConfig {
    pub fn new(mu: f64, sigma: f64, count: usize, scope: Scope, seed: u64) -> Self {
        TraceGenConfig { mu, sigma, count, scope, seed, gap_floor: DEFAULT_GAP_FLOOR }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Config(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.count == 0 {
            return Err(Error::Config("count must be >= 1".into()));
        }
        if !(self.gap_floor.is_finite() && self.gap_floor > 0.0) {
            return Err(Error::Config(format!("gap_floor must be > 0, got {}", self.gap_floor)));
        }
        Ok(())
    }
}

/// `n_inputs` traces starting low at `t = 0`; deterministic in `cfg.seed`.
pub fn generate_traces(cfg: &TraceGenConfig, n_inputs: usize) -> Result<Vec<DigitalTrace>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(cfg.mu, cfg.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let gap = |rng: &mut ChaCha8Rng| normal.sample(rng).max(cfg.gap_floor);

    let mut traces = vec![DigitalTrace::constant(false); n_inputs];
    match cfg.scope {
        Scope::Local => {
            for tr in &mut traces {
                let mut t = 0.0;
                for _ in 0..cfg.count {
                    t += gap(&mut rng);
                    tr.transitions.push(t);
                }
            }
        }
        Scope::Global if n_inputs > 0 => {
            let mut t = 0.0;
            for _ in 0..cfg.count {
                t += gap(&mut rng);
                let k = rng.random_range(0..n_inputs);
                traces[k].transitions.push(t);
            }
        }
        Scope::Global => {}
    }
    Ok(traces)
}
