//! Least-squares parametrization against characteristic delays.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::nelder_mead::nelder_mead;
use super::{characteristic_delays, CharacteristicDelays};
use crate::error::{Error, Result};
use crate::params::GateParams;

const PS: f64 = 1e-12;

/// Fit targets: the six characteristic delays and, optionally, a fixed pure
/// delay. Without `delta_min` the pure delay becomes a seventh fit variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTargets {
    #[serde(flatten)]
    pub delays: CharacteristicDelays,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
}

/// Box constraints, SI units. `r4_over_r3` bounds the ratio of the two
/// pull-down resistances, which are nominally matched devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamBounds {
    pub resistance: (f64, f64),
    pub c_int: (f64, f64),
    pub c_out: (f64, f64),
    pub r4_over_r3: (f64, f64),
    pub delta_min: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            resistance: (1e3, 1e6),
            c_int: (1e-19, 1e-14),
            c_out: (1e-18, 1e-13),
            r4_over_r3: (0.5, 2.0),
            delta_min: (0.0, 1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weights in the order of [`CharacteristicDelays::NAMES`].
    pub weights: [f64; 6],
    pub bounds: ParamBounds,
    pub max_iter: usize,
    /// Convergence tolerance on the objective spread, ps^2.
    pub tol: f64,
    /// Number of grid points the simplex search is started from.
    pub starts: usize,
    /// Simplex re-initializations around the incumbent per start.
    pub restarts: usize,
    /// Largest weighted residual still counted as a match, seconds.
    pub match_tol: f64,
    pub v_dd: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            weights: [1.0; 6],
            bounds: ParamBounds::default(),
            max_iter: 4000,
            tol: 1e-12,
            starts: 4,
            restarts: 4,
            match_tol: 0.1 * PS,
            v_dd: 0.8,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Config("weights must be >= 0 and not all zero".into()));
        }
        let b = &self.bounds;
        for (name, (lo, hi)) in [
            ("resistance", b.resistance),
            ("c_int", b.c_int),
            ("c_out", b.c_out),
            ("r4_over_r3", b.r4_over_r3),
        ] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::Config(format!("bounds for {name} must satisfy 0 < lo < hi")));
            }
        }
        if !(b.delta_min.0 >= 0.0 && b.delta_min.1 >= b.delta_min.0) {
            return Err(Error::Config("delta_min bounds must satisfy 0 <= lo <= hi".into()));
        }
        if !(self.v_dd > 0.0) || self.starts == 0 {
            return Err(Error::Config("v_dd must be > 0 and starts >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub target: f64,
    pub model: f64,
    pub weight: f64,
}

impl Residual {
    pub fn residual(&self) -> f64 {
        self.model - self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: GateParams,
    pub model: CharacteristicDelays,
    pub residuals: Vec<Residual>,
    /// Weighted sum of squared residuals, ps^2.
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Every weighted target matched within `match_tol`.
    pub feasible: bool,
    pub diagnostics: Vec<String>,
    /// Best objective after each simplex iteration, across all restarts of
    /// the winning start.
    pub history: Vec<f64>,
}

impl FitReport {
    /// CSV with columns `name,target_s,model_s,residual_s,weight`.
    pub fn write_residuals_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "target_s", "model_s", "residual_s", "weight"])?;
        for r in &self.residuals {
            w.write_record([
                r.name.clone(),
                crate::num(r.target),
                crate::num(r.model),
                crate::num(r.residual()),
                crate::num(r.weight),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn max_weighted_residual(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.weight > 0.0)
            .map(|r| r.residual().abs())
            .fold(0.0, f64::max)
    }
}

/// Coordinates: `ln r1, ln r2, ln r3, ln(r4/r3), ln c_int, ln c_out` and,
/// when free, `delta_min` in ps.
struct Space {
    fixed_delta: Option<f64>,
    v_dd: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Space {
    fn new(cfg: &FitConfig, fixed_delta: Option<f64>) -> Self {
        let b = &cfg.bounds;
        let (rl, rh) = (b.resistance.0.ln(), b.resistance.1.ln());
        let mut lower = vec![rl, rl, rl, b.r4_over_r3.0.ln(), b.c_int.0.ln(), b.c_out.0.ln()];
        let mut upper = vec![rh, rh, rh, b.r4_over_r3.1.ln(), b.c_int.1.ln(), b.c_out.1.ln()];
        if fixed_delta.is_none() {
            lower.push(b.delta_min.0 / PS);
            upper.push(b.delta_min.1 / PS);
        }
        Space { fixed_delta, v_dd: cfg.v_dd, lower, upper }
    }

    fn params(&self, x: &[f64]) -> GateParams {
        let r3 = x[2].exp();
        GateParams {
            r1: x[0].exp(),
            r2: x[1].exp(),
            r3,
            r4: r3 * x[3].exp(),
            c_int: x[4].exp(),
            c_out: x[5].exp(),
            v_dd: self.v_dd,
            v_th: self.v_dd / 2.0,
            delta_min: self.fixed_delta.unwrap_or_else(|| x[6] * PS),
        }
    }

    fn coords(&self, p: &GateParams) -> Vec<f64> {
        let mut x = vec![p.r1.ln(), p.r2.ln(), p.r3.ln(), (p.r4 / p.r3).ln(), p.c_int.ln(), p.c_out.ln()];
        if self.fixed_delta.is_none() {
            x.push(p.delta_min / PS);
        }
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
        x
    }
}

fn objective(space: &Space, targets: &[f64; 6], weights: &[f64; 6], x: &[f64]) -> f64 {
    match characteristic_delays(&space.params(x)) {
        Ok(model) => model
            .as_array()
            .iter()
            .zip(targets)
            .zip(weights)
            .map(|((m, t), w)| w * ((m - t) / PS).powi(2))
            .sum(),
        Err(_) => 1e12,
    }
}

/// Pure delay making the falling ratio land at `1 + rho` for the geometric
/// middle `rho` of the allowed `r4/r3` range.
fn initial_delta(targets: &CharacteristicDelays, cfg: &FitConfig) -> f64 {
    let (lo, hi) = cfg.bounds.r4_over_r3;
    let rho = (lo * hi).sqrt();
    let d = ((1.0 + rho) * targets.d_fall_zero - targets.d_fall_minus_inf) / rho;
    let cap = targets.as_array().iter().copied().fold(f64::INFINITY, f64::min) * 0.9;
    d.clamp(cfg.bounds.delta_min.0, cfg.bounds.delta_min.1.min(cap).max(cfg.bounds.delta_min.0))
}

/// Coarse start grid seeded by the closed forms of the falling delays.
fn start_grid(targets: &CharacteristicDelays, cfg: &FitConfig, delta: f64) -> Vec<GateParams> {
    let b = &cfg.bounds;
    let tau_m = ((targets.d_fall_minus_inf - delta) / std::f64::consts::LN_2).max(1e-15);
    let tau_0 = ((targets.d_fall_zero - delta) / std::f64::consts::LN_2).max(1e-15);
    let ratio = (tau_m / tau_0 - 1.0).clamp(b.r4_over_r3.0, b.r4_over_r3.1);
    let r_mid = (b.resistance.0 * b.resistance.1).sqrt();
    let c_out = (tau_m / r_mid).clamp(b.c_out.0, b.c_out.1);
    let r4 = tau_m / c_out;
    let r3 = r4 / ratio;
    let mut grid = Vec::new();
    for ci_frac in [0.03, 0.1, 0.3] {
        for r1_frac in [0.5, 1.0, 2.0] {
            for r2_frac in [0.5, 1.0, 2.0] {
                grid.push(GateParams {
                    r1: r3 * r1_frac,
                    r2: r3 * r2_frac,
                    r3,
                    r4,
                    c_int: c_out * ci_frac,
                    c_out,
                    v_dd: cfg.v_dd,
                    v_th: cfg.v_dd / 2.0,
                    delta_min: delta,
                });
            }
        }
    }
    grid
}

fn pre_diagnostics(targets: &CharacteristicDelays, cfg: &FitConfig, fixed: Option<f64>) -> Vec<String> {
    let mut out = Vec::new();
    let Some(delta) = fixed else { return out };
    for ((name, t), w) in CharacteristicDelays::NAMES.iter().zip(targets.as_array()).zip(cfg.weights) {
        if w > 0.0 && t <= delta {
            out.push(format!("{name} = {t:e} s does not exceed delta_min = {delta:e} s"));
        }
    }
    if cfg.weights[0] > 0.0 && cfg.weights[1] > 0.0 && targets.d_fall_zero > delta {
        let ratio = (targets.d_fall_minus_inf - delta) / (targets.d_fall_zero - delta);
        let (lo, hi) = cfg.bounds.r4_over_r3;
        if ratio < 1.0 + lo || ratio > 1.0 + hi {
            out.push(format!(
                "falling ratio (d_fall_minus_inf - delta_min)/(d_fall_zero - delta_min) = {ratio:.4} \
                 needs r4/r3 = {:.4}, outside [{lo}, {hi}]; achievable ratio range is [{:.4}, {:.4}]",
                ratio - 1.0,
                1.0 + lo,
                1.0 + hi
            ));
        }
    }
    out
}

/// Fits gate parameters to `targets` by multi-start bounded simplex search
/// on the exact model delays.
pub fn fit(targets: &FitTargets, cfg: &FitConfig) -> Result<FitReport> {
    targets.delays.validate()?;
    cfg.validate()?;
    if let Some(d) = targets.delta_min {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("fixed delta_min = {d} must be >= 0")));
        }
    }
    let space = Space::new(cfg, targets.delta_min);
    let t = targets.delays.as_array();
    let f = |x: &[f64]| objective(&space, &t, &cfg.weights, x);

    let delta0 = targets.delta_min.unwrap_or_else(|| initial_delta(&targets.delays, cfg));
    let mut grid: Vec<(f64, Vec<f64>)> = start_grid(&targets.delays, cfg, delta0)
        .iter()
        .map(|p| {
            let x = space.coords(p);
            (f(&x), x)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize)> = None;
    let mut evaluations = grid.len();
    for (_, x0) in grid.into_iter().take(cfg.starts) {
        let mut x = x0;
        let mut history: Vec<f64> = Vec::new();
        let mut iters = 0;
        let mut value = f64::INFINITY;
        for round in 0..=cfg.restarts {
            let scale = if round == 0 { 0.3 } else { 0.05 };
            let step: Vec<f64> = (0..x.len()).map(|i| if i == 6 { 2.0 } else { scale }).collect();
            let r = nelder_mead(f, &x, &step, &space.lower, &space.upper, cfg.max_iter, cfg.tol);
            evaluations += r.evaluations;
            iters += r.iterations;
            let floor = history.last().copied().unwrap_or(f64::INFINITY);
            history.extend(r.history.iter().map(|v| v.min(floor)));
            let improved = r.value < value;
            if improved {
                value = r.value;
                x = r.x;
            }
            if !improved || value <= cfg.tol {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, x, history, iters));
        }
    }
    let (objective, x, history, iterations) = best.expect("at least one start");
    let params = space.params(&x);
    let model = characteristic_delays(&params)?;
    let residuals: Vec<Residual> = CharacteristicDelays::NAMES
        .iter()
        .zip(t)
        .zip(model.as_array())
        .zip(cfg.weights)
        .map(|(((name, target), model), weight)| Residual { name: name.to_string(), target, model, weight })
        .collect();

    let mut diagnostics = pre_diagnostics(&targets.delays, cfg, targets.delta_min);
    let mut report = FitReport {
        params,
        model,
        residuals,
        objective,
        iterations,
        evaluations,
        feasible: false,
        diagnostics: Vec::new(),
        history,
    };
    let worst = report.max_weighted_residual();
    if worst > cfg.match_tol {
        diagnostics.push(format!(
            "largest weighted residual {worst:e} s exceeds match tolerance {:e} s",
            cfg.match_tol
        ));
    }
    report.feasible = diagnostics.is_empty();
    report.diagnostics = diagnostics;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = FitConfig::default();
        assert!(c.validate().is_ok());
        c.weights = [0.0; 6];
        assert!(c.validate().is_err());
        let mut c = FitConfig::default();
        c.bounds.c_int = (1e-15, 1e-16);
        assert!(c.validate().is_err());
    }

    #[test]
    fn initial_delta_hits_paper_ratio() {
        let d = CharacteristicDelays::from_array([38e-12, 28e-12, 39e-12, 55e-12, 55e-12, 53e-12]);
        let delta = initial_delta(&d, &FitConfig::default());
        assert!((delta - 18e-12).abs() < 1e-20);
    }

    #[test]
    fn targets_json_with_optional_delta() {
        let s = r#"{"d_fall_minus_inf":3.8e-11,"d_fall_zero":2.8e-11,"d_fall_plus_inf":3.9e-11,
                    "d_rise_minus_inf":5.5e-11,"d_rise_zero":5.5e-11,"d_rise_plus_inf":5.3e-11}"#;
        let t: FitTargets = serde_json::from_str(s).unwrap();
        assert_eq!(t.delta_min, None);
        let s2 = s.replace('}', r#","delta_min":1.8e-11}"#);
        let t: FitTargets = serde_json::from_str(&s2).unwrap();
        assert_eq!(t.delta_min, Some(1.8e-11));
    }

    #[test]
    fn ratio_conflict_is_diagnosed_before_fitting() {
        let d = CharacteristicDelays::from_array([38e-12, 28e-12, 39e-12, 55e-12, 55e-12, 53e-12]);
        let diag = pre_diagnostics(&d, &FitConfig::default(), Some(0.0));
        assert_eq!(diag.len(), 1);
        assert!(diag[0].contains("outside"));
        assert!(pre_diagnostics(&d, &FitConfig::default(), Some(18e-12)).is_empty());
    }
}
