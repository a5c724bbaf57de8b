//! Brute-force reference: fixed-step RK4 integration of the mode ODEs,
//! written directly from the branch currents of each RC topology.
//!
//! Used to validate the closed-form paths and, through [`AnalogReference`],
//! as the golden model when comparing delay channels. The analytic
//! simulation path never calls into it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lintraj::{validate_schedule, Direction};
use crate::misdelay::VnPolicy;
use crate::params::{GateParams, Mode, StateVector};
use crate::simkit::{gate_schedule, settle_time, DigitalTrace, Digitizer, ReferenceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    /// Upper bound on the step, seconds. Segments are split into equal
    /// substeps no longer than this so that switch times are hit exactly.
    pub step: f64,
    pub method: Method,
}

impl IntegrationConfig {
    pub fn rk4(step: f64) -> Self {
        IntegrationConfig { step, method: Method::Rk4 }
    }

    /// Step of `tau_min / divisor` where `tau_min` is the fastest time
    /// constant over the given modes.
    pub fn for_modes(params: &GateParams, modes: impl IntoIterator<Item = Mode>, divisor: f64) -> Self {
        let tau = modes
            .into_iter()
            .map(|m| params.fastest_time_constant(m))
            .fold(f64::INFINITY, f64::min);
        Self::rk4(tau / divisor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: StateVector,
}

/// Right-hand side of the mode ODE, from Kirchhoff's current law at N and O.
pub fn derivative(p: &GateParams, mode: Mode, v: StateVector) -> StateVector {
    let StateVector { v_n, v_o } = v;
    match (mode.a, mode.b) {
        // both pull-downs on, N isolated
        (true, true) => StateVector::new(0.0, -(v_o / p.r3 + v_o / p.r4) / p.c_out),
        // T2 and T3 conduct
        (true, false) => {
            let i_int = -(v_n - v_o) / p.r2;
            StateVector::new(i_int / p.c_int, (-v_o / p.r3 - i_int) / p.c_out)
        }
        // T1 and T4 conduct
        (false, true) => StateVector::new((p.v_dd - v_n) / p.r1 / p.c_int, -v_o / p.r4 / p.c_out),
        // both pull-ups on
        (false, false) => {
            let i_o = (v_n - v_o) / p.r2;
            let i_1 = (p.v_dd - v_n) / p.r1;
            StateVector::new((i_1 - i_o) / p.c_int, i_o / p.c_out)
        }
    }
}

fn rk4_step(p: &GateParams, mode: Mode, y: StateVector, h: f64) -> StateVector {
    let add = |a: StateVector, k: StateVector, s: f64| StateVector::new(a.v_n + s * k.v_n, a.v_o + s * k.v_o);
    let k1 = derivative(p, mode, y);
    let k2 = derivative(p, mode, add(y, k1, h / 2.0));
    let k3 = derivative(p, mode, add(y, k2, h / 2.0));
    let k4 = derivative(p, mode, add(y, k3, h));
    StateVector::new(
        y.v_n + h / 6.0 * (k1.v_n + 2.0 * k2.v_n + 2.0 * k3.v_n + k4.v_n),
        y.v_o + h / 6.0 * (k1.v_o + 2.0 * k2.v_o + 2.0 * k3.v_o + k4.v_o),
    )
}

/// Integrates the switched system on `[0, horizon]`, calling `visit` for the
/// initial state and after every step. Switch times are always sample times.
pub fn integrate_with<F>(
    params: &GateParams,
    schedule: &[(f64, Mode)],
    init: StateVector,
    horizon: f64,
    cfg: &IntegrationConfig,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(f64, StateVector),
{
    validate_schedule(schedule)?;
    params.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Config(format!("horizon must be positive, got {horizon:e}")));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {:e}", cfg.step)));
    }
    for &(t_s, mode) in schedule {
        if t_s >= horizon {
            break;
        }
        let limit = params.fastest_time_constant(mode) / 100.0;
        if cfg.step > limit {
            return Err(Error::StepTooLarge { step: cfg.step, limit, mode });
        }
    }

    let mut y = init;
    visit(0.0, y);
    for (i, &(start, mode)) in schedule.iter().enumerate() {
        if start >= horizon {
            break;
        }
        let end = schedule.get(i + 1).map_or(horizon, |s| s.0.min(horizon));
        let n = ((end - start) / cfg.step).ceil().max(1.0) as u64;
        let h = (end - start) / n as f64;
        for k in 1..=n {
            y = rk4_step(params, mode, y, h);
            let t = if k == n { end } else { start + k as f64 * h };
            visit(t, y);
        }
    }
    Ok(())
}

/// Dense samples of the switched trajectory.
pub fn integrate(
    params: &GateParams,
    schedule: &[(f64, Mode)],
    init: StateVector,
    horizon: f64,
    cfg: &IntegrationConfig,
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity((horizon / cfg.step).min(1e7) as usize + schedule.len() + 1);
    integrate_with(params, schedule, init, horizon, cfg, |t, state| out.push(Sample { t, state }))?;
    Ok(out)
}

/// First output crossing of `v_target` in `direction`, linearly
/// interpolated between the bracketing samples.
pub fn crossing_from_samples(samples: &[Sample], v_target: f64, direction: Direction) -> Option<f64> {
    samples.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (fa, fb) = (a.state.v_o - v_target, b.state.v_o - v_target);
        let hit = match direction {
            Direction::Falling => fa > 0.0 && fb <= 0.0,
            Direction::Rising => fa < 0.0 && fb >= 0.0,
        };
        hit.then(|| a.t + (b.t - a.t) * fa / (fa - fb))
    })
}

/// CSV dump with columns `t,v_n,v_o`.
pub fn write_samples_csv<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v_n", "v_o"])?;
    for s in samples {
        w.write_record([crate::num(s.t), crate::num(s.state.v_n), crate::num(s.state.v_o)])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-input NOR gate simulated by integrating the mode ODEs and digitizing
/// `v_o` at `v_th`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogReference {
    pub params: GateParams,
    #[serde(default)]
    pub initial_vn: VnPolicy,
    /// The step is `tau_min / step_divisor` over all four modes.
    #[serde(default = "default_divisor")]
    pub step_divisor: f64,
}

fn default_divisor() -> f64 {
    100.0
}

impl AnalogReference {
    pub fn new(params: GateParams) -> Self {
        AnalogReference { params, initial_vn: VnPolicy::default(), step_divisor: default_divisor() }
    }
}

impl ReferenceModel for AnalogReference {
    fn reference(&self, a: &DigitalTrace, b: &DigitalTrace) -> Result<DigitalTrace> {
        let (init, sched) = gate_schedule(&self.params, a, b, self.initial_vn)?;
        let &(last, mode) = sched.last().expect("schedule is never empty");
        let horizon = last + settle_time(&self.params, mode);
        let cfg = IntegrationConfig::for_modes(&self.params, Mode::ALL, self.step_divisor);
        let mut dig = Digitizer::new(self.params.v_th);
        integrate_with(&self.params, &sched, init, horizon, &cfg, |t, s| dig.push(t, s.v_o))?;
        Ok(dig.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode11_matches_scalar_exponential() {
        let p = GateParams::table_i();
        let k = (1.0 / p.r3 + 1.0 / p.r4) / p.c_out;
        let cfg = IntegrationConfig::rk4(1.0 / k / 1000.0);
        let s = integrate(&p, &[(0.0, Mode::M11)], StateVector::new(p.v_dd, p.v_dd), 1e-10, &cfg).unwrap();
        for x in &s {
            assert_eq!(x.state.v_n, p.v_dd);
            assert!((x.state.v_o - p.v_dd * (-k * x.t).exp()).abs() < 1e-9 * p.v_dd);
        }
    }

    #[test]
    fn mode01_node_charges() {
        let p = GateParams::table_i();
        let tau = p.c_int * p.r1;
        let cfg = IntegrationConfig::rk4(tau / 1000.0);
        let s = integrate(&p, &[(0.0, Mode::M01)], StateVector::new(0.0, p.v_dd), 2e-11, &cfg).unwrap();
        for x in &s {
            assert!((x.state.v_n - p.v_dd * (1.0 - (-x.t / tau).exp())).abs() < 1e-9 * p.v_dd);
        }
    }

    #[test]
    fn step_limit_enforced() {
        let p = GateParams::table_i();
        let cfg = IntegrationConfig::rk4(1e-12);
        let err = integrate(&p, &[(0.0, Mode::M00)], StateVector::default(), 1e-10, &cfg).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn switch_times_are_sampled() {
        let p = GateParams::table_i();
        let cfg = IntegrationConfig::for_modes(&p, Mode::ALL, 200.0);
        let sched = [(0.0, Mode::M10), (1.234e-11, Mode::M11)];
        let s = integrate(&p, &sched, StateVector::new(0.8, 0.8), 3e-11, &cfg).unwrap();
        assert!(s.iter().any(|x| x.t == 1.234e-11));
        assert_eq!(s.last().unwrap().t, 3e-11);
    }

    #[test]
    fn crossing_interpolation() {
        let flat: Vec<Sample> =
            (0..10).map(|i| Sample { t: i as f64, state: StateVector::new(0.8, 0.8) }).collect();
        assert_eq!(crossing_from_samples(&flat, 0.4, Direction::Falling), None);
        let two = [
            Sample { t: 1.0, state: StateVector::new(0.0, 0.6) },
            Sample { t: 2.0, state: StateVector::new(0.0, 0.2) },
        ];
        assert_eq!(crossing_from_samples(&two, 0.4, Direction::Falling), Some(1.5));
        assert_eq!(crossing_from_samples(&two, 0.4, Direction::Rising), None);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = [Sample { t: 0.0, state: StateVector::new(0.1, 0.2) }];
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,v_n,v_o\n0e0,1e-1,2e-1\n");
    }
}
