//! MIS delays of the hybrid NOR model.
//!
//! Conventions: `delta = t_B - t_A`. A falling output is triggered by the
//! earlier input, a rising output by the later one. Both start from a
//! long-settled state; the pure delay `delta_min` is added to the extracted
//! crossing time.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lintraj::{chain, Direction};
use crate::params::{GateParams, Mode, StateVector};

/// Input separation used as a stand-in for `+/-inf`.
pub const DELTA_INF: f64 = 2e-10;

/// Default crossing search horizon, seconds.
pub const DEFAULT_HORIZON: f64 = 1e-7;

/// Initial internal-node voltage for rising-output delays, where the
/// frozen node of mode 11 leaves it undetermined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VnPolicy {
    #[default]
    Gnd,
    Half,
    Vdd,
}

impl VnPolicy {
    pub const ALL: [VnPolicy; 3] = [VnPolicy::Gnd, VnPolicy::Half, VnPolicy::Vdd];

    pub fn voltage(self, v_dd: f64) -> f64 {
        match self {
            VnPolicy::Gnd => 0.0,
            VnPolicy::Half => v_dd / 2.0,
            VnPolicy::Vdd => v_dd,
        }
    }
}

impl std::str::FromStr for VnPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnd" | "0" => Ok(VnPolicy::Gnd),
            "half" => Ok(VnPolicy::Half),
            "vdd" => Ok(VnPolicy::Vdd),
            _ => Err(Error::Config(format!("unknown vn policy '{s}' (gnd, half, vdd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayQuery {
    pub polarity: Direction,
    pub delta: f64,
    #[serde(default)]
    pub vn_policy: VnPolicy,
}

/// Mode schedule and initial state reproducing a falling-output transition.
pub fn falling_schedule(params: &GateParams, delta: f64) -> (StateVector, Vec<(f64, Mode)>) {
    let init = StateVector::new(params.v_dd, params.v_dd);
    let first = if delta >= 0.0 { Mode::M10 } else { Mode::M01 };
    let sched = if delta == 0.0 { vec![(0.0, Mode::M11)] } else { vec![(0.0, first), (delta.abs(), Mode::M11)] };
    (init, sched)
}

/// Mode schedule and initial state for a rising-output transition whose
/// internal node starts at `vn`.
pub fn rising_schedule(delta: f64, vn: f64) -> (StateVector, Vec<(f64, Mode)>) {
    let init = StateVector::new(vn, 0.0);
    let first = if delta < 0.0 { Mode::M10 } else { Mode::M01 };
    let sched = if delta == 0.0 { vec![(0.0, Mode::M00)] } else { vec![(0.0, first), (delta.abs(), Mode::M00)] };
    (init, sched)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("input separation"))
    }
}

/// Falling-output delay `t_O + delta_min`.
pub fn delay_falling(params: &GateParams, delta: f64) -> Result<f64> {
    delay_falling_within(params, delta, DEFAULT_HORIZON)
}

pub fn delay_falling_within(params: &GateParams, delta: f64, horizon: f64) -> Result<f64> {
    check_delta(delta)?;
    let (init, sched) = falling_schedule(params, delta);
    let pw = chain(params, init, &sched)?;
    let t_o = pw
        .threshold_crossing(params.v_th, Direction::Falling, (0.0, horizon))
        .ok_or(Error::NoCrossing { target: params.v_th, horizon })?;
    Ok(t_o + params.delta_min)
}

/// Rising-output delay `t_O - t_s + delta_min` with `t_s = |delta|`.
pub fn delay_rising(params: &GateParams, delta: f64, vn_policy: VnPolicy) -> Result<f64> {
    delay_rising_within(params, delta, vn_policy.voltage(params.v_dd), DEFAULT_HORIZON)
}

/// Rising-output delay for an arbitrary initial internal-node voltage.
pub fn delay_rising_within(params: &GateParams, delta: f64, vn: f64, horizon: f64) -> Result<f64> {
    check_delta(delta)?;
    let (init, sched) = rising_schedule(delta, vn);
    let t_s = delta.abs();
    let pw = chain(params, init, &sched)?;
    let t_o = pw
        .threshold_crossing(params.v_th, Direction::Rising, (t_s, t_s + horizon))
        .ok_or(Error::NoCrossing { target: params.v_th, horizon })?;
    Ok(t_o - t_s + params.delta_min)
}

pub fn delay(params: &GateParams, q: &DelayQuery) -> Result<f64> {
    match q.polarity {
        Direction::Falling => delay_falling(params, q.delta),
        Direction::Rising => delay_rising(params, q.delta, q.vn_policy),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCurve {
    pub polarity: Direction,
    /// Only meaningful for rising outputs.
    pub vn_policy: Option<VnPolicy>,
    /// `(delta, delay)` pairs with strictly increasing `delta`.
    pub samples: Vec<(f64, f64)>,
}

pub fn delay_curve(params: &GateParams, polarity: Direction, vn_policy: VnPolicy, deltas: &[f64]) -> Result<DelayCurve> {
    if deltas.is_empty() {
        return Err(Error::Config("empty delta grid".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("delta grid must be strictly increasing".into()));
    }
    let samples = deltas
        .iter()
        .map(|&delta| {
            let q = DelayQuery { polarity, delta, vn_policy };
            delay(params, &q)
                .map(|d| (delta, d))
                .map_err(|e| Error::AtDelta { delta, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DelayCurve {
        polarity,
        vn_policy: (polarity == Direction::Rising).then_some(vn_policy),
        samples,
    })
}

/// Uniform grid of `n >= 2` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl DelayCurve {
    /// CSV with columns `delta_s,delay_s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta_s", "delay_s"])?;
        for (d, y) in &self.samples {
            w.write_record([crate::num(*d), crate::num(*y)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn argmin(&self) -> Option<(f64, f64)> {
        self.samples.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
