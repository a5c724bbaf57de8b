//! Delay channels for single-output gates.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::hybrid::apply_hybrid_nor;
use super::trace::{nor_eval, DigitalTrace};
use crate::error::{Error, Result};
use crate::misdelay::{delay_falling, delay_rising, VnPolicy, DELTA_INF};
use crate::params::GateParams;

/// Delay of the exp-involution channel when calibrated from a hybrid model.
pub const EXP_DELTA_MIN: f64 = 20e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    Pure {
        delay: f64,
    },
    Inertial {
        delay: f64,
        /// Pulses shorter than this are removed; defaults to `delay`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    ExpInvolution(ExpChannel),
    HybridNor {
        params: GateParams,
        #[serde(default)]
        initial_vn: VnPolicy,
    },
}

impl ChannelModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ChannelModel::Pure { .. } => "pure",
            ChannelModel::Inertial { .. } => "inertial",
            ChannelModel::ExpInvolution(_) => "exp_involution",
            ChannelModel::HybridNor { .. } => "hybrid_nor",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{} {name} must be finite and >= 0, got {x}", self.kind())))
            }
        };
        match self {
            ChannelModel::Pure { delay } => nonneg("delay", *delay),
            ChannelModel::Inertial { delay, threshold } => {
                nonneg("delay", *delay)?;
                threshold.map_or(Ok(()), |t| nonneg("threshold", t))
            }
            ChannelModel::ExpInvolution(c) => c.validate(),
            ChannelModel::HybridNor { params, .. } => params.validate(),
        }
    }

    /// Inertial channel with the mean of the four SIS delays of `params`
    /// (including its pure delay).
    pub fn inertial_from(params: &GateParams) -> Result<Self> {
        let d = sis_delays(params)?;
        let delay = d.iter().sum::<f64>() / 4.0;
        Ok(ChannelModel::Inertial { delay, threshold: None })
    }

    /// Output of a NOR gate whose inputs are `a` and `b`.
    pub fn apply_gate(&self, a: &DigitalTrace, b: &DigitalTrace) -> Result<DigitalTrace> {
        self.validate()?;
        match self {
            ChannelModel::HybridNor { params, initial_vn } => apply_hybrid_nor(params, a, b, *initial_vn),
            _ => self.apply(&nor_eval(a, b)),
        }
    }

    /// Single-input channel applied to `input`; the hybrid channel is a
    /// two-input gate and is rejected here.
    pub fn apply(&self, input: &DigitalTrace) -> Result<DigitalTrace> {
        match self {
            ChannelModel::Pure { delay } => Ok(apply_pure(*delay, input)),
            ChannelModel::Inertial { delay, threshold } => {
                Ok(apply_inertial(*delay, threshold.unwrap_or(*delay), input))
            }
            ChannelModel::ExpInvolution(c) => Ok(c.apply(input)),
            ChannelModel::HybridNor { .. } => {
                Err(Error::Config("hybrid_nor is a two-input channel; use apply_gate".into()))
            }
        }
    }
}

/// `[fall(-inf), fall(+inf), rise(-inf), rise(+inf)]` with `delta_min`.
fn sis_delays(params: &GateParams) -> Result<[f64; 4]> {
    Ok([
        delay_falling(params, -DELTA_INF)?,
        delay_falling(params, DELTA_INF)?,
        delay_rising(params, -DELTA_INF, VnPolicy::Gnd)?,
        delay_rising(params, DELTA_INF, VnPolicy::Gnd)?,
    ])
}

pub fn apply_pure(delay: f64, input: &DigitalTrace) -> DigitalTrace {
    DigitalTrace {
        initial: input.initial,
        transitions: input.transitions.iter().map(|t| t + delay).collect(),
    }
}

/// Shift by `delay`, then drop every pair of adjacent transitions closer
/// than `threshold`, judging pulses in time order against the surviving
/// output.
pub fn apply_inertial(delay: f64, threshold: f64, input: &DigitalTrace) -> DigitalTrace {
    let mut out: Vec<f64> = Vec::with_capacity(input.transitions.len());
    for &t in &input.transitions {
        let t = t + delay;
        match out.last() {
            Some(&prev) if t - prev < threshold => {
                out.pop();
            }
            _ => out.push(t),
        }
    }
    DigitalTrace { initial: input.initial, transitions: out }
}

/// First-order two-mode channel: a normalized output node charges with
/// `tau_rise` or discharges with `tau_fall` towards the input level, the
/// switch taking effect `delta_min` after the input transition; output
/// transitions are the crossings of 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpChannel {
    pub tau_rise: f64,
    pub tau_fall: f64,
    pub delta_min: f64,
}

impl ExpChannel {
    pub fn new(tau_rise: f64, tau_fall: f64, delta_min: f64) -> Result<Self> {
        let c = ExpChannel { tau_rise, tau_fall, delta_min };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("tau_rise", self.tau_rise), ("tau_fall", self.tau_fall)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Config(format!("exp_involution {name} must be > 0, got {x}")));
            }
        }
        if !(self.delta_min.is_finite() && self.delta_min >= 0.0) {
            return Err(Error::Config(format!("exp_involution delta_min must be >= 0, got {}", self.delta_min)));
        }
        Ok(())
    }

    /// Time constants chosen so the SIS delays equal the mean of the
    /// hybrid model's `delta(-inf)` and `delta(+inf)` per polarity.
    pub fn calibrated(params: &GateParams, delta_min: f64) -> Result<Self> {
        let [f_minus, f_plus, r_minus, r_plus] = sis_delays(params)?;
        let tau = |a: f64, b: f64| ((a + b) / 2.0 - delta_min) / LN_2;
        Self::new(tau(r_minus, r_plus), tau(f_minus, f_plus), delta_min)
    }

    /// Rising-output delay after a falling output that happened `t` before
    /// the input transition. Defined for `t > -delta_min - tau_fall ln 2`.
    pub fn delay_up(&self, t: f64) -> f64 {
        self.delta_min + self.tau_rise * ln_two_minus_exp(-(t + self.delta_min) / self.tau_fall)
    }

    pub fn delay_down(&self, t: f64) -> f64 {
        self.delta_min + self.tau_fall * ln_two_minus_exp(-(t + self.delta_min) / self.tau_rise)
    }

    /// Lower end of the domain of `delay_up` (`rising = true`) or `delay_down`.
    pub fn domain_start(&self, rising: bool) -> f64 {
        let tau_prev = if rising { self.tau_fall } else { self.tau_rise };
        -self.delta_min - tau_prev * LN_2
    }

    pub fn sis_delay(&self, rising: bool) -> f64 {
        self.delta_min + LN_2 * if rising { self.tau_rise } else { self.tau_fall }
    }

    pub fn apply(&self, input: &DigitalTrace) -> DigitalTrace {
        let mut out = Vec::new();
        // normalized node voltage `v` at switch time `s`, moving towards `high`
        let mut high = input.initial;
        let mut v = if high { 1.0 } else { 0.0 };
        let mut s = f64::NEG_INFINITY;
        let crossing = |high: bool, v: f64| -> Option<f64> {
            if high && v < 0.5 {
                Some(self.tau_rise * (2.0 * (1.0 - v)).ln())
            } else if !high && v > 0.5 {
                Some(self.tau_fall * (2.0 * v).ln())
            } else {
                None
            }
        };
        for &t in &input.transitions {
            let next = t + self.delta_min;
            if let Some(dt) = crossing(high, v) {
                if s + dt < next {
                    out.push(s + dt);
                }
            }
            if s.is_finite() {
                let (target, tau) = if high { (1.0, self.tau_rise) } else { (0.0, self.tau_fall) };
                v = target + (v - target) * (-(next - s) / tau).exp();
            }
            high = !high;
            s = next;
        }
        if let Some(dt) = crossing(high, v) {
            out.push(s + dt);
        }
        DigitalTrace { initial: input.initial, transitions: out }
    }
}

/// `ln(2 - e^x)` without cancellation near `x = 0`.
fn ln_two_minus_exp(x: f64) -> f64 {
    (-x.exp_m1()).ln_1p()
}
