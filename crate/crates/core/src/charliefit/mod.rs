//! Characteristic Charlie delays: exact and approximate closed forms, and
//! least-squares recovery of gate parameters from target delays.
//!
//! The approximations for `delta_fall(+inf)` and the rising delays linearize
//! the output trajectory around an expansion time `w`; they are useful to
//! read off parameter sensitivities, not as ground truth. Fitting always
//! uses the exact crossings from [`crate::misdelay`].

mod fit;
mod nelder_mead;

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::misdelay::{delay_falling, delay_rising, VnPolicy, DELTA_INF};
use crate::params::GateParams;

pub use fit::{fit, FitConfig, FitReport, FitTargets, ParamBounds, Residual};
pub use nelder_mead::{nelder_mead, NelderMeadResult};

/// The six characteristic delays, seconds, including `delta_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicDelays {
    pub d_fall_minus_inf: f64,
    pub d_fall_zero: f64,
    pub d_fall_plus_inf: f64,
    pub d_rise_minus_inf: f64,
    pub d_rise_zero: f64,
    pub d_rise_plus_inf: f64,
}

impl CharacteristicDelays {
    pub const NAMES: [&'static str; 6] = [
        "d_fall_minus_inf",
        "d_fall_zero",
        "d_fall_plus_inf",
        "d_rise_minus_inf",
        "d_rise_zero",
        "d_rise_plus_inf",
    ];

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.d_fall_minus_inf,
            self.d_fall_zero,
            self.d_fall_plus_inf,
            self.d_rise_minus_inf,
            self.d_rise_zero,
            self.d_rise_plus_inf,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        CharacteristicDelays {
            d_fall_minus_inf: a[0],
            d_fall_zero: a[1],
            d_fall_plus_inf: a[2],
            d_rise_minus_inf: a[3],
            d_rise_zero: a[4],
            d_rise_plus_inf: a[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip(self.as_array()) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} = {v} must be finite and > 0")));
            }
        }
        Ok(())
    }
}

/// Exact characteristic delays of the model (rising ones with `v_n = GND`).
pub fn characteristic_delays(params: &GateParams) -> Result<CharacteristicDelays> {
    characteristic_delays_with(params, VnPolicy::Gnd)
}

pub fn characteristic_delays_with(params: &GateParams, vn: VnPolicy) -> Result<CharacteristicDelays> {
    Ok(CharacteristicDelays {
        d_fall_minus_inf: delay_falling(params, -DELTA_INF)?,
        d_fall_zero: delay_falling(params, 0.0)?,
        d_fall_plus_inf: delay_falling(params, DELTA_INF)?,
        d_rise_minus_inf: delay_rising(params, -DELTA_INF, vn)?,
        d_rise_zero: delay_rising(params, 0.0, vn)?,
        d_rise_plus_inf: delay_rising(params, DELTA_INF, vn)?,
    })
}

/// Constants of the linearized delay approximations.
///
/// `k_full` and `k_half` are the literal voltage constants of the published
/// expressions (0.6 and 0.3); the `w_*` fields are the expansion times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub k_full: f64,
    pub k_half: f64,
    pub w_fall_plus: f64,
    pub w_rise_plus: f64,
    pub w_rise_minus: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { k_full: 0.6, k_half: 0.3, w_fall_plus: 1e-10, w_rise_plus: 2e-10, w_rise_minus: 1e-10 }
    }
}

impl ApproxConfig {
    /// Voltage constants consistent with the initial conditions at supply
    /// `v_dd`: `k_full = v_dd/2` (threshold and half-supply initial charge)
    /// and `k_half = v_dd/4`. Equals the literal constants at 1.2 V.
    pub fn supply_scaled(v_dd: f64) -> Self {
        ApproxConfig { k_full: v_dd / 2.0, k_half: v_dd / 4.0, ..Default::default() }
    }
}

/// `alpha, beta, gamma, lambda1, lambda2` of mode 10.
pub(crate) fn mode10_constants(p: &GateParams) -> (f64, f64, f64, f64, f64) {
    let (r2, r3, ci, co) = (p.r2, p.r3, p.c_int, p.c_out);
    let den = 2.0 * co * ci * r2 * r3;
    let s = co * r3 + ci * (r2 + r3);
    let alpha = (co * r3 - ci * (r2 + r3)) / den;
    let beta = (s * s - 4.0 * co * ci * r2 * r3).sqrt() / den;
    let gamma = -s / den;
    (alpha, beta, gamma, gamma + beta, gamma - beta)
}

/// `alpha, beta, gamma, lambda1, lambda2` of mode 00.
pub(crate) fn mode00_constants(p: &GateParams) -> (f64, f64, f64, f64, f64) {
    let (r1, r2, ci, co) = (p.r1, p.r2, p.c_int, p.c_out);
    let den = 2.0 * co * ci * r1 * r2;
    let s = ci * r1 + co * (r1 + r2);
    let alpha = (co * (r1 + r2) - ci * r1) / den;
    let beta = (s * s - 4.0 * co * ci * r1 * r2).sqrt() / den;
    let gamma = -s / den;
    (alpha, beta, gamma, gamma + beta, gamma - beta)
}

/// Exact `delta_fall(0)` without `delta_min`: parallel discharge over R3 || R4.
pub fn char_fall_zero(p: &GateParams) -> f64 {
    -(0.5f64).ln() / (1.0 / (p.c_out * p.r3) + 1.0 / (p.c_out * p.r4))
}

/// Exact `delta_fall(-inf)` without `delta_min`: discharge over R4 alone.
pub fn char_fall_minus_inf(p: &GateParams) -> f64 {
    LN_2 * p.c_out * p.r4
}

/// Linearized `delta_fall(+inf)` without `delta_min`.
pub fn char_fall_plus_inf(p: &GateParams, cfg: &ApproxConfig) -> f64 {
    let (alpha, beta, _, l1, l2) = mode10_constants(p);
    let w = cfg.w_fall_plus;
    let k = cfg.k_full;
    let ci_r2 = p.c_int * p.r2;
    let c2 = k * ((alpha + beta) * ci_r2 - 1.0) / beta;
    let c1 = p.v_dd * ci_r2 - c2;
    let (e1, e2) = ((l1 * w).exp(), (l2 * w).exp());
    let num = k - (c1 * (alpha + beta) * e1 * (1.0 - l1 * w) + c2 * (alpha - beta) * e2 * (1.0 - l2 * w));
    let den = c1 * (alpha + beta) * l1 * e1 + c2 * (alpha - beta) * l2 * e2;
    num / den
}

/// Helper terms `l, a, b` of the rising-delay approximations (mode 00).
pub fn rise_helpers(p: &GateParams) -> (f64, f64, f64) {
    let (alpha, beta, gamma, _, _) = mode00_constants(p);
    let g2b2 = gamma * gamma - beta * beta;
    let l = p.v_dd * (-alpha * alpha + beta * beta) * p.r2 / (p.r1 * g2b2);
    let a = p.v_dd * (alpha + gamma) * (alpha + beta) / (p.c_int * p.r1 * g2b2);
    let b = p.v_dd * (-alpha * alpha + beta * beta) / (p.c_int * p.r1 * g2b2);
    (l, a, b)
}

/// Internal-node voltage after `delta >= 0` in mode 01 starting from `x`.
pub fn vn_mode01(p: &GateParams, delta: f64, x: f64) -> f64 {
    p.v_dd + (x - p.v_dd) * (-delta / (p.c_int * p.r1)).exp()
}

/// Mode-10 state after `s = |delta|` starting from `(x, 0)`, using the
/// literal `g2` constants for the three supported initial values.
pub fn state_mode10(p: &GateParams, s: f64, vn: VnPolicy, cfg: &ApproxConfig) -> (f64, f64) {
    let (x, y, z, _, _) = mode10_constants(p);
    let ci_r2 = p.c_int * p.r2;
    let g2 = match vn {
        VnPolicy::Gnd => 0.0,
        VnPolicy::Vdd => cfg.k_full * (x + y) * ci_r2 / y,
        VnPolicy::Half => cfg.k_half * (x + y) * ci_r2 / y,
    };
    let g1 = (y - x) * g2 / (x + y);
    let (ep, em) = (((z + y) * s).exp(), ((z - y) * s).exp());
    let v_n = g1 / ci_r2 * ep + g2 / ci_r2 * em;
    let v_o = g1 * (x + y) * ep + g2 * (x - y) * em;
    (v_n, v_o)
}

/// Linearized rising delay `delta_rise(delta)` without `delta_min`.
pub fn char_rise(p: &GateParams, delta: f64, vn: VnPolicy, cfg: &ApproxConfig) -> f64 {
    let (alpha, beta, _, l1, l2) = mode00_constants(p);
    let (l, a, b) = rise_helpers(p);
    let ci_r2 = p.c_int * p.r2;
    let s = delta.abs();
    let (v_n, v_o, w) = if delta >= 0.0 {
        (vn_mode01(p, s, vn.voltage(p.v_dd)), 0.0, cfg.w_rise_plus)
    } else {
        let (v_n, v_o) = state_mode10(p, s, vn, cfg);
        (v_n, v_o, cfg.w_rise_minus)
    };
    let apb = alpha + beta;
    let c2 = (apb * v_n - v_o / ci_r2 + a + b) * ci_r2 / (2.0 * beta * (l2 * s).exp());
    let c1 = (apb * v_n - c2 * apb / ci_r2 * (l2 * s).exp() + a) * ci_r2 / (apb * (l1 * s).exp());
    let (e1, e2) = ((l1 * w).exp(), (l2 * w).exp());
    let den = c1 * apb * l1 * e1 + c2 * (alpha - beta) * l2 * e2;
    (cfg.k_full - l - c1 * apb * e1 * (1.0 - l1 * w)) / den - c2 * (alpha - beta) * e2 * (1.0 - l2 * w) / den - s
}

/// Approximate characteristic delays (including `delta_min`).
pub fn approx_characteristic_delays(p: &GateParams, vn: VnPolicy, cfg: &ApproxConfig) -> CharacteristicDelays {
    CharacteristicDelays {
        d_fall_minus_inf: char_fall_minus_inf(p) + p.delta_min,
        d_fall_zero: char_fall_zero(p) + p.delta_min,
        d_fall_plus_inf: char_fall_plus_inf(p, cfg) + p.delta_min,
        d_rise_minus_inf: char_rise(p, -DELTA_INF, vn, cfg) + p.delta_min,
        d_rise_zero: char_rise(p, 0.0, vn, cfg) + p.delta_min,
        d_rise_plus_inf: char_rise(p, DELTA_INF, vn, cfg) + p.delta_min,
    }
}
