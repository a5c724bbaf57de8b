#![allow(dead_code)]

use hymis::{GateParams, Mode, StateVector};
use proptest::prelude::*;

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (0.0..=1.0f64).prop_map(move |u| (lo.ln() + u * (hi / lo).ln()).exp())
}

/// Positive parameter sets of the same order as a 15 nm library gate. The
/// ranges keep tau_max / tau_min below ~1e3 so the oracle stays cheap.
pub fn gate_params() -> impl Strategy<Value = GateParams> {
    (
        log_uniform(1e4, 1e5),
        log_uniform(1e4, 1e5),
        log_uniform(1e4, 1e5),
        log_uniform(1e4, 1e5),
        log_uniform(2e-17, 2e-16),
        log_uniform(2e-16, 2e-15),
    )
        .prop_map(|(r1, r2, r3, r4, c_int, c_out)| {
            GateParams::new(r1, r2, r3, r4, c_int, c_out, 0.8, 0.0).unwrap()
        })
}

pub fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

pub fn state(v_dd: f64) -> impl Strategy<Value = StateVector> {
    (0.0..=v_dd, 0.0..=v_dd).prop_map(|(a, b)| StateVector::new(a, b))
}

/// 1-4 segment schedule; segment lengths are fractions of `scale`.
pub fn schedule(scale: f64) -> impl Strategy<Value = Vec<(f64, Mode)>> {
    prop::collection::vec((0.05..1.0f64, mode()), 1..=4).prop_map(move |segs| {
        let mut t = 0.0;
        segs.into_iter()
            .map(|(frac, m)| {
                let start = t;
                t += frac * scale;
                (start, m)
            })
            .collect()
    })
}

pub fn slowest_tau(p: &GateParams) -> f64 {
    Mode::ALL.iter().map(|&m| p.slowest_time_constant(m)).fold(0.0, f64::max)
}

pub fn fastest_tau(p: &GateParams) -> f64 {
    Mode::ALL.iter().map(|&m| p.fastest_time_constant(m)).fold(f64::INFINITY, f64::min)
}

/// Segment scale for random schedules: long enough to see the slow mode
/// move, short enough to bound the number of oracle steps.
pub fn segment_scale(p: &GateParams) -> f64 {
    (2.0 * slowest_tau(p)).min(1000.0 * fastest_tau(p))
}
