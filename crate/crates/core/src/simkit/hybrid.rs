//! Trace-level simulation of the hybrid NOR gate.

use super::trace::DigitalTrace;
use crate::error::{Error, Result};
use crate::lintraj::{solve_mode, Direction};
use crate::misdelay::VnPolicy;
use crate::params::{GateParams, Mode, StateVector};

/// Multiple of the slowest time constant after the last mode switch within
/// which the output must have settled.
pub const SETTLE_TIME_CONSTANTS: f64 = 60.0;

/// Steady state of `mode`; mode 11 leaves the internal node at `vn`.
pub fn steady_state(params: &GateParams, mode: Mode, vn: f64) -> StateVector {
    let vdd = params.v_dd;
    match (mode.a, mode.b) {
        (false, false) => StateVector::new(vdd, vdd),
        (false, true) => StateVector::new(vdd, 0.0),
        (true, false) => StateVector::new(0.0, 0.0),
        (true, true) => StateVector::new(vn, 0.0),
    }
}

pub fn settle_time(params: &GateParams, mode: Mode) -> f64 {
    SETTLE_TIME_CONSTANTS * params.slowest_time_constant(mode)
}

/// Initial state and mode schedule driven by two input traces. Every input
/// transition switches the mode `delta_min` later; coincident transitions
/// form one switch.
pub fn gate_schedule(
    params: &GateParams,
    a: &DigitalTrace,
    b: &DigitalTrace,
    initial_vn: VnPolicy,
) -> Result<(StateVector, Vec<(f64, Mode)>)> {
    a.validate()?;
    b.validate()?;
    let mut mode = Mode::new(a.initial, b.initial);
    let init = steady_state(params, mode, initial_vn.voltage(params.v_dd));
    let mut sched = vec![(0.0, mode)];
    let (mut i, mut j) = (0, 0);
    while i < a.transitions.len() || j < b.transitions.len() {
        let ta = a.transitions.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.transitions.get(j).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb);
        if ta == t {
            mode.a = !mode.a;
            i += 1;
        }
        if tb == t {
            mode.b = !mode.b;
            j += 1;
        }
        let s = t + params.delta_min;
        let last = sched.last_mut().expect("schedule starts non-empty");
        if s <= 0.0 || s == last.0 {
            last.1 = mode;
        } else {
            sched.push((s, mode));
        }
    }
    Ok((init, sched))
}

/// Output trace of the hybrid NOR gate. The state vector is carried across
/// all input events; output transitions are the `v_th` crossings of `v_o`,
/// including crossings that happen before a pending switch and excluding
/// those a switch pre-empts.
pub fn apply_hybrid_nor(
    params: &GateParams,
    a: &DigitalTrace,
    b: &DigitalTrace,
    initial_vn: VnPolicy,
) -> Result<DigitalTrace> {
    params.validate()?;
    let (mut state, sched) = gate_schedule(params, a, b, initial_vn)?;
    let v_th = params.v_th;
    let mut high = state.v_o > v_th;
    let mut out = DigitalTrace { initial: high, transitions: Vec::new() };

    for (k, &(start, mode)) in sched.iter().enumerate() {
        let traj = solve_mode(params, mode, state)?;
        let (dt, last) = match sched.get(k + 1) {
            Some(&(next, _)) => (next - start, false),
            None => (settle_time(params, mode), true),
        };
        for (t, dir) in traj.crossings(v_th, 0.0, dt) {
            if (dir == Direction::Falling) == high {
                out.transitions.push(start + t);
                high = !high;
            }
        }
        if last {
            if (traj.steady_state().v_o > v_th) != high {
                return Err(Error::HorizonOverrun(start + dt));
            }
        } else {
            state = traj.eval(dt);
        }
    }
    out.validate()?;
    Ok(out)
}
