//! Closed-form trajectories of the four NOR modes.
//!
//! Every mode is a linear system `V' = A V + g` in `V = (v_n, v_o)`. The
//! solution is written as
//!
//! ```text
//! V(t) = offset + c1 * e1 * exp(l1 t) + c2 * e2 * exp(l2 t)
//! ```
//!
//! with `l1 >= l2`. In the coupled modes (10 and 00) the eigenvectors are
//! `e_i = (1 / (C_int R2), alpha +/- beta)` and `l_{1,2} = gamma +/- beta`.
//! Modes 11 and 01 are diagonal and use the unit axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GateParams, Mode, StateVector};
use crate::roots::brent;

/// Absolute time tolerance of threshold-crossing refinement, seconds. Set
/// far below picosecond resolution so that delay ratios come out exact to
/// ~1e-13 relative; Brent adds a relative term of 2 eps |t| on top.
pub const CROSSING_TOL: f64 = 1e-24;

/// Relative tolerance below which `beta` counts as a repeated eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Falling,
}

/// Eigen-structure of a coupled mode in the `alpha +/- beta` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticTrajectory {
    pub mode: Mode,
    pub lambda1: f64,
    pub lambda2: f64,
    pub coeff1: f64,
    pub coeff2: f64,
    pub eigvec1: StateVector,
    pub eigvec2: StateVector,
    /// `Some` for modes 10 and 00.
    pub coupling: Option<Coupling>,
    pub offset: StateVector,
}

/// Solves `mode` from `init` at local time zero.
pub fn solve_mode(params: &GateParams, mode: Mode, init: StateVector) -> Result<AnalyticTrajectory> {
    if !init.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    params.validate()?;
    let v_dd = params.v_dd;
    let traj = match (mode.a, mode.b) {
        (true, true) => {
            let (_, _, _, a22) = params.system_matrix(mode);
            AnalyticTrajectory {
                mode,
                lambda1: 0.0,
                lambda2: a22,
                coeff1: init.v_n,
                coeff2: init.v_o,
                eigvec1: StateVector::new(1.0, 0.0),
                eigvec2: StateVector::new(0.0, 1.0),
                coupling: None,
                offset: StateVector::new(0.0, 0.0),
            }
        }
        (false, true) => {
            let (a11, _, _, a22) = params.system_matrix(mode);
            let node = (a11, StateVector::new(1.0, 0.0), init.v_n - v_dd);
            let out = (a22, StateVector::new(0.0, 1.0), init.v_o);
            let (slow, fast) = if a11 >= a22 { (node, out) } else { (out, node) };
            AnalyticTrajectory {
                mode,
                lambda1: slow.0,
                lambda2: fast.0,
                coeff1: slow.2,
                coeff2: fast.2,
                eigvec1: slow.1,
                eigvec2: fast.1,
                coupling: None,
                offset: StateVector::new(v_dd, 0.0),
            }
        }
        _ => {
            let offset = if mode.a { StateVector::new(0.0, 0.0) } else { StateVector::new(v_dd, v_dd) };
            solve_coupled(params, mode, init, offset)?
        }
    };
    Ok(traj)
}

fn solve_coupled(
    params: &GateParams,
    mode: Mode,
    init: StateVector,
    offset: StateVector,
) -> Result<AnalyticTrajectory> {
    let (a11, a12, a21, a22) = params.system_matrix(mode);
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a21;
    // tr^2 - 4 det without cancellation
    let disc = ((a11 - a22).powi(2) + 4.0 * a12 * a21).sqrt();
    let beta = disc / 2.0;
    let gamma = tr / 2.0;
    check_spectrum(mode, beta, gamma)?;
    let lambda2 = (tr - disc) / 2.0;
    let lambda1 = det / lambda2;

    // y-components of the eigenvectors (a12, l_i - a11); (l1-a11)(l2-a11) = -a12 a21
    let mut p = lambda1 - a11;
    let mut q = lambda2 - a11;
    if p.abs() >= q.abs() {
        q = -a12 * a21 / p;
    } else {
        p = -a12 * a21 / q;
    }
    let alpha = (p + q) / 2.0;

    let u_n = init.v_n - offset.v_n;
    let u_o = init.v_o - offset.v_o;
    let s = u_n / a12;
    let two_beta = p - q;
    let coeff1 = (u_o - s * q) / two_beta;
    let coeff2 = (s * p - u_o) / two_beta;

    Ok(AnalyticTrajectory {
        mode,
        lambda1,
        lambda2,
        coeff1,
        coeff2,
        eigvec1: StateVector::new(a12, p),
        eigvec2: StateVector::new(a12, q),
        coupling: Some(Coupling { alpha, beta: two_beta / 2.0, gamma }),
        offset,
    })
}

fn check_spectrum(mode: Mode, beta: f64, gamma: f64) -> Result<()> {
    if beta > DEGENERACY_TOL * gamma.abs() {
        Ok(())
    } else {
        Err(Error::Degenerate { mode, beta })
    }
}

impl AnalyticTrajectory {
    /// State at local time `t`.
    pub fn eval(&self, t: f64) -> StateVector {
        let e1 = self.coeff1 * (self.lambda1 * t).exp();
        let e2 = self.coeff2 * (self.lambda2 * t).exp();
        StateVector {
            v_n: self.offset.v_n + e1 * self.eigvec1.v_n + e2 * self.eigvec2.v_n,
            v_o: self.offset.v_o + e1 * self.eigvec1.v_o + e2 * self.eigvec2.v_o,
        }
    }

    pub fn checked_eval(&self, t: f64) -> Result<StateVector> {
        if !t.is_finite() {
            return Err(Error::NonFinite("evaluation time"));
        }
        Ok(self.eval(t))
    }

    pub fn v_o(&self, t: f64) -> f64 {
        self.offset.v_o
            + self.coeff1 * self.eigvec1.v_o * (self.lambda1 * t).exp()
            + self.coeff2 * self.eigvec2.v_o * (self.lambda2 * t).exp()
    }

    /// Time derivative of the output voltage.
    pub fn dv_o(&self, t: f64) -> f64 {
        self.coeff1 * self.eigvec1.v_o * self.lambda1 * (self.lambda1 * t).exp()
            + self.coeff2 * self.eigvec2.v_o * self.lambda2 * (self.lambda2 * t).exp()
    }

    /// Steady state approached as `t -> inf` (mode 11 keeps `v_n`).
    pub fn steady_state(&self) -> StateVector {
        let mut s = self.offset;
        if self.lambda1 == 0.0 {
            s.v_n += self.coeff1 * self.eigvec1.v_n;
            s.v_o += self.coeff1 * self.eigvec1.v_o;
        }
        s
    }

    /// Interior stationary point of `v_o`, if any. A sum of two exponentials
    /// has at most one.
    fn output_extremum(&self) -> Option<f64> {
        let a1 = self.coeff1 * self.eigvec1.v_o * self.lambda1;
        let a2 = self.coeff2 * self.eigvec2.v_o * self.lambda2;
        if a1 == 0.0 || a2 == 0.0 || a1.signum() == a2.signum() || self.lambda1 == self.lambda2 {
            return None;
        }
        let t = (-a2 / a1).ln() / (self.lambda1 - self.lambda2);
        t.is_finite().then_some(t)
    }

    /// All crossings of `target` by `v_o` within `[t_lo, t_hi]` (local
    /// time), in increasing order. Tangential touches are not crossings.
    pub fn crossings(&self, target: f64, t_lo: f64, t_hi: f64) -> Vec<(f64, Direction)> {
        let mut knots = vec![t_lo];
        if let Some(te) = self.output_extremum() {
            if te > t_lo && te < t_hi {
                knots.push(te);
            }
        }
        knots.push(t_hi);

        let f = |t: f64| self.v_o(t) - target;
        let mut out = Vec::with_capacity(2);
        for w in knots.windows(2) {
            let (l, r) = (w[0], w[1]);
            let (fl, fr) = (f(l), f(r));
            let at_end = r == t_hi;
            let dir = if fl > 0.0 && (fr < 0.0 || (fr == 0.0 && at_end)) {
                Direction::Falling
            } else if fl < 0.0 && (fr > 0.0 || (fr == 0.0 && at_end)) {
                Direction::Rising
            } else {
                continue;
            };
            if let Some(t) = brent(f, l, r, CROSSING_TOL) {
                out.push((t, dir));
            }
        }
        out
    }
}

/// Earliest crossing of `v_target` in `direction` within `window`, or `None`.
pub fn threshold_crossing(
    traj: &AnalyticTrajectory,
    v_target: f64,
    direction: Direction,
    window: (f64, f64),
) -> Option<f64> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return None;
    }
    traj.crossings(v_target, lo, hi)
        .into_iter()
        .find(|&(_, d)| d == direction)
        .map(|(t, _)| t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Absolute start time of the segment.
    pub start: f64,
    pub traj: AnalyticTrajectory,
}

/// Piecewise-analytic trajectory of a switched mode schedule. The last
/// segment extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory {
    pub segments: Vec<Segment>,
}

/// Chains mode solutions so that both node voltages are continuous at every
/// switch. `schedule` holds `(switch_time, mode)` with the first entry at
/// `t = 0` and strictly increasing times.
pub fn chain(params: &GateParams, init: StateVector, schedule: &[(f64, Mode)]) -> Result<PiecewiseTrajectory> {
    validate_schedule(schedule)?;
    let mut segments = Vec::with_capacity(schedule.len());
    let mut state = init;
    let mut prev: Option<&Segment> = None;
    for &(t_s, mode) in schedule {
        if let Some(seg) = prev {
            state = seg.traj.eval(t_s - seg.start);
        }
        segments.push(Segment { start: t_s, traj: solve_mode(params, mode, state)? });
        prev = segments.last();
    }
    Ok(PiecewiseTrajectory { segments })
}

pub(crate) fn validate_schedule(schedule: &[(f64, Mode)]) -> Result<()> {
    let Some(&(t0, _)) = schedule.first() else {
        return Err(Error::Schedule("empty schedule".into()));
    };
    if t0 != 0.0 {
        return Err(Error::Schedule(format!("first segment must start at t = 0, got {t0:e}")));
    }
    for w in schedule.windows(2) {
        if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
            return Err(Error::Schedule(format!(
                "switch times must be strictly increasing ({:e} then {:e})",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

impl PiecewiseTrajectory {
    fn segment_index(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.start <= t).saturating_sub(1)
    }

    /// State at absolute time `t >= 0`; at a switch time the new segment applies.
    pub fn eval(&self, t: f64) -> StateVector {
        let seg = &self.segments[self.segment_index(t)];
        seg.traj.eval(t - seg.start)
    }

    /// End of segment `i` (infinite for the last one).
    pub fn segment_end(&self, i: usize) -> f64 {
        self.segments.get(i + 1).map_or(f64::INFINITY, |s| s.start)
    }

    /// All output crossings of `target` in `[t_lo, t_hi]` (absolute time).
    pub fn crossings(&self, target: f64, t_lo: f64, t_hi: f64) -> Vec<(f64, Direction)> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let lo = seg.start.max(t_lo);
            let hi = self.segment_end(i).min(t_hi);
            if lo >= hi {
                continue;
            }
            out.extend(
                seg.traj
                    .crossings(target, lo - seg.start, hi - seg.start)
                    .into_iter()
                    .map(|(t, d)| (t + seg.start, d)),
            );
        }
        out
    }

    pub fn threshold_crossing(&self, v_target: f64, direction: Direction, window: (f64, f64)) -> Option<f64> {
        if !(window.0 < window.1) {
            return None;
        }
        self.crossings(v_target, window.0, window.1)
            .into_iter()
            .find(|&(_, d)| d == direction)
            .map(|(t, _)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn table() -> GateParams {
        GateParams::table_i()
    }

    #[test]
    fn mode11_from_full_supply() {
        let p = table();
        let tr = solve_mode(&p, Mode::M11, StateVector::new(p.v_dd, p.v_dd)).unwrap();
        let k = 1.0 / (p.c_out * p.r3) + 1.0 / (p.c_out * p.r4);
        for t in [0.0, 1e-12, 1e-11, 1e-10] {
            let s = tr.eval(t);
            assert_eq!(s.v_n, p.v_dd);
            assert_relative_eq!(s.v_o, p.v_dd * (-k * t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn mode01_node_at_steady_state() {
        let p = table();
        let tr = solve_mode(&p, Mode::M01, StateVector::new(p.v_dd, p.v_dd)).unwrap();
        for t in [0.0, 3e-12, 4e-11] {
            let s = tr.eval(t);
            assert_eq!(s.v_n, p.v_dd);
            assert_relative_eq!(s.v_o, p.v_dd * (-t / (p.c_out * p.r4)).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn coupled_modes_match_published_constants() {
        let p = table();
        let (r2, r3, ci, co) = (p.r2, p.r3, p.c_int, p.c_out);
        let den = 2.0 * co * ci * r2 * r3;
        let alpha = (co * r3 - ci * (r2 + r3)) / den;
        let beta = ((co * r3 + ci * (r2 + r3)).powi(2) - 4.0 * co * ci * r2 * r3).sqrt() / den;
        let gamma = -(co * r3 + ci * (r2 + r3)) / den;
        let tr = solve_mode(&p, Mode::M10, StateVector::new(0.8, 0.8)).unwrap();
        let c = tr.coupling.unwrap();
        assert_relative_eq!(c.alpha, alpha, max_relative = 1e-12);
        assert_relative_eq!(c.beta, beta, max_relative = 1e-12);
        assert_relative_eq!(c.gamma, gamma, max_relative = 1e-12);
        assert_relative_eq!(tr.lambda1, gamma + beta, max_relative = 1e-10);
        assert_relative_eq!(tr.lambda2, gamma - beta, max_relative = 1e-12);
        assert_relative_eq!(tr.eigvec1.v_n, 1.0 / (ci * r2), max_relative = 1e-15);

        let r1 = p.r1;
        let den = 2.0 * co * ci * r1 * r2;
        let alpha = (co * (r1 + r2) - ci * r1) / den;
        let beta = ((ci * r1 + co * (r1 + r2)).powi(2) - 4.0 * co * ci * r1 * r2).sqrt() / den;
        let gamma = -(ci * r1 + co * (r1 + r2)) / den;
        let tr = solve_mode(&p, Mode::M00, StateVector::new(0.0, 0.0)).unwrap();
        let c = tr.coupling.unwrap();
        assert_relative_eq!(c.alpha, alpha, max_relative = 1e-12);
        assert_relative_eq!(c.beta, beta, max_relative = 1e-12);
        assert_relative_eq!(c.gamma, gamma, max_relative = 1e-12);
        assert_eq!(tr.offset, StateVector::new(0.8, 0.8));
    }

    #[test]
    fn initial_state_is_reproduced() {
        let p = table();
        let init = StateVector::new(0.13, 0.71);
        for m in Mode::ALL {
            let tr = solve_mode(&p, m, init).unwrap();
            assert!(tr.eval(0.0).max_abs_diff(&init) < 1e-15, "mode {m}");
            assert!(tr.lambda1 >= tr.lambda2);
        }
    }

    #[test]
    fn charging_mode_settles() {
        let p = table();
        let tr = solve_mode(&p, Mode::M00, StateVector::new(0.0, 0.0)).unwrap();
        let tau = p.slowest_time_constant(Mode::M00);
        let s = tr.eval(50.0 * tau);
        assert!(s.max_abs_diff(&StateVector::new(p.v_dd, p.v_dd)) < 1e-6 * p.v_dd);
    }

    #[test]
    fn rejects_non_finite() {
        let p = table();
        assert!(solve_mode(&p, Mode::M10, StateVector::new(f64::NAN, 0.0)).is_err());
        let tr = solve_mode(&p, Mode::M10, StateVector::new(0.0, 0.0)).unwrap();
        assert!(tr.checked_eval(f64::INFINITY).is_err());
    }

    #[test]
    fn degeneracy_guard() {
        assert!(check_spectrum(Mode::M10, 1e-13, -1.0).is_err());
        assert!(check_spectrum(Mode::M00, 0.0, -1.0).is_err());
        assert!(check_spectrum(Mode::M00, f64::NAN, -1.0).is_err());
        assert!(check_spectrum(Mode::M00, 1e-3, -1.0).is_ok());
    }

    #[test]
    fn crossing_closed_forms() {
        let p = table();
        let half = p.v_dd / 2.0;
        let tr = solve_mode(&p, Mode::M11, StateVector::new(0.3, p.v_dd)).unwrap();
        let t = threshold_crossing(&tr, half, Direction::Falling, (0.0, 1e-9)).unwrap();
        let expect = LN_2 * p.c_out * p.r3 * p.r4 / (p.r3 + p.r4);
        assert!((t - expect).abs() < 1e-16);

        let tr = solve_mode(&p, Mode::M01, StateVector::new(0.3, p.v_dd)).unwrap();
        let t = threshold_crossing(&tr, half, Direction::Falling, (0.0, 1e-9)).unwrap();
        assert!((t - LN_2 * p.c_out * p.r4).abs() < 1e-16);
        assert!(threshold_crossing(&tr, half, Direction::Rising, (0.0, 1e-9)).is_none());
    }

    #[test]
    fn no_crossing_above_target() {
        let p = table();
        let tr = solve_mode(&p, Mode::M00, StateVector::new(p.v_dd, p.v_dd)).unwrap();
        assert!(threshold_crossing(&tr, 0.4, Direction::Falling, (0.0, 1e-9)).is_none());
        assert!(threshold_crossing(&tr, 0.4, Direction::Falling, (1e-9, 0.0)).is_none());
    }

    #[test]
    fn non_monotone_output_yields_two_crossings() {
        // mode 10 with a charged internal node and low output: v_o rises then decays
        let p = GateParams { c_int: 5.0 * 6.172588967251559e-16, ..table() };
        let tr = solve_mode(&p, Mode::M10, StateVector::new(p.v_dd, 0.0)).unwrap();
        let xs = tr.crossings(0.2, 0.0, 1e-9);
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[0].1, Direction::Rising);
        assert_eq!(xs[1].1, Direction::Falling);
        for (t, _) in xs {
            let (l, r) = (tr.v_o(t - 1e-16) - 0.2, tr.v_o(t + 1e-16) - 0.2);
            assert!(l * r < 0.0, "{t:e}: {l:e} {r:e}");
        }
    }

    #[test]
    fn chain_is_continuous() {
        let p = table();
        let sched = [(0.0, Mode::M10), (7e-12, Mode::M11), (3e-11, Mode::M00), (4.1e-11, Mode::M01)];
        let pw = chain(&p, StateVector::new(p.v_dd, p.v_dd), &sched).unwrap();
        for w in pw.segments.windows(2) {
            let before = w[0].traj.eval(w[1].start - w[0].start);
            let after = w[1].traj.eval(0.0);
            assert!(before.max_abs_diff(&after) <= 1e-12);
        }
        // mode 11 freezes v_n exactly
        let seg = &pw.segments[1];
        let v0 = seg.traj.eval(0.0).v_n;
        for k in 1..20 {
            assert_eq!(seg.traj.eval(k as f64 * 1e-12).v_n, v0);
        }
    }

    #[test]
    fn single_segment_chain_equals_solve_mode() {
        let p = table();
        let init = StateVector::new(0.2, 0.5);
        let pw = chain(&p, init, &[(0.0, Mode::M00)]).unwrap();
        let tr = solve_mode(&p, Mode::M00, init).unwrap();
        for t in [0.0, 1e-12, 1e-11] {
            assert_eq!(pw.eval(t), tr.eval(t));
        }
    }

    #[test]
    fn chain_rejects_bad_schedules() {
        let p = table();
        let init = StateVector::new(0.0, 0.0);
        assert!(chain(&p, init, &[]).is_err());
        assert!(chain(&p, init, &[(1e-12, Mode::M00)]).is_err());
        assert!(chain(&p, init, &[(0.0, Mode::M00), (2e-12, Mode::M10), (2e-12, Mode::M11)]).is_err());
    }
}
