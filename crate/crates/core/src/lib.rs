//! Hybrid ODE delay model of a CMOS 2-input NOR gate.
//!
//! The gate is abstracted as an RC network whose transistors are ideal
//! switches, giving one linear two-state ODE system per input state. This
//! crate provides
//!
//! * [`lintraj`]: closed-form trajectories, mode chaining, threshold crossings;
//! * [`oracle`]: fixed-step RK4 reference integration used in validation;
//! * [`misdelay`]: multiple-input-switching delays and delay curves;
//! * [`charliefit`]: characteristic delay formulas and parameter fitting;
//! * [`simkit`]: digital traces, delay channels, trace generation and the
//!   deviation-area metric.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charliefit;
pub mod error;
pub mod lintraj;
pub mod misdelay;
pub mod oracle;
pub mod params;
pub mod roots;
pub mod simkit;

pub use error::{Error, Result};
pub use lintraj::{chain, solve_mode, threshold_crossing, AnalyticTrajectory, Direction, PiecewiseTrajectory};
pub use misdelay::{delay_curve, delay_falling, delay_rising, DelayCurve, VnPolicy};
pub use params::{GateParams, Mode, StateVector};
pub use simkit::{ChannelModel, DigitalTrace};

/// Shortest round-trip text form of a float, as written to every CSV.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
