//! Gate parameters, input modes and node-voltage states shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RC parameters of the NOR gate plus supply, discretization threshold and
/// pure delay. All values in SI units.
///
/// JSON form is a flat object with keys `r1, r2, r3, r4, c_int, c_out, v_dd,
/// v_th, delta_min`; `v_th` may be omitted and then defaults to `v_dd / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GateParams {
    /// pMOS T1, V_DD to N.
    pub r1: f64,
    /// pMOS T2, N to O.
    pub r2: f64,
    /// nMOS T3, O to GND (input A).
    pub r3: f64,
    /// nMOS T4, O to GND (input B).
    pub r4: f64,
    pub c_int: f64,
    pub c_out: f64,
    pub v_dd: f64,
    pub v_th: f64,
    pub delta_min: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
    c_int: f64,
    c_out: f64,
    v_dd: f64,
    v_th: Option<f64>,
    delta_min: f64,
}

impl TryFrom<RawParams> for GateParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let p = GateParams {
            r1: raw.r1,
            r2: raw.r2,
            r3: raw.r3,
            r4: raw.r4,
            c_int: raw.c_int,
            c_out: raw.c_out,
            v_dd: raw.v_dd,
            v_th: raw.v_th.unwrap_or(raw.v_dd / 2.0),
            delta_min: raw.delta_min,
        };
        p.validate()?;
        Ok(p)
    }
}

impl GateParams {
    /// Fitted 15 nm FinFET NOR2 values (V_DD = 0.8 V, V_th = V_DD/2,
    /// delta_min = 18 ps).
    pub fn table_i() -> Self {
        GateParams {
            r1: 37088.32043327145,
            r2: 44925.83293787842,
            r3: 45149.85667051946,
            r4: 48761.4927022873,
            c_int: 5.948581669628511e-17,
            c_out: 6.172588967251559e-16,
            v_dd: 0.8,
            v_th: 0.4,
            delta_min: 18e-12,
        }
    }

    /// Builds a parameter set with `v_th = v_dd / 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r1: f64,
        r2: f64,
        r3: f64,
        r4: f64,
        c_int: f64,
        c_out: f64,
        v_dd: f64,
        delta_min: f64,
    ) -> Result<Self> {
        let p = GateParams {
            r1,
            r2,
            r3,
            r4,
            c_int,
            c_out,
            v_dd,
            v_th: v_dd / 2.0,
            delta_min,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta_min(mut self, delta_min: f64) -> Self {
        self.delta_min = delta_min;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("r4", self.r4),
            ("c_int", self.c_int),
            ("c_out", self.c_out),
            ("v_dd", self.v_dd),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and > 0")));
            }
        }
        if !self.v_th.is_finite() || self.v_th <= 0.0 || self.v_th >= self.v_dd {
            return Err(Error::InvalidParams(format!(
                "v_th = {} must lie strictly between 0 and v_dd = {}",
                self.v_th, self.v_dd
            )));
        }
        if !self.delta_min.is_finite() || self.delta_min < 0.0 {
            return Err(Error::InvalidParams(format!("delta_min = {} must be >= 0", self.delta_min)));
        }
        Ok(())
    }

    /// Smallest RC time constant appearing in `mode`: the reciprocal of the
    /// fastest eigenvalue magnitude.
    pub fn fastest_time_constant(&self, mode: Mode) -> f64 {
        let (a, b, c, d) = self.system_matrix(mode);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let fast = (tr.abs() + disc) / 2.0;
        1.0 / fast
    }

    /// Largest finite RC time constant of `mode` (mode 11 ignores the frozen node).
    pub fn slowest_time_constant(&self, mode: Mode) -> f64 {
        let (a, b, c, d) = self.system_matrix(mode);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        let slow = (tr.abs() - disc) / 2.0;
        if slow > 0.0 && det != 0.0 {
            1.0 / slow
        } else {
            1.0 / ((tr.abs() + disc) / 2.0)
        }
    }

    /// Row-major entries `(a11, a12, a21, a22)` of the homogeneous part of
    /// the mode's ODE system `V' = A V + g`.
    pub fn system_matrix(&self, mode: Mode) -> (f64, f64, f64, f64) {
        let GateParams { r1, r2, r3, r4, c_int: ci, c_out: co, .. } = *self;
        match (mode.a, mode.b) {
            (true, true) => (0.0, 0.0, 0.0, -(1.0 / (co * r3) + 1.0 / (co * r4))),
            (true, false) => (
                -1.0 / (ci * r2),
                1.0 / (ci * r2),
                1.0 / (co * r2),
                -(1.0 / (co * r2) + 1.0 / (co * r3)),
            ),
            (false, true) => (-1.0 / (ci * r1), 0.0, 0.0, -1.0 / (co * r4)),
            (false, false) => (
                -(1.0 / (ci * r1) + 1.0 / (ci * r2)),
                1.0 / (ci * r2),
                1.0 / (co * r2),
                -1.0 / (co * r2),
            ),
        }
    }

    /// Constant forcing term `g` of the mode's ODE system.
    pub fn forcing(&self, mode: Mode) -> StateVector {
        if mode.a {
            StateVector::new(0.0, 0.0)
        } else {
            StateVector::new(self.v_dd / (self.c_int * self.r1), 0.0)
        }
    }
}

/// Input state `(A, B)`; selects one of the four RC topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub a: bool,
    pub b: bool,
}

impl Mode {
    pub const M00: Mode = Mode { a: false, b: false };
    pub const M01: Mode = Mode { a: false, b: true };
    pub const M10: Mode = Mode { a: true, b: false };
    pub const M11: Mode = Mode { a: true, b: true };
    pub const ALL: [Mode; 4] = [Mode::M00, Mode::M01, Mode::M10, Mode::M11];

    pub const fn new(a: bool, b: bool) -> Self {
        Mode { a, b }
    }

    /// Zero-time NOR of the two inputs.
    pub fn nor(self) -> bool {
        !(self.a || self.b)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", u8::from(self.a), u8::from(self.b))
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(Mode::M00),
            "01" => Ok(Mode::M01),
            "10" => Ok(Mode::M10),
            "11" => Ok(Mode::M11),
            other => Err(Error::Schedule(format!("unknown mode '{other}', expected 00/01/10/11"))),
        }
    }
}

/// Voltages at the internal node N and at the output O.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub v_n: f64,
    pub v_o: f64,
}

impl StateVector {
    pub const fn new(v_n: f64, v_o: f64) -> Self {
        StateVector { v_n, v_o }
    }

    pub fn is_finite(&self) -> bool {
        self.v_n.is_finite() && self.v_o.is_finite()
    }

    /// Sup-norm distance.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        (self.v_n - other.v_n).abs().max((self.v_o - other.v_o).abs())
    }
}
