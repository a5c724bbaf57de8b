//! Digital traces, zero-time NOR evaluation and waveform digitization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary signal: an initial level at `t = 0` and strictly increasing
/// toggle times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DigitalTrace {
    pub initial: bool,
    pub transitions: Vec<f64>,
}

impl DigitalTrace {
    pub fn new(initial: bool, transitions: Vec<f64>) -> Result<Self> {
        let t = DigitalTrace { initial, transitions };
        t.validate()?;
        Ok(t)
    }

    pub fn constant(level: bool) -> Self {
        DigitalTrace { initial: level, transitions: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.transitions.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidTrace(format!("non-finite transition time {t}")));
        }
        if let Some(w) = self.transitions.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrace(format!(
                "transition times not strictly increasing: {:e} then {:e}",
                w[0], w[1]
            )));
        }
        Ok(())
    }

    /// Level at time `t`; a transition at exactly `t` has already happened.
    pub fn level_at(&self, t: f64) -> bool {
        let n = self.transitions.partition_point(|&x| x <= t);
        self.initial ^ (n % 2 == 1)
    }

    pub fn final_level(&self) -> bool {
        self.initial ^ (self.transitions.len() % 2 == 1)
    }

    pub fn last_transition(&self) -> Option<f64> {
        self.transitions.last().copied()
    }

    /// Iterator over `(time, new_level)`.
    pub fn edges(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.transitions
            .iter()
            .enumerate()
            .map(move |(i, &t)| (t, self.initial ^ (i % 2 == 0)))
    }

    /// CSV with columns `time_s,level`; row 0 is `0,<initial>`, every further
    /// row a transition and the level it switches to.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "level"])?;
        w.write_record([crate::num(0.0), u8::from(self.initial).to_string()])?;
        for (t, level) in self.edges() {
            w.write_record([crate::num(t), u8::from(level).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let field = |k: usize| {
                rec.get(k)
                    .ok_or_else(|| Error::InvalidTrace(format!("line {line}: missing column {k}")))
            };
            let t: f64 = field(0)?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidTrace(format!("line {line}: bad time: {e}")))?;
            let level = match field(1)?.trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::InvalidTrace(format!("line {line}: bad level '{other}'"))),
            };
            rows.push((line, t, level));
        }
        let Some(&(_, t0, initial)) = rows.first() else {
            return Err(Error::InvalidTrace("empty trace file".into()));
        };
        if t0 != 0.0 {
            return Err(Error::InvalidTrace(format!("first row must be at t = 0, got {t0}")));
        }
        let mut level = initial;
        let mut transitions = Vec::with_capacity(rows.len() - 1);
        for &(line, t, l) in &rows[1..] {
            if l == level {
                return Err(Error::InvalidTrace(format!("line {line}: level does not alternate")));
            }
            level = l;
            transitions.push(t);
        }
        DigitalTrace::new(initial, transitions)
    }
}

/// Zero-time NOR of two traces; output toggles only at input toggle times.
pub fn nor_eval(a: &DigitalTrace, b: &DigitalTrace) -> DigitalTrace {
    let (mut la, mut lb) = (a.initial, b.initial);
    let initial = !(la || lb);
    let mut out = initial;
    let mut transitions = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.transitions.len() || j < b.transitions.len() {
        let ta = a.transitions.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.transitions.get(j).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb);
        if ta == t {
            la = !la;
            i += 1;
        }
        if tb == t {
            lb = !lb;
            j += 1;
        }
        let next = !(la || lb);
        if next != out {
            out = next;
            transitions.push(t);
        }
    }
    DigitalTrace { initial, transitions }
}

/// Analog waveform as `(time, voltage)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    pub samples: Vec<(f64, f64)>,
}

impl SampledWaveform {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidTrace("waveform needs at least two samples".into()));
        }
        if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidTrace("non-finite waveform sample".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidTrace("waveform times must be strictly increasing".into()));
        }
        Ok(SampledWaveform { samples })
    }

    /// Reads CSV with columns `time_s,voltage_v`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut samples = Vec::new();
        for (i, rec) in rd.deserialize::<(f64, f64)>().enumerate() {
            let row = rec.map_err(|e| Error::InvalidTrace(format!("line {}: {e}", i + 2)))?;
            samples.push(row);
        }
        Self::new(samples)
    }
}

/// Streaming threshold digitizer with linear interpolation between samples.
#[derive(Debug, Clone)]
pub struct Digitizer {
    v_th: f64,
    last: Option<(f64, f64)>,
    level: bool,
    trace: DigitalTrace,
}

impl Digitizer {
    pub fn new(v_th: f64) -> Self {
        Digitizer { v_th, last: None, level: false, trace: DigitalTrace::default() }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        let high = v > self.v_th;
        match self.last {
            None => {
                self.level = high;
                self.trace.initial = high;
            }
            Some((t0, v0)) if high != self.level => {
                let tc = t0 + (t - t0) * (self.v_th - v0) / (v - v0);
                match self.trace.transitions.last() {
                    // zero-width pulse at a sample exactly on the threshold
                    Some(&prev) if tc <= prev => {
                        self.trace.transitions.pop();
                    }
                    _ => self.trace.transitions.push(tc),
                }
                self.level = high;
            }
            _ => {}
        }
        self.last = Some((t, v));
    }

    pub fn finish(self) -> DigitalTrace {
        self.trace
    }
}

/// Threshold crossings of a sampled waveform as a digital trace; the initial
/// level is taken from the first sample.
pub fn digitize(waveform: &SampledWaveform, v_th: f64) -> DigitalTrace {
    let mut d = Digitizer::new(v_th);
    for &(t, v) in &waveform.samples {
        d.push(t, v);
    }
    d.finish()
}
