//! Accuracy comparison of delay channels against a reference.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::channel::ChannelModel;
use super::metric::deviation_area;
use super::trace::DigitalTrace;
use super::tracegen::{generate_traces, TraceGenConfig};
use crate::error::{Error, Result};

/// Anything that maps the two NOR inputs to a reference output trace.
pub trait ReferenceModel: Sync {
    fn reference(&self, a: &DigitalTrace, b: &DigitalTrace) -> Result<DigitalTrace>;
}

impl ReferenceModel for ChannelModel {
    fn reference(&self, a: &DigitalTrace, b: &DigitalTrace) -> Result<DigitalTrace> {
        self.apply_gate(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedChannel {
    pub name: String,
    #[serde(flatten)]
    pub model: ChannelModel,
}

impl NamedChannel {
    pub fn new(name: impl Into<String>, model: ChannelModel) -> Self {
        NamedChannel { name: name.into(), model }
    }
}

/// Deviation area of each channel's output from `reference`, integrated up
/// to the last transition of any involved trace.
pub fn deviations(
    channels: &[NamedChannel],
    a: &DigitalTrace,
    b: &DigitalTrace,
    reference: &DigitalTrace,
) -> Result<Vec<f64>> {
    let outputs = channels.iter().map(|c| c.model.apply_gate(a, b)).collect::<Result<Vec<_>>>()?;
    let horizon = [a, b, reference]
        .into_iter()
        .chain(&outputs)
        .filter_map(DigitalTrace::last_transition)
        .fold(0.0, f64::max);
    Ok(outputs.iter().map(|o| deviation_area(reference, o, horizon)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStats {
    pub name: String,
    pub kind: String,
    pub mean: f64,
    pub std_dev: f64,
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub repetitions: usize,
    pub channels: Vec<ChannelStats>,
    /// `runs[r][c]`: deviation area of channel `c` in repetition `r`.
    pub runs: Vec<Vec<f64>>,
}

impl ComparisonReport {
    pub fn from_runs(channels: &[NamedChannel], runs: Vec<Vec<f64>>, normalize: bool) -> Result<Self> {
        let n = runs.len() as f64;
        let mut stats: Vec<ChannelStats> = channels
            .iter()
            .enumerate()
            .map(|(c, ch)| {
                let mean = runs.iter().map(|r| r[c]).sum::<f64>() / n;
                let var = runs.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                ChannelStats {
                    name: ch.name.clone(),
                    kind: ch.model.kind().to_string(),
                    mean,
                    std_dev: var.sqrt(),
                    normalized: None,
                }
            })
            .collect();
        if normalize {
            let base = stats.iter().find(|s| s.kind == "inertial").ok_or(Error::MissingBaseline)?.mean;
            if base == 0.0 {
                return Err(Error::ZeroBaseline);
            }
            for s in &mut stats {
                s.normalized = Some(s.mean / base);
            }
        }
        Ok(ComparisonReport { repetitions: runs.len(), channels: stats, runs })
    }

    pub fn get(&self, name: &str) -> Option<&ChannelStats> {
        self.channels.iter().find(|s| s.name == name)
    }

    /// CSV with columns `channel,kind,mean_deviation_s,std_deviation_s,normalized`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "kind", "mean_deviation_s", "std_deviation_s", "normalized"])?;
        for s in &self.channels {
            w.write_record([
                s.name.clone(),
                s.kind.clone(),
                crate::num(s.mean),
                crate::num(s.std_dev),
                s.normalized.map(crate::num).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} repetitions", self.repetitions)?;
        writeln!(f, "{:<16} {:<15} {:>14} {:>14} {:>10}", "channel", "kind", "mean [ps]", "std [ps]", "norm")?;
        for s in &self.channels {
            let norm = s.normalized.map_or("-".to_string(), |x| format!("{x:.4}"));
            writeln!(
                f,
                "{:<16} {:<15} {:>14.4} {:>14.4} {:>10}",
                s.name,
                s.kind,
                s.mean * 1e12,
                s.std_dev * 1e12,
                norm
            )?;
        }
        Ok(())
    }
}

/// Mean deviation area of every channel over `repetitions` random input
/// pairs; repetition `r` uses seed `cfg.seed + r`. Repetitions run in
/// parallel but the result does not depend on scheduling.
pub fn compare_models(
    channels: &[NamedChannel],
    reference: &dyn ReferenceModel,
    cfg: &TraceGenConfig,
    repetitions: usize,
    normalize: bool,
) -> Result<ComparisonReport> {
    if channels.is_empty() {
        return Err(Error::Config("no channels to compare".into()));
    }
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    cfg.validate()?;
    for c in channels {
        c.model.validate()?;
    }
    let run = |r: usize| -> Result<Vec<f64>> {
        let cfg = TraceGenConfig { seed: cfg.seed.wrapping_add(r as u64), ..cfg.clone() };
        let inputs = generate_traces(&cfg, 2)?;
        let reference = reference.reference(&inputs[0], &inputs[1])?;
        deviations(channels, &inputs[0], &inputs[1], &reference)
    };
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = (0..repetitions).map(|r| s.spawn(move || run(r))).collect();
        handles.into_iter().map(|h| h.join().expect("repetition panicked")).collect::<Result<Vec<_>>>()
    })?;
    ComparisonReport::from_runs(channels, runs, normalize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::tracegen::Scope;

    fn cfg() -> TraceGenConfig {
        TraceGenConfig::new(100e-12, 50e-12, 40, Scope::Local, 5)
    }

    #[test]
    fn reference_itself_has_zero_deviation() {
        let pure = ChannelModel::Pure { delay: 20e-12 };
        let chans = vec![
            NamedChannel::new("same", pure.clone()),
            NamedChannel::new("inertial", ChannelModel::Inertial { delay: 25e-12, threshold: None }),
        ];
        let rep = compare_models(&chans, &pure, &cfg(), 3, true).unwrap();
        assert_eq!(rep.get("same").unwrap().mean, 0.0);
        assert_eq!(rep.get("same").unwrap().normalized, Some(0.0));
        assert_eq!(rep.get("inertial").unwrap().normalized, Some(1.0));
        assert_eq!(rep.runs.len(), 3);
    }

    #[test]
    fn baseline_guards() {
        let inertial = ChannelModel::Inertial { delay: 20e-12, threshold: None };
        let chans = vec![NamedChannel::new("inertial", inertial.clone())];
        assert!(matches!(compare_models(&chans, &inertial, &cfg(), 2, true), Err(Error::ZeroBaseline)));
        let chans = vec![NamedChannel::new("pure", ChannelModel::Pure { delay: 1e-12 })];
        assert!(matches!(compare_models(&chans, &inertial, &cfg(), 2, true), Err(Error::MissingBaseline)));
        assert!(compare_models(&chans, &inertial, &cfg(), 2, false).is_ok());
    }

    #[test]
    fn named_channel_json() {
        let c: NamedChannel = serde_json::from_str(r#"{"name":"p","kind":"pure","delay":1e-11}"#).unwrap();
        assert_eq!(c, NamedChannel::new("p", ChannelModel::Pure { delay: 1e-11 }));
        assert!(serde_json::from_str::<NamedChannel>(r#"{"name":"p","kind":"pure","delay":1e-11,"zz":1}"#).is_err());
    }

    #[test]
    fn report_csv() {
        let chans = vec![NamedChannel::new("p", ChannelModel::Pure { delay: 0.0 })];
        let rep = ComparisonReport::from_runs(&chans, vec![vec![1e-12], vec![3e-12]], false).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("channel,kind,mean_deviation_s,std_deviation_s,normalized\np,pure,2e-12,"));
        assert!(text.ends_with(",\n"));
    }
}
