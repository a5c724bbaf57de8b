//! JSON configuration files.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use hymis::simkit::{ChannelModel, ExpChannel, NamedChannel, EXP_DELTA_MIN};
use hymis::{GateParams, VnPolicy};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Gate parameters from `path`, or the built-in reference set.
pub fn load_params(path: Option<&Path>) -> CliResult<GateParams> {
    match path {
        Some(p) => read_json(p),
        None => Ok(GateParams::table_i()),
    }
}

/// Channel entry of a channels file. Omitted parameters are derived from
/// the gate parameters: the inertial delay is the mean SIS delay, the
/// exponential time constants are calibrated to the SIS delays and the
/// hybrid channel uses the gate itself.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Pure {
        name: Option<String>,
        delay: f64,
    },
    Inertial {
        name: Option<String>,
        delay: Option<f64>,
        threshold: Option<f64>,
    },
    ExpInvolution {
        name: Option<String>,
        tau_rise: Option<f64>,
        tau_fall: Option<f64>,
        delta_min: Option<f64>,
    },
    HybridNor {
        name: Option<String>,
        params: Option<GateParams>,
        #[serde(default)]
        initial_vn: VnPolicy,
    },
}

impl ChannelSpec {
    pub fn resolve(&self, params: &GateParams) -> CliResult<NamedChannel> {
        let (name, model) = match self {
            ChannelSpec::Pure { name, delay } => (name, ChannelModel::Pure { delay: *delay }),
            ChannelSpec::Inertial { name, delay, threshold } => {
                let delay = match delay {
                    Some(d) => *d,
                    None => match ChannelModel::inertial_from(params)? {
                        ChannelModel::Inertial { delay, .. } => delay,
                        _ => unreachable!("inertial_from builds an inertial channel"),
                    },
                };
                (name, ChannelModel::Inertial { delay, threshold: *threshold })
            }
            ChannelSpec::ExpInvolution { name, tau_rise, tau_fall, delta_min } => {
                let dm = delta_min.unwrap_or(EXP_DELTA_MIN);
                let c = match (tau_rise, tau_fall) {
                    (Some(r), Some(f)) => ExpChannel::new(*r, *f, dm)?,
                    (None, None) => ExpChannel::calibrated(params, dm)?,
                    _ => {
                        return Err(CliError::Usage(
                            "exp_involution needs both tau_rise and tau_fall, or neither".into(),
                        ))
                    }
                };
                (name, ChannelModel::ExpInvolution(c))
            }
            ChannelSpec::HybridNor { name, params: p, initial_vn } => {
                (name, ChannelModel::HybridNor { params: p.unwrap_or(*params), initial_vn: *initial_vn })
            }
        };
        model.validate()?;
        let name = name.clone().unwrap_or_else(|| model.kind().to_string());
        Ok(NamedChannel::new(name, model))
    }
}

pub fn default_channel_specs() -> Vec<ChannelSpec> {
    vec![
        ChannelSpec::HybridNor { name: Some("hybrid".into()), params: None, initial_vn: VnPolicy::Gnd },
        ChannelSpec::ExpInvolution { name: Some("exp".into()), tau_rise: None, tau_fall: None, delta_min: None },
        ChannelSpec::Inertial { name: Some("inertial".into()), delay: None, threshold: None },
    ]
}

pub fn load_channels(path: Option<&Path>, params: &GateParams) -> CliResult<Vec<NamedChannel>> {
    let specs = match path {
        Some(p) => read_json::<Vec<ChannelSpec>>(p)?,
        None => default_channel_specs(),
    };
    if specs.is_empty() {
        return Err(CliError::Usage("channel list is empty".into()));
    }
    let channels = specs.iter().map(|s| s.resolve(params)).collect::<CliResult<Vec<_>>>()?;
    let mut seen = HashSet::new();
    for c in &channels {
        if !seen.insert(c.name.as_str()) {
            return Err(CliError::Usage(format!("duplicate channel name '{}'", c.name)));
        }
        if c.name.contains(['/', '\\']) {
            return Err(CliError::Usage(format!("channel name '{}' must not contain path separators", c.name)));
        }
    }
    Ok(channels)
}
