//! Digital trace simulation: NOR evaluation, delay channels, random input
//! generation, waveform digitization and the deviation-area metric.

mod channel;
mod compare;
mod hybrid;
mod metric;
mod trace;
mod tracegen;

pub use channel::{apply_inertial, apply_pure, ChannelModel, ExpChannel, EXP_DELTA_MIN};
pub use compare::{compare_models, deviations, ChannelStats, ComparisonReport, NamedChannel, ReferenceModel};
pub use hybrid::{apply_hybrid_nor, gate_schedule, settle_time, steady_state, SETTLE_TIME_CONSTANTS};
pub use metric::deviation_area;
pub use trace::{digitize, nor_eval, DigitalTrace, Digitizer, SampledWaveform};
pub use tracegen::{generate_traces, Scope, TraceGenConfig, DEFAULT_GAP_FLOOR};
