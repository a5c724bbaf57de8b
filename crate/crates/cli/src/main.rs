//! `hymis`: command-line access to the hybrid NOR delay model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hymis::charliefit::{
    approx_characteristic_delays, characteristic_delays_with, fit, ApproxConfig, CharacteristicDelays, FitConfig,
    FitTargets,
};
use hymis::misdelay::{delay_curve, linear_grid, DELTA_INF};
use hymis::oracle::{integrate_with, AnalogReference, IntegrationConfig};
use hymis::simkit::{
    compare_models, deviations, digitize, generate_traces, ComparisonReport, DigitalTrace, NamedChannel,
    ReferenceModel, SampledWaveform, Scope, TraceGenConfig,
};
use hymis::{chain, num, Direction, Mode, StateVector, VnPolicy};

use config::{load_channels, load_params, read_json};
use error::{CliError, CliResult};
use output::Output;

#[derive(Parser)]
#[command(name = "hymis", version, about = "Hybrid ODE delay model of a 2-input NOR gate")]
struct Cli {
    /// Seed for random trace generation (overrides the tracegen config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write all artifacts and a manifest.json into this directory instead
    /// of printing the primary CSV to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cross-check against RK4 integration where supported.
    #[arg(long, global = true)]
    oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the state trajectory of a mode schedule.
    Trajectory(TrajectoryArgs),
    /// MIS delay as a function of the input separation.
    DelaySweep(SweepArgs),
    /// The six characteristic delays, exact and approximate.
    Characteristic(CharacteristicArgs),
    /// Fit gate parameters to characteristic delay targets.
    Fit(FitArgs),
    /// Propagate random input traces through delay channels.
    Simulate(SimArgs),
    /// Deviation area of delay channels against a reference.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ParamsArg {
    /// Gate parameters (JSON); defaults to the built-in 15 nm set.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Mode switches as `time:mode` pairs, e.g. `0:10,1e-11:11`.
    #[arg(long)]
    schedule: String,
    /// Initial state `v_n,v_o` in volts; defaults to `v_dd,v_dd`.
    #[arg(long)]
    init: Option<String>,
    /// End time, seconds; defaults to 20 slow time constants past the last switch.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Polarity {
    Falling,
    Rising,
}

#[derive(Clone, Copy, ValueEnum)]
enum VnArg {
    Gnd,
    Half,
    Vdd,
}

impl From<VnArg> for VnPolicy {
    fn from(v: VnArg) -> Self {
        match v {
            VnArg::Gnd => VnPolicy::Gnd,
            VnArg::Half => VnPolicy::Half,
            VnArg::Vdd => VnPolicy::Vdd,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_enum)]
    polarity: Polarity,
    /// Internal node voltage before a rising output.
    #[arg(long, value_enum, default_value = "gnd")]
    vn: VnArg,
    #[arg(long, default_value_t = -DELTA_INF, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = DELTA_INF, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
}

#[derive(Args)]
struct CharacteristicArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_enum, default_value = "gnd")]
    vn: VnArg,
    /// Constants of the approximate formulas (JSON).
    #[arg(long, value_name = "FILE", conflicts_with = "supply_scaled")]
    approx: Option<PathBuf>,
    /// Scale the approximation's voltage constants with the supply.
    #[arg(long)]
    supply_scaled: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Target delays (JSON with the six d_* fields and optional delta_min).
    #[arg(long, value_name = "FILE")]
    targets: PathBuf,
    /// Fit configuration (JSON); every field optional.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace generation config (JSON); replaces the flags below.
    #[arg(long, value_name = "FILE")]
    tracegen: Option<PathBuf>,
    #[arg(long, default_value_t = 100e-12)]
    mu: f64,
    #[arg(long, default_value_t = 50e-12)]
    sigma: f64,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, value_enum, default_value = "local")]
    scope: ScopeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Local,
    Global,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Channel list (JSON); defaults to hybrid, exp and inertial channels.
    #[arg(long, value_name = "FILE")]
    channels: Option<PathBuf>,
    #[command(flatten)]
    traces: TraceArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_name = "FILE")]
    channels: Option<PathBuf>,
    #[command(flatten)]
    traces: TraceArgs,
    #[arg(long, default_value_t = 20)]
    repetitions: usize,
    /// Report deviations relative to the inertial channel.
    #[arg(long)]
    normalize: bool,
    /// `analog` (integrated gate model) or `channel:NAME`.
    #[arg(long, default_value = "analog")]
    reference: String,
    /// Compare a single run against this recorded output trace (CSV).
    #[arg(long, value_name = "FILE", requires_all = ["input_a", "input_b"], conflicts_with = "reference_waveform")]
    reference_trace: Option<PathBuf>,
    /// Like `--reference-trace`, but an analog waveform digitized at v_th.
    #[arg(long, value_name = "FILE", requires_all = ["input_a", "input_b"])]
    reference_waveform: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    input_a: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    input_b: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hymis: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let name = match &cli.command {
        Command::Trajectory(_) => "trajectory",
        Command::DelaySweep(_) => "delay-sweep",
        Command::Characteristic(_) => "characteristic",
        Command::Fit(_) => "fit",
        Command::Simulate(_) => "simulate",
        Command::Compare(_) => "compare",
    };
    let mut out = Output::new(cli.out.clone(), name, cli.seed)?;
    match &cli.command {
        Command::Trajectory(a) => trajectory(a, cli.oracle, &mut out)?,
        Command::DelaySweep(a) => sweep(a, &mut out)?,
        Command::Characteristic(a) => characteristic(a, &mut out)?,
        Command::Fit(a) => fit_cmd(a, &mut out)?,
        Command::Simulate(a) => simulate(a, cli.seed, cli.oracle, &mut out)?,
        Command::Compare(a) => compare(a, cli.seed, &mut out)?,
    }
    out.finish()
}

fn parse_schedule(s: &str) -> CliResult<Vec<(f64, Mode)>> {
    let sched = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|item| {
            let (t, m) = item
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("schedule entry '{item}' is not time:mode")))?;
            let t: f64 = t.trim().parse().map_err(|e| CliError::Usage(format!("schedule time '{t}': {e}")))?;
            let m: Mode = m.trim().parse().map_err(|e: hymis::Error| CliError::Usage(e.to_string()))?;
            Ok((t, m))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if sched.is_empty() {
        return Err(CliError::Usage("schedule must contain at least one segment".into()));
    }
    Ok(sched)
}

fn parse_state(s: &str) -> CliResult<StateVector> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, o] = parts[..] else {
        return Err(CliError::Usage(format!("initial state '{s}' is not v_n,v_o")));
    };
    let f = |x: &str| x.parse::<f64>().map_err(|e| CliError::Usage(format!("initial state '{x}': {e}")));
    Ok(StateVector::new(f(n)?, f(o)?))
}

fn trajectory(a: &TrajectoryArgs, oracle: bool, out: &mut Output) -> CliResult<()> {
    let p = load_params(a.params.params.as_deref())?;
    let sched = parse_schedule(&a.schedule)?;
    let init = match &a.init {
        Some(s) => parse_state(s)?,
        None => StateVector::new(p.v_dd, p.v_dd),
    };
    let pw = chain(&p, init, &sched)?;
    let &(last, last_mode) = sched.last().expect("non-empty schedule");
    let horizon = a.horizon.unwrap_or(last + 20.0 * p.slowest_time_constant(last_mode));
    if !(horizon > 0.0) {
        return Err(CliError::Usage(format!("horizon must be > 0, got {horizon:e}")));
    }
    if a.samples < 2 {
        return Err(CliError::Usage("need at least 2 samples".into()));
    }
    let times = linear_grid(0.0, horizon, a.samples);

    let mut oracle_states: Vec<Option<StateVector>> = vec![None; times.len()];
    let mut max_dev = 0.0f64;
    if oracle {
        // add the sample times as no-op switches so the integrator hits them exactly
        let mut aug: Vec<(f64, Mode)> = sched.clone();
        for &t in &times {
            let m = sched.iter().rev().find(|s| s.0 <= t).map_or(sched[0].1, |s| s.1);
            aug.push((t, m));
        }
        aug.sort_by(|x, y| x.0.total_cmp(&y.0));
        aug.dedup_by(|x, y| x.0 == y.0);
        let cfg = IntegrationConfig::for_modes(&p, sched.iter().map(|s| s.1), 100.0);
        let mut k = 0;
        integrate_with(&p, &aug, init, horizon, &cfg, |t, s| {
            max_dev = max_dev.max(pw.eval(t).max_abs_diff(&s));
            while k < times.len() && times[k] < t {
                k += 1;
            }
            if k < times.len() && times[k] == t {
                oracle_states[k] = Some(s);
            }
        })?;
        out.summary("oracle_max_deviation_v", max_dev);
        eprintln!("oracle max deviation: {max_dev:e} V ({:e} V_DD)", max_dev / p.v_dd);
    }

    out.write("trajectory.csv", |w| {
        if oracle {
            writeln!(w, "t,v_n,v_o,oracle_v_n,oracle_v_o")?;
        } else {
            writeln!(w, "t,v_n,v_o")?;
        }
        for (t, o) in times.iter().zip(&oracle_states) {
            let s = pw.eval(*t);
            write!(w, "{},{},{}", num(*t), num(s.v_n), num(s.v_o))?;
            match o {
                Some(o) => writeln!(w, ",{},{}", num(o.v_n), num(o.v_o))?,
                None if oracle => writeln!(w, ",,")?,
                None => writeln!(w)?,
            }
        }
        Ok(())
    })?;
    out.summary("horizon_s", horizon);
    Ok(())
}

fn sweep(a: &SweepArgs, out: &mut Output) -> CliResult<()> {
    let p = load_params(a.params.params.as_deref())?;
    if a.points < 2 || !(a.to > a.from) {
        return Err(CliError::Usage("need --to > --from and at least 2 points".into()));
    }
    let polarity = match a.polarity {
        Polarity::Falling => Direction::Falling,
        Polarity::Rising => Direction::Rising,
    };
    let curve = delay_curve(&p, polarity, a.vn.into(), &linear_grid(a.from, a.to, a.points))?;
    out.write("delay_curve.csv", |w| curve.write_csv(w))?;
    if let Some((d, v)) = curve.argmin() {
        out.summary("argmin_delta_s", d);
        out.summary("min_delay_s", v);
    }
    Ok(())
}

fn characteristic(a: &CharacteristicArgs, out: &mut Output) -> CliResult<()> {
    let p = load_params(a.params.params.as_deref())?;
    let cfg = match (&a.approx, a.supply_scaled) {
        (Some(path), _) => read_json::<ApproxConfig>(path)?,
        (None, true) => ApproxConfig::supply_scaled(p.v_dd),
        (None, false) => ApproxConfig::default(),
    };
    let vn: VnPolicy = a.vn.into();
    let exact = characteristic_delays_with(&p, vn)?;
    let approx = approx_characteristic_delays(&p, vn, &cfg);
    out.write("characteristic.csv", |w| {
        writeln!(w, "name,exact_s,approx_s,difference_s")?;
        for ((name, e), x) in CharacteristicDelays::NAMES.iter().zip(exact.as_array()).zip(approx.as_array()) {
            writeln!(w, "{name},{},{},{}", num(e), num(x), num(x - e))?;
        }
        Ok(())
    })?;
    out.summary("exact", exact);
    Ok(())
}

fn fit_cmd(a: &FitArgs, out: &mut Output) -> CliResult<()> {
    let targets: FitTargets = read_json(&a.targets)?;
    let cfg = match &a.config {
        Some(path) => read_json::<FitConfig>(path)?,
        None => FitConfig::default(),
    };
    let report = fit(&targets, &cfg)?;
    out.write("fit_residuals.csv", |w| report.write_residuals_csv(w))?;
    out.write_json("fit_params.json", &report.params)?;
    out.write("fit_history.csv", |w| {
        writeln!(w, "iteration,objective_ps2")?;
        for (i, v) in report.history.iter().enumerate() {
            writeln!(w, "{i},{}", num(*v))?;
        }
        Ok(())
    })?;
    out.summary("feasible", report.feasible);
    out.summary("objective_ps2", report.objective);
    out.summary("diagnostics", &report.diagnostics);
    if report.feasible {
        eprintln!("fit feasible: max weighted residual {:e} s", report.max_weighted_residual());
    } else {
        eprintln!("fit infeasible:");
        for d in &report.diagnostics {
            eprintln!("  {d}");
        }
    }
    Ok(())
}

fn tracegen_config(t: &TraceArgs, seed: Option<u64>) -> CliResult<TraceGenConfig> {
    let mut cfg = match &t.tracegen {
        Some(path) => read_json::<TraceGenConfig>(path)?,
        None => {
            let scope = match t.scope {
                ScopeArg::Local => Scope::Local,
                ScopeArg::Global => Scope::Global,
            };
            TraceGenConfig::new(t.mu, t.sigma, t.count, scope, 0)
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_trace(out: &mut Output, name: &str, t: &DigitalTrace) -> CliResult<()> {
    out.write(name, |w| t.write_csv(w))
}

fn simulate(a: &SimArgs, seed: Option<u64>, oracle: bool, out: &mut Output) -> CliResult<()> {
    let p = load_params(a.params.params.as_deref())?;
    let channels = load_channels(a.channels.as_deref(), &p)?;
    let cfg = tracegen_config(&a.traces, seed)?;
    let inputs = generate_traces(&cfg, 2)?;
    write_trace(out, "input_a.csv", &inputs[0])?;
    write_trace(out, "input_b.csv", &inputs[1])?;
    for c in &channels {
        let y = c.model.apply_gate(&inputs[0], &inputs[1])?;
        write_trace(out, &format!("output_{}.csv", c.name), &y)?;
        out.summary(&format!("transitions_{}", c.name), y.transitions.len());
    }
    if oracle {
        let y = AnalogReference::new(p).reference(&inputs[0], &inputs[1])?;
        write_trace(out, "output_analog.csv", &y)?;
        out.summary("transitions_analog", y.transitions.len());
    }
    out.summary("tracegen", &cfg);
    Ok(())
}

fn read_trace(path: &Path) -> CliResult<DigitalTrace> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    DigitalTrace::read_csv(f).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn compare(a: &CompareArgs, seed: Option<u64>, out: &mut Output) -> CliResult<()> {
    let p = load_params(a.params.params.as_deref())?;
    let channels = load_channels(a.channels.as_deref(), &p)?;

    let recorded = match (&a.reference_trace, &a.reference_waveform) {
        (Some(path), _) => Some(read_trace(path)?),
        (None, Some(path)) => {
            let f = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let w = SampledWaveform::read_csv(f).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            Some(digitize(&w, p.v_th))
        }
        (None, None) => None,
    };
    let report = if let Some(reference) = recorded {
        let (ia, ib) = (a.input_a.as_deref(), a.input_b.as_deref());
        let (ia, ib) = (read_trace(ia.expect("required by clap"))?, read_trace(ib.expect("required by clap"))?);
        let run = deviations(&channels, &ia, &ib, &reference)?;
        ComparisonReport::from_runs(&channels, vec![run], a.normalize)?
    } else {
        let cfg = tracegen_config(&a.traces, seed)?;
        let analog;
        let reference: &dyn ReferenceModel = match a.reference.as_str() {
            "analog" => {
                analog = AnalogReference::new(p);
                &analog
            }
            other => {
                let name = other
                    .strip_prefix("channel:")
                    .ok_or_else(|| CliError::Usage(format!("unknown reference '{other}' (analog, channel:NAME)")))?;
                let c: &NamedChannel = channels
                    .iter()
                    .find(|c| c.name == name)
                    .ok_or_else(|| CliError::Usage(format!("no channel named '{name}'")))?;
                &c.model
            }
        };
        out.summary("tracegen", &cfg);
        compare_models(&channels, reference, &cfg, a.repetitions, a.normalize)?
    };
    out.write("comparison.csv", |w| report.write_csv(w))?;
    out.write("comparison_runs.csv", |w| {
        write!(w, "repetition")?;
        for c in &channels {
            write!(w, ",{}", c.name)?;
        }
        writeln!(w)?;
        for (r, run) in report.runs.iter().enumerate() {
            write!(w, "{r}")?;
            for v in run {
                write!(w, ",{}", num(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    out.summary("channels", &report.channels);
    eprint!("{report}");
    Ok(())
}
