//! Command-line front end behind the `soen-tx` binary.

use crate::calibrate::{calibrate_thermal, CalibrationAnchors};
use crate::chain::{delivery_reliability, fire, sample_zero_fraction};
use crate::config::{ConfigError, RunConfig, Unit};
use crate::diode::{forward_voltage, square_pulse_run};
use crate::drive::{drive_thermal, PulseShape};
use crate::htron::steady_state_power_density;
use crate::neuron::{run_neuron, SpikeTrain};
use crate::ode::TimeSeries;
use crate::sweep::{figure_dataset, run_sweep, Axis, ResultTable, SweepSpec, Target};
use crate::validation::run_acceptance;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "soen-tx", version, about = "Superconducting optoelectronic transmitter simulator")]
pub struct Cli {
    /// Configuration file (`section.key = value unit` lines) applied over the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format. Defaults to the `--out` extension, else CSV for
    /// tables and JSON for everything else.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for Monte Carlo delivery sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Square hTron pulse of `circuit.t_on` through the LED circuit.
    Led {
        /// Also write the circuit transient as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// nTron gate pulse (or a square drive) through the hTron thermal stack.
    Htron {
        /// Square drive of this duration at the nTron current instead of the
        /// exponential pulse, e.g. "6 ns".
        #[arg(long)]
        square: Option<String>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// One complete firing event.
    Chain {
        /// Monte Carlo trials for the delivery estimate.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Loop neuron driven by spike trains.
    Neuron {
        /// One CSV (header `t_seconds`) per synapse. Without inputs every
        /// synapse gets a regular train at `--rate`.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        /// Rate of the built-in regular trains, e.g. "10 MHz".
        #[arg(long, default_value = "10 MHz")]
        rate: String,
    },
    /// Parameter sweep.
    Sweep {
        /// led, led_min_pulse, htron, htron_match, chain, efficiency, delivery
        #[arg(long)]
        target: String,
        /// `path=v1,v2,... [unit]`, e.g. "diode.C=1,10,100 fF". Repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// `path=value [unit]` applied to every point. Repeatable.
        #[arg(long = "fix")]
        fixed: Vec<String>,
        /// Output columns (default: all outputs of the target).
        #[arg(long = "output")]
        outputs: Vec<String>,
    },
    /// Dataset behind one figure: fig4b, fig4c, fig6a, fig6b, fig7.
    Figure { id: String },
    /// Fit spacer specific heat and substrate resistance to the switching anchors.
    CalibrateThermal,
    /// Run the acceptance suite.
    Validate,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Simulation(String),
    Acceptance(usize),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Simulation(m) => write!(f, "simulation error: {m}"),
            CliError::Acceptance(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Simulation(_) => EXIT_SIMULATION,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn sim<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Simulation(e.to_string())
}

/// Parses and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("soen-tx: {e}");
            e.exit_code()
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    Ok(match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    })
}

impl Cli {
    pub fn resolved_format(&self) -> Format {
        let by_ext = self
            .out
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| match e.to_str() {
                Some("csv") => Some(Format::Csv),
                Some("json") => Some(Format::Json),
                _ => None,
            });
        self.format.or(by_ext).unwrap_or(match self.command {
            Command::Sweep { .. } | Command::Figure { .. } => Format::Csv,
            _ => Format::Json,
        })
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    let format = cli.resolved_format();
    let mut out = Output::new(cli.out.as_deref())?;
    match &cli.command {
        Command::Led { trace } => {
            let circuit = cfg.led_circuit();
            let (tr, r) = square_pulse_run(&cfg.diode, &circuit, cfg.t_on).map_err(sim)?;
            if let Some(p) = trace {
                let names = ["I1", "V2", "Q_pn", "Q_1", "E_supplied", "E_r1", "E_rhc", "E_pn"];
                write_series(p, &tr.series, &names)?;
            }
            #[derive(Serialize)]
            struct LedReport {
                t_on: f64,
                n_ph: f64,
                eta_rc: f64,
                event_energy: f64,
                dissipated: f64,
                peak_voltage: f64,
                forward_voltage: f64,
                saturation_current: f64,
            }
            let report = LedReport {
                t_on: r.on_duration,
                n_ph: r.photons,
                eta_rc: r.eta_rc,
                event_energy: r.event_energy,
                dissipated: r.ledger.dissipated(),
                peak_voltage: r.peak_voltage,
                forward_voltage: forward_voltage(&cfg.diode, circuit.i_led).map_err(sim)?,
                saturation_current: cfg.diode.saturation_current(),
            };
            out.record(format, &report)
        }
        Command::Htron { square, trace } => {
            let stack = cfg.thermal_stack()?;
            let n = &cfg.ntron;
            let pulse = match square {
                Some(d) => PulseShape::Square {
                    t_start: 0.0,
                    duration: parse_quantity("--square", d, Unit::Time)?,
                    amplitude: n.channel_current,
                },
                None => n.pulse(0.0),
            };
            let r = drive_thermal(&stack, &cfg.channel, pulse, n.load_resistance).map_err(sim)?;
            if let Some(p) = trace {
                write_series(p, &r.series, &["T1", "T2", "T3", "T4", "E_in", "E_bath"])?;
            }
            #[derive(Serialize)]
            struct HtronReport {
                drive: &'static str,
                tau_nt: f64,
                t_above: f64,
                switch_time: Option<f64>,
                gate_energy: f64,
                steady_state_power_density: f64,
            }
            let report = HtronReport {
                drive: if square.is_some() { "square" } else { "exponential" },
                tau_nt: n.tau(),
                t_above: r.time_above_tc,
                switch_time: r.switch_time,
                gate_energy: r.gate_energy,
                steady_state_power_density: steady_state_power_density(&stack, &cfg.channel),
            };
            out.record(format, &report)
        }
        Command::Chain { trials } => {
            let event = fire(&cfg.chain_config()?).map_err(sim)?;
            let c = &cfg.chain;
            let d = delivery_reliability(event.n_ph, c.k_out, c.link_loss_db, c.detector_efficiency).map_err(sim)?;
            let sampled = if *trials > 0 {
                Some(sample_zero_fraction(d.lambda, *trials, cli.seed).map_err(sim)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct ChainReport {
                #[serde(flatten)]
                event: crate::chain::FiringEventResult,
                lambda: f64,
                p_zero: f64,
                p_zero_sampled: Option<f64>,
                seed: u64,
            }
            match format {
                Format::Json => out.json(&ChainReport {
                    event,
                    lambda: d.lambda,
                    p_zero: d.p_zero,
                    p_zero_sampled: sampled,
                    seed: cli.seed,
                }),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record([
                        "tau_nt", "t_on", "n_ph", "e_led", "e_gate", "e_total", "eta_rc", "eta_led", "eta_ht",
                        "eta_amp", "lambda", "p_zero",
                    ])
                    .map_err(sim)?;
                    let row = [
                        event.tau_nt,
                        event.t_on,
                        event.n_ph,
                        event.e_led,
                        event.e_gate,
                        event.e_total,
                        event.eta_rc,
                        event.eta_led,
                        event.eta_ht,
                        event.eta_amp,
                        d.lambda,
                        d.p_zero,
                    ];
                    w.write_record(row.iter().map(|x| crate::sweep::format_number(*x)))
                        .map_err(sim)?;
                    out.bytes(&w.into_inner().map_err(sim)?)
                }
            }
        }
        Command::Neuron { inputs, rate } => {
            let ncfg = cfg.neuron_config()?;
            let t_span = (0.0, cfg.neuron.t_end);
            let trains = if inputs.is_empty() {
                let rate = parse_quantity("--rate", rate, Unit::Frequency)?;
                regular_trains(ncfg.synapses.len(), rate, t_span.1)
            } else {
                inputs
                    .iter()
                    .map(|p| {
                        let f = File::open(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                        SpikeTrain::read_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            if trains.len() != ncfg.synapses.len() {
                return Err(CliError::Config(format!(
                    "neuron.synapses: {} synapses configured but {} input trains given",
                    ncfg.synapses.len(),
                    trains.len()
                )));
            }
            let r = run_neuron(&ncfg, &trains, t_span).map_err(sim)?;
            match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    r.output.write_csv(&mut buf).map_err(sim)?;
                    out.bytes(&buf)
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct NeuronReport<'a> {
                        output_spikes: &'a [f64],
                        accepted_inputs: Vec<usize>,
                        rate: f64,
                    }
                    out.json(&NeuronReport {
                        output_spikes: &r.output.times,
                        accepted_inputs: r.accepted_inputs.iter().map(Vec::len).collect(),
                        rate: r.output.len() as f64 / (t_span.1 - t_span.0),
                    })
                }
            }
        }
        Command::Sweep {
            target,
            axes,
            fixed,
            outputs,
        } => {
            let target = Target::parse(target).map_err(|e| CliError::Config(e.to_string()))?;
            let mut spec = SweepSpec::new(
                target,
                axes.iter()
                    .map(|a| parse_axis(&cfg, a))
                    .collect::<Result<_, _>>()?,
            );
            for f in fixed {
                let a = parse_axis(&cfg, f)?;
                if a.values.len() != 1 {
                    return Err(CliError::Config(format!("{}: --fix takes a single value", a.path)));
                }
                spec = spec.fix(&a.path, a.values[0]);
            }
            spec.outputs = outputs.clone();
            let table = run_sweep(&spec, &cfg, cli.jobs).map_err(sweep_error)?;
            out.table(format, &table)
        }
        Command::Figure { id } => {
            let table = figure_dataset(id, &cfg, cli.jobs).map_err(sweep_error)?;
            out.table(format, &table)
        }
        Command::CalibrateThermal => {
            let stack = cfg.thermal_stack()?;
            let r = calibrate_thermal(&stack, &cfg.channel, &cfg.ntron, &CalibrationAnchors::default())
                .map_err(sim)?;
            match format {
                Format::Json => out.json(&r),
                // Config lines that install the fit.
                Format::Csv => {
                    let mut s = String::new();
                    for m in crate::calibrate::SPACER_MATERIALS {
                        s += &format!("material.{m}.cv_linear = 0 J/(kg*K^2)\n");
                        s += &format!("material.{m}.cv_cubic = {:e} J/(kg*K^4)\n", r.spacer_cv_cubic);
                    }
                    s += &format!(
                        "stack.substrate_resistance_area = {:e} K*m^2/W\n",
                        r.substrate_resistance_area
                    );
                    out.bytes(s.as_bytes())
                }
            }
        }
        Command::Validate => {
            let checks = run_acceptance(&cfg, |c| eprintln!("{c}"));
            let failed = checks.iter().filter(|c| !c.passed).count();
            match format {
                Format::Json => out.json(&checks)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["id", "name", "passed", "detail", "seconds"]).map_err(sim)?;
                    for c in &checks {
                        w.write_record([
                            c.id.to_string(),
                            c.name.to_string(),
                            c.passed.to_string(),
                            c.detail.clone(),
                            format!("{:.3}", c.seconds),
                        ])
                        .map_err(sim)?;
                    }
                    out.bytes(&w.into_inner().map_err(sim)?)?
                }
            }
            if failed > 0 {
                Err(CliError::Acceptance(failed))
            } else {
                Ok(())
            }
        }
    }
}

fn sweep_error(e: crate::sweep::SweepError) -> CliError {
    use crate::sweep::SweepError::*;
    match e {
        UnknownParameter(_) | UnknownTarget(_) | UnknownOutput { .. } | EmptyAxes | NoSuchFigure(_) | Config(_) => {
            CliError::Config(e.to_string())
        }
        _ => sim(e),
    }
}

/// `"10 MHz"` → SI value in the given dimension.
fn parse_quantity(what: &str, text: &str, unit: Unit) -> Result<f64, CliError> {
    let text = text.trim();
    let (num, u) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let v: f64 = num
        .parse()
        .map_err(|_| CliError::Config(format!("{what}: '{num}' is not a number")))?;
    unit.to_si(v, u.trim())
        .ok_or_else(|| CliError::Config(format!("{what}: unit '{}' is not a unit of {}", u.trim(), unit.name())))
}

fn target_input_unit(path: &str) -> Option<Unit> {
    match path {
        "target.n_photons" => Some(Unit::Dimensionless),
        "target.t_above" => Some(Unit::Time),
        _ => None,
    }
}

/// `"diode.C=1,10,100 fF"` → axis in SI.
pub fn parse_axis(cfg: &RunConfig, text: &str) -> Result<Axis, CliError> {
    let (path, rest) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("'{text}': expected path=values [unit]")))?;
    let path = path.trim();
    let unit = cfg
        .unit_of(path)
        .or_else(|| target_input_unit(path))
        .ok_or_else(|| CliError::Config(format!("unknown parameter {path}")))?;
    let rest = rest.trim();
    let (list, u) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let values = list
        .split(',')
        .map(|v| {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{path}: '{v}' is not a number")))?;
            unit.to_si(x, u.trim())
                .ok_or_else(|| CliError::Config(format!("{path}: unit '{}' is not a unit of {}", u.trim(), unit.name())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Axis::new(path, values))
}

/// Regular trains at `rate`, synapse `i` offset by `i/(n·rate)`.
pub fn regular_trains(n: usize, rate: f64, t_end: f64) -> Vec<SpikeTrain> {
    let period = 1.0 / rate;
    (0..n)
        .map(|i| {
            let offset = period * (i as f64 + 1.0) / n as f64;
            let count = ((t_end - offset) / period).ceil().max(0.0) as usize;
            SpikeTrain {
                times: (0..count).map(|k| offset + k as f64 * period).collect(),
            }
        })
        .collect()
}

fn write_series(path: &Path, series: &TimeSeries, names: &[&str]) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| sim(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec!["t"];
    header.extend_from_slice(names);
    w.write_record(&header).map_err(sim)?;
    for (t, y) in series.times.iter().zip(&series.states) {
        let mut rec = vec![format!("{t:e}")];
        rec.extend(y.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(sim)?;
    }
    w.flush().map_err(sim)
}

struct Output {
    sink: Box<dyn Write>,
}

impl Output {
    fn new(path: Option<&Path>) -> Result<Self, CliError> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p).map_err(|e| CliError::Config(format!("--out {}: {e}", p.display())))?),
            None => Box::new(std::io::stdout()),
        };
        Ok(Self { sink })
    }

    fn bytes(&mut self, b: &[u8]) -> Result<(), CliError> {
        self.sink.write_all(b).and_then(|_| self.sink.flush()).map_err(sim)
    }

    fn json<T: Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(sim)?;
        s.push('\n');
        self.bytes(s.as_bytes())
    }

    /// A flat record: JSON object, or a two-line CSV.
    fn record<T: Serialize>(&mut self, format: Format, v: &T) -> Result<(), CliError> {
        match format {
            Format::Json => self.json(v),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.serialize(v).map_err(sim)?;
                self.bytes(&w.into_inner().map_err(sim)?)
            }
        }
    }

    fn table(&mut self, format: Format, t: &ResultTable) -> Result<(), CliError> {
        match format {
            Format::Csv => t.write_csv(&mut self.sink).map_err(sim),
            Format::Json => {
                t.write_json(&mut self.sink).map_err(sim)?;
                self.bytes(b"\n")
            }
        }
    }
}
