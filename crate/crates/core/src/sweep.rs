//! Parameter sweeps over [`RunConfig`] and the canned figure datasets.
//!
//! A sweep evaluates one target operation on the Cartesian product of its
//! axes. Points run in parallel; rows come back in lexicographic axis order.
//! A failing point yields NaN outputs and a message in the error column.

use crate::chain::{delivery_reliability, efficiency_point, fire};
use crate::config::{ConfigError, RunConfig};
use crate::diode::{min_pulse_for_photons, square_pulse_run};
use crate::drive::{drive_thermal, required_tau_for_ton, square_duration_for_ton, PulseShape};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("unknown sweep target '{0}'")]
    UnknownTarget(String),
    #[error("target {target} has no output '{output}'")]
    UnknownOutput { target: String, output: String },
    #[error("sweep needs at least one axis with at least one value")]
    EmptyAxes,
    #[error("no such figure dataset")]
    NoSuchFigure(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Operation evaluated at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Square on-duration `circuit.t_on` through the LED circuit.
    Led,
    /// Shortest square on-duration reaching `target.n_photons`.
    LedMinPulse,
    /// nTron exponential pulse through the thermal stack.
    Htron,
    /// Exponential and square drives matched to `target.t_above`.
    HtronMatch,
    /// Full firing event.
    Chain,
    /// Chain sized for `target.n_photons`.
    Efficiency,
    /// Poisson delivery of `target.n_photons`.
    Delivery,
}

/// Inputs that belong to the operation rather than to the device config.
pub const TARGET_INPUTS: [&str; 2] = ["target.n_photons", "target.t_above"];

impl Target {
    pub const ALL: [Target; 7] = [
        Target::Led,
        Target::LedMinPulse,
        Target::Htron,
        Target::HtronMatch,
        Target::Chain,
        Target::Efficiency,
        Target::Delivery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Led => "led",
            Target::LedMinPulse => "led_min_pulse",
            Target::Htron => "htron",
            Target::HtronMatch => "htron_match",
            Target::Chain => "chain",
            Target::Efficiency => "efficiency",
            Target::Delivery => "delivery",
        }
    }

    pub fn parse(name: &str) -> Result<Self, SweepError> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| SweepError::UnknownTarget(name.to_string()))
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Target::Led => &["N_ph", "eta_rc", "event_energy", "dissipated", "peak_voltage"],
            Target::LedMinPulse => &["t_on", "N_ph", "eta_rc", "event_energy"],
            Target::Htron => &["tau_nt", "t_above", "switch_time", "gate_energy"],
            Target::HtronMatch => &[
                "tau_nt",
                "tau_ratio",
                "square_duration",
                "e_exponential",
                "e_square",
                "energy_ratio",
            ],
            Target::Chain => &[
                "tau_nt", "t_on", "N_ph", "e_led", "e_gate", "e_total", "e_rc", "eta_rc", "eta_led", "eta_ht",
                "eta_amp",
            ],
            Target::Efficiency => &[
                "t_on",
                "tau_nt",
                "N_ph",
                "eta_led",
                "eta_ht",
                "eta_amp",
                "e_amp",
                "e_amp_event",
            ],
            Target::Delivery => &["lambda", "p_zero"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub path: String,
    /// SI values.
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(path: &str, values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            path: path.to_string(),
            values: values.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub target: Target,
    pub axes: Vec<Axis>,
    /// Overrides applied to every point, SI.
    #[serde(default)]
    pub fixed: Vec<(String, f64)>,
    /// Empty selects every output of the target.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl SweepSpec {
    pub fn new(target: Target, axes: Vec<Axis>) -> Self {
        Self {
            target,
            axes,
            fixed: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn fix(mut self, path: &str, value: f64) -> Self {
        self.fixed.push((path.to_string(), value));
        self
    }

    pub fn outputs(mut self, names: &[&str]) -> Self {
        self.outputs = names.iter().map(|s| s.to_string()).collect();
        self
    }

    fn selected_outputs(&self) -> Vec<String> {
        if self.outputs.is_empty() {
            self.target.outputs().iter().map(|s| s.to_string()).collect()
        } else {
            self.outputs.clone()
        }
    }

    pub fn validate(&self, base: &RunConfig) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(SweepError::EmptyAxes);
        }
        let paths = self.axes.iter().map(|a| &a.path).chain(self.fixed.iter().map(|(p, _)| p));
        for p in paths {
            if !(base.has(p) || TARGET_INPUTS.contains(&p.as_str())) {
                return Err(SweepError::UnknownParameter(p.clone()));
            }
        }
        for o in self.selected_outputs() {
            if !self.target.outputs().contains(&o.as_str()) {
                return Err(SweepError::UnknownOutput {
                    target: self.target.name().to_string(),
                    output: o,
                });
            }
        }
        Ok(())
    }

    /// Number of sweep points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of point `index`, last axis fastest.
    fn point(&self, mut index: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            v[k] = a.values[index % a.values.len()];
            index /= a.values.len();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub tool_version: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One entry per row; `None` when the point succeeded.
    pub errors: Vec<Option<String>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Renames `name` to `label` and multiplies it by `10^-exponent`, e.g.
    /// `("I_LED", "I_LED_uA", -6)`.
    pub fn relabel(&mut self, name: &str, label: &str, exponent: i32) {
        if let Some(i) = self.column_index(name) {
            self.columns[i] = label.to_string();
            for r in &mut self.rows {
                r[i] = if exponent < 0 {
                    r[i] * 10f64.powi(-exponent)
                } else {
                    r[i] / 10f64.powi(exponent)
                };
            }
        }
    }

    pub fn failures(&self) -> usize {
        self.errors.iter().filter(|e| e.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SweepError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = self.columns.clone();
        header.push("error".into());
        out.write_record(&header)?;
        for (row, err) in self.rows.iter().zip(&self.errors) {
            let mut rec: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            rec.push(err.clone().unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), SweepError> {
        #[derive(Serialize)]
        struct Doc<'a> {
            metadata: &'a Provenance,
            columns: &'a [String],
            rows: &'a [Vec<f64>],
            errors: &'a [Option<String>],
        }
        serde_json::to_writer_pretty(
            w,
            &Doc {
                metadata: &self.provenance,
                columns: &self.columns,
                rows: &self.rows,
                errors: &self.errors,
            },
        )?;
        Ok(())
    }
}

/// Plain decimal for moderate magnitudes, scientific otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn label_of(path: &str) -> String {
    path.rsplit('.').next().unwrap_or(path).to_string()
}

type PointResult = Result<BTreeMap<&'static str, f64>, String>;

fn evaluate(target: Target, cfg: &RunConfig, inputs: &BTreeMap<&str, f64>) -> PointResult {
    let s = |e: &dyn std::fmt::Display| e.to_string();
    let n_photons = inputs
        .get("target.n_photons")
        .copied()
        .unwrap_or(cfg.chain.zeta * cfg.chain.k_out as f64);
    let t_above = inputs.get("target.t_above").copied().unwrap_or(10e-9);
    let stack = cfg.thermal_stack().map_err(|e| s(&e))?;
    let mut out = BTreeMap::new();
    match target {
        Target::Led => {
            let (_, r) = square_pulse_run(&cfg.diode, &cfg.led_circuit(), cfg.t_on).map_err(|e| s(&e))?;
            out.insert("N_ph", r.photons);
            out.insert("eta_rc", r.eta_rc);
            out.insert("event_energy", r.event_energy);
            out.insert("dissipated", r.ledger.dissipated());
            out.insert("peak_voltage", r.peak_voltage);
        }
        Target::LedMinPulse => {
            let circuit = cfg.led_circuit();
            let t = min_pulse_for_photons(&cfg.diode, &circuit, n_photons).map_err(|e| s(&e))?;
            let (_, r) = square_pulse_run(&cfg.diode, &circuit, t).map_err(|e| s(&e))?;
            out.insert("t_on", t);
            out.insert("N_ph", r.photons);
            out.insert("eta_rc", r.eta_rc);
            out.insert("event_energy", r.event_energy);
        }
        Target::Htron => {
            let n = &cfg.ntron;
            let r = drive_thermal(&stack, &cfg.channel, n.pulse(0.0), n.load_resistance).map_err(|e| s(&e))?;
            out.insert("tau_nt", n.tau());
            out.insert("t_above", r.time_above_tc);
            out.insert("switch_time", r.switch_time.unwrap_or(f64::NAN));
            out.insert("gate_energy", r.gate_energy);
        }
        Target::HtronMatch => {
            let n = &cfg.ntron;
            let tau = required_tau_for_ton(&stack, &cfg.channel, n, t_above).map_err(|e| s(&e))?;
            let d = square_duration_for_ton(&stack, &cfg.channel, n.channel_current, n.load_resistance, t_above)
                .map_err(|e| s(&e))?;
            let e_exp = n.clone().with_tau(tau).pulse(0.0).energy(n.load_resistance);
            let e_sq = PulseShape::Square {
                t_start: 0.0,
                duration: d,
                amplitude: n.channel_current,
            }
            .energy(n.load_resistance);
            out.insert("tau_nt", tau);
            out.insert("tau_ratio", tau / t_above);
            out.insert("square_duration", d);
            out.insert("e_exponential", e_exp);
            out.insert("e_square", e_sq);
            out.insert("energy_ratio", e_exp / e_sq);
        }
        Target::Chain => {
            let r = fire(&cfg.chain_config().map_err(|e| s(&e))?).map_err(|e| s(&e))?;
            out.insert("tau_nt", r.tau_nt);
            out.insert("t_on", r.t_on);
            out.insert("N_ph", r.n_ph);
            out.insert("e_led", r.e_led);
            out.insert("e_gate", r.e_gate);
            out.insert("e_total", r.e_total);
            out.insert("e_rc", r.e_rc);
            out.insert("eta_rc", r.eta_rc);
            out.insert("eta_led", r.eta_led);
            out.insert("eta_ht", r.eta_ht);
            out.insert("eta_amp", r.eta_amp);
        }
        Target::Efficiency => {
            let chain = cfg.chain_config().map_err(|e| s(&e))?;
            let r = efficiency_point(&chain, n_photons).map_err(|e| s(&e))?;
            out.insert("t_on", r.t_on);
            out.insert("tau_nt", r.tau_nt);
            out.insert("N_ph", r.n_ph);
            out.insert("eta_led", r.eta_led);
            out.insert("eta_ht", r.eta_ht);
            out.insert("eta_amp", r.eta_amp);
            out.insert("e_amp", r.e_amp);
            out.insert("e_amp_event", r.e_amp_event);
        }
        Target::Delivery => {
            let c = &cfg.chain;
            let d = delivery_reliability(n_photons, c.k_out, c.link_loss_db, c.detector_efficiency)
                .map_err(|e| s(&e))?;
            out.insert("lambda", d.lambda);
            out.insert("p_zero", d.p_zero);
        }
    }
    Ok(out)
}

fn run_point(spec: &SweepSpec, base: &RunConfig, values: &[f64]) -> PointResult {
    let mut cfg = base.clone();
    let mut inputs = BTreeMap::new();
    for (axis, &v) in spec.axes.iter().zip(values) {
        if TARGET_INPUTS.contains(&axis.path.as_str()) {
            inputs.insert(axis.path.as_str(), v);
        } else {
            cfg.set(&axis.path, v).map_err(|e| e.to_string())?;
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    evaluate(spec.target, &cfg, &inputs)
}

/// Evaluates `spec` against `base`. `jobs` bounds the worker count; `None`
/// uses every core.
pub fn run_sweep(spec: &SweepSpec, base: &RunConfig, jobs: Option<usize>) -> Result<ResultTable, SweepError> {
    spec.validate(base)?;
    let mut base = base.clone();
    let mut fixed_inputs = Vec::new();
    for (p, v) in &spec.fixed {
        if TARGET_INPUTS.contains(&p.as_str()) {
            fixed_inputs.push(Axis::new(p, [*v]));
        } else {
            base.set(p, *v)?;
        }
    }
    let mut full = spec.clone();
    full.axes.extend(fixed_inputs.iter().cloned());
    let outputs = spec.selected_outputs();
    let n = full.len();
    let eval = |i: usize| {
        let values = full.point(i);
        let res = run_point(&full, &base, &values);
        (values, res)
    };
    let results: Vec<_> = match jobs {
        Some(1) => (0..n).map(eval).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                builder = builder.num_threads(j);
            }
            let pool = builder.build().map_err(|e| SweepError::Pool(e.to_string()))?;
            pool.install(|| (0..n).into_par_iter().map(eval).collect())
        }
    };
    let na = spec.axes.len();
    let mut columns: Vec<String> = spec.axes.iter().map(|a| label_of(&a.path)).collect();
    columns.extend(outputs.iter().cloned());
    let mut rows = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for (values, res) in results {
        let mut row: Vec<f64> = values[..na].to_vec();
        match res {
            Ok(map) => {
                row.extend(outputs.iter().map(|o| map.get(o.as_str()).copied().unwrap_or(f64::NAN)));
                errors.push(None);
            }
            Err(e) => {
                row.extend(std::iter::repeat(f64::NAN).take(outputs.len()));
                errors.push(Some(e));
            }
        }
        rows.push(row);
    }
    Ok(ResultTable {
        columns,
        rows,
        errors,
        provenance: Provenance {
            config_hash: base.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            target: spec.target.name().to_string(),
        },
    })
}

/// Identifiers accepted by [`figure_dataset`].
pub const FIGURES: [&str; 5] = ["fig4b", "fig4c", "fig6a", "fig6b", "fig7"];

/// Sweep behind one figure identifier.
pub fn figure_spec(id: &str, base: &RunConfig) -> Result<SweepSpec, SweepError> {
    let log_grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    };
    Ok(match id {
        "fig4b" => SweepSpec::new(
            Target::Led,
            vec![
                Axis::new("diode.C", [1e-15, 10e-15, 100e-15]),
                Axis::new("diode.eta_qe", [1e-3, 1e-2, 1e-1]),
                Axis::new("circuit.t_on", log_grid(100e-12, 1e-6, 25)),
            ],
        )
        .outputs(&["N_ph"]),
        "fig4c" => SweepSpec::new(
            Target::Led,
            vec![
                Axis::new("circuit.I_LED", (1..=10).map(|k| 2e-6 * k as f64)),
                Axis::new("diode.C", [1e-15, 3e-15, 10e-15, 30e-15, 100e-15]),
            ],
        )
        .fix("circuit.t_on", 10e-9)
        .fix("diode.eta_qe", 0.01)
        .outputs(&["N_ph"]),
        "fig6a" => SweepSpec::new(
            Target::HtronMatch,
            vec![Axis::new("target.t_above", [2e-9, 5e-9, 10e-9, 20e-9, 50e-9])],
        ),
        "fig6b" => SweepSpec::new(
            Target::Chain,
            vec![
                Axis::new("diode.C", [1e-15, 10e-15, 100e-15]),
                // τ_nT expressed through L_nT at the configured r_nT.
                Axis::new(
                    "ntron.L_nT",
                    [10e-9, 20e-9, 30e-9, 50e-9, 70e-9, 100e-9, 150e-9, 200e-9]
                        .map(|t| t * base.ntron.load_resistance),
                ),
            ],
        )
        .outputs(&["tau_nt", "t_on", "N_ph"]),
        "fig7" => SweepSpec::new(
            Target::Efficiency,
            vec![
                Axis::new("diode.C", [1e-15, 10e-15, 100e-15]),
                Axis::new("diode.eta_qe", [1e-3, 1e-2]),
                Axis::new("target.n_photons", [1e2, 3e2, 1e3, 3e3, 1e4]),
            ],
        ),
        _ => return Err(SweepError::NoSuchFigure(id.to_string())),
    })
}

/// Runs a figure sweep and labels its columns in plotting units.
pub fn figure_dataset(id: &str, base: &RunConfig, jobs: Option<usize>) -> Result<ResultTable, SweepError> {
    let mut t = run_sweep(&figure_spec(id, base)?, base, jobs)?;
    match id {
        "fig4b" => {
            t.relabel("C", "C_fF", -15);
            t.relabel("t_on", "t_on_ns", -9);
        }
        "fig4c" => {
            t.relabel("I_LED", "I_LED_uA", -6);
            t.relabel("C", "C_fF", -15);
        }
        "fig6a" => {
            t.relabel("t_above", "t_above_ns", -9);
            t.relabel("tau_nt", "tau_nT_ns", -9);
            t.relabel("square_duration", "square_duration_ns", -9);
        }
        "fig6b" => {
            t.relabel("C", "C_fF", -15);
            t.relabel("L_nT", "L_nT_nH", -9);
            t.relabel("tau_nt", "tau_nT_ns", -9);
            t.relabel("t_on", "t_on_ns", -9);
        }
        "fig7" => {
            t.relabel("C", "C_fF", -15);
            t.relabel("n_photons", "N_target", 0);
            t.relabel("t_on", "t_on_ns", -9);
            t.relabel("tau_nt", "tau_nT_ns", -9);
        }
        _ => {}
    }
    Ok(t)
}

/// Least-squares line `y = a + b·x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// Photons per µA for each capacitance of a fig4c table, fitted over the
/// points where the junction charges before the pulse ends
/// (`C·V_f < I_LED·t_on`).
pub fn fig4c_slopes(table: &ResultTable, t_on: f64, v_f: f64) -> Vec<(f64, f64)> {
    let (Some(ii), Some(ic), Some(in_)) = (
        table.column_index("I_LED_uA"),
        table.column_index("C_fF"),
        table.column_index("N_ph"),
    ) else {
        return Vec::new();
    };
    let mut caps: Vec<f64> = table.rows.iter().map(|r| r[ic]).collect();
    caps.sort_by(f64::total_cmp);
    caps.dedup();
    caps.into_iter()
        .filter_map(|c| {
            let (x, y): (Vec<f64>, Vec<f64>) = table
                .rows
                .iter()
                .filter(|r| r[ic] == c && r[in_].is_finite())
                .filter(|r| c * 1e-15 * v_f < r[ii] * 1e-6 * t_on)
                .map(|r| (r[ii], r[in_]))
                .unzip();
            linear_fit(&x, &y).map(|(_, b)| (c, b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delivery_spec() -> SweepSpec {
        SweepSpec::new(
            Target::Delivery,
            vec![
                Axis::new("target.n_photons", [1e3, 1e4]),
                Axis::new("chain.link_loss", [0.0, 3.0, 10.0]),
            ],
        )
    }

    #[test]
    fn rows_follow_lexicographic_order() {
        let t = run_sweep(&delivery_spec(), &RunConfig::default(), None).unwrap();
        assert_eq!(t.columns, ["n_photons", "link_loss", "lambda", "p_zero"]);
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.rows[1][..2], [1e3, 3.0]);
        assert_eq!(t.rows[3][..2], [1e4, 0.0]);
        assert!((t.rows[3][2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_paths_are_rejected() {
        let spec = SweepSpec::new(Target::Led, vec![Axis::new("diode.nope", [1.0])]);
        let err = run_sweep(&spec, &RunConfig::default(), None).unwrap_err();
        assert_eq!(err.to_string(), "unknown parameter diode.nope");
        let spec = delivery_spec().fix("chain.nope", 1.0);
        assert!(run_sweep(&spec, &RunConfig::default(), None).is_err());
        let spec = delivery_spec().outputs(&["N_ph"]);
        assert!(matches!(
            run_sweep(&spec, &RunConfig::default(), None).unwrap_err(),
            SweepError::UnknownOutput { .. }
        ));
        assert_eq!(figure_spec("fig9", &RunConfig::default()).unwrap_err().to_string(), "no such figure dataset");
    }

    #[test]
    fn failures_become_nan_rows() {
        let spec = SweepSpec::new(Target::Delivery, vec![Axis::new("chain.detector_efficiency", [0.5, 2.0])]);
        let t = run_sweep(&spec, &RunConfig::default(), None).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.errors[0].is_none());
        assert!(t.rows[1][1].is_nan());
        assert!(t.errors[1].as_deref().unwrap().contains("detector_efficiency"));
        let csv = t.to_csv_string();
        assert!(csv.starts_with("detector_efficiency,lambda,p_zero,error\n"));
        assert!(csv.contains("NaN"));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let base = RunConfig::default();
        let a = run_sweep(&delivery_spec(), &base, Some(1)).unwrap();
        let b = run_sweep(&delivery_spec(), &base, Some(3)).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.provenance.config_hash, base.hash());
    }

    #[test]
    fn line_fit() {
        let (a, b) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(1e-15), "1e-15");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(f64::NAN), "NaN");
    }
}
