//! Loop neuron: leaky synaptic integration loops feeding a neuronal
//! integration loop, with a threshold that is pulled up after each output
//! spike and relaxes back with the refractory time constant.
//!
//! Between input events every synaptic current decays exactly as
//! `I(t) = I(t₀)·e^{−(t−t₀)/τ}`, so the simulation is event-driven.

use crate::constants::FLUX_QUANTUM;
use crate::ode::TimeSeries;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Highest firing rate considered, Hz.
pub const MAX_FIRING_RATE: f64 = 20e6;

#[derive(Debug, Error)]
pub enum NeuronError {
    #[error("coupling/synapse arity mismatch")]
    ArityMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("spike times must be finite and strictly increasing")]
    UnsortedSpikes,
    #[error("spike train csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseConfig {
    /// Fluxons added to the loop per accepted photon detection.
    pub w: u32,
    /// Loop inductance, H.
    pub l_si: f64,
    /// Loop decay time, s.
    pub tau_si: f64,
    /// Coupling into the integration loop.
    pub c: f64,
    /// Detector dead time, s.
    pub dead_time: f64,
}

impl Default for SynapseConfig {
    fn default() -> Self {
        Self {
            w: 1,
            l_si: 10e-9,
            tau_si: 250e-9,
            c: 1.0,
            dead_time: 20e-9,
        }
    }
}

impl SynapseConfig {
    pub fn validate(&self) -> Result<(), NeuronError> {
        if !(self.l_si > 0.0 && self.tau_si > 0.0) {
            return Err(NeuronError::InvalidParams(
                "synapse inductance and time constant must be positive".into(),
            ));
        }
        if !(self.dead_time >= 0.0 && self.c.is_finite()) {
            return Err(NeuronError::InvalidParams(
                "synapse dead time must be non-negative and coupling finite".into(),
            ));
        }
        Ok(())
    }

    /// Current added by one fluxon, `Φ₀/L_si`.
    pub fn j0(&self) -> f64 {
        FLUX_QUANTUM / self.l_si
    }

    /// Jump per accepted input spike, `w·j₀`.
    pub fn jump(&self) -> f64 {
        self.w as f64 * self.j0()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronConfig {
    pub synapses: Vec<SynapseConfig>,
    /// A
    pub i_threshold: f64,
    /// Relaxation time of the diverted threshold bias, s.
    pub tau_ref: f64,
    /// Fraction of the threshold bias diverted by a spike.
    pub depth: f64,
    /// Hz
    pub max_rate: f64,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        Self {
            synapses: vec![SynapseConfig::default()],
            i_threshold: 1e-6,
            tau_ref: 50e-9,
            depth: 1.0,
            max_rate: MAX_FIRING_RATE,
        }
    }
}

impl NeuronConfig {
    pub fn validate(&self) -> Result<(), NeuronError> {
        for s in &self.synapses {
            s.validate()?;
        }
        if !(self.i_threshold > 0.0) {
            return Err(NeuronError::InvalidParams("threshold current must be positive".into()));
        }
        if !(self.tau_ref > 0.0 && self.depth >= 0.0) {
            return Err(NeuronError::InvalidParams(
                "refractory time must be positive and depth non-negative".into(),
            ));
        }
        if !(self.max_rate > 0.0 && self.max_rate <= MAX_FIRING_RATE) {
            return Err(NeuronError::InvalidParams(format!(
                "max_rate must lie in (0, {MAX_FIRING_RATE:e}] Hz"
            )));
        }
        Ok(())
    }

    /// Minimum spacing of output spikes.
    pub fn lockout(&self) -> f64 {
        1.0 / self.max_rate
    }

    /// Threshold at time `t` given the last output spike.
    pub fn effective_threshold(&self, t: f64, last_spike: Option<f64>) -> f64 {
        match last_spike {
            Some(ts) => self.i_threshold * (1.0 + self.depth * (-(t - ts) / self.tau_ref).exp()),
            None => self.i_threshold,
        }
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.synapses.iter().map(|s| s.c).collect()
    }
}

/// Sorted spike times, s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub times: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpikeRecord {
    t_seconds: f64,
}

impl SpikeTrain {
    pub fn new(times: Vec<f64>) -> Result<Self, NeuronError> {
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NeuronError::UnsortedSpikes);
        }
        Ok(Self { times })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Reads a one-column CSV with header `t_seconds`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, NeuronError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t_seconds"] {
            return Err(NeuronError::InvalidParams(
                "spike train csv must have the single header t_seconds".into(),
            ));
        }
        let times = rdr
            .deserialize::<SpikeRecord>()
            .map(|r| r.map(|r| r.t_seconds))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(times)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), NeuronError> {
        let mut w = csv::Writer::from_writer(writer);
        if self.times.is_empty() {
            w.write_record(["t_seconds"])?;
        }
        for &t in &self.times {
            w.serialize(SpikeRecord { t_seconds: t })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Drops spikes arriving within `dead_time` of the previously accepted one.
pub fn filter_dead_time(times: &[f64], dead_time: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for &t in times {
        if out.last().map_or(true, |&last| t - last >= dead_time) {
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseState {
    pub time: f64,
    pub current: f64,
    pub last_accepted: Option<f64>,
}

impl SynapseState {
    pub fn at_rest(time: f64) -> Self {
        Self {
            time,
            current: 0.0,
            last_accepted: None,
        }
    }
}

/// Advances a synaptic loop by `dt`, applying the spikes in `spikes` (which
/// must lie in `(time, time + dt]`, sorted) subject to the dead time.
pub fn synapse_update(state: SynapseState, config: &SynapseConfig, dt: f64, spikes: &[f64]) -> SynapseState {
    let end = state.time + dt;
    let mut s = state;
    for &t in spikes {
        if t <= state.time || t > end {
            continue;
        }
        if s.last_accepted.map_or(false, |last| t - last < config.dead_time) {
            continue;
        }
        s.current = s.current * (-(t - s.time) / config.tau_si).exp() + config.jump();
        s.time = t;
        s.last_accepted = Some(t);
    }
    s.current *= (-(end - s.time) / config.tau_si).exp();
    s.time = end;
    s
}

/// `Σ c_i·I_i`
pub fn ni_current(currents: &[f64], couplings: &[f64]) -> Result<f64, NeuronError> {
    if currents.len() != couplings.len() {
        return Err(NeuronError::ArityMismatch);
    }
    Ok(currents.iter().zip(couplings).map(|(i, c)| i * c).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronRun {
    pub output: SpikeTrain,
    /// At every input event and output spike: synapse currents, then the
    /// integration-loop current, then the effective threshold.
    pub state: TimeSeries,
    /// Input spikes that passed the dead-time filter, per synapse.
    pub accepted_inputs: Vec<Vec<f64>>,
}

struct Loop<'a> {
    cfg: &'a NeuronConfig,
    t: f64,
    currents: Vec<f64>,
    last_spike: Option<f64>,
}

impl Loop<'_> {
    fn currents_at(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        self.cfg
            .synapses
            .iter()
            .zip(&self.currents)
            .map(move |(s, &i)| i * (-(t - self.t) / s.tau_si).exp())
    }

    fn ni_at(&self, t: f64) -> f64 {
        self.cfg.synapses.iter().zip(self.currents_at(t)).map(|(s, i)| s.c * i).sum()
    }

    /// Positive when the neuron is above threshold.
    fn margin(&self, t: f64) -> f64 {
        self.ni_at(t) - self.cfg.effective_threshold(t, self.last_spike)
    }

    fn advance(&mut self, t: f64) {
        self.currents = self.currents_at(t).collect();
        self.t = t;
    }

    fn earliest_allowed(&self) -> f64 {
        self.last_spike.map_or(f64::NEG_INFINITY, |ts| ts + self.cfg.lockout())
    }

    /// First time in `[a, b)` at which the neuron fires, if any.
    fn next_spike(&self, a: f64, b: f64, step: f64) -> Option<f64> {
        let a = a.max(self.earliest_allowed());
        if a >= b {
            return None;
        }
        if self.margin(a) >= 0.0 {
            return Some(a);
        }
        let mut lo = a;
        while lo < b {
            let hi = (lo + step).min(b);
            if self.margin(hi) >= 0.0 {
                let (mut x0, mut x1) = (lo, hi);
                while x1 - x0 > 1e-16_f64.max(x1.abs() * 1e-15) {
                    let m = 0.5 * (x0 + x1);
                    if self.margin(m) >= 0.0 {
                        x1 = m;
                    } else {
                        x0 = m;
                    }
                }
                return (x1 < b).then_some(x1);
            }
            lo = hi;
        }
        None
    }

    fn record(&self, series: &mut TimeSeries) {
        let mut row = self.currents.clone();
        row.push(self.ni_at(self.t));
        row.push(self.cfg.effective_threshold(self.t, self.last_spike));
        // A spike exactly at an input event replaces that event's row.
        if series.last_time() == Some(self.t) {
            series.times.pop();
            series.states.pop();
        }
        series.push(self.t, row);
    }
}

/// Simulates the neuron over `t_span` with one input train per synapse.
pub fn run_neuron(
    config: &NeuronConfig,
    inputs: &[SpikeTrain],
    t_span: (f64, f64),
) -> Result<NeuronRun, NeuronError> {
    config.validate()?;
    if inputs.len() != config.synapses.len() {
        return Err(NeuronError::ArityMismatch);
    }
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(NeuronError::InvalidParams("t_span end must exceed start".into()));
    }
    let accepted: Vec<Vec<f64>> = inputs
        .iter()
        .zip(&config.synapses)
        .map(|(train, s)| {
            let window: Vec<f64> = train.times.iter().copied().filter(|&t| t >= t0 && t < t1).collect();
            filter_dead_time(&window, s.dead_time)
        })
        .collect();
    let mut events: Vec<(f64, usize)> = accepted
        .iter()
        .enumerate()
        .flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let step = config
        .synapses
        .iter()
        .map(|s| s.tau_si)
        .fold(config.tau_ref, f64::min)
        / 8.0;
    let mut lp = Loop {
        cfg: config,
        t: t0,
        currents: vec![0.0; config.synapses.len()],
        last_spike: None,
    };
    let mut series = TimeSeries::new();
    let mut output = Vec::new();
    lp.record(&mut series);

    let mut k = 0;
    loop {
        let next_event = events.get(k).map_or(t1, |e| e.0);
        // Look for threshold crossings before the next input event.
        while let Some(ts) = lp.next_spike(lp.t, next_event, step) {
            lp.advance(ts);
            lp.last_spike = Some(ts);
            output.push(ts);
            lp.record(&mut series);
        }
        if k >= events.len() {
            break;
        }
        lp.advance(next_event);
        while k < events.len() && events[k].0 == next_event {
            let i = events[k].1;
            lp.currents[i] += config.synapses[i].jump();
            k += 1;
        }
        lp.record(&mut series);
    }
    if lp.t < t1 {
        lp.advance(t1);
        lp.record(&mut series);
    }
    Ok(NeuronRun {
        output: SpikeTrain { times: output },
        state: series,
        accepted_inputs: accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_decay_over_one_time_constant() {
        let cfg = SynapseConfig::default();
        let s = SynapseState {
            time: 0.0,
            current: 1e-6,
            last_accepted: None,
        };
        let out = synapse_update(s, &cfg, cfg.tau_si, &[]);
        assert_relative_eq!(out.current, (-1.0f64).exp() * 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn single_fluxon_jump() {
        let cfg = SynapseConfig::default();
        assert_relative_eq!(cfg.j0(), 2.067833848e-15 / 10e-9, max_relative = 1e-12);
        assert!((cfg.j0() - 0.207e-6).abs() < 0.001e-6);
        let out = synapse_update(SynapseState::at_rest(0.0), &cfg, 1e-12, &[1e-12]);
        assert_relative_eq!(out.current, cfg.j0(), max_relative = 1e-12);
    }

    #[test]
    fn steady_state_under_regular_drive() {
        // Mean-field oracle: I_ss = w·j₀·r·τ for r·dead_time ≪ 1.
        let cfg = SynapseConfig {
            dead_time: 1e-9,
            ..Default::default()
        };
        let rate = 2e6;
        let n = 4000;
        let spikes: Vec<f64> = (1..=n).map(|k| k as f64 / rate).collect();
        let t_end = n as f64 / rate;
        // Average over the last few time constants.
        let mut s = synapse_update(SynapseState::at_rest(0.0), &cfg, t_end - 10.0 * cfg.tau_si, &spikes);
        let mut acc = 0.0;
        let samples = 10_000;
        let dt = 10.0 * cfg.tau_si / samples as f64;
        for _ in 0..samples {
            let t = s.time;
            let window: Vec<f64> = spikes.iter().copied().filter(|&x| x > t && x <= t + dt).collect();
            s = synapse_update(s, &cfg, dt, &window);
            acc += s.current;
        }
        let mean = acc / samples as f64;
        let oracle = cfg.jump() * rate * cfg.tau_si;
        assert!((mean / oracle - 1.0).abs() < 0.02, "{mean} vs {oracle}");
    }

    #[test]
    fn dead_time_keeps_earliest_spike() {
        assert_eq!(filter_dead_time(&[0.0, 5e-9, 19e-9, 20e-9, 30e-9, 45e-9], 20e-9), vec![0.0, 20e-9, 45e-9]);
        let cfg = SynapseConfig::default();
        let out = synapse_update(SynapseState::at_rest(0.0), &cfg, 30e-9, &[1e-9, 2e-9]);
        assert_eq!(out.last_accepted, Some(1e-9));
    }

    #[test]
    fn ni_current_is_a_weighted_sum() {
        assert_eq!(ni_current(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(ni_current(&[3e-6], &[1.0]).unwrap(), 3e-6);
        let a = ni_current(&[1.0, 2.0, -3.0], &[0.5, 0.25, 1.0]).unwrap();
        let b = ni_current(&[1.0, 2.0, -3.0], &[1.0, 0.5, 2.0]).unwrap();
        assert_relative_eq!(b, 2.0 * a);
        assert_eq!(
            ni_current(&[1.0], &[1.0, 2.0]).unwrap_err().to_string(),
            "coupling/synapse arity mismatch"
        );
    }

    #[test]
    fn silent_inputs_give_silent_output() {
        let cfg = NeuronConfig::default();
        let run = run_neuron(&cfg, &[SpikeTrain::default()], (0.0, 1e-6)).unwrap();
        assert!(run.output.is_empty());
        assert!(run.state.states.iter().all(|s| s[0] == 0.0 && s[1] == 0.0));
    }

    #[test]
    fn rejects_wrong_input_count() {
        let cfg = NeuronConfig::default();
        assert!(matches!(
            run_neuron(&cfg, &[], (0.0, 1e-6)),
            Err(NeuronError::ArityMismatch)
        ));
    }

    #[test]
    fn output_rate_is_capped() {
        let cfg = NeuronConfig {
            synapses: vec![SynapseConfig {
                w: 20,
                dead_time: 10e-9,
                ..Default::default()
            }],
            ..Default::default()
        };
        let input: Vec<f64> = (0..200).map(|k| k as f64 * 100e-9).collect();
        let run = run_neuron(&cfg, &[SpikeTrain::new(input).unwrap()], (0.0, 20e-6)).unwrap();
        assert!(!run.output.is_empty());
        for w in run.output.times.windows(2) {
            assert!(w[1] - w[0] >= cfg.lockout() * (1.0 - 1e-12));
        }
        // Loop currents are not reset on firing, so the integrated drive keeps
        // the neuron above threshold and the lockout sets the rate.
        let rate = run.output.len() as f64 / 20e-6;
        assert!(rate <= MAX_FIRING_RATE * (1.0 + 1e-9) && rate > 10e6, "{rate}");
        assert!(rate <= 1.0 / cfg.tau_ref * (1.0 + 1e-9));
    }

    #[test]
    fn spike_train_csv_round_trip() {
        let train = SpikeTrain::new(vec![1e-9, 2.5e-8, 3e-7]).unwrap();
        let mut buf = Vec::new();
        train.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_seconds\n"));
        assert_eq!(SpikeTrain::read_csv(&buf[..]).unwrap(), train);
        assert!(SpikeTrain::read_csv("time\n1\n".as_bytes()).is_err());
        assert!(SpikeTrain::read_csv("t_seconds\n2\n1\n".as_bytes()).is_err());
        let mut empty = Vec::new();
        SpikeTrain::default().write_csv(&mut empty).unwrap();
        assert_eq!(SpikeTrain::read_csv(&empty[..]).unwrap(), SpikeTrain::default());
    }
}
