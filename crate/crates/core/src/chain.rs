//! A complete firing event: Josephson threshold trigger, nTron current
//! diversion, hTron thermal switching and LED emission, with the energy
//! accounting of the whole amplifier chain and photon delivery statistics.

use crate::constants::{photon_energy, ELEMENTARY_CHARGE};
use crate::diode::{
    column as led, led_efficiency, photon_count, rc_efficiency, simulate_led_drive, DiodeError,
    DiodeParams, DriveCircuitParams, ResistanceSchedule,
};
use crate::drive::{
    gate_power, required_tau_for_ton, thermal_horizon, DriveError, NtronParams, PulseShape,
};
use crate::htron::{
    resistance_schedule, simulate_until_cooled, switch_time, time_above_tc, ChannelSpec,
    HtronError, ThermalStack,
};
use crate::ode::{find_crossing, Direction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("trigger insufficient to switch nTron")]
    TriggerInsufficient,
    #[error("efficiency must be positive")]
    NonPositiveEfficiency,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("photon grid is empty")]
    EmptyGrid,
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Diode(#[from] DiodeError),
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Thermal(#[from] HtronError),
}

fn stage<E: Into<StageError>>(stage: &'static str) -> impl FnOnce(E) -> ChainError {
    move |e| ChainError::Stage {
        stage,
        source: e.into(),
    }
}

/// Relaxation-oscillator stage that turns a threshold fluxon into the nTron
/// gate current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub jtl_junction_ic: f64,
    pub pre_ro_junction_ic: f64,
    pub ro_junction_ic: f64,
    pub ro_bias: f64,
    pub l1: f64,
    pub r1: f64,
    pub r2: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self {
            jtl_junction_ic: 250e-6,
            pre_ro_junction_ic: 280e-6,
            ro_junction_ic: 280e-6,
            ro_bias: 140e-6,
            l1: 200e-12,
            r1: 2.76,
            r2: 3.0,
        }
    }
}

/// Number of rise constants the oscillator output is held before it decays.
pub const RO_RISE_CONSTANTS: f64 = 5.0;

impl ThresholdParams {
    pub fn validate(&self) -> Result<(), ChainError> {
        let all = [
            self.jtl_junction_ic,
            self.pre_ro_junction_ic,
            self.ro_junction_ic,
            self.ro_bias,
            self.l1,
            self.r1,
            self.r2,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ChainError::InvalidParams("threshold parameters must be positive".into()));
        }
        if self.ro_bias >= self.ro_junction_ic {
            return Err(ChainError::InvalidParams(
                "relaxation oscillator bias must be below its junction critical current".into(),
            ));
        }
        Ok(())
    }

    /// `L1/(r1 + r2)`
    pub fn tau_rise(&self) -> f64 {
        self.l1 / (self.r1 + self.r2)
    }

    /// `L1/r2`
    pub fn tau_fall(&self) -> f64 {
        self.l1 / self.r2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdEvent {
    /// Current delivered to the nTron gate.
    pub pulse: PulseShape,
    /// When that current first reaches the nTron gate critical current.
    pub ntron_switch_time: f64,
}

/// Gate current emitted when the threshold junction fires at `trigger_time`.
pub fn threshold_event(
    params: &ThresholdParams,
    trigger_time: f64,
    gate_critical_current: f64,
) -> Result<ThresholdEvent, ChainError> {
    params.validate()?;
    if !(trigger_time >= 0.0) {
        return Err(ChainError::InvalidParams("trigger time must be non-negative".into()));
    }
    let pulse = PulseShape::Exponential {
        t_start: trigger_time,
        amplitude: params.ro_bias,
        tau_rise: params.tau_rise(),
        tau_fall: params.tau_fall(),
        drive_duration: RO_RISE_CONSTANTS * params.tau_rise(),
    };
    let t = pulse
        .time_to_reach(gate_critical_current)
        .ok_or(ChainError::TriggerInsufficient)?;
    Ok(ThresholdEvent {
        pulse,
        ntron_switch_time: t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub threshold: ThresholdParams,
    pub ntron: NtronParams,
    pub stack: ThermalStack,
    pub channel: ChannelSpec,
    pub diode: DiodeParams,
    pub circuit: DriveCircuitParams,
    /// Target photons per out-directed synapse.
    pub zeta: f64,
    pub k_out: u32,
    /// Replace the thermally computed channel state with a square normal
    /// interval of this length starting at the thermal switch time.
    pub square_channel_override: Option<f64>,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        self.threshold.validate()?;
        self.ntron.validate().map_err(stage("ntron"))?;
        self.stack.validate().map_err(stage("htron"))?;
        self.channel
            .validate(self.stack.t_bath)
            .map_err(stage("htron"))?;
        self.circuit.validate().map_err(stage("led"))?;
        let probe = DiodeParams {
            eta_qe: 1.0,
            ..self.diode.clone()
        };
        probe.validate().map_err(stage("led"))?;
        if !(0.0..=1.0).contains(&self.diode.eta_qe) {
            return Err(ChainError::InvalidParams("eta_qe must lie in [0, 1]".into()));
        }
        if !(self.zeta >= 1.0) {
            return Err(ChainError::InvalidParams("zeta must be at least 1".into()));
        }
        if self.k_out < 1 {
            return Err(ChainError::InvalidParams("k_out must be at least 1".into()));
        }
        Ok(())
    }

    /// Minimum spacing between accepted triggers.
    pub fn lockout(&self) -> f64 {
        self.ntron.recovery_time
    }

    /// Photons the event should produce: `ζ·k_out`.
    pub fn photon_target(&self) -> f64 {
        self.zeta * self.k_out as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub trigger_to_ntron: f64,
    pub ntron_to_switch: f64,
    pub switch_to_first_photon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringEventResult {
    pub n_ph: f64,
    /// Time the channel spent normal.
    pub t_on: f64,
    /// `hν·N/η_LED`
    pub e_led: f64,
    /// Full gate Joule energy of the nTron pulse.
    pub e_gate: f64,
    pub e_total: f64,
    /// Energy actually dissipated in the LED drive circuit.
    pub e_rc: f64,
    pub eta_rc: f64,
    pub eta_led: f64,
    pub eta_ht: f64,
    pub eta_amp: f64,
    /// `None` if no photon was produced.
    pub timings: Option<Timings>,
    pub tau_nt: f64,
    pub warnings: Vec<String>,
}

/// Runs one firing event triggered at `t = 0`.
pub fn fire(config: &ChainConfig) -> Result<FiringEventResult, ChainError> {
    config.validate()?;
    let trig = threshold_event(&config.threshold, 0.0, config.ntron.gate_critical_current)?;
    let t_ntron = trig.ntron_switch_time;
    let pulse = config.ntron.pulse(t_ntron);
    let heat = gate_power(pulse, config.ntron.load_resistance).map_err(stage("ntron"))?;
    let e_gate = heat.energy();
    let thermal = simulate_until_cooled(&config.stack, &config.channel, &heat, thermal_horizon(&pulse))
        .map_err(stage("htron"))?;
    let mut t_on = time_above_tc(&thermal, &config.channel).map_err(stage("htron"))?;
    let t_switch = switch_time(&thermal, &config.channel).map_err(stage("htron"))?;
    let mut warnings = Vec::new();

    let h_nu = config.diode.photon_energy();
    let empty = |warnings: Vec<String>, t_on: f64| FiringEventResult {
        n_ph: 0.0,
        t_on,
        e_led: 0.0,
        e_gate,
        e_total: e_gate,
        e_rc: 0.0,
        eta_rc: 0.0,
        eta_led: 0.0,
        eta_ht: 0.0,
        eta_amp: 0.0,
        timings: None,
        tau_nt: config.ntron.tau(),
        warnings,
    };
    let Some(t_switch) = t_switch else {
        warnings.push("hTron channel never switched; no photons produced".into());
        return Ok(empty(warnings, 0.0));
    };

    let schedule = match config.square_channel_override {
        Some(d) => {
            t_on = d;
            ResistanceSchedule::square(t_switch, d, config.channel.r_normal())
        }
        None => resistance_schedule(&thermal, &config.channel).map_err(stage("htron"))?,
    };
    let t_end = schedule
        .switch_times()
        .fold(t_switch, f64::max)
        .max(t_switch + t_on);
    if !(t_end > t_switch) {
        warnings.push("hTron channel normal for zero time; no photons produced".into());
        return Ok(empty(warnings, 0.0));
    }
    let eta_qe = config.diode.eta_qe;
    // The circuit transient does not depend on the radiative efficiency.
    let diode = DiodeParams {
        eta_qe: 1.0,
        ..config.diode.clone()
    };
    let circuit = DriveCircuitParams {
        r_normal: config.channel.r_normal(),
        ..config.circuit.clone()
    };
    let transient = simulate_led_drive(&diode, &circuit, &schedule, (t_switch, t_end))
        .map_err(stage("led"))?;
    let carriers = photon_count(&transient, &diode);
    let n_ph = eta_qe * carriers;
    let rc = rc_efficiency(&transient, &diode).map_err(stage("led"))?;

    let first_photon = if eta_qe > 0.0 {
        find_crossing(
            &transient.series,
            led::Q_PN,
            ELEMENTARY_CHARGE / eta_qe,
            Direction::Rising,
        )
        .map_err(|e| stage::<DiodeError>("led")(e.into()))?
    } else {
        None
    };
    let timings = first_photon.map(|t| Timings {
        trigger_to_ntron: t_ntron,
        ntron_to_switch: t_switch - t_ntron,
        switch_to_first_photon: t - t_switch,
    });

    if eta_qe == 0.0 {
        warnings.push("eta_qe = 0: no photons are emitted and all efficiencies are zero".into());
        let mut r = empty(warnings, t_on);
        r.e_rc = rc.event_energy;
        r.eta_rc = rc.eta_rc;
        r.e_total = e_gate;
        return Ok(r);
    }

    let eta_led = led_efficiency(rc.eta_rc, eta_qe, config.diode.eta_wg).map_err(stage("led"))?;
    let e_led = h_nu * n_ph / eta_led;
    let eta_ht = h_nu * n_ph / e_gate;
    let eta_amp = 1.0 / (1.0 / eta_led + 1.0 / eta_ht);
    Ok(FiringEventResult {
        n_ph,
        t_on,
        e_led,
        e_gate,
        e_total: e_led + e_gate,
        e_rc: rc.event_energy,
        eta_rc: rc.eta_rc,
        eta_led,
        eta_ht,
        eta_amp,
        timings,
        tau_nt: config.ntron.tau(),
        warnings,
    })
}

/// Triggers that survive the nTron recovery lockout (earliest wins).
pub fn accepted_triggers(times: &[f64], lockout: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &t in times {
        if out.last().map_or(true, |&last| t - last >= lockout) {
            out.push(t);
        }
    }
    out
}

/// `E_amp = ζ·hν·N/η_amp`
pub fn amplifier_energy(n_ph: f64, zeta: f64, eta_amp: f64, wavelength: f64) -> Result<f64, ChainError> {
    if !(eta_amp > 0.0) {
        return Err(ChainError::NonPositiveEfficiency);
    }
    Ok(zeta * photon_energy(wavelength) * n_ph / eta_amp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delivery {
    /// Mean photons detected per synapse.
    pub lambda: f64,
    /// Probability that a synapse detects nothing.
    pub p_zero: f64,
}

/// Poisson delivery statistics for one synapse.
pub fn delivery_reliability(
    n_ph: f64,
    k_out: u32,
    link_loss_db: f64,
    detector_efficiency: f64,
) -> Result<Delivery, ChainError> {
    if k_out < 1 {
        return Err(ChainError::InvalidParams("k_out must be at least 1".into()));
    }
    if !(link_loss_db >= 0.0) {
        return Err(ChainError::InvalidParams("link loss must be non-negative".into()));
    }
    if !(detector_efficiency > 0.0 && detector_efficiency <= 1.0) {
        return Err(ChainError::InvalidParams("detector efficiency must lie in (0, 1]".into()));
    }
    if !(n_ph >= 0.0) {
        return Err(ChainError::InvalidParams("photon count must be non-negative".into()));
    }
    let lambda = n_ph / k_out as f64 * 10f64.powf(-link_loss_db / 10.0) * detector_efficiency;
    Ok(Delivery {
        lambda,
        p_zero: (-lambda).exp(),
    })
}

/// Fraction of `trials` synapses receiving no photon, sampled from the
/// Poisson distribution with mean `lambda`.
pub fn sample_zero_fraction(lambda: f64, trials: usize, seed: u64) -> Result<f64, ChainError> {
    if trials == 0 {
        return Err(ChainError::InvalidParams("trials must be positive".into()));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let dist = Poisson::new(lambda).map_err(|e| ChainError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = (0..trials).filter(|_| dist.sample(&mut rng) == 0.0).count();
    Ok(zeros as f64 / trials as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub n_target: f64,
    /// Square on-time giving `n_target`.
    pub t_on: f64,
    pub tau_nt: f64,
    pub n_ph: f64,
    pub eta_led: f64,
    pub eta_ht: f64,
    pub eta_amp: f64,
    /// `ζ·hν·N/η_amp`
    pub e_amp: f64,
    /// `hν·N/η_amp`, reading `N` as already including the redundancy `ζ`.
    pub e_amp_event: f64,
}

/// Sizes and fires the chain for each photon target.
pub fn efficiency_report(config: &ChainConfig, grid: &[f64]) -> Result<Vec<EfficiencyRow>, ChainError> {
    if grid.is_empty() {
        return Err(ChainError::EmptyGrid);
    }
    grid.iter().map(|&n| efficiency_point(config, n)).collect()
}

/// One row of [`efficiency_report`].
pub fn efficiency_point(config: &ChainConfig, n_target: f64) -> Result<EfficiencyRow, ChainError> {
    config.validate()?;
    let circuit = DriveCircuitParams {
        r_normal: config.channel.r_normal(),
        ..config.circuit.clone()
    };
    let t_on = crate::diode::min_pulse_for_photons(&config.diode, &circuit, n_target)
        .map_err(stage("led"))?;
    let tau = required_tau_for_ton(&config.stack, &config.channel, &config.ntron, t_on)
        .map_err(stage("ntron"))?;
    let cfg = ChainConfig {
        ntron: config.ntron.clone().with_tau(tau),
        ..config.clone()
    };
    let r = fire(&cfg)?;
    let h_nu = config.diode.photon_energy();
    let (e_amp, e_amp_event) = if r.eta_amp > 0.0 {
        (
            config.zeta * h_nu * r.n_ph / r.eta_amp,
            h_nu * r.n_ph / r.eta_amp,
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(EfficiencyRow {
        n_target,
        t_on,
        tau_nt: tau,
        n_ph: r.n_ph,
        eta_led: r.eta_led,
        eta_ht: r.eta_ht,
        eta_amp: r.eta_amp,
        e_amp,
        e_amp_event,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn threshold_pulse_shape() {
        let p = ThresholdParams::default();
        assert_relative_eq!(p.tau_rise(), 200e-12 / 5.76, max_relative = 1e-12);
        assert!((p.tau_rise() - 34.7e-12).abs() < 0.05e-12);
        let ev = threshold_event(&p, 0.0, 100e-6).unwrap();
        assert_eq!(ev.pulse.amplitude(), 140e-6);
        // −τ·ln(1 − 100/140)
        let expected = -p.tau_rise() * (1.0 - 100.0 / 140.0f64).ln();
        assert_relative_eq!(ev.ntron_switch_time, expected, max_relative = 1e-9);
    }

    #[test]
    fn weak_trigger_is_reported() {
        let err = threshold_event(&ThresholdParams::default(), 0.0, 200e-6).unwrap_err();
        assert_eq!(err.to_string(), "trigger insufficient to switch nTron");
    }

    #[test]
    fn amplifier_energy_literal() {
        let e = amplifier_energy(1e4, 10.0, 1e-4, 1.22e-6).unwrap();
        assert_relative_eq!(e, 1.63e-10, max_relative = 0.01);
        assert_relative_eq!(amplifier_energy(1.0, 1.0, 1.0, 1.22e-6).unwrap(), photon_energy(1.22e-6));
        assert_relative_eq!(
            amplifier_energy(10.0, 20.0, 0.1, 1.22e-6).unwrap(),
            2.0 * amplifier_energy(10.0, 10.0, 0.1, 1.22e-6).unwrap()
        );
        assert_eq!(
            amplifier_energy(1.0, 1.0, 0.0, 1.22e-6).unwrap_err().to_string(),
            "efficiency must be positive"
        );
    }

    #[test]
    fn poisson_delivery() {
        let d = delivery_reliability(5.0, 1, 0.0, 1.0).unwrap();
        assert!((d.p_zero - (-5.0f64).exp()).abs() < 1e-12);
        assert!(d.p_zero < 0.01);
        assert_eq!(delivery_reliability(0.0, 3, 0.0, 1.0).unwrap().p_zero, 1.0);
        let d = delivery_reliability(10.0 * 1000.0, 1000, 3.0, 1.0).unwrap();
        assert!((d.lambda - 5.01).abs() < 0.01);
    }

    #[test]
    fn sampled_zero_fraction_tracks_poisson() {
        let f = sample_zero_fraction(1.0, 200_000, 7).unwrap();
        assert!((f - (-1.0f64).exp()).abs() < 0.005);
        assert_eq!(f, sample_zero_fraction(1.0, 200_000, 7).unwrap());
        assert_eq!(sample_zero_fraction(0.0, 10, 1).unwrap(), 1.0);
    }

    #[test]
    fn lockout_keeps_earliest() {
        let t = accepted_triggers(&[0.0, 10e-9, 49e-9, 50e-9, 120e-9, 130e-9], 50e-9);
        assert_eq!(t, vec![0.0, 50e-9, 120e-9]);
    }
}
