//! LED drive circuit: a current-biased hTron channel (inductance in series with
//! a switchable resistance) feeding an LED modelled as a capacitor in parallel
//! with an ideal Shockley p-n junction.
//!
//! Circuit topology: the bias source `I_LED` feeds node A. From A the hTron
//! branch (inductance `L`, channel resistance `r_hc(t)`) goes to ground and the
//! series resistor `r1` leads to the LED node, where the capacitance `C` and
//! the junction sit in parallel to ground. With `I1` the hTron branch current
//! and `V2` the LED node voltage:
//!
//! ```text
//! dI1/dt = [V2 + r1·I_LED − (r1 + r_hc)·I1] / L
//! dV2/dt = [I_LED − I1 − I_pn(V2)] / C
//! ```

use crate::constants::{photon_energy, BOLTZMANN, ELEMENTARY_CHARGE};
use crate::ode::{integrate, IntegratorConfig, OdeError, TimeSeries};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponent clamp for `eV/kT`. Past it the junction current continues
/// linearly so the characteristic stays monotone and finite.
pub const EXPONENT_CLAMP: f64 = 60.0;

/// Longest on-duration `min_pulse_for_photons` will consider.
pub const MAX_PULSE_DURATION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiodeError {
    #[error("non-positive current has no forward voltage")]
    NonPositiveCurrent,
    #[error("no dissipation; efficiency undefined")]
    NoDissipation,
    #[error("efficiency must be positive")]
    NonPositiveEfficiency,
    #[error("target photon count unreachable within {max_duration:e} s")]
    Unreachable { max_duration: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Integration(#[from] OdeError),
}

/// Semiconductor junction constants. All quantities SI (densities in m⁻³).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    pub acceptor_density: f64,
    pub donor_density: f64,
    pub intrinsic_density: f64,
    /// Electron minority-carrier lifetime.
    pub tau_np: f64,
    /// Hole minority-carrier lifetime.
    pub tau_pn: f64,
    pub mu_pp: f64,
    pub mu_pn: f64,
    pub mu_nn: f64,
    pub mu_np: f64,
    /// Model temperature. Kept at room temperature even for 4.2 K operation.
    pub temperature: f64,
    pub area: f64,
    pub capacitance: f64,
    pub eta_qe: f64,
    pub eta_wg: f64,
    pub wavelength: f64,
}

impl Default for DiodeParams {
    fn default() -> Self {
        Self {
            acceptor_density: 5e19 * 1e6,
            donor_density: 5e19 * 1e6,
            intrinsic_density: 1.5e10 * 1e6,
            tau_np: 40e-9,
            tau_pn: 40e-9,
            mu_pp: 1e-2,
            mu_pn: 1e-2,
            mu_nn: 2.5e-2,
            mu_np: 2.5e-2,
            temperature: 300.0,
            // 5 µm long, 200 nm high junction.
            area: 5e-6 * 200e-9,
            capacitance: 10e-15,
            eta_qe: 0.01,
            eta_wg: 1.0,
            wavelength: 1.22e-6,
        }
    }
}

impl DiodeParams {
    pub fn validate(&self) -> Result<(), DiodeError> {
        let positive = [
            ("acceptor_density", self.acceptor_density),
            ("donor_density", self.donor_density),
            ("intrinsic_density", self.intrinsic_density),
            ("tau_np", self.tau_np),
            ("tau_pn", self.tau_pn),
            ("mu_pp", self.mu_pp),
            ("mu_pn", self.mu_pn),
            ("mu_nn", self.mu_nn),
            ("mu_np", self.mu_np),
            ("temperature", self.temperature),
            ("area", self.area),
            ("capacitance", self.capacitance),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DiodeError::InvalidParams(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("eta_qe", self.eta_qe), ("eta_wg", self.eta_wg)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(DiodeError::InvalidParams(format!("{name} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn thermal_voltage(&self) -> f64 {
        BOLTZMANN * self.temperature / ELEMENTARY_CHARGE
    }

    /// Hole density on the n side, `n_i²/N_d`.
    pub fn p_n(&self) -> f64 {
        self.intrinsic_density.powi(2) / self.donor_density
    }

    /// Electron density on the p side, `n_i²/N_a`.
    pub fn n_p(&self) -> f64 {
        self.intrinsic_density.powi(2) / self.acceptor_density
    }

    pub fn hole_diffusivity(&self) -> f64 {
        self.thermal_voltage() * self.mu_pn
    }

    pub fn electron_diffusivity(&self) -> f64 {
        self.thermal_voltage() * self.mu_np
    }

    pub fn hole_diffusion_length(&self) -> f64 {
        (self.hole_diffusivity() * self.tau_pn).sqrt()
    }

    pub fn electron_diffusion_length(&self) -> f64 {
        (self.electron_diffusivity() * self.tau_np).sqrt()
    }

    /// `e·A·[(D_p/L_p)·p_n + (D_n/L_n)·n_p]`
    pub fn saturation_current(&self) -> f64 {
        ELEMENTARY_CHARGE
            * self.area
            * (self.hole_diffusivity() / self.hole_diffusion_length() * self.p_n()
                + self.electron_diffusivity() / self.electron_diffusion_length() * self.n_p())
    }

    pub fn photon_energy(&self) -> f64 {
        photon_energy(self.wavelength)
    }

    /// Capacitor charging time to `V_f(I_LED)` at full bias current.
    pub fn charge_time(&self, i_led: f64) -> Result<f64, DiodeError> {
        Ok(self.capacitance * forward_voltage(self, i_led)? / i_led)
    }
}

/// Junction current at voltage `v`.
pub fn i_pn(params: &DiodeParams, v: f64) -> f64 {
    let is = params.saturation_current();
    let x = v / params.thermal_voltage();
    if x <= EXPONENT_CLAMP {
        is * x.exp_m1()
    } else {
        is * (EXPONENT_CLAMP.exp() * (1.0 + (x - EXPONENT_CLAMP)) - 1.0)
    }
}

/// `dI_pn/dV`.
fn di_pn(params: &DiodeParams, v: f64) -> f64 {
    let vt = params.thermal_voltage();
    let x = v / vt;
    params.saturation_current() / vt * x.min(EXPONENT_CLAMP).exp()
}

/// Voltage at which the junction carries `current`, by safeguarded Newton
/// iteration (bisection fallback) to a relative tolerance of 1e-12 on V.
pub fn forward_voltage(params: &DiodeParams, current: f64) -> Result<f64, DiodeError> {
    if !(current > 0.0) {
        return Err(DiodeError::NonPositiveCurrent);
    }
    let vt = params.thermal_voltage();
    let mut lo = 0.0;
    let mut hi = vt;
    while i_pn(params, hi) < current {
        lo = hi;
        hi *= 2.0;
    }
    let mut v = (vt * (current / params.saturation_current()).ln_1p()).clamp(lo, hi);
    for _ in 0..200 {
        let f = i_pn(params, v) - current;
        if f > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let step = f / di_pn(params, v);
        let mut next = v - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-12 * next.abs().max(vt) {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}

/// Circuit elements around the LED.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCircuitParams {
    /// hTron channel inductance.
    pub inductance: f64,
    /// Series resistance between the hTron node and the LED node.
    pub r1: f64,
    /// hTron channel resistance in the normal state.
    pub r_normal: f64,
    pub i_led: f64,
    /// The hTron branch is closed algebraically when `L/r_hc` is below this
    /// fraction of the segment length.
    pub quasi_static_threshold: f64,
}

impl Default for DriveCircuitParams {
    fn default() -> Self {
        Self {
            // 2000 squares at 180 pH per square.
            inductance: 360e-9,
            r1: 1.0,
            r_normal: 800e3,
            i_led: 10e-6,
            quasi_static_threshold: 0.01,
        }
    }
}

impl DriveCircuitParams {
    pub fn validate(&self) -> Result<(), DiodeError> {
        if !(self.inductance > 0.0) {
            return Err(DiodeError::InvalidParams("inductance must be positive".into()));
        }
        if !(self.r_normal > 0.0) {
            return Err(DiodeError::InvalidParams("r_normal must be positive".into()));
        }
        if !(self.r1 >= 0.0) {
            return Err(DiodeError::InvalidParams("r1 must be non-negative".into()));
        }
        if !(self.i_led >= 0.0) {
            return Err(DiodeError::InvalidParams("i_led must be non-negative".into()));
        }
        if !(self.quasi_static_threshold >= 0.0) {
            return Err(DiodeError::InvalidParams(
                "quasi_static_threshold must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Piecewise-constant channel resistance. Before the first switch time the
/// channel is superconducting (0 Ω).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResistanceSchedule {
    switches: Vec<(f64, f64)>,
}

impl ResistanceSchedule {
    pub fn superconducting() -> Self {
        Self::default()
    }

    pub fn constant(ohms: f64) -> Self {
        Self {
            switches: vec![(f64::NEG_INFINITY, ohms)],
        }
    }

    /// `ohms` on `[t_on, t_on + duration)`, zero elsewhere.
    pub fn square(t_on: f64, duration: f64, ohms: f64) -> Self {
        Self::from_switches(vec![(t_on, ohms), (t_on + duration, 0.0)])
    }

    /// Builds a schedule from `(time, resistance)` switch events.
    pub fn from_switches(mut switches: Vec<(f64, f64)>) -> Self {
        switches.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { switches }
    }

    pub fn resistance_at(&self, t: f64) -> f64 {
        let i = self.switches.partition_point(|&(ts, _)| ts <= t);
        if i == 0 {
            0.0
        } else {
            self.switches[i - 1].1
        }
    }

    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.switches.iter().map(|&(t, _)| t)
    }

    /// Splits `(t0, t1)` into sub-intervals of constant resistance.
    pub fn segments(&self, (t0, t1): (f64, f64)) -> Vec<(f64, f64, f64)> {
        let mut cuts: Vec<f64> = self
            .switch_times()
            .filter(|&t| t > t0 && t < t1)
            .collect();
        cuts.insert(0, t0);
        cuts.push(t1);
        cuts.dedup();
        cuts.windows(2)
            .map(|w| (w[0], w[1], self.resistance_at(w[0])))
            .collect()
    }
}

/// State layout of the LED transient series.
pub mod column {
    pub const I1: usize = 0;
    pub const V2: usize = 1;
    /// ∫I_pn dt
    pub const Q_PN: usize = 2;
    /// ∫I1 dt
    pub const Q_1: usize = 3;
    /// ∫I_LED·V_A dt
    pub const E_SUPPLIED: usize = 4;
    pub const E_R1: usize = 5;
    pub const E_RHC: usize = 6;
    pub const E_PN: usize = 7;
    pub const COUNT: usize = 8;
}

/// Result of [`simulate_led_drive`].
#[derive(Debug, Clone, PartialEq)]
pub struct LedTransient {
    /// Columns as in [`column`].
    pub series: TimeSeries,
    /// `I_pn(V2)` at every sample.
    pub pn_current: Vec<f64>,
    pub schedule: ResistanceSchedule,
    /// Intervals over which the hTron branch was closed algebraically.
    pub quasi_static_segments: Vec<(f64, f64)>,
    pub circuit: DriveCircuitParams,
    pub capacitance: f64,
}

impl LedTransient {
    pub fn times(&self) -> &[f64] {
        &self.series.times
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.series.states.iter().map(|s| s[index]).collect()
    }

    pub fn final_state(&self) -> &[f64] {
        self.series.last_state().expect("transient is never empty")
    }

    fn initial_state(&self) -> &[f64] {
        &self.series.states[0]
    }

    pub fn duration(&self) -> f64 {
        self.series.last_time().unwrap_or(0.0) - self.series.first_time().unwrap_or(0.0)
    }

    /// Charge injected through the junction, by trapezoid over the dense output.
    pub fn injected_charge(&self) -> f64 {
        let mut acc = 0.0;
        let t = self.times();
        for i in 1..t.len() {
            acc += 0.5 * (self.pn_current[i] + self.pn_current[i - 1]) * (t[i] - t[i - 1]);
        }
        acc
    }

    /// Energy accounting for the run (all values in joules).
    pub fn energy(&self) -> EnergyLedger {
        let end = self.final_state();
        let start = self.initial_state();
        let c = self.capacitance;
        let l = self.circuit.inductance;
        EnergyLedger {
            supplied: end[column::E_SUPPLIED],
            r1: end[column::E_R1],
            channel: end[column::E_RHC],
            junction: end[column::E_PN],
            capacitor_change: 0.5 * c * (end[column::V2].powi(2) - start[column::V2].powi(2)),
            inductor_change: 0.5 * l * (end[column::I1].powi(2) - start[column::I1].powi(2)),
            residual_capacitor: 0.5 * c * end[column::V2].powi(2),
        }
    }

    /// Charge budget `(∫I_LED dt, ∫I1 dt, ∫I_pn dt, C·ΔV2)`.
    pub fn charge_budget(&self) -> (f64, f64, f64, f64) {
        let end = self.final_state();
        let start = self.initial_state();
        (
            self.circuit.i_led * self.duration(),
            end[column::Q_1],
            end[column::Q_PN],
            self.capacitance * (end[column::V2] - start[column::V2]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub supplied: f64,
    pub r1: f64,
    pub channel: f64,
    pub junction: f64,
    pub capacitor_change: f64,
    pub inductor_change: f64,
    /// Energy left on the LED capacitance when the run ends. It is lost once
    /// the channel returns to the superconducting state.
    pub residual_capacitor: f64,
}

impl EnergyLedger {
    pub fn dissipated(&self) -> f64 {
        self.r1 + self.channel + self.junction
    }

    /// Energy charged to the firing event: everything dissipated during the
    /// run plus the charge stranded on the LED capacitance.
    pub fn event_energy(&self) -> f64 {
        self.dissipated() + self.residual_capacitor
    }
}

fn led_integrator() -> IntegratorConfig {
    use column::*;
    let mut atol = vec![0.0; COUNT];
    atol[I1] = 1e-13;
    atol[V2] = 1e-9;
    atol[Q_PN] = 1e-24;
    atol[Q_1] = 1e-24;
    atol[E_SUPPLIED] = 1e-25;
    atol[E_R1] = 1e-25;
    atol[E_RHC] = 1e-25;
    atol[E_PN] = 1e-25;
    IntegratorConfig::adaptive(1e-8, 0.0)
        .with_abs_tol(atol)
        .with_dense_samples(3)
}

/// Integrates the LED drive circuit over `t_span`, starting from the
/// superconducting steady state `I1 = I_LED`, `V2 = 0`.
pub fn simulate_led_drive(
    diode: &DiodeParams,
    circuit: &DriveCircuitParams,
    schedule: &ResistanceSchedule,
    t_span: (f64, f64),
) -> Result<LedTransient, DiodeError> {
    diode.validate()?;
    circuit.validate()?;
    let mut y0 = vec![0.0; column::COUNT];
    y0[column::I1] = circuit.i_led;
    simulate_from(diode, circuit, schedule, t_span, y0)
}

fn simulate_from(
    diode: &DiodeParams,
    circuit: &DriveCircuitParams,
    schedule: &ResistanceSchedule,
    t_span: (f64, f64),
    mut y: Vec<f64>,
) -> Result<LedTransient, DiodeError> {
    if !(t_span.1 > t_span.0) {
        return Err(DiodeError::InvalidParams("t_span end must exceed start".into()));
    }
    let cfg = led_integrator();
    let c = diode.capacitance;
    let l = circuit.inductance;
    let r1 = circuit.r1;
    let i_led = circuit.i_led;

    let mut series = TimeSeries::new();
    let mut quasi_static = Vec::new();

    for (a, b, r) in schedule.segments(t_span) {
        let closed = r > 0.0 && l / r < circuit.quasi_static_threshold * (b - a);
        let seg = if closed {
            // Entering the closure: the inductor current relaxes to its
            // algebraic value in ~L/r, dumping the energy difference in r_hc.
            let i1_new = (y[column::V2] + r1 * i_led) / (r1 + r);
            y[column::E_RHC] += 0.5 * l * (y[column::I1].powi(2) - i1_new.powi(2));
            y[column::I1] = i1_new;
            quasi_static.push((a, b));
            let sys = crate::ode::FnSystem::new(column::COUNT, |_t, s: &[f64], d: &mut [f64]| {
                let v2 = s[column::V2];
                let i1 = (v2 + r1 * i_led) / (r1 + r);
                led_rhs(diode, i_led, r1, r, c, l, i1, v2, d);
                d[column::I1] = 0.0;
            });
            let mut seg = integrate(&sys, &y, (a, b), &cfg)?;
            for s in &mut seg.states {
                s[column::I1] = (s[column::V2] + r1 * i_led) / (r1 + r);
            }
            seg
        } else {
            let sys = crate::ode::FnSystem::new(column::COUNT, |_t, s: &[f64], d: &mut [f64]| {
                led_rhs(diode, i_led, r1, r, c, l, s[column::I1], s[column::V2], d);
            });
            integrate(&sys, &y, (a, b), &cfg)?
        };
        y = seg.last_state().expect("segment is never empty").to_vec();
        series.append(seg);
    }

    let pn_current = series
        .states
        .iter()
        .map(|s| i_pn(diode, s[column::V2]))
        .collect();
    Ok(LedTransient {
        series,
        pn_current,
        schedule: schedule.clone(),
        quasi_static_segments: quasi_static,
        circuit: circuit.clone(),
        capacitance: c,
    })
}

#[allow(clippy::too_many_arguments)]
fn led_rhs(
    diode: &DiodeParams,
    i_led: f64,
    r1: f64,
    r_hc: f64,
    c: f64,
    l: f64,
    i1: f64,
    v2: f64,
    d: &mut [f64],
) {
    let ipn = i_pn(diode, v2);
    let i_r1 = i_led - i1;
    let v_a = r1 * i_r1 + v2;
    d[column::I1] = (v2 + r1 * i_led - (r1 + r_hc) * i1) / l;
    d[column::V2] = (i_r1 - ipn) / c;
    d[column::Q_PN] = ipn;
    d[column::Q_1] = i1;
    d[column::E_SUPPLIED] = i_led * v_a;
    d[column::E_R1] = r1 * i_r1 * i_r1;
    d[column::E_RHC] = r_hc * i1 * i1;
    d[column::E_PN] = v2 * ipn;
}

/// Photons produced during the transient: `(η_qe/e)·∫I_pn dt`.
pub fn photon_count(transient: &LedTransient, diode: &DiodeParams) -> f64 {
    diode.eta_qe / ELEMENTARY_CHARGE * transient.injected_charge()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RcEfficiency {
    /// `hν·N_e/E_RC` with `N_e` the number of carriers injected through the
    /// junction.
    pub eta_rc: f64,
    /// Same, with the `r1` dissipation excluded from the denominator.
    pub eta_rc_without_r1: f64,
    pub event_energy: f64,
    pub ledger: EnergyLedger,
}

/// Drive-circuit efficiency.
///
/// The numerator counts injected carriers rather than emitted photons, so the
/// radiative efficiency `η_qe` enters only once, through [`led_efficiency`].
/// With `hν ≈ e·V_f` this is the fraction of the event energy that goes
/// through the junction.
pub fn rc_efficiency(
    transient: &LedTransient,
    diode: &DiodeParams,
) -> Result<RcEfficiency, DiodeError> {
    let ledger = transient.energy();
    let e_rc = ledger.event_energy();
    if !(e_rc > 0.0) {
        return Err(DiodeError::NoDissipation);
    }
    let carriers = transient.injected_charge() / ELEMENTARY_CHARGE;
    let useful = diode.photon_energy() * carriers;
    Ok(RcEfficiency {
        eta_rc: useful / e_rc,
        eta_rc_without_r1: useful / (e_rc - ledger.r1),
        event_energy: e_rc,
        ledger,
    })
}

/// `1/η_LED = 1/η_RC + 1/η_qe + 1/η_wg`
pub fn led_efficiency(eta_rc: f64, eta_qe: f64, eta_wg: f64) -> Result<f64, DiodeError> {
    if !(eta_rc > 0.0 && eta_qe > 0.0 && eta_wg > 0.0) {
        return Err(DiodeError::NonPositiveEfficiency);
    }
    Ok(1.0 / (1.0 / eta_rc + 1.0 / eta_qe + 1.0 / eta_wg))
}

/// Summary of a square-pulse LED run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedPulseResult {
    pub on_duration: f64,
    pub photons: f64,
    pub eta_rc: f64,
    pub event_energy: f64,
    pub ledger: EnergyLedger,
    pub peak_voltage: f64,
}

/// Drives the channel normal for `on_duration` from `t = 0` and counts photons
/// over the resistive interval.
pub fn square_pulse_run(
    diode: &DiodeParams,
    circuit: &DriveCircuitParams,
    on_duration: f64,
) -> Result<(LedTransient, LedPulseResult), DiodeError> {
    let schedule = ResistanceSchedule::square(0.0, on_duration, circuit.r_normal);
    let tr = simulate_led_drive(diode, circuit, &schedule, (0.0, on_duration))?;
    let photons = photon_count(&tr, diode);
    let eff = rc_efficiency(&tr, diode)?;
    let peak_voltage = tr
        .series
        .states
        .iter()
        .map(|s| s[column::V2])
        .fold(f64::NEG_INFINITY, f64::max);
    let res = LedPulseResult {
        on_duration,
        photons,
        eta_rc: eff.eta_rc,
        event_energy: eff.event_energy,
        ledger: eff.ledger,
        peak_voltage,
    };
    Ok((tr, res))
}

fn photons_for(diode: &DiodeParams, circuit: &DriveCircuitParams, t_on: f64) -> Result<f64, DiodeError> {
    let schedule = ResistanceSchedule::square(0.0, t_on, circuit.r_normal);
    let tr = simulate_led_drive(diode, circuit, &schedule, (0.0, t_on))?;
    Ok(photon_count(&tr, diode))
}

/// Shortest square on-duration producing `n_target` photons (within 0.5 %).
pub fn min_pulse_for_photons(
    diode: &DiodeParams,
    circuit: &DriveCircuitParams,
    n_target: f64,
) -> Result<f64, DiodeError> {
    if !(n_target > 0.0) {
        return Err(DiodeError::InvalidParams("photon target must be positive".into()));
    }
    if !(circuit.i_led > 0.0) {
        return Err(DiodeError::Unreachable {
            max_duration: MAX_PULSE_DURATION,
        });
    }
    let mut lo = 0.0;
    let mut hi = diode.charge_time(circuit.i_led)?.min(MAX_PULSE_DURATION);
    loop {
        let n = photons_for(diode, circuit, hi)?;
        if n >= n_target {
            break;
        }
        if hi >= MAX_PULSE_DURATION {
            return Err(DiodeError::Unreachable {
                max_duration: MAX_PULSE_DURATION,
            });
        }
        lo = hi;
        hi = (hi * 2.0).min(MAX_PULSE_DURATION);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let n = photons_for(diode, circuit, mid)?;
        if (n - n_target).abs() <= 1e-3 * n_target || hi - lo <= 1e-16 {
            return Ok(mid);
        }
        if n < n_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn appendix() -> DiodeParams {
        DiodeParams::default()
    }

    /// Prefactor evaluated by hand from the listed constants:
    /// V_T = 25.852 mV, D_p = 2.5852e-4 m²/s, L_p = 3.2157e-6 m,
    /// D_n = 6.4630e-4 m²/s, L_n = 5.0845e-6 m, p_n = n_p = 4.5e6 m⁻³,
    /// A = 1e-12 m²  =>  I_s = e·A·(80.39 + 127.11)·4.5e6 = 1.496e-22 A.
    #[test]
    fn saturation_prefactor_matches_hand_evaluation() {
        let is = appendix().saturation_current();
        assert_relative_eq!(is, 1.496e-22, max_relative = 1e-3);
    }

    #[test]
    fn zero_bias_gives_zero_current() {
        assert_eq!(i_pn(&appendix(), 0.0), 0.0);
    }

    #[test]
    fn forward_voltage_at_ten_microamps_is_about_one_volt() {
        let v = forward_voltage(&appendix(), 10e-6).unwrap();
        assert!((v - 1.0).abs() < 0.05, "{v}");
        assert_relative_eq!(i_pn(&appendix(), v), 10e-6, max_relative = 1e-9);
    }

    #[test]
    fn forward_voltage_of_unit_exponent() {
        let d = appendix();
        let i = d.saturation_current() * (std::f64::consts::E - 1.0);
        let v = forward_voltage(&d, i).unwrap();
        assert_relative_eq!(v, d.thermal_voltage(), max_relative = 1e-9);
        assert!((v - 25.85e-3).abs() < 0.01e-3);
    }

    #[test]
    fn forward_voltage_round_trips() {
        let d = appendix();
        for i in [1e-9, 1e-6, 100e-6] {
            let v = forward_voltage(&d, i).unwrap();
            assert_relative_eq!(i_pn(&d, v), i, max_relative = 1e-9);
        }
    }

    #[test]
    fn forward_voltage_rejects_non_positive_current() {
        let err = forward_voltage(&appendix(), 0.0).unwrap_err();
        assert_eq!(err.to_string(), "non-positive current has no forward voltage");
        assert!(forward_voltage(&appendix(), -1e-6).is_err());
    }

    #[test]
    fn exponent_clamp_keeps_characteristic_monotone() {
        let d = appendix();
        let vc = EXPONENT_CLAMP * d.thermal_voltage();
        assert!(vc > 1.5);
        let below = i_pn(&d, vc - 1e-3);
        let at = i_pn(&d, vc);
        let above = i_pn(&d, vc + 1e-3);
        assert!(below < at && at < above && above.is_finite());
    }

    #[test]
    fn superconducting_channel_is_a_fixed_point() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let tr = simulate_led_drive(&d, &c, &ResistanceSchedule::superconducting(), (0.0, 5e-9))
            .unwrap();
        for s in &tr.series.states {
            assert_eq!(s[column::V2], 0.0);
            assert_eq!(s[column::I1], c.i_led);
        }
        assert_eq!(photon_count(&tr, &d), 0.0);
        assert_eq!(tr.energy().dissipated(), 0.0);
        assert_eq!(
            rc_efficiency(&tr, &d).unwrap_err().to_string(),
            "no dissipation; efficiency undefined"
        );
    }

    #[test]
    fn starts_from_superconducting_steady_state() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let tr = simulate_led_drive(
            &d,
            &c,
            &ResistanceSchedule::square(1e-9, 2e-9, c.r_normal),
            (0.0, 4e-9),
        )
        .unwrap();
        assert_eq!(tr.series.states[0][column::V2], 0.0);
        assert_eq!(tr.series.states[0][column::I1], c.i_led);
        assert_eq!(tr.quasi_static_segments.len(), 1);
        let (a, b) = tr.quasi_static_segments[0];
        assert_relative_eq!(a, 1e-9, max_relative = 1e-12);
        assert_relative_eq!(b, 3e-9, max_relative = 1e-12);
        for (s, ip) in tr.series.states.iter().zip(&tr.pn_current) {
            assert_eq!(*ip, i_pn(&d, s[column::V2]));
        }
    }

    #[test]
    fn zero_length_pulse_gives_no_photons() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let tr = simulate_led_drive(
            &d,
            &c,
            &ResistanceSchedule::square(1e-9, 0.0, c.r_normal),
            (0.0, 2e-9),
        )
        .unwrap();
        assert_eq!(photon_count(&tr, &d), 0.0);
    }

    #[test]
    fn long_pulse_matches_charge_budget() {
        // Charge-budget oracle: after the capacitor reaches V_f the junction
        // carries the bias minus the channel leakage V_f/(r1 + r_n).
        let d = DiodeParams {
            eta_qe: 0.01,
            ..appendix()
        };
        let c = DriveCircuitParams::default();
        let vf = forward_voltage(&d, c.i_led).unwrap();
        let i_junction = c.i_led - vf / (c.r1 + c.r_normal);
        let t_charge = d.capacitance * vf / i_junction;
        let t_on = 10.0 * t_charge;
        let (_, res) = square_pulse_run(&d, &c, t_on).unwrap();
        let oracle = d.eta_qe * i_junction * (t_on - t_charge) / ELEMENTARY_CHARGE;
        assert!((res.photons / oracle - 1.0).abs() < 0.10, "{} vs {}", res.photons, oracle);
    }

    #[test]
    fn conserves_charge_and_energy() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let schedule = ResistanceSchedule::square(0.5e-9, 3e-9, c.r_normal);
        let tr = simulate_led_drive(&d, &c, &schedule, (0.0, 4.5e-9)).unwrap();
        let (q_in, q1, qpn, qc) = tr.charge_budget();
        assert!(((q1 + qpn + qc) - q_in).abs() <= 0.005 * q_in);
        let e = tr.energy();
        let rhs = e.dissipated() + e.capacitor_change + e.inductor_change;
        assert!((e.supplied - rhs).abs() <= 0.01 * e.supplied.abs().max(e.dissipated()));
    }

    #[test]
    fn trapezoid_agrees_with_accumulated_charge() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let (tr, _) = square_pulse_run(&d, &c, 3e-9).unwrap();
        let acc = tr.final_state()[column::Q_PN];
        assert_relative_eq!(tr.injected_charge(), acc, max_relative = 1e-3);
    }

    #[test]
    fn voltage_stays_clamped_by_the_junction() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let vf = forward_voltage(&d, c.i_led).unwrap();
        let schedule = ResistanceSchedule::square(0.0, 8e-9, c.r_normal);
        let tr = simulate_led_drive(&d, &c, &schedule, (0.0, 12e-9)).unwrap();
        for s in &tr.series.states {
            assert!(s[column::V2] <= vf + 0.05);
        }
    }

    #[test]
    fn eta_qe_scales_photons_but_not_circuit_efficiency() {
        let c = DriveCircuitParams::default();
        let d1 = DiodeParams {
            eta_qe: 0.05,
            ..appendix()
        };
        let d2 = DiodeParams {
            eta_qe: 0.1,
            ..appendix()
        };
        let (_, a) = square_pulse_run(&d1, &c, 3e-9).unwrap();
        let (_, b) = square_pulse_run(&d2, &c, 3e-9).unwrap();
        assert_relative_eq!(b.photons, 2.0 * a.photons, max_relative = 1e-12);
        assert_relative_eq!(a.event_energy, b.event_energy, max_relative = 1e-12);
        assert_relative_eq!(a.eta_rc, b.eta_rc, max_relative = 1e-12);
    }

    #[test]
    fn led_efficiency_combination() {
        assert_relative_eq!(led_efficiency(1.0, 1.0, 1.0).unwrap(), 1.0 / 3.0);
        let v = led_efficiency(0.64, 0.1, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / (1.0 / 0.64 + 10.0 + 1.0), max_relative = 1e-12);
        assert!((v - 0.0796).abs() < 1e-4);
        assert_eq!(
            led_efficiency(0.0, 0.1, 1.0).unwrap_err().to_string(),
            "efficiency must be positive"
        );
        let base = led_efficiency(0.5, 0.1, 0.5).unwrap();
        assert!(led_efficiency(0.6, 0.1, 0.5).unwrap() > base);
        assert!(led_efficiency(0.5, 0.2, 0.5).unwrap() > base);
        assert!(led_efficiency(0.5, 0.1, 0.6).unwrap() > base);
    }

    #[test]
    fn small_targets_need_at_least_the_charging_time() {
        let d = appendix();
        let c = DriveCircuitParams::default();
        let t_charge = d.charge_time(c.i_led).unwrap();
        let t = min_pulse_for_photons(&d, &c, 0.5).unwrap();
        assert!(t > 0.8 * t_charge && t < 1.5 * t_charge, "{t} vs {t_charge}");
    }

    #[test]
    fn unreachable_targets_are_reported() {
        let d = appendix();
        let c = DriveCircuitParams {
            i_led: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            min_pulse_for_photons(&d, &c, 10.0),
            Err(DiodeError::Unreachable { .. })
        ));
    }
}
