//! hTron gate drive: square and nTron-style exponential current pulses, the
//! Joule power they dissipate in the gate, nTron time-constant sizing and
//! meander inductor geometry.

use crate::htron::{
    simulate_until_cooled, switch_time, time_above_tc, ChannelSpec, HeatSource, HtronError,
    ThermalStack,
};
use crate::ode::TimeSeries;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriveError {
    #[error("insufficient drive amplitude")]
    InsufficientDrive,
    #[error("target {target:e} s is shorter than the shortest achievable time above T_c ({min:e} s)")]
    TargetTooShort { target: f64, min: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Thermal(#[from] HtronError),
}

/// Gate current waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    Square {
        t_start: f64,
        duration: f64,
        amplitude: f64,
    },
    /// Rises as `A·(1 − e^{−(t−t₀)/τ_rise})` for `drive_duration`, then decays
    /// with `τ_fall` from the value reached.
    Exponential {
        t_start: f64,
        amplitude: f64,
        tau_rise: f64,
        tau_fall: f64,
        drive_duration: f64,
    },
}

impl PulseShape {
    pub fn validate(&self) -> Result<(), DriveError> {
        let bad = |m: &str| Err(DriveError::InvalidParams(m.to_string()));
        match *self {
            PulseShape::Square {
                duration, amplitude, ..
            } => {
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be non-negative");
                }
                if !(duration >= 0.0) {
                    return bad("duration must be non-negative");
                }
            }
            PulseShape::Exponential {
                amplitude,
                tau_rise,
                tau_fall,
                drive_duration,
                ..
            } => {
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be non-negative");
                }
                if !(tau_rise > 0.0 && tau_fall > 0.0) {
                    return bad("time constants must be positive");
                }
                if !(drive_duration >= 0.0) {
                    return bad("drive duration must be non-negative");
                }
            }
        }
        Ok(())
    }

    pub fn t_start(&self) -> f64 {
        match *self {
            PulseShape::Square { t_start, .. } | PulseShape::Exponential { t_start, .. } => t_start,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            PulseShape::Square { amplitude, .. } | PulseShape::Exponential { amplitude, .. } => {
                amplitude
            }
        }
    }

    /// End of the driven phase: the square's trailing edge or the start of
    /// the exponential decay.
    pub fn drive_end(&self) -> f64 {
        match *self {
            PulseShape::Square {
                t_start, duration, ..
            } => t_start + duration,
            PulseShape::Exponential {
                t_start,
                drive_duration,
                ..
            } => t_start + drive_duration,
        }
    }

    /// Current at the end of the driven phase.
    pub fn peak(&self) -> f64 {
        match *self {
            PulseShape::Square { amplitude, .. } => amplitude,
            PulseShape::Exponential {
                amplitude,
                tau_rise,
                drive_duration,
                ..
            } => -amplitude * (-drive_duration / tau_rise).exp_m1(),
        }
    }

    /// A
    pub fn current(&self, t: f64) -> f64 {
        match *self {
            PulseShape::Square {
                t_start,
                duration,
                amplitude,
            } => {
                if t >= t_start && t < t_start + duration {
                    amplitude
                } else {
                    0.0
                }
            }
            PulseShape::Exponential {
                t_start,
                amplitude,
                tau_rise,
                tau_fall,
                drive_duration,
            } => {
                let s = t - t_start;
                if s < 0.0 {
                    0.0
                } else if s < drive_duration {
                    -amplitude * (-s / tau_rise).exp_m1()
                } else {
                    self.peak() * (-(s - drive_duration) / tau_fall).exp()
                }
            }
        }
    }

    /// First time the current reaches `level`, if it ever does.
    pub fn time_to_reach(&self, level: f64) -> Option<f64> {
        if level <= 0.0 {
            return Some(self.t_start());
        }
        match *self {
            PulseShape::Square {
                t_start,
                duration,
                amplitude,
            } => (amplitude >= level && duration > 0.0).then_some(t_start),
            PulseShape::Exponential {
                t_start,
                amplitude,
                tau_rise,
                ..
            } => {
                if self.peak() < level {
                    return None;
                }
                Some(t_start - tau_rise * (-level / amplitude).ln_1p())
            }
        }
    }

    /// `∫ I² dt` over all time, A²·s.
    pub fn current_squared_integral(&self) -> f64 {
        match *self {
            PulseShape::Square {
                duration, amplitude, ..
            } => amplitude * amplitude * duration,
            PulseShape::Exponential {
                amplitude,
                tau_rise,
                tau_fall,
                drive_duration,
                ..
            } => {
                let d = drive_duration;
                let rise = d + 2.0 * tau_rise * (-d / tau_rise).exp_m1()
                    - 0.5 * tau_rise * (-2.0 * d / tau_rise).exp_m1();
                let p = self.peak();
                amplitude * amplitude * rise + p * p * tau_fall / 2.0
            }
        }
    }

    /// Gate Joule energy `r·∫I² dt`, J.
    pub fn energy(&self, r_gate: f64) -> f64 {
        r_gate * self.current_squared_integral()
    }
}

/// Joule heating `Q(t) = I(t)²·r` of a gate pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatePower {
    pub pulse: PulseShape,
    pub r_gate: f64,
}

/// Joule power of `pulse` in a gate resistor `r_gate`.
pub fn gate_power(pulse: PulseShape, r_gate: f64) -> Result<GatePower, DriveError> {
    pulse.validate()?;
    if !(r_gate > 0.0) {
        return Err(DriveError::InvalidParams("gate resistance must be positive".into()));
    }
    Ok(GatePower { pulse, r_gate })
}

impl GatePower {
    pub fn energy(&self) -> f64 {
        self.pulse.energy(self.r_gate)
    }
}

impl HeatSource for GatePower {
    fn power(&self, t: f64) -> f64 {
        let i = self.pulse.current(t);
        i * i * self.r_gate
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.pulse.t_start(), self.pulse.drive_end()]
    }
}

/// nTron driving the hTron gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtronParams {
    /// Channel bias diverted into the hTron gate when the nTron switches, A.
    pub channel_current: f64,
    /// Gate current that switches the nTron, A.
    pub gate_critical_current: f64,
    /// hTron gate resistance `r_nT`, Ω.
    pub load_resistance: f64,
    /// `L_nT`, H. Sets the fall time `τ_nT = L_nT/r_nT`.
    pub channel_inductance: f64,
    /// s
    pub recovery_time: f64,
    /// Rise time of the diverted current, s.
    pub rise_time: f64,
    /// How long the nTron is held switched before the current decays, s.
    pub drive_plateau: f64,
}

impl Default for NtronParams {
    fn default() -> Self {
        Self {
            channel_current: 1.2e-3,
            gate_critical_current: 100e-6,
            load_resistance: 10.0,
            channel_inductance: 500e-9,
            recovery_time: 50e-9,
            rise_time: 300e-12,
            drive_plateau: 1e-9,
        }
    }
}

impl NtronParams {
    pub fn validate(&self) -> Result<(), DriveError> {
        let positive = [
            ("channel_current", self.channel_current),
            ("gate_critical_current", self.gate_critical_current),
            ("load_resistance", self.load_resistance),
            ("channel_inductance", self.channel_inductance),
            ("rise_time", self.rise_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DriveError::InvalidParams(format!("ntron {name} must be positive")));
            }
        }
        if !(self.recovery_time >= 0.0 && self.drive_plateau >= 0.0) {
            return Err(DriveError::InvalidParams(
                "ntron recovery time and plateau must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `τ_nT = L_nT/r_nT`
    pub fn tau(&self) -> f64 {
        self.channel_inductance / self.load_resistance
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.channel_inductance = tau * self.load_resistance;
        self
    }

    /// Current diverted into the hTron gate when the nTron switches at
    /// `t_start`.
    pub fn pulse(&self, t_start: f64) -> PulseShape {
        PulseShape::Exponential {
            t_start,
            amplitude: self.channel_current,
            tau_rise: self.rise_time,
            tau_fall: self.tau(),
            drive_duration: self.drive_plateau,
        }
    }
}

/// Upper limit for the run length of a thermal simulation driven by `pulse`.
pub fn thermal_horizon(pulse: &PulseShape) -> f64 {
    match *pulse {
        PulseShape::Square { .. } => pulse.drive_end() + 200e-9,
        PulseShape::Exponential { tau_fall, .. } => pulse.drive_end() + 20.0 * tau_fall + 200e-9,
    }
}

/// Thermal response of the stack to a gate pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingRun {
    pub series: TimeSeries,
    pub time_above_tc: f64,
    pub switch_time: Option<f64>,
    pub gate_energy: f64,
}

/// Heats the stack with the Joule power of `pulse` until the channel has
/// cooled back below `T_c`.
pub fn drive_thermal(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    pulse: PulseShape,
    r_gate: f64,
) -> Result<SwitchingRun, DriveError> {
    let q = gate_power(pulse, r_gate)?;
    let series = simulate_until_cooled(stack, channel, &q, thermal_horizon(&pulse))?;
    let t_above = time_above_tc(&series, channel)?;
    let switch = switch_time(&series, channel)?;
    Ok(SwitchingRun {
        series,
        time_above_tc: t_above,
        switch_time: switch,
        gate_energy: q.energy(),
    })
}

fn t_above_for_tau(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    ntron: &NtronParams,
    tau: f64,
) -> Result<f64, DriveError> {
    let n = ntron.clone().with_tau(tau);
    Ok(drive_thermal(stack, channel, n.pulse(0.0), n.load_resistance)?.time_above_tc)
}

/// Smallest and largest nTron time constants considered when sizing.
pub const TAU_SEARCH_RANGE: (f64, f64) = (10e-12, 10e-6);

/// Generic monotone bisection (in log space) of `f(x) = target` over
/// `[lo, hi]`, stopping once within `rel` of the target.
fn solve_monotone<F>(mut f: F, (mut lo, mut hi): (f64, f64), target: f64, rel: f64) -> Result<f64, DriveError>
where
    F: FnMut(f64) -> Result<f64, DriveError>,
{
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        let v = f(mid)?;
        if (v - target).abs() <= rel * target {
            return Ok(mid);
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-9 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// nTron time constant at which the exponential gate pulse holds the channel
/// above `T_c` for `t_target`.
pub fn required_tau_for_ton(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    ntron: &NtronParams,
    t_target: f64,
) -> Result<f64, DriveError> {
    ntron.validate()?;
    if !(t_target > 0.0) {
        return Err(DriveError::InvalidParams("target time must be positive".into()));
    }
    let (lo, hi) = TAU_SEARCH_RANGE;
    let t_hi = t_above_for_tau(stack, channel, ntron, hi)?;
    if t_hi < t_target {
        return Err(DriveError::InsufficientDrive);
    }
    let t_lo = t_above_for_tau(stack, channel, ntron, lo)?;
    if t_lo > t_target {
        return Err(DriveError::TargetTooShort {
            target: t_target,
            min: t_lo,
        });
    }
    solve_monotone(
        |tau| t_above_for_tau(stack, channel, ntron, tau),
        (lo, hi),
        t_target,
        2e-3,
    )
}

/// Square-pulse duration at `amplitude` giving `t_target` above `T_c`.
pub fn square_duration_for_ton(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    amplitude: f64,
    r_gate: f64,
    t_target: f64,
) -> Result<f64, DriveError> {
    if !(t_target > 0.0) {
        return Err(DriveError::InvalidParams("target time must be positive".into()));
    }
    let run = |d: f64| -> Result<f64, DriveError> {
        let p = PulseShape::Square {
            t_start: 0.0,
            duration: d,
            amplitude,
        };
        Ok(drive_thermal(stack, channel, p, r_gate)?.time_above_tc)
    };
    let hi = 10e-6;
    if run(hi)? < t_target {
        return Err(DriveError::InsufficientDrive);
    }
    solve_monotone(run, (1e-12, hi), t_target, 2e-3)
}

/// Meander realisation of an inductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanderGeometry {
    /// H per square
    pub sheet_inductance: f64,
    /// m
    pub wire_width: f64,
    pub squares: u64,
    /// m²
    pub area: f64,
}

impl MeanderGeometry {
    pub fn inductance(&self) -> f64 {
        self.squares as f64 * self.sheet_inductance
    }
}

/// Squares and footprint needed for `l_target` from a film of the given sheet
/// inductance, counting each square as `width²` of area.
pub fn inductor_geometry(
    l_target: f64,
    sheet_inductance: f64,
    wire_width: f64,
) -> Result<MeanderGeometry, DriveError> {
    if !(l_target > 0.0 && sheet_inductance > 0.0 && wire_width > 0.0) {
        return Err(DriveError::InvalidParams(
            "inductance, sheet inductance and width must be positive".into(),
        ));
    }
    // Guard against 90e-9/180e-12 landing a hair above an integer.
    let ratio = l_target / sheet_inductance;
    let squares = (ratio * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    Ok(MeanderGeometry {
        sheet_inductance,
        wire_width,
        squares,
        area: squares as f64 * wire_width * wire_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadrature(p: &PulseShape, t_end: f64, n: usize) -> f64 {
        // Composite Simpson on the two smooth pieces separately.
        let simpson = |a: f64, b: f64| {
            let h = (b - a) / n as f64;
            let f = |t: f64| p.current(t).powi(2);
            let mut s = f(a + 1e-18) + f(b - 1e-18);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + k as f64 * h);
            }
            s * h / 3.0
        };
        simpson(p.t_start(), p.drive_end()) + simpson(p.drive_end(), t_end)
    }

    #[test]
    fn square_gate_power_plateau() {
        let p = PulseShape::Square {
            t_start: 0.0,
            duration: 5e-9,
            amplitude: 1.2e-3,
        };
        let q = gate_power(p, 10.0).unwrap();
        assert_relative_eq!(q.power(1e-9), 14.4e-6, max_relative = 1e-12);
        assert_eq!(q.power(6e-9), 0.0);
        assert_relative_eq!(q.energy(), 14.4e-6 * 5e-9, max_relative = 1e-12);
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let p = NtronParams {
            channel_current: 0.0,
            ..Default::default()
        };
        let pulse = PulseShape::Exponential {
            t_start: 0.0,
            amplitude: p.channel_current,
            tau_rise: p.rise_time,
            tau_fall: p.tau(),
            drive_duration: p.drive_plateau,
        };
        let q = gate_power(pulse, 10.0).unwrap();
        for k in 0..100 {
            assert_eq!(q.power(k as f64 * 1e-9), 0.0);
        }
        assert_eq!(q.energy(), 0.0);
    }

    #[test]
    fn exponential_energy_matches_quadrature() {
        let n = NtronParams::default().with_tau(30e-9);
        let p = n.pulse(0.0);
        let closed = p.current_squared_integral();
        let numeric = quadrature(&p, p.drive_end() + 40.0 * n.tau(), 20_000);
        assert_relative_eq!(closed, numeric, max_relative = 1e-6);
        // Dominated by the decay term A²τ/2.
        let tail = n.channel_current.powi(2) * n.tau() / 2.0;
        assert!((closed / tail - 1.0).abs() < 0.05);
    }

    #[test]
    fn exponential_energy_increases_with_tau() {
        let mut last = 0.0;
        for tau in [1e-9, 3e-9, 10e-9, 30e-9, 100e-9] {
            let e = NtronParams::default().with_tau(tau).pulse(0.0).energy(10.0);
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn exponential_current_is_continuous_at_drive_end() {
        let p = NtronParams::default().pulse(2e-9);
        let t = p.drive_end();
        assert_relative_eq!(p.current(t - 1e-18), p.current(t), max_relative = 1e-6);
        assert!(p.current(1e-9) == 0.0);
        let t_reach = p.time_to_reach(100e-6).unwrap();
        assert_relative_eq!(p.current(t_reach), 100e-6, max_relative = 1e-9);
        assert!(p.time_to_reach(2e-3).is_none());
    }

    #[test]
    fn rejects_bad_gate_resistance() {
        let p = NtronParams::default().pulse(0.0);
        assert!(gate_power(p, 0.0).is_err());
    }

    #[test]
    fn meander_for_one_microhenry() {
        let g = inductor_geometry(1e-6, 180e-12, 10e-6).unwrap();
        assert_eq!(g.squares, 5556);
        assert_relative_eq!(g.area, 5556.0 * 1e-10, max_relative = 1e-12);
        assert!((g.area / 0.6e-6 - 1.0).abs() < 0.15);
    }

    #[test]
    fn meander_square_counts() {
        assert_eq!(inductor_geometry(90e-9, 180e-12, 10e-6).unwrap().squares, 500);
        let one = inductor_geometry(180e-12, 180e-12, 2e-6).unwrap();
        assert_eq!(one.squares, 1);
        assert_relative_eq!(one.area, 4e-12);
        assert!(inductor_geometry(0.0, 180e-12, 1e-6).is_err());
    }

    #[test]
    fn tau_is_inductance_over_resistance() {
        let n = NtronParams::default();
        assert_relative_eq!(n.tau(), 50e-9, max_relative = 1e-12);
        assert_relative_eq!(n.clone().with_tau(30e-9).channel_inductance, 300e-9, max_relative = 1e-12);
    }
}
