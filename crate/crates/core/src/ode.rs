//! Initial-value-problem integration with dense output and level-crossing
//! detection.
//!
//! Two schemes are provided: classical fixed-step RK4 and an embedded
//! Dormand-Prince 5(4) pair with a PI step-size controller. Both are explicit.
//! Stiff sub-systems (the hTron channel branch of the LED drive) are handled by
//! the caller through an algebraic closure rather than by the integrator.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("integration budget exhausted after {steps} steps at t = {t:e} s")]
    BudgetExhausted { steps: usize, t: f64 },
    #[error("model divergence at t = {t:e} s")]
    Divergence { t: f64 },
    #[error("bad component index {index} (dimension {dimension})")]
    BadComponent { index: usize, dimension: usize },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
}

/// A first-order system `dy/dt = f(t, y)`.
///
/// Implementations must be pure: `rhs` may not depend on anything but its
/// arguments and the immutable contents of `self`.
pub trait OdeSystem {
    fn dimension(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Wraps a closure as an [`OdeSystem`].
pub struct FnSystem<F> {
    dimension: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        (self.f)(t, y, dydt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Classical RK4 with a constant step `dt` (the last step is shortened to
    /// land on the end of the span).
    Fixed { dt: f64 },
    /// Dormand-Prince 5(4) with PI step control.
    Adaptive { rel_tol: f64, abs_tol: AbsTol },
}

/// Absolute tolerance, either shared by every component or given per
/// component (state vectors here mix volts, amperes and joules).
#[derive(Debug, Clone, PartialEq)]
pub enum AbsTol {
    Scalar(f64),
    PerComponent(Vec<f64>),
}

impl AbsTol {
    fn get(&self, i: usize) -> f64 {
        match self {
            AbsTol::Scalar(a) => *a,
            AbsTol::PerComponent(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub mode: Mode,
    pub max_step: f64,
    pub max_steps: usize,
    /// Number of interpolated samples inserted inside every accepted step
    /// (cubic Hermite on the step end points and slopes).
    pub dense_samples: usize,
}

impl IntegratorConfig {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            mode: Mode::Adaptive {
                rel_tol,
                abs_tol: AbsTol::Scalar(abs_tol),
            },
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
            dense_samples: 0,
        }
    }

    pub fn fixed(dt: f64) -> Self {
        Self {
            mode: Mode::Fixed { dt },
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
            dense_samples: 0,
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: Vec<f64>) -> Self {
        if let Mode::Adaptive { rel_tol, .. } = self.mode {
            self.mode = Mode::Adaptive {
                rel_tol,
                abs_tol: AbsTol::PerComponent(abs_tol),
            };
        }
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_dense_samples(mut self, n: usize) -> Self {
        self.dense_samples = n;
        self
    }

    fn validate(&self, dimension: usize) -> Result<(), OdeError> {
        let bad = |m: &str| Err(OdeError::InvalidRequest(m.to_string()));
        match &self.mode {
            Mode::Fixed { dt } if !(*dt > 0.0) => return bad("dt must be positive"),
            Mode::Adaptive { rel_tol, abs_tol } => {
                if !(*rel_tol > 0.0) {
                    return bad("rel_tol must be positive");
                }
                match abs_tol {
                    AbsTol::Scalar(a) if !(*a >= 0.0) => return bad("abs_tol must be non-negative"),
                    AbsTol::PerComponent(v) if v.len() != dimension => {
                        return bad("abs_tol length does not match system dimension")
                    }
                    AbsTol::PerComponent(v) if v.iter().any(|a| !(*a >= 0.0)) => {
                        return bad("abs_tol must be non-negative")
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        Ok(())
    }
}

/// Sampled trajectory. `times` is strictly increasing and every entry of
/// `states` has the system dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, t: f64, y: Vec<f64>) {
        debug_assert!(self.times.last().map_or(true, |&last| t > last));
        self.times.push(t);
        self.states.push(y);
    }

    pub fn first_time(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Values of one component across the series.
    pub fn component(&self, index: usize) -> Result<Vec<f64>, OdeError> {
        self.check_component(index)?;
        Ok(self.states.iter().map(|s| s[index]).collect())
    }

    /// Appends `other`, dropping its first sample when it coincides with the
    /// current last time (the usual case when chaining segments).
    pub fn append(&mut self, other: TimeSeries) {
        let skip = match (self.last_time(), other.first_time()) {
            (Some(a), Some(b)) if b <= a => 1,
            _ => 0,
        };
        for (t, y) in other.times.into_iter().zip(other.states).skip(skip) {
            self.push(t, y);
        }
    }

    /// Linear interpolation of one component at time `t` (clamped to the ends).
    pub fn interpolate(&self, index: usize, t: f64) -> Result<f64, OdeError> {
        self.check_component(index)?;
        if self.is_empty() {
            return Err(OdeError::InvalidRequest("empty series".into()));
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return Ok(self.states[0][index]);
        }
        if i == self.len() {
            return Ok(self.states[i - 1][index]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (y0, y1) = (self.states[i - 1][index], self.states[i][index]);
        Ok(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }

    /// Trapezoidal integral of `f(t, state)` over the whole series.
    pub fn trapezoid<F: Fn(f64, &[f64]) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (t, y) in self.times.iter().zip(&self.states) {
            let v = f(*t, y);
            if let Some((tp, vp)) = prev {
                acc += 0.5 * (v + vp) * (t - tp);
            }
            prev = Some((*t, v));
        }
        acc
    }

    fn check_component(&self, index: usize) -> Result<(), OdeError> {
        let dimension = self.dimension();
        if index >= dimension {
            return Err(OdeError::BadComponent { index, dimension });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

/// Time of the first crossing of `level` by `component` in the requested
/// direction, linearly interpolated between samples.
pub fn find_crossing(
    series: &TimeSeries,
    component: usize,
    level: f64,
    direction: Direction,
) -> Result<Option<f64>, OdeError> {
    Ok(crossings(series, component, level)?
        .into_iter()
        .find(|(_, d)| *d == direction)
        .map(|(t, _)| t))
}

/// Every crossing of `level` by `component`, in time order.
///
/// A sample exactly on the level counts as "not above", so a rising crossing
/// is a transition from `<= level` to `> level`.
pub fn crossings(
    series: &TimeSeries,
    component: usize,
    level: f64,
) -> Result<Vec<(f64, Direction)>, OdeError> {
    if series.is_empty() {
        return Err(OdeError::InvalidRequest("empty series".into()));
    }
    series.check_component(component)?;
    let mut out = Vec::new();
    for i in 1..series.len() {
        let (y0, y1) = (series.states[i - 1][component], series.states[i][component]);
        let (t0, t1) = (series.times[i - 1], series.times[i]);
        let above0 = y0 > level;
        let above1 = y1 > level;
        if above0 == above1 {
            continue;
        }
        let frac = (level - y0) / (y1 - y0);
        let t = t0 + frac.clamp(0.0, 1.0) * (t1 - t0);
        out.push((
            t,
            if above1 {
                Direction::Rising
            } else {
                Direction::Falling
            },
        ));
    }
    Ok(out)
}

/// Integrates `system` from `state0` over `t_span`.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    state0: &[f64],
    t_span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<TimeSeries, OdeError> {
    let n = system.dimension();
    if state0.len() != n {
        return Err(OdeError::InvalidRequest(format!(
            "initial state has {} components, system has {}",
            state0.len(),
            n
        )));
    }
    if !(t_span.1 > t_span.0) {
        return Err(OdeError::InvalidRequest(
            "t_span end must exceed start".into(),
        ));
    }
    config.validate(n)?;
    match &config.mode {
        Mode::Fixed { dt } => integrate_fixed(system, state0, t_span, *dt, config),
        Mode::Adaptive { rel_tol, abs_tol } => {
            integrate_adaptive(system, state0, t_span, *rel_tol, abs_tol, config)
        }
    }
}

fn eval<S: OdeSystem + ?Sized>(
    system: &S,
    t: f64,
    y: &[f64],
    out: &mut [f64],
) -> Result<(), OdeError> {
    system.rhs(t, y, out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::Divergence { t })
    }
}

fn push_dense(
    series: &mut TimeSeries,
    samples: usize,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t1: f64,
    y1: &[f64],
    f1: &[f64],
) {
    let h = t1 - t0;
    for k in 1..=samples {
        let s = k as f64 / (samples + 1) as f64;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let y = (0..y0.len())
            .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
            .collect();
        series.push(t0 + s * h, y);
    }
}

fn integrate_fixed<S: OdeSystem + ?Sized>(
    system: &S,
    state0: &[f64],
    (t0, t1): (f64, f64),
    dt: f64,
    config: &IntegratorConfig,
) -> Result<TimeSeries, OdeError> {
    let n = state0.len();
    let dt = dt.min(config.max_step);
    let mut series = TimeSeries::new();
    let mut y = state0.to_vec();
    let mut t = t0;
    let mut f0 = vec![0.0; n];
    let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    eval(system, t, &y, &mut f0)?;
    series.push(t, y.clone());
    let mut steps = 0usize;
    while t < t1 {
        if steps >= config.max_steps {
            return Err(OdeError::BudgetExhausted { steps, t });
        }
        steps += 1;
        // Step count, not accumulated time, decides the grid.
        let remaining = t1 - t;
        let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * f0[i];
        }
        eval(system, t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        eval(system, t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        eval(system, t + h, &tmp, &mut k4)?;
        let y_new: Vec<f64> = (0..n)
            .map(|i| y[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let t_new = if h == remaining { t1 } else { t + h };
        let mut f1 = vec![0.0; n];
        eval(system, t_new, &y_new, &mut f1)?;
        if config.dense_samples > 0 {
            push_dense(&mut series, config.dense_samples, t, &y, &f0, t_new, &y_new, &f1);
        }
        series.push(t_new, y_new.clone());
        y = y_new;
        f0 = f1;
        t = t_new;
    }
    Ok(series)
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

fn integrate_adaptive<S: OdeSystem + ?Sized>(
    system: &S,
    state0: &[f64],
    (t0, t1): (f64, f64),
    rel_tol: f64,
    abs_tol: &AbsTol,
    config: &IntegratorConfig,
) -> Result<TimeSeries, OdeError> {
    let n = state0.len();
    let span = t1 - t0;
    let mut series = TimeSeries::new();
    let mut y = state0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    eval(system, t, &y, &mut k1)?;
    series.push(t, y.clone());

    let scale = |i: usize, a: f64, b: f64| abs_tol.get(i) + rel_tol * a.abs().max(b.abs());

    // Initial step guess (Hairer, Norsett & Wanner II.4).
    let mut h = {
        let d0 = rms((0..n).map(|i| y[i] / scale(i, y[i], y[i])));
        let d1 = rms((0..n).map(|i| k1[i] / scale(i, y[i], y[i])));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span).min(config.max_step);
        for i in 0..n {
            tmp[i] = y[i] + h0 * k1[i];
        }
        eval(system, t + h0, &tmp, &mut k2)?;
        let d2 = rms((0..n).map(|i| (k2[i] - k1[i]) / scale(i, y[i], y[i]))) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(config.max_step)
    };

    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let mut rejected_last = false;
    let h_min = span * 1e-14;

    while t < t1 {
        if steps >= config.max_steps {
            return Err(OdeError::BudgetExhausted { steps, t });
        }
        steps += 1;
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        eval(system, t + C2 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        eval(system, t + C3 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        eval(system, t + C4 * h, &tmp, &mut k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        eval(system, t + C5 * h, &tmp, &mut k5)?;
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        eval(system, t + h, &tmp, &mut k6)?;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let t_new = if last { t1 } else { t + h };
        eval(system, t_new, &y_new, &mut k7)?;

        let err = rms((0..n).map(|i| {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            e / scale(i, y[i], y_new[i])
        }));
        if !err.is_finite() {
            return Err(OdeError::Divergence { t });
        }

        if err <= 1.0 {
            if config.dense_samples > 0 {
                push_dense(&mut series, config.dense_samples, t, &y, &k1, t_new, &y_new, &k7);
            }
            series.push(t_new, y_new.clone());
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)
            };
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                factor = factor.min(1.0);
            }
            err_prev = err.max(1e-4);
            h = (h * factor).min(config.max_step);
            rejected_last = false;
        } else {
            let factor = (SAFETY * err.powf(-PI_ALPHA)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
            rejected_last = true;
            if h < h_min {
                return Err(OdeError::Divergence { t });
            }
        }
    }
    Ok(series)
}

fn rms<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in it {
        sum += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(1, |_t, y: &[f64], d: &mut [f64]| d[0] = -y[0])
    }

    #[test]
    fn exponential_decay_adaptive() {
        let cfg = IntegratorConfig::adaptive(1e-9, 1e-12);
        let s = integrate(&decay(), &[1.0], (0.0, 1.0), &cfg).unwrap();
        let y = s.last_state().unwrap()[0];
        assert!(((y - (-1.0f64).exp()) / (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(s.last_time(), Some(1.0));
    }

    #[test]
    fn harmonic_energy_drift_over_ten_periods() {
        let sys = FnSystem::new(2, |_t, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        });
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12);
        let tf = 20.0 * std::f64::consts::PI;
        let s = integrate(&sys, &[1.0, 0.0], (0.0, tf), &cfg).unwrap();
        let y = s.last_state().unwrap();
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!(((energy - 0.5) / 0.5).abs() < 1e-6, "energy {energy}");
    }

    #[test]
    fn stiff_relaxation_tracks_quasi_steady_state() {
        // The explicit scheme pays in step count but must still follow cos t.
        let sys = FnSystem::new(1, |t, y: &[f64], d: &mut [f64]| d[0] = -1e6 * (y[0] - t.cos()));
        let cfg = IntegratorConfig::adaptive(1e-6, 1e-9);
        let s = integrate(&sys, &[0.0], (0.0, 1.0), &cfg).unwrap();
        for (t, y) in s.times.iter().zip(&s.states) {
            if *t > 1e-4 {
                assert!(((y[0] - t.cos()) / t.cos()).abs() < 1e-3, "t={t} y={}", y[0]);
            }
        }
    }

    #[test]
    fn fixed_rk4_converges_with_order_four() {
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for dt in [0.1, 0.05, 0.025, 0.0125] {
            let s = integrate(&decay(), &[1.0], (0.0, 1.0), &IntegratorConfig::fixed(dt)).unwrap();
            errs.push((s.last_state().unwrap()[0] - exact).abs());
        }
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 14.0, "ratio {}", w[0] / w[1]);
        }
    }

    #[test]
    fn budget_and_divergence_errors() {
        let cfg = IntegratorConfig::fixed(1e-3).with_max_steps(10);
        let err = integrate(&decay(), &[1.0], (0.0, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, OdeError::BudgetExhausted { .. }));
        assert!(err.to_string().contains("integration budget exhausted"));

        let blowup = FnSystem::new(1, |t, _y: &[f64], d: &mut [f64]| {
            d[0] = if t > 0.5 { f64::NAN } else { 1.0 }
        });
        let err = integrate(&blowup, &[0.0], (0.0, 1.0), &IntegratorConfig::fixed(0.1)).unwrap_err();
        assert!(err.to_string().starts_with("model divergence at t"));
    }

    #[test]
    fn rejects_bad_requests() {
        let cfg = IntegratorConfig::adaptive(1e-6, 1e-9);
        assert!(integrate(&decay(), &[1.0, 2.0], (0.0, 1.0), &cfg).is_err());
        assert!(integrate(&decay(), &[1.0], (1.0, 1.0), &cfg).is_err());
        assert!(integrate(&decay(), &[1.0], (0.0, 1.0), &IntegratorConfig::fixed(0.0)).is_err());
    }

    fn line_series() -> TimeSeries {
        let mut s = TimeSeries::new();
        for i in 0..=20 {
            let t = i as f64 * 0.1;
            s.push(t, vec![t]);
        }
        s
    }

    #[test]
    fn crossing_on_linear_series() {
        let s = line_series();
        let t = find_crossing(&s, 0, 1.0, Direction::Rising).unwrap().unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-12);
        assert_eq!(find_crossing(&s, 0, 1.0, Direction::Falling).unwrap(), None);
    }

    #[test]
    fn constant_series_has_no_crossing() {
        let mut s = TimeSeries::new();
        for i in 0..10 {
            s.push(i as f64, vec![0.2]);
        }
        assert_eq!(find_crossing(&s, 0, 0.5, Direction::Rising).unwrap(), None);
    }

    #[test]
    fn crossing_of_sampled_sine() {
        let mut s = TimeSeries::new();
        let dt = 0.05;
        for i in 0..200 {
            let t = i as f64 * dt;
            s.push(t, vec![t.sin()]);
        }
        let t = find_crossing(&s, 0, 0.5, Direction::Rising).unwrap().unwrap();
        assert!((t - std::f64::consts::FRAC_PI_6).abs() < dt);
        let tf = find_crossing(&s, 0, 0.5, Direction::Falling).unwrap().unwrap();
        assert!((tf - 5.0 * std::f64::consts::FRAC_PI_6).abs() < dt);
    }

    #[test]
    fn bad_component_index() {
        let err = find_crossing(&line_series(), 3, 0.0, Direction::Rising).unwrap_err();
        assert!(err.to_string().starts_with("bad component index"));
    }

    #[test]
    fn dense_output_brackets_events_of_a_finer_run() {
        let sys = FnSystem::new(2, |_t, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        });
        let coarse = integrate(
            &sys,
            &[0.0, 1.0],
            (0.0, 12.0),
            &IntegratorConfig::adaptive(1e-8, 1e-10).with_dense_samples(3),
        )
        .unwrap();
        let fine = integrate(&sys, &[0.0, 1.0], (0.0, 12.0), &IntegratorConfig::fixed(1e-3)).unwrap();
        let ref_events = crossings(&fine, 0, 0.3).unwrap();
        let events = crossings(&coarse, 0, 0.3).unwrap();
        assert_eq!(events.len(), ref_events.len());
        for ((t, d), (tr, dr)) in events.iter().zip(&ref_events) {
            assert_eq!(d, dr);
            let i = coarse.times.partition_point(|&x| x <= *tr);
            assert!(i > 0 && i < coarse.len());
            assert!(coarse.times[i - 1] <= *tr && *tr <= coarse.times[i]);
            assert!((t - tr).abs() < 1e-3);
        }
    }

    #[test]
    fn identical_inputs_are_bit_identical() {
        let cfg = IntegratorConfig::adaptive(1e-8, 1e-12).with_dense_samples(2);
        let a = integrate(&decay(), &[1.0], (0.0, 3.0), &cfg).unwrap();
        let b = integrate(&decay(), &[1.0], (0.0, 3.0), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trapezoid_of_linear_function_is_exact() {
        let s = line_series();
        assert_relative_eq!(s.trapezoid(|_t, y| y[0]), 2.0, epsilon = 1e-12);
    }
}
