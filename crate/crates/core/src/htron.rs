//! hTron thermal switch: a four-node lumped thermal network (heater, upper
//! spacer, channel, lower spacer) above a substrate bath, and the channel's
//! superconducting/normal state.

use crate::ode::{crossings, integrate, Direction, FnSystem, IntegratorConfig, OdeError, TimeSeries};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HtronError {
    #[error("stack must have 4 layers")]
    LayerCount,
    #[error("invalid material {name}: {reason}")]
    InvalidMaterial { name: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("materials database: {0}")]
    Database(String),
    #[error("heater power must be non-negative (got {power:e} W at t = {t:e} s)")]
    NegativePower { t: f64, power: f64 },
    #[error(transparent)]
    Integration(#[from] OdeError),
}

/// Bulk material with specific heat `c(T) = A1·T + A3·T³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// W/(m·K)
    pub thermal_conductivity: f64,
    /// J/(kg·K²)
    pub cv_linear: f64,
    /// J/(kg·K⁴)
    pub cv_cubic: f64,
}

impl MaterialProps {
    pub fn new(name: &str, density: f64, thermal_conductivity: f64, cv_linear: f64, cv_cubic: f64) -> Self {
        Self {
            name: name.to_string(),
            density,
            thermal_conductivity,
            cv_linear,
            cv_cubic,
        }
    }

    pub fn validate(&self) -> Result<(), HtronError> {
        let bad = |reason: &str| {
            Err(HtronError::InvalidMaterial {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.density > 0.0 && self.density.is_finite()) {
            return bad("density must be positive");
        }
        if !(self.thermal_conductivity > 0.0 && self.thermal_conductivity.is_finite()) {
            return bad("thermal conductivity must be positive");
        }
        if !(self.cv_linear >= 0.0 && self.cv_cubic >= 0.0) {
            return bad("specific heat coefficients must be non-negative");
        }
        if self.cv_linear == 0.0 && self.cv_cubic == 0.0 {
            return bad("specific heat must be positive above 0 K");
        }
        Ok(())
    }

    /// J/(kg·K)
    pub fn specific_heat(&self, t: f64) -> f64 {
        self.cv_linear * t + self.cv_cubic * t.powi(3)
    }

    /// Internal energy per unit mass relative to 0 K, J/kg.
    pub fn specific_energy(&self, t: f64) -> f64 {
        0.5 * self.cv_linear * t * t + 0.25 * self.cv_cubic * t.powi(4)
    }
}

/// Materials keyed by name, read from TOML:
///
/// ```toml
/// [[material]]
/// name = "Al"
/// density = 2700.0
/// thermal_conductivity = 30.0
/// cv_linear = 0.05
/// cv_cubic = 9.2e-4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialDb {
    #[serde(rename = "material")]
    pub materials: Vec<MaterialProps>,
}

/// Shipped materials file.
pub const DEFAULT_MATERIALS: &str = include_str!("../config/materials.toml");

impl MaterialDb {
    pub fn from_toml_str(text: &str) -> Result<Self, HtronError> {
        let db: MaterialDb = toml::from_str(text).map_err(|e| HtronError::Database(e.to_string()))?;
        for m in &db.materials {
            m.validate()?;
        }
        for (i, m) in db.materials.iter().enumerate() {
            if db.materials[..i].iter().any(|o| o.name == m.name) {
                return Err(HtronError::Database(format!("duplicate material {}", m.name)));
            }
        }
        Ok(db)
    }

    pub fn get(&self, name: &str) -> Result<&MaterialProps, HtronError> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| HtronError::Database(format!("no material named {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut MaterialProps, HtronError> {
        self.materials
            .iter_mut()
            .find(|m| m.name == name)
            .ok_or_else(|| HtronError::Database(format!("no material named {name}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("material records always serialize")
    }
}

impl Default for MaterialDb {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_MATERIALS).expect("shipped materials file is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: MaterialProps,
    /// m
    pub thickness: f64,
    /// m²
    pub area: f64,
}

impl Layer {
    pub fn new(material: MaterialProps, thickness: f64, area: f64) -> Self {
        Self {
            material,
            thickness,
            area,
        }
    }

    pub fn mass(&self) -> f64 {
        self.material.density * self.thickness * self.area
    }

    /// Conduction resistance through half the layer thickness, K/W.
    pub fn half_resistance(&self) -> f64 {
        0.5 * self.thickness / (self.material.thermal_conductivity * self.area)
    }

    pub fn heat_capacity(&self, t: f64) -> f64 {
        self.mass() * self.material.specific_heat(t)
    }

    pub fn internal_energy(&self, t: f64) -> f64 {
        self.mass() * self.material.specific_energy(t)
    }
}

/// Index of each layer in a [`ThermalStack`], top to bottom.
pub mod node {
    pub const HEATER: usize = 0;
    pub const UPPER_SPACER: usize = 1;
    pub const CHANNEL: usize = 2;
    pub const LOWER_SPACER: usize = 3;
}

/// Heater, upper spacer, channel and lower spacer above a bath at `t_bath`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalStack {
    pub layers: [Layer; 4],
    pub t_bath: f64,
    /// Extra resistance-area product between the lower spacer and the bath
    /// (substrate spreading and boundary resistance), K·m²/W. Zero for the bare
    /// layer stack.
    pub substrate_resistance_area: f64,
}

/// Builds the four-node network from layers ordered top to bottom.
pub fn build_stack(layers: Vec<Layer>, t_bath: f64) -> Result<ThermalStack, HtronError> {
    let layers: [Layer; 4] = layers.try_into().map_err(|_| HtronError::LayerCount)?;
    let stack = ThermalStack {
        layers,
        t_bath,
        substrate_resistance_area: 0.0,
    };
    stack.validate()?;
    Ok(stack)
}

/// Thicknesses of the default device, top to bottom.
pub const DEFAULT_THICKNESSES: [f64; 4] = [10e-9, 10e-9, 8e-9, 50e-9];
/// Names of the default materials, top to bottom.
pub const DEFAULT_MATERIALS_ORDER: [&str; 4] = ["Al", "a-Si", "MoSi", "SiO2"];
/// 5.4 µm × 5.4 µm
pub const DEFAULT_AREA: f64 = 5.4e-6 * 5.4e-6;
pub const DEFAULT_BATH: f64 = 4.2;

impl ThermalStack {
    /// The printed device stack with materials from `db`.
    pub fn from_db(db: &MaterialDb, area: f64, t_bath: f64) -> Result<Self, HtronError> {
        let layers = DEFAULT_MATERIALS_ORDER
            .iter()
            .zip(DEFAULT_THICKNESSES)
            .map(|(name, d)| Ok(Layer::new(db.get(name)?.clone(), d, area)))
            .collect::<Result<Vec<_>, HtronError>>()?;
        build_stack(layers, t_bath)
    }

    pub fn with_substrate_resistance_area(mut self, r_area: f64) -> Self {
        self.substrate_resistance_area = r_area;
        self
    }

    pub fn validate(&self) -> Result<(), HtronError> {
        for layer in &self.layers {
            layer.material.validate()?;
            if !(layer.thickness > 0.0 && layer.area > 0.0) {
                return Err(HtronError::InvalidParams(format!(
                    "layer {} needs positive thickness and area",
                    layer.material.name
                )));
            }
        }
        if !(self.t_bath > 0.0) {
            return Err(HtronError::InvalidParams("bath temperature must be positive".into()));
        }
        if !(self.substrate_resistance_area >= 0.0 && self.substrate_resistance_area.is_finite()) {
            return Err(HtronError::InvalidParams(
                "substrate resistance must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Heater footprint, m².
    pub fn area(&self) -> f64 {
        self.layers[node::HEATER].area
    }

    /// `R1..R3` join adjacent node centres; `R4` joins the lower-spacer centre
    /// to the bath.
    pub fn resistances(&self) -> [f64; 4] {
        let h: Vec<f64> = self.layers.iter().map(Layer::half_resistance).collect();
        let sub = self.substrate_resistance_area / self.layers[node::LOWER_SPACER].area;
        [h[0] + h[1], h[1] + h[2], h[2] + h[3], h[3] + sub]
    }

    pub fn capacities(&self, temps: &[f64]) -> [f64; 4] {
        std::array::from_fn(|i| self.layers[i].heat_capacity(temps[i]))
    }

    pub fn internal_energy(&self, temps: &[f64]) -> f64 {
        (0..4).map(|i| self.layers[i].internal_energy(temps[i])).sum()
    }

    /// Full-thickness resistance of the lower spacer plus substrate: the path
    /// from the channel's bath-side face to the bath.
    pub fn channel_face_to_bath(&self) -> f64 {
        let lower = &self.layers[node::LOWER_SPACER];
        2.0 * lower.half_resistance() + self.substrate_resistance_area / lower.area
    }
}

/// Superconducting channel of the hTron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// K
    pub t_c: f64,
    /// Ω per square
    pub sheet_resistance: f64,
    pub squares: f64,
    /// m
    pub wire_width: f64,
    /// A
    pub critical_current: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            t_c: 6.2,
            sheet_resistance: 400.0,
            squares: 2000.0,
            wire_width: 100e-9,
            critical_current: 16e-6,
        }
    }
}

impl ChannelSpec {
    pub fn r_normal(&self) -> f64 {
        self.sheet_resistance * self.squares
    }

    pub fn validate(&self, t_bath: f64) -> Result<(), HtronError> {
        if !(self.t_c > t_bath) {
            return Err(HtronError::InvalidParams("T_c must exceed the bath temperature".into()));
        }
        if !(self.sheet_resistance > 0.0 && self.squares > 0.0) {
            return Err(HtronError::InvalidParams(
                "channel sheet resistance and squares must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Channel resistance at temperature `t`: a sharp step at `T_c`, with
/// `T = T_c` counted as superconducting.
pub fn channel_resistance(channel: &ChannelSpec, t: f64) -> f64 {
    if t > channel.t_c {
        channel.r_normal()
    } else {
        0.0
    }
}

/// Heater power as a function of time.
pub trait HeatSource {
    /// W
    fn power(&self, t: f64) -> f64;

    /// Times at which the power is discontinuous or changes form. The
    /// integration is split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// A time after which the power never increases again.
    fn monotone_after(&self) -> f64 {
        self.breakpoints().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl<F: Fn(f64) -> f64> HeatSource for F {
    fn power(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Constant power on `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareHeat {
    pub start: f64,
    pub duration: f64,
    pub power: f64,
}

impl HeatSource for SquareHeat {
    fn power(&self, t: f64) -> f64 {
        if t >= self.start && t < self.start + self.duration {
            self.power
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.start, self.start + self.duration]
    }
}

/// Layout of the thermal state vector.
pub mod column {
    pub const T1: usize = 0;
    pub const T2: usize = 1;
    pub const T3: usize = 2;
    pub const T4: usize = 3;
    /// ∫Q dt
    pub const E_IN: usize = 4;
    /// ∫(T4 − T_g)/R4 dt
    pub const E_BATH: usize = 5;
    pub const COUNT: usize = 6;
}

fn thermal_integrator() -> IntegratorConfig {
    let mut atol = vec![1e-9; column::COUNT];
    atol[column::E_IN] = 1e-24;
    atol[column::E_BATH] = 1e-24;
    IntegratorConfig::adaptive(1e-7, 0.0).with_abs_tol(atol)
}

/// `y` holds node excursions above the bath, which keeps the relative error
/// control meaningful for millikelvin-scale swings.
fn thermal_rhs(stack: &ThermalStack, r: &[f64; 4], q: f64, y: &[f64], d: &mut [f64]) {
    let t: [f64; 4] = std::array::from_fn(|i| y[i] + stack.t_bath);
    let c = stack.capacities(&t);
    let f01 = (t[0] - t[1]) / r[0];
    let f12 = (t[1] - t[2]) / r[1];
    let f23 = (t[2] - t[3]) / r[2];
    let f3g = (t[3] - stack.t_bath) / r[3];
    d[column::T1] = (q - f01) / c[0];
    d[column::T2] = (f01 - f12) / c[1];
    d[column::T3] = (f12 - f23) / c[2];
    d[column::T4] = (f23 - f3g) / c[3];
    d[column::E_IN] = q;
    d[column::E_BATH] = f3g;
}

fn check_power<H: HeatSource + ?Sized>(q: &H, t: f64) -> Result<f64, HtronError> {
    let p = q.power(t);
    if p >= 0.0 {
        Ok(p)
    } else {
        Err(HtronError::NegativePower { t, power: p })
    }
}

fn integrate_from<H: HeatSource + ?Sized>(
    stack: &ThermalStack,
    q: &H,
    y0: Vec<f64>,
    (t0, t1): (f64, f64),
) -> Result<TimeSeries, HtronError> {
    let r = stack.resistances();
    let cfg = thermal_integrator();
    let mut cuts: Vec<f64> = q.breakpoints().into_iter().filter(|&t| t > t0 && t < t1).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.insert(0, t0);
    cuts.push(t1);
    cuts.dedup();
    let mut series = TimeSeries::new();
    let mut y = y0;
    for v in &mut y[..4] {
        *v -= stack.t_bath;
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Sample the power at the segment start so a negative input is caught
        // even when the integrator never lands on it.
        check_power(q, a)?;
        let bad = std::cell::Cell::new(None);
        let sys = FnSystem::new(column::COUNT, |t, s: &[f64], d: &mut [f64]| {
            // Left-continuous evaluation at the segment end keeps square edges
            // inside the segment they belong to.
            let tt = if t >= b { b - (b - a) * 1e-12 } else { t };
            let p = q.power(tt);
            if p < 0.0 && bad.get().is_none() {
                bad.set(Some((t, p)));
            }
            thermal_rhs(stack, &r, p.max(0.0), s, d);
        });
        let seg = integrate(&sys, &y, (a, b), &cfg)?;
        if let Some((t, power)) = bad.get() {
            return Err(HtronError::NegativePower { t, power });
        }
        y = seg.last_state().expect("segment is never empty").to_vec();
        series.append(seg);
    }
    for st in &mut series.states {
        for v in &mut st[..4] {
            *v += stack.t_bath;
        }
    }
    Ok(series)
}

fn initial_state(stack: &ThermalStack) -> Vec<f64> {
    let mut y = vec![stack.t_bath; column::COUNT];
    y[column::E_IN] = 0.0;
    y[column::E_BATH] = 0.0;
    y
}

/// Integrates the network from a uniform bath temperature. Columns as in
/// [`column`].
pub fn simulate_thermal<H: HeatSource + ?Sized>(
    stack: &ThermalStack,
    q: &H,
    t_span: (f64, f64),
) -> Result<TimeSeries, HtronError> {
    simulate_thermal_from(stack, q, &[stack.t_bath; 4], t_span)
}

/// As [`simulate_thermal`] but from explicit node temperatures.
pub fn simulate_thermal_from<H: HeatSource + ?Sized>(
    stack: &ThermalStack,
    q: &H,
    temps: &[f64; 4],
    t_span: (f64, f64),
) -> Result<TimeSeries, HtronError> {
    stack.validate()?;
    if !(t_span.1 > t_span.0) {
        return Err(HtronError::InvalidParams("t_span end must exceed start".into()));
    }
    let mut y = initial_state(stack);
    y[..4].copy_from_slice(temps);
    integrate_from(stack, q, y, t_span)
}

/// Integrates until the channel has cooled below `T_c` for good, or `t_max`.
///
/// The run is chunked; it stops after a chunk that ends past
/// [`HeatSource::monotone_after`] with the channel superconducting and the
/// heater power below what could hold the channel at `T_c` in steady state.
pub fn simulate_until_cooled<H: HeatSource + ?Sized>(
    stack: &ThermalStack,
    channel: &ChannelSpec,
    q: &H,
    t_max: f64,
) -> Result<TimeSeries, HtronError> {
    stack.validate()?;
    channel.validate(stack.t_bath)?;
    let r = stack.resistances();
    let q_hold = (channel.t_c - stack.t_bath) / (r[2] + r[3]);
    let quiet_from = q.monotone_after().max(0.0);
    let chunk = 2e-9;
    let mut series = TimeSeries::new();
    let mut y = initial_state(stack);
    let mut t = 0.0;
    while t < t_max {
        let end = (t + chunk).min(t_max);
        let seg = integrate_from(stack, q, y, (t, end))?;
        y = seg.last_state().expect("segment is never empty").to_vec();
        series.append(seg);
        t = end;
        if t >= quiet_from && y[column::T3] <= channel.t_c && check_power(q, t)? < q_hold {
            break;
        }
    }
    Ok(series)
}

/// Total time the channel node spends above `T_c`.
pub fn time_above_tc(series: &TimeSeries, channel: &ChannelSpec) -> Result<f64, HtronError> {
    let x = crossings(series, column::T3, channel.t_c)?;
    let start = series.first_time().unwrap_or(0.0);
    let end = series.last_time().unwrap_or(0.0);
    let mut above_since = if series.states[0][column::T3] > channel.t_c {
        Some(start)
    } else {
        None
    };
    let mut total = 0.0;
    for (t, dir) in x {
        match dir {
            Direction::Rising => above_since = Some(t),
            Direction::Falling => {
                if let Some(s) = above_since.take() {
                    total += t - s;
                }
            }
        }
    }
    if let Some(s) = above_since {
        total += end - s;
    }
    Ok(total)
}

/// First time the channel goes normal.
pub fn switch_time(series: &TimeSeries, channel: &ChannelSpec) -> Result<Option<f64>, HtronError> {
    Ok(crate::ode::find_crossing(series, column::T3, channel.t_c, Direction::Rising)?)
}

/// Channel resistance schedule implied by a thermal run.
pub fn resistance_schedule(
    series: &TimeSeries,
    channel: &ChannelSpec,
) -> Result<crate::diode::ResistanceSchedule, HtronError> {
    let mut switches = Vec::new();
    if series.states[0][column::T3] > channel.t_c {
        switches.push((series.first_time().unwrap_or(0.0), channel.r_normal()));
    }
    for (t, dir) in crossings(series, column::T3, channel.t_c)? {
        let r = match dir {
            Direction::Rising => channel.r_normal(),
            Direction::Falling => 0.0,
        };
        switches.push((t, r));
    }
    Ok(crate::diode::ResistanceSchedule::from_switches(switches))
}

/// Minimum steady heater power per unit area that holds the whole channel
/// film at or above `T_c`, i.e. holds its bath-side face at `T_c`. W/m².
///
/// In steady state the full heater power flows through the lower spacer, so
/// the answer depends only on that path.
pub fn steady_state_power_density(stack: &ThermalStack, channel: &ChannelSpec) -> f64 {
    (channel.t_c - stack.t_bath) / stack.channel_face_to_bath() / stack.area()
}

/// Steady heater power per unit area that holds the channel node (the film
/// centre) at `T_c`. W/m².
pub fn node_steady_state_power_density(stack: &ThermalStack, channel: &ChannelSpec) -> f64 {
    let r = stack.resistances();
    (channel.t_c - stack.t_bath) / (r[2] + r[3]) / stack.area()
}

/// Steady node temperatures under constant heater power `q`.
pub fn steady_state_temperatures(stack: &ThermalStack, q: f64) -> [f64; 4] {
    let r = stack.resistances();
    let t4 = stack.t_bath + q * r[3];
    let t3 = t4 + q * r[2];
    let t2 = t3 + q * r[1];
    let t1 = t2 + q * r[0];
    [t1, t2, t3, t4]
}

/// Energy balance of a thermal run: `(∫Q dt, ΔU, ∫bath flux dt)`.
pub fn energy_budget(stack: &ThermalStack, series: &TimeSeries) -> (f64, f64, f64) {
    let first = &series.states[0];
    let last = series.last_state().expect("series is never empty");
    let du = stack.internal_energy(&last[..4]) - stack.internal_energy(&first[..4]);
    (last[column::E_IN], du, last[column::E_BATH])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stack() -> ThermalStack {
        ThermalStack::from_db(&MaterialDb::default(), DEFAULT_AREA, DEFAULT_BATH).unwrap()
    }

    #[test]
    fn shipped_materials_carry_listed_bulk_values() {
        let db = MaterialDb::default();
        let al = db.get("Al").unwrap();
        assert_eq!((al.density, al.thermal_conductivity), (2700.0, 30.0));
        let asi = db.get("a-Si").unwrap();
        assert_eq!((asi.density, asi.thermal_conductivity), (2285.0, 0.01));
        let sio2 = db.get("SiO2").unwrap();
        assert_eq!((sio2.density, sio2.thermal_conductivity), (2650.0, 0.01));
        assert_eq!(db.get("MoSi").unwrap().thermal_conductivity, 1.0);
        assert!(db.get("Nb").is_err());
    }

    #[test]
    fn materials_round_trip_through_toml() {
        let db = MaterialDb::default();
        let again = MaterialDb::from_toml_str(&db.to_toml_string()).unwrap();
        assert_eq!(db, again);
    }

    #[test]
    fn rejects_bad_materials() {
        let text = "[[material]]\nname = \"x\"\ndensity = -1.0\nthermal_conductivity = 1.0\ncv_linear = 0.0\ncv_cubic = 1.0\n";
        assert!(MaterialDb::from_toml_str(text).is_err());
        let text = "[[material]]\nname = \"x\"\ndensity = 1.0\nthermal_conductivity = 1.0\ncv_linear = 0.0\ncv_cubic = 0.0\n";
        assert!(MaterialDb::from_toml_str(text).is_err());
    }

    #[test]
    fn full_oxide_slab_resistance() {
        // d/(kA) = 50e-9 / (0.01 · 29.16e-12) = 1.7147e5 K/W
        let s = stack();
        let full = 2.0 * s.layers[node::LOWER_SPACER].half_resistance();
        assert_relative_eq!(full, 1.7147e5, max_relative = 1e-3);
        assert_relative_eq!(s.channel_face_to_bath(), full);
    }

    #[test]
    fn node_resistances_are_half_slab_sums() {
        let r = stack().resistances();
        assert_relative_eq!(r[0], 17.147e3 + 5e-9 / (30.0 * DEFAULT_AREA), max_relative = 1e-3);
        assert_relative_eq!(r[3], 85.734e3, max_relative = 1e-3);
        assert!(r[2] > r[3]);
    }

    #[test]
    fn doubling_area_halves_resistance_and_doubles_capacity() {
        let s = stack().with_substrate_resistance_area(1e-6);
        let mut big = s.clone();
        for l in &mut big.layers {
            l.area *= 2.0;
        }
        let temps = [5.0, 6.0, 7.0, 8.0];
        for i in 0..4 {
            assert_relative_eq!(big.resistances()[i], 0.5 * s.resistances()[i], max_relative = 1e-12);
            assert_relative_eq!(big.capacities(&temps)[i], 2.0 * s.capacities(&temps)[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn wrong_layer_count_is_rejected() {
        let s = stack();
        let three = s.layers[..3].to_vec();
        assert_eq!(build_stack(three, 4.2).unwrap_err().to_string(), "stack must have 4 layers");
    }

    #[test]
    fn no_power_leaves_the_stack_at_the_bath() {
        let s = stack();
        let series = simulate_thermal(&s, &|_t: f64| 0.0, (0.0, 10e-9)).unwrap();
        for st in &series.states {
            for &t in &st[..4] {
                assert_eq!(t, s.t_bath);
            }
        }
    }

    #[test]
    fn hot_stack_relaxes_monotonically() {
        let s = stack();
        let series = simulate_thermal_from(&s, &|_t: f64| 0.0, &[8.0; 4], (0.0, 50e-9)).unwrap();
        for i in 0..4 {
            let c = series.component(i).unwrap();
            for w in c.windows(2) {
                assert!(w[1] <= w[0] + 1e-8, "{} {}", w[0], w[1]);
            }
            assert!(*c.last().unwrap() < 8.0);
        }
    }

    #[test]
    fn steady_state_ordering_and_power_density() {
        let s = stack();
        let ch = ChannelSpec::default();
        let t = steady_state_temperatures(&s, 10e-6);
        assert!(t[0] >= t[1] && t[1] >= t[2] && t[2] >= t[3] && t[3] >= s.t_bath);
        // 2 K across 50 nm of k = 0.01 W/(m·K) oxide: 4e5 W/m².
        let p = steady_state_power_density(&s, &ch);
        assert_relative_eq!(p, 4e5, max_relative = 1e-9);
        assert!(node_steady_state_power_density(&s, &ch) < p);
    }

    #[test]
    fn long_constant_drive_approaches_steady_state() {
        let s = stack();
        let q = 5e-6;
        let series = simulate_thermal(&s, &|_t: f64| q, (0.0, 400e-9)).unwrap();
        let target = steady_state_temperatures(&s, q);
        let last = series.last_state().unwrap();
        for i in 0..4 {
            assert!((last[i] - target[i]).abs() < 1e-3, "node {i}: {} vs {}", last[i], target[i]);
        }
    }

    #[test]
    fn heating_never_cools_below_bath_and_conserves_energy() {
        let s = stack();
        let pulse = SquareHeat {
            start: 0.0,
            duration: 3e-9,
            power: 14.4e-6,
        };
        let series = simulate_thermal(&s, &pulse, (0.0, 20e-9)).unwrap();
        for st in &series.states {
            for &t in &st[..4] {
                assert!(t >= s.t_bath - 1e-8, "{t}");
            }
        }
        let (e_in, du, e_bath) = energy_budget(&s, &series);
        assert_relative_eq!(e_in, 14.4e-6 * 3e-9, max_relative = 1e-6);
        assert!((e_in - du - e_bath).abs() <= 0.01 * e_in);
    }

    #[test]
    fn channel_resistance_step() {
        let ch = ChannelSpec::default();
        assert_eq!(ch.r_normal(), 800e3);
        assert_eq!(channel_resistance(&ch, 4.2), 0.0);
        assert_eq!(channel_resistance(&ch, 6.3), 800e3);
        assert_eq!(channel_resistance(&ch, ch.t_c), 0.0);
    }

    fn synthetic(times: &[f64], t3: &[f64]) -> TimeSeries {
        let mut s = TimeSeries::new();
        for (&t, &v) in times.iter().zip(t3) {
            s.push(t, vec![4.2, 4.2, v, 4.2, 0.0, 0.0]);
        }
        s
    }

    #[test]
    fn time_above_tc_of_constructed_waveforms() {
        let ch = ChannelSpec::default();
        let never = synthetic(&[0.0, 1e-9, 2e-9], &[4.2, 5.0, 6.0]);
        assert_eq!(time_above_tc(&never, &ch).unwrap(), 0.0);
        let square = synthetic(
            &[0.0, 1e-9, 1e-9 + 1e-15, 3e-9, 3e-9 + 1e-15, 5e-9],
            &[4.2, 4.2, 7.0, 7.0, 4.2, 4.2],
        );
        assert_relative_eq!(time_above_tc(&square, &ch).unwrap(), 2e-9, max_relative = 1e-5);
        let twice = synthetic(&[0.0, 1.0, 2.0, 3.0, 4.0], &[7.0, 5.2, 7.2, 5.2, 7.2]);
        // Above on [0, 0.8/1.8], [1.5, 2.5] and [3.5, 4].
        assert_relative_eq!(time_above_tc(&twice, &ch).unwrap(), 0.8 / 1.8 + 1.5, max_relative = 1e-9);
    }

    #[test]
    fn rejects_negative_power() {
        let s = stack();
        let r = simulate_thermal(&s, &|_t: f64| -1e-6, (0.0, 1e-9));
        assert!(matches!(r, Err(HtronError::NegativePower { .. })));
    }

    #[test]
    fn cooled_run_stops_after_pulse() {
        let s = stack();
        let ch = ChannelSpec::default();
        let pulse = SquareHeat {
            start: 0.0,
            duration: 4e-9,
            power: 30e-6,
        };
        let full = simulate_thermal(&s, &pulse, (0.0, 200e-9)).unwrap();
        let short = simulate_until_cooled(&s, &ch, &pulse, 200e-9).unwrap();
        assert!(short.last_time().unwrap() < 100e-9);
        let a = time_above_tc(&full, &ch).unwrap();
        let b = time_above_tc(&short, &ch).unwrap();
        assert!(a > 0.0);
        assert_relative_eq!(a, b, max_relative = 1e-4);
    }

    #[test]
    fn schedule_follows_crossings() {
        let ch = ChannelSpec::default();
        let s = synthetic(&[0.0, 1.0, 2.0, 3.0], &[4.2, 8.2, 8.2, 4.2]);
        let sched = resistance_schedule(&s, &ch).unwrap();
        assert_eq!(sched.resistance_at(0.4), 0.0);
        assert_eq!(sched.resistance_at(1.5), 800e3);
        assert_eq!(sched.resistance_at(2.9), 0.0);
    }
}
