//! Run configuration: a flat text format of `section.key = value unit` lines.
//!
//! Every numeric entry carries its unit, converted to SI on load. Unknown keys
//! and mismatched units are rejected.

use crate::chain::{ChainConfig, ThresholdParams};
use crate::diode::{DiodeParams, DriveCircuitParams};
use crate::drive::NtronParams;
use crate::htron::{build_stack, ChannelSpec, Layer, MaterialDb, MaterialProps, ThermalStack};
use crate::neuron::{NeuronConfig, SynapseConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Shipped defaults.
pub const DEFAULT_CONFIG: &str = include_str!("../config/defaults.cfg");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: unit '{unit}' is not a unit of {expected}")]
    Unit {
        path: String,
        unit: String,
        expected: &'static str,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Physical dimension of a parameter, with the unit spellings it accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Current,
    Voltage,
    Time,
    Frequency,
    Capacitance,
    Inductance,
    Resistance,
    Temperature,
    Length,
    Area,
    NumberDensity,
    Mobility,
    Conductivity,
    MassDensity,
    SheetResistance,
    ResistanceArea,
    SpecificHeatLinear,
    SpecificHeatCubic,
    Decibel,
    Dimensionless,
    Count,
    Text,
}

fn si_prefix(p: &str) -> Option<i32> {
    Some(match p {
        "" => 0,
        "a" => -18,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" | "µ" | "μ" => -6,
        "m" => -3,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        _ => return None,
    })
}

fn prefixed(unit: &str, symbols: &[&str]) -> Option<i32> {
    symbols
        .iter()
        .find_map(|s| unit.strip_suffix(s).and_then(si_prefix))
}

impl Unit {
    pub fn name(self) -> &'static str {
        match self {
            Unit::Current => "current (A)",
            Unit::Voltage => "voltage (V)",
            Unit::Time => "time (s)",
            Unit::Frequency => "frequency (Hz)",
            Unit::Capacitance => "capacitance (F)",
            Unit::Inductance => "inductance (H)",
            Unit::Resistance => "resistance (ohm)",
            Unit::Temperature => "temperature (K)",
            Unit::Length => "length (m)",
            Unit::Area => "area (m^2)",
            Unit::NumberDensity => "number density (m^-3)",
            Unit::Mobility => "mobility (m^2/(V*s))",
            Unit::Conductivity => "thermal conductivity (W/(m*K))",
            Unit::MassDensity => "mass density (kg/m^3)",
            Unit::SheetResistance => "sheet resistance (ohm/sq)",
            Unit::ResistanceArea => "thermal resistance-area (K*m^2/W)",
            Unit::SpecificHeatLinear => "specific heat coefficient (J/(kg*K^2))",
            Unit::SpecificHeatCubic => "specific heat coefficient (J/(kg*K^4))",
            Unit::Decibel => "attenuation (dB)",
            Unit::Dimensionless => "a pure number",
            Unit::Count => "a count",
            Unit::Text => "a name",
        }
    }

    /// SI scale factor of `unit` for this dimension.
    pub fn scale(self, unit: &str) -> Option<f64> {
        self.exponent(unit).map(|e| 10f64.powi(e))
    }

    /// Converts `value` given in `unit` to SI.
    pub fn to_si(self, value: f64, unit: &str) -> Option<f64> {
        // Dividing by an exact power of ten keeps "100 nm" equal to 100e-9.
        self.exponent(unit).map(|e| {
            if e < 0 {
                value / 10f64.powi(-e)
            } else {
                value * 10f64.powi(e)
            }
        })
    }

    /// Decimal exponent of `unit` relative to SI.
    pub fn exponent(self, unit: &str) -> Option<i32> {
        let u = unit.trim();
        match self {
            Unit::Current => prefixed(u, &["A"]),
            Unit::Voltage => prefixed(u, &["V"]),
            Unit::Time => prefixed(u, &["s"]),
            Unit::Frequency => prefixed(u, &["Hz"]),
            Unit::Capacitance => prefixed(u, &["F"]),
            Unit::Inductance => prefixed(u, &["H"]),
            Unit::Resistance => prefixed(u, &["ohm", "Ohm", "Ω"]),
            Unit::Temperature => (u == "K").then_some(0),
            Unit::Length => prefixed(u, &["m"]),
            Unit::Area => u.strip_suffix("m^2").and_then(si_prefix).map(|p| 2 * p),
            Unit::NumberDensity => match u {
                "m^-3" => Some(0),
                "cm^-3" => Some(6),
                _ => None,
            },
            Unit::Mobility => match u {
                "m^2/(V*s)" => Some(0),
                "cm^2/(V*s)" => Some(-4),
                _ => None,
            },
            Unit::Conductivity => (u == "W/(m*K)").then_some(0),
            Unit::MassDensity => match u {
                "kg/m^3" => Some(0),
                "g/cm^3" => Some(3),
                _ => None,
            },
            Unit::SheetResistance => u
                .strip_suffix("/sq")
                .and_then(|r| prefixed(r, &["ohm", "Ohm", "Ω"])),
            Unit::ResistanceArea => (u == "K*m^2/W").then_some(0),
            Unit::SpecificHeatLinear => (u == "J/(kg*K^2)").then_some(0),
            Unit::SpecificHeatCubic => (u == "J/(kg*K^4)").then_some(0),
            Unit::Decibel => (u == "dB").then_some(0),
            Unit::Dimensionless | Unit::Count => (u.is_empty() || u == "1").then_some(0),
            Unit::Text => u.is_empty().then_some(0),
        }
    }
}

/// Layer names of the thermal stack, top to bottom.
pub const STACK_LAYERS: [&str; 4] = ["heater", "upper_spacer", "channel", "lower_spacer"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackSection {
    pub area: f64,
    pub t_bath: f64,
    pub substrate_resistance_area: f64,
    pub materials: [String; 4],
    pub thicknesses: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeuronSection {
    pub synapses: u32,
    pub template: SynapseConfig,
    /// `(synapse index, field) → value`
    pub overrides: BTreeMap<(u32, String), f64>,
    pub i_threshold: f64,
    pub tau_ref: f64,
    pub depth: f64,
    pub max_rate: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSection {
    pub zeta: f64,
    pub k_out: u32,
    pub link_loss_db: f64,
    pub detector_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub diode: DiodeParams,
    pub circuit: DriveCircuitParams,
    /// On-duration for single LED runs, s.
    pub t_on: f64,
    pub channel: ChannelSpec,
    pub stack: StackSection,
    pub materials: MaterialDb,
    pub ntron: NtronParams,
    pub threshold: ThresholdParams,
    pub neuron: NeuronSection,
    pub chain: ChainSection,
}

/// Mutable view of one configuration entry.
pub enum Slot<'a> {
    Real(&'a mut f64),
    Count(&'a mut u32),
    Text(&'a mut String),
}

fn synapse_unit(field: &str) -> Option<Unit> {
    Some(match field {
        "w" => Unit::Count,
        "L_si" => Unit::Inductance,
        "tau_si" | "dead_time" => Unit::Time,
        "c" => Unit::Dimensionless,
        _ => return None,
    })
}

impl RunConfig {
    /// Parses configuration text on top of the shipped defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::base();
        cfg.apply_text(DEFAULT_CONFIG)?;
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Struct defaults before any file is applied.
    fn base() -> Self {
        let stack = ThermalStack::from_db(
            &MaterialDb::default(),
            crate::htron::DEFAULT_AREA,
            crate::htron::DEFAULT_BATH,
        )
        .expect("default stack is valid");
        let neuron = NeuronConfig::default();
        Self {
            diode: DiodeParams::default(),
            circuit: DriveCircuitParams::default(),
            t_on: 10e-9,
            channel: ChannelSpec::default(),
            stack: StackSection {
                area: stack.area(),
                t_bath: stack.t_bath,
                substrate_resistance_area: 0.0,
                materials: stack.layers.clone().map(|l| l.material.name),
                thicknesses: stack.layers.clone().map(|l| l.thickness),
            },
            materials: MaterialDb::default(),
            ntron: NtronParams::default(),
            threshold: ThresholdParams::default(),
            neuron: NeuronSection {
                synapses: 1,
                template: SynapseConfig::default(),
                overrides: BTreeMap::new(),
                i_threshold: neuron.i_threshold,
                tau_ref: neuron.tau_ref,
                depth: neuron.depth,
                max_rate: neuron.max_rate,
                t_end: 2e-6,
            },
            chain: ChainSection {
                zeta: 10.0,
                k_out: 1000,
                link_loss_db: 0.0,
                detector_efficiency: 1.0,
            },
        }
    }

    /// Applies `section.key = value unit` lines.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let rest = rest.trim();
            let (value, unit) = match rest.split_once(char::is_whitespace) {
                Some((v, u)) => (v, u.trim()),
                None => (rest, ""),
            };
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("{key}: missing value"),
                });
            }
            self.set_str(key, value, unit)?;
        }
        Ok(())
    }

    /// Sets `path` from a textual value and unit.
    pub fn set_str(&mut self, path: &str, value: &str, unit: &str) -> Result<(), ConfigError> {
        let (kind, slot) = self
            .slot(path)
            .ok_or_else(|| ConfigError::UnknownParameter(path.to_string()))?;
        let si = |v: f64| kind.to_si(v, unit);
        kind.exponent(unit).ok_or_else(|| ConfigError::Unit {
            path: path.to_string(),
            unit: unit.to_string(),
            expected: kind.name(),
        })?;
        let invalid = |m: &str| ConfigError::Invalid {
            path: path.to_string(),
            message: m.to_string(),
        };
        match slot {
            Slot::Text(s) => *s = value.to_string(),
            Slot::Real(x) => {
                let v: f64 = value.parse().map_err(|_| invalid("expected a number"))?;
                if !v.is_finite() {
                    return Err(invalid("value must be finite"));
                }
                *x = si(v).expect("unit checked above");
            }
            Slot::Count(n) => {
                *n = value.parse().map_err(|_| invalid("expected a non-negative integer"))?;
            }
        }
        Ok(())
    }

    /// Sets `path` to an SI value.
    pub fn set(&mut self, path: &str, value: f64) -> Result<(), ConfigError> {
        let (_, slot) = self
            .slot(path)
            .ok_or_else(|| ConfigError::UnknownParameter(path.to_string()))?;
        let invalid = |m: &str| ConfigError::Invalid {
            path: path.to_string(),
            message: m.to_string(),
        };
        match slot {
            Slot::Real(x) => *x = value,
            Slot::Count(n) => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(invalid("expected a non-negative integer"));
                }
                *n = value as u32;
            }
            Slot::Text(_) => return Err(invalid("not a numeric parameter")),
        }
        Ok(())
    }

    /// Current SI value of a numeric parameter.
    pub fn get(&mut self, path: &str) -> Result<f64, ConfigError> {
        match self.slot(path) {
            Some((_, Slot::Real(x))) => Ok(*x),
            Some((_, Slot::Count(n))) => Ok(*n as f64),
            Some((_, Slot::Text(_))) => Err(ConfigError::Invalid {
                path: path.to_string(),
                message: "not a numeric parameter".into(),
            }),
            None => Err(ConfigError::UnknownParameter(path.to_string())),
        }
    }

    /// Dimension of the parameter at `path`.
    pub fn unit_of(&self, path: &str) -> Option<Unit> {
        self.clone().slot(path).map(|(u, _)| u)
    }

    /// Whether `path` names a parameter.
    pub fn has(&self, path: &str) -> bool {
        self.clone().slot(path).is_some()
    }

    /// Resolves a dotted path to its storage and dimension.
    pub fn slot(&mut self, path: &str) -> Option<(Unit, Slot<'_>)> {

        use Unit::*;
        let parts: Vec<&str> = path.split('.').collect();
        let d = &mut self.diode;
        let c = &mut self.circuit;
        Some(match parts.as_slice() {
            ["diode", "N_a"] => (NumberDensity, Slot::Real(&mut d.acceptor_density)),
            ["diode", "N_d"] => (NumberDensity, Slot::Real(&mut d.donor_density)),
            ["diode", "n_i"] => (NumberDensity, Slot::Real(&mut d.intrinsic_density)),
            ["diode", "tau_np"] => (Time, Slot::Real(&mut d.tau_np)),
            ["diode", "tau_pn"] => (Time, Slot::Real(&mut d.tau_pn)),
            ["diode", "mu_pp"] => (Mobility, Slot::Real(&mut d.mu_pp)),
            ["diode", "mu_pn"] => (Mobility, Slot::Real(&mut d.mu_pn)),
            ["diode", "mu_nn"] => (Mobility, Slot::Real(&mut d.mu_nn)),
            ["diode", "mu_np"] => (Mobility, Slot::Real(&mut d.mu_np)),
            ["diode", "T"] => (Temperature, Slot::Real(&mut d.temperature)),
            ["diode", "A"] => (Area, Slot::Real(&mut d.area)),
            ["diode", "C"] => (Capacitance, Slot::Real(&mut d.capacitance)),
            ["diode", "eta_qe"] => (Dimensionless, Slot::Real(&mut d.eta_qe)),
            ["diode", "eta_wg"] => (Dimensionless, Slot::Real(&mut d.eta_wg)),
            ["diode", "wavelength"] => (Length, Slot::Real(&mut d.wavelength)),

            ["circuit", "L_hT"] => (Inductance, Slot::Real(&mut c.inductance)),
            ["circuit", "r1"] => (Resistance, Slot::Real(&mut c.r1)),
            ["circuit", "I_LED"] => (Current, Slot::Real(&mut c.i_led)),
            ["circuit", "quasi_static_threshold"] => (Dimensionless, Slot::Real(&mut c.quasi_static_threshold)),
            ["circuit", "t_on"] => (Time, Slot::Real(&mut self.t_on)),

            ["channel", "T_c"] => (Temperature, Slot::Real(&mut self.channel.t_c)),
            ["channel", "sheet_resistance"] => (SheetResistance, Slot::Real(&mut self.channel.sheet_resistance)),
            ["channel", "squares"] => (Dimensionless, Slot::Real(&mut self.channel.squares)),
            ["channel", "wire_width"] => (Length, Slot::Real(&mut self.channel.wire_width)),
            ["channel", "I_c"] => (Current, Slot::Real(&mut self.channel.critical_current)),

            ["stack", "area"] => (Area, Slot::Real(&mut self.stack.area)),
            ["stack", "T_g"] => (Temperature, Slot::Real(&mut self.stack.t_bath)),
            ["stack", "substrate_resistance_area"] => {
                (ResistanceArea, Slot::Real(&mut self.stack.substrate_resistance_area))
            }
            ["stack", layer, field] => {
                let i = STACK_LAYERS.iter().position(|l| l == layer)?;
                match *field {
                    "material" => (Text, Slot::Text(&mut self.stack.materials[i])),
                    "thickness" => (Length, Slot::Real(&mut self.stack.thicknesses[i])),
                    _ => return None,
                }
            }

            ["material", name, field] => {
                let m: &mut MaterialProps = self.materials.get_mut(name).ok()?;
                match *field {
                    "density" => (MassDensity, Slot::Real(&mut m.density)),
                    "thermal_conductivity" => (Conductivity, Slot::Real(&mut m.thermal_conductivity)),
                    "cv_linear" => (SpecificHeatLinear, Slot::Real(&mut m.cv_linear)),
                    "cv_cubic" => (SpecificHeatCubic, Slot::Real(&mut m.cv_cubic)),
                    _ => return None,
                }
            }

            ["ntron", "channel_current"] => (Current, Slot::Real(&mut self.ntron.channel_current)),
            ["ntron", "gate_critical_current"] => (Current, Slot::Real(&mut self.ntron.gate_critical_current)),
            ["ntron", "load_resistance"] => (Resistance, Slot::Real(&mut self.ntron.load_resistance)),
            ["ntron", "L_nT"] => (Inductance, Slot::Real(&mut self.ntron.channel_inductance)),
            ["ntron", "recovery_time"] => (Time, Slot::Real(&mut self.ntron.recovery_time)),
            ["ntron", "rise_time"] => (Time, Slot::Real(&mut self.ntron.rise_time)),
            ["ntron", "drive_plateau"] => (Time, Slot::Real(&mut self.ntron.drive_plateau)),

            ["threshold", "jtl_Ic"] => (Current, Slot::Real(&mut self.threshold.jtl_junction_ic)),
            ["threshold", "pre_ro_Ic"] => (Current, Slot::Real(&mut self.threshold.pre_ro_junction_ic)),
            ["threshold", "ro_Ic"] => (Current, Slot::Real(&mut self.threshold.ro_junction_ic)),
            ["threshold", "ro_bias"] => (Current, Slot::Real(&mut self.threshold.ro_bias)),
            ["threshold", "L1"] => (Inductance, Slot::Real(&mut self.threshold.l1)),
            ["threshold", "r1"] => (Resistance, Slot::Real(&mut self.threshold.r1)),
            ["threshold", "r2"] => (Resistance, Slot::Real(&mut self.threshold.r2)),

            ["neuron", "synapses"] => (Count, Slot::Count(&mut self.neuron.synapses)),
            ["neuron", "I_threshold"] => (Current, Slot::Real(&mut self.neuron.i_threshold)),
            ["neuron", "tau_ref"] => (Time, Slot::Real(&mut self.neuron.tau_ref)),
            ["neuron", "depth"] => (Dimensionless, Slot::Real(&mut self.neuron.depth)),
            ["neuron", "max_rate"] => (Frequency, Slot::Real(&mut self.neuron.max_rate)),
            ["neuron", "t_end"] => (Time, Slot::Real(&mut self.neuron.t_end)),
            ["neuron", "synapse", field] => {
                let t = &mut self.neuron.template;
                match *field {
                    "w" => (Count, Slot::Count(&mut t.w)),
                    "L_si" => (Inductance, Slot::Real(&mut t.l_si)),
                    "tau_si" => (Time, Slot::Real(&mut t.tau_si)),
                    "c" => (Dimensionless, Slot::Real(&mut t.c)),
                    "dead_time" => (Time, Slot::Real(&mut t.dead_time)),
                    _ => return None,
                }
            }
            ["neuron", "synapse", index, field] => {
                let i: u32 = index.parse().ok()?;
                let unit = synapse_unit(field)?;
                let init = template_value(&self.neuron.template, field);
                let v = self
                    .neuron
                    .overrides
                    .entry((i, field.to_string()))
                    .or_insert(init);
                // Counts are stored as reals here and checked when built.
                (if unit == Count { Dimensionless } else { unit }, Slot::Real(v))
            }

            ["chain", "zeta"] => (Dimensionless, Slot::Real(&mut self.chain.zeta)),
            ["chain", "k_out"] => (Count, Slot::Count(&mut self.chain.k_out)),
            ["chain", "link_loss"] => (Decibel, Slot::Real(&mut self.chain.link_loss_db)),
            ["chain", "detector_efficiency"] => (Dimensionless, Slot::Real(&mut self.chain.detector_efficiency)),
            _ => return None,
        })
    }

    /// Every parameter path, in file order.
    pub fn parameter_paths(&self) -> Vec<String> {
        DEFAULT_CONFIG
            .lines()
            .filter_map(|l| l.split('#').next())
            .filter_map(|l| l.split_once('='))
            .map(|(k, _)| k.trim().to_string())
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |section: &str| {
            let section = section.to_string();
            move |e: &dyn std::fmt::Display| ConfigError::Invalid {
                path: section.clone(),
                message: e.to_string(),
            }
        };
        self.diode.validate().map_err(|e| wrap("diode")(&e))?;
        self.led_circuit().validate().map_err(|e| wrap("circuit")(&e))?;
        if !(self.t_on > 0.0) {
            return Err(wrap("circuit.t_on")(&"must be positive"));
        }
        self.channel
            .validate(self.stack.t_bath)
            .map_err(|e| wrap("channel")(&e))?;
        self.thermal_stack()?;
        self.ntron.validate().map_err(|e| wrap("ntron")(&e))?;
        self.threshold.validate().map_err(|e| wrap("threshold")(&e))?;
        self.neuron_config()?
            .validate()
            .map_err(|e| wrap("neuron")(&e))?;
        if !(self.neuron.t_end > 0.0) {
            return Err(wrap("neuron.t_end")(&"must be positive"));
        }
        let ch = &self.chain;
        if !(ch.zeta >= 1.0) {
            return Err(wrap("chain.zeta")(&"must be at least 1"));
        }
        if ch.k_out < 1 {
            return Err(wrap("chain.k_out")(&"must be at least 1"));
        }
        if !(ch.link_loss_db >= 0.0) {
            return Err(wrap("chain.link_loss")(&"must be non-negative"));
        }
        if !(ch.detector_efficiency > 0.0 && ch.detector_efficiency <= 1.0) {
            return Err(wrap("chain.detector_efficiency")(&"must lie in (0, 1]"));
        }
        Ok(())
    }

    /// LED drive circuit with the channel's normal resistance.
    pub fn led_circuit(&self) -> DriveCircuitParams {
        DriveCircuitParams {
            r_normal: self.channel.r_normal(),
            ..self.circuit.clone()
        }
    }

    pub fn thermal_stack(&self) -> Result<ThermalStack, ConfigError> {
        let layers = (0..4)
            .map(|i| {
                let m = self.materials.get(&self.stack.materials[i]).map_err(|e| ConfigError::Invalid {
                    path: format!("stack.{}.material", STACK_LAYERS[i]),
                    message: e.to_string(),
                })?;
                Ok(Layer::new(m.clone(), self.stack.thicknesses[i], self.stack.area))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let stack = build_stack(layers, self.stack.t_bath)
            .map_err(|e| ConfigError::Invalid {
                path: "stack".into(),
                message: e.to_string(),
            })?
            .with_substrate_resistance_area(self.stack.substrate_resistance_area);
        stack.validate().map_err(|e| ConfigError::Invalid {
            path: "stack".into(),
            message: e.to_string(),
        })?;
        Ok(stack)
    }

    pub fn neuron_config(&self) -> Result<NeuronConfig, ConfigError> {
        let n = &self.neuron;
        let mut synapses = vec![n.template.clone(); n.synapses as usize];
        for ((i, field), &v) in &n.overrides {
            let path = format!("neuron.synapse.{i}.{field}");
            let s = synapses
                .get_mut(*i as usize)
                .ok_or_else(|| ConfigError::UnknownParameter(path.clone()))?;
            match field.as_str() {
                "w" => {
                    if !(v >= 0.0 && v.fract() == 0.0) {
                        return Err(ConfigError::Invalid {
                            path,
                            message: "expected a non-negative integer".into(),
                        });
                    }
                    s.w = v as u32;
                }
                "L_si" => s.l_si = v,
                "tau_si" => s.tau_si = v,
                "c" => s.c = v,
                "dead_time" => s.dead_time = v,
                _ => return Err(ConfigError::UnknownParameter(path)),
            }
        }
        Ok(NeuronConfig {
            synapses,
            i_threshold: n.i_threshold,
            tau_ref: n.tau_ref,
            depth: n.depth,
            max_rate: n.max_rate,
        })
    }

    pub fn chain_config(&self) -> Result<ChainConfig, ConfigError> {
        Ok(ChainConfig {
            threshold: self.threshold.clone(),
            ntron: self.ntron.clone(),
            stack: self.thermal_stack()?,
            channel: self.channel.clone(),
            diode: self.diode.clone(),
            circuit: self.led_circuit(),
            zeta: self.chain.zeta,
            k_out: self.chain.k_out,
            square_channel_override: None,
        })
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration always serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn template_value(t: &SynapseConfig, field: &str) -> f64 {
    match field {
        "w" => t.w as f64,
        "L_si" => t.l_si,
        "tau_si" => t.tau_si,
        "c" => t.c,
        _ => t.dead_time,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::parse("").expect("shipped defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_load() {
        let cfg = RunConfig::default();
        assert_relative_eq!(cfg.diode.acceptor_density, 5e25, max_relative = 1e-12);
        assert_relative_eq!(cfg.diode.area, 1e-12, max_relative = 1e-12);
        assert_relative_eq!(cfg.diode.capacitance, 10e-15, max_relative = 1e-12);
        assert_relative_eq!(cfg.channel.r_normal(), 800e3, max_relative = 1e-12);
        assert_relative_eq!(cfg.stack.area, 5.4e-6 * 5.4e-6, max_relative = 1e-9);
        assert_relative_eq!(cfg.ntron.tau(), 50e-9, max_relative = 1e-12);
        assert_eq!(cfg.neuron_config().unwrap().synapses.len(), 3);
        assert_relative_eq!(cfg.chain.link_loss_db, 3.0);
    }

    #[test]
    fn defaults_agree_with_module_defaults() {
        let cfg = RunConfig::default();
        let d = DiodeParams::default();
        assert_relative_eq!(cfg.diode.saturation_current(), d.saturation_current(), max_relative = 1e-12);
        assert_eq!(cfg.channel, ChannelSpec::default());
        assert_eq!(cfg.threshold, ThresholdParams::default());
        let n = NtronParams::default();
        assert_relative_eq!(cfg.ntron.channel_inductance, n.channel_inductance, max_relative = 1e-12);
        assert_eq!(cfg.materials, MaterialDb::default());
    }

    #[test]
    fn units_are_converted() {
        let cfg = RunConfig::parse("diode.C = 0.1 pF\ncircuit.I_LED = 0.02 mA\nstack.T_g = 4.0 K").unwrap();
        assert_relative_eq!(cfg.diode.capacitance, 100e-15, max_relative = 1e-12);
        assert_relative_eq!(cfg.circuit.i_led, 20e-6, max_relative = 1e-12);
        assert_eq!(cfg.stack.t_bath, 4.0);
        assert_eq!(Unit::Area.exponent("um^2"), Some(-12));
        assert_eq!(Unit::SheetResistance.scale("kohm/sq"), Some(1e3));
        assert_eq!(Unit::Mobility.to_si(450.0, "cm^2/(V*s)"), Some(0.045));
        assert_eq!(Unit::Length.to_si(100.0, "nm"), Some(100e-9));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_units() {
        assert_eq!(
            RunConfig::parse("diode.bogus = 1").unwrap_err(),
            ConfigError::UnknownParameter("diode.bogus".into())
        );
        assert_eq!(
            RunConfig::parse("diode.bogus = 1").unwrap_err().to_string(),
            "unknown parameter diode.bogus"
        );
        assert!(matches!(
            RunConfig::parse("diode.C = 10 nH").unwrap_err(),
            ConfigError::Unit { .. }
        ));
        assert!(matches!(
            RunConfig::parse("diode.C = 10").unwrap_err(),
            ConfigError::Unit { .. }
        ));
        assert!(matches!(RunConfig::parse("just words").unwrap_err(), ConfigError::Syntax { .. }));
        assert!(matches!(
            RunConfig::parse("diode.eta_qe = 2").unwrap_err(),
            ConfigError::Invalid { .. }
        ));
        assert!(RunConfig::parse("material.Nb.density = 1 kg/m^3").is_err());
    }

    #[test]
    fn synapse_overrides() {
        let cfg = RunConfig::parse("neuron.synapse.1.w = 3\nneuron.synapse.2.c = -0.5\nneuron.synapse.tau_si = 100 ns").unwrap();
        let n = cfg.neuron_config().unwrap();
        assert_eq!(n.synapses[0].w, 1);
        assert_eq!(n.synapses[1].w, 3);
        assert_eq!(n.synapses[2].c, -0.5);
        assert!(n.synapses.iter().all(|s| s.tau_si == 100e-9));
        assert!(RunConfig::parse("neuron.synapse.7.w = 1").is_err());
    }

    #[test]
    fn every_default_path_resolves() {
        let mut cfg = RunConfig::default();
        let paths = cfg.parameter_paths();
        assert!(paths.len() > 60);
        for p in paths {
            assert!(cfg.slot(&p).is_some(), "{p}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set("diode.C", 1e-15).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(b.get("diode.C").unwrap(), 1e-15);
        assert!(b.set("nope.x", 1.0).is_err());
    }
}
