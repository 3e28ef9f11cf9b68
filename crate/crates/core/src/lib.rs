pub mod calibrate;
pub mod chain;
pub mod cli;
pub mod config;
pub mod constants;
pub mod diode;
pub mod drive;
pub mod htron;
pub mod neuron;
pub mod ode;
pub mod sweep;
pub mod validation;
