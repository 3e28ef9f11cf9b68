//! Loading a run configuration from text, reading values back in SI and
//! reporting a bad line.

use soen_transmitter::config::RunConfig;

const RUN: &str = "
# faster LED, bigger fan-out
circuit.t_on = 4 ns
circuit.I_LED = 15 uA
diode.C = 3 fF
chain.k_out = 2000
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::parse(RUN)?;
    for path in ["circuit.t_on", "circuit.I_LED", "diode.C", "ntron.L_nT"] {
        let unit = cfg.unit_of(path).map(|u| u.name()).unwrap_or("");
        println!("{path:<16} {:>10.3e}  ({unit})", cfg.get(path)?);
    }
    println!("{} settable parameters, hash {}", cfg.parameter_paths().len(), &cfg.hash()[..12]);

    for bad in ["circuit.I_LED = 10 uV", "diode.colour = 3", "chain.k_out = 2.5"] {
        match RunConfig::parse(bad) {
            Ok(_) => println!("accepted: {bad}"),
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
