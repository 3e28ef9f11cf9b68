//! A custom two-axis sweep run in parallel and written as CSV.

use soen_transmitter::config::RunConfig;
use soen_transmitter::sweep::{run_sweep, Axis, SweepSpec, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut base = RunConfig::default();
    base.set_str("circuit.t_on", "5", "ns")?;

    let spec = SweepSpec::new(
        Target::Led,
        vec![
            Axis::new("circuit.I_LED", [5e-6, 10e-6, 20e-6]),
            Axis::new("diode.C", [1e-15, 10e-15, 100e-15]),
        ],
    )
    .fix("diode.eta_qe", 0.02)
    .outputs(&["N_ph", "eta_rc"]);

    let table = run_sweep(&spec, &base, None)?;
    eprintln!("config {}", table.provenance.config_hash);
    table.write_csv(std::io::stdout())?;
    Ok(())
}
