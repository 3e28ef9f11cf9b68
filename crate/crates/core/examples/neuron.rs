//! Event-driven neuron fed by regular input trains; the output train is
//! written as CSV to stdout.

use soen_transmitter::neuron::{run_neuron, NeuronConfig, SpikeTrain, SynapseConfig};

fn regular(rate: f64, phase: f64, t_end: f64) -> SpikeTrain {
    let n = ((t_end - phase) * rate).floor() as usize;
    SpikeTrain::new((0..n).map(|k| phase + k as f64 / rate).collect()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = NeuronConfig {
        synapses: vec![
            SynapseConfig::default(),
            SynapseConfig { w: 2, tau_si: 100e-9, ..SynapseConfig::default() },
            // inhibitory
            SynapseConfig { c: -0.5, ..SynapseConfig::default() },
        ],
        ..NeuronConfig::default()
    };
    let t_end = 2e-6;
    let inputs = [
        regular(20e6, 0.0, t_end),
        regular(5e6, 13e-9, t_end),
        regular(2e6, 500e-9, t_end),
    ];
    let run = run_neuron(&cfg, &inputs, (0.0, t_end))?;

    for (k, (given, kept)) in inputs.iter().zip(&run.accepted_inputs).enumerate() {
        eprintln!("synapse {k}: {} spikes in, {} after dead time", given.len(), kept.len());
    }
    eprintln!("{} output spikes, lockout {:.0} ns", run.output.len(), 1e9 / cfg.max_rate);
    run.output.write_csv(std::io::stdout())?;
    Ok(())
}
