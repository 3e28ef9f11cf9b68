//! Photon delivery to downstream synapses and the amplifier energy budget.

use soen_transmitter::chain::{amplifier_energy, delivery_reliability, sample_zero_fraction};
use soen_transmitter::drive::inductor_geometry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k_out = 1000;
    println!("  N_ph     lambda     p_zero   sampled (1e6 trials)");
    for n in [1e3, 3e3, 5e3, 1e4, 2e4] {
        let d = delivery_reliability(n, k_out, 0.0, 1.0)?;
        let s = sample_zero_fraction(d.lambda, 1_000_000, 1)?;
        println!("{n:>6.0} {:>10.2} {:>10.3e} {:>10.3e}", d.lambda, d.p_zero, s);
    }

    let d = delivery_reliability(1e4, k_out, 3.0, 0.7)?;
    println!("\n3 dB link, 70% detector: lambda {:.2}, p_zero {:.3e}", d.lambda, d.p_zero);

    println!("\n eta_amp   E_amp for 10 photons to each synapse (fJ)");
    for eta in [1e-4, 1e-3, 1e-2] {
        let e = amplifier_energy(10.0 * k_out as f64, 1.0, eta, 1.22e-6)?;
        println!("{eta:>8.0e} {:>12.1}", e * 1e15);
    }

    println!("\n L (nH)   squares   area at 10 um width (mm^2)");
    for l_target in [100e-9, 500e-9, 1e-6] {
        let l = inductor_geometry(l_target, 180e-12, 10e-6)?;
        println!("{:>7.0} {:>9} {:>12.3}", l_target * 1e9, l.squares, l.area * 1e6);
    }
    Ok(())
}
