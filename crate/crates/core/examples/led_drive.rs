//! Square-pulse drive of the waveguide LED: photon yield, energy ledger and
//! the shortest pulse that reaches a photon target.

use soen_transmitter::config::RunConfig;
use soen_transmitter::diode::{forward_voltage, min_pulse_for_photons, square_pulse_run, DiodeParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let circuit = cfg.led_circuit();
    let v_f = forward_voltage(&cfg.diode, circuit.i_led)?;
    println!("forward voltage at {:.0} uA: {v_f:.4} V", circuit.i_led * 1e6);

    let (transient, r) = square_pulse_run(&cfg.diode, &circuit, cfg.t_on)?;
    let e = r.ledger;
    println!("\n{:.0} ns pulse, C = {:.0} fF", cfg.t_on * 1e9, cfg.diode.capacitance * 1e15);
    println!("  photons          {:.0}", r.photons);
    println!("  peak voltage     {:.4} V", r.peak_voltage);
    println!("  eta_RC           {:.3}", r.eta_rc);
    println!("  supplied         {:.1} fJ", e.supplied * 1e15);
    println!("  r1 / channel     {:.1} / {:.1} fJ", e.r1 * 1e15, e.channel * 1e15);
    println!("  junction         {:.1} fJ", e.junction * 1e15);
    println!("  left on C        {:.2} fJ", e.residual_capacitor * 1e15);
    println!("  samples          {}", transient.times().len());

    println!("\n N_ph    C (fF)   t_on (ns)   E (fJ)   eta_RC");
    for c in [1e-15, 10e-15, 100e-15] {
        let diode = DiodeParams { capacitance: c, ..cfg.diode.clone() };
        for n in [1e2, 1e3, 1e4] {
            let t = min_pulse_for_photons(&diode, &circuit, n)?;
            let (_, r) = square_pulse_run(&diode, &circuit, t)?;
            println!(
                "{:>5.0} {:>9.0} {:>11.2} {:>8.1} {:>8.3}",
                n, c * 1e15, t * 1e9, r.event_energy * 1e15, r.eta_rc
            );
        }
    }
    Ok(())
}
