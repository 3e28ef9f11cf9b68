//! Thermal switching of the hTron channel under square and nTron gate drive.

use soen_transmitter::drive::{
    drive_thermal, required_tau_for_ton, square_duration_for_ton, PulseShape,
};
use soen_transmitter::config::RunConfig;
use soen_transmitter::htron::steady_state_power_density;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    let stack = cfg.thermal_stack()?;
    let bare = stack.clone().with_substrate_resistance_area(0.0);
    let (channel, ntron) = (cfg.channel.clone(), cfg.ntron.clone());

    let p_bare = steady_state_power_density(&bare, &channel) * 1e-3; // nW/µm²
    let p_cal = steady_state_power_density(&stack, &channel) * 1e-3;
    println!("steady-state power density: {p_bare:.1} nW/um^2 (bare), {p_cal:.1} nW/um^2 (with substrate)");

    let square = PulseShape::Square { t_start: 0.0, duration: 20e-9, amplitude: 1.2e-3 };
    let run = drive_thermal(&stack, &channel, square, ntron.load_resistance)?;
    println!("14.4 uW square drive: channel normal after {:.2} ns", run.switch_time.unwrap_or(f64::NAN) * 1e9);

    println!("\n tau_nT (ns)   t_> (ns)   gate energy (fJ)");
    for tau in [5e-9, 10e-9, 30e-9, 50e-9, 100e-9, 300e-9] {
        let n = ntron.clone().with_tau(tau);
        let run = drive_thermal(&stack, &channel, n.pulse(0.0), n.load_resistance)?;
        println!("{:>10.0} {:>10.2} {:>16.1}", tau * 1e9, run.time_above_tc * 1e9, run.gate_energy * 1e15);
    }

    println!("\n t_> (ns)   tau_nT (ns)   ratio   square (ns)   E_exp/E_square");
    for t_on in [2e-9, 5e-9, 10e-9, 20e-9, 50e-9] {
        let tau = required_tau_for_ton(&stack, &channel, &ntron, t_on)?;
        let d = square_duration_for_ton(&stack, &channel, 1.2e-3, ntron.load_resistance, t_on)?;
        let e_exp = ntron.clone().with_tau(tau).pulse(0.0).energy(ntron.load_resistance);
        let e_sq = 1.2e-3f64.powi(2) * ntron.load_resistance * d;
        println!(
            "{:>8.1} {:>12.2} {:>7.2} {:>13.2} {:>16.2}",
            t_on * 1e9, tau * 1e9, tau / t_on, d * 1e9, e_exp / e_sq
        );
    }
    Ok(())
}
