//! One firing event through the whole transmitter: threshold, nTron, hTron, LED.

use soen_transmitter::chain::fire;
use soen_transmitter::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::default();
    for tau_ns in [30.0, 50.0, 100.0] {
        let mut chain = cfg.chain_config()?;
        chain.ntron = chain.ntron.with_tau(tau_ns * 1e-9);
        let r = fire(&chain)?;
        println!(
            "tau_nT {tau_ns:>5} ns  t_on {:6.2} ns  N_ph {:8.0}  eta_rc {:.3}  eta_amp {:.2e}  E_total {:.3e} J",
            r.t_on * 1e9,
            r.n_ph,
            r.eta_rc,
            r.eta_amp,
            r.e_total
        );
        if let Some(t) = r.timings {
            println!(
                "    trigger->nTron {:.1} ps, nTron->switch {:.2} ns, switch->first photon {:.3} ns",
                t.trigger_to_ntron * 1e12,
                t.ntron_to_switch * 1e9,
                t.switch_to_first_photon * 1e9
            );
        }
        for w in &r.warnings {
            println!("    warning: {w}");
        }
    }
    Ok(())
}
