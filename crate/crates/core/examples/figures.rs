//! Regenerates every figure dataset as CSV and prints the headline numbers.
//!
//!     cargo run --release --example figures -- [out_dir]

use soen_transmitter::config::RunConfig;
use soen_transmitter::diode::forward_voltage;
use soen_transmitter::sweep::{fig4c_slopes, figure_dataset, linear_fit, FIGURES};
use std::fs::File;
use std::path::PathBuf;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    let cfg = RunConfig::default();
    for id in FIGURES {
        let start = Instant::now();
        let table = figure_dataset(id, &cfg, None)?;
        let path = dir.join(format!("{id}.csv"));
        table.write_csv(File::create(&path)?)?;
        println!(
            "{id}: {} rows, {} failed, {:.1} s -> {}",
            table.rows.len(),
            table.failures(),
            start.elapsed().as_secs_f64(),
            path.display()
        );
        match id {
            "fig4c" => {
                let v_f = forward_voltage(&cfg.diode, cfg.circuit.i_led)?;
                for (c, slope) in fig4c_slopes(&table, 10e-9, v_f) {
                    println!("    C = {c:>5} fF: {slope:.0} photons/uA");
                }
            }
            "fig6a" => {
                let x = table.column("t_above_ns").unwrap();
                let y = table.column("tau_nT_ns").unwrap();
                let (_, b) = linear_fit(&x, &y).unwrap();
                println!("    tau_nT vs t_> slope {b:.2}");
                for r in &table.rows {
                    println!("    t_> {:>4} ns  tau_nT/t_> {:.2}  E_exp/E_square {:.2}", r[0], r[2], r[6]);
                }
            }
            "fig7" => {
                for r in table.rows.iter().filter(|r| r[2] == 1e4 || r[2] == 1e2) {
                    println!("    C {:>5} fF  eta_qe {:<5}  N {:>6}  eta_amp {:.2e}", r[0], r[1], r[2], r[8]);
                }
            }
            _ => {}
        }
    }
    Ok(())
}
