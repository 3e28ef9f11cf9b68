//! Acceptance checks with pinned tolerances. Shared by the `validate`
//! subcommand and the acceptance test target.

use crate::calibrate::{calibrate_thermal, evaluate_anchors, CalibrationAnchors};
use crate::chain::{amplifier_energy, delivery_reliability, efficiency_point, fire};
use crate::config::RunConfig;
use crate::constants::ELEMENTARY_CHARGE;
use crate::diode::{forward_voltage, min_pulse_for_photons, simulate_led_drive, square_pulse_run, ResistanceSchedule};
use crate::drive::{
    drive_thermal, inductor_geometry, required_tau_for_ton, square_duration_for_ton, PulseShape,
};
use crate::htron::{energy_budget, simulate_thermal, steady_state_power_density, SquareHeat};
use crate::neuron::{run_neuron, NeuronConfig, SpikeTrain, SynapseConfig};
use crate::ode::{integrate, FnSystem, IntegratorConfig};
use crate::sweep::{fig4c_slopes, figure_dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

type CheckResult = Result<(bool, String), Box<dyn std::error::Error + Send + Sync>>;
type CheckFn = fn(&RunConfig) -> CheckResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:<4} {:<34} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// Every check, in order: `(id, name, function)`.
pub const CHECKS: [(&str, &str, CheckFn); 20] = [
    ("1a", "LED 10 fF, eta_qe 0.1", led_small),
    ("1b", "LED 100 fF, eta_qe 0.01", led_large),
    ("2", "photons per uA at 10 ns", led_slope),
    ("3", "forward voltage at 10 uA", diode_anchor),
    ("4a", "calibrated turn-on at 14.4 uW", htron_turn_on),
    ("4b", "t_> at tau_nT = 30 ns", htron_time_above),
    ("4c", "tau_nT/t_> over t_> 2..50 ns", htron_tau_ratio),
    ("5", "steady-state power density", steady_power),
    ("6", "exp/square gate energy at 10 ns", energy_ratio),
    ("7a", "N_ph at tau_nT = 50 ns", chain_50),
    ("7b", "N_ph at tau_nT = 100 ns", chain_100),
    ("7c", "eta_amp at eta_qe = 1e-3", chain_eta_amp),
    ("8a", "Poisson P_zero(5)", poisson_zero),
    ("8b", "amplifier energy literal", amplifier_literal),
    ("9", "1 uH meander footprint", inductor_area),
    ("10a", "LED charge conservation", led_charge),
    ("10b", "energy closure (LED, thermal)", energy_closure),
    ("10c", "RK4 convergence order", rk4_order),
    ("10d", "neuron vs 1 ps brute force", neuron_oracle),
    ("10e", "repeat runs byte-identical", determinism),
];

/// Wall-clock limit for the whole suite, s.
pub const SUITE_TIME_LIMIT: f64 = 180.0;

/// Runs one check, turning errors into failures.
pub fn run_check(id: &'static str, name: &'static str, f: CheckFn, cfg: &RunConfig) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f(cfg) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every check, then the suite-runtime check.
pub fn run_acceptance(cfg: &RunConfig, mut on_check: impl FnMut(&Check)) -> Vec<Check> {
    let start = Instant::now();
    let mut out = Vec::new();
    for (id, name, f) in CHECKS {
        let c = run_check(id, name, f, cfg);
        on_check(&c);
        out.push(c);
    }
    let total = start.elapsed().as_secs_f64();
    let c = Check {
        id: "10f",
        name: "suite runtime",
        passed: total < SUITE_TIME_LIMIT,
        detail: format!("{total:.1} s (limit {SUITE_TIME_LIMIT} s)"),
        seconds: 0.0,
    };
    on_check(&c);
    out.push(c);
    out
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn led_case(cfg: &RunConfig, c: f64, eta_qe: f64, t_ref: f64, e_ref: f64, eta_ref: Option<f64>) -> CheckResult {
    let mut cfg = cfg.clone();
    cfg.diode.capacitance = c;
    cfg.diode.eta_qe = eta_qe;
    cfg.circuit.i_led = 10e-6;
    let start = Instant::now();
    let circuit = cfg.led_circuit();
    let t = min_pulse_for_photons(&cfg.diode, &circuit, 1e4)?;
    let (_, r) = square_pulse_run(&cfg.diode, &circuit, t)?;
    let secs = start.elapsed().as_secs_f64();
    let mut ok = within(t, t_ref, 0.3) && within(r.event_energy, e_ref, 0.3) && secs < 5.0;
    let mut detail = format!(
        "t_min {:.2} ns (ref {:.1} +-30%), E {:.1} fJ (ref {:.0} +-30%)",
        t * 1e9,
        t_ref * 1e9,
        r.event_energy * 1e15,
        e_ref * 1e15
    );
    if let Some(eta) = eta_ref {
        ok &= (r.eta_rc - eta).abs() <= 0.10;
        detail += &format!(", eta_RC {:.3} (ref {eta} +-0.10)", r.eta_rc);
    }
    detail += &format!(", {secs:.2} s (< 5 s)");
    Ok((ok, detail))
}

fn led_small(cfg: &RunConfig) -> CheckResult {
    led_case(cfg, 10e-15, 0.1, 2.9e-9, 25e-15, Some(0.64))
}

fn led_large(cfg: &RunConfig) -> CheckResult {
    led_case(cfg, 100e-15, 0.01, 29e-9, 251e-15, None)
}

fn led_slope(cfg: &RunConfig) -> CheckResult {
    let mut cfg = cfg.clone();
    cfg.diode.eta_qe = 0.01;
    let table = figure_dataset("fig4c", &cfg, None)?;
    let v_f = forward_voltage(&cfg.diode, cfg.circuit.i_led)?;
    let slopes = fig4c_slopes(&table, 10e-9, v_f);
    let oracle = 0.01 * 10e-9 / ELEMENTARY_CHARGE * 1e-6;
    let ok = slopes.len() == 5
        && slopes
            .iter()
            .all(|&(_, s)| (520.0..=680.0).contains(&s) && within(s, oracle, 0.10));
    let list: Vec<String> = slopes.iter().map(|(c, s)| format!("{c} fF: {s:.0}")).collect();
    Ok((
        ok,
        format!("{} (range 520..680, oracle {oracle:.0} +-10%)", list.join(", ")),
    ))
}

fn diode_anchor(cfg: &RunConfig) -> CheckResult {
    let v = forward_voltage(&cfg.diode, 10e-6)?;
    Ok(((v - 1.0).abs() <= 0.05, format!("{v:.4} V (ref 1.00 +-0.05)")))
}

fn calibrated(cfg: &RunConfig) -> Result<crate::htron::ThermalStack, Box<dyn std::error::Error + Send + Sync>> {
    let stack = cfg.thermal_stack()?;
    let res = calibrate_thermal(&stack, &cfg.channel, &cfg.ntron, &CalibrationAnchors::default())?;
    Ok(res.apply_to_stack(&stack))
}

fn htron_turn_on(cfg: &RunConfig) -> CheckResult {
    let stack = calibrated(cfg)?;
    // 1.2 mA into 10 Ω is 14.4 µW.
    let amplitude = (14.4e-6 / cfg.ntron.load_resistance).sqrt();
    let pulse = PulseShape::Square {
        t_start: 0.0,
        duration: 20e-9,
        amplitude,
    };
    let t = drive_thermal(&stack, &cfg.channel, pulse, cfg.ntron.load_resistance)?.switch_time;
    Ok(match t {
        Some(t) => ((0.3e-9..=3e-9).contains(&t), format!("{:.3} ns (range 0.3..3)", t * 1e9)),
        None => (false, "channel never switched".into()),
    })
}

fn htron_time_above(cfg: &RunConfig) -> CheckResult {
    let stack = calibrated(cfg)?;
    let anchors = CalibrationAnchors::default();
    let v = evaluate_anchors(&stack, &cfg.channel, &cfg.ntron, &anchors)?;
    Ok((
        within(v.time_above, 4.7e-9, 0.5),
        format!("{:.3} ns (ref 4.7 +-50%)", v.time_above * 1e9),
    ))
}

fn htron_tau_ratio(cfg: &RunConfig) -> CheckResult {
    let stack = calibrated(cfg)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [2e-9, 5e-9, 10e-9, 20e-9, 50e-9] {
        let tau = required_tau_for_ton(&stack, &cfg.channel, &cfg.ntron, t)?;
        let ratio = tau / t;
        ok &= (5.0..=20.0).contains(&ratio);
        parts.push(format!("{:.0} ns: {ratio:.2}", t * 1e9));
    }
    Ok((ok, format!("{} (range 5..20)", parts.join(", "))))
}

fn steady_power(cfg: &RunConfig) -> CheckResult {
    // The layer stack alone, without the fitted substrate resistance.
    let bare = cfg.thermal_stack()?.with_substrate_resistance_area(0.0);
    let p = steady_state_power_density(&bare, &cfg.channel) * 1e-3;
    let full = steady_state_power_density(&cfg.thermal_stack()?, &cfg.channel) * 1e-3;
    let bound = 400.0 * (1.0 - 1e-12);
    let ok = p >= bound && (494.0 / 2.0..=494.0 * 2.0).contains(&p);
    Ok((
        ok,
        format!("{p:.1} nW/um^2 (494 within x2, >= 400); with substrate {full:.1}"),
    ))
}

fn energy_ratio(cfg: &RunConfig) -> CheckResult {
    let stack = cfg.thermal_stack()?;
    let n = &cfg.ntron;
    let t = 10e-9;
    let tau = required_tau_for_ton(&stack, &cfg.channel, n, t)?;
    let d = square_duration_for_ton(&stack, &cfg.channel, n.channel_current, n.load_resistance, t)?;
    let e_exp = n.clone().with_tau(tau).pulse(0.0).energy(n.load_resistance);
    let e_sq = n.channel_current.powi(2) * n.load_resistance * d;
    let r = e_exp / e_sq;
    Ok((
        (3.0..=30.0).contains(&r),
        format!(
            "{r:.3} (range 3..30); tau_nT {:.1} ns, square {:.2} ns",
            tau * 1e9,
            d * 1e9
        ),
    ))
}

fn fire_at(cfg: &RunConfig, tau: f64) -> Result<f64, Box<dyn std::error::Error + Send + Sync>> {
    let mut c = cfg.chain_config()?;
    c.diode.capacitance = 10e-15;
    c.diode.eta_qe = 0.01;
    c.ntron = c.ntron.with_tau(tau);
    Ok(fire(&c)?.n_ph)
}

fn chain_50(cfg: &RunConfig) -> CheckResult {
    let n = fire_at(cfg, 50e-9)?;
    Ok((n > 3000.0, format!("{n:.0} (> 3000)")))
}

fn chain_100(cfg: &RunConfig) -> CheckResult {
    let n = fire_at(cfg, 100e-9)?;
    Ok((within(n, 1e4, 0.3), format!("{n:.0} (1e4 +-30%)")))
}

fn chain_eta_amp(cfg: &RunConfig) -> CheckResult {
    let mut ok = true;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for c in [1e-15, 10e-15] {
        let mut chain = cfg.chain_config()?;
        chain.diode.capacitance = c;
        chain.diode.eta_qe = 1e-3;
        for n in [300.0, 1e3, 3e3, 1e4] {
            let eta = efficiency_point(&chain, n)?.eta_amp;
            ok &= (3e-5..=3e-4).contains(&eta);
            lo = lo.min(eta);
            hi = hi.max(eta);
        }
    }
    Ok((ok, format!("{lo:.2e}..{hi:.2e} over N 300..1e4, C 1..10 fF (range 3e-5..3e-4)")))
}

fn poisson_zero(_: &RunConfig) -> CheckResult {
    let d = delivery_reliability(5.0, 1, 0.0, 1.0)?;
    let err = (d.p_zero - (-5.0f64).exp()).abs();
    Ok((err <= 1e-12, format!("|P_zero - e^-5| = {err:.1e} (<= 1e-12)")))
}

fn amplifier_literal(_: &RunConfig) -> CheckResult {
    let e = amplifier_energy(1e4, 10.0, 1e-4, 1.22e-6)?;
    Ok((within(e, 1.63e-10, 0.01), format!("{e:.4e} J (ref 1.63e-10 +-1%)")))
}

fn inductor_area(_: &RunConfig) -> CheckResult {
    let g = inductor_geometry(1e-6, 180e-12, 10e-6)?;
    let a = g.area * 1e6;
    Ok((within(a, 0.6, 0.15), format!("{a:.3} mm^2, {} squares (ref 0.6 +-15%)", g.squares)))
}

fn led_runs(cfg: &RunConfig) -> Result<Vec<crate::diode::LedTransient>, Box<dyn std::error::Error + Send + Sync>> {
    let circuit = cfg.led_circuit();
    let mut out = Vec::new();
    for (c, on) in [(1e-15, 2e-9), (10e-15, 3e-9), (10e-15, 20e-9), (100e-15, 30e-9)] {
        let d = crate::diode::DiodeParams {
            capacitance: c,
            ..cfg.diode.clone()
        };
        let schedule = ResistanceSchedule::square(0.5e-9, on, circuit.r_normal);
        out.push(simulate_led_drive(&d, &circuit, &schedule, (0.0, on + 2e-9))?);
    }
    Ok(out)
}

fn led_charge(cfg: &RunConfig) -> CheckResult {
    let mut worst: f64 = 0.0;
    for tr in led_runs(cfg)? {
        let (q_in, q1, qpn, qc) = tr.charge_budget();
        worst = worst.max(((q1 + qpn + qc) - q_in).abs() / q_in);
    }
    Ok((worst <= 0.005, format!("worst relative imbalance {worst:.2e} (<= 0.5%)")))
}

fn energy_closure(cfg: &RunConfig) -> CheckResult {
    let mut led: f64 = 0.0;
    for tr in led_runs(cfg)? {
        let e = tr.energy();
        let rhs = e.dissipated() + e.capacitor_change + e.inductor_change;
        led = led.max((e.supplied - rhs).abs() / e.supplied.abs().max(e.dissipated()));
    }
    let stack = cfg.thermal_stack()?;
    let mut th: f64 = 0.0;
    for (p, d) in [(14.4e-6, 3e-9), (5e-6, 20e-9), (30e-6, 1e-9)] {
        let heat = SquareHeat {
            start: 0.0,
            duration: d,
            power: p,
        };
        let series = simulate_thermal(&stack, &heat, (0.0, d + 30e-9))?;
        let (e_in, du, e_bath) = energy_budget(&stack, &series);
        th = th.max((e_in - du - e_bath).abs() / e_in);
    }
    Ok((
        led <= 0.01 && th <= 0.01,
        format!("LED {led:.2e}, thermal {th:.2e} (<= 1%)"),
    ))
}

fn rk4_order(_: &RunConfig) -> CheckResult {
    // Harmonic oscillator over one period, exact solution (cos, −sin).
    let sys = FnSystem::new(2, |_t, y: &[f64], d: &mut [f64]| {
        d[0] = y[1];
        d[1] = -y[0];
    });
    let t_end = std::f64::consts::TAU;
    let mut errs = Vec::new();
    for n in [20, 40, 80, 160] {
        let s = integrate(&sys, &[1.0, 0.0], (0.0, t_end), &IntegratorConfig::fixed(t_end / n as f64))?;
        let y = s.last_state().expect("non-empty");
        errs.push(((y[0] - t_end.cos()).powi(2) + (y[1] + t_end.sin()).powi(2)).sqrt());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = orders.iter().all(|&p| (3.8..=4.3).contains(&p));
    let list: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
    Ok((ok, format!("observed orders {} (3.8..4.3)", list.join(", "))))
}

/// Three synapses with distinct weights, time constants and couplings, and
/// 100 input spikes spread over 2 µs.
pub fn neuron_scenario() -> (NeuronConfig, Vec<SpikeTrain>, (f64, f64)) {
    let synapses = vec![
        SynapseConfig::default(),
        SynapseConfig {
            w: 2,
            tau_si: 100e-9,
            ..SynapseConfig::default()
        },
        SynapseConfig {
            c: 0.5,
            tau_si: 500e-9,
            dead_time: 35e-9,
            ..SynapseConfig::default()
        },
    ];
    // A deep refractory threshold makes some spikes fire between input
    // events as the threshold relaxes.
    let cfg = NeuronConfig {
        synapses,
        depth: 3.0,
        ..NeuronConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut trains = vec![Vec::new(); 3];
    for _ in 0..100 {
        let t: f64 = rng.gen_range(0.0..2e-6);
        trains[rng.gen_range(0..3)].push((t * 1e12).round() * 1e-12);
    }
    let trains = trains
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            v.dedup();
            SpikeTrain { times: v }
        })
        .collect();
    (cfg, trains, (0.0, 2.2e-6))
}

/// Reference neuron: fixed steps of `dt`, exact decay per step, inputs
/// applied at the end of the step containing them, threshold tested at the
/// end of every step.
pub fn brute_force_neuron(cfg: &NeuronConfig, inputs: &[SpikeTrain], t_span: (f64, f64), dt: f64) -> Vec<f64> {
    let n = cfg.synapses.len();
    let mut current = vec![0.0; n];
    let mut last_in: Vec<Option<f64>> = vec![None; n];
    let mut next = vec![0usize; n];
    let decay: Vec<f64> = cfg.synapses.iter().map(|s| (-dt / s.tau_si).exp()).collect();
    let mut last_out: Option<f64> = None;
    let mut out = Vec::new();
    let steps = ((t_span.1 - t_span.0) / dt).round() as usize;
    for k in 1..=steps {
        let t = t_span.0 + k as f64 * dt;
        for i in 0..n {
            current[i] *= decay[i];
            let s = &cfg.synapses[i];
            while let Some(&ts) = inputs[i].times.get(next[i]) {
                if ts > t {
                    break;
                }
                next[i] += 1;
                if last_in[i].map_or(true, |l| ts - l >= s.dead_time) {
                    last_in[i] = Some(ts);
                    current[i] += s.jump() * (-(t - ts) / s.tau_si).exp();
                }
            }
        }
        if last_out.map_or(false, |l| t - l < cfg.lockout() - 1e-15) {
            continue;
        }
        let ni: f64 = cfg.synapses.iter().zip(&current).map(|(s, i)| s.c * i).sum();
        let th = match last_out {
            Some(l) => cfg.i_threshold * (1.0 + cfg.depth * (-(t - l) / cfg.tau_ref).exp()),
            None => cfg.i_threshold,
        };
        if ni >= th {
            out.push(t);
            last_out = Some(t);
        }
    }
    out
}

fn neuron_oracle(_: &RunConfig) -> CheckResult {
    let (cfg, inputs, span) = neuron_scenario();
    let ev = run_neuron(&cfg, &inputs, span)?.output.times;
    let bf = brute_force_neuron(&cfg, &inputs, span, 1e-12);
    if ev.len() != bf.len() || ev.is_empty() {
        return Ok((false, format!("{} event-driven spikes vs {} brute force", ev.len(), bf.len())));
    }
    let worst = ev.iter().zip(&bf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((
        worst <= 10e-12,
        format!(
            "{} spikes ({} between input events), worst offset {:.2} ps (<= 10 ps)",
            ev.len(),
            ev.iter().filter(|t| !inputs.iter().any(|tr| tr.times.contains(t))).count(),
            worst * 1e12
        ),
    ))
}

fn determinism(cfg: &RunConfig) -> CheckResult {
    let run = |jobs| -> Result<String, Box<dyn std::error::Error + Send + Sync>> {
        let event = serde_json::to_string(&fire(&cfg.chain_config()?)?)?;
        let table = figure_dataset("fig4c", cfg, Some(jobs))?;
        let (ncfg, inputs, span) = neuron_scenario();
        let spikes = run_neuron(&ncfg, &inputs, span)?.output.times;
        Ok(format!("{event}\n{}\n{spikes:?}", table.to_csv_string()))
    };
    let a = run(1)?;
    let b = run(4)?;
    Ok((a == b, format!("{} bytes compared (serial vs 4 workers)", a.len())))
}
