use proptest::prelude::*;
use soen_transmitter::config::RunConfig;
use soen_transmitter::diode::{square_pulse_run, DiodeParams, DriveCircuitParams};
use soen_transmitter::drive::{drive_thermal, NtronParams};
use soen_transmitter::htron::{simulate_thermal, ChannelSpec, SquareHeat, ThermalStack};
use soen_transmitter::neuron::{filter_dead_time, run_neuron, NeuronConfig, SpikeTrain, SynapseConfig};
use soen_transmitter::sweep::{run_sweep, Axis, SweepSpec, Target};

fn led(c: f64, eta_qe: f64, i_led: f64, t_on: f64) -> (f64, f64) {
    let cfg = RunConfig::default();
    let d = DiodeParams {
        capacitance: c,
        eta_qe,
        ..cfg.diode.clone()
    };
    let circuit = DriveCircuitParams {
        i_led,
        ..cfg.led_circuit()
    };
    let (_, r) = square_pulse_run(&d, &circuit, t_on).unwrap();
    (r.photons, r.eta_rc)
}

fn stack() -> (ThermalStack, ChannelSpec, NtronParams) {
    let cfg = RunConfig::default();
    (cfg.thermal_stack().unwrap(), cfg.channel, cfg.ntron)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn photons_grow_with_on_time(c in 1e-15..100e-15f64, t in 1e-9..40e-9f64, k in 1.05..2.0f64) {
        let (a, _) = led(c, 0.01, 10e-6, t);
        let (b, _) = led(c, 0.01, 10e-6, t * k);
        prop_assert!(b >= a, "{a} -> {b}");
    }

    #[test]
    fn photons_grow_with_bias(c in 1e-15..100e-15f64, i in 2e-6..20e-6f64, k in 1.05..2.0f64) {
        let (a, _) = led(c, 0.01, i, 10e-9);
        let (b, _) = led(c, 0.01, i * k, 10e-9);
        prop_assert!(b >= a, "{a} -> {b}");
    }

    #[test]
    fn photons_scale_with_quantum_efficiency(q in 1e-3..0.5f64, k in 1.05..2.0f64) {
        let (a, ea) = led(10e-15, q, 10e-6, 10e-9);
        let (b, eb) = led(10e-15, q * k, 10e-6, 10e-9);
        prop_assert!((b / a - k).abs() < 1e-9 * k);
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn circuit_efficiency_is_a_fraction(c in 1e-15..100e-15f64, i in 1e-6..30e-6f64, t in 0.5e-9..50e-9f64) {
        let (_, eta) = led(c, 0.01, i, t);
        prop_assert!(eta > 0.0 && eta <= 1.0, "{eta}");
    }

    #[test]
    fn heating_never_cools_below_bath(p in 1e-6..40e-6f64, d in 0.1e-9..20e-9f64) {
        let (s, _, _) = stack();
        let heat = SquareHeat { start: 0.0, duration: d, power: p };
        let series = simulate_thermal(&s, &heat, (0.0, d + 40e-9)).unwrap();
        for st in &series.states {
            for &t in &st[..4] {
                prop_assert!(t >= s.t_bath - 1e-8, "{t}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn time_above_grows_with_ntron_time_constant(tau in 10e-9..200e-9f64, k in 1.1..2.0f64) {
        let (s, ch, n) = stack();
        let run = |tau: f64| {
            let n = n.clone().with_tau(tau);
            drive_thermal(&s, &ch, n.pulse(0.0), n.load_resistance).unwrap().time_above_tc
        };
        let (a, b) = (run(tau), run(tau * k));
        prop_assert!(b >= a, "{a} -> {b}");
    }
}

fn arb_train() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2e-6f64, 0..60).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dead_time_filter_keeps_spacing_and_is_idempotent(train in arb_train(), dead in 0.0..100e-9f64) {
        let f = filter_dead_time(&train, dead);
        prop_assert!(f.windows(2).all(|w| w[1] - w[0] >= dead));
        prop_assert_eq!(filter_dead_time(&f, dead), f.clone());
        prop_assert_eq!(f.first(), train.first());
    }

    #[test]
    fn output_respects_lockout(a in arb_train(), b in arb_train(), rate in 1e6..20e6f64) {
        let cfg = NeuronConfig {
            synapses: vec![SynapseConfig::default(), SynapseConfig { w: 3, ..SynapseConfig::default() }],
            max_rate: rate,
            ..NeuronConfig::default()
        };
        let inputs = [SpikeTrain::new(a).unwrap(), SpikeTrain::new(b).unwrap()];
        let out = run_neuron(&cfg, &inputs, (0.0, 2.5e-6)).unwrap().output.times;
        prop_assert!(out.windows(2).all(|w| w[1] - w[0] >= 1.0 / rate * (1.0 - 1e-12)));
    }

    #[test]
    fn stronger_coupling_fires_no_later(train in arb_train(), k in 1.0..3.0f64) {
        let run = |c: f64| {
            let cfg = NeuronConfig {
                synapses: vec![SynapseConfig { c, ..SynapseConfig::default() }],
                ..NeuronConfig::default()
            };
            let inputs = [SpikeTrain::new(train.clone()).unwrap()];
            run_neuron(&cfg, &inputs, (0.0, 2.5e-6)).unwrap().output.times.first().copied()
        };
        match (run(1.0), run(k)) {
            (Some(a), Some(b)) => prop_assert!(b <= a),
            (Some(_), None) => prop_assert!(false, "stronger coupling lost the first spike"),
            _ => {}
        }
    }
}

fn sorted_rows(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    rows
}

#[test]
fn sweep_is_invariant_under_axis_reordering() {
    let base = RunConfig::default();
    let c = Axis::new("diode.C", [1e-15, 10e-15, 100e-15]);
    let q = Axis::new("diode.eta_qe", [1e-3, 1e-2, 0.1]);
    let ab = run_sweep(&SweepSpec::new(Target::Led, vec![c.clone(), q.clone()]), &base, None).unwrap();
    let ba = run_sweep(&SweepSpec::new(Target::Led, vec![q, c]), &base, None).unwrap();
    assert_eq!(ab.rows.len(), 9);
    let swapped: Vec<Vec<f64>> = ba
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.swap(0, 1);
            r
        })
        .collect();
    assert_eq!(sorted_rows(ab.rows.clone()), sorted_rows(swapped));
}

#[test]
fn empty_fixed_matches_base_behaviour() {
    let base = RunConfig::default();
    let spec = SweepSpec::new(Target::Led, vec![Axis::new("circuit.t_on", [base.t_on])]);
    let t = run_sweep(&spec, &base, Some(1)).unwrap();
    let (n, _) = led(base.diode.capacitance, base.diode.eta_qe, base.circuit.i_led, base.t_on);
    assert_eq!(t.column("N_ph").unwrap(), vec![n]);
}

#[test]
fn parallel_and_serial_tables_are_identical() {
    let base = RunConfig::default();
    let spec = SweepSpec::new(
        Target::Led,
        vec![
            Axis::new("circuit.I_LED", [4e-6, 8e-6, 12e-6, 16e-6]),
            Axis::new("diode.C", [1e-15, 30e-15]),
        ],
    );
    let a = run_sweep(&spec, &base, Some(1)).unwrap();
    let b = run_sweep(&spec, &base, Some(4)).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    let mut ja = Vec::new();
    let mut jb = Vec::new();
    a.write_json(&mut ja).unwrap();
    b.write_json(&mut jb).unwrap();
    assert_eq!(ja, jb);
}
