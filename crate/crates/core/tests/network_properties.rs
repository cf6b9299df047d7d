use std::f64::consts::PI;

use ancnet_core::cell::CellSpec;
use ancnet_core::exec::ExecMode;
use ancnet_core::gates::GateKind;
use ancnet_core::linalg::{fidelity_with_pure, Ket, C64};
use ancnet_core::network::duty::duty_ratio_report;
use ancnet_core::network::frequency::{assign_frequencies, check_frequency_map};
use ancnet_core::network::routing::chain_stats;
use ancnet_core::network::schedule::{validate_schedule, EventKind, PulseSchedule};
use ancnet_core::network::simulate::{direct_simulate, simulate_schedule_with_outcomes, NoiseModel};
use ancnet_core::network::{build_lattice, compile_circuit, Circuit, CompileOptions, LatticeTopology};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Op {
    Rot(u8, usize, f64),
    Phase(usize, f64),
    Swap(usize, usize, f64),
    Cnot(usize, usize),
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    let q = 0..n;
    let angle = -7.0..7.0f64;
    prop_oneof![
        (0u8..3, q.clone(), angle.clone()).prop_map(|(a, q, t)| Op::Rot(a, q, t)),
        (q.clone(), angle.clone()).prop_map(|(q, t)| Op::Phase(q, t)),
        (q.clone(), 1..n, angle).prop_map(move |(a, d, t)| Op::Swap(a, (a + d) % n, t)),
        (q, 1..n).prop_map(move |(a, d)| Op::Cnot(a, (a + d) % n)),
    ]
}

fn build(n: usize, ops: &[Op]) -> Circuit {
    let mut c = Circuit::new(n);
    for o in ops {
        match *o {
            Op::Rot(0, q, t) => c.push(GateKind::rx(t), &[q]),
            Op::Rot(1, q, t) => c.push(GateKind::ry(t), &[q]),
            Op::Rot(_, q, t) => c.push(GateKind::rz(t), &[q]),
            Op::Phase(q, t) => c.push(GateKind::Phase { phi: t }, &[q]),
            Op::Swap(a, b, t) => c.push(GateKind::Swap { theta: t }, &[a, b]),
            Op::Cnot(a, b) => c.push_cnot(a, b),
        }
        .unwrap();
    }
    c
}

fn grid(l: usize) -> LatticeTopology {
    build_lattice(2, &[l, l], &CellSpec::uniform(9).unwrap()).unwrap()
}

fn placement(seed: u64, n: usize, sites: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..sites).collect();
    let mut x = seed;
    for i in (1..sites).rev() {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        all.swap(i, (x >> 33) as usize % (i + 1));
    }
    all.truncate(n);
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compiled_schedules_pass_the_validator(ops in prop::collection::vec(op(3), 0..8), seed in any::<u64>()) {
        let t = grid(3);
        let c = build(3, &ops);
        let p = placement(seed, 3, 9);
        let s = compile_circuit(&c, &t, &p, &CompileOptions::default()).unwrap().schedule;
        validate_schedule(&s, &t).unwrap();
        let back = PulseSchedule::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn duty_ratios_stay_bounded(ops in prop::collection::vec(op(4), 1..8), seed in any::<u64>()) {
        let t = grid(3);
        let c = build(4, &ops);
        let p = placement(seed, 4, 9);
        let s = compile_circuit(&c, &t, &p, &CompileOptions::default()).unwrap().schedule;
        let r = duty_ratio_report(&s, 4, Some(2.0)).unwrap();
        let mut window = std::collections::BTreeMap::new();
        let mut total = 0.0;
        for e in &s.events {
            let cells = match e.kind {
                EventKind::GatingWindow { cell_a, cell_b, .. } => vec![cell_a, cell_b],
                EventKind::RotationWindow { cell, .. } | EventKind::PhaseWindow { cell, .. } => vec![cell],
                _ => continue,
            };
            total += e.duration;
            for c in cells {
                *window.entry(c).or_insert(0.0) += e.duration;
            }
        }
        for cd in &r.cells {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&cd.duty_ratio));
            if total > 0.0 {
                let share = window.get(&cd.cell).copied().unwrap_or(0.0) / total;
                prop_assert!(cd.duty_ratio <= 2.0 * share + 1e-9, "{} > 2·{}", cd.duty_ratio, share);
            }
        }
        prop_assert!(r.mean_duty_ratio <= 2.0 / 4.0 + 1e-9);
    }

    #[test]
    fn schedule_replay_matches_direct_simulation(ops in prop::collection::vec(op(3), 0..6), seed in any::<u64>(), amps in prop::collection::vec(-1.0..1.0f64, 12)) {
        let t = grid(3);
        let c = build(3, &ops);
        let p = placement(seed, 3, 9);
        let s = compile_circuit(&c, &t, &p, &CompileOptions::default()).unwrap().schedule;
        let init: Vec<Ket> = (0..3)
            .map(|q| {
                let a = &amps[4 * q..4 * q + 4];
                Ket::normalized(vec![C64::new(a[0] + 1.5, a[1]), C64::new(a[2], a[3])]).unwrap()
            })
            .collect();
        let run = simulate_schedule_with_outcomes(&s, &t, &init, None, &[]).unwrap();
        let direct = direct_simulate(&c, &init, &[]).unwrap();
        prop_assert!(1.0 - fidelity_with_pure(&run.logical_state, &direct).unwrap() <= 1e-8);
    }
}

#[test]
fn frequency_maps_conflict_free_up_to_eight_by_eight() {
    let tpl = CellSpec::uniform(9).unwrap();
    for lx in 1..=8 {
        for ly in 1..=8 {
            let t = build_lattice(2, &[lx, ly], &tpl).unwrap();
            check_frequency_map(&t, &assign_frequencies(&t, 1).unwrap()).unwrap();
        }
    }
}

#[test]
fn frequency_labels_reused_on_large_lattices() {
    let tpl = CellSpec::uniform(9).unwrap();
    let counts: Vec<usize> = [6, 10, 16]
        .iter()
        .map(|&l| assign_frequencies(&build_lattice(2, &[l, l], &tpl).unwrap(), 1).unwrap().label_count())
        .collect();
    assert_eq!(counts[0], counts[1]);
    assert_eq!(counts[1], counts[2]);
    assert!(counts[0] < 36 * 9);
}

#[test]
fn one_and_three_dimensional_lattices_compile() {
    let tpl = CellSpec::uniform(9).unwrap();
    let chain = build_lattice(1, &[5], &tpl).unwrap();
    let mut c = Circuit::new(2);
    c.push_cnot(0, 1).unwrap();
    let out = compile_circuit(&c, &chain, &[0, 4], &CompileOptions::default()).unwrap();
    assert_eq!(out.routing_swaps, 2 * 3 * 2);

    let slab = build_lattice(3, &[2, 2, 3], &CellSpec::uniform(10).unwrap()).unwrap();
    slab.check_invariants().unwrap();
    let out = compile_circuit(&c, &slab, &[0, 11], &CompileOptions::default()).unwrap();
    validate_schedule(&out.schedule, &slab).unwrap();
    assert!(build_lattice(3, &[3, 3, 3], &CellSpec::uniform(10).unwrap()).is_err());
}

#[test]
fn noisy_replay_degrades_gracefully() {
    let t = grid(2);
    let mut c = Circuit::new(2);
    c.push(GateKind::ry(PI / 2.0), &[0]).unwrap();
    c.push_cnot(0, 1).unwrap();
    let s = compile_circuit(&c, &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
    let init = [Ket::basis(2, 0).unwrap(), Ket::basis(2, 0).unwrap()];
    let mut last = 1.0 + 1e-12;
    for tau in [1e6, 100.0, 20.0, 5.0] {
        let run = simulate_schedule_with_outcomes(&s, &t, &init, Some(&NoiseModel { tau_a: tau, dt: 0.01 }), &[]).unwrap();
        assert!(run.fidelity <= last, "tau {tau}: {} > {last}", run.fidelity);
        assert!((run.logical_state.trace().re - 1.0).abs() < 1e-9);
        assert!(run.logical_state.min_eigenvalue() > -1e-9);
        last = run.fidelity;
    }
    assert!(last < 0.95);
}

#[test]
fn chain_stats_modes_agree_on_rectangles() {
    let tpl = CellSpec::uniform(9).unwrap();
    let t = build_lattice(2, &[7, 3], &tpl).unwrap();
    assert_eq!(chain_stats(&t, ExecMode::Sequential).unwrap(), chain_stats(&t, ExecMode::Parallel).unwrap());
}
