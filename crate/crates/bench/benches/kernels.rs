use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qcqmc_bench::{ansatz, hubbard};
use qcqmc_core::exactdiag::{pauli_spectrum, spin_sector};
use qcqmc_core::fciqmc::{annihilate, blocking, death_clone_step, spawn_step, WalkerPopulation};
use qcqmc_core::matelem::{Backend, ElementSource};
use qcqmc_core::simulator::prepare_circuit_state;

fn pauli_apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("pauli_apply");
    for (rows, cols) in [(2, 2), (2, 3)] {
        let (spec, h) = hubbard(rows, cols);
        let psi = prepare_circuit_state(&qcqmc_core::Circuit::new(h.n_qubits()), &[], spec.reference_index()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(h.n_qubits()), &psi, |b, psi| {
            b.iter(|| h.apply(black_box(psi.amplitudes())))
        });
    }
    g.finish();
}

fn circuit_state(c: &mut Criterion) {
    let (spec, _) = hubbard(2, 2);
    let (circ, p) = ansatz(&spec, 3);
    c.bench_function("circuit_state_8q_3_layers", |b| {
        b.iter(|| prepare_circuit_state(&circ, black_box(&p), spec.reference_index()).unwrap())
    });
}

fn transformed_row(c: &mut Criterion) {
    let (spec, h) = hubbard(2, 2);
    let (circ, p) = ansatz(&spec, 3);
    let mut g = c.benchmark_group("transformed_row");
    for (name, backend) in [("exact", Backend::exact()), ("sampled", Backend::sampled(1_000_000, 10_000))] {
        g.bench_function(name, |b| {
            b.iter(|| {
                let src = ElementSource::new(h.clone(), circ.clone(), p.clone(), backend, 1).unwrap().without_cache();
                src.connections(spec.reference_index()).unwrap()
            })
        });
    }
    g.finish();
}

fn walker_step(c: &mut Criterion) {
    let (_, h) = hubbard(2, 2);
    let src = ElementSource::identity(h, Backend::exact(), 3).unwrap();
    let sector = spin_sector(4, 2, 2);
    let pop = WalkerPopulation::from_counts(sector.iter().enumerate().map(|(k, &i)| (i, 50 - k as i64 * 3)));
    for &i in &sector {
        src.connections(i).unwrap();
    }
    let mut step = 0;
    c.bench_function("walker_step_plaquette", |b| {
        b.iter(|| {
            step += 1;
            let spawned = spawn_step(&pop, &src, 0.01, 3, step).unwrap();
            let parents = death_clone_step(&pop, &src, -2.0, 0.01, 3, step).unwrap();
            annihilate(parents, &spawned)
        })
    });
}

fn sector_diagonalization(c: &mut Criterion) {
    let (_, h) = hubbard(2, 3);
    let sector = spin_sector(6, 3, 3);
    c.bench_function("sector_ed_400", |b| b.iter(|| pauli_spectrum(&h, Some(black_box(&sector))).unwrap()));
}

fn reblocking(c: &mut Criterion) {
    let x: Vec<f64> = (0..1 << 14).map(|k| ((k as f64) * 0.37).sin()).collect();
    c.bench_function("blocking_16k", |b| b.iter(|| blocking(black_box(&x)).unwrap()));
}

criterion_group!(benches, pauli_apply, circuit_state, transformed_row, walker_step, sector_diagonalization, reblocking);
criterion_main!(benches);
