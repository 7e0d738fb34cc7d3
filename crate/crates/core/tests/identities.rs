//! Cross-module identities between estimators and the Fock oracle.

use fiberpath::estimators::{
    expn_sample, green_n_point, green_sample, partition, partition_sample, Ensemble, Model, Schedule, WeylInsertion,
};
use fiberpath::field_model::{ModeFunction, ModeSet, PairKernel};
use fiberpath::fock::{perturbative_ground_energy, FockModel};
use fiberpath::paths::{sample_path, PathGrid};

fn reference_model(e: f64) -> Model {
    Model::new(PairKernel::mode_sum(ModeSet::reference_pair()), e)
}

#[test]
fn one_block_green_is_partition_bitwise() {
    let model = reference_model(0.45);
    let grid = PathGrid::new(2.0, 64).unwrap();
    let p = vec![0.5, -0.2, 0.1];
    let sched = Schedule { s: vec![0.0, 0.3], t: vec![0.0, 1.5], momenta: vec![p.clone()], insertions: vec![] };
    let idx = [0, grid.index_of(1.5).unwrap()];
    for stream in 0..20 {
        let path = sample_path(grid, 3, stream, 9);
        let g = green_sample(&model, &sched, &idx, &path).unwrap();
        let z = partition_sample(&model, &p, 1.5, &path).unwrap();
        assert_eq!(g, z);
    }
}

#[test]
fn two_block_green_matches_expn_weights() {
    let model = reference_model(0.6);
    let grid = PathGrid::new(2.0, 64).unwrap();
    let p = vec![0.5, 0.0, 0.0];
    let beta = 0.8;
    let sched = Schedule {
        s: vec![0.0, 0.0, beta],
        t: vec![0.0, 1.0, 2.0],
        momenta: vec![p.clone(), p.clone()],
        insertions: vec![None],
    };
    let idx = [0, 32, 64];
    for stream in 0..20 {
        let path = sample_path(grid, 3, stream, 4);
        let g = green_sample(&model, &sched, &idx, &path).unwrap();
        let [num, _] = expn_sample(&model, beta, &p, 1.0, &path).unwrap();
        assert!((g - num).norm() <= 1e-12 * num.norm(), "{g} {num}");
    }
}

#[test]
fn green_with_insertions_matches_oracle() {
    let e = 0.5;
    let fm = FockModel::reference(8).unwrap();
    let model = reference_model(e);
    let f1 = ModeFunction::real_even(fm.modes(), &[vec![0.6, 0.8, 0.0]]).unwrap();
    let f2 = ModeFunction::real_even(fm.modes(), &[vec![0.1, -0.5, 0.0]]).unwrap();
    let sched = Schedule {
        s: vec![0.0, 0.0, 0.5, 0.9],
        t: vec![0.0, 1.0, 1.5, 2.5],
        momenta: vec![vec![0.5, 0.0, 0.0], vec![0.2, 0.1, 0.0], vec![0.0, 0.3, 0.0]],
        insertions: vec![Some(WeylInsertion { f: f1, theta: 0.7 }), Some(WeylInsertion { f: f2, theta: -1.2 })],
    };
    let ens = Ensemble::new(PathGrid::new(2.5, 80).unwrap(), 3, 20_000, 77).unwrap();
    let mc = green_n_point(&model, &sched, &ens).unwrap();
    let exact = fm.green(&sched, e).unwrap();
    assert!((mc.mean - exact).norm() <= 4.0 * mc.stderr, "{} ± {} vs {exact}", mc.mean, mc.stderr);
}

#[test]
fn partition_matches_oracle_at_moderate_sample_size() {
    let e = 0.3;
    let fm = FockModel::reference(8).unwrap();
    let spec = fm.hamiltonian(&[0.0; 3], e).unwrap();
    let ens = Ensemble::new(PathGrid::new(1.0, 64).unwrap(), 3, 20_000, 5).unwrap();
    let z = partition(&reference_model(e), &[0.0; 3], 1.0, &ens).unwrap();
    let exact = spec.vacuum_element(1.0);
    assert!((z.mean.re - exact).abs() <= 4.0 * z.stderr);
    assert!((z.mean.re - exact).abs() / exact <= 0.02);
}

#[test]
fn weak_coupling_matches_second_order_perturbation() {
    let fm = FockModel::reference(6).unwrap();
    let p = [0.5, 0.0, 0.0];
    let e = 0.05;
    let exact = fm.ground_energy(&p, e).unwrap();
    let pt = perturbative_ground_energy(&fm, &p, e).unwrap();
    assert!((exact - pt).abs() < 1e-4, "{exact} {pt}");
    // The e² coefficient itself is resolved: the residual is O(e⁴).
    assert!((exact - pt).abs() < 1e-2 * (pt - 0.125).abs());
}
