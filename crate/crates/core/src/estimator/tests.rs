use super::*;
use super::clifford::kron_lo_hi;
use crate::arnn::ArnnModel;
use crate::hamiltonians::{build_tfim_1d, build_tfim_2d, build_tv_2x2};
use crate::oracle::{dense_expectation, exact_correlators, reconstruct_forged_state};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn random_model(partition: HamiltonianPartition, layers: usize, seed: u64) -> ForgedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = partition.n_sub();
    let mut arnn = ArnnModel::new(n, 8, &mut rng).unwrap();
    for p in arnn.params_mut() {
        *p = rng.gen_range(-1.0..1.0);
    }
    let circuit = AnsatzCircuit::new(n, layers).unwrap();
    let omega = (0..circuit.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
    ForgedModel::new(arnn, circuit, omega, partition).unwrap()
}

fn identity_model(partition: HamiltonianPartition, arnn: ArnnModel) -> ForgedModel {
    let n = partition.n_sub();
    ForgedModel::new(arnn, AnsatzCircuit::new(n, 0).unwrap(), vec![], partition).unwrap()
}

/// Network concentrated on `σ = 0` with no clamp floor.
fn point_mass(n: usize) -> ArnnModel {
    let mut arnn = ArnnModel::zeros(n, 4).unwrap().with_clamp(0.0).unwrap();
    for i in 0..n {
        *arnn.output_bias_mut(i) = -800.0;
    }
    arnn
}

fn all_models() -> Vec<HamiltonianPartition> {
    vec![build_tfim_1d(8, 1.0).unwrap(), build_tfim_2d(2, 4, 1.0).unwrap(), build_tv_2x2(1.0, 1.0).unwrap()]
}

fn z(n: usize, q: usize) -> PauliString {
    PauliString::single(n, q, Pauli::Z).unwrap()
}

#[test]
fn diagonal_examples() {
    let m = identity_model(build_tfim_1d(8, 1.0).unwrap(), ArnnModel::zeros(4, 4).unwrap());
    let z0 = PauliSum::from_word(1.0, z(4, 0)).unwrap();
    assert!(estimate_diagonal(&m, &z0, EstimatorMode::Exact).unwrap().abs() < 1e-15);

    let m = identity_model(build_tfim_1d(8, 1.0).unwrap(), point_mass(4));
    let xs = PauliSum::new(4, (0..4).map(|q| (1.0, PauliString::single(4, q, Pauli::X).unwrap()))).unwrap();
    assert!(estimate_diagonal(&m, &xs, EstimatorMode::Exact).unwrap().abs() < 1e-15);
}

#[test]
fn diagonal_matches_dense_state() {
    for (k, p) in all_models().into_iter().enumerate() {
        let n = p.n_sub();
        let h_a = p.h_a().clone();
        let m = random_model(p, 2, k as u64);
        let psi = reconstruct_forged_state(&m).unwrap();
        let dense_a = dense_expectation(&psi, &h_a.embed(0, 2 * n).unwrap()).unwrap();
        let dense_b = dense_expectation(&psi, &h_a.embed(n, 2 * n).unwrap()).unwrap();
        let ours = estimate_diagonal(&m, &h_a, EstimatorMode::Exact).unwrap();
        assert!((ours - dense_a).abs() < 1e-10 && (ours - dense_b).abs() < 1e-10);
    }
}

#[test]
fn mu_examples() {
    let n = 4;
    let cz = build_clifford(&z(n, 0), &z(n, 1), 0, 0).unwrap();
    let m = identity_model(build_tfim_1d(8, 1.0).unwrap(), ArnnModel::zeros(n, 4).unwrap());
    assert!((estimate_mu_alpha_beta(&m, &cz, EstimatorMode::Exact).unwrap() - 1.0).abs() < 1e-14);

    // A point mass sees only σ' = σ*: μ = p(σ*|σ*).
    let mut m = random_model(build_tfim_1d(8, 1.0).unwrap(), 2, 9);
    m.set_arnn(point_mass(n)).unwrap();
    let cl = build_clifford(&z(n, 1), &z(n, 2), 1, 0).unwrap();
    let stay = crate::simulator::conditional_distribution(0, m.circuit(), m.omega(), &cl).unwrap()[0];
    assert!((estimate_mu_alpha_beta(&m, &cl, EstimatorMode::Exact).unwrap() - stay).abs() < 1e-12);
}

fn dense_pair_expectation(psi: &[Complex64], ca: &nalgebra::DMatrix<Complex64>, cb: &nalgebra::DMatrix<Complex64>) -> Complex64 {
    let full = kron_lo_hi(ca, cb);
    let v = DVector::from_vec(psi.to_vec());
    (v.adjoint() * full * &v)[(0, 0)]
}

#[test]
fn mu_matches_conjugated_pair() {
    for (k, p) in all_models().into_iter().enumerate() {
        let terms: Vec<CrossTerm> = p.cross().to_vec();
        let m = random_model(p, 2, 20 + k as u64);
        let psi = reconstruct_forged_state(&m).unwrap();
        for t in &terms {
            for (alpha, beta) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let cl = build_clifford(&t.op_a, &t.op_b, alpha, beta).unwrap();
                let c = cl.dense_matrix().unwrap();
                let dense = dense_pair_expectation(&psi, &c.map(|x| x.conj()), &c);
                let ours = estimate_mu_alpha_beta(&m, &cl, EstimatorMode::Exact).unwrap();
                assert!(dense.im.abs() < 1e-10);
                assert!((ours - dense.re).abs() < 1e-10, "{t} {alpha}{beta}: {ours} vs {dense}");
            }
        }
    }
}

#[test]
fn cross_examples() {
    let n = 4;
    let m = identity_model(build_tfim_1d(8, 1.0).unwrap(), point_mass(n));
    let t = CrossTerm::new(1.0, z(n, 0), z(n, 0)).unwrap();
    assert!((estimate_cross(&m, &t, EstimatorMode::Exact).unwrap() - 1.0).abs() < 1e-12);

    // Uniform network, U = I: the Z⊗Z value is Σ_σ p(σ)(-1)^{σ_p + σ_q}.
    let m = identity_model(build_tfim_1d(8, 1.0).unwrap(), ArnnModel::zeros(n, 4).unwrap());
    let t = CrossTerm::new(1.0, z(n, 1), z(n, 3)).unwrap();
    let direct: f64 = (0..16usize)
        .map(|s| if ((s >> 1) ^ (s >> 3)) & 1 == 0 { 1.0 / 16.0 } else { -1.0 / 16.0 })
        .sum();
    assert!((estimate_cross(&m, &t, EstimatorMode::Exact).unwrap() - direct).abs() < 1e-14);
}

#[test]
fn cross_matches_dense_and_is_swap_symmetric() {
    for (k, p) in all_models().into_iter().enumerate() {
        let n = p.n_sub();
        let terms: Vec<CrossTerm> = p.cross().to_vec();
        let m = random_model(p, 3, 40 + k as u64);
        let psi = reconstruct_forged_state(&m).unwrap();
        for t in &terms {
            let (a, b) = (t.op_a.embed(0, 2 * n).unwrap(), t.op_b.embed(n, 2 * n).unwrap());
            let (a2, b2) = (t.op_b.embed(0, 2 * n).unwrap(), t.op_a.embed(n, 2 * n).unwrap());
            let sym = PauliSum::new(2 * n, [(0.5, a.mul(&b).unwrap()), (0.5, a2.mul(&b2).unwrap())]).unwrap();
            let dense = dense_expectation(&psi, &sym).unwrap();
            let ours = estimate_cross(&m, t, EstimatorMode::Exact).unwrap();
            let swapped = estimate_cross(&m, &t.swapped(), EstimatorMode::Exact).unwrap();
            assert!((ours - dense).abs() < 1e-10, "{t}: {ours} vs {dense}");
            assert!((ours - swapped).abs() < 1e-10);
        }
    }
}

#[test]
fn energy_of_all_up_state() {
    let m = identity_model(build_tfim_1d(4, 1.0).unwrap(), point_mass(2));
    assert!((energy(&m, EstimatorMode::Exact).unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn energy_matches_dense_state() {
    for (k, p) in all_models().into_iter().enumerate() {
        let h = p.full_hamiltonian().unwrap();
        for seed in 0..3 {
            let m = random_model(p.clone(), 3, 100 * k as u64 + seed);
            let psi = reconstruct_forged_state(&m).unwrap();
            let dense = dense_expectation(&psi, &h).unwrap();
            let ours = energy(&m, EstimatorMode::Exact).unwrap();
            assert!((ours - dense).abs() < 1e-10, "{ours} vs {dense}");
        }
    }
}

#[test]
fn correlators_match_dense_state() {
    for (k, p) in all_models().into_iter().enumerate() {
        let m = random_model(p, 2, 70 + k as u64);
        let ours = correlators(&m, EstimatorMode::Exact).unwrap();
        let dense = exact_correlators(&reconstruct_forged_state(&m).unwrap()).unwrap();
        assert_eq!(ours.nrows(), dense.nrows());
        for i in 0..ours.nrows() {
            assert_eq!(ours[(i, i)], 1.0);
            for j in 0..ours.ncols() {
                assert!((ours[(i, j)] - dense[(i, j)]).abs() < 1e-10);
                assert_eq!(ours[(i, j)], ours[(j, i)]);
            }
        }
    }
}

#[test]
fn exact_mode_respects_enumeration_limit() {
    let m = random_model(build_tfim_1d(8, 1.0).unwrap(), 1, 0);
    assert!(EstimatorMode::Exact.check(13).is_err());
    assert!(EstimatorMode::Sampled { n_sigma: 0, shots: 1, seed: 0 }.check(4).is_err());
    assert!(energy(&m, EstimatorMode::Sampled { n_sigma: 4, shots: 0, seed: 0 }).is_err());
}

#[test]
fn sampled_mode_is_seed_deterministic() {
    let m = random_model(build_tv_2x2(1.0, 1.0).unwrap(), 2, 5);
    let a = energy(&m, EstimatorMode::Sampled { n_sigma: 64, shots: 16, seed: 3 }).unwrap();
    let b = energy(&m, EstimatorMode::Sampled { n_sigma: 64, shots: 16, seed: 3 }).unwrap();
    let c = energy(&m, EstimatorMode::Sampled { n_sigma: 64, shots: 16, seed: 4 }).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sampled_mode_tracks_exact_value() {
    let m = random_model(build_tfim_1d(8, 1.0).unwrap(), 2, 6);
    let exact = energy(&m, EstimatorMode::Exact).unwrap();
    let runs: Vec<f64> = (0..20)
        .map(|s| energy(&m, EstimatorMode::Sampled { n_sigma: 256, shots: 64, seed: s }).unwrap())
        .collect();
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let var = runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64;
    let se = (var / runs.len() as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn mismatched_parts_are_rejected() {
    let p = build_tfim_1d(8, 1.0).unwrap();
    let circuit = AnsatzCircuit::new(4, 1).unwrap();
    assert!(ForgedModel::new(ArnnModel::zeros(3, 4).unwrap(), circuit.clone(), vec![0.0; 12], p.clone()).is_err());
    assert!(ForgedModel::new(ArnnModel::zeros(4, 4).unwrap(), circuit, vec![0.0; 11], p).is_err());
}

#[test]
fn observable_matches_dense_state() {
    let p = build_tv_2x2(1.0, 1.0).unwrap();
    let m = random_model(p, 2, 77);
    let psi = reconstruct_forged_state(&m).unwrap();
    for text in ["Z0", "Y1", "X0Y1", "Y2", "Z0Z2", "X0X2", "Y0Y3", "-X1Z2", "Y0X1Y2X3", "X0Y1X2Y3"] {
        let w = PauliString::parse_sparse(4, text).unwrap();
        let dense = dense_expectation(&psi, &PauliSum::from_word(1.0, w.unsigned()).unwrap()).unwrap();
        let sign = if w.phase().exponent() == 0 { 1.0 } else { -1.0 };
        let ours = observable(&m, &w, EstimatorMode::Exact).unwrap();
        assert!((ours - sign * dense).abs() < 1e-10, "{text}: {ours} vs {dense}");
    }
    for text in ["Y0Z2", "X0Z2", "Y0Y2Y3"] {
        let w = PauliString::parse_sparse(4, text).unwrap();
        assert!(matches!(observable(&m, &w, EstimatorMode::Exact), Err(ForgeError::Unsupported(_))), "{text}");
    }
}
