//! Brute-force references on the full `2N`-qubit register.
//!
//! Basis index convention: subsystem `A` occupies the low `N` bits, so the
//! amplitude of `|a⟩_A|b⟩_B` sits at `a + 2^N · b`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{ForgeError, Result};
use crate::estimator::ForgedModel;
use crate::hamiltonians::HamiltonianPartition;
use crate::pauli::{check_dense, Pauli, PauliString, PauliSum};
use crate::simulator::NORM_TOL;

/// Lowest eigenpair of the full Hamiltonian.
pub fn exact_ground_state(partition: &HamiltonianPartition) -> Result<(f64, Vec<Complex64>)> {
    check_dense(partition.n_total())?;
    let h = partition.full_hamiltonian()?.dense_matrix()?;
    lowest_eigenpair(&h)
}

pub fn lowest_eigenpair(h: &DMatrix<Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let dev = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > 1e-12 {
        return Err(ForgeError::internal(format!("matrix is not Hermitian (deviation {dev:e})")));
    }
    if h.iter().all(|z| z.im == 0.0) {
        let eig = SymmetricEigen::new(h.map(|z| z.re));
        let k = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(k).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok((eig.eigenvalues[k], v))
    } else {
        let eig = SymmetricEigen::new(h.clone());
        let k = eig.eigenvalues.imin();
        Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
    }
}

/// Dense `(U* ⊗ U) Σ_σ λ(σ) |σ⟩_A |σ⟩_B`.
pub fn reconstruct_forged_state(model: &ForgedModel) -> Result<Vec<Complex64>> {
    let n = model.n_sub();
    check_dense(2 * n)?;
    let dim = 1usize << n;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim * dim];
    for sigma in 0..dim {
        let lambda = model.arnn().amplitude(sigma)?;
        let phi = model.circuit().run(model.omega(), sigma)?.into_amplitudes();
        for (b, pb) in phi.iter().enumerate() {
            for (a, pa) in phi.iter().enumerate() {
                psi[a + dim * b] += pa.conj() * pb * lambda;
            }
        }
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(ForgeError::internal(format!("forged state has norm {norm}")));
    }
    Ok(psi)
}

/// `⟨ψ|O|ψ⟩` by direct application of the Pauli sum.
pub fn dense_expectation(state: &[Complex64], op: &PauliSum) -> Result<f64> {
    let applied = op.apply(state)?;
    let e: Complex64 = state.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum();
    if e.im.abs() > NORM_TOL {
        return Err(ForgeError::internal(format!("expectation has imaginary part {:e}", e.im)));
    }
    Ok(e.re)
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Non-negative, descending.
    pub values: Vec<f64>,
    /// Columns are the `A`-side Schmidt vectors.
    pub left: DMatrix<Complex64>,
    /// Rows are the conjugated `B`-side Schmidt vectors.
    pub right_t: DMatrix<Complex64>,
}

/// SVD of the amplitude matrix with rows indexed by `A`, columns by `B`.
pub fn schmidt_decompose(state: &[Complex64], n_a: usize) -> Result<SchmidtDecomposition> {
    let len = state.len();
    if n_a >= usize::BITS as usize || !len.is_multiple_of(1usize << n_a) || !len.is_power_of_two() {
        return Err(ForgeError::arg(format!("cannot split a length-{len} state with {n_a} qubits on A")));
    }
    let da = 1usize << n_a;
    let db = len / da;
    let m = DMatrix::from_fn(da, db, |a, b| state[a + da * b]);
    let svd = m.svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    Ok(SchmidtDecomposition {
        values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        left: DMatrix::from_fn(da, order.len(), |r, c| u[(r, order[c])]),
        right_t: DMatrix::from_fn(order.len(), db, |r, c| v_t[(order[r], c)]),
    })
}

/// `⟨Z_i Z_j⟩` for every pair of qubits.
pub fn exact_correlators(state: &[Complex64]) -> Result<DMatrix<f64>> {
    let n = state.len().trailing_zeros() as usize;
    if !state.len().is_power_of_two() || n == 0 {
        return Err(ForgeError::arg(format!("state length {} is not a register", state.len())));
    }
    let probs: Vec<f64> = state.iter().map(|z| z.norm_sqr()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 1.0;
        }
        probs
            .iter()
            .enumerate()
            .map(|(k, p)| if ((k >> i) ^ (k >> j)) & 1 == 0 { *p } else { -*p })
            .sum()
    }))
}

/// `Z_i Z_j` on `n` qubits, a small convenience for callers comparing
/// against [`exact_correlators`].
pub fn zz_observable(n: usize, i: usize, j: usize) -> Result<PauliSum> {
    let word = if i == j {
        PauliString::identity(n)?
    } else {
        PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)])?
    };
    PauliSum::from_word(1.0, word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzCircuit;
    use crate::arnn::ArnnModel;
    use crate::hamiltonians::{build_tfim_1d, build_tv_2x2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_site_ising_by_hand() {
        // ZZ + X_0 + X_1 on two qubits: eigenvalues ±√5 and ±1.
        let h = PauliSum::new(
            2,
            [(1.0, "ZZ".parse().unwrap()), (1.0, "XI".parse().unwrap()), (1.0, "IX".parse().unwrap())],
        )
        .unwrap()
        .dense_matrix()
        .unwrap();
        let (e, v) = lowest_eigenpair(&h).unwrap();
        assert!((e + 5f64.sqrt()).abs() < 1e-12);
        let rayleigh = dense_expectation(&v, &PauliSum::new(2, [(1.0, "ZZ".parse().unwrap()), (1.0, "XI".parse().unwrap()), (1.0, "IX".parse().unwrap())]).unwrap()).unwrap();
        assert!((rayleigh - e).abs() < 1e-12);
    }

    #[test]
    fn ground_state_rayleigh_quotient() {
        for p in [build_tfim_1d(8, 1.0).unwrap(), build_tv_2x2(1.0, 1.0).unwrap()] {
            let (e, v) = exact_ground_state(&p).unwrap();
            let r = dense_expectation(&v, &p.full_hamiltonian().unwrap()).unwrap();
            assert!((r - e).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_state_respects_dense_limit() {
        assert!(matches!(exact_ground_state(&build_tfim_1d(14, 1.0).unwrap()), Err(ForgeError::Resource(_))));
    }

    fn model(partition: HamiltonianPartition, layers: usize, seed: u64) -> ForgedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = partition.n_sub();
        let mut arnn = ArnnModel::new(n, 6, &mut rng).unwrap();
        for p in arnn.params_mut() {
            *p = rng.gen_range(-1.0..1.0);
        }
        let circuit = AnsatzCircuit::new(n, layers).unwrap();
        let omega = (0..circuit.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
        ForgedModel::new(arnn, circuit, omega, partition).unwrap()
    }

    #[test]
    fn uniform_identity_gives_maximally_entangled_state() {
        let m = ForgedModel::new(
            ArnnModel::zeros(2, 4).unwrap(),
            AnsatzCircuit::new(2, 0).unwrap(),
            vec![],
            build_tfim_1d(4, 1.0).unwrap(),
        )
        .unwrap();
        let psi = reconstruct_forged_state(&m).unwrap();
        for (k, a) in psi.iter().enumerate() {
            let expected = if k % 4 == k / 4 { 0.5 } else { 0.0 };
            assert!((a - c(expected)).norm() < 1e-15);
        }
    }

    #[test]
    fn point_mass_gives_product_state() {
        let mut arnn = ArnnModel::zeros(2, 4).unwrap().with_clamp(0.0).unwrap();
        for i in 0..2 {
            *arnn.output_bias_mut(i) = -800.0;
        }
        let mut m = model(build_tfim_1d(4, 1.0).unwrap(), 2, 3);
        m.set_arnn(arnn).unwrap();
        let psi = reconstruct_forged_state(&m).unwrap();
        let phi = m.circuit().run(m.omega(), 0).unwrap().into_amplitudes();
        for a in 0..4 {
            for b in 0..4 {
                assert!((psi[a + 4 * b] - phi[a].conj() * phi[b]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_examples() {
        let bell = [c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)];
        let s = schmidt_decompose(&bell, 1).unwrap();
        assert!(s.values.iter().all(|v| (v - FRAC_1_SQRT_2).abs() < 1e-12));
        let product = [c(0.0), c(1.0), c(0.0), c(0.0)];
        let s = schmidt_decompose(&product, 1).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12 && s.values[1].abs() < 1e-12);
    }

    #[test]
    fn forged_state_is_in_schmidt_form() {
        for seed in 0..5 {
            let m = model(build_tfim_1d(8, 1.0).unwrap(), 3, seed);
            let psi = reconstruct_forged_state(&m).unwrap();
            let s = schmidt_decompose(&psi, 4).unwrap();
            let mut lambdas: Vec<f64> = (0..16).map(|k| m.arnn().amplitude(k).unwrap()).collect();
            lambdas.sort_by(|a, b| b.total_cmp(a));
            assert!(s.values.iter().zip(&lambdas).all(|(a, b)| (a - b).abs() < 1e-10));
            assert!((s.values.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn correlator_examples() {
        let zero = [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)];
        let m = exact_correlators(&zero).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
        let bell = [c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)];
        assert!((exact_correlators(&bell).unwrap()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlators_match_pauli_expectations() {
        let m = model(build_tfim_1d(8, 1.0).unwrap(), 2, 11);
        let psi = reconstruct_forged_state(&m).unwrap();
        let corr = exact_correlators(&psi).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let e = dense_expectation(&psi, &zz_observable(8, i, j).unwrap()).unwrap();
                assert!((corr[(i, j)] - e).abs() < 1e-12);
                assert_eq!(corr[(i, j)], corr[(j, i)]);
            }
        }
    }
}
