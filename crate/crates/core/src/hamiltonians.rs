//! Benchmark Hamiltonians split into two mirror-image halves.
//!
//! Qubits `0..N` of the full register belong to subsystem `A`, qubits
//! `N..2N` to subsystem `B`. Cross terms keep their two factors in local
//! indexing.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::estimator::solve_coefficients;
use crate::pauli::{check_dense, Pauli, PauliString, PauliSum};

#[derive(Clone, Debug, PartialEq)]
pub struct CrossTerm {
    pub coefficient: f64,
    pub op_a: PauliString,
    pub op_b: PauliString,
}

impl CrossTerm {
    pub fn new(coefficient: f64, op_a: PauliString, op_b: PauliString) -> Result<Self> {
        if op_a.n_qubits() != op_b.n_qubits() {
            return Err(ForgeError::arg(format!(
                "cross factors have {} and {} qubits",
                op_a.n_qubits(),
                op_b.n_qubits()
            )));
        }
        Ok(CrossTerm { coefficient, op_a, op_b })
    }

    pub fn swapped(&self) -> CrossTerm {
        CrossTerm { coefficient: self.coefficient, op_a: self.op_b.clone(), op_b: self.op_a.clone() }
    }

    /// `coefficient · O_A ⊗ O_B` as one word on the full register.
    pub fn full_word(&self) -> Result<PauliString> {
        let n = self.op_a.n_qubits();
        self.op_a.embed(0, 2 * n)?.mul(&self.op_b.embed(n, 2 * n)?)
    }
}

impl fmt::Display for CrossTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}⊗{}", self.coefficient, self.op_a, self.op_b)
    }
}

/// Cross terms that are swaps of each other, evaluated once and counted
/// `multiplicity` times.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossClass {
    pub term: CrossTerm,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianPartition {
    n_sub: usize,
    h_a: PauliSum,
    h_b: PauliSum,
    cross: Vec<CrossTerm>,
    classes: Vec<CrossClass>,
}

fn same_pair(x: &CrossTerm, y: &CrossTerm) -> bool {
    x.op_a == y.op_a && x.op_b == y.op_b
}

fn group_cross(cross: &[CrossTerm]) -> Vec<CrossClass> {
    let mut classes: Vec<CrossClass> = Vec::new();
    for term in cross {
        let found = classes.iter_mut().find(|c| {
            (c.term.coefficient - term.coefficient).abs() < 1e-14
                && (same_pair(&c.term, term) || same_pair(&c.term.swapped(), term))
        });
        match found {
            Some(class) => class.multiplicity += 1,
            None => classes.push(CrossClass { term: term.clone(), multiplicity: 1 }),
        }
    }
    classes
}

impl HamiltonianPartition {
    pub fn new(n_sub: usize, h_a: PauliSum, h_b: PauliSum, cross: Vec<CrossTerm>) -> Result<Self> {
        if n_sub == 0 {
            return Err(ForgeError::arg("subsystem must have at least one qubit"));
        }
        for (name, h) in [("h_a", &h_a), ("h_b", &h_b)] {
            if h.n_qubits() != n_sub {
                return Err(ForgeError::arg(format!("{name} has {} qubits, expected {n_sub}", h.n_qubits())));
            }
        }
        if let Some(t) = cross.iter().find(|t| t.op_a.n_qubits() != n_sub || t.op_b.n_qubits() != n_sub) {
            return Err(ForgeError::arg(format!("cross term {t} does not act on {n_sub}-qubit subsystems")));
        }
        let classes = group_cross(&cross);
        Ok(HamiltonianPartition { n_sub, h_a, h_b, cross, classes })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn n_total(&self) -> usize {
        2 * self.n_sub
    }

    pub fn h_a(&self) -> &PauliSum {
        &self.h_a
    }

    pub fn h_b(&self) -> &PauliSum {
        &self.h_b
    }

    pub fn cross(&self) -> &[CrossTerm] {
        &self.cross
    }

    pub fn classes(&self) -> &[CrossClass] {
        &self.classes
    }

    /// `H_A⊗I + I⊗H_B + Σ c O_A⊗O_B` on `2N` qubits.
    pub fn full_hamiltonian(&self) -> Result<PauliSum> {
        let n = self.n_sub;
        let cross = self
            .cross
            .iter()
            .map(|t| Ok((t.coefficient, t.full_word()?)))
            .collect::<Result<Vec<_>>>()?;
        let cross = PauliSum::new(2 * n, cross)?;
        self.h_a.embed(0, 2 * n)?.add(&self.h_b.embed(n, 2 * n)?)?.add(&cross)
    }
}

fn zz(n: usize, i: usize, j: usize) -> Result<PauliString> {
    PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)])
}

fn z(n: usize, i: usize) -> Result<PauliString> {
    PauliString::single(n, i, Pauli::Z)
}

fn transverse(n: usize, h_field: f64) -> Result<Vec<(f64, PauliString)>> {
    (0..n).map(|i| Ok((h_field, PauliString::single(n, i, Pauli::X)?))).collect()
}

/// Periodic chain `Σ Z_i Z_{i+1} + h Σ X_i` cut into two open halves.
pub fn build_tfim_1d(n_total: usize, h_field: f64) -> Result<HamiltonianPartition> {
    if n_total < 4 || !n_total.is_multiple_of(2) {
        return Err(ForgeError::arg(format!("chain length must be even and at least 4, got {n_total}")));
    }
    let n = n_total / 2;
    let mut terms = (0..n - 1).map(|i| Ok((1.0, zz(n, i, i + 1)?))).collect::<Result<Vec<_>>>()?;
    terms.extend(transverse(n, h_field)?);
    let h = PauliSum::new(n, terms)?;
    let cross = vec![
        CrossTerm::new(1.0, z(n, n - 1)?, z(n, 0)?)?,
        CrossTerm::new(1.0, z(n, 0)?, z(n, n - 1)?)?,
    ];
    HamiltonianPartition::new(n, h.clone(), h, cross)
}

/// 2×4 grid, periodic horizontally, split into left and right 2×2 blocks.
///
/// Block-local labels are `0, 1` on the top row and `2, 3` on the bottom row.
pub fn build_tfim_2d(rows: usize, cols: usize, h_field: f64) -> Result<HamiltonianPartition> {
    if (rows, cols) != (2, 4) {
        return Err(ForgeError::arg(format!("only the 2x4 grid is supported, got {rows}x{cols}")));
    }
    let n = 4;
    let mut terms = [(0, 1), (2, 3), (0, 2), (1, 3)]
        .iter()
        .map(|&(i, j)| Ok((1.0, zz(n, i, j)?)))
        .collect::<Result<Vec<_>>>()?;
    terms.extend(transverse(n, h_field)?);
    let h = PauliSum::new(n, terms)?;
    // Inner seam (column 1 to 2) and periodic seam (column 3 to 0), both rows.
    let bonds = [(1, 0), (3, 2), (0, 1), (2, 3)];
    let cross = bonds
        .iter()
        .map(|&(a, b)| CrossTerm::new(1.0, z(n, a)?, z(n, b)?))
        .collect::<Result<Vec<_>>>()?;
    HamiltonianPartition::new(n, h.clone(), h, cross)
}

/// Jordan-Wigner form of spinless fermions on the periodic 2×2 plaquette,
/// `t/2` on hopping words and `V/4` on `ZZ` words. Sites `0, 1` form `A`.
pub fn build_tv_2x2(t: f64, v: f64) -> Result<HamiltonianPartition> {
    let n = 2;
    let p = |s: &str| PauliString::parse_sparse(n, s);
    let (hop, int) = (t / 2.0, v / 4.0);
    let h = PauliSum::new(n, [(hop, p("X0X1")?), (hop, p("Y0Y1")?), (int, p("Z0Z1")?)])?;
    let cross = vec![
        CrossTerm::new(hop, p("X0Z1")?, p("X0")?)?,
        CrossTerm::new(hop, p("Y0Z1")?, p("Y0")?)?,
        CrossTerm::new(hop, p("X1")?, p("Z0X1")?)?,
        CrossTerm::new(hop, p("Y1")?, p("Z0Y1")?)?,
        CrossTerm::new(int, p("Z0")?, p("Z0")?)?,
        CrossTerm::new(int, p("Z1")?, p("Z1")?)?,
    ];
    HamiltonianPartition::new(n, h.clone(), h, cross)
}

/// Model selection shared by the trainer, checkpoints and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Tfim1d { n_total: usize, h_field: f64 },
    Tfim2d { h_field: f64 },
    Tv2x2 { t: f64, v: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<HamiltonianPartition> {
        match *self {
            ModelSpec::Tfim1d { n_total, h_field } => build_tfim_1d(n_total, h_field),
            ModelSpec::Tfim2d { h_field } => build_tfim_2d(2, 4, h_field),
            ModelSpec::Tv2x2 { t, v } => build_tv_2x2(t, v),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tfim1d { .. } => "tfim1d",
            ModelSpec::Tfim2d { .. } => "tfim2d",
            ModelSpec::Tv2x2 { .. } => "tv2x2",
        }
    }
}

/// Outcome of [`validate_partition`]; one line per passed check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_sub: usize,
    pub subsystem_terms: usize,
    pub cross_terms: usize,
    pub cross_classes: usize,
    pub checks: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "subsystem qubits: {}, subsystem terms: {}, cross terms: {} in {} classes",
            self.n_sub, self.subsystem_terms, self.cross_terms, self.cross_classes
        )?;
        for c in &self.checks {
            writeln!(f, "ok  {c}")?;
        }
        Ok(())
    }
}

/// Check the preconditions the forged estimators rely on.
pub fn validate_partition(p: &HamiltonianPartition) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    if let Some(diff) = p.h_a.first_difference(&p.h_b, 1e-12) {
        return Err(ForgeError::Validation(format!("h_a and h_b differ at {diff}")));
    }
    checks.push("h_a equals h_b".to_string());

    if let Some((_, w)) = p.h_a.terms().iter().find(|(_, w)| !w.is_real_matrix()) {
        return Err(ForgeError::Validation(format!("subsystem term {w} is not a real matrix")));
    }
    checks.push("subsystem terms are real".to_string());

    for t in &p.cross {
        if !t.op_a.is_hermitian() || !t.op_b.is_hermitian() {
            return Err(ForgeError::Validation(format!("cross term {t} has a non-Hermitian factor")));
        }
        if !t.op_a.commutes_with(&t.op_b)? {
            return Err(ForgeError::Validation(format!("cross term {t}: factors do not commute")));
        }
        if !t.full_word()?.is_real_matrix() {
            return Err(ForgeError::Validation(format!("cross term {t} is not a real matrix")));
        }
    }
    checks.push(format!("{} cross pairs commute and are real", p.cross.len()));

    for class in &p.classes {
        solve_coefficients(&class.term.op_a, &class.term.op_b).map_err(|e| {
            ForgeError::Validation(format!("cross term {}: {e}", class.term))
        })?;
    }
    checks.push(format!("{} cross classes decompose into Clifford pairs", p.classes.len()));

    if check_dense(p.n_total()).is_ok() {
        let m = p.full_hamiltonian()?.dense_matrix()?;
        let dev = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(ForgeError::Validation(format!("full Hamiltonian is not Hermitian (deviation {dev:e})")));
        }
        checks.push("full Hamiltonian is Hermitian".to_string());
    }

    Ok(ValidationReport {
        n_sub: p.n_sub,
        subsystem_terms: p.h_a.len(),
        cross_terms: p.cross.len(),
        cross_classes: p.classes.len(),
        checks,
    })
}
