//! Pauli words and real-weighted sums of them.
//!
//! A word is stored as an X bitmask, a Z bitmask and a power of `i`. Qubit 0
//! is the least-significant bit of a basis-state index everywhere in this
//! crate, and in the dense text form (`"ZIIX"`) character `k` labels qubit `k`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ForgeError, Result};

/// Largest register for which dense matrices are built.
pub const DENSE_QUBIT_LIMIT: usize = 12;

/// Words are packed into one `u64` per Pauli component.
pub const MAX_QUBITS: usize = 64;

/// Coefficients below this magnitude are dropped when a sum is canonicalised.
pub const COEFF_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// One of the four units `+1, +i, -1, -i`, stored as a power of `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u32 {
        self.0 as u32
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn to_complex(self) -> Complex64 {
        i_pow(self.0 as u32)
    }

    /// The real value of `+1`/`-1`, or `None` for `±i`.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn parity(v: u64) -> bool {
    v.count_ones() % 2 == 1
}

/// A Pauli word on `n` qubits with an exact unit phase.
///
/// The operator is `phase · P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}` where `P_k` acts on qubit `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(PauliString { n, x: 0, z: 0, phase: Phase::ONE })
    }

    pub fn from_ops(ops: &[Pauli]) -> Result<Self> {
        let n = ops.len();
        check_width(n)?;
        let (mut x, mut z) = (0u64, 0u64);
        for (q, op) in ops.iter().enumerate() {
            let (bx, bz) = op.bits();
            x |= (bx as u64) << q;
            z |= (bz as u64) << q;
        }
        Ok(PauliString { n, x, z, phase: Phase::ONE })
    }

    /// Word with the given operators on the listed qubits and identity elsewhere.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut word = PauliString::identity(n)?;
        for &(q, op) in ops {
            if q >= n {
                return Err(ForgeError::arg(format!("qubit {q} out of range for {n}-qubit word")));
            }
            if word.op(q) != Pauli::I {
                return Err(ForgeError::arg(format!("qubit {q} listed twice")));
            }
            let (bx, bz) = op.bits();
            word.x |= (bx as u64) << q;
            word.z |= (bz as u64) << q;
        }
        Ok(word)
    }

    pub fn single(n: usize, qubit: usize, op: Pauli) -> Result<Self> {
        PauliString::from_sparse(n, &[(qubit, op)])
    }

    /// Parse the sparse form `"Z0Z4"`, `"X1 Y3"` or `"-Z0Z1"` on `n` qubits.
    pub fn parse_sparse(n: usize, text: &str) -> Result<Self> {
        let (phase, body) = split_phase(text.trim())?;
        let mut ops = Vec::new();
        let chars: Vec<char> = body.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
        let mut k = 0;
        while k < chars.len() {
            let op = Pauli::from_label(chars[k].to_ascii_uppercase())
                .ok_or_else(|| ForgeError::arg(format!("bad Pauli label {:?} in {text:?}", chars[k])))?;
            k += 1;
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            if start == k {
                return Err(ForgeError::arg(format!("missing qubit index after {:?} in {text:?}", op.label())));
            }
            let idx: String = chars[start..k].iter().collect();
            let q = idx.parse::<usize>().map_err(|e| ForgeError::arg(e.to_string()))?;
            if op != Pauli::I {
                ops.push((q, op));
            }
        }
        Ok(PauliString::from_sparse(n, &ops)?.with_phase(phase))
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn op(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn ops(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.op(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// True when every matrix entry is real.
    pub fn is_real_matrix(&self) -> bool {
        (self.phase.exponent() + self.y_count()).is_multiple_of(2)
    }

    /// Same word with phase `+1`.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(Phase::ONE)
    }

    /// Entrywise complex conjugate (`Y* = -Y`).
    pub fn conj(&self) -> Self {
        let e = (4 - self.phase.exponent()) + 2 * self.y_count();
        self.clone().with_phase(Phase::from_exponent(e))
    }

    /// Place this word on qubits `offset..offset + n` of a `total`-qubit register.
    pub fn embed(&self, offset: usize, total: usize) -> Result<Self> {
        if offset + self.n > total {
            return Err(ForgeError::arg(format!(
                "cannot embed {}-qubit word at offset {offset} into {total} qubits",
                self.n
            )));
        }
        check_width(total)?;
        Ok(PauliString { n: total, x: self.x << offset, z: self.z << offset, phase: self.phase })
    }

    /// Keep only the qubits set in `mask`, relabelled densely in increasing order.
    pub fn compress(&self, mask: u64) -> Self {
        let mut x = 0;
        let mut z = 0;
        let mut k = 0;
        for q in 0..self.n {
            if (mask >> q) & 1 == 1 {
                x |= ((self.x >> q) & 1) << k;
                z |= ((self.z >> q) & 1) << k;
                k += 1;
            }
        }
        PauliString { n: k, x, z, phase: self.phase }
    }

    /// `self · other` with the exact product phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        same_width(self, other)?;
        // Each word is i^{phase + |x&z|} X^x Z^z; moving Z^{z1} past X^{x2}
        // costs (-1)^{|z1 & x2|}.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let e = self.phase.exponent()
            + other.phase.exponent()
            + self.y_count()
            + other.y_count()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        Ok(PauliString { n: self.n, x, z, phase: Phase::from_exponent(e) })
    }

    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        same_width(self, other)?;
        Ok(!parity((self.x & other.z) ^ (self.z & other.x)))
    }

    /// Factor multiplying amplitude `k` as it is mapped to `k ^ x`.
    #[inline]
    pub(crate) fn base_factor(&self) -> Complex64 {
        i_pow(self.phase.exponent() + self.y_count())
    }

    /// Accumulate `coeff · P v` into `out`.
    pub(crate) fn apply_add(&self, coeff: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        let f = coeff * self.base_factor();
        let (x, z) = (self.x as usize, self.z as usize);
        for (k, amp) in v.iter().enumerate() {
            let s = if ((z & k).count_ones() & 1) == 1 { -f } else { f };
            out[k ^ x] += s * amp;
        }
    }

    /// `⟨v|P|v⟩`.
    pub(crate) fn expectation_raw(&self, v: &[Complex64]) -> Complex64 {
        let f = self.base_factor();
        let (x, z) = (self.x as usize, self.z as usize);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, amp) in v.iter().enumerate() {
            let t = v[k ^ x].conj() * amp;
            if ((z & k).count_ones() & 1) == 1 {
                acc -= t;
            } else {
                acc += t;
            }
        }
        f * acc
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.n, v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_add(Complex64::new(1.0, 0.0), v, &mut out);
        Ok(out)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        let f = self.base_factor();
        for k in 0..dim {
            let s = if ((self.z as usize & k).count_ones() & 1) == 1 { -f } else { f };
            m[(k ^ self.x as usize, k)] = s;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.exponent() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.op(q).label())?;
        }
        Ok(())
    }
}

fn split_phase(s: &str) -> Result<(Phase, &str)> {
    let (sign, rest) = if let Some(r) = s.strip_prefix('-') {
        (Phase::MINUS_ONE, r)
    } else if let Some(r) = s.strip_prefix('+') {
        (Phase::ONE, r)
    } else {
        (Phase::ONE, s)
    };
    let (imag, rest) = match rest.strip_prefix('i') {
        Some(r) => (Phase::I, r),
        None => (Phase::ONE, rest),
    };
    if rest.is_empty() {
        return Err(ForgeError::arg(format!("empty Pauli word {s:?}")));
    }
    Ok((sign * imag, rest))
}

impl FromStr for PauliString {
    type Err = ForgeError;

    /// Dense form: `"ZIIZ"`, `"-iXY"`, `"+XX"`.
    fn from_str(s: &str) -> Result<Self> {
        let (phase, body) = split_phase(s.trim())?;
        let ops = body
            .chars()
            .map(|c| Pauli::from_label(c).ok_or_else(|| ForgeError::arg(format!("bad Pauli label {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_ops(&ops)?.with_phase(phase))
    }
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(ForgeError::arg(format!("word width {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

fn same_width(a: &PauliString, b: &PauliString) -> Result<()> {
    if a.n != b.n {
        return Err(ForgeError::arg(format!("size mismatch: {} vs {} qubits", a.n, b.n)));
    }
    Ok(())
}

pub(crate) fn check_dim(n: usize, len: usize) -> Result<()> {
    if n >= usize::BITS as usize || len != 1usize << n {
        return Err(ForgeError::arg(format!("vector length {len} does not match {n} qubits")));
    }
    Ok(())
}

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_QUBIT_LIMIT {
        return Err(ForgeError::resource(format!(
            "{n} qubits exceeds the dense limit of {DENSE_QUBIT_LIMIT}"
        )));
    }
    Ok(())
}

pub fn pauli_mul(p1: &PauliString, p2: &PauliString) -> Result<PauliString> {
    p1.mul(p2)
}

pub fn commutes(p1: &PauliString, p2: &PauliString) -> Result<bool> {
    p1.commutes_with(p2)
}

pub fn apply_pauli(p: &PauliString, v: &[Complex64]) -> Result<Vec<Complex64>> {
    p.apply(v)
}

/// A real linear combination of distinct Pauli words, kept in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(PauliSum { n, terms: Vec::new() })
    }

    /// Merge duplicate words, fold `-1` phases into coefficients and drop
    /// negligible terms. Words with phase `±i` are rejected.
    pub fn new<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        check_width(n)?;
        let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for (c, w) in terms {
            if w.n != n {
                return Err(ForgeError::arg(format!("term {w} has {} qubits, expected {n}", w.n)));
            }
            let sign = w
                .phase
                .sign()
                .ok_or_else(|| ForgeError::arg(format!("term {w} is not Hermitian")))?;
            *merged.entry((w.z, w.x)).or_insert(0.0) += sign * c;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= COEFF_EPS)
            .map(|((z, x), c)| (c, PauliString { n, x, z, phase: Phase::ONE }))
            .collect();
        Ok(PauliSum { n, terms })
    }

    pub fn from_word(coeff: f64, word: PauliString) -> Result<Self> {
        let n = word.n;
        PauliSum::new(n, [(coeff, word)])
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n != other.n {
            return Err(ForgeError::arg(format!("size mismatch: {} vs {} qubits", self.n, other.n)));
        }
        PauliSum::new(self.n, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    pub fn scale(&self, s: f64) -> PauliSum {
        PauliSum::new(self.n, self.terms.iter().map(|(c, w)| (c * s, w.clone()))).expect("same width")
    }

    pub fn embed(&self, offset: usize, total: usize) -> Result<PauliSum> {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| Ok((*c, w.embed(offset, total)?)))
            .collect::<Result<Vec<_>>>()?;
        PauliSum::new(total, terms)
    }

    pub fn is_real_matrix(&self) -> bool {
        self.terms.iter().all(|(_, w)| w.is_real_matrix())
    }

    /// First word whose coefficients differ by more than `tol`, if any.
    pub fn first_difference(&self, other: &PauliSum, tol: f64) -> Option<String> {
        if self.n != other.n {
            return Some(format!("width {} vs {}", self.n, other.n));
        }
        let lookup = |s: &PauliSum| -> BTreeMap<(u64, u64), f64> {
            s.terms.iter().map(|(c, w)| ((w.z, w.x), *c)).collect()
        };
        let (a, b) = (lookup(self), lookup(other));
        for key in a.keys().chain(b.keys()) {
            let ca = a.get(key).copied().unwrap_or(0.0);
            let cb = b.get(key).copied().unwrap_or(0.0);
            if (ca - cb).abs() > tol {
                let word = PauliString { n: self.n, x: key.1, z: key.0, phase: Phase::ONE };
                return Some(format!("{word}: {ca} vs {cb}"));
            }
        }
        None
    }

    pub fn approx_eq(&self, other: &PauliSum, tol: f64) -> bool {
        self.first_difference(other, tol).is_none()
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.n, v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (c, w) in &self.terms {
            w.apply_add(Complex64::new(*c, 0.0), v, &mut out);
        }
        Ok(out)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, w) in &self.terms {
            let f = w.base_factor() * *c;
            for k in 0..dim {
                let s = if ((w.z as usize & k).count_ones() & 1) == 1 { -f } else { f };
                m[(k ^ w.x as usize, k)] += s;
            }
        }
        Ok(m)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, w)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{w}")?;
        }
        Ok(())
    }
}

/// Dense matrix of a word or a sum.
pub trait DenseMatrix {
    fn to_dense(&self) -> Result<DMatrix<Complex64>>;
}

impl DenseMatrix for PauliString {
    fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.dense_matrix()
    }
}

impl DenseMatrix for PauliSum {
    fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.dense_matrix()
    }
}

pub fn dense_matrix<M: DenseMatrix + ?Sized>(op: &M) -> Result<DMatrix<Complex64>> {
    op.to_dense()
}
