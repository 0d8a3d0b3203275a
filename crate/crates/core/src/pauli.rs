//! Pauli unitaries `i^s Z^z X^x` and their sparse form used by circuits.

use std::fmt;

use thiserror::Error;

use crate::f2linalg::BitVec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("Pauli {0} is not Hermitian")]
    NotHermitian(String),
    #[error("qubit index {index} out of range for {n} qubits")]
    OutOfRange { index: usize, n: usize },
    #[error("cannot parse Pauli {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// Phase exponent of the Hermitian Pauli with the given bits and a `+` sign.
/// `Y = i³ZX`, so every overlapping position contributes three.
pub fn plus_phase(x: &BitVec, z: &BitVec) -> u8 {
    ((3 * x.and_popcount(z)) % 4) as u8
}

/// `P = i^s · Z^z · X^x` on `n = x.len()` qubits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOp {
    x: BitVec,
    z: BitVec,
    s: u8,
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        PauliOp { x: BitVec::zeros(n), z: BitVec::zeros(n), s: 0 }
    }

    pub fn new(x: BitVec, z: BitVec, s: u8) -> Self {
        assert_eq!(x.len(), z.len(), "x and z parts differ in length");
        PauliOp { x, z, s: s % 4 }
    }

    /// Hermitian Pauli `(-1)^sign · Z^z X^x` with the `Y` phases filled in.
    pub fn hermitian(x: BitVec, z: BitVec, sign: bool) -> Self {
        let s = plus_phase(&x, &z) + if sign { 2 } else { 0 };
        Self::new(x, z, s)
    }

    pub fn z_only(z: BitVec) -> Self {
        let n = z.len();
        Self::new(BitVec::zeros(n), z, 0)
    }

    pub fn x_only(x: BitVec) -> Self {
        let n = x.len();
        Self::new(x, BitVec::zeros(n), 0)
    }

    pub fn single(n: usize, qubit: usize, letter: char) -> Self {
        let mut p = Self::identity(n);
        match letter {
            'X' => p.x.set(qubit, true),
            'Z' => p.z.set(qubit, true),
            'Y' => {
                p.x.set(qubit, true);
                p.z.set(qubit, true);
                p.s = 3;
            }
            'I' => {}
            _ => panic!("unknown Pauli letter {letter}"),
        }
        p
    }

    pub fn z_on(n: usize, q: usize) -> Self {
        Self::single(n, q, 'Z')
    }

    pub fn x_on(n: usize, q: usize) -> Self {
        Self::single(n, q, 'X')
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &BitVec {
        &self.x
    }

    pub fn z(&self) -> &BitVec {
        &self.z
    }

    pub fn phase(&self) -> u8 {
        self.s
    }

    pub fn set_phase(&mut self, s: u8) {
        self.s = s % 4;
    }

    pub fn x_mut(&mut self) -> &mut BitVec {
        &mut self.x
    }

    pub fn z_mut(&mut self) -> &mut BitVec {
        &mut self.z
    }

    pub fn letter(&self, q: usize) -> char {
        match (self.x.get(q), self.z.get(q)) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    pub fn weight(&self) -> usize {
        (0..self.num_qubits()).filter(|&q| self.x.get(q) || self.z.get(q)).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.num_qubits()).filter(|&q| self.x.get(q) || self.z.get(q)).collect()
    }

    /// True when the operator is `i^s · I`.
    pub fn is_scalar(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn is_identity(&self) -> bool {
        self.is_scalar() && self.s == 0
    }

    pub fn is_hermitian(&self) -> bool {
        (self.s as usize + self.x.and_popcount(&self.z)).is_multiple_of(2)
    }

    pub fn require_hermitian(&self) -> Result<(), PauliError> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(PauliError::NotHermitian(self.to_string()))
        }
    }

    /// For a Hermitian Pauli, whether it is `-1` times its plus-normalized form.
    pub fn sign(&self) -> bool {
        debug_assert!(self.is_hermitian());
        (self.s + 4 - plus_phase(&self.x, &self.z)) % 4 == 2
    }

    /// Same bits with the `+` Hermitian phase.
    pub fn unsigned(&self) -> PauliOp {
        Self::hermitian(self.x.clone(), self.z.clone(), false)
    }

    pub fn product(&self, other: &PauliOp) -> Result<PauliOp, PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::SizeMismatch(self.num_qubits(), other.num_qubits()));
        }
        Ok(self.mul(other))
    }

    /// `self · other`; panics on a size mismatch.
    pub fn mul(&self, other: &PauliOp) -> PauliOp {
        let mut out = self.clone();
        out.mul_assign_right(other);
        out
    }

    /// `self ← self · other`.
    pub fn mul_assign_right(&mut self, other: &PauliOp) {
        assert_eq!(self.num_qubits(), other.num_qubits(), "Pauli size mismatch");
        let cross = self.x.and_popcount(&other.z);
        self.s = ((self.s as usize + other.s as usize + 2 * cross) % 4) as u8;
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// `self ← other · self`.
    pub fn mul_assign_left(&mut self, other: &PauliOp) {
        let prod = other.mul(self);
        *self = prod;
    }

    pub fn commutator(&self, other: &PauliOp) -> Result<bool, PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::SizeMismatch(self.num_qubits(), other.num_qubits()));
        }
        Ok(self.anticommutes(other))
    }

    /// `[P, Q]` as a bit; panics on a size mismatch.
    pub fn anticommutes(&self, other: &PauliOp) -> bool {
        (self.x.and_popcount(&other.z) + self.z.and_popcount(&other.x)) % 2 == 1
    }

    pub fn commutes(&self, other: &PauliOp) -> bool {
        !self.anticommutes(other)
    }

    pub fn mult_phase(&self, j: u8) -> PauliOp {
        let mut out = self.clone();
        out.s = (out.s + j) % 4;
        out
    }

    pub fn negate(&self) -> PauliOp {
        self.mult_phase(2)
    }

    pub fn conjugate_transpose(&self) -> PauliOp {
        let ov = (2 * self.x.and_popcount(&self.z)) % 4;
        let s = (4 - self.s as usize + ov) % 4;
        PauliOp { x: self.x.clone(), z: self.z.clone(), s: s as u8 }
    }

    /// Entry-wise complex conjugate; on Hermitian operators this flips the sign
    /// once per `Y` factor.
    pub fn complex_conjugate(&self) -> PauliOp {
        PauliOp { x: self.x.clone(), z: self.z.clone(), s: (4 - self.s) % 4 }
    }

    /// `self ⊗ other`, with `self` on the lower qubit indices.
    pub fn tensor(&self, other: &PauliOp) -> PauliOp {
        PauliOp { x: self.x.concat(&other.x), z: self.z.concat(&other.z), s: (self.s + other.s) % 4 }
    }

    /// Restriction to the listed qubits with the `+` Hermitian phase.
    pub fn restrict_unsigned(&self, qubits: &[usize]) -> PauliOp {
        PauliOp::hermitian(self.x.gather(qubits), self.z.gather(qubits), false)
    }

    /// Restriction to a contiguous range; the phase is chosen so that
    /// `P = restrict(0..a) ⊗ restrict(a..n)` holds exactly when the second
    /// factor is taken plus-normalized.
    pub fn split_at(&self, a: usize) -> (PauliOp, PauliOp) {
        let n = self.num_qubits();
        let right = PauliOp::hermitian(self.x.slice(a..n), self.z.slice(a..n), false);
        let left_bits = (self.x.slice(0..a), self.z.slice(0..a));
        let s = (self.s + 4 - right.s) % 4;
        (PauliOp::new(left_bits.0, left_bits.1, s), right)
    }

    /// Adds an identity factor at `pos`, shifting later qubits up.
    pub fn insert_qubit(&mut self, pos: usize) {
        self.x.insert(pos, false);
        self.z.insert(pos, false);
    }

    /// Drops qubit `pos`, which must carry an identity factor.
    pub fn remove_qubit(&mut self, pos: usize) {
        debug_assert_eq!(self.letter(pos), 'I');
        self.x.remove(pos);
        self.z.remove(pos);
    }

    pub fn swap_qubits(&mut self, i: usize, j: usize) {
        for v in [&mut self.x, &mut self.z] {
            let (a, b) = (v.get(i), v.get(j));
            v.set(i, b);
            v.set(j, a);
        }
    }

    /// Reorders qubits so that old qubit `q` lands on `perm[q]`.
    pub fn permute(&self, perm: &[usize]) -> PauliOp {
        let n = self.num_qubits();
        let mut out = PauliOp::identity(n);
        for (q, &to) in perm.iter().enumerate().take(n) {
            out.x.set(to, self.x.get(q));
            out.z.set(to, self.z.get(q));
        }
        out.s = self.s;
        out
    }

    pub fn to_sparse(&self) -> SparsePauli {
        let support = self.support();
        let body = PauliOp::new(self.x.gather(&support), self.z.gather(&support), self.s);
        SparsePauli { support, body }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_sparse().fmt(f)
    }
}

impl fmt::Debug for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli[{}]({})", self.num_qubits(), self)
    }
}

/// A Pauli acting on an explicit, sorted list of qubits (0-based).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SparsePauli {
    support: Vec<usize>,
    body: PauliOp,
}

impl SparsePauli {
    pub fn new(support: Vec<usize>, body: PauliOp) -> Result<Self, PauliError> {
        if support.len() != body.num_qubits() {
            return Err(PauliError::SizeMismatch(support.len(), body.num_qubits()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PauliError::Parse {
                text: format!("{support:?}"),
                reason: "support must be strictly increasing".into(),
            });
        }
        if body.weight() != support.len() {
            return Err(PauliError::Parse {
                text: format!("{support:?}"),
                reason: "identity factor inside support".into(),
            });
        }
        Ok(SparsePauli { support, body })
    }

    /// `(-1)^sign` times the product of `letters[i]` on `qubits[i]`.
    pub fn from_letters(terms: &[(char, usize)], phase: u8) -> Result<Self, PauliError> {
        let mut terms = terms.to_vec();
        terms.sort_by_key(|t| t.1);
        if terms.windows(2).any(|w| w[0].1 == w[1].1) {
            return Err(PauliError::Parse { text: format!("{terms:?}"), reason: "duplicate qubit index".into() });
        }
        let k = terms.len();
        let mut body = PauliOp::identity(k);
        for (i, &(c, _)) in terms.iter().enumerate() {
            body.mul_assign_right(&PauliOp::single(k, i, c));
        }
        body.s = (body.s + phase) % 4;
        SparsePauli::new(terms.iter().map(|t| t.1).collect(), body)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn body(&self) -> &PauliOp {
        &self.body
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.support.last().copied()
    }

    pub fn is_hermitian(&self) -> bool {
        self.body.is_hermitian()
    }

    pub fn to_dense(&self, n: usize) -> Result<PauliOp, PauliError> {
        if let Some(&q) = self.support.iter().find(|&&q| q >= n) {
            return Err(PauliError::OutOfRange { index: q, n });
        }
        let mut x = BitVec::zeros(n);
        let mut z = BitVec::zeros(n);
        for (i, &q) in self.support.iter().enumerate() {
            x.set(q, self.body.x.get(i));
            z.set(q, self.body.z.get(i));
        }
        Ok(PauliOp::new(x, z, self.body.s))
    }

    /// Moves every support index through `f`, which must be increasing.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> SparsePauli {
        SparsePauli { support: self.support.iter().map(|&q| f(q)).collect(), body: self.body.clone() }
    }

    pub fn negate(&self) -> SparsePauli {
        SparsePauli { support: self.support.clone(), body: self.body.negate() }
    }
}

impl fmt::Display for SparsePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // phase relative to the plus-normalized letters
        let rel = (self.body.s + 4 - plus_phase(&self.body.x, &self.body.z)) % 4;
        let sign = ["+", "+i", "-", "-i"][rel as usize];
        if self.support.is_empty() {
            return write!(f, "{sign}I");
        }
        f.write_str(sign)?;
        for (i, &q) in self.support.iter().enumerate() {
            let sep = if i == 0 && rel.is_multiple_of(2) { "" } else { " " };
            write!(f, "{sep}{}{}", self.body.letter(i), q + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for SparsePauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePauli({self})")
    }
}

/// Parses `SIGN? TERM (SP TERM)*` with 1-based qubit indices, e.g. `-X1 Y3`.
/// A bare `I` (optionally signed) is the identity.
pub fn parse_pauli(text: &str) -> Result<SparsePauli, PauliError> {
    let err = |reason: &str| PauliError::Parse { text: text.to_string(), reason: reason.to_string() };
    let t = text.trim();
    let (phase, rest) = if let Some(r) = t.strip_prefix("+i") {
        (1, r)
    } else if let Some(r) = t.strip_prefix("-i") {
        (3, r)
    } else if let Some(r) = t.strip_prefix('+') {
        (0, r)
    } else if let Some(r) = t.strip_prefix('-') {
        (2, r)
    } else {
        (0, t)
    };
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(err("no terms"));
    }
    if tokens == ["I"] {
        return Ok(SparsePauli { support: vec![], body: PauliOp::new(BitVec::zeros(0), BitVec::zeros(0), phase) });
    }
    let mut terms = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let mut chars = tok.chars();
        let letter = chars.next().ok_or_else(|| err("empty term"))?;
        if !matches!(letter, 'X' | 'Y' | 'Z') {
            return Err(err(&format!("term {tok:?} must start with X, Y or Z")));
        }
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return Err(err(&format!("term {tok:?} needs a 1-based qubit index")));
        }
        let q: usize = digits.parse().map_err(|_| err("qubit index overflow"))?;
        terms.push((letter, q - 1));
    }
    SparsePauli::from_letters(&terms, phase).map_err(|e| match e {
        PauliError::Parse { reason, .. } => err(&reason),
        other => other,
    })
}

pub fn format_pauli(p: &SparsePauli) -> String {
    p.to_string()
}

/// Parses and embeds into `n` qubits in one step.
pub fn parse_dense(text: &str, n: usize) -> Result<PauliOp, PauliError> {
    parse_pauli(text)?.to_dense(n)
}
