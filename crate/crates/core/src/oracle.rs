//! Dense state-vector reference simulator that enumerates every outcome branch.
//!
//! It shares only the circuit IR with the rest of the crate; gate actions are
//! written out directly on amplitudes.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{choi_circuit, StabCircuit, StabOp};
use crate::clifford::{CliffordOp, Gate};
use crate::f2linalg::BitVec;
use crate::pauli::PauliOp;

pub const MAX_QUBITS: usize = 12;
pub const MAX_OUTCOMES: usize = 20;
const PRUNE: f64 = 1e-12;
pub const TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} qubits exceed the dense simulation cap of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("{0} outcomes exceed the enumeration cap of {MAX_OUTCOMES}")]
    TooManyOutcomes(usize),
    #[error("operation {0} deallocates a qubit that is not |0>")]
    DirtyDealloc(usize),
}

/// Amplitudes over `2^n` basis states; qubit `q` is bit `q` of the index.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

fn i_pow(s: u8) -> Complex64 {
    match s % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn mask_of(bits: &BitVec) -> usize {
    bits.ones().fold(0usize, |m, q| m | (1 << q))
}

impl DenseState {
    pub fn zero(n: usize) -> Self {
        Self::basis(n, &BitVec::zeros(n))
    }

    pub fn basis(n: usize, bits: &BitVec) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[mask_of(bits)] = Complex64::new(1.0, 0.0);
        DenseState { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(&mut self, f: f64) {
        for a in &mut self.amps {
            *a *= f;
        }
    }

    pub fn normalized(&self) -> DenseState {
        let mut out = self.clone();
        let nrm = self.norm_sqr().sqrt();
        if nrm > 0.0 {
            out.scale(1.0 / nrm);
        }
        out
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨a|b⟩| ≈ ‖a‖‖b‖`, i.e. equal up to a global phase and scale.
    pub fn parallel(&self, other: &DenseState) -> bool {
        if self.n != other.n {
            return false;
        }
        let (na, nb) = (self.norm_sqr().sqrt(), other.norm_sqr().sqrt());
        if na < 1e-9 || nb < 1e-9 {
            return na < 1e-9 && nb < 1e-9;
        }
        (self.inner(other).norm() / (na * nb)) > 1.0 - TOLERANCE
    }

    /// `P|ψ⟩` for `P = i^s Z^z X^x`.
    pub fn pauli_applied(&self, p: &PauliOp) -> DenseState {
        assert_eq!(p.num_qubits(), self.n);
        let xm = mask_of(p.x());
        let zm = mask_of(p.z());
        let ph = i_pow(p.phase());
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let t = b ^ xm;
            let sign = if (t & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[t] = *a * ph * sign;
        }
        DenseState { n: self.n, amps: out }
    }

    fn combine(&mut self, terms: &[(Complex64, &DenseState)]) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = terms.iter().map(|(c, s)| c * s.amps[i]).sum();
        }
    }

    pub fn apply_pauli(&mut self, p: &PauliOp) {
        *self = self.pauli_applied(p);
    }

    /// `e^{iπP/4} = (I + iP)/√2` for Hermitian `P`.
    pub fn apply_exp(&mut self, p: &PauliOp) {
        let pp = self.pauli_applied(p);
        let me = self.clone();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        self.combine(&[(Complex64::new(r, 0.0), &me), (Complex64::new(0.0, r), &pp)]);
    }

    /// `Λ(P,Q) = (I+P)/2 + (I-P)/2 · Q`.
    pub fn apply_ctrl_pauli(&mut self, p: &PauliOp, q: &PauliOp) {
        let me = self.clone();
        let pm = me.pauli_applied(p);
        let qm = me.pauli_applied(q);
        let pqm = qm.pauli_applied(p);
        let h = Complex64::new(0.5, 0.0);
        self.combine(&[(h, &me), (h, &pm), (h, &qm), (-h, &pqm)]);
    }

    fn permute_basis(&mut self, f: impl Fn(usize) -> usize) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            out[f(b)] = *a;
        }
        self.amps = out;
    }

    pub fn apply_swap(&mut self, i: usize, j: usize) {
        self.permute_basis(|b| {
            let (bi, bj) = ((b >> i) & 1, (b >> j) & 1);
            (b & !(1 << i) & !(1 << j)) | (bj << i) | (bi << j)
        });
    }

    /// `|v⟩ ↦ |Av⟩` on `targets`.
    pub fn apply_css(&mut self, targets: &[usize], a: &crate::f2linalg::BitMatrix) {
        self.permute_basis(|b| {
            let v = BitVec::from_bools(&targets.iter().map(|&t| (b >> t) & 1 == 1).collect::<Vec<_>>());
            let w = a.mul_vec(&v);
            let mut out = b;
            for (i, &t) in targets.iter().enumerate() {
                out = (out & !(1 << t)) | ((w.get(i) as usize) << t);
            }
            out
        });
    }

    /// Projects with `(I + (-1)^m P)/2`, leaving the state unnormalized.
    pub fn project(&mut self, p: &PauliOp, m: bool) {
        let pp = self.pauli_applied(p);
        let me = self.clone();
        let h = Complex64::new(0.5, 0.0);
        let sign = if m { -h } else { h };
        self.combine(&[(h, &me), (sign, &pp)]);
    }

    pub fn insert_qubit(&mut self, pos: usize) {
        let low = (1usize << pos) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len() * 2];
        for (b, a) in self.amps.iter().enumerate() {
            out[(b & low) | ((b & !low) << 1)] = *a;
        }
        self.amps = out;
        self.n += 1;
    }

    /// Keeps the `|0⟩` component of qubit `pos` and drops the qubit; returns
    /// the squared norm of the discarded `|1⟩` component.
    pub fn remove_qubit(&mut self, pos: usize) -> f64 {
        let low = (1usize << pos) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len() / 2];
        let mut lost = 0.0;
        for (b, a) in self.amps.iter().enumerate() {
            if (b >> pos) & 1 == 1 {
                lost += a.norm_sqr();
            } else {
                out[(b & low) | ((b >> 1) & !low)] = *a;
            }
        }
        self.amps = out;
        self.n -= 1;
        lost
    }

    /// Applies a Clifford via its gate synthesis.
    pub fn apply_clifford(&mut self, c: &CliffordOp) {
        for g in c.synthesize() {
            match g {
                Gate::Exp(p) => self.apply_exp(&p),
                Gate::Pauli(p) => self.apply_pauli(&p),
            }
        }
    }

    /// `C|bits⟩` as a dense vector.
    pub fn from_clifford(c: &CliffordOp, bits: &BitVec) -> DenseState {
        let mut s = DenseState::basis(c.num_qubits(), bits);
        s.apply_clifford(c);
        s
    }

    /// Applies one unitary operation of a circuit.
    pub fn apply_unitary_op(&mut self, op: &StabOp) {
        let n = self.n;
        let dense = |s: &crate::pauli::SparsePauli| s.to_dense(n).expect("validated circuit");
        match op {
            StabOp::Pauli(p) => self.apply_pauli(&dense(p)),
            StabOp::Exp(p) => self.apply_exp(&dense(p)),
            StabOp::CtrlPauli(p, q) => self.apply_ctrl_pauli(&dense(p), &dense(q)),
            StabOp::Swap(i, j) => self.apply_swap(*i, *j),
            StabOp::Css { targets, matrix } => self.apply_css(targets, matrix),
            _ => panic!("not a unitary operation"),
        }
    }
}

/// One outcome branch: `state` is normalized and `prob` is its weight.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcomes: BitVec,
    pub prob: f64,
    pub state: DenseState,
}

/// All nonzero-probability branches of a circuit run on a fixed input.
#[derive(Clone, Debug)]
pub struct BranchTree {
    pub n_in: usize,
    pub n_out: usize,
    pub branches: Vec<Branch>,
}

impl BranchTree {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.prob).sum()
    }

    pub fn find(&self, outcomes: &BitVec) -> Option<&Branch> {
        self.branches.iter().find(|b| &b.outcomes == outcomes)
    }
}

/// Runs `c` on `input`, branching on every random bit and measurement.
pub fn enumerate_from(c: &StabCircuit, input: DenseState) -> Result<BranchTree, OracleError> {
    let n_m = c.n_outcomes();
    if n_m > MAX_OUTCOMES {
        return Err(OracleError::TooManyOutcomes(n_m));
    }
    let n_max = c.n_max().max(input.num_qubits());
    if n_max > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(n_max));
    }
    let mut live: Vec<(Vec<bool>, DenseState)> = vec![(Vec::new(), input)];
    for (i, op) in c.ops.iter().enumerate() {
        let mut next = Vec::with_capacity(live.len());
        for (mut outs, mut st) in live {
            match op {
                StabOp::Alloc(pos) => st.insert_qubit(*pos),
                StabOp::Dealloc(pos) => {
                    if st.remove_qubit(*pos) > 1e-9 * st.norm_sqr().max(1e-300) {
                        return Err(OracleError::DirtyDealloc(i));
                    }
                }
                StabOp::Rand => {
                    let mut other = st.clone();
                    let r = std::f64::consts::FRAC_1_SQRT_2;
                    st.scale(r);
                    other.scale(r);
                    let mut o2 = outs.clone();
                    o2.push(true);
                    next.push((o2, other));
                    outs.push(false);
                }
                StabOp::Measure { pauli, .. } => {
                    let p = pauli.to_dense(st.num_qubits()).expect("validated circuit");
                    let mut other = st.clone();
                    other.project(&p, true);
                    st.project(&p, false);
                    if other.norm_sqr() > PRUNE {
                        let mut o2 = outs.clone();
                        o2.push(true);
                        next.push((o2, other));
                    }
                    outs.push(false);
                }
                StabOp::CondPauli { pauli, outcomes, value } => {
                    let parity = outcomes.iter().fold(false, |acc, &o| acc ^ outs[o]);
                    if parity == *value {
                        st.apply_pauli(&pauli.to_dense(st.num_qubits()).expect("validated circuit"));
                    }
                }
                u => st.apply_unitary_op(u),
            }
            if st.norm_sqr() > PRUNE {
                next.push((outs, st));
            }
        }
        live = next;
    }
    let n_out = live.first().map_or(c.n_out(), |b| b.1.num_qubits());
    let mut branches: Vec<Branch> = live
        .into_iter()
        .map(|(outs, st)| Branch { outcomes: BitVec::from_bools(&outs), prob: st.norm_sqr(), state: st.normalized() })
        .collect();
    branches.sort_by_key(|a| a.outcomes.to_bools());
    Ok(BranchTree { n_in: c.n_in, n_out, branches })
}

/// Branches of the Choi circuit: each branch state is the normalized Choi
/// vector of the branch map (circuit qubits first, references last).
pub fn enumerate_instrument(c: &StabCircuit) -> Result<BranchTree, OracleError> {
    if c.n_max() + c.n_in > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(c.n_max() + c.n_in));
    }
    let mut tree = enumerate_from(&choi_circuit(c), DenseState::zero(0))?;
    tree.n_in = c.n_in;
    tree.n_out = c.n_out();
    Ok(tree)
}

/// Branches merged by equal maps: each class has its outcomes, total weight
/// and a representative Choi vector.
#[derive(Clone, Debug)]
pub struct MapClass {
    pub outcomes: Vec<BitVec>,
    pub prob: f64,
    pub state: DenseState,
}

pub fn compress(t: &BranchTree) -> Vec<MapClass> {
    let mut classes: Vec<MapClass> = Vec::new();
    for b in &t.branches {
        match classes.iter_mut().find(|c| c.state.parallel(&b.state)) {
            Some(c) => {
                c.outcomes.push(b.outcomes.clone());
                c.prob += b.prob;
            }
            None => classes.push(MapClass { outcomes: vec![b.outcomes.clone()], prob: b.prob, state: b.state.clone() }),
        }
    }
    classes
}

/// Outcome bijection between compressed instruments, if the instruments agree.
/// Entry `i` is the class index in `t2` matched to class `i` of `t1`.
pub fn instruments_equivalent(t1: &BranchTree, t2: &BranchTree) -> Option<(Vec<MapClass>, Vec<MapClass>, Vec<usize>)> {
    if t1.n_in != t2.n_in || t1.n_out != t2.n_out {
        return None;
    }
    let c1 = compress(t1);
    let c2 = compress(t2);
    if c1.len() != c2.len() {
        return None;
    }
    let mut used = vec![false; c2.len()];
    let mut matching = Vec::with_capacity(c1.len());
    for a in &c1 {
        let j = c2
            .iter()
            .enumerate()
            .position(|(j, b)| !used[j] && (a.prob - b.prob).abs() < 1e-9 && a.state.parallel(&b.state))?;
        used[j] = true;
        matching.push(j);
    }
    Some((c1, c2, matching))
}

pub fn circuits_equivalent(c1: &StabCircuit, c2: &StabCircuit) -> Result<bool, OracleError> {
    Ok(instruments_equivalent(&enumerate_instrument(c1)?, &enumerate_instrument(c2)?).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    #[test]
    fn identity_is_bell() {
        let t = enumerate_instrument(&parse_circuit("inputs 1\n").unwrap()).unwrap();
        assert_eq!(t.branches.len(), 1);
        let a = t.branches[0].state.amplitudes();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0].norm() - r).abs() < 1e-12 && (a[3].norm() - r).abs() < 1e-12);
    }

    #[test]
    fn plus_measurement_branches() {
        let c = parse_circuit("inputs 0\nalloc 1\nh 1\nmeasure Z1\n").unwrap();
        let t = enumerate_instrument(&c).unwrap();
        assert_eq!(t.branches.len(), 2);
        assert!(t.branches.iter().all(|b| (b.prob - 0.5).abs() < 1e-12));
        let bell = parse_circuit("inputs 0\nalloc 1\nalloc 2\nh 1\ncx 1 2\nmeasure Z1 Z2\n").unwrap();
        assert_eq!(enumerate_instrument(&bell).unwrap().branches.len(), 1);
    }

    #[test]
    fn conjugated_measurement() {
        let a = parse_circuit("inputs 1\nmeasure X1\n").unwrap();
        let b = parse_circuit("inputs 1\nh 1\nmeasure Z1\nh 1\n").unwrap();
        assert!(circuits_equivalent(&a, &b).unwrap());
        let c = parse_circuit("inputs 1\nmeasure X1\npauli Z1\n").unwrap();
        assert!(!circuits_equivalent(&a, &c).unwrap());
        assert!(circuits_equivalent(&a, &a).unwrap());
    }
}
