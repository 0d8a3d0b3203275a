//! Outcome-specific and outcome-complete simulation of zero-input circuits.
//!
//! The complete simulator tracks one Clifford `Co`, an `n × n_r` matrix `A`
//! and an affine outcome map `v = v0 + M r`, so that for every `r ∈ F2^{n_r}`
//! the branch state is `Co|A r⟩`.

use thiserror::Error;

use crate::circuit::{CircuitError, StabCircuit, StabOp};
use crate::clifford::{CliffordError, CliffordOp};
use crate::f2linalg::{BitMatrix, BitVec};
use crate::pauli::{PauliOp, SparsePauli};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error("simulation needs a circuit without input qubits, got {0}")]
    HasInputs(usize),
    #[error("operation {0}: deallocated qubit is not |0> on every branch")]
    DirtyDealloc(usize),
    #[error("operation {op}: bad measurement hint: {msg}")]
    BadHint { op: usize, msg: String },
    #[error("outcome vector has length {got}, expected {expected}")]
    OutcomeLength { got: usize, expected: usize },
}

/// Conditional probability of one outcome given the earlier ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prob {
    One,
    Half,
}

impl Prob {
    pub fn value(self) -> f64 {
        match self {
            Prob::One => 1.0,
            Prob::Half => 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpecificResult {
    pub p: Vec<Prob>,
    pub co: CliffordOp,
    pub v: BitVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompleteResult {
    pub p: Vec<Prob>,
    pub co: CliffordOp,
    pub a: BitMatrix,
    pub m: BitMatrix,
    pub v0: BitVec,
}

impl CompleteResult {
    pub fn n_r(&self) -> usize {
        self.m.ncols()
    }

    /// Outcome vector of branch `r`.
    pub fn outcome(&self, r: &BitVec) -> BitVec {
        self.m.mul_vec(r).xor(&self.v0)
    }

    /// Computational basis input of branch `r`, i.e. the state is `Co|a⟩`.
    pub fn input_bits(&self, r: &BitVec) -> BitVec {
        self.a.mul_vec(r)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &BitMatrix| m.rows().iter().map(|r| r.to_string()).collect::<Vec<_>>();
        serde_json::json!({
            "p": self.p.iter().map(|p| p.value()).collect::<Vec<_>>(),
            "Co": self.co.to_json(),
            "A": rows(&self.a),
            "M": rows(&self.m),
            "v0": self.v0.to_string(),
        })
    }
}

/// Where fresh random outcomes come from.
enum Mode<'a> {
    /// Each random outcome becomes a new free parameter.
    Complete,
    /// Random outcomes take the given values.
    Specific(&'a BitVec),
}

/// Mutable simulation state. Qubit slots of `co` are addressed through
/// `map` (circuit position to slot); deallocated slots wait in `pending`.
pub struct SimState {
    co: CliffordOp,
    a: Vec<BitVec>,
    n_r: usize,
    m_rows: Vec<BitVec>,
    v0: Vec<bool>,
    p: Vec<Prob>,
    map: Vec<usize>,
    pending: Vec<usize>,
}

impl SimState {
    fn new() -> Self {
        SimState {
            co: CliffordOp::identity(0),
            a: Vec::new(),
            n_r: 0,
            m_rows: Vec::new(),
            v0: Vec::new(),
            p: Vec::new(),
            map: Vec::new(),
            pending: Vec::new(),
        }
    }

    fn slots(&self) -> usize {
        self.co.num_qubits()
    }

    fn dense(&self, p: &SparsePauli) -> PauliOp {
        let n = self.slots();
        let mut x = BitVec::zeros(n);
        let mut z = BitVec::zeros(n);
        let body = p.body();
        for (i, &q) in p.support().iter().enumerate() {
            x.set(self.map[q], body.x().get(i));
            z.set(self.map[q], body.z().get(i));
        }
        PauliOp::new(x, z, body.phase())
    }

    /// `vᵀ A` for a slot indicator `v`.
    fn combine_rows(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.n_r);
        for i in v.ones() {
            out.xor_assign(&self.a[i]);
        }
        out
    }

    fn new_param(&mut self) {
        self.n_r += 1;
        for row in &mut self.a {
            row.push(false);
        }
    }

    fn push_outcome(&mut self, row: BitVec, v0: bool, p: Prob) {
        self.m_rows.push(row);
        self.v0.push(v0);
        self.p.push(p);
    }

    fn apply(&mut self, i: usize, op: &StabOp, mode: &Mode) -> Result<(), SimError> {
        match op {
            StabOp::Alloc(pos) => {
                let slot = self.slots();
                self.co.insert_qubit(slot);
                self.a.push(BitVec::zeros(self.n_r));
                self.map.insert(*pos, slot);
            }
            StabOp::Dealloc(pos) => {
                let slot = self.map.remove(*pos);
                if !self.is_clean(slot) {
                    return Err(SimError::DirtyDealloc(i));
                }
                self.pending.push(slot);
                if self.pending.len() > 4 && self.pending.len() * 2 > self.map.len() {
                    self.finalize_bulk_dealloc()?;
                }
            }
            StabOp::Rand => self.random_outcome(mode),
            StabOp::Swap(a, b) => self.map.swap(*a, *b),
            StabOp::Pauli(p) => self.co.left_mult_pauli(&self.dense(p))?,
            StabOp::Exp(p) => self.co.left_mult_exp(&self.dense(p))?,
            StabOp::CtrlPauli(p, q) => self.co.left_mult_ctrl_pauli(&self.dense(p), &self.dense(q))?,
            StabOp::Css { targets, matrix } => {
                let n = self.slots();
                let mut full = BitMatrix::identity(n);
                for (r, &tr) in targets.iter().enumerate() {
                    for (c, &tc) in targets.iter().enumerate() {
                        full.set(self.map[tr], self.map[tc], matrix.get(r, c));
                    }
                }
                self.co.left_mult_css(&full)?;
            }
            StabOp::CondPauli { pauli, outcomes, value } => {
                // applied iff cᵀ(M r + v0) + value + 1 = 1
                let mut f = BitVec::zeros(self.n_r);
                let mut b0 = !*value;
                for &o in outcomes {
                    f.xor_prefix(&self.m_rows[o]);
                    b0 ^= self.v0[o];
                }
                let p = self.dense(pauli);
                if !f.is_zero() {
                    let pt = self.co.preimage_unchecked(&p);
                    for j in pt.x().ones() {
                        self.a[j].xor_assign(&f);
                    }
                }
                if b0 {
                    self.co.left_mult_pauli(&p)?;
                }
            }
            StabOp::Measure { pauli, hint } => self.measure(i, pauli, hint.as_ref(), mode)?,
        }
        Ok(())
    }

    fn random_outcome(&mut self, mode: &Mode) {
        let l = self.v0.len();
        match mode {
            Mode::Complete => {
                self.new_param();
                self.push_outcome(BitVec::unit(self.n_r, self.n_r - 1), false, Prob::Half);
            }
            Mode::Specific(v) => self.push_outcome(BitVec::zeros(0), v.get(l), Prob::Half),
        }
    }

    fn measure(
        &mut self,
        i: usize,
        pauli: &SparsePauli,
        hint: Option<&SparsePauli>,
        mode: &Mode,
    ) -> Result<(), SimError> {
        let p = self.dense(pauli);
        let pt = self.co.preimage_unchecked(&p);
        if pt.x().is_zero() {
            let row = self.combine_rows(pt.z());
            let v0 = pt.phase() == 2;
            if let Some(h) = hint {
                // a hint on a deterministic measurement is still checked for anticommutation
                if self.dense(h).commutes(&p) {
                    return Err(SimError::BadHint { op: i, msg: "hint commutes with the measured Pauli".into() });
                }
            }
            self.push_outcome(row, v0, Prob::One);
            return Ok(());
        }
        // Q stabilizes the state up to the sign (-1)^{b + gᵀ A r} and anticommutes with P
        let (q, g, b) = match hint {
            Some(h) => {
                let q = self.dense(h);
                if !q.is_hermitian() || q.commutes(&p) {
                    return Err(SimError::BadHint { op: i, msg: "hint must be Hermitian and anticommute".into() });
                }
                let qt = self.co.preimage_unchecked(&q);
                if !qt.x().is_zero() {
                    return Err(SimError::BadHint { op: i, msg: "hint does not stabilize the state".into() });
                }
                let b = qt.sign();
                (q, qt.z().clone(), b)
            }
            None => {
                let j = pt.x().first_one().expect("x part is nonzero");
                (self.co.z_image(j).clone(), BitVec::unit(self.slots(), j), false)
            }
        };
        let l = self.v0.len();
        let dep = self.combine_rows(&g);
        let g_exp = q.mul(&p).mult_phase(1);
        self.co.left_mult_exp(&g_exp)?;
        let constant = match mode {
            Mode::Complete => b,
            Mode::Specific(v) => b ^ v.get(l),
        };
        if constant {
            self.co.left_mult_pauli(&q)?;
        }
        // a' = A r + x (r_new + gᵀ A r)
        let x = pt.x();
        if !dep.is_zero() {
            for j in x.ones() {
                self.a[j].xor_assign(&dep);
            }
        }
        match mode {
            Mode::Complete => {
                self.new_param();
                for j in x.ones() {
                    self.a[j].set(self.n_r - 1, true);
                }
                self.push_outcome(BitVec::unit(self.n_r, self.n_r - 1), false, Prob::Half);
            }
            Mode::Specific(v) => self.push_outcome(BitVec::zeros(0), v.get(l), Prob::Half),
        }
        Ok(())
    }

    /// Slot is `|0⟩` on every branch: `Co† Z Co = +Z^g` with `gᵀA = 0`.
    fn is_clean(&self, slot: usize) -> bool {
        let q = self.co.z_preimage(slot);
        q.x().is_zero() && !q.sign() && self.combine_rows(q.z()).is_zero()
    }

    /// Resolves every pending deallocation: each slot is decoupled from the
    /// rest of the tableau and removed.
    pub fn finalize_bulk_dealloc(&mut self) -> Result<(), SimError> {
        let mut pending = std::mem::take(&mut self.pending);
        pending.sort_unstable_by(|a, b| b.cmp(a));
        for slot in pending {
            let mut a = BitMatrix::from_rows(self.n_r, std::mem::take(&mut self.a));
            let res = self.co.disentangle_family(slot, &mut a);
            self.a = a.into_rows();
            res.map_err(|_| SimError::DirtyDealloc(usize::MAX))?;
            self.co.remove_qubit(slot)?;
            self.a.remove(slot);
            for s in self.map.iter_mut() {
                if *s > slot {
                    *s -= 1;
                }
            }
        }
        Ok(())
    }

    /// Moves slots into circuit order so that qubit `q` of `co` is position `q`.
    fn sort_slots(&mut self) {
        for q in 0..self.map.len() {
            let s = self.map[q];
            if s != q {
                self.co.left_mult_swap(q, s);
                // the position that lived on slot q now lives on slot s
                if let Some(other) = self.map.iter().position(|&t| t == q) {
                    self.map[other] = s;
                }
                self.map[q] = q;
            }
        }
    }
}

fn run(c: &StabCircuit, mode: Mode) -> Result<SimState, SimError> {
    if c.n_in != 0 {
        return Err(SimError::HasInputs(c.n_in));
    }
    c.validate()?;
    let mut st = SimState::new();
    for (i, op) in c.ops.iter().enumerate() {
        st.apply(i, op, &mode)?;
    }
    st.finalize_bulk_dealloc()?;
    st.sort_slots();
    Ok(st)
}

/// Simulates a single outcome path: random outcomes take the values in
/// `v_tilde`, which must have one entry per outcome (others are ignored).
pub fn simulate_specific(c: &StabCircuit, v_tilde: &BitVec) -> Result<SpecificResult, SimError> {
    if v_tilde.len() != c.n_outcomes() {
        return Err(SimError::OutcomeLength { got: v_tilde.len(), expected: c.n_outcomes() });
    }
    let st = run(c, Mode::Specific(v_tilde))?;
    Ok(SpecificResult { p: st.p, co: st.co, v: BitVec::from_bools(&st.v0) })
}

/// Simulates every outcome path at once.
pub fn simulate_complete(c: &StabCircuit) -> Result<CompleteResult, SimError> {
    let st = run(c, Mode::Complete)?;
    let n_r = st.n_r;
    let m = BitMatrix::from_rows(n_r, st.m_rows.iter().map(|r| r.resized(n_r)).collect());
    let a = BitMatrix::from_rows(n_r, st.a);
    Ok(CompleteResult { p: st.p, co: st.co, a, m, v0: BitVec::from_bools(&st.v0) })
}

/// Outcome-complete simulation assembled from `n_r + 1` outcome-specific runs.
pub fn simulate_complete_via_specific(c: &StabCircuit) -> Result<CompleteResult, SimError> {
    let n_m = c.n_outcomes();
    let base = simulate_specific(c, &BitVec::zeros(n_m))?;
    let random: Vec<usize> = (0..n_m).filter(|&l| base.p[l] == Prob::Half).collect();
    let n = base.co.num_qubits();
    let mut m = BitMatrix::zeros(n_m, 0);
    let mut a = BitMatrix::zeros(n, 0);
    let co_inv = base.co.inverse();
    for &l in &random {
        let run = simulate_specific(c, &BitVec::unit(n_m, l))?;
        m.push_col(&run.v.xor(&base.v));
        // Co^(0)† Co^(l) |0⟩ = |a⟩ up to phase
        let u = co_inv.compose(&run.co)?;
        let col = BitVec::from_bools(
            &(0..n)
                .map(|i| {
                    let pre = u.z_preimage(i);
                    debug_assert!(pre.x().is_zero());
                    pre.sign()
                })
                .collect::<Vec<_>>(),
        );
        a.push_col(&col);
    }
    Ok(CompleteResult { p: base.p, co: base.co, a, m, v0: base.v })
}
