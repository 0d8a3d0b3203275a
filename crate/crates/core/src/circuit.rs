//! Stabilizer circuit IR, its `.stab` text form, and circuit builders.

use std::fmt;

use thiserror::Error;

use crate::clifford::{CliffordError, CliffordOp, Gate};
use crate::f2linalg::{BitMatrix, BitVec};
use crate::pauli::{parse_pauli, PauliError, PauliOp, SparsePauli};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("operation {op}: {msg}")]
    Invalid { op: usize, msg: String },
    #[error("Pauli {0} is not a logical operator of the code")]
    NotLogical(String),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// One elementary operation. Qubit positions and outcome indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StabOp {
    /// New `|0⟩` qubit inserted at this position.
    Alloc(usize),
    /// Qubit at this position, which must be in `|0⟩`, is discarded.
    Dealloc(usize),
    /// Fair random bit appended to the outcome vector.
    Rand,
    Pauli(SparsePauli),
    /// `e^{iπP/4}`
    Exp(SparsePauli),
    CtrlPauli(SparsePauli, SparsePauli),
    Swap(usize, usize),
    /// `|v⟩ ↦ |Av⟩` on the target qubits.
    Css {
        targets: Vec<usize>,
        matrix: BitMatrix,
    },
    /// Applies `pauli` when the parity of `outcomes` equals `value`.
    CondPauli {
        pauli: SparsePauli,
        outcomes: Vec<usize>,
        value: bool,
    },
    Measure {
        pauli: SparsePauli,
        hint: Option<SparsePauli>,
    },
}

impl StabOp {
    pub fn produces_outcome(&self) -> bool {
        matches!(self, StabOp::Rand | StabOp::Measure { .. })
    }

    pub fn is_unitary(&self) -> bool {
        matches!(
            self,
            StabOp::Pauli(_) | StabOp::Exp(_) | StabOp::CtrlPauli(..) | StabOp::Swap(..) | StabOp::Css { .. }
        )
    }

    /// `U P U†` for a unitary operation acting on `p.num_qubits()` qubits.
    pub fn conjugate(&self, p: &PauliOp) -> PauliOp {
        let n = p.num_qubits();
        let dense = |s: &SparsePauli| s.to_dense(n).expect("validated circuit");
        match self {
            StabOp::Pauli(q) => {
                if p.anticommutes(&dense(q)) {
                    p.negate()
                } else {
                    p.clone()
                }
            }
            StabOp::Exp(g) => conj_exp(&dense(g), p),
            StabOp::CtrlPauli(a, b) => {
                let exps = crate::clifford::ctrl_pauli_exps(&dense(a), &dense(b)).expect("validated circuit");
                exps.iter().fold(p.clone(), |acc, g| conj_exp(g, &acc))
            }
            StabOp::Swap(i, j) => {
                let mut out = p.clone();
                out.swap_qubits(*i, *j);
                out
            }
            StabOp::Css { targets, matrix } => {
                let xs = p.x().gather(targets);
                let zs = p.z().gather(targets);
                let inv_t = matrix.invert().expect("validated circuit").transpose();
                let (nx, nz) = (matrix.mul_vec(&xs), inv_t.mul_vec(&zs));
                let mut out = p.clone();
                for (i, &t) in targets.iter().enumerate() {
                    out.x_mut().set(t, nx.get(i));
                    out.z_mut().set(t, nz.get(i));
                }
                out
            }
            _ => panic!("conjugate called on a non-unitary operation"),
        }
    }

    /// `C ← U C` for a unitary operation on `c.num_qubits()` qubits.
    pub fn apply_left(&self, c: &mut CliffordOp) -> Result<(), CliffordError> {
        let n = c.num_qubits();
        let dense = |s: &SparsePauli| s.to_dense(n);
        match self {
            StabOp::Pauli(q) => c.left_mult_pauli(&dense(q)?),
            StabOp::Exp(g) => c.left_mult_exp(&dense(g)?),
            StabOp::CtrlPauli(a, b) => c.left_mult_ctrl_pauli(&dense(a)?, &dense(b)?),
            StabOp::Swap(i, j) => {
                c.left_mult_swap(*i, *j);
                Ok(())
            }
            StabOp::Css { targets, matrix } => {
                let mut full = BitMatrix::identity(n);
                for (i, &ti) in targets.iter().enumerate() {
                    for (j, &tj) in targets.iter().enumerate() {
                        full.set(ti, tj, matrix.get(i, j));
                    }
                }
                c.left_mult_css(&full)
            }
            _ => panic!("apply_left called on a non-unitary operation"),
        }
    }
}

fn conj_exp(g: &PauliOp, p: &PauliOp) -> PauliOp {
    if p.anticommutes(g) {
        g.mult_phase(1).mul(p)
    } else {
        p.clone()
    }
}

/// Sequence of operations on `n_in` input qubits.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StabCircuit {
    pub n_in: usize,
    pub ops: Vec<StabOp>,
}

/// A code `[n, k, C]`: stabilizers `C Z_i C†` for `i < n-k`, logical qubits last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingSpec {
    pub n: usize,
    pub k: usize,
    pub c: CliffordOp,
}

impl EncodingSpec {
    pub fn new(k: usize, c: CliffordOp) -> Self {
        EncodingSpec { n: c.num_qubits(), k, c }
    }

    pub fn n_stabilizers(&self) -> usize {
        self.n - self.k
    }

    pub fn stabilizers(&self) -> Vec<PauliOp> {
        (0..self.n - self.k).map(|i| self.c.z_image(i).clone()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.n, "k": self.k, "C": self.c.to_json() })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, CliffordError> {
        let bad = |why: &str| CliffordError::Tableau(why.to_string());
        let k = v.get("k").and_then(|k| k.as_u64()).ok_or_else(|| bad("missing k"))? as usize;
        let c = CliffordOp::from_json(v.get("C").ok_or_else(|| bad("missing C"))?)?;
        if k > c.num_qubits() {
            return Err(bad("k exceeds n"));
        }
        if let Some(n) = v.get("n").and_then(|n| n.as_u64()) {
            if n as usize != c.num_qubits() {
                return Err(bad("n disagrees with the tableau"));
            }
        }
        Ok(EncodingSpec::new(k, c))
    }
}

impl StabCircuit {
    pub fn new(n_in: usize) -> Self {
        StabCircuit { n_in, ops: Vec::new() }
    }

    pub fn push(&mut self, op: StabOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn n_outcomes(&self) -> usize {
        self.ops.iter().filter(|o| o.produces_outcome()).count()
    }

    pub fn n_rand(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, StabOp::Rand)).count()
    }

    /// Qubit count before each operation, followed by the final count.
    pub fn qubit_trace(&self) -> Vec<usize> {
        let mut n = self.n_in;
        let mut trace = vec![n];
        for op in &self.ops {
            match op {
                StabOp::Alloc(_) => n += 1,
                StabOp::Dealloc(_) => n = n.saturating_sub(1),
                _ => {}
            }
            trace.push(n);
        }
        trace
    }

    pub fn n_out(&self) -> usize {
        *self.qubit_trace().last().expect("trace is nonempty")
    }

    pub fn n_max(&self) -> usize {
        self.qubit_trace().into_iter().max().unwrap_or(0)
    }

    /// Checks index ranges, outcome references and operand constraints.
    pub fn validate(&self) -> Result<Vec<usize>, CircuitError> {
        let mut n = self.n_in;
        let mut n_o = 0;
        let mut trace = vec![n];
        for (i, op) in self.ops.iter().enumerate() {
            let fail = |msg: String| CircuitError::Invalid { op: i, msg };
            let in_range =
                |p: &SparsePauli| -> Result<PauliOp, CircuitError> { p.to_dense(n).map_err(|e| fail(e.to_string())) };
            let observable = |p: &SparsePauli| -> Result<PauliOp, CircuitError> {
                let d = in_range(p)?;
                if !d.is_hermitian() {
                    return Err(fail(format!("{p} is not Hermitian")));
                }
                Ok(d)
            };
            match op {
                StabOp::Alloc(pos) => {
                    if *pos > n {
                        return Err(fail(format!("alloc position {} beyond {} qubits", pos + 1, n)));
                    }
                    n += 1;
                }
                StabOp::Dealloc(pos) => {
                    if *pos >= n {
                        return Err(fail(format!("dealloc position {} out of range", pos + 1)));
                    }
                    n -= 1;
                }
                StabOp::Rand => n_o += 1,
                StabOp::Pauli(p) => {
                    in_range(p)?;
                }
                StabOp::Exp(p) => {
                    observable(p)?;
                }
                StabOp::CtrlPauli(p, q) => {
                    let (p, q) = (observable(p)?, observable(q)?);
                    if p.anticommutes(&q) {
                        return Err(fail(format!("controlled-Pauli operands {p} and {q} anticommute")));
                    }
                }
                StabOp::Swap(a, b) => {
                    if a == b || *a >= n || *b >= n {
                        return Err(fail(format!("bad swap {} {}", a + 1, b + 1)));
                    }
                }
                StabOp::Css { targets, matrix } => {
                    let mut sorted = targets.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != targets.len() || targets.iter().any(|&t| t >= n) {
                        return Err(fail("css targets must be distinct and in range".into()));
                    }
                    if matrix.shape() != (targets.len(), targets.len()) || matrix.invert().is_err() {
                        return Err(fail("css matrix must be square and invertible".into()));
                    }
                }
                StabOp::CondPauli { pauli, outcomes, .. } => {
                    in_range(pauli)?;
                    if let Some(&o) = outcomes.iter().find(|&&o| o >= n_o) {
                        return Err(fail(format!("condition references outcome {} before it exists", o + 1)));
                    }
                }
                StabOp::Measure { pauli, hint } => {
                    let p = observable(pauli)?;
                    if let Some(h) = hint {
                        let h = observable(h)?;
                        if !h.anticommutes(&p) {
                            return Err(fail(format!("hint {h} must anticommute with {p}")));
                        }
                    }
                    n_o += 1;
                }
            }
            trace.push(n);
        }
        Ok(trace)
    }

    /// `self` followed by `next`; outcome references of `next` are shifted.
    pub fn then(&self, next: &StabCircuit) -> StabCircuit {
        let shift = self.n_outcomes();
        let mut out = self.clone();
        for op in &next.ops {
            out.ops.push(match op {
                StabOp::CondPauli { pauli, outcomes, value } => StabOp::CondPauli {
                    pauli: pauli.clone(),
                    outcomes: outcomes.iter().map(|o| o + shift).collect(),
                    value: *value,
                },
                other => other.clone(),
            });
        }
        out
    }

    /// Appends the gates of `c` acting on `targets` (qubit `q` of `c` on `targets[q]`).
    pub fn push_clifford(&mut self, c: &CliffordOp, targets: &[usize]) {
        for g in c.synthesize() {
            match g {
                Gate::Exp(p) => self.ops.push(StabOp::Exp(embed(&p, targets))),
                Gate::Pauli(p) => self.ops.push(StabOp::Pauli(embed(&p, targets))),
            }
        }
    }

    /// Outcome positions produced by `Rand`, in order.
    pub fn rand_positions(&self) -> Vec<usize> {
        let mut idx = 0;
        let mut out = Vec::new();
        for op in &self.ops {
            match op {
                StabOp::Rand => {
                    out.push(idx);
                    idx += 1;
                }
                StabOp::Measure { .. } => idx += 1,
                _ => {}
            }
        }
        out
    }
}

/// Places a Pauli on `p.num_qubits()` qubits onto `targets`.
pub fn embed(p: &PauliOp, targets: &[usize]) -> SparsePauli {
    let width = targets.iter().max().map_or(0, |m| m + 1);
    let mut x = BitVec::zeros(width);
    let mut z = BitVec::zeros(width);
    for (q, &t) in targets.iter().enumerate() {
        x.set(t, p.x().get(q));
        z.set(t, p.z().get(q));
    }
    PauliOp::new(x, z, p.phase()).to_sparse()
}

/// Zero-input circuit preparing `n_in` Bell pairs (circuit qubit `i` with
/// reference qubit `n_in + i`) and then running `c` on the first half.
pub fn choi_circuit(c: &StabCircuit) -> StabCircuit {
    let n = c.n_in;
    let mut out = StabCircuit::new(0);
    for q in 0..2 * n {
        out.ops.push(StabOp::Alloc(q));
    }
    for i in 0..n {
        // e^{-iπ Y_i X_j /4} maps Z_i to X_i X_j and Z_j to -Y_i Y_j
        let g = SparsePauli::from_letters(&[('Y', i), ('X', n + i)], 2).expect("distinct qubits");
        out.ops.push(StabOp::Exp(g));
    }
    out.ops.extend(c.ops.iter().cloned());
    out
}

/// Allocates syndrome `m` from fresh random bits and applies `C`.
pub fn encoder(spec: &EncodingSpec) -> StabCircuit {
    let r = spec.n - spec.k;
    let mut c = StabCircuit::new(spec.k);
    for _ in 0..r {
        c.ops.push(StabOp::Rand);
    }
    for j in 0..r {
        c.ops.push(StabOp::Alloc(j));
    }
    for j in 0..r {
        c.ops.push(StabOp::CondPauli { pauli: single('X', j), outcomes: vec![j], value: true });
    }
    c.push_clifford(&spec.c, &(0..spec.n).collect::<Vec<_>>());
    c
}

/// Applies `C†` and destructively measures the syndrome qubits.
pub fn unencoder(spec: &EncodingSpec) -> StabCircuit {
    let r = spec.n - spec.k;
    let mut c = StabCircuit::new(spec.n);
    c.push_clifford(&spec.c.inverse(), &(0..spec.n).collect::<Vec<_>>());
    for j in 0..r {
        c.ops.push(StabOp::Measure { pauli: single('Z', j), hint: None });
    }
    for j in 0..r {
        c.ops.push(StabOp::CondPauli { pauli: single('X', j), outcomes: vec![j], value: true });
    }
    for _ in 0..r {
        c.ops.push(StabOp::Dealloc(0));
    }
    c
}

pub fn single(letter: char, q: usize) -> SparsePauli {
    SparsePauli::from_letters(&[(letter, q)], 0).expect("single-qubit Pauli")
}

/// `C† P C = Z^g ⊗ L` for `P` in the normalizer of the code's stabilizer group.
pub fn logical_map(spec: &EncodingSpec, p: &PauliOp) -> Result<(BitVec, PauliOp), CircuitError> {
    let r = spec.n - spec.k;
    let q = spec.c.preimage(p)?;
    if q.x().ones().any(|i| i < r) {
        return Err(CircuitError::NotLogical(p.to_string()));
    }
    let g = q.z().slice(0..r);
    let l = PauliOp::new(q.x().slice(r..spec.n), q.z().slice(r..spec.n), q.phase());
    Ok((g, l))
}

/// Output of [`pauli_propagation`].
#[derive(Clone, Debug)]
pub struct Propagation {
    pub circuit: StabCircuit,
    pub a_x: BitMatrix,
    pub a_z: BitMatrix,
    pub v_x: BitVec,
    pub v_z: BitVec,
    pub m: BitMatrix,
    pub v0: BitVec,
}

/// Removes conditional Paulis: `c` on outcome `v` followed by
/// `X^{A_x v + v_x} Z^{A_z v + v_z}` equals the stripped circuit on
/// `v' = M v + v0`, up to global phase.
pub fn pauli_propagation(c: &StabCircuit) -> Result<Propagation, CircuitError> {
    c.validate()?;
    let n_m = c.n_outcomes();
    let mut n = c.n_in;
    // frame column per outcome plus the constant column
    let mut cols: Vec<PauliOp> = vec![PauliOp::identity(n); n_m];
    let mut cst = PauliOp::identity(n);
    let mut m = BitMatrix::identity(n_m);
    let mut v0 = BitVec::zeros(n_m);
    let mut stripped = StabCircuit::new(c.n_in);
    let mut n_o = 0;
    for (i, op) in c.ops.iter().enumerate() {
        match op {
            StabOp::Alloc(pos) => {
                for p in cols.iter_mut().chain(std::iter::once(&mut cst)) {
                    p.insert_qubit(*pos);
                }
                n += 1;
            }
            StabOp::Dealloc(pos) => {
                let frame_x = cols.iter().chain(std::iter::once(&cst)).any(|p| p.x().get(*pos));
                if frame_x {
                    return Err(CircuitError::Invalid {
                        op: i,
                        msg: "deallocated qubit carries a conditional X and would not be |0> without it".into(),
                    });
                }
                for p in cols.iter_mut().chain(std::iter::once(&mut cst)) {
                    p.z_mut().set(*pos, false);
                    *p = p.unsigned();
                    p.remove_qubit(*pos);
                }
                n -= 1;
            }
            StabOp::Rand => n_o += 1,
            StabOp::CondPauli { pauli, outcomes, value } => {
                let p = pauli.to_dense(n)?.unsigned();
                for &o in outcomes {
                    cols[o] = cols[o].mul(&p).unsigned();
                }
                // applied when parity + value = 0, so the constant part is value + 1
                if !*value {
                    cst = cst.mul(&p).unsigned();
                }
                continue;
            }
            StabOp::Measure { pauli, .. } => {
                let p = pauli.to_dense(n)?;
                for (o, col) in cols.iter().enumerate().take(n_o) {
                    m.set(n_o, o, col.anticommutes(&p));
                }
                v0.set(n_o, cst.anticommutes(&p));
                n_o += 1;
            }
            u => {
                for p in cols.iter_mut().chain(std::iter::once(&mut cst)) {
                    *p = u.conjugate(p).unsigned();
                }
            }
        }
        stripped.ops.push(op.clone());
    }
    let rows = |f: &dyn Fn(&PauliOp) -> &BitVec| {
        BitMatrix::from_cols(n, &cols.iter().map(|p| f(p).clone()).collect::<Vec<_>>())
    };
    Ok(Propagation {
        circuit: stripped,
        a_x: rows(&|p| p.x()),
        a_z: rows(&|p| p.z()),
        v_x: cst.x().clone(),
        v_z: cst.z().clone(),
        m,
        v0,
    })
}

// ---------------------------------------------------------------------------
// text format

impl fmt::Display for StabOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabOp::Alloc(p) => write!(f, "alloc {}", p + 1),
            StabOp::Dealloc(p) => write!(f, "dealloc {}", p + 1),
            StabOp::Rand => f.write_str("rand"),
            StabOp::Pauli(p) => write!(f, "pauli {p}"),
            StabOp::Exp(p) => write!(f, "exp {p}"),
            StabOp::CtrlPauli(p, q) => write!(f, "cpauli {p} ; {q}"),
            StabOp::Swap(a, b) => write!(f, "swap {} {}", a + 1, b + 1),
            StabOp::Css { targets, matrix } => {
                f.write_str("css")?;
                for t in targets {
                    write!(f, " {}", t + 1)?;
                }
                f.write_str(" :")?;
                for r in matrix.rows() {
                    write!(f, " {r}")?;
                }
                Ok(())
            }
            StabOp::CondPauli { pauli, outcomes, value } => {
                let refs: Vec<String> = outcomes.iter().map(|o| format!("o{}", o + 1)).collect();
                write!(f, "cond {pauli} if {} == {}", refs.join(","), u8::from(*value))
            }
            StabOp::Measure { pauli, hint } => match hint {
                Some(h) => write!(f, "measure {pauli} hint {h}"),
                None => write!(f, "measure {pauli}"),
            },
        }
    }
}

impl fmt::Display for StabCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.n_in)?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

pub fn format_circuit(c: &StabCircuit) -> String {
    c.to_string()
}

/// Parses the `.stab` format and validates the result.
pub fn parse_circuit(text: &str) -> Result<StabCircuit, CircuitError> {
    let mut circuit: Option<StabCircuit> = None;
    let mut op_lines = Vec::new();
    let mut n = 0usize;
    let mut n_o = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CircuitError::Parse { line: line_no, msg };
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let Some(c) = circuit.as_mut() else {
            if head != "inputs" {
                return Err(err("first line must be `inputs N`".into()));
            }
            n = rest.parse().map_err(|_| err(format!("bad input count {rest:?}")))?;
            circuit = Some(StabCircuit::new(n));
            continue;
        };
        let pauli = |s: &str| parse_pauli(s).map_err(|e| err(e.to_string()));
        let qubit = |s: &str| -> Result<usize, CircuitError> {
            let q: usize = s.trim().parse().map_err(|_| err(format!("bad qubit index {s:?}")))?;
            if q == 0 {
                return Err(err("qubit indices are 1-based".into()));
            }
            Ok(q - 1)
        };
        let args: Vec<&str> = rest.split_whitespace().collect();
        let two_qubits = || -> Result<(usize, usize), CircuitError> {
            if args.len() != 2 {
                return Err(err(format!("`{head}` takes two qubit indices")));
            }
            Ok((qubit(args[0])?, qubit(args[1])?))
        };
        let one_qubit = || -> Result<usize, CircuitError> {
            if args.len() != 1 {
                return Err(err(format!("`{head}` takes one qubit index")));
            }
            qubit(args[0])
        };
        let mut new_ops: Vec<StabOp> = Vec::new();
        match head {
            "alloc" => new_ops.push(StabOp::Alloc(if args.is_empty() { n } else { one_qubit()? })),
            "dealloc" => new_ops.push(StabOp::Dealloc(one_qubit()?)),
            "rand" => {
                if !args.is_empty() {
                    return Err(err("`rand` takes no arguments".into()));
                }
                new_ops.push(StabOp::Rand)
            }
            "pauli" => new_ops.push(StabOp::Pauli(pauli(rest)?)),
            "exp" => new_ops.push(StabOp::Exp(pauli(rest)?)),
            "cpauli" => {
                let (a, b) = rest.split_once(';').ok_or_else(|| err("cpauli needs `P ; Q`".into()))?;
                new_ops.push(StabOp::CtrlPauli(pauli(a)?, pauli(b)?));
            }
            "swap" => {
                let (a, b) = two_qubits()?;
                new_ops.push(StabOp::Swap(a, b));
            }
            "css" => {
                let (t, m) = rest.split_once(':').ok_or_else(|| err("css needs `targets : rows`".into()))?;
                let targets = t.split_whitespace().map(qubit).collect::<Result<Vec<_>, _>>()?;
                let rows: Vec<&str> = m.split_whitespace().collect();
                let matrix = BitMatrix::parse_rows(targets.len(), &rows).map_err(|e| err(e.to_string()))?;
                new_ops.push(StabOp::Css { targets, matrix });
            }
            "cond" => {
                let (p, cond) = rest.split_once(" if ").ok_or_else(|| err("cond needs `P if o1,... == B`".into()))?;
                let (refs, value) = cond.split_once("==").ok_or_else(|| err("cond needs `== B`".into()))?;
                let value = match value.trim() {
                    "0" => false,
                    "1" => true,
                    v => return Err(err(format!("condition value {v:?} must be 0 or 1"))),
                };
                let mut outcomes = Vec::new();
                for r in refs.split(',').map(str::trim).filter(|r| !r.is_empty()) {
                    let k: usize = r
                        .strip_prefix('o')
                        .and_then(|d| d.parse().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| err(format!("bad outcome reference {r:?}")))?;
                    outcomes.push(k - 1);
                }
                new_ops.push(StabOp::CondPauli { pauli: pauli(p)?, outcomes, value });
            }
            "measure" => {
                let (p, hint) = match rest.split_once(" hint ") {
                    Some((p, h)) => (pauli(p)?, Some(pauli(h)?)),
                    None => (pauli(rest)?, None),
                };
                new_ops.push(StabOp::Measure { pauli: p, hint });
            }
            "h" => {
                let q = one_qubit()?;
                for l in ['Z', 'X', 'Z'] {
                    new_ops.push(StabOp::Exp(single(l, q)));
                }
            }
            "s" => {
                let q = one_qubit()?;
                new_ops.push(StabOp::Exp(single('Z', q).negate()));
            }
            "cx" | "cz" => {
                let (a, b) = two_qubits()?;
                let target = if head == "cx" { 'X' } else { 'Z' };
                new_ops.push(StabOp::CtrlPauli(single('Z', a), single(target, b)));
            }
            "mz!" => {
                let q = one_qubit()?;
                new_ops.push(StabOp::Measure { pauli: single('Z', q), hint: None });
                new_ops.push(StabOp::CondPauli { pauli: single('X', q), outcomes: vec![n_o], value: true });
                new_ops.push(StabOp::Dealloc(q));
            }
            "inputs" => return Err(err("`inputs` may appear only once".into())),
            other => return Err(err(format!("unknown operation `{other}`"))),
        }
        for op in new_ops {
            match &op {
                StabOp::Alloc(_) => n += 1,
                StabOp::Dealloc(_) => n = n.saturating_sub(1),
                o if o.produces_outcome() => n_o += 1,
                _ => {}
            }
            c.ops.push(op);
            op_lines.push(line_no);
        }
    }
    let circuit = circuit.ok_or(CircuitError::Parse { line: 0, msg: "missing `inputs N` line".into() })?;
    circuit.validate().map_err(|e| match e {
        CircuitError::Invalid { op, msg } => CircuitError::Parse { line: op_lines[op], msg },
        other => other,
    })?;
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "inputs 1\n# comment\nalloc 2\nh 1\ncx 1 2\nmeasure +Z1 Z2\nrand\ncond -X2 if o1,o2 == 1\ncss 1 2 : 10 11\nmeasure X1 hint Z1\nmz! 2\n";
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.n_in, 1);
        assert_eq!(c.n_out(), 1);
        assert_eq!(c.n_outcomes(), 4);
        let again = parse_circuit(&format_circuit(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn validation_errors() {
        assert!(parse_circuit("inputs 0\n").unwrap().ops.is_empty());
        let e = parse_circuit("inputs 0\nmeasure Z1\n").unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 2, .. }), "{e}");
        let e = parse_circuit("inputs 1\nmeasure Z1\ncond X1 if o2 == 1\n").unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 3, .. }), "{e}");
        assert!(parse_circuit("inputs 1\nmeasure +i Z1\n").is_err());
        assert!(parse_circuit("inputs 1\ncpauli X1 ; Z1\n").is_err());
        assert!(parse_circuit("alloc 1\n").is_err());
    }

    #[test]
    fn propagation_without_conditions_is_trivial() {
        let c = parse_circuit("inputs 2\ncx 1 2\nmeasure Z1\nrand\n").unwrap();
        let p = pauli_propagation(&c).unwrap();
        assert_eq!(p.circuit, c);
        assert_eq!(p.m, BitMatrix::identity(2));
        assert!(p.a_x.is_zero() && p.a_z.is_zero() && p.v0.is_zero());
    }

    #[test]
    fn propagation_trailing_condition() {
        let c = parse_circuit("inputs 1\nmeasure Z1\nrand\ncond X1 if o1,o2 == 1\n").unwrap();
        let p = pauli_propagation(&c).unwrap();
        assert_eq!(p.a_x, BitMatrix::from_strs(&["11"]));
        assert!(p.a_z.is_zero());
        assert_eq!(p.circuit.ops.len(), 2);
    }

    #[test]
    fn logical_map_of_stabilizer() {
        let spec = EncodingSpec::new(1, CliffordOp::css(&BitMatrix::from_strs(&["10", "11"])).unwrap());
        let stab = spec.stabilizers()[0].clone();
        let (g, l) = logical_map(&spec, &stab).unwrap();
        assert_eq!(g.to_string(), "1");
        assert!(l.is_identity());
        assert!(logical_map(&spec, &PauliOp::x_on(2, 0)).is_err());
    }
}
