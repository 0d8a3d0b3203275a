//! Equivalence checking of general forms and whole circuits.
//!
//! Two general forms are compared in the frame of the second one. With
//! `C_L = L₂†L₁` and `C_R = R₂†R₁` both preserving the respective code
//! structure, the map of the first form upon `o = r₁ ⊕ m` becomes
//! `|g⟩ ⊗ X^{q_x} Z^{q_z} ⟨m'|` (times `Π = C_Δ^R C_Δ^L†`), where `m'` is an
//! invertible affine image of `m` and `(g, q_x, q_z) = Δ + B (r₁ ⊕ m')` is
//! affine. The second form gives `S (r₂ ⊕ m')` with its stacked condition
//! matrix `S`, and the forms are equivalent iff the random column spans of
//! `B` and `S` agree and `Δ` as well as every column of `B_m + S_m` lie in
//! that span.

use std::fmt;

use thiserror::Error;

use crate::circuit::{single, EncodingSpec, StabCircuit, StabOp};
use crate::clifford::{CliffordError, CliffordOp};
use crate::f2linalg::{BitMatrix, BitVec, LinalgError};
use crate::genform::{general_form, GenFormError, GeneralForm};
use crate::pauli::PauliOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    GenForm(#[from] GenFormError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("circuits act on different qubit counts: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
}

/// `C₂†C₁ Z_j (C₂†C₁)† = (-1)^{m0_j} Z^{A_j}` on the stabilizer qubits, and on
/// the logical qubits `Z_{n-k+j} ↦ Z^{(A_x)_j} ⊗ C_Δ Z_j C_Δ†`,
/// `X_{n-k+j} ↦ Z^{(A_z)_j} ⊗ C_Δ X_j C_Δ†`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingRelation {
    pub c_delta: CliffordOp,
    pub a: BitMatrix,
    pub a_x: BitMatrix,
    pub a_z: BitMatrix,
    pub m0: BitVec,
}

/// Relates two encodings of the same code; `None` when the stabilizer
/// groups differ (up to signs) or the dimensions disagree.
pub fn relate_encodings(s1: &EncodingSpec, s2: &EncodingSpec) -> Option<EncodingRelation> {
    if s1.n != s2.n || s1.k != s2.k {
        return None;
    }
    let (n, k) = (s1.n, s1.k);
    let r = n - k;
    let c = s2.c.inverse().compose(&s1.c).ok()?;
    let mut a = BitMatrix::zeros(0, r);
    let mut m0 = BitVec::zeros(r);
    for j in 0..r {
        let p = c.z_image(j);
        if !p.x().is_zero() || p.z().ones().any(|i| i >= r) {
            return None;
        }
        a.push_row(p.z().slice(0..r));
        m0.set(j, p.sign());
    }
    let (mut a_x, mut a_z) = (BitMatrix::zeros(0, r), BitMatrix::zeros(0, r));
    let (mut zs, mut xs) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for j in 0..k {
        for (p, rows, imgs) in [(c.z_image(r + j), &mut a_x, &mut zs), (c.x_image(r + j), &mut a_z, &mut xs)] {
            debug_assert!(p.x().ones().all(|i| i >= r), "logical image leaves the code");
            rows.push_row(p.z().slice(0..r));
            imgs.push(PauliOp::new(p.x().slice(r..n), p.z().slice(r..n), p.phase()));
        }
    }
    let c_delta = CliffordOp::from_images(xs, zs).ok()?;
    Some(EncodingRelation { c_delta, a, a_x, a_z, m0 })
}

/// The comparison stage at which two forms were found to differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    CodeMismatch,
    CliffordDiff,
    PauliDiff,
    CondOnMeasDiff,
    CondOnRandDiff,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::CodeMismatch => "code-mismatch",
            Stage::CliffordDiff => "clifford-diff",
            Stage::PauliDiff => "pauli-diff",
            Stage::CondOnMeasDiff => "cond-on-meas-diff",
            Stage::CondOnRandDiff => "cond-on-rand-diff",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Operation appended to the end of the first circuit: an optional Clifford
/// on the outputs, then the Pauli `X^x Z^z` with `x ⊕ z = K·o + c` for the
/// outcome vector `o` of that circuit. Pauli phases are not tracked since
/// they only change each branch by a global phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correction {
    pub clifford: Option<CliffordOp>,
    pub k: BitMatrix,
    pub c: BitVec,
}

impl Correction {
    pub fn n_qubits(&self) -> usize {
        self.c.len() / 2
    }

    /// Same correction in terms of `v` when `o = m_inv·(v + v0)`.
    pub fn lift(&self, m_inv: &BitMatrix, v0: &BitVec) -> Correction {
        let k = self.k.mul(m_inv);
        let c = self.c.xor(&k.mul_vec(v0));
        Correction { clifford: self.clifford.clone(), k, c }
    }

    pub fn to_ops(&self) -> Vec<StabOp> {
        let n = self.n_qubits();
        let mut c = StabCircuit::new(n);
        if let Some(u) = &self.clifford {
            c.push_clifford(u, &(0..n).collect::<Vec<_>>());
        }
        for (row, letter) in (0..2 * n).map(|i| (i, if i < n { 'X' } else { 'Z' })) {
            let q = row % n;
            let mask = self.k.row(row);
            let constant = self.c.get(row);
            if mask.is_zero() {
                if constant {
                    c.ops.push(StabOp::Pauli(single(letter, q)));
                }
            } else {
                c.ops.push(StabOp::CondPauli {
                    pauli: single(letter, q),
                    outcomes: mask.ones().collect(),
                    value: !constant,
                });
            }
        }
        c.ops
    }

    pub fn apply_to(&self, circuit: &StabCircuit) -> StabCircuit {
        let mut out = circuit.clone();
        out.ops.extend(self.to_ops());
        out
    }

    /// Operation lines in `.stab` syntax, ready to append.
    pub fn to_stab(&self) -> String {
        self.to_ops().iter().map(|op| format!("{op}\n")).collect()
    }
}

/// Outcome correspondence: outcomes `o₁`, `o₂` give the same map iff
/// `M₁(o₁ + u₁) = M₂(o₂ + u₂)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeCorrespondence {
    pub m1: BitMatrix,
    pub m2: BitMatrix,
    pub u1: BitVec,
    pub u2: BitVec,
}

impl OutcomeCorrespondence {
    pub fn label1(&self, o: &BitVec) -> BitVec {
        self.m1.mul_vec(&o.xor(&self.u1))
    }

    pub fn label2(&self, o: &BitVec) -> BitVec {
        self.m2.mul_vec(&o.xor(&self.u2))
    }

    pub fn matched(&self, o1: &BitVec, o2: &BitVec) -> bool {
        self.label1(o1) == self.label2(o2)
    }

    /// `o₂ = P o₁ + q` for matched outcomes, when `M₂` has a left inverse.
    pub fn explicit_map(&self) -> Option<(BitMatrix, BitVec)> {
        let inv = self.m2.left_inverse().ok()?;
        let p = inv.mul(&self.m1);
        let q = self.u2.xor(&p.mul_vec(&self.u1));
        Some((p, q))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComparisonVerdict {
    Equivalent(OutcomeCorrespondence),
    NotEquivalent {
        stage: Stage,
        correction: Option<Correction>,
        /// Set when no correction is available.
        reason: Option<&'static str>,
    },
}

impl ComparisonVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, ComparisonVerdict::Equivalent(_))
    }

    pub fn correction(&self) -> Option<&Correction> {
        match self {
            ComparisonVerdict::NotEquivalent { correction, .. } => correction.as_ref(),
            ComparisonVerdict::Equivalent(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &BitMatrix| m.rows().iter().map(|r| r.to_string()).collect::<Vec<_>>();
        match self {
            ComparisonVerdict::Equivalent(c) => serde_json::json!({
                "equivalent": true,
                "M1": rows(&c.m1),
                "M2": rows(&c.m2),
                "u1": c.u1.to_string(),
                "u2": c.u2.to_string(),
            }),
            ComparisonVerdict::NotEquivalent { stage, correction, reason } => serde_json::json!({
                "equivalent": false,
                "stage": stage.as_str(),
                "correction": correction.as_ref().map(Correction::to_stab),
                "reason": reason,
            }),
        }
    }
}

/// Bits `x ⊕ z` of `C X^x Z^z C†` as a linear map, phases dropped.
pub(crate) fn symplectic_matrix(c: &CliffordOp) -> BitMatrix {
    let n = c.num_qubits();
    let bits = |p: &PauliOp| p.x().concat(p.z());
    let cols: Vec<BitVec> = (0..n).map(|i| bits(c.x_image(i))).chain((0..n).map(|i| bits(c.z_image(i)))).collect();
    BitMatrix::from_cols(2 * n, &cols)
}

/// Stacked condition bits `(a, q_x, q_z)` of a form with right Clifford `r`
/// and `k` inner qubits (`X^a` on the fresh qubits, `X^{q_x} Z^{q_z}` on the
/// inner ones) to the output Pauli bits `x ⊕ z` after conjugation by `r`.
pub(crate) fn condition_bits_to_output(r: &CliffordOp, k: usize) -> BitMatrix {
    let n_out = r.num_qubits();
    let k1 = n_out - k;
    let mut embed = BitMatrix::zeros(2 * n_out, k1 + 2 * k);
    for i in 0..k1 + k {
        embed.set(i, i, true);
    }
    for j in 0..k {
        embed.set(n_out + k1 + j, k1 + k + j, true);
    }
    symplectic_matrix(r).mul(&embed)
}

/// `X = A'·F` with `A'` the canonical full-column-rank basis of the column
/// span of `X`; also returns a right inverse of `F`.
fn column_compression(x: &BitMatrix) -> (BitMatrix, BitMatrix, BitMatrix) {
    let fac = x.transpose().rref_factor();
    let rank = fac.rank;
    let basis = fac.r.row_range(0..rank).transpose();
    let f = fac.b.col_range(0..rank).transpose();
    let f_right = fac.b_inv.row_range(0..rank).transpose();
    (basis, f, f_right)
}

fn hstack_cols(rows: usize, parts: &[&BitMatrix]) -> BitMatrix {
    let mut out = BitMatrix::zeros(rows, 0);
    for p in parts {
        out = out.hstack(p);
    }
    out
}

/// Compares two general forms with equal input and output counts.
pub fn compare_general_forms(g1: &GeneralForm, g2: &GeneralForm) -> Result<ComparisonVerdict, VerifyError> {
    if (g1.n_in, g1.n_out) != (g2.n_in, g2.n_out) {
        return Err(VerifyError::DimensionMismatch((g1.n_in, g1.n_out), (g2.n_in, g2.n_out)));
    }
    let not_related = Ok(ComparisonVerdict::NotEquivalent {
        stage: Stage::CodeMismatch,
        correction: None,
        reason: Some("codes-differ"),
    });
    if g1.k != g2.k {
        return not_related;
    }
    let (n_out, k) = (g1.n_out, g1.k);
    let (n_m, k1) = (g1.n_m(), n_out - k);
    let spec = |c: &CliffordOp| EncodingSpec::new(k, c.clone());
    let (Some(rel_l), Some(rel_r)) =
        (relate_encodings(&spec(&g1.l), &spec(&g2.l)), relate_encodings(&spec(&g1.r), &spec(&g2.r)))
    else {
        return not_related;
    };

    let mut first_fail: Option<Stage> = None;
    let mut fail = |s: Stage| {
        first_fail.get_or_insert(s);
    };
    let mut clifford_fix = None;
    let pi = rel_r.c_delta.compose(&rel_l.c_delta.inverse())?;
    let (c_r, s0) = match pi.as_pauli() {
        Some(p) => (rel_r.c_delta.clone(), p.x().concat(p.z())),
        None => {
            fail(Stage::CliffordDiff);
            // U = R₂ (I ⊗ C_Δ^L C_Δ^R†) R₂† turns C_Δ^R into C_Δ^L
            let w = rel_l.c_delta.compose(&rel_r.c_delta.inverse())?;
            let u = g2.r.compose(&CliffordOp::identity(k1).tensor(&w))?.compose(&g2.r.inverse())?;
            clifford_fix = Some(u);
            (rel_l.c_delta.clone(), BitVec::zeros(2 * k))
        }
    };

    // Φ(r₁ ⊕ m') = Δ + B (r₁ ⊕ m') with o = r₁ ⊕ (A^L m' + m0^L)
    let n_r1 = g1.n_r;
    let n_o1 = g1.n_o();
    let e = BitMatrix::identity(n_r1).direct_sum(&rel_l.a);
    let o_c = BitVec::zeros(n_r1).concat(&rel_l.m0);
    let ar_inv = rel_r.a.invert()?;
    let g = ar_inv.mul(&g1.a).mul(&e);
    let g_c = ar_inv.mul_vec(&g1.a.mul_vec(&o_c).xor(&rel_r.m0));
    let sel_m = BitMatrix::zeros(n_m, n_r1).hstack(&BitMatrix::identity(n_m));
    let ex = rel_r.a_x.mul(&g).add(&g1.a_x.mul(&e)).add(&rel_l.a_x.mul(&sel_m));
    let ez = rel_r.a_z.mul(&g).add(&g1.a_z.mul(&e)).add(&rel_l.a_z.mul(&sel_m));
    let ex_c = rel_r.a_x.mul_vec(&g_c).xor(&g1.a_x.mul_vec(&o_c));
    let ez_c = rel_r.a_z.mul_vec(&g_c).xor(&g1.a_z.mul_vec(&o_c));
    let sym = symplectic_matrix(&c_r);
    let q = sym.mul(&ex.vstack(&ez));
    let q_c = sym.mul_vec(&ex_c.concat(&ez_c)).xor(&s0);
    let b = g.vstack(&q);
    let mut delta = g_c.concat(&q_c);
    let mut b_r = b.col_range(0..n_r1);
    let mut b_m = b.col_range(n_r1..n_o1);

    let s2 = g2.stacked();
    let s2_r = s2.col_range(0..g2.n_r);
    let s2_m = s2.col_range(g2.n_r..g2.n_o());
    let (basis2, f2, _) = column_compression(&s2_r);

    // δ(o) = K_δ o + c_δ added to Φ by the accumulated corrections, in o₁ coordinates
    let rows = k1 + 2 * k;
    let mut k_delta = BitMatrix::zeros(rows, n_o1);
    let mut c_delta = BitVec::zeros(rows);
    let mut impossible = None;
    let m_of_o = rel_l.a.invert()?; // m' = (A^L)⁻¹(m + m0^L)
    let (basis1, f1, f1_right) = loop {
        let (basis1, f1, f1_right) = column_compression(&b_r);
        if basis1.solve(&delta).is_none() {
            fail(Stage::PauliDiff);
            c_delta.xor_assign(&delta);
            delta = BitVec::zeros(rows);
        }
        let resid = b_m.add(&s2_m);
        if !basis1.col_span_contains(&resid) {
            fail(Stage::CondOnMeasDiff);
            let t = resid.mul(&m_of_o);
            k_delta = k_delta.add(&BitMatrix::zeros(rows, n_r1).hstack(&t));
            c_delta.xor_assign(&t.mul_vec(&rel_l.m0));
            b_m = s2_m.clone();
        }
        if basis1 == basis2 {
            break (basis1, f1, f1_right);
        }
        fail(Stage::CondOnRandDiff);
        if basis2.ncols() > n_r1 {
            impossible = Some("random-columns-exceed");
            break (basis1, f1, f1_right);
        }
        let target = hstack_cols(rows, &[&basis2, &BitMatrix::zeros(rows, n_r1 - basis2.ncols())]);
        let t = b_r.add(&target);
        k_delta = k_delta.add(&t.hstack(&BitMatrix::zeros(rows, n_m)));
        b_r = target;
    };

    if let Some(stage) = first_fail {
        let correction = if impossible.is_some() {
            None
        } else {
            let to_out = condition_bits_to_output(&g2.r, k);
            Some(Correction { clifford: clifford_fix, k: to_out.mul(&k_delta), c: to_out.mul_vec(&c_delta) })
        };
        return Ok(ComparisonVerdict::NotEquivalent { stage, correction, reason: impossible });
    }

    let rho0 = basis1.solve(&delta).expect("checked above");
    let d = basis1.solve_matrix(&b_m.add(&s2_m)).expect("checked above");
    let top = f1.hstack(&d.mul(&m_of_o));
    let bottom = BitMatrix::zeros(n_m, n_r1).hstack(&m_of_o);
    Ok(ComparisonVerdict::Equivalent(OutcomeCorrespondence {
        m1: top.vstack(&bottom),
        m2: f2.direct_sum(&BitMatrix::identity(n_m)),
        u1: f1_right.mul_vec(&rho0).concat(&rel_l.m0),
        u2: BitVec::zeros(g2.n_o()),
    }))
}

/// Compares two circuits through their general forms. Outcome maps and
/// corrections refer to the circuits' own outcome vectors.
pub fn compare_circuits(c1: &StabCircuit, c2: &StabCircuit) -> Result<ComparisonVerdict, VerifyError> {
    c1.validate().map_err(GenFormError::from)?;
    c2.validate().map_err(GenFormError::from)?;
    let dims = |c: &StabCircuit| (c.n_in, c.n_out());
    if dims(c1) != dims(c2) {
        return Err(VerifyError::DimensionMismatch(dims(c1), dims(c2)));
    }
    let (g1, map1) = general_form(c1)?;
    let (g2, map2) = general_form(c2)?;
    let inv1 = map1.m.left_inverse()?;
    Ok(match compare_general_forms(&g1, &g2)? {
        ComparisonVerdict::Equivalent(c) => {
            let inv2 = map2.m.left_inverse()?;
            ComparisonVerdict::Equivalent(OutcomeCorrespondence {
                m1: c.m1.mul(&inv1),
                m2: c.m2.mul(&inv2),
                u1: map1.v0.xor(&map1.m.mul_vec(&c.u1)),
                u2: map2.v0.xor(&map2.m.mul_vec(&c.u2)),
            })
        }
        ComparisonVerdict::NotEquivalent { stage, correction, reason } => {
            ComparisonVerdict::NotEquivalent { stage, correction: correction.map(|c| c.lift(&inv1, &map1.v0)), reason }
        }
    })
}
