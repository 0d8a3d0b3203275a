//! Logical action of circuits acting on encoded qubits.
//!
//! The logical action of `c` with input code `(n_in, k_in, C_in)` and output
//! code `(n_out, k_out, C_out)` is read off the general form of
//! `c' = encoder(in) ∘ c ∘ unencoder(out)`, whose outcome vector is
//! `s_in ⊕ v ⊕ s_out`. The encoder's random syndrome `s_in` is kept as the
//! leading random bits of the form, so the part of the form that does not
//! depend on `s_in` is the logical action and the `s_in` columns describe the
//! effect of input syndromes.

use std::fmt;

use thiserror::Error;

use crate::circuit::{encoder, unencoder, CircuitError, EncodingSpec, StabCircuit};
use crate::clifford::{CliffordError, CliffordOp};
use crate::f2linalg::{BitMatrix, BitVec, LinalgError};
use crate::genform::{general_form, GenFormError, GeneralForm, OutcomeMap};
use crate::verify::{
    compare_general_forms, condition_bits_to_output, symplectic_matrix, ComparisonVerdict, Correction,
};
use crate::verify::{OutcomeCorrespondence, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicalError {
    #[error(transparent)]
    GenForm(#[from] GenFormError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what}: circuit has {circuit} qubits, code has {code}")]
    DimensionMismatch { what: &'static str, circuit: usize, code: usize },
    #[error("reference circuit must act on {expected:?} logical qubits, found {found:?}")]
    ReferenceMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Why a circuit fails to be a logical operation circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NotLogicalReason {
    SyndromeRandom,
    SyndromeInputDependent,
    SyndromeDependsOnCircuitRandomness,
    NonzeroOffset,
}

impl NotLogicalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            NotLogicalReason::SyndromeRandom => "syndrome-random",
            NotLogicalReason::SyndromeInputDependent => "syndrome-input-dependent",
            NotLogicalReason::SyndromeDependsOnCircuitRandomness => "syndrome-depends-on-circuit-randomness",
            NotLogicalReason::NonzeroOffset => "nonzero-offset",
        }
    }
}

impl fmt::Display for NotLogicalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Logical action of a logical operation circuit.
///
/// Upon input syndrome `s_in` and outcome `o_L` of `gen`, the circuit gives
/// outcome `v = M_L o_L + v_L0 + dM s_in` and output syndrome `dA s_in`, and
/// its logical action is `gen` followed by `X^{dAx s_in} Z^{dAz s_in}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalAction {
    pub gen: GeneralForm,
    pub m_l: BitMatrix,
    pub v_l0: BitVec,
    pub d_ax: BitMatrix,
    pub d_az: BitMatrix,
    pub d_a: BitMatrix,
    pub d_m: BitMatrix,
}

impl LogicalAction {
    pub fn outcome_map(&self) -> OutcomeMap {
        OutcomeMap { m: self.m_l.clone(), v0: self.v_l0.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: &BitMatrix| m.rows().iter().map(|r| r.to_string()).collect::<Vec<_>>();
        serde_json::json!({
            "logical": true,
            "general_form": self.gen.to_json(&self.outcome_map()),
            "dAx": rows(&self.d_ax),
            "dAz": rows(&self.d_az),
            "dA": rows(&self.d_a),
            "dM": rows(&self.d_m),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogicalActionResult {
    Logical(Box<LogicalAction>),
    /// `correction` (appended to the circuit) makes it a logical operation
    /// circuit, when one exists.
    NotLogical {
        reason: NotLogicalReason,
        correction: Option<Correction>,
    },
}

impl LogicalActionResult {
    pub fn is_logical(&self) -> bool {
        matches!(self, LogicalActionResult::Logical(_))
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            LogicalActionResult::Logical(a) => a.to_json(),
            LogicalActionResult::NotLogical { reason, correction } => serde_json::json!({
                "logical": false,
                "reason": reason.as_str(),
                "correction": correction.as_ref().map(Correction::to_stab),
            }),
        }
    }
}

/// One pass of the analysis; a failing pass reports the correction for its
/// own check only.
enum Pass {
    Logical(Box<LogicalAction>),
    Fail(NotLogicalReason, Option<Correction>),
}

fn check_dims(c: &StabCircuit, in_code: &EncodingSpec, out_code: &EncodingSpec) -> Result<(), LogicalError> {
    c.validate()?;
    if c.n_in != in_code.n {
        return Err(LogicalError::DimensionMismatch { what: "inputs", circuit: c.n_in, code: in_code.n });
    }
    if c.n_out() != out_code.n {
        return Err(LogicalError::DimensionMismatch { what: "outputs", circuit: c.n_out(), code: out_code.n });
    }
    Ok(())
}

/// Re-coordinates the random bits so that the first `n_s` of them are the
/// outcomes in rows `[0, n_s)`; returns the transformed form and map.
fn pin_leading_random_bits(
    g: &GeneralForm,
    map: &OutcomeMap,
    n_s: usize,
) -> Result<(GeneralForm, OutcomeMap), LogicalError> {
    let (n_r, n_o) = (g.n_r, g.n_o());
    if map.v0.slice(0..n_s).ones().next().is_some() || n_s > n_r {
        return Err(LogicalError::Internal("encoder syndrome bits are not plain random bits"));
    }
    let lead = map.m.row_range(0..n_s);
    let rest = lead.col_range(0..n_r).completion_rows();
    let mut t = lead;
    for row in rest.into_rows() {
        t.push_row(row.resized(n_o));
    }
    for j in 0..g.n_m() {
        t.push_row(BitVec::unit(n_o, n_r + j));
    }
    let t_inv = t.invert().map_err(|_| LogicalError::Internal("encoder syndrome bits are not independent"))?;
    let form = GeneralForm { a: g.a.mul(&t_inv), a_x: g.a_x.mul(&t_inv), a_z: g.a_z.mul(&t_inv), ..g.clone() };
    Ok((form, OutcomeMap { m: map.m.mul(&t_inv), v0: map.v0.clone() }))
}

/// Pauli `C X^{flip} C†` on the syndrome qubits of `code` as `x ⊕ z` bits.
fn syndrome_flip_bits(code: &EncodingSpec, flip: &BitVec) -> BitVec {
    let r = code.n - code.k;
    let x = flip.resized(code.n);
    debug_assert_eq!(flip.len(), r);
    symplectic_matrix(&code.c).mul_vec(&x.concat(&BitVec::zeros(code.n)))
}

fn analyze(c: &StabCircuit, in_code: &EncodingSpec, out_code: &EncodingSpec) -> Result<Pass, LogicalError> {
    let n_s = in_code.n - in_code.k;
    let n_so = out_code.n - out_code.k;
    let n_v = c.n_outcomes();
    let full = encoder(in_code).then(c).then(&unencoder(out_code));
    let (g0, map0) = general_form(&full)?;
    let (g, map) = pin_leading_random_bits(&g0, &map0, n_s)?;
    let (n_r, n_o) = (g.n_r, g.n_o());
    let v_rows = n_s..n_s + n_v;
    let so_rows = n_s + n_v..n_s + n_v + n_so;

    let random_profile = map.m.col_range(0..n_r).row_rank_profile();
    let mut flips = Vec::new();
    let mut reason = NotLogicalReason::SyndromeDependsOnCircuitRandomness;
    for j in 0..n_so {
        let i = so_rows.start + j;
        if random_profile.contains(&i) {
            return Ok(Pass::Fail(NotLogicalReason::SyndromeRandom, None));
        }
        let row = map.m.row(i);
        if row.slice(n_r..n_o).ones().next().is_some() {
            reason = NotLogicalReason::SyndromeInputDependent;
        }
        let dep = row.slice(n_s..n_o);
        if !dep.is_zero() {
            flips.push((j, dep));
        }
    }
    if !flips.is_empty() {
        // Flip syndrome bit j by its dependence on r and m, written as a
        // parity ℓ·(v + v0) of the circuit's own outcomes.
        let m_v = map.m.row_range(v_rows.clone());
        let v0_v = map.v0.slice(v_rows.clone());
        let mut k = BitMatrix::zeros(2 * out_code.n, n_v);
        let mut cst = BitVec::zeros(2 * out_code.n);
        for (j, dep) in flips {
            let target = BitVec::zeros(n_s).concat(&dep);
            let Some(l) = m_v.transpose().solve(&target) else {
                return Ok(Pass::Fail(reason, None));
            };
            let bits = syndrome_flip_bits(out_code, &BitVec::unit(n_so, j));
            let outer = BitMatrix::from_cols(bits.len(), std::slice::from_ref(&bits))
                .mul(&BitMatrix::from_rows(n_v, vec![l.clone()]));
            k = k.add(&outer);
            if l.dot(&v0_v) {
                cst.xor_assign(&bits);
            }
        }
        let corr = Correction { clifford: None, k, c: cst };
        return Ok(Pass::Fail(reason, Some(corr)));
    }
    let offset = map.v0.slice(so_rows.clone());
    if !offset.is_zero() {
        let corr = Correction {
            clifford: None,
            k: BitMatrix::zeros(2 * out_code.n, n_v),
            c: syndrome_flip_bits(out_code, &offset),
        };
        return Ok(Pass::Fail(NotLogicalReason::NonzeroOffset, Some(corr)));
    }

    let stacked = g.stacked();
    let diff = condition_bits_to_output(&g.r, g.k).mul(&stacked.col_range(0..n_s));
    let k_out = g.n_out;
    let keep = |m: &BitMatrix| m.col_range(n_s..n_o);
    let gen = GeneralForm { n_r: n_r - n_s, a: keep(&g.a), a_x: keep(&g.a_x), a_z: keep(&g.a_z), ..g.clone() };
    let m_l = map.m.submatrix(v_rows.clone(), n_s..n_o);
    Ok(Pass::Logical(Box::new(LogicalAction {
        gen,
        m_l,
        v_l0: map.v0.slice(v_rows.clone()),
        d_ax: diff.row_range(0..k_out),
        d_az: diff.row_range(k_out..2 * k_out),
        d_a: map.m.submatrix(so_rows, 0..n_s),
        d_m: map.m.submatrix(v_rows, 0..n_s),
    })))
}

fn add_corrections(a: &Correction, b: &Correction) -> Correction {
    Correction { clifford: None, k: a.k.add(&b.k), c: a.c.xor(&b.c) }
}

/// Logical action of `c`, or the first failed check. Reported corrections
/// repair every later check as well.
pub fn logical_action(
    c: &StabCircuit,
    in_code: &EncodingSpec,
    out_code: &EncodingSpec,
) -> Result<LogicalActionResult, LogicalError> {
    check_dims(c, in_code, out_code)?;
    let mut first: Option<NotLogicalReason> = None;
    let mut total: Option<Correction> = None;
    let mut current = c.clone();
    loop {
        match analyze(&current, in_code, out_code)? {
            Pass::Logical(action) => {
                return Ok(match first {
                    None => LogicalActionResult::Logical(action),
                    Some(reason) => LogicalActionResult::NotLogical { reason, correction: total },
                })
            }
            Pass::Fail(reason, None) => {
                let reason = first.unwrap_or(reason);
                return Ok(LogicalActionResult::NotLogical { reason, correction: None });
            }
            Pass::Fail(reason, Some(corr)) => {
                first.get_or_insert(reason);
                current = corr.apply_to(&current);
                total = Some(match total {
                    None => corr,
                    Some(t) => add_corrections(&t, &corr),
                });
            }
        }
    }
}

/// Basis of the input syndromes that cause no logical error, plus one
/// representative and its effect for each nontrivial coset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeClasses {
    /// Rows span `L₀ = ker dAx ∩ ker dAz ∩ ker M_L⁽⁻¹⁾dM`.
    pub harmless: BitMatrix,
    /// Syndromes whose sums with `L₀` partition the rest.
    pub representatives: Vec<SyndromeEffect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeEffect {
    pub syndrome: BitVec,
    /// Logical Pauli `X^x Z^z` applied after the logical action.
    pub logical_x: BitVec,
    pub logical_z: BitVec,
    /// Flip of the logical outcome `o_L`.
    pub outcome_flip: BitVec,
}

pub fn classify_syndromes(action: &LogicalAction) -> Result<SyndromeClasses, LogicalError> {
    let m_inv = action.m_l.left_inverse()?;
    let flips = m_inv.mul(&action.d_m);
    let n_s = action.d_ax.ncols();
    let effect = BitMatrix::vstack_all(n_s, &[&action.d_ax, &action.d_az, &flips]);
    let harmless = effect.kernel_basis();
    let reps = harmless.completion_rows();
    let k_out = action.d_ax.nrows();
    let representatives = reps
        .rows()
        .iter()
        .map(|s| {
            let e = effect.mul_vec(s);
            SyndromeEffect {
                syndrome: s.clone(),
                logical_x: e.slice(0..k_out),
                logical_z: e.slice(k_out..2 * k_out),
                outcome_flip: e.slice(2 * k_out..e.len()),
            }
        })
        .collect();
    Ok(SyndromeClasses { harmless, representatives })
}

/// Result of checking a circuit's logical action against a reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogicalVerdict {
    NotLogical {
        reason: NotLogicalReason,
        correction: Option<Correction>,
    },
    /// Comparison of the logical action with the reference; outcome maps and
    /// corrections refer to the physical circuit's outcomes and qubits.
    Compared(ComparisonVerdict),
}

impl LogicalVerdict {
    pub fn is_true(&self) -> bool {
        matches!(self, LogicalVerdict::Compared(v) if v.is_equivalent())
    }

    pub fn correspondence(&self) -> Option<&OutcomeCorrespondence> {
        match self {
            LogicalVerdict::Compared(ComparisonVerdict::Equivalent(c)) => Some(c),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            LogicalVerdict::NotLogical { reason, correction } => serde_json::json!({
                "logical": false,
                "reason": reason.as_str(),
                "correction": correction.as_ref().map(Correction::to_stab),
            }),
            LogicalVerdict::Compared(v) => {
                let mut j = v.to_json();
                j["logical"] = serde_json::Value::Bool(true);
                if let Some((p, q)) = self.correspondence().and_then(OutcomeCorrespondence::explicit_map) {
                    j["reference_outcomes"] = serde_json::json!({
                        "matrix": p.rows().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "offset": q.to_string(),
                    });
                }
                j
            }
        }
    }
}

/// Moves a correction on the logical qubits of `code` to its physical qubits.
fn encode_correction(corr: &Correction, code: &EncodingSpec) -> Result<Correction, LogicalError> {
    let r = code.n - code.k;
    let clifford = match &corr.clifford {
        Some(u) => Some(code.c.compose(&CliffordOp::identity(r).tensor(u))?.compose(&code.c.inverse())?),
        None => None,
    };
    let mut embed = BitMatrix::zeros(2 * code.n, 2 * code.k);
    for j in 0..code.k {
        embed.set(r + j, j, true);
        embed.set(code.n + r + j, code.k + j, true);
    }
    let to_phys = symplectic_matrix(&code.c).mul(&embed);
    Ok(Correction { clifford, k: to_phys.mul(&corr.k), c: to_phys.mul_vec(&corr.c) })
}

/// Whether the logical action of `c` matches the reference circuit.
pub fn verify_logical(
    c: &StabCircuit,
    in_code: &EncodingSpec,
    out_code: &EncodingSpec,
    reference: &StabCircuit,
) -> Result<LogicalVerdict, LogicalError> {
    reference.validate()?;
    let found = (reference.n_in, reference.n_out());
    if found != (in_code.k, out_code.k) {
        return Err(LogicalError::ReferenceMismatch { expected: (in_code.k, out_code.k), found });
    }
    let action = match logical_action(c, in_code, out_code)? {
        LogicalActionResult::Logical(a) => a,
        LogicalActionResult::NotLogical { reason, correction } => {
            return Ok(LogicalVerdict::NotLogical { reason, correction })
        }
    };
    let (g_ref, map_ref) = general_form(reference)?;
    let inv_l = action.m_l.left_inverse()?;
    Ok(LogicalVerdict::Compared(match compare_general_forms(&action.gen, &g_ref)? {
        ComparisonVerdict::Equivalent(corr) => {
            let inv_ref = map_ref.m.left_inverse()?;
            ComparisonVerdict::Equivalent(OutcomeCorrespondence {
                m1: corr.m1.mul(&inv_l),
                m2: corr.m2.mul(&inv_ref),
                u1: action.v_l0.xor(&action.m_l.mul_vec(&corr.u1)),
                u2: map_ref.v0.xor(&map_ref.m.mul_vec(&corr.u2)),
            })
        }
        ComparisonVerdict::NotEquivalent { stage, correction, reason } => ComparisonVerdict::NotEquivalent {
            stage,
            correction: match correction {
                Some(corr) => Some(encode_correction(&corr.lift(&inv_l, &action.v_l0), out_code)?),
                None => None,
            },
            reason,
        },
    }))
}
