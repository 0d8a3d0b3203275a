//! Code deformation: common symplectic bases of two stabilizer groups,
//! the circuits they define, and the logical action of measuring one group
//! on a state encoded in the other.

use thiserror::Error;

use crate::circuit::{logical_map, CircuitError, EncodingSpec, StabCircuit, StabOp};
use crate::clifford::{CliffordError, CliffordOp};
use crate::f2linalg::{BitMatrix, BitVec};
use crate::genform::{symplectic_basis, GenFormError, GeneralForm, OutcomeMap};
use crate::pauli::{parse_pauli, PauliError, PauliOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeDeformError {
    #[error("invalid stabilizer group: {0}")]
    InvalidGroup(String),
    #[error("groups act on {0} and {1} qubits")]
    QubitMismatch(usize, usize),
    #[error("{what} {generator} is not in the required group")]
    NotContained { what: &'static str, generator: String },
    #[error("surgery distance must be at least 2, got {0}")]
    Distance(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    GenForm(#[from] GenFormError),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Symplectic row `x ⊕ z` of a Pauli.
fn sym(p: &PauliOp) -> BitVec {
    p.x().concat(p.z())
}

/// Row `r` with `r·sym(q) = [p, q]`.
fn dual(p: &PauliOp) -> BitVec {
    p.z().concat(p.x())
}

fn from_sym(n: usize, v: &BitVec) -> PauliOp {
    PauliOp::hermitian(v.slice(0..n), v.slice(n..2 * n), false)
}

fn sym_rows(n: usize, ps: &[PauliOp]) -> BitMatrix {
    BitMatrix::from_rows(2 * n, ps.iter().map(sym).collect())
}

/// Ordered product of the Paulis selected by `coeffs`.
fn product(n: usize, ps: &[PauliOp], coeffs: &BitVec) -> PauliOp {
    coeffs.ones().fold(PauliOp::identity(n), |acc, i| acc.mul(&ps[i]))
}

/// `[a_i, b_j]`.
fn commutation(a: &[PauliOp], b: &[PauliOp]) -> BitMatrix {
    let rows = a.iter().map(|p| BitVec::from_bools(&b.iter().map(|q| p.anticommutes(q)).collect::<Vec<_>>())).collect();
    BitMatrix::from_rows(b.len(), rows)
}

/// Independent commuting Hermitian generators of a group without `-I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerGroup {
    n: usize,
    generators: Vec<PauliOp>,
}

impl StabilizerGroup {
    pub fn new(n: usize, generators: Vec<PauliOp>) -> Result<Self, CodeDeformError> {
        for g in &generators {
            if g.num_qubits() != n {
                return Err(CodeDeformError::QubitMismatch(n, g.num_qubits()));
            }
            if !g.is_hermitian() {
                return Err(CodeDeformError::InvalidGroup(format!("{g} is not Hermitian")));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            if let Some(b) = generators[i + 1..].iter().find(|b| a.anticommutes(b)) {
                return Err(CodeDeformError::InvalidGroup(format!("{a} and {b} anticommute")));
            }
        }
        if sym_rows(n, &generators).rank() < generators.len() {
            return Err(CodeDeformError::InvalidGroup("generators are dependent".into()));
        }
        Ok(StabilizerGroup { n, generators })
    }

    /// One Pauli per line, 1-based sparse syntax; blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self, CodeDeformError> {
        let mut gens = Vec::new();
        for line in text.lines() {
            let t = line.split('#').next().unwrap_or("").trim();
            if !t.is_empty() {
                gens.push(parse_pauli(t)?.to_dense(n)?);
            }
        }
        Self::new(n, gens)
    }

    /// Number of qubits needed by the Paulis in a group file.
    pub fn qubits_in(text: &str) -> Result<usize, CodeDeformError> {
        let mut n = 0;
        for line in text.lines() {
            let t = line.split('#').next().unwrap_or("").trim();
            if !t.is_empty() {
                n = n.max(parse_pauli(t)?.max_qubit().map_or(0, |q| q + 1));
            }
        }
        Ok(n)
    }

    pub fn from_code(code: &EncodingSpec) -> Self {
        StabilizerGroup { n: code.n, generators: code.stabilizers() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOp] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Products of generators equal to `p` up to sign, if any.
    fn decompose(&self, p: &PauliOp) -> Option<BitVec> {
        sym_rows(self.n, &self.generators).transpose().solve(&sym(p))
    }

    /// Signed membership.
    pub fn contains(&self, p: &PauliOp) -> bool {
        self.decompose(p).is_some_and(|c| product(self.n, &self.generators, &c) == *p)
    }

    pub fn contains_unsigned(&self, p: &PauliOp) -> bool {
        self.decompose(p).is_some()
    }

    /// Same group, with signs when `signed`.
    pub fn same_group(&self, other: &StabilizerGroup, signed: bool) -> bool {
        self.rank() == other.rank()
            && other.generators.iter().all(|g| if signed { self.contains(g) } else { self.contains_unsigned(g) })
    }

    /// Encoding Clifford whose first `rank` Z images are the generators.
    pub fn encoding(&self) -> Result<EncodingSpec, CodeDeformError> {
        let (partners, rest) = complete_basis(self.n, &[], &self.generators)?;
        let mut z = self.generators.clone();
        let mut x = partners;
        for (pz, px) in rest {
            z.push(pz);
            x.push(px);
        }
        let k = self.n - self.rank();
        Ok(EncodingSpec::new(k, CliffordOp::from_images(x, z)?))
    }
}

/// `(Z, X)` partners.
type PauliPair = (PauliOp, PauliOp);

/// `X` partners for the isotropic list `t` and a symplectic basis `(Z, X)` of
/// the rest, given elements `fixed` whose partners are already in `fixed`.
fn complete_basis(
    n: usize,
    fixed: &[PauliOp],
    t: &[PauliOp],
) -> Result<(Vec<PauliOp>, Vec<PauliPair>), CodeDeformError> {
    let duals: Vec<BitVec> = fixed.iter().chain(t).map(dual).collect();
    let w = BitMatrix::from_rows(2 * n, duals);
    let mut partners = Vec::with_capacity(t.len());
    for i in 0..t.len() {
        let target = BitVec::unit(fixed.len() + t.len(), fixed.len() + i);
        let x = w.solve(&target).ok_or(CodeDeformError::Internal("partial basis is not independent"))?;
        partners.push(from_sym(n, &x));
    }
    for a in 0..partners.len() {
        for b in a + 1..partners.len() {
            if partners[a].anticommutes(&partners[b]) {
                partners[b] = partners[b].mul(&t[a]).unsigned();
            }
        }
    }
    let mut all = w;
    for p in &partners {
        all.push_row(dual(p));
    }
    let rest: Vec<PauliOp> = all.kernel_basis().rows().iter().map(|v| from_sym(n, v)).collect();
    let (f, _) = symplectic_basis(&rest)?;
    let pairs = (0..rest.len() / 2)
        .map(|j| {
            let x = product(n, &rest, f.row(2 * j)).unsigned();
            let z = product(n, &rest, f.row(2 * j + 1)).unsigned();
            (z, x)
        })
        .collect();
    Ok((partners, pairs))
}

/// Clifford with the given `Z` images and some `X` images; the missing `X`
/// images are solved for.
fn clifford_from_partial(n: usize, z: Vec<PauliOp>, x: Vec<Option<PauliOp>>) -> Result<CliffordOp, CodeDeformError> {
    let fixed_x: Vec<&PauliOp> = x.iter().flatten().collect();
    let mut rows: Vec<BitVec> = z.iter().map(dual).collect();
    rows.extend(fixed_x.iter().map(|p| dual(p)));
    let w = BitMatrix::from_rows(2 * n, rows);
    let missing: Vec<usize> = (0..n).filter(|&i| x[i].is_none()).collect();
    let mut found: Vec<PauliOp> = Vec::with_capacity(missing.len());
    for &i in &missing {
        let target = BitVec::unit(w.nrows(), i);
        let v = w.solve(&target).ok_or(CodeDeformError::Internal("images are not independent"))?;
        found.push(from_sym(n, &v));
    }
    for a in 0..found.len() {
        for b in a + 1..found.len() {
            if found[a].anticommutes(&found[b]) {
                found[b] = found[b].mul(&z[missing[a]]).unsigned();
            }
        }
    }
    let mut it = found.into_iter();
    let x_images = x.into_iter().map(|o| o.unwrap_or_else(|| it.next().expect("one per gap"))).collect();
    Ok(CliffordOp::from_images(x_images, z)?)
}

/// Basis grouped as in the definition: `S = ⟨z_delta ∪ z_cap ∪ z_s⟩` and
/// `M = ⟨x_delta ∪ z_cap ∪ z_m⟩`, with the Z/X pairs of each group
/// anticommuting and all other pairs commuting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonSymplecticBasis {
    pub n: usize,
    pub z_delta: Vec<PauliOp>,
    pub x_delta: Vec<PauliOp>,
    pub z_cap: Vec<PauliOp>,
    pub x_cap: Vec<PauliOp>,
    pub z_s: Vec<PauliOp>,
    pub x_s: Vec<PauliOp>,
    pub z_m: Vec<PauliOp>,
    pub x_m: Vec<PauliOp>,
    pub z: Vec<PauliOp>,
    pub x: Vec<PauliOp>,
}

impl CommonSymplecticBasis {
    /// `Z`-type lists in Clifford column order.
    pub fn z_images(&self) -> Vec<PauliOp> {
        [&self.z_delta, &self.z_cap, &self.z_s, &self.z_m, &self.z].into_iter().flatten().cloned().collect()
    }

    pub fn x_images(&self) -> Vec<PauliOp> {
        [&self.x_delta, &self.x_cap, &self.x_s, &self.x_m, &self.x].into_iter().flatten().cloned().collect()
    }

    /// The Clifford mapping `Z_j, X_j` to the `j`-th basis pair.
    pub fn clifford(&self) -> Result<CliffordOp, CodeDeformError> {
        Ok(CliffordOp::from_images(self.x_images(), self.z_images())?)
    }

    /// `(|ZΔ|, |Z∩|, |Z_S|, |Z_M|, |Z|)`.
    pub fn sizes(&self) -> [usize; 5] {
        [self.z_delta.len(), self.z_cap.len(), self.z_s.len(), self.z_m.len(), self.z.len()]
    }

    /// Basis of `(M, S)` obtained by exchanging the roles of the groups.
    pub fn swapped(&self) -> CommonSymplecticBasis {
        CommonSymplecticBasis {
            n: self.n,
            z_delta: self.x_delta.clone(),
            x_delta: self.z_delta.clone(),
            z_cap: self.z_cap.clone(),
            x_cap: self.x_cap.clone(),
            z_s: self.z_m.clone(),
            x_s: self.x_m.clone(),
            z_m: self.z_s.clone(),
            x_m: self.x_s.clone(),
            z: self.z.clone(),
            x: self.x.clone(),
        }
    }

    pub fn s_group(&self) -> Result<StabilizerGroup, CodeDeformError> {
        StabilizerGroup::new(self.n, [&self.z_delta, &self.z_cap, &self.z_s].into_iter().flatten().cloned().collect())
    }

    pub fn m_group(&self) -> Result<StabilizerGroup, CodeDeformError> {
        StabilizerGroup::new(self.n, [&self.x_delta, &self.z_cap, &self.z_m].into_iter().flatten().cloned().collect())
    }

    /// `M · (S ∩ M⊥) = ⟨XΔ ∪ Z∩ ∪ Z_S ∪ Z_M⟩`.
    pub fn deformed_group(&self) -> Result<StabilizerGroup, CodeDeformError> {
        let gens = [&self.x_delta, &self.z_cap, &self.z_s, &self.z_m].into_iter().flatten().cloned().collect();
        StabilizerGroup::new(self.n, gens)
    }

    /// Checks the commutation pattern, the sizes, and that the basis generates
    /// `s` (with signs) and `m` (up to signs).
    pub fn check(&self, s: &StabilizerGroup, m: &StabilizerGroup) -> Result<(), String> {
        let z = self.z_images();
        let x = self.x_images();
        if z.len() != self.n || x.len() != self.n {
            return Err(format!("basis has {} pairs on {} qubits", z.len(), self.n));
        }
        let pairs = [
            (self.z_delta.len(), self.x_delta.len()),
            (self.z_cap.len(), self.x_cap.len()),
            (self.z_s.len(), self.x_s.len()),
            (self.z_m.len(), self.x_m.len()),
            (self.z.len(), self.x.len()),
        ];
        if pairs.iter().any(|(a, b)| a != b) {
            return Err("paired lists differ in length".into());
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let want = i == j;
                if x[i].anticommutes(&z[j]) != want {
                    return Err(format!("X{} and Z{} commutation is wrong", i + 1, j + 1));
                }
                if i < j && (x[i].anticommutes(&x[j]) || z[i].anticommutes(&z[j])) {
                    return Err(format!("pair {} and {} do not commute", i + 1, j + 1));
                }
            }
        }
        if !self.s_group().map_err(|e| e.to_string())?.same_group(s, true) {
            return Err("basis does not generate S".into());
        }
        if !self.m_group().map_err(|e| e.to_string())?.same_group(m, false) {
            return Err("basis does not generate M".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let list = |ps: &[PauliOp]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>();
        serde_json::json!({
            "n": self.n,
            "Z_delta": list(&self.z_delta),
            "X_delta": list(&self.x_delta),
            "Z_cap": list(&self.z_cap),
            "X_cap": list(&self.x_cap),
            "Z_S": list(&self.z_s),
            "X_S": list(&self.x_s),
            "Z_M": list(&self.z_m),
            "X_M": list(&self.x_m),
            "Z": list(&self.z),
            "X": list(&self.x),
        })
    }
}

/// Rows of `candidates` that extend the span of `base`, greedily in order.
fn extend_span(base: &BitMatrix, candidates: &BitMatrix) -> Vec<BitVec> {
    let mut span = base.clone();
    let mut picked = Vec::new();
    for row in candidates.rows() {
        let mut trial = span.clone();
        trial.push_row(row.clone());
        if trial.rank() > span.rank() {
            span = trial;
            picked.push(row.clone());
        }
    }
    picked
}

fn rref_rows(m: &BitMatrix) -> BitMatrix {
    let f = m.rref_factor();
    f.r.row_range(0..f.rank)
}

pub fn common_symplectic_basis(
    s: &StabilizerGroup,
    m: &StabilizerGroup,
) -> Result<CommonSymplecticBasis, CodeDeformError> {
    let n = s.n;
    if m.n != n {
        return Err(CodeDeformError::QubitMismatch(n, m.n));
    }
    let (gs, gm) = (s.generators(), m.generators());
    let comm = commutation(gs, gm);

    // S / (S ∩ M⊥) and M / (M ∩ S⊥) by their lowest-index generators
    let g_idx = comm.row_rank_profile();
    let h_idx = comm.transpose().row_rank_profile();
    let g: Vec<PauliOp> = g_idx.iter().map(|&i| gs[i].clone()).collect();
    let h: Vec<PauliOp> = h_idx.iter().map(|&j| gm[j].clone()).collect();
    let a = commutation(&h, &g);
    let a_inv = a.invert().map_err(|_| CodeDeformError::Internal("coset pairing is degenerate"))?;
    let x_delta: Vec<PauliOp> = (0..g.len()).map(|j| product(n, &h, a_inv.row(j))).collect();
    let z_delta = g;

    // S ∩ M from (a | b) with a·G_S = b·G_M
    let both = sym_rows(n, gs).vstack(&sym_rows(n, gm));
    let ker = both.transpose().kernel_basis();
    let cap_s = rref_rows(&ker.col_range(0..gs.len()));
    let cap_m = ker.col_range(gs.len()..gs.len() + gm.len());
    let z_cap: Vec<PauliOp> = cap_s.rows().iter().map(|c| product(n, gs, c)).collect();

    // (S ∩ M⊥) / (S ∩ M) and (M ∩ S⊥) / (S ∩ M)
    let s_perp = rref_rows(&comm.transpose().kernel_basis());
    let m_perp = rref_rows(&comm.kernel_basis());
    let z_s: Vec<PauliOp> = extend_span(&cap_s, &s_perp).iter().map(|c| product(n, gs, c)).collect();
    let z_m: Vec<PauliOp> = extend_span(&cap_m, &m_perp).iter().map(|c| product(n, gm, c)).collect();

    let fixed: Vec<PauliOp> = z_delta.iter().chain(&x_delta).cloned().collect();
    let iso: Vec<PauliOp> = z_cap.iter().chain(&z_s).chain(&z_m).cloned().collect();
    let (partners, rest) = complete_basis(n, &fixed, &iso)?;
    let (n_cap, n_s) = (z_cap.len(), z_s.len());
    let basis = CommonSymplecticBasis {
        n,
        x_cap: partners[..n_cap].to_vec(),
        x_s: partners[n_cap..n_cap + n_s].to_vec(),
        x_m: partners[n_cap + n_s..].to_vec(),
        z: rest.iter().map(|(z, _)| z.clone()).collect(),
        x: rest.into_iter().map(|(_, x)| x).collect(),
        z_delta,
        x_delta,
        z_cap,
        z_s,
        z_m,
    };
    basis.check(s, m).map_err(|_| CodeDeformError::Internal("common basis postconditions"))?;
    Ok(basis)
}

fn measure(p: &PauliOp) -> StabOp {
    StabOp::Measure { pauli: p.to_sparse(), hint: None }
}

fn cond(p: &PauliOp, outcome: usize) -> StabOp {
    StabOp::CondPauli { pauli: p.to_sparse(), outcomes: vec![outcome], value: true }
}

/// Measures `XΔ, Z∩, Z_M`, then applies `ZΔ_j` if `XΔ_j` gave one and
/// `X_M_j` if `Z_M_j` gave one.
pub fn build_deformation_circuit(b: &CommonSymplecticBasis) -> StabCircuit {
    let mut c = StabCircuit::new(b.n);
    for p in b.x_delta.iter().chain(&b.z_cap).chain(&b.z_m) {
        c.ops.push(measure(p));
    }
    for (j, p) in b.z_delta.iter().enumerate() {
        c.ops.push(cond(p, j));
    }
    let off = b.x_delta.len() + b.z_cap.len();
    for (j, p) in b.x_m.iter().enumerate() {
        c.ops.push(cond(p, off + j));
    }
    c
}

/// Measures `ZΔ, Z∩, Z_S`.
pub fn build_syndrome_circuit(b: &CommonSymplecticBasis) -> StabCircuit {
    let mut c = StabCircuit::new(b.n);
    for p in b.z_delta.iter().chain(&b.z_cap).chain(&b.z_s) {
        c.ops.push(measure(p));
    }
    c
}

/// Kind of one outcome of the deformation circuit on encoded input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    Random,
    Zero,
    InputDependent,
}

/// Logical action of the deformation circuit in closed form.
///
/// The form has one random bit per `XΔ` outcome with zero condition
/// columns, so `map` covers every outcome of the circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticAction {
    pub gen: GeneralForm,
    pub map: OutcomeMap,
    pub kinds: Vec<OutcomeKind>,
}

fn logical_image(code: &EncodingSpec, p: &PauliOp) -> Result<PauliOp, CodeDeformError> {
    Ok(logical_map(code, p)?.1)
}

pub fn analytic_logical_action(
    b: &CommonSymplecticBasis,
    in_code: &EncodingSpec,
    out_code: &EncodingSpec,
) -> Result<AnalyticAction, CodeDeformError> {
    let s = b.s_group()?;
    let in_group = StabilizerGroup::from_code(in_code);
    if in_code.n != b.n || out_code.n != b.n {
        return Err(CodeDeformError::QubitMismatch(b.n, in_code.n.max(out_code.n)));
    }
    if let Some(g) = s.generators().iter().find(|g| !in_group.contains(g)) {
        return Err(CodeDeformError::NotContained { what: "input stabilizer", generator: g.to_string() });
    }
    if in_group.rank() != s.rank() {
        return Err(CodeDeformError::InvalidGroup("input code group differs from S".into()));
    }
    let target = b.deformed_group()?;
    if let Some(g) = out_code.stabilizers().iter().find(|g| !target.contains(g)) {
        return Err(CodeDeformError::NotContained { what: "output stabilizer", generator: g.to_string() });
    }

    let k = b.z.len();
    let (k_in, k_out) = (in_code.k, out_code.k);
    let n_zm = b.z_m.len();

    let mut lz = Vec::with_capacity(k_in);
    let mut lx = Vec::with_capacity(k_in);
    for (pz, px) in b.z_m.iter().zip(&b.x_m).chain(b.z.iter().zip(&b.x)) {
        lz.push(logical_image(in_code, pz)?);
        lx.push(logical_image(in_code, px)?);
    }
    let l = CliffordOp::from_images(lx, lz)?;

    // output stabilizers of the logical state, then the preserved pairs
    let mut rz: Vec<PauliOp> = Vec::with_capacity(k_out);
    let mut rows = BitMatrix::zeros(0, 2 * k_out);
    for p in b.x_delta.iter().chain(&b.z_cap).chain(&b.z_s).chain(&b.z_m) {
        let q = logical_image(out_code, p)?;
        let mut trial = rows.clone();
        trial.push_row(sym(&q));
        if trial.rank() > rows.rank() {
            rows = trial;
            rz.push(q);
        }
    }
    if rz.len() != k_out - k {
        return Err(CodeDeformError::Internal("output stabilizer count"));
    }
    let mut rx: Vec<Option<PauliOp>> = vec![None; k_out - k];
    for (pz, px) in b.z.iter().zip(&b.x) {
        rz.push(logical_image(out_code, pz)?);
        rx.push(Some(logical_image(out_code, px)?));
    }
    let r = clifford_from_partial(k_out, rz, rx)?;

    let n_r = b.x_delta.len();
    let n_o = n_r + n_zm;
    let gen = GeneralForm {
        n_in: k_in,
        n_out: k_out,
        k,
        n_r,
        l,
        r,
        a: BitMatrix::zeros(k_out - k, n_o),
        a_x: BitMatrix::zeros(k, n_o),
        a_z: BitMatrix::zeros(k, n_o),
    };
    let n_v = n_r + b.z_cap.len() + n_zm;
    let mut m = BitMatrix::zeros(n_v, n_o);
    let mut kinds = Vec::with_capacity(n_v);
    for j in 0..n_r {
        m.set(j, j, true);
        kinds.push(OutcomeKind::Random);
    }
    kinds.extend(std::iter::repeat_n(OutcomeKind::Zero, b.z_cap.len()));
    for j in 0..n_zm {
        m.set(n_r + b.z_cap.len() + j, n_r + j, true);
        kinds.push(OutcomeKind::InputDependent);
    }
    Ok(AnalyticAction { gen, map: OutcomeMap { m, v0: BitVec::zeros(n_v) }, kinds })
}

/// General form of the syndrome circuit followed by the deformation circuit.
///
/// `L = C_B`, `R = C_B (H^{|ZΔ|} ⊗ I)`, `A = 0 ⊕ I ⊕ 0` on the `ZΔ`, `Z∩ ∪ Z_S`
/// and `Z_M` outcomes, and one zero-condition random bit per `XΔ` outcome.
pub fn two_group_general_form(b: &CommonSymplecticBasis) -> Result<(GeneralForm, OutcomeMap), CodeDeformError> {
    let n = b.n;
    let [n_d, n_cap, n_s, n_m, k] = b.sizes();
    let l = b.clifford()?;
    let swap_xz = |j: usize, letter: char| {
        let flip = if j < n_d {
            if letter == 'X' {
                'Z'
            } else {
                'X'
            }
        } else {
            letter
        };
        PauliOp::single(n, j, flip)
    };
    let h =
        CliffordOp::from_images((0..n).map(|j| swap_xz(j, 'X')).collect(), (0..n).map(|j| swap_xz(j, 'Z')).collect())?;
    let r = l.compose(&h)?;
    let n_r = n_d;
    let n_meas = n - k;
    let n_o = n_r + n_meas;
    let mut a = BitMatrix::zeros(n - k, n_o);
    for j in n_d..n_d + n_cap + n_s {
        a.set(j, n_r + j, true);
    }
    let gen = GeneralForm {
        n_in: n,
        n_out: n,
        k,
        n_r,
        l,
        r,
        a,
        a_x: BitMatrix::zeros(k, n_o),
        a_z: BitMatrix::zeros(k, n_o),
    };
    // v_S = (ZΔ, Z∩, Z_S) and v_M = (XΔ, Z∩, Z_M)
    let n_v = (n_d + n_cap + n_s) + (n_d + n_cap + n_m);
    let mut m = BitMatrix::zeros(n_v, n_o);
    for j in 0..n_d + n_cap + n_s {
        m.set(j, n_r + j, true);
    }
    let off = n_d + n_cap + n_s;
    for j in 0..n_d {
        m.set(off + j, j, true);
    }
    for j in 0..n_cap {
        m.set(off + n_d + j, n_r + n_d + j, true);
    }
    for j in 0..n_m {
        m.set(off + n_d + n_cap + j, n_r + n_d + n_cap + n_s + j, true);
    }
    Ok((gen, OutcomeMap { m, v0: BitVec::zeros(n_v) }))
}

/// Lattice surgery between two distance-`d` repetition codes.
#[derive(Clone, Debug)]
pub struct SurgeryInstance {
    pub d: usize,
    /// Measures the coupled code, then the two repetition codes again.
    pub circuit: StabCircuit,
    pub s_code: EncodingSpec,
    pub m_code: EncodingSpec,
    pub basis: CommonSymplecticBasis,
    /// Logical `XX` measurement with a `Z` correction.
    pub reference: StabCircuit,
    /// Outcome of the circuit that carries the logical `XX` outcome.
    pub xx_outcome: usize,
}

struct Grid {
    d: usize,
}

impl Grid {
    fn q(&self, row: usize, col: usize) -> usize {
        row * self.d + col
    }

    fn pauli(&self, letter: char, qubits: &[(usize, usize)]) -> PauliOp {
        let mut p = PauliOp::identity(2 * self.d);
        for &(i, j) in qubits {
            p = p.mul(&PauliOp::single(2 * self.d, self.q(i, j), letter));
        }
        p
    }

    fn square(&self, j: usize) -> PauliOp {
        self.pauli('Z', &[(0, j), (0, j + 1), (1, j), (1, j + 1)])
    }

    fn row_prefix_x(&self, row: usize, len: usize) -> PauliOp {
        self.pauli('X', &(0..len).map(|j| (row, j)).collect::<Vec<_>>())
    }
}

/// Moves stabilizer `X` images into the commutant of the logical pairs.
fn repair_against(x: PauliOp, logical: &[(PauliOp, PauliOp)]) -> PauliOp {
    logical.iter().fold(x, |acc, (lz, lx)| {
        let mut acc = acc;
        if acc.anticommutes(lx) {
            acc = acc.mul(lz);
        }
        if acc.anticommutes(lz) {
            acc = acc.mul(lx);
        }
        acc.unsigned()
    })
}

pub fn repetition_surgery(d: usize) -> Result<SurgeryInstance, CodeDeformError> {
    if d < 2 {
        return Err(CodeDeformError::Distance(d));
    }
    let g = Grid { d };
    let n = 2 * d;
    let zz = |i: usize, j: usize| g.pauli('Z', &[(i, j), (i, j + 1)]);

    let mut s_z: Vec<PauliOp> = (0..2).flat_map(|i| (0..d - 1).map(move |j| (i, j))).map(|(i, j)| zz(i, j)).collect();
    let mut s_x: Vec<PauliOp> =
        (0..2).flat_map(|i| (0..d - 1).map(move |j| (i, j))).map(|(i, j)| g.row_prefix_x(i, j + 1)).collect();
    for i in 0..2 {
        s_z.push(g.pauli('Z', &[(i, d - 1)]));
        s_x.push(g.row_prefix_x(i, d));
    }
    let s_code = EncodingSpec::new(2, CliffordOp::from_images(s_x, s_z)?);

    let xx = |j: usize| g.pauli('X', &[(0, j), (1, j)]);
    let m_logical = (g.pauli('Z', &[(0, d - 1), (1, d - 1)]), g.row_prefix_x(0, d));
    let mut m_z: Vec<PauliOp> = (0..d).map(xx).collect();
    let mut m_x: Vec<PauliOp> =
        (0..d).map(|j| repair_against(g.pauli('Z', &[(0, j)]), std::slice::from_ref(&m_logical))).collect();
    m_z.extend((0..d - 1).map(|j| g.square(j)));
    m_x.extend((0..d - 1).map(|j| g.row_prefix_x(1, j + 1)));
    m_z.push(m_logical.0.clone());
    m_x.push(m_logical.1.clone());
    let m_code = EncodingSpec::new(1, CliffordOp::from_images(m_x, m_z)?);

    let all_xx = (0..d).fold(PauliOp::identity(n), |acc, j| acc.mul(&xx(j)));
    let basis = CommonSymplecticBasis {
        n,
        x_delta: (0..d - 1).map(xx).collect(),
        z_delta: (0..d - 1).map(|j| g.pauli('Z', &[(0, j), (0, d - 1)])).collect(),
        x_cap: (0..d - 1).map(|j| g.row_prefix_x(1, j + 1)).collect(),
        z_cap: (0..d - 1).map(|j| g.square(j)).collect(),
        x_s: vec![],
        z_s: vec![],
        x_m: vec![g.pauli('Z', &[(0, d - 1)])],
        z_m: vec![all_xx],
        x: vec![g.row_prefix_x(1, d)],
        z: vec![g.pauli('Z', &[(0, d - 1), (1, d - 1)])],
    };
    let s_group = StabilizerGroup::from_code(&s_code);
    let m_group = StabilizerGroup::from_code(&m_code);
    basis.check(&s_group, &m_group).map_err(|_| CodeDeformError::Internal("surgery basis"))?;

    let circuit = build_deformation_circuit(&basis).then(&build_deformation_circuit(&basis.swapped()));
    let reference = crate::circuit::parse_circuit("inputs 2\nmeasure X1 X2\ncond Z1 if o1 == 1\n")?;
    let xx_outcome = basis.x_delta.len() + basis.z_cap.len();
    Ok(SurgeryInstance { d, circuit, s_code, m_code, basis, reference, xx_outcome })
}
