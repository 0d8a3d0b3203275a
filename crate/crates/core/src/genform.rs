//! General forms of stabilizer circuits.
//!
//! A general form on `n_in` inputs and `n_out` outputs runs
//!
//! 1. `L†` on the inputs, then destructive `Z` measurements of the first
//!    `n_in - k` qubits with outcome vector `m`,
//! 2. `X^{A_x o} Z^{A_z o}` on the `k` remaining inner qubits, where
//!    `o = r ⊕ m` and `r` holds `n_r` fair random bits,
//! 3. allocation of `n_out - k` fresh qubits in state `|A o⟩` in front of the
//!    inner qubits, then `R`.
//!
//! Any stabilizer circuit is equivalent to such a form with outcome relation
//! `v = v0 + M o`.

use thiserror::Error;

use crate::circuit::{choi_circuit, single, CircuitError, StabCircuit, StabOp};
use crate::clifford::{CliffordError, CliffordOp};
use crate::f2linalg::{BitMatrix, BitVec, LinalgError};
use crate::pauli::PauliOp;
use crate::sim::{simulate_complete, SimError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenFormError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("commutation matrix of the family is singular")]
    SingularCommutation,
    #[error("state has {k} Bell pairs across the cut, a unitary needs {n}")]
    NotUnitaryChoi { k: usize, n: usize },
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
    #[error("{0}")]
    Json(String),
}

/// Parameters of a general form circuit; see the module docs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralForm {
    pub n_in: usize,
    pub n_out: usize,
    pub k: usize,
    pub n_r: usize,
    pub l: CliffordOp,
    pub r: CliffordOp,
    pub a: BitMatrix,
    pub a_x: BitMatrix,
    pub a_z: BitMatrix,
}

/// `v = v0 + M o`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeMap {
    pub m: BitMatrix,
    pub v0: BitVec,
}

impl OutcomeMap {
    pub fn apply(&self, o: &BitVec) -> BitVec {
        self.m.mul_vec(o).xor(&self.v0)
    }
}

/// Solution of the bipartite normal form problem for the family `{C|a⟩}`.
///
/// With `C̃ = C U_F`, the state `C̃|a1 a2 a3 a4⟩` equals, up to global phase,
/// `(D ⊗ B*)` applied to `|a1⟩ ⊗ Bell(a2, a4) ⊗ |a3⟩`, where the blocks have
/// sizes `n1 - k`, `k`, `n2 - k`, `k` and `Bell(a2, a4)` pairs qubit `j` of
/// `a2` (first side) with qubit `j` of `a4` (second side) in the state
/// `CNOT_{2→1} H_2 |a2_j a4_j⟩`. `D` acts on `[a1, a2]` and `B*` on `[a3, a4]`.
#[derive(Clone, Debug)]
pub struct BipartiteFamilyForm {
    pub f: BitMatrix,
    pub f_inv: BitMatrix,
    pub k: usize,
    pub d: CliffordOp,
    pub b: CliffordOp,
}

impl GeneralForm {
    pub fn n_m(&self) -> usize {
        self.n_in - self.k
    }

    pub fn n_o(&self) -> usize {
        self.n_r + self.n_m()
    }

    /// `(Aᵀ | A_xᵀ | A_zᵀ)ᵀ`, the stacked condition matrices.
    pub fn stacked(&self) -> BitMatrix {
        BitMatrix::vstack_all(self.n_o(), &[&self.a, &self.a_x, &self.a_z])
    }

    pub fn to_json(&self, map: &OutcomeMap) -> serde_json::Value {
        let rows = |m: &BitMatrix| m.rows().iter().map(|r| r.to_string()).collect::<Vec<_>>();
        serde_json::json!({
            "n_in": self.n_in,
            "n_out": self.n_out,
            "k": self.k,
            "n_r": self.n_r,
            "L": self.l.to_json(),
            "R": self.r.to_json(),
            "A": rows(&self.a),
            "Ax": rows(&self.a_x),
            "Az": rows(&self.a_z),
            "M": rows(&map.m),
            "v0": map.v0.to_string(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<(GeneralForm, OutcomeMap), GenFormError> {
        let bad = |what: &str| GenFormError::Json(format!("general form JSON: bad or missing {what}"));
        let num = |key: &str| v.get(key).and_then(|x| x.as_u64()).map(|x| x as usize).ok_or_else(|| bad(key));
        let (n_in, n_out, k, n_r) = (num("n_in")?, num("n_out")?, num("k")?, num("n_r")?);
        let n_o = n_in.checked_sub(k).ok_or_else(|| bad("k"))? + n_r;
        let mat = |key: &str| -> Result<BitMatrix, GenFormError> {
            let rows: Vec<String> = v
                .get(key)
                .and_then(|x| x.as_array())
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|r| r.as_str().map(str::to_owned).ok_or_else(|| bad(key)))
                .collect::<Result<_, _>>()?;
            Ok(BitMatrix::parse_rows(n_o, &rows)?)
        };
        let cliff = |key: &str| -> Result<CliffordOp, GenFormError> {
            Ok(CliffordOp::from_json(v.get(key).ok_or_else(|| bad(key))?)?)
        };
        let g = GeneralForm {
            n_in,
            n_out,
            k,
            n_r,
            l: cliff("L")?,
            r: cliff("R")?,
            a: mat("A")?,
            a_x: mat("Ax")?,
            a_z: mat("Az")?,
        };
        let m = mat("M")?;
        let v0 = BitVec::parse(v.get("v0").and_then(|x| x.as_str()).ok_or_else(|| bad("v0"))?)?;
        g.check()?;
        if v0.len() != m.nrows() {
            return Err(bad("v0"));
        }
        Ok((g, OutcomeMap { m, v0 }))
    }

    /// Dimension consistency.
    pub fn check(&self) -> Result<(), GenFormError> {
        let n_o = self.n_o();
        let ok = self.k <= self.n_in.min(self.n_out)
            && self.l.num_qubits() == self.n_in
            && self.r.num_qubits() == self.n_out
            && self.a.shape() == (self.n_out - self.k, n_o)
            && self.a_x.shape() == (self.k, n_o)
            && self.a_z.shape() == (self.k, n_o);
        if ok {
            Ok(())
        } else {
            Err(GenFormError::Json("general form dimensions are inconsistent".into()))
        }
    }

    /// The general form as a circuit whose outcome vector is `o = r ⊕ m`.
    pub fn to_circuit(&self) -> StabCircuit {
        let k2 = self.n_m();
        let k1 = self.n_out - self.k;
        let mut c = StabCircuit::new(self.n_in);
        c.push_clifford(&self.l.inverse(), &(0..self.n_in).collect::<Vec<_>>());
        for _ in 0..self.n_r {
            c.ops.push(StabOp::Rand);
        }
        for j in 0..k2 {
            c.ops.push(StabOp::Measure { pauli: single('Z', 0), hint: None });
            c.ops.push(StabOp::CondPauli { pauli: single('X', 0), outcomes: vec![self.n_r + j], value: true });
            c.ops.push(StabOp::Dealloc(0));
        }
        let cond = |c: &mut StabCircuit, letter: char, q: usize, row: &BitVec| {
            if !row.is_zero() {
                c.ops.push(StabOp::CondPauli { pauli: single(letter, q), outcomes: row.ones().collect(), value: true });
            }
        };
        for t in 0..self.k {
            cond(&mut c, 'X', t, self.a_x.row(t));
            cond(&mut c, 'Z', t, self.a_z.row(t));
        }
        for i in 0..k1 {
            c.ops.push(StabOp::Alloc(i));
        }
        for i in 0..k1 {
            cond(&mut c, 'X', i, self.a.row(i));
        }
        c.push_clifford(&self.r, &(0..self.n_out).collect::<Vec<_>>());
        c
    }
}

/// Rows of the result indicate products of `gens` spanning the elements of
/// `⟨gens⟩` supported inside `keep`. The generators must commute.
pub fn support_restricted_subgroup(gens: &[PauliOp], keep: &[usize]) -> BitMatrix {
    let n = gens.first().map_or(0, PauliOp::num_qubits);
    let mut inside = vec![false; n];
    for &q in keep {
        inside[q] = true;
    }
    let outside: Vec<usize> = (0..n).filter(|&q| !inside[q]).collect();
    let rows = gens.iter().map(|p| p.z().gather(&outside).concat(&p.x().gather(&outside))).collect();
    BitMatrix::from_rows(2 * outside.len(), rows).transpose().kernel_basis()
}

/// `(F, F⁻¹)` such that the products indicated by the rows of `F` have the
/// commutation pattern of `X1, Z1, X2, Z2, ...`.
pub fn symplectic_basis(paulis: &[PauliOp]) -> Result<(BitMatrix, BitMatrix), GenFormError> {
    let len = paulis.len();
    if len % 2 == 1 {
        return Err(GenFormError::SingularCommutation);
    }
    let mut f = BitMatrix::identity(len);
    let mut f_inv = BitMatrix::identity(len);
    let mut q: Vec<PauliOp> = paulis.iter().map(PauliOp::unsigned).collect();
    for k in 0..len / 2 {
        let (a, b) = (2 * k, 2 * k + 1);
        let j = (b..len).find(|&j| q[a].anticommutes(&q[j])).ok_or(GenFormError::SingularCommutation)?;
        f.swap_rows(b, j);
        q.swap(b, j);
        swap_cols(&mut f_inv, b, j);
        for i in b + 1..len {
            let (ca, cb) = (q[a].anticommutes(&q[i]), q[b].anticommutes(&q[i]));
            // anticommuting with Q_a is cleared by the partner Q_b and vice versa;
            // F ← (I + e_i e_src^T) F and F⁻¹ ← F⁻¹ (I + e_i e_src^T)
            for (flag, src) in [(ca, b), (cb, a)] {
                if flag {
                    f.add_row(src, i);
                    add_col(&mut f_inv, i, src);
                    let t = q[src].clone();
                    q[i].mul_assign_right(&t);
                }
            }
        }
    }
    Ok((f, f_inv))
}

fn swap_cols(m: &mut BitMatrix, a: usize, b: usize) {
    for r in 0..m.nrows() {
        let (x, y) = (m.get(r, a), m.get(r, b));
        m.set(r, a, y);
        m.set(r, b, x);
    }
}

/// Column `dst` += column `src`.
fn add_col(m: &mut BitMatrix, src: usize, dst: usize) {
    for r in 0..m.nrows() {
        if m.get(r, src) {
            let v = m.get(r, dst);
            m.set(r, dst, !v);
        }
    }
}

/// Restriction to a qubit range keeping the full phase; only valid when `p`
/// acts trivially outside the range.
fn restrict_signed(p: &PauliOp, range: std::ops::Range<usize>) -> PauliOp {
    PauliOp::new(p.x().slice(range.clone()), p.z().slice(range), p.phase())
}

/// Completes a Clifford from all its `Z` images and some `X` images. Missing
/// `X` images start from `candidates`, which must already have the right
/// commutation with the `Z` images of qubits without a fixed `X` image.
fn complete_x_images(
    z: &[PauliOp],
    x: Vec<Option<PauliOp>>,
    mut candidates: Vec<PauliOp>,
) -> Result<CliffordOp, GenFormError> {
    let n = z.len();
    let fixed: Vec<usize> = (0..n).filter(|&i| x[i].is_some()).collect();
    let missing: Vec<usize> = (0..n).filter(|&i| x[i].is_none()).collect();
    for (idx, &i) in missing.iter().enumerate() {
        let mut c = candidates[idx].unsigned();
        for &p in &fixed {
            let xp = x[p].as_ref().expect("fixed");
            let (anti_z, anti_x) = (c.anticommutes(&z[p]), c.anticommutes(xp));
            if anti_z {
                c = c.mul(xp);
            }
            if anti_x {
                c = c.mul(&z[p]);
            }
        }
        candidates[idx] = c.unsigned();
        debug_assert!(candidates[idx].anticommutes(&z[i]));
    }
    for a in 0..missing.len() {
        for b in a + 1..missing.len() {
            if candidates[a].anticommutes(&candidates[b]) {
                let za = z[missing[a]].clone();
                candidates[b] = candidates[b].mul(&za).unsigned();
            }
        }
    }
    let mut it = candidates.into_iter();
    let x_images = x.into_iter().map(|o| o.unwrap_or_else(|| it.next().expect("one candidate per gap"))).collect();
    Ok(CliffordOp::from_images(x_images, z.to_vec())?)
}

/// Bipartite normal form of `{C|a⟩}` over the cut `[0, n1) | [n1, n)`.
pub fn bipartite_family_form(c: &CliffordOp, n1: usize) -> Result<BipartiteFamilyForm, GenFormError> {
    let n = c.num_qubits();
    assert!(n1 <= n, "cut beyond the register");
    let n2 = n - n1;
    let gens: Vec<PauliOp> = (0..n).map(|j| c.z_image(j).clone()).collect();
    let f1 = support_restricted_subgroup(&gens, &(0..n1).collect::<Vec<_>>());
    let f2 = support_restricted_subgroup(&gens, &(n1..n).collect::<Vec<_>>());
    let (k1, k2) = (f1.nrows(), f2.nrows());
    let k = n1 - k1;
    if n2 - k2 != k {
        return Err(GenFormError::Internal("Schmidt ranks of the two sides differ"));
    }
    let f_hat = f1.vstack(&f2).full_rank_completion()?;
    let product = |row: &BitVec| c.image_unchecked(&PauliOp::z_only(row.clone()));
    let side1: Vec<PauliOp> = (k1 + k2..n).map(|j| product(f_hat.row(j)).split_at(n1).0.unsigned()).collect();
    let (f_sym, _) = symplectic_basis(&side1)?;
    let a = BitMatrix::identity(k1 + k2).direct_sum(&f_sym).mul(&f_hat);
    let mut order: Vec<usize> = (0..k1).collect();
    order.extend((0..k).map(|j| k1 + k2 + 2 * j));
    order.extend(k1..k1 + k2);
    order.extend((0..k).map(|j| k1 + k2 + 2 * j + 1));
    let f_inv = a.select_rows(&order);
    let f = f_inv.invert()?;

    // Z images of C̃ = C U_F are the products indicated by rows of F⁻¹
    let zt: Vec<PauliOp> = (0..n).map(|j| product(f_inv.row(j))).collect();
    let xt = |j: usize| c.image_unchecked(&PauliOp::x_only(f.col(j)));
    let (a2, a3, a4) = (k1, n1, n1 + k2);

    let mut d_z: Vec<PauliOp> = (0..k1).map(|i| restrict_signed(&zt[i], 0..n1)).collect();
    let mut d_x: Vec<Option<PauliOp>> = vec![None; k1];
    let mut b_z: Vec<PauliOp> = (0..k2).map(|i| restrict_signed(&zt[a3 + i], n1..n)).collect();
    let mut b_x: Vec<Option<PauliOp>> = vec![None; k2];
    for j in 0..k {
        let (dz, bz) = zt[a2 + j].split_at(n1);
        let (dx, bx) = zt[a4 + j].split_at(n1);
        d_z.push(dz);
        b_z.push(bz);
        d_x.push(Some(dx));
        b_x.push(Some(bx));
    }
    let d_cand = (0..k1).map(|i| xt(i).split_at(n1).0.unsigned()).collect();
    let b_cand = (0..k2).map(|i| xt(a3 + i).split_at(n1).1).collect();
    let d = complete_x_images(&d_z, d_x, d_cand)?;
    let b_conj = complete_x_images(&b_z, b_x, b_cand)?;
    Ok(BipartiteFamilyForm { f, f_inv, k, d, b: b_conj.complex_conjugate() })
}

/// Recovers `U` (up to global phase) from a Clifford `C` with
/// `C|0⟩ ≃ (U ⊗ I)|Φ+⟩`, the Choi state of `U` on `2n` qubits.
pub fn clifford_from_choi(c: &CliffordOp) -> Result<CliffordOp, GenFormError> {
    let n = c.num_qubits() / 2;
    if c.num_qubits() != 2 * n {
        return Err(GenFormError::NotUnitaryChoi { k: 0, n });
    }
    let form = bipartite_family_form(c, n)?;
    if form.k != n {
        return Err(GenFormError::NotUnitaryChoi { k: form.k, n });
    }
    // C|0⟩ = C̃|F⁻¹0⟩ = C̃|0⟩ ≃ (D ⊗ B*)|Φ+⟩ = (D B† ⊗ I)|Φ+⟩
    Ok(form.d.compose(&form.b.inverse())?)
}

/// General form of `c` together with the outcome relation.
pub fn general_form(c: &StabCircuit) -> Result<(GeneralForm, OutcomeMap), GenFormError> {
    c.validate()?;
    let (n_in, n_out) = (c.n_in, c.n_out());
    let sim = simulate_complete(&choi_circuit(c))?;
    let form = bipartite_family_form(&sim.co, n_out)?;
    let k = form.k;
    let (k1, k2) = (n_out - k, n_in - k);
    let n_r_full = sim.a.ncols();
    let a_tilde = form.f_inv.mul(&sim.a);
    let measured = a_tilde.row_range(n_out..n_out + k2);
    let (b, a_mu) =
        measured.block_reshape().map_err(|_| GenFormError::Internal("Choi family is not phase complete"))?;
    let mut l = form.b;
    l.right_mult_css(&a_mu.direct_sum(&BitMatrix::identity(k)))?;
    let ab = a_tilde.mul(&b);
    let g = GeneralForm {
        n_in,
        n_out,
        k,
        n_r: n_r_full - k2,
        l,
        r: form.d,
        a: ab.row_range(0..k1),
        a_x: ab.row_range(k1..n_out),
        a_z: ab.row_range(n_out + k2..n_out + n_in),
    };
    let map = OutcomeMap { m: sim.m.mul(&b), v0: sim.v0 };
    Ok((g, map))
}

/// Result of [`compress`]: `o' = fwd·o`, `o = bwd·o'` on the relevant cosets.
#[derive(Clone, Debug)]
pub struct Compression {
    pub form: GeneralForm,
    pub fwd: BitMatrix,
    pub bwd: BitMatrix,
}

/// Drops random bits that do not change the applied map.
pub fn compress(g: &GeneralForm) -> Compression {
    let n_m = g.n_m();
    let stacked = g.stacked();
    let a_rand = stacked.col_range(0..g.n_r);
    // b_inv·Ãᵀ is in RREF, so F = b_invᵀ and F⁻¹ = bᵀ
    let fac = a_rand.transpose().rref_factor();
    let f = fac.b_inv.transpose();
    let f_inv = fac.b.transpose();
    let n_r2 = fac.rank;
    let fwd = f_inv.row_range(0..n_r2).direct_sum(&BitMatrix::identity(n_m));
    let bwd = f.col_range(0..n_r2).direct_sum(&BitMatrix::identity(n_m));
    let form = GeneralForm { n_r: n_r2, a: g.a.mul(&bwd), a_x: g.a_x.mul(&bwd), a_z: g.a_z.mul(&bwd), ..g.clone() };
    Compression { form, fwd, bwd }
}

/// Labels outcome vectors of a circuit so that equal labels mean equal
/// instrument maps: `v ↦ fwd · M⁽⁻¹⁾ (v - v0)`.
#[derive(Clone, Debug)]
pub struct CompressionMap {
    pub fwd: BitMatrix,
    pub m_inv: BitMatrix,
    pub v0: BitVec,
}

impl CompressionMap {
    pub fn label(&self, v: &BitVec) -> BitVec {
        self.fwd.mul_vec(&self.m_inv.mul_vec(&v.xor(&self.v0)))
    }
}

pub fn instrument_compression_map(c: &StabCircuit) -> Result<CompressionMap, GenFormError> {
    let (g, map) = general_form(c)?;
    let comp = compress(&g);
    Ok(CompressionMap { fwd: comp.fwd, m_inv: map.m.left_inverse()?, v0: map.v0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_subgroup_small() {
        let n = 2;
        let zz = PauliOp::z_only(BitVec::from_indices(n, [0usize, 1]));
        let xx = PauliOp::x_only(BitVec::from_indices(n, [0usize, 1]));
        assert_eq!(support_restricted_subgroup(&[zz, xx], &[0]).nrows(), 0);
        let gens = [PauliOp::z_on(2, 0), PauliOp::z_on(2, 1)];
        assert_eq!(support_restricted_subgroup(&gens, &[1]), BitMatrix::from_strs(&["01"]));
        assert_eq!(support_restricted_subgroup(&gens, &[0, 1]), BitMatrix::identity(2));
    }

    #[test]
    fn symplectic_basis_swapped_pair() {
        let (f, f_inv) = symplectic_basis(&[PauliOp::x_on(1, 0), PauliOp::z_on(1, 0)]).unwrap();
        assert_eq!(f, BitMatrix::identity(2));
        assert_eq!(f_inv, BitMatrix::identity(2));
        let (f, _) =
            symplectic_basis(&[PauliOp::x_on(2, 0), PauliOp::x_on(2, 1), PauliOp::z_on(2, 1), PauliOp::z_on(2, 0)])
                .unwrap();
        assert_eq!(f, BitMatrix::from_strs(&["1000", "0001", "0010", "0100"]));
        assert!(symplectic_basis(&[PauliOp::z_on(1, 0), PauliOp::z_on(1, 0)]).is_err());
    }
}
