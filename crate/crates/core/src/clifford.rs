//! Clifford unitaries stored by both their images and their preimages.

use thiserror::Error;

use crate::f2linalg::{BitMatrix, BitVec, LinalgError};
use crate::pauli::{PauliError, PauliOp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CliffordError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("images do not have the commutation relations of X and Z: {0}")]
    NotSymplectic(String),
    #[error("controlled-Pauli operands {0} and {1} anticommute")]
    AnticommutingControl(String, String),
    #[error("qubit {0} is not in a deterministic |0> state")]
    NotDisentangled(usize),
    #[error("qubit {0} is acted on nontrivially and cannot be removed")]
    NontrivialQubit(usize),
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("bad tableau: {0}")]
    Tableau(String),
}

/// Left-multiplication steps produced by [`CliffordOp::synthesize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    /// `e^{iπP/4}`
    Exp(PauliOp),
    Pauli(PauliOp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliKind {
    X,
    Z,
}

/// An `n`-qubit Clifford unitary, known up to global phase.
///
/// `z_img[k] = C Z_k C†`, `x_img[k] = C X_k C†`, `x_pre[k] = C† X_k C`,
/// `z_pre[k] = C† Z_k C`. Both directions are kept in sync by every mutator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CliffordOp {
    n: usize,
    z_img: Vec<PauliOp>,
    x_img: Vec<PauliOp>,
    x_pre: Vec<PauliOp>,
    z_pre: Vec<PauliOp>,
}

fn anticommutes_with_basis(p: &PauliOp, kind: PauliKind, k: usize) -> bool {
    match kind {
        PauliKind::X => p.z().get(k),
        PauliKind::Z => p.x().get(k),
    }
}

/// `i^s ∏ zs[k]^{z_k} ∏ xs[k]^{x_k}` for the batch encoding of `p`.
fn expand(p: &PauliOp, zs: &[PauliOp], xs: &[PauliOp], n_out: usize) -> PauliOp {
    let mut out = PauliOp::identity(n_out).mult_phase(p.phase());
    for k in p.z().ones() {
        out.mul_assign_right(&zs[k]);
    }
    for k in p.x().ones() {
        out.mul_assign_right(&xs[k]);
    }
    out
}

impl CliffordOp {
    pub fn identity(n: usize) -> Self {
        let z: Vec<_> = (0..n).map(|k| PauliOp::z_on(n, k)).collect();
        let x: Vec<_> = (0..n).map(|k| PauliOp::x_on(n, k)).collect();
        CliffordOp { n, z_img: z.clone(), x_img: x.clone(), x_pre: x, z_pre: z }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn z_image(&self, k: usize) -> &PauliOp {
        &self.z_img[k]
    }

    pub fn x_image(&self, k: usize) -> &PauliOp {
        &self.x_img[k]
    }

    pub fn z_preimage(&self, k: usize) -> &PauliOp {
        &self.z_pre[k]
    }

    pub fn x_preimage(&self, k: usize) -> &PauliOp {
        &self.x_pre[k]
    }

    /// Builds `C` from `C X_k C†` and `C Z_k C†`, deriving the preimages.
    pub fn from_images(x_images: Vec<PauliOp>, z_images: Vec<PauliOp>) -> Result<Self, CliffordError> {
        let n = x_images.len();
        check_symplectic(n, &x_images, &z_images)?;
        let (x_pre, z_pre) = invert_images(n, &x_images, &z_images);
        Ok(CliffordOp { n, z_img: z_images, x_img: x_images, x_pre, z_pre })
    }

    /// Builds `C` from `C† X_k C` and `C† Z_k C`.
    pub fn from_preimages(x_pre: Vec<PauliOp>, z_pre: Vec<PauliOp>) -> Result<Self, CliffordError> {
        Ok(Self::from_images(x_pre, z_pre)?.inverse())
    }

    /// Initialization from `(X-image, Z-image)` pairs.
    pub fn init_from_images(pairs: Vec<(PauliOp, PauliOp)>) -> Result<Self, CliffordError> {
        let (x, z) = pairs.into_iter().unzip();
        Self::from_images(x, z)
    }

    /// The CSS Clifford `U_A : |v⟩ ↦ |Av⟩`, so `X^a ↦ X^{Aa}` and `Z^a ↦ Z^{A^{-T}a}`.
    pub fn css(a: &BitMatrix) -> Result<Self, CliffordError> {
        let n = a.nrows();
        let a_inv = a.invert()?;
        let a_inv_t = a_inv.transpose();
        let x_img = (0..n).map(|k| PauliOp::x_only(a.col(k))).collect();
        let z_img = (0..n).map(|k| PauliOp::z_only(a_inv_t.col(k))).collect();
        let x_pre = (0..n).map(|k| PauliOp::x_only(a_inv.col(k))).collect();
        let z_pre = (0..n).map(|k| PauliOp::z_only(a.row(k).clone())).collect();
        Ok(CliffordOp { n, z_img, x_img, x_pre, z_pre })
    }

    pub fn image(&self, p: &PauliOp) -> Result<PauliOp, CliffordError> {
        self.check_size(p)?;
        Ok(self.image_unchecked(p))
    }

    pub fn preimage(&self, p: &PauliOp) -> Result<PauliOp, CliffordError> {
        self.check_size(p)?;
        Ok(self.preimage_unchecked(p))
    }

    /// `C P C†`; works for any Pauli, Hermitian or not.
    pub fn image_unchecked(&self, p: &PauliOp) -> PauliOp {
        expand(p, &self.z_img, &self.x_img, self.n)
    }

    /// `C† P C`.
    pub fn preimage_unchecked(&self, p: &PauliOp) -> PauliOp {
        expand(p, &self.z_pre, &self.x_pre, self.n)
    }

    fn check_size(&self, p: &PauliOp) -> Result<(), CliffordError> {
        if p.num_qubits() != self.n {
            return Err(CliffordError::SizeMismatch(self.n, p.num_qubits()));
        }
        Ok(())
    }

    pub fn inverse(&self) -> CliffordOp {
        CliffordOp {
            n: self.n,
            z_img: self.z_pre.clone(),
            x_img: self.x_pre.clone(),
            x_pre: self.x_img.clone(),
            z_pre: self.z_img.clone(),
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &CliffordOp) -> Result<CliffordOp, CliffordError> {
        if self.n != other.n {
            return Err(CliffordError::SizeMismatch(self.n, other.n));
        }
        let img = |v: &[PauliOp]| v.iter().map(|p| self.image_unchecked(p)).collect();
        let pre = |v: &[PauliOp]| v.iter().map(|p| other.preimage_unchecked(p)).collect();
        Ok(CliffordOp {
            n: self.n,
            z_img: img(&other.z_img),
            x_img: img(&other.x_img),
            x_pre: pre(&self.x_pre),
            z_pre: pre(&self.z_pre),
        })
    }

    /// `C ← e^{iπP/4} C`.
    pub fn left_mult_exp(&mut self, p: &PauliOp) -> Result<(), CliffordError> {
        self.check_size(p)?;
        p.require_hermitian()?;
        let p_pre = self.preimage_unchecked(p);
        let ip = p.mult_phase(1);
        for q in self.z_img.iter_mut().chain(self.x_img.iter_mut()) {
            if q.anticommutes(p) {
                q.mul_assign_left(&ip);
            }
        }
        // C†(e^{-iπP/4} B e^{iπP/4})C = -i pre(P) pre(B) for basis B anticommuting with P
        let minus_i_pre = p_pre.mult_phase(3);
        for k in p.support() {
            if anticommutes_with_basis(p, PauliKind::X, k) {
                self.x_pre[k].mul_assign_left(&minus_i_pre);
            }
            if anticommutes_with_basis(p, PauliKind::Z, k) {
                self.z_pre[k].mul_assign_left(&minus_i_pre);
            }
        }
        Ok(())
    }

    /// `C ← C e^{iπP/4}`.
    pub fn right_mult_exp(&mut self, p: &PauliOp) -> Result<(), CliffordError> {
        self.check_size(p)?;
        p.require_hermitian()?;
        let mut inv = self.inverse();
        inv.left_mult_exp(&p.negate())?;
        *self = inv.inverse();
        Ok(())
    }

    /// `C ← P C`.
    pub fn left_mult_pauli(&mut self, p: &PauliOp) -> Result<(), CliffordError> {
        self.check_size(p)?;
        for q in self.z_img.iter_mut().chain(self.x_img.iter_mut()) {
            if q.anticommutes(p) {
                *q = q.negate();
            }
        }
        for k in p.support() {
            if anticommutes_with_basis(p, PauliKind::X, k) {
                self.x_pre[k] = self.x_pre[k].negate();
            }
            if anticommutes_with_basis(p, PauliKind::Z, k) {
                self.z_pre[k] = self.z_pre[k].negate();
            }
        }
        Ok(())
    }

    /// `C ← C P`.
    pub fn right_mult_pauli(&mut self, p: &PauliOp) -> Result<(), CliffordError> {
        self.check_size(p)?;
        for k in p.support() {
            if anticommutes_with_basis(p, PauliKind::X, k) {
                self.x_img[k] = self.x_img[k].negate();
            }
            if anticommutes_with_basis(p, PauliKind::Z, k) {
                self.z_img[k] = self.z_img[k].negate();
            }
        }
        for q in self.z_pre.iter_mut().chain(self.x_pre.iter_mut()) {
            if q.anticommutes(p) {
                *q = q.negate();
            }
        }
        Ok(())
    }

    /// `C ← Λ(P,Q) C`, using `Λ(P,Q) ≃ e^{-iπP/4} e^{-iπQ/4} e^{iπPQ/4}`.
    pub fn left_mult_ctrl_pauli(&mut self, p: &PauliOp, q: &PauliOp) -> Result<(), CliffordError> {
        for g in ctrl_pauli_exps(p, q)? {
            self.left_mult_exp(&g)?;
        }
        Ok(())
    }

    /// `C ← C Λ(P,Q)`.
    pub fn right_mult_ctrl_pauli(&mut self, p: &PauliOp, q: &PauliOp) -> Result<(), CliffordError> {
        for g in ctrl_pauli_exps(p, q)?.iter().rev() {
            self.right_mult_exp(g)?;
        }
        Ok(())
    }

    /// `C ← SWAP_{ij} C`.
    pub fn left_mult_swap(&mut self, i: usize, j: usize) {
        for q in self.z_img.iter_mut().chain(self.x_img.iter_mut()) {
            q.swap_qubits(i, j);
        }
        self.x_pre.swap(i, j);
        self.z_pre.swap(i, j);
    }

    /// `C ← C SWAP_{ij}`.
    pub fn right_mult_swap(&mut self, i: usize, j: usize) {
        self.x_img.swap(i, j);
        self.z_img.swap(i, j);
        for q in self.z_pre.iter_mut().chain(self.x_pre.iter_mut()) {
            q.swap_qubits(i, j);
        }
    }

    /// `C ← U_A C`.
    pub fn left_mult_css(&mut self, a: &BitMatrix) -> Result<(), CliffordError> {
        *self = CliffordOp::css(a)?.compose(self)?;
        Ok(())
    }

    /// `C ← C U_A`.
    pub fn right_mult_css(&mut self, a: &BitMatrix) -> Result<(), CliffordError> {
        *self = self.compose(&CliffordOp::css(a)?)?;
        Ok(())
    }

    pub fn left_mult(&mut self, u: &CliffordOp) -> Result<(), CliffordError> {
        *self = u.compose(self)?;
        Ok(())
    }

    pub fn right_mult(&mut self, u: &CliffordOp) -> Result<(), CliffordError> {
        *self = self.compose(u)?;
        Ok(())
    }

    /// `self ⊗ other`, with `self` on the first qubits.
    pub fn tensor(&self, other: &CliffordOp) -> CliffordOp {
        let (a, b) = (self.n, other.n);
        let left = |p: &PauliOp| p.tensor(&PauliOp::identity(b));
        let right = |p: &PauliOp| PauliOp::identity(a).tensor(p);
        let join = |mine: &[PauliOp], theirs: &[PauliOp]| -> Vec<PauliOp> {
            mine.iter().map(left).chain(theirs.iter().map(right)).collect()
        };
        CliffordOp {
            n: a + b,
            z_img: join(&self.z_img, &other.z_img),
            x_img: join(&self.x_img, &other.x_img),
            x_pre: join(&self.x_pre, &other.x_pre),
            z_pre: join(&self.z_pre, &other.z_pre),
        }
    }

    pub fn add_qubits(&self, m: usize) -> CliffordOp {
        self.tensor(&CliffordOp::identity(m))
    }

    /// Inserts an idle qubit at `pos`; later qubits move up by one.
    pub fn insert_qubit(&mut self, pos: usize) {
        let n = self.n + 1;
        for list in [&mut self.z_img, &mut self.x_img, &mut self.x_pre, &mut self.z_pre] {
            for p in list.iter_mut() {
                p.insert_qubit(pos);
            }
        }
        self.z_img.insert(pos, PauliOp::z_on(n, pos));
        self.x_img.insert(pos, PauliOp::x_on(n, pos));
        self.z_pre.insert(pos, PauliOp::z_on(n, pos));
        self.x_pre.insert(pos, PauliOp::x_on(n, pos));
        self.n = n;
    }

    /// Whether `C = C' ⊗_pos I` exactly.
    pub fn acts_trivially_on(&self, pos: usize) -> bool {
        self.z_img[pos] == PauliOp::z_on(self.n, pos) && self.x_img[pos] == PauliOp::x_on(self.n, pos)
    }

    /// Removes qubit `pos`, which must be untouched by `C`.
    pub fn remove_qubit(&mut self, pos: usize) -> Result<(), CliffordError> {
        if !self.acts_trivially_on(pos) {
            return Err(CliffordError::NontrivialQubit(pos));
        }
        for list in [&mut self.z_img, &mut self.x_img, &mut self.x_pre, &mut self.z_pre] {
            list.remove(pos);
            for p in list.iter_mut() {
                p.remove_qubit(pos);
            }
        }
        self.n -= 1;
        Ok(())
    }

    /// Removes the last `m` qubits, which must be untouched.
    pub fn remove_qubits(&mut self, m: usize) -> Result<(), CliffordError> {
        for _ in 0..m {
            self.remove_qubit(self.n - 1)?;
        }
        Ok(())
    }

    /// Rewrites `C` so that qubit `j` is decoupled (`C = C' ⊗_j I`) without
    /// changing `C|0ⁿ⟩` beyond a global phase.
    pub fn disentangle(&mut self, j: usize) -> Result<(), CliffordError> {
        let mut rows = BitMatrix::zeros(self.n, 0);
        self.disentangle_family(j, &mut rows)
    }

    /// Same as [`disentangle`](Self::disentangle) for the family `C|a r⟩`,
    /// `r` ranging over all bit vectors: on return `C|a r⟩` is unchanged for
    /// every `r` and `a` has zero row `j`.
    pub fn disentangle_family(&mut self, j: usize, a: &mut BitMatrix) -> Result<(), CliffordError> {
        let n = self.n;
        let q = self.z_pre[j].clone();
        let g = q.z().clone();
        if !q.x().is_zero() || q.sign() || !a.left_mul_vec(&g).is_zero() {
            return Err(CliffordError::NotDisentangled(j));
        }
        let t = if g.get(j) { j } else { g.first_one().expect("Z preimage is nontrivial") };
        if g.popcount() > 1 || t != j {
            // E: identity with row t replaced by g, so that E^{-T} g = e_t
            let mut e = BitMatrix::identity(n);
            *e.row_mut(t) = g.clone();
            let e_inv = e.invert()?;
            self.right_mult_css(&e_inv)?;
            *a = e.mul(a);
        }
        if t != j {
            self.right_mult_swap(t, j);
            a.swap_rows(t, j);
        }
        debug_assert_eq!(self.z_pre[j], PauliOp::z_on(n, j));
        let w = self.x_pre[j].clone();
        let mut rest = w.unsigned();
        rest.x_mut().set(j, false);
        rest.z_mut().set(j, false);
        let rest = rest.unsigned();
        if !rest.is_scalar() {
            self.right_mult_ctrl_pauli(&PauliOp::z_on(n, j), &rest)?;
        }
        if self.x_pre[j].z().get(j) {
            self.right_mult_exp(&PauliOp::z_on(n, j))?;
        }
        if self.x_pre[j].sign() {
            self.right_mult_pauli(&PauliOp::z_on(n, j))?;
        }
        debug_assert!(self.acts_trivially_on(j), "disentangle left {:?}", self.x_pre[j]);
        Ok(())
    }

    /// Columns of `Â` pushed through `C`: `C X^{Âv} C† ≃ X^{A_x v} Z^{A_z v}`
    /// (or the same with `Z^{Âv}`).
    pub fn batch_pauli_images(
        &self,
        a_hat: &BitMatrix,
        kind: PauliKind,
    ) -> Result<(BitMatrix, BitMatrix), CliffordError> {
        if a_hat.nrows() != self.n {
            return Err(CliffordError::SizeMismatch(self.n, a_hat.nrows()));
        }
        let mut ax = BitMatrix::zeros(self.n, 0);
        let mut az = BitMatrix::zeros(self.n, 0);
        for c in 0..a_hat.ncols() {
            let col = a_hat.col(c);
            let p = match kind {
                PauliKind::X => PauliOp::x_only(col),
                PauliKind::Z => PauliOp::z_only(col),
            };
            let img = self.image_unchecked(&p);
            ax.push_col(img.x());
            az.push_col(img.z());
        }
        Ok((ax, az))
    }

    /// The `(2n+2)×(2n+2)` tableau: row `k` holds `z|x|s` of `C Z_k C†`, row
    /// `n+k` the same for `C X_k C†`, and rows `2n, 2n+1` hold the phase bits
    /// of the preimages listed column-wise.
    pub fn tableau(&self) -> BitMatrix {
        let n = self.n;
        let mut m = BitMatrix::zeros(2 * n + 2, 2 * n + 2);
        for (r, p) in self.z_img.iter().chain(&self.x_img).enumerate() {
            let row = m.row_mut(r);
            row.put(0, p.z());
            row.put(n, p.x());
            row.set(2 * n, p.phase() & 1 == 1);
            row.set(2 * n + 1, p.phase() & 2 == 2);
        }
        for (c, p) in self.x_pre.iter().chain(&self.z_pre).enumerate() {
            m.set(2 * n, c, p.phase() & 1 == 1);
            m.set(2 * n + 1, c, p.phase() & 2 == 2);
        }
        m
    }

    /// Inverse of [`tableau`](Self::tableau); preimage phases are recomputed
    /// and cross-checked.
    pub fn from_tableau(m: &BitMatrix) -> Result<Self, CliffordError> {
        let (r, c) = m.shape();
        if r != c || r < 2 || r % 2 != 0 {
            return Err(CliffordError::Tableau(format!("shape {r}x{c}")));
        }
        let n = (r - 2) / 2;
        let read = |row: usize| {
            let v = m.row(row);
            let s = v.get(2 * n) as u8 + 2 * v.get(2 * n + 1) as u8;
            PauliOp::new(v.slice(n..2 * n), v.slice(0..n), s)
        };
        let z_img: Vec<_> = (0..n).map(read).collect();
        let x_img: Vec<_> = (n..2 * n).map(read).collect();
        for p in z_img.iter().chain(&x_img) {
            p.require_hermitian()?;
        }
        let c = Self::from_images(x_img, z_img)?;
        for (col, p) in c.x_pre.iter().chain(&c.z_pre).enumerate() {
            let s = m.get(2 * n, col) as u8 + 2 * m.get(2 * n + 1, col) as u8;
            if s != p.phase() {
                return Err(CliffordError::Tableau(format!("preimage phase in column {col}")));
            }
        }
        Ok(c)
    }

    /// Checks commutation relations and that images and preimages agree.
    pub fn check_invariants(&self) -> Result<(), CliffordError> {
        check_symplectic(self.n, &self.x_img, &self.z_img)?;
        for k in 0..self.n {
            let back_x = self.image_unchecked(&self.x_pre[k]);
            let back_z = self.image_unchecked(&self.z_pre[k]);
            if back_x != PauliOp::x_on(self.n, k) || back_z != PauliOp::z_on(self.n, k) {
                return Err(CliffordError::Tableau(format!("preimage {k} inconsistent")));
            }
        }
        Ok(())
    }

    /// Whether `C` is a Pauli unitary up to phase; returns that Pauli
    /// `X^a Z^b` (sign conventions: `a_k` is the sign of the `Z_k` image,
    /// `b_k` the sign of the `X_k` image).
    pub fn as_pauli(&self) -> Option<PauliOp> {
        let n = self.n;
        let mut x = BitVec::zeros(n);
        let mut z = BitVec::zeros(n);
        for k in 0..n {
            if self.z_img[k].unsigned() != PauliOp::z_on(n, k) || self.x_img[k].unsigned() != PauliOp::x_on(n, k) {
                return None;
            }
            x.set(k, self.z_img[k].sign());
            z.set(k, self.x_img[k].sign());
        }
        Some(PauliOp::hermitian(x, z, false))
    }

    /// Sequence of gates that rebuilds `C` by left multiplication starting
    /// from the identity.
    pub fn synthesize(&self) -> Vec<Gate> {
        let n = self.n;
        let mut work = self.clone();
        let mut steps: Vec<Gate> = Vec::new();
        let apply = |work: &mut CliffordOp, steps: &mut Vec<Gate>, g: Gate| {
            match &g {
                Gate::Exp(p) => work.left_mult_exp(p),
                Gate::Pauli(p) => work.left_mult_pauli(p),
            }
            .expect("synthesis steps are Hermitian and sized");
            steps.push(g);
        };
        // exp(i·P·Q) maps P to Q for anticommuting P, Q
        let mover = |from: &PauliOp, to: &PauliOp| Gate::Exp(from.mul(to).mult_phase(1));
        for j in 0..n {
            let xj = PauliOp::x_on(n, j);
            let zj = PauliOp::z_on(n, j);
            let px = work.x_img[j].clone();
            if px.unsigned() != xj {
                if px.anticommutes(&xj) {
                    apply(&mut work, &mut steps, mover(&px, &xj));
                } else {
                    let mid = if px.anticommutes(&zj) {
                        zj.clone()
                    } else {
                        let l = px.support().into_iter().find(|&l| l > j).expect("image is nontrivial");
                        let letter = if px.letter(l) == 'Z' { 'X' } else { 'Z' };
                        zj.mul(&PauliOp::single(n, l, letter))
                    };
                    apply(&mut work, &mut steps, mover(&px, &mid));
                    apply(&mut work, &mut steps, mover(&mid, &xj));
                }
            }
            let pz = work.z_img[j].clone();
            if pz.unsigned() != zj {
                if pz.letter(j) == 'Y' {
                    apply(&mut work, &mut steps, mover(&pz, &zj));
                } else {
                    let yj = PauliOp::single(n, j, 'Y');
                    apply(&mut work, &mut steps, mover(&pz, &yj));
                    apply(&mut work, &mut steps, mover(&yj, &zj));
                }
            }
            if work.x_img[j].sign() {
                apply(&mut work, &mut steps, Gate::Pauli(zj.clone()));
            }
            if work.z_img[j].sign() {
                apply(&mut work, &mut steps, Gate::Pauli(xj.clone()));
            }
        }
        debug_assert_eq!(work, CliffordOp::identity(n));
        steps
            .into_iter()
            .rev()
            .map(|g| match g {
                Gate::Exp(p) => Gate::Exp(p.negate()),
                pauli => pauli,
            })
            .collect()
    }

    pub fn from_gates(n: usize, gates: &[Gate]) -> Result<CliffordOp, CliffordError> {
        let mut c = CliffordOp::identity(n);
        for g in gates {
            match g {
                Gate::Exp(p) => c.left_mult_exp(p)?,
                Gate::Pauli(p) => c.left_mult_pauli(p)?,
            }
        }
        Ok(c)
    }

    /// Complex conjugate `C*`: every image and preimage conjugated entry-wise.
    pub fn complex_conjugate(&self) -> CliffordOp {
        let conj = |v: &[PauliOp]| v.iter().map(PauliOp::complex_conjugate).collect::<Vec<_>>();
        // Z_k and X_k are real, so C* Z_k C*† = (C Z_k C†)*
        CliffordOp {
            n: self.n,
            z_img: conj(&self.z_img),
            x_img: conj(&self.x_img),
            x_pre: conj(&self.x_pre),
            z_pre: conj(&self.z_pre),
        }
    }

    /// Tableau rows as strings, the interchange form.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<String> = self.tableau().rows().iter().map(|r| r.to_string()).collect();
        serde_json::json!({ "n": self.n, "rows": rows })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, CliffordError> {
        let bad = |why: &str| CliffordError::Tableau(why.to_string());
        let n = v.get("n").and_then(|n| n.as_u64()).ok_or_else(|| bad("missing n"))? as usize;
        let rows = v.get("rows").and_then(|r| r.as_array()).ok_or_else(|| bad("missing rows"))?;
        let rows: Vec<&str> =
            rows.iter().map(|r| r.as_str().ok_or_else(|| bad("row is not a string"))).collect::<Result<_, _>>()?;
        let m = BitMatrix::parse_rows(2 * n + 2, &rows)?;
        Self::from_tableau(&m)
    }
}

impl std::fmt::Debug for CliffordOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Clifford[{}](", self.n)?;
        for k in 0..self.n {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "X{}->{} Z{}->{}", k + 1, self.x_img[k], k + 1, self.z_img[k])?;
        }
        f.write_str(")")
    }
}

/// Exponents whose left product, applied first to last, equals `Λ(P,Q)` up to phase.
pub fn ctrl_pauli_exps(p: &PauliOp, q: &PauliOp) -> Result<[PauliOp; 3], CliffordError> {
    p.require_hermitian()?;
    q.require_hermitian()?;
    if p.anticommutes(q) {
        return Err(CliffordError::AnticommutingControl(p.to_string(), q.to_string()));
    }
    Ok([p.mul(q), q.negate(), p.negate()])
}

fn check_symplectic(n: usize, x: &[PauliOp], z: &[PauliOp]) -> Result<(), CliffordError> {
    if z.len() != n {
        return Err(CliffordError::SizeMismatch(n, z.len()));
    }
    for p in x.iter().chain(z) {
        if p.num_qubits() != n {
            return Err(CliffordError::SizeMismatch(n, p.num_qubits()));
        }
        p.require_hermitian()?;
    }
    for i in 0..n {
        for j in 0..n {
            let ok = !x[i].anticommutes(&x[j]) && !z[i].anticommutes(&z[j]) && x[i].anticommutes(&z[j]) == (i == j);
            if !ok {
                return Err(CliffordError::NotSymplectic(format!("pair ({}, {})", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

/// Preimages from images via the symplectic inverse, then signs fixed by
/// pushing each candidate forward.
fn invert_images(n: usize, x_img: &[PauliOp], z_img: &[PauliOp]) -> (Vec<PauliOp>, Vec<PauliOp>) {
    let forward = |p: &PauliOp| expand(p, z_img, x_img, n);
    let mut x_pre = Vec::with_capacity(n);
    let mut z_pre = Vec::with_capacity(n);
    for k in 0..n {
        for (target, out) in [(PauliOp::x_on(n, k), &mut x_pre), (PauliOp::z_on(n, k), &mut z_pre)] {
            // x(Q)_i = [target, C Z_i C†], z(Q)_i = [target, C X_i C†]
            let xb = BitVec::from_bools(&(0..n).map(|i| z_img[i].anticommutes(&target)).collect::<Vec<_>>());
            let zb = BitVec::from_bools(&(0..n).map(|i| x_img[i].anticommutes(&target)).collect::<Vec<_>>());
            let cand = PauliOp::hermitian(xb, zb, false);
            let pushed = forward(&cand);
            debug_assert_eq!(pushed.unsigned(), target);
            out.push(if pushed.sign() { cand.negate() } else { cand });
        }
    }
    (x_pre, z_pre)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_dense;

    fn p(t: &str, n: usize) -> PauliOp {
        parse_dense(t, n).unwrap()
    }

    fn hadamard() -> CliffordOp {
        CliffordOp::init_from_images(vec![(p("Z1", 1), p("X1", 1))]).unwrap()
    }

    #[test]
    fn hadamard_preimage() {
        let h = hadamard();
        assert_eq!(h.preimage(&p("X1", 1)).unwrap(), p("Z1", 1));
        assert_eq!(h.preimage(&p("Y1", 1)).unwrap(), p("-Y1", 1));
        assert_eq!(h.compose(&h).unwrap(), CliffordOp::identity(1));
    }

    #[test]
    fn hadamard_from_exps() {
        let mut c = CliffordOp::identity(1);
        for t in ["Z1", "X1", "Z1"] {
            c.left_mult_exp(&p(t, 1)).unwrap();
        }
        assert_eq!(c, hadamard());
        let mut four = CliffordOp::identity(2);
        for _ in 0..4 {
            four.left_mult_exp(&p("X1 Y2", 2)).unwrap();
        }
        assert_eq!(four, CliffordOp::identity(2));
    }

    #[test]
    fn ctrl_z_images() {
        let mut c = CliffordOp::identity(2);
        c.left_mult_ctrl_pauli(&p("Z1", 2), &p("Z2", 2)).unwrap();
        assert_eq!(c.x_image(0), &p("X1 Z2", 2));
        assert_eq!(c.x_image(1), &p("Z1 X2", 2));
        let mut d = CliffordOp::identity(2);
        d.left_mult_ctrl_pauli(&p("Z2", 2), &p("Z1", 2)).unwrap();
        assert_eq!(c, d);
        assert!(c.left_mult_ctrl_pauli(&p("X1", 2), &p("Z1", 2)).is_err());
    }

    #[test]
    fn css_matches_cnot() {
        let a = BitMatrix::from_strs(&["10", "11"]);
        let u = CliffordOp::css(&a).unwrap();
        // X1 -> X1 X2: control 1, target 2
        assert_eq!(u.x_image(0), &p("X1 X2", 2));
        assert_eq!(u.z_image(1), &p("Z1 Z2", 2));
        u.check_invariants().unwrap();
    }

    #[test]
    fn disentangle_cnot_state() {
        let mut c = CliffordOp::identity(2);
        c.left_mult_ctrl_pauli(&p("Z1", 2), &p("X2", 2)).unwrap();
        c.disentangle(0).unwrap();
        assert!(c.acts_trivially_on(0));
        let mut plus = CliffordOp::identity(1);
        plus.left_mult_exp(&p("Y1", 1)).unwrap();
        assert!(plus.disentangle(0).is_err());
    }

    #[test]
    fn tableau_round_trip() {
        let mut c = CliffordOp::identity(3);
        for t in ["X1 Y2", "-Z2 X3", "Y1 Y3", "X2"] {
            c.left_mult_exp(&p(t, 3)).unwrap();
        }
        let m = c.tableau();
        assert_eq!(CliffordOp::from_tableau(&m).unwrap(), c);
        assert_eq!(CliffordOp::from_json(&c.to_json()).unwrap(), c);
        let gates = c.synthesize();
        assert_eq!(CliffordOp::from_gates(3, &gates).unwrap(), c);
    }
}
