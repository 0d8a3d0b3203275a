//! Bit-packed vectors and matrices over F2 with the exact elimination routines
//! the rest of the crate is built on.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix does not have full {0} rank")]
    RankDeficient(&'static str),
    #[error("bad bit string {0:?}")]
    Parse(String),
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over F2 packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in ones {
            v.set(i, true);
        }
        v
    }

    /// Parses a string over `{0,1}`; the first character is bit 0.
    pub fn parse(s: &str) -> Result<Self, LinalgError> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(LinalgError::Parse(s.to_string())),
            }
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// XORs a possibly shorter vector into the leading positions.
    pub fn xor_prefix(&mut self, other: &BitVec) {
        assert!(other.len <= self.len, "prefix longer than target");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Zero-extends or truncates to `len` bits.
    pub fn resized(&self, len: usize) -> BitVec {
        let mut out = BitVec::zeros(len);
        let keep = words_for(len.min(self.len));
        out.words[..keep].copy_from_slice(&self.words[..keep]);
        if len < self.len && !len.is_multiple_of(WORD) {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << (len % WORD)) - 1;
            }
        }
        out
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len);
        BitVec { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where both vectors are one.
    pub fn and_popcount(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len, "inner product of vectors with different lengths");
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Inner product over F2.
    pub fn dot(&self, other: &BitVec) -> bool {
        self.and_popcount(other) % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.first_one_from(0)
    }

    pub fn first_one_from(&self, start: usize) -> Option<usize> {
        if start >= self.len {
            return None;
        }
        let mut w = start / WORD;
        let mut word = self.words[w] & (!0u64 << (start % WORD));
        loop {
            if word != 0 {
                return Some(w * WORD + word.trailing_zeros() as usize);
            }
            w += 1;
            if w == self.words.len() {
                return None;
            }
            word = self.words[w];
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + t)
            })
        })
    }

    pub fn slice(&self, range: Range<usize>) -> BitVec {
        assert!(range.end <= self.len);
        let mut out = BitVec::zeros(range.len());
        for i in self.ones().filter(|i| range.contains(i)) {
            out.set(i - range.start, true);
        }
        out
    }

    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len + i, true);
        }
        out
    }

    /// Copies `src` into positions `offset..offset + src.len()`, overwriting.
    pub fn put(&mut self, offset: usize, src: &BitVec) {
        for i in 0..src.len {
            self.set(offset + i, src.get(i));
        }
    }

    pub fn insert(&mut self, pos: usize, value: bool) {
        let mut bits: Vec<bool> = self.to_bools();
        bits.insert(pos, value);
        *self = BitVec::from_bools(&bits);
    }

    pub fn remove(&mut self, pos: usize) -> bool {
        let mut bits: Vec<bool> = self.to_bools();
        let b = bits.remove(pos);
        *self = BitVec::from_bools(&bits);
        b
    }

    pub fn push(&mut self, value: bool) {
        self.len += 1;
        if self.words.len() < words_for(self.len) {
            self.words.push(0);
        }
        self.set(self.len - 1, value);
    }

    /// Picks the entries at `idx`, in that order.
    pub fn gather(&self, idx: &[usize]) -> BitVec {
        BitVec::from_bools(&idx.iter().map(|&i| self.get(i)).collect::<Vec<_>>())
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Row-major matrix over F2; every row is a [`BitVec`] of length `cols`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

/// `A = B·R` with `B` invertible and `R` in reduced row echelon form.
#[derive(Clone, Debug)]
pub struct RrefFactorization {
    pub b: BitMatrix,
    pub b_inv: BitMatrix,
    pub r: BitMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix { cols, rows: vec![BitVec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds from rows; `cols` is needed so that 0-row matrices keep their width.
    pub fn from_rows(cols: usize, rows: Vec<BitVec>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols, "row length {} differs from {cols}", r.len());
        }
        BitMatrix { cols, rows }
    }

    pub fn from_cols(rows: usize, cols: &[BitVec]) -> Self {
        BitMatrix::from_rows(rows, cols.to_vec()).transpose()
    }

    pub fn parse_rows<S: AsRef<str>>(cols: usize, rows: &[S]) -> Result<Self, LinalgError> {
        let rows = rows
            .iter()
            .map(|s| {
                let v = BitVec::parse(s.as_ref())?;
                if v.len() != cols {
                    return Err(LinalgError::Dimension(format!(
                        "row {:?} has length {}, expected {cols}",
                        s.as_ref(),
                        v.len()
                    )));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BitMatrix { cols, rows })
    }

    /// Convenience for literals in tests: `&["101", "011"]`.
    pub fn from_strs(rows: &[&str]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::parse_rows(cols, rows).expect("valid bit-matrix literal")
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.rows[r].set(c, v)
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.rows[r]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut BitVec {
        &mut self.rows[r]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<BitVec> {
        self.rows
    }

    pub fn col(&self, c: usize) -> BitVec {
        BitVec::from_bools(&self.rows.iter().map(|r| r.get(c)).collect::<Vec<_>>())
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn insert_row(&mut self, at: usize, row: BitVec) {
        assert_eq!(row.len(), self.cols);
        self.rows.insert(at, row);
    }

    pub fn remove_row(&mut self, at: usize) -> BitVec {
        self.rows.remove(at)
    }

    pub fn push_col(&mut self, col: &BitVec) {
        assert_eq!(col.len(), self.nrows());
        self.cols += 1;
        for (i, r) in self.rows.iter_mut().enumerate() {
            r.push(col.get(i));
        }
    }

    pub fn insert_col(&mut self, at: usize, col: &BitVec) {
        assert_eq!(col.len(), self.nrows());
        self.cols += 1;
        for (i, r) in self.rows.iter_mut().enumerate() {
            r.insert(at, col.get(i));
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.rows.swap(a, b);
    }

    /// `row[dst] ^= row[src]`.
    pub fn add_row(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let (s, d) = if src < dst {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&lo[src], &mut hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&hi[0], &mut lo[dst])
        };
        d.xor_assign(s);
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVec::is_zero)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.nrows());
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.ones() {
                t.rows[j].set(i, true);
            }
        }
        t
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.nrows(), "product of {:?} and {:?} matrices", self.shape(), other.shape());
        let mut out = BitMatrix::zeros(self.nrows(), other.cols);
        for (i, r) in self.rows.iter().enumerate() {
            for k in r.ones() {
                out.rows[i].xor_assign(&other.rows[k]);
            }
        }
        out
    }

    /// `A·v`, computed as the XOR of the columns of `A` selected by `v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(self.cols, v.len(), "matrix-vector product dimension mismatch");
        BitVec::from_bools(&self.rows.iter().map(|r| r.dot(v)).collect::<Vec<_>>())
    }

    /// `vᵀ·A`.
    pub fn left_mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(self.nrows(), v.len());
        let mut out = BitVec::zeros(self.cols);
        for i in v.ones() {
            out.xor_assign(&self.rows[i]);
        }
        out
    }

    pub fn add(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(&other.rows) {
            a.xor_assign(b);
        }
        out
    }

    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols, "vstack width mismatch");
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        BitMatrix { cols: self.cols, rows }
    }

    pub fn vstack_all(cols: usize, parts: &[&BitMatrix]) -> BitMatrix {
        let mut out = BitMatrix::zeros(0, cols);
        for p in parts {
            out = out.vstack(p);
        }
        out
    }

    pub fn hstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.nrows(), other.nrows(), "hstack height mismatch");
        BitMatrix {
            cols: self.cols + other.cols,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a.concat(b)).collect(),
        }
    }

    pub fn direct_sum(&self, other: &BitMatrix) -> BitMatrix {
        let top = self.hstack(&BitMatrix::zeros(self.nrows(), other.cols));
        let bottom = BitMatrix::zeros(other.nrows(), self.cols).hstack(other);
        top.vstack(&bottom)
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> BitMatrix {
        BitMatrix { cols: cols.len(), rows: self.rows[rows].iter().map(|r| r.slice(cols.clone())).collect() }
    }

    pub fn row_range(&self, rows: Range<usize>) -> BitMatrix {
        BitMatrix { cols: self.cols, rows: self.rows[rows].to_vec() }
    }

    pub fn col_range(&self, cols: Range<usize>) -> BitMatrix {
        self.submatrix(0..self.nrows(), cols)
    }

    pub fn select_rows(&self, idx: &[usize]) -> BitMatrix {
        BitMatrix { cols: self.cols, rows: idx.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn select_cols(&self, idx: &[usize]) -> BitMatrix {
        BitMatrix { cols: idx.len(), rows: self.rows.iter().map(|r| r.gather(idx)).collect() }
    }

    pub fn rank(&self) -> usize {
        let mut work = self.rows.clone();
        echelonize(&mut work, self.cols, None).len()
    }

    pub fn rref_factor(&self) -> RrefFactorization {
        let m = self.nrows();
        let mut r = self.rows.clone();
        // E tracks the applied row operations (E·A = R); Bᵀ tracks E⁻¹ transposed.
        let mut e = BitMatrix::identity(m);
        let mut bt = BitMatrix::identity(m);
        let pivots = echelonize_reduced(&mut r, self.cols, &mut e, &mut bt);
        let rank = pivots.len();
        RrefFactorization { b: bt.transpose(), b_inv: e, r: BitMatrix { cols: self.cols, rows: r }, rank, pivots }
    }

    /// Rows span `{v : A·v = 0}`; the basis is in reduced row echelon form.
    pub fn kernel_basis(&self) -> BitMatrix {
        let f = self.rref_factor();
        let mut is_pivot = vec![false; self.cols];
        for &p in &f.pivots {
            is_pivot[p] = true;
        }
        let mut out = BitMatrix::zeros(0, self.cols);
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitVec::unit(self.cols, free);
            for (i, &p) in f.pivots.iter().enumerate() {
                if f.r.get(i, free) {
                    v.set(p, true);
                }
            }
            out.push_row(v);
        }
        // free-variable vectors are already independent; reduce for a canonical basis
        let f2 = out.rref_factor();
        f2.r.row_range(0..f2.rank)
    }

    /// Appends weight-one rows on the non-pivot columns of `A` so that the
    /// stacked matrix has rank `cols`. Square and invertible exactly when `A`
    /// has full row rank.
    pub fn full_rank_completion(&self) -> Result<BitMatrix, LinalgError> {
        if self.nrows() > self.cols {
            return Err(LinalgError::Dimension(format!("cannot complete a {}x{} matrix", self.nrows(), self.cols)));
        }
        Ok(self.vstack(&self.completion_rows()))
    }

    /// Just the rows that [`full_rank_completion`](Self::full_rank_completion) appends.
    pub fn completion_rows(&self) -> BitMatrix {
        let f = self.rref_factor();
        let mut is_pivot = vec![false; self.cols];
        for &p in &f.pivots {
            is_pivot[p] = true;
        }
        let rows = (0..self.cols).filter(|&c| !is_pivot[c]).map(|c| BitVec::unit(self.cols, c)).collect();
        BitMatrix { cols: self.cols, rows }
    }

    pub fn invert(&self) -> Result<BitMatrix, LinalgError> {
        if self.nrows() != self.cols {
            return Err(LinalgError::Dimension(format!("cannot invert {:?}", self.shape())));
        }
        let f = self.rref_factor();
        if f.rank < self.cols {
            return Err(LinalgError::Singular);
        }
        Ok(f.b_inv)
    }

    /// `X` with `X·A = I` for `A` of full column rank.
    pub fn left_inverse(&self) -> Result<BitMatrix, LinalgError> {
        let f = self.rref_factor();
        if f.rank < self.cols {
            return Err(LinalgError::RankDeficient("column"));
        }
        Ok(f.b_inv.row_range(0..self.cols))
    }

    /// `Y` with `A·Y = I` for `A` of full row rank.
    pub fn right_inverse(&self) -> Result<BitMatrix, LinalgError> {
        let f = self.rref_factor();
        if f.rank < self.nrows() {
            return Err(LinalgError::RankDeficient("row"));
        }
        let mut y = BitMatrix::zeros(self.cols, self.nrows());
        for (i, &p) in f.pivots.iter().enumerate() {
            y.rows[p] = f.b_inv.rows[i].clone();
        }
        Ok(y)
    }

    /// Some `x` with `A·x = b`, if one exists.
    pub fn solve(&self, b: &BitVec) -> Option<BitVec> {
        assert_eq!(b.len(), self.nrows());
        let f = self.rref_factor();
        let c = f.b_inv.mul_vec(b);
        if c.ones().any(|i| i >= f.rank) {
            return None;
        }
        let mut x = BitVec::zeros(self.cols);
        for (i, &p) in f.pivots.iter().enumerate() {
            x.set(p, c.get(i));
        }
        Some(x)
    }

    /// Some `X` with `A·X = B`, if one exists.
    pub fn solve_matrix(&self, b: &BitMatrix) -> Option<BitMatrix> {
        assert_eq!(b.nrows(), self.nrows());
        let f = self.rref_factor();
        let c = f.b_inv.mul(b);
        if c.rows[f.rank..].iter().any(|r| !r.is_zero()) {
            return None;
        }
        let mut x = BitMatrix::zeros(self.cols, b.cols);
        for (i, &p) in f.pivots.iter().enumerate() {
            x.rows[p] = c.rows[i].clone();
        }
        Some(x)
    }

    /// Whether every column of `other` lies in the column span of `self`.
    pub fn col_span_contains(&self, other: &BitMatrix) -> bool {
        self.solve_matrix(other).is_some()
    }

    /// Lexicographically smallest set of row indices whose rows are independent
    /// and span the row space.
    pub fn row_rank_profile(&self) -> Vec<usize> {
        let mut basis: Vec<(usize, BitVec)> = Vec::new();
        let mut profile = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let mut v = row.clone();
            for (p, b) in &basis {
                if v.get(*p) {
                    v.xor_assign(b);
                }
            }
            if let Some(p) = v.first_one() {
                for (_, b) in basis.iter_mut() {
                    if b.get(p) {
                        b.xor_assign(&v);
                    }
                }
                basis.push((p, v));
                profile.push(i);
            }
        }
        profile
    }

    pub fn is_row_echelon(&self) -> bool {
        self.echelon_check(false)
    }

    pub fn is_rref(&self) -> bool {
        self.echelon_check(true)
    }

    fn echelon_check(&self, reduced: bool) -> bool {
        let mut last: Option<usize> = None;
        let mut seen_zero = false;
        let mut pivots = Vec::new();
        for r in &self.rows {
            match r.first_one() {
                None => seen_zero = true,
                Some(p) => {
                    if seen_zero || last.is_some_and(|l| p <= l) {
                        return false;
                    }
                    last = Some(p);
                    pivots.push(p);
                }
            }
        }
        if reduced {
            for (i, &p) in pivots.iter().enumerate() {
                if self.rows.iter().enumerate().any(|(j, r)| j != i && r.get(p)) {
                    return false;
                }
            }
        }
        true
    }

    /// Checks the split echelon structure: full column rank, the transposed left
    /// `n_r` columns in reduced row echelon form, the transposed right `n_m`
    /// columns in row echelon form (reduced if asked), and zero right part on
    /// the pivot rows of the left part.
    pub fn is_split_echelon(&self, n_r: usize, n_m: usize, reduced: bool) -> Result<bool, LinalgError> {
        if n_r + n_m != self.cols {
            return Err(LinalgError::Dimension(format!("split ({n_r},{n_m}) of a matrix with {} columns", self.cols)));
        }
        if self.rank() != self.cols {
            return Ok(false);
        }
        let left_t = self.col_range(0..n_r).transpose();
        let right_t = self.col_range(n_r..self.cols).transpose();
        if !left_t.is_rref() {
            return Ok(false);
        }
        let right_ok = if reduced { right_t.is_rref() } else { right_t.is_row_echelon() };
        if !right_ok {
            return Ok(false);
        }
        for lt in left_t.rows() {
            if let Some(p) = lt.first_one() {
                if right_t.rows().iter().any(|rt| rt.get(p)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// For `A` (m×n) of full row rank, returns `(R, F)` with `R` invertible in
    /// `(n-m, m)`-split reduced echelon form and `A·R = (0 | F)`, `F` invertible.
    pub fn block_reshape(&self) -> Result<(BitMatrix, BitMatrix), LinalgError> {
        let (m, n) = self.shape();
        if self.rank() != m {
            return Err(LinalgError::RankDeficient("row"));
        }
        let kernel = self.kernel_basis();
        let mut is_pivot = vec![false; n];
        for row in kernel.rows() {
            is_pivot[row.first_one().expect("kernel rows are nonzero")] = true;
        }
        let mut r = kernel.transpose();
        for c in (0..n).filter(|&c| !is_pivot[c]) {
            r.push_col(&BitVec::unit(n, c));
        }
        let f = self.mul(&r).col_range(n - m..n);
        debug_assert!(self.mul(&r).col_range(0..n - m).is_zero());
        debug_assert!(r.is_split_echelon(n - m, m, true).unwrap_or(false));
        Ok((r, f))
    }
}

/// Forward elimination to row echelon form; returns pivot columns.
fn echelonize(rows: &mut [BitVec], cols: usize, _track: Option<()>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(c)) else { continue };
        rows.swap(rank, p);
        let (head, tail) = rows.split_at_mut(rank + 1);
        for r in tail.iter_mut() {
            if r.get(c) {
                r.xor_assign(&head[rank]);
            }
        }
        pivots.push(c);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    pivots
}

/// Gauss-Jordan elimination recording `E` (row-op product) and `(E⁻¹)ᵀ`.
fn echelonize_reduced(rows: &mut [BitVec], cols: usize, e: &mut BitMatrix, bt: &mut BitMatrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(c)) else { continue };
        if p != rank {
            rows.swap(rank, p);
            e.swap_rows(rank, p);
            bt.swap_rows(rank, p);
        }
        for i in 0..rows.len() {
            if i != rank && rows[i].get(c) {
                let pivot_row = rows[rank].clone();
                rows[i].xor_assign(&pivot_row);
                // row_i += row_rank: E gets the same op, E⁻¹ gets column_rank += column_i
                e.add_row(rank, i);
                bt.add_row(i, rank);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    pivots
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix {}x{} [", self.nrows(), self.cols)?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("]")
    }
}

/// Free-function forms used by callers that prefer them.
pub fn rref_factor(a: &BitMatrix) -> RrefFactorization {
    a.rref_factor()
}

pub fn kernel_basis(a: &BitMatrix) -> BitMatrix {
    a.kernel_basis()
}

pub fn row_rank_profile(a: &BitMatrix) -> Vec<usize> {
    a.row_rank_profile()
}

pub fn mat_mul(a: &BitMatrix, b: &BitMatrix) -> BitMatrix {
    a.mul(b)
}

pub fn mat_vec(a: &BitMatrix, v: &BitVec) -> BitVec {
    a.mul_vec(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_small_cases() {
        let f = BitMatrix::identity(3).rref_factor();
        assert_eq!(f.r, BitMatrix::identity(3));
        assert_eq!(f.b, BitMatrix::identity(3));
        assert_eq!(f.rank, 3);

        let f = BitMatrix::zeros(2, 3).rref_factor();
        assert_eq!(f.rank, 0);
        assert_eq!(f.b, BitMatrix::identity(2));

        let a = BitMatrix::from_strs(&["11", "10"]);
        let f = a.rref_factor();
        assert_eq!(f.r, BitMatrix::identity(2));
        assert_eq!(f.b, a);
        assert_eq!(f.b.mul(&f.b_inv), BitMatrix::identity(2));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(BitMatrix::identity(2).kernel_basis().nrows(), 0);
        assert_eq!(BitMatrix::from_strs(&["11"]).kernel_basis(), BitMatrix::from_strs(&["11"]));
        let k = BitMatrix::from_strs(&["101", "011"]).kernel_basis();
        assert_eq!(k, BitMatrix::from_strs(&["111"]));
    }

    #[test]
    fn completion_examples() {
        let c = BitMatrix::from_strs(&["100"]).full_rank_completion().unwrap();
        assert_eq!(c, BitMatrix::from_strs(&["100", "010", "001"]));
        let c = BitMatrix::zeros(0, 2).full_rank_completion().unwrap();
        assert_eq!(c, BitMatrix::identity(2));
        let c = BitMatrix::from_strs(&["110", "001"]).full_rank_completion().unwrap();
        assert_eq!(c.nrows(), 3);
        assert!(c.invert().is_ok());
    }

    #[test]
    fn inverses() {
        assert_eq!(BitMatrix::identity(4).invert().unwrap(), BitMatrix::identity(4));
        let p = BitMatrix::from_strs(&["01", "10"]);
        assert_eq!(p.invert().unwrap(), p);
        let col = BitMatrix::from_strs(&["1", "1"]);
        let li = col.left_inverse().unwrap();
        assert_eq!(li, BitMatrix::from_strs(&["10"]));
        assert_eq!(li.mul(&col), BitMatrix::identity(1));
        assert!(BitMatrix::from_strs(&["11", "11"]).invert().is_err());
    }

    #[test]
    fn block_reshape_examples() {
        let (r, f) = BitMatrix::identity(2).block_reshape().unwrap();
        assert_eq!(r, BitMatrix::identity(2));
        assert_eq!(f, BitMatrix::identity(2));

        let a = BitMatrix::from_strs(&["01"]);
        let (r, f) = a.block_reshape().unwrap();
        assert_eq!(a.mul(&r), BitMatrix::from_strs(&["01"]));
        assert_eq!(f, BitMatrix::identity(1));

        let a = BitMatrix::from_strs(&["110", "011"]);
        let (r, f) = a.block_reshape().unwrap();
        assert!(a.mul(&r).col_range(0..1).is_zero());
        assert!(f.invert().is_ok());
        assert!(r.is_split_echelon(1, 2, true).unwrap());
    }

    #[test]
    fn split_echelon_examples() {
        assert!(BitMatrix::identity(3).is_split_echelon(3, 0, false).unwrap());
        let m = BitMatrix::from_strs(&["10", "01", "11"]);
        assert!(m.is_split_echelon(2, 0, false).unwrap());
        assert_eq!(m.row_rank_profile(), vec![0, 1]);
        // left pivot row 0 carries a nonzero right part
        let bad = BitMatrix::from_strs(&["11", "01"]);
        assert!(!bad.is_split_echelon(1, 1, false).unwrap());
        assert!(bad.is_split_echelon(1, 2, false).is_err());
    }

    #[test]
    fn products() {
        let a = BitMatrix::from_strs(&["10", "11"]);
        let b = BitMatrix::from_strs(&["01", "11"]);
        assert_eq!(a.mul(&b), BitMatrix::from_strs(&["01", "10"]));
        assert_eq!(BitMatrix::identity(2).mul(&a), a);
        assert!(a.mul(&BitMatrix::zeros(2, 2)).is_zero());
        assert_eq!(a.mul_vec(&BitVec::parse("11").unwrap()), BitVec::parse("10").unwrap());
    }

    #[test]
    fn bitvec_basics() {
        let mut v = BitVec::zeros(130);
        v.set(3, true);
        v.set(129, true);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![3, 129]);
        assert_eq!(v.first_one_from(4), Some(129));
        assert_eq!(v.popcount(), 2);
        v.push(true);
        assert_eq!(v.len(), 131);
        assert_eq!(v.slice(128..131).to_string(), "011");
    }
}
