#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stabform::circuit::{StabCircuit, StabOp};
use stabform::clifford::CliffordOp;
use stabform::f2linalg::{BitMatrix, BitVec};
use stabform::pauli::{PauliOp, SparsePauli};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(rng: &mut impl Rng, n: usize) -> BitVec {
    BitVec::from_bools(&(0..n).map(|_| rng.gen::<bool>()).collect::<Vec<_>>())
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> BitMatrix {
    BitMatrix::from_rows(c, (0..r).map(|_| random_bits(rng, c)).collect())
}

pub fn random_invertible(rng: &mut impl Rng, n: usize) -> BitMatrix {
    loop {
        let m = random_matrix(rng, n, n);
        if m.rank() == n {
            return m;
        }
    }
}

/// Hermitian, not proportional to the identity when `n > 0`.
pub fn random_pauli(rng: &mut impl Rng, n: usize) -> PauliOp {
    loop {
        let p = PauliOp::hermitian(random_bits(rng, n), random_bits(rng, n), rng.gen());
        if n == 0 || !p.is_scalar() {
            return p;
        }
    }
}

/// Any Pauli unitary, phases included.
pub fn random_phased_pauli(rng: &mut impl Rng, n: usize) -> PauliOp {
    PauliOp::new(random_bits(rng, n), random_bits(rng, n), rng.gen_range(0..4))
}

/// Sparse Pauli of small weight on `n` qubits.
pub fn random_sparse(rng: &mut impl Rng, n: usize) -> SparsePauli {
    let mut p = PauliOp::identity(n);
    let weight = rng.gen_range(1..=n.min(3));
    for _ in 0..weight {
        let q = rng.gen_range(0..n);
        let l = ['X', 'Y', 'Z'][rng.gen_range(0..3)];
        if p.letter(q) == 'I' {
            p = p.mul(&PauliOp::single(n, q, l));
        }
    }
    let p = if rng.gen() { p.unsigned().negate() } else { p.unsigned() };
    p.to_sparse()
}

pub fn random_clifford(rng: &mut impl Rng, n: usize) -> CliffordOp {
    let mut c = CliffordOp::identity(n);
    if n == 0 {
        return c;
    }
    for _ in 0..(4 * n + 2) {
        c.left_mult_exp(&random_pauli(rng, n)).unwrap();
    }
    if rng.gen() {
        c.left_mult_pauli(&random_pauli(rng, n)).unwrap();
    }
    c
}

pub fn random_unitary_op(rng: &mut impl Rng, n: usize) -> StabOp {
    loop {
        let choice = rng.gen_range(0..10);
        let op = match choice {
            0 => StabOp::Pauli(random_sparse(rng, n)),
            1..=4 => StabOp::Exp(random_sparse(rng, n)),
            5 | 6 => {
                let p = random_sparse(rng, n);
                let q = random_sparse(rng, n);
                let (pd, qd) = (p.to_dense(n).unwrap(), q.to_dense(n).unwrap());
                if pd.anticommutes(&qd) {
                    continue;
                }
                StabOp::CtrlPauli(p, q)
            }
            7 if n >= 2 => {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                StabOp::Swap(a, b)
            }
            8 if n >= 2 => {
                let k = rng.gen_range(2..=n.min(3));
                let mut targets: Vec<usize> = (0..n).collect();
                for i in 0..k {
                    let j = rng.gen_range(i..n);
                    targets.swap(i, j);
                }
                targets.truncate(k);
                StabOp::Css { targets, matrix: random_invertible(rng, k) }
            }
            _ => StabOp::Exp(random_sparse(rng, n)),
        };
        return op;
    }
}

pub struct CircuitShape {
    pub n_in: usize,
    pub max_qubits: usize,
    pub n_ops: usize,
    pub min_measure: usize,
    pub min_rand: usize,
    /// Allow deallocation via measure + conditional X + dealloc.
    pub dealloc: bool,
}

/// Random valid circuit with at least the requested measurements and random bits.
pub fn random_circuit(rng: &mut impl Rng, shape: &CircuitShape) -> StabCircuit {
    let mut c = StabCircuit::new(shape.n_in);
    let mut n = shape.n_in;
    let mut n_o = 0;
    let (mut meas, mut rands) = (0, 0);
    let mut i = 0;
    while i < shape.n_ops || meas < shape.min_measure || rands < shape.min_rand {
        i += 1;
        let roll = rng.gen_range(0..20);
        let need_qubit = n == 0;
        if need_qubit || (roll == 0 && n < shape.max_qubits) {
            let pos = rng.gen_range(0..=n);
            c.ops.push(StabOp::Alloc(pos));
            n += 1;
            continue;
        }
        if (roll == 1 || rands < shape.min_rand) && (rands < shape.min_rand || rng.gen_bool(0.5)) && roll < 6 {
            c.ops.push(StabOp::Rand);
            n_o += 1;
            rands += 1;
            continue;
        }
        match roll {
            2..=4 => {
                let p = random_sparse(rng, n);
                c.ops.push(StabOp::Measure { pauli: p, hint: None });
                n_o += 1;
                meas += 1;
            }
            5 | 6 if n_o > 0 => {
                let outcomes: Vec<usize> = (0..n_o).filter(|_| rng.gen_bool(0.4)).collect();
                c.ops.push(StabOp::CondPauli { pauli: random_sparse(rng, n), outcomes, value: rng.gen() });
            }
            7 if shape.dealloc && n > 1 => {
                let q = rng.gen_range(0..n);
                let z = SparsePauli::from_letters(&[('Z', q)], 0).unwrap();
                let x = SparsePauli::from_letters(&[('X', q)], 0).unwrap();
                c.ops.push(StabOp::Measure { pauli: z, hint: None });
                c.ops.push(StabOp::CondPauli { pauli: x, outcomes: vec![n_o], value: true });
                c.ops.push(StabOp::Dealloc(q));
                n_o += 1;
                meas += 1;
                n -= 1;
            }
            _ => c.ops.push(random_unitary_op(rng, n)),
        }
    }
    c.validate().expect("generator emits valid circuits");
    c
}
