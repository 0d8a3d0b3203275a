mod common;

use common::{random_clifford, random_matrix, rng};
use rand::Rng;
use stabform::circuit::{parse_circuit, EncodingSpec, StabCircuit};
use stabform::codedeform::{
    analytic_logical_action, build_deformation_circuit, build_syndrome_circuit, common_symplectic_basis,
    repetition_surgery, two_group_general_form, CommonSymplecticBasis, StabilizerGroup,
};
use stabform::f2linalg::BitVec;
use stabform::logical::{logical_action, verify_logical, LogicalActionResult};
use stabform::oracle::circuits_equivalent;
use stabform::pauli::{parse_dense, PauliOp};
use stabform::verify::{compare_circuits, compare_general_forms, ComparisonVerdict};

fn group(n: usize, gens: &[&str]) -> StabilizerGroup {
    StabilizerGroup::new(n, gens.iter().map(|g| parse_dense(g, n).unwrap()).collect()).unwrap()
}

fn random_group(g: &mut impl Rng, n: usize, r: usize) -> StabilizerGroup {
    let c = random_clifford(g, n);
    StabilizerGroup::new(n, (0..r).map(|i| c.z_image(i).clone()).collect()).unwrap()
}

fn random_pair(g: &mut impl Rng, max_n: usize) -> (StabilizerGroup, StabilizerGroup) {
    let n = g.gen_range(1..=max_n);
    let (rs, rm) = (g.gen_range(0..=n), g.gen_range(0..=n));
    (random_group(g, n, rs), random_group(g, n, rm))
}

fn all_vectors(n: usize) -> impl Iterator<Item = BitVec> {
    (0..1u32 << n).map(move |b| BitVec::from_indices(n, (0..n).filter(|i| b >> i & 1 == 1)))
}

#[test]
fn single_qubit_bases() {
    let z = group(1, &["Z1"]);
    let b = common_symplectic_basis(&z, &z).unwrap();
    assert_eq!(b.sizes(), [0, 1, 0, 0, 0]);
    assert_eq!(b.x_cap[0].unsigned(), parse_dense("X1", 1).unwrap());

    let x = group(1, &["X1"]);
    let b = common_symplectic_basis(&z, &x).unwrap();
    assert_eq!(b.sizes(), [1, 0, 0, 0, 0]);
    assert_eq!(build_deformation_circuit(&b), parse_circuit("inputs 1\nmeasure X1\ncond Z1 if o1 == 1\n").unwrap());
    assert_eq!(build_syndrome_circuit(&b), parse_circuit("inputs 1\nmeasure Z1\n").unwrap());
}

#[test]
fn random_basis_postconditions() {
    let mut g = rng(5);
    for _ in 0..100 {
        let (s, m) = random_pair(&mut g, 8);
        let b = common_symplectic_basis(&s, &m).unwrap();
        b.check(&s, &m).unwrap();
        // |ZΔ| is the rank of the commutation pairing
        let comm = stabform::f2linalg::BitMatrix::from_rows(
            m.rank(),
            s.generators()
                .iter()
                .map(|p| BitVec::from_bools(&m.generators().iter().map(|q| p.anticommutes(q)).collect::<Vec<_>>()))
                .collect(),
        );
        assert_eq!(b.z_delta.len(), comm.rank());
        let cap = s.generators().iter().filter(|p| m.contains_unsigned(p)).count();
        assert!(b.z_cap.len() >= cap);
    }
}

#[test]
fn two_group_form_matches_circuit() {
    let mut g = rng(8);
    for _ in 0..40 {
        let (s, m) = random_pair(&mut g, 4);
        let b = common_symplectic_basis(&s, &m).unwrap();
        let c = build_syndrome_circuit(&b).then(&build_deformation_circuit(&b));
        let (gen, map) = two_group_general_form(&b).unwrap();
        let realized = gen.to_circuit();
        let v = compare_circuits(&c, &realized).unwrap();
        let ComparisonVerdict::Equivalent(corr) = &v else { panic!("{v:?}\n{c}") };
        for o in all_vectors(gen.n_o()) {
            assert!(corr.matched(&map.apply(&o), &o), "{c}");
        }
        assert!(circuits_equivalent(&c, &realized).unwrap());
    }
}

/// Output code with a random subgroup of `M · (S ∩ M⊥)` as stabilizers.
fn random_out_code(g: &mut impl Rng, b: &CommonSymplecticBasis) -> EncodingSpec {
    let target = b.deformed_group().unwrap();
    let r = target.rank();
    let keep = g.gen_range(0..=r);
    let sel = loop {
        let sel = random_matrix(g, keep, r);
        if sel.rank() == keep {
            break sel;
        }
    };
    let gens: Vec<PauliOp> = sel
        .rows()
        .iter()
        .map(|row| row.ones().fold(PauliOp::identity(b.n), |acc, i| acc.mul(&target.generators()[i])))
        .collect();
    StabilizerGroup::new(b.n, gens).unwrap().encoding().unwrap()
}

#[test]
fn analytic_action_matches_logical_action() {
    let mut g = rng(21);
    for _ in 0..30 {
        let (s, m) = random_pair(&mut g, 5);
        let b = common_symplectic_basis(&s, &m).unwrap();
        let in_code = s.encoding().unwrap();
        let out_code = random_out_code(&mut g, &b);
        let c = build_deformation_circuit(&b);
        let analytic = analytic_logical_action(&b, &in_code, &out_code).unwrap();
        let LogicalActionResult::Logical(exact) = logical_action(&c, &in_code, &out_code).unwrap() else {
            panic!("not logical\n{c}")
        };
        assert!(compare_general_forms(&analytic.gen, &exact.gen).unwrap().is_equivalent(), "{c}");
        let v = verify_logical(&c, &in_code, &out_code, &analytic.gen.to_circuit()).unwrap();
        let corr = v.correspondence().unwrap_or_else(|| panic!("{v:?}\n{c}"));
        for o in all_vectors(analytic.gen.n_o()) {
            assert!(corr.matched(&analytic.map.apply(&o), &o), "{c}");
        }
    }
}

#[test]
fn containment_precondition() {
    let s = group(2, &["Z1 Z2"]);
    let m = group(2, &["X1 X2"]);
    let b = common_symplectic_basis(&s, &m).unwrap();
    let in_code = s.encoding().unwrap();
    let bad = group(2, &["Z1"]).encoding().unwrap();
    let err = analytic_logical_action(&b, &in_code, &bad).unwrap_err();
    assert!(err.to_string().contains("Z1"), "{err}");
}

#[test]
fn surgery_basis_sizes() {
    for d in 2..=6 {
        let inst = repetition_surgery(d).unwrap();
        assert_eq!(inst.basis.sizes(), [d - 1, d - 1, 0, 1, 1]);
        let s = StabilizerGroup::from_code(&inst.s_code);
        let m = StabilizerGroup::from_code(&inst.m_code);
        assert_eq!((s.rank(), m.rank()), (2 * d - 2, 2 * d - 1));
        let b = common_symplectic_basis(&s, &m).unwrap();
        assert_eq!(b.sizes(), [d - 1, d - 1, 0, 1, 1]);
    }
}

#[test]
fn surgery_step_one_cliffords() {
    let inst = repetition_surgery(2).unwrap();
    let a = analytic_logical_action(&inst.basis, &inst.s_code, &inst.m_code).unwrap();
    let p = |t: &str, n: usize| parse_dense(t, n).unwrap();
    assert_eq!(a.gen.l.z_image(0), &p("X1 X2", 2));
    assert_eq!(a.gen.l.z_image(1), &p("Z1 Z2", 2));
    assert_eq!(a.gen.l.x_image(1), &p("X2", 2));
    assert_eq!(a.gen.r, stabform::clifford::CliffordOp::identity(1));
    // the same action from the exact computation
    let c = build_deformation_circuit(&inst.basis);
    let LogicalActionResult::Logical(exact) = logical_action(&c, &inst.s_code, &inst.m_code).unwrap() else { panic!() };
    assert!(compare_general_forms(&a.gen, &exact.gen).unwrap().is_equivalent());
}

#[test]
fn surgery_implements_xx_measurement() {
    for d in 2..=6 {
        let inst = repetition_surgery(d).unwrap();
        let v = verify_logical(&inst.circuit, &inst.s_code, &inst.s_code, &inst.reference).unwrap();
        let corr = v.correspondence().unwrap_or_else(|| panic!("d = {d}: {v:?}"));
        let (p, q) = corr.explicit_map().unwrap();
        assert_eq!(p.nrows(), 1);
        assert_eq!(p.row(0), &BitVec::unit(inst.circuit.n_outcomes(), inst.xx_outcome), "d = {d}");
        assert!(q.is_zero());
    }
}

#[test]
fn surgery_oracle_d2() {
    let inst = repetition_surgery(2).unwrap();
    let enc = |code: &EncodingSpec| {
        let mut c = StabCircuit::new(code.k);
        for j in 0..code.n - code.k {
            c.ops.push(stabform::circuit::StabOp::Alloc(j));
        }
        c.push_clifford(&code.c, &(0..code.n).collect::<Vec<_>>());
        c
    };
    let physical = enc(&inst.s_code).then(&inst.circuit);
    let logical = inst.reference.then(&enc(&inst.s_code));
    assert!(circuits_equivalent(&physical, &logical).unwrap());
}
