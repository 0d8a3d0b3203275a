//! Text in, JSON out. Shared by the Python functions and usable without Python.

use serde_json::{json, Value};
use stabform_core::circuit::{parse_circuit, EncodingSpec, StabCircuit};
use stabform_core::codedeform::{common_symplectic_basis, repetition_surgery, StabilizerGroup};
use stabform_core::f2linalg::BitVec;
use stabform_core::genform::general_form as gen_form;
use stabform_core::logical;
use stabform_core::sim::{simulate_complete, simulate_specific};
use stabform_core::verify::compare_circuits;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn circuit(text: &str) -> Result<StabCircuit, String> {
    let c = parse_circuit(text).map_err(err)?;
    c.validate().map_err(err)?;
    Ok(c)
}

fn code(text: &str) -> Result<EncodingSpec, String> {
    let v: Value = serde_json::from_str(text).map_err(err)?;
    EncodingSpec::from_json(&v).map_err(err)
}

pub fn simulate(text: &str, complete: bool, outcomes: Option<&str>) -> Result<Value, String> {
    let c = circuit(text)?;
    if complete {
        return Ok(simulate_complete(&c).map_err(err)?.to_json());
    }
    let v = match outcomes {
        Some(bits) => BitVec::parse(bits).map_err(err)?,
        None => BitVec::zeros(c.n_outcomes()),
    };
    if v.len() != c.n_outcomes() {
        return Err(format!("expected {} outcome bits, got {}", c.n_outcomes(), v.len()));
    }
    let r = simulate_specific(&c, &v).map_err(err)?;
    Ok(json!({
        "p": r.p.iter().map(|p| p.value()).collect::<Vec<_>>(),
        "Co": r.co.to_json(),
        "v": r.v.to_string(),
    }))
}

pub fn general_form(text: &str) -> Result<Value, String> {
    let (g, map) = gen_form(&circuit(text)?).map_err(err)?;
    Ok(g.to_json(&map))
}

pub fn compare(c1: &str, c2: &str) -> Result<Value, String> {
    Ok(compare_circuits(&circuit(c1)?, &circuit(c2)?).map_err(err)?.to_json())
}

pub fn logical_action(c: &str, in_code: &str, out_code: &str) -> Result<Value, String> {
    let r = logical::logical_action(&circuit(c)?, &code(in_code)?, &code(out_code)?).map_err(err)?;
    Ok(r.to_json())
}

pub fn verify_logical(c: &str, in_code: &str, out_code: &str, reference: &str) -> Result<Value, String> {
    let v =
        logical::verify_logical(&circuit(c)?, &code(in_code)?, &code(out_code)?, &circuit(reference)?).map_err(err)?;
    Ok(v.to_json())
}

pub fn symplectic_basis(s: &[String], m: &[String]) -> Result<Value, String> {
    let (s, m) = (s.join("\n"), m.join("\n"));
    let n = StabilizerGroup::qubits_in(&s).map_err(err)?.max(StabilizerGroup::qubits_in(&m).map_err(err)?);
    let gs = StabilizerGroup::parse(&s, n).map_err(err)?;
    let gm = StabilizerGroup::parse(&m, n).map_err(err)?;
    Ok(common_symplectic_basis(&gs, &gm).map_err(err)?.to_json())
}

pub fn surgery_demo(d: usize) -> Result<Value, String> {
    if d < 2 {
        return Err("d must be at least 2".into());
    }
    let inst = repetition_surgery(d).map_err(err)?;
    let v = logical::verify_logical(&inst.circuit, &inst.s_code, &inst.s_code, &inst.reference).map_err(err)?;
    Ok(json!({
        "d": d,
        "circuit": inst.circuit.to_string(),
        "s_code": inst.s_code.to_json(),
        "m_code": inst.m_code.to_json(),
        "reference": inst.reference.to_string(),
        "xx_outcome": inst.xx_outcome,
        "verdict": v.to_json(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BELL: &str = "inputs 0\nalloc 1\nalloc 2\nh 1\ncx 1 2\nmeasure Z1\nmeasure Z2\n";

    #[test]
    fn simulate_paths() {
        let full = simulate(BELL, true, None).unwrap();
        assert_eq!(full["M"], serde_json::json!(["1", "1"]));
        let one = simulate(BELL, false, Some("10")).unwrap();
        assert_eq!(one["v"], "11");
        assert!(simulate(BELL, false, Some("1")).is_err());
    }

    #[test]
    fn compare_and_general_form() {
        let v = compare("inputs 1\nmeasure X1\n", "inputs 1\nh 1\nmeasure Z1\nh 1\n").unwrap();
        assert_eq!(v["equivalent"], true);
        let v = compare("inputs 1\nmeasure X1\npauli Z1\n", "inputs 1\nmeasure X1\n").unwrap();
        assert_eq!(v["equivalent"], false);
        assert!(v["correction"].is_string());
        let g = general_form(BELL).unwrap();
        assert_eq!(g["k"], 0);
        assert!(general_form("inputs 1\nnope\n").unwrap_err().contains("line 2"));
    }

    #[test]
    fn codes_and_surgery() {
        let demo = surgery_demo(2).unwrap();
        assert_eq!(demo["verdict"]["logical"], true);
        let code = demo["s_code"].to_string();
        let c = demo["circuit"].as_str().unwrap();
        let r = demo["reference"].as_str().unwrap();
        assert_eq!(verify_logical(c, &code, &code, r).unwrap()["logical"], true);
        assert_eq!(logical_action(c, &code, &code).unwrap()["logical"], true);
        let b = symplectic_basis(&["Z1 Z2".into()], &["X1 X2".into()]).unwrap();
        let len = |k: &str| b[k].as_array().unwrap().len();
        assert_eq!([len("Z_delta"), len("Z_cap"), len("Z_S"), len("Z_M"), len("Z")], [0, 0, 1, 1, 0]);
        assert!(surgery_demo(1).is_err());
    }
}
