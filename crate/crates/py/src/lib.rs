//! Python bindings. Every function takes circuits as `.stab` text and codes as
//! JSON text, and returns plain dicts.

pub mod api;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py<'py>(py: Python<'py>, v: Result<serde_json::Value, String>) -> PyResult<Bound<'py, PyAny>> {
    let v = v.map_err(PyValueError::new_err)?;
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// All outcome paths when `complete`, otherwise the path picked by `outcomes` (a bit string).
#[pyfunction]
#[pyo3(signature = (circuit, complete = true, outcomes = None))]
fn simulate<'py>(
    py: Python<'py>,
    circuit: &str,
    complete: bool,
    outcomes: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::simulate(circuit, complete, outcomes))
}

#[pyfunction]
fn general_form<'py>(py: Python<'py>, circuit: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::general_form(circuit))
}

#[pyfunction]
fn compare<'py>(py: Python<'py>, c1: &str, c2: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::compare(c1, c2))
}

#[pyfunction]
fn logical_action<'py>(py: Python<'py>, circuit: &str, in_code: &str, out_code: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::logical_action(circuit, in_code, out_code))
}

#[pyfunction]
fn verify_logical<'py>(
    py: Python<'py>,
    circuit: &str,
    in_code: &str,
    out_code: &str,
    reference: &str,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::verify_logical(circuit, in_code, out_code, reference))
}

/// Groups are lists of Pauli literals such as `"Z1 Z2"`.
#[pyfunction]
fn symplectic_basis<'py>(py: Python<'py>, s: Vec<String>, m: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::symplectic_basis(&s, &m))
}

#[pyfunction]
fn surgery_demo<'py>(py: Python<'py>, d: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::surgery_demo(d))
}

#[pymodule]
fn stabform(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(general_form, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(logical_action, m)?)?;
    m.add_function(wrap_pyfunction!(verify_logical, m)?)?;
    m.add_function(wrap_pyfunction!(symplectic_basis, m)?)?;
    m.add_function(wrap_pyfunction!(surgery_demo, m)?)?;
    Ok(())
}
