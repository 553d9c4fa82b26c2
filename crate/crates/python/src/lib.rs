//! Python bindings: codecs, topology compilation, and scenario runs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use irsim::codecs::{EmotetKeyPair, EmotetPrivateKey, EmotetPublicKey};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// RC4 keystream XOR; involutive.
#[pyfunction]
fn rc4<'py>(py: Python<'py>, key: &[u8], data: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    let out = irsim::codecs::rc4(key, data).map_err(value_err)?;
    Ok(PyBytes::new(py, &out))
}

/// Chained-XOR plus RC4 sealing of a payload.
#[pyfunction]
fn zeus_seal<'py>(py: Python<'py>, key: &[u8], payload: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    let out = irsim::codecs::zeus_seal(key, payload).map_err(value_err)?;
    Ok(PyBytes::new(py, &out))
}

#[pyfunction]
fn zeus_open<'py>(py: Python<'py>, key: &[u8], blob: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    let out = irsim::codecs::zeus_open(key, blob).map_err(value_err)?;
    Ok(PyBytes::new(py, &out))
}

/// AES-128-ECB with space padding, Base64 encoded.
#[pyfunction]
fn zitmo_encrypt(key16: &str, plaintext: &str) -> PyResult<String> {
    irsim::codecs::zitmo_encrypt(key16, plaintext).map_err(value_err)
}

#[pyfunction]
fn zitmo_decrypt(key16: &str, b64: &str) -> PyResult<String> {
    irsim::codecs::zitmo_decrypt(key16, b64).map_err(value_err)
}

/// Renders a message given as JSON into its wire text.
#[pyfunction]
fn zitmo_format(message_json: &str) -> PyResult<String> {
    let msg: irsim::codecs::ZitMoMessage =
        serde_json::from_str(message_json).map_err(value_err)?;
    Ok(irsim::codecs::zitmo_format(&msg))
}

/// Parses wire text into a JSON message.
#[pyfunction]
fn zitmo_parse(text: &str) -> PyResult<String> {
    let msg = irsim::codecs::zitmo_parse(text).map_err(value_err)?;
    serde_json::to_string(&msg).map_err(value_err)
}

#[pyfunction]
fn crc32_hex(data: &[u8]) -> String {
    irsim::codecs::crc32_hex(data)
}

/// Deterministic RSA keypair; returns (public_json, private_json).
#[pyfunction]
fn emotet_keygen(bits: usize, seed: u64) -> PyResult<(String, String)> {
    let keys = EmotetKeyPair::generate(bits, seed).map_err(value_err)?;
    Ok((keys.public.to_json(), keys.private.to_json()))
}

#[pyfunction]
fn emotet_seal(public_json: &str, session_key: &[u8], payload: &[u8]) -> PyResult<String> {
    let key = EmotetPublicKey::from_json(public_json).map_err(value_err)?;
    irsim::codecs::emotet_seal(&key, session_key, payload).map_err(value_err)
}

#[pyfunction]
fn emotet_open<'py>(
    py: Python<'py>,
    private_json: &str,
    cookie: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let key = EmotetPrivateKey::from_json(private_json).map_err(value_err)?;
    let out = irsim::codecs::emotet_open(&key, cookie).map_err(value_err)?;
    Ok(PyBytes::new(py, &out))
}

/// Compiles a topology file into its Datalog tuple text.
#[pyfunction]
fn topology_tuples(topology_path: &str) -> PyResult<String> {
    let text = std::fs::read_to_string(topology_path).map_err(value_err)?;
    let model = irsim::netmodel::load_topology(&text).map_err(value_err)?;
    Ok(irsim::netmodel::to_datalog(&model).text())
}

/// Compiles a topology into the attack graph and returns GraphViz DOT.
#[pyfunction]
#[pyo3(signature = (topology_path, rules_path=None))]
fn graph_dot(topology_path: &str, rules_path: Option<&str>) -> PyResult<String> {
    let topology = std::fs::read_to_string(topology_path).map_err(value_err)?;
    let rules = match rules_path {
        Some(path) => Some(std::fs::read_to_string(path).map_err(value_err)?),
        None => None,
    };
    let compiled =
        irsim::harness::compile_model(&topology, rules.as_deref()).map_err(value_err)?;
    Ok(irsim::datalog::export_dot(&compiled.bag.lag))
}

/// Runs a scenario file and returns the full report as JSON.
#[pyfunction]
fn run_scenario(scenario_path: &str) -> PyResult<String> {
    let scenario =
        irsim::harness::load_scenario(std::path::Path::new(scenario_path)).map_err(value_err)?;
    let report = irsim::harness::run_scenario(&scenario).map_err(value_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn irsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(rc4, m)?)?;
    m.add_function(wrap_pyfunction!(zeus_seal, m)?)?;
    m.add_function(wrap_pyfunction!(zeus_open, m)?)?;
    m.add_function(wrap_pyfunction!(zitmo_encrypt, m)?)?;
    m.add_function(wrap_pyfunction!(zitmo_decrypt, m)?)?;
    m.add_function(wrap_pyfunction!(zitmo_format, m)?)?;
    m.add_function(wrap_pyfunction!(zitmo_parse, m)?)?;
    m.add_function(wrap_pyfunction!(crc32_hex, m)?)?;
    m.add_function(wrap_pyfunction!(emotet_keygen, m)?)?;
    m.add_function(wrap_pyfunction!(emotet_seal, m)?)?;
    m.add_function(wrap_pyfunction!(emotet_open, m)?)?;
    m.add_function(wrap_pyfunction!(topology_tuples, m)?)?;
    m.add_function(wrap_pyfunction!(graph_dot, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
