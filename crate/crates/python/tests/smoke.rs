//! Runs `python/smoke_test.py` against the module in an embedded interpreter.

use std::ffi::CString;

use pyo3::prelude::*;
use tactic_reward_py::tactic_reward_module;

#[test]
fn smoke_script_passes() {
    pyo3::append_to_inittab!(tactic_reward_module);
    Python::initialize();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../python/smoke_test.py");
    let source = std::fs::read_to_string(path).unwrap();
    Python::attach(|py| {
        let globals = pyo3::types::PyDict::new(py);
        globals.set_item("__file__", path).unwrap();
        globals.set_item("__name__", "__main__").unwrap();
        let code = CString::new(source).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("smoke script failed");
        }
    });
}
