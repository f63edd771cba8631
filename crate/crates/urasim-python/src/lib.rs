use pyo3::prelude::*; #[pymodule] fn urasim_py(_m: &Bound<'_, PyModule>) -> PyResult<()> { Ok(()) }
