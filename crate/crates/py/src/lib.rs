//! Python bindings for the Franson interferometry toolkit.
//!
//! Exposes the core model types (biphoton state, interferometer settings,
//! detector response, count model) and the main operations: closed-form
//! rates, count simulation, fringe fitting, and CHSH analysis.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use franson_core as core;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Correlated Gaussian joint spectral amplitude.
#[pyclass(name = "GaussianBiphoton", skip_from_py_object)]
#[derive(Clone)]
struct PyBiphoton {
    inner: core::GaussianBiphoton,
}

#[pymethods]
impl PyBiphoton {
    #[new]
    fn new(omega_s0: f64, omega_i0: f64, sigma_s: f64, sigma_i: f64, rho: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::GaussianBiphoton::new(omega_s0, omega_i0, sigma_s, sigma_i, rho)
                .map_err(err)?,
        })
    }

    /// The deconvolved reference source state.
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: core::table1_spectral_state() }
    }

    #[getter]
    fn omega_s0(&self) -> f64 {
        self.inner.omega_s0()
    }

    #[getter]
    fn omega_i0(&self) -> f64 {
        self.inner.omega_i0()
    }

    #[getter]
    fn sigma_s(&self) -> f64 {
        self.inner.sigma_s()
    }

    #[getter]
    fn sigma_i(&self) -> f64 {
        self.inner.sigma_i()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    /// Joint spectral intensity |F(omega_s, omega_i)|^2.
    fn jsi_value(&self, omega_s: f64, omega_i: f64) -> f64 {
        self.inner.jsi_value(omega_s, omega_i)
    }

    /// Joint temporal intensity |f(t_s, t_i)|^2.
    fn jti_value(&self, t_s: f64, t_i: f64) -> f64 {
        self.inner.jti_value(t_s, t_i)
    }

    /// Spectral widths as a dict: marginal, heralded, diagonal, correlation.
    fn spectral_widths(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        widths_dict(py, &self.inner.spectral_widths())
    }

    /// Temporal widths in the same layout as `spectral_widths`.
    fn temporal_widths(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        widths_dict(py, &self.inner.temporal_widths())
    }

    /// (signal, idler, coherence) correlation times in ps.
    fn coherence_times(&self) -> (f64, f64, f64) {
        self.inner.coherence_times()
    }

    fn __repr__(&self) -> String {
        format!(
            "GaussianBiphoton(omega_s0={}, omega_i0={}, sigma_s={}, sigma_i={}, rho={})",
            self.inner.omega_s0(),
            self.inner.omega_i0(),
            self.inner.sigma_s(),
            self.inner.sigma_i(),
            self.inner.rho()
        )
    }
}

fn widths_dict(py: Python<'_>, w: &core::WidthSummary) -> PyResult<Py<PyAny>> {
    use pyo3::types::PyDict;
    let d = PyDict::new(py);
    d.set_item("marginal_s", w.marginal_s)?;
    d.set_item("marginal_i", w.marginal_i)?;
    d.set_item("heralded_s", w.heralded_s)?;
    d.set_item("heralded_i", w.heralded_i)?;
    d.set_item("diag_plus", w.diag_plus)?;
    d.set_item("diag_minus", w.diag_minus)?;
    d.set_item("correlation", w.correlation)?;
    Ok(d.into_any().unbind())
}

/// One unbalanced interferometer arm: path delay tau (ps) and phase phi.
#[pyclass(name = "InterferometerArm", from_py_object)]
#[derive(Clone)]
struct PyArm {
    inner: core::InterferometerArm,
}

#[pymethods]
impl PyArm {
    #[new]
    fn new(tau: f64, phi: f64) -> PyResult<Self> {
        Ok(Self { inner: core::InterferometerArm::new(tau, phi).map_err(err)? })
    }

    /// Builds an arm whose fringe phase at carrier omega0 equals fringe_phi.
    #[staticmethod]
    fn with_fringe_phase(tau: f64, fringe_phi: f64, omega0: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::InterferometerArm::with_fringe_phase(tau, fringe_phi, omega0)
                .map_err(err)?,
        })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi()
    }

    fn fringe_phase(&self, omega0: f64) -> f64 {
        self.inner.fringe_phase(omega0)
    }

    fn __repr__(&self) -> String {
        format!("InterferometerArm(tau={}, phi={})", self.inner.tau(), self.inner.phi())
    }
}

/// The signal and idler arm settings of the Franson interferometer.
#[pyclass(name = "FransonSettings", skip_from_py_object)]
#[derive(Clone)]
struct PySettings {
    inner: core::FransonSettings,
}

#[pymethods]
impl PySettings {
    #[new]
    fn new(arm_s: PyArm, arm_i: PyArm) -> Self {
        Self { inner: core::FransonSettings::new(arm_s.inner, arm_i.inner) }
    }

    /// Balanced interferometer: both arms have zero delay and phase.
    #[staticmethod]
    fn identity() -> Self {
        Self { inner: core::FransonSettings::identity() }
    }
}

/// Gaussian instrument response (gate and spectrometer widths, s.d.).
#[pyclass(name = "ResponseModel", skip_from_py_object)]
#[derive(Clone)]
struct PyResponse {
    inner: core::ResponseModel,
}

#[pymethods]
impl PyResponse {
    #[new]
    fn new(
        gate_sigma_s: f64,
        gate_sigma_i: f64,
        spec_sigma_s: f64,
        spec_sigma_i: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: core::ResponseModel::new(gate_sigma_s, gate_sigma_i, spec_sigma_s, spec_sigma_i)
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn ideal() -> Self {
        Self { inner: core::ResponseModel::ideal() }
    }

    #[staticmethod]
    fn reference() -> Self {
        Self { inner: core::ResponseModel::reference() }
    }

    #[getter]
    fn gate_sigma_s(&self) -> f64 {
        self.inner.gate_sigma_s
    }

    #[getter]
    fn gate_sigma_i(&self) -> f64 {
        self.inner.gate_sigma_i
    }

    #[getter]
    fn spec_sigma_s(&self) -> f64 {
        self.inner.spec_sigma_s
    }

    #[getter]
    fn spec_sigma_i(&self) -> f64 {
        self.inner.spec_sigma_i
    }
}

/// Absolute-rate counting model for the Poisson sampler.
#[pyclass(name = "CountModel", skip_from_py_object)]
#[derive(Clone)]
struct PyCountModel {
    inner: core::CountModel,
}

#[pymethods]
impl PyCountModel {
    #[new]
    #[pyo3(signature = (
        pair_rate_peak,
        background_rate = 0.0,
        singles_rate_s = 0.0,
        singles_rate_i = 0.0,
        singles_background_s = 0.0,
        singles_background_i = 0.0,
        dwell = 1.0,
        seed = 0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        pair_rate_peak: f64,
        background_rate: f64,
        singles_rate_s: f64,
        singles_rate_i: f64,
        singles_background_s: f64,
        singles_background_i: f64,
        dwell: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let inner = core::CountModel {
            pair_rate_peak,
            background_rate,
            singles_rates: (singles_rate_s, singles_rate_i),
            singles_background: (singles_background_s, singles_background_i),
            dwell,
            seed,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }
}

/// One simulated measurement setting with expected and sampled counts.
#[pyclass(name = "CountRecord", from_py_object)]
#[derive(Clone)]
struct PyCountRecord {
    #[pyo3(get)]
    phi_s: f64,
    #[pyo3(get)]
    phi_i: f64,
    #[pyo3(get)]
    gate_s: f64,
    #[pyo3(get)]
    gate_i: f64,
    #[pyo3(get)]
    expected_cc: f64,
    #[pyo3(get)]
    counts_cc: u64,
    #[pyo3(get)]
    expected_ss: f64,
    #[pyo3(get)]
    counts_ss: u64,
    #[pyo3(get)]
    expected_si: f64,
    #[pyo3(get)]
    counts_si: u64,
    #[pyo3(get)]
    dwell_s: f64,
}

impl From<core::CountRecord> for PyCountRecord {
    fn from(r: core::CountRecord) -> Self {
        Self {
            phi_s: r.phi_s,
            phi_i: r.phi_i,
            gate_s: r.gate_s,
            gate_i: r.gate_i,
            expected_cc: r.expected_cc,
            counts_cc: r.counts_cc,
            expected_ss: r.expected_ss,
            counts_ss: r.counts_ss,
            expected_si: r.expected_si,
            counts_si: r.counts_si,
            dwell_s: r.dwell_s,
        }
    }
}

impl PyCountRecord {
    fn to_core(&self) -> core::CountRecord {
        core::CountRecord {
            phi_s: self.phi_s,
            phi_i: self.phi_i,
            gate_s: self.gate_s,
            gate_i: self.gate_i,
            expected_cc: self.expected_cc,
            counts_cc: self.counts_cc,
            expected_ss: self.expected_ss,
            counts_ss: self.counts_ss,
            expected_si: self.expected_si,
            counts_si: self.counts_si,
            dwell_s: self.dwell_s,
        }
    }
}

#[pymethods]
impl PyCountRecord {
    fn __repr__(&self) -> String {
        format!(
            "CountRecord(phi_s={}, phi_i={}, counts_cc={})",
            self.phi_s, self.phi_i, self.counts_cc
        )
    }
}

/// CHSH analysis outcome: correlators, S, and its standard error.
#[pyclass(name = "BellResult", skip_from_py_object)]
#[derive(Clone)]
struct PyBellResult {
    inner: core::BellResult,
}

#[pymethods]
impl PyBellResult {
    /// The four (E, sigma_E) correlators in (a b, a b', a' b, a' b') order.
    #[getter]
    fn correlators(&self) -> Vec<(f64, f64)> {
        self.inner.correlators.to_vec()
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn sigma_s(&self) -> f64 {
        self.inner.sigma_s
    }

    fn violation_sigmas(&self) -> f64 {
        self.inner.violation_sigmas()
    }

    fn __repr__(&self) -> String {
        format!("BellResult(s={:.5}, sigma_s={:.5})", self.inner.s, self.inner.sigma_s)
    }
}

/// Closed-form coincidence probability for the given settings and state.
#[pyfunction]
fn coincidence_rate(settings: &PySettings, state: &PyBiphoton) -> f64 {
    core::coincidence_rate(&settings.inner, &state.inner)
}

/// Joint temporal intensity after the interferometer at (t_s, t_i).
#[pyfunction]
fn jti_after(settings: &PySettings, state: &PyBiphoton, t_s: f64, t_i: f64) -> f64 {
    core::jti_after(&settings.inner, &state.inner, t_s, t_i)
}

/// Joint spectral intensity after the interferometer.
#[pyfunction]
fn jsi_after(settings: &PySettings, state: &PyBiphoton, omega_s: f64, omega_i: f64) -> f64 {
    core::jsi_after(&settings.inner, &state.inner, omega_s, omega_i)
}

/// Fringe visibility predicted by the model; `selected` restricts to the
/// central (interfering) arrival-time peak.
#[pyfunction]
fn predicted_visibility(settings: &PySettings, state: &PyBiphoton, selected: bool) -> f64 {
    core::predicted_visibility(&settings.inner, &state.inner, selected)
}

/// Visibility after adding a flat background B to mean rate C0.
#[pyfunction]
fn background_visibility(v_ideal: f64, mean_rate_c0: f64, background_b: f64) -> PyResult<f64> {
    core::background_visibility(v_ideal, mean_rate_c0, background_b).map_err(err)
}

/// Gated coincidence rate with gate delays (t_s, t_i).
#[pyfunction]
fn gated_coincidence_rate(
    settings: &PySettings,
    state: &PyBiphoton,
    response: &PyResponse,
    t_s: f64,
    t_i: f64,
) -> f64 {
    core::gated_coincidence_rate(&settings.inner, &state.inner, &response.inner, t_s, t_i)
}

/// Simulates a phase scan; returns a list of CountRecord.
#[pyfunction]
#[pyo3(signature = (state, tau_s, tau_i, phases, count_model, response, gates = None))]
fn phase_fringe_scan(
    state: &PyBiphoton,
    tau_s: f64,
    tau_i: f64,
    phases: Vec<(f64, f64)>,
    count_model: &PyCountModel,
    response: &PyResponse,
    gates: Option<(f64, f64)>,
) -> PyResult<Vec<PyCountRecord>> {
    let records = core::phase_fringe_scan(
        &state.inner,
        tau_s,
        tau_i,
        &phases,
        gates,
        &count_model.inner,
        &response.inner,
    )
    .map_err(err)?;
    Ok(records.into_iter().map(Into::into).collect())
}

/// Simulates the 16-setting Bell measurement; records are signal-major.
#[pyfunction]
fn bell_experiment(
    state: &PyBiphoton,
    tau_s: f64,
    tau_i: f64,
    count_model: &PyCountModel,
    response: &PyResponse,
) -> PyResult<Vec<PyCountRecord>> {
    let records = core::bell_experiment(
        &state.inner,
        tau_s,
        tau_i,
        &count_model.inner,
        &response.inner,
    )
    .map_err(err)?;
    Ok(records.into_iter().map(Into::into).collect())
}

/// Fits C0 (1 + V cos(phi - phi0)) to (phase, counts) points; returns a dict.
#[pyfunction]
fn fit_fringe(py: Python<'_>, points: Vec<(f64, f64)>) -> PyResult<Py<PyAny>> {
    use pyo3::types::PyDict;
    let fit = core::fit_fringe(&points).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mean_level", fit.mean_level)?;
    d.set_item("visibility", fit.visibility)?;
    d.set_item("phase_offset", fit.phase_offset)?;
    d.set_item("mean_level_err", fit.mean_level_err)?;
    d.set_item("visibility_err", fit.visibility_err)?;
    d.set_item("phase_offset_err", fit.phase_offset_err)?;
    Ok(d.into_any().unbind())
}

/// CHSH analysis of a 4x4 count table (signal-major rows).
#[pyfunction]
fn bell_result_from_counts(counts: [[u64; 4]; 4]) -> PyResult<PyBellResult> {
    Ok(PyBellResult { inner: core::bell_result_from_counts(&counts).map_err(err)? })
}

/// CHSH analysis of 16 simulated Bell records.
#[pyfunction]
fn bell_result_from_records(records: Vec<PyCountRecord>) -> PyResult<PyBellResult> {
    let core_records: Vec<_> = records.iter().map(PyCountRecord::to_core).collect();
    Ok(PyBellResult { inner: core::bell_result_from_records(&core_records).map_err(err)? })
}

/// The published 4x4 CHSH count table, signal-major.
#[pyfunction]
fn table2_counts() -> [[u64; 4]; 4] {
    core::table2_counts()
}

/// Converts angular frequency (rad/ps) to wavelength (nm) and back.
#[pyfunction]
fn angfreq_to_wavelength(omega: f64) -> PyResult<f64> {
    core::angfreq_to_wavelength(omega).map_err(err)
}

#[pyfunction]
fn wavelength_to_angfreq(lambda_nm: f64) -> PyResult<f64> {
    core::wavelength_to_angfreq(lambda_nm).map_err(err)
}

#[pymodule]
fn franson(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBiphoton>()?;
    m.add_class::<PyArm>()?;
    m.add_class::<PySettings>()?;
    m.add_class::<PyResponse>()?;
    m.add_class::<PyCountModel>()?;
    m.add_class::<PyCountRecord>()?;
    m.add_class::<PyBellResult>()?;
    m.add_function(wrap_pyfunction!(coincidence_rate, m)?)?;
    m.add_function(wrap_pyfunction!(jti_after, m)?)?;
    m.add_function(wrap_pyfunction!(jsi_after, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(background_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(gated_coincidence_rate, m)?)?;
    m.add_function(wrap_pyfunction!(phase_fringe_scan, m)?)?;
    m.add_function(wrap_pyfunction!(bell_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fringe, m)?)?;
    m.add_function(wrap_pyfunction!(bell_result_from_counts, m)?)?;
    m.add_function(wrap_pyfunction!(bell_result_from_records, m)?)?;
    m.add_function(wrap_pyfunction!(table2_counts, m)?)?;
    m.add_function(wrap_pyfunction!(angfreq_to_wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(wavelength_to_angfreq, m)?)?;
    Ok(())
}
