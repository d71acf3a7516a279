//! Python bindings. Matrices cross the boundary as nested lists of
//! complex (or real) numbers, row-major.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qldp::channels::{depolarizing, QuantumChannel};
use qldp::estimate::{self, AccuracyDemand, CoverageReport};
use qldp::pauli::{decompose_auto, PauliDecomposition, PauliLabel};
use qldp::privacy::{self, certify_qldp};
use qldp::search::SearchConfig;
use qldp::{qops, shadows, utility, CMatrix, DensityMatrix, HermitianOperator, QldpError};

create_exception!(qldp, OutOfRegimeError, PyValueError);

fn err(e: QldpError) -> PyErr {
    match e {
        QldpError::OutOfRegime { .. } => OutOfRegimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

type Rows = Vec<Vec<Complex64>>;

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("expected a nonempty rectangular nested list"));
    }
    Ok(CMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn from_matrix(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn density(rows: &Rows) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_matrix(rows)?).map_err(err)
}

fn hermitian(rows: &Rows) -> PyResult<HermitianOperator> {
    HermitianOperator::new(to_matrix(rows)?).map_err(err)
}

fn budget(epsilon: f64, delta: f64) -> PyResult<privacy::PrivacyBudget> {
    privacy::PrivacyBudget::new(epsilon, delta).map_err(err)
}

fn demand(beta: f64, eta: f64) -> PyResult<AccuracyDemand> {
    AccuracyDemand::new(beta, eta).map_err(err)
}

#[pyclass(name = "PrivacyBudget", module = "qldp", frozen)]
struct PyPrivacyBudget(privacy::PrivacyBudget);

#[pymethods]
impl PyPrivacyBudget {
    #[new]
    #[pyo3(signature = (epsilon, delta=0.0))]
    fn new(epsilon: f64, delta: f64) -> PyResult<Self> {
        Ok(Self(budget(epsilon, delta)?))
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    fn __repr__(&self) -> String {
        format!("PrivacyBudget(epsilon={}, delta={})", self.0.epsilon(), self.0.delta())
    }
}

#[pyclass(name = "Channel", module = "qldp", frozen)]
struct PyChannel(QuantumChannel);

#[pymethods]
impl PyChannel {
    #[staticmethod]
    fn depolarizing(d: usize, p: f64) -> PyResult<Self> {
        Ok(Self(depolarizing(d, p).map_err(err)?))
    }

    #[staticmethod]
    fn from_kraus(kraus: Vec<Rows>) -> PyResult<Self> {
        let ops = kraus.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        let first = ops.first().ok_or_else(|| PyValueError::new_err("need at least one Kraus operator"))?;
        let (dout, din) = (first.nrows(), first.ncols());
        Ok(Self(QuantumChannel::from_kraus(din, dout, ops).map_err(err)?))
    }

    #[getter]
    fn dim_in(&self) -> usize {
        self.0.dim_in()
    }

    #[getter]
    fn dim_out(&self) -> usize {
        self.0.dim_out()
    }

    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        let out = self.0.apply(&density(&rho)?).map_err(err)?;
        Ok(from_matrix(out.matrix()))
    }

    /// Numerical (ε, δ) certification; returns a dict with the supremum
    /// estimate, verdict and witness pair.
    #[pyo3(signature = (epsilon, delta=0.0, restarts=64, seed=0x5eed))]
    fn certify<'py>(&self, py: Python<'py>, epsilon: f64, delta: f64, restarts: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let b = budget(epsilon, delta)?;
        let search = SearchConfig::default().with_restarts(restarts).with_seed(seed);
        let r = py.detach(|| certify_qldp(&self.0, &b, &search)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("sup_estimate", r.sup_estimate)?;
        d.set_item("satisfied", r.satisfied)?;
        d.set_item("borderline", r.borderline)?;
        d.set_item("restarts_used", r.restarts_used)?;
        let amps = |s: &qldp::PureState| s.amplitudes().iter().copied().collect::<Vec<Complex64>>();
        d.set_item("witness", (amps(&r.witness.0), amps(&r.witness.1)))?;
        Ok(d)
    }
}

#[pyfunction]
fn trace_distance(rho: Rows, sigma: Rows) -> PyResult<f64> {
    qops::trace_distance(&density(&rho)?, &density(&sigma)?).map_err(err)
}

#[pyfunction]
fn fidelity(rho: Rows, sigma: Rows) -> PyResult<f64> {
    qops::fidelity(&density(&rho)?, &density(&sigma)?).map_err(err)
}

#[pyfunction]
fn hockey_stick(rho: Rows, sigma: Rows, gamma: f64) -> PyResult<f64> {
    qops::hockey_stick(&density(&rho)?, &density(&sigma)?, gamma).map_err(err)
}

#[pyfunction]
fn optimal_depolarizing_p(d: usize, epsilon: f64, delta: f64) -> PyResult<f64> {
    privacy::optimal_depolarizing_p(d, &budget(epsilon, delta)?).map_err(err)
}

#[pyfunction]
fn depolarizing_privacy_profile(d: usize, p: f64, gamma: f64) -> PyResult<f64> {
    privacy::depolarizing_privacy_profile(d, p, gamma).map_err(err)
}

#[pyfunction]
fn qubit_depolarizing_q(epsilon: f64, delta: f64) -> PyResult<f64> {
    Ok(privacy::qubit_depolarizing_q(&budget(epsilon, delta)?))
}

#[pyfunction]
fn optimal_fidelity_utility(d: usize, epsilon: f64, delta: f64) -> PyResult<f64> {
    utility::optimal_fidelity_utility(d, &budget(epsilon, delta)?).map_err(err)
}

#[pyfunction]
fn optimal_trace_utility(d: usize, epsilon: f64, delta: f64) -> PyResult<f64> {
    utility::optimal_trace_utility(d, &budget(epsilon, delta)?).map_err(err)
}

/// Rows of `(epsilon, delta, optimal_fidelity, optimal_trace)`.
#[pyfunction]
fn utility_curve(d: usize, deltas: Vec<f64>, epsilons: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let rows = utility::utility_curve(d, &deltas, &epsilons).map_err(err)?;
    Ok(rows
        .iter()
        .map(|r| (r.epsilon, r.delta, r.optimal_fidelity, r.optimal_trace))
        .collect())
}

/// Pauli expansion `[(label, coefficient), ...]` of a Hermitian matrix.
#[pyfunction]
fn decompose(observable: Rows) -> PyResult<Vec<(String, f64)>> {
    let dec = decompose_auto(&hermitian(&observable)?).map_err(err)?;
    Ok(dec.terms().iter().map(|(l, a)| (l.to_string(), *a)).collect())
}

fn decomposition_from_terms(terms: &[(String, f64)]) -> PyResult<PauliDecomposition> {
    let parsed = terms
        .iter()
        .map(|(l, a)| {
            l.parse::<PauliLabel>()
                .map(|p| (p, *a))
                .map_err(|e| PyValueError::new_err(e.to_string()))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let m = parsed
        .first()
        .ok_or_else(|| PyValueError::new_err("empty observable"))?
        .0
        .num_qubits();
    PauliDecomposition::from_terms(m, &parsed).map_err(err)
}

#[pyfunction]
fn required_samples_upper(weight: f64, epsilon: f64, delta: f64, beta: f64, eta: f64) -> PyResult<u64> {
    estimate::required_samples_upper(weight, &budget(epsilon, delta)?, &demand(beta, eta)?).map_err(err)
}

#[pyfunction]
fn required_samples_lower(lambda_max: f64, lambda_min: f64, epsilon: f64, beta: f64, eta: f64) -> PyResult<u64> {
    estimate::required_samples_lower(lambda_max, lambda_min, &budget(epsilon, 0.0)?, &demand(beta, eta)?).map_err(err)
}

#[pyfunction]
fn private_shadow_p_hat(d: usize, epsilon: f64, delta: f64) -> PyResult<f64> {
    shadows::private_shadow_p_hat(d, &budget(epsilon, delta)?).map_err(err)
}

#[pyfunction]
fn shadow_required_samples(tr_o2: f64, d: usize, epsilon: f64, delta: f64, beta: f64, eta: f64) -> PyResult<u64> {
    shadows::shadow_required_samples(tr_o2, d, &budget(epsilon, delta)?, &demand(beta, eta)?).map_err(err)
}

fn coverage_dict<'py>(py: Python<'py>, r: &CoverageReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("coverage", r.fraction_within())?;
    d.set_item("meets_target", r.meets_target())?;
    d.set_item("true_value", r.records.first().map(|t| t.true_value))?;
    d.set_item("estimates", r.records.iter().map(|t| t.estimate).collect::<Vec<_>>())?;
    Ok(d)
}

/// Monte Carlo run of the Pauli-sampling estimator. `observable` is a list
/// of `(label, coefficient)` pairs.
#[pyfunction]
#[pyo3(signature = (observable, rho, epsilon, delta, beta, eta, trials=100, seed=0x5eed, n=None))]
#[allow(clippy::too_many_arguments)]
fn pauli_coverage<'py>(
    py: Python<'py>,
    observable: Vec<(String, f64)>,
    rho: Rows,
    epsilon: f64,
    delta: f64,
    beta: f64,
    eta: f64,
    trials: u64,
    seed: u64,
    n: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let dec = decomposition_from_terms(&observable)?;
    let rho = density(&rho)?;
    let (b, dm) = (budget(epsilon, delta)?, demand(beta, eta)?);
    let r = py
        .detach(|| estimate::pauli_coverage(&rho, &dec, &b, &dm, n, trials, seed))
        .map_err(err)?;
    coverage_dict(py, &r)
}

/// Monte Carlo run of the private classical-shadow estimator.
#[pyfunction]
#[pyo3(signature = (observable, rho, epsilon, delta, beta, eta, trials=100, seed=0x5eed, n=None))]
#[allow(clippy::too_many_arguments)]
fn shadow_coverage<'py>(
    py: Python<'py>,
    observable: Rows,
    rho: Rows,
    epsilon: f64,
    delta: f64,
    beta: f64,
    eta: f64,
    trials: u64,
    seed: u64,
    n: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let o = hermitian(&observable)?;
    let rho = density(&rho)?;
    let (b, dm) = (budget(epsilon, delta)?, demand(beta, eta)?);
    let r = py
        .detach(|| shadows::shadow_coverage(&rho, &o, &b, &dm, n, trials, seed))
        .map_err(err)?;
    coverage_dict(py, &r)
}

#[pymodule]
#[pyo3(name = "qldp")]
fn qldp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OutOfRegimeError", m.py().get_type::<OutOfRegimeError>())?;
    m.add_class::<PyPrivacyBudget>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(hockey_stick, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_depolarizing_p, m)?)?;
    m.add_function(wrap_pyfunction!(depolarizing_privacy_profile, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_depolarizing_q, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_fidelity_utility, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_trace_utility, m)?)?;
    m.add_function(wrap_pyfunction!(utility_curve, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(required_samples_upper, m)?)?;
    m.add_function(wrap_pyfunction!(required_samples_lower, m)?)?;
    m.add_function(wrap_pyfunction!(private_shadow_p_hat, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_required_samples, m)?)?;
    m.add_function(wrap_pyfunction!(pauli_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_coverage, m)?)?;
    Ok(())
}
