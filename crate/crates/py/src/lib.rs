//! Python bindings for `sagnac_core`.
//!
//! Density matrices cross the boundary as 4×4 nested lists of Python
//! `complex`; count records as `(setting_a, setting_b, coincidences)` tuples.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sagnac_core::detection::{self, DetectorModel};
use sagnac_core::franson::{self, FransonConfig, FringeScan};
use sagnac_core::qkd::{self, SessionConfig};
use sagnac_core::scenario::{self, Command, ScenarioConfig};
use sagnac_core::spectral::{self, SourceParams};
use sagnac_core::state::{self, Matrix4c, Polarization, SagnacState};
use sagnac_core::tomography::{self, CountRecord, MleOptions, TomographySchedule};

fn err(e: sagnac_core::Error) -> PyErr {
    match e {
        sagnac_core::Error::Io(_) | sagnac_core::Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<Matrix4c> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("expected a 4x4 matrix"));
    }
    Ok(Matrix4c::from_fn(|i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix4c) -> Vec<Vec<Complex64>> {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

/// Two-qubit density matrix in the {HH, HV, VH, VV} basis.
#[pyclass(name = "DensityMatrix", module = "sagnac")]
struct PyDensityMatrix(state::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        state::DensityMatrix::new(matrix_from_rows(rows)?).map(Self).map_err(err)
    }

    #[staticmethod]
    fn phi_plus() -> Self {
        Self(state::DensityMatrix::phi_plus())
    }

    #[staticmethod]
    fn werner(p: f64) -> PyResult<Self> {
        state::DensityMatrix::werner(p).map(Self).map_err(err)
    }

    #[staticmethod]
    fn sagnac(alpha: f64, beta: f64, phi: f64) -> PyResult<Self> {
        let s = SagnacState::new(alpha, beta, phi).map_err(err)?;
        state::sagnac_state(&s).map(Self).map_err(err)
    }

    fn fidelity(&self) -> f64 {
        state::fidelity_to_phi_plus(&self.0)
    }

    fn purity(&self) -> f64 {
        state::purity(&self.0)
    }

    fn eigenvalues(&self) -> [f64; 4] {
        self.0.eigenvalues()
    }

    /// Joint detection probability for analyzer labels such as `"H"`, `"D"`.
    fn probability(&self, a: &str, b: &str) -> PyResult<f64> {
        let parse = |s: &str| s.parse::<Polarization>().map_err(err);
        Ok(state::coincidence_probability(&self.0, parse(a)?, parse(b)?))
    }

    fn trace_distance(&self, other: PyRef<'_, PyDensityMatrix>) -> f64 {
        state::trace_distance(self.0.matrix(), other.0.matrix())
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        matrix_to_rows(self.0.matrix())
    }

    fn report(&self) -> String {
        self.0.to_report_string()
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(fidelity={:.6}, purity={:.6})", self.fidelity(), self.purity())
    }
}

#[pyclass(name = "TomographyResult", module = "sagnac", get_all)]
struct PyTomographyResult {
    fidelity: f64,
    fidelity_sigma: f64,
    purity: f64,
    purity_sigma: f64,
    iterations: usize,
    converged: bool,
    rho: Py<PyDensityMatrix>,
}

#[pymethods]
impl PyTomographyResult {
    fn __repr__(&self) -> String {
        format!(
            "TomographyResult(fidelity={:.6}±{:.6}, purity={:.6}±{:.6})",
            self.fidelity, self.fidelity_sigma, self.purity, self.purity_sigma
        )
    }
}

fn schedule_counts(counts: Vec<(String, String, u64)>) -> PyResult<(TomographySchedule, Vec<CountRecord>)> {
    let schedule = TomographySchedule::canonical();
    let mut ordered: Vec<Option<CountRecord>> = vec![None; schedule.settings().len()];
    for (a, b, n) in counts {
        let pa = a.parse::<Polarization>().map_err(err)?;
        let pb = b.parse::<Polarization>().map_err(err)?;
        let k = schedule
            .index_of(pa, pb)
            .ok_or_else(|| PyValueError::new_err(format!("setting {a}{b} is not in the 16-setting schedule")))?;
        ordered[k] = Some(CountRecord {
            setting_index: k,
            coincidences: n,
            singles_a: 0,
            singles_b: 0,
            integration_s: 1.0,
        });
    }
    let records = ordered
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| PyValueError::new_err("all 16 settings are required"))?;
    Ok((schedule, records))
}

fn records_to_tuples(schedule: &TomographySchedule, counts: &[CountRecord]) -> Vec<(String, String, u64)> {
    schedule
        .settings()
        .iter()
        .zip(counts)
        .map(|(&(a, b), r)| (a.to_string(), b.to_string(), r.coincidences))
        .collect()
}

#[pyfunction]
fn itu_channel_frequency(n: i32) -> f64 {
    spectral::itu_channel_frequency(n)
}

#[pyfunction]
fn itu_channel_wavelength_nm(n: i32) -> f64 {
    spectral::itu_channel_wavelength_nm(n)
}

#[pyfunction]
fn conjugate_channel(n: i32, pump: i32) -> i32 {
    spectral::conjugate_channel(n, pump)
}

/// Nearest symmetric pairs around `pump` as `(signal, idler)` tuples.
#[pyfunction]
#[pyo3(signature = (pump=21, n_pairs=20, excluded=vec![20, 22]))]
fn build_channel_plan(pump: i32, n_pairs: usize, excluded: Vec<i32>) -> PyResult<Vec<(i32, i32)>> {
    let plan = spectral::build_channel_plan(pump, n_pairs, &excluded.into_iter().collect()).map_err(err)?;
    Ok(plan.pairs.iter().map(|p| (p.signal, p.idler)).collect())
}

#[pyfunction]
#[pyo3(signature = (pump_power_mw, channel_bandwidth_nm, channel_center_nm, crystal=2))]
fn pair_rate(pump_power_mw: f64, channel_bandwidth_nm: f64, channel_center_nm: f64, crystal: u8) -> PyResult<f64> {
    let params = match crystal {
        1 => SourceParams::crystal1(),
        2 => SourceParams::crystal2(),
        _ => return Err(PyValueError::new_err("crystal must be 1 or 2")),
    };
    spectral::pair_rate(pump_power_mw, channel_bandwidth_nm, channel_center_nm, &params).map_err(err)
}

#[pyfunction]
fn simulate_tomography_counts(
    rho: PyRef<'_, PyDensityMatrix>,
    rate_hz: f64,
    integration_s: f64,
    seed: u64,
) -> PyResult<Vec<(String, String, u64)>> {
    let schedule = TomographySchedule::canonical();
    let counts =
        tomography::simulate_tomography_counts(&rho.0, &schedule, rate_hz, integration_s, seed).map_err(err)?;
    Ok(records_to_tuples(&schedule, &counts))
}

#[pyfunction]
fn linear_inversion(counts: Vec<(String, String, u64)>) -> PyResult<Vec<Vec<Complex64>>> {
    let (schedule, records) = schedule_counts(counts)?;
    tomography::linear_inversion(&records, &schedule)
        .map(|m| matrix_to_rows(&m))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (counts, bootstrap_replicas=100, seed=0))]
fn mle_reconstruct(
    py: Python<'_>,
    counts: Vec<(String, String, u64)>,
    bootstrap_replicas: usize,
    seed: u64,
) -> PyResult<PyTomographyResult> {
    let (schedule, records) = schedule_counts(counts)?;
    let opts = MleOptions {
        bootstrap_replicas,
        bootstrap_seed: seed,
        ..MleOptions::default()
    };
    let r = py
        .detach(|| tomography::mle_reconstruct_with(&records, &schedule, &opts))
        .map_err(err)?;
    Ok(PyTomographyResult {
        fidelity: r.fidelity,
        fidelity_sigma: r.fidelity_sigma,
        purity: r.purity,
        purity_sigma: r.purity_sigma,
        iterations: r.iterations,
        converged: r.converged,
        rho: Py::new(py, PyDensityMatrix(r.rho))?,
    })
}

/// Tag lists (ps) for arms a and b with the default detector model.
#[pyfunction]
#[pyo3(signature = (pair_rate_hz, duration_s, seed, efficiency=0.8, dark_rate_hz=50.0, jitter_sigma_ps=detection::DEFAULT_JITTER_SIGMA_PS))]
fn simulate_pair_streams(
    py: Python<'_>,
    pair_rate_hz: f64,
    duration_s: f64,
    seed: u64,
    efficiency: f64,
    dark_rate_hz: f64,
    jitter_sigma_ps: f64,
) -> PyResult<(Vec<u64>, Vec<u64>, u64)> {
    let det = DetectorModel {
        efficiency,
        dark_rate_hz,
        jitter_sigma_ps,
        ..DetectorModel::default()
    };
    let (a, b) = py
        .detach(|| detection::simulate_pair_streams(pair_rate_hz, [0.0, 0.0], duration_s, &det, &det, seed))
        .map_err(err)?;
    let duration = a.duration_ps;
    Ok((a.tags_ps, b.tags_ps, duration))
}

/// `(coincidences, accidental_estimate)` for two sorted tag lists.
#[pyfunction]
#[pyo3(signature = (a, b, duration_ps, window_ps=detection::DEFAULT_WINDOW_PS, delay_ps=0))]
fn count_coincidences(a: Vec<u64>, b: Vec<u64>, duration_ps: u64, window_ps: u64, delay_ps: i64) -> PyResult<(u64, f64)> {
    let sa = detection::TimeTagStream::new(0, a, duration_ps).map_err(err)?;
    let sb = detection::TimeTagStream::new(1, b, duration_ps).map_err(err)?;
    let c = detection::count_coincidences(&sa, &sb, window_ps, delay_ps).map_err(err)?;
    Ok((c.true_window_counts, c.accidental_estimate))
}

/// `(admissible, diagnostic)`.
#[pyfunction]
fn validate_fsr(pump_linewidth_hz: f64, fsr_hz: f64, photon_bandwidth_hz: f64) -> (bool, String) {
    let check = franson::validate_fsr(&FransonConfig {
        pump_linewidth_hz,
        fsr_hz,
        photon_bandwidth_hz,
        ..FransonConfig::default()
    });
    (check.admissible, check.diagnostic)
}

#[pyfunction]
fn simulate_fringe_scan(visibility: f64, mean_counts: f64, phases: Vec<f64>, seed: u64) -> PyResult<Vec<u64>> {
    franson::simulate_fringe_scan(visibility, mean_counts, &phases, seed)
        .map(|s| s.coincidences)
        .map_err(err)
}

/// `(visibility, sigma, phase0)`.
#[pyfunction]
fn fit_visibility(phases: Vec<f64>, counts: Vec<u64>) -> PyResult<(f64, f64, f64)> {
    if phases.len() != counts.len() {
        return Err(PyValueError::new_err("phases and counts differ in length"));
    }
    let scan = FringeScan {
        phases_rad: phases,
        coincidences: counts,
        integration_s: 1.0,
    };
    let fit = franson::fit_visibility(&scan).map_err(err)?;
    Ok((fit.visibility, fit.visibility_sigma, fit.phase0))
}

#[pyfunction]
fn binary_entropy(x: f64) -> PyResult<f64> {
    qkd::binary_entropy(x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sifted_rate_hz, qx, qz, f_ec=qkd::DEFAULT_F_EC))]
fn secret_key_rate(sifted_rate_hz: f64, qx: f64, qz: f64, f_ec: f64) -> PyResult<f64> {
    qkd::secret_key_rate(sifted_rate_hz, qx, qz, f_ec).map_err(err)
}

type SessionRow = (f64, f64, f64, f64, f64);

/// Per-bin `(t_s, sifted_hz, qber_x, qber_z, skr_bps)` rows.
#[pyfunction]
#[pyo3(signature = (sifted_rate_hz, duration_s, seed, qber_x=0.065, qber_z=0.047, bin_s=10.0, events_toml=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_session(
    sifted_rate_hz: f64,
    duration_s: f64,
    seed: u64,
    qber_x: f64,
    qber_z: f64,
    bin_s: f64,
    events_toml: Option<&str>,
) -> PyResult<Vec<SessionRow>> {
    let cfg = SessionConfig {
        sifted_rate_hz,
        duration_s,
        bin_s,
        base_visibility_x: 1.0 - 2.0 * qber_x,
        base_error_z: qber_z,
        ..SessionConfig::default()
    };
    let events = events_toml.map(qkd::parse_events).transpose().map_err(err)?.unwrap_or_default();
    let report = qkd::simulate_session(&cfg, &events, seed).map_err(err)?;
    Ok(report
        .bins
        .iter()
        .map(|b| (b.t_s, b.sifted_rate_hz, b.qber_x, b.qber_z, b.skr_bps))
        .collect())
}

/// Run a CLI command; returns `(output directory, warning count)`.
#[pyfunction]
#[pyo3(signature = (command, config=None, seed=None, out=None))]
fn run_scenario(
    py: Python<'_>,
    command: &str,
    config: Option<std::path::PathBuf>,
    seed: Option<u64>,
    out: Option<std::path::PathBuf>,
) -> PyResult<(String, usize)> {
    let command: Command = command.parse().map_err(err)?;
    let mut cfg = match config {
        Some(p) => ScenarioConfig::load(&p).map_err(err)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let outcome = py.detach(|| scenario::run_scenario(command, &cfg)).map_err(err)?;
    Ok((outcome.directory.display().to_string(), outcome.warnings.len()))
}

#[pymodule]
fn sagnac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyTomographyResult>()?;
    m.add_function(wrap_pyfunction!(itu_channel_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(itu_channel_wavelength_nm, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_channel, m)?)?;
    m.add_function(wrap_pyfunction!(build_channel_plan, m)?)?;
    m.add_function(wrap_pyfunction!(pair_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_tomography_counts, m)?)?;
    m.add_function(wrap_pyfunction!(linear_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(mle_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pair_streams, m)?)?;
    m.add_function(wrap_pyfunction!(count_coincidences, m)?)?;
    m.add_function(wrap_pyfunction!(validate_fsr, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_fringe_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(secret_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_session, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
