//! Python bindings. Scans return plain lists; fits return dicts.

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use snv_core::fitting::{self, models, Dataset, FitError, FitOptions, FitResult};
use snv_core::protocols::{self, NoiseModel, NuclearSpinModel, QubitContext, ScanResult};
use snv_core::raman::{self, RamanDriveParams};
use snv_core::{units, DeviceParams};

fn core_err(e: snv_core::Error) -> PyErr {
    use snv_core::Error as E;
    match e {
        E::InvalidParameter { .. } | E::ZeroDetuning | E::InvalidSequence(_) | E::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        E::Fit(f) => fit_err(f),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn fit_err(e: FitError) -> PyErr {
    match e {
        FitError::Singular { .. } | FitError::NonFiniteModel | FitError::Model(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Default device parameters overlaid with `overrides`.
fn device(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<DeviceParams> {
    let mut dev = DeviceParams::default();
    if let Some(map) = overrides {
        for (k, v) in map.iter() {
            let key: String = k.extract()?;
            let v: f64 = v.extract()?;
            let slot = match key.as_str() {
                "lambda_so_ground_ghz" => &mut dev.lambda_so_ground_ghz,
                "lambda_so_excited_ghz" => &mut dev.lambda_so_excited_ghz,
                "gamma_mhz" => &mut dev.gamma_mhz,
                "p_sat_nw" => &mut dev.p_sat_nw,
                "eta" => &mut dev.eta,
                "gyro_e_ghz_per_t" => &mut dev.gyro_e_ghz_per_t,
                "t2_star_us" => &mut dev.t2_star_us,
                "hyperfine_a_mhz" => &mut dev.hyperfine_a_mhz,
                "b_field_t" => &mut dev.b_field.magnitude_t,
                "b_polar_deg" => &mut dev.b_field.polar_deg,
                _ => return Err(PyKeyError::new_err(format!("unknown device parameter `{key}`"))),
            };
            *slot = v;
        }
    }
    dev.validate().map_err(core_err)?;
    Ok(dev)
}

fn context(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<QubitContext> {
    let dev = device(overrides)?;
    let noise = NoiseModel::calibrated(&dev).map_err(core_err)?;
    Ok(QubitContext::new(dev, noise))
}

fn scan(r: ScanResult) -> (Vec<f64>, Vec<f64>) {
    (r.values, r.stderr)
}

/// Default device parameters as a dict.
#[pyfunction]
fn device_defaults(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let d = DeviceParams::default();
    let out = PyDict::new(py);
    for (k, v) in [
        ("lambda_so_ground_ghz", d.lambda_so_ground_ghz),
        ("lambda_so_excited_ghz", d.lambda_so_excited_ghz),
        ("gamma_mhz", d.gamma_mhz),
        ("p_sat_nw", d.p_sat_nw),
        ("eta", d.eta),
        ("gyro_e_ghz_per_t", d.gyro_e_ghz_per_t),
        ("t2_star_us", d.t2_star_us),
        ("hyperfine_a_mhz", d.hyperfine_a_mhz),
        ("b_field_t", d.b_field.magnitude_t),
        ("b_polar_deg", d.b_field.polar_deg),
    ] {
        out.set_item(k, v)?;
    }
    Ok(out)
}

/// Effective two-level parameters of a Raman drive.
#[pyfunction]
#[pyo3(signature = (delta_mhz, power_nw, device=None))]
fn effective_two_level<'py>(
    py: Python<'py>,
    delta_mhz: f64,
    power_nw: f64,
    device: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let dev = self::device(device)?;
    let e = raman::effective_two_level(&RamanDriveParams::new(delta_mhz, power_nw), &dev, 0.0).map_err(core_err)?;
    let out = PyDict::new(py);
    out.set_item("rabi_mhz", e.rabi_mhz)?;
    out.set_item("scatter_per_us", e.scatter_per_us)?;
    out.set_item("ac_stark_diff_mhz", e.ac_stark_diff_mhz)?;
    out.set_item("t1_os_ms", e.t1_os_ms)?;
    out.set_item("t2_os_ms", e.t2_os_ms)?;
    Ok(out)
}

/// π/2-gate fidelity for a Rabi rate (MHz), scattering rate (μs⁻¹) and T2* (μs).
#[pyfunction]
fn gate_fidelity(rabi_mhz: f64, scatter_per_us: f64, t2_star_us: f64) -> f64 {
    raman::gate_fidelity(units::mhz(rabi_mhz), units::per_us(scatter_per_us), units::us(t2_star_us))
}

/// Spin-down population after each drive duration. Returns (values, stderr).
#[pyfunction]
#[pyo3(signature = (durations_us, delta_mhz=1200.0, power_nw=650.0, device=None))]
fn rabi(durations_us: Vec<f64>, delta_mhz: f64, power_nw: f64, device: Option<&Bound<'_, PyDict>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let ctx = context(device)?;
    let cfg = protocols::RabiConfig { drive: RamanDriveParams::new(delta_mhz, power_nw), ..Default::default() };
    protocols::run_rabi(&durations_us, &cfg, &ctx).map(scan).map_err(core_err)
}

/// Raman ODMR scan over two-photon detunings (MHz).
#[pyfunction]
#[pyo3(signature = (two_photon_mhz, delta_mhz=600.0, power_nw=40.0, duration_us=1.0, nuclear_spin=true, device=None))]
fn odmr(
    two_photon_mhz: Vec<f64>,
    delta_mhz: f64,
    power_nw: f64,
    duration_us: f64,
    nuclear_spin: bool,
    device: Option<&Bound<'_, PyDict>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let ctx = context(device)?;
    let drive = RamanDriveParams { duration_us, ..RamanDriveParams::new(delta_mhz, power_nw) };
    let cfg = protocols::OdmrConfig { drive, ..Default::default() };
    let nuc = if nuclear_spin { NuclearSpinModel::new(ctx.dev.hyperfine_a_mhz) } else { NuclearSpinModel::none() };
    protocols::run_odmr(&two_photon_mhz, &cfg, &ctx, &nuc).map(scan).map_err(core_err)
}

/// Excited-state population of the CPT lambda system.
#[pyfunction]
#[pyo3(signature = (two_photon_mhz, nuclear_spin=true, device=None))]
fn cpt(two_photon_mhz: Vec<f64>, nuclear_spin: bool, device: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<f64>> {
    let dev = self::device(device)?;
    let nuc = if nuclear_spin { NuclearSpinModel::new(dev.hyperfine_a_mhz) } else { NuclearSpinModel::none() };
    let r = protocols::run_cpt(&two_photon_mhz, &protocols::CptConfig::for_device(&dev), &dev, &nuc).map_err(core_err)?;
    Ok(r.values)
}

/// Ramsey scan; the result is indexed `[tau][detuning]`.
#[pyfunction]
#[pyo3(signature = (taus_us, detunings_mhz, serrodyne_mhz=5.0, device=None))]
fn ramsey(taus_us: Vec<f64>, detunings_mhz: Vec<f64>, serrodyne_mhz: f64, device: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<Vec<f64>>> {
    let ctx = context(device)?;
    let cfg = protocols::RamseyConfig { serrodyne_mhz, ..Default::default() };
    let r = protocols::run_ramsey(&taus_us, &detunings_mhz, &cfg, &ctx).map_err(core_err)?;
    Ok(r.values.chunks(detunings_mhz.len().max(1)).map(<[f64]>::to_vec).collect())
}

/// Names accepted by `fit`.
#[pyfunction]
fn model_names() -> Vec<&'static str> {
    models::NAMES.to_vec()
}

fn fit_dict<'py>(py: Python<'py>, fit: &FitResult) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    let values = PyDict::new(py);
    let errors = PyDict::new(py);
    for ((name, v), e) in fit.names.iter().zip(&fit.values).zip(&fit.uncertainties) {
        values.set_item(name, v)?;
        errors.set_item(name, e)?;
    }
    out.set_item("model", &fit.model)?;
    out.set_item("values", values)?;
    out.set_item("uncertainties", errors)?;
    out.set_item("reduced_chi2", fit.reduced_chi2)?;
    out.set_item("converged", fit.converged)?;
    out.set_item("iterations", fit.iterations)?;
    Ok(out)
}

/// Least-squares fit of a library model. For two-dimensional models pass
/// `x` as flattened pairs and `dim=2`.
#[pyfunction]
#[pyo3(signature = (model, x, y, sigma=None, initial=None, dim=1, t_pi2_us=0.05, serrodyne_mhz=5.0))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    model: &str,
    x: Vec<f64>,
    y: Vec<f64>,
    sigma: Option<Vec<f64>>,
    initial: Option<&Bound<'py, PyDict>>,
    dim: usize,
    t_pi2_us: f64,
    serrodyne_mhz: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = models::from_name(model, &DeviceParams::default(), t_pi2_us, serrodyne_mhz).map_err(fit_err)?;
    let mut data = Dataset::multi(x, dim.max(1), y);
    if let Some(s) = sigma {
        data = data.with_sigma(s);
    }
    let overrides = match initial {
        Some(map) => map.iter().map(|(k, v)| Ok((k.extract::<String>()?, v.extract::<f64>()?))).collect::<PyResult<Vec<_>>>()?,
        None => Vec::new(),
    };
    let opts = FitOptions { overrides, ..FitOptions::default() };
    let result = fitting::least_squares_with(&m, &data, &opts).map_err(fit_err)?;
    fit_dict(py, &result)
}

#[pymodule]
#[pyo3(name = "snv")]
fn snv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(device_defaults, m)?)?;
    m.add_function(wrap_pyfunction!(effective_two_level, m)?)?;
    m.add_function(wrap_pyfunction!(gate_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(rabi, m)?)?;
    m.add_function(wrap_pyfunction!(odmr, m)?)?;
    m.add_function(wrap_pyfunction!(cpt, m)?)?;
    m.add_function(wrap_pyfunction!(ramsey, m)?)?;
    m.add_function(wrap_pyfunction!(model_names, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    Ok(())
}
