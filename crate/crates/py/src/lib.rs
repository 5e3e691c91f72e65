//! Python bindings: codebooks, beam reselection, link and exposure helpers and
//! the Monte-Carlo scenario runner.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use beamguard::array::{self, ArrayConfig};
use beamguard::avoidance::{self, AvoidancePolicy};
use beamguard::channel::{self, ChannelParams};
use beamguard::codebook::{self, BeamId, Sector};
use beamguard::config;
use beamguard::exposure::{self, ExposureParams};
use beamguard::geometry::Direction;
use beamguard::output::{self, Settings, Summary};
use beamguard::scenario::{self, PoseKind, ScenarioConfig, ScenarioResult};
use beamguard::Error;

create_exception!(beamguard, ExposureLimitedError, PyValueError);
create_exception!(beamguard, NearFieldError, PyValueError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ExposureLimited => ExposureLimitedError::new_err(e.to_string()),
        Error::NearField { .. } => NearFieldError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let items = xs.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// Uniform planar array with the sector element pattern.
#[pyclass(name = "ArrayConfig", module = "beamguard", from_py_object)]
#[derive(Clone)]
struct PyArrayConfig {
    inner: ArrayConfig,
}

#[pymethods]
impl PyArrayConfig {
    #[new]
    #[pyo3(signature = (n_h = 32, n_v = 32, carrier_freq_ghz = 28.0))]
    fn new(n_h: usize, n_v: usize, carrier_freq_ghz: f64) -> PyResult<Self> {
        let inner = ArrayConfig {
            carrier_freq_ghz,
            ..ArrayConfig::new(n_h, n_v)
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn element_count(&self) -> usize {
        self.inner.element_count()
    }

    fn peak_gain_db(&self) -> f64 {
        self.inner.peak_gain_db()
    }

    /// Gain in dBi toward `(azimuth, downtilt)` of a beam steered at `(steer_az, steer_tilt)`.
    fn gain_db(&self, steer_az: f64, steer_tilt: f64, azimuth: f64, downtilt: f64) -> PyResult<f64> {
        let w = array::conjugate_weights(&self.inner, &Direction::new(steer_az, steer_tilt));
        array::array_gain(&self.inner, &w, &Direction::new(azimuth, downtilt)).map_err(py_err)
    }

    /// Offsets (azimuth, downtilt) in degrees at which the gain drops by `level_db`.
    fn level_offset(&self, level_db: f64) -> PyResult<(f64, f64)> {
        let o = array::half_power_offset(&self.inner, level_db).map_err(py_err)?;
        Ok((o.azimuth, o.downtilt))
    }

    fn __repr__(&self) -> String {
        format!(
            "ArrayConfig(n_h={}, n_v={}, carrier_freq_ghz={})",
            self.inner.n_h, self.inner.n_v, self.inner.carrier_freq_ghz
        )
    }
}

/// Beam codebook on a uniform angular grid.
#[pyclass(name = "Codebook", module = "beamguard")]
struct PyCodebook {
    inner: codebook::Codebook,
}

#[pymethods]
impl PyCodebook {
    #[new]
    #[pyo3(signature = (crossover_db, array = None, sector = None))]
    fn new(crossover_db: f64, array: Option<PyArrayConfig>, sector: Option<(f64, f64, f64, f64)>) -> PyResult<Self> {
        let cfg = array.map(|a| a.inner).unwrap_or_default();
        let sector = sector.map_or_else(Sector::default, |(az_min, az_max, tilt_min, tilt_max)| Sector {
            az_min,
            az_max,
            tilt_min,
            tilt_max,
        });
        let inner = codebook::build_codebook(&cfg, &sector, crossover_db).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn az_count(&self) -> usize {
        self.inner.az_count()
    }

    #[getter]
    fn tilt_count(&self) -> usize {
        self.inner.tilt_count()
    }

    #[getter]
    fn spacing(&self) -> (f64, f64) {
        (self.inner.spacing_az(), self.inner.spacing_tilt())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Steering direction `(azimuth, downtilt)` of beam `(m, n)`.
    fn steering_direction(&self, m: usize, n: usize) -> PyResult<(f64, f64)> {
        let id = BeamId::new(m, n);
        self.inner.check(&id).map_err(py_err)?;
        let d = self.inner.steering_direction(&id);
        Ok((d.azimuth, d.downtilt))
    }

    /// Nearest beam to a direction; returns `((m, n), clamped)`.
    fn nearest_beam(&self, azimuth: f64, downtilt: f64) -> ((usize, usize), bool) {
        let nb = self.inner.nearest_beam(&Direction::new(azimuth, downtilt));
        ((nb.id.m, nb.id.n), nb.clamped)
    }

    fn disabled_set(&self, head: (usize, usize), d0: f64) -> Vec<(usize, usize)> {
        avoidance::disabled_set(&self.inner, &BeamId::new(head.0, head.1), d0)
            .into_iter()
            .map(|b| (b.m, b.n))
            .collect()
    }

    /// Reselects the transmission beam; raises `ExposureLimitedError` when no beam is feasible.
    fn select_beam<'py>(
        &self,
        py: Python<'py>,
        initial: (usize, usize),
        head: (usize, usize),
        d0: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let d = avoidance::select_beam(
            &self.inner,
            &BeamId::new(initial.0, initial.1),
            &BeamId::new(head.0, head.1),
            d0,
        )
        .map_err(py_err)?;
        to_py(py, &d)
    }
}

#[pyfunction]
fn beam_distance(a: (usize, usize), b: (usize, usize)) -> f64 {
    codebook::beam_distance(&BeamId::new(a.0, a.1), &BeamId::new(b.0, b.1))
}

/// LOS pathloss in dB; `shadow` is a standard-normal deviate.
#[pyfunction]
#[pyo3(signature = (distance_m, carrier_freq_ghz = 28.0, shadow = None))]
fn pathloss_db(distance_m: f64, carrier_freq_ghz: f64, shadow: Option<f64>) -> PyResult<f64> {
    let params = ChannelParams {
        carrier_freq_ghz,
        ..ChannelParams::default()
    };
    Ok(channel::pathloss_los(&params, distance_m, shadow).map_err(py_err)?.db)
}

#[pyfunction]
#[pyo3(signature = (bandwidth_mhz = 100.0, noise_figure_db = 9.0))]
fn noise_power_dbm(bandwidth_mhz: f64, noise_figure_db: f64) -> PyResult<f64> {
    channel::noise_power(bandwidth_mhz, noise_figure_db).map_err(py_err)
}

/// Far-field power density in mW/cm².
#[pyfunction]
#[pyo3(signature = (tx_power_dbm, gain_db, range_m, ground_reflection = true))]
fn power_density(tx_power_dbm: f64, gain_db: f64, range_m: f64, ground_reflection: bool) -> PyResult<f64> {
    let params = ExposureParams {
        ground_reflection,
        ..ExposureParams::default()
    };
    exposure::power_density_from_gain(tx_power_dbm, gain_db, range_m, &params).map_err(py_err)
}

/// Scenario configuration; build from defaults, a TOML string or a file.
#[pyclass(name = "ScenarioConfig", module = "beamguard", from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(text) => config::parse_config(text, &PathBuf::from("<string>"))
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => ScenarioConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = config::load_config(&path).map_err(|e| match e {
            config::ConfigError::Io { .. } => PyOSError::new_err(e.to_string()),
            _ => PyValueError::new_err(e.to_string()),
        })?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        config::to_toml(&self.inner)
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn get_pose(&self) -> &'static str {
        match self.inner.pose {
            PoseKind::A => "A",
            PoseKind::B => "B",
        }
    }

    #[setter]
    fn set_pose(&mut self, pose: &str) -> PyResult<()> {
        self.inner.pose = pose.parse().map_err(py_err)?;
        Ok(())
    }

    #[getter]
    fn get_trials_per_point(&self) -> usize {
        self.inner.trials_per_point
    }

    #[setter]
    fn set_trials_per_point(&mut self, n: usize) {
        self.inner.trials_per_point = n;
    }

    #[getter]
    fn get_cv_enabled(&self) -> bool {
        self.inner.cv_enabled
    }

    #[setter]
    fn set_cv_enabled(&mut self, on: bool) {
        self.inner.cv_enabled = on;
    }

    /// Replaces the evaluation grid: x range, y range and step in metres.
    fn set_grid(&mut self, x: (f64, f64), y: (f64, f64), step: f64) {
        self.inner.grid = scenario::GridSpec {
            x: [x.0, x.1],
            y: [y.0, y.1],
            step,
        };
    }

    /// Uses a constant `d0` for every codebook.
    fn set_constant_d0(&mut self, d0: f64) {
        for cb in &mut self.inner.codebooks {
            cb.policy = Some(AvoidancePolicy::constant(d0));
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(seed={}, pose={}, trials_per_point={})",
            self.inner.seed,
            self.get_pose(),
            self.inner.trials_per_point
        )
    }
}

/// Aggregated results of one scenario run.
#[pyclass(name = "ScenarioResult", module = "beamguard")]
struct PyScenarioResult {
    cfg: ScenarioConfig,
    inner: ScenarioResult,
}

#[pymethods]
impl PyScenarioResult {
    #[getter]
    fn codebooks(&self) -> Vec<String> {
        self.inner.codebooks.iter().map(|c| c.label.clone()).collect()
    }

    /// Percentiles, trigger and mute rates per codebook plus the config echo.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &Summary::new(&self.cfg, &self.inner))
    }

    /// Sorted per-trial head exposure for `label` with avoidance on or off.
    fn exposure_samples(&self, label: &str, avoidance: bool) -> PyResult<Vec<f64>> {
        let cb = self.lookup(label)?;
        Ok(if avoidance {
            cb.exposure_on.clone()
        } else {
            cb.exposure_off.clone()
        })
    }

    /// Sorted SNR samples in dB; muted trials are excluded.
    fn snr_samples(&self, label: &str, avoidance: bool) -> PyResult<Vec<f64>> {
        let cb = self.lookup(label)?;
        Ok(if avoidance {
            cb.snr_on.clone()
        } else {
            cb.snr_off.clone()
        })
    }

    /// `(x, y, exposure_off, exposure_on)` for every grid cell.
    fn exposure_map(&self, label: &str) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        Ok(self
            .lookup(label)?
            .map
            .iter()
            .map(|c| (c.x, c.y, c.exposure_off, c.exposure_on))
            .collect())
    }

    /// Writes the CSV/JSON result files into `dir`; returns their names.
    fn write(&self, dir: PathBuf) -> PyResult<Vec<String>> {
        output::write_results(&dir, &self.cfg, &self.inner, Settings::BOTH)
            .map_err(|e| PyOSError::new_err(e.to_string()))
    }
}

impl PyScenarioResult {
    fn lookup(&self, label: &str) -> PyResult<&scenario::CodebookResult> {
        self.inner
            .codebook(label)
            .ok_or_else(|| PyValueError::new_err(format!("no codebook {label:?}")))
    }
}

/// Runs the Monte-Carlo scenario; the GIL is released while it runs.
#[pyfunction]
#[pyo3(signature = (config = None, workers = 0))]
fn run_scenario(py: Python<'_>, config: Option<PyScenarioConfig>, workers: usize) -> PyResult<PyScenarioResult> {
    let cfg = config.map(|c| c.inner).unwrap_or_default();
    let inner = py
        .detach(|| scenario::run_scenario_with_workers(&cfg, workers))
        .map_err(py_err)?;
    Ok(PyScenarioResult { cfg, inner })
}

/// Re-runs the scenario with constant `d0` values; one dict per codebook and value.
#[pyfunction]
fn sweep_d0<'py>(py: Python<'py>, config: PyScenarioConfig, d0_values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let rows = py
        .detach(|| scenario::sweep_d0(&config.inner, &d0_values))
        .map_err(py_err)?;
    to_py(py, &rows)
}

#[pymodule]
#[pyo3(name = "beamguard")]
fn beamguard_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", output::TOOL_VERSION)?;
    m.add("WORKING_LIMIT_MW_CM2", exposure::WORKING_LIMIT_MW_CM2)?;
    m.add("ExposureLimitedError", m.py().get_type::<ExposureLimitedError>())?;
    m.add("NearFieldError", m.py().get_type::<NearFieldError>())?;
    m.add_class::<PyArrayConfig>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyScenarioResult>()?;
    m.add_function(wrap_pyfunction!(beam_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pathloss_db, m)?)?;
    m.add_function(wrap_pyfunction!(noise_power_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(power_density, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_d0, m)?)?;
    Ok(())
}
