//! Python bindings: the filter and limiter building blocks, the vehicle
//! model step and the scenario runner.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use scooter_guard::dynamics::{
    integrate_step as core_integrate_step, PhysicalParams, VehicleState,
};
use scooter_guard::filter::{self, FilterConfig};
use scooter_guard::safety::SafetyConfig;
use scooter_guard::scenario::{self, Scenario, TraceRecord};

fn value_err(e: scooter_guard::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Smoothing factor of an exponential filter with time constant `time_constant`.
#[pyfunction]
fn alpha_from_time_constant(time_constant: f64, dt: f64) -> PyResult<f64> {
    filter::alpha_from_time_constant(time_constant, dt).map_err(value_err)
}

#[pyfunction]
fn time_constant_from_alpha(alpha: f64, dt: f64) -> PyResult<f64> {
    filter::time_constant_from_alpha(alpha, dt).map_err(value_err)
}

#[pyfunction]
fn critical_distance(center: f64, left: f64, right: f64) -> f64 {
    filter::critical_distance(center, left, right)
}

/// Centred moving average, truncated at the ends.
#[pyfunction]
fn moving_average(series: Vec<f64>, window: usize) -> PyResult<Vec<f64>> {
    scenario::moving_average(&series, window).map_err(value_err)
}

/// Velocity limiter with a linear ramp between the stop and max distances.
#[pyclass(name = "SafetyConfig", module = "scooter_guard")]
struct PySafetyConfig {
    inner: SafetyConfig,
}

#[pymethods]
impl PySafetyConfig {
    #[new]
    #[pyo3(signature = (stop_distance=0.5, max_distance=2.0, block_reverse_inside_stop=false))]
    fn new(
        stop_distance: f64,
        max_distance: f64,
        block_reverse_inside_stop: bool,
    ) -> PyResult<Self> {
        let inner = SafetyConfig {
            stop_distance,
            max_distance,
            block_reverse_inside_stop,
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn stop_distance(&self) -> f64 {
        self.inner.stop_distance
    }

    #[getter]
    fn max_distance(&self) -> f64 {
        self.inner.max_distance
    }

    fn beta(&self, critical: f64) -> PyResult<f64> {
        scooter_guard::safety::beta_safe(critical, &self.inner).map_err(value_err)
    }

    fn safe_velocity(&self, v_cmd: f64, critical: f64) -> f64 {
        self.inner.safe_velocity(v_cmd, critical)
    }

    fn __repr__(&self) -> String {
        format!(
            "SafetyConfig(stop_distance={}, max_distance={}, block_reverse_inside_stop={})",
            self.inner.stop_distance,
            self.inner.max_distance,
            if self.inner.block_reverse_inside_stop {
                "True"
            } else {
                "False"
            }
        )
    }
}

/// One sensor's asymmetric smoothing filter with memory-min preprocessing.
#[pyclass(name = "DistanceFilter", module = "scooter_guard")]
struct PyDistanceFilter {
    inner: filter::DistanceFilter,
}

#[pymethods]
impl PyDistanceFilter {
    #[new]
    #[pyo3(signature = (rise_time_constant=0.79, fall_time_constant=0.03, memory_len=10, dt=0.02, initial=0.0))]
    fn new(
        rise_time_constant: f64,
        fall_time_constant: f64,
        memory_len: usize,
        dt: f64,
        initial: f64,
    ) -> PyResult<Self> {
        let cfg = FilterConfig {
            rise_time_constant,
            fall_time_constant,
            memory_len,
            dt,
        };
        let inner = filter::DistanceFilter::with_initial(&cfg, initial).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn step(&mut self, measured: f64) -> PyResult<f64> {
        self.inner.step(measured).map_err(value_err)
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value()
    }
}

#[pyclass(
    name = "PhysicalParams",
    module = "scooter_guard",
    get_all,
    set_all,
    skip_from_py_object
)]
#[derive(Clone, Copy)]
struct PyPhysicalParams {
    mass: f64,
    com_height: f64,
    gravity: f64,
    roll_inertia: f64,
    wheel_inertia: f64,
    wheelbase: f64,
    v_max: f64,
    steering_max: f64,
    wheel_rate_max: f64,
    torque_max: f64,
}

impl From<PhysicalParams> for PyPhysicalParams {
    fn from(p: PhysicalParams) -> Self {
        Self {
            mass: p.mass,
            com_height: p.com_height,
            gravity: p.gravity,
            roll_inertia: p.roll_inertia,
            wheel_inertia: p.wheel_inertia,
            wheelbase: p.wheelbase,
            v_max: p.v_max,
            steering_max: p.steering_max,
            wheel_rate_max: p.wheel_rate_max,
            torque_max: p.torque_max,
        }
    }
}

impl From<PyPhysicalParams> for PhysicalParams {
    fn from(p: PyPhysicalParams) -> Self {
        Self {
            mass: p.mass,
            com_height: p.com_height,
            gravity: p.gravity,
            roll_inertia: p.roll_inertia,
            wheel_inertia: p.wheel_inertia,
            wheelbase: p.wheelbase,
            v_max: p.v_max,
            steering_max: p.steering_max,
            wheel_rate_max: p.wheel_rate_max,
            torque_max: p.torque_max,
        }
    }
}

#[pymethods]
impl PyPhysicalParams {
    #[new]
    fn new() -> Self {
        PhysicalParams::default().into()
    }
}

/// Vehicle state; `x`, `y` is the front contact point.
#[pyclass(
    name = "VehicleState",
    module = "scooter_guard",
    get_all,
    set_all,
    skip_from_py_object
)]
#[derive(Clone, Copy)]
struct PyVehicleState {
    x: f64,
    y: f64,
    yaw: f64,
    speed: f64,
    steering: f64,
    roll: f64,
    roll_rate: f64,
    wheel_rate: f64,
    wheel_angle: f64,
}

impl From<VehicleState> for PyVehicleState {
    fn from(s: VehicleState) -> Self {
        Self {
            x: s.x,
            y: s.y,
            yaw: s.yaw,
            speed: s.speed,
            steering: s.steering,
            roll: s.roll,
            roll_rate: s.roll_rate,
            wheel_rate: s.wheel_rate,
            wheel_angle: s.wheel_angle,
        }
    }
}

impl From<PyVehicleState> for VehicleState {
    fn from(s: PyVehicleState) -> Self {
        Self {
            x: s.x,
            y: s.y,
            yaw: s.yaw,
            speed: s.speed,
            steering: s.steering,
            roll: s.roll,
            roll_rate: s.roll_rate,
            wheel_rate: s.wheel_rate,
            wheel_angle: s.wheel_angle,
        }
    }
}

#[pymethods]
impl PyVehicleState {
    #[new]
    #[pyo3(signature = (x=0.0, y=0.0, yaw=0.0, speed=0.0, steering=0.0, roll=0.0, roll_rate=0.0, wheel_rate=0.0, wheel_angle=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        x: f64,
        y: f64,
        yaw: f64,
        speed: f64,
        steering: f64,
        roll: f64,
        roll_rate: f64,
        wheel_rate: f64,
        wheel_angle: f64,
    ) -> Self {
        Self {
            x,
            y,
            yaw,
            speed,
            steering,
            roll,
            roll_rate,
            wheel_rate,
            wheel_angle,
        }
    }

    /// Rear contact point `(x, y)`.
    #[pyo3(signature = (wheelbase=0.9))]
    fn rear_axle(&self, wheelbase: f64) -> (f64, f64) {
        VehicleState::from(*self).rear_axle(wheelbase)
    }

    fn __repr__(&self) -> String {
        format!(
            "VehicleState(x={}, y={}, yaw={}, speed={}, steering={}, roll={})",
            self.x, self.y, self.yaw, self.speed, self.steering, self.roll
        )
    }
}

/// One RK4 step of the vehicle model with the given reaction-wheel torque.
#[pyfunction]
#[pyo3(signature = (state, torque, dt=0.001, params=None))]
fn integrate_step(
    state: PyRef<'_, PyVehicleState>,
    torque: f64,
    dt: f64,
    params: Option<PyRef<'_, PyPhysicalParams>>,
) -> PyResult<PyVehicleState> {
    let params = params.map_or_else(PhysicalParams::default, |p| (*p).into());
    core_integrate_step(&(*state).into(), torque, &params, dt)
        .map(Into::into)
        .map_err(value_err)
}

#[pyfunction]
fn builtin_scenarios() -> Vec<&'static str> {
    scenario::BUILTIN_NAMES.to_vec()
}

/// A complete simulation setup. Build one from a built-in name or JSON.
#[pyclass(name = "Scenario", module = "scooter_guard")]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        scenario::builtin(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyKeyError::new_err(format!("unknown scenario {name:?}")))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Scenario::from_json(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// Copy with `key=value` overrides applied (dotted keys, JSON values).
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        self.inner
            .with_overrides(&overrides)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[pyo3(signature = (seed=None))]
    fn run(&self, py: Python<'_>, seed: Option<u64>) -> PyResult<PyRunResult> {
        let mut s = self.inner.clone();
        if let Some(seed) = seed {
            s.fault.seed = seed;
        }
        let out = py.detach(|| scenario::run(&s)).map_err(value_err)?;
        Ok(PyRunResult {
            failure: out.failure.as_ref().map(ToString::to_string),
            csv: out.trace.to_csv_string().map_err(value_err)?,
            metrics: out.metrics,
            records: out.trace.records,
        })
    }
}

#[pyclass(name = "RunResult", module = "scooter_guard")]
struct PyRunResult {
    records: Vec<TraceRecord>,
    metrics: scenario::RunMetrics,
    failure: Option<String>,
    csv: String,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn collided(&self) -> bool {
        self.metrics.collided
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.failure.clone()
    }

    /// Run metrics as a dict.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = &self.metrics;
        let d = PyDict::new(py);
        d.set_item("min_true_distance", m.min_true_distance)?;
        d.set_item("standstill_distance", m.standstill_distance)?;
        d.set_item("time_to_stop", m.time_to_stop)?;
        d.set_item("recovery_time", m.recovery_time)?;
        d.set_item("stop_times", m.stop_times.clone())?;
        d.set_item("collided", m.collided)?;
        d.set_item("control_ticks", m.control_ticks)?;
        Ok(d)
    }

    /// One trace column by CSV header name, e.g. `"v_safe"` or `"d_filt_l"`.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let pick: fn(&TraceRecord) -> f64 = match name {
            "t" => |r| r.t,
            "x" => |r| r.x,
            "y" => |r| r.y,
            "yaw" => |r| r.yaw,
            "speed" => |r| r.speed,
            "steering" => |r| r.steering,
            "roll" => |r| r.roll,
            "d_meas_c" => |r| r.d_meas[0],
            "d_meas_l" => |r| r.d_meas[1],
            "d_meas_r" => |r| r.d_meas[2],
            "d_filt_c" => |r| r.d_filt[0],
            "d_filt_l" => |r| r.d_filt[1],
            "d_filt_r" => |r| r.d_filt[2],
            "d_crit" => |r| r.d_crit,
            "v_cmd" => |r| r.v_cmd,
            "steering_cmd" => |r| r.steering_cmd,
            "v_safe" => |r| r.v_safe,
            "true_min_distance" => |r| r.true_min_distance,
            _ => return Err(PyKeyError::new_err(format!("unknown column {name:?}"))),
        };
        Ok(self.records.iter().map(pick).collect())
    }

    fn to_csv(&self) -> String {
        self.csv.clone()
    }

    fn __len__(&self) -> usize {
        self.records.len()
    }
}

#[pymodule]
#[pyo3(name = "scooter_guard")]
fn scooter_guard_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(alpha_from_time_constant, m)?)?;
    m.add_function(wrap_pyfunction!(time_constant_from_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(critical_distance, m)?)?;
    m.add_function(wrap_pyfunction!(moving_average, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_step, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add_class::<PySafetyConfig>()?;
    m.add_class::<PyDistanceFilter>()?;
    m.add_class::<PyPhysicalParams>()?;
    m.add_class::<PyVehicleState>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunResult>()?;
    Ok(())
}
