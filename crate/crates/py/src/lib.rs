//! Python module `ispforge`.
//!
//! Grids cross the boundary as nested lists (`list[list[float]]`, row
//! major). Library errors raise `ispforge.IspforgeError`, whose second
//! argument is the CLI exit code for the error class.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIndexError, PyValueError};
use pyo3::prelude::*;

use ispforge::generators::{EpsRange, GlyphSource, SyntheticDigits};
use ispforge::idx::read_idx_images;
use ispforge::quality::{categorize, compose, compose_uniform, quality_ratio, Provenance, SampleRecord, QBP_PROPORTIONS};
use ispforge::{ContrastMap, GeneratorKind, PipelineOptions, RealGrid, SsimParams};

create_exception!(ispforge, IspforgeError, PyException);

fn err(e: ispforge::Error) -> PyErr {
    IspforgeError::new_err((e.to_string(), e.exit_code()))
}

fn to_grid(rows: Vec<Vec<f64>>) -> PyResult<RealGrid> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(format!("expected a square {n}x{n} grid")));
    }
    RealGrid::new(n, rows.into_iter().flatten().collect()).map_err(err)
}

type Rows = Vec<Vec<f64>>;

fn to_rows(grid: &RealGrid) -> Rows {
    grid.values().chunks(grid.side().max(1)).map(<[f64]>::to_vec).collect()
}

#[pyclass(name = "PhysicsConfig", module = "ispforge", from_py_object)]
#[derive(Clone)]
struct PyPhysicsConfig {
    inner: ispforge::PhysicsConfig,
}

#[pymethods]
impl PyPhysicsConfig {
    /// Unset lengths follow the wavelength, as in JSON config files.
    #[new]
    #[pyo3(signature = (*, wavelength=None, doi_side=None, grid_n=None, n_tx=None, n_rx=None, array_radius=None, background_permittivity=None, rng_seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        wavelength: Option<f64>,
        doi_side: Option<f64>,
        grid_n: Option<usize>,
        n_tx: Option<usize>,
        n_rx: Option<usize>,
        array_radius: Option<f64>,
        background_permittivity: Option<f64>,
        rng_seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut map = serde_json::Map::new();
        let mut put = |k: &str, v: Option<serde_json::Value>| {
            if let Some(v) = v {
                map.insert(k.into(), v);
            }
        };
        put("wavelength", wavelength.map(Into::into));
        put("doi_side", doi_side.map(Into::into));
        put("grid_n", grid_n.map(Into::into));
        put("n_tx", n_tx.map(Into::into));
        put("n_rx", n_rx.map(Into::into));
        put("array_radius", array_radius.map(Into::into));
        put("background_permittivity", background_permittivity.map(Into::into));
        put("rng_seed", rng_seed.map(Into::into));
        let json = serde_json::Value::Object(map).to_string();
        Ok(PyPhysicsConfig {
            inner: ispforge::PhysicsConfig::from_json_str(&json).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPhysicsConfig {
            inner: ispforge::PhysicsConfig::from_json_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength
    }

    #[getter]
    fn doi_side(&self) -> f64 {
        self.inner.doi_side
    }

    #[getter]
    fn grid_n(&self) -> usize {
        self.inner.grid_n
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.inner.n_tx
    }

    #[getter]
    fn n_rx(&self) -> usize {
        self.inner.n_rx
    }

    #[getter]
    fn array_radius(&self) -> f64 {
        self.inner.array_radius
    }

    fn k0(&self) -> f64 {
        self.inner.k0()
    }

    fn cell_side(&self) -> f64 {
        self.inner.cell_side()
    }

    fn __repr__(&self) -> String {
        format!("PhysicsConfig({})", self.to_json())
    }
}

#[pyclass(name = "Sample", module = "ispforge", frozen, from_py_object)]
#[derive(Clone)]
struct PySample {
    inner: SampleRecord,
}

#[pymethods]
impl PySample {
    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn q_bp(&self) -> f64 {
        self.inner.q_bp
    }

    #[getter]
    fn category(&self) -> &'static str {
        self.inner.category.as_str()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[getter]
    fn eps_r(&self) -> Vec<f64> {
        self.inner.eps_r.clone()
    }

    #[getter]
    fn generator(&self) -> &str {
        &self.inner.provenance.generator
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.provenance.seed
    }

    /// True contrast map.
    #[getter]
    fn truth(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.truth.grid())
    }

    /// `(real, imag)` of the BP image, or `None`.
    #[getter]
    fn bp(&self) -> Option<(Rows, Rows)> {
        self.inner
            .bp
            .as_ref()
            .map(|bp| (to_rows(&bp.image.real()), to_rows(&bp.image.imag())))
    }

    /// BP image as scored: real part clamped at zero.
    #[getter]
    fn bp_scored(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.bp.as_ref().map(|bp| to_rows(bp.scored().grid()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Sample(id={:?}, q_bp={}, category={:?})",
            self.inner.id,
            self.inner.q_bp,
            self.inner.category.as_str()
        )
    }
}

#[pyclass(name = "Dataset", module = "ispforge", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: ispforge::Dataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn physics(&self) -> PyPhysicsConfig {
        PyPhysicsConfig {
            inner: self.inner.physics.clone(),
        }
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.samples.iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn samples(&self) -> Vec<PySample> {
        self.inner.samples.iter().map(|s| PySample { inner: s.clone() }).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn __getitem__(&self, index: isize) -> PyResult<PySample> {
        let n = self.inner.samples.len() as isize;
        let i = if index < 0 { index + n } else { index };
        if !(0..n).contains(&i) {
            return Err(PyIndexError::new_err("sample index out of range"));
        }
        Ok(PySample {
            inner: self.inner.samples[i as usize].clone(),
        })
    }

    /// Rank by Q_BP and draw `n` samples; `mode` is `"qbp"` or `"uniform"`.
    #[pyo3(signature = (n, mode="qbp", seed=0))]
    fn curate(&self, n: usize, mode: &str, seed: u64) -> PyResult<PyDataset> {
        let mut ranked = self.inner.clone();
        categorize(&mut ranked.samples).map_err(err)?;
        let picked = match mode {
            "qbp" => compose(&ranked.samples, n, QBP_PROPORTIONS, seed),
            "uniform" => compose_uniform(&ranked.samples, n, seed),
            other => return Err(PyValueError::new_err(format!("unknown curation mode {other:?}"))),
        }
        .map_err(err)?;
        Ok(PyDataset {
            inner: ranked.subset(&picked),
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        ispforge::write_container(&self.inner, path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Dataset(samples={}, grid_n={})", self.inner.samples.len(), self.inner.physics.grid_n)
    }
}

#[pyclass(name = "Simulator", module = "ispforge", frozen)]
struct PySimulator {
    inner: ispforge::Simulator,
}

fn options(snr_db: Option<f64>, workers: usize, export_fields: bool) -> PipelineOptions {
    PipelineOptions {
        snr_db: snr_db.unwrap_or(f64::INFINITY),
        workers: workers.max(1),
        export_fields,
    }
}

#[pymethods]
impl PySimulator {
    /// Assembles the operators once; reuse the simulator across samples.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(py: Python<'_>, config: Option<PyPhysicsConfig>) -> PyResult<Self> {
        let cfg = config.map(|c| c.inner).unwrap_or_default();
        let inner = py.detach(|| ispforge::Simulator::new(cfg)).map_err(err)?;
        Ok(PySimulator { inner })
    }

    #[getter]
    fn config(&self) -> PyPhysicsConfig {
        PyPhysicsConfig {
            inner: self.inner.cfg.clone(),
        }
    }

    /// `generator` is one of digit, polygon, overlap, austria.
    #[pyo3(signature = (generator, n, seed=0, *, snr_db=None, workers=1, export_fields=false, eps_min=1.0, eps_max=5.0, mnist=None))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        &self,
        py: Python<'_>,
        generator: &str,
        n: usize,
        seed: u64,
        snr_db: Option<f64>,
        workers: usize,
        export_fields: bool,
        eps_min: f64,
        eps_max: f64,
        mnist: Option<String>,
    ) -> PyResult<PyDataset> {
        let eps = EpsRange::new(eps_min, eps_max).map_err(err)?;
        let kind = match generator {
            "digit" => {
                let source: Arc<dyn GlyphSource> = match mnist {
                    Some(path) => Arc::new(read_idx_images(path).map_err(err)?),
                    None => Arc::new(SyntheticDigits::default()),
                };
                GeneratorKind::Digit { source, eps }
            }
            "polygon" => GeneratorKind::Polygon { eps },
            "overlap" => GeneratorKind::Overlap { eps },
            "austria" => GeneratorKind::Austria {
                eps_circles: (2.0, 2.0),
                eps_annulus: 3.0,
            },
            other => return Err(PyValueError::new_err(format!("unknown generator {other:?}"))),
        };
        let opts = options(snr_db, workers, export_fields);
        let inner = py
            .detach(|| self.inner.generate(&kind, n, seed, &opts))
            .map_err(err)?;
        Ok(PyDataset { inner })
    }

    /// Runs one user-supplied contrast map through the pipeline.
    #[pyo3(signature = (truth, *, id="sample".to_string(), seed=0, snr_db=None, eps_r=Vec::new()))]
    fn simulate(
        &self,
        py: Python<'_>,
        truth: Vec<Vec<f64>>,
        id: String,
        seed: u64,
        snr_db: Option<f64>,
        eps_r: Vec<f64>,
    ) -> PyResult<PySample> {
        let truth = ContrastMap::new(to_grid(truth)?).map_err(err)?;
        let provenance = Provenance {
            generator: "external".into(),
            seed,
        };
        let opts = options(snr_db, 1, false);
        let inner = py
            .detach(|| self.inner.simulate(id, truth, eps_r, provenance, &opts))
            .map_err(err)?;
        Ok(PySample { inner })
    }
}

#[pyfunction]
fn rmse(pred: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<f64> {
    ispforge::rmse(&to_grid(pred)?, &to_grid(truth)?).map_err(err)
}

#[pyfunction]
fn ssim(pred: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<f64> {
    ispforge::ssim(&to_grid(pred)?, &to_grid(truth)?, &SsimParams::default()).map_err(err)
}

#[pyfunction]
fn tv(map: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(ispforge::tv(&to_grid(map)?))
}

/// Q_BP of an already clamped image: SSIM / RMSE, `inf` on a perfect match.
#[pyfunction]
fn quality_factor(scored: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<f64> {
    let (p, t) = (to_grid(scored)?, to_grid(truth)?);
    let e = ispforge::rmse(&p, &t).map_err(err)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(quality_ratio(ispforge::ssim(&p, &t, &SsimParams::default()).map_err(err)?, e))
}

#[pyfunction]
fn read_container(path: &str) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: ispforge::read_container(path).map_err(err)?,
    })
}

#[pymodule]
#[pyo3(name = "ispforge")]
fn ispforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IspforgeError", m.py().get_type::<IspforgeError>())?;
    m.add("FORMAT_VERSION", ispforge::container::FORMAT_VERSION)?;
    m.add_class::<PyPhysicsConfig>()?;
    m.add_class::<PySimulator>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(tv, m)?)?;
    m.add_function(wrap_pyfunction!(quality_factor, m)?)?;
    m.add_function(wrap_pyfunction!(read_container, m)?)?;
    Ok(())
}
