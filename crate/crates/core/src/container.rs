//! `ispds-1` dataset containers.
//!
//! A container is a directory with a UTF-8 `manifest.json` and one tensor
//! blob per array under `tensors/`. Blob layout (all integers little-endian):
//!
//! | bytes        | content                                        |
//! |--------------|------------------------------------------------|
//! | 0..4         | ASCII `ISPT`                                   |
//! | 4            | dtype: 1 = float32, 2 = complex64 (re, im f32) |
//! | 5            | rank                                           |
//! | 6..8         | reserved, zero                                 |
//! | 8..8+8·rank  | dims as u64                                    |
//! | rest         | row-major payload                              |
//!
//! Tensor roles per sample: `contrast` (required, `grid_n × grid_n`),
//! `scatter` (`n_rx × n_tx`), `bp` (`grid_n × grid_n`) and `total_field`
//! (`n_tx × grid_n²`).

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use faer::Mat;
use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::bp::BpImage;
use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::forward::ScatterMatrix;
use crate::grid::{ComplexGrid, ContrastMap};
use crate::quality::{category_histogram, Category, Provenance, SampleRecord};

pub const FORMAT_VERSION: &str = "ispds-1";
pub const TENSOR_MAGIC: &[u8; 4] = b"ISPT";
pub const MANIFEST_FILE: &str = "manifest.json";
const TENSOR_DIR: &str = "tensors";

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    C64(Vec<Complex<f32>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u64>,
    pub data: TensorData,
}

impl Tensor {
    pub fn dtype_code(&self) -> u8 {
        match self.data {
            TensorData::F32(_) => 1,
            TensorData::C64(_) => 2,
        }
    }

    fn element_count(dims: &[u64]) -> Option<u64> {
        dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TENSOR_MAGIC);
        out.push(self.dtype_code());
        out.push(self.dims.len() as u8);
        out.extend_from_slice(&[0, 0]);
        for &d in &self.dims {
            out.write_u64::<LittleEndian>(d).unwrap();
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.write_f32::<LittleEndian>(*x).unwrap()),
            TensorData::C64(v) => v.iter().for_each(|c| {
                out.write_f32::<LittleEndian>(c.re).unwrap();
                out.write_f32::<LittleEndian>(c.im).unwrap();
            }),
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Tensor> {
        let truncated = || Error::TruncatedFile { path: path.to_owned() };
        if bytes.len() < 4 {
            return Err(if TENSOR_MAGIC.starts_with(bytes) { truncated() } else { Error::BadMagic { path: path.to_owned() } });
        }
        if &bytes[..4] != TENSOR_MAGIC {
            return Err(Error::BadMagic { path: path.to_owned() });
        }
        if bytes.len() < 8 {
            return Err(truncated());
        }
        let (dtype, rank) = (bytes[4], bytes[5] as usize);
        if bytes[6] != 0 || bytes[7] != 0 {
            return Err(Error::CorruptContainer(format!("{}: reserved bytes not zero", path.display())));
        }
        let width = match dtype {
            1 => 4,
            2 => 8,
            code => return Err(Error::UnsupportedDtype { path: path.to_owned(), code }),
        };
        let mut cur = Cursor::new(&bytes[8..]);
        let dims = (0..rank)
            .map(|_| cur.read_u64::<LittleEndian>().map_err(|_| truncated()))
            .collect::<Result<Vec<u64>>>()?;
        let count = Self::element_count(&dims)
            .ok_or_else(|| Error::CorruptContainer(format!("{}: dims overflow", path.display())))?;
        let payload = &bytes[8 + 8 * rank..];
        let expected = count.checked_mul(width).ok_or_else(truncated)?;
        if (payload.len() as u64) < expected {
            return Err(truncated());
        }
        if payload.len() as u64 > expected {
            return Err(Error::CorruptContainer(format!("{}: trailing bytes", path.display())));
        }
        let mut cur = Cursor::new(payload);
        let count = count as usize;
        let data = if dtype == 1 {
            let mut v = vec![0f32; count];
            cur.read_f32_into::<LittleEndian>(&mut v).map_err(|_| truncated())?;
            TensorData::F32(v)
        } else {
            let mut flat = vec![0f32; 2 * count];
            cur.read_f32_into::<LittleEndian>(&mut flat).map_err(|_| truncated())?;
            TensorData::C64(flat.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect())
        };
        Ok(Tensor { dims, data })
    }

    pub fn read(path: &Path) -> Result<Tensor> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.encode())?;
        Ok(())
    }

    pub fn from_contrast(map: &ContrastMap) -> Tensor {
        let n = map.side() as u64;
        Tensor {
            dims: vec![n, n],
            data: TensorData::F32(map.values().iter().map(|&v| v as f32).collect()),
        }
    }

    pub fn from_complex_matrix(m: &Mat<Complex64>) -> Tensor {
        let values = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Complex::new(m[(i, j)].re as f32, m[(i, j)].im as f32))
            .collect();
        Tensor {
            dims: vec![m.nrows() as u64, m.ncols() as u64],
            data: TensorData::C64(values),
        }
    }

    pub fn from_complex_grid(g: &ComplexGrid) -> Tensor {
        let n = g.side() as u64;
        Tensor {
            dims: vec![n, n],
            data: TensorData::C64(g.values().iter().map(|c| Complex::new(c.re as f32, c.im as f32)).collect()),
        }
    }

    fn expect_dims(&self, dims: &[u64], role: &str) -> Result<()> {
        if self.dims != dims {
            return Err(Error::CorruptContainer(format!(
                "{role} tensor has dims {:?}, expected {dims:?}",
                self.dims
            )));
        }
        Ok(())
    }

    fn real_values(&self, role: &str) -> Result<Vec<f64>> {
        match &self.data {
            TensorData::F32(v) => Ok(v.iter().map(|&x| x as f64).collect()),
            TensorData::C64(_) => Err(Error::CorruptContainer(format!("{role} tensor must be float32"))),
        }
    }

    fn complex_values(&self, role: &str) -> Result<Vec<Complex64>> {
        match &self.data {
            TensorData::C64(v) => Ok(v.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect()),
            TensorData::F32(_) => Err(Error::CorruptContainer(format!("{role} tensor must be complex64"))),
        }
    }

    pub fn to_contrast(&self, grid_n: usize) -> Result<ContrastMap> {
        self.expect_dims(&[grid_n as u64, grid_n as u64], "contrast")?;
        ContrastMap::from_values(grid_n, self.real_values("contrast")?)
    }

    pub fn to_complex_matrix(&self, rows: usize, cols: usize, role: &str) -> Result<Mat<Complex64>> {
        self.expect_dims(&[rows as u64, cols as u64], role)?;
        let v = self.complex_values(role)?;
        Ok(Mat::from_fn(rows, cols, |i, j| v[i * cols + j]))
    }

    pub fn to_complex_grid(&self, grid_n: usize, role: &str) -> Result<ComplexGrid> {
        self.expect_dims(&[grid_n as u64, grid_n as u64], role)?;
        ComplexGrid::new(grid_n, self.complex_values(role)?)
    }
}

/// JSON cannot carry ±∞ or NaN; they are written as `"inf"`, `"-inf"`, `null`.
mod json_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_none()
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(()),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None | Some(Repr::Null(())) => Ok(f64::NAN),
            Some(Repr::Num(v)) => Ok(v),
            Some(Repr::Text(t)) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    #[serde(with = "json_float")]
    pub q_bp: f64,
    pub category: Category,
    #[serde(with = "json_float")]
    pub snr_db: f64,
    pub provenance: Provenance,
    #[serde(default)]
    pub eps_r: Vec<f64>,
    #[serde(with = "json_float", default = "nan")]
    pub alpha: f64,
    /// Tensor role → path relative to the container directory.
    pub tensors: BTreeMap<String, String>,
}

fn nan() -> f64 {
    f64::NAN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub physics: PhysicsConfig,
    pub sample_count: usize,
    pub category_histogram: BTreeMap<String, usize>,
    #[serde(default)]
    pub attributes: serde_json::Map<String, serde_json::Value>,
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub physics: PhysicsConfig,
    /// Free-form run metadata (recipe, seeds, curation mode).
    pub attributes: serde_json::Map<String, serde_json::Value>,
    pub samples: Vec<SampleRecord>,
}

impl Dataset {
    pub fn new(physics: PhysicsConfig, samples: Vec<SampleRecord>) -> Self {
        Dataset {
            physics,
            attributes: serde_json::Map::new(),
            samples,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            physics: self.physics.clone(),
            attributes: self.attributes.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn find(&self, id: &str) -> Option<&SampleRecord> {
        self.samples.iter().find(|s| s.id == id)
    }
}

fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::CorruptContainer(format!("sample id {id:?} is not a safe file stem")))
    }
}

fn histogram_map(samples: &[SampleRecord]) -> BTreeMap<String, usize> {
    let h = category_histogram(samples);
    [Category::Excellent, Category::Good, Category::Fair, Category::Poor, Category::Unassigned]
        .into_iter()
        .map(|c| (c.as_str().to_string(), h[c as usize]))
        .collect()
}

pub fn write_container(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join(TENSOR_DIR))?;
    let mut entries = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        check_id(&s.id)?;
        let mut tensors = BTreeMap::new();
        let mut put = |role: &str, t: Tensor| -> Result<()> {
            let rel = format!("{TENSOR_DIR}/{}.{role}.ispt", s.id);
            t.write(&dir.join(&rel))?;
            tensors.insert(role.to_string(), rel);
            Ok(())
        };
        put("contrast", Tensor::from_contrast(&s.truth))?;
        if let Some(sc) = &s.scatter_noisy {
            put("scatter", Tensor::from_complex_matrix(&sc.values))?;
        }
        if let Some(bp) = &s.bp {
            put("bp", Tensor::from_complex_grid(&bp.image))?;
        }
        if let Some(total) = &s.total_field {
            put("total_field", Tensor::from_complex_matrix(&total.transpose().to_owned()))?;
        }
        entries.push(SampleEntry {
            id: s.id.clone(),
            q_bp: s.q_bp,
            category: s.category,
            snr_db: s.snr_db,
            provenance: s.provenance.clone(),
            eps_r: s.eps_r.clone(),
            alpha: s.alpha,
            tensors,
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION.to_string(),
        physics: dataset.physics.clone(),
        sample_count: entries.len(),
        category_histogram: histogram_map(&dataset.samples),
        attributes: dataset.attributes.clone(),
        samples: entries,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let text = fs::read_to_string(dir.as_ref().join(MANIFEST_FILE))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_str())
        .unwrap_or("<missing>");
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let manifest: Manifest = serde_json::from_value(value)?;
    manifest.physics.validate()?;
    if manifest.sample_count != manifest.samples.len() {
        return Err(Error::CorruptContainer(format!(
            "manifest declares {} samples but lists {}",
            manifest.sample_count,
            manifest.samples.len()
        )));
    }
    Ok(manifest)
}

pub fn read_container(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let cfg = &manifest.physics;
    let n = cfg.grid_n;
    let load = |entry: &SampleEntry, role: &str| -> Result<Option<Tensor>> {
        match entry.tensors.get(role) {
            None => Ok(None),
            Some(rel) => {
                let path: PathBuf = dir.join(rel);
                Tensor::read(&path).map(Some)
            }
        }
    };
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for e in &manifest.samples {
        check_id(&e.id)?;
        let truth = load(e, "contrast")?
            .ok_or_else(|| Error::CorruptContainer(format!("sample {} has no contrast tensor", e.id)))?
            .to_contrast(n)?;
        let scatter_noisy = load(e, "scatter")?
            .map(|t| t.to_complex_matrix(cfg.n_rx, cfg.n_tx, "scatter"))
            .transpose()?
            .map(|values| ScatterMatrix { values });
        let bp = load(e, "bp")?
            .map(|t| t.to_complex_grid(n, "bp"))
            .transpose()?
            .map(|image| BpImage {
                image,
                degenerate_pixels: Vec::new(),
            });
        let total_field = load(e, "total_field")?
            .map(|t| t.to_complex_matrix(cfg.n_tx, n * n, "total_field"))
            .transpose()?
            .map(|m| m.transpose().to_owned());
        samples.push(SampleRecord {
            id: e.id.clone(),
            truth,
            scatter_noisy,
            bp,
            q_bp: e.q_bp,
            category: e.category,
            snr_db: e.snr_db,
            provenance: e.provenance.clone(),
            eps_r: e.eps_r.clone(),
            alpha: e.alpha,
            total_field,
        });
    }
    Ok(Dataset {
        physics: manifest.physics,
        attributes: manifest.attributes,
        samples,
    })
}
