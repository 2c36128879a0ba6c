//! Subcommands of the `ispforge` binary.
//!
//! Every command reads and writes ispds-1 containers and returns
//! [`ispforge::Error`] so that `main` can map failures to exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ispforge::generators::{EpsRange, GlyphSource, SyntheticDigits};
use ispforge::idx::read_idx_images;
use ispforge::metrics::{loss_eval, rmse, ssim, LossBreakdown, SsimParams};
use ispforge::quality::{categorize, category_histogram, compose, compose_uniform, QBP_PROPORTIONS};
use ispforge::{
    read_container, write_container, Dataset, Error, FieldSet, GeneratorKind, PhysicsConfig, PipelineOptions,
    RealGrid, Result, Simulator,
};

pub const HISTOGRAM_BIN: f64 = 0.05;
pub const METRICS_FILE: &str = "metrics.csv";
pub const LOSSES_FILE: &str = "losses.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "ispforge", version, about = "Inverse-scattering dataset forge")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset: profile, forward solve, noise, BP image, Q_BP.
    Generate(GenerateArgs),
    /// Rank a container by Q_BP and draw a training subset.
    Curate(CurateArgs),
    /// Score predictions (or the stored BP images) against ground truth.
    Evaluate(EvaluateArgs),
    /// Write contrast maps and BP magnitudes as 8-bit PGM images.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorName {
    Digit,
    Polygon,
    Overlap,
    Austria,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurationMode {
    Qbp,
    Uniform,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Physics configuration (JSON); defaults are used for missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Noise level; omit for clean data.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long, value_enum, default_value_t = GeneratorName::Digit)]
    pub generator: GeneratorName,
    /// MNIST-style IDX image file; a built-in glyph set is used otherwise.
    #[arg(long)]
    pub mnist: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub eps_max: f64,
    /// Permittivities of the two circles and the annulus.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [2.0, 2.0, 3.0])]
    pub austria_eps: Vec<f64>,
    /// Store clean total fields, needed by `evaluate --beta`.
    #[arg(long)]
    pub export_fields: bool,
    #[arg(long, env = "ISPFORGE_WORKERS", default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = CurationMode::Qbp)]
    pub mode: CurationMode,
    /// Size of the curated set.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth container.
    #[arg(long, alias = "input")]
    pub truth: PathBuf,
    /// Prediction container; the clamped BP images of `--truth` otherwise.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Output directory for metrics.csv and summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Also evaluate the training loss with this TV weight.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample ids to render; all samples by default.
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
    /// Value mapped to white.
    #[arg(long, default_value_t = 4.0)]
    pub max: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Curate(a) => curate(&a),
        Command::Evaluate(a) => evaluate(&a).map(|_| ()),
        Command::Render(a) => render(&a).map(|_| ()),
    }
}

fn load_config(path: Option<&Path>) -> Result<PhysicsConfig> {
    match path {
        Some(p) => PhysicsConfig::from_json_file(p),
        None => Ok(PhysicsConfig::default()),
    }
}

fn generator_kind(a: &GenerateArgs) -> Result<GeneratorKind> {
    let eps = EpsRange::new(a.eps_min, a.eps_max)?;
    Ok(match a.generator {
        GeneratorName::Digit => {
            let source: Arc<dyn GlyphSource> = match &a.mnist {
                Some(path) => Arc::new(read_idx_images(path)?),
                None => Arc::new(SyntheticDigits::default()),
            };
            GeneratorKind::Digit { source, eps }
        }
        GeneratorName::Polygon => GeneratorKind::Polygon { eps },
        GeneratorName::Overlap => GeneratorKind::Overlap { eps },
        GeneratorName::Austria => match a.austria_eps[..] {
            [c1, c2, annulus] => GeneratorKind::Austria {
                eps_circles: (c1, c2),
                eps_annulus: annulus,
            },
            _ => return Err(Error::InvalidConfig("--austria-eps takes three values".into())),
        },
    })
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    if a.n == 0 {
        return Err(Error::InvalidConfig("--n must be positive".into()));
    }
    let sim = Simulator::new(load_config(a.config.as_deref())?)?;
    let kind = generator_kind(a)?;
    let opts = PipelineOptions {
        snr_db: a.snr_db.unwrap_or(f64::INFINITY),
        workers: a.workers.max(1),
        export_fields: a.export_fields,
    };
    let dataset = sim.generate(&kind, a.n, a.seed, &opts)?;
    write_container(&dataset, &a.out)?;
    eprintln!("generate: {} {} samples -> {}", a.n, kind.name(), a.out.display());
    Ok(())
}

pub fn curate(a: &CurateArgs) -> Result<()> {
    let mut dataset = read_container(&a.input)?;
    categorize(&mut dataset.samples)?;
    let picked = match a.mode {
        CurationMode::Qbp => compose(&dataset.samples, a.n, QBP_PROPORTIONS, a.seed)?,
        CurationMode::Uniform => compose_uniform(&dataset.samples, a.n, a.seed)?,
    };
    let mut curated = dataset.subset(&picked);
    let mode = match a.mode {
        CurationMode::Qbp => "qbp",
        CurationMode::Uniform => "uniform",
    };
    curated.attributes.insert("curation".into(), mode.into());
    curated.attributes.insert("curation_seed".into(), a.seed.into());
    curated.attributes.insert("source_count".into(), dataset.samples.len().into());
    write_container(&curated, &a.out)?;
    eprintln!(
        "curate: {mode} {} of {} -> {} {:?}",
        a.n,
        dataset.samples.len(),
        a.out.display(),
        &category_histogram(&curated.samples)[..4]
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub id: String,
    pub rmse: f64,
    pub ssim: f64,
    #[serde(serialize_with = "finite_or_text")]
    pub q_bp: f64,
}

fn finite_or_text<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Fixed-width histogram starting at a multiple of the bin width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub start: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bin_width: f64) -> Histogram {
        let bins: Vec<i64> = values
            .iter()
            .filter(|v| v.is_finite())
            .map(|v| (v / bin_width + 1e-9).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else {
            return Histogram { bin_width, start: 0.0, counts: Vec::new() };
        };
        let mut counts = vec![0; (hi - lo + 1) as usize];
        for b in bins {
            counts[(b - lo) as usize] += 1;
        }
        Histogram {
            bin_width,
            start: lo as f64 * bin_width,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSummary {
    pub beta: f64,
    pub contrast: f64,
    pub ssim_term: f64,
    pub weighted_field: f64,
    pub tv: f64,
    pub mix_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    /// `"bp"` when the stored BP images were scored.
    pub prediction: String,
    pub mean_rmse: f64,
    pub mean_ssim: f64,
    pub rmse_histogram: Histogram,
    pub ssim_histogram: Histogram,
    pub category_histogram: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Summary> {
    let truth = read_container(&a.truth)?;
    let pred = a.pred.as_ref().map(read_container).transpose()?;
    if let Some(beta) = a.beta {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::BetaOutOfRange(beta));
        }
    }
    let predictions: Vec<(String, RealGrid)> = match &pred {
        Some(p) => p
            .samples
            .iter()
            .map(|s| (s.id.clone(), s.truth.grid().clone()))
            .collect(),
        None => truth
            .samples
            .iter()
            .map(|s| {
                s.bp.as_ref()
                    .map(|bp| (s.id.clone(), bp.scored().into_grid()))
                    .ok_or_else(|| Error::CorruptContainer(format!("sample {} has no BP image", s.id)))
            })
            .collect::<Result<_>>()?,
    };

    let params = SsimParams::default();
    let sim = a.beta.map(|_| Simulator::new(truth.physics.clone())).transpose()?;
    let mut rows = Vec::with_capacity(predictions.len());
    let mut losses: Vec<(String, LossBreakdown)> = Vec::new();
    for (id, p) in &predictions {
        let t = truth
            .find(id)
            .ok_or_else(|| Error::CorruptContainer(format!("prediction {id} has no ground truth")))?;
        rows.push(MetricRow {
            id: id.clone(),
            rmse: rmse(p, &t.truth)?,
            ssim: ssim(p, &t.truth, &params)?,
            q_bp: t.q_bp,
        });
        if let (Some(beta), Some(sim)) = (a.beta, &sim) {
            let fields = FieldSet {
                incident: sim.incident.incident.clone(),
                total: Some(t.total_field.clone().ok_or(Error::MissingFields)?),
                induced_current: None,
            };
            losses.push((id.clone(), loss_eval(p, &t.truth, &fields, &sim.ops, beta, &params)?));
        }
    }

    fs::create_dir_all(&a.out)?;
    let mut w = csv::Writer::from_path(a.out.join(METRICS_FILE)).map_err(std::io::Error::from)?;
    for r in &rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;

    let loss = match a.beta {
        Some(beta) => {
            let mut w = csv::Writer::from_path(a.out.join(LOSSES_FILE)).map_err(std::io::Error::from)?;
            w.write_record(["id", "contrast", "ssim_term", "weighted_field", "tv", "mix_total"])
                .map_err(std::io::Error::from)?;
            for (id, l) in &losses {
                let cells = [l.contrast, l.ssim_term, l.weighted_field(), l.tv, l.mix_total].map(|v| v.to_string());
                w.write_record(std::iter::once(id.clone()).chain(cells))
                    .map_err(std::io::Error::from)?;
            }
            w.flush()?;
            let m = |f: fn(&LossBreakdown) -> f64| mean(losses.iter().map(|(_, l)| f(l)));
            Some(LossSummary {
                beta,
                contrast: m(|l| l.contrast),
                ssim_term: m(|l| l.ssim_term),
                weighted_field: m(|l| l.weighted_field()),
                tv: m(|l| l.tv),
                mix_total: m(|l| l.mix_total),
            })
        }
        None => None,
    };

    let rmses: Vec<f64> = rows.iter().map(|r| r.rmse).collect();
    let ssims: Vec<f64> = rows.iter().map(|r| r.ssim).collect();
    let scored: Vec<_> = rows.iter().filter_map(|r| truth.find(&r.id).cloned()).collect();
    let h = category_histogram(&scored);
    let summary = Summary {
        count: rows.len(),
        prediction: if pred.is_some() { "container".into() } else { "bp".into() },
        mean_rmse: mean(rmses.iter().copied()),
        mean_ssim: mean(ssims.iter().copied()),
        rmse_histogram: Histogram::new(&rmses, HISTOGRAM_BIN),
        ssim_histogram: Histogram::new(&ssims, HISTOGRAM_BIN),
        category_histogram: ["excellent", "good", "fair", "poor", "unassigned"]
            .into_iter()
            .zip(h)
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        loss,
    };
    fs::write(a.out.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    eprintln!(
        "evaluate: {} samples, mean rmse {:.4}, mean ssim {:.4}",
        summary.count, summary.mean_rmse, summary.mean_ssim
    );
    Ok(summary)
}

/// 8-bit level of `v` on a `[0, max]` scale.
pub fn quantize(v: f64, max: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v / max * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM (P5), row 0 first.
pub fn pgm_bytes(grid: &RealGrid, max: f64) -> Vec<u8> {
    let n = grid.side();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(grid.values().iter().map(|&v| quantize(v, max)));
    out
}

/// Writes `<id>.contrast.pgm` and, when present, `<id>.bp.pgm`; returns the paths.
pub fn render(a: &RenderArgs) -> Result<Vec<PathBuf>> {
    if !(a.max.is_finite() && a.max > 0.0) {
        return Err(Error::InvalidConfig(format!("--max must be positive, got {}", a.max)));
    }
    let dataset: Dataset = read_container(&a.input)?;
    let selected: Vec<_> = if a.ids.is_empty() {
        dataset.samples.iter().collect()
    } else {
        a.ids
            .iter()
            .map(|id| {
                dataset
                    .find(id)
                    .ok_or_else(|| Error::CorruptContainer(format!("no sample with id {id}")))
            })
            .collect::<Result<_>>()?
    };
    fs::create_dir_all(&a.out)?;
    let mut written = Vec::new();
    for s in selected {
        let path = a.out.join(format!("{}.contrast.pgm", s.id));
        fs::write(&path, pgm_bytes(s.truth.grid(), a.max))?;
        written.push(path);
        if let Some(bp) = &s.bp {
            let path = a.out.join(format!("{}.bp.pgm", s.id));
            fs::write(&path, pgm_bytes(&bp.image.magnitude(), a.max))?;
            written.push(path);
        }
    }
    eprintln!("render: {} images -> {}", written.len(), a.out.display());
    Ok(written)
}
