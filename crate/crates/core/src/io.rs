//! File formats: observed/simulated series, posterior populations,
//! predictive bands, executor timelines, and the JSON run configuration.
//!
//! Floats are written in shortest round-trip form, so every file parses
//! back to bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abc::{
    Cov5, EpsilonSchedule, Particle, Population, PosteriorCorrelation, PredictiveRow, PredictiveSettings,
    PredictiveTable, PriorBox, RejectionAbc, Sabc,
};
use crate::model::{DepositionSeries, ModelError, ModelParams, Simulator, SimulationConfig, N_PARAMS, PARAM_NAMES};
use crate::scheduler::{ExecutorTimeline, Interval, Strategy};
use crate::summary::SummaryVector;

pub const SCHEMA_VERSION: u32 = 1;

pub const OBSERVED_HEADER: [&str; 5] = ["t_s", "S_agg_um2", "N_agg_per_mm2", "N_plt_per_ul", "N_act_per_ul"];
pub const POPULATION_HEADER: [&str; 7] = ["p_Ag", "p_Ad", "p_T", "p_F", "a_T", "weight", "discrepancy"];
pub const PREDICTIVE_HEADER: [&str; 7] = ["t_s", "variable", "mean", "q25", "q75", "min", "max"];
pub const TIMELINE_HEADER: [&str; 4] = ["worker", "task", "start_s", "end_s"];

const PROVENANCE_TAG: &str = "# provenance=";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{path}: missing column {column}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: no data rows")]
    NoData { path: PathBuf },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: schema_version {found} is not supported (expected {expected})")]
    Schema { path: PathBuf, found: u32, expected: u32 },
}

impl IoError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "io",
            IoError::Parse { .. } => "parse",
            IoError::MissingColumn { .. } => "missing_column",
            IoError::NoData { .. } => "no_data",
            IoError::Invalid { .. } => "invalid",
            IoError::Schema { .. } => "schema",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Invalid {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn csv_line<S: AsRef<str>>(out: &mut String, fields: impl IntoIterator<Item = S>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(f.as_ref());
        first = false;
    }
    out.push('\n');
}

/// Parsed CSV body: column positions resolved from the header.
struct Table {
    path: PathBuf,
    header: Vec<String>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn parse(path: &Path, body: &str, required: &[&str]) -> Result<Self, IoError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(body.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| invalid(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        for col in required {
            if !header.iter().any(|h| h == col) {
                return Err(IoError::MissingColumn {
                    path: path.to_path_buf(),
                    column: col.to_string(),
                });
            }
        }
        let records = rdr
            .records()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| IoError::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    column: "-".into(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if records.is_empty() {
            return Err(IoError::NoData { path: path.to_path_buf() });
        }
        Ok(Self {
            path: path.to_path_buf(),
            header,
            records,
        })
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).expect("checked in parse")
    }

    fn str_at(&self, row: usize, name: &str) -> &str {
        self.records[row].get(self.col(name)).unwrap_or("")
    }

    fn f64_at(&self, row: usize, name: &str) -> Result<f64, IoError> {
        let raw = self.str_at(row, name);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| IoError::Parse {
                path: self.path.clone(),
                row: row + 1,
                column: name.to_string(),
                message: format!("not a finite number: '{raw}'"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Experimental,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Experimental => "experimental",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// A measured (or synthetic stand-in) deposition series.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedDataset {
    pub series: DepositionSeries,
    pub provenance: Provenance,
}

impl ObservedDataset {
    /// Checks that the dataset has exactly the configured observation times.
    pub fn check_times(&self, config: &SimulationConfig) -> Result<(), String> {
        if self.series.times != config.obs_times {
            return Err(format!(
                "observation times {:?} differ from the configured {:?}",
                self.series.times, config.obs_times
            ));
        }
        Ok(())
    }
}

/// Reads a series CSV with the columns of [`OBSERVED_HEADER`].
///
/// A leading `# provenance=synthetic` comment marks generated data; files
/// without it are taken as experimental.
pub fn load_observed(path: impl AsRef<Path>) -> Result<ObservedDataset, IoError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let provenance = match text.lines().find_map(|l| l.trim().strip_prefix(PROVENANCE_TAG)) {
        None | Some("experimental") => Provenance::Experimental,
        Some("synthetic") => Provenance::Synthetic,
        Some(other) => return Err(invalid(path, format!("unknown provenance '{other}'"))),
    };
    let table = Table::parse(path, &text, &OBSERVED_HEADER)?;
    let mut series = DepositionSeries::with_capacity(table.records.len());
    for row in 0..table.records.len() {
        let t = table.f64_at(row, OBSERVED_HEADER[0])?;
        let mut vals = [0.0; 4];
        for (k, col) in OBSERVED_HEADER[1..].iter().enumerate() {
            vals[k] = table.f64_at(row, col)?;
            if vals[k] < 0.0 {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    row: row + 1,
                    column: col.to_string(),
                    message: format!("negative value {}", vals[k]),
                });
            }
        }
        if let Some(&prev) = series.times.last() {
            if !(t > prev) {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    row: row + 1,
                    column: OBSERVED_HEADER[0].into(),
                    message: format!("times must be strictly increasing ({t} after {prev})"),
                });
            }
        }
        series.push(t, vals);
    }
    Ok(ObservedDataset { series, provenance })
}

pub fn series_csv(series: &DepositionSeries, provenance: Option<Provenance>) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        let _ = writeln!(out, "{PROVENANCE_TAG}{}", p.as_str());
    }
    csv_line(&mut out, OBSERVED_HEADER);
    for i in 0..series.len() {
        let r = series.row(i);
        csv_line(&mut out, std::iter::once(series.times[i]).chain(r).map(fmt_f64));
    }
    out
}

pub fn write_series(path: impl AsRef<Path>, series: &DepositionSeries) -> Result<(), IoError> {
    write_text(path.as_ref(), &series_csv(series, None))
}

pub fn write_observed(path: impl AsRef<Path>, data: &ObservedDataset) -> Result<(), IoError> {
    write_text(path.as_ref(), &series_csv(&data.series, Some(data.provenance)))
}

/// Simulated data tagged as synthetic observations.
pub fn synth_dataset(theta: &ModelParams, config: &SimulationConfig, seed: u64) -> Result<ObservedDataset, ModelError> {
    Ok(ObservedDataset {
        series: Simulator::new(config.clone())?.run(theta, seed)?,
        provenance: Provenance::Synthetic,
    })
}

/// One header line and one row with the 24 summary statistics.
pub fn write_summary(path: impl AsRef<Path>, summary: &SummaryVector) -> Result<(), IoError> {
    let mut out = String::new();
    csv_line(&mut out, SummaryVector::column_names());
    csv_line(&mut out, summary.to_vec().into_iter().map(fmt_f64));
    write_text(path.as_ref(), &out)
}

pub fn population_csv(pop: &Population) -> String {
    let mut out = String::new();
    csv_line(&mut out, POPULATION_HEADER);
    for p in &pop.particles {
        csv_line(
            &mut out,
            p.theta.to_array().into_iter().chain([p.weight, p.discrepancy]).map(fmt_f64),
        );
    }
    out
}

pub fn write_population(path: impl AsRef<Path>, pop: &Population) -> Result<(), IoError> {
    write_text(path.as_ref(), &population_csv(pop))
}

/// Reads a population CSV. Sampler state that the file does not carry
/// (threshold, step, kernel) is left empty.
pub fn load_population(path: impl AsRef<Path>) -> Result<Population, IoError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let table = Table::parse(path, &text, &POPULATION_HEADER)?;
    let mut particles = Vec::with_capacity(table.records.len());
    for row in 0..table.records.len() {
        let mut theta = [0.0; N_PARAMS];
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            theta[k] = table.f64_at(row, name)?;
        }
        let weight = table.f64_at(row, "weight")?;
        if weight < 0.0 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                row: row + 1,
                column: "weight".into(),
                message: "negative weight".into(),
            });
        }
        particles.push(Particle {
            theta: ModelParams::from_array(theta),
            weight,
            discrepancy: table.f64_at(row, "discrepancy")?,
            sim_seed: 0,
        });
    }
    Ok(Population {
        particles,
        epsilon: f64::NAN,
        step: 0,
        kernel_cov: Cov5::zeros(),
        history: Vec::new(),
    })
}

pub fn write_predictive(path: impl AsRef<Path>, table: &PredictiveTable) -> Result<(), IoError> {
    let mut rows: Vec<&PredictiveRow> = table.rows.iter().collect();
    rows.sort_by(|a, b| a.variable.cmp(&b.variable).then(a.t_s.total_cmp(&b.t_s)));
    let mut out = String::new();
    csv_line(&mut out, PREDICTIVE_HEADER);
    for r in rows {
        let nums = [r.mean, r.q25, r.q75, r.min, r.max].map(fmt_f64);
        csv_line(
            &mut out,
            [fmt_f64(r.t_s), r.variable.clone()].into_iter().chain(nums),
        );
    }
    write_text(path.as_ref(), &out)
}

pub fn load_predictive(path: impl AsRef<Path>) -> Result<PredictiveTable, IoError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let table = Table::parse(path, &text, &PREDICTIVE_HEADER)?;
    let rows = (0..table.records.len())
        .map(|i| {
            Ok(PredictiveRow {
                t_s: table.f64_at(i, "t_s")?,
                variable: table.str_at(i, "variable").to_string(),
                mean: table.f64_at(i, "mean")?,
                q25: table.f64_at(i, "q25")?,
                q75: table.f64_at(i, "q75")?,
                min: table.f64_at(i, "min")?,
                max: table.f64_at(i, "max")?,
            })
        })
        .collect::<Result<_, IoError>>()?;
    Ok(PredictiveTable { rows })
}

pub fn write_timeline(path: impl AsRef<Path>, timeline: &ExecutorTimeline) -> Result<(), IoError> {
    let mut out = String::new();
    csv_line(&mut out, TIMELINE_HEADER);
    for (w, iv) in timeline.rows() {
        csv_line(
            &mut out,
            [w.to_string(), iv.task.to_string(), fmt_f64(iv.start), fmt_f64(iv.end)],
        );
    }
    write_text(path.as_ref(), &out)
}

pub fn load_timeline(path: impl AsRef<Path>) -> Result<ExecutorTimeline, IoError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let table = Table::parse(path, &text, &TIMELINE_HEADER)?;
    let mut timeline = ExecutorTimeline::default();
    for i in 0..table.records.len() {
        let int = |name: &str| -> Result<usize, IoError> {
            let raw = table.str_at(i, name);
            raw.parse().map_err(|_| IoError::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                column: name.into(),
                message: format!("not a non-negative integer: '{raw}'"),
            })
        };
        let w = int("worker")?;
        if timeline.workers.len() <= w {
            timeline.workers.resize(w + 1, Vec::new());
        }
        timeline.workers[w].push(Interval {
            task: int("task")?,
            start: table.f64_at(i, "start_s")?,
            end: table.f64_at(i, "end_s")?,
        });
    }
    Ok(timeline)
}

/// Correlation matrix with a leading `param` column and a `degenerate` flag.
pub fn write_correlation(path: impl AsRef<Path>, corr: &PosteriorCorrelation) -> Result<(), IoError> {
    let mut out = String::new();
    csv_line(
        &mut out,
        std::iter::once("param").chain(PARAM_NAMES).chain(["degenerate"]),
    );
    for (i, name) in PARAM_NAMES.iter().enumerate() {
        csv_line(
            &mut out,
            std::iter::once(name.to_string())
                .chain((0..N_PARAMS).map(|j| fmt_f64(corr.matrix[(i, j)])))
                .chain([corr.degenerate[i].to_string()]),
        );
    }
    write_text(path.as_ref(), &out)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| invalid(path, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, IoError> {
    let path = path.as_ref();
    serde_json::from_str(&read_text(path)?).map_err(|e| invalid(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Rejection,
    #[default]
    Sabc,
}

/// Settings of both samplers; `kind` picks the one that runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub kind: SamplerKind,
    pub n_particles: usize,
    pub n_steps: usize,
    pub acc_cutoff: f64,
    /// Threshold of rejection ABC.
    pub epsilon: f64,
    /// Annealing factor of the SABC threshold.
    pub alpha: f64,
    pub epsilon_floor: f64,
    /// Rejection ABC proposals per batch.
    pub batch_size: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let s = Sabc::default();
        let r = RejectionAbc::default();
        let EpsilonSchedule::Annealing { alpha, floor } = s.schedule else {
            unreachable!("default schedule anneals")
        };
        Self {
            kind: SamplerKind::Sabc,
            n_particles: s.n_particles,
            n_steps: s.n_steps,
            acc_cutoff: s.acc_cutoff,
            epsilon: r.epsilon,
            alpha,
            epsilon_floor: floor,
            batch_size: r.batch_size,
        }
    }
}

impl SamplerSettings {
    pub fn sabc(&self) -> Sabc {
        Sabc {
            n_particles: self.n_particles,
            n_steps: self.n_steps,
            acc_cutoff: self.acc_cutoff,
            schedule: EpsilonSchedule::Annealing {
                alpha: self.alpha,
                floor: self.epsilon_floor,
            },
        }
    }

    pub fn rejection(&self) -> RejectionAbc {
        RejectionAbc {
            n_accept: self.n_particles,
            epsilon: self.epsilon,
            batch_size: self.batch_size,
            ..RejectionAbc::default()
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.kind == SamplerKind::Sabc && (self.n_particles < 2 || self.n_steps < 1) {
            return Err("sabc needs n_particles >= 2 and n_steps >= 1".into());
        }
        if !(self.alpha > 0.0) || !(self.epsilon_floor >= 0.0) || !(self.acc_cutoff >= 0.0) {
            return Err("alpha must be positive; epsilon_floor and acc_cutoff non-negative".into());
        }
        if !(self.epsilon > 0.0) || self.batch_size == 0 {
            return Err("epsilon must be positive and batch_size at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSettings {
    pub workers: usize,
    pub strategy: Strategy,
}

impl Default for SchedulerSettings {
    fn default() -> Self {
        Self {
            workers: 1,
            strategy: Strategy::Dynamic,
        }
    }
}

/// Everything needed to reproduce a run, stored as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub simulation: SimulationConfig,
    pub prior: PriorBox,
    pub sampler: SamplerSettings,
    pub scheduler: SchedulerSettings,
    pub predictive: PredictiveSettings,
    /// Observed series CSV; relative paths are resolved against the
    /// directory of the config file.
    pub observed: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            simulation: SimulationConfig::default(),
            prior: PriorBox::default(),
            sampler: SamplerSettings::default(),
            scheduler: SchedulerSettings::default(),
            predictive: PredictiveSettings::default(),
            observed: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Loads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let mut cfg: RunConfig = read_json(path)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(IoError::Schema {
                path: path.to_path_buf(),
                found: cfg.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(obs) = cfg.observed.as_mut() {
            if obs.is_relative() {
                *obs = base.join(&*obs);
            }
            if !obs.exists() {
                return Err(invalid(path, format!("observed file {} does not exist", obs.display())));
            }
        }
        if let Some(out) = cfg.out_dir.as_mut() {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate().map_err(|m| invalid(path, m))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.simulation.geometry().map_err(|e| e.to_string())?;
        self.prior.validate().map_err(|e| e.to_string())?;
        self.sampler.validate()?;
        if self.scheduler.workers == 0 {
            return Err("scheduler.workers must be at least 1".into());
        }
        if self.predictive.n_draws == 0 {
            return Err("predictive.n_draws must be at least 1".into());
        }
        Ok(())
    }
}
