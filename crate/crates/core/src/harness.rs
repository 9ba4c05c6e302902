//! Multi-seed experiments: dataset resolution, stratified splits, training,
//! evaluation and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    apply_line_graph, config_hash, generate_ring_vs_clique, generate_sbm, generate_vector_field_dataset, load_dataset,
    load_tudataset, Dataset, RingVsCliqueConfig, SbmConfig, VectorFieldConfig,
};
use crate::error::{Error, Result};
use crate::gpclf::{fit_signatures, predicted_classes, signatures_for, ModelSpec, TrainConfig};

/// Default output root when neither the command line nor the config names one.
pub const OUT_ENV: &str = "HODGELET_OUT";
/// Directory holding `NAME/NAME_*.txt` TUDataset folders.
pub const TUDATASET_ENV: &str = "HODGELET_TUDATASET_DIR";

pub const CSV_HEADER: &str = "dataset,variant,seed,accuracy,wall_time_s,final_elbo,config_hash";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DatasetSpec {
    /// TUDataset text files. `path` defaults to `$HODGELET_TUDATASET_DIR/NAME`.
    Tudataset {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    /// A directory written by `generate`.
    Directory { path: PathBuf },
    RingVsClique(RingVsCliqueConfig),
    Sbm(SbmConfig),
    VectorField(VectorFieldConfig),
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Tudataset { name, path } => {
                let dir = match path {
                    Some(p) => p.clone(),
                    None => {
                        let root = std::env::var_os(TUDATASET_ENV).ok_or_else(|| Error::Config {
                            path: "dataset.path".to_string(),
                            message: format!("no path given and {TUDATASET_ENV} is unset"),
                        })?;
                        PathBuf::from(root).join(name)
                    }
                };
                load_tudataset(&dir, name)
            }
            DatasetSpec::Directory { path } => load_dataset(path),
            DatasetSpec::RingVsClique(c) => generate_ring_vs_clique(c),
            DatasetSpec::Sbm(c) => generate_sbm(c),
            DatasetSpec::VectorField(c) => generate_vector_field_dataset(c),
        }
    }

    pub fn is_generated(&self) -> bool {
        matches!(
            self,
            DatasetSpec::RingVsClique(_) | DatasetSpec::Sbm(_) | DatasetSpec::VectorField(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// One full eigenbasis per domain.
    WtGp,
    /// Hodge subspaces, one kernel term each.
    WtGpHodge,
    /// Line graph first, then [`Variant::WtGp`].
    WtGpLg,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::WtGp => "wt-gp",
            Variant::WtGpHodge => "wt-gp-hodge",
            Variant::WtGpLg => "wt-gp-lg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wt-gp" => Ok(Variant::WtGp),
            "wt-gp-hodge" => Ok(Variant::WtGpHodge),
            "wt-gp-lg" => Ok(Variant::WtGpLg),
            other => Err(Error::Config {
                path: "variant".to_string(),
                message: format!("unknown variant `{other}` (expected wt-gp, wt-gp-hodge or wt-gp-lg)"),
            }),
        }
    }

    /// Model spec for this variant, starting from the configured one.
    pub fn model_spec(self, base: &ModelSpec) -> ModelSpec {
        ModelSpec {
            hodge: self == Variant::WtGpHodge,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSpec {
    pub num_seeds: usize,
    pub first_seed: u64,
    pub train_fraction: f64,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            num_seeds: 10,
            first_seed: 0,
            train_fraction: 0.8,
        }
    }
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::WtGpHodge]
}

fn default_noise_levels() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.2, 0.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Grid for `sweep-noise`.
    #[serde(default = "default_noise_levels")]
    pub noise_levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            evaluation: EvaluationSpec::default(),
            variants: default_variants(),
            noise_levels: default_noise_levels(),
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            path: "<resolved>".to_string(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, message: &str| {
            Err(Error::Config {
                path: path.to_string(),
                message: message.to_string(),
            })
        };
        let f = self.evaluation.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return fail("evaluation.train_fraction", "must lie in (0, 1)");
        }
        if self.evaluation.num_seeds == 0 {
            return fail("evaluation.num_seeds", "must be at least 1");
        }
        if self.variants.is_empty() {
            return fail("variants", "list at least one variant");
        }
        if self.noise_levels.iter().any(|r| !(*r >= 0.0)) {
            return fail("noise_levels", "noise levels must be non-negative");
        }
        if let DatasetSpec::VectorField(c) = &self.dataset {
            c.validate().map_err(|e| match e {
                Error::Config { path, message } => Error::Config {
                    path: format!("dataset.{path}"),
                    message,
                },
                other => other,
            })?;
        }
        self.model.validate().map_err(|e| Error::Config {
            path: "model".to_string(),
            message: e.to_string(),
        })?;
        self.train.validate().map_err(|e| Error::Config {
            path: "train".to_string(),
            message: e.to_string(),
        })
    }

    /// Output directory: explicit override, then the config, then
    /// `$HODGELET_OUT`, then `./results`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

/// Stratified split: within each class a seed-dependent shuffle puts
/// `round(fraction · count)` graphs in the training set (at least one graph
/// on each side when the class has two or more). Both index lists are sorted.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let mut k = (train_fraction * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        train.extend_from_slice(&members[..k.min(n)]);
        test.extend_from_slice(&members[k.min(n)..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub variant: Variant,
    pub seed: u64,
    /// Percent; `None` when the seed failed.
    pub accuracy: Option<f64>,
    pub wall_time_s: f64,
    pub final_elbo: Option<f64>,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let accuracy = match (&self.error, self.accuracy) {
            (Some(_), _) => "error".to_string(),
            (None, a) => opt(a),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.dataset,
            self.variant.name(),
            self.seed,
            accuracy,
            self.wall_time_s,
            opt(self.final_elbo),
            self.config_hash
        )
    }
}

/// Mean and sample standard deviation over completed seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub variant: Variant,
    pub completed: usize,
    pub failed: usize,
    pub mean: f64,
    /// `None` with fewer than two completed seeds.
    pub std: Option<f64>,
}

pub fn summarize(records: &[ResultRecord]) -> Vec<Summary> {
    let mut keys: Vec<(String, Variant)> = Vec::new();
    for r in records {
        if !keys.iter().any(|k| k.0 == r.dataset && k.1 == r.variant) {
            keys.push((r.dataset.clone(), r.variant));
        }
    }
    keys.into_iter()
        .map(|(dataset, variant)| {
            let group: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| r.dataset == dataset && r.variant == variant)
                .collect();
            let acc: Vec<f64> = group.iter().filter_map(|r| r.accuracy).collect();
            let n = acc.len();
            let mean = if n > 0 { acc.iter().sum::<f64>() / n as f64 } else { f64::NAN };
            let std = (n >= 2).then(|| (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
            Summary {
                dataset,
                variant,
                completed: n,
                failed: group.len() - n,
                mean,
                std,
            }
        })
        .collect()
}

pub fn summary_csv(summaries: &[Summary]) -> String {
    let mut out = String::from("dataset,variant,completed_seeds,failed_seeds,accuracy_mean,accuracy_std\n");
    for s in summaries {
        let std = s.std.map_or(String::new(), |v| v.to_string());
        writeln!(out, "{},{},{},{},{},{}", s.dataset, s.variant.name(), s.completed, s.failed, s.mean, std)
            .expect("write to string");
    }
    out
}

pub fn records_csv(records: &[ResultRecord]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Runs every seed of one variant on an already resolved dataset.
pub fn run_variant(dataset: &Dataset, variant: Variant, config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let data = if variant == Variant::WtGpLg {
        apply_line_graph(dataset)?
    } else {
        dataset.clone()
    };
    let spec = variant.model_spec(&config.model);
    let hash = config_hash(&(config, variant.name()))?;
    let signatures = signatures_for(&data.graphs, &spec)?;
    let labels = data.labels();
    let name = dataset.manifest.name.clone();
    let ev = &config.evaluation;
    let seeds: Vec<u64> = (0..ev.num_seeds as u64).map(|k| ev.first_seed + k).collect();
    let records = seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let outcome = (|| -> Result<(f64, f64)> {
                let (train, test) = stratified_split(&labels, ev.train_fraction, seed);
                let pick = |idx: &[usize]| idx.iter().map(|&i| signatures[i].clone()).collect::<Vec<_>>();
                let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
                let train_config = TrainConfig {
                    seed,
                    ..config.train.clone()
                };
                let model = fit_signatures(&pick(&train), &train_labels, &spec, &train_config)?;
                let pred = predicted_classes(&model.predict_proba_signatures(&pick(&test))?);
                let correct = test.iter().zip(&pred).filter(|(&i, &p)| labels[i] == p).count();
                let accuracy = 100.0 * correct as f64 / test.len().max(1) as f64;
                Ok((accuracy, *model.elbo_trace.last().unwrap_or(&f64::NAN)))
            })();
            let wall = start.elapsed().as_secs_f64();
            match outcome {
                Ok((accuracy, elbo)) => {
                    info!("{name} {} seed {seed}: {accuracy:.2}%", variant.name());
                    ResultRecord {
                        dataset: name.clone(),
                        variant,
                        seed,
                        accuracy: Some(accuracy),
                        wall_time_s: wall,
                        final_elbo: Some(elbo),
                        config_hash: hash.clone(),
                        error: None,
                    }
                }
                Err(e) => {
                    warn!("{name} {} seed {seed} failed: {e}", variant.name());
                    ResultRecord {
                        dataset: name.clone(),
                        variant,
                        seed,
                        accuracy: None,
                        wall_time_s: wall,
                        final_elbo: None,
                        config_hash: hash.clone(),
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(records)
}

/// Results of `run` for every configured variant.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub summaries: Vec<Summary>,
}

impl RunOutput {
    pub fn all_completed(&self) -> bool {
        self.records.iter().all(|r| r.error.is_none())
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let dataset = config.dataset.load()?;
    let mut records = Vec::new();
    for &variant in &config.variants {
        records.extend(run_variant(&dataset, variant, config)?);
    }
    for r in records.iter().filter(|r| r.error.is_some()) {
        warn!("seed {} of {} excluded from the summary", r.seed, r.variant.name());
    }
    let summaries = summarize(&records);
    Ok(RunOutput { records, summaries })
}

/// Writes `results.csv`, `summary.csv` and `config.resolved.toml`.
pub fn write_run(out: &Path, config: &ExperimentConfig, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("results.csv"), records_csv(&output.records))?;
    std::fs::write(out.join("summary.csv"), summary_csv(&output.summaries))?;
    std::fs::write(out.join("config.resolved.toml"), config.to_toml()?)?;
    Ok(())
}

/// One `run` per noise level of a vector-field config, for the Hodge and
/// line-graph variants.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<(f64, ResultRecord)>,
}

impl SweepOutput {
    pub fn csv(&self) -> String {
        let mut out = format!("noise_level,{CSV_HEADER}\n");
        for (r, rec) in &self.rows {
            writeln!(out, "{r},{}", rec.csv_row()).expect("write to string");
        }
        out
    }

    pub fn mean(&self, noise: f64, variant: Variant) -> f64 {
        let acc: Vec<f64> = self
            .rows
            .iter()
            .filter(|(r, rec)| *r == noise && rec.variant == variant)
            .filter_map(|(_, rec)| rec.accuracy)
            .collect();
        acc.iter().sum::<f64>() / acc.len().max(1) as f64
    }

    /// Soft expectations: Hodge beats line graph at every noise level and
    /// degrades with noise. Returns warnings instead of failing.
    pub fn soft_checks(&self, levels: &[f64]) -> Vec<String> {
        let mut warnings = Vec::new();
        for &r in levels {
            let (h, l) = (self.mean(r, Variant::WtGpHodge), self.mean(r, Variant::WtGpLg));
            if h < l {
                warnings.push(format!("noise {r}: wt-gp-hodge {h:.2} below wt-gp-lg {l:.2}"));
            }
        }
        if let (Some(&lo), Some(&hi)) = (
            levels.iter().min_by(|a, b| a.total_cmp(b)),
            levels.iter().max_by(|a, b| a.total_cmp(b)),
        ) {
            let (a, b) = (self.mean(lo, Variant::WtGpHodge), self.mean(hi, Variant::WtGpHodge));
            if a < b {
                warnings.push(format!("wt-gp-hodge accuracy at noise {lo} ({a:.2}) is below noise {hi} ({b:.2})"));
            }
        }
        warnings
    }
}

pub fn sweep_noise(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let DatasetSpec::VectorField(base) = &config.dataset else {
        return Err(Error::Config {
            path: "dataset.source".to_string(),
            message: "sweep-noise needs a vector-field dataset".to_string(),
        });
    };
    let mut rows = Vec::new();
    for &r in &config.noise_levels {
        let mut cfg = config.clone();
        cfg.dataset = DatasetSpec::VectorField(VectorFieldConfig {
            noise_level: r,
            ..base.clone()
        });
        cfg.variants = vec![Variant::WtGpHodge, Variant::WtGpLg];
        let out = run(&cfg)?;
        rows.extend(out.records.into_iter().map(|rec| (r, rec)));
    }
    let output = SweepOutput { rows };
    for w in output.soft_checks(&config.noise_levels) {
        warn!("{w}");
    }
    Ok(output)
}
