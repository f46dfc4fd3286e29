//! Few-shot evaluation protocol: stratified resampling of the training
//! split, repeated fits, 1-NN baselines and Table-style aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::DpsnModel;
use crate::protonet::{self, TrainConfig};
use crate::series::{load_ucr, Dataset, Delimiter};
use crate::sfa::{self, SfaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Exactly `k` training series per class.
    Shots(usize),
    /// `round(r * class size)` series per class, at least one.
    Ratio(f64),
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMode::Shots(k) => write!(f, "{k}-shot"),
            SamplingMode::Ratio(r) => write!(f, "ratio-{r}"),
        }
    }
}

impl SamplingMode {
    fn per_class(&self, class_size: usize) -> usize {
        match *self {
            SamplingMode::Shots(k) => k,
            SamplingMode::Ratio(r) => ((r * class_size as f64).round() as usize).max(1),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SamplingMode::Shots(k) if k < 2 => Err(Error::InvalidParameter(format!(
                "shots must be at least 2, got {k}"
            ))),
            SamplingMode::Ratio(r) if !(r > 0.0 && r <= 1.0) => Err(Error::InvalidParameter(
                format!("ratio must be in (0, 1], got {r}"),
            )),
            _ => Ok(()),
        }
    }
}

/// A resampled training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotTask {
    pub dataset: String,
    pub mode: SamplingMode,
    pub repeat: usize,
    pub seed: u64,
    /// Selected training indices, per class, ascending.
    pub indices: Vec<Vec<usize>>,
}

impl FewShotTask {
    pub fn all_indices(&self) -> Vec<usize> {
        self.indices.iter().flatten().copied().collect()
    }
}

/// Stratified sampling without replacement; repeat `i` uses seed
/// `base_seed + i`.
pub fn make_tasks(
    train: &Dataset,
    mode: SamplingMode,
    repeats: usize,
    base_seed: u64,
) -> Result<Vec<FewShotTask>> {
    mode.validate()?;
    let by_class = train.indices_by_class();
    for (k, members) in by_class.iter().enumerate() {
        let want = mode.per_class(members.len());
        if members.is_empty() {
            return Err(Error::EmptyClass(k));
        }
        if want > members.len() {
            return Err(Error::ClassTooSmall {
                class: k,
                available: members.len(),
                requested: want,
            });
        }
    }
    Ok((0..repeats)
        .map(|repeat| {
            let seed = base_seed.wrapping_add(repeat as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let indices = by_class
                .iter()
                .map(|members| {
                    let want = mode.per_class(members.len());
                    let mut pick: Vec<usize> = index::sample(&mut rng, members.len(), want)
                        .into_iter()
                        .map(|i| members[i])
                        .collect();
                    pick.sort_unstable();
                    pick
                })
                .collect();
            FewShotTask {
                dataset: train.name.clone(),
                mode,
                repeat,
                seed,
                indices,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dpsn,
    NnSfa,
    NnEuclid,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dpsn => "dpsn",
            Method::NnSfa => "nn_sfa",
            Method::NnEuclid => "nn_euclid",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dpsn" => Ok(Method::Dpsn),
            "nn_sfa" => Ok(Method::NnSfa),
            "nn_euclid" => Ok(Method::NnEuclid),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub sfa: SfaParams,
    pub train: TrainConfig,
}

/// 1-nearest-neighbor class of `query` under Euclidean distance; ties go to
/// the lowest reference index.
pub fn baseline_nn(references: &[&[f64]], labels: &[usize], query: &[f64]) -> Result<usize> {
    if references.is_empty() {
        return Err(Error::Empty("reference set"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, r) in references.iter().enumerate() {
        if r.len() != query.len() {
            return Err(Error::DimensionMismatch {
                context: "nearest-neighbor reference length",
                expected: query.len(),
                actual: r.len(),
            });
        }
        let d = protonet::squared_distance(r, query);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(labels[best.0])
}

fn nn_accuracy(refs: &[&[f64]], labels: &[usize], queries: &[(&[f64], usize)]) -> Result<f64> {
    let mut correct = 0usize;
    for (q, y) in queries {
        if baseline_nn(refs, labels, q)? == *y {
            correct += 1;
        }
    }
    Ok(correct as f64 / queries.len() as f64)
}

/// Fits `method` on the task's training subset and returns its accuracy on
/// the whole of `test`, which must share `train`'s class coding.
pub fn run(
    task: &FewShotTask,
    method: Method,
    train: &Dataset,
    test: &Dataset,
    hyper: &Hyper,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let subset = train.subset(&task.all_indices());
    match method {
        Method::Dpsn => {
            let cfg = TrainConfig {
                seed: hyper.train.seed.wrapping_add(task.seed),
                ..hyper.train.clone()
            };
            let (model, _) = DpsnModel::fit(&subset, &hyper.sfa, &cfg)?;
            model.accuracy(test)
        }
        Method::NnSfa => {
            let (model, feats) = sfa::fit_transform(&subset, &hyper.sfa)?;
            let test_feats = model.transform_dataset(test)?;
            let refs: Vec<&[f64]> = feats.iter().map(|f| &f[..]).collect();
            let queries: Vec<(&[f64], usize)> = test_feats
                .iter()
                .zip(&test.series)
                .map(|(f, s)| (&f[..], s.label))
                .collect();
            nn_accuracy(&refs, &subset.labels(), &queries)
        }
        Method::NnEuclid => {
            let refs: Vec<&[f64]> = subset.series.iter().map(|s| s.values.as_slice()).collect();
            let queries: Vec<(&[f64], usize)> = test
                .series
                .iter()
                .map(|s| (s.values.as_slice(), s.label))
                .collect();
            nn_accuracy(&refs, &subset.labels(), &queries)
        }
    }
}

/// Leave-one-out 1-NN accuracy of SFA histograms for each `(window_len,
/// num_coeffs)` candidate on the full training set; returns the best
/// parameters (first candidate wins ties) and their accuracy.
pub fn grid_search(
    train: &Dataset,
    base: &SfaParams,
    candidates: &[(usize, usize)],
) -> Result<(SfaParams, f64)> {
    let labels = train.labels();
    let mut best: Option<(SfaParams, f64)> = None;
    for &(window_len, num_coeffs) in candidates {
        let params = SfaParams {
            window_len,
            num_coeffs,
            ..base.clone()
        };
        if params.validate().is_err() || window_len > train.min_len() {
            continue;
        }
        let (_, feats) = sfa::fit_transform(train, &params)?;
        let mut correct = 0usize;
        for i in 0..feats.len() {
            let others: Vec<usize> = (0..feats.len()).filter(|&j| j != i).collect();
            if others.is_empty() {
                continue;
            }
            let refs: Vec<&[f64]> = others.iter().map(|&j| &feats[j][..]).collect();
            let lbl: Vec<usize> = others.iter().map(|&j| labels[j]).collect();
            if baseline_nn(&refs, &lbl, &feats[i])? == labels[i] {
                correct += 1;
            }
        }
        let acc = correct as f64 / feats.len() as f64;
        if best.as_ref().is_none_or(|(_, b)| acc > *b) {
            best = Some((params, acc));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no valid grid-search candidate".into()))
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Accuracies of one method on one dataset and mode, over all repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub method: Method,
    pub mode: SamplingMode,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
}

impl RunResult {
    pub fn new(
        dataset: impl Into<String>,
        method: Method,
        mode: SamplingMode,
        accuracies: Vec<f64>,
    ) -> Self {
        let (mean, std) = mean_std(&accuracies);
        RunResult {
            dataset: dataset.into(),
            method,
            mode,
            accuracies,
            mean,
            std,
        }
    }
}

/// Ranks (1 = best) with tied values sharing the mean of their ranks.
pub fn ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = shared;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    /// `(mean, std)` per method, in the table's method order.
    pub cells: Vec<(f64, f64)>,
}

/// One Table-I style block: per-dataset accuracy and cross-dataset ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub mode: SamplingMode,
    pub methods: Vec<Method>,
    pub rows: Vec<SummaryRow>,
    pub average_rank: Vec<f64>,
    pub average_std_rank: Vec<f64>,
    /// Datasets where the method has the strictly highest mean accuracy;
    /// tied leaders all score a win.
    pub wins: Vec<usize>,
}

impl SummaryTable {
    /// Markdown table with accuracies as percentages to four decimals.
    pub fn to_markdown(&self) -> String {
        let mut s = format!("### {}\n\n| dataset |", self.mode);
        for m in &self.methods {
            s += &format!(" {m} |");
        }
        s += "\n|---|";
        s += &"---|".repeat(self.methods.len());
        s += "\n";
        for r in &self.rows {
            s += &format!("| {} |", r.dataset);
            for (m, sd) in &r.cells {
                s += &format!(" {:.4}({:.4}) |", 100.0 * m, 100.0 * sd);
            }
            s += "\n";
        }
        let mut footer = |name: &str, vals: Vec<String>| {
            s += &format!("| {name} |");
            for v in vals {
                s += &format!(" {v} |");
            }
            s += "\n";
        };
        footer(
            "average accuracy rank",
            self.average_rank
                .iter()
                .map(|v| format!("{v:.2}"))
                .collect(),
        );
        footer(
            "average std rank",
            self.average_std_rank
                .iter()
                .map(|v| format!("{v:.2}"))
                .collect(),
        );
        footer("wins", self.wins.iter().map(ToString::to_string).collect());
        s
    }
}

/// Groups results by mode and builds one summary table per mode. Every
/// dataset must carry the same methods with the same number of repeats.
pub fn aggregate(results: &[RunResult]) -> Result<Vec<SummaryTable>> {
    let mut by_mode: Vec<(SamplingMode, Vec<&RunResult>)> = Vec::new();
    for r in results {
        match by_mode.iter_mut().find(|(m, _)| *m == r.mode) {
            Some((_, v)) => v.push(r),
            None => by_mode.push((r.mode, vec![r])),
        }
    }
    let mut tables = Vec::new();
    for (mode, rs) in by_mode {
        let mut methods: Vec<Method> = rs.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        let mut datasets: BTreeMap<&str, Vec<Option<&RunResult>>> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for r in &rs {
            let cells = datasets.entry(&r.dataset).or_insert_with(|| {
                order.push(&r.dataset);
                vec![None; methods.len()]
            });
            let m = methods
                .iter()
                .position(|m| *m == r.method)
                .expect("collected");
            if cells[m].is_some() {
                return Err(Error::MismatchedTasks(format!(
                    "{} / {} / {mode} appears twice",
                    r.dataset, r.method
                )));
            }
            cells[m] = Some(r);
        }
        let mut rows = Vec::new();
        let mut rank_sum = vec![0.0; methods.len()];
        let mut std_rank_sum = vec![0.0; methods.len()];
        let mut wins = vec![0usize; methods.len()];
        for name in order {
            let cells = &datasets[name];
            let present: Vec<&RunResult> = cells
                .iter()
                .map(|c| {
                    c.ok_or_else(|| {
                        Error::MismatchedTasks(format!("{name} lacks a method under {mode}"))
                    })
                })
                .collect::<Result<_>>()?;
            let repeats = present[0].accuracies.len();
            if present.iter().any(|r| r.accuracies.len() != repeats) {
                return Err(Error::MismatchedTasks(format!(
                    "{name} under {mode}: methods ran different repeat counts"
                )));
            }
            let means: Vec<f64> = present.iter().map(|r| r.mean).collect();
            let stds: Vec<f64> = present.iter().map(|r| r.std).collect();
            for (acc, r) in rank_sum.iter_mut().zip(ranks(&means, true)) {
                *acc += r;
            }
            for (acc, r) in std_rank_sum.iter_mut().zip(ranks(&stds, false)) {
                *acc += r;
            }
            let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (w, m) in wins.iter_mut().zip(&means) {
                if *m == top {
                    *w += 1;
                }
            }
            rows.push(SummaryRow {
                dataset: name.to_string(),
                cells: present.iter().map(|r| (r.mean, r.std)).collect(),
            });
        }
        let n = rows.len() as f64;
        tables.push(SummaryTable {
            mode,
            methods,
            average_rank: rank_sum.iter().map(|v| v / n).collect(),
            average_std_rank: std_rank_sum.iter().map(|v| v / n).collect(),
            wins,
            rows,
        });
    }
    Ok(tables)
}

/// One dataset entry of a benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
    pub window_len: Option<usize>,
    pub num_coeffs: Option<usize>,
}

fn default_repeats() -> usize {
    10
}

fn default_methods() -> Vec<Method> {
    vec![Method::Dpsn, Method::NnSfa, Method::NnEuclid]
}

fn default_grid_windows() -> Vec<usize> {
    vec![8, 12, 16, 24, 32, 48, 64]
}

fn default_grid_coeffs() -> Vec<usize> {
    vec![2, 3, 4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub shots: Vec<usize>,
    #[serde(default)]
    pub ratios: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_alphabet")]
    pub alphabet_size: usize,
    #[serde(default = "default_true")]
    pub mean_norm: bool,
    /// Candidate window lengths for datasets without fixed parameters.
    #[serde(default = "default_grid_windows")]
    pub grid_window_lens: Vec<usize>,
    #[serde(default = "default_grid_coeffs")]
    pub grid_num_coeffs: Vec<usize>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetSpec>,
}

fn default_alphabet() -> usize {
    4
}

fn default_true() -> bool {
    true
}

impl BenchmarkConfig {
    pub fn modes(&self) -> Vec<SamplingMode> {
        self.shots
            .iter()
            .map(|&k| SamplingMode::Shots(k))
            .chain(self.ratios.iter().map(|&r| SamplingMode::Ratio(r)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidParameter("no datasets configured".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods configured".into()));
        }
        if self.modes().is_empty() {
            return Err(Error::InvalidParameter(
                "no shots or ratios configured".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be positive".into()));
        }
        for m in self.modes() {
            m.validate()?;
        }
        self.train.validate()
    }
}

/// Outcome of one (dataset, method, mode, repeat) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub method: Method,
    pub mode: SamplingMode,
    pub repeat: usize,
    pub seed: u64,
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub records: Vec<RunRecord>,
    pub results: Vec<RunResult>,
    pub tables: Vec<SummaryTable>,
    /// `(dataset, method, mode)` cells excluded from the summary.
    pub excluded: Vec<(String, Method, SamplingMode)>,
    /// Resolved SFA parameters per dataset.
    pub params: Vec<(String, SfaParams)>,
}

struct Loaded {
    name: String,
    train: Dataset,
    test: Dataset,
    hyper: Hyper,
}

fn resolve(path: &Path, base_dir: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

/// Loads every dataset, resolves hyperparameters, then runs every task.
///
/// Loading failures abort before any run. Individual run failures are
/// recorded and their cells left out of the summary.
pub fn run_benchmark(cfg: &BenchmarkConfig, base_dir: &Path) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let mut loaded = Vec::with_capacity(cfg.datasets.len());
    for spec in &cfg.datasets {
        let mut train = load_ucr(resolve(&spec.train, base_dir), Delimiter::Auto)?;
        let mut test = load_ucr(resolve(&spec.test, base_dir), Delimiter::Auto)?;
        train.name = spec.name.clone();
        test.name = spec.name.clone();
        test.align_classes(&train.classes)?;
        let base = SfaParams {
            alphabet_size: cfg.alphabet_size,
            mean_norm: cfg.mean_norm,
            ..SfaParams::new(1, 1)
        };
        let sfa = match (spec.window_len, spec.num_coeffs) {
            (Some(window_len), Some(num_coeffs)) => SfaParams {
                window_len,
                num_coeffs,
                ..base
            },
            _ => {
                let grid: Vec<(usize, usize)> = cfg
                    .grid_window_lens
                    .iter()
                    .filter(|&&l| spec.window_len.is_none_or(|w| w == l))
                    .flat_map(|&l| {
                        cfg.grid_num_coeffs
                            .iter()
                            .filter(|&&c| spec.num_coeffs.is_none_or(|w| w == c))
                            .map(move |&c| (l, c))
                    })
                    .collect();
                grid_search(&train, &base, &grid)?.0
            }
        };
        sfa.validate()?;
        loaded.push(Loaded {
            name: spec.name.clone(),
            train,
            test,
            hyper: Hyper {
                sfa,
                train: cfg.train.clone(),
            },
        });
    }

    struct Job<'a> {
        data: &'a Loaded,
        task: FewShotTask,
        method: Method,
    }
    let mut jobs = Vec::new();
    let mut task_errors: Vec<RunRecord> = Vec::new();
    for data in &loaded {
        for mode in cfg.modes() {
            match make_tasks(&data.train, mode, cfg.repeats, cfg.base_seed) {
                Ok(tasks) => {
                    for task in tasks {
                        for &method in &cfg.methods {
                            jobs.push(Job {
                                data,
                                task: task.clone(),
                                method,
                            });
                        }
                    }
                }
                Err(e) => {
                    for repeat in 0..cfg.repeats {
                        for &method in &cfg.methods {
                            task_errors.push(RunRecord {
                                dataset: data.name.clone(),
                                method,
                                mode,
                                repeat,
                                seed: cfg.base_seed.wrapping_add(repeat as u64),
                                outcome: Err(e.to_string()),
                            });
                        }
                    }
                }
            }
        }
    }

    let mut records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|job| RunRecord {
            dataset: job.data.name.clone(),
            method: job.method,
            mode: job.task.mode,
            repeat: job.task.repeat,
            seed: job.task.seed,
            outcome: run(
                &job.task,
                job.method,
                &job.data.train,
                &job.data.test,
                &job.data.hyper,
            )
            .map_err(|e| e.to_string()),
        })
        .collect();
    records.extend(task_errors);
    let dataset_order = |name: &str| cfg.datasets.iter().position(|d| d.name == name);
    let mode_order = |m: &SamplingMode| cfg.modes().iter().position(|x| x == m);
    records.sort_by(|a, b| {
        (
            dataset_order(&a.dataset),
            mode_order(&a.mode),
            a.method,
            a.repeat,
        )
            .cmp(&(
                dataset_order(&b.dataset),
                mode_order(&b.mode),
                b.method,
                b.repeat,
            ))
    });

    let mut results = Vec::new();
    let mut excluded = Vec::new();
    for data in &loaded {
        for mode in cfg.modes() {
            let mut cells = Vec::new();
            let mut complete = true;
            for &method in &cfg.methods {
                let accs: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| r.dataset == data.name && r.mode == mode && r.method == method)
                    .collect();
                if accs.iter().all(|r| r.outcome.is_ok()) {
                    cells.push(RunResult::new(
                        &data.name,
                        method,
                        mode,
                        accs.iter()
                            .map(|r| *r.outcome.as_ref().expect("ok"))
                            .collect(),
                    ));
                } else {
                    complete = false;
                    excluded.push((data.name.clone(), method, mode));
                }
            }
            // A dataset row needs every method for ranks to be comparable.
            if complete {
                results.extend(cells);
            } else {
                for c in cells {
                    excluded.push((c.dataset, c.method, c.mode));
                }
            }
        }
    }
    let tables = aggregate(&results)?;
    let params = loaded
        .iter()
        .map(|l| (l.name.clone(), l.hyper.sfa.clone()))
        .collect();
    Ok(BenchmarkOutput {
        records,
        results,
        tables,
        excluded,
        params,
    })
}
