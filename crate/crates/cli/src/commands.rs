use std::fs;
use std::path::{Path, PathBuf};

use dpsn::harness::{self, BenchmarkConfig, DatasetSpec};
use dpsn::interpret::DistanceMode;
use dpsn::{load_ucr, plot, Dataset, Delimiter, DpsnModel, SfaParams};
use serde_json::json;

use crate::params::ParamsFile;
use crate::{BenchmarkArgs, CliError, Emit, ExplainArgs, FitArgs, PredictArgs};

type Result<T> = std::result::Result<T, CliError>;

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Dataset> {
    Ok(load_ucr(path, Delimiter::Auto)?)
}

fn resolve_sfa(params: &ParamsFile, train: &Dataset) -> Result<SfaParams> {
    let base = params.sfa_base();
    if params.window_len.is_some() && params.num_coeffs.is_some() {
        base.validate()?;
        return Ok(base);
    }
    let (best, acc) = harness::grid_search(train, &base, &params.grid())?;
    log::info!(
        "grid search picked window_len={} num_coeffs={} (leave-one-out accuracy {acc:.4})",
        best.window_len,
        best.num_coeffs
    );
    Ok(best)
}

fn fit_model(train: &Dataset, params: &ParamsFile, seed: Option<u64>) -> Result<DpsnModel> {
    let sfa = resolve_sfa(params, train)?;
    let mut cfg = params.train_config();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(DpsnModel::fit(train, &sfa, &cfg)?.0)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let params = ParamsFile::load(a.params.as_deref())?;
    let train = load(&a.train)?;
    let model = fit_model(&train, &params, a.seed)?;
    model
        .save_bundle(&a.out)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "D={} K={} final_loss={:.6} window_len={} num_coeffs={}",
        model.dim(),
        model.num_classes(),
        model.final_loss,
        model.sfa.params.window_len,
        model.sfa.params.num_coeffs
    );
    Ok(())
}

fn load_bundle(dir: &Path) -> Result<DpsnModel> {
    DpsnModel::load_bundle(dir)
        .map_err(|e| CliError::Data(format!("bundle {}: {e}", dir.display())))
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let model = load_bundle(&a.bundle)?;
    let mut test = load(&a.test)?;
    test.align_classes(&model.classes)?;

    let mut rows = Vec::with_capacity(test.len());
    let mut correct = 0usize;
    for s in &test.series {
        let p = model.predict_proba(&s.values)?;
        let pred = model.predict(&s.values)?;
        if pred == s.label {
            correct += 1;
        }
        rows.push((s.id, &model.classes[s.label], &model.classes[pred], p));
    }

    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "label".into(), "predicted".into()];
    header.extend(model.classes.iter().map(|c| format!("p_{c}")));
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    csv.write_record(&header).map_err(csv_err)?;
    for (id, label, pred, p) in &rows {
        let mut rec = vec![id.to_string(), label.to_string(), pred.to_string()];
        rec.extend(p.iter().map(f64::to_string));
        csv.write_record(&rec).map_err(csv_err)?;
    }
    let csv_text = String::from_utf8(
        csv.into_inner()
            .map_err(|e| CliError::Runtime(e.to_string()))?,
    )
    .expect("utf-8 csv");
    let accuracy = correct as f64 / test.len() as f64;

    match &a.out {
        Some(dir) => {
            if a.emit.contains(&Emit::Csv) {
                write_out(dir, "predictions.csv", &csv_text)?;
            }
            if a.emit.contains(&Emit::Json) {
                let doc = json!({
                    "classes": model.classes,
                    "accuracy": accuracy,
                    "predictions": rows.iter().map(|(id, label, pred, p)| json!({
                        "id": id, "label": label, "predicted": pred, "probabilities": p,
                    })).collect::<Vec<_>>(),
                });
                write_out(dir, "predictions.json", &(pretty(&doc)? + "\n"))?;
            }
        }
        None => print!("{csv_text}"),
    }
    eprintln!("accuracy {accuracy:.4} ({correct}/{})", test.len());
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn explain(a: &ExplainArgs) -> Result<()> {
    let train = load(&a.train)?;
    if train.num_classes() < 2 {
        return Err(CliError::Data(format!(
            "{} has a single class; shapelets need at least two",
            a.train.display()
        )));
    }
    let params = ParamsFile::load(a.params.as_deref())?;
    let model = match &a.bundle {
        Some(dir) => load_bundle(dir)?,
        None => fit_model(&train, &params, a.seed)?,
    };
    let mode = if a.znorm || params.znormalized_distance == Some(true) {
        DistanceMode::ZNormalized
    } else {
        DistanceMode::Raw
    };
    let report = model.explain(&train, mode)?;

    if a.emit.contains(&Emit::Json) {
        write_out(&a.out, "report.json", &(report.to_json()? + "\n"))?;
    }
    for c in &report.classes {
        let s = &c.shapelet;
        println!(
            "class {}: representative {} shapelet [{}, {}) f={}",
            c.label,
            c.representative_id,
            s.start,
            s.start + s.length,
            s.f_score.0
        );
        if a.emit.contains(&Emit::Svg) {
            let title = format!(
                "class {}: series {}, shapelet at {}",
                c.label, c.representative_id, s.start
            );
            let series = &train.series[c.representative_id].values;
            write_out(
                &a.out,
                &format!("shapelet_{}.svg", file_safe(&c.label)),
                &plot::shapelet_svg(series, s, &title),
            )?;
        }
    }
    Ok(())
}

fn benchmark_config(a: &BenchmarkArgs) -> Result<(BenchmarkConfig, PathBuf)> {
    let (mut cfg, base_dir) = match (&a.config, &a.train, &a.test) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let cfg: BenchmarkConfig = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, dir)
        }
        (None, Some(train), Some(test)) => {
            let p = ParamsFile::load(a.params.as_deref())?;
            let mut cfg: BenchmarkConfig = toml::from_str("").expect("defaults");
            let base = p.sfa_base();
            cfg.alphabet_size = base.alphabet_size;
            cfg.mean_norm = base.mean_norm;
            if let Some(v) = &p.grid_window_lens {
                cfg.grid_window_lens = v.clone();
            }
            if let Some(v) = &p.grid_num_coeffs {
                cfg.grid_num_coeffs = v.clone();
            }
            cfg.train = p.train_config();
            let name = train
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset")
                .trim_end_matches("_TRAIN")
                .to_string();
            cfg.datasets.push(DatasetSpec {
                name,
                train: train.clone(),
                test: test.clone(),
                window_len: p.window_len,
                num_coeffs: p.num_coeffs,
            });
            (cfg, PathBuf::new())
        }
        _ => {
            return Err(CliError::Config(
                "give --config or both --train and --test".into(),
            ))
        }
    };
    if !a.method.is_empty() {
        cfg.methods = a.method.clone();
    }
    if !a.shots.is_empty() || !a.ratio.is_empty() {
        cfg.shots = a.shots.clone();
        cfg.ratios = a.ratio.clone();
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    Ok((cfg, base_dir))
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let (cfg, base_dir) = benchmark_config(a)?;
    let out = harness::run_benchmark(&cfg, &base_dir)?;

    for r in out.records.iter().filter(|r| r.outcome.is_err()) {
        log::warn!(
            "{} {} {} repeat {} failed: {}",
            r.dataset,
            r.method,
            r.mode,
            r.repeat,
            r.outcome.as_ref().unwrap_err()
        );
    }

    let markdown: String = out
        .tables
        .iter()
        .map(|t| t.to_markdown())
        .collect::<Vec<_>>()
        .join("\n");
    if a.emit.contains(&Emit::Csv) {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
        w.write_record([
            "dataset", "method", "mode", "repeat", "seed", "accuracy", "error",
        ])
        .map_err(csv_err)?;
        for r in &out.records {
            let (acc, err) = match &r.outcome {
                Ok(v) => (v.to_string(), String::new()),
                Err(e) => ("ERROR".to_string(), e.clone()),
            };
            w.write_record([
                r.dataset.clone(),
                r.method.to_string(),
                r.mode.to_string(),
                r.repeat.to_string(),
                r.seed.to_string(),
                acc,
                err,
            ])
            .map_err(csv_err)?;
        }
        let text = String::from_utf8(
            w.into_inner()
                .map_err(|e| CliError::Runtime(e.to_string()))?,
        )
        .expect("utf-8 csv");
        write_out(&a.out, "runs.csv", &text)?;
    }
    if a.emit.contains(&Emit::Json) {
        let doc = json!({
            "params": out.params.iter().map(|(name, p)| json!({
                "dataset": name, "window_len": p.window_len, "num_coeffs": p.num_coeffs,
            })).collect::<Vec<_>>(),
            "tables": out.tables,
            "excluded": out.excluded.iter().map(|(d, m, mode)| json!({
                "dataset": d, "method": m, "mode": mode.to_string(),
            })).collect::<Vec<_>>(),
        });
        write_out(&a.out, "summary.json", &(pretty(&doc)? + "\n"))?;
    }
    write_out(&a.out, "summary.md", &markdown)?;
    print!("{markdown}");
    Ok(())
}
