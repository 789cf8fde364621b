//! Experiment execution: materialize the dataset, build the pipeline, run,
//! and write artifacts (summary.json, metrics.csv, events.jsonl).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use driftstream::detect::{Adwin, Ddm, Eddm, Monitor};
use driftstream::eval::{
    run_prequential, window_sweep, DelayPolicy, Metrics, RunOutput, SweepPoint, Windowing,
};
use driftstream::featurize::{HashFeaturizer, VocabConfig, VocabExtractor, VectorMode};
use driftstream::generate::{derive_seed, generate_text_stream, generate_traces, Trace};
use driftstream::learn::{AdaptiveRandomForest, HoeffdingTree, NaiveBayes};
use driftstream::pipeline::{ExtractorFactory, LearnerFactory, Pipeline, PipelineConfig, PipelineEvent, PipelineFactories};
use driftstream::resample::{
    temporal_oversample, temporal_undersample, FeatureRecord, OversampleConfig,
};
use driftstream::stream::{load_stream, temporal_split, Stream};
use driftstream::Value;

use crate::config::{
    DatasetSpec, DetectorSpec, ExperimentConfig, FeaturizerSpec, LearnerSpec, ResamplingSpec,
};

/// The materialized dataset plus the SHA-256 of its canonical serialization
/// (sorted JSONL bytes), which gates report joins.
pub enum Dataset {
    Stream { stream: Stream, sha256: String },
    Traces { traces: Vec<Trace>, sha256: String },
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn traces_to_jsonl(traces: &[Trace]) -> String {
    let mut out = String::new();
    for t in traces {
        out.push_str(&serde_json::to_string(t).expect("trace serializes"));
        out.push('\n');
    }
    out
}

pub fn materialize_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    match &config.dataset {
        DatasetSpec::File { path, format } => {
            let stream = load_stream(path, *format)
                .with_context(|| format!("loading {}", path.display()))?;
            let sha256 = hex_digest(stream.to_jsonl().as_bytes());
            Ok(Dataset::Stream { stream, sha256 })
        }
        DatasetSpec::Generator(g) => {
            let stream = generate_text_stream(g)?;
            let sha256 = hex_digest(stream.to_jsonl().as_bytes());
            Ok(Dataset::Stream { stream, sha256 })
        }
        DatasetSpec::Traces(t) => {
            let traces = generate_traces(t)?;
            let sha256 = hex_digest(traces_to_jsonl(&traces).as_bytes());
            Ok(Dataset::Traces { traces, sha256 })
        }
    }
}

fn build_extractor_factory(spec: &FeaturizerSpec) -> ExtractorFactory<Value> {
    match spec {
        FeaturizerSpec::Bow(cfg) => {
            let cfg = VocabConfig { mode: VectorMode::Counts, ..*cfg };
            Box::new(move |corpus| Ok(Box::new(VocabExtractor::fit(cfg, corpus)?)))
        }
        FeaturizerSpec::Tfidf(cfg) => {
            let cfg = VocabConfig { mode: VectorMode::TfIdf, ..*cfg };
            Box::new(move |corpus| Ok(Box::new(VocabExtractor::fit(cfg, corpus)?)))
        }
        FeaturizerSpec::Hashing(cfg) => {
            let cfg = *cfg;
            Box::new(move |_corpus| Ok(Box::new(HashFeaturizer::new(cfg)?)))
        }
    }
}

fn build_learner_factory(spec: &LearnerSpec, seed: u64) -> LearnerFactory<Value> {
    match spec {
        LearnerSpec::Nb {} => Box::new(|classes| Box::new(NaiveBayes::new(classes.to_vec()))),
        LearnerSpec::Ht(cfg) => {
            let cfg = *cfg;
            Box::new(move |classes| Box::new(HoeffdingTree::new(classes.to_vec(), cfg)))
        }
        LearnerSpec::Arf(cfg) => {
            let cfg = driftstream::learn::ArfConfig { seed, ..*cfg };
            Box::new(move |classes| Box::new(AdaptiveRandomForest::new(classes.to_vec(), cfg)))
        }
        LearnerSpec::Iforest(_) => unreachable!("iforest runs the window sweep, not the pipeline"),
    }
}

fn build_detector(spec: &DetectorSpec) -> Option<Box<dyn Monitor<Value>>> {
    match spec {
        DetectorSpec::None => None,
        DetectorSpec::Ddm(cfg) => Some(Box::new(Ddm::<Value>::new(*cfg))),
        DetectorSpec::Eddm(cfg) => Some(Box::new(Eddm::<Value>::new(*cfg))),
        DetectorSpec::Adwin(cfg) => Some(Box::new(Adwin::<Value>::new(*cfg))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FinalBlock {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub tp: u64,
    pub fp: u64,
    pub r#fn: u64,
    pub tn: u64,
    pub confusion: std::collections::BTreeMap<String, u64>,
}

/// summary.json for a prequential run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: String,
    pub config_key: String,
    pub dataset_sha256: String,
    pub seed: u64,
    pub delay_days: i64,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_scored: u64,
    pub n_delivered: u64,
    pub windows: usize,
    pub undefined_precision_windows: usize,
    pub aut_f1: f64,
    pub aut_precision: f64,
    pub aut_recall: f64,
    pub aut_accuracy: f64,
    pub r#final: FinalBlock,
    pub drifts: Vec<PipelineEvent>,
    pub warning_episodes: usize,
}

/// summary.json for a trace window-sweep run.
#[derive(Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: String,
    pub config_key: String,
    pub dataset_sha256: String,
    pub seed: u64,
    pub threshold: f64,
    pub points: Vec<SweepSummaryPoint>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepSummaryPoint {
    pub proportion: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn final_block(m: &Metrics<Value>, out: &RunOutput<Value>, positive: &str) -> FinalBlock {
    let cm = &out.confusion;
    FinalBlock {
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        precision_defined: m.precision_defined,
        recall_defined: m.recall_defined,
        tp: cm.true_positives(positive),
        fp: cm.false_positives(positive),
        r#fn: cm.false_negatives(positive),
        tn: cm.total()
            - cm.true_positives(positive)
            - cm.false_positives(positive)
            - cm.false_negatives(positive),
        confusion: cm.iter().map(|(t, p, n)| (format!("{t}|{p}"), n)).collect(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

fn write_metrics_csv(path: &Path, out: &RunOutput<Value>) -> Result<()> {
    let mut csv = String::from("window_index,accuracy,precision,recall,f1\n");
    for (i, m) in out.windows.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{},{}\n", m.accuracy, m.precision, m.recall, m.f1));
    }
    write_file(path, csv.as_bytes())
}

fn write_events_jsonl(path: &Path, events: &[PipelineEvent]) -> Result<()> {
    let mut text = String::new();
    for e in events {
        text.push_str(&serde_json::to_string(e)?);
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

fn write_predictions_jsonl(path: &Path, out: &RunOutput<Value>) -> Result<()> {
    let mut text = String::new();
    for p in &out.predictions {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

/// Run one prequential experiment at one delay; artifacts land in `dir`.
pub fn run_prequential_experiment(
    config: &ExperimentConfig,
    stream: &Stream,
    dataset_sha256: &str,
    delay_days: i64,
    dir: &Path,
    log_predictions: bool,
) -> Result<RunSummary> {
    let (train, eval) = temporal_split(stream, config.split_fraction)?;
    let train = match &config.resampling {
        ResamplingSpec::TemporalUnder { period_length } => {
            temporal_undersample(&train, *period_length, derive_seed(config.seed, "undersample"))?
        }
        _ => train,
    };

    let learner_seed = derive_seed(config.seed, "learner");
    let factories = PipelineFactories {
        extractor: build_extractor_factory(&config.featurizer),
        learner: build_learner_factory(&config.learner, learner_seed),
    };
    let detector = build_detector(&config.detector);
    let pipeline_config = PipelineConfig::new(config.mode);

    let mut pipeline = match &config.resampling {
        ResamplingSpec::TemporalOver { period_length, k_neighbors, target_ratio } => {
            // Oversampling works in feature space: fit E on the raw train
            // records, synthesize minority feature vectors per period, and
            // warm the classifier on real plus synthetic points. Synthetic
            // records carry no tokens and never enter the raw-record
            // buffers.
            let extractor = (factories.extractor)(train.records())?;
            let feature_records: Vec<FeatureRecord<Value>> = train
                .records()
                .iter()
                .map(|r| FeatureRecord {
                    id: r.id.clone(),
                    features: extractor.transform(r),
                    label: r.true_label.clone().expect("bootstrap records are labeled"),
                    timestamp: r.timestamp,
                })
                .collect();
            let oversample_config = OversampleConfig {
                period_length: *period_length,
                k_neighbors: *k_neighbors,
                target_ratio: *target_ratio,
                seed: derive_seed(config.seed, "oversample"),
            };
            let mut resampled = temporal_oversample(&feature_records, &oversample_config)?;
            resampled.sort_by(|a, b| {
                (a.record().timestamp, &a.record().id).cmp(&(b.record().timestamp, &b.record().id))
            });
            let mut learner = (factories.learner)(&train.classes());
            for r in &resampled {
                learner.learn_warm(&r.record().features, &r.record().label);
            }
            Pipeline::from_parts(
                pipeline_config,
                factories,
                train.classes(),
                extractor,
                learner,
                detector,
            )?
        }
        _ => Pipeline::bootstrap(&train, pipeline_config, factories, detector)?,
    };

    let windowing = match config.calendar_days {
        Some(days) => Windowing::CalendarDays(days),
        None => Windowing::Records(config.window_w),
    };
    let out = run_prequential(
        &mut pipeline,
        &eval,
        DelayPolicy { delay_days },
        windowing,
        &config.positive_label,
    )?;

    let summary = RunSummary {
        kind: "prequential".into(),
        config_key: config.config_key(),
        dataset_sha256: dataset_sha256.to_owned(),
        seed: config.seed,
        delay_days,
        n_train: train.len(),
        n_eval: eval.len(),
        n_scored: out.n_scored,
        n_delivered: out.n_delivered,
        windows: out.windows.len(),
        undefined_precision_windows: out.undefined_precision_windows(),
        aut_f1: out.aut_f1().unwrap_or(f64::NAN),
        aut_precision: out.aut_precision().unwrap_or(f64::NAN),
        aut_recall: out.aut_recall().unwrap_or(f64::NAN),
        aut_accuracy: out.aut_accuracy().unwrap_or(f64::NAN),
        r#final: final_block(&out.final_metrics, &out, &config.positive_label),
        drifts: out.events.iter().filter(|e| e.kind == "drift").cloned().collect(),
        warning_episodes: out.events.iter().filter(|e| e.kind == "warning").count(),
    };

    write_file(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    write_metrics_csv(&dir.join("metrics.csv"), &out)?;
    write_events_jsonl(&dir.join("events.jsonl"), &out.events)?;
    if log_predictions {
        write_predictions_jsonl(&dir.join("predictions.jsonl"), &out)?;
    }
    Ok(summary)
}

/// Run a trace window-sweep experiment; artifacts land in `dir`.
pub fn run_sweep_experiment(
    config: &ExperimentConfig,
    traces: &[Trace],
    dataset_sha256: &str,
    dir: &Path,
) -> Result<SweepSummary> {
    let LearnerSpec::Iforest(forest) = &config.learner else {
        bail!("trace datasets need the iforest learner");
    };
    let sweep_config = driftstream::eval::WindowSweepConfig {
        forest: driftstream::learn::IsolationForestConfig {
            seed: derive_seed(config.seed, "iforest"),
            ..*forest
        },
        train_fraction: config.split_fraction,
        ..config.sweep.clone()
    };
    let points: Vec<SweepPoint<Value>> = window_sweep(traces, &sweep_config)?;

    let summary = SweepSummary {
        kind: "window_sweep".into(),
        config_key: config.config_key(),
        dataset_sha256: dataset_sha256.to_owned(),
        seed: config.seed,
        threshold: points.first().map(|p| p.threshold).unwrap_or(f64::NAN),
        points: points
            .iter()
            .map(|p| SweepSummaryPoint {
                proportion: p.proportion,
                accuracy: p.metrics.accuracy,
                precision: p.metrics.precision,
                recall: p.metrics.recall,
                f1: p.metrics.f1,
            })
            .collect(),
    };

    let mut csv = String::from("proportion,accuracy,precision,recall,f1\n");
    for p in &summary.points {
        csv.push_str(&format!("{},{},{},{},{}\n", p.proportion, p.accuracy, p.precision, p.recall, p.f1));
    }
    write_file(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    write_file(&dir.join("metrics.csv"), csv.as_bytes())?;
    write_file(&dir.join("events.jsonl"), b"")?;
    Ok(summary)
}

/// Execute `run` for every configured delay. Returns the summary paths.
pub fn cmd_run(config: &ExperimentConfig, log_predictions: bool) -> Result<Vec<PathBuf>> {
    let dataset = materialize_dataset(config)?;
    match &dataset {
        Dataset::Traces { traces, sha256 } => {
            run_sweep_experiment(config, traces, sha256, &config.output_dir)?;
            println!("window sweep done: {}", config.output_dir.display());
            Ok(vec![config.output_dir.join("summary.json")])
        }
        Dataset::Stream { stream, sha256 } => {
            let delays = config.delay_days.values();
            let keyed = config.delay_days.is_list();
            let mut paths = Vec::new();
            let results: Vec<Result<PathBuf>> = delays
                .iter()
                .map(|&d| {
                    let dir = if keyed {
                        config.output_dir.join(format!("delay_{d}"))
                    } else {
                        config.output_dir.clone()
                    };
                    let summary =
                        run_prequential_experiment(config, stream, sha256, d, &dir, log_predictions)?;
                    println!(
                        "delay {d}: aut_f1={:.4} final_f1={:.4} drifts={} -> {}",
                        summary.aut_f1,
                        summary.r#final.f1,
                        summary.drifts.len(),
                        dir.display()
                    );
                    Ok(dir.join("summary.json"))
                })
                .collect();
            for r in results {
                paths.push(r?);
            }
            Ok(paths)
        }
    }
}

/// Generate the dataset only, writing it as JSONL.
pub fn cmd_gen(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dataset = materialize_dataset(config)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join("dataset.jsonl"));
    match &dataset {
        Dataset::Stream { stream, sha256 } => {
            write_file(&path, stream.to_jsonl().as_bytes())?;
            println!("wrote {} records to {}", stream.len(), path.display());
            for (label, count) in stream.class_counts() {
                println!("  {label}: {count}");
            }
            println!("sha256: {sha256}");
        }
        Dataset::Traces { traces, sha256 } => {
            write_file(&path, traces_to_jsonl(traces).as_bytes())?;
            let anomalous = traces
                .iter()
                .filter(|t| t.label == driftstream::generate::TraceLabel::Anomalous)
                .count();
            println!("wrote {} traces to {}", traces.len(), path.display());
            println!("  normal: {}", traces.len() - anomalous);
            println!("  anomalous: {anomalous}");
            println!("sha256: {sha256}");
        }
    }
    Ok(path)
}
