//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its elapsed time and enforcing the stated runtime budget.
//!
//! Direction criteria (4, 5, 6) run seeded simulations and compare medians
//! over seeds; formula criteria pin hand-computed values. Heavy tests are
//! serialized behind a mutex so each budget is measured alone.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use driftstream::detect::{Adwin, AdwinConfig, Ddm, DdmConfig, DriftSignal, Eddm, EddmConfig};
use driftstream::eval::{
    aut, metrics, run_prequential, window_sweep, ConfusionMatrix, DelayPolicy, MetricSeries,
    Metrics, RunOutput, SweepPoint, Windowing, WindowSweepConfig,
};
use driftstream::features::FeatureVector;
use driftstream::featurize::{VocabConfig, VocabExtractor, VocabFeaturizer};
use driftstream::generate::{
    generate_text_stream, generate_traces, GeneratorConfig, SubclassSchedule, TraceConfig,
};
use driftstream::learn::{
    average_path_length, AdaptiveRandomForest, ArfConfig, HoeffdingTree, HoeffdingTreeConfig,
    IsoNode, IsolationForest, IsolationForestConfig, Learner, NaiveBayes,
};
use driftstream::pipeline::{Pipeline, PipelineConfig, PipelineFactories, PipelineMode};
use driftstream::resample::{
    naive_oversample, temporal_oversample, temporal_undersample, FeatureRecord, OversampleConfig,
    PeriodPartition, ResampledRecord,
};
use driftstream::stream::{temporal_split, Stream};

static HEAVY: Mutex<()> = Mutex::new(());

fn finish(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    println!("ACCEPTANCE {name}: PASS ({elapsed:.2?}, budget {budget:.0?})");
    assert!(elapsed < budget, "{name} exceeded its runtime budget: {elapsed:.2?} >= {budget:.0?}");
}

fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// The default vocabulary-drift stream: 20,000 records, one drift, class
/// ratio 0.18.
fn default_stream(seed: u64) -> Stream {
    generate_text_stream(&GeneratorConfig { seed, ..GeneratorConfig::default() }).unwrap()
}

fn arf_factories(seed: u64) -> PipelineFactories<f64> {
    PipelineFactories {
        extractor: Box::new(|corpus| {
            Ok(Box::new(VocabExtractor::fit(VocabConfig::tfidf(), corpus)?))
        }),
        learner: Box::new(move |classes| {
            Box::new(AdaptiveRandomForest::<f64>::new(
                classes.to_vec(),
                ArfConfig { seed, ..ArfConfig::default() },
            ))
        }),
    }
}

fn run_mode(
    stream: &Stream,
    seed: u64,
    mode: PipelineMode,
    delay_days: i64,
) -> RunOutput<f64> {
    let (train, test) = temporal_split(stream, 0.5).unwrap();
    let detector: Option<Box<dyn driftstream::detect::Monitor<f64>>> = match mode {
        PipelineMode::NoDetector => None,
        _ => Some(Box::new(Adwin::<f64>::default())),
    };
    let mut pipeline =
        Pipeline::bootstrap(&train, PipelineConfig::new(mode), arf_factories(seed), detector)
            .unwrap();
    run_prequential(
        &mut pipeline,
        &test,
        DelayPolicy { delay_days },
        Windowing::Records(1000),
        "malicious",
    )
    .unwrap()
}

// Criterion 1: the accuracy pitfall is exact. Eight correct negatives and
// two missed positives give accuracy 0.80, recall 0, and an undefined
// (flagged) precision.
#[test]
fn c01_accuracy_pitfall_exact() {
    let started = Instant::now();
    let mut cm = ConfusionMatrix::new();
    for _ in 0..8 {
        cm.record("benign", "benign");
    }
    for _ in 0..2 {
        cm.record("malicious", "benign");
    }
    let m: Metrics<f64> = metrics(&cm, "malicious").unwrap();
    assert_eq!(m.accuracy, 0.80);
    assert_eq!(m.recall, 0.0);
    assert_eq!(m.precision, 0.0);
    assert!(!m.precision_defined);
    finish("C1 accuracy-pitfall", started, Duration::from_secs(1));
}

// Criterion 2: detector unit oracles.
#[test]
fn c02_detector_unit_oracles() {
    let started = Instant::now();

    // DDM thresholds by hand arithmetic to 1e-9.
    let s_min = (0.05f64 * 0.95 / 100.0).sqrt();
    let ddm: Ddm<f64> = Ddm::from_parts(DdmConfig::default(), 100, 0.08, 0.05, s_min);
    assert!((ddm.statistic() - 0.107_129_319_932_501_08).abs() < 1e-9);
    assert!((ddm.warning_threshold() - 0.093_588_989_435_406_74).abs() < 1e-9);
    assert!((ddm.drift_threshold() - 0.115_383_484_153_110_1).abs() < 1e-9);
    assert!(ddm.statistic() >= ddm.warning_threshold());
    assert!(ddm.statistic() < ddm.drift_threshold());

    // EDDM: shrinking gaps trigger Warning before Drift.
    let mut eddm: Eddm<f64> = Eddm::new(EddmConfig::default());
    let feed_gap = |d: &mut Eddm<f64>, gap: u64| -> DriftSignal {
        for _ in 0..gap.saturating_sub(1) {
            d.update(false);
        }
        d.update(true)
    };
    for _ in 0..35 {
        assert_eq!(feed_gap(&mut eddm, 50), DriftSignal::Normal);
    }
    let mut gap = 50u64;
    let mut saw_warning = false;
    let mut saw_drift = false;
    for _ in 0..600 {
        gap = gap.saturating_sub(1).max(5);
        match feed_gap(&mut eddm, gap) {
            DriftSignal::Warning => saw_warning = true,
            DriftSignal::Drift => {
                assert!(saw_warning, "EDDM drift fired before any warning");
                saw_drift = true;
                break;
            }
            DriftSignal::Normal => {}
        }
    }
    assert!(saw_drift, "EDDM never reached the drift level");

    // ADWIN never cuts a constant stream.
    let mut adwin: Adwin<f64> = Adwin::default();
    for _ in 0..5_000 {
        assert_eq!(adwin.update(0.5), DriftSignal::Normal);
    }

    finish("C2 detector-unit-oracles", started, Duration::from_secs(1));
}

// Criterion 3: ADWIN detection delay and false-alarm simulation oracles.
#[test]
fn c03_adwin_delay_and_false_alarms() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();
    use rand::{Rng, SeedableRng};

    let delays: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(300 + seed);
            let mut adwin: Adwin<f64> = Adwin::new(AdwinConfig { delta: 0.002, max_buckets: 5 });
            for _ in 0..1_000 {
                let v = if rng.random::<f64>() < 0.2 { 1.0 } else { 0.0 };
                adwin.update(v);
            }
            let mut delay = None;
            for i in 0..2_000 {
                let v = if rng.random::<f64>() < 0.8 { 1.0 } else { 0.0 };
                if adwin.update(v) == DriftSignal::Drift {
                    delay = Some(i + 1);
                    break;
                }
            }
            delay.expect("change never detected") as f64
        })
        .collect();
    let med = median(delays.clone());
    assert!(med <= 300.0, "median detection delay {med} > 300 (delays: {delays:?})");

    let alarms: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(700 + seed);
            let mut adwin: Adwin<f64> = Adwin::new(AdwinConfig { delta: 0.002, max_buckets: 5 });
            let mut alarms = 0u32;
            for _ in 0..10_000 {
                let v = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
                if adwin.update(v) == DriftSignal::Drift {
                    alarms += 1;
                }
            }
            alarms as f64
        })
        .collect();
    let mean_alarms = alarms.iter().sum::<f64>() / alarms.len() as f64;
    assert!(mean_alarms <= 1.0, "mean false alarms {mean_alarms} per 10k updates");

    finish("C3 adwin-delay-and-false-alarms", started, Duration::from_secs(10));
}

// Criterion 4: retraining the extractor on drift beats a static extractor
// by at least 5 F1 points over the final half of the evaluation windows.
#[test]
fn c04_extractor_retraining_direction() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();
    let gaps: Vec<f64> = (1..=10u64)
        .into_par_iter()
        .map(|seed| {
            let stream = default_stream(seed);
            let retrain = run_mode(&stream, seed, PipelineMode::RetrainExtractor, 0);
            let static_e = run_mode(&stream, seed, PipelineMode::StaticExtractor, 0);
            let gap = retrain.f1_series().final_half_mean()
                - static_e.f1_series().final_half_mean();
            assert!(retrain.drift_count() >= 1, "seed {seed}: retain variant saw no drift");
            gap
        })
        .collect();
    let med = median(gaps.clone());
    assert!(med >= 0.05, "median final-half F1 gap {med:.4} < 0.05 (gaps: {gaps:?})");
    finish("C4 extractor-retraining-direction", started, Duration::from_secs(120));
}

// Criterion 5: delayed labels erode the drift-detector advantage.
// (a) at delay 0 the detector variant's AUT(F1) is at least the plain
//     variant's; (b) at the largest delay the ordering ties or inverts;
// (c) the detector variant's time-aware precision at the largest delay is
//     at most 0.7x its delay-0 value.
#[test]
fn c05_delayed_label_direction() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();
    let delays = [0i64, 30, 120];
    let per_seed: Vec<(f64, f64, f64, f64, f64)> = (1..=10u64)
        .into_par_iter()
        .map(|seed| {
            let stream = default_stream(seed);
            let mut det_f1 = Vec::new();
            let mut nodet_f1 = Vec::new();
            let mut det_prec = Vec::new();
            for &d in &delays {
                let det = run_mode(&stream, seed, PipelineMode::RetrainExtractor, d);
                let nodet = run_mode(&stream, seed, PipelineMode::NoDetector, d);
                det_f1.push(det.aut_f1().unwrap());
                nodet_f1.push(nodet.aut_f1().unwrap());
                det_prec.push(det.aut_precision().unwrap());
            }
            (
                det_f1[0] - nodet_f1[0],  // (a): advantage at delay 0
                det_f1[2],                // (b): detector at delay 120
                nodet_f1[2],              // (b): plain at delay 120
                det_prec[2],              // (c): precision at delay 120
                det_prec[0],              // (c): precision at delay 0
            )
        })
        .collect();

    let adv0 = median(per_seed.iter().map(|t| t.0).collect());
    assert!(adv0 >= 0.0, "(a) detector advantage at delay 0 is negative: {adv0:.4}");

    let det_far = median(per_seed.iter().map(|t| t.1).collect());
    let nodet_far = median(per_seed.iter().map(|t| t.2).collect());
    assert!(
        det_far <= nodet_far + 0.02,
        "(b) detector still superior at delay 120: {det_far:.4} vs {nodet_far:.4}"
    );

    let drop = median(per_seed.iter().map(|t| t.3 / t.4).collect());
    assert!(drop <= 0.7, "(c) precision ratio at delay 120 is {drop:.4} > 0.7");

    finish("C5 delayed-label-direction", started, Duration::from_secs(180));
}

// Criterion 6: offline window F1 beats the near-online proportion by at
// least 10 points with the isolation forest.
#[test]
fn c06_window_sweep_direction() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();
    let gaps: Vec<f64> = (1..=10u64)
        .into_par_iter()
        .map(|seed| {
            let traces = generate_traces(&TraceConfig { seed, ..TraceConfig::default() }).unwrap();
            let cfg = WindowSweepConfig {
                proportions: vec![0.01, 1.0],
                ..WindowSweepConfig::default()
            };
            let points: Vec<SweepPoint<f64>> = window_sweep(&traces, &cfg).unwrap();
            points[1].metrics.f1 - points[0].metrics.f1
        })
        .collect();
    let med = median(gaps.clone());
    assert!(med >= 0.10, "median offline-online F1 gap {med:.4} < 0.10 (gaps: {gaps:?})");
    finish("C6 window-sweep-direction", started, Duration::from_secs(120));
}

// Criterion 7: temporal resampling invariants.
#[test]
fn c07_temporal_resampling_invariants() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();

    let subclass_cfg = |seed: u64| GeneratorConfig {
        n_records: 2_000,
        class_ratio: 0.25,
        drift_at: vec![],
        span_days: 120,
        subclass_schedule: Some(SubclassSchedule {
            period_length: 30,
            mixtures: vec![vec![1.0, 0.0], vec![0.7, 0.3], vec![0.3, 0.7], vec![0.0, 1.0]],
        }),
        seed,
        ..GeneratorConfig::default()
    };

    // Cross-period parent audit: temporal mode 0, naive control >= 1.
    {
        let stream = generate_text_stream(&subclass_cfg(5)).unwrap();
        let extractor = VocabFeaturizer::fit(VocabConfig::tfidf(), stream.records()).unwrap();
        let records: Vec<FeatureRecord<f64>> = stream
            .records()
            .iter()
            .map(|r| FeatureRecord {
                id: r.id.clone(),
                features: extractor.transform(r),
                label: r.true_label.clone().unwrap(),
                timestamp: r.timestamp,
            })
            .collect();
        let config = OversampleConfig { period_length: 30, seed: 11, ..OversampleConfig::default() };
        let partition = PeriodPartition::new(0, 30).unwrap();
        let period_by_id: std::collections::BTreeMap<&str, i64> = records
            .iter()
            .map(|r| (r.id.as_str(), partition.period_of(r.timestamp)))
            .collect();
        let cross_period = |out: &[ResampledRecord<f64>]| {
            out.iter()
                .filter_map(|r| match r {
                    ResampledRecord::Synthetic(s) => Some(&s.parents),
                    ResampledRecord::Real(_) => None,
                })
                .filter(|(a, b)| period_by_id[a.as_str()] != period_by_id[b.as_str()])
                .count()
        };
        let temporal = temporal_oversample(&records, &config).unwrap();
        assert!(temporal.iter().any(|r| r.is_synthetic()));
        assert_eq!(cross_period(&temporal), 0, "temporal mode crossed periods");
        let naive = naive_oversample(&records, &config).unwrap();
        assert!(cross_period(&naive) >= 1, "naive control never crossed periods");
    }

    // Undersampling preserves per-period subclass proportions of the
    // surviving majority class (chi-square p > 0.01 on at least 18/20
    // seeds, counting oracle).
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let passes: usize = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let stream = generate_text_stream(&subclass_cfg(100 + seed)).unwrap();
            let out = temporal_undersample(&stream, 30, 200 + seed).unwrap();
            let partition = PeriodPartition::new(stream.records()[0].timestamp, 30).unwrap();
            // Majority label per period from the original stream.
            let mut chi2 = 0.0f64;
            let mut df = 0.0f64;
            for period in 0..4i64 {
                let in_period = |r: &&driftstream::stream::StreamRecord| {
                    partition.period_of(r.timestamp) == period
                };
                let counts = |records: &[driftstream::stream::StreamRecord]| {
                    let mut by_sub: std::collections::BTreeMap<String, f64> = Default::default();
                    for r in records.iter().filter(in_period) {
                        if r.true_label.as_deref() == Some("benign") {
                            *by_sub.entry(r.subclass.clone().unwrap()).or_default() += 1.0;
                        }
                    }
                    by_sub
                };
                let before = counts(stream.records());
                let after = counts(out.records());
                let n_before: f64 = before.values().sum();
                let n_after: f64 = after.values().sum();
                for (sub, &b) in &before {
                    let expected = b / n_before * n_after;
                    if expected < 5.0 {
                        continue;
                    }
                    let observed = after.get(sub).copied().unwrap_or(0.0);
                    chi2 += (observed - expected).powi(2) / expected;
                    df += 1.0;
                }
                df -= 1.0;
            }
            let p = 1.0 - ChiSquared::new(df.max(1.0)).unwrap().cdf(chi2);
            usize::from(p > 0.01)
        })
        .sum();
    assert!(passes >= 18, "subclass proportions preserved on only {passes}/20 seeds");

    finish("C7 temporal-resampling-invariants", started, Duration::from_secs(60));
}

// Criterion 8: formula oracles.
#[test]
fn c08_formula_oracles() {
    let started = Instant::now();

    // TF-IDF hand example to 1e-6 (unnormalized and normalized).
    let docs: Vec<Vec<String>> =
        vec![vec!["a".into(), "b".into()], vec!["a".into()]];
    let unnorm = VocabFeaturizer::fit_token_lists(
        VocabConfig { normalize: Some(false), ..VocabConfig::tfidf() },
        docs.iter().map(|d| d.as_slice()),
    )
    .unwrap();
    let v: FeatureVector<f64> = unnorm.transform_tokens(&docs[0]);
    assert!((v.get(0) - 1.0).abs() < 1e-6);
    assert!((v.get(1) - 1.4054651081081644).abs() < 1e-6);
    let norm = VocabFeaturizer::fit_token_lists(
        VocabConfig::tfidf(),
        docs.iter().map(|d| d.as_slice()),
    )
    .unwrap();
    let v: FeatureVector<f64> = norm.transform_tokens(&docs[0]);
    assert!((v.get(0) - 0.5797386715376657).abs() < 1e-6);
    assert!((v.get(1) - 0.8148024746671689).abs() < 1e-6);

    // AUT trapezoid examples, exact.
    assert_eq!(aut(&MetricSeries::from_values(vec![0.7f64; 5])).unwrap(), 0.7);
    assert_eq!(aut(&MetricSeries::from_values(vec![1.0f64, 0.5, 0.5])).unwrap(), 0.625);
    let ramp: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect();
    assert_eq!(aut(&MetricSeries::from_values(ramp)).unwrap(), 0.5);

    // Isolation forest: c(2) = 1 exactly; path lengths equal brute-force
    // tree walks on psi = 4 trees.
    assert_eq!(average_path_length::<f64>(2), 1.0);
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let points: Vec<FeatureVector<f64>> = (0..40)
            .map(|_| {
                FeatureVector::from_pairs(
                    3,
                    [(0, rng.random::<f64>()), (1, rng.random::<f64>() * 2.0)],
                )
            })
            .collect();
        let forest = IsolationForest::fit(
            IsolationForestConfig { n_trees: 8, subsample: 4, seed: 9 },
            &points,
        )
        .unwrap();
        let walk = |nodes: &[IsoNode<f64>], x: &FeatureVector<f64>| -> f64 {
            let mut at = 0usize;
            let mut edges = 0.0;
            loop {
                match &nodes[at] {
                    IsoNode::Internal { feature, threshold, below, above } => {
                        at = if x.get(*feature) < *threshold { *below } else { *above };
                        edges += 1.0;
                    }
                    IsoNode::External { size } => {
                        let c = match *size {
                            0 | 1 => 0.0,
                            n => {
                                let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
                                2.0 * h - 2.0 * (n - 1) as f64 / n as f64
                            }
                        };
                        return edges + c;
                    }
                }
            }
        };
        for x in &points {
            for tree in forest.trees() {
                assert!((tree.path_length(x) - walk(tree.nodes(), x)).abs() < 1e-12);
            }
        }
    }

    // Hoeffding bound at n = 200, delta = 1e-7, two classes.
    let ht = HoeffdingTree::<f64>::new(
        vec!["a".into(), "b".into()],
        HoeffdingTreeConfig::default(),
    );
    assert!((ht.hoeffding_bound(200.0) - 0.200737).abs() < 1e-6);

    // Naive Bayes posterior matches hand Bayes arithmetic to 1e-9.
    let mut nb = NaiveBayes::<f64>::new(vec!["pos".into(), "neg".into()]);
    nb.learn_one(&FeatureVector::from_pairs(2, [(0, 1.0)]), "pos");
    nb.learn_one(&FeatureVector::from_pairs(2, [(1, 1.0)]), "neg");
    let proba = nb.predict_proba(&FeatureVector::from_pairs(2, [(0, 1.0)]));
    assert!((proba["pos"] - 2.0 / 3.0).abs() < 1e-9);
    assert!((proba["neg"] - 1.0 / 3.0).abs() < 1e-9);

    finish("C8 formula-oracles", started, Duration::from_secs(10));
}

// Criterion 9: reduction checks.
#[test]
fn c09_reduction_checks() {
    let _guard = HEAVY.lock().unwrap();
    let started = Instant::now();
    use rand::{Rng, SeedableRng};

    // ARF(n_trees = 1, constant weight, no monitors, full subspace) is a
    // plain Hoeffding tree, prediction for prediction, over 5,000 records.
    let mut arf = AdaptiveRandomForest::<f64>::new(
        vec!["neg".into(), "pos".into()],
        ArfConfig::degenerate(3),
    );
    let mut ht = HoeffdingTree::<f64>::new(
        vec!["neg".into(), "pos".into()],
        HoeffdingTreeConfig::default(),
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5_000 {
        let is_pos = rng.random::<f64>() < 0.4;
        let mut pairs = vec![(2 + rng.random_range(0..6), 1.0)];
        if is_pos {
            pairs.push((0, 1.0));
        }
        let x = FeatureVector::from_pairs(8, pairs);
        let y = if is_pos { "pos" } else { "neg" };
        assert_eq!(arf.predict_one(&x), ht.predict_one(&x));
        arf.learn_one(&x, y);
        ht.learn_one(&x, y);
    }

    // run_prequential(delay 0, NoDetector) equals the simple-loop oracle
    // record for record.
    let stream = generate_text_stream(&GeneratorConfig {
        n_records: 2_000,
        drift_at: vec![],
        vocab_size: 40,
        tokens_per_record: 8,
        seed: 17,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let (train, test) = temporal_split(&stream, 0.5).unwrap();
    let factories = PipelineFactories::<f64> {
        extractor: Box::new(|c| Ok(Box::new(VocabExtractor::fit(VocabConfig::tfidf(), c)?))),
        learner: Box::new(|classes| Box::new(NaiveBayes::new(classes.to_vec()))),
    };
    let mut pipeline = Pipeline::bootstrap(
        &train,
        PipelineConfig::new(PipelineMode::NoDetector),
        factories,
        None,
    )
    .unwrap();
    let out = run_prequential(
        &mut pipeline,
        &test,
        DelayPolicy::immediate(),
        Windowing::Records(200),
        "malicious",
    )
    .unwrap();

    let extractor = VocabFeaturizer::fit(VocabConfig::tfidf(), train.records()).unwrap();
    let mut learner = NaiveBayes::<f64>::new(train.classes());
    for r in train.records() {
        learner.learn_warm(&extractor.transform(r), r.true_label.as_deref().unwrap());
    }
    for (r, p) in test.records().iter().zip(&out.predictions) {
        let x = extractor.transform(r);
        assert_eq!(learner.predict_one(&x), p.pred, "record {} diverged", r.id);
        learner.learn_one(&x, r.true_label.as_deref().unwrap());
    }

    finish("C9 reduction-checks", started, Duration::from_secs(60));
}
