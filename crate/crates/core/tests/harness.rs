use hierlab_core::generators::{hnm_generate, hnm_three_community};
use hierlab_core::harness::{
    analyze, make_balanced_split, make_hierarchy_split, micro_f1, norm_quintiles, prepare_dataset,
    run_prepared, weighted_f1, write_analysis, Band, DatasetSpec, ExperimentConfig, RunReport,
    SeedStatus, SplitSpec,
};
use hierlab_core::model::Ablation;
use hierlab_core::stats::mean;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-class counts from an explicit confusion matrix, then F1 by definition.
fn naive_f1(pred: &[usize], truth: &[usize], classes: usize) -> (f64, f64) {
    let mut m = vec![vec![0usize; classes]; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    let n = truth.len() as f64;
    let mut weighted = 0.0;
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    for c in 0..classes {
        let tp = m[c][c];
        let fp: usize = (0..classes).filter(|&t| t != c).map(|t| m[t][c]).sum();
        let fnn: usize = (0..classes).filter(|&p| p != c).map(|p| m[c][p]).sum();
        let support = tp + fnn;
        let f1 = if 2 * tp + fp + fnn == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fnn) as f64
        };
        weighted += f1 * support as f64 / n;
        tp_all += tp;
        fp_all += fp;
        fn_all += fnn;
    }
    let micro = 2.0 * tp_all as f64 / (2 * tp_all + fp_all + fn_all) as f64;
    (weighted, micro)
}

fn tiny_config(seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(DatasetSpec::Hnm3 { iterations: 2 });
    c.seeds = seeds;
    c.model.epochs = 15;
    c.model.hidden = 8;
    c.embedding.epochs = 5;
    c.ablations = vec![Ablation::None, Ablation::Both];
    c
}

#[test]
fn hand_computed_ten_node_table() {
    // truth 0 0 0 0 1 1 1 2 2 2, predictions with 6 right:
    // class 0: tp 3, fp 1, fn 1 -> 6/8; class 1: tp 2, fp 3, fn 1 -> 4/8;
    // class 2: tp 1, fp 0, fn 2 -> 2/4; weighted = (4·0.75 + 3·0.5 + 3·0.5) / 10
    let truth: Vec<Option<usize>> = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2].map(Some).to_vec();
    let pred = [0, 0, 0, 1, 1, 1, 0, 2, 1, 1];
    let mask: Vec<usize> = (0..10).collect();
    let expected = (4.0 * 0.75 + 3.0 * 0.5 + 3.0 * 0.5) / 10.0;
    assert!((weighted_f1(&pred, &truth, &mask, 3).unwrap() - expected).abs() < 1e-12);
    assert!((micro_f1(&pred, &truth, &mask, 3).unwrap() - 0.6).abs() < 1e-12);
    // class 2 is never predicted here: its F1 is 0 and still carries its support
    let pred = [0, 0, 0, 0, 1, 1, 1, 0, 1, 1];
    let expected = (4.0 * (8.0 / 9.0) + 3.0 * (6.0 / 8.0)) / 10.0;
    assert!((weighted_f1(&pred, &truth, &mask, 3).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn splits_are_reproducible_from_seed() {
    let h = hnm_three_community(4).unwrap();
    let spec = SplitSpec::fractional();
    let a = make_balanced_split(&h.graph, &spec, 7).unwrap();
    assert_eq!(a, make_balanced_split(&h.graph, &spec, 7).unwrap());
    assert_ne!(a, make_balanced_split(&h.graph, &spec, 8).unwrap());
    let band = Band::Level("top".parse().unwrap());
    let b = make_hierarchy_split(&h.graph, band, Some(&h.annotation), None, &spec, 3).unwrap();
    let c = make_hierarchy_split(&h.graph, band, Some(&h.annotation), None, &spec, 3).unwrap();
    assert_eq!(b.mask, c.mask);
}

#[test]
fn fractional_split_of_1024_nodes() {
    let h = hnm_generate(4, 5).unwrap();
    let labels = (0..1024).map(|v| Some(v % 4)).collect();
    let g = h.graph.with_labels(labels, 4).unwrap();
    let m = make_balanced_split(&g, &SplitSpec::fractional(), 0).unwrap();
    assert!((m.test.len() as i64 - 818).abs() <= 1);
    let mut counts = [0; 4];
    for &v in &m.train {
        counts[g.label(v).unwrap()] += 1;
    }
    assert!(counts.iter().all(|&c| c == counts[0]));
}

#[test]
fn quintile_band_draws_low_norms() {
    let h = hnm_three_community(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let norms: Vec<f64> = (0..h.graph.node_count())
        .map(|_| rng.gen_range(0.0..5.0))
        .collect();
    let q = norm_quintiles(&norms);
    let spec = SplitSpec {
        per_class: Some(5),
        ..SplitSpec::fractional()
    };
    let s =
        make_hierarchy_split(&h.graph, Band::Quintile(1), None, Some(&norms), &spec, 0).unwrap();
    assert_eq!(s.top_up_fraction, 0.0);
    assert!(s.mask.train.iter().all(|&v| q[v] == 1));
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let cut = sorted[sorted.len() / 5];
    assert!(s.mask.train.iter().all(|&v| norms[v] <= cut));
}

#[test]
fn five_seeds_give_five_entries_and_reruns_match() {
    let config = tiny_config(vec![0, 1, 2, 3, 4]);
    let data = prepare_dataset(&config.dataset).unwrap();
    let a = run_prepared(&data, &config).unwrap();
    let b = run_prepared(&data, &config).unwrap();
    assert!(a.all_succeeded());
    assert_eq!(a.variants.len(), 2);
    for v in &a.variants {
        assert_eq!(v.seeds.len(), 5);
        let w: Vec<f64> = v
            .seeds
            .iter()
            .map(|s| match &s.status {
                SeedStatus::Ok(m) => m.weighted_f1,
                SeedStatus::Failed { error } => panic!("{error}"),
            })
            .collect();
        assert!((v.weighted_f1.mean - mean(&w)).abs() < 1e-9);
        assert_eq!(v.weighted_f1.count, 5);
    }
    assert_eq!(a.variants, b.variants);
    assert_eq!(a.config, b.config);
    assert_eq!(a.dataset, b.dataset);
}

#[test]
fn report_round_trips_through_json_and_disk() {
    let config = tiny_config(vec![3, 9]);
    let data = prepare_dataset(&config.dataset).unwrap();
    let report = run_prepared(&data, &config).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);

    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    let disk: RunReport =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(disk, report);
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(!dir.path().join("report.tmp").exists());
}

#[test]
fn failing_seeds_are_recorded() {
    let mut config = tiny_config(vec![0, 1]);
    config.split.per_class = Some(10_000);
    let data = prepare_dataset(&config.dataset).unwrap();
    let report = run_prepared(&data, &config).unwrap();
    assert!(!report.all_succeeded());
    for v in &report.variants {
        assert_eq!(v.failures(), 2);
        assert_eq!(v.weighted_f1.count, 0);
    }
}

#[test]
fn config_schema_rejects_unknown_fields_and_bad_bands() {
    let ok = r#"{"dataset": {"kind": "hnm3", "iterations": 3}, "seeds": [1],
                 "split": {"per_class": 4, "band": "q2"}, "ablations": ["none", "both"]}"#;
    let c: ExperimentConfig = serde_json::from_str(ok).unwrap();
    assert_eq!(c.split.band, Some(Band::Quintile(2)));
    c.validate().unwrap();
    let unknown = r#"{"dataset": {"kind": "hnm3", "iterations": 3}, "seeds": [1], "colour": 1}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(unknown).is_err());
    let band =
        r#"{"dataset": {"kind": "hnm3", "iterations": 3}, "seeds": [1], "split": {"band": "q6"}}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(band).is_err());
    let empty: ExperimentConfig =
        serde_json::from_str(r#"{"dataset": {"kind": "hnm3", "iterations": 3}, "seeds": []}"#)
            .unwrap();
    assert!(empty.validate().is_err());
}

#[test]
fn analysis_of_hnm_has_inverse_degree_clustering() {
    let g = hnm_generate(4, 5).unwrap().graph;
    let a = analyze(&g).unwrap();
    assert!((a.clustering_slope.unwrap() + 1.0).abs() <= 0.2);
    let dir = tempfile::tempdir().unwrap();
    write_analysis(dir.path(), &a).unwrap();
    for f in [
        "clustering_by_degree.csv",
        "degree_correlation.csv",
        "betweenness_correlation.csv",
        "degree_histogram.csv",
        "summary.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

proptest! {
    #[test]
    fn metrics_match_confusion_matrix(
        classes in 2usize..6,
        rows in prop::collection::vec((0usize..6, 0usize..6), 1..60)
    ) {
        let truth_raw: Vec<usize> = rows.iter().map(|r| r.0 % classes).collect();
        let pred: Vec<usize> = rows.iter().map(|r| r.1 % classes).collect();
        let truth: Vec<Option<usize>> = truth_raw.iter().map(|&t| Some(t)).collect();
        let mask: Vec<usize> = (0..truth.len()).collect();
        let (w, m) = naive_f1(&pred, &truth_raw, classes);
        prop_assert!((weighted_f1(&pred, &truth, &mask, classes).unwrap() - w).abs() < 1e-12);
        prop_assert!((micro_f1(&pred, &truth, &mask, classes).unwrap() - m).abs() < 1e-12);
    }

    #[test]
    fn balanced_split_is_disjoint_and_balanced(seed in 0u64..10_000, per_class in 1usize..=12) {
        // 192 nodes: 80% test leaves room for up to 12 labels per class
        let h = hnm_three_community(3).unwrap();
        let spec = SplitSpec { per_class: Some(per_class), ..SplitSpec::fractional() };
        let m = make_balanced_split(&h.graph, &spec, seed).unwrap();
        let mut seen = vec![false; h.graph.node_count()];
        for &v in m.train.iter().chain(&m.val).chain(&m.test) {
            prop_assert!(!seen[v]);
            seen[v] = true;
        }
        prop_assert_eq!(m.train.len(), 3 * per_class);
    }
}
