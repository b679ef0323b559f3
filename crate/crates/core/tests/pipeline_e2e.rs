mod common;

use std::fs;
use std::path::Path;

use common::*;
use maskscope_core::pipeline::{self, PipelineConfig};
use maskscope_core::puretypes::DEFAULT_DELTA;
use maskscope_core::Error;

fn simulated(dir: &Path, n: usize, seed: u64) -> PipelineConfig {
    let sim = PipelineConfig {
        output_dir: dir.join("sim"),
        n,
        logit_n: n,
        seed,
        ..Default::default()
    };
    pipeline::simulate(&sim).unwrap();
    PipelineConfig {
        events: Some(dir.join("sim/events.jsonl")),
        profiles: Some(dir.join("sim/profiles.jsonl")),
        bias_table: Some(dir.join("sim/bias_table.csv")),
        output_dir: dir.join("out"),
        ..Default::default()
    }
}

#[test]
fn report_estimates_match_the_grid_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulated(tmp.path(), 582, 7);
    let bundle = pipeline::run_report(&cfg).unwrap();
    let a = &bundle.analysis;
    assert_eq!(a.observations.len(), 582);
    let (xs, ys) = split_obs(&a.observations);
    let (p, q, _) = puretypes_oracle(&xs, &ys, DEFAULT_DELTA, 200);
    assert!((a.puretypes.params.p - p).abs() <= 1e-3);
    assert!((a.puretypes.params.q - q).abs() <= 1e-3);

    for chain in [&a.stages.puretypes, &a.stages.regression] {
        assert!(chain.windows(2).all(|w| w[0].count >= w[1].count), "{chain:?}");
    }
    for g in &a.groups {
        if g.n > 0 {
            assert!((g.negative_share.unwrap() + g.positive_share.unwrap() - 1.0).abs() < 1e-12);
        }
    }
    assert_eq!(a.table.total() as usize, a.stages.puretypes[0].count);
    assert!(a.stages.anomalous_ages > 0);

    let files: Vec<String> = fs::read_dir(&cfg.output_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    for name in [
        "attitude_table.csv",
        "hist_attitude.csv",
        "hist_gender.csv",
        "hist_age.csv",
        "hist_x.csv",
        "group_proportions.csv",
        "logit_summary.txt",
        "logit_summary.csv",
        "puretypes_fit.json",
        "contour_grid.csv",
        "summary.txt",
        "manifest.json",
    ] {
        assert!(files.iter().any(|f| f == name), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cohort_total"], a.table.total());
    assert_eq!(manifest["stages"]["anomalous_ages"], a.stages.anomalous_ages);
}

#[test]
fn simulated_world_truth_survives_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = simulated(tmp.path(), 300, 3);
    let bundle = pipeline::run_report(&cfg).unwrap();
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("sim/truth.json")).unwrap()).unwrap();
    assert_eq!(truth["cohort"]["p_true"], 0.95);
    assert_eq!(truth["cohort"]["q_true"], 0.45);
    assert_eq!(truth["cohort"]["seed"], 3);
    assert_eq!(truth["cohort"]["n"], 300);
    assert_eq!(bundle.analysis.observations.len(), 300);
}

#[test]
fn all_positive_cohort_has_unit_positive_shares() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = PipelineConfig {
        output_dir: tmp.path().join("sim"),
        n: 200,
        p_true: 1.0,
        q_true: 1.0,
        ..Default::default()
    };
    pipeline::simulate(&sim).unwrap();
    let cfg = PipelineConfig {
        events: Some(tmp.path().join("sim/events.jsonl")),
        profiles: Some(tmp.path().join("sim/profiles.jsonl")),
        bias_table: Some(tmp.path().join("sim/bias_table.csv")),
        output_dir: tmp.path().join("out"),
        ..Default::default()
    };
    // the regression is separated when every response is 1
    match pipeline::run_report(&cfg) {
        Err(Error::Separation(_)) | Err(Error::RankDeficient { .. }) => {}
        other => panic!("expected a regression failure, got {other:?}"),
    }
    let log = pipeline::load_events(cfg.events.as_deref().unwrap()).unwrap();
    let profiles = pipeline::load_profiles(cfg.profiles.as_deref().unwrap()).unwrap();
    let biases = pipeline::load_bias_table(cfg.bias_table.as_deref().unwrap()).unwrap();
    let cohort = pipeline::build_cohort(&log, &profiles, &biases, &cfg).unwrap();
    let obs: Vec<_> = cohort
        .users
        .iter()
        .filter_map(|u| Some(maskscope_core::puretypes::Observation::new(u.ideology?.x, u.attitude.overall.polarity()?).unwrap()))
        .collect();
    for g in pipeline::group_shares(&obs, &cfg.cutoffs()).unwrap() {
        if g.n > 0 {
            assert_eq!(g.positive_share, Some(1.0));
        }
    }
}

#[test]
fn missing_input_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        events: Some(tmp.path().join("nope.jsonl")),
        profiles: Some(tmp.path().join("p.jsonl")),
        bias_table: Some(tmp.path().join("b.csv")),
        output_dir: tmp.path().join("out"),
        ..Default::default()
    };
    let err = pipeline::run_report(&cfg).unwrap_err();
    assert_eq!(err.class(), "io");
    assert!(err.to_string().contains("nope.jsonl"), "{err}");
}

#[test]
fn empty_sample_reports_stage_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = simulated(tmp.path(), 50, 1);
    cfg.min_subscriptions = 1000;
    let err = pipeline::run_report(&cfg).unwrap_err();
    assert_eq!(err.class(), "empty-sample");
    let msg = err.to_string();
    assert!(msg.contains("users_with_signal=") && msg.contains("subscriptions_above_min=0"), "{msg}");
}

#[test]
fn attitude_table_log_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("events.jsonl");
    let mut text = String::new();
    for e in engineered_log(&REFERENCE_COUNTS) {
        text.push_str(&serde_json::to_string(&e).unwrap());
        text.push('\n');
    }
    text.push_str("{not json\n");
    fs::write(&path, text).unwrap();
    let log = pipeline::load_events(&path).unwrap();
    assert_eq!(log.malformed.len(), 1);
    let biases = maskscope_core::ideology::SourceBiasTable::new([("s", 0.1)]).unwrap();
    let cohort = pipeline::build_cohort(&log, &[], &biases, &PipelineConfig::default()).unwrap();
    assert_eq!(cohort.table.counts, REFERENCE_COUNTS);
    assert_eq!(cohort.profiles_missing, 2293);
    let mut csv = Vec::new();
    cohort.table.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.ends_with("total,,,2293\n"), "{csv}");
}
