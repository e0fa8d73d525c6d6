use std::fs;
use std::path::PathBuf;

use bellkit_core::conditions::{check_no_extension, check_no_signaling};
use bellkit_core::format::{parse_model, FormatError, LoadedModel, ModelFile};
use bellkit_core::geometry::chsh_max;
use bellkit_core::quantum::{singlet_behavior, tsirelson_directions};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(data_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect()
}

fn load(name: &str) -> LoadedModel {
    let text = fs::read_to_string(data_dir().join(name)).unwrap();
    parse_model(&text).unwrap().load(1e-9).unwrap()
}

#[test]
fn every_file_round_trips() {
    let files = corpus();
    assert!(files.len() >= 8);
    for (name, text) in files {
        let file = parse_model(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_model(&file.to_json()).unwrap();
        assert_eq!(again, file, "{name}");
        let loaded = file.load(1e-9).unwrap();
        // library values survive a second trip through the writer
        let rewritten = match &loaded {
            LoadedModel::HvModel(m) => ModelFile::from_hv_model(m, file.metadata.clone()),
            LoadedModel::Behavior(b) | LoadedModel::Quantum(b) => {
                ModelFile::from_behavior(b, file.metadata.clone())
            }
        };
        let reloaded = parse_model(&rewritten.to_json())
            .unwrap()
            .load(1e-9)
            .unwrap();
        assert_eq!(reloaded.behavior(), loaded.behavior(), "{name}");
    }
}

#[test]
fn every_quantum_or_behavior_file_is_well_formed() {
    for (name, text) in corpus() {
        let b = parse_model(&text).unwrap().load(1e-9).unwrap().behavior();
        let total: f64 = b.as_slice().iter().sum();
        let pairs = (b.scenario().settings_a * b.scenario().settings_b) as f64;
        assert!((total - pairs).abs() < 1e-9, "{name}");
    }
}

#[test]
fn quantum_section_reproduces_singlet_behavior() {
    let (da, db) = tsirelson_directions();
    let expect = singlet_behavior(&da, &db).unwrap();
    for name in ["singlet_tsirelson.json", "singlet_amplitudes.json"] {
        let b = load(name).behavior();
        assert!(b.max_abs_diff(&expect) < 1e-12, "{name}");
        assert!((chsh_max(&b).unwrap().value - 8f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn named_examples() {
    assert_eq!(
        chsh_max(&load("pr_box.json").behavior()).unwrap().value,
        4.0
    );
    let r = check_no_signaling(&load("signaling.json").behavior(), 1e-9);
    assert!((r.max_deviation - 0.2).abs() < 1e-12);
    let split = check_no_extension(&load("extension_split.json").hv_model(), 1e-9).unwrap();
    assert!((split.max_deviation - 0.5).abs() < 1e-12);
    let trivial = check_no_extension(&load("extension_trivial.json").hv_model(), 1e-9).unwrap();
    assert!(trivial.holds && trivial.max_deviation < 1e-15);
}

#[test]
fn malformed_documents_give_distinct_errors() {
    let base = fs::read_to_string(data_dir().join("uniform.json")).unwrap();
    let syntax = base.replacen('{', "{,", 1);
    assert!(matches!(
        parse_model(&syntax),
        Err(FormatError::Syntax { line: 1, .. })
    ));
    let unknown = base.replacen("\"format_version\"", "\"colour\": 1, \"format_version\"", 1);
    assert!(matches!(
        parse_model(&unknown),
        Err(FormatError::Schema { .. })
    ));
    let short_row = base.replacen("0.25,", "", 1);
    assert!(matches!(
        parse_model(&short_row),
        Err(FormatError::Dimension(_))
    ));
    let bad_sum = base.replacen("0.25", "0.15", 1);
    match parse_model(&bad_sum) {
        Err(FormatError::Invariant(msg)) => assert!(msg.contains("a=0, b=0"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    let version = base.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
    assert!(matches!(
        parse_model(&version),
        Err(FormatError::Version(2))
    ));
}
