use hyperhol::connections::HermitianConnection;
use hyperhol::exterior::CMat;
use hyperhol_cli::catalog::{checks_of, CATALOG};
use hyperhol_cli::config::{ExperimentConfig, Overrides};
use hyperhol_cli::experiments::cone_family;
use hyperhol_cli::report::{Report, EXIT_CHECK_FAILURE, EXIT_ERROR, EXIT_PASS};
use hyperhol_cli::{execute, Experiment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperhol"))
}

fn docs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn read_report(dir: &Path, experiment: &str) -> Report {
    let text = std::fs::read_to_string(dir.join(format!("{experiment}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Small settings that exercise every code path of an experiment quickly.
fn quick(experiment: Experiment) -> String {
    match experiment {
        Experiment::Bg => r#"{"bg": {"samples": 30}}"#,
        Experiment::Kuranishi => r#"{"cutoff": 4, "kuranishi": {"seeds": 1, "amplitudes": [0.0001], "max_order": 3}}"#,
        Experiment::Cone => r#"{"cone": {"samples": 40}}"#,
        Experiment::Flow => r#"{"flow": {"runs": 1, "steps": 20}}"#,
        Experiment::Identities => r#"{"samples": 6, "extra_structures": 0}"#,
        _ => "{}",
    }
    .to_string()
}

#[test]
fn identities_on_the_trivial_line_bundle_pass() {
    let run = execute(Experiment::Identities, None, &Overrides::default());
    let config = run.report.config.as_ref().unwrap();
    assert_eq!((config.rank, config.cutoff), (1, 2));
    assert!(run.report.error.is_none());
    assert!(!run.report.checks.is_empty());
    for c in &run.report.checks {
        assert!(c.passed, "{}: {:?}", c.name, c.value);
        assert!(c.value.unwrap() <= 1e-10);
    }
    assert_eq!(run.report.exit_code(), EXIT_PASS);
}

#[test]
fn cone_report_matches_the_commutator_oracle() {
    let run = execute(Experiment::Cone, Some(r#"{"cone": {"samples": 200}, "seed": 11}"#), &Overrides::default());
    assert_eq!(run.report.exit_code(), EXIT_PASS);
    // Regenerate the inputs and classify them by ‖[X,Y]‖ with the norms
    // ‖dz₁∧dz₂‖² = 4 and ‖X dz₁ + Y dz₂‖² = 2(‖X‖² + ‖Y‖²).
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut inside = 0;
    for sample in 0..200 {
        let (x, y): (CMat, CMat) = cone_family(&mut rng, 2, sample);
        let commutator = &x * &y - &y * &x;
        let obstruction = (4.0 * commutator.norm_squared()).sqrt();
        let scale = 2.0 * (x.norm_squared() + y.norm_squared());
        inside += usize::from(obstruction <= 1e-9 * scale);
    }
    assert_eq!(inside, 100);
    assert_eq!(run.report.data["in_cone"], inside);
    assert_eq!(run.report.data["disagreements"], 0);
    assert_eq!(run.report.checks[0].name, "cone-oracle-agreement");
}

#[test]
fn malformed_configurations_exit_with_config_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{ not json"),
        ("type.json", r#"{"cutoff": "two"}"#),
        ("unknown.json", r#"{"cutof": 2}"#),
        ("range.json", r#"{"rank": 9}"#),
        ("mismatch.json", r#"{"experiment": "bg"}"#),
        ("constructor.json", r#"{"connection": {"constructor": "bogus"}}"#),
        ("nonpositive.json", r#"{"tolerances": {"identity": -1.0}}"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = dir.path().join(name.replace(".json", ""));
        let status = bin().args(["cone", "--config"]).arg(&path).arg("--out").arg(&out).output().unwrap();
        assert_eq!(status.status.code(), Some(EXIT_ERROR), "{name}");
        let report = read_report(&out, "cone");
        assert_eq!(report.error.as_ref().unwrap().kind, "ConfigInvalid", "{name}");
        assert!(report.checks.is_empty());
    }
    let missing = bin().args(["cone", "--config", "/nonexistent/config.json", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_ERROR));
    let bad_flag = bin().args(["cone", "--bogus"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(EXIT_ERROR));
    let threads = bin().env("HYPERHOL_THREADS", "zero").args(["pq-table", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(threads.status.code(), Some(EXIT_ERROR));
}

#[test]
fn module_errors_become_structured_entries() {
    // The identity suite refuses a connection that is not hyperholomorphic.
    let text = std::fs::read_to_string(docs().join("examples/analyze-noncommuting.json")).unwrap();
    let text = text.replace("\"analyze\"", "\"identities\"");
    let run = execute(Experiment::Identities, Some(&text), &Overrides::default());
    let err = run.report.error.as_ref().unwrap();
    assert_eq!(err.kind, "HypothesisViolated");
    assert!(run.report.config.is_some());
    assert_eq!(run.report.exit_code(), EXIT_ERROR);
}

#[test]
fn failed_checks_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.json");
    std::fs::write(&path, r#"{"flow": {"runs": 1, "steps": 3}, "tolerances": {"flow": 1e-30}}"#).unwrap();
    let out = bin().arg("flow").arg("--config").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CHECK_FAILURE));
    let report = read_report(dir.path(), "flow");
    assert!(report.checks.iter().any(|c| !c.passed));
    assert!(dir.path().join("flow.csv").exists());
}

#[test]
fn reports_are_byte_identical_across_runs_and_output_directories() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = bin().args(["bg", "--seed", "5", "--config"]).arg(docs().join("examples/bg-small.json")).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(EXIT_PASS), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let ra = std::fs::read(a.path().join("bg.json")).unwrap();
    let rb = std::fs::read(b.path().join("bg.json")).unwrap();
    assert_eq!(ra, rb);
    // The timestamp lives in the separate meta file.
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("bg.meta.json")).unwrap()).unwrap();
    assert!(meta["timestamp_unix"].as_u64().unwrap() > 0);
    assert!(!String::from_utf8(ra).unwrap().contains("timestamp"));
}

#[test]
fn overrides_are_recorded_in_the_report() {
    let overrides = Overrides { seed: Some(42), out: None, allow_truncation: true, tol_scale: Some(10.0) };
    let run = execute(Experiment::PqTable, None, &overrides);
    assert_eq!(run.report.seed, 42);
    let config = run.report.config.unwrap();
    assert_eq!(config.seed, 42);
    assert!(config.allow_truncation);
    assert_eq!(config.tolerances.scale, 10.0);
    assert_eq!(run.files[0].0, "pq-table.csv");
    let no_csv = execute(Experiment::PqTable, Some(r#"{"outputs": {"csv": false}}"#), &Overrides::default());
    assert!(no_csv.files.is_empty());
}

#[test]
fn kuranishi_exports_the_deformed_connection() {
    let run = execute(Experiment::Kuranishi, Some(&quick(Experiment::Kuranishi)), &Overrides::default());
    let (name, json) = run.files.iter().find(|f| f.0.ends_with(".json")).unwrap();
    assert_eq!(name, "kuranishi-connection.json");
    let conn = HermitianConnection::from_json(json).unwrap();
    assert_eq!((conn.rank(), conn.cutoff()), (2, 4));
    assert!(run.report.data["first_series"]["terms"].is_array());
}

#[test]
fn every_emitted_check_is_in_the_catalog() {
    let mut emitted = BTreeSet::new();
    for experiment in Experiment::ALL {
        let run = execute(experiment, Some(&quick(experiment)), &Overrides::default());
        assert!(run.report.error.is_none(), "{}: {:?}", experiment.name(), run.report.error);
        let expected: BTreeSet<&str> = checks_of(experiment).map(|e| e.name).collect();
        let got: BTreeSet<&str> = run.report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(got, expected, "{}", experiment.name());
        emitted.extend(got.into_iter().map(String::from));
    }
    assert_eq!(emitted.len(), CATALOG.len());
}

#[test]
fn catalog_matches_the_documented_list() {
    let doc = std::fs::read_to_string(docs().join("checks.md")).unwrap();
    let rows: Vec<Vec<String>> = doc
        .lines()
        .filter(|l| l.starts_with("| `"))
        .map(|l| l.trim_matches('|').split(" | ").map(|c| c.trim().trim_matches('`').to_string()).collect())
        .collect();
    assert_eq!(rows.len(), CATALOG.len());
    for (row, entry) in rows.iter().zip(CATALOG) {
        assert_eq!(row[0], entry.name);
        assert_eq!(row[1], entry.experiment.name());
        assert_eq!(row[2], entry.tolerance);
        assert_eq!(row[3], entry.anchor);
    }
    assert!(doc.contains(&format!("Total: {} checks.", CATALOG.len())));
    let names: BTreeSet<&str> = CATALOG.iter().map(|e| e.name).collect();
    assert_eq!(names.len(), CATALOG.len(), "duplicate catalog names");
    assert!(names.contains("thm-4.1-laplacians"));
    assert!(names.contains("ineq-5.1-bg"));

    let listing = bin().arg("list-checks").output().unwrap();
    assert_eq!(listing.status.code(), Some(EXIT_PASS));
    let text = String::from_utf8(listing.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains('\t')).count(), CATALOG.len());
    assert!(text.ends_with(&format!("{} checks\n", CATALOG.len())));
}

fn object_keys(v: &serde_json::Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schema_matches_the_configuration_type() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(docs().join("config.schema.json")).unwrap()).unwrap();
    let props = &schema["properties"];
    let config = serde_json::to_value(ExperimentConfig::default_for(Experiment::Bg)).unwrap();
    let mut expected = object_keys(&config);
    expected.insert("outputs".into());
    assert_eq!(object_keys(props), expected);
    for section in ["tolerances", "bg", "kuranishi", "cone", "flow"] {
        assert_eq!(object_keys(&props[section]["properties"]), object_keys(&config[section]), "{section}");
    }
    let outputs = serde_json::to_value(hyperhol_cli::config::Outputs::default()).unwrap();
    assert_eq!(object_keys(&props["outputs"]["properties"]), object_keys(&outputs));
    let experiments: Vec<&str> = props["experiment"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(experiments, Experiment::ALL.map(|e| e.name()).to_vec());
}

#[test]
fn shipped_example_configurations_load() {
    for entry in std::fs::read_dir(docs().join("examples")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let name = value["experiment"].as_str().unwrap();
        let experiment = Experiment::ALL.into_iter().find(|e| e.name() == name).unwrap();
        ExperimentConfig::from_json(experiment, &text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
