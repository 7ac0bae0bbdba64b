//! Round trips between the scenario library and its DSL form: emitting,
//! re-parsing, and re-running any bundled scenario must reproduce the
//! original verdict table, and the checked-in corpus files must match
//! what the library emits today.

use std::fs;
use std::path::Path;

use frlogic::{dsl, emit, lower};
use frlogic_core::amplitude::{Amplitude, FloatAmp, QuadAmp};
use frlogic_core::scenario::{self, Scenario, ScenarioRun};

fn reload(s: &Scenario) -> Scenario {
    let text = emit::emit(s);
    let file = dsl::parse(&text)
        .unwrap_or_else(|e| panic!("{} does not re-parse: {e}\n{text}", s.name));
    lower::lower(&s.name, &file)
        .unwrap_or_else(|e| panic!("{} does not re-lower: {e}\n{text}", s.name))
}

fn assert_same_run<A: Amplitude>(name: &str, direct: &ScenarioRun<A>, reloaded: &ScenarioRun<A>) {
    assert!(direct.passed(), "{name} direct run: {:?}", direct.mismatches());
    assert!(
        reloaded.passed(),
        "{name} reloaded run: {:?}",
        reloaded.mismatches()
    );
    assert_eq!(direct.statements.len(), reloaded.statements.len(), "{name}");
    for (a, b) in direct.statements.iter().zip(&reloaded.statements) {
        assert_eq!(a.id, b.id, "{name}");
        assert_eq!(a.verdict, b.verdict, "{name} statement {}", a.id);
    }
    assert_eq!(direct.checks.len(), reloaded.checks.len(), "{name}");
    for (a, b) in direct.checks.iter().zip(&reloaded.checks) {
        assert_eq!(a.description, b.description, "{name}");
    }
}

#[test]
fn every_bundled_scenario_reloads_and_reruns_identically() {
    for s in scenario::bundled() {
        let loaded = reload(&s);
        assert_eq!(s.steps, loaded.steps, "{} steps drifted", s.name);
        for (a, b) in s.statements.iter().zip(&loaded.statements) {
            assert_eq!(a.id, b.id, "{}", s.name);
            assert_eq!(a.statement, b.statement, "{} statement {}", s.name, a.id);
        }
        if s.supports_exact() {
            let direct = s.run_with::<QuadAmp>().unwrap();
            let reloaded = loaded.run_with::<QuadAmp>().unwrap();
            assert_same_run(&s.name, &direct, &reloaded);
        }
        let direct = s.run_with::<FloatAmp>().unwrap();
        let reloaded = loaded.run_with::<FloatAmp>().unwrap();
        assert_same_run(&s.name, &direct, &reloaded);
    }
}

#[test]
fn emission_is_stable_after_one_round_trip() {
    // The header comment carries the description, which the DSL does not
    // keep, so compare everything after it.
    let body = |text: &str| {
        text.lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    for s in scenario::bundled() {
        let first = emit::emit(&s);
        let second = emit::emit(&reload(&s));
        assert_eq!(body(&first), body(&second), "{} emission drifted", s.name);
    }
}

#[test]
fn the_flagship_corpus_file_has_the_recorded_shape() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/fr_full.fr");
    let file = dsl::parse(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(file.steps.len(), 4);
    assert_eq!(file.statements.len(), 4);
    let transitivity = file
        .checks
        .iter()
        .filter(|c| matches!(c, dsl::CheckDecl::Transitivity { .. }))
        .count();
    assert_eq!(transitivity, 3);
}

#[test]
fn corpus_files_match_the_library() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for s in scenario::bundled() {
        let path = dir.join(format!("{}.fr", s.name));
        let on_disk = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{} unreadable: {e}", path.display()));
        assert_eq!(
            on_disk,
            emit::emit(&s),
            "{} is stale; regenerate with `frlogic emit`",
            path.display()
        );
    }
}
