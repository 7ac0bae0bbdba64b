//! Report rendering: a plain-text summary for terminals and a JSON
//! document for scripts, both derived from one finished scenario run.
//!
//! Exact probabilities appear in JSON as their four ring coordinates
//! (`rational + sqrt2*x + sqrt3*y + sqrt6*z`) alongside a float reading;
//! float-mode runs carry only the float field.

use frlogic_core::amplitude::{Amplitude, FloatAmp, QuadAmp};
use frlogic_core::logic::Mode;
use frlogic_core::scenario::{Scenario, ScenarioRun};
use frlogic_core::state::{config_bit, Bit};
use serde_json::{json, Value as Json};

use crate::emit::step_text;
use crate::lower::scenario_snapshots;

/// A finished run in whichever backend was selected.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum RunOutput {
    Exact(ScenarioRun<QuadAmp>),
    Float(ScenarioRun<FloatAmp>),
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        match self {
            RunOutput::Exact(run) => run.passed(),
            RunOutput::Float(run) => run.passed(),
        }
    }

    pub fn mismatches(&self) -> Vec<String> {
        match self {
            RunOutput::Exact(run) => run.mismatches(),
            RunOutput::Float(run) => run.mismatches(),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            RunOutput::Exact(_) => "exact",
            RunOutput::Float(_) => "float",
        }
    }
}

fn exact_prob_text(p: &QuadAmp) -> String {
    p.to_string()
}

fn float_prob_text(p: &FloatAmp) -> String {
    format!("{:.6}", p.to_f64())
}

fn exact_prob_json(p: &QuadAmp) -> Json {
    let (a, b, c, d) = p.coefficients();
    json!({
        "rational": a.to_string(),
        "sqrt2": b.to_string(),
        "sqrt3": c.to_string(),
        "sqrt6": d.to_string(),
        "float": Amplitude::to_f64(p),
    })
}

fn float_prob_json(p: &FloatAmp) -> Json {
    json!({
        "rational": Json::Null,
        "sqrt2": Json::Null,
        "sqrt3": Json::Null,
        "sqrt6": Json::Null,
        "float": p.to_f64(),
    })
}

fn mode_word(mode: Mode) -> &'static str {
    match mode {
        Mode::Forward => "forward",
        Mode::Retrodictive => "retro",
    }
}

fn class_word<A: Amplitude>(run: &ScenarioRun<A>, i: usize) -> String {
    format!("{:?}", run.statements[i].verdict.class).to_lowercase()
}

/// One per-statement text row: match marker, id, mode, class, values.
fn statement_rows<A: Amplitude>(
    run: &ScenarioRun<A>,
    prob: &dyn Fn(&A) -> String,
) -> Vec<String> {
    run.statements
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = &s.verdict;
            let marker = if s.matched { "ok      " } else { "MISMATCH" };
            let conditional = v
                .conditional
                .as_ref()
                .map(|p| format!("p={}", prob(p)))
                .unwrap_or_else(|| "p=-".to_string());
            let diag = if v.diagnostics.is_empty() {
                String::new()
            } else {
                format!(
                    "  [{}]",
                    v.diagnostics
                        .iter()
                        .map(|d| format!("{d:?}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            };
            format!(
                "  {marker}  {:<4} {:<8} {:<13} {conditional:<24} q={}{diag}",
                s.id,
                mode_word(v.mode),
                class_word(run, i),
                prob(&v.premise_probability),
            )
        })
        .collect()
}

fn check_summary<A: Amplitude>(
    data: &frlogic_core::scenario::CheckData<A>,
    prob: &dyn Fn(&A) -> String,
) -> String {
    use frlogic_core::scenario::CheckData;
    match data {
        CheckData::Final => "term-by-term".to_string(),
        CheckData::Joint { rows } => format!("{} outcomes", rows.len()),
        CheckData::Chain { probability } => format!("p={}", prob(probability)),
        CheckData::Transitivity(r) => format!(
            "combined p={}, valid={}, violation fraction={}, premise shift={}",
            r.combined_retro
                .conditional
                .as_ref()
                .map(prob)
                .unwrap_or_else(|| "-".to_string()),
            r.transitivity_valid,
            prob(&r.violation_fraction),
            prob(&r.premise_shift_fraction),
        ),
        CheckData::Compatible { compatible, defect } => {
            format!("compatible={compatible}, defect={}", prob(defect))
        }
        CheckData::Defect { defect } => format!("defect={}", prob(defect)),
        CheckData::Conjunction(v) => format!(
            "p={}, flagged={}",
            v.conditional
                .as_ref()
                .map(prob)
                .unwrap_or_else(|| "-".to_string()),
            v.diagnostics
                .contains(&frlogic_core::logic::Diagnostic::IncompatiblePremises),
        ),
        CheckData::Or(r) => format!(
            "classical={}, actual={}, divergence={}",
            prob(&r.classical_expectation),
            r.merged
                .conditional
                .as_ref()
                .map(prob)
                .unwrap_or_else(|| "-".to_string()),
            r.divergence,
        ),
        CheckData::Mine { total, missing } => {
            format!("{total} statements mined, {missing} required pairs missing")
        }
        CheckData::Swap => "final distribution unchanged".to_string(),
        CheckData::Violation { fraction } => format!("fraction={}", prob(fraction)),
    }
}

fn final_terms<A: Amplitude>(run: &ScenarioRun<A>) -> Vec<(String, String)> {
    let state = run
        .history
        .snapshot(run.history.len())
        .expect("final snapshot");
    state
        .terms()
        .map(|(config, amp)| {
            let labels: Vec<&str> = state
                .registers()
                .iter()
                .enumerate()
                .map(|(i, reg)| {
                    let (l0, l1) = reg.display_labels();
                    if config_bit(config, i) == Bit::Zero {
                        l0
                    } else {
                        l1
                    }
                })
                .collect();
            (format!("{amp}"), format!("|{}>", labels.join(" ")))
        })
        .collect()
}

/// Joint rows of the first joint-distribution check, if the scenario has
/// one.  This is the table most runs exist to produce.
fn joint_rows<A: Amplitude>(run: &ScenarioRun<A>) -> Option<&[(String, A)]> {
    run.checks.iter().find_map(|c| match &c.data {
        frlogic_core::scenario::CheckData::Joint { rows } => Some(rows.as_slice()),
        _ => None,
    })
}

fn text_core<A: Amplitude>(
    scenario: &Scenario,
    run: &ScenarioRun<A>,
    mode: &str,
    prob: &dyn Fn(&A) -> String,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario {} ({mode} arithmetic)\n", scenario.name));
    if !scenario.about.is_empty() {
        out.push_str(&format!("  {}\n", scenario.about));
    }
    let snaps = scenario_snapshots(scenario);
    for (i, step) in scenario.steps.iter().enumerate() {
        out.push_str(&format!("  {}\n", step_text(i + 1, step, &snaps[i])));
    }

    let state = run.history.snapshot(run.history.len()).expect("snapshot");
    out.push_str(&format!("final state ({} terms):\n", state.support_size()));
    for (config, amplitude) in state.terms() {
        let labels: Vec<&str> = state
            .registers()
            .iter()
            .enumerate()
            .map(|(i, reg)| {
                let (l0, l1) = reg.display_labels();
                if config_bit(config, i) == Bit::Zero {
                    l0
                } else {
                    l1
                }
            })
            .collect();
        out.push_str(&format!("  {amplitude:>12} |{}>\n", labels.join(" ")));
    }

    if let Some(rows) = joint_rows(run) {
        out.push_str("joint distribution:\n");
        for (label, p) in rows {
            out.push_str(&format!("  {label:<14} {}\n", prob(p)));
        }
    }

    if !run.statements.is_empty() {
        out.push_str("statements:\n");
        for row in statement_rows(run, prob) {
            out.push_str(&row);
            out.push('\n');
        }
    }

    if !run.checks.is_empty() {
        out.push_str("checks:\n");
        for c in &run.checks {
            let marker = if c.matched { "ok      " } else { "MISMATCH" };
            out.push_str(&format!(
                "  {marker}  {:<42} {}\n",
                c.description,
                check_summary(&c.data, prob)
            ));
        }
    }

    let verdict = if run.passed() { "pass" } else { "MISMATCH" };
    out.push_str(&format!(
        "result: {verdict} ({} statements, {} checks)\n",
        run.statements.len(),
        run.checks.len()
    ));
    out
}

fn json_core<A: Amplitude>(
    scenario: &Scenario,
    run: &ScenarioRun<A>,
    mode: &str,
    prob_text: &dyn Fn(&A) -> String,
    prob_json: &dyn Fn(&A) -> Json,
) -> Json {
    let snaps = scenario_snapshots(scenario);
    let steps: Vec<String> = scenario
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| step_text(i + 1, s, &snaps[i]))
        .collect();
    let snapshots: Vec<usize> = (0..=run.history.len())
        .map(|i| run.history.snapshot(i).expect("snapshot").support_size())
        .collect();
    let final_state: Vec<Json> = final_terms(run)
        .into_iter()
        .map(|(amp, ket)| json!({"amplitude": amp, "ket": ket}))
        .collect();
    let joint = joint_rows(run)
        .map(|rows| {
            let mut obj = serde_json::Map::new();
            for (label, p) in rows {
                obj.insert(label.clone(), Json::String(prob_text(p)));
            }
            Json::Object(obj)
        })
        .unwrap_or(Json::Null);
    let statements: Vec<Json> = run
        .statements
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let v = &s.verdict;
            json!({
                "id": s.id,
                "mode": mode_word(v.mode),
                "class": class_word(run, i),
                "premise": prob_json(&v.premise_probability),
                "conditional": v.conditional.as_ref().map(prob_json),
                "diagnostics": v.diagnostics.iter().map(|d| format!("{d:?}")).collect::<Vec<_>>(),
                "matched": s.matched,
            })
        })
        .collect();
    let checks: Vec<Json> = run
        .checks
        .iter()
        .map(|c| {
            json!({
                "description": c.description,
                "summary": check_summary(&c.data, prob_text),
                "matched": c.matched,
            })
        })
        .collect();
    json!({
        "scenario": scenario.name,
        "mode": mode,
        "passed": run.passed(),
        "steps": steps,
        "snapshots": snapshots,
        "final": final_state,
        "joint": joint,
        "statements": statements,
        "checks": checks,
        "mismatches": run.mismatches(),
    })
}

pub fn text_report(scenario: &Scenario, out: &RunOutput) -> String {
    match out {
        RunOutput::Exact(run) => text_core(scenario, run, "exact", &exact_prob_text),
        RunOutput::Float(run) => text_core(scenario, run, "float", &float_prob_text),
    }
}

pub fn json_report(scenario: &Scenario, out: &RunOutput) -> Json {
    match out {
        RunOutput::Exact(run) => json_core(
            scenario,
            run,
            "exact",
            &exact_prob_text,
            &exact_prob_json,
        ),
        RunOutput::Float(run) => json_core(
            scenario,
            run,
            "float",
            &|p: &FloatAmp| format!("{}", p.to_f64()),
            &float_prob_json,
        ),
    }
}
