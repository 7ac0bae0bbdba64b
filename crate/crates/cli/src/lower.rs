//! Name resolution: turns a parsed [`ExperimentFile`] into an engine
//! [`Scenario`].
//!
//! The lowering tracks which registers exist after each step (absorbing a
//! register renames it to the agent's record, a preserving measurement
//! appends one) so events, checks, and collapse overrides can be validated
//! against the names and outcome labels actually in play at their step.

use std::collections::HashMap;
use std::fmt;

use frlogic_core::logic::{Event, Statement, VerdictClass};
use frlogic_core::measure::{CollapseRule, MeasurementStep, Style};
use frlogic_core::scenario::{
    AmpSpec, Arithmetic, Check, ExpectedProb, ExpectedVerdict, NamedStatement, Scenario,
};
use frlogic_core::state::{
    Bit, JointKet, OutcomeBasis, OutcomeSel, Register, RegisterId, RegisterKind,
};

use crate::dsl::{
    BasisAst, BasisKey, CheckDecl, ClassKey, EventAst, ExpectAst, ExperimentFile, ModeKey,
    StyleAst, TermAst, Value,
};

/// A declaration that parsed but does not resolve.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SemanticError {}

fn err(line: usize, message: impl Into<String>) -> SemanticError {
    SemanticError {
        line,
        message: message.into(),
    }
}

type Labels = (String, String);

/// Outcome labels any register understands, so records named after plus/x
/// measurements and plain spins share one vocabulary.
fn generic_bit(label: &str) -> Option<Bit> {
    match label {
        "up" | "plus" | "fail" | "0" => Some(Bit::Zero),
        "down" | "minus" | "ok" | "1" => Some(Bit::One),
        _ => None,
    }
}

fn native_or_generic(labels: &Labels, label: &str) -> Option<Bit> {
    if label == labels.0 {
        Some(Bit::Zero)
    } else if label == labels.1 {
        Some(Bit::One)
    } else {
        generic_bit(label)
    }
}

fn x_label_bit(label: &str) -> Option<Bit> {
    match label {
        "plus" | "0" => Some(Bit::Zero),
        "minus" | "1" => Some(Bit::One),
        _ => None,
    }
}

/// Labels the record of a measurement carries, per step basis.
fn record_labels(basis: &OutcomeBasis, target: &Labels) -> Labels {
    match basis {
        OutcomeBasis::Z => target.clone(),
        OutcomeBasis::X => ("plus".to_string(), "minus".to_string()),
        OutcomeBasis::Axis(_) => ("axis+".to_string(), "axis-".to_string()),
        OutcomeBasis::Joint { .. } => ("s0".to_string(), "s1".to_string()),
    }
}

/// Ordered name/label pairs for the registers alive after each step;
/// index 0 is the initial state.
pub(crate) fn scenario_snapshots(s: &Scenario) -> Vec<Vec<(String, Labels)>> {
    let mut current: Vec<(String, Labels)> = s
        .registers
        .iter()
        .map(|r| (r.id.as_str().to_string(), r.labels.clone()))
        .collect();
    let mut records: Vec<String> = s
        .registers
        .iter()
        .filter(|r| r.kind == RegisterKind::Record)
        .map(|r| r.id.as_str().to_string())
        .collect();
    let mut snaps = vec![current.clone()];
    for step in &s.steps {
        let record = format!("mem.{}", step.agent);
        match step.style {
            Style::Absorb => {
                let target = step.targets[0].as_str();
                if let Some(entry) = current.iter_mut().find(|(n, _)| n == target) {
                    let labels = record_labels(&step.basis, &entry.1);
                    *entry = (record.clone(), labels);
                    records.push(record);
                }
            }
            Style::Preserve => {
                let target = step.targets[0].as_str();
                let labels = current
                    .iter()
                    .find(|(n, _)| n == target)
                    .map(|(_, l)| record_labels(&step.basis, l))
                    .unwrap_or_else(|| record_labels(&step.basis, &Default::default()));
                // The engine leaves a rotated target expressed in the step
                // basis, so its display labels change too.
                if !matches!(step.basis, OutcomeBasis::Joint { .. }) {
                    if let Some(entry) = current.iter_mut().find(|(n, _)| n == target) {
                        entry.1 = record_labels(&step.basis, &entry.1);
                    }
                }
                current.push((record.clone(), labels));
                records.push(record);
            }
            // A collapse keeps a record target as is but claims a plain
            // target as the agent's record, exactly like an absorb.
            Style::Collapse(_) => {
                let target = step.targets[0].as_str();
                if !records.iter().any(|r| r == target) {
                    if let Some(entry) = current.iter_mut().find(|(n, _)| n == target) {
                        let labels = record_labels(&step.basis, &entry.1);
                        *entry = (record.clone(), labels);
                        records.push(record);
                    }
                }
            }
        }
        snaps.push(current.clone());
    }
    snaps
}

/// Tracks names and labels while lowering the step list.
struct Track {
    order: Vec<String>,
    entries: HashMap<String, (Labels, bool)>,
}

impl Track {
    fn new(registers: &[Register]) -> Self {
        let mut order = Vec::new();
        let mut entries = HashMap::new();
        for r in registers {
            order.push(r.id.as_str().to_string());
            entries.insert(r.id.as_str().to_string(), (r.labels.clone(), false));
        }
        Track { order, entries }
    }

    fn labels_of(&self, name: &str) -> Option<&Labels> {
        self.entries.get(name).map(|(l, _)| l)
    }

    fn snapshot(&self) -> HashMap<String, Labels> {
        self.entries
            .iter()
            .map(|(n, (l, _))| (n.clone(), l.clone()))
            .collect()
    }

    fn final_order(&self) -> Vec<(String, Labels)> {
        self.order
            .iter()
            .map(|n| (n.clone(), self.entries[n].0.clone()))
            .collect()
    }
}

fn lower_basis(
    basis: &BasisAst,
    targets: &[String],
    track: &Track,
    line: usize,
) -> Result<OutcomeBasis, SemanticError> {
    match basis {
        BasisAst::Z => Ok(OutcomeBasis::Z),
        BasisAst::X => Ok(OutcomeBasis::X),
        BasisAst::Theta(a) => Ok(OutcomeBasis::Axis(*a)),
        BasisAst::States(states) => {
            let mut kets = Vec::new();
            for state in states {
                let mut terms = Vec::new();
                for term in state {
                    if term.amp.phase != 0.0 {
                        return Err(err(line, "joint states cannot carry phases"));
                    }
                    if term.labels.len() != targets.len() {
                        return Err(err(
                            line,
                            format!(
                                "expected {} labels in the joint-state ket, got {}",
                                targets.len(),
                                term.labels.len()
                            ),
                        ));
                    }
                    let mut bits = Vec::new();
                    for (target, label) in targets.iter().zip(&term.labels) {
                        let labels = track.labels_of(target).expect("target checked");
                        let bit = native_or_generic(labels, label).ok_or_else(|| {
                            err(
                                line,
                                format!("unknown outcome label `{label}` for `{target}`"),
                            )
                        })?;
                        bits.push(bit);
                    }
                    terms.push((bits, term.amp.magnitude.clone()));
                }
                kets.push(JointKet { terms });
            }
            Ok(OutcomeBasis::Joint {
                states: kets,
                labels: vec!["s0".to_string(), "s1".to_string()],
            })
        }
    }
}

/// Outcome selector a collapse label names under the given basis.
fn collapse_sel(
    basis: &OutcomeBasis,
    target_labels: &Labels,
    label: &str,
) -> Option<OutcomeSel> {
    if label == "any" {
        return Some(OutcomeSel::Any);
    }
    match basis {
        OutcomeBasis::Joint { labels, .. } => {
            if label == "rest" {
                Some(OutcomeSel::Rest)
            } else {
                labels
                    .iter()
                    .position(|l| l == label)
                    .map(OutcomeSel::Listed)
            }
        }
        OutcomeBasis::X => x_label_bit(label).map(OutcomeSel::Bit),
        OutcomeBasis::Axis(_) => match label {
            "axis+" | "0" => Some(OutcomeSel::Bit(Bit::Zero)),
            "axis-" | "1" => Some(OutcomeSel::Bit(Bit::One)),
            _ => None,
        },
        OutcomeBasis::Z => native_or_generic(target_labels, label).map(OutcomeSel::Bit),
    }
}

fn lower_event(
    ev: &EventAst,
    snaps: &[HashMap<String, Labels>],
) -> Result<Event, SemanticError> {
    if ev.at_step >= snaps.len() {
        return Err(err(
            ev.line,
            format!(
                "event at step {} but the experiment has {} steps",
                ev.at_step,
                snaps.len() - 1
            ),
        ));
    }
    let labels = snaps[ev.at_step].get(&ev.register).ok_or_else(|| {
        err(
            ev.line,
            format!("unknown register `{}` at step {}", ev.register, ev.at_step),
        )
    })?;
    let basis = match ev.basis {
        Some(BasisKey::X) => OutcomeBasis::X,
        _ => OutcomeBasis::Z,
    };
    let outcome = if ev.label == "any" {
        OutcomeSel::Any
    } else {
        let bit = match basis {
            OutcomeBasis::X => x_label_bit(&ev.label),
            _ => native_or_generic(labels, &ev.label),
        }
        .ok_or_else(|| {
            err(
                ev.line,
                format!(
                    "unknown outcome label `{}` for `{}`",
                    ev.label, ev.register
                ),
            )
        })?;
        OutcomeSel::Bit(bit)
    };
    Ok(Event::new(
        ev.register.as_str(),
        ev.at_step,
        basis,
        outcome,
    ))
}

fn value_to_prob(v: &Value) -> ExpectedProb {
    match v {
        Value::Exact(q) => ExpectedProb::Exact(q.clone()),
        Value::Approx(x) => ExpectedProb::Approx(*x),
    }
}

fn lower_expect(e: &ExpectAst) -> ExpectedVerdict {
    ExpectedVerdict {
        class: match e.class {
            ClassKey::Holds => VerdictClass::Holds,
            ClassKey::Fails => VerdictClass::Fails,
            ClassKey::Vacuous => VerdictClass::Vacuous,
            ClassKey::Probabilistic => VerdictClass::Probabilistic,
        },
        conditional: e.p.as_ref().map(value_to_prob),
        premise: e.q.as_ref().map(value_to_prob),
    }
}

/// Resolves every name in `file` and assembles a runnable scenario named
/// after the source file.
pub fn lower(name: &str, file: &ExperimentFile) -> Result<Scenario, SemanticError> {
    if file.registers.is_empty() {
        return Err(err(1, "no registers declared"));
    }
    let mut registers = Vec::new();
    for decl in &file.registers {
        if registers
            .iter()
            .any(|r: &Register| r.id.as_str() == decl.name)
        {
            return Err(err(decl.line, format!("duplicate register `{}`", decl.name)));
        }
        let reg = match &decl.labels {
            Some((l0, l1)) => Register::new(decl.name.as_str(), (l0, l1)),
            None => Register::spin(decl.name.as_str()),
        };
        registers.push(reg);
    }

    let state = file
        .state
        .as_ref()
        .ok_or_else(|| err(1, "missing `state` declaration"))?;
    let mut terms = Vec::new();
    let mut any_phase = false;
    for term in &state.terms {
        if term.labels.len() != registers.len() {
            return Err(err(
                state.line,
                format!(
                    "expected {} labels in the ket, got {}",
                    registers.len(),
                    term.labels.len()
                ),
            ));
        }
        let mut bits = Vec::new();
        for (reg, label) in registers.iter().zip(&term.labels) {
            let bit = native_or_generic(&reg.labels, label).ok_or_else(|| {
                err(
                    state.line,
                    format!("unknown outcome label `{label}` for `{}`", reg.id),
                )
            })?;
            bits.push(bit);
        }
        if term.amp.phase != 0.0 {
            any_phase = true;
        }
        terms.push((
            bits,
            AmpSpec {
                magnitude: term.amp.magnitude.clone(),
                phase: term.amp.phase,
            },
        ));
    }

    // Steps must number 1..=n with no gaps or repeats.
    let mut decls: Vec<_> = file.steps.iter().collect();
    decls.sort_by_key(|s| s.index);
    for (i, decl) in decls.iter().enumerate() {
        if i > 0 && decl.index == decls[i - 1].index {
            return Err(err(decl.line, format!("duplicate step index {}", decl.index)));
        }
        if decl.index != i + 1 {
            return Err(err(decl.line, format!("missing step {}", i + 1)));
        }
    }

    let mut track = Track::new(&registers);
    let mut snaps = vec![track.snapshot()];
    let mut steps = Vec::new();
    for decl in &decls {
        for target in &decl.targets {
            if !track.entries.contains_key(target) {
                return Err(err(
                    decl.line,
                    format!("unknown register `{target}` at step {}", decl.index),
                ));
            }
        }
        let single = decl.targets.len() == 1;
        if !single && !matches!(decl.basis, BasisAst::States(_)) {
            return Err(err(
                decl.line,
                "a multi-target step needs an explicit states(...) basis",
            ));
        }
        let basis = lower_basis(&decl.basis, &decl.targets, &track, decl.line)?;
        let record = format!("mem.{}", decl.agent);
        let style = match &decl.style {
            StyleAst::Absorb => {
                if !single {
                    return Err(err(decl.line, "`absorbs` takes exactly one target"));
                }
                let target = &decl.targets[0];
                if track.entries[target].1 {
                    return Err(err(
                        decl.line,
                        format!("step {} absorbs the record `{target}`", decl.index),
                    ));
                }
                Style::Absorb
            }
            StyleAst::Measure { collapse: None } => Style::Preserve,
            StyleAst::Measure {
                collapse: Some(label),
            } => {
                if label == "sample" {
                    Style::Collapse(CollapseRule::Sampled)
                } else {
                    let labels = track.labels_of(&decl.targets[0]).expect("target checked");
                    let sel = collapse_sel(&basis, labels, label).ok_or_else(|| {
                        err(
                            decl.line,
                            format!("unknown collapse outcome `{label}`"),
                        )
                    })?;
                    Style::Collapse(CollapseRule::Fixed(sel))
                }
            }
        };
        // Mirror the engine's renames so later declarations resolve.
        match style {
            Style::Absorb => {
                let target = decl.targets[0].clone();
                if target != record && track.entries.contains_key(&record) {
                    return Err(err(
                        decl.line,
                        format!("record name `{record}` already in use"),
                    ));
                }
                let (labels, _) = track.entries.remove(&target).expect("target checked");
                let labels = record_labels(&basis, &labels);
                let slot = track
                    .order
                    .iter()
                    .position(|n| *n == target)
                    .expect("target tracked");
                track.order[slot] = record.clone();
                track.entries.insert(record, (labels, true));
            }
            Style::Preserve => {
                if track.entries.contains_key(&record) {
                    return Err(err(
                        decl.line,
                        format!("record name `{record}` already in use"),
                    ));
                }
                let labels = record_labels(&basis, track.labels_of(&decl.targets[0]).unwrap());
                // A rotated target stays expressed in the step basis.
                if !matches!(basis, OutcomeBasis::Joint { .. }) {
                    let entry = track.entries.get_mut(&decl.targets[0]).expect("target checked");
                    entry.0 = record_labels(&basis, &entry.0);
                }
                track.order.push(record.clone());
                track.entries.insert(record, (labels, true));
            }
            // Collapsing a plain register claims it as the agent's record,
            // mirroring the engine; collapsing a record leaves names alone.
            Style::Collapse(_) => {
                let target = decl.targets[0].clone();
                if !track.entries[&target].1 {
                    if target != record && track.entries.contains_key(&record) {
                        return Err(err(
                            decl.line,
                            format!("record name `{record}` already in use"),
                        ));
                    }
                    let (labels, _) = track.entries.remove(&target).expect("target checked");
                    let labels = record_labels(&basis, &labels);
                    let slot = track
                        .order
                        .iter()
                        .position(|n| *n == target)
                        .expect("target tracked");
                    track.order[slot] = record.clone();
                    track.entries.insert(record, (labels, true));
                }
            }
        }
        snaps.push(track.snapshot());
        steps.push(MeasurementStep {
            agent: decl.agent.clone(),
            targets: decl.targets.iter().map(|t| RegisterId::from(t.as_str())).collect(),
            basis,
            style,
        });
    }
    let final_order = track.final_order();

    let mut statements = Vec::new();
    for decl in &file.statements {
        if statements.iter().any(|s: &NamedStatement| s.id == decl.id) {
            return Err(err(decl.line, format!("duplicate statement id `{}`", decl.id)));
        }
        let premises = decl
            .premises
            .iter()
            .map(|e| lower_event(e, &snaps))
            .collect::<Result<Vec<_>, _>>()?;
        let conclusion = lower_event(&decl.conclusion, &snaps)?;
        let statement = match decl.mode.unwrap_or(ModeKey::Retro) {
            ModeKey::Forward => Statement::forward(premises, conclusion),
            ModeKey::Retro => Statement::retro(premises, conclusion),
        };
        statements.push(NamedStatement {
            id: decl.id.clone(),
            statement,
            expect: decl.expect.as_ref().map(lower_expect),
        });
    }

    let known_id = |id: &String, line: usize| {
        if statements.iter().any(|s| s.id == *id) {
            Ok(())
        } else {
            Err(err(line, format!("unknown statement id `{id}`")))
        }
    };
    let mut checks = Vec::new();
    for decl in &file.checks {
        let check = match decl {
            CheckDecl::Transitivity {
                line,
                first,
                second,
                p,
                valid,
                divergence,
                shift,
            } => {
                known_id(first, *line)?;
                known_id(second, *line)?;
                Check::Transitivity {
                    first: first.clone(),
                    second: second.clone(),
                    expect_combined: p.as_ref().map(value_to_prob),
                    expect_valid: *valid,
                    expect_divergence: *divergence,
                    expect_shift: shift.as_ref().map(value_to_prob),
                }
            }
            CheckDecl::Compatible {
                e1,
                e2,
                compatible,
                defect,
                ..
            } => Check::Compatible {
                e1: lower_event(e1, &snaps)?,
                e2: lower_event(e2, &snaps)?,
                expect_compatible: *compatible,
                expect_defect: defect.as_ref().map(value_to_prob),
            },
            CheckDecl::Or {
                line,
                branches,
                merged,
                classical,
                actual,
                divergence,
            } => {
                for id in branches {
                    known_id(id, *line)?;
                }
                known_id(merged, *line)?;
                Check::Or {
                    branches: branches.clone(),
                    merged: merged.clone(),
                    expect_classical: classical.as_ref().map(value_to_prob),
                    expect_actual: actual.as_ref().map(value_to_prob),
                    expect_divergence: *divergence,
                }
            }
            CheckDecl::Mine { contains, .. } => {
                let mut pairs = Vec::new();
                for (premise, conclusion) in contains {
                    pairs.push((lower_event(premise, &snaps)?, lower_event(conclusion, &snaps)?));
                }
                Check::Mine { contains: pairs }
            }
            CheckDecl::Final { line, terms } => {
                let mut lowered = Vec::new();
                for term in terms {
                    if term.amp.phase != 0.0 {
                        return Err(err(*line, "final-state checks need phase-free amplitudes"));
                    }
                    lowered.push((final_term_bits(term, &final_order, *line)?, term.amp.magnitude.clone()));
                }
                Check::Final { terms: lowered }
            }
            CheckDecl::Joint {
                line,
                registers,
                rows,
            } => {
                for name in registers {
                    if !track.entries.contains_key(name) {
                        return Err(err(
                            *line,
                            format!("unknown register `{name}` at the final step"),
                        ));
                    }
                }
                Check::Joint {
                    registers: registers.iter().map(|r| RegisterId::from(r.as_str())).collect(),
                    expect: rows
                        .iter()
                        .map(|(label, v)| (label.clone(), value_to_prob(v)))
                        .collect(),
                }
            }
            CheckDecl::Chain { events, p, .. } => Check::Chain {
                events: events
                    .iter()
                    .map(|e| lower_event(e, &snaps))
                    .collect::<Result<Vec<_>, _>>()?,
                expect: p.as_ref().map(value_to_prob),
            },
            CheckDecl::Defect {
                line,
                register,
                at_step,
                basis,
                later,
                p,
            } => {
                if *at_step >= snaps.len() || !snaps[*at_step].contains_key(register) {
                    return Err(err(
                        *line,
                        format!("unknown register `{register}` at step {at_step}"),
                    ));
                }
                Check::Defect {
                    register: RegisterId::from(register.as_str()),
                    basis: match basis {
                        Some(BasisKey::X) => OutcomeBasis::X,
                        _ => OutcomeBasis::Z,
                    },
                    at_step: *at_step,
                    later: lower_event(later, &snaps)?,
                    expect: p.as_ref().map(value_to_prob),
                }
            }
            CheckDecl::Conjunction {
                premises,
                conclusion,
                p,
                flagged,
                ..
            } => Check::Conjunction {
                premises: premises
                    .iter()
                    .map(|e| lower_event(e, &snaps))
                    .collect::<Result<Vec<_>, _>>()?,
                conclusion: lower_event(conclusion, &snaps)?,
                expect: p.as_ref().map(value_to_prob),
                expect_flagged: *flagged,
            },
            CheckDecl::Swap { line, a, b } => {
                let n = steps.len();
                if *a < 1 || *b < 1 || *a > n || *b > n || a == b {
                    return Err(err(
                        *line,
                        format!("swap needs two distinct step indices in 1..={n}"),
                    ));
                }
                Check::Swap { a: *a, b: *b }
            }
            CheckDecl::Violation {
                failing,
                passing,
                expect,
                ..
            } => Check::Violation {
                failing: failing.clone(),
                passing: passing.clone(),
                expect: value_to_prob(expect),
            },
        };
        checks.push(check);
    }

    let scenario = Scenario {
        name: name.to_string(),
        about: String::new(),
        registers,
        terms,
        normalized: state.normalized,
        steps,
        statements,
        checks,
        arithmetic: if file.float_only || any_phase {
            Arithmetic::FloatOnly
        } else {
            Arithmetic::Both
        },
    };

    // Surface normalization problems (with their exact deficit) and any
    // other initial-state defect now rather than at run time.
    let built = if scenario.supports_exact() {
        scenario
            .build_initial::<frlogic_core::QuadAmp>()
            .map(|_| ())
    } else {
        scenario
            .build_initial::<frlogic_core::FloatAmp>()
            .map(|_| ())
    };
    if let Err(e) = built {
        return Err(err(state.line, e.to_string()));
    }
    Ok(scenario)
}

fn final_term_bits(
    term: &TermAst,
    final_order: &[(String, Labels)],
    line: usize,
) -> Result<Vec<Bit>, SemanticError> {
    if term.labels.len() != final_order.len() {
        return Err(err(
            line,
            format!(
                "expected {} labels in the final-state ket, got {}",
                final_order.len(),
                term.labels.len()
            ),
        ));
    }
    let mut bits = Vec::new();
    for ((name, labels), label) in final_order.iter().zip(&term.labels) {
        let bit = native_or_generic(labels, label).ok_or_else(|| {
            err(line, format!("unknown outcome label `{label}` for `{name}`"))
        })?;
        bits.push(bit);
    }
    Ok(bits)
}

/// Replaces step `step` with a fixed collapse at `outcome` (or a sampled
/// one for `sample`), dropping the file's expectations: they describe the
/// unmodified experiment.
pub fn collapse_override(
    scenario: &mut Scenario,
    step: usize,
    outcome: &str,
) -> Result<(), String> {
    let n = scenario.steps.len();
    if step < 1 || step > n {
        return Err(format!("collapse step {step} outside 1..={n}"));
    }
    let snaps = scenario_snapshots(scenario);
    let target = scenario.steps[step - 1].targets[0].as_str().to_string();
    let labels = snaps[step - 1]
        .iter()
        .find(|(n, _)| *n == target)
        .map(|(_, l)| l.clone())
        .unwrap_or_default();
    let style = if outcome == "sample" {
        Style::Collapse(CollapseRule::Sampled)
    } else {
        let sel = collapse_sel(&scenario.steps[step - 1].basis, &labels, outcome)
            .ok_or_else(|| format!("unknown collapse outcome `{outcome}`"))?;
        Style::Collapse(CollapseRule::Fixed(sel))
    };
    scenario.steps[step - 1].style = style;
    for statement in &mut scenario.statements {
        statement.expect = None;
    }
    scenario.checks.clear();
    Ok(())
}
