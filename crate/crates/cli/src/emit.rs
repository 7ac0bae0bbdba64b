//! Renders a [`Scenario`] back into the experiment description language,
//! so the bundled library can be written out as example files and every
//! file the emitter produces parses back to an equivalent scenario.

use frlogic_core::logic::{Event, Mode, VerdictClass};
use frlogic_core::measure::{CollapseRule, MeasurementStep, Style};
use frlogic_core::scenario::{AmpSpec, Arithmetic, Check, ExpectedProb, Scenario};
use frlogic_core::state::{Bit, JointKet, OutcomeBasis, OutcomeSel};

use crate::lower::scenario_snapshots;

type Labels = (String, String);
type Snap = Vec<(String, Labels)>;

fn bit_label(labels: &Labels, bit: Bit) -> &str {
    match bit {
        Bit::Zero => &labels.0,
        Bit::One => &labels.1,
    }
}

fn labels_at<'a>(snaps: &'a [Snap], at_step: usize, register: &str) -> Option<&'a Labels> {
    snaps
        .get(at_step.min(snaps.len() - 1))?
        .iter()
        .find(|(n, _)| n == register)
        .map(|(_, l)| l)
}

fn amp_text(spec: &AmpSpec) -> String {
    if spec.phase == 0.0 {
        spec.magnitude.to_string()
    } else {
        format!("{}*phase({})", spec.magnitude, spec.phase)
    }
}

fn value_text(p: &ExpectedProb) -> String {
    match p {
        ExpectedProb::Exact(q) => q.to_string(),
        ExpectedProb::Approx(x) => format!("~{x}"),
    }
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn class_text(class: VerdictClass) -> &'static str {
    match class {
        VerdictClass::Holds => "holds",
        VerdictClass::Fails => "fails",
        VerdictClass::Vacuous => "vacuous",
        VerdictClass::Probabilistic => "probabilistic",
    }
}

fn sel_label(sel: &OutcomeSel, basis: &OutcomeBasis, target_labels: &Labels) -> String {
    match sel {
        OutcomeSel::Any => "any".to_string(),
        OutcomeSel::Rest => "rest".to_string(),
        OutcomeSel::Listed(i) => match basis {
            OutcomeBasis::Joint { labels, .. } => labels
                .get(*i)
                .cloned()
                .unwrap_or_else(|| format!("s{i}")),
            _ => format!("s{i}"),
        },
        OutcomeSel::Bit(b) => match basis {
            OutcomeBasis::X => if *b == Bit::Zero { "plus" } else { "minus" }.to_string(),
            OutcomeBasis::Axis(_) => if *b == Bit::Zero { "axis+" } else { "axis-" }.to_string(),
            _ => bit_label(target_labels, *b).to_string(),
        },
    }
}

fn event_text(ev: &Event, snaps: &[Snap]) -> String {
    let fallback = ("0".to_string(), "1".to_string());
    let labels = labels_at(snaps, ev.at_step, ev.register.as_str()).unwrap_or(&fallback);
    let label = sel_label(&ev.outcome, &ev.basis, labels);
    let suffix = match ev.basis {
        OutcomeBasis::X => " basis=x",
        _ => "",
    };
    format!("{}@{} == {label}{suffix}", ev.register, ev.at_step)
}

fn event_list_text(events: &[Event], snaps: &[Snap]) -> String {
    events
        .iter()
        .map(|e| event_text(e, snaps))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn ket_text<'a>(bits: impl Iterator<Item = (Bit, &'a Labels)>) -> String {
    let labels: Vec<&str> = bits.map(|(b, l)| bit_label(l, b)).collect();
    format!("|{}>", labels.join(" "))
}

fn joint_ket_text(ket: &JointKet, target_labels: &[&Labels]) -> String {
    ket.terms
        .iter()
        .map(|(bits, amp)| {
            let ket = ket_text(bits.iter().copied().zip(target_labels.iter().copied()));
            if amp.to_string() == "1" {
                ket
            } else {
                format!("{amp} {ket}")
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn basis_text(step: &MeasurementStep, snap: &Snap) -> String {
    match &step.basis {
        OutcomeBasis::Z => "z".to_string(),
        OutcomeBasis::X => "x".to_string(),
        OutcomeBasis::Axis(a) => format!("theta({a})"),
        OutcomeBasis::Joint { states, .. } => {
            let fallback = ("0".to_string(), "1".to_string());
            let target_labels: Vec<&Labels> = step
                .targets
                .iter()
                .map(|t| {
                    snap.iter()
                        .find(|(n, _)| n == t.as_str())
                        .map(|(_, l)| l)
                        .unwrap_or(&fallback)
                })
                .collect();
            let states = states
                .iter()
                .map(|k| joint_ket_text(k, &target_labels))
                .collect::<Vec<_>>()
                .join(" ; ");
            format!("states({states})")
        }
    }
}

pub(crate) fn step_text(index: usize, step: &MeasurementStep, snap: &Snap) -> String {
    let targets = step
        .targets
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(",");
    let basis = basis_text(step, snap);
    let head = format!("step {index}: {} ", step.agent);
    match &step.style {
        Style::Absorb => format!("{head}absorbs {targets} in {basis}"),
        Style::Preserve => format!("{head}measures {targets} in {basis} preserving"),
        Style::Collapse(CollapseRule::Sampled) => {
            format!("{head}measures {targets} in {basis} collapse=sample")
        }
        Style::Collapse(CollapseRule::Fixed(sel)) => {
            let fallback = ("0".to_string(), "1".to_string());
            let labels = snap
                .iter()
                .find(|(n, _)| *n == step.targets[0].as_str())
                .map(|(_, l)| l)
                .unwrap_or(&fallback);
            let label = sel_label(sel, &step.basis, labels);
            format!("{head}measures {targets} in {basis} collapse={label}")
        }
    }
}

/// Appends ` expect k1=v1 k2=v2` when any value is present.
fn expect_tail(parts: Vec<Option<String>>) -> String {
    let given: Vec<String> = parts.into_iter().flatten().collect();
    if given.is_empty() {
        String::new()
    } else {
        format!(" expect {}", given.join(" "))
    }
}

fn opt_value(key: &str, v: &Option<ExpectedProb>) -> Option<String> {
    v.as_ref().map(|p| format!("{key}={}", value_text(p)))
}

fn opt_bool(key: &str, v: &Option<bool>) -> Option<String> {
    v.map(|b| format!("{key}={}", bool_text(b)))
}

/// Renders the scenario as a parseable experiment file.
pub fn emit(s: &Scenario) -> String {
    let snaps = scenario_snapshots(s);
    let mut out = String::new();
    let mut line = |text: String| {
        out.push_str(&text);
        out.push('\n');
    };

    if s.about.is_empty() {
        line(format!("# {}", s.name));
    } else {
        line(format!("# {}: {}", s.name, s.about));
    }
    line(String::new());
    if s.arithmetic == Arithmetic::FloatOnly {
        line("arithmetic float".to_string());
    }
    for reg in &s.registers {
        if reg.labels == ("up".to_string(), "down".to_string()) {
            line(format!("register {}", reg.id));
        } else {
            line(format!(
                "register {} labels={},{}",
                reg.id, reg.labels.0, reg.labels.1
            ));
        }
    }
    line(String::new());

    let initial_labels: Vec<&Labels> = snaps[0].iter().map(|(_, l)| l).collect();
    let terms = s
        .terms
        .iter()
        .map(|(bits, amp)| {
            let ket = ket_text(bits.iter().copied().zip(initial_labels.iter().copied()));
            format!("{} {ket}", amp_text(amp))
        })
        .collect::<Vec<_>>()
        .join(" + ");
    if s.normalized {
        line(format!("state {terms}"));
    } else {
        line(format!("state unnormalized {terms}"));
    }
    line(String::new());

    for (i, step) in s.steps.iter().enumerate() {
        line(step_text(i + 1, step, &snaps[i]));
    }

    if !s.statements.is_empty() {
        line(String::new());
    }
    for named in &s.statements {
        let st = &named.statement;
        let mode = match st.mode {
            Mode::Forward => "forward",
            Mode::Retrodictive => "retro",
        };
        let expect = named
            .expect
            .as_ref()
            .map(|e| {
                format!(
                    " expect {}{}{}",
                    class_text(e.class),
                    e.conditional
                        .as_ref()
                        .map(|p| format!(" p={}", value_text(p)))
                        .unwrap_or_default(),
                    e.premise
                        .as_ref()
                        .map(|q| format!(" q={}", value_text(q)))
                        .unwrap_or_default(),
                )
            })
            .unwrap_or_default();
        line(format!(
            "statement {}: if {} then {} mode={mode}{expect}",
            named.id,
            event_list_text(&st.premises, &snaps),
            event_text(&st.conclusion, &snaps),
        ));
    }

    if !s.checks.is_empty() {
        line(String::new());
    }
    for check in &s.checks {
        let text = match check {
            Check::Final { terms } => {
                let final_labels: Vec<&Labels> =
                    snaps.last().unwrap().iter().map(|(_, l)| l).collect();
                let terms = terms
                    .iter()
                    .map(|(bits, amp)| {
                        let ket =
                            ket_text(bits.iter().copied().zip(final_labels.iter().copied()));
                        format!("{amp} {ket}")
                    })
                    .collect::<Vec<_>>()
                    .join(" + ");
                format!("check final {terms}")
            }
            Check::Joint { registers, expect } => {
                let regs = registers
                    .iter()
                    .map(|r| r.as_str())
                    .collect::<Vec<_>>()
                    .join(",");
                let rows = expect
                    .iter()
                    .map(|(label, p)| format!("{label}={}", value_text(p)))
                    .collect::<Vec<_>>()
                    .join(" ");
                if rows.is_empty() {
                    format!("check joint {regs}")
                } else {
                    format!("check joint {regs} expect {rows}")
                }
            }
            Check::Chain { events, expect } => {
                let chain = events
                    .iter()
                    .map(|e| event_text(e, &snaps))
                    .collect::<Vec<_>>()
                    .join(" then ");
                format!(
                    "check chain {chain}{}",
                    expect_tail(vec![opt_value("p", expect)])
                )
            }
            Check::Transitivity {
                first,
                second,
                expect_combined,
                expect_valid,
                expect_divergence,
                expect_shift,
            } => format!(
                "check transitivity {first} {second}{}",
                expect_tail(vec![
                    opt_value("p", expect_combined),
                    opt_bool("valid", expect_valid),
                    opt_bool("divergence", expect_divergence),
                    opt_value("shift", expect_shift),
                ])
            ),
            Check::Compatible {
                e1,
                e2,
                expect_compatible,
                expect_defect,
            } => format!(
                "check compatible {} {}{}",
                event_text(e1, &snaps),
                event_text(e2, &snaps),
                expect_tail(vec![
                    opt_bool("compatible", expect_compatible),
                    opt_value("defect", expect_defect),
                ])
            ),
            Check::Defect {
                register,
                basis,
                at_step,
                later,
                expect,
            } => {
                let basis = match basis {
                    OutcomeBasis::X => " basis=x",
                    _ => "",
                };
                format!(
                    "check defect {register}@{at_step}{basis} against {}{}",
                    event_text(later, &snaps),
                    expect_tail(vec![opt_value("p", expect)])
                )
            }
            Check::Conjunction {
                premises,
                conclusion,
                expect,
                expect_flagged,
            } => format!(
                "check conjunction if {} then {}{}",
                event_list_text(premises, &snaps),
                event_text(conclusion, &snaps),
                expect_tail(vec![
                    opt_value("p", expect),
                    opt_bool("flagged", expect_flagged),
                ])
            ),
            Check::Or {
                branches,
                merged,
                expect_classical,
                expect_actual,
                expect_divergence,
            } => format!(
                "check or {} merged {merged}{}",
                branches.join(","),
                expect_tail(vec![
                    opt_value("classical", expect_classical),
                    opt_value("actual", expect_actual),
                    opt_bool("divergence", expect_divergence),
                ])
            ),
            Check::Mine { contains } => {
                let mut text = "check mine".to_string();
                for (premise, conclusion) in contains {
                    text.push_str(&format!(
                        " contains {} => {}",
                        event_text(premise, &snaps),
                        event_text(conclusion, &snaps)
                    ));
                }
                text
            }
            Check::Swap { a, b } => format!("check swap {a} {b}"),
            Check::Violation {
                failing,
                passing,
                expect,
            } => format!(
                "check violation failing={failing} passing={passing} expect p={}",
                value_text(expect)
            ),
        };
        line(text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use frlogic_core::scenario;

    #[test]
    fn the_full_experiment_emits_its_known_lines() {
        let text = emit(&scenario::fr_full());
        assert!(text.contains("state 1/3*sqrt3 |up down> + 1/3*sqrt3 |down up> + 1/3*sqrt3 |down down>"));
        assert!(text.contains("step 1: Fbar absorbs barred in z"));
        assert!(text.contains("step 3: Wbar measures mem.Fbar in x preserving"));
        assert!(text.contains(
            "statement 2: if mem.Wbar@3 == minus then mem.F@2 == up mode=retro \
             expect holds p=1 q=1/6"
        ));
        assert!(text.contains("check transitivity 1p 2 expect p=1/2 valid=no divergence=yes shift=1/2"));
        assert!(text.contains("check swap 1 2"));
        assert!(text.contains("minus_minus=1/12"));
    }

    #[test]
    fn collapse_and_phase_scenarios_emit_their_extensions() {
        let variants = scenario::fr_collapse_variants();
        let up = emit(&variants[0]);
        assert!(up.contains("step 1: Fbar measures barred in z collapse=up"), "{up}");

        let phase = emit(&scenario::fr_phase(std::f64::consts::FRAC_PI_2));
        assert!(phase.contains("arithmetic float"), "{phase}");
        assert!(phase.contains("*phase(1.5707963267948966)"), "{phase}");
        assert!(phase.contains("minus=~"), "{phase}");
    }

    #[test]
    fn skewed_weights_emit_unnormalized_states() {
        let text = emit(&scenario::abc_ninety());
        assert!(text.contains("state unnormalized 1 |"), "{text}");
        assert!(text.contains("check violation failing=3 passing=1 expect p=9/10"), "{text}");
    }

    #[test]
    fn every_bundled_scenario_emits_and_parses_back() {
        for s in scenario::bundled() {
            let text = emit(&s);
            let parsed = crate::dsl::parse(&text)
                .unwrap_or_else(|e| panic!("{}: {e}\n{text}", s.name));
            assert_eq!(parsed.steps.len(), s.steps.len(), "{}", s.name);
            assert_eq!(parsed.statements.len(), s.statements.len(), "{}", s.name);
            assert_eq!(parsed.checks.len(), s.checks.len(), "{}", s.name);
        }
    }
}
