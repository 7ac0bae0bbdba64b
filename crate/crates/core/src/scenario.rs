//! Bundled experiments: each scenario pairs an initial state and step list
//! with the statements and checks it is expected to produce, so a run can
//! be validated end to end in either arithmetic backend.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::amplitude::{Amplitude, FloatAmp, QuadAmp};
use crate::error::Error;
use crate::logic::{
    chain_probability, check_transitivity, conjunction_compatible, conjunction_premise_check,
    evaluate_statement, mine_statements, or_composition_check, violation_fraction, Event,
    OrReport, Statement, TransitivityReport, Verdict, VerdictClass,
};
use crate::measure::{run_experiment, History, MeasurementStep};
use crate::state::{Bit, OutcomeBasis, OutcomeSel, Register, RegisterId, StateVector};

const EPS: f64 = 1e-9;

/// Which arithmetic backends can run the scenario.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Arithmetic {
    Both,
    FloatOnly,
}

/// One amplitude of the initial state: an exact magnitude times an
/// optional phase factor `e^(i*phase)`.  A nonzero phase needs the float
/// backend.
#[derive(Clone, Debug)]
pub struct AmpSpec {
    pub magnitude: QuadAmp,
    pub phase: f64,
}

impl AmpSpec {
    pub fn exact(magnitude: QuadAmp) -> Self {
        AmpSpec {
            magnitude,
            phase: 0.0,
        }
    }

    fn build<A: Amplitude>(&self) -> Result<A, Error> {
        A::from_polar(&self.magnitude, self.phase).ok_or(Error::UnsupportedInExactMode {
            what: "a relative phase",
        })
    }
}

/// An expected probability, either pinned exactly or to float tolerance.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum ExpectedProb {
    Exact(QuadAmp),
    Approx(f64),
}

impl ExpectedProb {
    pub fn matches<A: Amplitude>(&self, actual: &A) -> bool {
        match self {
            ExpectedProb::Exact(e) => A::from_quad(e).prob_eq(actual),
            ExpectedProb::Approx(x) => libm::fabs(actual.to_f64() - x) < EPS,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExpectedProb::Exact(e) => Amplitude::to_f64(e),
            ExpectedProb::Approx(x) => *x,
        }
    }
}

fn exact(text: &str) -> ExpectedProb {
    ExpectedProb::Exact(text.parse().expect("literal amplitude"))
}

/// What a statement's verdict is expected to be.
#[derive(Clone, Debug)]
pub struct ExpectedVerdict {
    pub class: VerdictClass,
    pub conditional: Option<ExpectedProb>,
    pub premise: Option<ExpectedProb>,
}

impl ExpectedVerdict {
    pub fn holds() -> Self {
        ExpectedVerdict {
            class: VerdictClass::Holds,
            conditional: Some(exact("1")),
            premise: None,
        }
    }

    pub fn vacuous() -> Self {
        ExpectedVerdict {
            class: VerdictClass::Vacuous,
            conditional: None,
            premise: None,
        }
    }

    pub fn with_premise(mut self, p: ExpectedProb) -> Self {
        self.premise = Some(p);
        self
    }

    pub fn matches<A: Amplitude>(&self, v: &Verdict<A>) -> bool {
        if v.class != self.class {
            return false;
        }
        if let Some(expected) = &self.conditional {
            match &v.conditional {
                Some(actual) if expected.matches(actual) => {}
                _ => return false,
            }
        }
        if let Some(expected) = &self.premise {
            if !expected.matches(&v.premise_probability) {
                return false;
            }
        }
        true
    }
}

fn probabilistic(p: ExpectedProb) -> ExpectedVerdict {
    ExpectedVerdict {
        class: VerdictClass::Probabilistic,
        conditional: Some(p),
        premise: None,
    }
}

fn fails() -> ExpectedVerdict {
    ExpectedVerdict {
        class: VerdictClass::Fails,
        conditional: Some(exact("0")),
        premise: None,
    }
}

/// A statement with its scenario-local id and optional expected verdict.
#[derive(Clone, Debug)]
pub struct NamedStatement {
    pub id: String,
    pub statement: Statement,
    pub expect: Option<ExpectedVerdict>,
}

/// A structural check the scenario is expected to pass.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Check {
    /// Final snapshot equals this term list exactly (order-free).
    Final { terms: Vec<(Vec<Bit>, QuadAmp)> },
    /// Native-basis joint distribution over the listed registers at the
    /// final step.
    Joint {
        registers: Vec<RegisterId>,
        expect: Vec<(String, ExpectedProb)>,
    },
    /// Probability of a time-ordered event chain.
    Chain {
        events: Vec<Event>,
        expect: Option<ExpectedProb>,
    },
    /// Transitive composition of two suite statements.
    Transitivity {
        first: String,
        second: String,
        expect_combined: Option<ExpectedProb>,
        expect_valid: Option<bool>,
        expect_divergence: Option<bool>,
        expect_shift: Option<ExpectedProb>,
    },
    /// Pairwise premise compatibility.
    Compatible {
        e1: Event,
        e2: Event,
        expect_compatible: Option<bool>,
        expect_defect: Option<ExpectedProb>,
    },
    /// Disturbance defect of an observable against a later event.
    Defect {
        register: RegisterId,
        basis: OutcomeBasis,
        at_step: usize,
        later: Event,
        expect: Option<ExpectedProb>,
    },
    /// Multi-premise conjunction statement.
    Conjunction {
        premises: Vec<Event>,
        conclusion: Event,
        expect: Option<ExpectedProb>,
        expect_flagged: Option<bool>,
    },
    /// Disjunction composition over suite statements.
    Or {
        branches: Vec<String>,
        merged: String,
        expect_classical: Option<ExpectedProb>,
        expect_actual: Option<ExpectedProb>,
        expect_divergence: Option<bool>,
    },
    /// Statement mining must find each premise/conclusion pair.
    Mine { contains: Vec<(Event, Event)> },
    /// Swapping two steps (1-based) leaves the final native distribution
    /// unchanged.
    Swap { a: usize, b: usize },
    /// The two-branch violation-fraction formula on explicit weights.
    Violation {
        failing: QuadAmp,
        passing: QuadAmp,
        expect: ExpectedProb,
    },
}

/// A bundled experiment with its expected outcomes.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub about: String,
    pub registers: Vec<Register>,
    pub terms: Vec<(Vec<Bit>, AmpSpec)>,
    pub normalized: bool,
    pub steps: Vec<MeasurementStep>,
    pub statements: Vec<NamedStatement>,
    pub checks: Vec<Check>,
    pub arithmetic: Arithmetic,
}

/// One evaluated statement with its match status.
#[derive(Clone, Debug)]
pub struct StatementResult<A: Amplitude> {
    pub id: String,
    pub verdict: Verdict<A>,
    pub matched: bool,
}

/// Check-specific result payload, kept for report rendering.
#[derive(Clone, Debug)]
pub enum CheckData<A: Amplitude> {
    Final,
    Joint { rows: Vec<(String, A)> },
    Chain { probability: A },
    Transitivity(TransitivityReport<A>),
    Compatible { compatible: bool, defect: A },
    Defect { defect: A },
    Conjunction(Verdict<A>),
    Or(OrReport<A>),
    Mine { total: usize, missing: usize },
    Swap,
    Violation { fraction: A },
}

#[derive(Clone, Debug)]
pub struct CheckResult<A: Amplitude> {
    pub description: String,
    pub matched: bool,
    pub data: CheckData<A>,
}

/// A finished run: the history plus every evaluated expectation.
#[derive(Clone, Debug)]
pub struct ScenarioRun<A: Amplitude> {
    pub history: History<A>,
    pub statements: Vec<StatementResult<A>>,
    pub checks: Vec<CheckResult<A>>,
}

impl<A: Amplitude> ScenarioRun<A> {
    pub fn passed(&self) -> bool {
        self.statements.iter().all(|s| s.matched) && self.checks.iter().all(|c| c.matched)
    }

    /// Descriptions of every expectation that did not match.
    pub fn mismatches(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.statements {
            if !s.matched {
                out.push(format!("statement {}", s.id));
            }
        }
        for c in &self.checks {
            if !c.matched {
                out.push(c.description.clone());
            }
        }
        out
    }
}

impl Scenario {
    pub fn supports_exact(&self) -> bool {
        self.arithmetic == Arithmetic::Both
    }

    pub fn build_initial<A: Amplitude>(&self) -> Result<StateVector<A>, Error> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (config, spec) in &self.terms {
            terms.push((config.clone(), spec.build::<A>()?));
        }
        if self.normalized {
            StateVector::new(self.registers.clone(), terms)
        } else {
            StateVector::new_unnormalized(self.registers.clone(), terms)
        }
    }

    pub fn run_exact(&self) -> Result<ScenarioRun<QuadAmp>, Error> {
        if !self.supports_exact() {
            return Err(Error::UnsupportedInExactMode {
                what: "this scenario",
            });
        }
        self.run_with::<QuadAmp>()
    }

    pub fn run_float(&self) -> Result<ScenarioRun<FloatAmp>, Error> {
        self.run_with::<FloatAmp>()
    }

    pub fn run_with<A: Amplitude>(&self) -> Result<ScenarioRun<A>, Error> {
        self.run_sampled::<A>(None)
    }

    /// Like [`Scenario::run_with`], with a sampler for any sampled-collapse
    /// steps. The sampler supplies uniform draws in `[0, 1)`.
    pub fn run_sampled<A: Amplitude>(
        &self,
        sampler: Option<&mut dyn FnMut() -> f64>,
    ) -> Result<ScenarioRun<A>, Error> {
        let history = run_experiment(self.build_initial::<A>()?, &self.steps, sampler)?;
        let mut statements = Vec::new();
        for named in &self.statements {
            let verdict = evaluate_statement(&history, &named.statement)?;
            let matched = named
                .expect
                .as_ref()
                .map(|e| e.matches(&verdict))
                .unwrap_or(true);
            statements.push(StatementResult {
                id: named.id.clone(),
                verdict,
                matched,
            });
        }
        let mut checks = Vec::new();
        for check in &self.checks {
            checks.push(self.run_check::<A>(&history, check)?);
        }
        Ok(ScenarioRun {
            history,
            statements,
            checks,
        })
    }

    fn statement(&self, id: &str) -> Result<&Statement, Error> {
        self.statements
            .iter()
            .find(|s| s.id == id)
            .map(|s| &s.statement)
            .ok_or_else(|| Error::UnknownLabel {
                register: RegisterId::from("statement"),
                label: id.to_string(),
            })
    }

    fn run_check<A: Amplitude>(
        &self,
        history: &History<A>,
        check: &Check,
    ) -> Result<CheckResult<A>, Error> {
        let final_state = history.snapshot(history.len())?;
        Ok(match check {
            Check::Final { terms } => {
                let expected = StateVector::new_unnormalized(
                    final_state.registers().to_vec(),
                    terms
                        .iter()
                        .map(|(c, a)| (c.clone(), A::from_quad(a)))
                        .collect(),
                )?;
                CheckResult {
                    description: "final state".to_string(),
                    matched: final_state.same_state(&expected),
                    data: CheckData::Final,
                }
            }
            Check::Joint { registers, expect } => {
                let rows = joint_distribution(final_state, registers)?;
                let matched = expect.iter().all(|(label, p)| {
                    rows.iter()
                        .any(|(actual_label, actual)| actual_label == label && p.matches(actual))
                });
                CheckResult {
                    description: format!("joint distribution of {}", join_ids(registers)),
                    matched,
                    data: CheckData::Joint { rows },
                }
            }
            Check::Chain { events, expect } => {
                let probability = chain_probability(history, events)?;
                CheckResult {
                    description: format!("chain of {} events", events.len()),
                    matched: prob_ok(expect, &probability),
                    data: CheckData::Chain { probability },
                }
            }
            Check::Transitivity {
                first,
                second,
                expect_combined,
                expect_valid,
                expect_divergence,
                expect_shift,
            } => {
                let report =
                    check_transitivity(history, self.statement(first)?, self.statement(second)?)?;
                let combined_ok = expect_combined
                    .as_ref()
                    .map(|e| {
                        report
                            .combined_retro
                            .conditional
                            .as_ref()
                            .is_some_and(|p| e.matches(p))
                    })
                    .unwrap_or(true);
                let shift_ok = expect_shift
                    .as_ref()
                    .map(|e| e.matches(&report.premise_shift_fraction))
                    .unwrap_or(true);
                let matched = combined_ok
                    && flag_ok(expect_valid, report.transitivity_valid)
                    && flag_ok(expect_divergence, report.divergence)
                    && shift_ok
                    && self
                        .expect_of(first)
                        .map(|e| report.first.holds() == (e.class == VerdictClass::Holds))
                        .unwrap_or(true);
                CheckResult {
                    description: format!("transitivity {first}*{second}"),
                    matched,
                    data: CheckData::Transitivity(report),
                }
            }
            Check::Compatible {
                e1,
                e2,
                expect_compatible,
                expect_defect,
            } => {
                let (compatible, defect) = conjunction_compatible(history, e1, e2)?;
                let defect_ok = expect_defect
                    .as_ref()
                    .map(|e| e.matches(&defect))
                    .unwrap_or(true);
                CheckResult {
                    description: format!(
                        "compatibility of {}@{} and {}@{}",
                        e1.register, e1.at_step, e2.register, e2.at_step
                    ),
                    matched: flag_ok(expect_compatible, compatible) && defect_ok,
                    data: CheckData::Compatible { compatible, defect },
                }
            }
            Check::Defect {
                register,
                basis,
                at_step,
                later,
                expect,
            } => {
                let defect = crate::logic::disturbance_defect(
                    history, register, basis, *at_step, later,
                )?;
                CheckResult {
                    description: format!(
                        "defect of {register}@{at_step} against {}@{}",
                        later.register, later.at_step
                    ),
                    matched: prob_ok(expect, &defect),
                    data: CheckData::Defect { defect },
                }
            }
            Check::Conjunction {
                premises,
                conclusion,
                expect,
                expect_flagged,
            } => {
                let verdict = conjunction_premise_check(history, premises, conclusion)?;
                let value_ok = expect
                    .as_ref()
                    .map(|e| verdict.conditional.as_ref().is_some_and(|p| e.matches(p)))
                    .unwrap_or(true);
                let flagged = verdict
                    .diagnostics
                    .contains(&crate::logic::Diagnostic::IncompatiblePremises);
                CheckResult {
                    description: format!(
                        "conjunction of {} premises -> {}@{}",
                        premises.len(),
                        conclusion.register,
                        conclusion.at_step
                    ),
                    matched: value_ok && flag_ok(expect_flagged, flagged),
                    data: CheckData::Conjunction(verdict),
                }
            }
            Check::Or {
                branches,
                merged,
                expect_classical,
                expect_actual,
                expect_divergence,
            } => {
                let branch_statements: Vec<Statement> = branches
                    .iter()
                    .map(|id| self.statement(id).cloned())
                    .collect::<Result<_, _>>()?;
                let report =
                    or_composition_check(history, &branch_statements, self.statement(merged)?)?;
                let actual_ok = expect_actual
                    .as_ref()
                    .map(|e| {
                        report
                            .merged
                            .conditional
                            .as_ref()
                            .is_some_and(|p| e.matches(p))
                    })
                    .unwrap_or(true);
                let matched = prob_ok(expect_classical, &report.classical_expectation)
                    && actual_ok
                    && flag_ok(expect_divergence, report.divergence);
                CheckResult {
                    description: format!("or-composition {} -> {merged}", branches.join(",")),
                    matched,
                    data: CheckData::Or(report),
                }
            }
            Check::Mine { contains } => {
                let found = mine_statements(history)?;
                let missing = contains
                    .iter()
                    .filter(|(prem, concl)| {
                        !found.iter().any(|(s, _)| {
                            s.premises.len() == 1
                                && s.premises[0] == *prem
                                && s.conclusion == *concl
                        })
                    })
                    .count();
                CheckResult {
                    description: "mined statement coverage".to_string(),
                    matched: missing == 0,
                    data: CheckData::Mine {
                        total: found.len(),
                        missing,
                    },
                }
            }
            Check::Swap { a, b } => {
                let mut steps = self.steps.clone();
                steps.swap(a - 1, b - 1);
                let swapped = run_experiment(self.build_initial::<A>()?, &steps, None)?;
                let lhs = full_distribution(final_state)?;
                let rhs = full_distribution(swapped.snapshot(swapped.len())?)?;
                let matched = lhs.len() == rhs.len()
                    && lhs
                        .iter()
                        .zip(rhs.iter())
                        .all(|((k1, p1), (k2, p2))| k1 == k2 && p1.prob_eq(p2));
                CheckResult {
                    description: format!("step swap {a}<->{b}"),
                    matched,
                    data: CheckData::Swap,
                }
            }
            Check::Violation {
                failing,
                passing,
                expect,
            } => {
                let fraction =
                    violation_fraction(&A::from_quad(failing), &A::from_quad(passing))?;
                CheckResult {
                    description: "violation fraction from branch weights".to_string(),
                    matched: expect.matches(&fraction),
                    data: CheckData::Violation { fraction },
                }
            }
        })
    }

    fn expect_of(&self, id: &str) -> Option<&ExpectedVerdict> {
        self.statements
            .iter()
            .find(|s| s.id == id)
            .and_then(|s| s.expect.as_ref())
    }
}

/// An absent expectation always matches.
fn prob_ok<A: Amplitude>(expect: &Option<ExpectedProb>, actual: &A) -> bool {
    expect.as_ref().map(|e| e.matches(actual)).unwrap_or(true)
}

fn flag_ok(expect: &Option<bool>, actual: bool) -> bool {
    expect.map(|e| e == actual).unwrap_or(true)
}

fn join_ids(ids: &[RegisterId]) -> String {
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(id.as_str());
    }
    out
}

/// Native-basis joint distribution over `regs`, labelled by each
/// register's display labels joined with `_`.
pub fn joint_distribution<A: Amplitude>(
    state: &StateVector<A>,
    regs: &[RegisterId],
) -> Result<Vec<(String, A)>, Error> {
    let n = regs.len();
    let norm = state.norm_sq();
    let mut rows = Vec::with_capacity(1 << n);
    for combo in 0..(1u32 << n) {
        let mut cur = state.clone();
        let mut labels: Vec<String> = Vec::with_capacity(n);
        for (i, id) in regs.iter().enumerate() {
            let bit = if combo >> (n - 1 - i) & 1 == 1 {
                Bit::One
            } else {
                Bit::Zero
            };
            let reg = cur.register(id).ok_or_else(|| Error::UnknownRegister {
                register: id.clone(),
                at_step: 0,
            })?;
            let (l0, l1) = reg.display_labels();
            labels.push(match bit {
                Bit::Zero => l0.to_string(),
                Bit::One => l1.to_string(),
            });
            cur = cur.project(core::slice::from_ref(id), &OutcomeBasis::Z, OutcomeSel::Bit(bit))?;
        }
        let p = A::prob_ratio(&cur.norm_sq(), &norm).ok_or(Error::IrrationalProbability)?;
        rows.push((labels.join("_"), p));
    }
    Ok(rows)
}

/// Distribution over every register's native outcome, keyed by register
/// name so register order does not matter.
fn full_distribution<A: Amplitude>(
    state: &StateVector<A>,
) -> Result<Vec<(String, A)>, Error> {
    let regs = state.registers();
    let n = regs.len();
    let norm = state.norm_sq();
    let mut rows: Vec<(String, A)> = Vec::new();
    for config in 0..(1u32 << n) {
        let amp = state.amplitude(config);
        if amp.is_zero() {
            continue;
        }
        let mut parts: Vec<String> = regs
            .iter()
            .enumerate()
            .map(|(i, reg)| {
                let (l0, l1) = reg.display_labels();
                let label = if config >> i & 1 == 1 { l1 } else { l0 };
                format!("{}={label}", reg.id)
            })
            .collect();
        parts.sort();
        let p = A::prob_ratio(&amp.abs_sq(), &norm).ok_or(Error::IrrationalProbability)?;
        rows.push((parts.join(" "), p));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(rows)
}

// Shared event shorthand for the friend/Wigner experiments.  Absorb steps
// rename the measured spins to `mem.Fbar` / `mem.F`; the Wigner steps
// write x-basis records `mem.Wbar` / `mem.W`.
fn fbar(bit: Bit) -> Event {
    Event::z("mem.Fbar", 1, bit)
}
fn f_rec(bit: Bit) -> Event {
    Event::z("mem.F", 2, bit)
}
fn wbar(bit: Bit) -> Event {
    Event::z("mem.Wbar", 3, bit)
}
fn w_rec(bit: Bit) -> Event {
    Event::z("mem.W", 4, bit)
}

fn friend_wigner_steps() -> Vec<MeasurementStep> {
    vec![
        MeasurementStep::absorb("Fbar", "barred", OutcomeBasis::Z),
        MeasurementStep::absorb("F", "unbarred", OutcomeBasis::Z),
        MeasurementStep::preserve("Wbar", "mem.Fbar", OutcomeBasis::X),
        MeasurementStep::preserve("W", "mem.F", OutcomeBasis::X),
    ]
}

fn two_spins() -> Vec<Register> {
    vec![Register::spin("barred"), Register::spin("unbarred")]
}

fn amp(text: &str) -> AmpSpec {
    AmpSpec::exact(text.parse().expect("literal amplitude"))
}

use Bit::{One as D, Zero as U};

/// The full friend/Wigner experiment: two entangled spins, two absorbing
/// friends, two preserving x-basis observers.
pub fn fr_full() -> Scenario {
    Scenario {
        name: "fr_full".to_string(),
        about: "two friends absorb entangled spins; two observers measure the records in x"
            .to_string(),
        registers: two_spins(),
        terms: vec![
            (vec![U, D], amp("1/sqrt3")),
            (vec![D, U], amp("1/sqrt3")),
            (vec![D, D], amp("1/sqrt3")),
        ],
        normalized: true,
        steps: friend_wigner_steps(),
        statements: vec![
            NamedStatement {
                id: "1p".to_string(),
                statement: Statement::retro(vec![wbar(D), w_rec(D)], wbar(D)),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("1/12"))),
            },
            NamedStatement {
                id: "2".to_string(),
                statement: Statement::retro(vec![wbar(D)], f_rec(U)),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("1/6"))),
            },
            NamedStatement {
                id: "3".to_string(),
                statement: Statement::retro(vec![f_rec(U)], fbar(D)),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("1/3"))),
            },
            NamedStatement {
                id: "4".to_string(),
                statement: Statement::forward(vec![fbar(D)], w_rec(U)),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("2/3"))),
            },
        ],
        checks: vec![
            Check::Final {
                terms: vec![
                    (vec![U, U, U, U], "3/sqrt12".parse().unwrap()),
                    (vec![U, D, U, D], "-1/sqrt12".parse().unwrap()),
                    (vec![D, U, D, U], "-1/sqrt12".parse().unwrap()),
                    (vec![D, D, D, D], "-1/sqrt12".parse().unwrap()),
                ],
            },
            Check::Joint {
                registers: vec!["mem.Wbar".into(), "mem.W".into()],
                expect: vec![
                    ("plus_plus".to_string(), exact("3/4")),
                    ("plus_minus".to_string(), exact("1/12")),
                    ("minus_plus".to_string(), exact("1/12")),
                    ("minus_minus".to_string(), exact("1/12")),
                ],
            },
            Check::Chain {
                events: vec![f_rec(U), wbar(D)],
                expect: Some(exact("1/6")),
            },
            Check::Transitivity {
                first: "1p".to_string(),
                second: "2".to_string(),
                expect_combined: Some(exact("1/2")),
                expect_valid: Some(false),
                expect_divergence: Some(true),
                expect_shift: Some(exact("1/2")),
            },
            Check::Transitivity {
                first: "2".to_string(),
                second: "3".to_string(),
                expect_combined: Some(exact("1/2")),
                expect_valid: Some(false),
                expect_divergence: Some(true),
                expect_shift: Some(exact("1/2")),
            },
            Check::Transitivity {
                first: "3".to_string(),
                second: "4".to_string(),
                expect_combined: Some(exact("1/2")),
                expect_valid: Some(false),
                expect_divergence: Some(true),
                expect_shift: Some(exact("1/2")),
            },
            Check::Compatible {
                e1: fbar(D),
                e2: wbar(D),
                expect_compatible: Some(false),
                expect_defect: Some(exact("1/3")),
            },
            Check::Compatible {
                e1: f_rec(U),
                e2: w_rec(D),
                expect_compatible: Some(false),
                expect_defect: Some(exact("1/3")),
            },
            Check::Compatible {
                e1: f_rec(U),
                e2: wbar(D),
                expect_compatible: Some(true),
                expect_defect: Some(exact("0")),
            },
            Check::Conjunction {
                premises: vec![f_rec(U), wbar(D), w_rec(D)],
                conclusion: fbar(D),
                expect: Some(exact("1/2")),
                expect_flagged: Some(true),
            },
            Check::Mine {
                contains: vec![
                    (wbar(D), f_rec(U)),
                    (f_rec(U), fbar(D)),
                    (fbar(D), w_rec(U)),
                    (w_rec(D), fbar(U)),
                ],
            },
            Check::Swap { a: 1, b: 2 },
            Check::Swap { a: 3, b: 4 },
        ],
        arithmetic: Arithmetic::Both,
    }
}

/// The two-branch sub-experiment: only the barred-down terms, exposing the
/// self-implication transitivity contradiction and the or-composition
/// failure.
pub fn fr_sub34() -> Scenario {
    Scenario {
        name: "fr_sub34".to_string(),
        about: "barred spin definitely down; interference restores certainty the branches lack"
            .to_string(),
        registers: two_spins(),
        terms: vec![
            (vec![D, U], amp("1/sqrt2")),
            (vec![D, D], amp("1/sqrt2")),
        ],
        normalized: true,
        steps: friend_wigner_steps(),
        statements: vec![
            NamedStatement {
                id: "3".to_string(),
                statement: Statement::retro(vec![f_rec(U)], fbar(D)),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("1/2"))),
            },
            NamedStatement {
                id: "4m".to_string(),
                statement: Statement::forward(vec![fbar(D)], f_rec(U)),
                expect: Some(probabilistic(exact("1/2")).with_premise(exact("1"))),
            },
            NamedStatement {
                id: "3L".to_string(),
                statement: Statement::forward(vec![f_rec(U)], w_rec(U)),
                expect: Some(probabilistic(exact("1/2")).with_premise(exact("1/2"))),
            },
            NamedStatement {
                id: "3R".to_string(),
                statement: Statement::forward(vec![f_rec(D)], w_rec(U)),
                expect: Some(probabilistic(exact("1/2")).with_premise(exact("1/2"))),
            },
            NamedStatement {
                id: "3M".to_string(),
                statement: Statement::forward(
                    vec![Event::any("mem.F", 2)],
                    w_rec(U),
                ),
                expect: Some(ExpectedVerdict::holds().with_premise(exact("1"))),
            },
        ],
        checks: vec![
            Check::Final {
                terms: vec![
                    (vec![U, U, U, U], "1/sqrt2".parse().unwrap()),
                    (vec![D, U, D, U], "-1/sqrt2".parse().unwrap()),
                ],
            },
            Check::Transitivity {
                first: "3".to_string(),
                second: "4m".to_string(),
                expect_combined: Some(exact("1")),
                expect_valid: Some(true),
                expect_divergence: Some(true),
                expect_shift: Some(exact("1/2")),
            },
            Check::Or {
                branches: vec!["3L".to_string(), "3R".to_string()],
                merged: "3M".to_string(),
                expect_classical: Some(exact("1/2")),
                expect_actual: Some(exact("1")),
                expect_divergence: Some(true),
            },
            Check::Defect {
                register: "mem.F".into(),
                basis: OutcomeBasis::Z,
                at_step: 2,
                later: w_rec(U),
                expect: Some(exact("1/2")),
            },
        ],
        arithmetic: Arithmetic::Both,
    }
}

fn abc_statements(c_a: &QuadAmp, c_b: &QuadAmp, norm: &QuadAmp) -> Vec<NamedStatement> {
    let a_up = Event::z("mem.A", 1, U);
    let b_up = Event::z("mem.B", 2, U);
    let c_up = Event::z("mem.C", 3, U);
    let weight_a = QuadAmp::prob_ratio(&c_a.abs_sq(), norm).expect("rational weight");
    let b_class = if c_b.is_zero() {
        ExpectedVerdict::holds()
    } else if c_a.is_zero() {
        fails()
    } else {
        probabilistic(ExpectedProb::Exact(weight_a.clone()))
    };
    let premise_class = |e: ExpectedVerdict| {
        if c_a.is_zero() {
            ExpectedVerdict::vacuous()
        } else {
            e.with_premise(ExpectedProb::Exact(weight_a.clone()))
        }
    };
    vec![
        NamedStatement {
            id: "A".to_string(),
            statement: Statement::forward(vec![a_up.clone()], b_up.clone()),
            expect: Some(premise_class(ExpectedVerdict::holds())),
        },
        NamedStatement {
            id: "T".to_string(),
            statement: Statement::forward(vec![a_up], c_up.clone()),
            expect: Some(premise_class(ExpectedVerdict::holds())),
        },
        NamedStatement {
            id: "B".to_string(),
            statement: Statement::forward(vec![b_up], c_up),
            expect: Some(b_class.with_premise(exact("1"))),
        },
    ]
}

fn abc_scenario(
    name: &str,
    about: &str,
    c_a: QuadAmp,
    c_b: QuadAmp,
    normalized: bool,
) -> Scenario {
    let norm = c_a.abs_sq().add(&c_b.abs_sq());
    let shift = QuadAmp::prob_ratio(&c_b.abs_sq(), &norm).expect("rational weight");
    let statements = abc_statements(&c_a, &c_b, &norm);
    let mut checks = Vec::new();
    if !c_a.is_zero() {
        checks.push(Check::Transitivity {
            first: "A".to_string(),
            second: "B".to_string(),
            expect_combined: Some(exact("1")),
            expect_valid: Some(true),
            expect_divergence: Some(!c_b.is_zero()),
            expect_shift: Some(ExpectedProb::Exact(shift)),
        });
        checks.push(Check::Conjunction {
            premises: vec![Event::z("mem.B", 2, U), Event::z("mem.A", 1, U)],
            conclusion: Event::z("mem.C", 3, U),
            expect: Some(exact("1")),
            expect_flagged: Some(false),
        });
    }
    if !(c_a.is_zero() && c_b.is_zero()) {
        let expect = QuadAmp::prob_ratio(&c_b.abs_sq(), &norm).expect("rational weight");
        checks.push(Check::Violation {
            failing: c_b.clone(),
            passing: c_a.clone(),
            expect: ExpectedProb::Exact(expect),
        });
    }
    Scenario {
        name: name.to_string(),
        about: about.to_string(),
        registers: vec![
            Register::spin("a"),
            Register::spin("b"),
            Register::spin("c"),
        ],
        terms: vec![
            (vec![U, U, U], AmpSpec::exact(c_a)),
            (vec![D, U, D], AmpSpec::exact(c_b)),
        ],
        normalized,
        steps: vec![
            MeasurementStep::absorb("A", "a", OutcomeBasis::Z),
            MeasurementStep::absorb("B", "b", OutcomeBasis::Z),
            MeasurementStep::absorb("C", "c", OutcomeBasis::Z),
        ],
        statements,
        checks,
        arithmetic: Arithmetic::Both,
    }
}

/// Three-spin chain experiment with branch weights `c_a` (all up) and
/// `c_b` (down, up, down).  The weights must be normalized.
pub fn abc(c_a: QuadAmp, c_b: QuadAmp) -> Result<Scenario, Error> {
    let total = c_a.abs_sq().add(&c_b.abs_sq());
    if !total.prob_is_one() {
        let deficit = QuadAmp::one().sub(&total);
        return Err(Error::NotNormalized {
            deficit: format!("{deficit}"),
        });
    }
    Ok(abc_scenario(
        "abc",
        "three spins, three absorbing agents; the premise shifts between branches",
        c_a,
        c_b,
        true,
    ))
}

/// The skewed variant: branch weights 1 and 3 (norm 10), giving the 1/10
/// vs 9/10 split without needing an irrational amplitude.
pub fn abc_ninety() -> Scenario {
    abc_scenario(
        "abc_ninety",
        "three-spin chain with 1:9 branch weights; the combined statement fails nine times in ten",
        "1".parse().unwrap(),
        "3".parse().unwrap(),
        false,
    )
}

fn referee_scenario(
    name: &str,
    about: &str,
    barred_basis: OutcomeBasis,
    unbarred_basis: OutcomeBasis,
    final_terms: Vec<(Vec<Bit>, &str)>,
    statement: NamedStatement,
) -> Scenario {
    Scenario {
        name: name.to_string(),
        about: about.to_string(),
        registers: two_spins(),
        terms: vec![
            (vec![U, D], amp("1/sqrt3")),
            (vec![D, U], amp("1/sqrt3")),
            (vec![D, D], amp("1/sqrt3")),
        ],
        normalized: true,
        steps: vec![
            MeasurementStep::absorb("Rbar", "barred", barred_basis),
            MeasurementStep::absorb("R", "unbarred", unbarred_basis),
        ],
        statements: vec![statement],
        checks: vec![Check::Final {
            terms: final_terms
                .into_iter()
                .map(|(c, a)| (c, a.parse().unwrap()))
                .collect(),
        }],
        arithmetic: Arithmetic::Both,
    }
}

/// Referees read both spins in the native basis: up on the unbarred spin
/// pins the barred record down.
pub fn referee_zz() -> Scenario {
    referee_scenario(
        "referee_zz",
        "both referees read the spins in z; the up-up configuration is absent",
        OutcomeBasis::Z,
        OutcomeBasis::Z,
        vec![
            (vec![U, D], "1/sqrt3"),
            (vec![D, U], "1/sqrt3"),
            (vec![D, D], "1/sqrt3"),
        ],
        NamedStatement {
            id: "m3".to_string(),
            statement: Statement::retro(
                vec![Event::z("mem.R", 2, U)],
                Event::z("mem.Rbar", 1, D),
            ),
            expect: Some(ExpectedVerdict::holds().with_premise(exact("1/3"))),
        },
    )
}

/// Barred referee reads in x: a minus there pins the unbarred record up.
pub fn referee_zx() -> Scenario {
    referee_scenario(
        "referee_zx",
        "barred referee reads in x, unbarred in z",
        OutcomeBasis::X,
        OutcomeBasis::Z,
        vec![
            (vec![U, D], "2/sqrt6"),
            (vec![U, U], "1/sqrt6"),
            (vec![D, U], "-1/sqrt6"),
        ],
        NamedStatement {
            id: "m2".to_string(),
            statement: Statement::forward(
                vec![Event::z("mem.Rbar", 1, D)],
                Event::z("mem.R", 2, U),
            ),
            expect: Some(ExpectedVerdict::holds().with_premise(exact("1/6"))),
        },
    )
}

/// Unbarred referee reads in x: barred down pins the unbarred record plus.
pub fn referee_xz() -> Scenario {
    referee_scenario(
        "referee_xz",
        "barred referee reads in z, unbarred in x",
        OutcomeBasis::Z,
        OutcomeBasis::X,
        vec![
            (vec![U, U], "1/sqrt6"),
            (vec![U, D], "-1/sqrt6"),
            (vec![D, U], "2/sqrt6"),
        ],
        NamedStatement {
            id: "m4".to_string(),
            statement: Statement::forward(
                vec![Event::z("mem.Rbar", 1, D)],
                Event::z("mem.R", 2, U),
            ),
            expect: Some(ExpectedVerdict::holds().with_premise(exact("2/3"))),
        },
    )
}

/// The three referee verification experiments.
pub fn referee_math_statements() -> Vec<Scenario> {
    vec![referee_zz(), referee_zx(), referee_xz()]
}

/// The friend experiment with preserving referees: one watches the
/// unbarred friend's record right after it is written, another watches
/// the barred observer's record.
pub fn referee_fr_observation() -> Scenario {
    Scenario {
        name: "referee_fr".to_string(),
        about: "referees copy the friend record and the barred observer record without \
                disturbing them"
            .to_string(),
        registers: two_spins(),
        terms: vec![
            (vec![U, D], amp("1/sqrt3")),
            (vec![D, U], amp("1/sqrt3")),
            (vec![D, D], amp("1/sqrt3")),
        ],
        normalized: true,
        steps: vec![
            MeasurementStep::absorb("Fbar", "barred", OutcomeBasis::Z),
            MeasurementStep::absorb("F", "unbarred", OutcomeBasis::Z),
            MeasurementStep::preserve("R", "mem.F", OutcomeBasis::Z),
            MeasurementStep::preserve("Wbar", "mem.Fbar", OutcomeBasis::X),
            MeasurementStep::preserve("Rbar", "mem.Wbar", OutcomeBasis::Z),
        ],
        statements: vec![NamedStatement {
            id: "obs".to_string(),
            statement: Statement::retro(
                vec![Event::z("mem.Rbar", 5, D)],
                Event::z("mem.R", 3, U),
            ),
            expect: Some(ExpectedVerdict::holds().with_premise(exact("1/6"))),
        }],
        checks: vec![
            Check::Final {
                // Registers: mem.Fbar (x), mem.F, mem.R, mem.Wbar, mem.Rbar.
                terms: vec![
                    (vec![U, D, D, U, U], "2/sqrt6".parse().unwrap()),
                    (vec![U, U, U, U, U], "1/sqrt6".parse().unwrap()),
                    (vec![D, U, U, D, D], "-1/sqrt6".parse().unwrap()),
                ],
            },
            // The watched record's own statistics are untouched.
            Check::Joint {
                registers: vec!["mem.Wbar".into()],
                expect: vec![
                    ("plus".to_string(), exact("5/6")),
                    ("minus".to_string(), exact("1/6")),
                ],
            },
        ],
        arithmetic: Arithmetic::Both,
    }
}

/// The friend experiment with a relative phase on the barred-down branch.
/// The barred observer's minus outcome pins the friend's record up only
/// at zero phase; in general the conditional is 1/(3 - 2 cos phi).
pub fn fr_phase(phi: f64) -> Scenario {
    let p2 = 1.0 / (3.0 - 2.0 * libm::cos(phi));
    let q2 = (3.0 - 2.0 * libm::cos(phi)) / 6.0;
    let expect = if libm::fabs(p2 - 1.0) < EPS {
        ExpectedVerdict::holds().with_premise(ExpectedProb::Approx(q2))
    } else {
        probabilistic(ExpectedProb::Approx(p2)).with_premise(ExpectedProb::Approx(q2))
    };
    Scenario {
        name: "fr_phase".to_string(),
        about: format!("friend/Wigner experiment with relative phase {phi}"),
        registers: two_spins(),
        terms: vec![
            (vec![U, D], amp("1/sqrt3")),
            (
                vec![D, U],
                AmpSpec {
                    magnitude: "1/sqrt3".parse().unwrap(),
                    phase: phi,
                },
            ),
            (
                vec![D, D],
                AmpSpec {
                    magnitude: "1/sqrt3".parse().unwrap(),
                    phase: phi,
                },
            ),
        ],
        normalized: true,
        steps: friend_wigner_steps(),
        statements: vec![NamedStatement {
            id: "2".to_string(),
            statement: Statement::retro(vec![wbar(D)], f_rec(U)),
            expect: Some(expect),
        }],
        checks: vec![Check::Joint {
            registers: vec!["mem.Wbar".into()],
            expect: vec![
                ("plus".to_string(), ExpectedProb::Approx(1.0 - q2)),
                ("minus".to_string(), ExpectedProb::Approx(q2)),
            ],
        }],
        arithmetic: if phi == 0.0 {
            Arithmetic::Both
        } else {
            Arithmetic::FloatOnly
        },
    }
}

fn collapse_variant(
    name: &str,
    about: &str,
    steps: Vec<MeasurementStep>,
    s2: ExpectedVerdict,
    s3: ExpectedVerdict,
    s4: ExpectedVerdict,
) -> Scenario {
    Scenario {
        name: name.to_string(),
        about: about.to_string(),
        registers: two_spins(),
        terms: vec![
            (vec![U, D], amp("1/sqrt3")),
            (vec![D, U], amp("1/sqrt3")),
            (vec![D, D], amp("1/sqrt3")),
        ],
        normalized: true,
        steps,
        statements: vec![
            NamedStatement {
                id: "2".to_string(),
                statement: Statement::retro(vec![wbar(D)], f_rec(U)),
                expect: Some(s2),
            },
            NamedStatement {
                id: "3".to_string(),
                statement: Statement::retro(vec![f_rec(U)], fbar(D)),
                expect: Some(s3),
            },
            NamedStatement {
                id: "4".to_string(),
                statement: Statement::forward(vec![fbar(D)], w_rec(U)),
                expect: Some(s4),
            },
        ],
        checks: Vec::new(),
        arithmetic: Arithmetic::Both,
    }
}

/// The three collapse branches: projecting at a measurement instead of
/// entangling breaks different statements in each branch.
pub fn fr_collapse_variants() -> Vec<Scenario> {
    let up_first = |outcome: Bit| {
        let mut steps = friend_wigner_steps();
        steps[0] = MeasurementStep::collapse(
            "Fbar",
            "barred",
            OutcomeBasis::Z,
            OutcomeSel::Bit(outcome),
        );
        steps
    };
    let mut down_down = up_first(D);
    down_down[1] =
        MeasurementStep::collapse("F", "unbarred", OutcomeBasis::Z, OutcomeSel::Bit(D));
    vec![
        collapse_variant(
            "fr_collapse_up",
            "collapse to barred-up: the observer's minus no longer implies the friend saw up",
            up_first(U),
            fails().with_premise(exact("1/2")),
            ExpectedVerdict::vacuous(),
            ExpectedVerdict::vacuous(),
        ),
        collapse_variant(
            "fr_collapse_down",
            "collapse to barred-down: the observer's minus only sometimes follows the friend's up",
            up_first(D),
            probabilistic(exact("1/2")).with_premise(exact("1/2")),
            ExpectedVerdict::holds().with_premise(exact("1/2")),
            ExpectedVerdict::holds().with_premise(exact("1")),
        ),
        collapse_variant(
            "fr_collapse_downdown",
            "collapse both measurements down: nothing guarantees the final plus",
            down_down,
            fails().with_premise(exact("1/2")),
            ExpectedVerdict::vacuous(),
            probabilistic(exact("1/2")).with_premise(exact("1")),
        ),
    ]
}

/// Every bundled scenario, in corpus order.
pub fn bundled() -> Vec<Scenario> {
    let mut all = vec![
        fr_full(),
        fr_sub34(),
        abc(QuadAmp::inv_sqrt2(), QuadAmp::inv_sqrt2()).expect("normalized"),
        abc_ninety(),
    ];
    all.extend(referee_math_statements());
    all.push(referee_fr_observation());
    all.push(fr_phase(core::f64::consts::FRAC_PI_2));
    all.extend(fr_collapse_variants());
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Diagnostic;

    fn assert_clean<A: Amplitude>(run: &ScenarioRun<A>, name: &str) {
        assert!(
            run.passed(),
            "{name} mismatches: {:?}",
            run.mismatches()
        );
    }

    #[test]
    fn fr_full_passes_in_both_backends() {
        let scenario = fr_full();
        assert_clean(&scenario.run_exact().unwrap(), "fr_full exact");
        assert_clean(&scenario.run_float().unwrap(), "fr_full float");
    }

    #[test]
    fn fr_sub34_passes_in_both_backends() {
        let scenario = fr_sub34();
        assert_clean(&scenario.run_exact().unwrap(), "fr_sub34 exact");
        assert_clean(&scenario.run_float().unwrap(), "fr_sub34 float");
    }

    #[test]
    fn abc_even_weights_pass() {
        let scenario = abc(QuadAmp::inv_sqrt2(), QuadAmp::inv_sqrt2()).unwrap();
        assert_clean(&scenario.run_exact().unwrap(), "abc exact");
        assert_clean(&scenario.run_float().unwrap(), "abc float");
    }

    #[test]
    fn abc_single_branch_has_no_violation() {
        let scenario = abc("1".parse().unwrap(), "0".parse().unwrap()).unwrap();
        let run = scenario.run_exact().unwrap();
        assert_clean(&run, "abc single-branch");
        let b = run.statements.iter().find(|s| s.id == "B").unwrap();
        assert_eq!(b.verdict.class, VerdictClass::Holds);
    }

    #[test]
    fn abc_rejects_unnormalized_weights() {
        let err = abc("1".parse().unwrap(), "1".parse().unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn abc_ninety_splits_one_to_nine() {
        let scenario = abc_ninety();
        let run = scenario.run_exact().unwrap();
        assert_clean(&run, "abc_ninety exact");
        let b = run.statements.iter().find(|s| s.id == "B").unwrap();
        assert_eq!(
            b.verdict.conditional,
            Some(QuadAmp::rational(crate::amplitude::rat(1, 10)))
        );
        let shift = run.checks.iter().find_map(|c| match &c.data {
            CheckData::Transitivity(r) => Some(r.premise_shift_fraction.clone()),
            _ => None,
        });
        assert_eq!(
            shift,
            Some(QuadAmp::rational(crate::amplitude::rat(9, 10)))
        );
        assert_clean(&scenario.run_float().unwrap(), "abc_ninety float");
    }

    #[test]
    fn referee_trio_passes() {
        for scenario in referee_math_statements() {
            assert_clean(
                &scenario.run_exact().unwrap(),
                &format!("{} exact", scenario.name),
            );
            assert_clean(
                &scenario.run_float().unwrap(),
                &format!("{} float", scenario.name),
            );
        }
    }

    #[test]
    fn referee_observation_passes_and_preserves_the_watched_marginal() {
        let scenario = referee_fr_observation();
        assert_clean(&scenario.run_exact().unwrap(), "referee_fr exact");
        assert_clean(&scenario.run_float().unwrap(), "referee_fr float");
    }

    #[test]
    fn observing_an_otherwise_untouched_record_changes_nothing() {
        let base = fr_full().run_exact().unwrap();
        let mut watched = fr_full();
        watched.steps.insert(
            3,
            MeasurementStep::preserve("R2", "mem.Wbar", OutcomeBasis::Z),
        );
        watched.checks.clear();
        watched.statements.clear();
        let run = watched.run_with::<QuadAmp>().unwrap();
        let joint = |h: &History<QuadAmp>| {
            joint_distribution(
                h.snapshot(h.len()).unwrap(),
                &["mem.Wbar".into(), "mem.W".into()],
            )
            .unwrap()
        };
        assert_eq!(joint(&base.history), joint(&run.history));
    }

    #[test]
    fn collapse_variants_reproduce_the_branch_verdicts() {
        for scenario in fr_collapse_variants() {
            assert_clean(
                &scenario.run_exact().unwrap(),
                &format!("{} exact", scenario.name),
            );
            assert_clean(
                &scenario.run_float().unwrap(),
                &format!("{} float", scenario.name),
            );
        }
    }

    #[test]
    fn phase_controls_the_observer_friend_correlation() {
        use core::f64::consts::{FRAC_PI_2, PI};
        let zero = fr_phase(0.0);
        assert!(zero.supports_exact());
        assert_clean(&zero.run_exact().unwrap(), "fr_phase 0 exact");
        assert_clean(&zero.run_float().unwrap(), "fr_phase 0 float");
        for (phi, expected) in [(FRAC_PI_2, 1.0 / 3.0), (PI, 0.2)] {
            let scenario = fr_phase(phi);
            assert!(matches!(
                scenario.run_exact().unwrap_err(),
                Error::UnsupportedInExactMode { .. }
            ));
            let run = scenario.run_float().unwrap();
            assert_clean(&run, "fr_phase float");
            let v = &run.statements[0].verdict;
            let p = v.conditional.as_ref().unwrap().to_f64();
            assert!((p - expected).abs() < 1e-12, "{phi}: {p} vs {expected}");
        }
    }

    #[test]
    fn or_composition_with_matching_branch_conclusions_shows_no_divergence() {
        // Both branches end with the third spin up, so the merged claim
        // agrees with the branch average.
        let mut scenario = abc_scenario(
            "abc_coincidence",
            "both branches agree on the last spin",
            QuadAmp::inv_sqrt2(),
            QuadAmp::inv_sqrt2(),
            true,
        );
        scenario.terms[1].0 = vec![D, U, U];
        let history = run_experiment(
            scenario.build_initial::<QuadAmp>().unwrap(),
            &scenario.steps,
            None,
        )
        .unwrap();
        let up = Statement::forward(
            vec![Event::z("mem.B", 2, U)],
            Event::z("mem.C", 3, U),
        );
        let down = Statement::forward(
            vec![Event::z("mem.B", 2, D)],
            Event::z("mem.C", 3, U),
        );
        let merged = Statement::forward(
            vec![Event::any("mem.B", 2)],
            Event::z("mem.C", 3, U),
        );
        let report = or_composition_check(&history, &[up, down], &merged).unwrap();
        assert!(!report.divergence);
        assert_eq!(report.merged.conditional, Some(QuadAmp::one()));
    }

    #[test]
    fn conjunction_beats_its_own_branch_statement() {
        // With both premises the conclusion is certain even though the
        // single-premise statement B is only fifty-fifty.
        let scenario = abc(QuadAmp::inv_sqrt2(), QuadAmp::inv_sqrt2()).unwrap();
        let run = scenario.run_exact().unwrap();
        let conj = run
            .checks
            .iter()
            .find_map(|c| match &c.data {
                CheckData::Conjunction(v) => Some(v.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(conj.conditional, Some(QuadAmp::one()));
        assert!(!conj.diagnostics.contains(&Diagnostic::IncompatiblePremises));
    }

    #[test]
    fn bundled_corpus_is_complete_and_self_consistent() {
        let all = bundled();
        assert_eq!(all.len(), 12);
        for scenario in &all {
            if scenario.supports_exact() {
                assert_clean(
                    &scenario.run_exact().unwrap(),
                    &format!("{} exact", scenario.name),
                );
            }
            assert_clean(
                &scenario.run_float().unwrap(),
                &format!("{} float", scenario.name),
            );
        }
    }
}
