//! Conditional statements about recorded outcomes and the rules for
//! combining them.
//!
//! A statement is "if these premise events happened, then this conclusion
//! event happened (or will happen)".  Events are projections on registers
//! at snapshot times.  Two readings exist:
//!
//! * `Forward`: insert every projector, premises and conclusion alike, at
//!   its chronological slot and compare chain weights.
//! * `Retrodictive`: project the premises in order, transport the result
//!   to the conclusion's time (backward if needed), then apply the Born
//!   rule.
//!
//! The two readings agree when no premise's observable disturbs the
//! conclusion; the interesting scenarios are exactly the ones where they
//! do not.

use alloc::vec;
use alloc::vec::Vec;

use crate::amplitude::Amplitude;
use crate::error::Error;
use crate::measure::{back_evolve, evolve_segment, History, Style};
use crate::state::{Bit, OutcomeBasis, OutcomeSel, RegisterId, StateVector};

/// How a conditional probability is read off the history.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Forward,
    Retrodictive,
}

/// One outcome proposition: register `register` shows `outcome` in `basis`
/// immediately after step `at_step`.
#[derive(Clone, PartialEq, Debug)]
pub struct Event {
    pub register: RegisterId,
    pub basis: OutcomeBasis,
    pub outcome: OutcomeSel,
    pub at_step: usize,
}

impl Event {
    pub fn new(
        register: impl Into<RegisterId>,
        at_step: usize,
        basis: OutcomeBasis,
        outcome: OutcomeSel,
    ) -> Self {
        Event {
            register: register.into(),
            basis,
            outcome,
            at_step,
        }
    }

    /// Native-basis outcome.
    pub fn z(register: impl Into<RegisterId>, at_step: usize, bit: Bit) -> Self {
        Self::new(register, at_step, OutcomeBasis::Z, OutcomeSel::Bit(bit))
    }

    /// Rotated-basis outcome (plus for `Bit::Zero`, minus for `Bit::One`).
    pub fn x(register: impl Into<RegisterId>, at_step: usize, bit: Bit) -> Self {
        Self::new(register, at_step, OutcomeBasis::X, OutcomeSel::Bit(bit))
    }

    /// The trivial event: the register was measured, outcome unconstrained.
    pub fn any(register: impl Into<RegisterId>, at_step: usize) -> Self {
        Self::new(register, at_step, OutcomeBasis::Z, OutcomeSel::Any)
    }
}

/// An "if premises, then conclusion" statement with its reading mode.
#[derive(Clone, PartialEq, Debug)]
pub struct Statement {
    pub premises: Vec<Event>,
    pub conclusion: Event,
    pub mode: Mode,
}

impl Statement {
    pub fn forward(premises: Vec<Event>, conclusion: Event) -> Self {
        Statement {
            premises,
            conclusion,
            mode: Mode::Forward,
        }
    }

    pub fn retro(premises: Vec<Event>, conclusion: Event) -> Self {
        Statement {
            premises,
            conclusion,
            mode: Mode::Retrodictive,
        }
    }
}

/// Statement classification.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerdictClass {
    /// Premise possible, conclusion certain given it.
    Holds,
    /// Premise possible, conclusion impossible given it.
    Fails,
    /// Premise itself has probability zero ("technically true").
    Vacuous,
    /// Strictly between certain and impossible.
    Probabilistic,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Diagnostic {
    /// Two premises cannot be read as a joint condition: either their
    /// observables interfere or their conjunction has probability zero
    /// while each alone is possible.
    IncompatiblePremises,
    /// Reading out some premise's observable changes the conclusion's
    /// statistics, so forward and retrodictive values may differ.
    InterferingConclusion,
    /// Forward value exceeds 1; the chain ratio is not a probability.
    NotAProbability,
    /// The conclusion's slot precedes a premise, so the forward chain
    /// inserts it mid-sequence.
    ConclusionPrecedesPremise,
}

/// Evaluation result.  `conditional` is `None` exactly for [`VerdictClass::Vacuous`].
#[derive(Clone, PartialEq, Debug)]
pub struct Verdict<A: Amplitude> {
    pub class: VerdictClass,
    pub premise_probability: A,
    pub conditional: Option<A>,
    pub mode: Mode,
    pub diagnostics: Vec<Diagnostic>,
}

impl<A: Amplitude> Verdict<A> {
    pub fn holds(&self) -> bool {
        self.class == VerdictClass::Holds
    }

    /// "False" in the loose classical sense: the conclusion can fail.
    pub fn refuted(&self) -> bool {
        matches!(self.class, VerdictClass::Fails | VerdictClass::Probabilistic)
    }
}

fn check_order_and_ties(events: &[Event]) -> Result<(), Error> {
    for pair in events.windows(2) {
        if pair[1].at_step < pair[0].at_step {
            return Err(Error::UnsortedEvents);
        }
    }
    for (i, a) in events.iter().enumerate() {
        for b in &events[i + 1..] {
            if a.at_step == b.at_step && a.register == b.register && a.basis != b.basis {
                return Err(Error::ConflictingEvents {
                    register: a.register.clone(),
                    at_step: a.at_step,
                });
            }
        }
    }
    Ok(())
}

/// Projects the chain state through `events` (must be time-ordered),
/// evolving along the recorded history between steps.  Returns the final
/// chain state and the step it lives at.
fn chain_state<A: Amplitude>(
    history: &History<A>,
    events: &[Event],
) -> Result<(StateVector<A>, usize), Error> {
    check_order_and_ties(events)?;
    let first_step = events.first().map(|e| e.at_step).unwrap_or(0);
    if first_step > history.len() {
        return Err(Error::StepOutOfRange {
            step: first_step,
            len: history.len(),
        });
    }
    let mut cur = history.snapshot(first_step)?.clone();
    let mut at = first_step;
    for event in events {
        if event.at_step > at {
            cur = evolve_segment(history, cur, at, event.at_step)?;
            at = event.at_step;
        }
        cur = cur.project(
            core::slice::from_ref(&event.register),
            &event.basis,
            event.outcome,
        )?;
    }
    Ok((cur, at))
}

/// Probability that all events in the time-ordered list occur, reading the
/// history collapse-free: project, evolve, project, ...
pub fn chain_probability<A: Amplitude>(
    history: &History<A>,
    events: &[Event],
) -> Result<A, Error> {
    let (state, _) = chain_state(history, events)?;
    let weight = state.norm_sq();
    A::prob_ratio(&weight, &history.base_norm).ok_or(Error::IrrationalProbability)
}

fn sorted_by_step(events: &[Event]) -> Vec<Event> {
    let mut v = events.to_vec();
    v.sort_by_key(|e| e.at_step);
    v
}

/// Merges two event lists, dropping exact duplicates, sorted by step.
fn merged_events(a: &[Event], b: &[Event]) -> Vec<Event> {
    let mut v = a.to_vec();
    for e in b {
        if !v.contains(e) {
            v.push(e.clone());
        }
    }
    v.sort_by_key(|e| e.at_step);
    v
}

fn push_unique(diags: &mut Vec<Diagnostic>, d: Diagnostic) {
    if !diags.contains(&d) {
        diags.push(d);
    }
}

fn abs_prob<A: Amplitude>(x: A) -> A {
    if x.prob_sign() < 0 {
        x.neg()
    } else {
        x
    }
}

fn classify<A: Amplitude>(p: &A) -> VerdictClass {
    if p.prob_is_one() {
        VerdictClass::Holds
    } else if p.prob_is_zero() {
        VerdictClass::Fails
    } else {
        VerdictClass::Probabilistic
    }
}

/// Outcome selectors covering the basis completely.
fn complete_outcomes(basis: &OutcomeBasis) -> Vec<OutcomeSel> {
    match basis {
        OutcomeBasis::Joint { states, .. } => {
            let mut v: Vec<OutcomeSel> = (0..states.len()).map(OutcomeSel::Listed).collect();
            v.push(OutcomeSel::Rest);
            v
        }
        _ => vec![OutcomeSel::Bit(Bit::Zero), OutcomeSel::Bit(Bit::One)],
    }
}

/// How much reading out the observable `(obs_register, obs_basis)` at
/// `obs_step` changes the later event's probability:
/// `|Pr(later) − Σ_o Pr(obs = o, later)|`.  Zero means the readout
/// decoheres nothing the later event can see.
pub fn disturbance_defect<A: Amplitude>(
    history: &History<A>,
    obs_register: &RegisterId,
    obs_basis: &OutcomeBasis,
    obs_step: usize,
    later: &Event,
) -> Result<A, Error> {
    if later.at_step < obs_step {
        return Err(Error::UnsortedEvents);
    }
    let undisturbed = chain_probability(history, core::slice::from_ref(later))?;
    let mut decohered = A::zero();
    for sel in complete_outcomes(obs_basis) {
        let obs_event = Event::new(obs_register.clone(), obs_step, obs_basis.clone(), sel);
        let p = chain_probability(history, &[obs_event, later.clone()])?;
        decohered = decohered.add(&p);
    }
    Ok(abs_prob(undisturbed.sub(&decohered)))
}

/// Orders two events chronologically and reports whether the earlier one's
/// full observable disturbs the later one.  Compatible premises may appear
/// together in a conjunction; incompatible ones may not.
pub fn conjunction_compatible<A: Amplitude>(
    history: &History<A>,
    e1: &Event,
    e2: &Event,
) -> Result<(bool, A), Error> {
    let (earlier, later) = if e1.at_step <= e2.at_step {
        (e1, e2)
    } else {
        (e2, e1)
    };
    let defect = disturbance_defect(
        history,
        &earlier.register,
        &earlier.basis,
        earlier.at_step,
        later,
    )?;
    let ok = defect.prob_is_zero();
    Ok((ok, defect))
}

/// Pairwise compatibility diagnostics over premises and against the
/// conclusion.  Same-register same-step pairs are skipped (they are either
/// duplicates or direct contradictions, both visible in the chain weight).
fn compatibility_diagnostics<A: Amplitude>(
    history: &History<A>,
    premises: &[Event],
    conclusion: &Event,
    diags: &mut Vec<Diagnostic>,
) -> Result<(), Error> {
    let skip = |a: &Event, b: &Event| a.at_step == b.at_step && a.register == b.register;
    for (i, a) in premises.iter().enumerate() {
        for b in &premises[i + 1..] {
            if skip(a, b) {
                continue;
            }
            let (ok, _) = conjunction_compatible(history, a, b)?;
            if !ok {
                push_unique(diags, Diagnostic::IncompatiblePremises);
            }
        }
    }
    for p in premises {
        if skip(p, conclusion) {
            continue;
        }
        let (ok, _) = conjunction_compatible(history, p, conclusion)?;
        if !ok {
            push_unique(diags, Diagnostic::InterferingConclusion);
        }
    }
    Ok(())
}

fn evaluate_inner<A: Amplitude>(
    history: &History<A>,
    premises: &[Event],
    conclusion: &Event,
    mode: Mode,
    with_diagnostics: bool,
) -> Result<Verdict<A>, Error> {
    if premises.is_empty() {
        return Err(Error::EmptyPremises);
    }
    let sorted = sorted_by_step(premises);
    let q = chain_probability(history, &sorted)?;
    let mut diagnostics = Vec::new();
    if q.prob_is_zero() {
        if premises.len() >= 2 {
            let each_possible = premises.iter().try_fold(true, |acc, e| {
                chain_probability(history, core::slice::from_ref(e))
                    .map(|p| acc && !p.prob_is_zero())
            })?;
            if each_possible {
                push_unique(&mut diagnostics, Diagnostic::IncompatiblePremises);
            }
        }
        return Ok(Verdict {
            class: VerdictClass::Vacuous,
            premise_probability: q,
            conditional: None,
            mode,
            diagnostics,
        });
    }
    let p = match mode {
        Mode::Forward => {
            let all = merged_events(&sorted, core::slice::from_ref(conclusion));
            let joint = chain_probability(history, &all)?;
            if conclusion.at_step < sorted.last().map(|e| e.at_step).unwrap_or(0) {
                push_unique(&mut diagnostics, Diagnostic::ConclusionPrecedesPremise);
            }
            A::prob_ratio(&joint, &q).ok_or(Error::IrrationalProbability)?
        }
        Mode::Retrodictive => {
            let (mut state, at) = chain_state(history, &sorted)?;
            let target = conclusion.at_step;
            if target > at {
                state = evolve_segment(history, state, at, target)?;
            } else if target < at {
                state = back_evolve(history, &state, at, target)?;
            }
            let before = state.norm_sq();
            let projected = state.project(
                core::slice::from_ref(&conclusion.register),
                &conclusion.basis,
                conclusion.outcome,
            )?;
            A::prob_ratio(&projected.norm_sq(), &before).ok_or(Error::IrrationalProbability)?
        }
    };
    if p.sub(&A::one()).prob_sign() > 0 {
        push_unique(&mut diagnostics, Diagnostic::NotAProbability);
    }
    let class = classify(&p);
    if with_diagnostics {
        compatibility_diagnostics(history, &sorted, conclusion, &mut diagnostics)?;
    }
    Ok(Verdict {
        class,
        premise_probability: q,
        conditional: Some(p),
        mode,
        diagnostics,
    })
}

/// Evaluates a statement in its own mode, with full diagnostics.
pub fn evaluate_statement<A: Amplitude>(
    history: &History<A>,
    stmt: &Statement,
) -> Result<Verdict<A>, Error> {
    evaluate_inner(history, &stmt.premises, &stmt.conclusion, stmt.mode, true)
}

/// Evaluates a statement in an explicit mode (overriding its own).
pub fn evaluate_in_mode<A: Amplitude>(
    history: &History<A>,
    stmt: &Statement,
    mode: Mode,
) -> Result<Verdict<A>, Error> {
    evaluate_inner(history, &stmt.premises, &stmt.conclusion, mode, true)
}

/// The violation-fraction formula for a two-branch superposition
/// `c_a ψ_a + c_b ψ_b`: the weight of the `a` branch.
pub fn violation_fraction<A: Amplitude>(c_a: &A, c_b: &A) -> Result<A, Error> {
    let wa = c_a.abs_sq();
    let wb = c_b.abs_sq();
    let total = wa.add(&wb);
    if total.prob_is_zero() {
        return Err(Error::BothZero);
    }
    A::prob_ratio(&wa, &total).ok_or(Error::IrrationalProbability)
}

/// Result of chaining two statements through a shared middle event.
#[derive(Clone, Debug)]
pub struct TransitivityReport<A: Amplitude> {
    pub first: Verdict<A>,
    pub second: Verdict<A>,
    pub combined: Statement,
    pub combined_forward: Verdict<A>,
    pub combined_retro: Verdict<A>,
    /// True when the combined statement is certain in both readings.
    pub transitivity_valid: bool,
    /// Fraction of premise-satisfying runs in which the transitively
    /// deduced conclusion is wrong: `1 − p(combined, retrodictive)`.
    pub violation_fraction: A,
    /// What chaining would predict for the combined conditional: the
    /// second statement's own conditional.
    pub classical_expectation: Option<A>,
    /// Actual combined value differs from the classical expectation.
    pub divergence: bool,
    /// Weight of second-premise runs lying outside the first premise's
    /// branch: `1 − p(first premises | second premises)`.  Nonzero means
    /// the premise has shifted between the two statements.
    pub premise_shift_fraction: A,
}

/// Chains `s1` and `s2` (the conclusion of `s1` must be the sole premise
/// of `s2`) and quantifies how transitive composition fares.
pub fn check_transitivity<A: Amplitude>(
    history: &History<A>,
    s1: &Statement,
    s2: &Statement,
) -> Result<TransitivityReport<A>, Error> {
    match s2.premises.as_slice() {
        [link] if *link == s1.conclusion => {}
        _ => return Err(Error::ChainMismatch),
    }
    let first = evaluate_statement(history, s1)?;
    let second = evaluate_statement(history, s2)?;
    let combined = Statement::retro(s1.premises.clone(), s2.conclusion.clone());
    let combined_forward = evaluate_in_mode(history, &combined, Mode::Forward)?;
    let combined_retro = evaluate_in_mode(history, &combined, Mode::Retrodictive)?;
    let certain = |v: &Verdict<A>| v.conditional.as_ref().is_some_and(|p| p.prob_is_one());
    let transitivity_valid = certain(&combined_forward) && certain(&combined_retro);
    let p_retro = combined_retro
        .conditional
        .clone()
        .unwrap_or_else(A::zero);
    let violation_fraction = A::one().sub(&p_retro);
    let classical_expectation = second.conditional.clone();
    let divergence = match (&classical_expectation, &combined_retro.conditional) {
        (Some(c), Some(a)) => !c.prob_eq(a),
        _ => true,
    };
    let joint = chain_probability(history, &merged_events(&s1.premises, &s2.premises))?;
    let q2 = second.premise_probability.clone();
    let premise_shift_fraction = if q2.prob_is_zero() {
        A::zero()
    } else {
        let kept = A::prob_ratio(&joint, &q2).ok_or(Error::IrrationalProbability)?;
        A::one().sub(&kept)
    };
    Ok(TransitivityReport {
        first,
        second,
        combined,
        combined_forward,
        combined_retro,
        transitivity_valid,
        violation_fraction,
        classical_expectation,
        divergence,
        premise_shift_fraction,
    })
}

/// Result of comparing per-branch conditionals with the merged
/// (outcome-unconditioned) statement.
#[derive(Clone, Debug)]
pub struct OrReport<A: Amplitude> {
    pub branches: Vec<Verdict<A>>,
    pub merged: Verdict<A>,
    /// Branch-weighted average `Σ qᵢ pᵢ / Σ qᵢ`: what classical case
    /// analysis predicts for the merged conditional.
    pub classical_expectation: A,
    pub divergence: bool,
}

/// Checks disjunction composition: branch statements condition on each
/// outcome of one observable, the merged statement conditions on the
/// observable having been measured at all.  Interference can make the
/// merged conditional differ from the branch average.
pub fn or_composition_check<A: Amplitude>(
    history: &History<A>,
    branch_statements: &[Statement],
    merged: &Statement,
) -> Result<OrReport<A>, Error> {
    let template = branch_statements
        .first()
        .ok_or(Error::IncompleteOutcomeSet)?;
    let [probe] = template.premises.as_slice() else {
        return Err(Error::IncompleteOutcomeSet);
    };
    for s in branch_statements {
        match s.premises.as_slice() {
            [p] if p.register == probe.register
                && p.basis == probe.basis
                && p.at_step == probe.at_step => {}
            _ => return Err(Error::IncompleteOutcomeSet),
        }
        if s.conclusion != merged.conclusion {
            return Err(Error::MismatchedConclusions);
        }
    }
    // Every outcome carrying weight must appear among the branches.
    for sel in complete_outcomes(&probe.basis) {
        let covered = branch_statements
            .iter()
            .any(|s| s.premises[0].outcome == sel);
        if covered {
            continue;
        }
        let w = chain_probability(
            history,
            &[Event::new(
                probe.register.clone(),
                probe.at_step,
                probe.basis.clone(),
                sel,
            )],
        )?;
        if !w.prob_is_zero() {
            return Err(Error::IncompleteOutcomeSet);
        }
    }
    let mut branches = Vec::new();
    let mut weighted = A::zero();
    let mut total_q = A::zero();
    for s in branch_statements {
        let v = evaluate_statement(history, s)?;
        total_q = total_q.add(&v.premise_probability);
        if let Some(p) = &v.conditional {
            weighted = weighted.add(&v.premise_probability.mul(p));
        }
        branches.push(v);
    }
    let classical_expectation =
        A::prob_ratio(&weighted, &total_q).ok_or(Error::IrrationalProbability)?;
    let merged_verdict = evaluate_statement(history, merged)?;
    let divergence = match &merged_verdict.conditional {
        Some(actual) => !actual.prob_eq(&classical_expectation),
        None => true,
    };
    Ok(OrReport {
        branches,
        merged: merged_verdict,
        classical_expectation,
        divergence,
    })
}

/// Evaluates a multi-premise conjunction statement retrodictively, with
/// pairwise compatibility diagnostics.
pub fn conjunction_premise_check<A: Amplitude>(
    history: &History<A>,
    premises: &[Event],
    conclusion: &Event,
) -> Result<Verdict<A>, Error> {
    evaluate_inner(history, premises, conclusion, Mode::Retrodictive, true)
}

/// Enumerates every single-premise statement over z/x outcomes of every
/// register at every snapshot and returns the ones certain in both
/// readings.  Requires a collapse-free history.
pub fn mine_statements<A: Amplitude>(
    history: &History<A>,
) -> Result<Vec<(Statement, Verdict<A>)>, Error> {
    for (i, applied) in history.steps.iter().enumerate() {
        if matches!(applied.step.style, Style::Collapse(_)) {
            return Err(Error::NonUnitarySegment { step: i + 1 });
        }
    }
    let mut events = Vec::new();
    for step in 0..history.snapshots.len() {
        for reg in history.snapshots[step].registers() {
            for basis in [OutcomeBasis::Z, OutcomeBasis::X] {
                for bit in [Bit::Zero, Bit::One] {
                    events.push(Event::new(
                        reg.id.clone(),
                        step,
                        basis.clone(),
                        OutcomeSel::Bit(bit),
                    ));
                }
            }
        }
    }
    let n = events.len();
    let by_step: Vec<Vec<usize>> = (0..history.snapshots.len())
        .map(|k| (0..n).filter(|&j| events[j].at_step == k).collect())
        .collect();
    let project_on = |state: &StateVector<A>, e: &Event| {
        state.project(core::slice::from_ref(&e.register), &e.basis, e.outcome)
    };
    // forward[i][j] for step(j) >= step(i): joint weight of both events,
    // premise projected first.  For a collapse-free history this is also
    // the retrodictive numerator, and by symmetry it covers the reversed
    // pair's forward reading.  backward[i][j] for step(j) < step(i): the
    // premise-projected state carried back to j's slot, then projected;
    // `None` where the transport leaves the recorded range.
    let mut forward: Vec<Vec<Option<A>>> = vec![vec![None; n]; n];
    let mut backward: Vec<Vec<Option<A>>> = vec![vec![None; n]; n];
    let mut weights: Vec<A> = Vec::with_capacity(n);
    for (i, premise) in events.iter().enumerate() {
        let projected = project_on(history.snapshot(premise.at_step)?, premise)?;
        weights.push(projected.norm_sq());
        let mut cur = projected.clone();
        for (step, here) in by_step.iter().enumerate().skip(premise.at_step) {
            if step > premise.at_step {
                cur = evolve_segment(history, cur, step - 1, step)?;
            }
            for &j in here {
                forward[i][j] = Some(project_on(&cur, &events[j])?.norm_sq());
            }
        }
        let mut cur = projected;
        for step in (0..premise.at_step).rev() {
            cur = match back_evolve(history, &cur, step + 1, step) {
                Ok(s) => s,
                // Rotated projections on a record cannot always be carried
                // back through the step that wrote it; conclusions beyond
                // that point are not retrodictable from this premise.
                Err(Error::OutsideRange { .. }) => break,
                Err(e) => return Err(e),
            };
            for &j in &by_step[step] {
                backward[i][j] = Some(project_on(&cur, &events[j])?.norm_sq());
            }
        }
    }
    let mut found = Vec::new();
    for (i, premise) in events.iter().enumerate() {
        if weights[i].prob_is_zero() {
            continue;
        }
        for (j, conclusion) in events.iter().enumerate() {
            if premise.at_step == conclusion.at_step
                && premise.register == conclusion.register
                && premise.basis != conclusion.basis
            {
                continue;
            }
            // Certain in both readings: the joint weight in chronological
            // order and the carried-back weight both match the premise's.
            let certain = if conclusion.at_step >= premise.at_step {
                forward[i][j].as_ref().is_some_and(|w| w.prob_eq(&weights[i]))
            } else {
                forward[j][i].as_ref().is_some_and(|w| w.prob_eq(&weights[i]))
                    && backward[i][j].as_ref().is_some_and(|w| w.prob_eq(&weights[i]))
            };
            if !certain {
                continue;
            }
            let premise_probability = A::prob_ratio(&weights[i], &history.base_norm)
                .ok_or(Error::IrrationalProbability)?;
            found.push((
                Statement::retro(vec![premise.clone()], conclusion.clone()),
                Verdict {
                    class: VerdictClass::Holds,
                    premise_probability,
                    conditional: Some(A::one()),
                    mode: Mode::Retrodictive,
                    diagnostics: Vec::new(),
                },
            ));
        }
    }
    Ok(found)
}
