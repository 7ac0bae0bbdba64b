//! Measurement steps, experiment histories, and backward evolution.
//!
//! Three measurement styles, all acting on the full wavefunction:
//!
//! * `absorb`: the agent takes the target register as its own record.  Up
//!   to relabelling (and a basis rotation when the measurement axis is not
//!   the target's native one) this is the identity; no information leaves
//!   the branch structure.
//! * `preserve`: a fresh two-level record register is entangled with the
//!   target through a basis-aligned controlled flip, leaving the target in
//!   place.  This is how one agent observes another agent's record.
//! * `collapse`: textbook projection.  The state is projected on the given
//!   outcome, renormalized, and the outcome is logged.  Provided for
//!   comparison runs; everything else in the crate is collapse-free.
//!
//! Records are named `mem.<agent>` (then `mem.<agent>2`, ...) so later
//! statements can reference them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::amplitude::Amplitude;
use crate::error::Error;
use crate::state::{
    validate_joint_states, Bit, LocalBasis, OutcomeBasis, OutcomeSel, Register, RegisterId,
    RegisterKind, StateVector,
};

/// How a collapse step picks its outcome.
#[derive(Clone, PartialEq, Debug)]
pub enum CollapseRule {
    /// Outcome fixed in advance (deterministic runs).
    Fixed(OutcomeSel),
    /// Outcome drawn from the Born distribution using the run's sampler.
    Sampled,
}

/// Measurement style of one step.
#[derive(Clone, PartialEq, Debug)]
pub enum Style {
    Absorb,
    Preserve,
    Collapse(CollapseRule),
}

/// One measurement in an experiment.
#[derive(Clone, PartialEq, Debug)]
pub struct MeasurementStep {
    pub agent: String,
    pub targets: Vec<RegisterId>,
    pub basis: OutcomeBasis,
    pub style: Style,
}

impl MeasurementStep {
    pub fn new(
        agent: &str,
        targets: &[&str],
        basis: OutcomeBasis,
        style: Style,
    ) -> Self {
        MeasurementStep {
            agent: agent.to_string(),
            targets: targets.iter().map(|t| RegisterId::from(*t)).collect(),
            basis,
            style,
        }
    }

    pub fn absorb(agent: &str, target: &str, basis: OutcomeBasis) -> Self {
        Self::new(agent, &[target], basis, Style::Absorb)
    }

    pub fn preserve(agent: &str, target: &str, basis: OutcomeBasis) -> Self {
        Self::new(agent, &[target], basis, Style::Preserve)
    }

    pub fn collapse(agent: &str, target: &str, basis: OutcomeBasis, outcome: OutcomeSel) -> Self {
        Self::new(agent, &[target], basis, Style::Collapse(CollapseRule::Fixed(outcome)))
    }
}

/// A step as actually applied: resolved record name, metadata needed to
/// invert it, and collapse bookkeeping.
#[derive(Clone, Debug)]
pub struct AppliedStep<A: Amplitude> {
    pub step: MeasurementStep,
    /// Record register written by this step (absorb target's new name, the
    /// fresh preserve register, or the collapse record).
    pub record: Option<RegisterId>,
    /// The target register's metadata before an absorb-style relabel.
    pub absorbed: Option<Register>,
    /// For collapse steps: resolved outcome, its pre-collapse probability,
    /// and the renormalization factor applied.
    pub collapse: Option<CollapseInfo<A>>,
}

#[derive(Clone, Debug)]
pub struct CollapseInfo<A: Amplitude> {
    pub outcome: OutcomeSel,
    pub label: String,
    pub probability: A,
    pub factor: A,
}

/// A fully run experiment: `snapshots[k]` is the state after step `k`
/// (snapshot 0 is the initial state), so there is one more snapshot than
/// steps.
#[derive(Clone, Debug)]
pub struct History<A: Amplitude> {
    pub snapshots: Vec<StateVector<A>>,
    pub steps: Vec<AppliedStep<A>>,
    /// Squared norm of the initial state (one unless the initial state was
    /// built unnormalized); chain probabilities divide by it.
    pub base_norm: A,
}

impl<A: Amplitude> History<A> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn snapshot(&self, step: usize) -> Result<&StateVector<A>, Error> {
        self.snapshots.get(step).ok_or(Error::StepOutOfRange {
            step,
            len: self.len(),
        })
    }

    /// Outcomes of every collapse step, in order.
    pub fn collapse_log(&self) -> Vec<(usize, &CollapseInfo<A>)> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.collapse.as_ref().map(|c| (i + 1, c)))
            .collect()
    }

    /// Name the register `id` (alive at `at_step`) carries at `later_step`,
    /// following absorb relabels.
    pub fn name_at(&self, id: &RegisterId, at_step: usize, later_step: usize) -> RegisterId {
        let mut name = id.clone();
        for applied in self.steps.iter().take(later_step).skip(at_step) {
            if let (Some(prev), Some(record)) = (&applied.absorbed, &applied.record) {
                if prev.id == name {
                    name = record.clone();
                }
            }
        }
        name
    }

    /// True when two (register, step) references point at the same
    /// physical register through relabels.
    pub fn same_lineage(
        &self,
        a: &RegisterId,
        step_a: usize,
        b: &RegisterId,
        step_b: usize,
    ) -> bool {
        let horizon = self.len();
        self.name_at(a, step_a, horizon) == self.name_at(b, step_b, horizon)
    }
}

fn allocate_record_name<A: Amplitude>(state: &StateVector<A>, agent: &str) -> RegisterId {
    let base = format!("mem.{agent}");
    if state.register_index(&RegisterId(base.clone())).is_none() {
        return RegisterId(base);
    }
    let mut n = 2usize;
    loop {
        let name = RegisterId(format!("{base}{n}"));
        if state.register_index(&name).is_none() {
            return name;
        }
        n += 1;
    }
}

fn single_target(step: &MeasurementStep) -> Result<&RegisterId, Error> {
    match step.targets.as_slice() {
        [one] => Ok(one),
        _ => Err(Error::InvalidBasis {
            reason: "this measurement style takes exactly one target register",
        }),
    }
}

fn local_basis_of(basis: &OutcomeBasis) -> Result<LocalBasis, Error> {
    match basis {
        OutcomeBasis::Z => Ok(LocalBasis::Z),
        OutcomeBasis::X => Ok(LocalBasis::X),
        OutcomeBasis::Axis(t) => Ok(LocalBasis::Axis(*t)),
        OutcomeBasis::Joint { .. } => Err(Error::InvalidBasis {
            reason: "joint bases require the preserve style",
        }),
    }
}

/// Record label pair for a step's outcomes on `target`.
fn record_labels<'a>(basis: &'a OutcomeBasis, target: &'a Register) -> (&'a str, &'a str) {
    match basis {
        OutcomeBasis::Joint { states, labels } => {
            let l0 = labels.first().map(String::as_str).unwrap_or("s0");
            let l1 = if states.len() >= 2 {
                labels.get(1).map(String::as_str).unwrap_or("s1")
            } else {
                "rest"
            };
            (l0, l1)
        }
        _ => basis.bit_labels(target),
    }
}

/// Applies one measurement step to a state, resolving record names.
/// `sampler` supplies uniform draws in `[0, 1)` for sampled collapses.
pub fn apply_step_full<A: Amplitude>(
    state: &StateVector<A>,
    step: &MeasurementStep,
    step_index: usize,
    sampler: &mut Option<&mut dyn FnMut() -> f64>,
) -> Result<(StateVector<A>, AppliedStep<A>), Error> {
    match &step.style {
        Style::Absorb => {
            let target = single_target(step)?;
            let local = local_basis_of(&step.basis)?;
            let reg = state
                .register(target)
                .ok_or_else(|| Error::UnknownRegister {
                    register: target.clone(),
                    at_step: step_index,
                })?
                .clone();
            if reg.kind == RegisterKind::Record {
                return Err(Error::TargetIsRecord {
                    register: target.clone(),
                });
            }
            let record_id = allocate_record_name(state, &step.agent);
            let labels = {
                let (l0, l1) = record_labels(&step.basis, &reg);
                (l0.to_string(), l1.to_string())
            };
            let mut next = state.change_basis(target, local)?;
            // The rotated bit becomes the record's native value.
            let idx = next.register_index(target).unwrap();
            next = next.rename_register(target, record_id.clone())?;
            {
                let regs = next.registers();
                debug_assert_eq!(regs[idx].id, record_id);
            }
            next = reset_register_meta(&next, &record_id, labels, RegisterKind::Record);
            Ok((
                next,
                AppliedStep {
                    step: step.clone(),
                    record: Some(record_id),
                    absorbed: Some(reg),
                    collapse: None,
                },
            ))
        }
        Style::Preserve => {
            let record_id = allocate_record_name(state, &step.agent);
            match &step.basis {
                OutcomeBasis::Joint { states, labels } => {
                    validate_joint_states::<A>(states)?;
                    if states.is_empty() || states.len() > 2 {
                        return Err(Error::InvalidBasis {
                            reason: "a two-level record distinguishes at most two joint states",
                        });
                    }
                    let record = Register::record(
                        record_id.clone(),
                        record_labels(&step.basis, &Register::spin("unused")),
                    );
                    let basis = OutcomeBasis::Joint {
                        states: states.clone(),
                        labels: labels.clone(),
                    };
                    let mut parts: Vec<StateVector<A>> = Vec::new();
                    for (i, _) in states.iter().enumerate() {
                        parts.push(state.project(&step.targets, &basis, OutcomeSel::Listed(i))?);
                    }
                    let rest = state.project(&step.targets, &basis, OutcomeSel::Rest)?;
                    if states.len() == 2 {
                        if rest.norm_sq().prob_sign() != 0 {
                            return Err(Error::OutsideRange { step: step_index });
                        }
                    } else {
                        parts.push(rest);
                    }
                    // Sum of projections tensored with the record value.
                    let mut total: Option<StateVector<A>> = None;
                    for (i, part) in parts.into_iter().enumerate() {
                        let tagged = part.append_fixed(record.clone(), Bit::from_index(i))?;
                        total = Some(match total {
                            None => tagged,
                            Some(acc) => add_states(&acc, &tagged)?,
                        });
                    }
                    let mut next = total.expect("at least one joint outcome");
                    next.set_normalized(state.is_normalized());
                    Ok((
                        next,
                        AppliedStep {
                            step: step.clone(),
                            record: Some(record_id),
                            absorbed: None,
                            collapse: None,
                        },
                    ))
                }
                two_level => {
                    let target = single_target(step)?;
                    let local = local_basis_of(two_level)?;
                    let reg = state
                        .register(target)
                        .ok_or_else(|| Error::UnknownRegister {
                            register: target.clone(),
                            at_step: step_index,
                        })?
                        .clone();
                    let labels = {
                        let (l0, l1) = record_labels(two_level, &reg);
                        (l0.to_string(), l1.to_string())
                    };
                    let rotated = state.change_basis(target, local)?;
                    let record =
                        Register::record(record_id.clone(), (labels.0.as_str(), labels.1.as_str()));
                    let next = rotated.append_copy(target, record)?;
                    Ok((
                        next,
                        AppliedStep {
                            step: step.clone(),
                            record: Some(record_id),
                            absorbed: None,
                            collapse: None,
                        },
                    ))
                }
            }
        }
        Style::Collapse(rule) => {
            let target = single_target(step)?;
            local_basis_of(&step.basis)?;
            let reg = state
                .register(target)
                .ok_or_else(|| Error::UnknownRegister {
                    register: target.clone(),
                    at_step: step_index,
                })?
                .clone();
            let outcome = match rule {
                CollapseRule::Fixed(sel) => *sel,
                CollapseRule::Sampled => {
                    let draw = match sampler {
                        Some(f) => f(),
                        None => return Err(Error::MissingSampler { step: step_index }),
                    };
                    let probs = state.born(&step.targets, &step.basis)?;
                    let p0 = probs[0].1.to_f64();
                    OutcomeSel::Bit(if draw < p0 { Bit::Zero } else { Bit::One })
                }
            };
            let projected = state.project(&step.targets, &step.basis, outcome)?;
            let weight = projected.norm_sq();
            let probability = if state.is_normalized() {
                weight
            } else {
                A::prob_ratio(&weight, &state.norm_sq()).ok_or(Error::IrrationalProbability)?
            };
            if probability.prob_sign() == 0 {
                return Err(Error::ZeroProbabilityCollapse { step: step_index });
            }
            let factor = probability
                .inv_sqrt_prob()
                .ok_or(Error::NormOutsideRing { step: step_index })?;
            let mut next = projected.scale(&factor);
            next.set_normalized(state.is_normalized());
            // The agent keeps the measured register as its record when the
            // target was still a plain system.
            let (record, absorbed, label) = if reg.kind == RegisterKind::Plain {
                let record_id = allocate_record_name(state, &step.agent);
                let labels = {
                    let (l0, l1) = record_labels(&step.basis, &reg);
                    (l0.to_string(), l1.to_string())
                };
                let label = match outcome {
                    OutcomeSel::Bit(Bit::Zero) => labels.0.clone(),
                    OutcomeSel::Bit(Bit::One) => labels.1.clone(),
                    _ => "?".to_string(),
                };
                next = next.rename_register(target, record_id.clone())?;
                next = reset_register_meta(&next, &record_id, labels, RegisterKind::Record);
                (Some(record_id), Some(reg), label)
            } else {
                let label = {
                    let r = next.register(target).unwrap();
                    let (l0, l1) = step.basis.bit_labels(r);
                    match outcome {
                        OutcomeSel::Bit(Bit::Zero) => l0.to_string(),
                        OutcomeSel::Bit(Bit::One) => l1.to_string(),
                        _ => "?".to_string(),
                    }
                };
                (Some(target.clone()), None, label)
            };
            Ok((
                next,
                AppliedStep {
                    step: step.clone(),
                    record,
                    absorbed,
                    collapse: Some(CollapseInfo {
                        outcome,
                        label,
                        probability,
                        factor,
                    }),
                },
            ))
        }
    }
}

/// Rotated-register metadata rewrite after an absorb: the current bit
/// becomes the record's native (Z) value under new labels.
fn reset_register_meta<A: Amplitude>(
    state: &StateVector<A>,
    id: &RegisterId,
    labels: (String, String),
    kind: RegisterKind,
) -> StateVector<A> {
    let mut out = state.clone();
    out.set_register_meta(id, LocalBasis::Z, labels, kind);
    out
}

fn add_states<A: Amplitude>(
    a: &StateVector<A>,
    b: &StateVector<A>,
) -> Result<StateVector<A>, Error> {
    a.add_terms(b)
}

/// Applies one step deterministically (no sampling).
pub fn apply_step<A: Amplitude>(
    state: &StateVector<A>,
    step: &MeasurementStep,
) -> Result<StateVector<A>, Error> {
    let mut no_sampler: Option<&mut dyn FnMut() -> f64> = None;
    apply_step_full(state, step, 1, &mut no_sampler).map(|(s, _)| s)
}

/// Runs an experiment from an initial state, producing the full history.
pub fn run_experiment<A: Amplitude>(
    initial: StateVector<A>,
    steps: &[MeasurementStep],
    mut sampler: Option<&mut dyn FnMut() -> f64>,
) -> Result<History<A>, Error> {
    let base_norm = initial.norm_sq();
    let mut snapshots = Vec::with_capacity(steps.len() + 1);
    let mut applied_steps = Vec::with_capacity(steps.len());
    snapshots.push(initial);
    for (i, step) in steps.iter().enumerate() {
        let (next, applied) =
            apply_step_full(snapshots.last().unwrap(), step, i + 1, &mut sampler)?;
        snapshots.push(next);
        applied_steps.push(applied);
    }
    Ok(History {
        snapshots,
        steps: applied_steps,
        base_norm,
    })
}

/// Re-applies history step `index` (1-based) to a transported state.
/// Unitary steps act as in the original run (reusing the resolved record
/// names); collapse steps project on the logged outcome and rescale by the
/// logged factor, which is the linear map the recorded history applied.
pub fn apply_recorded<A: Amplitude>(
    history: &History<A>,
    state: &StateVector<A>,
    index: usize,
) -> Result<StateVector<A>, Error> {
    let applied = history
        .steps
        .get(index.wrapping_sub(1))
        .ok_or(Error::StepOutOfRange {
            step: index,
            len: history.len(),
        })?;
    match (&applied.step.style, &applied.collapse) {
        (Style::Collapse(_), Some(info)) => {
            let target = single_target(&applied.step)?;
            // Relabel first when the original run absorbed the target.
            let mut work = state.clone();
            if let (Some(record), Some(_)) = (&applied.record, &applied.absorbed) {
                let prev = applied.absorbed.as_ref().unwrap();
                let local = local_basis_of(&applied.step.basis)?;
                work = work.change_basis(&prev.id, local)?;
                work = work.rename_register(&prev.id, record.clone())?;
                let labels = {
                    let r = work.register(record).unwrap();
                    // Native labels were rewritten in the original run.
                    let (l0, l1) = record_labels(&applied.step.basis, r);
                    (l0.to_string(), l1.to_string())
                };
                work = reset_register_meta(&work, record, labels, RegisterKind::Record);
                let projected =
                    work.project(core::slice::from_ref(record), &OutcomeBasis::Z, info.outcome)?;
                Ok(projected.scale(&info.factor))
            } else {
                let projected =
                    work.project(core::slice::from_ref(target), &applied.step.basis, info.outcome)?;
                Ok(projected.scale(&info.factor))
            }
        }
        _ => {
            let mut no_sampler: Option<&mut dyn FnMut() -> f64> = None;
            let (mut next, reapplied) =
                apply_step_full(state, &applied.step, index, &mut no_sampler)?;
            // Resolved record names must match the original run.
            if let (Some(orig), Some(new)) = (&applied.record, &reapplied.record) {
                if orig != new {
                    next = next.rename_register(new, orig.clone())?;
                }
            }
            next.set_normalized(false);
            Ok(next)
        }
    }
}

/// Evolves a (possibly projected) state forward from `from_step` to
/// `to_step` along the recorded history.
pub fn evolve_segment<A: Amplitude>(
    history: &History<A>,
    state: StateVector<A>,
    from_step: usize,
    to_step: usize,
) -> Result<StateVector<A>, Error> {
    if to_step > history.len() {
        return Err(Error::StepOutOfRange {
            step: to_step,
            len: history.len(),
        });
    }
    let mut cur = state;
    for k in (from_step + 1)..=to_step {
        cur = apply_recorded(history, &cur, k)?;
    }
    Ok(cur)
}

/// Undoes history steps from `from_step` down to `to_step`, transporting a
/// state backward.  Fails with `NonUnitarySegment` on collapse steps and
/// `OutsideRange` when the state is not in the inverted map's range.
pub fn back_evolve<A: Amplitude>(
    history: &History<A>,
    state: &StateVector<A>,
    from_step: usize,
    to_step: usize,
) -> Result<StateVector<A>, Error> {
    if from_step > history.len() {
        return Err(Error::StepOutOfRange {
            step: from_step,
            len: history.len(),
        });
    }
    if to_step > from_step {
        return Err(Error::StepOutOfRange {
            step: to_step,
            len: from_step,
        });
    }
    let mut cur = state.clone();
    for k in ((to_step + 1)..=from_step).rev() {
        let applied = &history.steps[k - 1];
        cur = invert_step(&cur, applied, k)?;
    }
    Ok(cur)
}

fn invert_step<A: Amplitude>(
    state: &StateVector<A>,
    applied: &AppliedStep<A>,
    index: usize,
) -> Result<StateVector<A>, Error> {
    match &applied.step.style {
        Style::Collapse(_) => Err(Error::NonUnitarySegment { step: index }),
        Style::Absorb => {
            let record = applied.record.as_ref().expect("absorb allocates a record");
            let prev = applied.absorbed.as_ref().expect("absorb stores the target");
            if state.register_index(record).is_none() {
                return Err(Error::UnknownRegister {
                    register: record.clone(),
                    at_step: index,
                });
            }
            // Reverse of: rotate to the step basis, relabel as a Z record.
            let local = local_basis_of(&applied.step.basis)?;
            let mut out = state.change_basis(record, LocalBasis::Z)?;
            out = out.rename_register(record, prev.id.clone())?;
            out.set_register_meta(&prev.id, local, prev.labels.clone(), prev.kind);
            out.change_basis(&prev.id, LocalBasis::Z)
        }
        Style::Preserve => {
            let record = applied.record.as_ref().expect("preserve allocates a record");
            match &applied.step.basis {
                OutcomeBasis::Joint { states, .. } => {
                    let rec_idx = state.register_index(record).ok_or_else(|| {
                        Error::UnknownRegister {
                            register: record.clone(),
                            at_step: index,
                        }
                    })?;
                    let basis = applied.step.basis.clone();
                    let targets = &applied.step.targets;
                    let mut total: Option<StateVector<A>> = None;
                    let outcome_count = if states.len() == 2 { 2 } else { states.len() + 1 };
                    for i in 0..outcome_count {
                        let part = state
                            .project(
                                core::slice::from_ref(record),
                                &OutcomeBasis::Z,
                                OutcomeSel::Bit(Bit::from_index(i)),
                            )?
                            .drop_register_bit(rec_idx);
                        // Each record branch must lie in its own outcome's
                        // subspace.
                        let sel = if i < states.len() {
                            OutcomeSel::Listed(i)
                        } else {
                            OutcomeSel::Rest
                        };
                        let kept = part.project(targets, &basis, sel)?;
                        if !part.same_state(&kept) {
                            return Err(Error::OutsideRange { step: index });
                        }
                        total = Some(match total {
                            None => part,
                            Some(acc) => acc.add_terms(&part)?,
                        });
                    }
                    Ok(total.expect("joint bases have outcomes"))
                }
                two_level => {
                    let target = single_target(&applied.step)?;
                    let local = local_basis_of(two_level)?;
                    let aligned = state.change_basis(target, local)?;
                    aligned.remove_copy(record, target, index)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{rat, QuadAmp};
    use crate::state::StateVector;
    use alloc::vec;

    type ExactState = StateVector<QuadAmp>;

    fn q(s: &str) -> QuadAmp {
        s.parse().unwrap()
    }

    use Bit::{One as D, Zero as U};

    fn two_spin_state() -> ExactState {
        ExactState::new(
            vec![Register::spin("barred"), Register::spin("unbarred")],
            vec![
                (vec![U, D], q("1/sqrt3")),
                (vec![D, U], q("1/sqrt3")),
                (vec![D, D], q("1/sqrt3")),
            ],
        )
        .unwrap()
    }

    fn friend_steps() -> Vec<MeasurementStep> {
        vec![
            MeasurementStep::absorb("Fbar", "barred", OutcomeBasis::Z),
            MeasurementStep::absorb("F", "unbarred", OutcomeBasis::Z),
            MeasurementStep::preserve("Wbar", "mem.Fbar", OutcomeBasis::X),
            MeasurementStep::preserve("W", "mem.F", OutcomeBasis::X),
        ]
    }

    #[test]
    fn absorb_relabels_without_touching_amplitudes() {
        let history = run_experiment(two_spin_state(), &friend_steps()[..2], None).unwrap();
        let after = &history.snapshots[2];
        assert_eq!(after.support_size(), 3);
        assert_eq!(after.amplitude_of(&[U, D]), q("1/sqrt3"));
        assert_eq!(after.registers()[0].id.as_str(), "mem.Fbar");
        assert_eq!(after.registers()[1].id.as_str(), "mem.F");
        assert_eq!(after.registers()[0].kind, RegisterKind::Record);
    }

    #[test]
    fn absorbing_a_record_is_rejected() {
        let history = run_experiment(two_spin_state(), &friend_steps()[..2], None).unwrap();
        let err = apply_step(
            &history.snapshots[2],
            &MeasurementStep::absorb("X", "mem.F", OutcomeBasis::Z),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TargetIsRecord { .. }));
    }

    #[test]
    fn preserve_in_x_reproduces_the_interference_pattern() {
        let history = run_experiment(two_spin_state(), &friend_steps()[..3], None).unwrap();
        let after = &history.snapshots[3];
        // Registers: mem.Fbar (left in x), mem.F, mem.Wbar.
        // (2 |plus, down, plus> + |plus, up, plus> - |minus, up, minus>) / sqrt6
        assert_eq!(after.support_size(), 3);
        assert_eq!(after.amplitude_of(&[U, D, U]), q("2/sqrt6"));
        assert_eq!(after.amplitude_of(&[U, U, U]), q("1/sqrt6"));
        assert_eq!(after.amplitude_of(&[D, U, D]), q("-1/sqrt6"));
        let rec = after.register(&"mem.Wbar".into()).unwrap();
        assert_eq!(rec.labels.0, "plus");
        assert_eq!(rec.labels.1, "minus");
    }

    #[test]
    fn full_run_reaches_the_four_term_final_state() {
        let history = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        let last = history.snapshots.last().unwrap();
        assert_eq!(history.snapshots.len(), 5);
        assert_eq!(last.support_size(), 4);
        // Registers: mem.Fbar, mem.F, mem.Wbar, mem.W.
        assert_eq!(last.amplitude_of(&[U, U, U, U]), q("3/sqrt12"));
        assert_eq!(last.amplitude_of(&[U, D, U, D]), q("-1/sqrt12"));
        assert_eq!(last.amplitude_of(&[D, U, D, U]), q("-1/sqrt12"));
        assert_eq!(last.amplitude_of(&[D, D, D, D]), q("-1/sqrt12"));
        assert_eq!(last.norm_sq(), QuadAmp::one());
    }

    #[test]
    fn collapse_projects_renormalizes_and_logs() {
        let steps = vec![MeasurementStep::collapse(
            "Fbar",
            "barred",
            OutcomeBasis::Z,
            OutcomeSel::Bit(U),
        )];
        let history = run_experiment(two_spin_state(), &steps, None).unwrap();
        let after = &history.snapshots[1];
        assert_eq!(after.support_size(), 1);
        assert_eq!(after.amplitude_of(&[U, D]), q("1"));
        assert_eq!(after.norm_sq(), QuadAmp::one());
        let log = history.collapse_log();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].1.label, "up");
        assert_eq!(log[0].1.probability, QuadAmp::rational(rat(1, 3)));
    }

    #[test]
    fn collapse_on_an_impossible_outcome_fails() {
        let st = ExactState::new(
            vec![Register::spin("s")],
            vec![(vec![U], q("1"))],
        )
        .unwrap();
        let err = apply_step(
            &st,
            &MeasurementStep::collapse("A", "s", OutcomeBasis::Z, OutcomeSel::Bit(D)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityCollapse { .. }));
    }

    #[test]
    fn sampled_collapse_follows_the_draw() {
        let steps = vec![MeasurementStep::new(
            "Fbar",
            &["barred"],
            OutcomeBasis::Z,
            Style::Collapse(CollapseRule::Sampled),
        )];
        // P(up) = 1/3: a draw below it picks up, above picks down.
        let mut low = || 0.2f64;
        let mut low_fn: Option<&mut dyn FnMut() -> f64> = Some(&mut low);
        let h = run_experiment(two_spin_state(), &steps, low_fn.take()).unwrap();
        assert_eq!(h.steps[0].collapse.as_ref().unwrap().label, "up");
        let mut high = || 0.9f64;
        let mut high_fn: Option<&mut dyn FnMut() -> f64> = Some(&mut high);
        let h = run_experiment(two_spin_state(), &steps, high_fn.take()).unwrap();
        assert_eq!(h.steps[0].collapse.as_ref().unwrap().label, "down");
        let err = run_experiment(two_spin_state(), &steps, None).unwrap_err();
        assert!(matches!(err, Error::MissingSampler { .. }));
    }

    #[test]
    fn swapping_the_two_absorbs_gives_the_identical_state() {
        let mut swapped = friend_steps();
        swapped.swap(0, 1);
        let a = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        let b = run_experiment(two_spin_state(), &swapped, None).unwrap();
        assert!(a.snapshots[2].same_state(&b.snapshots[2]));
    }

    #[test]
    fn swapping_the_two_preserves_matches_on_distributions() {
        let mut swapped = friend_steps();
        swapped.swap(2, 3);
        let a = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        let b = run_experiment(two_spin_state(), &swapped, None).unwrap();
        for reg in ["mem.Wbar", "mem.W"] {
            let pa = a.snapshots[4].born(&[reg.into()], &OutcomeBasis::Z).unwrap();
            let pb = b.snapshots[4].born(&[reg.into()], &OutcomeBasis::Z).unwrap();
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn back_evolve_inverts_the_unitary_segment() {
        let history = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        let last = history.snapshots.last().unwrap().clone();
        for k in (0..4).rev() {
            let back = back_evolve(&history, &last, 4, k).unwrap();
            assert!(back.same_state(&history.snapshots[k]), "step {k}");
        }
        // Zero steps: identity.
        let same = back_evolve(&history, &last, 4, 4).unwrap();
        assert!(same.same_state(&last));
    }

    #[test]
    fn back_evolve_recovers_the_projected_origin() {
        // Project the final state on W-record = minus, walk back to just
        // after step 1: the friend's record is `up` with certainty.
        let history = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        let projected = history
            .snapshots[4]
            .project(&["mem.W".into()], &OutcomeBasis::Z, OutcomeSel::Bit(D))
            .unwrap();
        assert_eq!(projected.norm_sq(), QuadAmp::rational(rat(1, 6)));
        let back = back_evolve(&history, &projected, 4, 1).unwrap();
        let probs = back.born(&["mem.Fbar".into()], &OutcomeBasis::Z).unwrap();
        assert_eq!(probs[0].1, QuadAmp::one());
        assert_eq!(probs[1].1, QuadAmp::zero());
    }

    #[test]
    fn back_evolve_refuses_collapse_segments() {
        let steps = vec![MeasurementStep::collapse(
            "Fbar",
            "barred",
            OutcomeBasis::Z,
            OutcomeSel::Bit(U),
        )];
        let history = run_experiment(two_spin_state(), &steps, None).unwrap();
        let last = history.snapshots.last().unwrap();
        let err = back_evolve(&history, last, 1, 0).unwrap_err();
        assert_eq!(err, Error::NonUnitarySegment { step: 1 });
    }

    #[test]
    fn back_evolve_rejects_states_outside_the_range() {
        let history = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        // A term where mem.W disagrees with mem.F cannot have come out of
        // step 4's controlled copy.
        let regs = history.snapshots[4].registers().to_vec();
        let broken =
            ExactState::new_unnormalized(regs, vec![(vec![U, U, U, D], q("1"))]).unwrap();
        let err = back_evolve(&history, &broken, 4, 3).unwrap_err();
        assert_eq!(err, Error::OutsideRange { step: 4 });
    }

    #[test]
    fn absorb_along_x_rotates_then_relabels() {
        let steps = vec![MeasurementStep::absorb("Rbar", "barred", OutcomeBasis::X)];
        let history = run_experiment(two_spin_state(), &steps, None).unwrap();
        let after = &history.snapshots[1];
        assert_eq!(after.amplitude_of(&[U, D]), q("2/sqrt6"));
        assert_eq!(after.amplitude_of(&[U, U]), q("1/sqrt6"));
        assert_eq!(after.amplitude_of(&[D, U]), q("-1/sqrt6"));
        let rec = after.register(&"mem.Rbar".into()).unwrap();
        assert_eq!(rec.labels.0, "plus");
        assert_eq!(rec.basis, LocalBasis::Z);
        // And the inverse restores the original spin.
        let back = back_evolve(&history, after, 1, 0).unwrap();
        assert!(back.same_state(&history.snapshots[0]));
    }

    #[test]
    fn joint_preserve_tags_the_listed_states() {
        // Friend state (|up,up> + |down,down>)/sqrt2; Wigner measures the
        // pair in the symmetric/antisymmetric joint basis.
        let bell = ExactState::new(
            vec![Register::spin("a"), Register::spin("b")],
            vec![(vec![U, U], q("1/sqrt2")), (vec![D, D], q("1/sqrt2"))],
        )
        .unwrap();
        let basis = OutcomeBasis::Joint {
            states: vec![
                crate::state::JointKet {
                    terms: vec![(vec![U, U], q("1/sqrt2")), (vec![D, D], q("1/sqrt2"))],
                },
                crate::state::JointKet {
                    terms: vec![(vec![U, U], q("1/sqrt2")), (vec![D, D], q("-1/sqrt2"))],
                },
            ],
            labels: vec!["sym".into(), "anti".into()],
        };
        let step = MeasurementStep::new("W", &["a", "b"], basis, Style::Preserve);
        let history = run_experiment(bell, core::slice::from_ref(&step), None).unwrap();
        let after = &history.snapshots[1];
        let probs = after.born(&["mem.W".into()], &OutcomeBasis::Z).unwrap();
        assert_eq!(probs[0].1, QuadAmp::one());
        assert_eq!(probs[1].1, QuadAmp::zero());
        let back = back_evolve(&history, after, 1, 0).unwrap();
        assert!(back.same_state(&history.snapshots[0]));
    }

    #[test]
    fn empty_step_list_is_a_single_snapshot() {
        let history = run_experiment(two_spin_state(), &[], None).unwrap();
        assert_eq!(history.snapshots.len(), 1);
        assert!(history.is_empty());
    }

    #[test]
    fn lineage_follows_absorb_relabels() {
        let history = run_experiment(two_spin_state(), &friend_steps(), None).unwrap();
        assert!(history.same_lineage(&"barred".into(), 0, &"mem.Fbar".into(), 1));
        assert!(history.same_lineage(&"unbarred".into(), 0, &"mem.F".into(), 4));
        assert!(!history.same_lineage(&"barred".into(), 0, &"mem.F".into(), 2));
        assert!(!history.same_lineage(&"mem.Wbar".into(), 3, &"mem.W".into(), 4));
    }
}
