//! Sparse state vectors over named two-level registers.
//!
//! A state stores only its nonzero terms, keyed by packed outcome bits, so
//! exact cancellation visibly removes terms.  Each register carries the
//! basis its bit is currently expressed in; `change_basis` re-expresses one
//! register and recombines terms, which is how an interference pattern
//! becomes a shorter term list.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::amplitude::{Amplitude, QuadAmp};
use crate::error::Error;

/// Upper bound on simultaneous registers (4096 configurations).
pub const MAX_REGISTERS: usize = 12;

/// Name of a two-level register.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RegisterId(pub String);

impl RegisterId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegisterId {
    fn from(s: &str) -> Self {
        RegisterId(s.to_string())
    }
}

impl From<String> for RegisterId {
    fn from(s: String) -> Self {
        RegisterId(s)
    }
}

/// One binary outcome.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn index(self) -> usize {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Bit {
        if i == 0 {
            Bit::Zero
        } else {
            Bit::One
        }
    }
}

/// Basis a register's stored bit is currently expressed in.
///
/// `Z` is the register's native basis.  `X` is the Hadamard-rotated basis
/// with vectors `(|0> +- |1>)/sqrt2`.  `Axis(theta)` uses
/// `cos t |0> + sin t |1>` and `sin t |0> - cos t |1>`; all three are their
/// own inverses.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum LocalBasis {
    Z,
    X,
    Axis(f64),
}

/// Whether a register is a plain system or some agent's measurement
/// record.  Absorb-style measurement refuses record targets.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RegisterKind {
    Plain,
    Record,
}

/// A two-level register plus its display conventions.
///
/// `labels` names outcomes 0 and 1 when read in the native basis; spin
/// registers use ("up", "down") and measurement records inherit the label
/// pair of the measurement that wrote them.
#[derive(Clone, PartialEq, Debug)]
pub struct Register {
    pub id: RegisterId,
    pub basis: LocalBasis,
    pub labels: (String, String),
    pub kind: RegisterKind,
}

impl Register {
    pub fn new(id: impl Into<RegisterId>, labels: (&str, &str)) -> Self {
        Register {
            id: id.into(),
            basis: LocalBasis::Z,
            labels: (labels.0.to_string(), labels.1.to_string()),
            kind: RegisterKind::Plain,
        }
    }

    /// A spin-like register labelled up/down.
    pub fn spin(id: impl Into<RegisterId>) -> Self {
        Self::new(id, ("up", "down"))
    }

    /// A measurement record with the given outcome labels.
    pub fn record(id: impl Into<RegisterId>, labels: (&str, &str)) -> Self {
        Register {
            kind: RegisterKind::Record,
            ..Self::new(id, labels)
        }
    }

    /// Labels for the basis the bit is currently expressed in.
    pub fn display_labels(&self) -> (&str, &str) {
        match self.basis {
            LocalBasis::Z => (&self.labels.0, &self.labels.1),
            LocalBasis::X => ("plus", "minus"),
            LocalBasis::Axis(_) => ("axis+", "axis-"),
        }
    }

    /// Outcome bit named by `label` in the native basis.
    pub fn native_bit(&self, label: &str) -> Option<Bit> {
        if label == self.labels.0 || label == "0" {
            Some(Bit::Zero)
        } else if label == self.labels.1 || label == "1" {
            Some(Bit::One)
        } else {
            None
        }
    }
}

/// Outcome bit named by `label` for a Hadamard-basis readout.
/// `fail` and `ok` are aliases for `plus` and `minus` respectively.
pub fn x_bit(label: &str) -> Option<Bit> {
    match label {
        "plus" | "fail" | "0" => Some(Bit::Zero),
        "minus" | "ok" | "1" => Some(Bit::One),
        _ => None,
    }
}

/// One listed state of a joint (multi-register) outcome basis, written in
/// the native basis of the target registers.
#[derive(Clone, PartialEq, Debug)]
pub struct JointKet {
    pub terms: Vec<(Vec<Bit>, QuadAmp)>,
}

/// Measurement basis for one step or one projection.
#[derive(Clone, PartialEq, Debug)]
pub enum OutcomeBasis {
    /// Native basis of a single register.
    Z,
    /// Hadamard basis of a single register.
    X,
    /// Rotated axis of a single register; exact mode supports
    /// `theta` in {0, pi/4, pi/2}.
    Axis(f64),
    /// Explicit orthonormal states over several registers, with an implicit
    /// complement outcome covering the rest of the space.
    Joint { states: Vec<JointKet>, labels: Vec<String> },
}

impl OutcomeBasis {
    /// Label pair for two-level bases.
    pub fn bit_labels<'a>(&'a self, reg: &'a Register) -> (&'a str, &'a str) {
        match self {
            OutcomeBasis::Z => (&reg.labels.0, &reg.labels.1),
            OutcomeBasis::X => ("plus", "minus"),
            OutcomeBasis::Axis(_) => ("axis+", "axis-"),
            OutcomeBasis::Joint { .. } => ("s0", "s1"),
        }
    }

    /// Outcome bit named by `label` under this basis for events and
    /// collapse outcomes.
    pub fn resolve_label(&self, reg: &Register, label: &str) -> Option<Bit> {
        match self {
            OutcomeBasis::Z => reg.native_bit(label),
            OutcomeBasis::X => x_bit(label),
            OutcomeBasis::Axis(_) => match label {
                "axis+" | "0" => Some(Bit::Zero),
                "axis-" | "1" => Some(Bit::One),
                _ => None,
            },
            OutcomeBasis::Joint { labels, .. } => {
                labels.iter().position(|l| l == label).map(Bit::from_index)
            }
        }
    }
}

/// Outcome selector for projections, events and collapse steps.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OutcomeSel {
    Bit(Bit),
    /// Index into a joint basis's listed states.
    Listed(usize),
    /// Implicit complement of a joint basis.
    Rest,
    /// No restriction: the observable was read but the outcome is left
    /// open.  Projects with the identity.
    Any,
}

/// Packed outcome configuration: bit `i` holds register `i`'s outcome.
pub type Config = u32;

pub fn config_bit(config: Config, index: usize) -> Bit {
    if config & (1 << index) == 0 {
        Bit::Zero
    } else {
        Bit::One
    }
}

/// Sparse state vector over an ordered register list.
#[derive(Clone, Debug)]
pub struct StateVector<A: Amplitude> {
    registers: Vec<Register>,
    terms: BTreeMap<Config, A>,
    normalized: bool,
}

impl<A: Amplitude> StateVector<A> {
    /// Builds a normalized state; rejects duplicate registers and any
    /// squared-amplitude sum different from one.
    pub fn new(registers: Vec<Register>, terms: Vec<(Vec<Bit>, A)>) -> Result<Self, Error> {
        let state = Self::build(registers, terms)?;
        let norm = state.norm_sq();
        if !norm.prob_is_one() {
            let deficit = A::one().sub(&norm);
            return Err(Error::NotNormalized {
                deficit: deficit.to_string(),
            });
        }
        Ok(Self { normalized: true, ..state })
    }

    /// Builds a state with an arbitrary norm, marked unnormalized.  Born
    /// probabilities divide by the squared norm, so exact ratio results
    /// (like 1:9 branch weights) stay representable even when the
    /// normalization constant is not in the ring.
    pub fn new_unnormalized(
        registers: Vec<Register>,
        terms: Vec<(Vec<Bit>, A)>,
    ) -> Result<Self, Error> {
        Self::build(registers, terms)
    }

    fn build(registers: Vec<Register>, terms: Vec<(Vec<Bit>, A)>) -> Result<Self, Error> {
        if registers.len() > MAX_REGISTERS {
            return Err(Error::TooManyRegisters {
                count: registers.len(),
                max: MAX_REGISTERS,
            });
        }
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::DuplicateRegister {
                    register: r.id.clone(),
                });
            }
        }
        let mut map: BTreeMap<Config, A> = BTreeMap::new();
        for (bits, amp) in terms {
            if bits.len() != registers.len() {
                return Err(Error::BadConfigWidth {
                    expected: registers.len(),
                    got: bits.len(),
                });
            }
            let mut key: Config = 0;
            for (i, b) in bits.iter().enumerate() {
                if *b == Bit::One {
                    key |= 1 << i;
                }
            }
            let total = match map.remove(&key) {
                Some(prev) => prev.add(&amp),
                None => amp,
            };
            if !total.is_zero() {
                map.insert(key, total);
            }
        }
        Ok(StateVector {
            registers,
            terms: map,
            normalized: false,
        })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register_index(&self, id: &RegisterId) -> Option<usize> {
        self.registers.iter().position(|r| &r.id == id)
    }

    pub fn register(&self, id: &RegisterId) -> Option<&Register> {
        self.registers.iter().find(|r| &r.id == id)
    }

    /// Number of nonzero terms.
    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Config, &A)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    /// Amplitude of one configuration (zero if absent).
    pub fn amplitude(&self, config: Config) -> A {
        self.terms.get(&config).cloned().unwrap_or_else(A::zero)
    }

    /// Amplitude looked up by per-register outcome bits.
    pub fn amplitude_of(&self, bits: &[Bit]) -> A {
        let mut key: Config = 0;
        for (i, b) in bits.iter().enumerate() {
            if *b == Bit::One {
                key |= 1 << i;
            }
        }
        self.amplitude(key)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn set_normalized(&mut self, yes: bool) {
        self.normalized = yes;
    }

    pub fn norm_sq(&self) -> A {
        let mut total = A::zero();
        for amp in self.terms.values() {
            total = total.add(&amp.abs_sq());
        }
        total
    }

    /// Applies a symmetric 2x2 matrix `[[m00, m01], [m10, m11]]` to one
    /// register's bit, accumulating and pruning.
    fn apply_one_bit(&self, index: usize, m: [[A; 2]; 2]) -> Self {
        let mask: Config = 1 << index;
        let mut out: BTreeMap<Config, A> = BTreeMap::new();
        for (key, amp) in &self.terms {
            let b = usize::from(key & mask != 0);
            let base = key & !mask;
            for (new_bit, row) in m.iter().enumerate() {
                let coef = &row[b];
                if coef.is_zero() {
                    continue;
                }
                let new_key = if new_bit == 1 { base | mask } else { base };
                let add = coef.mul(amp);
                let total = match out.remove(&new_key) {
                    Some(prev) => prev.add(&add),
                    None => add,
                };
                if !total.is_zero() {
                    out.insert(new_key, total);
                }
            }
        }
        StateVector {
            registers: self.registers.clone(),
            terms: out,
            normalized: self.normalized,
        }
    }

    fn rotation_matrix(basis: LocalBasis) -> Result<[[A; 2]; 2], Error> {
        match basis {
            LocalBasis::Z => {
                let one = A::one();
                let zero = A::zero();
                Ok([[one.clone(), zero.clone()], [zero, one]])
            }
            LocalBasis::X => {
                let s = A::sqrt1_2();
                Ok([[s.clone(), s.clone()], [s.clone(), s.neg()]])
            }
            LocalBasis::Axis(theta) => {
                let (c, s) = A::axis_coefficients(theta).ok_or(Error::UnsupportedInExactMode {
                    what: "free rotation angle",
                })?;
                Ok([[c.clone(), s.clone()], [s, c.neg()]])
            }
        }
    }

    /// Re-expresses one register in another basis.  The abstract state is
    /// unchanged; term lists recombine when interference allows.
    pub fn change_basis(&self, id: &RegisterId, new: LocalBasis) -> Result<Self, Error> {
        let index = self.register_index(id).ok_or_else(|| Error::UnknownRegister {
            register: id.clone(),
            at_step: 0,
        })?;
        let current = self.registers[index].basis;
        if current == new {
            return Ok(self.clone());
        }
        let mut state = self.clone();
        // Every supported rotation is its own inverse, so go through Z.
        if current != LocalBasis::Z {
            state = state.apply_one_bit(index, Self::rotation_matrix(current)?);
            state.registers[index].basis = LocalBasis::Z;
        }
        if new != LocalBasis::Z {
            state = state.apply_one_bit(index, Self::rotation_matrix(new)?);
            state.registers[index].basis = new;
        }
        Ok(state)
    }

    /// All registers re-expressed in their native bases.
    pub fn to_native(&self) -> Result<Self, Error> {
        let mut state = self.clone();
        for i in 0..self.registers.len() {
            let id = state.registers[i].id.clone();
            state = state.change_basis(&id, LocalBasis::Z)?;
        }
        Ok(state)
    }

    /// `<self|other>` with both sides aligned to native bases.
    pub fn inner_product(&self, other: &Self) -> Result<A, Error> {
        let a = self.to_native()?;
        let b = other.to_native()?;
        if a.registers.len() != b.registers.len()
            || a.registers.iter().zip(&b.registers).any(|(x, y)| x.id != y.id)
        {
            return Err(Error::RegisterMismatch);
        }
        let mut total = A::zero();
        for (key, amp) in &a.terms {
            if let Some(bmp) = b.terms.get(key) {
                total = total.add(&amp.conj().mul(bmp));
            }
        }
        Ok(total)
    }

    /// True when both states have the same registers and amplitudes (after
    /// aligning bases; float backend compares at the pruning tolerance).
    pub fn same_state(&self, other: &Self) -> bool {
        let (a, b) = match (self.to_native(), other.to_native()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return false,
        };
        if a.registers.len() != b.registers.len()
            || a.registers.iter().zip(&b.registers).any(|(x, y)| x.id != y.id)
        {
            return false;
        }
        let keys: alloc::collections::BTreeSet<Config> =
            a.terms.keys().chain(b.terms.keys()).copied().collect();
        keys.into_iter().all(|k| a.amplitude(k).sub(&b.amplitude(k)).is_zero())
    }

    fn single_target<'t>(&self, targets: &'t [RegisterId]) -> Result<&'t RegisterId, Error> {
        match targets {
            [one] => Ok(one),
            _ => Err(Error::InvalidBasis {
                reason: "two-level basis takes exactly one target register",
            }),
        }
    }

    /// Projects onto one outcome without renormalizing.  The result carries
    /// the `unnormalized` flag; its squared norm is the outcome weight.
    pub fn project(
        &self,
        targets: &[RegisterId],
        basis: &OutcomeBasis,
        outcome: OutcomeSel,
    ) -> Result<Self, Error> {
        if let OutcomeSel::Any = outcome {
            return Ok(self.clone());
        }
        match basis {
            OutcomeBasis::Z | OutcomeBasis::X | OutcomeBasis::Axis(_) => {
                let id = self.single_target(targets)?;
                let local = match basis {
                    OutcomeBasis::Z => LocalBasis::Z,
                    OutcomeBasis::X => LocalBasis::X,
                    OutcomeBasis::Axis(t) => LocalBasis::Axis(*t),
                    OutcomeBasis::Joint { .. } => unreachable!(),
                };
                let bit = match outcome {
                    OutcomeSel::Bit(b) => b,
                    _ => {
                        return Err(Error::BadOutcome {
                            reason: "two-level basis outcomes are bits",
                        })
                    }
                };
                let rotated = self.change_basis(id, local)?;
                let index = rotated.register_index(id).unwrap();
                let mask: Config = 1 << index;
                let want = if bit == Bit::One { mask } else { 0 };
                let mut out = rotated;
                out.terms.retain(|k, _| k & mask == want);
                out.normalized = false;
                Ok(out)
            }
            OutcomeBasis::Joint { states, .. } => {
                let idxs = self.joint_indices(targets)?;
                let aligned = self.targets_to_native(targets)?;
                match outcome {
                    OutcomeSel::Listed(i) => {
                        let ket = states.get(i).ok_or(Error::BadOutcome {
                            reason: "listed outcome index out of range",
                        })?;
                        aligned.project_onto_ket(&idxs, ket)
                    }
                    OutcomeSel::Rest => {
                        let mut rest = aligned.clone();
                        for ket in states {
                            let part = aligned.project_onto_ket(&idxs, ket)?;
                            rest = rest.subtract_terms(&part);
                        }
                        rest.normalized = false;
                        Ok(rest)
                    }
                    _ => Err(Error::BadOutcome {
                        reason: "joint basis outcomes are listed states or `rest`",
                    }),
                }
            }
        }
    }

    fn joint_indices(&self, targets: &[RegisterId]) -> Result<Vec<usize>, Error> {
        if targets.is_empty() {
            return Err(Error::InvalidBasis {
                reason: "joint basis needs at least one target",
            });
        }
        targets
            .iter()
            .map(|id| {
                self.register_index(id).ok_or_else(|| Error::UnknownRegister {
                    register: id.clone(),
                    at_step: 0,
                })
            })
            .collect()
    }

    fn targets_to_native(&self, targets: &[RegisterId]) -> Result<Self, Error> {
        let mut state = self.clone();
        for id in targets {
            state = state.change_basis(id, LocalBasis::Z)?;
        }
        Ok(state)
    }

    /// `(|ket><ket| tensor I) self`, with `ket` over the registers at
    /// `idxs` in their native bases.
    fn project_onto_ket(&self, idxs: &[usize], ket: &JointKet) -> Result<Self, Error> {
        let mut target_mask: Config = 0;
        for i in idxs {
            target_mask |= 1 << i;
        }
        let place = |bits: &[Bit]| -> Result<Config, Error> {
            if bits.len() != idxs.len() {
                return Err(Error::BadConfigWidth {
                    expected: idxs.len(),
                    got: bits.len(),
                });
            }
            let mut cfg: Config = 0;
            for (b, i) in bits.iter().zip(idxs) {
                if *b == Bit::One {
                    cfg |= 1 << i;
                }
            }
            Ok(cfg)
        };
        // Inner products per configuration of the other registers.
        let mut inners: BTreeMap<Config, A> = BTreeMap::new();
        for (bits, coef) in &ket.terms {
            let cfg = place(bits)?;
            let coef = A::from_quad(coef);
            for (key, amp) in &self.terms {
                if key & target_mask != cfg {
                    continue;
                }
                let rest = key & !target_mask;
                let add = coef.conj().mul(amp);
                let total = match inners.remove(&rest) {
                    Some(prev) => prev.add(&add),
                    None => add,
                };
                inners.insert(rest, total);
            }
        }
        let mut out: BTreeMap<Config, A> = BTreeMap::new();
        for (rest, inner) in inners {
            if inner.is_zero() {
                continue;
            }
            for (bits, coef) in &ket.terms {
                let cfg = place(bits)?;
                let amp = inner.mul(&A::from_quad(coef));
                if amp.is_zero() {
                    continue;
                }
                let key = rest | cfg;
                let total = match out.remove(&key) {
                    Some(prev) => prev.add(&amp),
                    None => amp,
                };
                if !total.is_zero() {
                    out.insert(key, total);
                }
            }
        }
        Ok(StateVector {
            registers: self.registers.clone(),
            terms: out,
            normalized: false,
        })
    }

    fn subtract_terms(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (key, amp) in &other.terms {
            let total = match out.terms.remove(key) {
                Some(prev) => prev.sub(amp),
                None => amp.neg(),
            };
            if !total.is_zero() {
                out.terms.insert(*key, total);
            }
        }
        out
    }

    /// Born probabilities of every outcome of the observable, normalized by
    /// the state's squared norm.  Two-level bases report both bits; joint
    /// bases report each listed state plus `rest`.
    pub fn born(
        &self,
        targets: &[RegisterId],
        basis: &OutcomeBasis,
    ) -> Result<Vec<(String, A)>, Error> {
        let outcomes: Vec<(String, OutcomeSel)> = match basis {
            OutcomeBasis::Z | OutcomeBasis::X | OutcomeBasis::Axis(_) => {
                let id = self.single_target(targets)?;
                let reg = self.register(id).ok_or_else(|| Error::UnknownRegister {
                    register: id.clone(),
                    at_step: 0,
                })?;
                let (l0, l1) = basis.bit_labels(reg);
                [
                    (l0.to_string(), OutcomeSel::Bit(Bit::Zero)),
                    (l1.to_string(), OutcomeSel::Bit(Bit::One)),
                ]
                .into()
            }
            OutcomeBasis::Joint { states, labels } => {
                let mut v: Vec<(String, OutcomeSel)> = states
                    .iter()
                    .enumerate()
                    .map(|(i, _)| {
                        let label = labels.get(i).cloned().unwrap_or_else(|| {
                            let mut s = String::from("s");
                            s.push_str(&i.to_string());
                            s
                        });
                        (label, OutcomeSel::Listed(i))
                    })
                    .collect();
                v.push(("rest".to_string(), OutcomeSel::Rest));
                v
            }
        };
        let norm = self.norm_sq();
        let mut result = Vec::new();
        for (label, sel) in outcomes {
            let weight = self.project(targets, basis, sel)?.norm_sq();
            let p = if self.normalized {
                weight
            } else {
                A::prob_ratio(&weight, &norm).ok_or(Error::IrrationalProbability)?
            };
            result.push((label, p));
        }
        Ok(result)
    }

    /// Renames a register in place (identity on amplitudes).
    pub fn rename_register(&self, old: &RegisterId, new: RegisterId) -> Result<Self, Error> {
        let index = self.register_index(old).ok_or_else(|| Error::UnknownRegister {
            register: old.clone(),
            at_step: 0,
        })?;
        if self.register_index(&new).is_some() {
            return Err(Error::DuplicateRegister { register: new });
        }
        let mut out = self.clone();
        out.registers[index].id = new;
        Ok(out)
    }

    /// Sets the display label pair of a register.
    pub fn relabel_register(&self, id: &RegisterId, labels: (&str, &str)) -> Result<Self, Error> {
        let index = self.register_index(id).ok_or_else(|| Error::UnknownRegister {
            register: id.clone(),
            at_step: 0,
        })?;
        let mut out = self.clone();
        out.registers[index].labels = (labels.0.to_string(), labels.1.to_string());
        Ok(out)
    }

    /// Rewrites one register's declared basis, labels, and kind without
    /// touching amplitudes.  Measurement bookkeeping: a rotated system
    /// register becomes a record whose native value is the outcome.
    pub(crate) fn set_register_meta(
        &mut self,
        id: &RegisterId,
        basis: LocalBasis,
        labels: (String, String),
        kind: RegisterKind,
    ) {
        if let Some(index) = self.register_index(id) {
            let reg = &mut self.registers[index];
            reg.basis = basis;
            reg.labels = labels;
            reg.kind = kind;
        }
    }

    /// Term-wise sum over identical register layouts.  The result carries
    /// the `unnormalized` flag.
    pub(crate) fn add_terms(&self, other: &Self) -> Result<Self, Error> {
        if self.registers != other.registers {
            return Err(Error::RegisterMismatch);
        }
        let mut out = self.clone();
        for (k, a) in &other.terms {
            let sum = out.amplitude(*k).add(a);
            if sum.is_zero() {
                out.terms.remove(k);
            } else {
                out.terms.insert(*k, sum);
            }
        }
        out.normalized = false;
        Ok(out)
    }

    /// Appends a fresh register whose bit copies `source`'s current bit
    /// (a basis-aligned controlled flip from the ready state).
    pub fn append_copy(&self, source: &RegisterId, new: Register) -> Result<Self, Error> {
        let src = self.register_index(source).ok_or_else(|| Error::UnknownRegister {
            register: source.clone(),
            at_step: 0,
        })?;
        if self.register_index(&new.id).is_some() {
            return Err(Error::DuplicateRegister { register: new.id });
        }
        if self.registers.len() + 1 > MAX_REGISTERS {
            return Err(Error::TooManyRegisters {
                count: self.registers.len() + 1,
                max: MAX_REGISTERS,
            });
        }
        let new_index = self.registers.len();
        let mut registers = self.registers.clone();
        registers.push(new);
        let mut terms = BTreeMap::new();
        for (key, amp) in &self.terms {
            let copy_bit = (key >> src) & 1;
            terms.insert(key | (copy_bit << new_index), amp.clone());
        }
        Ok(StateVector {
            registers,
            terms,
            normalized: self.normalized,
        })
    }

    /// Appends a fresh register in a fixed basis state.
    pub fn append_fixed(&self, new: Register, value: Bit) -> Result<Self, Error> {
        if self.register_index(&new.id).is_some() {
            return Err(Error::DuplicateRegister { register: new.id });
        }
        if self.registers.len() + 1 > MAX_REGISTERS {
            return Err(Error::TooManyRegisters {
                count: self.registers.len() + 1,
                max: MAX_REGISTERS,
            });
        }
        let new_index = self.registers.len();
        let mut registers = self.registers.clone();
        registers.push(new);
        let set: Config = if value == Bit::One { 1 << new_index } else { 0 };
        let terms = self.terms.iter().map(|(k, a)| (k | set, a.clone())).collect();
        Ok(StateVector {
            registers,
            terms,
            normalized: self.normalized,
        })
    }

    /// Removes `record` after checking that its bit equals `source`'s bit
    /// in every term (the inverse of [`append_copy`](Self::append_copy)).
    pub fn remove_copy(
        &self,
        record: &RegisterId,
        source: &RegisterId,
        step: usize,
    ) -> Result<Self, Error> {
        let rec = self.register_index(record).ok_or_else(|| Error::UnknownRegister {
            register: record.clone(),
            at_step: step,
        })?;
        let src = self.register_index(source).ok_or_else(|| Error::UnknownRegister {
            register: source.clone(),
            at_step: step,
        })?;
        for key in self.terms.keys() {
            if (key >> rec) & 1 != (key >> src) & 1 {
                return Err(Error::OutsideRange { step });
            }
        }
        Ok(self.drop_register_bit(rec))
    }

    /// Removes a register position, repacking keys.  Callers must have
    /// checked that the register is disentangled.
    pub(crate) fn drop_register_bit(&self, index: usize) -> Self {
        let low_mask: Config = (1 << index) - 1;
        let mut registers = self.registers.clone();
        registers.remove(index);
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| ((k & low_mask) | ((k >> 1) & !low_mask), a.clone()))
            .collect();
        StateVector {
            registers,
            terms,
            normalized: self.normalized,
        }
    }

    /// Scales every amplitude (used by collapse renormalization and
    /// chain-evolution through logged collapses).
    pub(crate) fn scale(&self, factor: &A) -> Self {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .filter_map(|(k, a)| {
                let v = a.mul(factor);
                if v.is_zero() {
                    None
                } else {
                    Some((*k, v))
                }
            })
            .collect();
        out
    }

    /// Human-readable term list, e.g. `-1/6*sqrt6 |minus,minus,up>`.
    pub fn ket_strings(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|(key, amp)| {
                let mut s = String::new();
                s.push_str(&amp.to_string());
                s.push_str(" |");
                for (i, reg) in self.registers.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    let (l0, l1) = reg.display_labels();
                    s.push_str(if config_bit(*key, i) == Bit::Zero { l0 } else { l1 });
                }
                s.push('>');
                s
            })
            .collect()
    }
}

/// Validates that joint-basis states are orthonormal over the targets.
pub fn validate_joint_states<A: Amplitude>(states: &[JointKet]) -> Result<(), Error> {
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let mut inner = A::zero();
            for (bits_a, ca) in &a.terms {
                for (bits_b, cb) in &b.terms {
                    if bits_a == bits_b {
                        inner = inner.add(&A::from_quad(ca).conj().mul(&A::from_quad(cb)));
                    }
                }
            }
            let expected = if i == j { A::one() } else { A::zero() };
            if !inner.prob_eq(&expected) {
                return Err(Error::InvalidBasis {
                    reason: "joint states are not orthonormal",
                });
            }
        }
    }
    Ok(())
}
