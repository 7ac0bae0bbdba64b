//! A deliberately naive dense simulator used to cross-check the sparse
//! engine: complex f64 vectors, explicit Hadamard and controlled-not
//! gates, no sparse bookkeeping.

// Each test binary uses a different slice of this module.
#![allow(dead_code)]

pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub const ZERO: C = C { re: 0.0, im: 0.0 };

    pub fn real(x: f64) -> C {
        C { re: x, im: 0.0 }
    }

    pub fn polar(mag: f64, phase: f64) -> C {
        C {
            re: mag * phase.cos(),
            im: mag * phase.sin(),
        }
    }

    pub fn add(self, o: C) -> C {
        C {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    pub fn sub(self, o: C) -> C {
        C {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }

    pub fn scale(self, k: f64) -> C {
        C {
            re: self.re * k,
            im: self.im * k,
        }
    }

    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

#[derive(Clone)]
pub struct Dense {
    pub n: usize,
    pub amps: Vec<C>,
}

impl Dense {
    /// Qubit `i` is bit `i` of the index, matching the engine's packing.
    pub fn from_terms(n: usize, terms: &[(usize, C)]) -> Dense {
        let mut amps = vec![C::ZERO; 1 << n];
        for (idx, a) in terms {
            amps[*idx] = *a;
        }
        Dense { n, amps }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sq()).sum()
    }

    pub fn hadamard(&mut self, q: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mask = 1usize << q;
        for idx in 0..self.amps.len() {
            if idx & mask == 0 {
                let lo = self.amps[idx];
                let hi = self.amps[idx | mask];
                self.amps[idx] = lo.add(hi).scale(s);
                self.amps[idx | mask] = lo.sub(hi).scale(s);
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let c = 1usize << control;
        let t = 1usize << target;
        for idx in 0..self.amps.len() {
            if idx & c != 0 && idx & t == 0 {
                self.amps.swap(idx, idx | t);
            }
        }
    }

    /// Keeps only configurations whose qubit `q` reads `bit` in `basis`.
    pub fn project(&self, q: usize, basis: B, bit: usize) -> Dense {
        let mut out = self.clone();
        if basis == B::X {
            out.hadamard(q);
        }
        let mask = 1usize << q;
        for idx in 0..out.amps.len() {
            if (idx & mask != 0) != (bit == 1) {
                out.amps[idx] = C::ZERO;
            }
        }
        if basis == B::X {
            out.hadamard(q);
        }
        out
    }

    pub fn renormalize(&mut self) {
        let k = 1.0 / self.norm_sq().sqrt();
        for a in &mut self.amps {
            *a = a.scale(k);
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
pub enum B {
    Z,
    X,
}

#[derive(Clone, Copy)]
pub enum Step {
    /// Absorbing z reading: pure relabeling, no amplitude change.
    Id,
    /// Absorbing x reading: rotate the qubit into the x frame.
    Rotate(usize),
    /// Non-disturbing reading: correlate a fresh ancilla with the target
    /// in the given frame.
    Copy { q: usize, anc: usize, b: B },
    /// Projective reading with renormalization.
    Collapse { q: usize, bit: usize },
}

pub fn apply(state: &mut Dense, step: Step) {
    match step {
        Step::Id => {}
        Step::Rotate(q) => state.hadamard(q),
        Step::Copy { q, anc, b } => {
            if b == B::X {
                state.hadamard(q);
            }
            state.cnot(q, anc);
        }
        Step::Collapse { q, bit } => {
            *state = state.project(q, B::Z, bit);
            state.renormalize();
        }
    }
}

pub fn unapply(state: &mut Dense, step: Step) {
    match step {
        Step::Id => {}
        Step::Rotate(q) => state.hadamard(q),
        Step::Copy { q, anc, b } => {
            state.cnot(q, anc);
            if b == B::X {
                state.hadamard(q);
            }
        }
        Step::Collapse { .. } => panic!("cannot invert a collapse"),
    }
}

pub struct Hist {
    pub snaps: Vec<Dense>,
    pub steps: Vec<Step>,
}

pub fn run(initial: Dense, steps: &[Step]) -> Hist {
    let mut snaps = vec![initial];
    for step in steps {
        let mut next = snaps.last().unwrap().clone();
        apply(&mut next, *step);
        snaps.push(next);
    }
    Hist {
        snaps,
        steps: steps.to_vec(),
    }
}

/// An outcome at a step: qubit `q` read `bit` in `b` right after step
/// `step` acted.
#[derive(Clone, Copy)]
pub struct Ev {
    pub step: usize,
    pub q: usize,
    pub b: B,
    pub bit: usize,
}

pub fn ev(step: usize, q: usize, bit: usize) -> Ev {
    Ev {
        step,
        q,
        b: B::Z,
        bit,
    }
}

/// Joint weight of a chronological event chain, by interleaving
/// projections with the step gates.
pub fn chain(h: &Hist, events: &[Ev]) -> f64 {
    let Some(first) = events.first() else {
        return h.snaps[0].norm_sq();
    };
    let mut state = h.snaps[first.step].clone();
    let mut at = first.step;
    for e in events {
        assert!(e.step >= at, "chain events must be in time order");
        for k in at..e.step {
            apply(&mut state, h.steps[k]);
        }
        at = e.step;
        state = state.project(e.q, e.b, e.bit);
    }
    state.norm_sq()
}

/// Premise weight and retrodictive conditional: project the premises in
/// order, carry the result to the conclusion's step, and read the
/// conclusion there.
pub fn retro(h: &Hist, premises: &[Ev], concl: Ev) -> (f64, f64) {
    let mut sorted = premises.to_vec();
    sorted.sort_by_key(|e| e.step);
    let first = sorted[0];
    let mut state = h.snaps[first.step].clone();
    let mut at = first.step;
    for e in &sorted {
        for k in at..e.step {
            apply(&mut state, h.steps[k]);
        }
        at = e.step;
        state = state.project(e.q, e.b, e.bit);
    }
    let q = state.norm_sq();
    if q < TOL {
        return (0.0, f64::NAN);
    }
    if concl.step >= at {
        for k in at..concl.step {
            apply(&mut state, h.steps[k]);
        }
    } else {
        for k in (concl.step..at).rev() {
            unapply(&mut state, h.steps[k]);
        }
    }
    let p = state.project(concl.q, concl.b, concl.bit).norm_sq() / q;
    (q, p)
}

/// Premise weight and forward conditional: the merged chronological chain
/// over the premise chain.  The ratio can exceed one.
pub fn forward(h: &Hist, premises: &[Ev], concl: Ev) -> (f64, f64) {
    let q = chain(h, &sorted_by_step(premises));
    if q < TOL {
        return (0.0, f64::NAN);
    }
    let mut merged = premises.to_vec();
    merged.push(concl);
    (q, chain(h, &sorted_by_step(&merged)) / q)
}

pub fn sorted_by_step(events: &[Ev]) -> Vec<Ev> {
    let mut out = events.to_vec();
    out.sort_by_key(|e| e.step);
    out
}

pub fn assert_close(actual: f64, expected: f64, what: &str) {
    assert!(
        (actual - expected).abs() < TOL,
        "{what}: {actual} vs {expected}"
    );
}

// Friend/Wigner layout: qubit 0 barred spin, 1 unbarred spin, 2 barred
// observer's record, 3 unbarred observer's record.
pub fn fr_steps() -> Vec<Step> {
    vec![
        Step::Id,
        Step::Id,
        Step::Copy {
            q: 0,
            anc: 2,
            b: B::X,
        },
        Step::Copy {
            q: 1,
            anc: 3,
            b: B::X,
        },
    ]
}

pub fn fr_initial() -> Dense {
    let a = C::real(1.0 / 3f64.sqrt());
    // barred up & unbarred down (idx 2), barred down & up (1), both down (3)
    Dense::from_terms(4, &[(2, a), (1, a), (3, a)])
}

pub fn fr_hist() -> Hist {
    run(fr_initial(), &fr_steps())
}

pub const FBAR_DOWN: Ev = Ev {
    step: 1,
    q: 0,
    b: B::Z,
    bit: 1,
};
pub const FBAR_UP: Ev = Ev {
    step: 1,
    q: 0,
    b: B::Z,
    bit: 0,
};
pub const F_UP: Ev = Ev {
    step: 2,
    q: 1,
    b: B::Z,
    bit: 0,
};
pub const WBAR_MINUS: Ev = Ev {
    step: 3,
    q: 2,
    b: B::Z,
    bit: 1,
};
pub const W_MINUS: Ev = Ev {
    step: 4,
    q: 3,
    b: B::Z,
    bit: 1,
};
pub const W_PLUS: Ev = Ev {
    step: 4,
    q: 3,
    b: B::Z,
    bit: 0,
};
