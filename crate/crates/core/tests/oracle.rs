//! Independent cross-check of every bundled probability.
//!
//! The dense simulator in `common` re-derives each scenario's
//! conditionals from scratch.  The numbers here were frozen from that
//! oracle and the sparse engine must reproduce them.

mod common;

use common::{
    apply, assert_close, chain, ev, forward, fr_hist, fr_initial, fr_steps, retro,
    run, sorted_by_step, Dense, Ev, Step, B, C, FBAR_DOWN, FBAR_UP, F_UP, WBAR_MINUS, W_MINUS,
    W_PLUS,
};
use frlogic_core::amplitude::{Amplitude, FloatAmp};
use frlogic_core::scenario;

#[test]
fn dense_final_state_matches_the_engine_exactly() {
    let h = fr_hist();
    let dense = &h.snaps[4];
    let engine = scenario::fr_full().run_float().unwrap();
    let final_state = engine.history.snapshot(4).unwrap();
    for idx in 0..16u32 {
        let a: FloatAmp = final_state.amplitude(idx);
        assert_close(a.re, dense.amps[idx as usize].re, "re");
        assert_close(a.im, dense.amps[idx as usize].im, "im");
    }
    let s = 1.0 / 12f64.sqrt();
    assert_close(dense.amps[0].re, 3.0 * s, "all-up amplitude");
    assert_close(dense.amps[10].re, -s, "up-down pattern");
    assert_close(dense.amps[5].re, -s, "down-up pattern");
    assert_close(dense.amps[15].re, -s, "all-down pattern");
}

#[test]
fn dense_joint_observer_distribution() {
    let h = fr_hist();
    let mut joint = [0.0f64; 4];
    for (idx, a) in h.snaps[4].amps.iter().enumerate() {
        joint[(idx >> 2 & 1) << 1 | idx >> 3 & 1] += a.norm_sq();
    }
    assert_close(joint[0], 3.0 / 4.0, "plus plus");
    assert_close(joint[1], 1.0 / 12.0, "plus minus");
    assert_close(joint[2], 1.0 / 12.0, "minus plus");
    assert_close(joint[3], 1.0 / 12.0, "minus minus");
}

#[test]
fn dense_chained_statements_all_hold() {
    let h = fr_hist();
    let (q1, p1) = retro(&h, &[WBAR_MINUS, W_MINUS], WBAR_MINUS);
    assert_close(q1, 1.0 / 12.0, "restated premise weight");
    assert_close(p1, 1.0, "restated conditional");
    let (q2, p2) = retro(&h, &[WBAR_MINUS], F_UP);
    assert_close(q2, 1.0 / 6.0, "observer premise weight");
    assert_close(p2, 1.0, "observer conditional");
    let (q3, p3) = retro(&h, &[F_UP], FBAR_DOWN);
    assert_close(q3, 1.0 / 3.0, "friend premise weight");
    assert_close(p3, 1.0, "friend conditional");
    let (q4, p4) = forward(&h, &[FBAR_DOWN], W_PLUS);
    assert_close(q4, 2.0 / 3.0, "barred premise weight");
    assert_close(p4, 1.0, "barred conditional");
    let (qb, pb) = retro(&h, &[W_MINUS], FBAR_UP);
    assert_close(qb, 1.0 / 6.0, "reversed premise weight");
    assert_close(pb, 1.0, "reversed retro conditional");
    let (_, pbf) = forward(&h, &[W_MINUS], FBAR_UP);
    assert_close(pbf, 1.0, "reversed forward conditional");
}

#[test]
fn dense_transitive_compositions_halve() {
    let h = fr_hist();
    let (_, c12) = retro(&h, &[WBAR_MINUS, W_MINUS], F_UP);
    assert_close(c12, 0.5, "first composition");
    let (_, c23) = retro(&h, &[WBAR_MINUS], FBAR_DOWN);
    assert_close(c23, 0.5, "second composition");
    let (_, c34) = retro(&h, &[F_UP], W_PLUS);
    assert_close(c34, 0.5, "third composition");
    // Forward readings of the same compositions.
    let (_, f12) = forward(&h, &[WBAR_MINUS, W_MINUS], F_UP);
    assert_close(f12, 1.0, "first composition, forward");
    let (_, f23) = forward(&h, &[WBAR_MINUS], FBAR_DOWN);
    assert_close(f23, 2.0, "second composition exceeds one read forward");
    let (_, f34) = forward(&h, &[F_UP], W_PLUS);
    assert_close(f34, 0.5, "third composition, forward");
    // Premise shift: how much of each later premise lies outside the
    // earlier one.
    for (first, second) in [
        (vec![WBAR_MINUS, W_MINUS], vec![WBAR_MINUS]),
        (vec![WBAR_MINUS], vec![F_UP]),
        (vec![F_UP], vec![FBAR_DOWN]),
    ] {
        let q2 = chain(&h, &sorted_by_step(&second));
        let mut merged = first.clone();
        merged.extend(second.iter().copied());
        let overlap = chain(&h, &sorted_by_step(&merged));
        assert_close(1.0 - overlap / q2, 0.5, "premise shift");
    }
}

#[test]
fn dense_disturbance_defects() {
    let h = fr_hist();
    let defect = |obs_q: usize, obs_step: usize, later: Ev| {
        let alone = chain(&h, &[later]);
        let split: f64 = (0..2)
            .map(|bit| chain(&h, &[ev(obs_step, obs_q, bit), later]))
            .sum();
        (alone - split).abs()
    };
    assert_close(defect(0, 1, WBAR_MINUS), 1.0 / 3.0, "barred friend vs observer");
    assert_close(defect(1, 2, W_MINUS), 1.0 / 3.0, "friend vs observer");
    assert_close(defect(1, 2, WBAR_MINUS), 0.0, "friend vs barred observer");
    assert_close(defect(2, 3, W_MINUS), 0.0, "record vs observer");
}

#[test]
fn dense_conjunction_of_all_premises() {
    let h = fr_hist();
    let (q, p) = retro(&h, &[F_UP, WBAR_MINUS, W_MINUS], FBAR_DOWN);
    assert_close(q, 1.0 / 12.0, "joint premise weight");
    assert_close(p, 0.5, "conclusion given every premise");
}

#[test]
fn dense_two_branch_subexperiment() {
    let a = C::real(1.0 / 2f64.sqrt());
    let h = run(Dense::from_terms(4, &[(1, a), (3, a)]), &fr_steps());
    let s = 1.0 / 2f64.sqrt();
    assert_close(h.snaps[4].amps[0].re, s, "all-up amplitude");
    assert_close(h.snaps[4].amps[5].re, -s, "alternating amplitude");

    let (q3, p3) = retro(&h, &[F_UP], FBAR_DOWN);
    assert_close(q3, 0.5, "friend-up weight");
    assert_close(p3, 1.0, "friend-up pins barred down");
    let (q4, p4) = forward(&h, &[FBAR_DOWN], F_UP);
    assert_close(q4, 1.0, "barred-down weight");
    assert_close(p4, 0.5, "barred down only sometimes gives friend up");
    let (_, pc) = retro(&h, &[F_UP], F_UP);
    assert_close(pc, 1.0, "self composition");

    // Case split on the friend's record versus ignoring it.
    let (ql, pl) = forward(&h, &[F_UP], W_PLUS);
    let (qr, pr) = forward(&h, &[ev(2, 1, 1)], W_PLUS);
    assert_close(pl, 0.5, "friend-up branch");
    assert_close(pr, 0.5, "friend-down branch");
    let classical = (ql * pl + qr * pr) / (ql + qr);
    assert_close(classical, 0.5, "branch average");
    assert_close(chain(&h, &[W_PLUS]), 1.0, "unconditioned conclusion");

    let alone = chain(&h, &[W_PLUS]);
    let split: f64 = (0..2).map(|b| chain(&h, &[ev(2, 1, b), W_PLUS])).sum();
    assert_close((alone - split).abs(), 0.5, "friend record defect");
}

#[test]
fn dense_three_spin_chain() {
    // Qubits: 0, 1, 2; all agents absorb in z, so the gates are trivial
    // and every conditional is classical branch counting.
    let steps = [Step::Id, Step::Id, Step::Id];
    let even = run(
        Dense::from_terms(
            3,
            &[
                (0, C::real(1.0 / 2f64.sqrt())),
                (5, C::real(1.0 / 2f64.sqrt())),
            ],
        ),
        &steps,
    );
    let (qa, pa) = forward(&even, &[ev(1, 0, 0)], ev(2, 1, 0));
    assert_close(qa, 0.5, "first-up weight");
    assert_close(pa, 1.0, "first up gives second up");
    let (_, pt) = forward(&even, &[ev(1, 0, 0)], ev(3, 2, 0));
    assert_close(pt, 1.0, "first up gives third up");
    let (qb, pb) = forward(&even, &[ev(2, 1, 0)], ev(3, 2, 0));
    assert_close(qb, 1.0, "second-up weight");
    assert_close(pb, 0.5, "second up only half-pins third");
    let (_, pj) = retro(&even, &[ev(2, 1, 0), ev(1, 0, 0)], ev(3, 2, 0));
    assert_close(pj, 1.0, "both premises pin the third");

    let skew = run(
        Dense::from_terms(
            3,
            &[
                (0, C::real(0.1f64.sqrt())),
                (5, C::real(0.9f64.sqrt())),
            ],
        ),
        &steps,
    );
    let (_, pb9) = forward(&skew, &[ev(2, 1, 0)], ev(3, 2, 0));
    assert_close(pb9, 0.1, "skewed chain is ninety percent wrong");
    let shift_q = chain(&skew, &[ev(2, 1, 0)]);
    let overlap = chain(&skew, &[ev(1, 0, 0), ev(2, 1, 0)]);
    assert_close(1.0 - overlap / shift_q, 0.9, "premise shift in the skewed chain");
}

#[test]
fn dense_referee_readings() {
    let a = C::real(1.0 / 3f64.sqrt());
    let initial = || Dense::from_terms(2, &[(2, a), (1, a), (3, a)]);

    let zz = run(initial(), &[Step::Id, Step::Id]);
    let (q, p) = retro(&zz, &[ev(2, 1, 0)], ev(1, 0, 1));
    assert_close(q, 1.0 / 3.0, "z reading weight");
    assert_close(p, 1.0, "unbarred up pins barred down");

    let zx = run(initial(), &[Step::Rotate(0), Step::Id]);
    let s6 = 1.0 / 6f64.sqrt();
    assert_close(zx.snaps[2].amps[2].re, 2.0 * s6, "plus-down amplitude");
    assert_close(zx.snaps[2].amps[0].re, s6, "plus-up amplitude");
    assert_close(zx.snaps[2].amps[1].re, -s6, "minus-up amplitude");
    let (q, p) = forward(&zx, &[ev(1, 0, 1)], ev(2, 1, 0));
    assert_close(q, 1.0 / 6.0, "barred minus weight");
    assert_close(p, 1.0, "barred minus pins unbarred up");

    let xz = run(initial(), &[Step::Id, Step::Rotate(1)]);
    assert_close(xz.snaps[2].amps[0].re, s6, "up-plus amplitude");
    assert_close(xz.snaps[2].amps[2].re, -s6, "up-minus amplitude");
    assert_close(xz.snaps[2].amps[1].re, 2.0 * s6, "down-plus amplitude");
    let (q, p) = forward(&xz, &[ev(1, 0, 1)], ev(2, 1, 0));
    assert_close(q, 2.0 / 3.0, "barred down weight");
    assert_close(p, 1.0, "barred down pins unbarred plus");
}

#[test]
fn dense_referee_observation_run() {
    // Qubits: 0 barred, 1 unbarred, 2 friend-record copy, 3 barred
    // observer record, 4 copy of that record.
    let a = C::real(1.0 / 3f64.sqrt());
    let steps = [
        Step::Id,
        Step::Id,
        Step::Copy {
            q: 1,
            anc: 2,
            b: B::Z,
        },
        Step::Copy {
            q: 0,
            anc: 3,
            b: B::X,
        },
        Step::Copy {
            q: 3,
            anc: 4,
            b: B::Z,
        },
    ];
    let h = run(Dense::from_terms(5, &[(2, a), (1, a), (3, a)]), &steps);
    let s6 = 1.0 / 6f64.sqrt();
    // up,down,down-copy,plus,plus-copy with weight 2 and the two
    // interference leftovers.
    assert_close(h.snaps[5].amps[0b00110].re, 2.0 * s6, "main branch");
    assert_close(h.snaps[5].amps[0b00000].re, s6, "all-up branch");
    assert_close(h.snaps[5].amps[0b11001].re, -s6, "alternating branch");

    let (q, p) = retro(&h, &[Ev { step: 5, q: 4, b: B::Z, bit: 1 }], ev(3, 2, 0));
    assert_close(q, 1.0 / 6.0, "copied minus weight");
    assert_close(p, 1.0, "copied minus pins the friend record up");

    let minus_weight = chain(&h, &[Ev { step: 5, q: 3, b: B::Z, bit: 1 }]);
    assert_close(minus_weight, 1.0 / 6.0, "watched marginal is untouched");
}

#[test]
fn dense_phase_sweep_derives_the_conditional_formula() {
    for k in 0..=12 {
        let phi = k as f64 * std::f64::consts::PI / 12.0;
        let mag = 1.0 / 3f64.sqrt();
        let initial = Dense::from_terms(
            4,
            &[
                (2, C::real(mag)),
                (1, C::polar(mag, phi)),
                (3, C::polar(mag, phi)),
            ],
        );
        let h = run(initial, &fr_steps());
        let (q, p) = retro(&h, &[WBAR_MINUS], F_UP);
        let denom = 3.0 - 2.0 * phi.cos();
        assert_close(q, denom / 6.0, "premise weight at this phase");
        assert_close(p, 1.0 / denom, "conditional at this phase");
    }
}

#[test]
fn dense_collapse_branches() {
    let collapse_first = |bit: usize| {
        let mut steps = fr_steps();
        steps[0] = Step::Collapse { q: 0, bit };
        steps
    };
    let up = run(fr_initial(), &collapse_first(0));
    let (q2, p2) = retro(&up, &[WBAR_MINUS], F_UP);
    assert_close(q2, 0.5, "up branch: observer minus weight");
    assert_close(p2, 0.0, "up branch: observer minus never sees friend up");
    assert_close(chain(&up, &[F_UP]), 0.0, "up branch: friend never reads up");
    assert_close(chain(&up, &[FBAR_DOWN]), 0.0, "up branch: barred never down");

    let down = run(fr_initial(), &collapse_first(1));
    let (q2, p2) = retro(&down, &[WBAR_MINUS], F_UP);
    assert_close(q2, 0.5, "down branch: observer minus weight");
    assert_close(p2, 0.5, "down branch: only half the minus runs saw up");
    let (q3, p3) = retro(&down, &[F_UP], FBAR_DOWN);
    assert_close(q3, 0.5, "down branch: friend-up weight");
    assert_close(p3, 1.0, "down branch: friend up still pins barred down");
    let (q4, p4) = forward(&down, &[FBAR_DOWN], W_PLUS);
    assert_close(q4, 1.0, "down branch: barred-down weight");
    assert_close(p4, 1.0, "down branch: the final plus is still certain");

    let mut both = collapse_first(1);
    both[1] = Step::Collapse { q: 1, bit: 1 };
    let dd = run(fr_initial(), &both);
    let (q2, p2) = retro(&dd, &[WBAR_MINUS], F_UP);
    assert_close(q2, 0.5, "double branch: observer minus weight");
    assert_close(p2, 0.0, "double branch: friend up is gone");
    assert_close(chain(&dd, &[F_UP]), 0.0, "double branch: no friend-up runs");
    let (q4, p4) = forward(&dd, &[FBAR_DOWN], W_PLUS);
    assert_close(q4, 1.0, "double branch: barred-down weight");
    assert_close(p4, 0.5, "double branch: the final plus is a coin flip");
}

#[test]
fn engine_float_statements_match_the_dense_numbers() {
    // Every bundled scenario must reproduce, in the float backend, the
    // same premise weights and conditionals this file derives densely.
    for s in scenario::bundled() {
        let run = s.run_float().unwrap();
        assert!(
            run.passed(),
            "{} float run mismatches: {:?}",
            s.name,
            run.mismatches()
        );
    }
}

#[test]
fn engine_exact_values_convert_to_the_dense_numbers() {
    let run = scenario::fr_full().run_exact().unwrap();
    let h = fr_hist();
    let expected = [
        retro(&h, &[WBAR_MINUS, W_MINUS], WBAR_MINUS),
        retro(&h, &[WBAR_MINUS], F_UP),
        retro(&h, &[F_UP], FBAR_DOWN),
        forward(&h, &[FBAR_DOWN], W_PLUS),
    ];
    for (result, (q, p)) in run.statements.iter().zip(expected) {
        assert_close(
            result.verdict.premise_probability.to_f64(),
            q,
            "premise weight",
        );
        assert_close(
            result.verdict.conditional.as_ref().unwrap().to_f64(),
            p,
            "conditional",
        );
    }
}

#[test]
fn engine_swapped_commuting_steps_agree_with_dense() {
    // Swapping the two friend steps, or the two observer steps, leaves
    // the dense final state unchanged, so the engine's swap checks rest
    // on the same fact.
    let base = fr_hist().snaps[4].clone();
    for (a, b) in [(0usize, 1usize), (2, 3)] {
        let mut steps = fr_steps();
        steps.swap(a, b);
        let swapped = run(fr_initial(), &steps).snaps[4].clone();
        for idx in 0..16 {
            assert_close(
                swapped.amps[idx].re,
                base.amps[idx].re,
                "swapped amplitude",
            );
        }
    }
}

#[test]
fn dense_gates_are_unitary() {
    let mut state = fr_initial();
    let norm = state.norm_sq();
    for step in fr_steps() {
        apply(&mut state, step);
        assert_close(state.norm_sq(), norm, "norm after a step");
    }
}
