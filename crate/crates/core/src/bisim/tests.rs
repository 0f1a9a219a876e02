use super::*;
use crate::lang::{load_program, Value};
use crate::models;
use crate::semantics::{InputPolicy, InputValue, Label, Options, StateKind};

fn n(l: &mut Lts) -> usize {
    l.add_plain_state(StateKind::Nondeterministic)
}

fn input(c: &str) -> Label {
    Label::Input { channel: c.into(), values: vec![InputValue::Bit(false)] }
}

#[test]
fn leading_tau_is_invisible_to_branching_but_not_strong() {
    let mut l = Lts::new();
    let (s0, s1, s2) = (n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(s0, Label::Tau, s1);
    l.add_transition(s1, input("a"), s2);
    let (t0, t1) = (n(&mut l), n(&mut l));
    l.add_transition(t0, input("a"), t1);
    assert!(check_pbb(&l, s0, t0, DEFAULT_TOL).equivalent);
    let strong = check_strong_bisim(&l, s0, t0, DEFAULT_TOL);
    assert!(!strong.equivalent);
    assert!(matches!(strong.witness.unwrap().mismatch, Mismatch::Branching { .. }));
}

#[test]
fn choice_timing_matters() {
    // a.(b + c) versus a.b + a.c
    let mut l = Lts::new();
    let (s0, s1, s2, s3) = (n(&mut l), n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(s0, input("a"), s1);
    l.add_transition(s1, input("b"), s2);
    l.add_transition(s1, input("c"), s3);
    let (t0, t1, t2, t3, t4) = (n(&mut l), n(&mut l), n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(t0, input("a"), t1);
    l.add_transition(t0, input("a"), t2);
    l.add_transition(t1, input("b"), t3);
    l.add_transition(t2, input("c"), t4);
    let v = check_pbb(&l, s0, t0, DEFAULT_TOL);
    assert!(!v.equivalent);
    assert!(matches!(v.witness.unwrap().mismatch, Mismatch::Branching { .. }));
}

#[test]
fn tau_that_discards_an_option_is_not_inert() {
    // τ.b + c versus b + c
    let mut l = Lts::new();
    let (s0, s1, s2, s3) = (n(&mut l), n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(s0, Label::Tau, s1);
    l.add_transition(s1, input("b"), s2);
    l.add_transition(s0, input("c"), s3);
    let (t0, t1, t2) = (n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(t0, input("b"), t1);
    l.add_transition(t0, input("c"), t2);
    assert!(!check_pbb(&l, s0, t0, DEFAULT_TOL).equivalent);
}

#[test]
fn probabilities_are_compared_per_class() {
    let mut l = Lts::new();
    let (s0, a, b) = (n(&mut l), n(&mut l), n(&mut l));
    let (x, y) = (n(&mut l), n(&mut l));
    l.add_transition(a, input("x"), x);
    l.add_transition(b, input("y"), y);
    let bit = |v| vec![Value::Bit(v)];
    l.add_output(s0, "c", vec![], vec![(bit(false), 0.5, a), (bit(true), 0.5, b)]);
    let (t0, c, d, z, w) = (n(&mut l), n(&mut l), n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(c, input("x"), z);
    l.add_transition(d, input("y"), w);
    l.add_output(t0, "c", vec![], vec![(bit(false), 0.25, c), (bit(true), 0.75, d)]);
    let v = check_pbb(&l, s0, t0, DEFAULT_TOL);
    assert!(!v.equivalent);
    assert!(matches!(v.witness.unwrap().mismatch, Mismatch::Probability { .. }));
}

#[test]
fn mu_of_probabilistic_state() {
    let mut l = Lts::new();
    let (s, a, b) = (n(&mut l), n(&mut l), n(&mut l));
    let p = l.add_output(s, "c", vec![], vec![(vec![Value::Bit(false)], 0.3, a), (vec![Value::Bit(true)], 0.7, b)]);
    assert!((mu(&l, p, a) - 0.3).abs() < 1e-12);
    assert!((mu(&l, p, b) - 0.7).abs() < 1e-12);
    assert_eq!(mu(&l, s, s), 1.0);
    assert_eq!(mu(&l, s, a), 0.0);
    let part = Partition::coarsest(l.len());
    assert!((mu_blocks(&l, p, &part)[&0] - 1.0).abs() < 1e-12);
}

#[test]
fn weak_closure_stops_at_probabilistic_states() {
    let mut l = Lts::new();
    let (s, a) = (n(&mut l), n(&mut l));
    let p = l.add_plain_state(StateKind::Probabilistic);
    l.add_transition(s, Label::Tau, a);
    l.add_transition(a, Label::Tau, p);
    assert_eq!(weak_closure(&l, s).into_iter().collect::<Vec<_>>(), vec![s, a]);
}

#[test]
fn fixpoint_satisfies_the_conditions() {
    let mut l = Lts::new();
    let (s0, s1, s2, s3) = (n(&mut l), n(&mut l), n(&mut l), n(&mut l));
    l.add_transition(s0, Label::Tau, s1);
    l.add_transition(s1, input("b"), s2);
    l.add_transition(s0, input("c"), s3);
    l.add_transition(s1, Label::Tau, s3);
    let part = refine(&l, Relation::Branching, DEFAULT_TOL);
    assert!(is_stable(&l, &part, Relation::Branching, DEFAULT_TOL));
    verify_branching(&l, &part, DEFAULT_TOL).unwrap();
    let strong = refine(&l, Relation::Strong, DEFAULT_TOL);
    assert!(strong.refines(&part));
}

#[test]
fn mixed_models_are_equivalent_but_not_under_eager_collapse() {
    let prog = load_program(models::MIXED_SRC).unwrap();
    let policy = InputPolicy::basis();
    let v = check_process_equiv(&prog, "PR", &prog, "QR", &policy, &EquivConfig::default()).unwrap();
    assert!(v.equivalent, "{:?}", v.first_failure());
    let cfg = EquivConfig { options: Options { eager_collapse: true, ..Options::default() }, ..EquivConfig::default() };
    let v = check_process_equiv(&prog, "PR", &prog, "QR", &policy, &cfg).unwrap();
    assert!(!v.equivalent);
    let w = v.first_failure().unwrap().witness.as_ref().unwrap();
    match &w.mismatch {
        Mismatch::Density { left_only, right_only, .. } => {
            assert!(!left_only.is_empty() && !right_only.is_empty());
        }
        other => panic!("expected a density mismatch, got {other:?}"),
    }
}

#[test]
fn interface_mismatch_is_reported() {
    let prog = load_program("process A(a:^[Qbit]) = 0\nprocess B(a:^[bit]) = 0").unwrap();
    let err = check_process_equiv(&prog, "A", &prog, "B", &InputPolicy::basis(), &EquivConfig::default());
    assert!(matches!(err, Err(BisimError::Interface(_))));
}

#[test]
fn free_bits_need_full_equivalence() {
    let prog = load_program(models::SUBSTITUTION_SRC).unwrap();
    let policy = InputPolicy::basis();
    let err = check_process_equiv(&prog, "FlipTwice", &prog, "Pass", &policy, &EquivConfig::default());
    assert!(matches!(err, Err(BisimError::FreeBits(_))));
    let v = check_full_equiv(&prog, "FlipTwice", &prog, "Pass", &policy, &EquivConfig::default()).unwrap();
    assert!(v.equivalent);
    assert_eq!(v.sigma_results.len(), 4);
    let v = check_full_equiv(&prog, "FlipJ", &prog, "Pass", &policy, &EquivConfig::default()).unwrap();
    assert!(!v.equivalent);
    assert!(v.sigma_results.iter().filter(|r| !r.equivalent).all(|r| r.input.starts_with("j=1")));
}
