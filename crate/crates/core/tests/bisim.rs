use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use cqp::bisim::{
    check_full_equiv, check_pbb, check_process_equiv, check_strong_bisim, context_regression, find_witness, is_stable,
    mu, refine, standard_contexts, verify_branching, visible, weak_closure, EquivConfig, Mismatch, Relation, Side,
    DEFAULT_TOL,
};
use cqp::lang::{load_program, Value};
use cqp::models;
use cqp::qstate::DensityMatrix;
use cqp::semantics::{
    canonicalize, prob_branches, Configuration, InputPolicy, InputValue, Label, Limits, Lts, Options, Semantics,
    StateKind,
};

fn chans(ns: &[&str]) -> Vec<Value> {
    ns.iter().map(|n| Value::Chan(n.to_string())).collect()
}

fn semantics(src: &str, policy: InputPolicy) -> Semantics {
    Semantics::new(load_program(src).unwrap(), policy, Options::default())
}

fn union(sem: &Semantics, left: &str, right: &str, args: &[&str]) -> (Lts, usize, usize) {
    let l = sem.explore(left, &chans(args), Limits::default()).unwrap();
    let r = sem.explore(right, &chans(args), Limits::default()).unwrap();
    let (u, off) = l.disjoint_union(&r);
    (u, l.initial, r.initial + off)
}

fn single(policy: &InputPolicy, name: &str) -> InputPolicy {
    policy.singletons().into_iter().find(|p| p.names() == [name]).unwrap()
}

#[test]
fn measurement_branches_carry_born_weights() {
    let src = "process M(c:^[bit]) = (qbit q).{q *= [[0.6, -0.8], [0.8, 0.6]]}.c![measure q].0";
    let sem = semantics(src, InputPolicy::basis());
    let lts = sem.explore("M", &chans(&["c"]), Limits::default()).unwrap();
    let out = lts.transitions().iter().find(|t| matches!(t.label, Label::Output { .. })).unwrap();
    assert_eq!(lts.kind(out.dst), StateKind::Probabilistic);
    let weights: Vec<f64> = out.branches.iter().map(|b| mu(&lts, out.dst, b.target)).collect();
    assert!((weights[0] - 0.36).abs() < 1e-9 && (weights[1] - 0.64).abs() < 1e-9, "{weights:?}");
    assert_eq!(mu(&lts, out.branches[0].target, out.branches[0].target), 1.0);
    assert_eq!(mu(&lts, out.branches[0].target, out.branches[1].target), 0.0);
}

#[test]
fn weak_closure_of_an_input_prefix_is_itself() {
    let sem = semantics(models::QECC_SRC, InputPolicy::basis());
    let lts = sem.explore("Identity", &chans(&["a", "d"]), Limits::default()).unwrap();
    assert_eq!(weak_closure(&lts, lts.initial), BTreeSet::from([lts.initial]));
}

#[test]
fn weak_closure_follows_tau_chains() {
    let mut l = Lts::new();
    let ids: Vec<usize> = (0..4).map(|_| l.add_plain_state(StateKind::Nondeterministic)).collect();
    l.add_transition(ids[0], Label::Tau, ids[1]);
    l.add_transition(ids[1], Label::Tau, ids[2]);
    l.add_transition(ids[2], Label::Input { channel: "c".into(), values: vec![] }, ids[3]);
    assert_eq!(weak_closure(&l, ids[0]), BTreeSet::from([ids[0], ids[1], ids[2]]));
    assert_eq!(weak_closure(&l, ids[3]), BTreeSet::from([ids[3]]));
}

#[test]
fn measuring_with_and_without_hadamard_is_not_strongly_bisimilar() {
    let sem = semantics(models::MIXED_SRC, InputPolicy::tomographic());
    let (u, s, t) = union(&sem, "P", "Q", &["a"]);
    assert!(check_pbb(&u, s, t, DEFAULT_TOL).equivalent);
    assert!(!check_strong_bisim(&u, s, t, DEFAULT_TOL).equivalent);
}

#[test]
fn different_classical_outputs_are_told_apart_by_label() {
    let src = "process Zero(c:^[bit]) = c![0].0\nprocess One(c:^[bit]) = c![1].0";
    let sem = semantics(src, InputPolicy::basis());
    let (u, s, t) = union(&sem, "Zero", "One", &["c"]);
    let v = check_pbb(&u, s, t, DEFAULT_TOL);
    assert!(!v.equivalent);
    let w = v.witness.unwrap();
    assert!(w.trace.is_empty());
    match w.mismatch {
        Mismatch::Unmatched { label, side } => {
            assert_eq!(side, Side::Left);
            assert_eq!(label, "c!{[0]}");
        }
        m => panic!("{m:?}"),
    }
}

#[test]
fn a_process_is_equivalent_to_itself() {
    let prog = load_program(models::QECC_SRC).unwrap();
    let v = check_process_equiv(&prog, "Identity", &prog, "Identity", &InputPolicy::tomographic(), &EquivConfig::default())
        .unwrap();
    assert!(v.equivalent);
    assert_eq!(v.sigma_results.len(), 5);
    assert!(v.sigma_results.iter().all(|r| r.witness.is_none()));
}

#[test]
fn full_equivalence_ranges_over_free_bits() {
    let prog = load_program(models::SUBSTITUTION_SRC).unwrap();
    let cfg = EquivConfig::default();
    let policy = InputPolicy::basis();
    assert!(check_process_equiv(&prog, "FlipTwice", &prog, "Pass", &policy, &cfg).is_err());
    let twice = check_full_equiv(&prog, "FlipTwice", &prog, "Pass", &policy, &cfg).unwrap();
    assert!(twice.equivalent);
    let once = check_full_equiv(&prog, "FlipJ", &prog, "Pass", &policy, &cfg).unwrap();
    assert!(!once.equivalent);
    let failing: Vec<&str> =
        once.sigma_results.iter().filter(|r| !r.equivalent).map(|r| r.input.as_str()).collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|i| i.contains("j=1")), "{failing:?}");
}

fn replay(sem: &Semantics, lts: &Lts, start: usize, path: &[(Label, usize)]) -> Configuration {
    let mut cur = lts.state(start).config.clone();
    for (label, id) in path {
        let want = lts.state(*id).config.key();
        let next: Vec<Configuration> = match label {
            Label::Prob(_) => prob_branches(&cur)
                .unwrap()
                .into_iter()
                .map(|(_, m)| canonicalize(Configuration::Mixed(m)))
                .collect(),
            _ => sem.transitions(&cur).unwrap().into_iter().filter(|(l, _)| l == label).map(|(_, c)| c).collect(),
        };
        cur = next.into_iter().find(|c| c.key() == want).unwrap_or_else(|| panic!("cannot replay {label}"));
    }
    cur
}

fn output_densities(sem: &Semantics, c: &Configuration, label: &str) -> Vec<DensityMatrix> {
    let (_, next) = sem
        .transitions(c)
        .unwrap()
        .into_iter()
        .find(|(l, _)| visible(l).as_deref() == Some(label))
        .unwrap_or_else(|| panic!("no {label}"));
    match next {
        Configuration::Mixed(m) => vec![m.env_density()],
        Configuration::Probabilistic(bs) => bs.iter().map(|b| b.mixture.env_density()).collect(),
    }
}

#[test]
fn density_witnesses_replay_through_the_semantics() {
    let policy = single(&InputPolicy::tomographic(), "|0>");
    let sem = semantics(models::QECC2_SRC, policy);
    let (u, s, t) = union(&sem, "QECC2", "Identity", &["a", "d"]);
    let v = check_pbb(&u, s, t, DEFAULT_TOL);
    assert!(!v.equivalent);
    let w = v.witness.unwrap();
    let (label, left_only) = match &w.mismatch {
        Mismatch::Density { label, left_only, .. } => (label.clone(), left_only.clone()),
        m => panic!("{m:?}"),
    };
    let observed: Vec<String> = w.left_path.iter().filter_map(|(l, _)| visible(l)).collect();
    assert_eq!(observed, w.trace);
    let left = output_densities(&sem, &replay(&sem, &u, s, &w.left_path), &label);
    let right = output_densities(&sem, &replay(&sem, &u, t, &w.right_path), &label);
    for d in &left_only {
        assert!(left.iter().any(|e| e.approx_eq(d, 1e-9)));
        assert!(!right.iter().any(|e| e.approx_eq(d, 1e-9)));
    }
}

#[test]
fn qecc_and_identity_share_one_class_per_observation() {
    let sem = semantics(models::QECC_SRC, InputPolicy::tomographic());
    let (u, s, t) = union(&sem, "QECC", "Identity", &["a", "d"]);
    let part = refine(&u, Relation::Branching, DEFAULT_TOL);
    assert!(part.same(s, t));
    let mut history: BTreeMap<usize, BTreeSet<Vec<String>>> = BTreeMap::new();
    let mut stack = vec![(s, vec![]), (t, vec![])];
    while let Some((id, h)) = stack.pop() {
        if !history.entry(id).or_default().insert(h.clone()) {
            continue;
        }
        for tr in u.outgoing(id) {
            let mut h2 = h.clone();
            h2.extend(visible(&tr.label));
            stack.push((tr.dst, h2));
        }
    }
    assert_eq!(part.num_blocks(), 6);
    let mut after_output = 0;
    for block in part.blocks() {
        let seen: BTreeSet<Vec<String>> = block.iter().flat_map(|id| history[id].clone()).collect();
        match seen.iter().next().unwrap().len() {
            0 | 1 => assert_eq!(seen.len(), 1, "{seen:?}"),
            _ => {
                after_output += 1;
                assert_eq!(seen.len(), 4);
            }
        }
    }
    assert_eq!(after_output, 1);
}

#[test]
fn equivalent_processes_stay_equivalent_in_context() {
    let src = "process A(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0\n\
               process B(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].{x *= H}.{x *= H}.d![x].0\n\
               process C(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].{x *= X}.d![x].0";
    let prog = load_program(src).unwrap();
    let policy = InputPolicy::tomographic();
    let cfg = EquivConfig::default();
    let same = context_regression(&prog, "A", "B", &standard_contexts(), &policy, &cfg).unwrap();
    let mut skipped = 0;
    for r in &same {
        match &r.outcome {
            Ok(v) => assert!(v.equivalent, "{}", r.context),
            Err(_) => skipped += 1,
        }
    }
    assert_eq!(skipped, 1);
    assert!(same.iter().any(|r| r.context == "shared-qubit" && r.outcome.is_err()));
    let diff = context_regression(&prog, "A", "C", &standard_contexts(), &policy, &cfg).unwrap();
    let prefixed = diff.iter().find(|r| r.context == "input-prefix").unwrap();
    assert!(!prefixed.outcome.as_ref().unwrap().equivalent);
}

#[derive(Clone, Debug)]
enum Edge {
    Tau(usize, usize),
    Input(usize, bool, usize),
    Output(usize, usize, usize, bool),
    Coin(usize, usize, usize),
}

fn system() -> impl Strategy<Value = (usize, Vec<Edge>)> {
    (2usize..9).prop_flat_map(|n| {
        let s = 0..n;
        let edge = prop_oneof![
            (s.clone(), s.clone()).prop_map(|(a, b)| Edge::Tau(a, b)),
            (s.clone(), any::<bool>(), s.clone()).prop_map(|(a, c, b)| Edge::Input(a, c, b)),
            (s.clone(), s.clone(), s.clone(), any::<bool>()).prop_map(|(a, x, y, h)| Edge::Output(a, x, y, h)),
            (s.clone(), s.clone(), s.clone()).prop_map(|(a, x, y)| Edge::Coin(a, x, y)),
        ];
        (Just(n), prop::collection::vec(edge, 0..14))
    })
}

fn build(n: usize, edges: &[Edge]) -> Lts {
    let mut l = Lts::new();
    for _ in 0..n {
        l.add_plain_state(StateKind::Nondeterministic);
    }
    let bit = |b: bool| vec![Value::Bit(b)];
    for e in edges {
        match *e {
            Edge::Tau(a, b) => l.add_transition(a, Label::Tau, b),
            Edge::Input(a, c, b) => l.add_transition(
                a,
                Label::Input { channel: if c { "c" } else { "e" }.into(), values: vec![InputValue::Bit(c)] },
                b,
            ),
            Edge::Output(a, x, y, half) => {
                let p = if half { 0.5 } else { 0.25 };
                l.add_output(a, "m", vec![], vec![(bit(false), p, x), (bit(true), 1.0 - p, y)]);
            }
            Edge::Coin(a, x, y) => {
                let p = l.add_plain_state(StateKind::Probabilistic);
                l.add_transition(a, Label::Tau, p);
                l.add_transition(p, Label::Prob(0.5), x);
                l.add_transition(p, Label::Prob(0.5), y);
            }
        }
    }
    l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn refinement_results_are_sound((n, edges) in system()) {
        let l = build(n, &edges);
        let pbb = refine(&l, Relation::Branching, DEFAULT_TOL);
        let strong = refine(&l, Relation::Strong, DEFAULT_TOL);
        prop_assert!(is_stable(&l, &pbb, Relation::Branching, DEFAULT_TOL));
        prop_assert!(is_stable(&l, &strong, Relation::Strong, DEFAULT_TOL));
        prop_assert!(strong.refines(&pbb));
        if let Err(e) = verify_branching(&l, &pbb, DEFAULT_TOL) {
            prop_assert!(false, "{}", e);
        }
        for s in 0..l.len() {
            if l.kind(s) == StateKind::Probabilistic {
                let total: f64 = (0..l.len()).map(|t| mu(&l, s, t)).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn verdicts_are_symmetric_and_witnessed((n, edges) in system(), s in 0usize..9, t in 0usize..9) {
        let l = build(n, &edges);
        let (s, t) = (s % n, t % n);
        let pbb = refine(&l, Relation::Branching, DEFAULT_TOL);
        let ab = check_pbb(&l, s, t, DEFAULT_TOL);
        let ba = check_pbb(&l, t, s, DEFAULT_TOL);
        prop_assert_eq!(ab.equivalent, ba.equivalent);
        prop_assert_eq!(ab.equivalent, pbb.same(s, t));
        prop_assert_eq!(ab.witness.is_none(), ab.equivalent);
        if !ab.equivalent {
            let w = find_witness(&l, s, t, Relation::Branching, DEFAULT_TOL);
            if !matches!(w.mismatch, Mismatch::Branching { .. }) {
                for path in [&w.left_path, &w.right_path] {
                    let observed: Vec<String> = path.iter().filter_map(|(l, _)| visible(l)).collect();
                    prop_assert_eq!(&observed, &w.trace);
                }
            }
        }
        if check_strong_bisim(&l, s, t, DEFAULT_TOL).equivalent {
            prop_assert!(ab.equivalent);
        }
    }
}
