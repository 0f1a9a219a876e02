use cqp::bisim::{check_process_equiv, EquivConfig};
use cqp::lang::{load_program, Value};
use cqp::models;
use cqp::semantics::{InputPolicy, InputValue, Label, Limits, Options, Semantics};

fn chans(ns: &[&str]) -> Vec<Value> {
    ns.iter().map(|n| Value::Chan(n.to_string())).collect()
}

#[test]
fn noise_flips_at_most_one_qubit_per_choice() {
    let policy = InputPolicy::basis().singletons().remove(0);
    let sem = Semantics::new(load_program(models::QECC_SRC).unwrap(), policy, Options::default());
    let lts = sem.explore("NoiseErr", &chans(&["b", "p", "c"]), Limits::default()).unwrap();
    let mut seen = Vec::new();
    for choice in lts.transitions() {
        let Label::Input { channel, values } = &choice.label else { continue };
        if channel != "p" {
            continue;
        }
        let bit = |i: usize| matches!(values[i], InputValue::Bit(true));
        let (j, k) = (bit(0), bit(1));
        let flipped = match (j, k) {
            (false, false) => 0b000,
            (true, true) => 0b100,
            (true, false) => 0b010,
            (false, true) => 0b001,
        };
        let mut cur = choice.dst;
        while let Some(t) = lts.outgoing(cur).next() {
            if matches!(t.label, Label::Output { .. }) {
                let d = lts.env_density(t.dst).unwrap();
                assert_eq!(d.qubits(), ["x", "y", "z"]);
                for i in 0..8 {
                    let want = if i == flipped { 1.0 } else { 0.0 };
                    assert!((d.get(i, i).re - want).abs() < 1e-12, "j={j} k={k}");
                }
                seen.push(flipped);
                break;
            }
            cur = t.dst;
        }
    }
    seen.sort();
    assert_eq!(seen, vec![0b000, 0b001, 0b010, 0b100]);
}

#[test]
fn catalog_relationships_hold() {
    let policy = InputPolicy::tomographic();
    let cfg = EquivConfig::default();
    for e in models::catalog() {
        let prog = e.program().unwrap();
        for other in &e.equivalent_to {
            let v = check_process_equiv(&prog, e.entry, &prog, other, &policy, &cfg).unwrap();
            assert!(v.equivalent, "{} ~ {other}", e.name);
        }
        for other in &e.inequivalent_to {
            let v = check_process_equiv(&prog, e.entry, &prog, other, &policy, &cfg).unwrap();
            assert!(!v.equivalent, "{} !~ {other}", e.name);
        }
    }
}

#[test]
fn noiseless_code_is_the_identity() {
    let e = models::qecc2_with_noise(0.0);
    let prog = e.program().unwrap();
    let v = check_process_equiv(&prog, "QECC2", &prog, "Identity", &InputPolicy::tomographic(), &EquivConfig::default())
        .unwrap();
    assert!(v.equivalent);
}

#[test]
fn flipping_every_qubit_defeats_the_code() {
    let e = models::qecc2_with_noise(1.0);
    let prog = e.program().unwrap();
    let v = check_process_equiv(&prog, "QECC2", &prog, "Identity", &InputPolicy::basis(), &EquivConfig::default())
        .unwrap();
    assert!(!v.equivalent);
    assert!(v.sigma_results.iter().filter(|r| r.input != "{|0>, |1>}").all(|r| !r.equivalent));
}

#[test]
fn broken_model_reports_a_linearity_error() {
    let err = load_program(models::BROKEN_SRC).unwrap_err();
    assert!(err.iter().any(|e| e.is_linearity()), "{err}");
}

#[test]
fn bundled_sources_are_found_by_stem() {
    for e in models::catalog() {
        assert_eq!(models::source_by_stem(e.file), Some(e.source.as_str()));
        assert_eq!(models::find(e.name).unwrap().entry, e.entry);
    }
    assert!(models::source_by_stem("nope").is_none());
}
