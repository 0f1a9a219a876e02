use num_complex::Complex64;
use proptest::prelude::*;

use cqp::lang::{Gate, Unitary};
use cqp::qstate::{mixture_density, DensityMatrix, QuantumState};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

fn state() -> impl Strategy<Value = QuantumState> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("non-zero", move |raw| {
            let norm: f64 = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| {
                let amps = raw.iter().map(|(a, b)| Complex64::new(a / norm, b / norm)).collect();
                QuantumState::new(names(n), amps).unwrap()
            })
        })
    })
}

fn gate() -> impl Strategy<Value = Gate> {
    prop::sample::select(vec![Gate::H, Gate::X, Gate::Y, Gate::Z, Gate::CNot])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gates_preserve_the_norm(s in state(), g in gate(), pick in 0usize..16) {
        let n = s.num_qubits();
        let q = s.qubits();
        let targets: Vec<String> = if g.arity() == 2 {
            if n < 2 { return Ok(()); }
            let a = pick % n;
            vec![q[a].clone(), q[(a + 1 + pick / n % (n - 1)) % n].clone()]
        } else {
            vec![q[pick % n].clone()]
        };
        let after = s.apply_gate(&Unitary::Gate(g), &targets, &|_| None).unwrap();
        prop_assert!((after.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_are_undone_by_their_inverse(s in state(), pick in 0usize..4) {
        let q = s.qubits()[pick % s.num_qubits()].clone();
        for g in [Gate::H, Gate::X, Gate::Y, Gate::Z] {
            let twice = s
                .apply_gate(&Unitary::Gate(g), std::slice::from_ref(&q), &|_| None)
                .and_then(|t| t.apply_gate(&Unitary::Gate(g), std::slice::from_ref(&q), &|_| None))
                .unwrap();
            prop_assert!(twice.states_equal(&s, 1e-12).unwrap());
        }
    }

    #[test]
    fn measurement_weights_sum_to_one(s in state(), pick in 0usize..4) {
        let q = s.qubits()[pick % s.num_qubits()].clone();
        let branches = s.measure(&[q]).unwrap();
        let total: f64 = branches.iter().map(|b| b.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for b in &branches {
            prop_assert!((b.post_state.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reduced_densities_are_valid(s in state(), pick in 0usize..4) {
        let q = s.qubits()[pick % s.num_qubits()].clone();
        let d = s.reduced_density(&[q]).unwrap();
        prop_assert!((d.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(d.is_hermitian(1e-9));
        prop_assert!(d.is_valid(1e-9));
        let all = s.reduced_density(s.qubits()).unwrap();
        prop_assert!(all.approx_eq(&DensityMatrix::pure(&s), 1e-9));
    }

    #[test]
    fn reordering_round_trips(s in state()) {
        let mut rev: Vec<String> = s.qubits().to_vec();
        rev.reverse();
        let back = s.reorder(&rev).unwrap().reorder(s.qubits()).unwrap();
        prop_assert!(back.states_equal(&s, 1e-12).unwrap());
    }

    #[test]
    fn canonical_form_is_idempotent_and_phase_blind(s in state(), theta in 0.0f64..std::f64::consts::TAU) {
        let c = s.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        let phase = Complex64::from_polar(1.0, theta);
        let rotated = QuantumState::new(s.qubits().to_vec(), s.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
        let rc = rotated.canonical();
        for (a, b) in rc.amplitudes().iter().zip(c.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn mixtures_of_states_are_valid(a in state(), w in 0.0f64..1.0) {
        let n = a.num_qubits();
        let b = a.apply_gate(&Unitary::Gate(Gate::H), &[a.qubits()[0].clone()], &|_| None).unwrap();
        let keep = vec![a.qubits()[n - 1].clone()];
        let d = mixture_density(&[(w, &a), (1.0 - w, &b)], &keep).unwrap();
        prop_assert!(d.is_valid(1e-9));
        prop_assert!((d.trace().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn measuring_a_point_six_point_eight_state() {
    let s = QuantumState::single("q", Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)).unwrap();
    let b = s.measure(&["q".to_string()]).unwrap();
    assert_eq!(b.len(), 2);
    assert!((b[0].weight - 0.36).abs() < 1e-12);
    assert!((b[1].weight - 0.64).abs() < 1e-12);
}
