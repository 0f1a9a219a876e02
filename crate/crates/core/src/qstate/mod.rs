//! Dense state vectors over named qubits.
//!
//! Basis index convention: the first qubit in `qubits` is the most
//! significant bit, so `|q0 q1 ... qn-1>` reads left to right.

mod density;

use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::lang::{Expr, Gate, Unitary};

pub use density::{mixture_density, DensityMatrix};

pub const MAX_QUBITS: usize = 16;
/// Measurement branches lighter than this are treated as numerical noise.
pub const BRANCH_CUTOFF: f64 = 1e-12;
const NORM_TOL: f64 = 1e-9;
const PHASE_CUTOFF: f64 = 1e-9;

pub type Matrix = Vec<Vec<Complex64>>;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum QStateError {
    #[error("unknown qubit `{0}`")]
    UnknownQubit(String),
    #[error("qubit `{0}` is listed twice")]
    DuplicateQubit(String),
    #[error("operation on {expected} qubit(s) applied to {found}")]
    Arity { expected: usize, found: usize },
    #[error("matrix is not unitary")]
    NonUnitary,
    #[error("register would exceed {MAX_QUBITS} qubits")]
    TooManyQubits,
    #[error("amplitude vector has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("mixture weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("qubit sets differ")]
    MismatchedQubits,
    #[error("exponent `{0}` does not evaluate to a bit")]
    UnresolvedExponent(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantumState {
    qubits: Vec<String>,
    amps: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBranch {
    pub outcome: Vec<bool>,
    pub weight: f64,
    pub post_state: QuantumState,
}

pub fn gate_matrix(g: Gate) -> Matrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h = FRAC_1_SQRT_2;
    match g {
        Gate::H => vec![vec![c(h, 0.), c(h, 0.)], vec![c(h, 0.), c(-h, 0.)]],
        Gate::X => vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]],
        Gate::Y => vec![vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]],
        Gate::Z => vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(-1., 0.)]],
        Gate::CNot => {
            let mut m = vec![vec![c(0., 0.); 4]; 4];
            m[0][0] = c(1., 0.);
            m[1][1] = c(1., 0.);
            m[2][3] = c(1., 0.);
            m[3][2] = c(1., 0.);
            m
        }
    }
}

/// Resolve a unitary expression to a matrix under a bit valuation.
/// Returns `None` when a conditional power evaluates to 0 (identity).
pub fn resolve_unitary(
    u: &Unitary,
    env: &dyn Fn(&str) -> Option<bool>,
) -> Result<Option<Matrix>, QStateError> {
    match u {
        Unitary::Gate(g) => Ok(Some(gate_matrix(*g))),
        Unitary::Matrix(m) => {
            if !crate::lang::is_unitary(m, NORM_TOL) {
                return Err(QStateError::NonUnitary);
            }
            Ok(Some(m.clone()))
        }
        Unitary::Power(base, exp) => match exp.eval_bit(env) {
            Some(true) => resolve_unitary(base, env),
            Some(false) => Ok(None),
            None => Err(QStateError::UnresolvedExponent(exp.to_string())),
        },
    }
}

impl QuantumState {
    /// The state of zero qubits.
    pub fn empty() -> Self {
        QuantumState { qubits: Vec::new(), amps: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn new(qubits: Vec<String>, amps: Vec<Complex64>) -> Result<Self, QStateError> {
        check_distinct(&qubits)?;
        if qubits.len() > MAX_QUBITS {
            return Err(QStateError::TooManyQubits);
        }
        let expected = 1usize << qubits.len();
        if amps.len() != expected {
            return Err(QStateError::Length { expected, found: amps.len() });
        }
        let s = QuantumState { qubits, amps };
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QStateError::NotNormalized(n));
        }
        Ok(s)
    }

    /// One qubit in state `alpha|0> + beta|1>`.
    pub fn single(name: &str, alpha: Complex64, beta: Complex64) -> Result<Self, QStateError> {
        QuantumState::new(vec![name.to_string()], vec![alpha, beta])
    }

    pub fn qubits(&self) -> &[String] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn contains(&self, q: &str) -> bool {
        self.qubits.iter().any(|x| x == q)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn position(&self, q: &str) -> Result<usize, QStateError> {
        self.qubits
            .iter()
            .position(|x| x == q)
            .ok_or_else(|| QStateError::UnknownQubit(q.to_string()))
    }

    fn mask(&self, q: &str) -> Result<usize, QStateError> {
        Ok(1 << (self.qubits.len() - 1 - self.position(q)?))
    }

    /// Tensor with `|0>` for each new name.
    pub fn extend_with_fresh(&self, names: &[String]) -> Result<Self, QStateError> {
        let zeros = names.iter().fold(QuantumState::empty(), |acc, n| QuantumState {
            qubits: acc.qubits.iter().cloned().chain([n.clone()]).collect(),
            amps: acc.amps.iter().flat_map(|a| [*a, Complex64::new(0.0, 0.0)]).collect(),
        });
        self.tensor(&zeros)
    }

    /// `self ⊗ other`, with `other`'s qubits appended.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self, QStateError> {
        let qubits: Vec<String> = self.qubits.iter().chain(&other.qubits).cloned().collect();
        check_distinct(&qubits)?;
        if qubits.len() > MAX_QUBITS {
            return Err(QStateError::TooManyQubits);
        }
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(QuantumState { qubits, amps })
    }

    /// Apply a unitary expression; conditional exponents are evaluated with `env`.
    pub fn apply_gate(
        &self,
        u: &Unitary,
        targets: &[String],
        env: &dyn Fn(&str) -> Option<bool>,
    ) -> Result<Self, QStateError> {
        let arity = u.arity().ok_or(QStateError::NonUnitary)?;
        if arity != targets.len() {
            return Err(QStateError::Arity { expected: arity, found: targets.len() });
        }
        match resolve_unitary(u, env)? {
            Some(m) => self.apply_matrix(&m, targets),
            None => {
                check_distinct(targets)?;
                for t in targets {
                    self.position(t)?;
                }
                Ok(self.clone())
            }
        }
    }

    /// Apply a `2^k x 2^k` matrix to `k` distinct target qubits; the first
    /// target is the most significant bit of the matrix index.
    pub fn apply_matrix(&self, m: &[Vec<Complex64>], targets: &[String]) -> Result<Self, QStateError> {
        check_distinct(targets)?;
        let k = targets.len();
        if m.len() != 1 << k || m.iter().any(|r| r.len() != m.len()) {
            return Err(QStateError::Arity { expected: m.len().trailing_zeros() as usize, found: k });
        }
        let masks = targets.iter().map(|t| self.mask(t)).collect::<Result<Vec<_>, _>>()?;
        let all: usize = masks.iter().sum();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|s| {
                (0..k).filter(|j| s >> (k - 1 - j) & 1 == 1).map(|j| masks[j]).sum()
            })
            .collect();
        let mut out = self.amps.clone();
        let mut local = vec![Complex64::new(0.0, 0.0); 1 << k];
        for base in (0..self.amps.len()).filter(|b| b & all == 0) {
            for (s, off) in offsets.iter().enumerate() {
                local[s] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                out[base | off] = m[r].iter().zip(&local).map(|(a, b)| a * b).sum();
            }
        }
        Ok(QuantumState { qubits: self.qubits.clone(), amps: out })
    }

    /// Standard-basis measurement of `targets`, one branch per outcome with
    /// non-negligible weight, ordered by outcome.
    pub fn measure(&self, targets: &[String]) -> Result<Vec<MeasurementBranch>, QStateError> {
        check_distinct(targets)?;
        let masks = targets.iter().map(|t| self.mask(t)).collect::<Result<Vec<_>, _>>()?;
        let k = targets.len();
        let mut branches = Vec::new();
        for o in 0..1usize << k {
            let outcome: Vec<bool> = (0..k).map(|j| o >> (k - 1 - j) & 1 == 1).collect();
            let matches = |i: usize| masks.iter().zip(&outcome).all(|(m, b)| (i & m != 0) == *b);
            let weight: f64 = self
                .amps
                .iter()
                .enumerate()
                .filter(|(i, _)| matches(*i))
                .map(|(_, a)| a.norm_sqr())
                .sum();
            if weight < BRANCH_CUTOFF {
                continue;
            }
            let scale = 1.0 / weight.sqrt();
            let amps = self
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| if matches(i) { a * scale } else { Complex64::new(0.0, 0.0) })
                .collect();
            branches.push(MeasurementBranch {
                outcome,
                weight,
                post_state: QuantumState { qubits: self.qubits.clone(), amps },
            });
        }
        Ok(branches)
    }

    /// The same state with qubits listed in `order` (a permutation of the register).
    pub fn reorder(&self, order: &[String]) -> Result<Self, QStateError> {
        if order.len() != self.qubits.len() {
            return Err(QStateError::MismatchedQubits);
        }
        check_distinct(order)?;
        let n = order.len();
        let src_masks = order
            .iter()
            .map(|q| self.mask(q).map_err(|_| QStateError::MismatchedQubits))
            .collect::<Result<Vec<_>, _>>()?;
        let amps = (0..self.amps.len())
            .map(|i| {
                let src: usize = (0..n).filter(|j| i >> (n - 1 - j) & 1 == 1).map(|j| src_masks[j]).sum();
                self.amps[src]
            })
            .collect();
        Ok(QuantumState { qubits: order.to_vec(), amps })
    }

    /// Rotate the global phase so the first non-negligible amplitude is real positive.
    pub fn fix_phase(&self) -> Self {
        let mut s = self.clone();
        let Some(i) = s.amps.iter().position(|a| a.norm() > PHASE_CUTOFF) else { return s };
        let a = s.amps[i];
        if a.im == 0.0 && a.re > 0.0 {
            return s;
        }
        let rot = a.conj() / a.norm();
        for x in &mut s.amps {
            *x *= rot;
        }
        s.amps[i] = Complex64::new(a.norm(), 0.0);
        s
    }

    /// Qubits sorted by name and global phase fixed.
    pub fn canonical(&self) -> Self {
        let mut order = self.qubits.clone();
        order.sort();
        self.reorder(&order).expect("permutation of own qubits").fix_phase()
    }

    /// Rename qubits. Every qubit must be mapped; targets must stay distinct.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Result<Self, QStateError> {
        let qubits: Vec<String> = self.qubits.iter().map(|q| f(q)).collect();
        check_distinct(&qubits)?;
        Ok(QuantumState { qubits, amps: self.amps.clone() })
    }

    /// Equality up to global phase after aligning qubit order.
    pub fn states_equal(&self, other: &QuantumState, tol: f64) -> Result<bool, QStateError> {
        let mut mine = self.qubits.clone();
        let mut theirs = other.qubits.clone();
        mine.sort();
        theirs.sort();
        if mine != theirs {
            return Err(QStateError::MismatchedQubits);
        }
        let a = self.reorder(&mine)?.fix_phase();
        let b = other.reorder(&mine)?.fix_phase();
        Ok(a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() <= tol))
    }

    pub fn reduced_density(&self, keep: &[String]) -> Result<DensityMatrix, QStateError> {
        density::reduced(self, keep)
    }
}

fn check_distinct(names: &[String]) -> Result<(), QStateError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(QStateError::DuplicateQubit(n.clone()));
        }
    }
    Ok(())
}

/// Evaluate a bit expression with no free variables.
pub fn closed_bit(e: &Expr) -> Option<bool> {
    e.eval_bit(&|_| None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn extend_empty_register() {
        let s = QuantumState::empty().extend_with_fresh(&names(&["y", "z"])).unwrap();
        assert_eq!(s.qubits(), &names(&["y", "z"])[..]);
        assert!(close(s.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]));
    }

    #[test]
    fn extend_plus_state() {
        let h = FRAC_1_SQRT_2;
        let s = QuantumState::single("x", c(h, 0.), c(h, 0.)).unwrap();
        let t = s.extend_with_fresh(&names(&["u"])).unwrap();
        assert!(close(t.amplitudes(), &[c(h, 0.), c(0., 0.), c(h, 0.), c(0., 0.)]));
    }

    #[test]
    fn extend_seven() {
        let names: Vec<String> = (0..7).map(|i| format!("q{i}")).collect();
        let s = QuantumState::empty().extend_with_fresh(&names).unwrap();
        assert_eq!(s.amplitudes()[0], c(1., 0.));
        assert_eq!(s.amplitudes().len(), 128);
    }

    #[test]
    fn extend_rejects_duplicate() {
        let s = QuantumState::empty().extend_with_fresh(&names(&["x"])).unwrap();
        assert_eq!(s.extend_with_fresh(&names(&["x"])), Err(QStateError::DuplicateQubit("x".into())));
    }

    #[test]
    fn hadamard_and_cnot() {
        let s = QuantumState::empty().extend_with_fresh(&names(&["q"])).unwrap();
        let h = s.apply_gate(&Unitary::Gate(Gate::H), &names(&["q"]), &|_| None).unwrap();
        assert!(close(h.amplitudes(), &[c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)]));

        let s = QuantumState::new(names(&["a", "b"]), vec![c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let t = s.apply_gate(&Unitary::Gate(Gate::CNot), &names(&["a", "b"]), &|_| None).unwrap();
        assert!(close(t.amplitudes(), &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]));
    }

    #[test]
    fn conditional_power() {
        let u = crate::lang::parse_process("{u *= X^(j & !k)}.0").unwrap();
        let crate::lang::Process::Action { unitary, .. } = u else { panic!() };
        let s = QuantumState::empty().extend_with_fresh(&names(&["u"])).unwrap();
        let flip = s
            .apply_gate(&unitary, &names(&["u"]), &|v| Some(v == "j"))
            .unwrap();
        assert!(close(flip.amplitudes(), &[c(0., 0.), c(1., 0.)]));
        let keep = s.apply_gate(&unitary, &names(&["u"]), &|_| Some(true)).unwrap();
        assert!(close(keep.amplitudes(), &[c(1., 0.), c(0., 0.)]));
    }

    #[test]
    fn non_unitary_rejected() {
        let s = QuantumState::empty().extend_with_fresh(&names(&["u"])).unwrap();
        let m = Unitary::Matrix(vec![vec![c(1., 0.), c(1., 0.)], vec![c(0., 0.), c(1., 0.)]]);
        assert_eq!(s.apply_gate(&m, &names(&["u"]), &|_| None), Err(QStateError::NonUnitary));
    }

    #[test]
    fn measure_weights() {
        let s = QuantumState::single("q", c(0.6, 0.), c(0.8, 0.)).unwrap();
        let b = s.measure(&names(&["q"])).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].outcome, vec![false]);
        assert!((b[0].weight - 0.36).abs() < 1e-12);
        assert!((b[1].weight - 0.64).abs() < 1e-12);
        assert!(close(b[1].post_state.amplitudes(), &[c(0., 0.), c(1., 0.)]));
    }

    #[test]
    fn measure_eigenstate_has_one_branch() {
        let s = QuantumState::single("q", c(0., 0.), c(1., 0.)).unwrap();
        let b = s.measure(&names(&["q"])).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome, vec![true]);
    }

    #[test]
    fn measure_bell_first_qubit() {
        let h = FRAC_1_SQRT_2;
        let s = QuantumState::new(names(&["a", "b"]), vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]).unwrap();
        let b = s.measure(&names(&["a"])).unwrap();
        assert!((b[0].weight - 0.5).abs() < 1e-12);
        assert!(close(b[0].post_state.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]));
        assert!(close(b[1].post_state.amplitudes(), &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]));
    }

    #[test]
    fn global_phase_equality() {
        let h = FRAC_1_SQRT_2;
        let s = QuantumState::single("q", c(h, 0.), c(0., h)).unwrap();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        let t = QuantumState::single("q", c(h, 0.) * rot, c(0., h) * rot).unwrap();
        assert!(s.states_equal(&t, 1e-12).unwrap());
        let zero = QuantumState::single("q", c(1., 0.), c(0., 0.)).unwrap();
        let one = QuantumState::single("q", c(0., 0.), c(1., 0.)).unwrap();
        assert!(!zero.states_equal(&one, 1e-12).unwrap());
    }

    #[test]
    fn swapped_listing_is_equal() {
        let s = QuantumState::new(names(&["a", "b"]), vec![c(0.6, 0.), c(0.8, 0.), c(0., 0.), c(0., 0.)]).unwrap();
        let t = s.reorder(&names(&["b", "a"])).unwrap();
        assert!(close(t.amplitudes(), &[c(0.6, 0.), c(0., 0.), c(0.8, 0.), c(0., 0.)]));
        assert!(s.states_equal(&t, 1e-12).unwrap());
    }
}
