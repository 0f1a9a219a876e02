use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use super::{check_distinct, QStateError, QuantumState};

const WEIGHT_TOL: f64 = 1e-9;

/// A density matrix over an ordered list of qubits, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: Vec<String>,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_rows(qubits: Vec<String>, rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        assert_eq!(dim, 1 << qubits.len(), "dimension does not match qubit count");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DensityMatrix { qubits, dim, data }
    }

    /// Real matrix convenience constructor.
    pub fn from_real(qubits: Vec<String>, rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<Complex64>> =
            rows.iter().map(|r| r.iter().map(|x| Complex64::new(*x, 0.0)).collect()).collect();
        Self::from_rows(qubits, &rows)
    }

    pub fn pure(s: &QuantumState) -> Self {
        let n = s.amps.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = s.amps[i] * s.amps[j].conj();
            }
        }
        DensityMatrix { qubits: s.qubits.clone(), dim: n, data }
    }

    pub fn qubits(&self) -> &[String] {
        &self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise difference; infinite when dimensions differ.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &DensityMatrix, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    /// Eigenvalues, ascending. Assumes the matrix is Hermitian.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && (self.trace() - 1.0).norm() <= tol
            && self.eigenvalues().iter().all(|e| *e >= -tol)
    }

    pub fn scaled(&self, w: f64) -> Self {
        DensityMatrix { data: self.data.iter().map(|x| x * w).collect(), ..self.clone() }
    }

    pub fn add_assign(&mut self, other: &DensityMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Entries rounded to `decimals`, used as a hashable fingerprint.
    pub fn fingerprint(&self, decimals: i32) -> Vec<(i64, i64)> {
        let s = 10f64.powi(decimals);
        self.data
            .iter()
            .map(|c| ((c.re * s).round() as i64, (c.im * s).round() as i64))
            .collect()
    }
}

pub(super) fn reduced(s: &QuantumState, keep: &[String]) -> Result<DensityMatrix, QStateError> {
    check_distinct(keep)?;
    let keep_masks = keep.iter().map(|q| s.mask(q)).collect::<Result<Vec<_>, _>>()?;
    let rest_masks: Vec<usize> = s
        .qubits
        .iter()
        .filter(|q| !keep.contains(q))
        .map(|q| s.mask(q).expect("own qubit"))
        .collect();
    let pack = |i: usize, masks: &[usize]| {
        masks.iter().fold(0usize, |acc, m| (acc << 1) | usize::from(i & m != 0))
    };
    let dk = 1usize << keep.len();
    let dr = 1usize << rest_masks.len();
    let mut m = vec![Complex64::new(0.0, 0.0); dk * dr];
    for (i, a) in s.amps.iter().enumerate() {
        m[pack(i, &keep_masks) * dr + pack(i, &rest_masks)] = *a;
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dk * dk];
    for i in 0..dk {
        for j in 0..dk {
            data[i * dk + j] = (0..dr).map(|r| m[i * dr + r] * m[j * dr + r].conj()).sum();
        }
    }
    Ok(DensityMatrix { qubits: keep.to_vec(), dim: dk, data })
}

/// `Σ g_i tr_rest(|ψ_i><ψ_i|)` over the listed qubits.
pub fn mixture_density(
    components: &[(f64, &QuantumState)],
    keep: &[String],
) -> Result<DensityMatrix, QStateError> {
    let total: f64 = components.iter().map(|(g, _)| g).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(QStateError::WeightSum(total));
    }
    let mut acc: Option<DensityMatrix> = None;
    for (g, s) in components {
        let r = s.reduced_density(keep)?.scaled(*g);
        match &mut acc {
            None => acc = Some(r),
            Some(a) => a.add_assign(&r),
        }
    }
    acc.ok_or(QStateError::WeightSum(0.0))
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            self.rows().iter().map(|r| r.iter().map(|c| [c.re, c.im]).collect()).collect();
        let mut st = ser.serialize_struct("DensityMatrix", 2)?;
        st.serialize_field("qubits", &self.qubits)?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

fn fmt_entry(c: Complex64) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { (x * 1e6).round() / 1e6 };
    crate::lang::fmt_complex(Complex64::new(clean(c.re), clean(c.im)))
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|c| fmt_entry(*c)).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let h = FRAC_1_SQRT_2;
        let s = QuantumState::new(names(&["a", "b"]), vec![c(h), c(0.), c(0.), c(h)]).unwrap();
        let r = s.reduced_density(&names(&["a"])).unwrap();
        assert!(r.approx_eq(&DensityMatrix::from_real(names(&["a"]), &[&[0.5, 0.], &[0., 0.5]]), 1e-12));
        assert!(r.is_valid(1e-9));
    }

    #[test]
    fn product_state_marginal() {
        let h = FRAC_1_SQRT_2;
        let s = QuantumState::new(names(&["q", "r"]), vec![c(h), c(h), c(0.), c(0.)]).unwrap();
        let r = s.reduced_density(&names(&["q"])).unwrap();
        assert!(r.approx_eq(&DensityMatrix::from_real(names(&["q"]), &[&[1., 0.], &[0., 0.]]), 1e-12));
    }

    #[test]
    fn keep_all_is_projector() {
        let s = QuantumState::new(names(&["a", "b"]), vec![c(0.6), c(0.), c(0.), c(0.8)]).unwrap();
        let r = s.reduced_density(&names(&["a", "b"])).unwrap();
        assert!(r.approx_eq(&DensityMatrix::pure(&s), 1e-12));
    }

    #[test]
    fn mixture_of_basis_states() {
        let s0 = QuantumState::new(names(&["a", "b"]), vec![c(1.), c(0.), c(0.), c(0.)]).unwrap();
        let s1 = QuantumState::new(names(&["a", "b"]), vec![c(0.), c(0.), c(0.), c(1.)]).unwrap();
        let r = mixture_density(&[(0.5, &s0), (0.5, &s1)], &names(&["b"])).unwrap();
        assert!(r.approx_eq(&DensityMatrix::from_real(names(&["b"]), &[&[0.5, 0.], &[0., 0.5]]), 1e-12));
    }

    #[test]
    fn mixture_of_superpositions() {
        let h = FRAC_1_SQRT_2;
        let s0 = QuantumState::new(names(&["a", "b"]), vec![c(h), c(h), c(0.), c(0.)]).unwrap();
        let s1 = QuantumState::new(names(&["a", "b"]), vec![c(0.), c(0.), c(h), c(-h)]).unwrap();
        let r = mixture_density(&[(0.5, &s0), (0.5, &s1)], &names(&["b"])).unwrap();
        assert!(r.approx_eq(&DensityMatrix::from_real(names(&["b"]), &[&[0.5, 0.], &[0., 0.5]]), 1e-12));
    }

    #[test]
    fn mixture_weight_check() {
        let s = QuantumState::empty().extend_with_fresh(&names(&["a"])).unwrap();
        assert!(matches!(mixture_density(&[(0.7, &s)], &names(&["a"])), Err(QStateError::WeightSum(_))));
    }

    #[test]
    fn eigenvalues_of_mixed_state() {
        let r = DensityMatrix::from_real(names(&["a"]), &[&[0.5, 0.], &[0., 0.5]]);
        let ev = r.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-12 && (ev[1] - 0.5).abs() < 1e-12);
    }
}
