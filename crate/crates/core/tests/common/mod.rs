//! Dense-matrix reference implementations, built independently of the
//! crate's bit-twiddling kernels. Qubit 0 is the leftmost Kronecker factor.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use shadowvqs::{AnsatzSpec, Axis, ObservableSum, Pauli, PauliString, StateVector};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: Pauli) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        Pauli::I => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

pub fn kron_all(factors: &[CMat]) -> CMat {
    let mut acc = CMat::from_element(1, 1, c(1.0, 0.0));
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

pub fn pauli_dense(p: &PauliString) -> CMat {
    kron_all(&p.letters().iter().map(|&l| single(l)).collect::<Vec<_>>())
}

pub fn observable_dense(o: &ObservableSum) -> CMat {
    let d = 1usize << o.num_qubits();
    let mut m = CMat::zeros(d, d);
    for (a, p) in o.terms() {
        m += pauli_dense(p) * c(*a, 0.0);
    }
    m
}

/// `u` on qubit `q` of `n`.
pub fn on_qubit(n: usize, q: usize, u: &CMat) -> CMat {
    let factors: Vec<CMat> = (0..n).map(|j| if j == q { u.clone() } else { single(Pauli::I) }).collect();
    kron_all(&factors)
}

pub fn rotation(axis: Axis, theta: f64) -> CMat {
    let sigma = single(axis.pauli());
    single(Pauli::I) * c((theta / 2.0).cos(), 0.0) - sigma * c(0.0, (theta / 2.0).sin())
}

pub fn hadamard() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

pub fn cz(n: usize, a: usize, b: usize) -> CMat {
    let d = 1usize << n;
    let mut m = CMat::identity(d, d);
    for idx in 0..d {
        let bit = |q: usize| (idx >> (n - 1 - q)) & 1;
        if bit(a) == 1 && bit(b) == 1 {
            m[(idx, idx)] = c(-1.0, 0.0);
        }
    }
    m
}

/// `R|+...+>` or, with `insert = Some(k)`, the same circuit with the
/// generator of parameter `k` applied right before rotation `k`.
pub fn branch(spec: &AnsatzSpec, params: &[f64], insert: Option<usize>) -> CVec {
    let n = spec.num_qubits();
    let d = 1usize << n;
    let mut v = CVec::zeros(d);
    v[0] = c(1.0, 0.0);
    for q in 0..n {
        v = on_qubit(n, q, &hadamard()) * v;
    }
    for layer in 0..spec.layers() {
        for q in 0..n {
            let k = layer * n + q + 1;
            let axis = spec.gate_axes()[k - 1];
            if insert == Some(k) {
                v = on_qubit(n, q, &single(axis.pauli())) * v;
            }
            v = on_qubit(n, q, &rotation(axis, params[k - 1])) * v;
        }
        for (a, b) in spec.entangler_pairs(layer + 1) {
            v = cz(n, a - 1, b - 1) * v;
        }
    }
    v
}

pub fn to_dense(s: &StateVector) -> CVec {
    CVec::from_column_slice(s.amplitudes())
}

pub fn expectation(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// `<a| M |b>`.
pub fn sandwich(a: &CVec, m: &CMat, b: &CVec) -> Complex64 {
    (a.adjoint() * m * b)[(0, 0)]
}
