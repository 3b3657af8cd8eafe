//! Hardware-efficient ansatz and the ancilla-assisted states used to read
//! off `M_{kl}` and `V_k` as single Pauli expectation values.
//!
//! Parameters are indexed from 1 in the public API (`k ∈ 1..=N_P`) to match
//! the usual `R_{N_P} ... R_1` product notation; parameter `k` is the
//! rotation on qubit `(k-1) % n` of layer `(k-1) / n`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::statevec::{Axis, StateVector};
use crate::vqs::EvolutionMode;

/// `g_{k,1}` in `∂R_k/∂θ_k = g R_k P_k` for `R_k = exp(-i σ θ / 2)`.
pub const DERIVATIVE_COEFF: Complex64 = Complex64::new(0.0, -0.5);

/// Circuit layout: `layers` repetitions of one rotation per qubit followed by
/// a CZ entangler (odd/even pair schedule).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    num_qubits: usize,
    layers: usize,
    gate_axes: Vec<Axis>,
}

pub type ParamVector = Vec<f64>;

impl AnsatzSpec {
    /// Ansatz with rotation axes drawn uniformly from `{x, y, z}`.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, layers: usize, rng: &mut R) -> Result<Self> {
        let axes = (0..num_qubits * layers).map(|_| Axis::ALL[rng.random_range(0..3)]).collect();
        Self::with_axes(num_qubits, layers, axes)
    }

    pub fn with_axes(num_qubits: usize, layers: usize, gate_axes: Vec<Axis>) -> Result<Self> {
        if num_qubits == 0 || num_qubits + 1 > crate::statevec::MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        if layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        if gate_axes.len() != num_qubits * layers {
            return Err(Error::Config(format!(
                "{} gate axes for {} layers of {} qubits",
                gate_axes.len(),
                layers,
                num_qubits
            )));
        }
        Ok(Self { num_qubits, layers, gate_axes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn num_params(&self) -> usize {
        self.gate_axes.len()
    }

    pub fn gate_axes(&self) -> &[Axis] {
        &self.gate_axes
    }

    /// Qubit acted on by parameter `k` (1-based), 0-based qubit index.
    pub fn param_qubit(&self, k: usize) -> usize {
        (k - 1) % self.num_qubits
    }

    /// `P_{k,1}`: the generator of parameter `k` as an `n`-qubit string.
    pub fn generator(&self, k: usize) -> Result<PauliString> {
        self.check_index(k)?;
        let mut letters = vec![Pauli::I; self.num_qubits];
        letters[self.param_qubit(k)] = self.gate_axes[k - 1].pauli();
        PauliString::new(letters)
    }

    /// CZ pairs of layer `layer` (1-based), 1-based qubit labels, in application order.
    pub fn entangler_pairs(&self, layer: usize) -> Vec<(usize, usize)> {
        let n = self.num_qubits;
        let first: Vec<_> = (1..).take_while(|m| 2 * m <= n).map(|m| (2 * m - 1, 2 * m)).collect();
        let second: Vec<_> = (1..).take_while(|m| 2 * m < n).map(|m| (2 * m, 2 * m + 1)).collect();
        if layer % 2 == 1 {
            first.into_iter().chain(second).collect()
        } else {
            second.into_iter().chain(first).collect()
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.num_params() {
            return Err(Error::ParamIndex { index: k, num_params: self.num_params() });
        }
        Ok(())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::ParamLength { expected: self.num_params(), got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("non-finite parameter".into()));
        }
        Ok(())
    }

    /// `R|v_ref>`, or `R_{k,1}|v_ref>` when `insert_at = Some(k)`: the
    /// generator of parameter `k` is applied right before its rotation.
    pub fn branch_state(&self, params: &[f64], insert_at: Option<usize>) -> Result<StateVector> {
        self.check_params(params)?;
        if let Some(k) = insert_at {
            self.check_index(k)?;
        }
        let n = self.num_qubits;
        let mut state = reference_state(n)?;
        for layer in 0..self.layers {
            for q in 0..n {
                let k = layer * n + q + 1;
                let axis = self.gate_axes[k - 1];
                if insert_at == Some(k) {
                    state.apply_pauli(&self.generator(k)?)?;
                }
                state.apply_rotation(q, axis, params[k - 1])?;
            }
            for (a, b) in self.entangler_pairs(layer + 1) {
                state.apply_cz(a - 1, b - 1)?;
            }
        }
        Ok(state)
    }

    /// `|v(θ)> = R(θ)|v_ref>`.
    pub fn prepare_state(&self, params: &[f64]) -> Result<StateVector> {
        self.branch_state(params, None)
    }

    /// `R_{k,1}|v_ref>` for every `k = 1..=N_P`.
    pub fn derivative_branches(&self, params: &[f64]) -> Result<Vec<StateVector>> {
        (1..=self.num_params()).map(|k| self.branch_state(params, Some(k))).collect()
    }

    /// `(|0> R_{k,1}|v_ref> + e^{iφ} |1> R|v_ref>) / √2` on `n + 1` qubits.
    ///
    /// `Tr[(X ⊗ P) ρ] = Re[e^{iφ} <v_ref| R_{k,1}† P R |v_ref>]` for this state.
    pub fn prepare_v_state(&self, params: &[f64], k: usize, phase: f64) -> Result<StateVector> {
        let bra = self.branch_state(params, Some(k))?;
        let ket = self.prepare_state(params)?;
        StateVector::ancilla_superposition(&bra, &ket, phase)
    }

    /// `(|0> R_{k,1}|v_ref> + e^{iφ} |1> R_{l,1}|v_ref>) / √2`, `k <= l`.
    ///
    /// `Tr[(X ⊗ P) ρ] = Re[e^{iφ} <v_ref| R_{k,1}† P R_{l,1} |v_ref>]` for this state.
    pub fn prepare_m_state(&self, params: &[f64], k: usize, l: usize, phase: f64) -> Result<StateVector> {
        if k > l {
            return Err(Error::OrderedPair { k, l });
        }
        let bra = self.branch_state(params, Some(k))?;
        let ket = self.branch_state(params, Some(l))?;
        StateVector::ancilla_superposition(&bra, &ket, phase)
    }

    /// The Hadamard-test circuit for `V_k` simulated gate by gate on `n + 1`
    /// qubits: ancilla prepared in `(|0> + e^{iφ}|1>)/√2`, flipped, controlled
    /// generator insertion, flipped back. Equal to [`Self::prepare_v_state`].
    pub fn prepare_v_state_circuit(&self, params: &[f64], k: usize, phase: f64) -> Result<StateVector> {
        self.check_params(params)?;
        self.check_index(k)?;
        let n = self.num_qubits;
        let mut state = ancilla_input(n, phase)?;
        let mut generator = vec![Pauli::I];
        generator.extend_from_slice(self.generator(k)?.letters());
        let controlled = PauliString::new(generator)?;
        let flip = PauliString::new(std::iter::once(Pauli::X).chain(std::iter::repeat_n(Pauli::I, n)).collect())?;

        state.apply_pauli(&flip)?;
        for layer in 0..self.layers {
            for q in 0..n {
                let kk = layer * n + q + 1;
                if kk == k {
                    state.apply_controlled_pauli(0, &controlled)?;
                    state.apply_pauli(&flip)?;
                }
                state.apply_rotation(q + 1, self.gate_axes[kk - 1], params[kk - 1])?;
            }
            for (a, b) in self.entangler_pairs(layer + 1) {
                state.apply_cz(a, b)?;
            }
        }
        Ok(state)
    }
}

/// `(|0> + e^{iφ}|1>)/√2 ⊗ |v_ref>`.
fn ancilla_input(n: usize, phase: f64) -> Result<StateVector> {
    let v = reference_state(n)?;
    StateVector::ancilla_superposition(&v, &v, phase)
}

/// `H^{⊗n}|0>^{⊗n}`.
pub fn reference_state(n: usize) -> Result<StateVector> {
    let mut s = StateVector::zero(n)?;
    for q in 0..n {
        s.apply_hadamard(q)?;
    }
    Ok(s)
}

/// Polar split `(G, φ)` of the prefactor of `Re[e^{iφ} <R_k† P_r R>]` in `V_k`
/// for a Hamiltonian term with real coefficient `alpha`.
///
/// RTE: `-i g* α = α/2`, ITE: `-g* α = (α/2) e^{-iπ/2}`. The sign of `alpha`
/// stays in `G`; the phase depends only on the mode. General mode is treated
/// like RTE with `B†A` supplied directly, i.e. prefactor `g* α`.
pub fn derivative_phase_and_weight(mode: EvolutionMode, alpha: f64) -> (f64, f64) {
    let g_conj = DERIVATIVE_COEFF.conj();
    let prefactor = match mode {
        EvolutionMode::Rte => Complex64::new(0.0, -1.0) * g_conj * alpha,
        EvolutionMode::Ite => -g_conj * alpha,
        EvolutionMode::General => g_conj * alpha,
    };
    let phase = match mode {
        EvolutionMode::Rte => 0.0,
        EvolutionMode::Ite => -FRAC_PI_2,
        EvolutionMode::General => FRAC_PI_2,
    };
    // G e^{iφ} = prefactor with G real (possibly negative)
    let weight = (prefactor * Complex64::from_polar(1.0, -phase)).re;
    (weight, phase)
}

/// Phase and weight for `M_{kl}` with `B†B = β I`: `g_k* g_l β = β/4`.
pub fn metric_phase_and_weight(beta: f64) -> (f64, f64) {
    let prefactor = DERIVATIVE_COEFF.conj() * DERIVATIVE_COEFF * beta;
    (prefactor.re, 0.0)
}
