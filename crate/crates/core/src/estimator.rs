//! The shadow estimator `ν`, its naive per-term counterpart, and the
//! sampled and exact evaluations of `M_{kl}` and `V_k`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, DERIVATIVE_COEFF};
use crate::error::{Error, Result};
use crate::measure::{covers, MeasurementPlan, NaivePlan};
use crate::pauli::{ObservableSum, PauliString};
use crate::statevec::{support_mask, StateVector};
use crate::vqs::EvolutionMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub value: f64,
    pub shots_used: usize,
    /// `ν_r` per shot, kept only on request.
    pub per_shot: Option<Vec<f64>>,
}

/// Distinct bases of `bases` in first-appearance order with their counts.
fn basis_counts(bases: &[PauliString]) -> Vec<(&PauliString, usize)> {
    let mut index = std::collections::HashMap::new();
    let mut out: Vec<(&PauliString, usize)> = Vec::new();
    for b in bases {
        let slot = *index.entry(b).or_insert_with(|| {
            out.push((b, 0));
            out.len() - 1
        });
        out[slot].1 += 1;
    }
    out
}

/// Shadow-type estimator `ν = (1/N) Σ_r Σ_j a_j f(P_j, M_r) μ(P_j, b_r) / q(P_j)`.
///
/// Shots measuring the same basis are sampled together from one rotated copy
/// of the state; `per_shot` then lists them grouped by basis.
pub fn estimate_nu<R: Rng + ?Sized>(
    state: &StateVector,
    observable: &ObservableSum,
    plan: &MeasurementPlan,
    rng: &mut R,
    keep_per_shot: bool,
) -> Result<NuEstimate> {
    if observable.num_qubits() != state.num_qubits() {
        return Err(Error::LengthMismatch { expected: state.num_qubits(), got: observable.num_qubits() });
    }
    let paulis = observable.paulis();
    let qs = plan.covering_for(&paulis)?;
    let scaled: Vec<(f64, usize, &PauliString)> = observable
        .terms()
        .iter()
        .zip(&qs)
        .map(|((a, p), q)| (a / q, support_mask(p), p))
        .collect();

    let mut total = 0.0;
    let mut per_shot = keep_per_shot.then(|| Vec::with_capacity(plan.num_shots()));
    for (basis, count) in basis_counts(plan.bases()) {
        if basis.num_qubits() != state.num_qubits() {
            return Err(Error::LengthMismatch { expected: state.num_qubits(), got: basis.num_qubits() });
        }
        let covered: Vec<(f64, usize)> =
            scaled.iter().filter(|(_, _, p)| covers(basis, p)).map(|&(w, m, _)| (w, m)).collect();
        for outcome in state.sample_in_basis(basis, count, rng)? {
            let nu_r: f64 = covered
                .iter()
                .map(|&(w, mask)| if (outcome.index & mask).count_ones() % 2 == 0 { w } else { -w })
                .sum();
            total += nu_r;
            if let Some(v) = per_shot.as_mut() {
                v.push(nu_r);
            }
        }
    }
    Ok(NuEstimate { value: total / plan.num_shots() as f64, shots_used: plan.num_shots(), per_shot })
}

/// Each term measured in its own basis; term estimate `a_j · mean(μ)`.
pub fn estimate_nu_naive<R: Rng + ?Sized>(
    state: &StateVector,
    observable: &ObservableSum,
    plan: &NaivePlan,
    rng: &mut R,
) -> Result<NuEstimate> {
    if plan.entries.len() != observable.len() {
        return Err(Error::LengthMismatch { expected: observable.len(), got: plan.entries.len() });
    }
    let mut value = 0.0;
    for ((a, p), entry) in observable.terms().iter().zip(&plan.entries) {
        if *p != entry.term {
            return Err(Error::UncoveredTerm(p.to_string()));
        }
        if entry.shots == 0 {
            return Err(Error::UncoveredTerm(p.to_string()));
        }
        // The parity of a single term measured in its own basis is a
        // Bernoulli variable with P(+1) = (1 + <P>)/2, so the count of +1
        // outcomes over `shots` repetitions is binomial.
        let p_plus = ((1.0 + state.expectation_pauli(p)?) / 2.0).clamp(0.0, 1.0);
        let plus = Binomial::new(entry.shots as u64, p_plus)
            .map_err(|e| Error::Config(format!("binomial sampler: {e}")))?
            .sample(rng) as f64;
        value += a * (2.0 * plus - entry.shots as f64) / entry.shots as f64;
    }
    Ok(NuEstimate { value, shots_used: plan.total_shots(), per_shot: None })
}

/// Either a shadow-type plan or a naive per-term plan.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingPlan {
    Shadow(MeasurementPlan),
    Naive(NaivePlan),
}

impl SamplingPlan {
    pub fn estimate<R: Rng + ?Sized>(&self, state: &StateVector, observable: &ObservableSum, rng: &mut R) -> Result<f64> {
        Ok(match self {
            SamplingPlan::Shadow(p) => estimate_nu(state, observable, p, rng, false)?.value,
            SamplingPlan::Naive(p) => estimate_nu_naive(state, observable, p, rng)?.value,
        })
    }
}

/// Sampled `V_k`: `extended` holds `G_{k,r} · X⊗P_r`, `phase` is `φ_k`.
pub fn estimate_v<R: Rng + ?Sized>(
    spec: &AnsatzSpec,
    params: &[f64],
    k: usize,
    extended: &ObservableSum,
    phase: f64,
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<f64> {
    let state = spec.prepare_v_state(params, k, phase)?;
    plan.estimate(&state, extended, rng)
}

/// Sampled `M_{kl}` (`k <= l`): `bb_extended` holds `G_{k,l,q} · X⊗P_q`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_m<R: Rng + ?Sized>(
    spec: &AnsatzSpec,
    params: &[f64],
    k: usize,
    l: usize,
    bb_extended: &ObservableSum,
    phase: f64,
    plan: &SamplingPlan,
    rng: &mut R,
) -> Result<f64> {
    let state = spec.prepare_m_state(params, k, l, phase)?;
    plan.estimate(&state, bb_extended, rng)
}

/// Complex prefactor `c` with `V_k = Re[c <R_k v| H |R v>]`.
pub fn v_prefactor(mode: EvolutionMode) -> Complex64 {
    let g_conj = DERIVATIVE_COEFF.conj();
    match mode {
        EvolutionMode::Rte => Complex64::new(0.0, -1.0) * g_conj,
        EvolutionMode::Ite => -g_conj,
        EvolutionMode::General => g_conj,
    }
}

/// `V_k` from exact inner products.
pub fn exact_v(spec: &AnsatzSpec, params: &[f64], k: usize, mode: EvolutionMode, hamiltonian: &ObservableSum) -> Result<f64> {
    let bra = spec.branch_state(params, Some(k))?;
    let ket = spec.prepare_state(params)?;
    Ok((v_prefactor(mode) * bra.observable_matrix_element(hamiltonian, &ket)?).re)
}

/// `M_{kl} = Re[g* g <R_k v| B†B |R_l v>]`; `bb = None` means `B†B = I`.
pub fn exact_m(spec: &AnsatzSpec, params: &[f64], k: usize, l: usize, bb: Option<&ObservableSum>) -> Result<f64> {
    let bra = spec.branch_state(params, Some(k))?;
    let ket = spec.branch_state(params, Some(l))?;
    let overlap = match bb {
        None => bra.inner(&ket)?,
        Some(o) => bra.observable_matrix_element(o, &ket)?,
    };
    Ok((DERIVATIVE_COEFF.conj() * DERIVATIVE_COEFF * overlap).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_classical_shadow, build_naive};
    use crate::pauli::Pauli;
    use crate::statevec::{Axis, RandomSource};

    fn ps(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn deterministic_single_term() {
        let state = StateVector::zero(1).unwrap();
        let o = ObservableSum::new([(1.0, ps("Z"))]).unwrap();
        let plan = MeasurementPlan::deterministic(vec![ps("Z"); 5], &[ps("Z")]).unwrap();
        let nu = estimate_nu(&state, &o, &plan, &mut RandomSource::new(0), true).unwrap();
        assert_eq!(nu.value, 1.0);
        assert!(nu.per_shot.unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn empty_observable_gives_zero() {
        let state = StateVector::zero(2).unwrap();
        let o = ObservableSum::new([(0.0, ps("ZZ"))]).unwrap();
        let plan = build_classical_shadow(2, 10, &mut RandomSource::new(0)).unwrap();
        assert_eq!(estimate_nu(&state, &o, &plan, &mut RandomSource::new(1), false).unwrap().value, 0.0);
    }

    #[test]
    fn uncovered_term_errors() {
        let state = StateVector::zero(1).unwrap();
        let o = ObservableSum::new([(1.0, ps("X"))]).unwrap();
        let plan = MeasurementPlan::deterministic(vec![ps("Z")], &[ps("X")]).unwrap();
        assert!(matches!(
            estimate_nu(&state, &o, &plan, &mut RandomSource::new(0), false),
            Err(Error::UncoveredTerm(_))
        ));
    }

    #[test]
    fn per_shot_mean_is_value() {
        let spec = AnsatzSpec::with_axes(2, 1, vec![Axis::Y, Axis::X]).unwrap();
        let state = spec.prepare_state(&[0.3, -0.8]).unwrap();
        let o = ObservableSum::new([(0.5, ps("ZX")), (-0.2, ps("YI"))]).unwrap();
        let plan = build_classical_shadow(2, 300, &mut RandomSource::new(3)).unwrap();
        let nu = estimate_nu(&state, &o, &plan, &mut RandomSource::new(4), true).unwrap();
        let per = nu.per_shot.unwrap();
        let mean = per.iter().sum::<f64>() / per.len() as f64;
        assert!((mean - nu.value).abs() < 1e-12);
    }

    #[test]
    fn naive_converges_and_is_bounded() {
        let state = StateVector::zero(1).unwrap();
        let o = ObservableSum::new([(1.0, ps("Z")), (1.0, ps("X"))]).unwrap();
        let est = estimate_nu_naive(&state, &o, &build_naive(&o, 200_000).unwrap(), &mut RandomSource::new(5)).unwrap();
        assert!((est.value - 1.0).abs() < 0.01);
        let single = ObservableSum::new([(0.7, ps("X"))]).unwrap();
        let one = estimate_nu_naive(&state, &single, &build_naive(&single, 1).unwrap(), &mut RandomSource::new(6)).unwrap();
        assert!((one.value.abs() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn one_qubit_toy_exact() {
        let spec = AnsatzSpec::with_axes(1, 1, vec![Axis::X]).unwrap();
        let h = ObservableSum::new([(1.0, ps("X"))]).unwrap();
        // |v_ref> = |+>, so <+|X X|+> = 1 and V = Re[(1/2) * 1]
        assert!((exact_v(&spec, &[0.0], 1, EvolutionMode::Rte, &h).unwrap() - 0.5).abs() < 1e-12);
        assert!((exact_m(&spec, &[0.0], 1, 1, None).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ite_identity_shift_vanishes() {
        let mut rng = RandomSource::new(8);
        let spec = AnsatzSpec::random(3, 2, &mut rng).unwrap();
        let params: Vec<f64> = (0..spec.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = ObservableSum::new([(0.4, ps("XZI")), (-0.3, ps("IYY"))]).unwrap();
        let shifted = ObservableSum::new([(0.4, ps("XZI")), (-0.3, ps("IYY")), (1.7, ps("III"))]).unwrap();
        for k in 1..=spec.num_params() {
            let a = exact_v(&spec, &params, k, EvolutionMode::Ite, &h).unwrap();
            let b = exact_v(&spec, &params, k, EvolutionMode::Ite, &shifted).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_m_symmetric() {
        let mut rng = RandomSource::new(11);
        let spec = AnsatzSpec::random(2, 2, &mut rng).unwrap();
        let params: Vec<f64> = (0..spec.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        for k in 1..=4 {
            for l in 1..=4 {
                let a = exact_m(&spec, &params, k, l, None).unwrap();
                let b = exact_m(&spec, &params, l, k, None).unwrap();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampled_v_matches_exact_statistically() {
        let mut rng = RandomSource::new(21);
        let spec = AnsatzSpec::random(2, 1, &mut rng).unwrap();
        let params = vec![0.4, -1.1];
        let h = ObservableSum::new([(0.6, ps("XZ")), (0.3, ps("ZI")), (-0.5, ps("YY"))]).unwrap();
        for mode in [EvolutionMode::Rte, EvolutionMode::Ite] {
            let (scale, phase) = crate::ansatz::derivative_phase_and_weight(mode, 1.0);
            let ext = h.extend_with_x(scale).unwrap();
            let exact = exact_v(&spec, &params, 2, mode, &h).unwrap();
            let reps = 200;
            let vals: Vec<f64> = (0..reps)
                .map(|r| {
                    let mut s = RandomSource::stream(5, &[r]);
                    let plan = SamplingPlan::Shadow(build_classical_shadow(3, 500, &mut s).unwrap());
                    estimate_v(&spec, &params, 2, &ext, phase, &plan, &mut s).unwrap()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / reps as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            assert!((mean - exact).abs() < 3.0 * (var / reps as f64).sqrt() + 1e-12, "{mode:?}: {mean} vs {exact}");
        }
    }

    #[test]
    fn sampled_m_diagonal() {
        let spec = AnsatzSpec::with_axes(2, 1, vec![Axis::Z, Axis::Y]).unwrap();
        let bb = ObservableSum::new([(0.25, PauliString::new(vec![Pauli::X, Pauli::I, Pauli::I]).unwrap())]).unwrap();
        let naive = SamplingPlan::Naive(build_naive(&bb, 1).unwrap());
        assert_eq!(
            match &naive {
                SamplingPlan::Naive(p) => p.entries[0].basis.clone(),
                _ => unreachable!(),
            },
            ps("XZZ")
        );
        // diagonal M-state has identical branches, so X on the ancilla is deterministic
        let v = estimate_m(&spec, &[0.2, 0.9], 2, 2, &bb, 0.0, &naive, &mut RandomSource::new(1)).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }
}
