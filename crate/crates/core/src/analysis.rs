//! Closed-form shot-noise variances, their Haar-average surrogates, shot-count
//! ratios and the error-propagation quantities used to compare strategies.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{derivative_phase_and_weight, AnsatzSpec};
use crate::error::{Error, Result};
use crate::measure::{
    build_derandomized, build_naive_budget, covers, DerandomizationParams, LdfGrouping, MeasurementPlan, PlanKind,
};
use crate::pauli::{ObservableSum, Pauli, PauliString};
use crate::statevec::{support_mask, RandomSource, StateVector};
use crate::vqs::{pseudo_inverse, weighted_inverse_q, EvolutionMode, Strategy};

/// Magnitude convention for the derivative coefficient in `G = |g| · α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GConvention {
    /// `|g| = 1/2`, the value for `exp(-iσθ/2)` rotations.
    #[default]
    Half,
    /// `|g| = 1`.
    Unit,
}

impl GConvention {
    pub fn scale(self) -> f64 {
        match self {
            GConvention::Half => 0.5,
            GConvention::Unit => 1.0,
        }
    }
}

impl std::str::FromStr for GConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(GConvention::Half),
            "unit" => Ok(GConvention::Unit),
            _ => Err(Error::Config(format!("unknown g convention {s:?}"))),
        }
    }
}

/// Closed-form `g` for uniformly random bases: product over qubits of
/// 1 (either letter is `I`), 3 (equal non-identity letters) or 0.
pub fn g_cs(pj: &PauliString, pl: &PauliString) -> Result<f64> {
    if pj.num_qubits() != pl.num_qubits() {
        return Err(Error::LengthMismatch { expected: pj.num_qubits(), got: pl.num_qubits() });
    }
    let mut g = 1.0;
    for (&a, &b) in pj.letters().iter().zip(pl.letters()) {
        if a == Pauli::I || b == Pauli::I {
            continue;
        }
        if a != b {
            return Ok(0.0);
        }
        g *= 3.0;
    }
    Ok(g)
}

/// `g(P_j, P_l)`; closed form for probabilistic plans, basis average for
/// deterministic ones.
pub fn g_factor(pj: &PauliString, pl: &PauliString, plan: &MeasurementPlan) -> Result<f64> {
    match plan.kind() {
        PlanKind::Probabilistic => g_cs(pj, pl),
        PlanKind::Deterministic => {
            let (qj, ql) = (plan.covering_q(pj)?, plan.covering_q(pl)?);
            if qj == 0.0 {
                return Err(Error::UncoveredTerm(pj.to_string()));
            }
            if ql == 0.0 {
                return Err(Error::UncoveredTerm(pl.to_string()));
            }
            let both = plan.bases().iter().filter(|m| covers(m, pj) && covers(m, pl)).count();
            Ok(both as f64 / plan.num_shots() as f64 / (qj * ql))
        }
    }
}

/// `Tr(P_j P_l ρ)`, real part.
fn product_expectation(state: &StateVector, pj: &PauliString, pl: &PauliString) -> Result<f64> {
    let prod = pj.multiply(pl)?;
    Ok((prod.phase.to_complex() * state.expectation_pauli(&prod.pauli)?).re)
}

/// `Σ_j a_j²/q_j + Σ_{j≠l} a_j a_l g(P_j,P_l) Tr(P_j P_l ρ)`, i.e. the
/// shot-averaged second moment of `ν_r`.
pub fn second_moment(state: &StateVector, observable: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let paulis = observable.paulis();
    let qs = plan.covering_for(&paulis)?;
    match plan.kind() {
        PlanKind::Probabilistic => {
            let terms = observable.terms();
            let diag: f64 = terms.iter().zip(&qs).map(|((a, _), q)| a * a / q).sum();
            let cross: f64 = (0..terms.len())
                .into_par_iter()
                .map(|j| -> Result<f64> {
                    let (aj, pj) = &terms[j];
                    let mut s = 0.0;
                    for (l, (al, pl)) in terms.iter().enumerate() {
                        if l == j {
                            continue;
                        }
                        let g = g_cs(pj, pl)?;
                        if g != 0.0 {
                            s += aj * al * g * product_expectation(state, pj, pl)?;
                        }
                    }
                    Ok(s)
                })
                .sum::<Result<f64>>()?;
            Ok(diag + cross)
        }
        PlanKind::Deterministic => {
            // (1/N) Σ_r E[ν_r²], one outcome distribution per distinct basis
            let weighted: Vec<(f64, usize, &PauliString)> = observable
                .terms()
                .iter()
                .zip(&qs)
                .map(|((a, p), q)| (a / q, support_mask(p), p))
                .collect();
            let mut counts: HashMap<&PauliString, usize> = HashMap::new();
            for b in plan.bases() {
                *counts.entry(b).or_default() += 1;
            }
            let total: f64 = counts
                .into_par_iter()
                .map(|(basis, count)| -> Result<f64> {
                    let (m1, m2) = basis_moments(state, basis, &weighted)?;
                    let _ = m1;
                    Ok(count as f64 * m2)
                })
                .sum::<Result<f64>>()?;
            Ok(total / plan.num_shots() as f64)
        }
    }
}

/// First and second moments of `ν_r` for one shot in `basis`.
fn basis_moments(state: &StateVector, basis: &PauliString, weighted: &[(f64, usize, &PauliString)]) -> Result<(f64, f64)> {
    let covered: Vec<(f64, usize)> =
        weighted.iter().filter(|(_, _, p)| covers(basis, p)).map(|&(w, m, _)| (w, m)).collect();
    let probs = state.basis_probabilities(basis)?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (b, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let nu: f64 = covered.iter().map(|&(w, mask)| if (b & mask).count_ones() % 2 == 0 { w } else { -w }).sum();
        m1 += p * nu;
        m2 += p * nu * nu;
    }
    Ok((m1, m2))
}

/// Analytic `Var(ν) = [second moment - Tr(Hρ)²] / N_shot`.
pub fn variance_shadow(state: &StateVector, observable: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let mean = state.expectation(observable)?;
    Ok((second_moment(state, observable, plan)? - mean * mean) / plan.num_shots() as f64)
}

/// Same quantity as [`variance_shadow`] evaluated pair by pair with
/// [`g_factor`]; quadratic in the number of terms.
pub fn variance_shadow_pairwise(state: &StateVector, observable: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let terms = observable.terms();
    let mut s = 0.0;
    for (aj, pj) in terms {
        for (al, pl) in terms {
            let g = g_factor(pj, pl, plan)?;
            if pj == pl {
                s += aj * aj / plan.covering_q(pj)?;
            } else if g != 0.0 {
                s += aj * al * g * product_expectation(state, pj, pl)?;
            }
        }
    }
    let mean = state.expectation(observable)?;
    Ok((s - mean * mean) / plan.num_shots() as f64)
}

/// Exact variance of `ν` when the basis list is held fixed and only the
/// outcomes are random: `(1/N²) Σ_r Var(ν_r)`. Never larger than
/// [`variance_shadow`] for a deterministic plan.
pub fn variance_fixed_plan(state: &StateVector, observable: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let qs = plan.covering_for(&observable.paulis())?;
    let weighted: Vec<(f64, usize, &PauliString)> = observable
        .terms()
        .iter()
        .zip(&qs)
        .map(|((a, p), q)| (a / q, support_mask(p), p))
        .collect();
    let mut counts: HashMap<&PauliString, usize> = HashMap::new();
    for b in plan.bases() {
        *counts.entry(b).or_default() += 1;
    }
    let mut total = 0.0;
    for (basis, count) in counts {
        let (m1, m2) = basis_moments(state, basis, &weighted)?;
        total += count as f64 * (m2 - m1 * m1);
    }
    let n = plan.num_shots() as f64;
    Ok(total / (n * n))
}

/// Naive per-term variance `Σ_j [a_j² - (a_j Tr(P_j ρ))²] / N_j`.
pub fn variance_naive(state: &StateVector, observable: &ObservableSum, shots: &[usize]) -> Result<f64> {
    if shots.len() != observable.len() {
        return Err(Error::LengthMismatch { expected: observable.len(), got: shots.len() });
    }
    let mut s = 0.0;
    for ((a, p), &n) in observable.terms().iter().zip(shots) {
        if n == 0 {
            return Err(Error::UncoveredTerm(p.to_string()));
        }
        let t = state.expectation_pauli(p)?;
        s += a * a * (1.0 - t * t) / n as f64;
    }
    Ok(s)
}

/// Haar-average surrogate `Σ G² / q / N_shot`.
pub fn approximation_shadow(observable: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let qs = plan.covering_for(&observable.paulis())?;
    let s: f64 = observable.coefficients().iter().zip(&qs).map(|(g, q)| g * g / q).sum();
    Ok(s / plan.num_shots() as f64)
}

/// Naive surrogate `Σ_j G_j² / N_j`.
pub fn approximation_naive(observable: &ObservableSum, shots: &[usize]) -> Result<f64> {
    if shots.len() != observable.len() {
        return Err(Error::LengthMismatch { expected: observable.len(), got: shots.len() });
    }
    Ok(observable.coefficients().iter().zip(shots).map(|(g, &n)| g * g / n as f64).sum())
}

/// Upper bound on `N_shadow / N_naive` for sampling both `V` and `M`.
pub fn shot_ratio_bound(inv_q_v: f64, inv_q_m: f64, num_params: usize, num_g: usize, n_ba: usize, n_bb: usize) -> f64 {
    let pg = (num_params * num_g) as f64;
    (1.0 + pg) / (n_ba as f64 + pg * n_bb as f64) * (inv_q_v.sqrt() + inv_q_m.sqrt()).powi(2)
}

/// Upper bound on `N_hybrid / N_naive` with `α = 4/⟨1/q⟩_G`.
pub fn shot_ratio_hybrid(inv_q_v: f64, n_ba: usize) -> f64 {
    inv_q_v / n_ba as f64 * 9.0 / 4.0
}

/// [`shot_ratio_hybrid`] with `⟨1/q⟩_G` taken from a plan.
pub fn shot_ratio_hybrid_for(extended: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    Ok(shot_ratio_hybrid(weighted_inverse_q(extended, plan)?, extended.len()))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarReport {
    pub num_qubits: usize,
    pub samples: usize,
    pub empirical_mean: f64,
    pub mean_stderr: f64,
    pub closed_mean: f64,
    pub empirical_variance: f64,
    pub closed_variance: f64,
    pub naive_empirical_mean: f64,
    pub naive_closed_mean: f64,
}

impl HaarReport {
    /// `|empirical - closed| <= 3σ` for the mean.
    pub fn mean_within(&self, sigmas: f64) -> bool {
        (self.empirical_mean - self.closed_mean).abs() <= sigmas * self.mean_stderr
    }
}

/// `V(ρ) = Σ_r G_r²/q_r + Σ_{r≠r'} G_r G_r' g Tr(P_r P_r' ρ)`, split as a
/// constant plus an operator `A = Σ_Q c_Q Q` over the distinct products.
struct HaarFunctional {
    constant: f64,
    operator: Vec<(f64, PauliString)>,
}

impl HaarFunctional {
    fn new(extended: &ObservableSum, plan: &MeasurementPlan) -> Result<Self> {
        let terms = extended.terms();
        let qs = plan.covering_for(&extended.paulis())?;
        let constant = terms.iter().zip(&qs).map(|((g, _), q)| g * g / q).sum();
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        let mut order = Vec::new();
        for (r, (gr, pr)) in terms.iter().enumerate() {
            for (s, (gs, ps)) in terms.iter().enumerate() {
                if r == s {
                    continue;
                }
                let g = g_factor(pr, ps, plan)?;
                if g == 0.0 {
                    continue;
                }
                let prod = pr.multiply(ps)?;
                let c = prod.phase.to_complex() * gr * gs * g;
                if !acc.contains_key(&prod.pauli) {
                    order.push(prod.pauli.clone());
                }
                *acc.entry(prod.pauli).or_default() += c;
            }
        }
        let operator = order
            .into_iter()
            .map(|q| {
                let c = acc[&q];
                debug_assert!(c.im.abs() < 1e-9, "operator is Hermitian");
                (c.re, q)
            })
            .filter(|(c, _)| c.abs() > 1e-15)
            .collect();
        Ok(Self { constant, operator })
    }

    fn eval(&self, state: &StateVector) -> Result<f64> {
        let mut v = self.constant;
        for (c, q) in &self.operator {
            v += c * state.expectation_pauli(q)?;
        }
        Ok(v)
    }

    /// `Σ_Q c_Q² / (D + 1)` with `D` the Hilbert-space dimension.
    fn closed_variance(&self, num_qubits: usize) -> f64 {
        let d = (num_qubits as f64).exp2();
        self.operator.iter().map(|(c, _)| c * c).sum::<f64>() / (d + 1.0)
    }
}

/// Closed-form Haar variance of `V(ρ)` written as the quadruple sum
/// `Σ_{r≠r', u≠u'} G G G G g g Tr(P_r P_r' P_u P_u') / (D(D+1))`.
pub fn haar_variance_quadruple(extended: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let terms = extended.terms();
    let d = (extended.num_qubits() as f64).exp2();
    let mut pairs = Vec::new();
    for (r, (gr, pr)) in terms.iter().enumerate() {
        for (s, (gs, ps)) in terms.iter().enumerate() {
            if r != s {
                let g = g_factor(pr, ps, plan)?;
                if g != 0.0 {
                    pairs.push((gr * gs * g, pr, ps));
                }
            }
        }
    }
    let mut total = Complex64::new(0.0, 0.0);
    for &(c1, a, b) in &pairs {
        for &(c2, c, e) in &pairs {
            let tr = crate::pauli::trace_product_complex(&[a.clone(), b.clone(), c.clone(), e.clone()])?;
            total += tr * c1 * c2;
        }
    }
    Ok(total.re / (d * (d + 1.0)))
}

/// Samples Haar-random states and compares the empirical mean and variance
/// of `V(ρ)` (and the mean of its naive counterpart) with the closed forms.
pub fn haar_check(extended: &ObservableSum, plan: &MeasurementPlan, samples: usize, seed: u64) -> Result<HaarReport> {
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let n = extended.num_qubits();
    let functional = HaarFunctional::new(extended, plan)?;
    let values: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomSource::stream(seed, &[i]);
            let state = haar_random_state(n, &mut rng)?;
            let v = functional.eval(&state)?;
            let naive = extended
                .terms()
                .iter()
                .map(|(g, p)| Ok(g * g * (1.0 - state.expectation_pauli(p)?.powi(2))))
                .sum::<Result<f64>>()?;
            Ok((v, naive))
        })
        .collect::<Result<_>>()?;
    let m = samples as f64;
    let mean = values.iter().map(|v| v.0).sum::<f64>() / m;
    let var = if samples > 1 { values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    let naive_mean = values.iter().map(|v| v.1).sum::<f64>() / m;
    let d = (n as f64).exp2();
    let sum_g2: f64 = extended.coefficients().iter().map(|g| g * g).sum();
    Ok(HaarReport {
        num_qubits: n,
        samples,
        empirical_mean: mean,
        mean_stderr: (var / m).sqrt(),
        closed_mean: functional.constant,
        empirical_variance: var,
        closed_variance: functional.closed_variance(n),
        naive_empirical_mean: naive_mean,
        naive_closed_mean: sum_g2 * (1.0 - 1.0 / (d + 1.0)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaQuantities {
    pub naive: f64,
    pub shadow: f64,
    pub hybrid: f64,
}

/// Propagates per-element standard deviations through `θ̇ = M⁻¹V`:
/// `‖M⁻¹‖_F sqrt(Σ ΔV²) + ‖M⁻¹‖_F² ‖V‖ sqrt(Σ ΔM²)`. The hybrid value pairs
/// the shadow `ΔV` with the naive `ΔM` inflated by `1/α`.
#[allow(clippy::too_many_arguments)]
pub fn delta_quantities(
    m: &DMatrix<f64>,
    v: &DVector<f64>,
    dv_naive: &[f64],
    dv_shadow: &[f64],
    dm_naive: &[f64],
    dm_shadow: &[f64],
    alpha: f64,
    svd_cutoff: f64,
) -> Result<DeltaQuantities> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let inv = pseudo_inverse(m, svd_cutoff)?;
    let f = inv.norm();
    let vn = v.norm();
    let root = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let combine = |dv: f64, dm: f64| f * dv + f * f * vn * dm;
    Ok(DeltaQuantities {
        naive: combine(root(dv_naive), root(dm_naive)),
        shadow: combine(root(dv_shadow), root(dm_shadow)),
        hybrid: combine(root(dv_shadow), root(dm_naive) / alpha.sqrt()),
    })
}

/// One row of a Variance / Approximation / Diff table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub parameters: String,
    pub strategy: Strategy,
    pub variance: f64,
    pub approximation: f64,
    pub diff: f64,
}

/// Inputs for [`variance_table`].
#[derive(Debug, Clone)]
pub struct VarianceSetup<'a> {
    pub spec: &'a AnsatzSpec,
    pub hamiltonian: &'a ObservableSum,
    pub mode: EvolutionMode,
    pub shots_total: usize,
    pub convention: GConvention,
    pub derandomization: DerandomizationParams,
    pub seed: u64,
}

/// Plan-level data for one strategy: the surrogate and a per-state variance.
enum StrategyPlan {
    Naive(Vec<usize>),
    Shadow(MeasurementPlan),
}

/// Variance of the `V_k` estimator averaged over `k`, its Haar surrogate,
/// and their difference, for every `(parameter set, strategy)` pair.
pub fn variance_table(
    setup: &VarianceSetup<'_>,
    parameter_sets: &[(String, Vec<f64>)],
    strategies: &[Strategy],
) -> Result<Vec<VarianceRow>> {
    let (_, phase) = derivative_phase_and_weight(setup.mode, 1.0);
    let extended = setup.hamiltonian.extend_with_x(setup.convention.scale())?;
    let n_ext = extended.num_qubits();
    let mut plans = Vec::new();
    for &s in strategies {
        let plan = match s {
            Strategy::Naive => StrategyPlan::Naive(
                build_naive_budget(&extended, setup.shots_total)?.entries.iter().map(|e| e.shots).collect(),
            ),
            Strategy::ClassicalShadow => StrategyPlan::Shadow(crate::measure::build_classical_shadow(
                n_ext,
                setup.shots_total,
                &mut RandomSource::stream(setup.seed, &[3]),
            )?),
            Strategy::Derandomization | Strategy::Hybrid => {
                StrategyPlan::Shadow(build_derandomized(&extended, setup.shots_total, setup.derandomization)?)
            }
            Strategy::Ldf => StrategyPlan::Shadow(LdfGrouping::new(&extended)?.sample_plan(
                &extended,
                setup.shots_total,
                &mut RandomSource::stream(setup.seed, &[4]),
            )?),
            Strategy::Exact => return Err(Error::Config("exact strategy has no shot noise".into())),
        };
        plans.push((s, plan));
    }
    let mut rows = Vec::new();
    for (label, params) in parameter_sets {
        let ket = setup.spec.prepare_state(params)?;
        let branches = setup.spec.derivative_branches(params)?;
        let states: Vec<StateVector> = branches
            .iter()
            .map(|b| StateVector::ancilla_superposition(b, &ket, phase))
            .collect::<Result<_>>()?;
        for (s, plan) in &plans {
            let approximation = match plan {
                StrategyPlan::Naive(shots) => approximation_naive(&extended, shots)?,
                StrategyPlan::Shadow(p) => approximation_shadow(&extended, p)?,
            };
            let per_k: Vec<f64> = states
                .par_iter()
                .map(|state| match plan {
                    StrategyPlan::Naive(shots) => variance_naive(state, &extended, shots),
                    StrategyPlan::Shadow(p) => variance_shadow(state, &extended, p),
                })
                .collect::<Result<_>>()?;
            let variance = per_k.iter().sum::<f64>() / per_k.len() as f64;
            rows.push(VarianceRow {
                parameters: label.clone(),
                strategy: *s,
                variance,
                approximation,
                diff: per_k.iter().map(|v| (v - approximation).abs()).sum::<f64>() / per_k.len() as f64,
            });
        }
    }
    Ok(rows)
}
