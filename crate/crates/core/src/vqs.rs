//! McLachlan stepper: assemble `M` and `V`, solve `M θ̇ = V`, Euler-step.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{derivative_phase_and_weight, AnsatzSpec, DERIVATIVE_COEFF};
use crate::error::{Error, Result};
use crate::estimator::{v_prefactor, SamplingPlan};
use crate::measure::{
    build_classical_shadow, build_derandomized, build_naive_budget, DerandomizationParams, LdfGrouping,
    MeasurementPlan,
};
use crate::pauli::{ObservableSum, PauliString};
use crate::statevec::{RandomSource, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    /// Real time, `A = -iH`, `B = I`.
    Rte,
    /// Imaginary time, `A = -H`, `B = I`.
    Ite,
    /// Static `B†A` and `B†B` given as real-coefficient Pauli sums.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exact,
    Naive,
    ClassicalShadow,
    Derandomization,
    Ldf,
    /// Derandomized `V`, naive `M` with a fraction `α` of the shots.
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Exact,
        Strategy::Naive,
        Strategy::ClassicalShadow,
        Strategy::Derandomization,
        Strategy::Ldf,
        Strategy::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exact => "exact",
            Strategy::Naive => "naive",
            Strategy::ClassicalShadow => "cs",
            Strategy::Derandomization => "derand",
            Strategy::Ldf => "ldf",
            Strategy::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub mode: EvolutionMode,
    /// `H` for RTE/ITE, `B†A` in general mode.
    pub hamiltonian: ObservableSum,
    /// `B†B` in general mode; ignored (taken as `I`) for RTE/ITE.
    pub bb_observable: Option<ObservableSum>,
    pub dt: f64,
    pub steps: usize,
    pub strategy: Strategy,
    /// Shots per `V_k` estimate per step.
    pub shots_total: usize,
    /// Fraction of `shots_total` spent on each sampled `M_{kl}` (hybrid only);
    /// `None` picks the default from the covering probabilities.
    pub alpha: Option<f64>,
    pub svd_cutoff: f64,
    pub seed: u64,
    /// Trial index, mixed into every random stream.
    pub trial: u64,
    pub derandomization: DerandomizationParams,
}

impl EvolutionConfig {
    pub fn new(mode: EvolutionMode, hamiltonian: ObservableSum, strategy: Strategy) -> Self {
        Self {
            mode,
            hamiltonian,
            bb_observable: None,
            dt: 0.01,
            steps: 5,
            strategy,
            shots_total: 0,
            alpha: None,
            svd_cutoff: 1e-6,
            seed: 0,
            trial: 0,
            derandomization: DerandomizationParams::default(),
        }
    }

    pub fn validate(&self, spec: &AnsatzSpec) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.svd_cutoff.is_finite() && self.svd_cutoff >= 0.0) {
            return Err(Error::Config(format!("svd cutoff must be non-negative, got {}", self.svd_cutoff)));
        }
        if self.hamiltonian.num_qubits() != spec.num_qubits() {
            return Err(Error::LengthMismatch { expected: spec.num_qubits(), got: self.hamiltonian.num_qubits() });
        }
        if let Some(bb) = &self.bb_observable {
            if bb.num_qubits() != spec.num_qubits() {
                return Err(Error::LengthMismatch { expected: spec.num_qubits(), got: bb.num_qubits() });
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0, 1], got {a}")));
            }
        }
        if self.strategy != Strategy::Exact && self.shots_total == 0 {
            return Err(Error::Config("sampled strategies need shots_total >= 1".into()));
        }
        if self.strategy == Strategy::Naive && self.shots_total < self.hamiltonian.len() {
            return Err(Error::Config(format!(
                "naive strategy needs at least one shot per term ({} < {})",
                self.shots_total,
                self.hamiltonian.len()
            )));
        }
        Ok(())
    }

    /// `B†B`, `I` for RTE/ITE.
    pub fn metric_observable(&self) -> Result<ObservableSum> {
        match (self.mode, &self.bb_observable) {
            (EvolutionMode::General, Some(bb)) => Ok(bb.clone()),
            _ => ObservableSum::new([(1.0, PauliString::identity(self.hamiltonian.num_qubits()))]),
        }
    }
}

/// One time point of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub params: Vec<f64>,
    pub energy: f64,
    /// `M`, `V` and `θ̇` used to leave this time point (absent at the last one).
    pub m: Option<Vec<Vec<f64>>>,
    pub v: Option<Vec<f64>>,
    pub theta_dot: Option<Vec<f64>>,
    /// `D_I` against the paired exact trajectory, when one was run.
    pub infidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub strategy: Strategy,
    pub mode: EvolutionMode,
    pub gate_axes: Vec<crate::statevec::Axis>,
    pub records: Vec<StepRecord>,
}

impl EvolutionTrace {
    pub fn final_params(&self) -> &[f64] {
        &self.records.last().expect("trace has at least the initial point").params
    }
}

/// Per-run data that does not change between steps.
struct Prepared {
    /// `G_r · X⊗P_r` for `V`.
    v_extended: ObservableSum,
    v_phase: f64,
    /// `(β_q / 4) · X⊗P_q` for `M`.
    m_extended: ObservableSum,
    derand_plan: Option<MeasurementPlan>,
    ldf: Option<LdfGrouping>,
    m_shots: usize,
}

fn prepare(config: &EvolutionConfig) -> Result<Prepared> {
    let (scale, v_phase) = derivative_phase_and_weight(config.mode, 1.0);
    let v_extended = config.hamiltonian.extend_with_x(scale)?;
    let m_scale = (DERIVATIVE_COEFF.conj() * DERIVATIVE_COEFF).re;
    let m_extended = config.metric_observable()?.extend_with_x(m_scale)?;
    let derand_plan = match config.strategy {
        Strategy::Derandomization | Strategy::Hybrid => {
            Some(build_derandomized(&v_extended, config.shots_total, config.derandomization)?)
        }
        _ => None,
    };
    let ldf = match config.strategy {
        Strategy::Ldf => Some(LdfGrouping::new(&v_extended)?),
        _ => None,
    };
    let m_shots = match (config.strategy, &derand_plan) {
        (Strategy::Hybrid, Some(plan)) => {
            let alpha = match config.alpha {
                Some(a) => a,
                None => hybrid_alpha_default(&v_extended, plan)?,
            };
            ((alpha * config.shots_total as f64).round() as usize).max(m_extended.len())
        }
        _ => 0,
    };
    Ok(Prepared { v_extended, v_phase, m_extended, derand_plan, ldf, m_shots })
}

/// `α = 4 / ⟨1/q⟩_G`, clamped to `(0, 1]`.
pub fn hybrid_alpha_default(extended: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let mean_inv_q = weighted_inverse_q(extended, plan)?;
    Ok((4.0 / mean_inv_q).min(1.0))
}

/// `⟨1/q⟩_G = Σ G² / q / Σ G²`.
pub fn weighted_inverse_q(extended: &ObservableSum, plan: &MeasurementPlan) -> Result<f64> {
    let qs = plan.covering_for(&extended.paulis())?;
    let (num, den) = extended
        .coefficients()
        .iter()
        .zip(&qs)
        .fold((0.0, 0.0), |(n, d), (g, q)| (n + g * g / q, d + g * g));
    if den == 0.0 {
        return Err(Error::Config("weighted average over an all-zero observable".into()));
    }
    Ok(num / den)
}

const TAG_V: u64 = 1;
const TAG_M: u64 = 2;

/// Builds `M` and `V` at `params` with the configured strategy.
pub fn assemble_mv(spec: &AnsatzSpec, params: &[f64], config: &EvolutionConfig, step: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let prepared = prepare(config)?;
    assemble_with(spec, params, config, &prepared, step)
}

fn assemble_with(
    spec: &AnsatzSpec,
    params: &[f64],
    config: &EvolutionConfig,
    prepared: &Prepared,
    step: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let np = spec.num_params();
    let ket = spec.prepare_state(params)?;
    let branches = spec.derivative_branches(params)?;
    let metric = config.metric_observable()?;
    let mode = config.mode;

    // V
    let v_values: Vec<f64> = (1..=np)
        .into_par_iter()
        .map(|k| {
            let bra = &branches[k - 1];
            if config.strategy == Strategy::Exact {
                return Ok((v_prefactor(mode) * bra.observable_matrix_element(&config.hamiltonian, &ket)?).re);
            }
            let mut rng = RandomSource::stream(config.seed, &[TAG_V, config.trial, step as u64, k as u64]);
            let plan = v_plan(config, prepared, &mut rng)?;
            let state = StateVector::ancilla_superposition(bra, &ket, prepared.v_phase)?;
            plan.estimate(&state, &prepared.v_extended, &mut rng)
        })
        .collect::<Result<_>>()?;

    // M (upper triangle)
    let pairs: Vec<(usize, usize)> = (1..=np).flat_map(|k| (k..=np).map(move |l| (k, l))).collect();
    let m_values: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let (bra, ket_l) = (&branches[k - 1], &branches[l - 1]);
            if config.strategy != Strategy::Hybrid {
                let overlap = bra.observable_matrix_element(&metric, ket_l)?;
                return Ok((DERIVATIVE_COEFF.conj() * DERIVATIVE_COEFF * overlap).re);
            }
            let mut rng = RandomSource::stream(config.seed, &[TAG_M, config.trial, step as u64, k as u64, l as u64]);
            let plan = SamplingPlan::Naive(build_naive_budget(&prepared.m_extended, prepared.m_shots)?);
            let state = StateVector::ancilla_superposition(bra, ket_l, 0.0)?;
            plan.estimate(&state, &prepared.m_extended, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut m = DMatrix::zeros(np, np);
    for (&(k, l), &value) in pairs.iter().zip(&m_values) {
        m[(k - 1, l - 1)] = value;
        m[(l - 1, k - 1)] = value;
    }
    Ok((m, DVector::from_vec(v_values)))
}

fn v_plan(config: &EvolutionConfig, prepared: &Prepared, rng: &mut RandomSource) -> Result<SamplingPlan> {
    let n = prepared.v_extended.num_qubits();
    Ok(match config.strategy {
        Strategy::Naive => SamplingPlan::Naive(build_naive_budget(&prepared.v_extended, config.shots_total)?),
        Strategy::ClassicalShadow => SamplingPlan::Shadow(build_classical_shadow(n, config.shots_total, rng)?),
        Strategy::Derandomization | Strategy::Hybrid => {
            SamplingPlan::Shadow(prepared.derand_plan.clone().expect("prepared for derandomization"))
        }
        Strategy::Ldf => SamplingPlan::Shadow(
            prepared
                .ldf
                .as_ref()
                .expect("prepared for LDF")
                .sample_plan(&prepared.v_extended, config.shots_total, rng)?,
        ),
        Strategy::Exact => unreachable!("exact strategy is not sampled"),
    })
}

/// `Δθ = dt · M⁺ V`, where `M⁺` drops singular values below `cutoff · σ_max`.
pub fn solve_step(m: &DMatrix<f64>, v: &DVector<f64>, dt: f64, cutoff: f64) -> Result<DVector<f64>> {
    Ok(pseudo_inverse(m, cutoff)? * v * dt)
}

/// Truncated-SVD pseudo-inverse.
pub fn pseudo_inverse(m: &DMatrix<f64>, cutoff: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularM);
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max <= 0.0 {
        return Err(Error::SingularM);
    }
    let threshold = cutoff * sigma_max;
    let inv = svd.singular_values.map(|s| if s > threshold { 1.0 / s } else { 0.0 });
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    Ok(v_t.transpose() * DMatrix::from_diagonal(&inv) * u.transpose())
}

/// `D_I = sqrt(1 - |<v(θ_a)|v(θ_b)>|²)`.
pub fn infidelity(spec: &AnsatzSpec, params_a: &[f64], params_b: &[f64]) -> Result<f64> {
    let a = spec.prepare_state(params_a)?;
    let b = spec.prepare_state(params_b)?;
    state_infidelity(&a, &b)
}

pub fn state_infidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok((1.0 - overlap).clamp(0.0, 1.0).sqrt())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Forward-Euler trajectory from `initial`.
pub fn run_evolution(spec: &AnsatzSpec, initial: &[f64], config: &EvolutionConfig) -> Result<EvolutionTrace> {
    config.validate(spec)?;
    if initial.len() != spec.num_params() {
        return Err(Error::ParamLength { expected: spec.num_params(), got: initial.len() });
    }
    let prepared = prepare(config)?;
    let mut params = initial.to_vec();
    let mut records = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let energy = spec.prepare_state(&params)?.expectation(&config.hamiltonian)?;
        let mut record = StepRecord {
            step,
            t: step as f64 * config.dt,
            params: params.clone(),
            energy,
            m: None,
            v: None,
            theta_dot: None,
            infidelity: None,
        };
        if step < config.steps {
            let (m, v) = assemble_with(spec, &params, config, &prepared, step)?;
            let delta = solve_step(&m, &v, config.dt, config.svd_cutoff)?;
            record.theta_dot = Some(delta.iter().map(|d| d / config.dt).collect());
            record.m = Some(matrix_rows(&m));
            record.v = Some(v.iter().copied().collect());
            for (p, d) in params.iter_mut().zip(delta.iter()) {
                *p += d;
            }
        }
        records.push(record);
    }
    Ok(EvolutionTrace { strategy: config.strategy, mode: config.mode, gate_axes: spec.gate_axes().to_vec(), records })
}

/// Runs `config` and the exact-strategy trajectory from the same start, and
/// fills in `D_I` per time point on the sampled trace.
pub fn run_paired(spec: &AnsatzSpec, initial: &[f64], config: &EvolutionConfig) -> Result<(EvolutionTrace, EvolutionTrace)> {
    let exact_config = EvolutionConfig { strategy: Strategy::Exact, ..config.clone() };
    let exact = run_evolution(spec, initial, &exact_config)?;
    let mut sampled = if config.strategy == Strategy::Exact {
        exact.clone()
    } else {
        run_evolution(spec, initial, config)?
    };
    for (rec, ideal) in sampled.records.iter_mut().zip(&exact.records) {
        rec.infidelity = Some(infidelity(spec, &ideal.params, &rec.params)?);
    }
    Ok((sampled, exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::Axis;
    use rand::Rng;

    fn toy() -> (AnsatzSpec, EvolutionConfig) {
        let spec = AnsatzSpec::with_axes(1, 1, vec![Axis::X]).unwrap();
        let h = ObservableSum::new([(1.0, PauliString::parse("X").unwrap())]).unwrap();
        (spec, EvolutionConfig::new(EvolutionMode::Rte, h, Strategy::Exact))
    }

    #[test]
    fn toy_assembly() {
        let (spec, config) = toy();
        let (m, v) = assemble_mv(&spec, &[0.0], &config, 0).unwrap();
        assert!((m[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((v[0] - 0.5).abs() < 1e-12);
        let d = solve_step(&m, &v, 0.01, 1e-6).unwrap();
        assert!((d[0] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn solve_step_examples() {
        let m = DMatrix::<f64>::identity(3, 3);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((solve_step(&m, &v, 0.1, 1e-6).unwrap() - &v * 0.1).norm() < 1e-14);
        let zero = DVector::zeros(3);
        assert_eq!(solve_step(&m, &zero, 0.1, 1e-6).unwrap().norm(), 0.0);
        assert_eq!(solve_step(&DMatrix::zeros(2, 2), &DVector::zeros(2), 0.1, 1e-6), Err(Error::SingularM));
    }

    #[test]
    fn pseudo_inverse_is_minimum_norm() {
        // rank-1 M: solution must lie in the row space
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let v = DVector::from_vec(vec![2.0, 2.0]);
        let x = solve_step(&m, &v, 1.0, 1e-6).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_trajectory_tracks_exact_angle() {
        let (spec, mut config) = toy();
        config.dt = 1e-3;
        config.steps = 100;
        let trace = run_evolution(&spec, &[0.0], &config).unwrap();
        for r in &trace.records {
            assert!((r.params[0] - 2.0 * r.t).abs() < 1e-3);
        }
    }

    #[test]
    fn infidelity_examples() {
        let spec = AnsatzSpec::with_axes(1, 1, vec![Axis::Y]).unwrap();
        assert!(infidelity(&spec, &[0.3], &[0.3]).unwrap() < 1e-7);
        // Ry(π) maps |+> to |-> (up to phase)
        assert!((infidelity(&spec, &[0.0], &[std::f64::consts::PI]).unwrap() - 1.0).abs() < 1e-12);
        let d = infidelity(&spec, &[0.0], &[1e-3]).unwrap();
        assert!((d - 0.5e-3).abs() < 1e-6);
    }

    #[test]
    fn steps_zero_has_zero_infidelity() {
        let (spec, mut config) = toy();
        config.steps = 0;
        config.strategy = Strategy::ClassicalShadow;
        config.shots_total = 10;
        let (trace, _) = run_paired(&spec, &[0.4], &config).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].infidelity, Some(0.0));
    }

    #[test]
    fn exact_metric_is_psd() {
        let mut rng = RandomSource::new(3);
        let spec = AnsatzSpec::random(3, 2, &mut rng).unwrap();
        let params: Vec<f64> = (0..spec.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = ObservableSum::new([(1.0, PauliString::parse("ZZI").unwrap())]).unwrap();
        let config = EvolutionConfig::new(EvolutionMode::Ite, h, Strategy::Exact);
        let (m, _) = assemble_mv(&spec, &params, &config, 0).unwrap();
        assert!((&m - m.transpose()).norm() < 1e-10);
        assert!(m.symmetric_eigenvalues().min() > -1e-9);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn alpha_default_examples() {
        let h = ObservableSum::new([(1.0, PauliString::parse("XZ").unwrap())]).unwrap();
        let plan = MeasurementPlan::deterministic(vec![PauliString::parse("XZ").unwrap()], &h.paulis()).unwrap();
        assert_eq!(hybrid_alpha_default(&h, &plan).unwrap(), 1.0);
        let bases: Vec<_> = ["XZ", "XX", "XY", "YY", "ZZ", "ZX", "ZY", "YX"]
            .iter()
            .map(|s| PauliString::parse(s).unwrap())
            .collect();
        let plan = MeasurementPlan::deterministic(bases, &h.paulis()).unwrap();
        assert!((hybrid_alpha_default(&h, &plan).unwrap() - 0.5).abs() < 1e-15);
    }
}
