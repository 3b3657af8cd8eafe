//! Covering and estimation functions, and the measurement-basis builders:
//! classical shadow, derandomization, LDF grouping and naive per-term plans.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{ObservableSum, Pauli, PauliString};

/// `f(P, M)`: true iff every non-identity letter of `P` equals the letter of `M`.
pub fn covering_f(p: &PauliString, m: &PauliString) -> Result<bool> {
    if p.num_qubits() != m.num_qubits() {
        return Err(Error::LengthMismatch { expected: p.num_qubits(), got: m.num_qubits() });
    }
    Ok(covers(m, p))
}

#[inline]
pub(crate) fn covers(basis: &PauliString, p: &PauliString) -> bool {
    p.letters().iter().zip(basis.letters()).all(|(&a, &b)| a == Pauli::I || a == b)
}

/// `μ(P, b)`: product of the outcome signs over the support of `P`.
pub fn estimate_mu(p: &PauliString, b: &[i8]) -> Result<i8> {
    if p.num_qubits() != b.len() {
        return Err(Error::LengthMismatch { expected: p.num_qubits(), got: b.len() });
    }
    Ok(p.letters()
        .iter()
        .zip(b)
        .filter(|(&l, _)| l != Pauli::I)
        .map(|(_, &s)| if s == 1 { 1 } else { -1 })
        .product())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    /// Bases drawn i.i.d. uniformly from `{X, Y, Z}^n`; `q(P) = 3^{-locality(P)}`.
    Probabilistic,
    /// Fixed basis list; `q(P)` is the fraction of bases covering `P`.
    Deterministic,
}

/// Ordered measurement bases with the covering probability of each target term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    bases: Vec<PauliString>,
    kind: PlanKind,
    covering: HashMap<PauliString, f64>,
}

impl MeasurementPlan {
    /// Deterministic plan over `bases`, with `q` tabulated for `targets`.
    pub fn deterministic(bases: Vec<PauliString>, targets: &[PauliString]) -> Result<Self> {
        let covering = targets
            .iter()
            .map(|t| Ok((t.clone(), deterministic_q(t, &bases)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { bases, kind: PlanKind::Deterministic, covering })
    }

    pub fn bases(&self) -> &[PauliString] {
        &self.bases
    }

    pub fn num_shots(&self) -> usize {
        self.bases.len()
    }

    pub fn kind(&self) -> PlanKind {
        self.kind
    }

    /// `q(P)`. Deterministic plans only answer for the terms they were built for.
    pub fn covering_q(&self, p: &PauliString) -> Result<f64> {
        match self.kind {
            PlanKind::Probabilistic => Ok(3f64.powi(-(p.locality() as i32))),
            PlanKind::Deterministic => {
                self.covering.get(p).copied().ok_or_else(|| Error::UncoveredTerm(p.to_string()))
            }
        }
    }

    /// `q(P_j)` for each term, failing on a zero.
    pub fn covering_for(&self, terms: &[PauliString]) -> Result<Vec<f64>> {
        terms
            .iter()
            .map(|t| {
                let q = self.covering_q(t)?;
                if q > 0.0 {
                    Ok(q)
                } else {
                    Err(Error::UncoveredTerm(t.to_string()))
                }
            })
            .collect()
    }

    /// Fails with `PlanRejected` if some target term is never covered.
    pub fn ensure_covers(&self, terms: &[PauliString]) -> Result<()> {
        for t in terms {
            if self.covering_q(t)? == 0.0 {
                return Err(Error::PlanRejected(t.to_string()));
            }
        }
        Ok(())
    }

    /// One basis per line.
    pub fn to_text(&self) -> String {
        self.bases.iter().map(|b| format!("{b}\n")).collect()
    }
}

/// `q(P) = (1/N) Σ_r f(P, M_r)`.
pub fn deterministic_q(p: &PauliString, bases: &[PauliString]) -> Result<f64> {
    if bases.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for b in bases {
        if covering_f(p, b)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / bases.len() as f64)
}

/// `num_shots` bases with every letter i.i.d. uniform over `{X, Y, Z}`.
pub fn build_classical_shadow<R: Rng + ?Sized>(n: usize, num_shots: usize, rng: &mut R) -> Result<MeasurementPlan> {
    if num_shots == 0 {
        return Err(Error::Config("classical shadow needs at least one shot".into()));
    }
    let bases = (0..num_shots)
        .map(|_| PauliString::new((0..n).map(|_| Pauli::XYZ[rng.random_range(0..3)]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementPlan { bases, kind: PlanKind::Probabilistic, covering: HashMap::new() })
}

/// Hyperparameters of the derandomization score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerandomizationParams {
    pub eta: f64,
    pub gamma: f64,
}

impl Default for DerandomizationParams {
    fn default() -> Self {
        Self { eta: 0.9, gamma: 1.0 }
    }
}

impl DerandomizationParams {
    fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0 && self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("derandomization needs finite eta, gamma > 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Greedy derandomized basis selection.
///
/// Letters are fixed in the order `M_1[1], ..., M_1[n], M_2[1], ...`; each is
/// the letter minimizing `Σ_j exp(-V_j / w_j)` with
/// `V_j = η/2 · #{completed bases covering P_j} - ln(1 - β_j · [P_j still matches])`
/// and `β_j = γ · 3^{-(non-identity letters of P_j not yet assigned)}`.
/// Ties go to the first of `X, Y, Z`.
pub fn build_derandomized(
    terms: &ObservableSum,
    num_shots: usize,
    params: DerandomizationParams,
) -> Result<MeasurementPlan> {
    params.validate()?;
    if num_shots == 0 {
        return Err(Error::Config("derandomization needs at least one shot".into()));
    }
    if terms.is_empty() {
        return Err(Error::Config("derandomization needs at least one term".into()));
    }
    let n = terms.num_qubits();
    let paulis = terms.paulis();
    let max_abs = terms.terms().iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
    let weights: Vec<f64> = terms.terms().iter().map(|(c, _)| c.abs() / max_abs).collect();
    // remaining[j][i]: non-identity letters of P_j at positions > i
    let remaining: Vec<Vec<i32>> = paulis
        .iter()
        .map(|p| {
            let mut acc = 0;
            let mut v = vec![0; n];
            for i in (0..n).rev() {
                v[i] = acc;
                if p.get(i) != Pauli::I {
                    acc += 1;
                }
            }
            v
        })
        .collect();
    let half_eta = params.eta / 2.0;

    let mut hit_counts = vec![0usize; paulis.len()];
    let mut bases = Vec::with_capacity(num_shots);
    for _ in 0..num_shots {
        let mut matching = vec![true; paulis.len()];
        let mut letters = Vec::with_capacity(n);
        // exponent offset so the largest contribution stays O(1)
        let offset = hit_counts
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| half_eta * c as f64 / w)
            .fold(f64::INFINITY, f64::min);
        for i in 0..n {
            let mut best = (f64::INFINITY, Pauli::X);
            for letter in Pauli::XYZ {
                let cost: f64 = paulis
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        let still = matching[j] && (p.get(i) == Pauli::I || p.get(i) == letter);
                        let mut v = half_eta * hit_counts[j] as f64;
                        if still {
                            let beta = params.gamma * 3f64.powi(-remaining[j][i]);
                            v -= (1.0 - beta).ln();
                        }
                        (-(v / weights[j]) + offset).exp()
                    })
                    .sum();
                if cost < best.0 {
                    best = (cost, letter);
                }
            }
            let chosen = best.1;
            for (j, p) in paulis.iter().enumerate() {
                matching[j] = matching[j] && (p.get(i) == Pauli::I || p.get(i) == chosen);
            }
            letters.push(chosen);
        }
        for (count, m) in hit_counts.iter_mut().zip(&matching) {
            *count += usize::from(*m);
        }
        bases.push(PauliString::new(letters)?);
    }
    let plan = MeasurementPlan::deterministic(bases, &paulis)?;
    plan.ensure_covers(&paulis)?;
    Ok(plan)
}

/// Qubit-wise-commuting groups from largest-degree-first coloring of the
/// incompatibility graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdfGrouping {
    /// Term indices per group, in coloring order.
    pub groups: Vec<Vec<usize>>,
    /// Covering basis per group (identity positions filled with `Z`).
    pub bases: Vec<PauliString>,
    /// Sampling weight per group: 2-norm of the member coefficients.
    pub weights: Vec<f64>,
}

impl LdfGrouping {
    pub fn new(terms: &ObservableSum) -> Result<Self> {
        let paulis = terms.paulis();
        let k = paulis.len();
        let mut adjacency = vec![Vec::new(); k];
        for a in 0..k {
            for b in a + 1..k {
                if !paulis[a].qubitwise_commutes(&paulis[b])? {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        // stable sort keeps input order among equal degrees
        order.sort_by_key(|&v| std::cmp::Reverse(adjacency[v].len()));
        let mut color = vec![usize::MAX; k];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &v in &order {
            let mut used = vec![false; groups.len() + 1];
            for &u in &adjacency[v] {
                if color[u] != usize::MAX {
                    used[color[u]] = true;
                }
            }
            let c = used.iter().position(|&x| !x).unwrap();
            if c == groups.len() {
                groups.push(Vec::new());
            }
            color[v] = c;
            groups[c].push(v);
        }
        let n = terms.num_qubits();
        let coeffs = terms.coefficients();
        let mut bases = Vec::with_capacity(groups.len());
        let mut weights = Vec::with_capacity(groups.len());
        for g in &groups {
            let mut letters = vec![Pauli::I; n];
            for &j in g {
                for (slot, &l) in letters.iter_mut().zip(paulis[j].letters()) {
                    if l != Pauli::I {
                        *slot = l;
                    }
                }
            }
            bases.push(PauliString::new(letters)?.fill_identity_with_z());
            weights.push(g.iter().map(|&j| coeffs[j] * coeffs[j]).sum::<f64>().sqrt());
        }
        Ok(Self { groups, bases, weights })
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Samples a plan: each shot measures one group's basis, chosen with
    /// probability proportional to the group weight. When there are at least
    /// as many shots as groups, every group first receives one shot so that
    /// no term is left uncovered.
    pub fn sample_plan<R: Rng + ?Sized>(
        &self,
        terms: &ObservableSum,
        num_shots: usize,
        rng: &mut R,
    ) -> Result<MeasurementPlan> {
        if num_shots == 0 {
            return Err(Error::Config("LDF plan needs at least one shot".into()));
        }
        let mut bases = Vec::with_capacity(num_shots);
        if num_shots >= self.num_groups() {
            bases.extend(self.bases.iter().cloned());
        }
        let total: f64 = self.weights.iter().sum();
        while bases.len() < num_shots {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = self.weights.len() - 1;
            for (g, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = g;
                    break;
                }
            }
            bases.push(self.bases[pick].clone());
        }
        MeasurementPlan::deterministic(bases, &terms.paulis())
    }
}

/// Convenience wrapper: group `terms` and sample a plan.
pub fn build_ldf<R: Rng + ?Sized>(terms: &ObservableSum, num_shots: usize, rng: &mut R) -> Result<MeasurementPlan> {
    LdfGrouping::new(terms)?.sample_plan(terms, num_shots, rng)
}

/// Per-term plan: each term is measured in its own basis (identity filled
/// with `Z`) a fixed number of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaivePlan {
    pub entries: Vec<NaiveEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveEntry {
    pub term: PauliString,
    pub basis: PauliString,
    pub shots: usize,
}

impl NaivePlan {
    pub fn total_shots(&self) -> usize {
        self.entries.iter().map(|e| e.shots).sum()
    }
}

/// `shots_per_term` repetitions for every term.
pub fn build_naive(terms: &ObservableSum, shots_per_term: usize) -> Result<NaivePlan> {
    if shots_per_term == 0 {
        return Err(Error::Config("naive plan needs at least one shot per term".into()));
    }
    Ok(NaivePlan {
        entries: terms
            .paulis()
            .into_iter()
            .map(|p| NaiveEntry { basis: p.fill_identity_with_z(), term: p, shots: shots_per_term })
            .collect(),
    })
}

/// Splits a total budget over the terms: `total / K` each, remainder to the
/// first terms. Every term needs at least one shot.
pub fn build_naive_budget(terms: &ObservableSum, total_shots: usize) -> Result<NaivePlan> {
    let k = terms.len();
    if total_shots < k {
        return Err(Error::Config(format!("naive budget {total_shots} below term count {k}")));
    }
    let (base, extra) = (total_shots / k, total_shots % k);
    Ok(NaivePlan {
        entries: terms
            .paulis()
            .into_iter()
            .enumerate()
            .map(|(j, p)| NaiveEntry {
                basis: p.fill_identity_with_z(),
                term: p,
                shots: base + usize::from(j < extra),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::RandomSource;

    fn ps(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn covering_examples() {
        assert!(covering_f(&ps("XYI"), &ps("XYX")).unwrap());
        assert!(!covering_f(&ps("ZIX"), &ps("ZXY")).unwrap());
        assert!(covering_f(&ps("III"), &ps("ZZZ")).unwrap());
        assert!(covering_f(&ps("II"), &ps("ZZZ")).is_err());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(estimate_mu(&ps("III"), &[-1, -1, -1]).unwrap(), 1);
        assert_eq!(estimate_mu(&ps("XZI"), &[-1, -1, 1]).unwrap(), 1);
        assert_eq!(estimate_mu(&ps("XZI"), &[-1, 1, 1]).unwrap(), -1);
        assert!(estimate_mu(&ps("XZ"), &[1]).is_err());
    }

    #[test]
    fn classical_shadow_examples() {
        let plan = build_classical_shadow(1, 30_000, &mut RandomSource::new(1)).unwrap();
        let xs = plan.bases().iter().filter(|b| b.get(0) == Pauli::X).count() as f64;
        let n: f64 = 30_000.0;
        let sigma = (n * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        assert!((xs - n / 3.0).abs() < 3.0 * sigma);
        assert!((plan.covering_q(&ps("XYI")).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let a = build_classical_shadow(4, 20, &mut RandomSource::new(9)).unwrap();
        let b = build_classical_shadow(4, 20, &mut RandomSource::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.bases().iter().all(|m| m.locality() == 4));
    }

    #[test]
    fn derandomization_single_term() {
        let o = ObservableSum::new([(1.0, ps("ZZ"))]).unwrap();
        let plan = build_derandomized(&o, 4, DerandomizationParams::default()).unwrap();
        assert!(plan.bases().iter().all(|b| *b == ps("ZZ")));
        assert_eq!(plan.covering_q(&ps("ZZ")).unwrap(), 1.0);
    }

    #[test]
    fn derandomization_rejects_uncovered() {
        let o = ObservableSum::new([(1.0, ps("XX")), (1.0, ps("ZZ"))]).unwrap();
        assert!(matches!(
            build_derandomized(&o, 1, DerandomizationParams::default()),
            Err(Error::PlanRejected(_))
        ));
        let bad = DerandomizationParams { eta: 0.0, gamma: 1.0 };
        assert!(build_derandomized(&o, 4, bad).is_err());
    }

    #[test]
    fn ldf_examples() {
        let commuting = ObservableSum::new([(1.0, ps("XI")), (0.5, ps("IZ")), (0.2, ps("XZ"))]).unwrap();
        let g = LdfGrouping::new(&commuting).unwrap();
        assert_eq!(g.num_groups(), 1);
        assert_eq!(g.bases, vec![ps("XZ")]);
        let plan = g.sample_plan(&commuting, 7, &mut RandomSource::new(2)).unwrap();
        assert!(plan.bases().iter().all(|b| *b == ps("XZ")));

        let clash = ObservableSum::new([(1.0, ps("XX")), (1.0, ps("YY")), (1.0, ps("ZZ")), (1.0, ps("XY"))]).unwrap();
        let g = LdfGrouping::new(&clash).unwrap();
        assert_eq!(g.num_groups(), 4);

        let sparse = ObservableSum::new([(1.0, ps("XII")), (1.0, ps("YII"))]).unwrap();
        let g = LdfGrouping::new(&sparse).unwrap();
        assert_eq!(g.bases, vec![ps("XZZ"), ps("YZZ")]);
    }

    #[test]
    fn ldf_bases_cover_members() {
        let o = ObservableSum::new([
            (0.3, ps("XXI")),
            (0.1, ps("IXX")),
            (0.4, ps("ZIZ")),
            (0.2, ps("YYI")),
            (0.5, ps("IIY")),
        ])
        .unwrap();
        let g = LdfGrouping::new(&o).unwrap();
        let paulis = o.paulis();
        for (members, basis) in g.groups.iter().zip(&g.bases) {
            for &j in members {
                assert!(covering_f(&paulis[j], basis).unwrap());
            }
        }
        let plan = g.sample_plan(&o, 40, &mut RandomSource::new(4)).unwrap();
        for p in &paulis {
            assert_eq!(plan.covering_q(p).unwrap(), deterministic_q(p, plan.bases()).unwrap());
            assert!(plan.covering_q(p).unwrap() > 0.0);
        }
    }

    #[test]
    fn naive_examples() {
        let o = ObservableSum::new((0..6).map(|i| {
            let mut l = vec![Pauli::I; 3];
            l[i % 3] = Pauli::XYZ[i / 3];
            (1.0, PauliString::new(l).unwrap())
        }))
        .unwrap();
        assert_eq!(build_naive(&o, 5).unwrap().total_shots(), 30);
        let one = ObservableSum::new([(1.0, ps("XIZ"))]).unwrap();
        assert_eq!(build_naive(&one, 1).unwrap().entries[0].basis, ps("XZZ"));
        let split = build_naive_budget(&o, 20).unwrap();
        let shots: Vec<_> = split.entries.iter().map(|e| e.shots).collect();
        assert_eq!(shots, vec![4, 4, 3, 3, 3, 3]);
        assert!(build_naive_budget(&o, 5).is_err());
    }

    #[test]
    fn unknown_term_is_an_error() {
        let plan = MeasurementPlan::deterministic(vec![ps("ZZ")], &[ps("ZI")]).unwrap();
        assert_eq!(plan.covering_q(&ps("ZI")).unwrap(), 1.0);
        assert!(matches!(plan.covering_q(&ps("IZ")), Err(Error::UncoveredTerm(_))));
    }
}
