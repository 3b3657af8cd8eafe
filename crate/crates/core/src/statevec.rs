//! Dense state-vector simulator.
//!
//! Qubit `q` (0-based, matching letter `q` of a [`PauliString`]) is stored in
//! bit `n - 1 - q` of the amplitude index, so a basis index reads like the ket
//! `|q_0 q_1 ... q_{n-1}>`.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{ObservableSum, Pauli, PauliString};

pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

/// Seeded, counter-addressable random stream.
///
/// Streams derived from the same seed and key path are identical regardless
/// of which thread or in which order they are created.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `keys` (e.g. `[trial, step, k, l]`).
    pub fn stream(seed: u64, keys: &[u64]) -> Self {
        let id = keys.iter().fold(0x5151_u64, |acc, &k| splitmix64(acc ^ splitmix64(k)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self { seed, rng }
    }

    /// Child stream of this source's seed, independent of this source's position.
    pub fn derive(&self, keys: &[u64]) -> Self {
        Self::stream(self.seed, keys)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Computational-basis outcome of one shot, as a basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub index: usize,
    pub num_qubits: usize,
}

impl Outcome {
    /// Bit array `b ∈ {+1, -1}^n`, qubit order as in Pauli strings.
    pub fn signs(&self) -> Vec<i8> {
        (0..self.num_qubits)
            .map(|q| if self.index >> (self.num_qubits - 1 - q) & 1 == 0 { 1 } else { -1 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { num_qubits: n, amps })
    }

    /// Wraps (and normalizes) raw amplitudes; length must be a power of two.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Config("state has zero or non-finite norm".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { num_qubits: n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange { index: qubit, n: self.num_qubits });
        }
        Ok(1 << (self.num_qubits - 1 - qubit))
    }

    /// Applies the 2x2 matrix `[[a, b], [c, d]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// `exp(-i σ_axis θ / 2)` on `qubit`.
    pub fn apply_rotation(&mut self, qubit: usize, axis: Axis, angle: f64) -> Result<()> {
        let (s, c) = (angle / 2.0).sin_cos();
        let m = match axis {
            Axis::X => [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]],
            Axis::Y => [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]],
            Axis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
        };
        self.apply_single(qubit, m)
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [[h, h], [h, -h]])
    }

    /// `S† = diag(1, -i)`.
    pub fn apply_s_dagger(&mut self, qubit: usize) -> Result<()> {
        self.apply_single(qubit, [[ONE, ZERO], [ZERO, Complex64::new(0.0, -1.0)]])
    }

    pub fn apply_cz(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(Error::SameControlTarget(control));
        }
        let both = self.mask(control)? | self.mask(target)?;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & both == both {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Applies every letter of `p` on its qubit.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_qubits(p.num_qubits())?;
        let (flip, phase_mask, y_count) = pauli_masks(p);
        // P|i> = i^{#Y} (-1)^{popcount(i & (Y|Z))} |i ^ flip>
        let global = Complex64::new(0.0, 1.0).powu(y_count as u32);
        let mut out = vec![ZERO; self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let sign = if (i & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[i ^ flip] = a * global * sign;
        }
        self.amps = out;
        Ok(())
    }

    /// Applies `p` (a full-width string) only on the branch where `control` is `|1>`.
    /// `p` must act as `I` on the control qubit.
    pub fn apply_controlled_pauli(&mut self, control: usize, p: &PauliString) -> Result<()> {
        self.check_qubits(p.num_qubits())?;
        let cmask = self.mask(control)?;
        if p.get(control) != Pauli::I {
            return Err(Error::Config(format!("controlled {p} acts on its own control qubit")));
        }
        let (flip, phase_mask, y_count) = pauli_masks(p);
        let global = Complex64::new(0.0, 1.0).powu(y_count as u32);
        let mut out = self.amps.clone();
        for (i, &a) in self.amps.iter().enumerate() {
            if i & cmask != 0 {
                let sign = if (i & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[i ^ flip] = a * global * sign;
            }
        }
        self.amps = out;
        Ok(())
    }

    fn check_qubits(&self, n: usize) -> Result<()> {
        if n != self.num_qubits {
            return Err(Error::LengthMismatch { expected: self.num_qubits, got: n });
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_qubits(other.num_qubits)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `<self| P |other>` without materializing `P|other>`.
    pub fn pauli_matrix_element(&self, p: &PauliString, other: &StateVector) -> Result<Complex64> {
        self.check_qubits(p.num_qubits())?;
        self.check_qubits(other.num_qubits)?;
        let (flip, phase_mask, y_count) = pauli_masks(p);
        let global = Complex64::new(0.0, 1.0).powu(y_count as u32);
        let mut acc = ZERO;
        for (i, &b) in other.amps.iter().enumerate() {
            let term = self.amps[i ^ flip].conj() * b;
            if (i & phase_mask).count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(acc * global)
    }

    /// `<self| O |other>` for a weighted Pauli sum.
    pub fn observable_matrix_element(&self, o: &ObservableSum, other: &StateVector) -> Result<Complex64> {
        o.terms()
            .iter()
            .map(|(c, p)| Ok(self.pauli_matrix_element(p, other)? * *c))
            .sum()
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        Ok(self.pauli_matrix_element(p, self)?.re)
    }

    /// `Σ a_j <ψ|P_j|ψ>`.
    pub fn expectation(&self, o: &ObservableSum) -> Result<f64> {
        let v = self.observable_matrix_element(o, self)?;
        debug_assert!(v.im.abs() < 1e-10 * (1.0 + v.re.abs()), "expectation has imaginary part {}", v.im);
        Ok(v.re)
    }

    /// Copy of the state rotated so that `basis` becomes diagonal.
    fn rotated_for(&self, basis: &PauliString) -> Result<StateVector> {
        self.check_qubits(basis.num_qubits())?;
        let mut rotated = self.clone();
        for (q, &letter) in basis.letters().iter().enumerate() {
            match letter {
                Pauli::I => return Err(Error::IdentityInBasis(basis.to_string())),
                Pauli::X => rotated.apply_hadamard(q)?,
                Pauli::Y => {
                    rotated.apply_s_dagger(q)?;
                    rotated.apply_hadamard(q)?;
                }
                Pauli::Z => {}
            }
        }
        Ok(rotated)
    }

    /// Outcome probabilities in the eigenbasis of `basis` (no identity letters).
    pub fn basis_probabilities(&self, basis: &PauliString) -> Result<Vec<f64>> {
        let rotated = self.rotated_for(basis)?;
        Ok(rotated.amps.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Draws `shots` outcomes of measuring in `basis`. The state is rotated
    /// once for the whole batch.
    pub fn sample_in_basis<R: Rng + ?Sized>(&self, basis: &PauliString, shots: usize, rng: &mut R) -> Result<Vec<Outcome>> {
        let probs = self.basis_probabilities(basis)?;
        let sampler = CumulativeSampler::new(&probs);
        Ok((0..shots)
            .map(|_| Outcome { index: sampler.draw(rng), num_qubits: self.num_qubits })
            .collect())
    }

    /// One shot per basis, in order.
    pub fn sample_bases<R: Rng + ?Sized>(&self, bases: &[PauliString], rng: &mut R) -> Result<Vec<Outcome>> {
        let mut out = Vec::with_capacity(bases.len());
        let mut i = 0;
        while i < bases.len() {
            // consecutive equal bases share one rotated copy
            let mut j = i + 1;
            while j < bases.len() && bases[j] == bases[i] {
                j += 1;
            }
            out.extend(self.sample_in_basis(&bases[i], j - i, rng)?);
            i = j;
        }
        Ok(out)
    }

    /// `(|0> ⊗ a + e^{iφ} |1> ⊗ b) / sqrt(2)` on `n + 1` qubits, ancilla first.
    pub fn ancilla_superposition(a: &StateVector, b: &StateVector, phase: f64) -> Result<StateVector> {
        a.check_qubits(b.num_qubits)?;
        if a.num_qubits + 1 > MAX_QUBITS {
            return Err(Error::TooManyQubits(a.num_qubits + 1));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = Complex64::from_polar(s, phase);
        let mut amps = Vec::with_capacity(2 * a.amps.len());
        amps.extend(a.amps.iter().map(|x| x * s));
        amps.extend(b.amps.iter().map(|x| x * e));
        Ok(StateVector { num_qubits: a.num_qubits + 1, amps })
    }
}

/// (bit-flip mask, sign mask, number of Y letters) for a Pauli string.
fn pauli_masks(p: &PauliString) -> (usize, usize, usize) {
    let n = p.num_qubits();
    let mut flip = 0;
    let mut phase = 0;
    let mut ys = 0;
    for (q, &letter) in p.letters().iter().enumerate() {
        let bit = 1 << (n - 1 - q);
        match letter {
            Pauli::I => {}
            Pauli::X => flip |= bit,
            Pauli::Y => {
                flip |= bit;
                phase |= bit;
                ys += 1;
            }
            Pauli::Z => phase |= bit,
        }
    }
    (flip, phase, ys)
}

/// Bit mask of the support of `p` in basis-index layout.
pub fn support_mask(p: &PauliString) -> usize {
    let n = p.num_qubits();
    p.letters()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != Pauli::I)
        .fold(0, |m, (q, _)| m | 1 << (n - 1 - q))
}

/// Inverse-CDF sampler over a probability vector.
struct CumulativeSampler {
    cdf: Vec<f64>,
}

impl CumulativeSampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|&p| {
                // clamp round-off negatives only
                acc += if p < 0.0 && p > -1e-12 { 0.0 } else { p };
                acc
            })
            .collect();
        Self { cdf }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap();
        let u: f64 = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}
