//! Pauli strings, their products, and weighted sums of them.
//!
//! Qubit ordering is fixed everywhere: the leftmost letter is qubit 1. After
//! [`PauliString::extend_with_x`] the ancilla is therefore the leftmost letter.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// The three non-identity letters in tie-break order.
    pub const XYZ: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Letter product `self * other` as (power of i, letter).
    fn mul(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, X) => (Phase::MINUS_I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, Y) => (Phase::MINUS_I, X),
            (Z, X) => (Phase::I, Y),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }
}

/// A fourth root of unity, stored as the exponent of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power_of_i(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-qubit Paulis over `n >= 1` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::EmptyPauli);
        }
        Ok(Self { letters })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "Pauli string needs at least one qubit");
        Self { letters: vec![Pauli::I; n] }
    }

    /// Parses a string over `{I, X, Y, Z}`; one letter per qubit, qubit 1 first.
    pub fn parse(text: &str) -> Result<Self> {
        let letters = text
            .chars()
            .enumerate()
            .map(|(position, letter)| Pauli::from_char(letter).ok_or(Error::InvalidLetter { letter, position }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.letters[qubit]
    }

    /// Number of non-identity letters.
    pub fn locality(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// `X ⊗ self`: an ancilla qubit carrying `X` is prepended as qubit 1.
    pub fn extend_with_x(&self) -> PauliString {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.push(Pauli::X);
        letters.extend_from_slice(&self.letters);
        PauliString { letters }
    }

    fn check_len(&self, other: &PauliString) -> Result<()> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::LengthMismatch { expected: self.num_qubits(), got: other.num_qubits() });
        }
        Ok(())
    }

    /// Product `self * other` with its phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PhasedPauli> {
        self.check_len(other)?;
        let mut phase = Phase::ONE;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (ph, p) = a.mul(b);
                phase = phase * ph;
                p
            })
            .collect();
        Ok(PhasedPauli { phase, pauli: PauliString { letters } })
    }

    /// True iff at every qubit the letters agree or one of them is `I`.
    pub fn qubitwise_commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_len(other)?;
        Ok(self
            .letters
            .iter()
            .zip(&other.letters)
            .all(|(&a, &b)| a == b || a == Pauli::I || b == Pauli::I))
    }

    /// Full (not qubit-wise) commutation: an even number of anticommuting positions.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_len(other)?;
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != b && a != Pauli::I && b != Pauli::I)
            .count();
        Ok(anti % 2 == 0)
    }

    /// Replaces every `I` with `Z`, giving a measurement basis that covers `self`.
    pub fn fill_identity_with_z(&self) -> PauliString {
        PauliString {
            letters: self.letters.iter().map(|&p| if p == Pauli::I { Pauli::Z } else { p }).collect(),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl TryFrom<String> for PauliString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

/// A Pauli string with a fourth-root-of-unity prefactor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhasedPauli {
    pub phase: Phase,
    pub pauli: PauliString,
}

/// `Tr(P_1 P_2 ... P_m)` evaluated symbolically.
///
/// Returns the real part of the trace. Chains whose product is `±i·I` have a
/// purely imaginary trace; those cancel pairwise in the symmetric sums this is
/// used for, and [`trace_product_complex`] exposes them when needed.
pub fn trace_product(paulis: &[PauliString]) -> Result<f64> {
    Ok(trace_product_complex(paulis)?.re)
}

pub fn trace_product_complex(paulis: &[PauliString]) -> Result<Complex64> {
    let Some(first) = paulis.first() else {
        return Err(Error::EmptyPauli);
    };
    let n = first.num_qubits();
    let mut acc = PhasedPauli { phase: Phase::ONE, pauli: PauliString::identity(n) };
    for p in paulis {
        let prod = acc.pauli.multiply(p)?;
        acc = PhasedPauli { phase: acc.phase * prod.phase, pauli: prod.pauli };
    }
    if !acc.pauli.is_identity() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(acc.phase.to_complex() * (n as f64).exp2())
}

/// Weighted sum `Σ a_j P_j` of distinct Pauli strings with real, finite, nonzero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSum {
    num_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl ObservableSum {
    /// Builds a sum, merging duplicate strings (first occurrence keeps its
    /// position) and dropping terms whose merged coefficient is zero.
    pub fn new(terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        let mut num_qubits = None;
        for (coeff, pauli) in terms {
            if !coeff.is_finite() {
                return Err(Error::Config(format!("non-finite coefficient for {pauli}")));
            }
            match num_qubits {
                None => num_qubits = Some(pauli.num_qubits()),
                Some(n) if n != pauli.num_qubits() => {
                    return Err(Error::LengthMismatch { expected: n, got: pauli.num_qubits() })
                }
                _ => {}
            }
            if let Some(&i) = index.get(&pauli) {
                merged[i].0 += coeff;
            } else {
                index.insert(pauli.clone(), merged.len());
                merged.push((coeff, pauli));
            }
        }
        let num_qubits = num_qubits.ok_or(Error::EmptyPauli)?;
        merged.retain(|(c, _)| *c != 0.0);
        Ok(Self { num_qubits, terms: merged })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|(c, _)| *c).collect()
    }

    pub fn paulis(&self) -> Vec<PauliString> {
        self.terms.iter().map(|(_, p)| p.clone()).collect()
    }

    /// `X ⊗ P_j` for every term, coefficients scaled by `scale`.
    pub fn extend_with_x(&self, scale: f64) -> Result<ObservableSum> {
        ObservableSum::new(self.terms.iter().map(|(c, p)| (c * scale, p.extend_with_x())))
    }

    /// Drops identity terms (used where a constant shift has no effect).
    pub fn without_identity(&self) -> ObservableSum {
        ObservableSum {
            num_qubits: self.num_qubits,
            terms: self.terms.iter().filter(|(_, p)| !p.is_identity()).cloned().collect(),
        }
    }

    /// Parses the Hamiltonian text format: `<coefficient> <letters>` per line,
    /// blank lines and `#` comments ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno + 1, message };
            let mut fields = line.split_whitespace();
            let (Some(c), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(format!("expected `<coefficient> <pauli>`, got {line:?}")));
            };
            let coeff: f64 = c.parse().map_err(|_| parse_err(format!("bad coefficient {c:?}")))?;
            let pauli = PauliString::parse(p).map_err(|e| parse_err(e.to_string()))?;
            terms.push((coeff, pauli));
        }
        if terms.is_empty() {
            return Err(Error::Parse { line: 0, message: "no terms".into() });
        }
        Self::new(terms).map_err(|e| match e {
            Error::LengthMismatch { .. } => Error::Parse { line: 0, message: e.to_string() },
            other => other,
        })
    }

    /// Serializes to the Hamiltonian text format. Coefficients use the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, p) in &self.terms {
            out.push_str(&format!("{c:e} {p}\n"));
        }
        out
    }
}
