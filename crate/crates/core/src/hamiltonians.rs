//! Built-in Hamiltonians used by the experiments and examples.

use crate::error::Result;
use crate::pauli::{ObservableSum, Pauli, PauliString};

/// Periodic Heisenberg ring on `n` sites with a uniform `Z` field:
/// `J Σ_j Σ_{a=x,y,z} σ_a^j σ_a^{j+1} + h Σ_j σ_z^j`, site `n+1 ≡ 1`.
pub fn heisenberg_ring(n: usize, coupling: f64, field: f64) -> Result<ObservableSum> {
    let mut terms = Vec::with_capacity(4 * n);
    for j in 0..n {
        for a in Pauli::XYZ {
            let mut letters = vec![Pauli::I; n];
            letters[j] = a;
            letters[(j + 1) % n] = a;
            terms.push((coupling, PauliString::new(letters)?));
        }
    }
    for j in 0..n {
        let mut letters = vec![Pauli::I; n];
        letters[j] = Pauli::Z;
        terms.push((field, PauliString::new(letters)?));
    }
    ObservableSum::new(terms)
}

/// The six-site ring with `J = h = 0.1` (24 terms).
pub fn heisenberg() -> ObservableSum {
    heisenberg_ring(6, 0.1, 0.1).expect("fixed builtin is valid")
}

/// Four-qubit, six-term example whose terms split into two qubit-wise
/// commuting families.
pub fn two_family_example() -> ObservableSum {
    let terms = ["XXXZ", "XXII", "IIXZ", "YYZX", "YYII", "IIZX"]
        .iter()
        .map(|s| (1.0, PauliString::parse(s).expect("fixed builtin is valid")));
    ObservableSum::new(terms).expect("fixed builtin is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_shape() {
        let h = heisenberg();
        assert_eq!(h.num_qubits(), 6);
        assert_eq!(h.len(), 24);
        assert_eq!(h.terms().iter().filter(|(_, p)| p.locality() == 2).count(), 18);
        assert!(h.terms().iter().any(|(_, p)| p.to_string() == "XIIIIX"));
        assert!(h.coefficients().iter().all(|&c| c == 0.1));
    }

    #[test]
    fn two_family_shape() {
        let h = two_family_example();
        assert_eq!(h.len(), 6);
        assert_eq!(h.num_qubits(), 4);
    }
}
