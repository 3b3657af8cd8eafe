"""Regenerates the molecular Hamiltonian assets.

Requires openfermion, openfermionpyscf and pyscf. Not part of the Rust build;
the generated text files are committed alongside this script.
"""
import sys

from openfermion import MolecularData, bravyi_kitaev, get_fermion_operator
from openfermionpyscf import run_pyscf

SPECS = {
    "h2_631g_bk.txt": dict(geometry=[("H", (0, 0, 0)), ("H", (0, 0, 0.7414))], basis="6-31g"),
    "lih_sto3g_bk.txt": dict(geometry=[("Li", (0, 0, 0)), ("H", (0, 0, 1.5949))], basis="sto-3g"),
}


def write(name, geometry, basis):
    mol = MolecularData(geometry, basis, multiplicity=1, charge=0)
    mol = run_pyscf(mol, run_scf=True)
    ham = bravyi_kitaev(get_fermion_operator(mol.get_molecular_hamiltonian()))
    ham.compress(1e-12)
    n = mol.n_qubits
    rows = []
    for term, coeff in sorted(ham.terms.items()):
        if not term:
            continue  # constant shift: irrelevant for dynamics and variances
        letters = ["I"] * n
        for q, p in term:
            letters[q] = p
        rows.append((float(coeff.real), "".join(letters)))
    with open(name, "w") as f:
        f.write(f"# {basis} basis, Bravyi-Kitaev mapping, {n} qubits, {len(rows)} terms\n")
        f.write(f"# geometry (angstrom): {geometry}\n")
        f.write("# generated by assets/generate_molecular.py (openfermion + pyscf); identity term omitted\n")
        for c, p in rows:
            f.write(f"{c!r} {p}\n")
    print(name, n, len(rows))


if __name__ == "__main__":
    for name, spec in SPECS.items():
        if len(sys.argv) == 1 or name in sys.argv[1:]:
            write(name, **spec)
