//! Single-qubit operators, site embeddings and qubit permutations.
//!
//! Site 0 is the leftmost (slowest) tensor factor and `|0⟩` is the `+1`
//! eigenvector of `σᶻ`.

use crate::error::{Error, Result};
use crate::tensor::{kron_all, Operator, C64, I, ONE, ZERO};

pub fn sigma_x() -> Operator {
    Operator::from_rows(2, &[ZERO, ONE, ONE, ZERO]).expect("2x2")
}

pub fn sigma_y() -> Operator {
    Operator::from_rows(2, &[ZERO, -I, I, ZERO]).expect("2x2")
}

pub fn sigma_z() -> Operator {
    Operator::from_rows(2, &[ONE, ZERO, ZERO, -ONE]).expect("2x2")
}

/// `σ⁻ = σˣ − iσʸ = 2|1⟩⟨0|` (unnormalized).
pub fn sigma_minus() -> Operator {
    &sigma_x() - &sigma_y().scale(I)
}

/// `σ⁺ = σˣ + iσʸ = 2|0⟩⟨1|` (unnormalized).
pub fn sigma_plus() -> Operator {
    &sigma_x() + &sigma_y().scale(I)
}

/// `|0⟩⟨1|`: the jump operator of amplitude damping toward `|0⟩`.
pub fn lowering() -> Operator {
    Operator::from_rows(2, &[ZERO, ONE, ZERO, ZERO]).expect("2x2")
}

/// The three Pauli matrices `(σˣ, σʸ, σᶻ)`.
pub fn paulis() -> [Operator; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

/// `|b⟩⟨b|` for a computational basis state of one qubit.
pub fn basis_projector(bit: usize) -> Operator {
    let mut v = [ZERO, ZERO];
    v[bit & 1] = ONE;
    Operator::projector_onto(&v)
}

/// Embeds a one-qubit operator at `site` of an `n`-qubit register.
pub fn site_op(op: &Operator, site: usize, n: usize) -> Result<Operator> {
    if site >= n {
        return Err(Error::OutOfRange(format!("site {site} of {n} qubits")));
    }
    let id = Operator::identity(op.dim());
    let factors: Vec<&Operator> = (0..n).map(|j| if j == site { op } else { &id }).collect();
    Ok(kron_all(factors))
}

/// `σ_i ⊗ σ_j` summed over the three Pauli components: `σ⃗ᵢ·σ⃗ⱼ`.
pub fn heisenberg(i: usize, j: usize, n: usize) -> Result<Operator> {
    let mut out = Operator::zeros(1 << n);
    for p in paulis() {
        out += &(&site_op(&p, i, n)? * &site_op(&p, j, n)?);
    }
    Ok(out)
}

/// Qubit permutation: the state of site `j` moves to site `perm[j]`.
pub fn permutation_operator(perm: &[usize]) -> Result<Operator> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::OutOfRange(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let dim = 1usize << n;
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for src in 0..dim {
        let mut dst = 0;
        for (j, &pj) in perm.iter().enumerate() {
            let bit = (src >> (n - 1 - j)) & 1;
            dst |= bit << (n - 1 - pj);
        }
        m[(dst, src)] = ONE;
    }
    Operator::new(m)
}

/// Swap of sites `i` and `j` in an `n`-qubit register.
pub fn swap(i: usize, j: usize, n: usize) -> Result<Operator> {
    if i >= n || j >= n {
        return Err(Error::OutOfRange(format!("swap ({i}, {j}) on {n} qubits")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(i, j);
    permutation_operator(&perm)
}

/// Computational basis vector `|b_0 b_1 … b_{n−1}⟩` with `b_0` leftmost.
pub fn basis_vector(bits: &[usize]) -> Vec<C64> {
    let n = bits.len();
    let idx = bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1));
    let mut v = vec![ZERO; 1 << n];
    v[idx] = ONE;
    v
}
