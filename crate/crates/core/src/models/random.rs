//! Seeded random operators and models for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::liouville::LindbladModel;
use crate::tensor::{Operator, C64};

/// Operator with independent entries uniform in the unit square.
pub fn random_operator(dim: usize, rng: &mut impl Rng) -> Operator {
    Operator::from_fn(dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    random_operator(dim, rng).hermitian_part()
}

/// Random density matrix `X X† / Tr(X X†)`.
pub fn random_state(dim: usize, rng: &mut impl Rng) -> Operator {
    let x = random_operator(dim, rng);
    let rho = &x * &x.adjoint();
    let tr = rho.trace().re;
    rho.scale_re(1.0 / tr).hermitian_part()
}

/// Random model: a Hamiltonian and one to three Lindblad operators with
/// rates in `[0.2, 1.5)`, fully determined by `seed`.
pub fn random_model(dim: usize, seed: u64) -> LindbladModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(dim, &mut rng);
    let count = rng.random_range(1..=3);
    let mut model = LindbladModel::new(dim)
        .with_hamiltonian(h)
        .expect("hermitian part is hermitian");
    for _ in 0..count {
        let l = random_operator(dim, &mut rng);
        let rate = rng.random_range(0.2..1.5);
        model = model.with_lindblad(l, rate).expect("dimensions agree");
    }
    model
}
