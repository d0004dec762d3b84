//! Structural checks shared by the property suite and the acceptance run.

#![allow(dead_code)]

use dproj::liouville::{dissipator, trace_preservation_residual, LindbladModel};
use dproj::models::random::{random_model, random_state};
use dproj::models::{zoo_model, zoo_names};
use dproj::steady::zero_group_projector;
use dproj::tensor::{expm, Operator, SuperOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRACE_TOL: f64 = 1e-11;
pub const PROJECTOR_TOL: f64 = 1e-8;
pub const RESOLVENT_TOL: f64 = 1e-8;
pub const DENSITY_TOL: f64 = 1e-8;
pub const TIMES: [f64; 3] = [0.1, 1.0, 10.0];
pub const RANDOM_MODELS: u64 = 50;
pub const RANDOM_DIMS: [usize; 3] = [2, 4, 8];

/// One measured residual against its tolerance.
#[derive(Clone, Debug)]
pub struct Check {
    pub model: String,
    pub property: &'static str,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.value <= self.tol
    }
}

/// Zoo models followed by `RANDOM_MODELS` seeded random models cycling
/// through `RANDOM_DIMS`.
pub fn property_models() -> Vec<(String, LindbladModel)> {
    let mut out: Vec<(String, LindbladModel)> = zoo_names()
        .iter()
        .map(|n| (n.to_string(), zoo_model(n).expect("zoo model builds").model))
        .collect();
    for seed in 0..RANDOM_MODELS {
        let dim = RANDOM_DIMS[(seed % 3) as usize];
        out.push((format!("random-d{dim}-s{seed}"), random_model(dim, seed)));
    }
    out
}

/// Largest violation of trace, hermiticity and positivity.
pub fn density_defect(rho: &Operator) -> f64 {
    let trace = (rho.trace().re - 1.0).abs() + rho.trace().im.abs();
    let herm = rho.hermitian_residual();
    let (values, _) = rho.hermitian_part().hermitian_eigen();
    let negativity = values.first().map_or(0.0, |v| (-v).max(0.0));
    trace.max(herm).max(negativity)
}

fn frob(m: &SuperOperator) -> f64 {
    m.frobenius_norm()
}

/// Runs every structural check on one model.
pub fn structural_checks(name: &str, model: &LindbladModel, seed: u64) -> Vec<Check> {
    let dim = model.dim();
    let l0 = dissipator(model);
    let scale = frob(&l0).max(1.0);
    let mut out = Vec::new();
    let mut push = |property, value, tol| {
        out.push(Check {
            model: name.to_string(),
            property,
            value,
            tol,
        })
    };
    push("trace_preservation", trace_preservation_residual(&l0) / scale, TRACE_TOL);

    let sd = match zero_group_projector(&l0, None) {
        Ok(sd) => sd,
        Err(_) => {
            push("zero_group_projector", f64::INFINITY, 0.0);
            return out;
        }
    };
    let p0 = sd.p0();
    let id = SuperOperator::identity(dim);
    let pnorm = frob(p0).max(1.0);
    push("p0_idempotent", frob(&(&(p0 * p0) - p0)) / pnorm, PROJECTOR_TOL);
    push(
        "p0_commutes",
        frob(&(&(p0 * &l0) - &(&l0 * p0))) / (pnorm * scale),
        PROJECTOR_TOL,
    );
    push(
        "resolvent_identity",
        frob(&(&(sd.s() * &l0) - &(&id - p0))) / pnorm,
        RESOLVENT_TOL,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_state(dim, &mut rng);
    let mut worst = 0.0f64;
    for t in TIMES {
        match expm(&l0.scale_re(t)) {
            Ok(e) => worst = worst.max(density_defect(&e.apply(&rho))),
            Err(_) => worst = f64::INFINITY,
        }
    }
    worst = worst.max(density_defect(&p0.apply(&rho)));
    push("density_preservation", worst, DENSITY_TOL);
    out
}
