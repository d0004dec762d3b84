//! Lindbladian superoperators and their perturbative variations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{spectral_norm, MatrixView, Operator, SuperOperator, I};

/// Relative hermiticity tolerance for Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance of the unitality test.
pub const UNITAL_TOL: f64 = 1e-10;

/// A Hamiltonian plus weighted Lindblad operators on a `dim`-dimensional
/// Hilbert space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: Option<Operator>,
    lindblads: Vec<(Operator, f64)>,
}

/// One jump operator with its rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawJump {
    op: Operator,
    #[serde(default = "unit_rate")]
    rate: f64,
}

fn unit_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hamiltonian: Option<Operator>,
    #[serde(default)]
    lindblads: Vec<RawJump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

impl TryFrom<RawModel> for LindbladModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let dim = raw
            .dim
            .or_else(|| raw.hamiltonian.as_ref().map(Operator::dim))
            .or_else(|| raw.lindblads.first().map(|j| j.op.dim()))
            .ok_or_else(|| Error::OutOfRange("model needs a dimension or an operator".into()))?;
        let mut model = LindbladModel::new(dim);
        if let Some(h) = raw.hamiltonian {
            model = model.with_hamiltonian(h)?;
        }
        for j in raw.lindblads {
            model = model.with_lindblad(j.op, j.rate)?;
        }
        Ok(model)
    }
}

impl From<LindbladModel> for RawModel {
    fn from(m: LindbladModel) -> Self {
        RawModel {
            dim: Some(m.dim),
            hamiltonian: m.hamiltonian,
            lindblads: m
                .lindblads
                .into_iter()
                .map(|(op, rate)| RawJump { op, rate })
                .collect(),
        }
    }
}

impl LindbladModel {
    /// An empty model (zero generator) on a `dim`-dimensional space.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            hamiltonian: None,
            lindblads: Vec::new(),
        }
    }

    /// Builds a purely dissipative model with unit rates.
    pub fn from_lindblads(ops: impl IntoIterator<Item = Operator>) -> Result<Self> {
        let ops: Vec<Operator> = ops.into_iter().collect();
        let dim = ops
            .first()
            .map(Operator::dim)
            .ok_or_else(|| Error::OutOfRange("at least one Lindblad operator required".into()))?;
        ops.into_iter()
            .try_fold(Self::new(dim), |m, op| m.with_lindblad(op, 1.0))
    }

    pub fn with_hamiltonian(mut self, h: Operator) -> Result<Self> {
        self.check_dim(&h)?;
        check_hermitian(&h)?;
        self.hamiltonian = Some(h);
        Ok(self)
    }

    pub fn with_lindblad(mut self, op: Operator, rate: f64) -> Result<Self> {
        self.check_dim(&op)?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::NegativeRate(rate));
        }
        self.lindblads.push((op, rate));
        Ok(self)
    }

    fn check_dim(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: op.dim(),
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> Option<&Operator> {
        self.hamiltonian.as_ref()
    }

    pub fn lindblads(&self) -> &[(Operator, f64)] {
        &self.lindblads
    }

    /// Copy with every rate multiplied by `factor`.
    pub fn scale_rates(&self, factor: f64) -> Result<Self> {
        let mut out = Self::new(self.dim);
        out.hamiltonian = self.hamiltonian.clone();
        for (op, rate) in &self.lindblads {
            out = out.with_lindblad(op.clone(), rate * factor)?;
        }
        Ok(out)
    }

    /// Copy with `L_α ↦ L_α + s·δL_α` (rates and Hamiltonian unchanged).
    pub fn shifted(&self, deltas: &[Operator], s: f64) -> Result<Self> {
        self.check_deltas(deltas)?;
        let mut out = self.clone();
        for ((op, _), d) in out.lindblads.iter_mut().zip(deltas) {
            *op = &*op + &d.scale_re(s);
        }
        Ok(out)
    }

    fn check_deltas(&self, deltas: &[Operator]) -> Result<()> {
        if deltas.len() != self.lindblads.len() {
            return Err(Error::LengthMismatch {
                expected: self.lindblads.len(),
                found: deltas.len(),
            });
        }
        deltas.iter().try_for_each(|d| self.check_dim(d))
    }
}

fn check_hermitian(k: &Operator) -> Result<()> {
    if k.is_hermitian(HERMITIAN_TOL) {
        Ok(())
    } else {
        Err(Error::NonHermitian(k.hermitian_residual()))
    }
}

/// `X ↦ [K, X]` for any `K`.
pub(crate) fn commutator_superop(k: &Operator) -> SuperOperator {
    &SuperOperator::left(k) - &SuperOperator::right(k)
}

/// `X ↦ −i[K, X]`, rejecting non-hermitian `K`.
pub fn hamiltonian_superop(k: &Operator) -> Result<SuperOperator> {
    check_hermitian(k)?;
    Ok(commutator_superop(k).scale(-I))
}

/// `γ (L X L† − ½{L†L, X})`
pub fn lindblad_term(l: &Operator, rate: f64) -> SuperOperator {
    let ldl = &l.adjoint() * l;
    let jump = SuperOperator::sandwich(l, &l.adjoint());
    let anti = &SuperOperator::left(&ldl) + &SuperOperator::right(&ldl);
    (&jump - &anti.scale_re(0.5)).scale_re(rate)
}

/// The dissipative part `Σ_α γ_α D[L_α]`.
pub fn dissipative_part(model: &LindbladModel) -> SuperOperator {
    let mut out = SuperOperator::zeros(model.dim);
    for (l, rate) in &model.lindblads {
        out += &lindblad_term(l, *rate);
    }
    out
}

/// The Hamiltonian part `−i[H, •]`, zero when the model has no Hamiltonian.
pub fn hamiltonian_part(model: &LindbladModel) -> SuperOperator {
    match &model.hamiltonian {
        Some(h) => commutator_superop(h).scale(-I),
        None => SuperOperator::zeros(model.dim),
    }
}

/// The full generator: Hamiltonian part plus dissipative part.
pub fn dissipator(model: &LindbladModel) -> SuperOperator {
    &hamiltonian_part(model) + &dissipative_part(model)
}

/// Outcome of [`unitality_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitalityReport {
    pub unital: bool,
    /// `‖Σ_α γ_α [L_α, L_α†]‖`
    pub commutator_residual: f64,
    /// `‖ℒ(I)‖`
    pub identity_residual: f64,
}

/// Tests whether the generator annihilates the identity, reporting both the
/// operator-level and superoperator-level residuals (spectral norms).
pub fn unitality_check(model: &LindbladModel) -> UnitalityReport {
    let mut comm = Operator::zeros(model.dim);
    for (l, rate) in &model.lindblads {
        comm += &l.commutator(&l.adjoint()).scale_re(*rate);
    }
    let commutator_residual = spectral_norm(&comm);
    let identity_residual = spectral_norm(&dissipator(model).apply(&Operator::identity(model.dim)));
    UnitalityReport {
        unital: commutator_residual <= UNITAL_TOL && identity_residual <= UNITAL_TOL,
        commutator_residual,
        identity_residual,
    }
}

/// First-order variation of the dissipator under `L_α ↦ L_α + ε δL_α`:
/// `Σ_α γ_α (δL ρ L† + L ρ δL† − ½{δL†L + L†δL, ρ})`.
pub fn first_variation_dissipator(model: &LindbladModel, deltas: &[Operator]) -> Result<SuperOperator> {
    model.check_deltas(deltas)?;
    let mut out = SuperOperator::zeros(model.dim);
    for ((l, rate), dl) in model.lindblads.iter().zip(deltas) {
        let m = &(&dl.adjoint() * l) + &(&l.adjoint() * dl);
        let jumps = &SuperOperator::sandwich(dl, &l.adjoint()) + &SuperOperator::sandwich(l, &dl.adjoint());
        let anti = &SuperOperator::left(&m) + &SuperOperator::right(&m);
        out += &(&jumps - &anti.scale_re(0.5)).scale_re(*rate);
    }
    Ok(out)
}

/// Full generator with every Lindblad operator shifted, `L_α ↦ L_α + X_α/T`.
///
/// Expanding in `1/T` gives `ℒ₀ + ℒ₁/T + ℒ₂/T²`; the quadratic part is
/// carried implicitly by the substitution.
pub fn perturbed_collective_lindbladian(
    model: &LindbladModel,
    xs: &[Operator],
    t: f64,
) -> Result<SuperOperator> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("T must be positive, got {t}")));
    }
    Ok(dissipator(&model.shifted(xs, 1.0 / t)?))
}

/// `‖(vec I)† ℒ‖`; zero for trace-preserving generators.
pub fn trace_preservation_residual(l: &SuperOperator) -> f64 {
    l.trace_functional_residual()
}

impl LindbladModel {
    /// Largest spectral norm among the Lindblad operators weighted by rates.
    pub fn dissipation_scale(&self) -> f64 {
        self.lindblads
            .iter()
            .map(|(l, r)| r * spectral_norm(l.matrix()).powi(2))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::C64;
    use crate::tensor::{eigenvalues, expm, kron, ZERO};

    fn sx() -> Operator {
        Operator::from_real_rows(2, &[0., 1., 1., 0.]).unwrap()
    }
    fn sy() -> Operator {
        Operator::from_rows(2, &[ZERO, -I, I, ZERO]).unwrap()
    }
    fn sz() -> Operator {
        Operator::from_real_rows(2, &[1., 0., 0., -1.]).unwrap()
    }
    /// Decay toward |0⟩: `|0⟩⟨1|`.
    fn sm() -> Operator {
        Operator::from_real_rows(2, &[0., 1., 0., 0.]).unwrap()
    }

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    #[test]
    fn hamiltonian_superop_zero_and_rotation() {
        let z = hamiltonian_superop(&Operator::zeros(2)).unwrap();
        assert_eq!(z, SuperOperator::zeros(2));

        let k = hamiltonian_superop(&sz()).unwrap();
        for &t in &[0.3, 1.0, 2.7] {
            let out = expm(&k.scale_re(t)).unwrap().apply(&sx());
            let want = &sx().scale_re((2.0 * t).cos()) + &sy().scale_re((2.0 * t).sin());
            assert!(close(&out, &want, 1e-13));
        }
        // Anti-hermitian as a matrix.
        assert!((k.matrix() + k.matrix().adjoint()).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_superop_bohr_spectrum() {
        let k = hamiltonian_superop(&kron(&sz(), &Operator::identity(2))).unwrap();
        let eig = eigenvalues(&k).unwrap();
        let count = |target: C64| eig.iter().filter(|z| (**z - target).norm() < 1e-12).count();
        assert_eq!(count(ZERO), 8);
        assert_eq!(count(C64::new(0.0, 2.0)), 4);
        assert_eq!(count(C64::new(0.0, -2.0)), 4);
    }

    #[test]
    fn hamiltonian_superop_rejects_non_hermitian() {
        assert!(matches!(hamiltonian_superop(&sm()), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn dephasing_examples() {
        let gamma = 0.7;
        let model = LindbladModel::new(2).with_lindblad(sz(), gamma).unwrap();
        let l = dissipator(&model);
        let ground = Operator::from_real_rows(2, &[1., 0., 0., 0.]).unwrap();
        assert!(l.apply(&ground).frobenius_norm() < 1e-15);
        // σx is an eigenvector with eigenvalue −2γ.
        assert!(close(&l.apply(&sx()), &sx().scale_re(-2.0 * gamma), 1e-14));
        let decayed = expm(&l.scale_re(1.5)).unwrap().apply(&sx());
        assert!(close(&decayed, &sx().scale_re((-3.0 * gamma).exp()), 1e-13));
        assert!(trace_preservation_residual(&l) < 1e-12);
    }

    #[test]
    fn amplitude_damping_decays_to_ground() {
        let model = LindbladModel::new(2).with_lindblad(sm(), 1.0).unwrap();
        let l = dissipator(&model);
        assert!(trace_preservation_residual(&l) < 1e-12);
        let excited = Operator::from_real_rows(2, &[0., 0., 0., 1.]).unwrap();
        let late = expm(&l.scale_re(40.0)).unwrap().apply(&excited);
        let ground = Operator::from_real_rows(2, &[1., 0., 0., 0.]).unwrap();
        assert!(close(&late, &ground, 1e-12));
    }

    #[test]
    fn unitality() {
        let deph = LindbladModel::new(2).with_lindblad(sz(), 1.0).unwrap();
        assert!(unitality_check(&deph).unital);
        let damp = LindbladModel::new(2).with_lindblad(sm(), 1.0).unwrap();
        let report = unitality_check(&damp);
        assert!(!report.unital);
        assert!(report.commutator_residual > 0.5 && report.identity_residual > 0.5);
        let two = LindbladModel::new(4)
            .with_lindblad(kron(&Operator::identity(2), &sz()), 1.0)
            .unwrap();
        assert!(unitality_check(&two).unital);
    }

    #[test]
    fn model_validation() {
        assert!(matches!(
            LindbladModel::new(2).with_lindblad(sz(), -1.0),
            Err(Error::NegativeRate(_))
        ));
        assert!(matches!(
            LindbladModel::new(4).with_lindblad(sz(), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(LindbladModel::new(2).with_hamiltonian(sm()).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let model = LindbladModel::new(2)
            .with_hamiltonian(sx())
            .unwrap()
            .with_lindblad(sm(), 0.5)
            .unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: LindbladModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
        let bad = r#"{"lindblads": [{"op": [[1, 0], [0, 1]], "rate": -2}]}"#;
        assert!(serde_json::from_str::<LindbladModel>(bad).is_err());
    }

    #[test]
    fn additive_and_linear_in_rates() {
        let a = LindbladModel::new(2).with_lindblad(sz(), 0.3).unwrap();
        let b = LindbladModel::new(2).with_lindblad(sm(), 1.1).unwrap();
        let ab = a.clone().with_lindblad(sm(), 1.1).unwrap();
        assert!((dissipator(&ab) - (dissipator(&a) + dissipator(&b))).frobenius_norm() < 1e-14);
        let doubled = a.scale_rates(2.0).unwrap();
        assert!((dissipator(&doubled) - dissipator(&a).scale_re(2.0)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn first_variation_examples() {
        let model = LindbladModel::new(2).with_lindblad(sz(), 1.0).unwrap();
        let zero = first_variation_dissipator(&model, &[Operator::zeros(2)]).unwrap();
        assert_eq!(zero, SuperOperator::zeros(2));
        let same = first_variation_dissipator(&model, &[sz()]).unwrap();
        assert!((same - dissipator(&model).scale_re(2.0)).frobenius_norm() < 1e-14);
        assert!(matches!(
            first_variation_dissipator(&model, &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn first_variation_matches_central_differences() {
        let l = Operator::from_fn(3, |r, c| C64::new((r + 2 * c) as f64 * 0.3 - 0.5, (r as f64 - c as f64) * 0.2));
        let dl = Operator::from_fn(3, |r, c| C64::new(((r * c) % 3) as f64 - 1.0, 0.4 * r as f64));
        let model = LindbladModel::new(3)
            .with_hamiltonian(Operator::identity(3))
            .unwrap()
            .with_lindblad(l, 0.8)
            .unwrap();
        let eps = 1e-5;
        let plus = dissipator(&model.shifted(std::slice::from_ref(&dl), eps).unwrap());
        let minus = dissipator(&model.shifted(std::slice::from_ref(&dl), -eps).unwrap());
        let fd = (plus - minus).scale_re(0.5 / eps);
        let analytic = first_variation_dissipator(&model, &[dl]).unwrap();
        assert!((&fd - &analytic).frobenius_norm() < 1e-7);
        assert!(trace_preservation_residual(&analytic) < 1e-12);
    }

    #[test]
    fn linear_correction_of_shifted_lindblads() {
        // For hermitian L and X, the 1/T term of D[L + X/T] is
        // X ρ L + L ρ X − ½{XL + LX, ρ}.
        let l = &kron(&sx(), &sz()) + &kron(&Operator::identity(2), &sy());
        let x = &kron(&sz(), &sz()).scale_re(0.5) + &kron(&sy(), &sx());
        let model = LindbladModel::new(4).with_lindblad(l.clone(), 1.0).unwrap();
        let t = 1e4;
        let shifted = perturbed_collective_lindbladian(&model, std::slice::from_ref(&x), t).unwrap();
        let l0 = dissipator(&model);
        let anti = &x * &l + &l * &x;
        let manual = &(&SuperOperator::sandwich(&x, &l) + &SuperOperator::sandwich(&l, &x))
            - &(&SuperOperator::left(&anti) + &SuperOperator::right(&anti)).scale_re(0.5);
        let l1 = (&shifted - &l0).scale_re(t);
        // Remaining difference is the 1/T quadratic term.
        assert!((&l1 - &manual).frobenius_norm() < 20.0 / t);
        assert_eq!(perturbed_collective_lindbladian(&model, &[Operator::zeros(4)], 10.0).unwrap(), l0);
    }

    #[test]
    fn shifted_generator_converges_as_inverse_t() {
        let model = LindbladModel::new(2).with_lindblad(sz(), 1.0).unwrap();
        let l0 = dissipator(&model);
        let d2 = (perturbed_collective_lindbladian(&model, &[sx()], 1e2).unwrap() - l0.clone()).frobenius_norm();
        let d3 = (perturbed_collective_lindbladian(&model, &[sx()], 1e3).unwrap() - l0).frobenius_norm();
        assert!((d2 / d3 - 10.0).abs() < 0.1, "ratio {}", d2 / d3);
    }
}
