use std::collections::BTreeMap;

use super::pauli::{
    basis_projector, heisenberg, lowering, paulis, sigma_minus, sigma_x, sigma_z, site_op, swap,
};
use super::{Expected, ModelSpec, TraceSetup};
use crate::error::{Error, Result};
use crate::liouville::{dissipator, LindbladModel};
use crate::steady::zero_group_projector;
use crate::tensor::{kron, partial_trace, Operator, C64, ONE, ZERO};

/// Collective spin operators `S^μ = Σ_j σ_j^μ` for `μ = x, y, z`.
pub fn collective_lindblads(n: usize) -> Result<Vec<Operator>> {
    if !(1..=6).contains(&n) {
        return Err(Error::OutOfRange(format!("collective model needs 1..=6 qubits, got {n}")));
    }
    paulis()
        .iter()
        .map(|p| {
            let mut s = Operator::zeros(1 << n);
            for j in 0..n {
                s += &site_op(p, j, n)?;
            }
            Ok(s)
        })
        .collect()
}

/// Total-spin Casimir `Σ_μ (S^μ/2)²`, eigenvalues `j(j+1)`.
pub fn total_spin_squared(n: usize) -> Result<Operator> {
    let mut out = Operator::zeros(1 << n);
    for s in collective_lindblads(n)? {
        out += &(&s * &s).scale_re(0.25);
    }
    Ok(out)
}

/// Four-qubit right shift `|abcd⟩ ↦ |dabc⟩`, composed from swaps as
/// `S₁₂ S₂₃ S₀₃` (zero-based sites).
pub fn right_shift() -> Operator {
    let s = |i, j| swap(i, j, 4).expect("sites in range");
    &(&s(1, 2) * &s(2, 3)) * &s(0, 3)
}

/// `[(σ⃗₀ + σ⃗₁) × σ⃗₂]·σ⃗₃ + [σ⃗₁ × (σ⃗₂ + σ⃗₃)]·σ⃗₀` on four qubits.
pub fn four_qubit_pauli_form() -> Operator {
    let p = paulis();
    let site = |k: usize, j: usize| site_op(&p[k], j, 4).expect("site in range");
    // (a × b)·c = Σ ε_{klm} a_k b_l c_m
    let triple = |a: &dyn Fn(usize) -> Operator, b: &dyn Fn(usize) -> Operator, c: &dyn Fn(usize) -> Operator| {
        let mut out = Operator::zeros(16);
        for (k, l, m, sign) in [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (0, 2, 1, -1.0),
            (2, 1, 0, -1.0),
            (1, 0, 2, -1.0),
        ] {
            out += &(&(&a(k) * &b(l)) * &c(m)).scale_re(sign);
        }
        out
    };
    let s01 = |k: usize| &site(k, 0) + &site(k, 1);
    let s23 = |k: usize| &site(k, 2) + &site(k, 3);
    let first = triple(&s01, &|k| site(k, 2), &|k| site(k, 3));
    let second = triple(&|k| site(k, 1), &s23, &|k| site(k, 0));
    &first + &second
}

fn collective_model(n: usize, rates: [f64; 3]) -> Result<LindbladModel> {
    collective_lindblads(n)?
        .into_iter()
        .zip(rates)
        .try_fold(LindbladModel::new(1 << n), |m, (l, g)| m.with_lindblad(l, g))
}

fn collective_expected(sources: &[(&str, &str)]) -> Expected {
    Expected {
        kernel_rank: Some(14),
        unital: Some(true),
        blocks: Some(vec![(2, 1), (3, 3), (1, 5)]),
        sources: sources
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        ..Expected::default()
    }
}

/// Four qubits under collective decoherence with rates `gamma`, the two
/// control Hamiltonians `Hx`, `Hz` of the three-qubit encoded gate set and
/// the symmetry-breaking shift `X^μ = g (σ⃗₀·σ⃗₁) S^z`.
pub fn fig1_model(gamma: [f64; 3], g: f64, theta: f64) -> Result<ModelSpec> {
    let n = 4;
    let model = collective_model(n, gamma)?;
    let z = |j| site_op(&sigma_z(), j, n).expect("site in range");
    let zz01 = &z(0) * &z(1);
    let zz12 = &z(1) * &z(2);
    let hx = &(&zz01 + &zz12).scale_re(1.5) + &Operator::identity(16);
    let hz = &(&zz01 - &zz12).scale_re(-0.75f64.sqrt()) + &z(0);
    let sz = collective_lindblads(n)?.remove(2);
    let x = (&heisenberg(0, 1, n)? * &sz).scale_re(g);

    let mut controls = BTreeMap::new();
    controls.insert("Hx".to_string(), hx);
    controls.insert("Hz".to_string(), hz);
    let mut perturbations = BTreeMap::new();
    perturbations.insert("X".to_string(), vec![x.clone(), x.clone(), x]);
    let parameters = BTreeMap::from([
        ("gamma_x".to_string(), gamma[0]),
        ("gamma_y".to_string(), gamma[1]),
        ("gamma_z".to_string(), gamma[2]),
        ("g".to_string(), g),
        ("theta".to_string(), theta),
    ]);
    Ok(ModelSpec {
        name: "fig1".into(),
        model,
        controls,
        perturbations,
        parameters,
        expected: collective_expected(&[
            ("kernel_rank", "commutant of the collective algebra: 2² + 3² + 1²"),
            ("blocks", "angular-momentum addition of four spin-1/2"),
            ("unital", "hermitian Lindblad operators"),
        ]),
        trace: None,
    })
}

/// Two qubits, `L = I ⊗ σᶻ`, perturbed by `δL = σ⁻ ⊗ σᶻ`; the emergent
/// Hamiltonian is `σʸ ⊗ I`.
pub fn two_qubit_emergent() -> Result<ModelSpec> {
    let i2 = Operator::identity(2);
    let model = LindbladModel::new(4).with_lindblad(kron(&i2, &sigma_z()), 1.0)?;
    let delta = vec![kron(&sigma_minus(), &sigma_z())];

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus_y = [C64::new(h, 0.0), C64::new(0.0, h)];
    let minus_y = [C64::new(h, 0.0), C64::new(0.0, -h)];
    let zero = [ONE, ZERO];
    let one = [ZERO, ONE];
    let col = |a: &[C64; 2], b: &[C64; 2]| -> Vec<C64> {
        (0..4).map(|r| a[r / 2] * b[r % 2]).collect()
    };
    let columns = [
        col(&plus_y, &zero),
        col(&minus_y, &zero),
        col(&plus_y, &one),
        col(&minus_y, &one),
    ];
    let basis = Operator::from_fn(4, |r, c| columns[c][r]);
    let plus_x = Operator::projector_onto(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
    let state = kron(&plus_x, &basis_projector(0));

    Ok(ModelSpec {
        name: "two_qubit_emergent".into(),
        model,
        controls: BTreeMap::new(),
        perturbations: BTreeMap::from([("delta".to_string(), delta)]),
        parameters: BTreeMap::new(),
        expected: Expected {
            kernel_rank: Some(8),
            unital: Some(true),
            emergent_spectrum: Some(vec![-1.0, 1.0]),
            limit_phases: Some(vec![-2.0, 0.0, 2.0]),
            blocks: Some(vec![(2, 1), (2, 1)]),
            sources: BTreeMap::from([
                ("emergent_spectrum".to_string(), "A = σʸ ⊗ I".to_string()),
                ("limit_phases".to_string(), "differences of ±1".to_string()),
            ]),
        },
        trace: Some(TraceSetup {
            basis,
            state,
            element: (0, 1),
            window: (0.01, 10.0),
            t: 100.0,
        }),
    })
}

/// Four qubits under collective decoherence perturbed by `δL_μ = U S^μ`
/// with `U` the right shift; the emergent Hamiltonian is `8 Im(U†)`.
pub fn four_qubit_emergent() -> Result<ModelSpec> {
    let n = 4;
    let model = collective_model(n, [1.0; 3])?;
    let u = right_shift();
    let delta: Vec<Operator> = model.lindblads().iter().map(|(s, _)| &u * s).collect();

    // Readout basis: eigenvectors of A with ties broken by S² and S^z.
    let a = u.adjoint().im_part().scale_re(8.0);
    let sz = collective_lindblads(n)?.remove(2);
    let split = &(&a + &total_spin_squared(n)?.scale_re(1e-3)) + &sz.scale_re(1e-4);
    let (values, vectors) = split.hermitian_eigen();
    let mut pair = None;
    'outer: for i in 0..values.len() {
        for j in 0..values.len() {
            if (values[i] - values[j] - 16.0).abs() < 0.01 {
                pair = Some((i, j));
                break 'outer;
            }
        }
    }
    let (i, j) = pair.ok_or_else(|| Error::OutOfRange("no ±8 eigenpair".into()))?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let w: Vec<C64> = (0..16)
        .map(|r| (vectors[(r, i)] + vectors[(r, j)]) * h)
        .collect();
    let sd = zero_group_projector(&dissipator(&model), None)?;
    let state = sd.p0().apply(&Operator::projector_onto(&w)).hermitian_part();
    let basis = Operator::new(vectors)?;

    Ok(ModelSpec {
        name: "four_qubit_emergent".into(),
        model,
        controls: BTreeMap::new(),
        perturbations: BTreeMap::from([("delta".to_string(), delta)]),
        parameters: BTreeMap::new(),
        expected: Expected {
            emergent_spectrum: Some(vec![-8.0, 0.0, 8.0]),
            limit_phases: Some(vec![-16.0, -8.0, 0.0, 8.0, 16.0]),
            ..collective_expected(&[
                ("kernel_rank", "commutant of the collective algebra: 2² + 3² + 1²"),
                ("emergent_spectrum", "A = 8 Im(U†) for the right shift U"),
                ("limit_phases", "differences of {−8, 0, 8}"),
            ])
        },
        trace: Some(TraceSetup {
            basis,
            state,
            element: (i, j),
            window: (0.5, 4.0),
            t: 100.0,
        }),
    })
}

/// Unique steady state of a bath generator; errors unless the kernel is
/// one-dimensional.
pub fn bath_steady_state(bath: &LindbladModel) -> Result<Operator> {
    let sd = zero_group_projector(&dissipator(bath), None)?;
    if sd.kernel_rank() != 1 {
        return Err(Error::OutOfRange(format!(
            "bath must have a unique steady state, kernel rank is {}",
            sd.kernel_rank()
        )));
    }
    let rho = sd.p0().apply(&Operator::identity(bath.dim()));
    let tr = rho.trace();
    Ok(rho.scale(tr.inv()).hermitian_part())
}

/// `Tr_B(K (I ⊗ ρ_B))` for `K` on `S ⊗ B`.
pub fn reduced_hamiltonian(k: &Operator, rho_b: &Operator, dim_s: usize) -> Result<Operator> {
    let dim_b = rho_b.dim();
    if k.dim() != dim_s * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_s * dim_b,
            found: k.dim(),
        });
    }
    let weighted = k * &kron(&Operator::identity(dim_s), rho_b);
    partial_trace(&weighted, &[dim_s, dim_b], &[0])
}

/// A system of dimension `dim_s` untouched by a bath with a unique steady
/// state: `ℒ₀ = id_S ⊗ ℒ_B`. The optional `k` becomes control `"K"`.
pub fn example0_model(dim_s: usize, bath: &LindbladModel, k: Option<Operator>) -> Result<ModelSpec> {
    if dim_s == 0 {
        return Err(Error::OutOfRange("system dimension must be positive".into()));
    }
    bath_steady_state(bath)?;
    let id_s = Operator::identity(dim_s);
    let mut model = LindbladModel::new(dim_s * bath.dim());
    if let Some(h) = bath.hamiltonian() {
        model = model.with_hamiltonian(kron(&id_s, h))?;
    }
    for (l, rate) in bath.lindblads() {
        model = model.with_lindblad(kron(&id_s, l), *rate)?;
    }
    let mut controls = BTreeMap::new();
    if let Some(k) = k {
        if k.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: k.dim(),
            });
        }
        controls.insert("K".to_string(), k);
    }
    Ok(ModelSpec {
        name: "example0".into(),
        model,
        controls,
        perturbations: BTreeMap::new(),
        parameters: BTreeMap::from([("dim_s".to_string(), dim_s as f64)]),
        expected: Expected {
            kernel_rank: Some(dim_s * dim_s),
            sources: BTreeMap::from([(
                "kernel_rank".to_string(),
                "𝒫₀(X) = Tr_B(X) ⊗ ρ_B".to_string(),
            )]),
            ..Expected::default()
        },
        trace: None,
    })
}

fn dephasing_model() -> Result<ModelSpec> {
    Ok(ModelSpec {
        name: "dephasing".into(),
        model: LindbladModel::new(2).with_lindblad(sigma_z(), 1.0)?,
        controls: BTreeMap::from([("X".to_string(), sigma_x())]),
        perturbations: BTreeMap::new(),
        parameters: BTreeMap::new(),
        expected: Expected {
            kernel_rank: Some(2),
            unital: Some(true),
            blocks: Some(vec![(1, 1), (1, 1)]),
            ..Expected::default()
        },
        trace: None,
    })
}

/// Names accepted by [`zoo_model`].
pub fn zoo_names() -> &'static [&'static str] {
    &["dephasing", "example0", "fig1", "four_qubit_emergent", "two_qubit_emergent"]
}

/// Builds a zoo model by name with default parameters.
pub fn zoo_model(name: &str) -> Result<ModelSpec> {
    match name {
        "dephasing" => dephasing_model(),
        "example0" => {
            let bath = LindbladModel::new(2).with_lindblad(lowering(), 1.0)?;
            example0_model(2, &bath, Some(kron(&sigma_x(), &sigma_z())))
        }
        "fig1" => fig1_model([1.0; 3], 1.0, 1.0),
        "four_qubit_emergent" => four_qubit_emergent(),
        "two_qubit_emergent" => two_qubit_emergent(),
        other => Err(Error::OutOfRange(format!(
            "unknown model {other:?}; known: {}",
            zoo_names().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kato::{effective_generator, emergent_hamiltonian_formula, extract_effective_hamiltonian};
    use crate::liouville::{first_variation_dissipator, hamiltonian_superop, perturbed_collective_lindbladian};
    use crate::models::pauli::{basis_vector, sigma_y};
    use crate::models::{distinct_eigenvalues, phase_differences};
    use crate::tensor::DensityMatrix;

    fn ket(v: &[C64]) -> Operator {
        Operator::from_fn(v.len(), |r, c| if c == 0 { v[r] } else { ZERO })
    }

    #[test]
    fn collective_operators() {
        let s1 = collective_lindblads(1).unwrap();
        assert_eq!(s1, paulis().to_vec());
        assert!(collective_lindblads(0).is_err());
        assert!(collective_lindblads(7).is_err());
        // Two qubits: Σ(S^μ)² has 0 on the singlet and 8 on the triplet.
        let s = collective_lindblads(2).unwrap();
        let mut sq = Operator::zeros(4);
        for op in &s {
            sq += &(op * op);
        }
        let (values, _) = sq.hermitian_eigen();
        let want = [0.0, 8.0, 8.0, 8.0];
        for (v, w) in values.iter().zip(want) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn right_shift_permutes_sites() {
        let u = right_shift();
        for idx in 0..16 {
            let bits: Vec<usize> = (0..4).map(|k| (idx >> (3 - k)) & 1).collect();
            let shifted = [bits[3], bits[0], bits[1], bits[2]];
            let out = &u * &ket(&basis_vector(&bits));
            assert_eq!(out, ket(&basis_vector(&shifted)));
        }
    }

    #[test]
    fn four_qubit_hamiltonian_forms_agree() {
        let u = right_shift();
        let a = u.adjoint().im_part().scale_re(8.0);
        let pauli = four_qubit_pauli_form();
        assert!((&a - &pauli).frobenius_norm() < 1e-10);
        assert_eq!(distinct_eigenvalues(&a, 1e-9).len(), 3);
    }

    #[test]
    fn four_qubit_moment_is_casimir() {
        let spec = four_qubit_emergent().unwrap();
        let mut m = Operator::zeros(16);
        for ((l, _), dl) in spec.model.lindblads().iter().zip(spec.perturbation("delta").unwrap()) {
            m += &(&dl.adjoint() * l);
        }
        let want = (&right_shift().adjoint() * &total_spin_squared(4).unwrap()).scale_re(4.0);
        assert!((&m - &want).frobenius_norm() < 1e-11);
    }

    #[test]
    fn four_qubit_trace_state_is_valid() {
        let spec = four_qubit_emergent().unwrap();
        let tr = spec.trace.as_ref().unwrap();
        assert!(DensityMatrix::new(tr.state.clone()).is_ok());
        spec.validate().unwrap();
    }

    #[test]
    fn two_qubit_projector_form() {
        let spec = two_qubit_emergent().unwrap();
        let sd = zero_group_projector(&dissipator(&spec.model), None).unwrap();
        let x = Operator::from_fn(4, |r, c| C64::new((r * 4 + c) as f64 * 0.1, r as f64 - c as f64));
        let mut want = Operator::zeros(4);
        for b in 0..2 {
            let proj = basis_projector(b);
            let weighted = &x * &kron(&Operator::identity(2), &proj);
            want += &kron(&partial_trace(&weighted, &[2, 2], &[0]).unwrap(), &proj);
        }
        assert!((&sd.p0().apply(&x) - &want).frobenius_norm() < 1e-12);

        let a = emergent_hamiltonian_formula(&spec.model, spec.perturbation("delta").unwrap(), &sd).unwrap();
        assert!((&a - &kron(&sigma_y(), &Operator::identity(2))).frobenius_norm() < 1e-10);
        let tr = spec.trace.as_ref().unwrap();
        assert!((&sd.p0().apply(&tr.state) - &tr.state).frobenius_norm() < 1e-12);
        let basis = &tr.basis;
        assert!((&(&basis.adjoint() * basis) - &Operator::identity(4)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn every_zoo_model_reproduces_its_facts() {
        for name in zoo_names() {
            let spec = zoo_model(name).unwrap();
            spec.validate().unwrap();
            for check in spec.verify_expected().unwrap() {
                assert!(check.ok, "{name}: {check:?}");
            }
        }
        assert!(zoo_model("nope").is_err());
    }

    #[test]
    fn limit_phases_are_spectrum_differences() {
        for spec in [two_qubit_emergent().unwrap(), four_qubit_emergent().unwrap()] {
            let e = &spec.expected;
            let phases = phase_differences(e.emergent_spectrum.as_ref().unwrap());
            assert_eq!(&phases, e.limit_phases.as_ref().unwrap());
        }
    }

    #[test]
    fn fig1_projected_controls() {
        let spec = fig1_model([1.0; 3], 1.0, 1.0).unwrap();
        let sd = zero_group_projector(&dissipator(&spec.model), None).unwrap();
        // Single-site operators are annihilated.
        for p in paulis() {
            for j in 0..4 {
                let x = site_op(&p, j, 4).unwrap();
                assert!(sd.p0().apply(&x).frobenius_norm() < 1e-10);
            }
        }
        // 𝒫₀(Hx) = S₀₁ + S₁₂.
        let hx = sd.p0().apply(spec.control("Hx").unwrap());
        let want = &swap(0, 1, 4).unwrap() + &swap(1, 2, 4).unwrap();
        assert!((&hx - &want).frobenius_norm() < 1e-10);
        // The shift has no first-order projected effect; what is left is O(1/T²).
        let l0 = dissipator(&spec.model);
        let x = spec.perturbation("X").unwrap();
        let l1 = first_variation_dissipator(&spec.model, x).unwrap();
        assert!((&(sd.p0() * &l1) * sd.p0()).frobenius_norm() < 1e-10);
        let projected = |t: f64| {
            let shifted = perturbed_collective_lindbladian(&spec.model, x, t).unwrap();
            (&(sd.p0() * &(&shifted - &l0)) * sd.p0()).frobenius_norm()
        };
        let ratio = projected(100.0) / projected(200.0);
        assert!((ratio - 4.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn example0_reduction() {
        let bath = LindbladModel::new(2).with_lindblad(lowering(), 1.0).unwrap();
        let rho_b = bath_steady_state(&bath).unwrap();
        assert!((&rho_b - &basis_projector(0)).frobenius_norm() < 1e-12);
        let spec = example0_model(2, &bath, None).unwrap();
        let sd = zero_group_projector(&dissipator(&spec.model), None).unwrap();
        assert_eq!(sd.kernel_rank(), 4);
        let x = Operator::from_fn(4, |r, c| C64::new(r as f64 + 0.5 * c as f64, 0.3 * c as f64));
        let want = kron(&partial_trace(&x, &[2, 2], &[0]).unwrap(), &rho_b);
        assert!((&sd.p0().apply(&x) - &want).frobenius_norm() < 1e-12);

        let ks = sigma_y();
        let keff = reduced_hamiltonian(&kron(&ks, &Operator::identity(2)), &rho_b, 2).unwrap();
        assert!((&keff - &ks).frobenius_norm() < 1e-14);
        let keff = reduced_hamiltonian(&kron(&sigma_x(), &sigma_z()), &rho_b, 2).unwrap();
        assert!((&keff - &sigma_x()).frobenius_norm() < 1e-14);

        // The first Kato term acts as the reduced Hamiltonian on the range.
        let k = kron(&sigma_x(), &sigma_z());
        let l1 = hamiltonian_superop(&k).unwrap();
        let r1 = effective_generator(&sd, &l1).unwrap();
        let reduced = hamiltonian_superop(&kron(&keff, &Operator::identity(2))).unwrap();
        assert!((&r1 - &(&reduced * sd.p0())).frobenius_norm() < 1e-10);

        let dephasing = LindbladModel::new(2).with_lindblad(sigma_z(), 1.0).unwrap();
        assert!(example0_model(2, &dephasing, None).is_err());
    }

    #[test]
    fn delta_zero_variant_has_no_hamiltonian() {
        let spec = two_qubit_emergent().unwrap();
        let sd = zero_group_projector(&dissipator(&spec.model), None).unwrap();
        let l1 = first_variation_dissipator(&spec.model, &[Operator::zeros(4)]).unwrap();
        let (a, res) = extract_effective_hamiltonian(&effective_generator(&sd, &l1).unwrap(), &sd).unwrap();
        assert!(a.frobenius_norm() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn model_spec_json_round_trip() {
        let spec = two_qubit_emergent().unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
