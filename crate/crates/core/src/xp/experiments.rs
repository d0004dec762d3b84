use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CandidateKind, Experiment, ExperimentConfig, OperatorRef, ShiftRef, TraceGenerator};
use super::table::{fit_loglog, Cell, SweepResult};
use super::XpError;
use crate::holonomy::{holonomy_runs, instantaneous_projector, projector_derivative};
use crate::kato::{error_bound, kato_terms, perturbed_projector};
use crate::liouville::{
    dissipative_part, dissipator, first_variation_dissipator, hamiltonian_superop,
    perturbed_collective_lindbladian, unitality_check,
};
use crate::models::pauli::{paulis, site_op};
use crate::models::ModelSpec;
use crate::steady::{algebra_closure, hamiltonian_robustness_check, zero_group_projector, SteadyDecomposition};
use crate::tensor::{eigenvalues, expm, spectral_norm, MatrixView, Operator, SuperOperator, C64};

/// Default number of largest-parameter points in the scaling fit.
const SCALING_FIT_POINTS: usize = 4;
/// Intervals of the optional sup grid on `[0, T]`.
const SUP_GRID_INTERVALS: u32 = 15;
const DEFAULT_SAMPLES: usize = 400;
const DEFAULT_REFERENCE_T: f64 = 100.0;
const DEFAULT_X_VALUES: [f64; 3] = [0.002, 0.005, 0.01];
const FD_STEP: f64 = 1e-4;
const STATE_TOL: f64 = 1e-8;
/// Largest Hilbert-space dimension handed to the algebra closure.
const ALGEBRA_MAX_DIM: usize = 64;

fn config_error(msg: impl Into<String>) -> XpError {
    XpError::Config(msg.into())
}

fn named_control<'a>(spec: &'a ModelSpec, name: &str) -> Result<&'a Operator, XpError> {
    spec.control(name).map_err(|e| config_error(e.to_string()))
}

fn named_shifts<'a>(spec: &'a ModelSpec, name: &str) -> Result<&'a [Operator], XpError> {
    spec.perturbation(name).map_err(|e| config_error(e.to_string()))
}

fn check_shifts(spec: &ModelSpec, shifts: &[Operator]) -> Result<(), XpError> {
    let n = spec.model.lindblads().len();
    if shifts.len() != n {
        return Err(config_error(format!(
            "expected {n} Lindblad shifts, found {}",
            shifts.len()
        )));
    }
    if let Some(op) = shifts.iter().find(|op| op.dim() != spec.dim()) {
        return Err(config_error(format!(
            "shift has dimension {}, model has {}",
            op.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

fn steady(l0: &SuperOperator, cfg: &ExperimentConfig) -> Result<SteadyDecomposition, XpError> {
    Ok(zero_group_projector(l0, cfg.tolerances.kernel)?)
}

fn required<'a, T: ?Sized>(value: Option<&'a T>, what: &str, cfg: &ExperimentConfig) -> Result<&'a T, XpError> {
    value.ok_or_else(|| config_error(format!("{} experiment needs {what}", cfg.experiment.name())))
}

/// Marks the `k` last rows (largest parameters) as used by the fit.
fn fit_mask(rows: usize, k: usize) -> Vec<bool> {
    (0..rows).map(|i| i + k.min(rows) >= rows).collect()
}

fn note_steady(out: &mut SweepResult, sd: &SteadyDecomposition) {
    out.note("kernel_rank", sd.kernel_rank());
    out.note("kernel_tolerance", sd.tolerance());
    out.note("gap", finite_or_null(sd.gap()));
    out.note("relaxation_time", finite_or_null(sd.relaxation_time()));
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Dispatches on the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    match cfg.experiment {
        Experiment::Scaling => scaling_sweep(cfg),
        Experiment::Spectrum => spectrum_sweep(cfg),
        Experiment::Holonomy => holonomy_sweep(cfg),
        Experiment::Robustness => robustness_report(cfg),
        Experiment::Trace => coherence_trace(cfg),
        Experiment::Kato => kato_report(cfg),
    }
}

/// Distance between the exact evolution under `ℒ₀ + 𝒦/T` and the effective
/// evolution `e^{𝒫₀𝒦𝒫₀}` on the steady-state manifold, at `t = T`.
///
/// With a perturbation, `ℒ₀` is replaced by the generator of the shifted
/// Lindblad operators `L_α + X_α/T`. Columns `T, inv_T, distance,
/// fit_used`, plus `sup_distance` over a 16-point grid on `[0, T]` when
/// `sup_grid` is set. The fit is `ln distance` against `ln inv_T`.
pub fn scaling_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let control = required(cfg.control.as_deref(), "control", cfg)?;
    let k = named_control(&spec, control)?;
    let shifts = match cfg.perturbation.as_deref() {
        Some(name) => {
            let s = named_shifts(&spec, name)?;
            check_shifts(&spec, s)?;
            Some(s)
        }
        None => None,
    };
    let ts = required(cfg.t_values.as_deref(), "t_values", cfg)?;

    let l0 = dissipator(&spec.model);
    let sd = steady(&l0, cfg)?;
    let p0 = sd.p0();
    let kk = hamiltonian_superop(k)?;
    let eff = &(p0 * &kk) * p0;
    let eff_map = &expm(&eff)? * p0;
    let eff_step = if cfg.sup_grid {
        Some(expm(&eff.scale_re(1.0 / f64::from(SUP_GRID_INTERVALS)))?)
    } else {
        None
    };

    let points: Vec<(f64, Option<f64>)> = ts
        .par_iter()
        .map(|&t| -> Result<(f64, Option<f64>), XpError> {
            let base = match shifts {
                Some(xs) => perturbed_collective_lindbladian(&spec.model, xs, t)?,
                None => l0.clone(),
            };
            let generator = &base + &kk.scale_re(1.0 / t);
            let exact = &expm(&generator.scale_re(t))? * p0;
            let distance = spectral_norm(&(&exact - &eff_map));
            let sup = match &eff_step {
                Some(eff_step) => {
                    let step = expm(&generator.scale_re(t / f64::from(SUP_GRID_INTERVALS)))?;
                    let mut cur = p0.clone();
                    let mut cur_eff = p0.clone();
                    let mut best = 0.0f64;
                    for j in 0..=SUP_GRID_INTERVALS {
                        if j > 0 {
                            cur = &step * &cur;
                            cur_eff = eff_step * &cur_eff;
                        }
                        best = best.max(spectral_norm(&(&cur - &cur_eff)));
                    }
                    Some(best.max(distance))
                }
                None => None,
            };
            Ok((distance, sup))
        })
        .collect::<Result<_, _>>()?;

    let mut columns = vec!["T", "inv_T", "distance", "fit_used"];
    if cfg.sup_grid {
        columns.push("sup_distance");
    }
    let mut out = SweepResult::new("scaling", &columns);
    let k_fit = cfg.tolerances.fit_points.unwrap_or(SCALING_FIT_POINTS);
    let mask = fit_mask(ts.len(), k_fit);
    let mut fit_pts = Vec::new();
    for ((&t, &(d, sup)), &used) in ts.iter().zip(&points).zip(&mask) {
        let mut row = vec![Cell::Num(t), Cell::Num(1.0 / t), Cell::Num(d), Cell::Bool(used)];
        if cfg.sup_grid {
            row.push(Cell::from(sup));
        }
        out.push(row);
        if used {
            fit_pts.push((1.0 / t, d));
        }
    }
    out.fit = fit_loglog("inv_T", &fit_pts);
    if let Some(fit) = &out.fit {
        out.note("slope_vs_T", -fit.slope);
    }
    out.note("control", control);
    out.note("perturbation", &cfg.perturbation);
    out.note("sup_grid", cfg.sup_grid);
    out.note("effective_generator_norm", spectral_norm(&eff));
    note_steady(&mut out, &sd);
    Ok(out)
}

/// Eigenvalues of `m𝒫₀` restricted to the range of `𝒫₀`, dropping those of
/// modulus below `drop`, sorted by argument then modulus.
pub fn restricted_spectrum(sd: &SteadyDecomposition, m: &SuperOperator, drop: f64) -> Result<Vec<C64>, XpError> {
    let mut eig: Vec<C64> = eigenvalues(&sd.compress(m))?
        .into_iter()
        .filter(|z| z.norm() >= drop)
        .collect();
    eig.sort_by(|a, b| a.arg().total_cmp(&b.arg()).then(a.norm().total_cmp(&b.norm())));
    Ok(eig)
}

fn format_complex(z: C64) -> String {
    let re = Cell::Num(z.re).render();
    let im = Cell::Num(z.im.abs()).render();
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{re}{sign}{im}i")
}

/// Largest distance from a point of `from` to the nearest point of `to`.
fn directed_distance(from: &[C64], to: &[C64]) -> Option<f64> {
    if to.is_empty() {
        return None;
    }
    Some(
        from.iter()
            .map(|a| to.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max),
    )
}

/// Eigenvalues of `e^{Tℒ(T)}𝒫₀` on the range of `𝒫₀`, with `ℒ(T)` the
/// generator of the shifted Lindblad operators `L_α + δL_α/T`.
///
/// Columns `T, inv_T, count, max_modulus, max_phase_distance,
/// coverage_distance, eigenvalues`. The two distances compare with the
/// model's expected limit points `e^{iθ}`: the first from each eigenvalue
/// to the nearest limit point, the second from each limit point to the
/// nearest eigenvalue.
pub fn spectrum_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let name = cfg.perturbation.as_deref().unwrap_or("delta");
    let shifts = named_shifts(&spec, name)?;
    check_shifts(&spec, shifts)?;
    let ts = required(cfg.t_values.as_deref(), "t_values", cfg)?;
    let limits: Vec<C64> = spec
        .expected
        .limit_phases
        .iter()
        .flatten()
        .map(|&th| C64::from_polar(1.0, th))
        .collect();

    let l0 = dissipator(&spec.model);
    let sd = steady(&l0, cfg)?;
    let drop = cfg.tolerances.drop_modulus;
    let spectra: Vec<Vec<C64>> = ts
        .par_iter()
        .map(|&t| -> Result<Vec<C64>, XpError> {
            let generator = dissipator(&spec.model.shifted(shifts, 1.0 / t)?);
            let map = expm(&generator.scale_re(t))?;
            restricted_spectrum(&sd, &map, drop)
        })
        .collect::<Result<_, _>>()?;

    let mut out = SweepResult::new(
        "spectrum",
        &[
            "T",
            "inv_T",
            "count",
            "max_modulus",
            "max_phase_distance",
            "coverage_distance",
            "eigenvalues",
        ],
    );
    let mut worst_modulus = 0.0f64;
    for (&t, eig) in ts.iter().zip(&spectra) {
        let max_modulus = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_modulus = worst_modulus.max(max_modulus);
        let listed: Vec<String> = eig.iter().map(|&z| format_complex(z)).collect();
        out.push(vec![
            Cell::Num(t),
            Cell::Num(1.0 / t),
            Cell::Int(eig.len() as u64),
            Cell::Num(max_modulus),
            Cell::from(directed_distance(eig, &limits)),
            Cell::from(if eig.is_empty() { None } else { directed_distance(&limits, eig) }),
            Cell::Text(listed.join(" ")),
        ]);
    }
    out.note("perturbation", name);
    out.note("limit_phases", &spec.expected.limit_phases);
    out.note("drop_modulus", drop);
    out.note("max_modulus", worst_modulus);
    note_steady(&mut out, &sd);
    Ok(out)
}

/// Algebraic least-squares circle through points of the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircleFit {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    /// `max_k ||z_k − c| − r| / r`
    pub max_radial_deviation: f64,
}

/// Fits `|z − c|² = r²` by solving `D x + E y + F = −(x² + y²)` in the
/// least-squares sense. Returns `None` for fewer than three points or
/// degenerate (collinear or coincident) data.
pub fn circle_fit(points: &[C64]) -> Option<CircleFit> {
    if points.len() < 3 {
        return None;
    }
    let a = nalgebra::DMatrix::<f64>::from_fn(points.len(), 3, |i, j| match j {
        0 => points[i].re,
        1 => points[i].im,
        _ => 1.0,
    });
    let b = nalgebra::DVector::<f64>::from_fn(points.len(), |i, _| -points[i].norm_sqr());
    let svd = a.svd(true, true);
    let top = svd.singular_values.max();
    if top.is_nan() || top <= 0.0 || svd.singular_values.min() <= 1e-12 * top {
        return None;
    }
    let sol = svd.solve(&b, 0.0).ok()?;
    let (cx, cy) = (-0.5 * sol[0], -0.5 * sol[1]);
    let r2 = cx * cx + cy * cy - sol[2];
    if r2.is_nan() || r2 <= 0.0 {
        return None;
    }
    let radius = r2.sqrt();
    let c = C64::new(cx, cy);
    let dev = points
        .iter()
        .map(|z| ((z - c).norm() - radius).abs())
        .fold(0.0, f64::max)
        / radius;
    dev.is_finite().then_some(CircleFit {
        center_re: cx,
        center_im: cy,
        radius,
        max_radial_deviation: dev,
    })
}

/// Time series of one matrix element of `ρ(t)`, read out in the model's
/// trace basis, over the model's window (in units of its `T`).
///
/// The steady-state manifold is that of the dissipative part of the model,
/// so a purely Hamiltonian model accepts every state. The evolution uses
/// the model's full generator plus the perturbation (`delta` if the model
/// has one), either to first order or fully substituted.
pub fn coherence_trace(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let setup = spec
        .trace
        .clone()
        .ok_or_else(|| config_error(format!("model {} has no trace setup", spec.name)))?;
    let shifts = match cfg.perturbation.as_deref() {
        Some(name) => Some(named_shifts(&spec, name)?),
        None => spec.perturbations.get("delta").map(Vec::as_slice),
    };
    if let Some(s) = shifts {
        check_shifts(&spec, s)?;
    }
    let dim = spec.dim();
    if setup.basis.dim() != dim || setup.state.dim() != dim {
        return Err(config_error("trace basis and state must match the model dimension"));
    }
    let (row, col) = setup.element;
    if row >= dim || col >= dim {
        return Err(config_error(format!("trace element ({row}, {col}) out of range")));
    }
    let (lo, hi) = setup.window;
    if !(setup.t > 0.0 && lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(config_error("trace window must satisfy 0 <= start < end and T > 0"));
    }
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);

    let sd = steady(&dissipative_part(&spec.model), cfg)?;
    let rho = setup.state.clone();
    let state_residual = (&sd.p0().apply(&rho) - &rho).frobenius_norm();
    if state_residual > STATE_TOL {
        return Err(config_error(format!(
            "initial state is not steady under the dissipation (residual {state_residual:e})"
        )));
    }

    let big_t = setup.t;
    let base = dissipator(&spec.model);
    let generator = match (shifts, cfg.generator) {
        (None, _) => base,
        (Some(d), TraceGenerator::FirstOrder) => {
            &base + &first_variation_dissipator(&spec.model, d)?.scale_re(1.0 / big_t)
        }
        (Some(d), TraceGenerator::Full) => dissipator(&spec.model.shifted(d, 1.0 / big_t)?),
    };
    let t0 = lo * big_t;
    let dt = (hi - lo) * big_t / (samples - 1) as f64;
    let step = expm(&generator.scale_re(dt))?;
    let mut current = expm(&generator.scale_re(t0))?.apply(&rho);
    let basis = setup.basis.matrix();
    let mut times = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        if i > 0 {
            current = step.apply(&current);
        }
        let readout = basis.adjoint() * current.matrix() * basis;
        times.push(t0 + dt * i as f64);
        values.push(readout[(row, col)]);
    }

    let mut out = SweepResult::new("trace", &["t", "re", "im"]);
    for (&t, z) in times.iter().zip(&values) {
        out.push(vec![Cell::Num(t), Cell::Num(z.re), Cell::Num(z.im)]);
    }
    let fit = circle_fit(&values);
    out.note("circle", fit);
    out.note("max_radial_deviation", fit.map(|f| f.max_radial_deviation));
    out.note("state_residual", state_residual);
    out.note("generator", if shifts.is_some() { Some(cfg.generator) } else { None });
    out.note("T", big_t);
    out.note("element", setup.element);
    out.note("window", setup.window);
    note_steady(&mut out, &sd);
    Ok(out)
}

/// Sum of single-site Pauli fields with coefficients uniform in `[−1, 1]`.
fn site_fields(dim: usize, seed: u64) -> Result<Operator, XpError> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(config_error(format!("site fields need a qubit register, got dimension {dim}")));
    }
    let n = dim.trailing_zeros() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Operator::zeros(dim);
    for site in 0..n {
        for p in paulis() {
            let c: f64 = rng.random_range(-1.0..=1.0);
            v += &site_op(&p, site, n)?.scale_re(c);
        }
    }
    Ok(v)
}

enum Resolved {
    Hamiltonian(Operator),
    Dissipative(Vec<Operator>),
}

fn resolve_candidates(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<Vec<(String, Resolved)>, XpError> {
    let mut out = Vec::new();
    match &cfg.candidates {
        Some(list) => {
            for c in list {
                let r = match &c.kind {
                    CandidateKind::Hamiltonian(OperatorRef::Named(n)) => {
                        Resolved::Hamiltonian(named_control(spec, n)?.clone())
                    }
                    CandidateKind::Hamiltonian(OperatorRef::Inline(op)) => Resolved::Hamiltonian(op.clone()),
                    CandidateKind::Dissipative(ShiftRef::Named(n)) => {
                        Resolved::Dissipative(named_shifts(spec, n)?.to_vec())
                    }
                    CandidateKind::Dissipative(ShiftRef::Inline(ops)) => Resolved::Dissipative(ops.clone()),
                    CandidateKind::SiteFields => Resolved::Hamiltonian(site_fields(spec.dim(), cfg.seed)?),
                };
                out.push((c.name.clone(), r));
            }
        }
        None => {
            for (n, op) in &spec.controls {
                out.push((n.clone(), Resolved::Hamiltonian(op.clone())));
            }
            for (n, ops) in &spec.perturbations {
                out.push((n.clone(), Resolved::Dissipative(ops.clone())));
            }
            if spec.dim().is_power_of_two() && spec.dim() >= 2 {
                out.push(("site_fields".into(), Resolved::Hamiltonian(site_fields(spec.dim(), cfg.seed)?)));
            }
        }
    }
    for (name, r) in &out {
        match r {
            Resolved::Hamiltonian(op) => {
                if op.dim() != spec.dim() {
                    return Err(config_error(format!("candidate {name}: dimension {}", op.dim())));
                }
                if !op.is_hermitian(1e-12) {
                    return Err(config_error(format!("candidate {name} is not hermitian")));
                }
            }
            Resolved::Dissipative(ops) => check_shifts(spec, ops)
                .map_err(|e| config_error(format!("candidate {name}: {e}")))?,
        }
    }
    Ok(out)
}

/// Classifies candidate perturbations of the model.
///
/// Columns `name, kind, projected_norm, center_residual, robust,
/// effective_difference, exact_difference`. `projected_norm` is
/// `‖𝒫₀𝒱𝒫₀‖` for the superoperator `𝒱` of the candidate (`−i[V, •]` or
/// the first variation of the dissipator), and a candidate is robust when
/// it is below `tolerances.robust · max(1, ‖𝒱‖)`. For hamiltonian
/// candidates on unital models the distance of `𝒫₀(V)` from the center of
/// the Lindblad algebra is reported as well. `effective_difference` is
/// `‖(e^{𝒫₀𝒱𝒫₀} − I)𝒫₀‖` and `exact_difference` is
/// `‖(e^{T(ℒ₀+𝒱/T)} − I)𝒫₀‖` at the reference `T`.
pub fn robustness_report(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let candidates = resolve_candidates(cfg, &spec)?;
    let big_t = cfg.reference_t.unwrap_or(DEFAULT_REFERENCE_T);

    let l0 = dissipator(&spec.model);
    let sd = steady(&l0, cfg)?;
    let p0 = sd.p0();
    let unital = unitality_check(&spec.model).unital;
    let algebra = if unital && spec.dim() <= ALGEBRA_MAX_DIM && !spec.model.lindblads().is_empty() {
        let gens: Vec<Operator> = spec.model.lindblads().iter().map(|(l, _)| l.clone()).collect();
        Some(algebra_closure(&gens, cfg.seed)?)
    } else {
        None
    };
    let identity = SuperOperator::identity(spec.dim());

    let mut out = SweepResult::new(
        "robustness",
        &[
            "name",
            "kind",
            "projected_norm",
            "center_residual",
            "robust",
            "effective_difference",
            "exact_difference",
        ],
    );
    let rows: Vec<Vec<Cell>> = candidates
        .par_iter()
        .map(|(name, cand)| -> Result<Vec<Cell>, XpError> {
            let (kind, v, center) = match cand {
                Resolved::Hamiltonian(op) => {
                    let center = match &algebra {
                        Some(alg) => Some(hamiltonian_robustness_check(op, alg)?.center_residual),
                        None => None,
                    };
                    ("hamiltonian", hamiltonian_superop(op)?, center)
                }
                Resolved::Dissipative(ops) => {
                    ("dissipative", first_variation_dissipator(&spec.model, ops)?, None)
                }
            };
            let projected = &(p0 * &v) * p0;
            let projected_norm = spectral_norm(&projected);
            let robust = projected_norm <= cfg.tolerances.robust * spectral_norm(&v).max(1.0);
            let effective = spectral_norm(&(&(&expm(&projected)? - &identity) * p0));
            let generator = &l0 + &v.scale_re(1.0 / big_t);
            let exact = spectral_norm(&(&(&expm(&generator.scale_re(big_t))? - &identity) * p0));
            Ok(vec![
                Cell::Text(name.clone()),
                Cell::from(kind),
                Cell::Num(projected_norm),
                Cell::from(center),
                Cell::Bool(robust),
                Cell::Num(effective),
                Cell::Num(exact),
            ])
        })
        .collect::<Result<_, _>>()?;
    for row in rows {
        out.push(row);
    }
    out.note("reference_T", big_t);
    out.note("unital", unital);
    if let Some(alg) = &algebra {
        out.note("blocks", alg.block_shapes());
        out.note("codimension", alg.codimension());
        out.note("commutant_dim", alg.commutant_dim());
    }
    note_steady(&mut out, &sd);
    Ok(out)
}

/// Projection string `e^{−t𝒦}(e^{t𝒦/n}𝒫₀)^n` against its closed-form
/// limit for each `n`. Columns `n, inv_n, deviation, fit_used`; the fit is
/// `ln deviation` against `ln n`. The summary carries the largest
/// `‖𝒫_s𝒫̇_s𝒫_s‖` over `s ∈ {0, t/2, t}`.
pub fn holonomy_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let control = required(cfg.control.as_deref(), "control", cfg)?;
    let k = named_control(&spec, control)?;
    let ns = required(cfg.n_values.as_deref(), "n_values", cfg)?;
    let time = cfg.time.unwrap_or(1.0);

    let l0 = dissipator(&spec.model);
    let sd = steady(&l0, cfg)?;
    let p0 = sd.p0();
    let runs = holonomy_runs(k, p0, time, ns)?;
    let mut transport = 0.0f64;
    for s in [0.0, 0.5 * time, time] {
        let ps = instantaneous_projector(k, p0, s)?;
        let dp = projector_derivative(k, p0, s)?;
        transport = transport.max(spectral_norm(&(&(&ps * &dp) * &ps)));
    }

    let mut out = SweepResult::new("holonomy", &["n", "inv_n", "deviation", "fit_used"]);
    let mask = fit_mask(ns.len(), cfg.tolerances.fit_points.unwrap_or(ns.len()));
    let mut fit_pts = Vec::new();
    for (run, &used) in runs.iter().zip(&mask) {
        out.push(vec![
            Cell::Int(run.n),
            Cell::Num(1.0 / run.n as f64),
            Cell::Num(run.deviation),
            Cell::Bool(used),
        ]);
        if used {
            fit_pts.push((run.n as f64, run.deviation));
        }
    }
    out.fit = fit_loglog("n", &fit_pts);
    out.note("control", control);
    out.note("time", time);
    out.note("transport_residual", transport);
    note_steady(&mut out, &sd);
    Ok(out)
}

/// First-order error bound at each `x` plus a finite-difference check of
/// the first-order projector term.
///
/// The perturbation `ℒ₁` is the control's `−i[K, •]`, the first variation
/// of the named Lindblad shift, or their sum. Each row evaluates the bound
/// at `T = τ_R/x` and `t = time·T`. Columns `x, T, t, lhs, rhs, holds, c`.
pub fn kato_report(cfg: &ExperimentConfig) -> Result<SweepResult, XpError> {
    let spec = cfg.model.resolve()?;
    let control = cfg.control.as_deref().map(|n| named_control(&spec, n)).transpose()?;
    let shifts = match cfg.perturbation.as_deref() {
        Some(name) => {
            let s = named_shifts(&spec, name)?;
            check_shifts(&spec, s)?;
            Some(s)
        }
        None => None,
    };
    if control.is_none() && shifts.is_none() {
        return Err(config_error("kato experiment needs control or perturbation"));
    }
    let xs = cfg.x_values.clone().unwrap_or_else(|| DEFAULT_X_VALUES.to_vec());
    let time = cfg.time.unwrap_or(1.0);

    let l0 = dissipator(&spec.model);
    let sd = steady(&l0, cfg)?;
    let mut l1 = SuperOperator::zeros(spec.dim());
    if let Some(k) = control {
        l1 += &hamiltonian_superop(k)?;
    }
    if let Some(d) = shifts {
        l1 += &first_variation_dissipator(&spec.model, d)?;
    }
    let tau = sd.relaxation_time();
    if !tau.is_finite() {
        return Err(XpError::Numerical(crate::Error::OutOfRange(
            "generator has no dissipative gap".into(),
        )));
    }

    let reports = xs
        .par_iter()
        .map(|&x| error_bound(&sd, &l0, &l1, x, time * tau / x))
        .collect::<crate::Result<Vec<_>>>()?;

    let terms = kato_terms(&sd, &l1)?;
    let diff = |h: f64| -> crate::Result<SuperOperator> {
        Ok((&perturbed_projector(&sd, &l0, &l1, h)? - sd.p0()).scale_re(1.0 / h))
    };
    let d1 = diff(FD_STEP)?;
    let d2 = diff(0.5 * FD_STEP)?;
    let fd_error = spectral_norm(&(&d1 - &terms.p1));
    let richardson_error = spectral_norm(&(&(&d2.scale_re(2.0) - &d1) - &terms.p1));

    let mut out = SweepResult::new("kato", &["x", "T", "t", "lhs", "rhs", "holds", "c"]);
    for r in &reports {
        out.push(vec![
            Cell::Num(r.x),
            Cell::Num(tau / r.x),
            Cell::Num(r.t),
            Cell::Num(r.lhs),
            Cell::Num(r.rhs),
            Cell::Bool(r.lhs <= r.rhs),
            Cell::Num(r.c),
        ]);
    }
    out.note("fd_step", FD_STEP);
    out.note("fd_error", fd_error);
    out.note("richardson_error", richardson_error);
    out.note("p1_norm", spectral_norm(&terms.p1));
    out.note("effective_generator_norm", spectral_norm(&terms.r1));
    out.note("time", time);
    out.note("control", &cfg.control);
    out.note("perturbation", &cfg.perturbation);
    note_steady(&mut out, &sd);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::pauli::sigma_z;
    use crate::models::{zoo_model, TraceSetup};
    use crate::xp::config::ModelRef;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn circle_fit_recovers_circle() {
        let pts: Vec<C64> = (0..50)
            .map(|k| C64::new(1.0, -2.0) + C64::from_polar(0.5, 0.1 * k as f64))
            .collect();
        let fit = circle_fit(&pts).unwrap();
        assert!((fit.center_re - 1.0).abs() < 1e-12);
        assert!((fit.center_im + 2.0).abs() < 1e-12);
        assert!((fit.radius - 0.5).abs() < 1e-12);
        assert!(fit.max_radial_deviation < 1e-12);
        assert!(circle_fit(&pts[..2]).is_none());
        let line: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 2.0 * k as f64)).collect();
        assert!(circle_fit(&line).is_none());
    }

    #[test]
    fn zero_control_gives_zero_distance() {
        let mut spec = zoo_model("dephasing").unwrap();
        let dim = spec.dim();
        spec.controls.insert("zero".into(), Operator::zeros(dim));
        let mut c = cfg(r#"{"model": "dephasing", "experiment": "scaling", "control": "zero",
                            "t_values": [10, 20, 40], "sup_grid": true}"#);
        c.model = ModelRef::Inline(Box::new(spec));
        let out = scaling_sweep(&c).unwrap();
        assert!(out.floats("distance").iter().all(|&d| d < 1e-12));
        assert!(out.fit.is_none());
        assert_eq!(out.rows.len(), 3);
    }

    #[test]
    fn sup_grid_dominates_endpoint() {
        let out = scaling_sweep(&cfg(
            r#"{"model": "dephasing", "experiment": "scaling", "control": "X",
                "t_values": [5, 10, 20, 40, 80], "sup_grid": true}"#,
        ))
        .unwrap();
        let d = out.floats("distance");
        let s = out.floats("sup_distance");
        assert!(d.iter().zip(&s).all(|(a, b)| b >= a));
        let fit = out.fit.unwrap();
        assert_eq!(fit.points_used, 4);
        assert!((fit.slope - 1.0).abs() < 0.1, "slope {}", fit.slope);
        let used: Vec<_> = out.rows.iter().map(|r| r[3].clone()).collect();
        assert_eq!(used[0], Cell::Bool(false));
        assert_eq!(used[4], Cell::Bool(true));
    }

    #[test]
    fn unknown_names_are_config_errors() {
        for json in [
            r#"{"model": "dephasing", "experiment": "scaling", "control": "nope", "t_values": [1]}"#,
            r#"{"model": "dephasing", "experiment": "spectrum", "t_values": [1]}"#,
            r#"{"model": "fig1", "experiment": "trace"}"#,
            r#"{"model": "dephasing", "experiment": "kato", "perturbation": "nope"}"#,
            r#"{"model": "dephasing", "experiment": "robustness",
                "candidates": [{"name": "c", "hamiltonian": "nope"}]}"#,
            r#"{"model": "dephasing", "experiment": "robustness",
                "candidates": [{"name": "c", "hamiltonian": [[0, 1], [0, 0]]}]}"#,
        ] {
            let err = run_experiment(&cfg(json)).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{json}: {err}");
        }
    }

    #[test]
    fn zero_perturbation_fixes_spectrum() {
        let mut spec = zoo_model("two_qubit_emergent").unwrap();
        let n = spec.model.lindblads().len();
        spec.perturbations.insert("zero".into(), vec![Operator::zeros(spec.dim()); n]);
        let mut c = cfg(r#"{"model": "two_qubit_emergent", "experiment": "spectrum",
                            "perturbation": "zero", "t_values": [10, 100]}"#);
        c.model = ModelRef::Inline(Box::new(spec));
        let out = spectrum_sweep(&c).unwrap();
        let count = out.floats("count");
        let modulus = out.floats("max_modulus");
        for (row, (&k, &m)) in count.iter().zip(&modulus).enumerate() {
            assert_eq!(k, 8.0);
            assert!((m - 1.0).abs() < 1e-9);
            let Some(Cell::Text(list)) = out.cell(row, "eigenvalues") else { panic!() };
            for z in list.split(' ') {
                let re: f64 = z.split(['+', '-']).next().unwrap().parse().unwrap();
                assert!((re - 1.0).abs() < 1e-9, "{z}");
            }
        }
    }

    #[test]
    fn spectrum_is_contractive_and_converges() {
        let out = spectrum_sweep(&cfg(
            r#"{"model": "two_qubit_emergent", "experiment": "spectrum", "t_values": [10, 100, 1000]}"#,
        ))
        .unwrap();
        assert!(out.floats("max_modulus").iter().all(|&m| m <= 1.0 + 1e-9));
        let dist = out.floats("max_phase_distance");
        assert!(dist[2] < dist[0]);
        assert!(dist[2] < 2e-2, "{dist:?}");
    }

    #[test]
    fn hamiltonian_trace_is_a_circle() {
        let h = sigma_z().scale_re(0.5);
        let plus = Operator::projector_onto(&[C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)]);
        let json = serde_json::json!({
            "name": "precession",
            "model": {"dim": 2, "hamiltonian": h, "lindblads": []},
            "trace": TraceSetup {
                basis: Operator::identity(2),
                state: plus,
                element: (0, 1),
                window: (0.0, 3.0),
                t: 2.0,
            }
        });
        let mut c = cfg(r#"{"model": "dephasing", "experiment": "trace", "samples": 64}"#);
        c.model = ModelRef::Inline(Box::new(serde_json::from_value(json).unwrap()));
        let out = coherence_trace(&c).unwrap();
        assert_eq!(out.rows.len(), 64);
        let dev = out.summary["max_radial_deviation"].as_f64().unwrap();
        assert!(dev < 1e-9, "{dev}");
        let fit = &out.summary["circle"];
        assert!((fit["radius"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn trace_rejects_unsteady_state() {
        let mut spec = zoo_model("two_qubit_emergent").unwrap();
        if let Some(t) = spec.trace.as_mut() {
            t.state = Operator::projector_onto(&crate::models::pauli::basis_vector(&[0, 1]).iter()
                .zip(crate::models::pauli::basis_vector(&[1, 0]))
                .map(|(a, b)| (a + b) * 0.5f64.sqrt())
                .collect::<Vec<_>>());
        }
        let mut c = cfg(r#"{"model": "dephasing", "experiment": "trace"}"#);
        c.model = ModelRef::Inline(Box::new(spec));
        let err = coherence_trace(&c).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }

    #[test]
    fn two_qubit_trace_is_nearly_circular() {
        let out = coherence_trace(&cfg(r#"{"model": "two_qubit_emergent", "experiment": "trace"}"#)).unwrap();
        assert_eq!(out.rows.len(), DEFAULT_SAMPLES);
        let dev = out.summary["max_radial_deviation"].as_f64().unwrap();
        assert!(dev < 0.05, "{dev}");
    }

    #[test]
    fn robustness_on_dephasing() {
        // The kernel of pure dephasing is the diagonal algebra, so every
        // hamiltonian acts trivially on it after projection.
        let out = robustness_report(&cfg(
            r#"{"model": "dephasing", "experiment": "robustness",
                "candidates": [{"name": "z", "hamiltonian": [[1, 0], [0, -1]]},
                               {"name": "x", "hamiltonian": "X"},
                               {"name": "shift", "dissipative": [[[0, 1], [1, 0]]]}]}"#,
        ))
        .unwrap();
        assert_eq!(out.rows.len(), 3);
        for row in 0..3 {
            assert_eq!(out.cell(row, "robust"), Some(&Cell::Bool(true)), "row {row}");
            assert!(out.floats("effective_difference")[row] < 1e-12);
        }
        assert_eq!(out.cell(2, "kind"), Some(&Cell::from("dissipative")));
        assert!(out.floats("exact_difference")[1] > 1e-4);
        assert_eq!(out.summary["codimension"], 0);
    }

    #[test]
    fn robustness_flags_acting_control() {
        let out = robustness_report(&cfg(
            r#"{"model": "two_qubit_emergent", "experiment": "robustness",
                "candidates": [{"name": "a", "hamiltonian": [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]}]}"#,
        ))
        .unwrap();
        assert_eq!(out.cell(0, "robust"), Some(&Cell::Bool(false)));
        assert!(out.floats("effective_difference")[0] > 0.1);
    }

    #[test]
    fn site_fields_are_seeded() {
        let a = site_fields(4, 3).unwrap();
        let b = site_fields(4, 3).unwrap();
        let c = site_fields(4, 4).unwrap();
        assert_eq!(a, b);
        assert!((&a - &c).frobenius_norm() > 1e-3);
        assert!(a.is_hermitian(1e-14));
        assert!(site_fields(3, 0).is_err());
    }

    #[test]
    fn holonomy_sweep_on_dephasing() {
        let out = holonomy_sweep(&cfg(
            r#"{"model": "dephasing", "experiment": "holonomy", "control": "X",
                "n_values": [8, 16, 32, 64]}"#,
        ))
        .unwrap();
        let fit = out.fit.unwrap();
        assert!((fit.slope + 1.0).abs() < 0.1, "{}", fit.slope);
        assert!(out.summary["transport_residual"].as_f64().unwrap() < 1e-7);
    }

    #[test]
    fn kato_report_bounds_hold() {
        let out = kato_report(&cfg(
            r#"{"model": "dephasing", "experiment": "kato", "control": "X"}"#,
        ))
        .unwrap();
        assert_eq!(out.rows.len(), 3);
        assert!(out.rows.iter().all(|r| r[5] == Cell::Bool(true)));
        assert!(out.summary["fd_error"].as_f64().unwrap() < 1e-3);
        assert!(out.summary["richardson_error"].as_f64().unwrap() < 1e-6);
    }
}
