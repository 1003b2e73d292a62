//! Figures of merit, model comparisons and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::{CoreError, Result};
use crate::hamiltonians::{h0, h_effective, min_k, min_k_prime, SystemParams};
use crate::protocol::{run_protocol_with, Model, PrepMode, ProtocolOptions, ProtocolResult};
use crate::tensor::{
    c, commutator_norm, hermitize, phase, real, ComplexMatrix, ComplexVector, DensityMatrix, Factor,
    HermitianSpectrum, HilbertLayout, PureState, C64,
};

/// Purity below `1 - PURITY_GATE` makes the entropy undefined as an
/// entanglement measure.
pub const PURITY_GATE: f64 = 1e-6;

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    let d = rho.layout().dim();
    if psi.layout().dim() != d {
        return Err(CoreError::DimensionMismatch { expected: d, got: psi.layout().dim() });
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.matrix() * v)).re;
    Ok(f.clamp(0.0, 1.0))
}

/// Reduced state on `keep` (any order; the result follows layout order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[Factor]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    let reduced = layout.restrict(keep)?;
    let kept: Vec<bool> = layout.factors().iter().map(|f| reduced.factors().contains(f)).collect();
    let d = layout.dim();
    let labels: Vec<Vec<usize>> = (0..d).map(|i| layout.decode(i)).collect();
    let split = |l: &[usize]| -> (Vec<usize>, Vec<usize>) {
        let mut k = Vec::new();
        let mut t = Vec::new();
        for (slot, &x) in l.iter().enumerate() {
            if kept[slot] {
                k.push(x);
            } else {
                t.push(x);
            }
        }
        (k, t)
    };
    let parts: Vec<(usize, Vec<usize>)> = labels
        .iter()
        .map(|l| {
            let (k, t) = split(l);
            (reduced.encode(&k), t)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(reduced.dim(), reduced.dim());
    let m = rho.matrix();
    for i in 0..d {
        for j in 0..d {
            if parts[i].1 == parts[j].1 {
                out[(parts[i].0, parts[j].0)] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_parts(reduced, hermitize(out)))
}

fn require_pair(rho: &DensityMatrix) -> Result<()> {
    if rho.layout() != &HilbertLayout::squid_pair() {
        return Err(CoreError::InvalidFactors(format!(
            "expected a SQUID-pair state, got factors {:?}",
            rho.layout().factors()
        )));
    }
    Ok(())
}

/// Von Neumann entropy (base 2) of SQUID 1 for a pure SQUID-pair state.
pub fn entanglement_entropy(rho: &DensityMatrix) -> Result<f64> {
    require_pair(rho)?;
    let purity = rho.purity();
    if purity < 1.0 - PURITY_GATE {
        return Err(CoreError::MixedState { purity });
    }
    let reduced = partial_trace(rho, &[Factor::Squid1])?;
    Ok(reduced
        .eigenvalues()
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.log2())
        .sum())
}

/// Partial transpose on SQUID 2 of a SQUID-pair matrix.
pub fn partial_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(9, 9);
    for a in 0..3 {
        for b in 0..3 {
            for cc in 0..3 {
                for d in 0..3 {
                    out[(a * 3 + b, cc * 3 + d)] = m[(a * 3 + d, cc * 3 + b)];
                }
            }
        }
    }
    out
}

/// Sum of the magnitudes of the negative eigenvalues of `ρ^{T₂}`.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    require_pair(rho)?;
    let spectrum = HermitianSpectrum::new(&hermitize(partial_transpose(rho.matrix())))?;
    Ok(spectrum.values.iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
}

/// `½ ‖ρ - σ‖₁`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(CoreError::DimensionMismatch { expected: a.layout().dim(), got: b.layout().dim() });
    }
    let diff = hermitize(a.matrix() - b.matrix());
    let spectrum = HermitianSpectrum::new(&diff)?;
    Ok(0.5 * spectrum.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// Fidelity with `Σⱼ e^{iθⱼ}|j,j⟩/√3` maximized over the relative phases.
///
/// Any local diagonal phase gate on either SQUID reaches exactly this family
/// of targets, so this is the best fidelity a re-optimized final phase
/// correction can give.
pub fn phase_optimized_fidelity(rho: &DensityMatrix) -> Result<f64> {
    require_pair(rho)?;
    let m = rho.matrix();
    let block = |j: usize, l: usize| m[(4 * j, 4 * l)];
    let value = |theta: &[f64; 3]| -> f64 {
        let mut s = c(0.0, 0.0);
        for j in 0..3 {
            for l in 0..3 {
                s += phase(theta[l] - theta[j]) * block(j, l);
            }
        }
        s.re / 3.0
    };
    let mut best: f64 = 0.0;
    let starts = [[0.0, 0.0, 0.0], [0.0, 2.0, -2.0], [0.0, -2.0, 2.0], [0.0, std::f64::consts::PI, 1.0]];
    for start in starts {
        let mut theta = start;
        let mut current = value(&theta);
        for _ in 0..500 {
            for j in 1..3 {
                let pull: C64 = (0..3).filter(|&l| l != j).map(|l| block(j, l) * phase(theta[l])).sum();
                if pull.norm() > 0.0 {
                    theta[j] = pull.arg();
                }
            }
            let next = value(&theta);
            let done = (next - current).abs() < 1e-15;
            current = next;
            if done {
                break;
            }
        }
        best = best.max(current);
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Summary of one protocol run used in comparisons and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fidelity: f64,
    pub fidelity_published_correction: f64,
    pub phase_optimized_fidelity: f64,
    pub entropy: Option<f64>,
    pub negativity: f64,
    pub regime_ok: bool,
    pub ratio_drive: f64,
    pub ratio_detuning: f64,
    pub norm_drift: f64,
    pub max_unitarity_defect: f64,
    /// Total integrator steps over all cavity windows (0 for the effective model).
    pub integrator_steps: u64,
}

impl From<&ProtocolResult> for RunSummary {
    fn from(r: &ProtocolResult) -> Self {
        Self {
            fidelity: r.fidelity_to_target,
            fidelity_published_correction: r.fidelity_published_correction,
            phase_optimized_fidelity: r.phase_optimized_fidelity,
            entropy: r.entropy,
            negativity: r.negativity,
            regime_ok: r.regime.regime_ok,
            ratio_drive: r.regime.ratio_drive,
            ratio_detuning: r.regime.ratio_detuning,
            norm_drift: r.norm_drift,
            max_unitarity_defect: r.max_unitarity_defect,
            integrator_steps: r.integrator.iter().map(|d| d.steps).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub effective: ProtocolResult,
    pub full: ProtocolResult,
    /// Trace distance between the final SQUID-pair states.
    pub trace_distance: f64,
}

/// Runs the protocol under both models with identical settings.
pub fn compare_models(
    params: &SystemParams,
    mode: PrepMode,
    cfg: &IntegratorConfig,
    opts: &ProtocolOptions,
) -> Result<ModelComparison> {
    let effective = run_protocol_with(params, Model::Effective, mode, cfg, opts)?;
    let full = run_protocol_with(params, Model::Full, mode, cfg, opts)?;
    let trace_distance = trace_distance(&effective.final_state, &full.final_state)?;
    Ok(ModelComparison { effective, full, trace_distance })
}

/// Cartesian grid over protocol parameters. An empty axis keeps the base
/// value. With `regime_ratio` set, `k` and `k′` follow each `δ` so that both
/// windows meet that drive ratio, and the `k` axes are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub delta: Vec<f64>,
    pub k: Vec<u64>,
    pub k_prime: Vec<u64>,
    pub nbar: Vec<f64>,
    pub n_max: Vec<usize>,
    pub regime_ratio: Option<f64>,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl SweepGrid {
    /// Grid points in row-major order (`δ` slowest, `n_max` fastest).
    pub fn points(&self, base: &SystemParams) -> Vec<SystemParams> {
        let mut out = Vec::new();
        for delta in axis(&self.delta, base.delta) {
            let ks: Vec<(u64, u64)> = match self.regime_ratio {
                Some(r) => vec![(min_k(base.g, delta, r), min_k_prime(base.g, delta, r))],
                None => {
                    let kps = axis(&self.k_prime, base.k_prime);
                    axis(&self.k, base.k).into_iter().flat_map(|k| kps.iter().map(move |&kp| (k, kp))).collect()
                }
            };
            for (k, k_prime) in ks {
                for nbar in axis(&self.nbar, base.nbar) {
                    for n_max in axis(&self.n_max, base.n_max) {
                        out.push(SystemParams { g: base.g, delta, k, k_prime, nbar, n_max });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub params: SystemParams,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

/// Runs every grid point in parallel; output order matches
/// [`SweepGrid::points`]. Failures are recorded per point.
pub fn sweep(
    base: &SystemParams,
    grid: &SweepGrid,
    model: Model,
    mode: PrepMode,
    cfg: &IntegratorConfig,
    opts: &ProtocolOptions,
) -> Vec<SweepRecord> {
    grid.points(base)
        .into_par_iter()
        .map(|params| match run_protocol_with(&params, model, mode, cfg, opts) {
            Ok(r) => SweepRecord { summary: Some(RunSummary::from(&r)), params, error: None },
            Err(e) => SweepRecord { params, summary: None, error: Some(e.to_string()) },
        })
        .collect()
}

/// Comparison of one computed state with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCheck {
    pub name: String,
    /// Largest amplitude error after removing one global phase.
    pub raw_error: f64,
    /// Largest amplitude error after removing a global phase and a separate
    /// phase on the branch with SQUID 1 in `|1⟩`.
    pub frame_error: f64,
    /// Phase of the `|1⟩` branch relative to the rest, in `(-π, π]`.
    pub branch_phase: f64,
    /// Whether the check compares in the branch frame or requires a raw match.
    pub uses_frame: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub states: Vec<StateCheck>,
    /// `‖[H₀, H_e]‖_F`
    pub commutator_norm: f64,
    pub commutator_passed: bool,
    pub tolerance: f64,
    pub passed: bool,
}

fn phase_of(z: C64) -> f64 {
    if z.norm() > 1e-14 {
        z.arg()
    } else {
        0.0
    }
}

fn compare_state(name: &str, computed: &PureState, printed: &ComplexVector, uses_frame: bool, tol: f64) -> StateCheck {
    let psi = computed.amplitudes();
    let global = phase_of(printed.dotc(psi));
    let raw_error = (psi.map(|z| z * phase(-global)) - printed).camax();
    let in_branch = |i: usize| i / 3 == 1;
    let mut overlap_rest = c(0.0, 0.0);
    let mut overlap_branch = c(0.0, 0.0);
    for i in 0..9 {
        let o = printed[i].conj() * psi[i];
        if in_branch(i) {
            overlap_branch += o;
        } else {
            overlap_rest += o;
        }
    }
    let (alpha, beta) = (phase_of(overlap_rest), phase_of(overlap_branch));
    let aligned = ComplexVector::from_iterator(
        9,
        (0..9).map(|i| psi[i] * phase(-(if in_branch(i) { beta } else { alpha }))),
    );
    let frame_error = (aligned - printed).camax();
    let branch_phase = crate::protocol::wrap_phase(beta - alpha);
    let passed = if uses_frame { frame_error <= tol } else { raw_error <= tol };
    StateCheck { name: name.to_string(), raw_error, frame_error, branch_phase, uses_frame, passed }
}

fn printed_states() -> [(&'static str, ComplexVector, bool); 5] {
    let s = (1.0f64 / 3.0).sqrt();
    let t = (2.0f64 / 3.0).sqrt();
    let e = phase(-std::f64::consts::FRAC_PI_4);
    let vec = |entries: &[(usize, C64)]| {
        let mut v = ComplexVector::zeros(9);
        for &(i, z) in entries {
            v[i] = z;
        }
        v
    };
    [
        ("prepared-state", vec(&[(3, real(s)), (0, c(0.0, -t))]), true),
        ("after-window-1", vec(&[(3, real(s)), (8, c(0.0, t))]), true),
        ("after-retarget", vec(&[(4, real(s)), (8, c(0.0, t))]), true),
        ("after-window-2", vec(&[(4, real(s)), (8, c(0.0, s) * e), (0, e * s)]), true),
        ("target-state", vec(&[(0, real(s)), (4, real(s)), (8, real(s))]), false),
    ]
}

/// Replays the sequence in the effective model and compares every
/// intermediate SQUID-pair state with its closed form. Intermediate states
/// are compared in the branch frame; the final state must match exactly up
/// to a global phase.
pub fn verify_printed_states(params: &SystemParams, mode: PrepMode, tol: f64) -> Result<ValidationReport> {
    let run = run_protocol_with(params, Model::Effective, mode, &IntegratorConfig::default(), &ProtocolOptions::default())?;
    let mut states = Vec::new();
    for ((name, printed, uses_frame), snap) in printed_states().into_iter().zip(run.snapshots.iter()) {
        let computed = snap
            .pair_amplitudes
            .clone()
            .ok_or_else(|| CoreError::MixedState { purity: snap.pair_state.purity() })?;
        states.push(compare_state(name, &computed, &printed, uses_frame, tol));
    }
    let scale = params.omega() * params.lambda();
    let commutator_norm = commutator_norm(&h0(params.omega()), &h_effective(params))?;
    let commutator_passed = commutator_norm <= tol * scale.max(1.0);
    let passed = commutator_passed && states.iter().all(|s| s.passed);
    Ok(ValidationReport { states, commutator_norm, commutator_passed, tolerance: tol, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matexp_hermitian;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn pair(v: &[(usize, C64)]) -> PureState {
        let mut a = ComplexVector::zeros(9);
        for &(i, z) in v {
            a[i] = z;
        }
        PureState::normalized(HilbertLayout::squid_pair(), a).unwrap()
    }

    fn ghz() -> PureState {
        pair(&[(0, real(1.0)), (4, real(1.0)), (8, real(1.0))])
    }

    #[test]
    fn maximal_entanglement_values() {
        let rho = ghz().to_density();
        assert!((entanglement_entropy(&rho).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((negativity(&rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&rho, &ghz()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_values() {
        let rho = PureState::squid_basis(1, 2).to_density();
        assert!(entanglement_entropy(&rho).unwrap().abs() < 1e-12);
        assert!(negativity(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_mixed_states() {
        let rho = DensityMatrix::maximally_mixed(HilbertLayout::squid_pair());
        assert!(matches!(entanglement_entropy(&rho), Err(CoreError::MixedState { .. })));
        // Negativity is still defined.
        assert!(negativity(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_composite_product() {
        let psi = ghz();
        let cav = PureState::basis(HilbertLayout::cavity(4).unwrap(), 2).unwrap();
        let full = psi.tensor(&cav, HilbertLayout::composite(4).unwrap()).unwrap().to_density();
        let back = partial_trace(&full, &[Factor::Squid2, Factor::Squid1]).unwrap();
        assert!((back.matrix() - psi.to_density().matrix()).camax() < 1e-14);
        let cavity = partial_trace(&full, &[Factor::Cavity]).unwrap();
        assert!((cavity.matrix()[(2, 2)] - real(1.0)).norm() < 1e-14);
        let s1 = partial_trace(&full, &[Factor::Squid1]).unwrap();
        for j in 0..3 {
            assert!((s1.matrix()[(j, j)].re - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = PureState::squid_basis(0, 0).to_density();
        let b = PureState::squid_basis(2, 2).to_density();
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn phase_optimized_recovers_rotated_target() {
        let psi = pair(&[(0, real(1.0)), (4, phase(1.1)), (8, phase(-2.7))]);
        let rho = psi.to_density();
        assert!(fidelity(&rho, &ghz()).unwrap() < 0.9);
        assert!((phase_optimized_fidelity(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_optimized_matches_brute_force() {
        let psi = pair(&[(0, c(0.3, 0.1)), (4, c(-0.2, 0.7)), (8, c(0.5, -0.4)), (3, c(0.2, 0.2))]);
        let rho = psi.to_density();
        let mut brute: f64 = 0.0;
        let n = 180;
        for a in 0..n {
            for b in 0..n {
                let t1 = 2.0 * PI * a as f64 / n as f64;
                let t2 = 2.0 * PI * b as f64 / n as f64;
                let target = pair(&[(0, real(1.0)), (4, phase(t1)), (8, phase(t2))]);
                brute = brute.max(fidelity(&rho, &target).unwrap());
            }
        }
        let opt = phase_optimized_fidelity(&rho).unwrap();
        assert!(opt >= brute - 1e-12, "{opt} < {brute}");
        assert!(opt - brute < 1e-3);
    }

    #[test]
    fn printed_states_pass_in_frame() {
        for k in [1u64, 2, 7] {
            let params = SystemParams { k, k_prime: 3, ..SystemParams::default() };
            for mode in [PrepMode::AsPublished, PrepMode::PhysicalPulse] {
                let report = verify_printed_states(&params, mode, 1e-9).unwrap();
                assert!(report.passed, "k={k} {mode}: {report:?}");
            }
        }
    }

    #[test]
    fn window_1_branch_phase_has_known_value() {
        let params = SystemParams { k: 2, ..SystemParams::default() };
        let report = verify_printed_states(&params, PrepMode::AsPublished, 1e-9).unwrap();
        let w1 = &report.states[1];
        // Printed `|2,2⟩` carries +i relative to `|0,0⟩`, computed `|1,0⟩` carries e^{-iπ/4}.
        assert!((w1.branch_phase + FRAC_PI_4).abs() < 1e-9, "{}", w1.branch_phase);
        assert!(w1.raw_error > 0.1);
    }

    #[test]
    fn sweep_preserves_order_and_records_errors() {
        let base = SystemParams { k: 2, k_prime: 1, ..SystemParams::default() };
        let grid = SweepGrid { delta: vec![10.0, 15.0], n_max: vec![8, 1], ..Default::default() };
        let out = sweep(&base, &grid, Model::Effective, PrepMode::AsPublished, &IntegratorConfig::default(), &ProtocolOptions::default());
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].params.delta, 10.0);
        assert_eq!(out[3].params.delta, 15.0);
        assert!(out[0].summary.is_some());
        assert!(out[1].error.as_deref().unwrap().contains("n_max"));
    }

    #[test]
    fn sweep_regime_ratio_derives_multipliers() {
        let base = SystemParams::default();
        let grid = SweepGrid { delta: vec![5.0, 20.0], k: vec![99], regime_ratio: Some(10.0), ..Default::default() };
        let pts = grid.points(&base);
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].k, pts[0].k_prime), (125, 32));
        assert_eq!((pts[1].k, pts[1].k_prime), (2000, 500));
    }

    fn arb_pair_state() -> impl Strategy<Value = PureState> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9).prop_filter_map("non-zero", |v| {
            let a = ComplexVector::from_iterator(9, v.into_iter().map(|(r, i)| c(r, i)));
            (a.norm() > 1e-3).then(|| PureState::normalized(HilbertLayout::squid_pair(), a).unwrap())
        })
    }

    fn local_phase_gate(p1: [f64; 3], p2: [f64; 3]) -> ComplexMatrix {
        let d1 = crate::tensor::squid_op(crate::tensor::SquidOp::LevelPhase(p1));
        let d2 = crate::tensor::squid_op(crate::tensor::SquidOp::LevelPhase(p2));
        crate::tensor::kron(&d1, &d2)
    }

    proptest! {
        #[test]
        fn negativity_vanishes_on_products(a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
                                           b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3)) {
            let va = ComplexVector::from_iterator(3, a.into_iter().map(|(r, i)| c(r, i)));
            let vb = ComplexVector::from_iterator(3, b.into_iter().map(|(r, i)| c(r, i)));
            prop_assume!(va.norm() > 1e-3 && vb.norm() > 1e-3);
            let v = crate::tensor::kron(&ComplexMatrix::from_column_slice(3, 1, va.as_slice()),
                                        &ComplexMatrix::from_column_slice(3, 1, vb.as_slice()));
            let psi = PureState::normalized(HilbertLayout::squid_pair(), v.column(0).into_owned()).unwrap();
            prop_assert!(negativity(&psi.to_density()).unwrap() < 1e-10);
            prop_assert!(entanglement_entropy(&psi.to_density()).unwrap() < 1e-8);
        }

        #[test]
        fn negativity_invariant_under_local_phases(psi in arb_pair_state(),
                                                   p1 in prop::array::uniform3(-3.0f64..3.0),
                                                   p2 in prop::array::uniform3(-3.0f64..3.0)) {
            let rho = psi.to_density();
            let u = local_phase_gate(p1, p2);
            let rotated = rho.conjugate(&u).unwrap();
            prop_assert!((negativity(&rho).unwrap() - negativity(&rotated).unwrap()).abs() < 1e-10);
            prop_assert!((entanglement_entropy(&rho).unwrap() - entanglement_entropy(&rotated).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn fidelity_ignores_global_phase(psi in arb_pair_state(), phi in -PI..PI) {
            let rho = psi.to_density();
            let f1 = fidelity(&rho, &ghz()).unwrap();
            let f2 = fidelity(&psi.with_global_phase(phi).to_density(), &ghz()).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f1));
        }

        #[test]
        fn phase_optimized_bounds(psi in arb_pair_state()) {
            let rho = psi.to_density();
            let opt = phase_optimized_fidelity(&rho).unwrap();
            prop_assert!(opt + 1e-12 >= fidelity(&rho, &ghz()).unwrap());
            prop_assert!(opt <= 1.0);
        }

        #[test]
        fn trace_distance_is_a_metric_on_samples(a in arb_pair_state(), b in arb_pair_state()) {
            let (ra, rb) = (a.to_density(), b.to_density());
            let d = trace_distance(&ra, &rb).unwrap();
            prop_assert!((d - trace_distance(&rb, &ra).unwrap()).abs() < 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
            // Pure states: D = √(1 - |⟨a|b⟩|²)
            let expect = (1.0 - a.inner(&b).norm_sqr()).max(0.0).sqrt();
            prop_assert!((d - expect).abs() < 1e-8);
        }

        #[test]
        fn entropy_invariant_under_local_unitaries(psi in arb_pair_state(), t in 0.0f64..3.0) {
            let h = crate::hamiltonians::h_drive_single(1.0, Factor::Squid1, crate::hamiltonians::Transition::ZeroTwo).unwrap();
            let u = matexp_hermitian(&h, t).unwrap();
            let rho = psi.to_density();
            let moved = rho.conjugate(&u).unwrap();
            prop_assert!((entanglement_entropy(&rho).unwrap() - entanglement_entropy(&moved).unwrap()).abs() < 1e-9);
        }
    }
}
