//! The five-step pulse sequence that entangles the two SQUIDs.
//!
//! 1. Prepare SQUID 1 in `√(1/3)|1⟩ - i√(2/3)|0⟩` (SQUID 2 stays in `|0⟩`).
//! 2. Cavity window of length `t₁ = π/(2λ)` with drive `Ω = 2kλ`.
//! 3. Resonant `|0⟩ ↔ |1⟩` π pulse on SQUID 2.
//! 4. Cavity window of length `t₂ = π/(4λ)` with drive `Ω′ = 8k′λ`.
//! 5. Diagonal phase correction on SQUID 2.
//!
//! Components with SQUID 1 in `|1⟩` (the spectator branch) do not couple to
//! the cavity but still pick up the Stark shift `λ/2` and the drive rotation
//! of SQUID 2 during window 1. The phase correction therefore carries an
//! extra phase on level `|1⟩` of SQUID 2, see [`spectator_phase`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::analysis::{entanglement_entropy, fidelity, negativity, partial_trace, phase_optimized_fidelity};
use crate::dynamics::{
    effective_propagator, lift_squid_operator, propagate_full, thermal_state, IntegratorConfig,
    IntegratorDiagnostics, ThermalSpec,
};
use crate::error::{CoreError, Result};
use crate::hamiltonians::{check_regime, h_drive_single_phased, RegimeReport, RegimeThresholds, SystemParams, Transition};
use crate::tensor::{
    c, matexp_hermitian, real, squid_op, unitarity_defect, ComplexMatrix, ComplexVector, DensityMatrix,
    Factor, HilbertLayout, PureState, SquidOp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Effective,
    Full,
}

/// How the first SQUID is prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrepMode {
    /// Resonant `|0⟩ ↔ |1⟩` pulse of area `arccos √(2/3)`, giving
    /// `√(2/3)|0⟩ - i√(1/3)|1⟩`.
    PhysicalPulse,
    /// The literal state `√(1/3)|1⟩ - i√(2/3)|0⟩`.
    AsPublished,
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "effective" => Ok(Model::Effective),
            "full" => Ok(Model::Full),
            other => Err(format!("unknown model `{other}` (expected `effective` or `full`)")),
        }
    }
}

impl std::str::FromStr for PrepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "physical-pulse" => Ok(PrepMode::PhysicalPulse),
            "as-published" => Ok(PrepMode::AsPublished),
            other => Err(format!("unknown mode `{other}` (expected `physical-pulse` or `as-published`)")),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Effective => "effective",
            Model::Full => "full",
        })
    }
}

impl std::fmt::Display for PrepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrepMode::PhysicalPulse => "physical-pulse",
            PrepMode::AsPublished => "as-published",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseStep {
    /// Replace the SQUID-pair state by a literal preparation.
    PrepareLiteral { amplitudes: Vec<[f64; 2]> },
    /// Cavity-free resonant pulse `Ω (e^{iφ}|u⟩⟨0| + h.c.)` on one SQUID.
    ClassicalDrive { target: Factor, transition: Transition, rabi: f64, drive_phase: f64, duration: f64 },
    /// Cavity interaction with the `|0⟩ ↔ |2⟩` drive of both SQUIDs.
    CavityWindow { duration: f64, drive_rabi: f64, drive_on: bool },
    /// `diag(e^{iφ₀}, e^{iφ₁}, e^{iφ₂})` on one SQUID.
    PhaseCorrection { target: Factor, phases: [f64; 3] },
}

impl PulseStep {
    pub fn label(&self) -> &'static str {
        match self {
            PulseStep::PrepareLiteral { .. } => "prepare",
            PulseStep::ClassicalDrive { .. } => "classical-drive",
            PulseStep::CavityWindow { .. } => "cavity-window",
            PulseStep::PhaseCorrection { .. } => "phase-correction",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(CoreError::InvalidParameter { name: "pulse_step", reason });
        match self {
            PulseStep::PrepareLiteral { amplitudes } if amplitudes.len() != 9 => {
                bad(format!("literal preparation needs 9 amplitudes, got {}", amplitudes.len()))
            }
            PulseStep::ClassicalDrive { duration, target, .. } => {
                if duration.is_nan() || *duration <= 0.0 {
                    return bad(format!("drive duration must be positive, got {duration}"));
                }
                if *target == Factor::Cavity {
                    return bad("classical drives address a SQUID".into());
                }
                Ok(())
            }
            PulseStep::CavityWindow { duration, .. } if duration.is_nan() || *duration <= 0.0 => {
                bad(format!("window duration must be positive, got {duration}"))
            }
            PulseStep::PhaseCorrection { phases, target } => {
                if *target == Factor::Cavity {
                    return bad("phase corrections address a SQUID".into());
                }
                if phases.iter().any(|p| !(*p > -PI && *p <= PI)) {
                    return bad(format!("phases must lie in (-π, π], got {phases:?}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Derived timing quantities of a sequence, as multiples of `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCertificate {
    pub k: u64,
    pub k_prime: u64,
    /// `λt₁/π`, nominally 1/2.
    pub lambda_t1_over_pi: f64,
    /// `Ωt₁/π`, nominally `k`.
    pub omega_t1_over_pi: f64,
    /// `λt₂/π`, nominally 1/4.
    pub lambda_t2_over_pi: f64,
    /// `Ω′t₂/(2π)`, nominally `k′`.
    pub omega_prime_t2_over_2pi: f64,
}

impl TimingCertificate {
    /// Largest deviation from the nominal values.
    pub fn max_deviation(&self) -> f64 {
        [
            (self.lambda_t1_over_pi - 0.5).abs(),
            (self.omega_t1_over_pi - self.k as f64).abs() / self.k as f64,
            (self.lambda_t2_over_pi - 0.25).abs(),
            (self.omega_prime_t2_over_2pi - self.k_prime as f64).abs() / self.k_prime as f64,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
    pub certificate: TimingCertificate,
}

impl PulseSequence {
    /// Same sequence with the drive of every cavity window after the first
    /// switched on or off.
    pub fn with_later_window_drive(mut self, on: bool) -> Self {
        let mut seen = 0;
        for step in &mut self.steps {
            if let PulseStep::CavityWindow { drive_on, .. } = step {
                if seen > 0 {
                    *drive_on = on;
                }
                seen += 1;
            }
        }
        self
    }
}

/// Pulse area that leaves `√(1/3)` on `|1⟩`.
pub fn preparation_angle() -> f64 {
    (2.0f64 / 3.0).sqrt().acos()
}

fn as_published_initial() -> ComplexVector {
    let mut v = ComplexVector::zeros(9);
    v[0] = c(0.0, -(2.0f64 / 3.0).sqrt());
    v[3] = real((1.0f64 / 3.0).sqrt());
    v
}

/// Initial SQUID-pair state after the preparation pulse on SQUID 1.
pub fn prepare_initial(mode: PrepMode) -> PureState {
    let layout = HilbertLayout::squid_pair();
    match mode {
        PrepMode::AsPublished => PureState::new(layout, as_published_initial()).expect("normalized by construction"),
        PrepMode::PhysicalPulse => {
            let h = h_drive_single_phased(1.0, 0.0, Factor::Squid1, Transition::ZeroOne).expect("valid drive");
            let u = matexp_hermitian(&h, preparation_angle()).expect("Hermitian drive");
            PureState::squid_basis(0, 0).apply(&u).expect("unitary pulse")
        }
    }
}

/// `(|0,0⟩ + |1,1⟩ + |2,2⟩)/√3`
pub fn target_state() -> PureState {
    let mut v = ComplexVector::zeros(9);
    let a = real(1.0 / 3.0f64.sqrt());
    v[0] = a;
    v[4] = a;
    v[8] = a;
    PureState::new(HilbertLayout::squid_pair(), v).expect("normalized by construction")
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Level-`|1⟩` phase on SQUID 2 that cancels the spectator-branch phase.
///
/// During window 1 the branch with SQUID 1 in `|1⟩` and SQUID 2 in `|0⟩`
/// evolves as `e^{-iλt₁/2} cos(Ωt₁) = (-1)^k e^{-iπ/4}`; nothing acts on
/// `|1,1⟩` in window 2. The physical preparation pulse puts the opposite
/// sign on the `|1⟩` branch relative to the literal preparation.
pub fn spectator_phase(k: u64, mode: PrepMode) -> f64 {
    let parity = if k % 2 == 1 { PI } else { 0.0 };
    let prep = match mode {
        PrepMode::AsPublished => 0.0,
        PrepMode::PhysicalPulse => PI,
    };
    wrap_phase(FRAC_PI_4 + parity + prep)
}

/// SQUID-2 phases `(π/4, 0, -π/4)` taking the window-2 state to the target.
pub const PUBLISHED_CORRECTION: [f64; 3] = [FRAC_PI_4, 0.0, -FRAC_PI_4];

/// The five-step sequence for `params`, with the window-2 drive on.
pub fn canonical_sequence(params: &SystemParams, mode: PrepMode) -> Result<PulseSequence> {
    params.validate()?;
    let (t1, t2) = (params.t1(), params.t2());
    let (omega, omega_prime) = (params.omega(), params.omega_prime());
    let lambda = params.lambda();
    let prepare = match mode {
        PrepMode::AsPublished => PulseStep::PrepareLiteral {
            amplitudes: as_published_initial().iter().map(|z| [z.re, z.im]).collect(),
        },
        PrepMode::PhysicalPulse => PulseStep::ClassicalDrive {
            target: Factor::Squid1,
            transition: Transition::ZeroOne,
            rabi: omega,
            drive_phase: 0.0,
            duration: preparation_angle() / omega,
        },
    };
    let steps = vec![
        prepare,
        PulseStep::CavityWindow { duration: t1, drive_rabi: omega, drive_on: true },
        retarget_step(omega),
        PulseStep::CavityWindow { duration: t2, drive_rabi: omega_prime, drive_on: true },
        PulseStep::PhaseCorrection {
            target: Factor::Squid2,
            phases: [PUBLISHED_CORRECTION[0], spectator_phase(params.k, mode), PUBLISHED_CORRECTION[2]],
        },
    ];
    let certificate = TimingCertificate {
        k: params.k,
        k_prime: params.k_prime,
        lambda_t1_over_pi: lambda * t1 / PI,
        omega_t1_over_pi: omega * t1 / PI,
        lambda_t2_over_pi: lambda * t2 / PI,
        omega_prime_t2_over_2pi: omega_prime * t2 / (2.0 * PI),
    };
    Ok(PulseSequence { steps, certificate })
}

/// π pulse on SQUID 2, `|0⟩ ↔ |1⟩`, with drive phase `π/2` so that
/// `|0⟩ → |1⟩` and `|1⟩ → -|0⟩`.
fn retarget_step(rabi: f64) -> PulseStep {
    PulseStep::ClassicalDrive {
        target: Factor::Squid2,
        transition: Transition::ZeroOne,
        rabi,
        drive_phase: FRAC_PI_2,
        duration: FRAC_PI_2 / rabi,
    }
}

fn drive_unitary(target: Factor, transition: Transition, rabi: f64, drive_phase: f64, duration: f64) -> Result<ComplexMatrix> {
    let h = h_drive_single_phased(rabi, drive_phase, target, transition)?;
    matexp_hermitian(&h, duration)
}

fn phase_unitary(target: Factor, phases: [f64; 3]) -> Result<ComplexMatrix> {
    crate::tensor::embed(&squid_op(SquidOp::LevelPhase(phases)), target, &HilbertLayout::squid_pair())
}

/// States a SQUID-local unitary can act on.
pub trait SquidLocal: Sized {
    fn apply_squid_unitary(&self, u: &ComplexMatrix) -> Result<Self>;
}

impl SquidLocal for PureState {
    fn apply_squid_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        self.apply(&lift_squid_operator(u, self.layout())?)
    }
}

impl SquidLocal for DensityMatrix {
    fn apply_squid_unitary(&self, u: &ComplexMatrix) -> Result<Self> {
        self.conjugate(&lift_squid_operator(u, self.layout())?)
    }
}

/// Moves SQUID 2 from `|0⟩` to `|1⟩`; `|2⟩` amplitudes are untouched.
pub fn step3_retarget<S: SquidLocal>(state: &S) -> Result<S> {
    let rabi = 1.0;
    let u = drive_unitary(Factor::Squid2, Transition::ZeroOne, rabi, FRAC_PI_2, FRAC_PI_2 / rabi)?;
    state.apply_squid_unitary(&u)
}

/// Applies the phases `(π/4, 0, -π/4)` to SQUID 2.
pub fn phase_correction<S: SquidLocal>(state: &S) -> Result<S> {
    state.apply_squid_unitary(&phase_unitary(Factor::Squid2, PUBLISHED_CORRECTION)?)
}

/// How the cavity clock behaves between windows in the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    /// Absolute time runs through pulses and windows.
    Continuous,
    /// Every window starts at `t = 0`.
    PerWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub drive_on_window2: bool,
    pub clock: ClockMode,
    pub thresholds: RegimeThresholds,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self { drive_on_window2: true, clock: ClockMode::Continuous, thresholds: RegimeThresholds::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSnapshot {
    pub label: String,
    /// Reduced SQUID-pair state.
    pub pair_state: DensityMatrix,
    /// SQUID-pair amplitudes when the run carries a pure SQUID-only state.
    pub pair_amplitudes: Option<PureState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub model: Model,
    pub mode: PrepMode,
    pub sequence: PulseSequence,
    pub snapshots: Vec<StepSnapshot>,
    pub final_state: DensityMatrix,
    pub fidelity_to_target: f64,
    /// Fidelity when the last step applies only `(π/4, 0, -π/4)`.
    pub fidelity_published_correction: f64,
    /// Best fidelity over local diagonal phases on the final pair state.
    pub phase_optimized_fidelity: f64,
    /// Entanglement entropy in ebits; `None` when the pair state is mixed.
    pub entropy: Option<f64>,
    pub negativity: f64,
    pub regime: RegimeReport,
    pub integrator: Vec<IntegratorDiagnostics>,
    /// `|‖ψ‖² - 1|` (or `|Tr ρ - 1|`) of the composite state at the end.
    pub norm_drift: f64,
    /// Largest `‖U†U - I‖_F` over all applied propagators.
    pub max_unitarity_defect: f64,
}

impl ProtocolResult {
    pub fn snapshot(&self, label: &str) -> Option<&StepSnapshot> {
        self.snapshots.iter().find(|s| s.label == label)
    }
}

/// Labels attached to the snapshots of the canonical sequence, in order.
pub const SNAPSHOT_LABELS: [&str; 5] = ["prepared", "window-1", "retarget", "window-2", "phase-corrected"];

#[derive(Debug, Clone)]
enum Carrier {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl Carrier {
    fn layout(&self) -> &HilbertLayout {
        match self {
            Carrier::Pure(p) => p.layout(),
            Carrier::Mixed(r) => r.layout(),
        }
    }

    fn apply(&self, u: &ComplexMatrix) -> Self {
        use crate::dynamics::Evolvable;
        match self {
            Carrier::Pure(p) => Carrier::Pure(p.propagate(u)),
            Carrier::Mixed(r) => Carrier::Mixed(r.propagate(u)),
        }
    }

    fn pair_state(&self) -> Result<DensityMatrix> {
        let rho = match self {
            Carrier::Pure(p) => p.to_density(),
            Carrier::Mixed(r) => r.clone(),
        };
        if rho.layout().has_cavity() {
            partial_trace(&rho, &[Factor::Squid1, Factor::Squid2])
        } else {
            Ok(rho)
        }
    }

    fn pair_amplitudes(&self) -> Option<PureState> {
        match self {
            Carrier::Pure(p) if !p.layout().has_cavity() => Some(p.clone()),
            _ => None,
        }
    }

    fn norm_drift(&self) -> f64 {
        match self {
            Carrier::Pure(p) => (p.norm().powi(2) - 1.0).abs(),
            Carrier::Mixed(r) => (r.trace() - real(1.0)).norm(),
        }
    }
}

fn initial_carrier(params: &SystemParams, model: Model, pair: &PureState) -> Result<Carrier> {
    let needs_cavity = model == Model::Full || params.nbar > 0.0;
    if !needs_cavity {
        return Ok(Carrier::Pure(pair.clone()));
    }
    let layout = HilbertLayout::composite(params.n_max)?;
    if params.nbar == 0.0 {
        let vacuum = PureState::basis(HilbertLayout::cavity(params.n_max)?, 0)?;
        return Ok(Carrier::Pure(pair.tensor(&vacuum, layout)?));
    }
    let thermal = thermal_state(ThermalSpec { nbar: params.nbar, n_max: params.n_max })?;
    Ok(Carrier::Mixed(pair.to_density().tensor(&thermal.density, layout)?))
}

/// Runs the canonical sequence with default options.
pub fn run_protocol(params: &SystemParams, model: Model, mode: PrepMode, cfg: &IntegratorConfig) -> Result<ProtocolResult> {
    run_protocol_with(params, model, mode, cfg, &ProtocolOptions::default())
}

pub fn run_protocol_with(
    params: &SystemParams,
    model: Model,
    mode: PrepMode,
    cfg: &IntegratorConfig,
    opts: &ProtocolOptions,
) -> Result<ProtocolResult> {
    let sequence = canonical_sequence(params, mode)?.with_later_window_drive(opts.drive_on_window2);
    run_sequence(&sequence, params, model, mode, cfg, opts)
}

/// Executes `sequence` starting from `|0,0⟩` (and the cavity state implied by
/// `params.nbar`) and evaluates the final SQUID-pair state.
pub fn run_sequence(
    sequence: &PulseSequence,
    params: &SystemParams,
    model: Model,
    mode: PrepMode,
    cfg: &IntegratorConfig,
    opts: &ProtocolOptions,
) -> Result<ProtocolResult> {
    params.validate()?;
    if model == Model::Full {
        cfg.validate()?;
    }
    for step in &sequence.steps {
        step.validate()?;
    }
    let mut state = initial_carrier(params, model, &PureState::squid_basis(0, 0))?;
    let mut clock: Option<f64> = None;
    let mut integrator = Vec::new();
    let mut max_defect: f64 = 0.0;
    let mut snapshots = Vec::with_capacity(sequence.steps.len());
    let mut before_last = None;

    for (i, step) in sequence.steps.iter().enumerate() {
        if i + 1 == sequence.steps.len() {
            before_last = Some(state.clone());
        }
        state = match step {
            PulseStep::PrepareLiteral { amplitudes } => {
                let v = ComplexVector::from_iterator(9, amplitudes.iter().map(|a| c(a[0], a[1])));
                let pair = PureState::new(HilbertLayout::squid_pair(), v)?;
                initial_carrier(params, model, &pair)?
            }
            PulseStep::ClassicalDrive { target, transition, rabi, drive_phase, duration } => {
                let u = drive_unitary(*target, *transition, *rabi, *drive_phase, *duration)?;
                if let Some(t) = clock.as_mut() {
                    *t += duration;
                }
                max_defect = max_defect.max(unitarity_defect(&u));
                state.apply(&lift_squid_operator(&u, state.layout())?)
            }
            PulseStep::PhaseCorrection { target, phases } => {
                let u = phase_unitary(*target, *phases)?;
                state.apply(&lift_squid_operator(&u, state.layout())?)
            }
            PulseStep::CavityWindow { duration, drive_rabi, drive_on } => {
                let drive = if *drive_on { *drive_rabi } else { 0.0 };
                let t_start = match opts.clock {
                    ClockMode::Continuous => clock.unwrap_or(0.0),
                    ClockMode::PerWindow => 0.0,
                };
                clock = Some(clock.unwrap_or(0.0) + duration);
                match model {
                    Model::Effective => {
                        let u = lift_squid_operator(&effective_propagator(params, drive, *duration)?, state.layout())?;
                        max_defect = max_defect.max(unitarity_defect(&u));
                        state.apply(&u)
                    }
                    Model::Full => {
                        let (next, diag) = match &state {
                            Carrier::Pure(p) => {
                                let (out, d) = propagate_full(p, t_start, *duration, params, drive, cfg)?;
                                (Carrier::Pure(out), d)
                            }
                            Carrier::Mixed(r) => {
                                let (out, d) = propagate_full(r, t_start, *duration, params, drive, cfg)?;
                                (Carrier::Mixed(out), d)
                            }
                        };
                        max_defect = max_defect.max(diag.unitarity_defect);
                        integrator.push(diag);
                        next
                    }
                }
            }
        };
        let label = SNAPSHOT_LABELS.get(i).copied().unwrap_or(step.label());
        snapshots.push(StepSnapshot {
            label: label.to_string(),
            pair_state: state.pair_state()?,
            pair_amplitudes: state.pair_amplitudes(),
        });
    }

    let final_state = state.pair_state()?;
    let target = target_state();
    let fidelity_to_target = fidelity(&final_state, &target)?;
    let fidelity_published_correction = match before_last {
        Some(prev) => {
            let u = phase_unitary(Factor::Squid2, PUBLISHED_CORRECTION)?;
            let alt = prev.apply(&lift_squid_operator(&u, prev.layout())?);
            fidelity(&alt.pair_state()?, &target)?
        }
        None => fidelity_to_target,
    };
    let entropy = entanglement_entropy(&final_state).ok();
    Ok(ProtocolResult {
        model,
        mode,
        sequence: sequence.clone(),
        phase_optimized_fidelity: phase_optimized_fidelity(&final_state)?,
        negativity: negativity(&final_state)?,
        entropy,
        fidelity_to_target,
        fidelity_published_correction,
        final_state,
        snapshots,
        regime: check_regime(params, opts.thresholds),
        integrator,
        norm_drift: state.norm_drift(),
        max_unitarity_defect: max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::C64;

    fn small_params(k: u64, k_prime: u64) -> SystemParams {
        SystemParams { g: 1.0, delta: 15.0, k, k_prime, nbar: 0.0, n_max: 8 }
    }

    fn amp(v: &PureState, s1: usize, s2: usize) -> C64 {
        v.amplitude(s1 * 3 + s2)
    }

    #[test]
    fn as_published_initial_amplitudes() {
        let psi = prepare_initial(PrepMode::AsPublished);
        assert!((amp(&psi, 0, 0) - c(0.0, -(2.0f64 / 3.0).sqrt())).norm() < 1e-15);
        assert!((amp(&psi, 1, 0) - real((1.0f64 / 3.0).sqrt())).norm() < 1e-15);
        assert_eq!(amp(&psi, 2, 0), real(0.0));
    }

    #[test]
    fn physical_pulse_populations() {
        let psi = prepare_initial(PrepMode::PhysicalPulse);
        assert!((amp(&psi, 1, 0).norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
        assert!((amp(&psi, 0, 0).norm_sqr() - 2.0 / 3.0).abs() < 1e-12);
        // −i sits on |1⟩.
        assert!((amp(&psi, 1, 0) - c(0.0, -(1.0f64 / 3.0).sqrt())).norm() < 1e-12);
    }

    #[test]
    fn timing_certificate_is_exact() {
        for (k, kp) in [(1, 1), (3, 2), (1125, 282)] {
            let seq = canonical_sequence(&small_params(k, kp), PrepMode::AsPublished).unwrap();
            let cert = &seq.certificate;
            assert!((cert.lambda_t1_over_pi - 0.5).abs() < 1e-14);
            assert!((cert.lambda_t2_over_pi - 0.25).abs() < 1e-14);
            assert!((cert.omega_t1_over_pi - k as f64).abs() < 1e-12 * k as f64);
            assert!((cert.omega_prime_t2_over_2pi - kp as f64).abs() < 1e-12 * kp as f64);
            assert!(cert.max_deviation() < 1e-12);
        }
    }

    #[test]
    fn canonical_sequence_shape() {
        let seq = canonical_sequence(&small_params(2, 1), PrepMode::PhysicalPulse).unwrap();
        let kinds: Vec<_> = seq.steps.iter().map(|s| s.label()).collect();
        assert_eq!(kinds, ["classical-drive", "cavity-window", "classical-drive", "cavity-window", "phase-correction"]);
        let off = seq.with_later_window_drive(false);
        assert!(matches!(off.steps[1], PulseStep::CavityWindow { drive_on: true, .. }));
        assert!(matches!(off.steps[3], PulseStep::CavityWindow { drive_on: false, .. }));
    }

    fn printed_after_window_1() -> PureState {
        let mut v = ComplexVector::zeros(9);
        v[3] = real((1.0f64 / 3.0).sqrt());
        v[8] = c(0.0, (2.0f64 / 3.0).sqrt());
        PureState::new(HilbertLayout::squid_pair(), v).unwrap()
    }

    #[test]
    fn retarget_maps_printed_states() {
        let out = step3_retarget(&printed_after_window_1()).unwrap();
        assert!((amp(&out, 1, 1) - real((1.0f64 / 3.0).sqrt())).norm() < 1e-12);
        assert!((amp(&out, 2, 2) - c(0.0, (2.0f64 / 3.0).sqrt())).norm() < 1e-12);
        assert!(amp(&out, 1, 0).norm() < 1e-12);
    }

    #[test]
    fn retarget_twice_returns_population() {
        let psi = printed_after_window_1();
        let twice = step3_retarget(&step3_retarget(&psi).unwrap()).unwrap();
        assert!((amp(&twice, 1, 0) + amp(&psi, 1, 0)).norm() < 1e-12);
        assert!((amp(&twice, 2, 2) - amp(&psi, 2, 2)).norm() < 1e-12);
    }

    #[test]
    fn retarget_works_on_density_matrices() {
        let rho = printed_after_window_1().to_density();
        let out = step3_retarget(&rho).unwrap();
        let expect = step3_retarget(&printed_after_window_1()).unwrap().to_density();
        assert!((out.matrix() - expect.matrix()).camax() < 1e-12);
    }

    #[test]
    fn phase_correction_on_printed_window_2_state() {
        let s = (1.0f64 / 3.0).sqrt();
        let e = crate::tensor::phase(-FRAC_PI_4);
        let mut v = ComplexVector::zeros(9);
        v[4] = real(s);
        v[8] = c(0.0, 1.0) * e * s;
        v[0] = e * s;
        let psi = PureState::new(HilbertLayout::squid_pair(), v).unwrap();
        let out = phase_correction(&psi).unwrap();
        for idx in [0, 4, 8] {
            assert!((out.amplitude(idx) - real(s)).norm() < 1e-12, "index {idx}: {}", out.amplitude(idx));
        }
        assert!((out.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectator_phase_values() {
        assert!((spectator_phase(2, PrepMode::AsPublished) - FRAC_PI_4).abs() < 1e-15);
        assert!((spectator_phase(1, PrepMode::AsPublished) - (FRAC_PI_4 - PI)).abs() < 1e-15);
        assert!((spectator_phase(2, PrepMode::PhysicalPulse) - (FRAC_PI_4 - PI)).abs() < 1e-15);
    }

    #[test]
    fn effective_run_reaches_target_for_any_multipliers() {
        for (k, kp) in [(1, 1), (1, 2), (2, 1), (3, 2), (4, 5)] {
            for mode in [PrepMode::AsPublished, PrepMode::PhysicalPulse] {
                let r = run_protocol(&small_params(k, kp), Model::Effective, mode, &IntegratorConfig::default()).unwrap();
                assert!((r.fidelity_to_target - 1.0).abs() < 1e-9, "k={k} k'={kp} {mode}: {}", r.fidelity_to_target);
                assert!((r.phase_optimized_fidelity - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn published_correction_alone_depends_on_parity() {
        let even = run_protocol(&small_params(2, 1), Model::Effective, PrepMode::AsPublished, &IntegratorConfig::default()).unwrap();
        let odd = run_protocol(&small_params(1, 1), Model::Effective, PrepMode::AsPublished, &IntegratorConfig::default()).unwrap();
        // |2 + (−1)^k e^{−iπ/4}|²/9
        let expect = |sign: f64| {
            let z = real(2.0) + crate::tensor::phase(-FRAC_PI_4) * sign;
            z.norm_sqr() / 9.0
        };
        assert!((even.fidelity_published_correction - expect(1.0)).abs() < 1e-12);
        assert!((odd.fidelity_published_correction - expect(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn phase_correction_never_changes_populations() {
        let r = run_protocol(&small_params(3, 1), Model::Effective, PrepMode::AsPublished, &IntegratorConfig::default()).unwrap();
        let before = &r.snapshots[3].pair_state;
        let after = &r.snapshots[4].pair_state;
        for i in 0..9 {
            assert!((before.matrix()[(i, i)] - after.matrix()[(i, i)]).norm() < 1e-14);
        }
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn step_validation() {
        let bad = PulseStep::PhaseCorrection { target: Factor::Squid2, phases: [4.0, 0.0, 0.0] };
        assert!(bad.validate().is_err());
        let bad = PulseStep::CavityWindow { duration: 0.0, drive_rabi: 1.0, drive_on: true };
        assert!(bad.validate().is_err());
        let bad = PulseStep::ClassicalDrive {
            target: Factor::Cavity,
            transition: Transition::ZeroOne,
            rabi: 1.0,
            drive_phase: 0.0,
            duration: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mode_and_model_parse() {
        assert_eq!("full".parse::<Model>().unwrap(), Model::Full);
        assert_eq!("as-published".parse::<PrepMode>().unwrap(), PrepMode::AsPublished);
        assert!("fancy".parse::<Model>().is_err());
        assert_eq!(PrepMode::PhysicalPulse.to_string(), "physical-pulse");
    }

    proptest::proptest! {
        #[test]
        fn effective_fidelity_independent_of_multipliers(k in 1u64..2000, kp in 1u64..2000, published in proptest::bool::ANY) {
            let mode = if published { PrepMode::AsPublished } else { PrepMode::PhysicalPulse };
            let r = run_protocol(&small_params(k, kp), Model::Effective, mode, &IntegratorConfig::default()).unwrap();
            proptest::prop_assert!((r.fidelity_to_target - 1.0).abs() < 1e-9);
        }

        #[test]
        fn phase_step_preserves_populations(phases in proptest::array::uniform3(-3.1f64..3.1), seed in 0usize..9) {
            let mut v = ComplexVector::from_element(9, real(0.1));
            v[seed] = c(0.5, -0.3);
            let psi = PureState::normalized(HilbertLayout::squid_pair(), v).unwrap();
            let out = psi.apply_squid_unitary(&phase_unitary(Factor::Squid2, phases).unwrap()).unwrap();
            for i in 0..9 {
                proptest::prop_assert!((out.amplitude(i).norm_sqr() - psi.amplitude(i).norm_sqr()).abs() < 1e-14);
            }
        }
    }
}
