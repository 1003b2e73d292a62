//! State propagation under the effective and full models.
//!
//! The effective model is propagated exactly with the factored operator
//! `exp(-iH₀t) exp(-iH_e t)`. The full model is time dependent and is
//! integrated with the exponential midpoint rule
//! `ψ ← exp(-i H(t + dt/2) dt) ψ`, halving `dt` until the endpoint stops
//! moving.
//!
//! The full generator has the form `H(t) = R(t) H(0) R(t)†` with the diagonal
//! cavity rotation `R(t) = exp(-iδt a†a)`. Every midpoint step is therefore
//! `R(m) E R(m)†` with a single `E = exp(-iH(0)dt)`, and consecutive rotations
//! collapse to the constant `R(-dt)`. An `N`-step product is
//! `R(m_{N-1}) E (R(-dt) E)^{N-1} R(m_0)†`, which is evaluated by binary
//! powering. The result is the same ordered product of midpoint steps; only
//! the evaluation order of the matrix products differs.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hamiltonians::{h0, h_effective, h_full, SystemParams};
use crate::tensor::{
    identity, kron, matexp_hermitian, phase, real, unitarity_defect, ComplexMatrix, ComplexVector,
    DensityMatrix, HermitianSpectrum, HilbertLayout, PureState,
};

/// Upper bound on `max_halvings`; keeps step counts well inside `u64`.
pub const MAX_HALVINGS_LIMIT: u32 = 32;

/// Step-size control for the full-model integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Initial step, in `1/g`.
    pub dt_initial: f64,
    /// Endpoint infidelity between successive refinements that counts as converged.
    pub tolerance: f64,
    pub max_halvings: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt_initial: 1e-2, tolerance: 1e-8, max_halvings: 20 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_initial.is_finite() && self.dt_initial > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "dt_initial",
                reason: format!("must be positive, got {}", self.dt_initial),
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "tolerance",
                reason: format!("must be positive, got {}", self.tolerance),
            });
        }
        if !(1..=MAX_HALVINGS_LIMIT).contains(&self.max_halvings) {
            return Err(CoreError::InvalidParameter {
                name: "max_halvings",
                reason: format!("must lie in 1..={MAX_HALVINGS_LIMIT}, got {}", self.max_halvings),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorDiagnostics {
    pub final_dt: f64,
    pub steps: u64,
    pub halvings: u32,
    /// Endpoint change between the last two refinements.
    pub last_change: f64,
    /// `‖U†U - I‖_F` of the accepted propagator.
    pub unitarity_defect: f64,
}

/// Largest truncated thermal weight accepted.
pub const THERMAL_LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub nbar: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone)]
pub struct ThermalState {
    /// Renormalized diagonal Fock mixture on the cavity layout.
    pub density: DensityMatrix,
    /// Bose-Einstein weights `p_n` before renormalization.
    pub raw_weights: Vec<f64>,
    /// `Σ_{n ≥ n_max} p_n`
    pub leakage: f64,
}

impl ThermalState {
    pub fn mean_photon_number(&self) -> f64 {
        self.density.matrix().diagonal().iter().enumerate().map(|(n, p)| n as f64 * p.re).sum()
    }
}

/// `p_n = n̄ⁿ/(1+n̄)^{n+1}` for `n < n_max`, and the weight beyond the cutoff.
pub fn thermal_weights(nbar: f64, n_max: usize) -> (Vec<f64>, f64) {
    if nbar == 0.0 {
        let mut w = vec![0.0; n_max];
        w[0] = 1.0;
        return (w, 0.0);
    }
    let ratio = nbar / (1.0 + nbar);
    let weights = (0..n_max).map(|n| ratio.powi(n as i32) / (1.0 + nbar)).collect();
    (weights, ratio.powi(n_max as i32))
}

/// Thermal cavity state with Bose-Einstein weights, renormalized after
/// truncation. Fails if the truncated weight exceeds [`THERMAL_LEAKAGE_LIMIT`].
pub fn thermal_state(spec: ThermalSpec) -> Result<ThermalState> {
    if !(spec.nbar.is_finite() && spec.nbar >= 0.0) {
        return Err(CoreError::InvalidParameter { name: "nbar", reason: format!("must be non-negative, got {}", spec.nbar) });
    }
    let layout = HilbertLayout::cavity(spec.n_max)?;
    let (raw_weights, leakage) = thermal_weights(spec.nbar, spec.n_max);
    if leakage > THERMAL_LEAKAGE_LIMIT {
        return Err(CoreError::TruncationLeakage { leakage, limit: THERMAL_LEAKAGE_LIMIT, n_max: spec.n_max });
    }
    let total: f64 = raw_weights.iter().sum();
    let diag = ComplexVector::from_iterator(spec.n_max, raw_weights.iter().map(|w| real(w / total)));
    let density = DensityMatrix::new(layout, ComplexMatrix::from_diagonal(&diag))?;
    Ok(ThermalState { density, raw_weights, leakage })
}

/// `exp(-iH₀t) exp(-iH_e t)` on SQUID1 ⊗ SQUID2.
pub fn effective_propagator(params: &SystemParams, omega: f64, t: f64) -> Result<ComplexMatrix> {
    let drive = matexp_hermitian(&h0(omega), t)?;
    let coupling = matexp_hermitian(&h_effective(params), t)?;
    Ok(drive * coupling)
}

/// Lifts a SQUID-pair operator to `layout` (identity on the cavity if present).
pub fn lift_squid_operator(u: &ComplexMatrix, layout: &HilbertLayout) -> Result<ComplexMatrix> {
    if u.nrows() != 9 {
        return Err(CoreError::DimensionMismatch { expected: 9, got: u.nrows() });
    }
    match layout.fock_cutoff() {
        Some(n_max) if layout.factors().len() == 3 => Ok(kron(u, &identity(n_max))),
        None if layout.dim() == 9 => Ok(u.clone()),
        _ => Err(CoreError::InvalidFactors(format!("cannot lift a SQUID-pair operator to {:?}", layout.factors()))),
    }
}

/// Exact effective-model evolution of a SQUID-pair state.
pub fn evolve_effective(state: &PureState, t: f64, omega: f64, params: &SystemParams) -> Result<PureState> {
    if state.layout().dim() != 9 {
        return Err(CoreError::DimensionMismatch { expected: 9, got: state.layout().dim() });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > crate::tensor::NORM_TOL {
        return Err(CoreError::Unnormalized { norm });
    }
    state.apply(&effective_propagator(params, omega, t)?)
}

/// Something a unitary can be applied to, with a measure of how far two
/// endpoints are apart.
pub trait Evolvable: Sized {
    fn dim(&self) -> usize;
    fn propagate(&self, u: &ComplexMatrix) -> Self;
    /// Infidelity-type distance used for step-size control.
    fn endpoint_change(&self, other: &Self) -> f64;
}

impl Evolvable for PureState {
    fn dim(&self) -> usize {
        self.layout().dim()
    }

    fn propagate(&self, u: &ComplexMatrix) -> Self {
        self.apply_unchecked(u)
    }

    fn endpoint_change(&self, other: &Self) -> f64 {
        let overlap = self.inner(other).norm_sqr() / (self.norm().powi(2) * other.norm().powi(2));
        (1.0 - overlap).max(0.0)
    }
}

impl Evolvable for DensityMatrix {
    fn dim(&self) -> usize {
        self.layout().dim()
    }

    fn propagate(&self, u: &ComplexMatrix) -> Self {
        let m = u * self.matrix() * u.adjoint();
        DensityMatrix::from_parts(self.layout().clone(), crate::tensor::hermitize(m))
    }

    /// `1 - Tr(ρσ)/√(Tr ρ² Tr σ²)`; equals the infidelity for pure states.
    fn endpoint_change(&self, other: &Self) -> f64 {
        let cross: f64 = self.matrix().iter().zip(other.matrix().iter()).map(|(a, b)| (a.conj() * b).re).sum();
        (1.0 - cross / (self.purity() * other.purity()).sqrt()).max(0.0)
    }
}

/// Midpoint-exponential propagation for the full model at fixed drive.
#[derive(Debug, Clone)]
pub struct FullPropagator {
    delta: f64,
    spectrum: HermitianSpectrum,
    photons: Vec<f64>,
}

impl FullPropagator {
    pub fn new(params: &SystemParams, drive: f64) -> Result<Self> {
        params.validate()?;
        let spectrum = HermitianSpectrum::new(&h_full(params, 0.0, drive)?)?;
        let layout = params.layout()?;
        let photons = (0..layout.dim()).map(|i| layout.decode(i)[2] as f64).collect();
        Ok(Self { delta: params.delta, spectrum, photons })
    }

    pub fn dim(&self) -> usize {
        self.photons.len()
    }

    /// Diagonal of `R(t) = exp(-iδt a†a)`.
    fn rotation(&self, t: f64) -> Vec<crate::tensor::C64> {
        self.photons.iter().map(|&n| phase(-self.delta * t * n)).collect()
    }

    /// One midpoint step `exp(-i H(t_mid) dt)`.
    pub fn step_matrix(&self, t_mid: f64, dt: f64) -> ComplexMatrix {
        let e = self.spectrum.propagator(dt);
        let r = self.rotation(t_mid);
        ComplexMatrix::from_fn(e.nrows(), e.ncols(), |i, j| r[i] * e[(i, j)] * r[j].conj())
    }

    /// Ordered product of `steps` midpoint steps covering `[t_start, t_start + duration]`.
    pub fn product(&self, t_start: f64, duration: f64, steps: u64) -> ComplexMatrix {
        assert!(steps >= 1);
        let dt = duration / steps as f64;
        let e = self.spectrum.propagator(dt);
        let back = self.rotation(-dt);
        // M = R(-dt) E
        let m = ComplexMatrix::from_fn(e.nrows(), e.ncols(), |i, j| back[i] * e[(i, j)]);
        let body = &e * matrix_power(&m, steps - 1);
        let first = self.rotation(t_start + 0.5 * dt);
        let last = self.rotation(t_start + (steps as f64 - 0.5) * dt);
        ComplexMatrix::from_fn(body.nrows(), body.ncols(), |i, j| last[i] * body[(i, j)] * first[j].conj())
    }
}

fn matrix_power(m: &ComplexMatrix, mut p: u64) -> ComplexMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Literal midpoint stepping with a freshly built `exp(-i H(t_mid) dt)` at
/// every step. Costs one eigendecomposition per step; kept as a reference
/// for the powered evaluation in [`FullPropagator::product`].
pub fn evolve_full_stepwise(
    state: &PureState,
    t_start: f64,
    duration: f64,
    params: &SystemParams,
    drive: f64,
    steps: u64,
) -> Result<PureState> {
    let dt = duration / steps as f64;
    let mut psi = state.clone();
    for j in 0..steps {
        let t_mid = t_start + (j as f64 + 0.5) * dt;
        psi = psi.apply_unchecked(&matexp_hermitian(&h_full(params, t_mid, drive)?, dt)?);
    }
    Ok(psi)
}

/// Adaptive full-model propagation of any [`Evolvable`] target.
///
/// Starts from `ceil(duration / dt_initial)` steps and doubles the step
/// count until the endpoint change between successive refinements drops
/// below `cfg.tolerance`. The finer endpoint is returned.
pub fn propagate_full<T: Evolvable>(
    target: &T,
    t_start: f64,
    duration: f64,
    params: &SystemParams,
    drive: f64,
    cfg: &IntegratorConfig,
) -> Result<(T, IntegratorDiagnostics)> {
    cfg.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(CoreError::InvalidParameter { name: "duration", reason: format!("must be positive, got {duration}") });
    }
    let prop = FullPropagator::new(params, drive)?;
    if target.dim() != prop.dim() {
        return Err(CoreError::DimensionMismatch { expected: prop.dim(), got: target.dim() });
    }
    let base_steps = (duration / cfg.dt_initial).ceil().max(1.0) as u64;
    let mut prev = target.propagate(&prop.product(t_start, duration, base_steps));
    let mut last_change = f64::INFINITY;
    for halving in 1..=cfg.max_halvings {
        let steps = base_steps.checked_mul(1u64 << halving).ok_or_else(|| CoreError::InvalidParameter {
            name: "dt_initial",
            reason: format!("step count overflows for duration {duration} and dt {}", cfg.dt_initial),
        })?;
        let u = prop.product(t_start, duration, steps);
        let next = target.propagate(&u);
        last_change = prev.endpoint_change(&next);
        if last_change < cfg.tolerance {
            let diagnostics = IntegratorDiagnostics {
                final_dt: duration / steps as f64,
                steps,
                halvings: halving,
                last_change,
                unitarity_defect: unitarity_defect(&u),
            };
            return Ok((next, diagnostics));
        }
        prev = next;
    }
    Err(CoreError::NonConvergence { halvings: cfg.max_halvings, last_change, tolerance: cfg.tolerance })
}

/// Full-model evolution of a composite pure state.
pub fn evolve_full(
    state: &PureState,
    t_start: f64,
    duration: f64,
    params: &SystemParams,
    drive: f64,
    cfg: &IntegratorConfig,
) -> Result<(PureState, IntegratorDiagnostics)> {
    propagate_full(state, t_start, duration, params, drive, cfg)
}

/// Which model carries a density matrix forward.
#[derive(Debug, Clone, PartialEq)]
pub enum Evolver {
    /// Exact factored propagator, identity on the cavity.
    Effective { omega: f64, duration: f64 },
    /// Time-ordered full model starting at absolute time `t_start`.
    Full { t_start: f64, duration: f64, drive: f64, cfg: IntegratorConfig },
}

/// `ρ → UρU†` under the selected model.
pub fn evolve_density(
    rho: &DensityMatrix,
    evolver: &Evolver,
    params: &SystemParams,
) -> Result<(DensityMatrix, Option<IntegratorDiagnostics>)> {
    match evolver {
        Evolver::Effective { omega, duration } => {
            let u = lift_squid_operator(&effective_propagator(params, *omega, *duration)?, rho.layout())?;
            Ok((rho.conjugate(&u)?, None))
        }
        Evolver::Full { t_start, duration, drive, cfg } => {
            let (out, diag) = propagate_full(rho, *t_start, *duration, params, *drive, cfg)?;
            Ok((out, Some(diag)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, Factor, C64};
    use std::f64::consts::PI;

    fn params(delta: f64, n_max: usize) -> SystemParams {
        SystemParams { g: 1.0, delta, k: 3, k_prime: 1, nbar: 0.0, n_max }
    }

    fn ket(s1: usize, s2: usize) -> PureState {
        PureState::squid_basis(s1, s2)
    }

    #[test]
    fn spectator_branch_picks_up_stark_phase_and_drive_rotation() {
        // H_e|1,0⟩ = (λ/2)|1,0⟩ and H₀ rotates SQUID 2 within {|0⟩,|2⟩}.
        let p = params(7.0, 2);
        let lam = p.lambda();
        for &(omega, t) in &[(0.0, 1.3), (2.1, 0.37), (11.0, 5.9)] {
            let out = evolve_effective(&ket(1, 0), t, omega, &p).unwrap();
            let stark = phase(-lam * t / 2.0);
            let a10 = stark * (omega * t).cos();
            let a12 = stark * c(0.0, -(omega * t).sin());
            assert!((out.amplitude(3) - a10).norm() < 1e-12);
            assert!((out.amplitude(5) - a12).norm() < 1e-12);
        }
    }

    #[test]
    fn window_one_sends_ground_pair_to_upper_pair() {
        let p = params(9.0, 2);
        let t1 = p.t1();
        let out = evolve_effective(&ket(0, 0), t1, p.omega(), &p).unwrap();
        assert!((out.amplitude(8).norm() - 1.0).abs() < 1e-10);
        // −|2,2⟩ from e^{-iλt}(-i) at λt = π/2 and (−1)^{2k} from H₀.
        assert!((out.amplitude(8) - real(-1.0)).norm() < 1e-10);
    }

    #[test]
    fn effective_rejects_composite_state() {
        let layout = HilbertLayout::composite(3).unwrap();
        let psi = PureState::basis(layout, 0).unwrap();
        assert!(evolve_effective(&psi, 1.0, 1.0, &params(5.0, 3)).is_err());
    }

    #[test]
    fn exponential_order_does_not_matter() {
        let p = params(6.0, 2);
        let omega = 3.3;
        let t = 2.7;
        let a = effective_propagator(&p, omega, t).unwrap();
        let b = matexp_hermitian(&h_effective(&p), t).unwrap() * matexp_hermitian(&h0(omega), t).unwrap();
        assert!((a - b).camax() < 1e-10);
    }

    #[test]
    fn thermal_vacuum_is_exact() {
        let th = thermal_state(ThermalSpec { nbar: 0.0, n_max: 5 }).unwrap();
        assert_eq!(th.density.matrix()[(0, 0)], real(1.0));
        assert_eq!(th.density.trace(), real(1.0));
        assert_eq!(th.leakage, 0.0);
    }

    #[test]
    fn thermal_weights_for_unit_mean() {
        let (w, leak) = thermal_weights(1.0, 30);
        assert_eq!(w[0], 0.5);
        assert_eq!(w[1], 0.25);
        assert!((leak - 0.5f64.powi(30)).abs() < 1e-24);
    }

    #[test]
    fn thermal_mean_within_leakage_bound() {
        for &(nbar, n_max) in &[(0.5, 20), (1.0, 30), (2.0, 40)] {
            let th = thermal_state(ThermalSpec { nbar, n_max }).unwrap();
            let ratio: f64 = nbar / (1.0 + nbar);
            // Truncated tail mass times its mean distance from n̄ bounds the shift.
            let tail_mean = n_max as f64 + nbar;
            let bound = th.leakage * (tail_mean + nbar) / (1.0 - th.leakage) + 1e-12;
            assert!((th.mean_photon_number() - nbar).abs() <= bound, "nbar {nbar}: {}", th.mean_photon_number());
            assert!(ratio.powi(n_max as i32) <= THERMAL_LEAKAGE_LIMIT);
            let trace: f64 = th.density.trace().re;
            assert!((trace - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_rejects_heavy_truncation() {
        let err = thermal_state(ThermalSpec { nbar: 2.0, n_max: 8 }).unwrap_err();
        assert!(matches!(err, CoreError::TruncationLeakage { .. }));
    }

    #[test]
    fn step_matrix_matches_direct_exponential() {
        let p = params(10.0, 4);
        let prop = FullPropagator::new(&p, 5.0).unwrap();
        for &t in &[0.0, 0.3, 2.17] {
            let direct = matexp_hermitian(&h_full(&p, t, 5.0).unwrap(), 0.01).unwrap();
            assert!((prop.step_matrix(t, 0.01) - direct).camax() < 1e-12);
        }
    }

    #[test]
    fn powered_product_matches_stepwise() {
        let p = params(10.0, 4);
        let layout = p.layout().unwrap();
        let mut v = ComplexVector::zeros(layout.dim());
        v[layout.index(0, 0, 0)] = c(0.6, 0.0);
        v[layout.index(1, 0, 1)] = c(0.0, 0.8);
        let psi = PureState::new(layout, v).unwrap();
        let steps = 137;
        let prop = FullPropagator::new(&p, 4.0).unwrap();
        let powered = psi.apply_unchecked(&prop.product(0.25, 1.1, steps));
        let stepwise = evolve_full_stepwise(&psi, 0.25, 1.1, &p, 4.0, steps).unwrap();
        assert!((powered.amplitudes() - stepwise.amplitudes()).camax() < 1e-11);
    }

    #[test]
    fn decoupled_full_model_without_drive_is_identity() {
        // g = 0 is not a valid parameter set, so shrink g until the exchange
        // term is below roundoff over the evolution time.
        let p = SystemParams { g: 1e-14, ..params(10.0, 3) };
        let layout = p.layout().unwrap();
        let psi = PureState::basis(layout.clone(), layout.index(0, 2, 1)).unwrap();
        let (out, _) = evolve_full(&psi, 0.0, 2.0, &p, 0.0, &IntegratorConfig::default()).unwrap();
        assert!((out.amplitudes() - psi.amplitudes()).camax() < 1e-12);
    }

    #[test]
    fn decoupled_full_model_with_drive_is_rabi() {
        let p = SystemParams { g: 1e-14, ..params(10.0, 3) };
        let layout = p.layout().unwrap();
        let omega = 3.0;
        let t = 0.83;
        let psi = PureState::basis(layout.clone(), layout.index(0, 1, 0)).unwrap();
        let (out, _) = evolve_full(&psi, 0.0, t, &p, omega, &IntegratorConfig::default()).unwrap();
        assert!((out.amplitude(layout.index(0, 1, 0)) - real((omega * t).cos())).norm() < 1e-10);
        assert!((out.amplitude(layout.index(2, 1, 0)) - c(0.0, -(omega * t).sin())).norm() < 1e-10);
    }

    #[test]
    fn full_model_reports_non_convergence() {
        let p = params(10.0, 4);
        let layout = p.layout().unwrap();
        let psi = PureState::basis(layout.clone(), layout.index(0, 0, 0)).unwrap();
        let cfg = IntegratorConfig { dt_initial: 0.5, tolerance: 1e-15, max_halvings: 2 };
        let err = evolve_full(&psi, 0.0, 3.0, &p, 20.0, &cfg).unwrap_err();
        assert!(matches!(err, CoreError::NonConvergence { halvings: 2, .. }));
    }

    #[test]
    fn full_model_rejects_bad_duration() {
        let p = params(10.0, 3);
        let layout = p.layout().unwrap();
        let psi = PureState::basis(layout, 0).unwrap();
        assert!(evolve_full(&psi, 0.0, 0.0, &p, 1.0, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn density_evolution_matches_pure_evolution() {
        let p = params(10.0, 4);
        let layout = p.layout().unwrap();
        let mut v = ComplexVector::zeros(layout.dim());
        v[layout.index(1, 0, 0)] = c(0.5_f64.sqrt(), 0.0);
        v[layout.index(0, 0, 1)] = c(0.0, -(0.5_f64.sqrt()));
        let psi = PureState::new(layout, v).unwrap();
        let cfg = IntegratorConfig::default();
        let (out, _) = evolve_full(&psi, 0.4, 1.5, &p, 6.0, &cfg).unwrap();
        let evolver = Evolver::Full { t_start: 0.4, duration: 1.5, drive: 6.0, cfg };
        let (rho, diag) = evolve_density(&psi.to_density(), &evolver, &p).unwrap();
        assert!(diag.is_some());
        assert!((rho.matrix() - out.to_density().matrix()).camax() < 1e-10);

        let pair = PureState::normalized(
            HilbertLayout::squid_pair(),
            ComplexVector::from_fn(9, |i, _| C64::new(1.0 + i as f64, 0.5 * i as f64)),
        )
        .unwrap();
        let eff = Evolver::Effective { omega: 2.0, duration: 3.0 };
        let (rho, _) = evolve_density(&pair.to_density(), &eff, &p).unwrap();
        let psi_out = evolve_effective(&pair, 3.0, 2.0, &p).unwrap();
        assert!((rho.matrix() - psi_out.to_density().matrix()).camax() < 1e-10);
    }

    #[test]
    fn trace_survives_many_composed_steps() {
        let p = params(10.0, 4);
        let layout = p.layout().unwrap();
        let th = thermal_state(ThermalSpec { nbar: 0.01, n_max: 4 }).unwrap();
        let squid = ket(0, 0).to_density();
        let mut rho = squid.tensor(&th.density, layout).unwrap();
        let prop = FullPropagator::new(&p, 7.0).unwrap();
        for j in 0..100 {
            rho = rho.propagate(&prop.step_matrix(0.01 * (j as f64 + 0.5), 0.01));
        }
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.trace().im.abs() < 1e-10);
        assert!(crate::tensor::hermitian_deviation(rho.matrix()) < 1e-12);
    }

    #[test]
    fn lift_places_identity_on_cavity() {
        let u = h0(1.0);
        let layout = HilbertLayout::composite(3).unwrap();
        let lifted = lift_squid_operator(&u, &layout).unwrap();
        assert_eq!(lifted.nrows(), 27);
        assert_eq!(lifted[(layout.index(2, 0, 1), layout.index(0, 0, 1))], u[(6, 0)]);
        assert!(lift_squid_operator(&u, &HilbertLayout::single_squid(Factor::Squid1).unwrap()).is_err());
    }

    #[test]
    fn detuning_period_returns_generator() {
        let p = params(8.0, 3);
        let a = h_full(&p, 0.1, 2.0).unwrap();
        let b = h_full(&p, 0.1 + 2.0 * PI / p.delta, 2.0).unwrap();
        assert!((a - b).camax() < 1e-12);
    }
}
