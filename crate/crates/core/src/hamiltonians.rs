//! Interaction-picture Hamiltonians for two driven SQUID qutrits coupled to
//! one cavity mode, plus the dispersive effective model.
//!
//! Frequencies are in units of the coupling `g` and times in `1/g`.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::tensor::{
    annihilation, embed, identity, kron, number_operator, phase, squid_op, ComplexMatrix, Factor,
    HilbertLayout, SquidOp,
};

/// Physical parameters of one protocol configuration.
///
/// The drive Rabi frequencies are not free: the timing constraints of the
/// two cavity windows pin them to `Ω = 2kλ` and `Ω′ = 8k′λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g: f64,
    pub delta: f64,
    pub k: u64,
    pub k_prime: u64,
    pub nbar: f64,
    pub n_max: usize,
}

pub const DEFAULT_DELTA: f64 = 15.0;
pub const DEFAULT_N_MAX: usize = 8;
/// Drive-to-detuning ratio `2Ω/δ` the default timing multipliers aim for.
pub const DEFAULT_DRIVE_RATIO: f64 = 10.0;

impl Default for SystemParams {
    fn default() -> Self {
        Self::regime_consistent(1.0, DEFAULT_DELTA, DEFAULT_DRIVE_RATIO)
    }
}

impl SystemParams {
    /// Parameters whose timing multipliers make both windows satisfy
    /// `2Ω/δ ≥ drive_ratio`, with vacuum cavity and the default cutoff.
    pub fn regime_consistent(g: f64, delta: f64, drive_ratio: f64) -> Self {
        Self {
            g,
            delta,
            k: min_k(g, delta, drive_ratio),
            k_prime: min_k_prime(g, delta, drive_ratio),
            nbar: 0.0,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(CoreError::InvalidParameter { name, reason });
        if !(self.g.is_finite() && self.g > 0.0) {
            return bad("g", format!("must be positive, got {}", self.g));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad("delta", format!("must be positive, got {}", self.delta));
        }
        if self.k < 1 {
            return bad("k", "must be at least 1".into());
        }
        if self.k_prime < 1 {
            return bad("k_prime", "must be at least 1".into());
        }
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return bad("nbar", format!("must be non-negative, got {}", self.nbar));
        }
        if self.n_max < 2 {
            return bad("n_max", format!("must be at least 2, got {}", self.n_max));
        }
        Ok(())
    }

    /// `λ = g²/(2δ)`
    pub fn lambda(&self) -> f64 {
        self.g * self.g / (2.0 * self.delta)
    }

    /// First-window drive `Ω = 2kλ`, so that `Ω t₁ = kπ`.
    pub fn omega(&self) -> f64 {
        2.0 * self.k as f64 * self.lambda()
    }

    /// Second-window drive `Ω′ = 8k′λ`, so that `Ω′ t₂ = 2k′π`.
    pub fn omega_prime(&self) -> f64 {
        8.0 * self.k_prime as f64 * self.lambda()
    }

    /// First cavity window `t₁ = π/(2λ)`.
    pub fn t1(&self) -> f64 {
        PI / (2.0 * self.lambda())
    }

    /// Second cavity window `t₂ = π/(4λ)`.
    pub fn t2(&self) -> f64 {
        PI / (4.0 * self.lambda())
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::composite(self.n_max)
    }
}

/// Smallest `k` with `2Ω/δ = 2k g²/δ² ≥ ratio`.
pub fn min_k(g: f64, delta: f64, ratio: f64) -> u64 {
    ceil_count(ratio * delta * delta / (2.0 * g * g))
}

/// Smallest `k′` with `2Ω′/δ = 8k′ g²/δ² ≥ ratio`.
pub fn min_k_prime(g: f64, delta: f64, ratio: f64) -> u64 {
    ceil_count(ratio * delta * delta / (8.0 * g * g))
}

fn ceil_count(x: f64) -> u64 {
    // Guard against 1125.0000000000002 style roundoff pushing a count up.
    let r = x.round();
    let c = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (c as u64).max(1)
}

/// Thresholds standing in for the "much greater than" conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Minimum `2Ω/δ`.
    pub drive: f64,
    /// Minimum `2δ/g`.
    pub detuning: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { drive: 10.0, detuning: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// `2Ω/δ` of the weakest drive among the checked windows.
    pub ratio_drive: f64,
    /// `2Ω/δ` for each checked drive, in window order.
    pub ratio_drive_windows: Vec<f64>,
    /// `2δ/g`
    pub ratio_detuning: f64,
    pub thresholds: RegimeThresholds,
    pub regime_ok: bool,
}

/// Regime check for explicit drive Rabi frequencies.
pub fn check_rates(g: f64, delta: f64, drives: &[f64], thresholds: RegimeThresholds) -> RegimeReport {
    let ratio_drive_windows: Vec<f64> = drives.iter().map(|&w| 2.0 * w / delta).collect();
    let ratio_drive = ratio_drive_windows.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_detuning = 2.0 * delta / g;
    let regime_ok = ratio_drive >= thresholds.drive && ratio_detuning >= thresholds.detuning;
    RegimeReport { ratio_drive, ratio_drive_windows, ratio_detuning, thresholds, regime_ok }
}

/// Regime check for both cavity windows of `params` (drives `Ω` and `Ω′`).
pub fn check_regime(params: &SystemParams, thresholds: RegimeThresholds) -> RegimeReport {
    check_rates(params.g, params.delta, &[params.omega(), params.omega_prime()], thresholds)
}

/// SQUID transition addressed by a classical drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `|0⟩ ↔ |2⟩`, the cavity-coupled transition.
    ZeroTwo,
    /// `|0⟩ ↔ |1⟩`
    ZeroOne,
}

impl Transition {
    pub fn upper(self) -> usize {
        match self {
            Transition::ZeroTwo => 2,
            Transition::ZeroOne => 1,
        }
    }
}

impl FromStr for Transition {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0-2" | "0<->2" | "2-0" | "zero_two" => Ok(Transition::ZeroTwo),
            "0-1" | "0<->1" | "1-0" | "zero_one" => Ok(Transition::ZeroOne),
            other => Err(CoreError::InvalidTransition(other.to_string())),
        }
    }
}

fn squid_x() -> ComplexMatrix {
    squid_op(SquidOp::Raise) + squid_op(SquidOp::Lower)
}

/// `Ω Σᵢ (Sᵢ⁺ + Sᵢ⁻)` on the composite space.
pub fn composite_drive(params: &SystemParams, rabi: f64) -> Result<ComplexMatrix> {
    Ok(kron(&h0(rabi), &identity(params.layout()?.factor_dim(Factor::Cavity))))
}

/// Cavity photon-number operator `a†a` on the composite space.
pub fn composite_number(params: &SystemParams) -> Result<ComplexMatrix> {
    let layout = params.layout()?;
    embed(&number_operator(params.n_max)?, Factor::Cavity, &layout)
}

/// Full interaction-picture Hamiltonian at time `t`:
///
/// `H(t) = g Σᵢ [e^{-iδt} a† Sᵢ⁻ + e^{iδt} a Sᵢ⁺] + Ω Σᵢ (Sᵢ⁺ + Sᵢ⁻)`
///
/// with `δ = ω₂₀ - ω` and `Ω = drive` (pass `0.0` for drive off).
pub fn h_full(params: &SystemParams, t: f64, drive: f64) -> Result<ComplexMatrix> {
    params.validate()?;
    let layout = params.layout()?;
    let a = embed(&annihilation(params.n_max)?, Factor::Cavity, &layout)?;
    let ad = a.adjoint();
    let rot = phase(-params.delta * t);
    let mut exchange = ComplexMatrix::zeros(layout.dim(), layout.dim());
    for slot in [Factor::Squid1, Factor::Squid2] {
        let sp = embed(&squid_op(SquidOp::Raise), slot, &layout)?;
        let sm = embed(&squid_op(SquidOp::Lower), slot, &layout)?;
        exchange += (&ad * sm) * rot + (&a * sp) * rot.conj();
    }
    Ok(exchange.scale(params.g) + composite_drive(params, drive)?)
}

/// Dispersive effective Hamiltonian on SQUID1 ⊗ SQUID2:
///
/// `H_e = λ [½ Σᵢ (|0⟩ᵢ⟨0| + |2⟩ᵢ⟨2|) + (S₁⁺S₂⁺ + S₁⁺S₂⁻ + H.c.)]`, `λ = g²/(2δ)`.
pub fn h_effective(params: &SystemParams) -> ComplexMatrix {
    let outer = squid_op(SquidOp::Projector(0)) + squid_op(SquidOp::Projector(2));
    let i3 = identity(3);
    let sp = squid_op(SquidOp::Raise);
    let sm = squid_op(SquidOp::Lower);
    let stark = (kron(&outer, &i3) + kron(&i3, &outer)).scale(0.5);
    let pair = kron(&sp, &sp) + kron(&sp, &sm);
    let pair = &pair + pair.adjoint();
    (stark + pair).scale(params.lambda())
}

/// Resonant drive `Ω (e^{iφ}|u⟩⟨0| + e^{-iφ}|0⟩⟨u|)` on one SQUID of the pair,
/// identity on the other; `u` is the upper level of `transition`.
pub fn h_drive_single_phased(omega: f64, drive_phase: f64, target: Factor, transition: Transition) -> Result<ComplexMatrix> {
    let u = transition.upper();
    let up = squid_op(SquidOp::Transition { to: u, from: 0 }) * phase(drive_phase);
    let single = (&up + up.adjoint()).scale(omega);
    embed(&single, target, &HilbertLayout::squid_pair())
}

/// Resonant drive `Ω (|u⟩⟨0| + |0⟩⟨u|)` on one SQUID of the pair.
pub fn h_drive_single(omega: f64, target: Factor, transition: Transition) -> Result<ComplexMatrix> {
    h_drive_single_phased(omega, 0.0, target, transition)
}

/// `H₀ = Ω Σᵢ (Sᵢ⁺ + Sᵢ⁻)` on SQUID1 ⊗ SQUID2.
pub fn h0(omega: f64) -> ComplexMatrix {
    let x = squid_x();
    let i3 = identity(3);
    (kron(&x, &i3) + kron(&i3, &x)).scale(omega)
}
