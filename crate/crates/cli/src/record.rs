//! Serializable run records and sweep tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use squid_qed::analysis::{RunSummary, SweepRecord};
use squid_qed::dynamics::IntegratorDiagnostics;
use squid_qed::hamiltonians::RegimeReport;
use squid_qed::protocol::{ProtocolResult, PulseSequence};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub label: String,
    /// `|⟨s₁,s₂|ψ⟩|²` in the order `|0,0⟩, |0,1⟩, …, |2,2⟩`.
    pub populations: Vec<f64>,
    pub purity: f64,
}

/// Row-major real and imaginary parts of a square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &squid_qed::ComplexMatrix) -> Self {
        let rows = |f: fn(&squid_qed::C64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Every config key with its effective value.
    pub config: BTreeMap<String, String>,
    pub model: String,
    pub mode: String,
    pub fidelity_to_target: f64,
    pub fidelity_published_correction: f64,
    /// Present when `phase_optimized = true`.
    pub phase_optimized_fidelity: Option<f64>,
    pub entropy: Option<f64>,
    pub negativity: f64,
    pub regime: RegimeReport,
    /// Set when either regime ratio is below its threshold.
    pub regime_warning: bool,
    pub sequence: PulseSequence,
    pub snapshots: Vec<SnapshotRecord>,
    pub final_state: MatrixRecord,
    pub integrator: Vec<IntegratorDiagnostics>,
    pub norm_drift: f64,
    pub max_unitarity_defect: f64,
}

pub fn now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunRecord {
    pub fn new(config: &RunConfig, result: &ProtocolResult, timestamp: u64) -> Self {
        let snapshots = result
            .snapshots
            .iter()
            .map(|s| SnapshotRecord {
                label: s.label.clone(),
                populations: s.pair_state.matrix().diagonal().iter().map(|z| z.re).collect(),
                purity: s.pair_state.purity(),
            })
            .collect();
        RunRecord {
            version: VERSION.to_string(),
            timestamp,
            config: config.echo().entries().clone(),
            model: result.model.to_string(),
            mode: result.mode.to_string(),
            fidelity_to_target: result.fidelity_to_target,
            fidelity_published_correction: result.fidelity_published_correction,
            phase_optimized_fidelity: config.phase_optimized.then_some(result.phase_optimized_fidelity),
            entropy: result.entropy,
            negativity: result.negativity,
            regime_warning: !result.regime.regime_ok,
            regime: result.regime.clone(),
            sequence: result.sequence.clone(),
            snapshots,
            final_state: MatrixRecord::from_matrix(result.final_state.matrix()),
            integrator: result.integrator.clone(),
            norm_drift: result.norm_drift,
            max_unitarity_defect: result.max_unitarity_defect,
        }
    }

    /// The record with the timestamp zeroed, for comparisons.
    pub fn without_timestamp(&self) -> Self {
        Self { timestamp: 0, ..self.clone() }
    }
}

/// Column order of sweep tables.
pub const TABLE_COLUMNS: [&str; 17] = [
    "delta",
    "k",
    "k_prime",
    "nbar",
    "n_max",
    "fidelity",
    "fidelity_published_correction",
    "phase_optimized_fidelity",
    "entropy",
    "negativity",
    "ratio_drive",
    "ratio_detuning",
    "regime_ok",
    "norm_drift",
    "max_unitarity_defect",
    "integrator_steps",
    "error",
];

/// One table row; numeric cells are empty when the point failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub delta: f64,
    pub k: u64,
    pub k_prime: u64,
    pub nbar: f64,
    pub n_max: usize,
    pub fidelity: Option<f64>,
    pub fidelity_published_correction: Option<f64>,
    pub phase_optimized_fidelity: Option<f64>,
    pub entropy: Option<f64>,
    pub negativity: Option<f64>,
    pub ratio_drive: Option<f64>,
    pub ratio_detuning: Option<f64>,
    pub regime_ok: Option<bool>,
    pub norm_drift: Option<f64>,
    pub max_unitarity_defect: Option<f64>,
    pub integrator_steps: Option<u64>,
    pub error: Option<String>,
}

impl From<&SweepRecord> for TableRow {
    fn from(r: &SweepRecord) -> Self {
        let s: Option<&RunSummary> = r.summary.as_ref();
        TableRow {
            delta: r.params.delta,
            k: r.params.k,
            k_prime: r.params.k_prime,
            nbar: r.params.nbar,
            n_max: r.params.n_max,
            fidelity: s.map(|s| s.fidelity),
            fidelity_published_correction: s.map(|s| s.fidelity_published_correction),
            phase_optimized_fidelity: s.map(|s| s.phase_optimized_fidelity),
            entropy: s.and_then(|s| s.entropy),
            negativity: s.map(|s| s.negativity),
            ratio_drive: s.map(|s| s.ratio_drive),
            ratio_detuning: s.map(|s| s.ratio_detuning),
            regime_ok: s.map(|s| s.regime_ok),
            norm_drift: s.map(|s| s.norm_drift),
            max_unitarity_defect: s.map(|s| s.max_unitarity_defect),
            integrator_steps: s.map(|s| s.integrator_steps),
            error: r.error.clone(),
        }
    }
}
