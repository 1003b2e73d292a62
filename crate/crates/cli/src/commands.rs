//! The `run`, `sweep` and `validate` commands.

use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use squid_qed::analysis::{
    negativity, entanglement_entropy, sweep, trace_distance, verify_printed_states, SweepGrid,
};
use squid_qed::dynamics::IntegratorConfig;
use squid_qed::hamiltonians::{h0, h_effective};
use squid_qed::protocol::{canonical_sequence, run_protocol, run_protocol_with, Model, PrepMode};
use squid_qed::tensor::commutator_norm;
use squid_qed::SystemParams;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, ConfigError};
use crate::record::{now, RunRecord, TableRow};

/// Runs the configured protocol and builds its record.
pub fn cmd_run(config: &RunConfig) -> Result<RunRecord, CliError> {
    let result = run_protocol_with(
        &config.params,
        config.model,
        config.mode,
        &config.integrator,
        &config.protocol_options(),
    )?;
    Ok(RunRecord::new(config, &result, now()))
}

pub fn render_run(record: &RunRecord, format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Json => to_json(record),
        OutputFormat::Csv => {
            let params = crate::config::parse_config(&echo_text(record))?.params;
            let row = TableRow {
                delta: params.delta,
                k: params.k,
                k_prime: params.k_prime,
                nbar: params.nbar,
                n_max: params.n_max,
                fidelity: Some(record.fidelity_to_target),
                fidelity_published_correction: Some(record.fidelity_published_correction),
                phase_optimized_fidelity: record.phase_optimized_fidelity,
                entropy: record.entropy,
                negativity: Some(record.negativity),
                ratio_drive: Some(record.regime.ratio_drive),
                ratio_detuning: Some(record.regime.ratio_detuning),
                regime_ok: Some(!record.regime_warning),
                norm_drift: Some(record.norm_drift),
                max_unitarity_defect: Some(record.max_unitarity_defect),
                integrator_steps: Some(record.integrator.iter().map(|d| d.steps).sum()),
                error: None,
            };
            to_csv(&[row])
        }
    }
}

fn echo_text(record: &RunRecord) -> String {
    record.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Parses `KEY=v1,v2,...` into one axis of `grid`.
pub fn apply_grid_axis(grid: &mut SweepGrid, spec: &str) -> Result<(), ConfigError> {
    let (key, values) =
        spec.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: spec.to_string() })?;
    let key = key.trim();
    let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::InvalidValue { key: key.to_string(), reason: "empty grid axis".into() });
    }
    fn parse_all<T: std::str::FromStr>(key: &str, items: &[&str]) -> Result<Vec<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        items
            .iter()
            .map(|s| s.parse::<T>().map_err(|e| ConfigError::InvalidValue { key: key.to_string(), reason: format!("`{s}`: {e}") }))
            .collect()
    }
    match key {
        "delta" => grid.delta = parse_all(key, &items)?,
        "k" => grid.k = parse_all(key, &items)?,
        "k_prime" => grid.k_prime = parse_all(key, &items)?,
        "nbar" => grid.nbar = parse_all(key, &items)?,
        "n_max" => grid.n_max = parse_all(key, &items)?,
        other => return Err(ConfigError::UnknownKey(other.to_string())),
    }
    Ok(())
}

/// Runs every grid point. Fails only if no point succeeded.
pub fn cmd_sweep(config: &RunConfig, grid: &SweepGrid) -> Result<Vec<TableRow>, CliError> {
    let records = sweep(&config.params, grid, config.model, config.mode, &config.integrator, &config.protocol_options());
    if records.is_empty() {
        return Err(CliError::Validation("empty sweep grid".into()));
    }
    let rows: Vec<TableRow> = records.iter().map(TableRow::from).collect();
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Validation(format!("all {} sweep points failed: {}", rows.len(), rows[0].error.as_deref().unwrap_or(""))));
    }
    Ok(rows)
}

pub fn render_table(rows: &[TableRow], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(rows),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), tolerance, measured, passed: measured <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub version: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Number of random `(Ω, λ)` pairs in the commutator check.
pub const COMMUTATOR_SAMPLES: usize = 100;

/// Largest `‖[H₀, H_e]‖_F` over random `Ω ∈ [0.1, 100]`, `λ ∈ [0.001, 1]`.
pub fn commutator_audit(seed: u64, samples: usize) -> Result<f64, CliError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let omega = rng.random_range(0.1..100.0);
        let lambda: f64 = rng.random_range(0.001..1.0);
        let params = SystemParams { g: (2.0 * lambda).sqrt(), delta: 1.0, k: 1, k_prime: 1, nbar: 0.0, n_max: 2 };
        worst = worst.max(commutator_norm(&h0(omega), &h_effective(&params))?);
    }
    Ok(worst)
}

/// The built-in verification battery.
pub fn cmd_validate() -> Result<ValidationSummary, CliError> {
    let mut checks = Vec::new();
    let base = SystemParams::default();

    for mode in [PrepMode::AsPublished, PrepMode::PhysicalPulse] {
        let report = verify_printed_states(&base, mode, 1e-9)?;
        for s in &report.states {
            let measured = if s.uses_frame { s.frame_error } else { s.raw_error };
            checks.push(Check::at_most(format!("{} ({mode})", s.name), measured, 1e-9));
        }
    }
    checks.push(Check::at_most("[H0,He] commutator", commutator_audit(2024, COMMUTATOR_SAMPLES)?, 1e-12));

    let cert = canonical_sequence(&base, PrepMode::PhysicalPulse)?.certificate;
    checks.push(Check::at_most("timing certificate", cert.max_deviation(), 1e-12));

    let cfg = IntegratorConfig::default();
    for (k, k_prime) in [(1, 1), (1, 2), (3, 1), (3, 2)] {
        let params = SystemParams { k, k_prime, ..base.clone() };
        let r = run_protocol(&params, Model::Effective, PrepMode::PhysicalPulse, &cfg)?;
        checks.push(Check::at_most(
            format!("effective fidelity k={k} k'={k_prime}"),
            (1.0 - r.fidelity_to_target).abs(),
            1e-9,
        ));
    }

    let r = run_protocol(&base, Model::Effective, PrepMode::PhysicalPulse, &cfg)?;
    let entropy = entanglement_entropy(&r.final_state)?;
    checks.push(Check::at_most("entanglement entropy", (entropy - 3f64.log2()).abs(), 1e-6));
    checks.push(Check::at_most("negativity", (negativity(&r.final_state)? - 1.0).abs(), 1e-6));

    let thermal: Vec<_> = [0.0, 0.5, 2.0]
        .into_iter()
        .map(|nbar| {
            let params = SystemParams { nbar, n_max: 40, ..base.clone() };
            run_protocol(&params, Model::Effective, PrepMode::PhysicalPulse, &cfg).map(|r| r.final_state)
        })
        .collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..thermal.len() {
        for j in i + 1..thermal.len() {
            worst = worst.max(trace_distance(&thermal[i], &thermal[j])?);
        }
    }
    checks.push(Check::at_most("thermal invariance", worst, 1e-9));

    let audit = SystemParams::regime_consistent(1.0, 5.0, 10.0);
    let full = run_protocol(&audit, Model::Full, PrepMode::PhysicalPulse, &cfg)?;
    checks.push(Check::at_most("unitarity audit (norm drift)", full.norm_drift, 1e-9));

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationSummary { version: crate::record::VERSION.to_string(), checks, passed })
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(rows: &[TableRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Serialize(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
