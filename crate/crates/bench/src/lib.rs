//! Fixtures shared by the benchmarks.

use squid_qed::protocol::{prepare_initial, PrepMode};
use squid_qed::{HilbertLayout, PureState, SystemParams};

/// Deep-regime point with `2Ω/δ ≥ 20`.
pub fn deep_params(delta: f64, n_max: usize) -> SystemParams {
    SystemParams { n_max, ..SystemParams::regime_consistent(1.0, delta, 20.0) }
}

/// Prepared SQUID pair with the cavity in vacuum.
pub fn composite_start(n_max: usize) -> PureState {
    let vacuum = PureState::basis(HilbertLayout::cavity(n_max).expect("n_max >= 2"), 0).expect("index 0");
    prepare_initial(PrepMode::PhysicalPulse)
        .tensor(&vacuum, HilbertLayout::composite(n_max).expect("n_max >= 2"))
        .expect("matching layouts")
}
