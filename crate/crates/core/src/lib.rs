//! Disordered discrete-time quantum walks on a finite chain.
//!
//! The walker lives on sites `0..=N+1`. The two end sites hold total-reflection
//! coins, the `N` bulk sites hold coin angles `θ_n = θ̃ + δ_n`. The crate covers
//! the one-step unitary, the 2×2 transfer-matrix description of its
//! eigenstates, node counting of quasi-energies, the special modes at `0`,
//! `±π/2` and `π`, adiabatic preparation of the zero-mode and ensemble
//! statistics of zero-mode correlations.

pub mod adiabatic;
pub mod disorder;
pub mod ensemble;
pub mod error;
pub mod modes;
pub mod stats;
pub mod transfer;
pub mod walk;
pub mod winding;

pub use adiabatic::{
    evolve_protocol, fidelity_ensemble, lambda_for_duration, FidelityStep, FidelityTrace, ProtocolKind, ProtocolRun,
    ProtocolSpec, RealizationSummary,
};
pub use disorder::{draw_profile, AngleProfile, BoundaryKind, DisorderSpec, Reflector};
pub use ensemble::{
    bootstrap_slope_stderr, compare_sources, correlation_curve, fit_power_law, site_probability, CorrelationCurve,
    CorrelationSource, FitWindow, PowerLawFit, ProbabilityConvention, Schedule, SourceComparison,
};
pub use error::{Error, Result};
pub use modes::{half_pi_mode_exists, half_pi_product, verify_mode, ModeExistence, Parity};
pub use transfer::{
    basis_transform_check, build_zero_mode, closure_check, lyapunov, transfer_at, zero_mode_product, ClosureMismatch,
    TransferMatrix, ZeroModeProduct,
};
pub use walk::{WalkOperator, WalkState};
pub use winding::{
    count_between, dos_estimate, dos_fit, evolve_phase, find_quasienergy, gap_above_zero, integrated_dos,
    sigma_squared, CountResult, DosEstimate, DosFit, WindingTrace,
};

/// Crate version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
