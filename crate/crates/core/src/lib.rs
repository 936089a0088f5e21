//! Noise amplification of gradient descent, heavy-ball and Nesterov's
//! method on strongly convex problems.
//!
//! Quadratic problems are handled exactly through the Hessian spectrum
//! ([`variance`]); general strongly convex problems get certified upper
//! bounds ([`lmi`]). [`consensus`] applies the quadratic results to
//! averaging over torus networks and [`montecarlo`] checks everything by
//! simulation.
//!
//! ```
//! use noiseamp::{optimal_quadratic_params, variance_amplification, Algo, Spectrum};
//!
//! let s = Spectrum::new(&[1.0, 9.0]).unwrap();
//! let hb = optimal_quadratic_params(Algo::Hb, s.m(), s.l()).unwrap();
//! let report = variance_amplification(&hb.config, &s).unwrap();
//! assert!((report.rho - 0.5).abs() < 1e-12);
//! ```

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consensus;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod montecarlo;
pub mod rng;
pub mod spectrum;
pub mod tuning;
pub mod variance;

pub use consensus::{
    consensus_variance, reciprocal_sum, scaling_sweep, scaling_sweep_with, torus_eigenvalues, ConsensusReport,
    ParamsSource, Regime, ScalingRow, ScalingSweep, TorusSpec,
};
pub use dynamics::{
    convergence_rate, modal_spectral_radius, modal_system, nesterov_stable, propagate_covariance, solve_modal_lyapunov,
    Algo, AlgoConfig, ModalSystem, OutputKind, SigmaMode, StateSpace,
};
pub use error::{Error, Result};
pub use lmi::{
    assemble_lmi, contraction_bound_gd, gd_certificate, na_certificate, q_bounds, refine_bound, verify_certificate,
    CertificateVars, LmiCertificate, LmiProblem,
};
pub use montecarlo::{ensemble_variance, simulate, theory_running_average, Objective, SimResult};
pub use spectrum::Spectrum;
pub use tuning::{
    acceleration_floor, conventional_params, hb_tradeoff_margin, na_jhat_m_lower_bound, optimal_quadratic_params,
    rate_optimal_stepsize_hb, tune_constrained, TunedParams, TuningGrid, TuningResult,
};
pub use variance::{
    extreme_modal_values, hb_gd_ratio, modal_variance, na_gd_ratio_bounds, variance_amplification, variance_bounds,
    variance_via_eigenvalues, VarianceReport,
};
