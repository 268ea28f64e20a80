//! Numerical toolkit for the Ruelle transfer operator on one-sided shift
//! spaces M^N over a finite (or quadrature-discretized) alphabet M.
//!
//! The operator acts on observables by averaging over preimages of the shift,
//!
//! ```text
//! (L_f phi)(x) = sum_a w_a * exp(f(a.x)) * phi(a.x)
//! ```
//!
//! where `a.x` prepends the symbol `a` and `w_a` are a priori weights. From
//! this single object the crate computes, at desk scale:
//!
//! * topological pressure via the limit `p(f) = lim (1/n) log L_f^n(1)(s^n x)`
//!   ([`transfer::pressure_trace`]),
//! * Ruelle-Perron-Frobenius eigendata `(lambda, h, nu)` for finite-memory
//!   potentials ([`transfer::rpf_solve`]),
//! * specification kernels `K_n(phi, x)` with their exact compatibility (DLR)
//!   and properness identities ([`kernels`]),
//! * uniqueness and phase-transition diagnostics: Bowen constants, strong
//!   non-nullness traces, boundary-condition gaps ([`analysis`]),
//! * equilibrium states of truncated potentials and the variational entropy
//!   functional ([`analysis::equilibrium_pipeline`], [`analysis::entropy_estimate`]).
//!
//! Everything that is an identity at finite size (kernel compatibility,
//! properness, duality) is verified to floating-point precision; everything
//! that is a limit (pressure, thermodynamic gaps, strong-non-null failure) is
//! reported as a finite trace with an explicit trend verdict, never as a bare
//! asymptotic claim.

pub mod analysis;
pub mod cli;
pub mod configuration;
pub mod error;
pub mod kernels;
pub mod potential;
pub mod space;
pub mod transfer;
pub mod util;

pub use analysis::{
    BowenEstimate, BowenVerdict, EntropyEstimate, EquilibriumStage, LimsupReport,
    LipschitzReport, MarginalMeasure, PhaseGapTrace, XyReport,
};
pub use configuration::{Configuration, CoordView, Word};
pub use error::{Result, RuelleError};
pub use kernels::{
    CylinderSet, KernelMethod, KernelOptions, KernelValue, Observable, OscillationTrace,
    ProbeEntry, SamplingPlan, SnnTrace, UniquenessReport,
};
pub use potential::{Memory, Potential};
pub use space::{StateSpace, Weighting};
pub use transfer::{CylinderFunction, PressureTrace, RpfSolution};
