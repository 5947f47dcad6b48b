//! Arbitrage thresholds, exhaustive certificates and the arbitrage-point census.

mod census;
mod gamma;
mod thresholds;
mod verify;

pub use census::{
    census_exhaustive, census_monte_carlo, chebyshev_ratio_bound, excess_variance, nu_h_estimate, CensusMethod,
    CensusResult, NuEstimate, MAX_EXHAUSTIVE_SIGNS, MIN_MC_SAMPLES,
};
pub use gamma::{
    a_gamma, gamma_constants, lambda_psi, psi_boundary_enumeration, psi_plan, GammaConstants, PsiBoundary, PsiPlan,
    PsiThreshold,
};
pub use thresholds::{exact_one_step_critical, find_n_h, lambda_phi, lower_bound_lowbd, theta, NhReport};
pub use verify::{
    verify_arbitrage_exhaustive, verify_with, ArbitrageCertificate, Dyadic, PathClass, VerifyOptions, TIE_TOL,
};
