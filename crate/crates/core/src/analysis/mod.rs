//! Analysis instruments: mutual-information measurement, EXIT chart
//! generation, and Gaussian-approximation density evolution with threshold
//! bisection.

pub mod de;
pub mod exit;
pub mod info;

pub use de::{de_equalizer_stage, de_ldpc_stage, de_ldpc_stage_resumed, find_threshold, DeOptions, ThresholdResult};
pub use exit::{
    trace_exit_equalizer, trace_exit_ldpc, ComponentTag, ExitCurve, ExitPoint, ExitTraceOptions,
};
pub use info::{
    blind_mi_calibrated,
    blind_mi_surrogate, j_function, j_inverse, measure_mi, phi, phi_inverse, synth_prior_llrs,
    synth_prior_llrs_mean, synth_priors, MiEstimator,
};
