//! Closed-form predictions — fluid queue growth along tandems, achievable
//! rates, decoding probability, error exponents and the Poisson tail bound —
//! and estimators that fit exponents to simulated failure rates.

mod exponent;
mod fluid;
mod stats;

pub use exponent::{
    arrival_log_mgf, ceil_count, decode_success_probability, error_exponent, poisson_cdf,
    poisson_tail_lower_bound, ExponentCurve, ExponentVariant,
};
pub use fluid::{
    achievable_rate_tandem, fluid_queue_rates, fluid_throughput, innovation_factor,
    FluidPrediction,
};
pub use stats::{fit_empirical_exponent, wilson_interval, ErrorEstimate, ExponentFit, Z95};
