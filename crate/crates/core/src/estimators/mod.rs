//! Spectral density operator estimation: fDFT, periodogram, lag-window and
//! smoothed-periodogram estimates, long-run covariance, the window library
//! and the checker for the weight conditions.

mod bandwidth;
mod sdo;
mod weights;
mod window;

pub use bandwidth::BandwidthRule;
pub(crate) use sdo::fdft_values;
pub use sdo::{
    fdft, fourier_frequencies, lag_window_sdo, long_run_cov, periodogram, smoothed_periodogram_sdo, Centering,
    EstimationConfig, FrequencyDiagnostics, LagCovariances, SpecEstimate,
};
pub use weights::{check_weight_conditions, weight_row, WeightDiagnostics, WeightRow, WeightVerdict, BAND_I, DECAY_SLOPE};
pub use window::{window_library, Window, WindowKind};
