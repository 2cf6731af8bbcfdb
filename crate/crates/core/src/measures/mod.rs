//! Synchronization indicators and Gaussian correlation measures.

mod quantum;
mod sync;

pub use quantum::{
    log_negativity, marginal, mutual_information, pair_entropies, physical_symplectic_spectrum,
    symplectic_spectrum, vn_entropy, CorrelationReport,
};
pub use sync::{
    auto_window, dominant_frequency, envelope_minima, envelope_peaks, pearson, pearson_window,
    scan_delay, sync_series, window_steps, zero_crossings, DelayScan, SyncSeries, AUTO_WINDOW_MAX,
    AUTO_WINDOW_MIN, MIN_WINDOW_SAMPLES,
};
