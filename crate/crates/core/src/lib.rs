//! Simulation and analysis toolkit for energy-time-entangled photon pairs
//! passing through a pair of unbalanced (Franson) interferometers, with an
//! ultrafast optical-gate detection model.
//!
//! The model is a correlated two-dimensional Gaussian joint spectral
//! amplitude; everything downstream (temporal intensities, interference
//! rates, visibilities, Bell correlations) follows from it in closed form,
//! and the numeric oracles in the test suite hold the closed forms to the
//! defining integrals.

pub mod bell;
pub mod biphoton;
pub mod detector;
pub mod error;
pub mod fit;
pub mod franson;
pub mod grid;
pub mod polarization;
pub mod units;

pub use bell::{
    bell_result_from_counts, bell_result_from_records, chsh_correlation, chsh_parameter,
    table2_counts, BellResult,
};
pub use biphoton::{table1_spectral_state, GaussianBiphoton, WidthSummary};
pub use detector::{
    background_visibility, bell_experiment, convolve_map, expected_scan, gated_coincidence_rate,
    gated_singles_parts, pair_rate_scale, phase_fringe_scan, read_count_records, sample_counts,
    source_peak_rate, write_count_records, CountModel, CountRecord, ResponseModel, ScanKind,
    BELL_PHASES_I, BELL_PHASES_S, COUNT_RECORD_HEADER,
};
pub use error::{Error, Result};
pub use fit::{
    deconvolve_covariance, deconvolve_width, diagonal_widths, fit_fringe, fit_gaussian_1d,
    fit_gaussian_2d, heralded_widths, FringeFit, Gaussian1DFit, GaussianFit2D,
};
pub use franson::{
    coincidence_rate, damping_factors, jsa_after, jsi_after, jti_after, predicted_visibility,
    selected_rates, singles_rate, temporal_marginal_after, FransonSettings, InterferometerArm,
    PathTerm, SelectedRates, Side,
};
pub use grid::{Axis, Histogram2D};
pub use polarization::{
    arm_equivalence_check, hwp_unitary, qwp_matrix, simulate_arm, simulated_fringe, JonesVector,
    TimeBinPolState,
};
pub use units::{angfreq_to_wavelength, wavelength_to_angfreq, C_NM_PER_PS};
