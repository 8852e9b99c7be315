//! Pulsed two-photon interference analysis with an unbalanced Mach-Zehnder
//! interferometer.
//!
//! Conventions: the first splitter transmits (T) into the short arm and
//! reflects (R) into the long arm, which is delayed by the interferometer
//! delay. At the final splitter a long-arm photon reaches detector 1 with
//! probability R and a short-arm photon with probability T. Delays are
//! signed, `τ = t(detector 2) − t(detector 1)`.

mod areas;
mod histogram;
mod monte_carlo;
mod peaks;
mod train;

pub use areas::{
    extract_indistinguishability, extract_with_uncertainty, predict_peak_areas,
    two_photon_probability, Estimate, InputUncertainties, PeakAreas,
};
pub use histogram::{default_window, pulsed_g2_from_histogram, CorrelationHistogram};
pub use monte_carlo::{monte_carlo_hom, HomSimulation};
pub use peaks::{fit_double_exponential_peaks, nnls, PeakFit};
pub use train::{
    delay_table, quantize, ArmPath, DelayTable, PairDelays, PulseTrain, SplitterParams,
};
