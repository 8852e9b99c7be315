//! Bounded least-squares fitting and the staged parameter extraction.

mod minimize;
mod stages;
mod synthetic;

pub use minimize::{minimize, residual_norm, Bound, FitProblem, FitResult};
pub use stages::{
    fit_cavity_stage, fit_detector_response, fit_qd_stage, fit_saturation, fit_stark_slope,
    CavityFit, DetectorFit, FitReport, QdFit, QdStageOptions, SaturationData, SaturationFit,
    SaturationWeights, SpectrumData, StarkFit,
};
pub use synthetic::{
    synthetic_detector_curve, synthetic_saturation, synthetic_spectrum, synthetic_voltage_map,
};
