//! Measurable quantities derived from the cavity-QED model.

mod correlation;
mod detector;
mod saturation;
mod spectrum;

pub use correlation::{g2_cw, CorrelationCurve};
pub use detector::{detector_convolve, DetectorResponse};
pub use saturation::{
    count_rate_model, g2_mixture, g2_power_curve, mixture_curve, SaturationModel,
};
pub use spectrum::{
    empty_cavity_spectrum, transmission_spectrum, voltage_map, weak_drive_spectrum, Spectrum,
    SpectrumModel, VoltageMap,
};
