pub mod fit;
pub mod g2;
pub mod hom;
pub mod spectrum;
pub mod synth;
pub mod utils;

use std::fmt::Write as _;
use std::path::Path;

use cavsps_core::qed::{Detection, PolarizationProjector};

use crate::config::RunConfig;
use crate::error::Result;

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// `H`, `V`, `none` (unpolarized) or a linear analyzer angle in degrees.
pub fn parse_projector(s: &str) -> Result<Detection, String> {
    match s.to_ascii_lowercase().as_str() {
        "h" => Ok(Detection::h()),
        "v" => Ok(Detection::v()),
        "none" => Ok(Detection::Unpolarized),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|a| a.is_finite())
            .map(|a| Detection::Projected(PolarizationProjector::from_degrees(a)))
            .ok_or_else(|| format!("expected H, V, none or an angle in degrees, got `{s}`")),
    }
}

/// `key = value ± sigma` report lines.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn value(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value:.6}");
        self
    }

    pub fn count(&mut self, key: &str, value: u64) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn estimate(&mut self, key: &str, value: f64, sigma: Option<f64>) -> &mut Self {
        match sigma {
            Some(s) => {
                let _ = writeln!(self.text, "{key} = {value:.6} ± {s:.6}");
            }
            None => {
                let _ = writeln!(self.text, "{key} = {value:.6}");
            }
        }
        self
    }

    pub fn print(&self) {
        print!("{}", self.text);
    }
}
