use std::path::PathBuf;

use cavsps_core::observables::{voltage_map, SpectrumModel};
use cavsps_core::qed::Detection;
use clap::{Args, ValueEnum};

use super::{load_config, parse_projector};
use crate::error::{CliError, Result};
use crate::table::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scan {
    Freq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Full master-equation steady state.
    Master,
    /// Exact weak-drive limit (fast).
    Weak,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "freq")]
    pub scan: Scan,
    /// Repeat the scan at each gate voltage of `[scan.voltage]`.
    #[arg(long)]
    pub voltage_map: bool,
    #[arg(long, value_parser = parse_projector, default_value = "none")]
    pub projector: Detection,
    #[arg(long, value_enum, default_value = "master")]
    pub model: Model,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(config: Option<&std::path::Path>, args: &SpectrumArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let params = cfg.params()?;
    let freqs = cfg.scan.frequencies();
    let model = match args.model {
        Model::Master => SpectrumModel::MasterEquation(cfg.space()?),
        Model::Weak => SpectrumModel::WeakDrive,
    };
    let table = if args.voltage_map {
        let (x, y) = cfg.stark_maps().ok_or_else(|| {
            CliError::Config("--voltage-map needs a [scan.voltage] section".into())
        })?;
        let voltages = cfg.scan.voltage.expect("checked above").voltages();
        let map = voltage_map(&params, model, &args.projector, &freqs, &voltages, &x, &y)?;
        let mut t = DataTable::new(["freq_ghz", "transmission", "voltage_v"]);
        for slice in &map.slices {
            let v = slice
                .voltage
                .expect("voltage map slices carry their voltage");
            for (f, y) in slice.freqs.iter().zip(&slice.values) {
                t.push(vec![*f, *y, v])?;
            }
        }
        t
    } else {
        let s = model.spectrum(&params, &args.projector, &freqs)?;
        let mut t = DataTable::new(["freq_ghz", "transmission"]);
        for (f, y) in s.freqs.iter().zip(&s.values) {
            t.push(vec![*f, *y])?;
        }
        t
    };
    table.emit(args.output.as_deref())
}
