use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::areas::two_photon_probability;
use super::histogram::CorrelationHistogram;
use super::train::{PulseTrain, SplitterParams};
use crate::error::ensure;
use crate::Result;

/// Periods generated from one random stream.
const BLOCK_PERIODS: usize = 4096;

/// Photon-level simulation of the two-photon interference experiment.
///
/// Every pulse carries one photon, or two with the probability that gives
/// the requested `g²(0)`. Each photon picks an arm (short with T, long with
/// R), an output port, and an exponentially distributed emission delay.
/// Coincidences between photons of different pulses that meet at the final
/// splitter are removed with the probability `2RT(1−ε)²M/(R²+T²)` that turns
/// the distinguishable coincidence rate into the interfering one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomSimulation {
    pub train: PulseTrain,
    pub mz_delay: f64,
    pub split: SplitterParams,
    pub indistinguishability: f64,
    pub g2_zero: f64,
    /// Mean emission delay after each pulse (ns).
    pub lifetime: f64,
    pub bin_width: f64,
    /// Histogram covers `±max_delay`.
    pub max_delay: f64,
}

impl HomSimulation {
    /// Defaults: 0.3 ns emission time, 20 ps bins, ±20 ns range.
    pub fn new(
        train: PulseTrain,
        mz_delay: f64,
        split: SplitterParams,
        indistinguishability: f64,
        g2_zero: f64,
    ) -> Self {
        Self {
            train,
            mz_delay,
            split,
            indistinguishability,
            g2_zero,
            lifetime: 0.3,
            bin_width: 0.02,
            max_delay: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        ensure(self.mz_delay.is_finite() && self.mz_delay >= 0.0, || {
            "interferometer delay must be >= 0".into()
        })?;
        ensure((0.0..=1.0).contains(&self.indistinguishability), || {
            "indistinguishability must be in [0, 1]".into()
        })?;
        ensure(self.lifetime.is_finite() && self.lifetime > 0.0, || {
            "lifetime must be > 0".into()
        })?;
        ensure(self.bin_width.is_finite() && self.bin_width > 0.0, || {
            "bin width must be > 0".into()
        })?;
        ensure(
            self.max_delay.is_finite() && self.max_delay >= self.bin_width,
            || "max delay must be >= bin width".into(),
        )?;
        two_photon_probability(self.g2_zero).map(|_| ())
    }

    /// Probability that an interfering coincidence is removed.
    pub fn thinning_probability(&self) -> f64 {
        let (r, t) = (self.split.r, self.split.t);
        let classical = r * r + t * t;
        if classical == 0.0 {
            return 0.0;
        }
        2.0 * r * t * self.split.visibility.powi(2) * self.indistinguishability / classical
    }
}

struct Photon {
    pulse: u64,
    emitted: f64,
    nominal_arrival: f64,
    arrival: f64,
    long: bool,
    detector2: bool,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pair_uniform(seed: u64, i: usize, j: usize) -> f64 {
    let h = splitmix(seed ^ splitmix(i as u64) ^ splitmix((j as u64).rotate_left(32) ^ 0x5555));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Runs `n_periods` repetition periods and histograms all detector-1 /
/// detector-2 photon pairs. Output depends only on the inputs and `seed`.
pub fn monte_carlo_hom(
    sim: &HomSimulation,
    n_periods: usize,
    seed: u64,
) -> Result<CorrelationHistogram> {
    sim.validate()?;
    let p2 = two_photon_probability(sim.g2_zero)?;
    let (r, t) = (sim.split.r, sim.split.t);
    let jitter = Exp::new(1.0 / sim.lifetime).expect("lifetime validated");
    let period = sim.train.period();

    let mut photons = Vec::with_capacity(n_periods * sim.train.len() * 11 / 10);
    let mut pulse = 0u64;
    for block in 0..n_periods.div_ceil(BLOCK_PERIODS) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let first = block * BLOCK_PERIODS;
        for n in first..(first + BLOCK_PERIODS).min(n_periods) {
            for &offset in sim.train.times() {
                let emitted = n as f64 * period + offset;
                let count = if rng.random::<f64>() < p2 { 2 } else { 1 };
                for _ in 0..count {
                    let long = rng.random::<f64>() < r;
                    let to_det1 = if long { r } else { t };
                    let detector2 = rng.random::<f64>() >= to_det1;
                    let nominal_arrival = emitted + if long { sim.mz_delay } else { 0.0 };
                    let arrival = nominal_arrival + jitter.sample(&mut rng);
                    photons.push(Photon {
                        pulse,
                        emitted,
                        nominal_arrival,
                        arrival,
                        long,
                        detector2,
                    });
                }
                pulse += 1;
            }
        }
    }

    let bw = sim.bin_width;
    let half_bins = (sim.max_delay / bw).round() as i64;
    let mut counts = vec![0.0; (2 * half_bins + 1) as usize];
    let reach = sim.max_delay + sim.mz_delay + 50.0 * sim.lifetime;
    let q = sim.thinning_probability();
    for i in 0..photons.len() {
        let a = &photons[i];
        for (j, b) in photons.iter().enumerate().skip(i + 1) {
            if b.emitted - a.emitted > reach {
                break;
            }
            if a.detector2 == b.detector2 {
                continue;
            }
            let interferes = a.pulse != b.pulse
                && a.long != b.long
                && (a.nominal_arrival - b.nominal_arrival).abs() < 1e-6;
            if interferes && q > 0.0 && pair_uniform(seed, i, j) < q {
                continue;
            }
            let tau = if b.detector2 {
                b.arrival - a.arrival
            } else {
                a.arrival - b.arrival
            };
            let k = (tau / bw).round() as i64;
            if k.abs() <= half_bins {
                counts[(k + half_bins) as usize] += 1.0;
            }
        }
    }
    CorrelationHistogram::uniform(-(half_bins as f64) * bw, bw, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(m: f64, g2: f64, split: SplitterParams) -> HomSimulation {
        HomSimulation::new(PulseTrain::reference(), 5.2, split, m, g2)
    }

    #[test]
    fn deterministic_for_seed() {
        let s = sim(0.9, 0.037, SplitterParams::reference());
        let a = monte_carlo_hom(&s, 5000, 11).unwrap();
        let b = monte_carlo_hom(&s, 5000, 11).unwrap();
        let c = monte_carlo_hom(&s, 5000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn perfect_interference_empties_center() {
        // Short emission time so neighbouring peaks do not reach the window.
        let s = HomSimulation {
            lifetime: 0.05,
            ..sim(1.0, 0.0, SplitterParams::balanced())
        };
        let h = monte_carlo_hom(&s, 20_000, 3).unwrap();
        assert_eq!(h.integrate(0.0, 1.0), 0.0);
        assert!(h.integrate(5.2, 1.0) > 1000.0);
    }

    #[test]
    fn distinguishable_photons_show_center_peak() {
        let s = sim(0.0, 0.0, SplitterParams::balanced());
        let h = monte_carlo_hom(&s, 20_000, 3).unwrap();
        // Expected 0.125 per period at zero delay.
        let n = h.integrate(0.0, 1.5);
        assert!((n / 20_000.0 - 0.125).abs() < 0.02, "{n}");
    }

    #[test]
    fn prefix_blocks_are_stable() {
        // The first block's photons do not depend on how many periods follow.
        let s = HomSimulation {
            max_delay: 1.0,
            ..sim(0.5, 0.1, SplitterParams::reference())
        };
        let short = monte_carlo_hom(&s, BLOCK_PERIODS, 9).unwrap();
        let long = monte_carlo_hom(&s, 2 * BLOCK_PERIODS, 9).unwrap();
        assert!(short
            .counts()
            .iter()
            .zip(long.counts())
            .all(|(a, b)| a <= b));
    }
}
