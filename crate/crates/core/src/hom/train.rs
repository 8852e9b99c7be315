use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::Result;

/// Rounds a delay to 1 fs so that sums and differences of table entries
/// compare exactly.
pub fn quantize(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}

/// Excitation pulses within one repetition period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrain {
    times: Vec<f64>,
    period: f64,
}

impl PulseTrain {
    pub fn new(times: Vec<f64>, period: f64) -> Result<Self> {
        ensure(period.is_finite() && period > 0.0, || {
            format!("period must be > 0, got {period}")
        })?;
        ensure(!times.is_empty(), || {
            "pulse train needs at least one pulse".into()
        })?;
        ensure(
            times
                .iter()
                .all(|t| t.is_finite() && *t >= 0.0 && *t < period),
            || format!("pulse times must lie in [0, period), got {times:?}"),
        )?;
        ensure(times.windows(2).all(|w| w[1] > w[0]), || {
            format!("pulse times must increase strictly, got {times:?}")
        })?;
        Ok(Self { times, period })
    }

    /// Two pulses 5.2 ns apart at a 12.5 ns repetition period.
    pub fn reference() -> Self {
        Self {
            times: vec![0.0, 5.2],
            period: 12.5,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `A`, `B`, … for pulse index `i`.
    pub fn label(i: usize) -> String {
        char::from_u32('A' as u32 + i as u32).map_or_else(|| format!("P{i}"), String::from)
    }
}

/// Identical lossless fiber splitters and the interferometer visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterParams {
    pub r: f64,
    pub t: f64,
    /// Mode-overlap visibility `1 − ε` of the interferometer.
    pub visibility: f64,
}

impl SplitterParams {
    pub fn new(r: f64, t: f64, visibility: f64) -> Result<Self> {
        let s = Self { r, t, visibility };
        s.validate()?;
        Ok(s)
    }

    pub fn balanced() -> Self {
        Self {
            r: 0.5,
            t: 0.5,
            visibility: 1.0,
        }
    }

    pub fn reference() -> Self {
        Self {
            r: 0.469,
            t: 0.531,
            visibility: 0.96,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            (0.0..=1.0).contains(&self.r) && (0.0..=1.0).contains(&self.t),
            || format!("R and T must be in [0, 1], got R={} T={}", self.r, self.t),
        )?;
        ensure((self.r + self.t - 1.0).abs() <= 1e-6, || {
            format!("R + T must equal 1, got {}", self.r + self.t)
        })?;
        ensure((0.0..=1.0).contains(&self.visibility), || {
            format!("visibility must be in [0, 1], got {}", self.visibility)
        })
    }
}

/// Route of a photon pair through the two interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmPath {
    FirstLong,
    BothShort,
    BothLong,
    FirstShort,
}

impl ArmPath {
    pub const ALL: [ArmPath; 4] = [
        ArmPath::FirstLong,
        ArmPath::BothShort,
        ArmPath::BothLong,
        ArmPath::FirstShort,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ArmPath::FirstLong => "first photon long arm",
            ArmPath::BothShort => "both photons short arm",
            ArmPath::BothLong => "both photons long arm",
            ArmPath::FirstShort => "first photon short arm",
        }
    }
}

/// Arrival-time differences of one photon pair for each arm path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDelays {
    /// Pulse labels, primed when the second photon is from the next period.
    pub label: String,
    pub first: usize,
    pub second: usize,
    pub next_period: bool,
    /// Emission delay before the interferometer.
    pub delay: f64,
    /// Indexed like [`ArmPath::ALL`].
    pub arrivals: [f64; 4],
}

impl PairDelays {
    pub fn arrival(&self, path: ArmPath) -> f64 {
        self.arrivals[path as usize]
    }
}

/// All photon pairs with emission delay at most one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTable {
    pub train: PulseTrain,
    pub mz_delay: f64,
    pub pairs: Vec<PairDelays>,
}

impl DelayTable {
    pub fn pair(&self, label: &str) -> Option<&PairDelays> {
        self.pairs.iter().find(|p| p.label == label)
    }
}

/// Builds the arrival-time table, sorted by decreasing pair delay (ties keep
/// the order of the first pulse).
pub fn delay_table(train: &PulseTrain, mz_delay: f64) -> Result<DelayTable> {
    ensure(mz_delay.is_finite() && mz_delay >= 0.0, || {
        format!("interferometer delay must be >= 0, got {mz_delay}")
    })?;
    let t = train.times();
    let mut pairs = Vec::new();
    let mut push = |first: usize, second: usize, next: bool, delay: f64| {
        let d = quantize(delay);
        let label = format!(
            "{}{}{}",
            PulseTrain::label(first),
            PulseTrain::label(second),
            if next { "'" } else { "" }
        );
        let arrivals = [quantize(d - mz_delay), d, d, quantize(d + mz_delay)];
        pairs.push(PairDelays {
            label,
            first,
            second,
            next_period: next,
            delay: d,
            arrivals,
        });
    };
    for i in 0..t.len() {
        for j in 0..=i {
            push(i, j, true, train.period() + t[j] - t[i]);
        }
    }
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            push(i, j, false, t[j] - t[i]);
        }
    }
    pairs.sort_by(|a, b| b.delay.total_cmp(&a.delay).then(a.first.cmp(&b.first)));
    Ok(DelayTable {
        train: train.clone(),
        mz_delay: quantize(mz_delay),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table() {
        let table = delay_table(&PulseTrain::reference(), 5.2).unwrap();
        let labels: Vec<&str> = table.pairs.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["AA'", "BB'", "BA'", "AB"]);
        assert_eq!(table.pair("AB").unwrap().arrivals, [0.0, 5.2, 5.2, 10.4]);
        assert_eq!(table.pair("BA'").unwrap().arrivals, [2.1, 7.3, 7.3, 12.5]);
        assert_eq!(table.pair("AA'").unwrap().arrivals, [7.3, 12.5, 12.5, 17.7]);
    }

    #[test]
    fn degenerate_interferometer() {
        let table = delay_table(&PulseTrain::reference(), 0.0).unwrap();
        for p in &table.pairs {
            assert!(p.arrivals.iter().all(|a| *a == p.delay));
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(PulseTrain::new(vec![0.0, 13.0], 12.5).is_err());
        assert!(PulseTrain::new(vec![5.2, 0.0], 12.5).is_err());
        assert!(delay_table(&PulseTrain::reference(), -1.0).is_err());
        assert!(SplitterParams::new(0.5, 0.6, 1.0).is_err());
        assert!(SplitterParams::new(0.469, 0.531, 1.2).is_err());
        assert!(SplitterParams::reference().validate().is_ok());
    }

    #[test]
    fn three_pulse_train_counts_pairs() {
        let train = PulseTrain::new(vec![0.0, 2.0, 5.0], 10.0).unwrap();
        let table = delay_table(&train, 2.0).unwrap();
        // n(n+1)/2 next-period pairs plus n(n-1)/2 in-period pairs.
        assert_eq!(table.pairs.len(), 9);
        assert!(table.pairs.iter().all(|p| p.delay > 0.0 && p.delay <= 10.0));
        assert!(table.pairs.windows(2).all(|w| w[0].delay >= w[1].delay));
    }
}
