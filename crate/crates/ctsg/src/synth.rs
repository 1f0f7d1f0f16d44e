//! Synthetic-data lab: parameterized waveform series whose generating
//! factors double as ground-truth condition vectors, so controllability can
//! be checked against what was actually requested.

use ctsg_core::rng::SeedRng;
use ctsg_core::{ConditionSchema, ConditionValue, ConditionVector, Slot, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{CtsgError, Result};

pub const WAVEFORM_TOKENS: [&str; 3] = ["sine", "square", "sawtooth"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Square,
    Sawtooth,
}

impl Waveform {
    pub fn token(self) -> &'static str {
        match self {
            Waveform::Sine => "sine",
            Waveform::Square => "square",
            Waveform::Sawtooth => "sawtooth",
        }
    }

    /// Base shape at cycle position `u` (one period per unit of `u`).
    fn sample(self, u: f64) -> f64 {
        match self {
            Waveform::Sine => (2.0 * std::f64::consts::PI * u).sin(),
            Waveform::Square => {
                if (2.0 * std::f64::consts::PI * u).sin() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Sawtooth => 2.0 * (u - u.floor()) - 1.0,
        }
    }
}

/// Inclusive sampling range for one factor; `lo == hi` pins the factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRange {
    pub lo: f64,
    pub hi: f64,
}

impl FactorRange {
    pub fn fixed(v: f64) -> Self {
        FactorRange { lo: v, hi: v }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        FactorRange { lo, hi }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(CtsgError::invalid(format!(
                "factor {name}: invalid range [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut SeedRng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.uniform_in(self.lo, self.hi)
        }
    }
}

/// Generator settings. Each series draws its factors uniformly from the
/// ranges; the drawn factors are stored verbatim as the series' condition
/// vector (slots: amplitude, frequency, trend_slope, noise_level, waveform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub series_len: usize,
    pub amplitude: FactorRange,
    /// Cycles per window; at least one full cycle.
    pub frequency: FactorRange,
    /// Total rise over the window.
    pub trend_slope: FactorRange,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_level: FactorRange,
    pub waveforms: Vec<Waveform>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 256,
            series_len: 64,
            amplitude: FactorRange::new(0.5, 2.0),
            frequency: FactorRange::new(2.0, 4.0),
            trend_slope: FactorRange::fixed(0.0),
            noise_level: FactorRange::fixed(0.05),
            waveforms: vec![Waveform::Sine],
            seed: 0,
        }
    }
}

/// The condition schema every synthetic dataset uses. The waveform
/// vocabulary always lists all three tokens so datasets generated from
/// different specs stay concatenable.
pub fn synth_schema() -> ConditionSchema {
    ConditionSchema::new(vec![
        Slot::numeric("amplitude"),
        Slot::numeric("frequency"),
        Slot::numeric("trend_slope"),
        Slot::numeric("noise_level"),
        Slot::categorical("waveform", &WAVEFORM_TOKENS),
    ])
    .expect("static schema is valid")
}

/// Generate a dataset from the spec; deterministic in the seed.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(CtsgError::invalid("synth spec needs n > 0"));
    }
    if spec.series_len < 2 {
        return Err(CtsgError::invalid("synth spec needs series_len >= 2"));
    }
    if spec.waveforms.is_empty() {
        return Err(CtsgError::invalid("synth spec needs at least one waveform"));
    }
    spec.amplitude.validate("amplitude")?;
    spec.frequency.validate("frequency")?;
    spec.trend_slope.validate("trend_slope")?;
    spec.noise_level.validate("noise_level")?;
    if spec.frequency.lo < 1.0 {
        return Err(CtsgError::invalid(
            "frequency must complete at least one cycle per window",
        ));
    }
    if spec.noise_level.lo < 0.0 {
        return Err(CtsgError::invalid("noise_level cannot be negative"));
    }

    let schema = synth_schema();
    let mut rng = SeedRng::new(spec.seed);
    let t_len = spec.series_len;
    let mut series = Vec::with_capacity(spec.n);
    let mut conditions = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let amplitude = spec.amplitude.draw(&mut rng);
        let frequency = spec.frequency.draw(&mut rng);
        let slope = spec.trend_slope.draw(&mut rng);
        let noise = spec.noise_level.draw(&mut rng);
        let waveform = spec.waveforms[rng.index(spec.waveforms.len())];
        let values: Vec<f64> = (0..t_len)
            .map(|t| {
                let u = frequency * t as f64 / t_len as f64;
                let trend = slope * t as f64 / (t_len - 1) as f64;
                amplitude * waveform.sample(u) + trend + noise * rng.normal()
            })
            .collect();
        series.push(TimeSeries::univariate(&values).map_err(CtsgError::Core)?);
        conditions.push(ConditionVector::new(vec![
            ConditionValue::Numeric(amplitude),
            ConditionValue::Numeric(frequency),
            ConditionValue::Numeric(slope),
            ConditionValue::Numeric(noise),
            ConditionValue::Category(waveform.token().to_string()),
        ]));
    }
    Dataset::new(series, conditions, schema)
}

/// Peak-to-peak spread of one channel. The measurement half of
/// amplitude-controllability checks (the labs pin the trend slope to zero,
/// so the spread is twice the waveform amplitude).
pub fn peak_to_peak(x: &TimeSeries, channel: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in 0..x.len() {
        let v = x.value(t, channel);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stored_conditions_equal_drawn_factors() {
        let spec = SynthSpec {
            n: 16,
            amplitude: FactorRange::fixed(1.25),
            frequency: FactorRange::fixed(3.0),
            trend_slope: FactorRange::fixed(0.5),
            noise_level: FactorRange::fixed(0.0),
            waveforms: vec![Waveform::Square],
            ..SynthSpec::default()
        };
        let dataset = synth_generate(&spec).unwrap();
        for c in dataset.conditions() {
            assert_eq!(c.value(0).as_numeric(), Some(1.25));
            assert_eq!(c.value(1).as_numeric(), Some(3.0));
            assert_eq!(c.value(2).as_numeric(), Some(0.5));
            assert_eq!(c.value(3).as_numeric(), Some(0.0));
            assert_eq!(c.value(4).as_category(), Some("square"));
        }
    }

    #[test]
    fn clean_sine_peak_to_peak_matches_amplitude() {
        let spec = SynthSpec {
            n: 8,
            series_len: 64,
            amplitude: FactorRange::fixed(2.0),
            frequency: FactorRange::fixed(2.0),
            trend_slope: FactorRange::fixed(0.0),
            noise_level: FactorRange::fixed(0.0),
            waveforms: vec![Waveform::Sine],
            seed: 4,
        };
        let dataset = synth_generate(&spec).unwrap();
        for s in dataset.series() {
            let p2p = peak_to_peak(s, 0);
            assert!((p2p - 4.0).abs() < 0.05 * 4.0, "p2p {p2p}");
        }
    }

    #[test]
    fn same_seed_reproduces_dataset() {
        let spec = SynthSpec::default();
        assert_eq!(synth_generate(&spec).unwrap(), synth_generate(&spec).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let a = synth_generate(&SynthSpec::default()).unwrap();
        let b = synth_generate(&SynthSpec {
            seed: 1,
            ..SynthSpec::default()
        })
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn trend_shows_up_in_the_series() {
        let spec = SynthSpec {
            n: 4,
            series_len: 32,
            amplitude: FactorRange::fixed(0.0),
            trend_slope: FactorRange::fixed(3.0),
            noise_level: FactorRange::fixed(0.0),
            ..SynthSpec::default()
        };
        let dataset = synth_generate(&spec).unwrap();
        let s = &dataset.series()[0];
        assert!((s.value(0, 0) - 0.0).abs() < 1e-12);
        assert!((s.value(31, 0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(synth_generate(&SynthSpec {
            n: 0,
            ..SynthSpec::default()
        })
        .is_err());
        assert!(synth_generate(&SynthSpec {
            frequency: FactorRange::fixed(0.5),
            ..SynthSpec::default()
        })
        .is_err());
        assert!(synth_generate(&SynthSpec {
            waveforms: vec![],
            ..SynthSpec::default()
        })
        .is_err());
    }

    #[test]
    fn datasets_from_different_specs_concatenate() {
        let a = synth_generate(&SynthSpec {
            n: 4,
            amplitude: FactorRange::fixed(0.5),
            ..SynthSpec::default()
        })
        .unwrap();
        let b = synth_generate(&SynthSpec {
            n: 4,
            amplitude: FactorRange::fixed(2.0),
            seed: 9,
            ..SynthSpec::default()
        })
        .unwrap();
        let all = Dataset::concat(&[a, b]).unwrap();
        assert_eq!(all.len(), 8);
    }
}
