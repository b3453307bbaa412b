//! Input encodings: analog intensities in `[0, 1]` to spike rasters or a
//! constant drive.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// One spike whose delay shrinks with intensity.
    SingleDelay,
    /// The single-delay spike followed by a train with the same period.
    TrainDelay,
    /// Independent Bernoulli spike per step with probability equal to the intensity.
    ProbabilisticRate,
    /// No spikes: the intensity is applied as a constant drive every step.
    Constant,
}

impl Encoding {
    pub const ALL: [Encoding; 4] = [
        Encoding::SingleDelay,
        Encoding::TrainDelay,
        Encoding::ProbabilisticRate,
        Encoding::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Encoding::SingleDelay => "single-delay",
            Encoding::TrainDelay => "train-delay",
            Encoding::ProbabilisticRate => "probabilistic-rate",
            Encoding::Constant => "constant",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Encoding::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown encoding `{s}`")))
    }
}

/// Encoding variant, window length and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    variant: Encoding,
    steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "unit_gain")]
    gain: f64,
}

fn unit_gain() -> f64 {
    1.0
}

impl EncoderSpec {
    pub fn new(variant: Encoding, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("encoding window must be at least one step".into()));
        }
        Ok(Self {
            variant,
            steps,
            seed: 0,
            gain: 1.0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Gain of the constant drive; ignored by the spiking encodings.
    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    /// Named presets: `single`, `train8`, `train24`, `prob`, `const`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "single" => Self::new(Encoding::SingleDelay, 8),
            "train8" => Self::new(Encoding::TrainDelay, 8),
            "train24" => Self::new(Encoding::TrainDelay, 24),
            "prob" => Self::new(Encoding::ProbabilisticRate, 8),
            "const" => Self::new(Encoding::Constant, 8),
            other => Err(Error::Domain(format!("unknown encoder preset `{other}`"))),
        }
    }

    pub fn variant(&self) -> Encoding {
        self.variant
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Generator for sample `index`: independent streams per sample under one seed.
    pub fn sample_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Encodes `x`, drawing randomness only for the probabilistic variant.
    pub fn encode<S: Scalar, R: Rng + ?Sized>(&self, x: &[S], rng: &mut R) -> Result<EncodedInput<S>> {
        Ok(match self.variant {
            Encoding::SingleDelay => EncodedInput::Raster(encode_single_delay(x, self)?),
            Encoding::TrainDelay => EncodedInput::Raster(encode_train_delay(x, self)?),
            Encoding::ProbabilisticRate => EncodedInput::Raster(encode_prob_rate(x, self, rng)?),
            Encoding::Constant => EncodedInput::Drive(encode_constant(x, self)?),
        })
    }
}

/// Result of encoding one input vector.
#[derive(Debug, Clone, PartialEq)]
pub enum EncodedInput<S> {
    Raster(SpikeRaster),
    Drive(Vec<S>),
}

impl<S: Scalar> EncodedInput<S> {
    pub fn width(&self) -> usize {
        match self {
            EncodedInput::Raster(r) => r.neurons(),
            EncodedInput::Drive(d) => d.len(),
        }
    }
}

fn check_unit_interval<S: Scalar>(x: &[S]) -> Result<()> {
    match x.iter().position(|&v| !(v >= S::zero() && v <= S::one())) {
        Some(i) => Err(Error::Domain(format!("input {i} = {} lies outside [0, 1]", x[i]))),
        None => Ok(()),
    }
}

fn expect_variant(spec: &EncoderSpec, variant: Encoding) -> Result<()> {
    if spec.variant == variant {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "encoder spec is {}, expected {variant}",
            spec.variant
        )))
    }
}

/// `floor((1 - x) (T - 1))`.
fn delay_for<S: Scalar>(x: S, steps: usize) -> usize {
    let d = ((S::one() - x) * S::from_usize_lossy(steps - 1)).floor();
    d.to_usize().unwrap_or(0).min(steps - 1)
}

pub fn encode_single_delay<S: Scalar>(x: &[S], spec: &EncoderSpec) -> Result<SpikeRaster> {
    expect_variant(spec, Encoding::SingleDelay)?;
    check_unit_interval(x)?;
    let mut raster = SpikeRaster::zeros(spec.steps, x.len());
    for (i, &xi) in x.iter().enumerate() {
        if xi > S::zero() {
            raster.set(delay_for(xi, spec.steps), i, true);
        }
    }
    Ok(raster)
}

pub fn encode_train_delay<S: Scalar>(x: &[S], spec: &EncoderSpec) -> Result<SpikeRaster> {
    expect_variant(spec, Encoding::TrainDelay)?;
    check_unit_interval(x)?;
    let mut raster = SpikeRaster::zeros(spec.steps, x.len());
    for (i, &xi) in x.iter().enumerate() {
        if xi > S::zero() {
            let period = delay_for(xi, spec.steps).max(1);
            for n in (period..spec.steps).step_by(period) {
                raster.set(n, i, true);
            }
        }
    }
    Ok(raster)
}

pub fn encode_prob_rate<S: Scalar, R: Rng + ?Sized>(x: &[S], spec: &EncoderSpec, rng: &mut R) -> Result<SpikeRaster> {
    expect_variant(spec, Encoding::ProbabilisticRate)?;
    check_unit_interval(x)?;
    let mut raster = SpikeRaster::zeros(spec.steps, x.len());
    let probs: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    for n in 0..spec.steps {
        for (i, &p) in probs.iter().enumerate() {
            // Zero and one are exact so that blank pixels never fire.
            let spike = p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p);
            raster.set(n, i, spike);
        }
    }
    Ok(raster)
}

pub fn encode_constant<S: Scalar>(x: &[S], spec: &EncoderSpec) -> Result<Vec<S>> {
    expect_variant(spec, Encoding::Constant)?;
    let gain = S::lit(spec.gain);
    Ok(x.iter().map(|&v| v * gain).collect())
}

/// Maps raw 8-bit pixels onto `[0, 1]`.
pub fn normalize_pixels<S: Scalar>(pixels: &[u8]) -> Vec<S> {
    let scale = S::lit(1.0 / 255.0);
    pixels.iter().map(|&p| S::from_u8(p).expect("u8 fits") * scale).collect()
}
