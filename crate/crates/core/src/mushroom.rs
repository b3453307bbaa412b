//! Fan-out/fan-in sparse coding after the insect mushroom body.
//!
//! Inputs project onto `N` Kenyon cells (KCs), each reading `n_c` random
//! inputs through identical fixed weights. A single inhibitory neuron sums KC
//! spikes and feeds back a negative drive to every KC one step later. Only the
//! KC to output (MBON) readout is plastic.
//!
//! Two regimes are supported. [`Regime::Rate`] uses non-spiking KCs: one step
//! of the simplified update and the surrogate activation, so each KC is a
//! sigmoid of its summed input. [`Regime::Spiking`] integrates the full model
//! over an input raster and hands the KC raster to a spiking readout.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{normalize_pixels, EncodedInput, EncoderSpec};
use crate::error::{check_len, Error, Result};
use crate::network::{Layer, NetworkTopology};
use crate::neuron::{heaviside, Dynamics, NeuronParams};
use crate::raster::SpikeRaster;
use crate::scalar::{logistic, Scalar};
use crate::training::{argmax_lowest, init_weights, threshold_drive, train, EncodedDataset, SampleSource, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Rate,
    Spiking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InhibitionConfig {
    pub enabled: bool,
    /// KC to inhibitory weight is `alpha / N`.
    pub alpha: f64,
    /// Inhibitory to KC weight is `-gain`.
    pub gain: f64,
    pub tau_m: f64,
}

impl Default for InhibitionConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: 30.0,
            gain: 2.0,
            tau_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrentConfig {
    pub enabled: bool,
    /// Presynaptic KCs per KC.
    pub inputs: usize,
    pub weight: f64,
}

impl Default for RecurrentConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            inputs: 10,
            weight: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MushroomBodyConfig {
    pub kenyon_cells: usize,
    pub inputs_per_kc: usize,
    pub kc_tau: f64,
    pub kc_beta: f64,
    pub kc_threshold: f64,
    pub inhibition: InhibitionConfig,
    pub recurrent: RecurrentConfig,
    /// Fixed fan-out weight; calibrated from a probe when absent.
    pub fanout_weight: Option<f64>,
    /// Mean KC activity the fan-out weight is calibrated to.
    pub kc_activity: f64,
    /// Spiking regime: the readout sees KC rates as constant drive instead of the raster.
    pub rate_readout: bool,
    pub outputs: usize,
    pub mbon_tau: f64,
    pub mbon_beta: f64,
    pub seed: u64,
}

impl Default for MushroomBodyConfig {
    fn default() -> Self {
        Self {
            kenyon_cells: 1000,
            inputs_per_kc: 70,
            kc_tau: 2.0,
            kc_beta: 25.0,
            kc_threshold: 1.0,
            inhibition: InhibitionConfig::default(),
            recurrent: RecurrentConfig::default(),
            fanout_weight: None,
            kc_activity: 0.1,
            rate_readout: true,
            outputs: 10,
            mbon_tau: 2.0,
            mbon_beta: 25.0,
            seed: 0,
        }
    }
}

/// Fixed fan-out, inhibition and optional KC recurrence, plus the plastic readout.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct MushroomBodyTopology<S> {
    regime: Regime,
    input_dim: usize,
    /// Sorted input indices read by each KC.
    fanout: Vec<Vec<u32>>,
    fanout_weight: S,
    kc_params: NeuronParams<S>,
    inhibition: Option<Inhibition<S>>,
    /// Rate-regime inhibition: KC drive is divided by the mean input activity.
    divisive: bool,
    rate_readout: bool,
    /// Presynaptic KCs of each KC, delay one step.
    recurrent: Vec<Vec<u32>>,
    recurrent_weight: S,
    readout: NetworkTopology<S>,
    #[serde(skip)]
    by_input: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Inhibition<S> {
    pub params: NeuronParams<S>,
    pub weight_in: S,
    pub weight_out: S,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct RawTopology<S> {
    regime: Regime,
    input_dim: usize,
    fanout: Vec<Vec<u32>>,
    fanout_weight: S,
    kc_params: NeuronParams<S>,
    inhibition: Option<Inhibition<S>>,
    divisive: bool,
    rate_readout: bool,
    recurrent: Vec<Vec<u32>>,
    recurrent_weight: S,
    readout: NetworkTopology<S>,
}

impl<'de, S: Scalar> Deserialize<'de> for MushroomBodyTopology<S> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = RawTopology::<S>::deserialize(de)?;
        let n = r.fanout.len();
        for (k, cols) in r.fanout.iter().enumerate() {
            if cols.iter().any(|&j| j as usize >= r.input_dim) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(serde::de::Error::custom(format!("fanout of KC {k} is not a sorted set of inputs")));
            }
        }
        if r.recurrent.len() != n && !r.recurrent.is_empty() {
            return Err(serde::de::Error::custom("recurrent lists do not match the KC count"));
        }
        if r.readout.input_size() != n {
            return Err(serde::de::Error::custom("readout input size does not match the KC count"));
        }
        let by_input = invert(&r.fanout, r.input_dim);
        Ok(Self {
            regime: r.regime,
            input_dim: r.input_dim,
            fanout: r.fanout,
            fanout_weight: r.fanout_weight,
            kc_params: r.kc_params,
            inhibition: r.inhibition,
            divisive: r.divisive,
            rate_readout: r.rate_readout,
            recurrent: r.recurrent,
            recurrent_weight: r.recurrent_weight,
            readout: r.readout,
            by_input,
        })
    }
}

fn mean_activity<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::zero(), |a, &b| a + b) / S::from_usize_lossy(x.len().max(1))
}

fn invert(fanout: &[Vec<u32>], inputs: usize) -> Vec<Vec<u32>> {
    let mut by_input = vec![Vec::new(); inputs];
    for (k, cols) in fanout.iter().enumerate() {
        for &j in cols {
            by_input[j as usize].push(k as u32);
        }
    }
    by_input
}

fn sorted_sample(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<u32> {
    let mut v: Vec<u32> = sample(rng, n, k).into_iter().map(|j| j as u32).collect();
    v.sort_unstable();
    v
}

/// Samples a mushroom body. The readout starts with small uniform weights and
/// `v_ext` at the threshold drive for `steps` steps.
pub fn build_mb<S: Scalar>(input_dim: usize, config: &MushroomBodyConfig, regime: Regime, steps: usize) -> Result<MushroomBodyTopology<S>> {
    let n = config.kenyon_cells;
    let nc = config.inputs_per_kc;
    if n == 0 {
        return Err(Error::Domain("at least one Kenyon cell is needed".into()));
    }
    if nc == 0 || nc > input_dim {
        return Err(Error::Domain(format!("n_c = {nc} must lie in 1..={input_dim}")));
    }
    if config.outputs == 0 {
        return Err(Error::Domain("at least one output neuron is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fanout: Vec<Vec<u32>> = (0..n).map(|_| sorted_sample(&mut rng, input_dim, nc)).collect();
    let recurrent = if config.recurrent.enabled {
        let r = config.recurrent.inputs.min(n.saturating_sub(1));
        (0..n)
            .map(|k| {
                // Sample among the other KCs, then shift indices past `k`.
                let mut v: Vec<u32> = sorted_sample(&mut rng, n - 1, r);
                for x in &mut v {
                    if *x as usize >= k {
                        *x += 1;
                    }
                }
                v
            })
            .collect()
    } else {
        Vec::new()
    };

    let kc_params = NeuronParams::new(S::lit(config.kc_tau), S::lit(config.kc_threshold), S::lit(config.kc_beta))?;
    let inhibition = if config.inhibition.enabled && regime == Regime::Spiking {
        Some(Inhibition {
            params: NeuronParams::with_tau(S::lit(config.inhibition.tau_m))?,
            weight_in: S::lit(config.inhibition.alpha / n as f64),
            weight_out: S::lit(-config.inhibition.gain),
        })
    } else {
        None
    };
    let mbon_params = NeuronParams::new(S::lit(config.mbon_tau), S::one(), S::lit(config.mbon_beta))?;
    let dynamics = match regime {
        Regime::Rate => Dynamics::Simplified,
        Regime::Spiking => Dynamics::Full,
    };
    let steps = match regime {
        Regime::Rate => 1,
        Regime::Spiking => steps,
    };
    let w = init_weights(n, config.outputs, &mut rng);
    let mut readout = NetworkTopology::feedforward(n, Layer::new(config.outputs, mbon_params, dynamics), w)?;
    readout.projection_synapses_mut(0).v_ext_mut().fill(threshold_drive(&mbon_params, steps));

    let by_input = invert(&fanout, input_dim);
    Ok(MushroomBodyTopology {
        regime,
        input_dim,
        fanout,
        fanout_weight: S::lit(config.fanout_weight.unwrap_or(1.0)),
        kc_params,
        inhibition,
        divisive: config.inhibition.enabled && regime == Regime::Rate,
        rate_readout: config.rate_readout,
        recurrent,
        recurrent_weight: S::lit(config.recurrent.weight),
        readout,
        by_input,
    })
}

/// KC activity over one presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct KcRun {
    pub kc: SpikeRaster,
    /// Inhibitory neuron spikes, one per step.
    pub inhibitory: Vec<bool>,
}

impl<S: Scalar> MushroomBodyTopology<S> {
    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn kenyon_cells(&self) -> usize {
        self.fanout.len()
    }

    pub fn fanout(&self) -> &[Vec<u32>] {
        &self.fanout
    }

    pub fn fanout_weight(&self) -> S {
        self.fanout_weight
    }

    pub fn set_fanout_weight(&mut self, w: S) {
        self.fanout_weight = w;
    }

    pub fn inhibition(&self) -> Option<&Inhibition<S>> {
        self.inhibition.as_ref()
    }

    /// Switches the inhibitory neuron off, for comparisons.
    pub fn without_inhibition(&self) -> Self {
        Self {
            inhibition: None,
            divisive: false,
            ..self.clone()
        }
    }

    pub fn readout(&self) -> &NetworkTopology<S> {
        &self.readout
    }

    pub fn readout_mut(&mut self) -> &mut NetworkTopology<S> {
        &mut self.readout
    }

    pub fn set_readout(&mut self, readout: NetworkTopology<S>) -> Result<()> {
        check_len("readout input size", self.kenyon_cells(), readout.input_size())?;
        self.readout = readout;
        Ok(())
    }

    /// Hash of everything that must stay fixed during training.
    pub fn frozen_checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.fanout.hash(&mut h);
        self.recurrent.hash(&mut h);
        self.fanout_weight.as_f64().to_bits().hash(&mut h);
        self.recurrent_weight.as_f64().to_bits().hash(&mut h);
        self.divisive.hash(&mut h);
        if let Some(inh) = &self.inhibition {
            inh.weight_in.as_f64().to_bits().hash(&mut h);
            inh.weight_out.as_f64().to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Summed fan-out input of every KC for one input vector.
    fn fanout_drive(&self, x: &[S], drive: &mut [S]) {
        for (j, &a) in x.iter().enumerate() {
            if a != S::zero() {
                let add = a * self.fanout_weight;
                for &k in &self.by_input[j] {
                    drive[k as usize] += add;
                }
            }
        }
    }

    /// Non-spiking KC activations `sigma(beta ((1 - decay) xi - v0))`, with the
    /// drive divided by the mean input when rate inhibition is on.
    pub fn kc_features(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("input width", self.input_dim, x.len())?;
        let mut drive = vec![S::zero(); self.kenyon_cells()];
        self.fanout_drive(x, &mut drive);
        if self.divisive {
            let m = mean_activity(x);
            if m > S::zero() {
                for d in &mut drive {
                    *d /= m;
                }
            }
        }
        let p = &self.kc_params;
        Ok(drive
            .into_iter()
            .map(|xi| {
                let v = Dynamics::Simplified.update(S::zero(), S::zero(), xi, p);
                logistic(p.beta() * (v - p.v0()))
            })
            .collect())
    }

    /// Spiking KC response to an input raster.
    pub fn forward(&self, input: &SpikeRaster) -> Result<KcRun> {
        check_len("input width", self.input_dim, input.neurons())?;
        let n_kc = self.kenyon_cells();
        let steps = input.steps();
        let p = &self.kc_params;
        let mut kc = SpikeRaster::zeros(steps, n_kc);
        let mut inhibitory = vec![false; steps];
        let mut v = vec![S::zero(); n_kc];
        let mut s_prev = vec![false; n_kc];
        let (mut v_inh, mut s_inh) = (S::zero(), false);
        let mut drive = vec![S::zero(); n_kc];

        for n in 0..steps {
            drive.fill(S::zero());
            for j in input.active(n) {
                for &k in &self.by_input[j] {
                    drive[k as usize] += self.fanout_weight;
                }
            }
            if let (Some(inh), true) = (&self.inhibition, s_inh) {
                for d in drive.iter_mut() {
                    *d += inh.weight_out;
                }
            }
            if !self.recurrent.is_empty() {
                for (k, pres) in self.recurrent.iter().enumerate() {
                    let fired = pres.iter().filter(|&&q| s_prev[q as usize]).count();
                    drive[k] += self.recurrent_weight * S::from_usize_lossy(fired);
                }
            }
            let mut fired = 0usize;
            let row = kc.row_mut(n);
            for k in 0..n_kc {
                let sp = if s_prev[k] { S::one() } else { S::zero() };
                v[k] = Dynamics::Full.update(v[k], sp, drive[k], p);
                let s = heaviside(v[k], p.v0());
                row[k] = s;
                fired += usize::from(s);
            }
            s_prev.copy_from_slice(row);
            if let Some(inh) = &self.inhibition {
                let sp = if s_inh { S::one() } else { S::zero() };
                let xi = inh.weight_in * S::from_usize_lossy(fired);
                v_inh = Dynamics::Full.update(v_inh, sp, xi, &inh.params);
                s_inh = heaviside(v_inh, inh.params.v0());
                inhibitory[n] = s_inh;
            }
        }
        Ok(KcRun { kc, inhibitory })
    }

    /// KC representation of an encoded input in this body's regime.
    pub fn encode_kc(&self, input: &EncodedInput<S>) -> Result<EncodedInput<S>> {
        match (self.regime, input) {
            (Regime::Rate, EncodedInput::Drive(x)) => Ok(EncodedInput::Drive(self.kc_features(x)?)),
            (Regime::Spiking, EncodedInput::Raster(r)) => Ok(self.readout_input(&self.forward(r)?)),
            _ => Err(Error::Precondition(
                "rate bodies take constant drive, spiking bodies take rasters".into(),
            )),
        }
    }

    /// What the readout sees of a spiking KC run.
    pub fn readout_input(&self, run: &KcRun) -> EncodedInput<S> {
        if self.rate_readout {
            let steps = S::from_usize_lossy(run.kc.steps().max(1));
            EncodedInput::Drive(run.kc.counts().iter().map(|&c| S::from_usize_lossy(c) / steps).collect())
        } else {
            EncodedInput::Raster(run.kc.clone())
        }
    }

    /// Sets the fan-out weight so the mean KC drive over `probe` equals
    /// `scale` times the threshold drive for `steps` steps.
    pub fn calibrate(&mut self, probe: &[EncodedInput<S>], steps: usize, scale: f64) -> Result<S> {
        if probe.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        let mut cells = 0usize;
        for x in probe {
            check_len("input width", self.input_dim, x.width())?;
            match x {
                EncodedInput::Drive(d) if self.divisive => {
                    total += if mean_activity(d) > S::zero() { 1.0 } else { 0.0 };
                    cells += 1;
                }
                EncodedInput::Drive(d) => {
                    total += d.iter().map(|v| v.as_f64()).sum::<f64>();
                    cells += d.len();
                }
                EncodedInput::Raster(r) => {
                    total += r.total_spikes() as f64;
                    cells += r.steps() * r.neurons();
                }
            }
        }
        let mean = total / cells as f64;
        if mean <= 0.0 {
            return Err(Error::DegenerateStatistics("probe inputs are silent"));
        }
        let nc = self.fanout[0].len() as f64;
        let steps = if self.regime == Regime::Rate { 1 } else { steps };
        let w = scale * threshold_drive(&self.kc_params, steps).as_f64() / (nc * mean);
        self.fanout_weight = S::lit(w);
        Ok(self.fanout_weight)
    }

    /// Mean KC activity over `probe`: mean activation in the rate regime,
    /// fraction of active (step, KC) entries in the spiking regime.
    pub fn mean_kc_activity(&self, probe: &[EncodedInput<S>]) -> Result<f64> {
        if probe.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for x in probe {
            total += match self.encode_kc(x)? {
                EncodedInput::Drive(f) => f.iter().map(|v| v.as_f64()).sum::<f64>() / f.len() as f64,
                EncodedInput::Raster(r) => r.sparsity(),
            };
        }
        Ok(total / probe.len() as f64)
    }

    /// Sets the fan-out weight by bisection so the mean KC activity over
    /// `probe` matches `target` to within 1e-4, or to the closest reachable value.
    pub fn calibrate_activity(&mut self, probe: &[EncodedInput<S>], target: f64) -> Result<S> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::Domain(format!("target activity {target} must lie in (0, 1)")));
        }
        let activity = |mb: &mut Self, w: f64| {
            mb.fanout_weight = S::lit(w);
            mb.mean_kc_activity(probe)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while activity(self, hi)? < target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::DegenerateStatistics("probe cannot drive the Kenyon cells"));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let a = activity(self, mid)?;
            if (a - target).abs() < 1e-4 {
                return Ok(self.fanout_weight);
            }
            if a < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        activity(self, 0.5 * (lo + hi))?;
        Ok(self.fanout_weight)
    }

    /// Three-factor update of the readout: with `m` set, every weight from an
    /// active KC `j` grows by `eta`, optionally only toward active outputs.
    pub fn modulatory_update(&mut self, kc_active: &[bool], post_active: &[bool], m: bool, rule: &ModulatoryRule) -> Result<()> {
        let n_out = self.readout.layers()[0].size;
        check_len("KC activity", self.kenyon_cells(), kc_active.len())?;
        check_len("output activity", n_out, post_active.len())?;
        if !m {
            return Ok(());
        }
        let eta = S::lit(rule.eta);
        let w = self.readout.projection_synapses_mut(0).weights_mut();
        for (j, _) in kc_active.iter().enumerate().filter(|(_, &a)| a) {
            for (k, g) in w[j * n_out..(j + 1) * n_out].iter_mut().enumerate() {
                if !rule.post_gated || post_active[k] {
                    *g += eta;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Gated additive plasticity of the readout and the reinforcement schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulatoryRule {
    pub eta: f64,
    /// Per-visit probability of a modulatory event in the target region.
    pub p0: f64,
    pub post_gated: bool,
    /// Suppress modulation once the valence reaches `threshold`.
    pub feedback: bool,
    pub threshold: f64,
}

impl Default for ModulatoryRule {
    fn default() -> Self {
        Self {
            eta: 0.05,
            p0: 0.2,
            post_gated: false,
            feedback: true,
            threshold: 0.5,
        }
    }
}

/// Fraction of active entries in a raster.
pub fn sparsity(raster: &SpikeRaster) -> f64 {
    raster.sparsity()
}

/// Decision under a prior: `argmax_i counts_i + kappa (ln p_i - ln max p)`.
///
/// The log prior is taken relative to its maximum, so a uniform prior adds
/// exactly zero. With `kappa > 0` classes of zero prior are excluded.
pub fn apply_prior(counts: &[f64], prior: &[f64], kappa: f64) -> Result<usize> {
    check_len("prior length", counts.len(), prior.len())?;
    if prior.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Domain("prior entries must be non-negative".into()));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("prior sums to {total}, not 1")));
    }
    let top = prior.iter().cloned().fold(0.0, f64::max);
    let scores: Vec<f64> = counts
        .iter()
        .zip(prior)
        .map(|(&c, &p)| {
            if kappa == 0.0 {
                c
            } else if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                c + kappa * (p.ln() - top.ln())
            }
        })
        .collect();
    argmax_lowest(&scores).ok_or(Error::EmptyDataset)
}

/// Dataset samples mapped through a fixed mushroom body.
pub struct KcSource<'a, S> {
    pub mb: &'a MushroomBodyTopology<S>,
    pub data: EncodedDataset<'a>,
}

impl<S: Scalar> SampleSource<S> for KcSource<'_, S> {
    fn len(&self) -> usize {
        SampleSource::<S>::len(&self.data)
    }

    fn input(&self, index: usize) -> Result<EncodedInput<S>> {
        self.mb.encode_kc(&self.data.input(index)?)
    }

    fn label(&self, index: usize) -> usize {
        self.data.data.label(index)
    }
}

/// Encoded first `count` samples of `data`, for calibration.
pub fn probe<S: Scalar>(data: &crate::data::Dataset, encoder: &EncoderSpec, count: usize) -> Result<Vec<EncodedInput<S>>> {
    (0..count.min(data.len()))
        .map(|i| {
            let x: Vec<S> = normalize_pixels(data.image(i));
            encoder.encode(&x, &mut encoder.sample_rng(i as u64))
        })
        .collect()
}

/// Trains only the readout against the spike-count cost. Returns the
/// outcome and leaves the trained readout in `mb`.
pub fn train_mbon<S: Scalar>(
    mb: &mut MushroomBodyTopology<S>,
    train_set: &crate::data::Dataset,
    test_set: &crate::data::Dataset,
    encoder: &EncoderSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    let steps = match mb.regime {
        Regime::Rate => 1,
        Regime::Spiking => encoder.steps(),
    };
    let outcome = {
        let tr = KcSource {
            mb,
            data: EncodedDataset::new(train_set, *encoder),
        };
        let te = KcSource {
            mb,
            data: EncodedDataset::new(test_set, *encoder),
        };
        train(mb.readout.clone(), &tr, &te, steps, config)?
    };
    mb.readout = outcome.net.clone();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, nc: usize) -> MushroomBodyConfig {
        MushroomBodyConfig {
            kenyon_cells: n,
            inputs_per_kc: nc,
            ..Default::default()
        }
    }

    #[test]
    fn fanout_columns_have_exactly_nc_inputs() {
        let mb = build_mb::<f64>(784, &config(1000, 70), Regime::Spiking, 24).unwrap();
        assert!(mb.fanout().iter().all(|c| c.len() == 70 && c.windows(2).all(|w| w[0] < w[1])));
        let dense = build_mb::<f64>(12, &config(5, 12), Regime::Rate, 1).unwrap();
        assert!(dense.fanout().iter().all(|c| c.len() == 12));
        assert!(build_mb::<f64>(12, &config(5, 13), Regime::Rate, 1).is_err());
    }

    #[test]
    fn seeds_control_the_fanout() {
        let a = build_mb::<f64>(784, &config(50, 20), Regime::Rate, 1).unwrap();
        let b = build_mb::<f64>(784, &config(50, 20), Regime::Rate, 1).unwrap();
        let c = build_mb::<f64>(784, &MushroomBodyConfig { seed: 1, ..config(50, 20) }, Regime::Rate, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.fanout(), c.fanout());
    }

    #[test]
    fn silent_input_gives_silent_kcs() {
        let mb = build_mb::<f64>(10, &config(20, 3), Regime::Spiking, 5).unwrap();
        let run = mb.forward(&SpikeRaster::zeros(5, 10)).unwrap();
        assert_eq!(run.kc.total_spikes(), 0);
        assert!(run.inhibitory.iter().all(|&s| !s));
    }

    #[test]
    fn kcs_fire_before_inhibition_arrives() {
        // Three KCs on two inputs; input 0 feeds KCs 0 and 2. A single spike
        // with (1 - decay) w_f >= v0 fires both in the same step; the
        // inhibitory neuron, receiving 2 alpha / 3 >= 1, fires in that step
        // too and only suppresses the next one.
        let cfg = MushroomBodyConfig {
            kenyon_cells: 3,
            inputs_per_kc: 1,
            kc_tau: 1.0,
            inhibition: InhibitionConfig { alpha: 3.0, gain: 5.0, ..Default::default() },
            ..Default::default()
        };
        let mut mb = build_mb::<f64>(2, &cfg, Regime::Spiking, 3).unwrap();
        mb.fanout = vec![vec![0], vec![1], vec![0]];
        mb.by_input = invert(&mb.fanout, 2);
        let p = NeuronParams::with_tau(1.0).unwrap();
        mb.set_fanout_weight(1.0 / (1.0 - p.decay()));
        let mut r = SpikeRaster::zeros(3, 2);
        r.set(0, 0, true);
        r.set(1, 0, true);
        let run = mb.forward(&r).unwrap();
        assert_eq!(run.kc.row(0), &[true, false, true]);
        assert_eq!(run.inhibitory[0], true);
        // Step 1: input repeats but drive = w_f - 5 is far below threshold.
        assert_eq!(run.kc.row(1), &[false, false, false]);
    }

    #[test]
    fn modulatory_rule() {
        let mut mb = build_mb::<f64>(4, &config(3, 2), Regime::Rate, 1).unwrap();
        let before = mb.readout().projections()[0].synapses.weights().to_vec();
        let rule = ModulatoryRule { eta: 0.1, post_gated: false, ..Default::default() };
        let kc = [false, true, false];
        let post = [false; 10];
        mb.modulatory_update(&kc, &post, false, &rule).unwrap();
        assert_eq!(mb.readout().projections()[0].synapses.weights(), &before[..]);
        mb.modulatory_update(&kc, &post, true, &rule).unwrap();
        let after = mb.readout().projections()[0].synapses.weights().to_vec();
        for (e, (a, b)) in after.iter().zip(&before).enumerate() {
            let expected = if e / 10 == 1 { 0.1 } else { 0.0 };
            assert!((a - b - expected).abs() < 1e-12);
        }
        mb.modulatory_update(&kc, &post, true, &rule).unwrap();
        let twice = mb.readout().projections()[0].synapses.weights()[10];
        assert!((twice - before[10] - 0.2).abs() < 1e-12);

        let gated = ModulatoryRule { post_gated: true, ..rule };
        let mut post = [false; 10];
        post[3] = true;
        let snapshot = mb.readout().projections()[0].synapses.weights().to_vec();
        mb.modulatory_update(&kc, &post, true, &gated).unwrap();
        let w = mb.readout().projections()[0].synapses.weights();
        for e in 0..30 {
            let expected = if e == 13 { 0.1 } else { 0.0 };
            assert!((w[e] - snapshot[e] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_rules() {
        let counts = [2.0, 5.0, 5.0, 1.0];
        assert_eq!(apply_prior(&counts, &[0.25; 4], 1.0).unwrap(), 1);
        assert_eq!(apply_prior(&counts, &[0.0, 0.0, 0.0, 1.0], 1.0).unwrap(), 3);
        assert_eq!(apply_prior(&counts, &[0.1, 0.2, 0.6, 0.1], 1.0).unwrap(), 2);
        assert!(apply_prior(&counts, &[0.5, 0.5, 0.5, 0.5], 1.0).is_err());
        assert!(apply_prior(&counts, &[0.25; 3], 1.0).is_err());
        let tenth = [0.1; 10];
        let c: Vec<f64> = (0..10).map(|i| (i * 7 % 10) as f64 + 1e-12 * i as f64).collect();
        assert_eq!(apply_prior(&c, &tenth, 3.0).unwrap(), argmax_lowest(&c).unwrap());
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity(&SpikeRaster::zeros(24, 1000)), 0.0);
        assert_eq!(sparsity(&SpikeRaster::from_rows(2, 2, vec![true; 4]).unwrap()), 1.0);
        let mut r = SpikeRaster::zeros(24, 1000);
        for k in 0..120 {
            r.set(k % 24, k * 7, true);
        }
        assert_eq!(sparsity(&r), 0.005);
    }

    #[test]
    fn json_round_trip() {
        let cfg = MushroomBodyConfig {
            recurrent: RecurrentConfig { enabled: true, ..Default::default() },
            ..config(30, 5)
        };
        let mb = build_mb::<f64>(40, &cfg, Regime::Spiking, 8).unwrap();
        let back = MushroomBodyTopology::<f64>::from_json(&mb.to_json()).unwrap();
        assert_eq!(back, mb);
        assert!(mb.recurrent.iter().enumerate().all(|(k, r)| r.len() == 10 && !r.contains(&(k as u32))));
    }
}
