//! Spike-count training by backpropagation through time over the surrogate
//! recurrence, and the classification metrics.
//!
//! The cost for one sample is `C = (1/N) sum_i (sum_m a_i(m) - n_i)^2` over the
//! `N` output neurons, where `a_i(m)` is the surrogate activation of neuron `i`
//! at step `m` and `n_i` its target count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::encoding::{normalize_pixels, EncodedInput, EncoderSpec};
use crate::error::{check_len, Error, Result};
use crate::network::{run, spike_counts, InputActivity, Layer, Mode, NetworkTopology, RunTrace, Source};
use crate::neuron::{Dynamics, NeuronParams};
use crate::scalar::Scalar;

/// Desired spike count per output neuron.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    counts: Vec<usize>,
}

impl TargetSpec {
    pub fn new(counts: Vec<usize>, steps: usize) -> Result<Self> {
        if let Some(&c) = counts.iter().find(|&&c| c > steps) {
            return Err(Error::Domain(format!("target count {c} exceeds {steps} steps")));
        }
        Ok(Self { counts })
    }

    /// `steps` spikes for the labelled neuron, none elsewhere.
    pub fn one_hot(label: usize, classes: usize, steps: usize) -> Result<Self> {
        if label >= classes {
            return Err(Error::Domain(format!("label {label} out of {classes} classes")));
        }
        let mut counts = vec![0; classes];
        counts[label] = steps;
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Cost of summed activations against a target.
pub fn count_loss<S: Scalar>(sums: &[S], target: &TargetSpec) -> Result<S> {
    check_len("target length", sums.len(), target.len())?;
    let n = S::from_usize_lossy(sums.len());
    Ok(sums
        .iter()
        .zip(target.counts())
        .map(|(&a, &c)| {
            let e = a - S::from_usize_lossy(c);
            e * e
        })
        .sum::<S>()
        / n)
}

/// Cost of the output layer of `trace`. In binary mode the sums are spike counts.
pub fn spike_count_loss<S: Scalar>(net: &NetworkTopology<S>, trace: &RunTrace<S>, target: &TargetSpec) -> Result<S> {
    count_loss(&spike_counts(trace, net.output_layer())?, target)
}

/// Gradients aligned with a network's projections and layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    /// Per projection, same layout as its weights.
    pub weights: Vec<Vec<S>>,
    /// Per projection, one entry per postsynaptic neuron.
    pub v_ext: Vec<Vec<S>>,
    /// Per layer, one entry per neuron.
    pub thresholds: Vec<Vec<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros(net: &NetworkTopology<S>) -> Self {
        Self {
            weights: net.projections().iter().map(|p| vec![S::zero(); p.synapses.weights().len()]).collect(),
            v_ext: net.projections().iter().map(|p| vec![S::zero(); p.synapses.post()]).collect(),
            thresholds: net.layers().iter().map(|l| vec![S::zero(); l.size]).collect(),
        }
    }

    fn parts_mut(&mut self) -> impl Iterator<Item = &mut Vec<S>> {
        self.weights.iter_mut().chain(self.v_ext.iter_mut()).chain(self.thresholds.iter_mut())
    }

    fn parts(&self) -> impl Iterator<Item = &Vec<S>> {
        self.weights.iter().chain(self.v_ext.iter()).chain(self.thresholds.iter())
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.parts_mut().zip(other.parts()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: S) {
        for a in self.parts_mut() {
            for x in a.iter_mut() {
                *x *= k;
            }
        }
    }

    pub fn max_abs(&self) -> S {
        self.parts().flatten().fold(S::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Loss and gradient for one sample, surrogate mode.
pub fn sample_gradient<S: Scalar>(
    net: &NetworkTopology<S>,
    input: &EncodedInput<S>,
    target: &TargetSpec,
    steps: usize,
) -> Result<(S, Gradients<S>)> {
    let trace = run(net, input, steps, Mode::Surrogate)?;
    let out = net.output_layer();
    let sums = spike_counts(&trace, out)?;
    let loss = count_loss(&sums, target)?;
    let input_act = InputActivity::new(input, steps)?;
    let layers = net.layers();
    let projections = net.projections();

    // dC/da for every layer and step, time-major like the trace.
    let mut g_act: Vec<Vec<S>> = layers.iter().map(|l| vec![S::zero(); steps * l.size]).collect();
    let n_out = layers[out].size;
    let two_over_n = S::lit(2.0) / S::from_usize_lossy(n_out);
    for m in 0..steps {
        for i in 0..n_out {
            g_act[out][m * n_out + i] = two_over_n * (sums[i] - S::from_usize_lossy(target.counts()[i]));
        }
    }

    let mut grads = Gradients::zeros(net);
    // dC/dv(n) flowing back through the potential term of v(n+1).
    let mut carry: Vec<Vec<S>> = layers.iter().map(|l| vec![S::zero(); l.size]).collect();
    let mut g_xi: Vec<S> = Vec::new();

    for n in (0..steps).rev() {
        for &l in net.order().iter().rev() {
            let layer = &layers[l];
            let lt = &trace.layers[l];
            let size = layer.size;
            let beta = layer.params.beta();
            g_xi.clear();
            g_xi.resize(size, S::zero());
            for i in 0..size {
                let idx = n * size + i;
                let a = lt.surrogate[idx];
                let ga = g_act[l][idx] * beta * a * (S::one() - a);
                let gv = ga + carry[l][i];
                grads.thresholds[l][i] -= ga;
                let (v_prev, s_prev) = if n == 0 {
                    (S::zero(), S::zero())
                } else {
                    (lt.potentials[idx - size], lt.surrogate[idx - size])
                };
                let d = layer.dynamics.partials(v_prev, s_prev, lt.drive[idx], &layer.params);
                g_xi[i] = gv * d.d_drive;
                carry[l][i] = gv * d.d_potential;
                if n > 0 {
                    g_act[l][idx - size] += gv * d.d_spike;
                }
            }

            for (k, p) in projections.iter().enumerate().filter(|(_, p)| p.target == l) {
                for (g, &x) in grads.v_ext[k].iter_mut().zip(&g_xi) {
                    *g += x;
                }
                let syn = &p.synapses;
                let post = syn.post();
                let src_size = syn.pre();
                if let Some(d) = syn.uniform_delay() {
                    let d = d as usize;
                    if d > n {
                        continue;
                    }
                    let m = n - d;
                    let src: &[S] = match p.source {
                        Source::Input => input_act.at(m),
                        Source::Layer(s) => &trace.layers[s].surrogate[m * src_size..(m + 1) * src_size],
                    };
                    let gw = &mut grads.weights[k];
                    for (j, &a) in src.iter().enumerate() {
                        if a != S::zero() {
                            for (g, &x) in gw[j * post..(j + 1) * post].iter_mut().zip(&g_xi) {
                                *g += a * x;
                            }
                        }
                    }
                    if let Source::Layer(s) = p.source {
                        let ga = &mut g_act[s][m * src_size..(m + 1) * src_size];
                        for (j, g) in ga.iter_mut().enumerate() {
                            *g += syn.row(j).iter().zip(&g_xi).map(|(&w, &x)| w * x).sum::<S>();
                        }
                    }
                    continue;
                }
                for j in 0..src_size {
                    for i in 0..post {
                        let d = syn.delay(j, i) as usize;
                        if d > n {
                            continue;
                        }
                        let m = n - d;
                        let a = match p.source {
                            Source::Input => input_act.at(m)[j],
                            Source::Layer(s) => trace.layers[s].surrogate[m * src_size + j],
                        };
                        grads.weights[k][j * post + i] += a * g_xi[i];
                        if let Source::Layer(s) = p.source {
                            g_act[s][m * src_size + j] += g_xi[i] * syn.weight(j, i);
                        }
                    }
                }
            }
        }
    }
    Ok((loss, grads))
}

/// Mean loss and mean gradient over a batch. Samples are evaluated in
/// parallel and summed in batch order, so the result does not depend on the
/// thread count.
pub fn backward<S: Scalar>(
    net: &NetworkTopology<S>,
    batch: &[(EncodedInput<S>, TargetSpec)],
    steps: usize,
) -> Result<(S, Gradients<S>)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let parts: Vec<(S, Gradients<S>)> = batch
        .par_iter()
        .map(|(x, t)| sample_gradient(net, x, t, steps))
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let (mut loss, mut total) = iter.next().expect("non-empty batch");
    for (l, g) in iter {
        loss += l;
        total.add_assign(&g);
    }
    let k = S::one() / S::from_usize_lossy(batch.len());
    total.scale(k);
    Ok((loss * k, total))
}

/// Which parameter groups an update touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trainable {
    pub weights: bool,
    pub thresholds: bool,
    pub v_ext: bool,
}

impl Default for Trainable {
    fn default() -> Self {
        Self {
            weights: true,
            thresholds: true,
            v_ext: true,
        }
    }
}

/// `params -= lr * grads` on plastic projections and, if enabled, thresholds.
pub fn sgd_step<S: Scalar>(net: &mut NetworkTopology<S>, grads: &Gradients<S>, lr: S, which: Trainable) -> Result<()> {
    check_len("weight gradients", net.projections().len(), grads.weights.len())?;
    check_len("threshold gradients", net.layers().len(), grads.thresholds.len())?;
    for k in 0..net.projections().len() {
        if !net.projections()[k].plastic {
            continue;
        }
        let syn = net.projection_synapses_mut(k);
        check_len("weight gradient", syn.weights().len(), grads.weights[k].len())?;
        if which.weights {
            for (w, &g) in syn.weights_mut().iter_mut().zip(&grads.weights[k]) {
                *w -= lr * g;
            }
        }
        if which.v_ext {
            for (e, &g) in syn.v_ext_mut().iter_mut().zip(&grads.v_ext[k]) {
                *e -= lr * g;
            }
        }
    }
    if which.thresholds {
        for (layer, g) in net.layers_mut().iter_mut().zip(&grads.thresholds) {
            for (t, &x) in layer.thresholds.iter_mut().zip(g) {
                *t -= lr * x;
            }
        }
    }
    Ok(())
}

/// Labelled inputs, produced on demand.
pub trait SampleSource<S>: Sync {
    fn len(&self) -> usize;
    fn input(&self, index: usize) -> Result<EncodedInput<S>>;
    fn label(&self, index: usize) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dataset seen through an encoder. Stochastic encodings draw each sample
/// from its own stream, offset by `stream_offset` so train and test streams differ.
pub struct EncodedDataset<'a> {
    pub data: &'a Dataset,
    pub encoder: EncoderSpec,
    pub stream_offset: u64,
}

impl<'a> EncodedDataset<'a> {
    pub fn new(data: &'a Dataset, encoder: EncoderSpec) -> Self {
        let stream_offset = match data.split {
            crate::data::Split::Train => 0,
            crate::data::Split::Test => 1 << 40,
        };
        Self {
            data,
            encoder,
            stream_offset,
        }
    }
}

impl<S: Scalar> SampleSource<S> for EncodedDataset<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn input(&self, index: usize) -> Result<EncodedInput<S>> {
        let x: Vec<S> = normalize_pixels(self.data.image(index));
        let mut rng = self.encoder.sample_rng(self.stream_offset + index as u64);
        self.encoder.encode(&x, &mut rng)
    }

    fn label(&self, index: usize) -> usize {
        self.data.label(index)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_lowest<S: PartialOrd + Copy>(values: &[S]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// `(non_exclusive, exclusive)` correctness of one set of spike counts.
pub fn binary_outcome<S: PartialOrd + Copy>(counts: &[S], label: usize) -> (bool, bool) {
    let Some(max) = argmax_lowest(counts).map(|i| counts[i]) else {
        return (false, false);
    };
    let hit = counts.get(label).is_some_and(|&c| c >= max);
    let ties = counts.iter().filter(|&&c| c >= max).count();
    (hit, hit && ties == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub sigmoidal: f64,
    pub non_exclusive: f64,
    pub exclusive: f64,
}

fn sigmoidal_hit<S: Scalar>(net: &NetworkTopology<S>, x: &EncodedInput<S>, label: usize, steps: usize) -> Result<bool> {
    let trace = run(net, x, steps, Mode::Surrogate)?;
    Ok(argmax_lowest(&spike_counts(&trace, net.output_layer())?) == Some(label))
}

fn binary_hit<S: Scalar>(net: &NetworkTopology<S>, x: &EncodedInput<S>, label: usize, steps: usize) -> Result<(bool, bool)> {
    let trace = run(net, x, steps, Mode::Binary)?;
    Ok(binary_outcome(&spike_counts(&trace, net.output_layer())?, label))
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Fraction of samples whose summed surrogate activations peak at the label.
pub fn eval_sigmoidal<S: Scalar, D: SampleSource<S>>(net: &NetworkTopology<S>, data: &D, steps: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = (0..data.len())
        .into_par_iter()
        .map(|i| sigmoidal_hit(net, &data.input(i)?, data.label(i), steps).map(usize::from))
        .sum::<Result<usize>>()?;
    Ok(fraction(hits, data.len()))
}

/// Non-exclusive and exclusive binary accuracy from output spike counts.
pub fn eval_binary<S: Scalar, D: SampleSource<S>>(net: &NetworkTopology<S>, data: &D, steps: usize) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (ne, ex) = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = binary_hit(net, &data.input(i)?, data.label(i), steps)?;
            Ok((usize::from(a), usize::from(b)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok((fraction(ne, data.len()), fraction(ex, data.len())))
}

/// All three metrics, encoding each sample once.
pub fn evaluate<S: Scalar, D: SampleSource<S>>(net: &NetworkTopology<S>, data: &D, steps: usize) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (sg, ne, ex) = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.input(i)?;
            let label = data.label(i);
            let s = sigmoidal_hit(net, &x, label, steps)?;
            let (a, b) = binary_hit(net, &x, label, steps)?;
            Ok((usize::from(s), usize::from(a), usize::from(b)))
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    let n = data.len();
    Ok(Metrics {
        sigmoidal: fraction(sg, n),
        non_exclusive: fraction(ne, n),
        exclusive: fraction(ex, n),
    })
}

/// Surrogate steepness over training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BetaSchedule {
    Constant { beta: f64 },
    /// Linear ramp from `start` to `end` over the run.
    Linear { start: f64, end: f64 },
}

impl BetaSchedule {
    pub fn at(&self, progress: f64) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Linear { start, end } => start + (end - start) * progress.clamp(0.0, 1.0),
        }
    }
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { beta: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Training draws, with replacement.
    pub samples: usize,
    pub beta: BetaSchedule,
    pub trainable: Trainable,
    /// Test evaluations during the run, evenly spaced; the final one is always taken.
    pub snapshots: usize,
    /// Test samples used by intermediate snapshots; 0 means the whole test set.
    pub snapshot_samples: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 10,
            samples: 180_000,
            beta: BetaSchedule::default(),
            trainable: Trainable::default(),
            snapshots: 6,
            snapshot_samples: 2000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Domain(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be at least 1".into()));
        }
        for p in [0.0, 1.0] {
            if !(self.beta.at(p) > 0.0) {
                return Err(Error::Domain("beta must stay positive".into()));
            }
        }
        Ok(())
    }
}

/// Uniform initial weights in `[-a, a]` with `a = 1 / sqrt(fan_in)`.
pub fn init_weights<S: Scalar, R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<S> {
    let a = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..fan_in * fan_out).map(|_| S::lit(rng.random_range(-a..=a))).collect()
}

/// Constant drive that, from rest and without input, brings the potential to
/// threshold exactly at the last of `steps` steps: `v0 / (1 - decay^steps)`.
pub fn threshold_drive<S: Scalar>(params: &NeuronParams<S>, steps: usize) -> S {
    let steps = i32::try_from(steps.max(1)).unwrap_or(i32::MAX);
    params.v0() / (S::one() - params.decay().powi(steps))
}

/// A single layer of `outputs` neurons reading the input at delay 0, with
/// uniform initial weights and `v_ext` at [`threshold_drive`].
pub fn shallow_net<S: Scalar>(
    inputs: usize,
    outputs: usize,
    params: NeuronParams<S>,
    dynamics: Dynamics,
    steps: usize,
    seed: u64,
) -> Result<NetworkTopology<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = init_weights(inputs, outputs, &mut rng);
    let mut net = NetworkTopology::feedforward(inputs, Layer::new(outputs, params, dynamics), w)?;
    let bias = threshold_drive(&params, steps);
    net.projection_synapses_mut(0).v_ext_mut().fill(bias);
    Ok(net)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub draws: usize,
    /// Mean training loss since the previous snapshot.
    pub loss: f64,
    pub test: Metrics,
    pub test_samples: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub net: NetworkTopology<S>,
    pub history: Vec<Snapshot>,
    pub final_metrics: Metrics,
}

impl Snapshot {
    pub const CSV_HEADER: &'static str = "draws,loss,sigmoidal,non_exclusive,exclusive,test_samples";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.draws, self.loss, self.test.sigmoidal, self.test.non_exclusive, self.test.exclusive, self.test_samples
        )
    }
}

struct Prefix<'a, D> {
    inner: &'a D,
    len: usize,
}

impl<S, D: SampleSource<S>> SampleSource<S> for Prefix<'_, D> {
    fn len(&self) -> usize {
        self.len
    }

    fn input(&self, index: usize) -> Result<EncodedInput<S>> {
        self.inner.input(index)
    }

    fn label(&self, index: usize) -> usize {
        self.inner.label(index)
    }
}

fn set_beta<S: Scalar>(net: &mut NetworkTopology<S>, beta: f64) -> Result<()> {
    for layer in net.layers_mut() {
        layer.params = layer.params.with_beta(S::lit(beta))?;
    }
    Ok(())
}

/// Draws `config.samples` training examples with replacement, batches them,
/// and applies SGD to `net`. Target counts are one-hot at `steps`.
pub fn train<S: Scalar, Tr: SampleSource<S>, Te: SampleSource<S>>(
    mut net: NetworkTopology<S>,
    train_data: &Tr,
    test_data: &Te,
    steps: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    config.validate()?;
    if train_data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = net.layers()[net.output_layer()].size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lr = S::lit(config.learning_rate);
    let batches = config.samples.div_ceil(config.batch_size);
    let marks: Vec<usize> = (1..=config.snapshots).map(|k| k * batches / config.snapshots.max(1)).collect();
    let mut history = Vec::new();
    let (mut loss_sum, mut loss_batches) = (0.0, 0usize);
    let mut draws = 0;

    for b in 0..batches {
        set_beta(&mut net, config.beta.at(b as f64 / batches as f64))?;
        let size = config.batch_size.min(config.samples - draws);
        let indices: Vec<usize> = (0..size).map(|_| rng.random_range(0..train_data.len())).collect();
        let batch = indices
            .iter()
            .map(|&i| {
                let label = train_data.label(i);
                Ok((train_data.input(i)?, TargetSpec::one_hot(label, classes, steps)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let (loss, grads) = backward(&net, &batch, steps)?;
        sgd_step(&mut net, &grads, lr, config.trainable)?;
        draws += size;
        loss_sum += loss.as_f64();
        loss_batches += 1;

        if marks.contains(&(b + 1)) && b + 1 < batches {
            let n = match config.snapshot_samples {
                0 => test_data.len(),
                k => k.min(test_data.len()),
            };
            let test = evaluate(&net, &Prefix { inner: test_data, len: n }, steps)?;
            history.push(Snapshot {
                draws,
                loss: loss_sum / loss_batches as f64,
                test,
                test_samples: n,
            });
            (loss_sum, loss_batches) = (0.0, 0);
        }
    }
    let final_metrics = evaluate(&net, test_data, steps)?;
    history.push(Snapshot {
        draws,
        loss: if loss_batches > 0 { loss_sum / loss_batches as f64 } else { f64::NAN },
        test: final_metrics,
        test_samples: test_data.len(),
    });
    Ok(TrainOutcome {
        net,
        history,
        final_metrics,
    })
}

/// Shallow network on an encoded dataset: one output per class, trained from a
/// seeded uniform initialisation.
pub fn train_shallow<S: Scalar>(
    encoder: &EncoderSpec,
    train_set: &Dataset,
    test_set: &Dataset,
    params: NeuronParams<S>,
    dynamics: Dynamics,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    let net = shallow_net(train_set.pixels(), 10, params, dynamics, encoder.steps(), config.seed ^ 0x5eed)?;
    let tr = EncodedDataset::new(train_set, *encoder);
    let te = EncodedDataset::new(test_set, *encoder);
    train(net, &tr, &te, encoder.steps(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Projection;
    use crate::neuron::SynapseBundle;
    use crate::raster::SpikeRaster;

    #[test]
    fn loss_examples() {
        let t = TargetSpec::new(vec![4, 1], 5).unwrap();
        assert_eq!(count_loss(&[3.0f64, 1.0], &t).unwrap(), 0.5);
        assert_eq!(count_loss(&[4.0f64, 1.0], &t).unwrap(), 0.0);
        let base = count_loss(&[2.0f64, 2.0], &t).unwrap();
        let doubled = count_loss(&[0.0f64, 3.0], &t).unwrap();
        assert_eq!(doubled, 4.0 * base);
        assert!(count_loss(&[1.0f64], &t).is_err());
        assert!(TargetSpec::new(vec![6], 5).is_err());
    }

    #[test]
    fn argmax_and_binary_outcomes() {
        assert_eq!(argmax_lowest(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax_lowest::<f64>(&[]), None);
        let mut c = vec![0.0; 10];
        c[0] = 3.0;
        c[1] = 1.0;
        assert_eq!(binary_outcome(&c, 0), (true, true));
        c[1] = 3.0;
        assert_eq!(binary_outcome(&c, 0), (true, false));
        assert_eq!(binary_outcome(&c, 2), (false, false));
        assert_eq!(binary_outcome(&[0.0; 10], 7), (true, false));
    }

    #[test]
    fn sgd_step_arithmetic() {
        let p = NeuronParams::with_tau(1.0).unwrap();
        let mut net = NetworkTopology::feedforward(1, Layer::new(1, p, Dynamics::Full), vec![0.5f64]).unwrap();
        let mut g = Gradients::zeros(&net);
        sgd_step(&mut net, &g, 0.1, Trainable::default()).unwrap();
        assert_eq!(net.projections()[0].synapses.weights(), &[0.5]);
        g.weights[0][0] = 1.0;
        sgd_step(&mut net, &g, 0.1, Trainable::default()).unwrap();
        assert!((net.projections()[0].synapses.weights()[0] - 0.4).abs() < 1e-15);
        sgd_step(&mut net, &g, 0.1, Trainable::default()).unwrap();
        assert!((net.projections()[0].synapses.weights()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn frozen_projection_is_not_updated() {
        let p = NeuronParams::with_tau(1.0).unwrap();
        let syn = SynapseBundle::uniform(2, 1, vec![0.5f64, 0.25], 0).unwrap();
        let mut net = NetworkTopology::new(
            2,
            vec![Layer::new(1, p, Dynamics::Full)],
            vec![Projection { source: Source::Input, target: 0, synapses: syn, plastic: false }],
        )
        .unwrap();
        let mut g = Gradients::zeros(&net);
        g.weights[0] = vec![1.0, 1.0];
        sgd_step(&mut net, &g, 0.1, Trainable::default()).unwrap();
        assert_eq!(net.projections()[0].synapses.weights(), &[0.5, 0.25]);
    }

    #[test]
    fn zero_input_and_zero_target_gives_zero_gradient() {
        // With no input the surrogate outputs are tiny but positive; the
        // gradient is tiny too, and exactly zero for the weights.
        let p = NeuronParams::with_tau(2.0).unwrap();
        let net = NetworkTopology::feedforward(3, Layer::new(2, p, Dynamics::Full), vec![0.3f64; 6]).unwrap();
        let x = EncodedInput::Raster(SpikeRaster::zeros(4, 3));
        let t = TargetSpec::new(vec![0, 0], 4).unwrap();
        let (loss, g) = sample_gradient(&net, &x, &t, 4).unwrap();
        assert!(loss < 1e-18);
        assert!(g.weights[0].iter().all(|&w| w == 0.0));
        assert!(g.max_abs() < 1e-8);
    }
}
