//! Layered networks of state-model neurons.
//!
//! Layers update once per step in a topological order of their zero-delay
//! projections, so a delay-0 feedforward spike reaches its target in the same
//! step while anything with a delay of one or more reads earlier activity.

use serde::{Deserialize, Serialize};

use crate::encoding::EncodedInput;
use crate::error::{check_len, Error, Result};
use crate::neuron::{heaviside, Dynamics, NeuronParams, SynapseBundle};
use crate::raster::SpikeRaster;
use crate::scalar::{logistic, Scalar};

/// What is propagated between layers and used as the branch selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Heaviside spikes in `{0, 1}`.
    Binary,
    /// Logistic surrogate activations in `(0, 1)`; the whole recurrence is differentiable.
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Layer<S> {
    pub size: usize,
    pub params: NeuronParams<S>,
    #[serde(default)]
    pub dynamics: Dynamics,
    /// Per-neuron thresholds, initialised to `params.v0()`.
    pub thresholds: Vec<S>,
}

impl<S: Scalar> Layer<S> {
    pub fn new(size: usize, params: NeuronParams<S>, dynamics: Dynamics) -> Self {
        Self {
            size,
            params,
            dynamics,
            thresholds: vec![params.v0(); size],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// The external input signal.
    Input,
    Layer(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Projection<S> {
    pub source: Source,
    pub target: usize,
    pub synapses: SynapseBundle<S>,
    #[serde(default = "yes")]
    pub plastic: bool,
}

fn yes() -> bool {
    true
}

/// Layers, projections and the per-step evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct NetworkTopology<S> {
    input_size: usize,
    layers: Vec<Layer<S>>,
    projections: Vec<Projection<S>>,
    #[serde(skip)]
    order: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct RawTopology<S> {
    input_size: usize,
    layers: Vec<Layer<S>>,
    projections: Vec<Projection<S>>,
}

impl<'de, S: Scalar> Deserialize<'de> for NetworkTopology<S> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTopology::<S>::deserialize(de)?;
        NetworkTopology::new(raw.input_size, raw.layers, raw.projections).map_err(serde::de::Error::custom)
    }
}

impl<S: Scalar> NetworkTopology<S> {
    pub fn new(input_size: usize, layers: Vec<Layer<S>>, projections: Vec<Projection<S>>) -> Result<Self> {
        for (l, layer) in layers.iter().enumerate() {
            if layer.size == 0 {
                return Err(Error::Topology(format!("layer {l} is empty")));
            }
            check_len("layer thresholds", layer.size, layer.thresholds.len())?;
        }
        for (k, p) in projections.iter().enumerate() {
            let target = layers
                .get(p.target)
                .ok_or_else(|| Error::Topology(format!("projection {k} targets missing layer {}", p.target)))?;
            let pre = match p.source {
                Source::Input => input_size,
                Source::Layer(s) => {
                    layers
                        .get(s)
                        .ok_or_else(|| Error::Topology(format!("projection {k} reads missing layer {s}")))?
                        .size
                }
            };
            if p.synapses.pre() != pre || p.synapses.post() != target.size {
                return Err(Error::Topology(format!(
                    "projection {k} is {}x{} but connects {pre} to {} neurons",
                    p.synapses.pre(),
                    p.synapses.post(),
                    target.size
                )));
            }
            if p.source == Source::Layer(p.target) && p.synapses.min_delay() == 0 {
                return Err(Error::Topology(format!(
                    "recurrent projection {k} onto layer {} needs delays of at least one step",
                    p.target
                )));
            }
        }
        let order = evaluation_order(layers.len(), &projections)?;
        Ok(Self {
            input_size,
            layers,
            projections,
            order,
        })
    }

    /// Input followed by one layer, connected with `weights` (input-major) at delay 0.
    pub fn feedforward(input_size: usize, output: Layer<S>, weights: Vec<S>) -> Result<Self> {
        let post = output.size;
        let synapses = SynapseBundle::uniform(input_size, post, weights, 0)?;
        Self::new(
            input_size,
            vec![output],
            vec![Projection {
                source: Source::Input,
                target: 0,
                synapses,
                plastic: true,
            }],
        )
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn projections(&self) -> &[Projection<S>] {
        &self.projections
    }

    /// Mutable access to projection weights. Shapes and delays stay fixed.
    pub fn projection_synapses_mut(&mut self, k: usize) -> &mut SynapseBundle<S> {
        &mut self.projections[k].synapses
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The last layer in evaluation order.
    pub fn output_layer(&self) -> usize {
        *self.order.last().expect("at least one layer")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Kahn's algorithm over zero-delay edges, ties broken by ascending layer index.
fn evaluation_order<S: Scalar>(layers: usize, projections: &[Projection<S>]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; layers];
    let mut edges = vec![Vec::new(); layers];
    for p in projections {
        if let Source::Layer(s) = p.source {
            if s != p.target && p.synapses.min_delay() == 0 {
                edges[s].push(p.target);
                indegree[p.target] += 1;
            }
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..layers).filter(|&l| indegree[l] == 0).collect();
    let mut order = Vec::with_capacity(layers);
    while let Some(l) = ready.pop_first() {
        order.push(l);
        for &t in &edges[l] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.insert(t);
            }
        }
    }
    if order.len() != layers {
        return Err(Error::Topology("zero-delay projections form a cycle".into()));
    }
    Ok(order)
}

/// History of one layer over a run, each matrix `steps x size`, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace<S> {
    pub size: usize,
    pub potentials: Vec<S>,
    /// Surrogate activation `sigma(beta (v - theta))` at every step, in either mode.
    pub surrogate: Vec<S>,
    pub drive: Vec<S>,
    /// Heaviside spikes `v >= theta`.
    pub raster: SpikeRaster,
}

impl<S: Scalar> LayerTrace<S> {
    #[inline]
    fn at(&self, m: &[S], n: usize) -> std::ops::Range<usize> {
        debug_assert_eq!(m.len() % self.size, 0);
        n * self.size..(n + 1) * self.size
    }

    pub fn potentials_at(&self, n: usize) -> &[S] {
        &self.potentials[self.at(&self.potentials, n)]
    }

    pub fn surrogate_at(&self, n: usize) -> &[S] {
        &self.surrogate[self.at(&self.surrogate, n)]
    }

    pub fn drive_at(&self, n: usize) -> &[S] {
        &self.drive[self.at(&self.drive, n)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<S> {
    pub mode: Mode,
    pub steps: usize,
    pub layers: Vec<LayerTrace<S>>,
}

impl<S: Scalar> RunTrace<S> {
    /// Activity propagated by `layer` at step `n`: spikes in binary mode,
    /// surrogate activations otherwise.
    pub fn activity(&self, layer: usize, n: usize) -> Vec<S> {
        let lt = &self.layers[layer];
        match self.mode {
            Mode::Binary => lt.raster.row(n).iter().map(|&s| spike_value(s)).collect(),
            Mode::Surrogate => lt.surrogate_at(n).to_vec(),
        }
    }
}

#[inline]
fn spike_value<S: Scalar>(s: bool) -> S {
    if s {
        S::one()
    } else {
        S::zero()
    }
}

/// Per-step input activity, `steps x input_size`.
pub(crate) struct InputActivity<S> {
    width: usize,
    constant: bool,
    data: Vec<S>,
}

impl<S: Scalar> InputActivity<S> {
    pub(crate) fn new(input: &EncodedInput<S>, steps: usize) -> Result<Self> {
        match input {
            EncodedInput::Drive(d) => Ok(Self {
                width: d.len(),
                constant: true,
                data: d.clone(),
            }),
            EncodedInput::Raster(r) => {
                if r.steps() < steps {
                    return Err(Error::Precondition(format!(
                        "input raster has {} steps, run needs {steps}",
                        r.steps()
                    )));
                }
                Ok(Self {
                    width: r.neurons(),
                    constant: false,
                    data: r.as_slice()[..steps * r.neurons()]
                        .iter()
                        .map(|&s| spike_value(s))
                        .collect(),
                })
            }
        }
    }

    #[inline]
    pub(crate) fn at(&self, n: usize) -> &[S] {
        if self.constant {
            &self.data
        } else {
            &self.data[n * self.width..(n + 1) * self.width]
        }
    }
}

/// Adds the contribution of one projection to `drive` at step `n`.
/// `activity(m)` returns the presynaptic activity at step `m <= n`.
#[inline]
pub(crate) fn accumulate_drive<'a, S: Scalar>(
    synapses: &SynapseBundle<S>,
    n: usize,
    activity: impl Fn(usize) -> &'a [S],
    drive: &mut [S],
) {
    for (xi, &e) in drive.iter_mut().zip(synapses.v_ext()) {
        *xi += e;
    }
    match synapses.uniform_delay() {
        Some(d) => {
            let d = d as usize;
            if d > n {
                return;
            }
            for (j, &a) in activity(n - d).iter().enumerate() {
                if a != S::zero() {
                    for (xi, &w) in drive.iter_mut().zip(synapses.row(j)) {
                        *xi += a * w;
                    }
                }
            }
        }
        None => {
            for j in 0..synapses.pre() {
                for (i, xi) in drive.iter_mut().enumerate() {
                    let d = synapses.delay(j, i) as usize;
                    if d <= n {
                        let a = activity(n - d)[j];
                        if a != S::zero() {
                            *xi += a * synapses.weight(j, i);
                        }
                    }
                }
            }
        }
    }
}

/// Runs the network for `steps` steps from rest.
///
/// A raster input must cover at least `steps` steps; a constant drive is
/// applied at every step.
pub fn run<S: Scalar>(net: &NetworkTopology<S>, input: &EncodedInput<S>, steps: usize, mode: Mode) -> Result<RunTrace<S>> {
    check_len("input width", net.input_size, input.width())?;
    let input = InputActivity::new(input, steps)?;

    let mut layers: Vec<LayerTrace<S>> = net
        .layers
        .iter()
        .map(|l| LayerTrace {
            size: l.size,
            potentials: vec![S::zero(); steps * l.size],
            surrogate: vec![S::zero(); steps * l.size],
            drive: vec![S::zero(); steps * l.size],
            raster: SpikeRaster::zeros(steps, l.size),
        })
        .collect();
    // Propagated activity per layer; identical to `surrogate` in surrogate mode.
    let mut activity: Vec<Vec<S>> = net.layers.iter().map(|l| vec![S::zero(); steps * l.size]).collect();

    for n in 0..steps {
        for &l in &net.order {
            let layer = &net.layers[l];
            let size = layer.size;
            let mut drive = vec![S::zero(); size];
            for p in net.projections.iter().filter(|p| p.target == l) {
                match p.source {
                    Source::Input => accumulate_drive(&p.synapses, n, |m| input.at(m), &mut drive),
                    Source::Layer(s) => {
                        let (hist, w) = (&activity[s], net.layers[s].size);
                        accumulate_drive(&p.synapses, n, |m| &hist[m * w..(m + 1) * w], &mut drive)
                    }
                }
            }

            let trace = &mut layers[l];
            let cur = n * size..(n + 1) * size;
            for i in 0..size {
                let (v_prev, s_prev) = if n == 0 {
                    (S::zero(), S::zero())
                } else {
                    (trace.potentials[(n - 1) * size + i], activity[l][(n - 1) * size + i])
                };
                let v = layer.dynamics.update(v_prev, s_prev, drive[i], &layer.params);
                let theta = layer.thresholds[i];
                let a = logistic(layer.params.beta() * (v - theta));
                let s = heaviside(v, theta);
                trace.potentials[cur.start + i] = v;
                trace.surrogate[cur.start + i] = a;
                trace.drive[cur.start + i] = drive[i];
                trace.raster.set(n, i, s);
                activity[l][cur.start + i] = match mode {
                    Mode::Binary => spike_value(s),
                    Mode::Surrogate => a,
                };
            }
        }
    }
    Ok(RunTrace { mode, steps, layers })
}

/// Per-neuron activity summed over time: spike counts in binary mode, summed
/// surrogate activations in surrogate mode.
pub fn spike_counts<S: Scalar>(trace: &RunTrace<S>, layer: usize) -> Result<Vec<S>> {
    let lt = trace
        .layers
        .get(layer)
        .ok_or_else(|| Error::Topology(format!("no layer {layer} in trace")))?;
    Ok(match trace.mode {
        Mode::Binary => lt.raster.counts().into_iter().map(S::from_usize_lossy).collect(),
        Mode::Surrogate => {
            let mut sums = vec![S::zero(); lt.size];
            for row in lt.surrogate.chunks_exact(lt.size) {
                for (s, &a) in sums.iter_mut().zip(row) {
                    *s += a;
                }
            }
            sums
        }
    })
}
