//! Exact event-driven leaky integrate-and-fire reference and its comparison
//! with the synchronous state model.
//!
//! Between events the potential relaxes towards the constant external drive,
//! `v(t) = u + (v(t0) - u) exp(-(t - t0)/tau)`. An arriving spike of weight `w`
//! raises the potential by `w / tau`. Reaching the threshold emits a spike,
//! resets the potential to zero and clamps it there for one refractory period
//! (the time unit), during which arrivals are discarded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::neuron::{gather_drive, Dynamics, LayerState, NeuronParams, SynapseBundle};
use crate::raster::{bin_events, SpikeEvent, SpikeEventList, SpikeRaster};

/// Refractory period; the unit of time throughout.
pub const TAU_R: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
struct Delivery {
    time: f64,
    target: usize,
    weight: f64,
}

impl PartialEq for Delivery {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Delivery {}

impl PartialOrd for Delivery {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Delivery {
    // Reversed so the max-heap pops the earliest delivery, lowest target first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.target.cmp(&self.target))
    }
}

struct Membrane {
    // Potential `anchor_v` holds at `anchor_t`; before `anchor_t` the neuron is refractory.
    anchor_t: f64,
    anchor_v: f64,
    drive: f64,
}

impl Membrane {
    fn potential(&self, t: f64, tau: f64) -> f64 {
        self.drive + (self.anchor_v - self.drive) * (-(t - self.anchor_t) / tau).exp()
    }

    fn next_crossing(&self, tau: f64, v0: f64) -> Option<f64> {
        if self.anchor_v >= v0 {
            return Some(self.anchor_t);
        }
        (self.drive > v0).then(|| self.anchor_t + tau * ((self.drive - self.anchor_v) / (self.drive - v0)).ln())
    }
}

/// Runs the continuous-time network up to `horizon` and returns every emitted spike.
///
/// `recurrent` is the N x N connectivity (all delays at least one step),
/// `input` maps external channels onto the N neurons. External events name
/// input channels. The constant drive of neuron `i` is the sum of both bundles'
/// `v_ext[i]`.
pub fn reference_lif_run(
    recurrent: &SynapseBundle<f64>,
    input: &SynapseBundle<f64>,
    external: &SpikeEventList,
    params: &NeuronParams<f64>,
    horizon: f64,
) -> Result<SpikeEventList> {
    let n = recurrent.post();
    check_len("recurrent presynaptic size", n, recurrent.pre())?;
    check_len("input postsynaptic size", n, input.post())?;
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if recurrent.pre() > 0 && recurrent.min_delay() == 0 {
        return Err(Error::Topology("recurrent delays must be at least one step".into()));
    }
    let tau = params.tau_m();
    let v0 = params.v0();

    let mut cells: Vec<Membrane> = (0..n)
        .map(|i| Membrane {
            anchor_t: 0.0,
            anchor_v: 0.0,
            drive: recurrent.v_ext()[i] + input.v_ext()[i],
        })
        .collect();

    let mut queue = BinaryHeap::new();
    for e in external.events() {
        if e.neuron >= input.pre() {
            return Err(Error::DimensionMismatch {
                what: "external channel index",
                expected: input.pre(),
                found: e.neuron,
            });
        }
        for (i, &w) in input.row(e.neuron).iter().enumerate() {
            if w != 0.0 {
                queue.push(Delivery {
                    time: e.time + input.delay(e.neuron, i) as f64 * TAU_R,
                    target: i,
                    weight: w,
                });
            }
        }
    }

    let mut out = SpikeEventList::new();
    let mut fire = |i: usize, t: f64, cells: &mut [Membrane], queue: &mut BinaryHeap<Delivery>| {
        out.push_sorted(SpikeEvent { neuron: i, time: t });
        cells[i].anchor_t = t + TAU_R;
        cells[i].anchor_v = 0.0;
        for (k, &w) in recurrent.row(i).iter().enumerate() {
            if w != 0.0 {
                queue.push(Delivery {
                    time: t + recurrent.delay(i, k) as f64 * TAU_R,
                    target: k,
                    weight: w,
                });
            }
        }
    };

    loop {
        let crossing = cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.next_crossing(tau, v0).map(|t| (t, i)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let delivery = queue.peek().copied();

        let take_crossing = match (crossing, delivery) {
            (None, None) => break,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some((tc, i)), Some(d)) => tc < d.time || (tc == d.time && i <= d.target),
        };

        if take_crossing {
            let (t, i) = crossing.expect("crossing selected");
            if t >= horizon {
                break;
            }
            fire(i, t, &mut cells, &mut queue);
        } else {
            let d = queue.pop().expect("delivery selected");
            if d.time >= horizon {
                break;
            }
            let cell = &mut cells[d.target];
            if d.time < cell.anchor_t {
                continue;
            }
            let v = cell.potential(d.time, tau) + d.weight / tau;
            cell.anchor_t = d.time;
            cell.anchor_v = v;
            if v >= v0 {
                fire(d.target, d.time, &mut cells, &mut queue);
            }
        }
    }
    Ok(out)
}

/// Synchronous counterpart of [`reference_lif_run`] on the same circuit, driven
/// by the binned external events.
pub fn state_model_run(
    recurrent: &SynapseBundle<f64>,
    input: &SynapseBundle<f64>,
    input_raster: &SpikeRaster,
    params: &NeuronParams<f64>,
    dynamics: Dynamics,
    steps: usize,
) -> Result<SpikeRaster> {
    let n = recurrent.post();
    check_len("input raster width", input.pre(), input_raster.neurons())?;
    if input_raster.steps() < steps {
        return Err(Error::Precondition(format!(
            "input raster covers {} steps, {steps} requested",
            input_raster.steps()
        )));
    }
    let mut raster = SpikeRaster::zeros(steps, n);
    let mut state = LayerState::<f64>::resting(n);
    for step in 0..steps {
        let ext = gather_drive(input_raster, input, step)?;
        let rec = gather_drive(&raster, recurrent, step)?;
        let drive: Vec<f64> = ext.iter().zip(&rec).map(|(a, b)| a + b).collect();
        state = match dynamics {
            Dynamics::Full => crate::neuron::step_full(&state, &drive, params)?,
            Dynamics::Simplified => crate::neuron::step_simplified(&state, &drive, params)?,
        };
        raster.row_mut(step).copy_from_slice(&state.s);
    }
    Ok(raster)
}

/// Pearson correlation of the per-neuron spike totals of two rasters.
///
/// A constant count vector has no defined correlation and yields
/// [`Error::DegenerateStatistics`].
pub fn raster_correlation(a: &SpikeRaster, b: &SpikeRaster) -> Result<f64> {
    check_len("raster neuron count", a.neurons(), b.neurons())?;
    let x: Vec<f64> = a.counts().into_iter().map(|c| c as f64).collect();
    let y: Vec<f64> = b.counts().into_iter().map(|c| c as f64).collect();
    pearson(&x, &y)
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    if x.is_empty() {
        return Err(Error::DegenerateStatistics("empty sample"));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateStatistics("constant spike-count vector"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Random-network ensemble used to compare the oracle against the state model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub networks: usize,
    pub neurons: usize,
    pub channels: usize,
    pub steps: usize,
    pub tau_m: f64,
    /// Probability that a given ordered neuron pair is connected.
    pub recurrent_density: f64,
    pub recurrent_weight: (f64, f64),
    pub max_delay: u32,
    /// Probability that a channel projects onto a given neuron.
    pub input_density: f64,
    pub input_weight: (f64, f64),
    /// Poisson rate of each external channel, in spikes per refractory period.
    pub input_rate: f64,
    /// Range of the constant sub-threshold drive.
    pub v_ext: (f64, f64),
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            networks: 20,
            neurons: 50,
            channels: 40,
            steps: 200,
            tau_m: 2.0,
            recurrent_density: 0.1,
            recurrent_weight: (-0.4, 0.8),
            max_delay: 3,
            input_density: 0.2,
            input_weight: (0.2, 1.2),
            input_rate: 0.05,
            v_ext: (0.0, 0.9),
        }
    }
}

/// One random circuit with its external spike trains.
#[derive(Debug, Clone)]
pub struct RandomCircuit {
    pub recurrent: SynapseBundle<f64>,
    pub input: SynapseBundle<f64>,
    pub external: SpikeEventList,
    pub params: NeuronParams<f64>,
}

impl RandomCircuit {
    pub fn sample(config: &ValidationConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = config.neurons;
        let m = config.channels;

        let mut weights = vec![0.0; n * n];
        let mut delays = vec![1u32; n * n];
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(config.recurrent_density) {
                    weights[j * n + i] = rng.random_range(config.recurrent_weight.0..config.recurrent_weight.1);
                }
                delays[j * n + i] = rng.random_range(1..=config.max_delay.max(1));
            }
        }
        let v_ext = (0..n)
            .map(|_| rng.random_range(config.v_ext.0..config.v_ext.1))
            .collect();
        let recurrent = SynapseBundle::new(n, n, weights, delays, v_ext)?;

        let mut in_weights = vec![0.0; m * n];
        for w in in_weights.iter_mut() {
            if rng.random_bool(config.input_density) {
                *w = rng.random_range(config.input_weight.0..config.input_weight.1);
            }
        }
        let input = SynapseBundle::uniform(m, n, in_weights, 0)?;

        let horizon = config.steps as f64 * TAU_R;
        let gap = Exp::new(config.input_rate).map_err(|e| Error::Domain(e.to_string()))?;
        let mut events = Vec::new();
        for c in 0..m {
            // Channels are spike sources too, so they respect the refractory period.
            let mut t = gap.sample(&mut rng);
            while t < horizon {
                events.push(SpikeEvent { neuron: c, time: t });
                t += TAU_R + gap.sample(&mut rng);
            }
        }
        Ok(Self {
            recurrent,
            input,
            external: SpikeEventList::from_unsorted(events)?,
            params: NeuronParams::new(config.tau_m, 1.0, 25.0)?,
        })
    }

    /// Oracle raster binned at `dt = tau_r`.
    pub fn oracle_raster(&self, steps: usize) -> Result<SpikeRaster> {
        let events = reference_lif_run(&self.recurrent, &self.input, &self.external, &self.params, steps as f64)?;
        bin_events(&events, TAU_R, steps, self.recurrent.post())
    }

    pub fn state_raster(&self, steps: usize) -> Result<SpikeRaster> {
        let input = bin_events(&self.external, TAU_R, steps, self.input.pre())?;
        state_model_run(&self.recurrent, &self.input, &input, &self.params, Dynamics::Full, steps)
    }
}

/// Per-network outcome of the oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub seed: u64,
    /// `None` when either count vector was constant.
    pub correlation: Option<f64>,
    pub oracle_spikes: usize,
    pub state_spikes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: Vec<ValidationRecord>,
    /// Median over the networks with a defined correlation.
    pub median_correlation: Option<f64>,
}

/// Compares oracle and state model over `config.networks` seeded random circuits.
pub fn validate_state_model(config: &ValidationConfig, seed: u64) -> Result<ValidationReport> {
    let mut records = Vec::with_capacity(config.networks);
    for k in 0..config.networks as u64 {
        let net_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
        let circuit = RandomCircuit::sample(config, net_seed)?;
        let oracle = circuit.oracle_raster(config.steps)?;
        let state = circuit.state_raster(config.steps)?;
        let correlation = match raster_correlation(&oracle, &state) {
            Ok(r) => Some(r),
            Err(Error::DegenerateStatistics(_)) => None,
            Err(e) => return Err(e),
        };
        records.push(ValidationRecord {
            seed: net_seed,
            correlation,
            oracle_spikes: oracle.total_spikes(),
            state_spikes: state.total_spikes(),
        });
    }
    let mut defined: Vec<f64> = records.iter().filter_map(|r| r.correlation).collect();
    defined.sort_by(f64::total_cmp);
    let median_correlation = (!defined.is_empty()).then(|| {
        let mid = defined.len() / 2;
        if defined.len() % 2 == 1 {
            defined[mid]
        } else {
            0.5 * (defined[mid - 1] + defined[mid])
        }
    });
    Ok(ValidationReport {
        records,
        median_correlation,
    })
}
