//! Random toy networks and a central finite-difference oracle for their gradients.

use mothcore::network::{run, spike_counts};
use mothcore::training::{count_loss, sample_gradient};
use mothcore::{Dynamics, EncodedInput, Layer, Mode, NetworkTopology, NeuronParams, Projection, Source, SpikeRaster, SynapseBundle, TargetSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
// Below this the central difference is dominated by cancellation,
// about eps * |C| / h ~ 1e-10, so such coordinates are compared absolutely.
pub const FLOOR: f64 = 1e-5;

pub fn loss(net: &NetworkTopology<f64>, x: &EncodedInput<f64>, t: &TargetSpec, steps: usize) -> f64 {
    let trace = run(net, x, steps, Mode::Surrogate).unwrap();
    count_loss(&spike_counts(&trace, net.output_layer()).unwrap(), t).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Param {
    Weight(usize, usize),
    VExt(usize, usize),
    Threshold(usize, usize),
}

fn nudge(net: &mut NetworkTopology<f64>, p: Param, by: f64) {
    match p {
        Param::Weight(k, e) => net.projection_synapses_mut(k).weights_mut()[e] += by,
        Param::VExt(k, e) => net.projection_synapses_mut(k).v_ext_mut()[e] += by,
        Param::Threshold(l, i) => net.layers_mut()[l].thresholds[i] += by,
    }
}

fn all_params(net: &NetworkTopology<f64>) -> Vec<Param> {
    let mut out = Vec::new();
    for (k, p) in net.projections().iter().enumerate() {
        out.extend((0..p.synapses.weights().len()).map(|e| Param::Weight(k, e)));
        out.extend((0..p.synapses.post()).map(|e| Param::VExt(k, e)));
    }
    for (l, layer) in net.layers().iter().enumerate() {
        out.extend((0..layer.size).map(|i| Param::Threshold(l, i)));
    }
    out
}

fn bundle(rng: &mut ChaCha8Rng, pre: usize, post: usize, delays: impl Fn(&mut ChaCha8Rng) -> u32) -> SynapseBundle<f64> {
    let w = (0..pre * post).map(|_| rng.random_range(-1.0..2.0)).collect();
    let d = (0..pre * post).map(|_| delays(rng)).collect();
    let e = (0..post).map(|_| rng.random_range(-0.3..0.5)).collect();
    SynapseBundle::new(pre, post, w, d, e).unwrap()
}

/// Small networks of varied shape, all with at most ten weights.
pub fn toy_net(seed: u64) -> (NetworkTopology<f64>, EncodedInput<f64>, TargetSpec, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.random_range(2..=5);
    let dynamics = if rng.random_bool(0.5) { Dynamics::Full } else { Dynamics::Simplified };
    let layer = |rng: &mut ChaCha8Rng, size| {
        let p = NeuronParams::new(rng.random_range(0.7..4.0), 1.0, rng.random_range(2.0..25.0)).unwrap();
        let mut l = Layer::new(size, p, dynamics);
        for t in &mut l.thresholds {
            *t = rng.random_range(0.6..1.2);
        }
        l
    };
    let proj = |source, target, synapses| Projection { source, target, synapses, plastic: true };
    let (net, inputs) = match seed % 4 {
        0 => {
            let l = layer(&mut rng, 3);
            let ff = bundle(&mut rng, 3, 3, |_| 0);
            (NetworkTopology::new(3, vec![l], vec![proj(Source::Input, 0, ff)]).unwrap(), 3)
        }
        1 => {
            let l = layer(&mut rng, 2);
            let ff = bundle(&mut rng, 2, 2, |_| 0);
            let rec = bundle(&mut rng, 2, 2, |r| r.random_range(1..=2));
            let net = NetworkTopology::new(2, vec![l], vec![proj(Source::Input, 0, ff), proj(Source::Layer(0), 0, rec)]);
            (net.unwrap(), 2)
        }
        2 => {
            let (h, o) = (layer(&mut rng, 2), layer(&mut rng, 2));
            let a = bundle(&mut rng, 2, 2, |_| 0);
            let b = bundle(&mut rng, 2, 2, |r| r.random_range(0..=1));
            let net = NetworkTopology::new(2, vec![h, o], vec![proj(Source::Input, 0, a), proj(Source::Layer(0), 1, b)]);
            (net.unwrap(), 2)
        }
        _ => {
            let (o, h) = (layer(&mut rng, 2), layer(&mut rng, 2));
            let a = bundle(&mut rng, 1, 2, |_| 0);
            let b = bundle(&mut rng, 2, 2, |_| 0);
            let rec = bundle(&mut rng, 2, 2, |_| 1);
            let net = NetworkTopology::new(
                1,
                vec![o, h],
                vec![proj(Source::Layer(1), 0, b), proj(Source::Input, 1, a), proj(Source::Layer(0), 0, rec)],
            );
            (net.unwrap(), 1)
        }
    };
    let input = if rng.random_bool(0.25) {
        EncodedInput::Drive((0..inputs).map(|_| rng.random_range(0.0..1.0)).collect())
    } else {
        let data = (0..steps * inputs).map(|_| rng.random_bool(0.5)).collect();
        EncodedInput::Raster(SpikeRaster::from_rows(steps, inputs, data).unwrap())
    };
    let outputs = net.layers()[net.output_layer()].size;
    let counts = (0..outputs).map(|_| rng.random_range(0..=steps)).collect();
    (net, input, TargetSpec::new(counts, steps).unwrap(), steps)
}

/// Worst relative error over every weight, drive and threshold of toy net
/// `seed`, with the offending coordinate.
pub fn max_relative_error(seed: u64) -> (f64, usize, String) {
    let (net, x, t, steps) = toy_net(seed);
    let weights: usize = net.projections().iter().map(|p| p.synapses.weights().len()).sum();
    assert!(weights <= 10 && steps <= 5);
    let (_, grads) = sample_gradient(&net, &x, &t, steps).unwrap();
    let (mut worst, mut at) = (0.0f64, String::new());
    let params = all_params(&net);
    for &p in &params {
        let analytic = match p {
            Param::Weight(k, e) => grads.weights[k][e],
            Param::VExt(k, e) => grads.v_ext[k][e],
            Param::Threshold(l, i) => grads.thresholds[l][i],
        };
        let (mut plus, mut minus) = (net.clone(), net.clone());
        nudge(&mut plus, p, H);
        nudge(&mut minus, p, -H);
        let numeric = (loss(&plus, &x, &t, steps) - loss(&minus, &x, &t, steps)) / (2.0 * H);
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
        if err >= worst {
            worst = err;
            at = format!("{p:?}: analytic {analytic} numeric {numeric}");
        }
    }
    (worst, params.len(), at)
}

