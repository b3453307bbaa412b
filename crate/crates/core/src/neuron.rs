//! Synchronous state model of a leaky integrate-and-fire neuron.
//!
//! Time is discretised in bins of one absolute refractory period. Each step a
//! neuron integrates its drive `xi` with leak factor `decay = exp(-1/tau_m)`.
//! The full model keeps a second branch for neurons that spiked in the previous
//! bin: they were refractory for part of the bin and therefore charge less.
//!
//! ```text
//! full:        v' = (1 - s) [ (1 - decay) xi + decay v ] + s xi (1 - tau_m (1 - decay))
//! simplified:  v' = (1 - decay) xi + (1 - s) decay v
//! spike:       s' = H(v' - v0),  H(0) = 1
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::raster::SpikeRaster;
use crate::scalar::{logistic, Scalar};

/// Per-layer neuron constants.
///
/// `tau_m` is normalised to the refractory period, `v0` is the firing
/// threshold and `beta` the sharpness of the surrogate logistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<S>", into = "RawParams<S>")]
#[serde(bound = "S: Scalar")]
pub struct NeuronParams<S> {
    tau_m: S,
    v0: S,
    beta: S,
    decay: S,
    refractory_gain: S,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct RawParams<S> {
    tau_m: S,
    v0: S,
    beta: S,
}

impl<S: Scalar> TryFrom<RawParams<S>> for NeuronParams<S> {
    type Error = Error;

    fn try_from(raw: RawParams<S>) -> Result<Self> {
        NeuronParams::new(raw.tau_m, raw.v0, raw.beta)
    }
}

impl<S: Scalar> From<NeuronParams<S>> for RawParams<S> {
    fn from(p: NeuronParams<S>) -> Self {
        RawParams {
            tau_m: p.tau_m,
            v0: p.v0,
            beta: p.beta,
        }
    }
}

impl<S: Scalar> NeuronParams<S> {
    pub fn new(tau_m: S, v0: S, beta: S) -> Result<Self> {
        if !(tau_m > S::zero()) || !tau_m.is_finite() {
            return Err(Error::Domain(format!("tau_m must be positive, got {tau_m}")));
        }
        if !(beta > S::zero()) || !beta.is_finite() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if !(v0 > S::zero() && v0 <= S::one()) {
            return Err(Error::Domain(format!("threshold v0 must lie in (0, 1], got {v0}")));
        }
        let decay = (-tau_m.recip()).exp();
        if !(decay > S::zero() && decay < S::one()) {
            return Err(Error::Domain(format!(
                "tau_m = {tau_m} gives a leak factor outside (0, 1) at this precision"
            )));
        }
        Ok(Self {
            tau_m,
            v0,
            beta,
            decay,
            refractory_gain: S::one() - tau_m * (S::one() - decay),
        })
    }

    /// Parameters with the default threshold `v0 = 1` and `beta = 25`.
    pub fn with_tau(tau_m: S) -> Result<Self> {
        Self::new(tau_m, S::one(), S::lit(25.0))
    }

    #[inline]
    pub fn tau_m(&self) -> S {
        self.tau_m
    }

    #[inline]
    pub fn v0(&self) -> S {
        self.v0
    }

    #[inline]
    pub fn beta(&self) -> S {
        self.beta
    }

    /// Leak factor `exp(-1/tau_m)`.
    #[inline]
    pub fn decay(&self) -> S {
        self.decay
    }

    /// Charging factor for a neuron that spiked in the previous bin:
    /// `1 - tau_m (1 - decay)`.
    #[inline]
    pub fn refractory_gain(&self) -> S {
        self.refractory_gain
    }

    pub fn with_beta(self, beta: S) -> Result<Self> {
        Self::new(self.tau_m, self.v0, beta)
    }

    pub fn with_v0(self, v0: S) -> Result<Self> {
        Self::new(self.tau_m, v0, self.beta)
    }

    /// Converts between precisions.
    pub fn cast<T: Scalar>(&self) -> NeuronParams<T> {
        NeuronParams::new(
            T::lit(self.tau_m.as_f64()),
            T::lit(self.v0.as_f64()),
            T::lit(self.beta.as_f64()),
        )
        .expect("validated parameters stay valid across precisions")
    }
}

/// Which recurrence a layer integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Refractory-aware two-branch update.
    #[default]
    Full,
    /// Recurrent McCulloch-Pitts form without the refractory correction.
    Simplified,
}

/// Partial derivatives of one potential update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdatePartials<S> {
    pub d_drive: S,
    pub d_potential: S,
    pub d_spike: S,
}

impl Dynamics {
    /// New membrane potential given the previous potential, previous spike
    /// indicator (0/1, or a surrogate activation in (0, 1)) and the drive.
    #[inline]
    pub fn update<S: Scalar>(self, v_prev: S, s_prev: S, xi: S, p: &NeuronParams<S>) -> S {
        let one = S::one();
        match self {
            Dynamics::Full => {
                (one - s_prev) * ((one - p.decay) * xi + p.decay * v_prev)
                    + s_prev * p.refractory_gain * xi
            }
            Dynamics::Simplified => (one - p.decay) * xi + (one - s_prev) * p.decay * v_prev,
        }
    }

    /// Derivatives of [`Dynamics::update`] with respect to each argument.
    #[inline]
    pub fn partials<S: Scalar>(self, v_prev: S, s_prev: S, xi: S, p: &NeuronParams<S>) -> UpdatePartials<S> {
        let one = S::one();
        match self {
            Dynamics::Full => UpdatePartials {
                d_drive: (one - s_prev) * (one - p.decay) + s_prev * p.refractory_gain,
                d_potential: (one - s_prev) * p.decay,
                d_spike: p.refractory_gain * xi - (one - p.decay) * xi - p.decay * v_prev,
            },
            Dynamics::Simplified => UpdatePartials {
                d_drive: one - p.decay,
                d_potential: (one - s_prev) * p.decay,
                d_spike: -p.decay * v_prev,
            },
        }
    }
}

/// Heaviside with the tie rule `H(0) = 1`.
#[inline]
pub fn heaviside<S: Scalar>(v: S, v0: S) -> bool {
    v >= v0
}

/// Membrane potentials and spike indicators of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LayerState<S> {
    pub v: Vec<S>,
    pub s: Vec<bool>,
}

impl<S: Scalar> LayerState<S> {
    pub fn resting(n: usize) -> Self {
        Self {
            v: vec![S::zero(); n],
            s: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

fn step_with<S: Scalar>(
    dynamics: Dynamics,
    state: &LayerState<S>,
    drive: &[S],
    params: &NeuronParams<S>,
) -> Result<LayerState<S>> {
    check_len("spike vector", state.v.len(), state.s.len())?;
    check_len("drive", state.v.len(), drive.len())?;
    let v: Vec<S> = state
        .v
        .iter()
        .zip(&state.s)
        .zip(drive)
        .map(|((&v, &s), &xi)| {
            let s = if s { S::one() } else { S::zero() };
            dynamics.update(v, s, xi, params)
        })
        .collect();
    let s = v.iter().map(|&v| heaviside(v, params.v0())).collect();
    Ok(LayerState { v, s })
}

/// One step of the refractory-aware recurrence.
pub fn step_full<S: Scalar>(state: &LayerState<S>, drive: &[S], params: &NeuronParams<S>) -> Result<LayerState<S>> {
    step_with(Dynamics::Full, state, drive, params)
}

/// One step of the simplified recurrence (memory dropped after a spike).
pub fn step_simplified<S: Scalar>(
    state: &LayerState<S>,
    drive: &[S],
    params: &NeuronParams<S>,
) -> Result<LayerState<S>> {
    step_with(Dynamics::Simplified, state, drive, params)
}

/// Element-wise `sigma(beta (v - v0))`.
pub fn surrogate_activation<S: Scalar>(v: &[S], params: &NeuronParams<S>) -> Vec<S> {
    v.iter()
        .map(|&v| logistic(params.beta() * (v - params.v0())))
        .collect()
}

/// Synapses from a presynaptic population onto a postsynaptic one.
///
/// `weights` and `delays` are stored pre-major: entry `(j, i)` lives at
/// `j * post + i`. Delays are whole time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SynapseBundle<S> {
    pre: usize,
    post: usize,
    weights: Vec<S>,
    delays: Vec<u32>,
    v_ext: Vec<S>,
}

impl<S: Scalar> SynapseBundle<S> {
    pub fn new(pre: usize, post: usize, weights: Vec<S>, delays: Vec<u32>, v_ext: Vec<S>) -> Result<Self> {
        check_len("synapse weights", pre * post, weights.len())?;
        check_len("synapse delays", pre * post, delays.len())?;
        check_len("external drive", post, v_ext.len())?;
        Ok(Self {
            pre,
            post,
            weights,
            delays,
            v_ext,
        })
    }

    /// All delays equal to `delay`, no external drive.
    pub fn uniform(pre: usize, post: usize, weights: Vec<S>, delay: u32) -> Result<Self> {
        Self::new(pre, post, weights, vec![delay; pre * post], vec![S::zero(); post])
    }

    pub fn zeros(pre: usize, post: usize, delay: u32) -> Self {
        Self::uniform(pre, post, vec![S::zero(); pre * post], delay).expect("sizes agree")
    }

    #[inline]
    pub fn pre(&self) -> usize {
        self.pre
    }

    #[inline]
    pub fn post(&self) -> usize {
        self.post
    }

    #[inline]
    pub fn weight(&self, j: usize, i: usize) -> S {
        self.weights[j * self.post + i]
    }

    #[inline]
    pub fn delay(&self, j: usize, i: usize) -> u32 {
        self.delays[j * self.post + i]
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [S] {
        &mut self.weights
    }

    /// Weights leaving presynaptic neuron `j`.
    #[inline]
    pub fn row(&self, j: usize) -> &[S] {
        &self.weights[j * self.post..(j + 1) * self.post]
    }

    pub fn delays(&self) -> &[u32] {
        &self.delays
    }

    pub fn v_ext(&self) -> &[S] {
        &self.v_ext
    }

    pub fn v_ext_mut(&mut self) -> &mut [S] {
        &mut self.v_ext
    }

    pub fn max_delay(&self) -> u32 {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    pub fn min_delay(&self) -> u32 {
        self.delays.iter().copied().min().unwrap_or(0)
    }

    /// The common delay when every synapse shares one.
    pub fn uniform_delay(&self) -> Option<u32> {
        let first = *self.delays.first()?;
        self.delays.iter().all(|&d| d == first).then_some(first)
    }

    pub fn cast<T: Scalar>(&self) -> SynapseBundle<T> {
        SynapseBundle {
            pre: self.pre,
            post: self.post,
            weights: self.weights.iter().map(|w| T::lit(w.as_f64())).collect(),
            delays: self.delays.clone(),
            v_ext: self.v_ext.iter().map(|w| T::lit(w.as_f64())).collect(),
        }
    }
}

/// Drive at step `n`: `v_ext_i + sum_j w_ji s_j(n - d_ji)`, with steps before
/// zero contributing nothing. The weight divisor `tau_r` is one time step.
pub fn gather_drive<S: Scalar>(history: &SpikeRaster, synapses: &SynapseBundle<S>, n: usize) -> Result<Vec<S>> {
    check_len("presynaptic raster width", synapses.pre(), history.neurons())?;
    let mut drive = synapses.v_ext().to_vec();
    for j in 0..synapses.pre() {
        for (i, xi) in drive.iter_mut().enumerate() {
            let d = synapses.delay(j, i) as usize;
            if d > n {
                continue;
            }
            let step = n - d;
            if step >= history.steps() {
                return Err(Error::Precondition(format!(
                    "history has {} steps but step {step} is needed",
                    history.steps()
                )));
            }
            if history.get(step, j) {
                *xi += synapses.weight(j, i);
            }
        }
    }
    Ok(drive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn half_decay() -> NeuronParams<f64> {
        NeuronParams::new(1.0 / std::f64::consts::LN_2, 1.0, 10.0).unwrap()
    }

    fn state(v: f64, s: bool) -> LayerState<f64> {
        LayerState { v: vec![v], s: vec![s] }
    }

    #[test]
    fn params_cache_decay() {
        let p = half_decay();
        assert_abs_diff_eq!(p.decay(), 0.5, epsilon = 1e-12);
        let p = NeuronParams::<f64>::with_tau(3.7).unwrap();
        assert_abs_diff_eq!(p.decay(), (-1.0f64 / 3.7).exp(), epsilon = 1e-12);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(NeuronParams::<f64>::new(0.0, 1.0, 1.0).is_err());
        assert!(NeuronParams::<f64>::new(1.0, 1.5, 1.0).is_err());
        assert!(NeuronParams::<f64>::new(1.0, 0.0, 1.0).is_err());
        assert!(NeuronParams::<f64>::new(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn params_serde_restores_cache() {
        let p = NeuronParams::<f64>::new(2.5, 0.8, 12.0).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(!text.contains("decay"));
        let back: NeuronParams<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<NeuronParams<f64>>(r#"{"tau_m":-1,"v0":1,"beta":1}"#).is_err());
    }

    #[test]
    fn zero_state_zero_drive_stays_silent() {
        let p = half_decay();
        let out = step_full(&state(0.0, false), &[0.0], &p).unwrap();
        assert_eq!(out, state(0.0, false));
        let out = step_simplified(&state(0.0, false), &[0.0], &p).unwrap();
        assert_eq!(out, state(0.0, false));
    }

    #[test]
    fn full_step_first_branch() {
        let out = step_full(&state(0.4, false), &[0.6], &half_decay()).unwrap();
        assert_abs_diff_eq!(out.v[0], 0.5, epsilon = 1e-12);
        assert!(!out.s[0]);
    }

    #[test]
    fn full_step_second_branch_ignores_memory() {
        let p = half_decay();
        for v in [-3.0, 0.0, 0.9, 7.0] {
            let out = step_full(&state(v, true), &[1.0], &p).unwrap();
            let expected = 1.0 - (1.0 / std::f64::consts::LN_2) * 0.5;
            assert_abs_diff_eq!(out.v[0], expected, epsilon = 1e-12);
            assert_abs_diff_eq!(out.v[0], 0.27865, epsilon = 1e-5);
            assert!(!out.s[0]);
        }
    }

    #[test]
    fn simplified_step_examples() {
        let p = half_decay();
        let out = step_simplified(&state(0.4, false), &[0.6], &p).unwrap();
        assert_abs_diff_eq!(out.v[0], 0.5, epsilon = 1e-12);
        assert!(!out.s[0]);
        let out = step_simplified(&state(0.9, true), &[2.2], &p).unwrap();
        assert_abs_diff_eq!(out.v[0], 1.1, epsilon = 1e-12);
        assert!(out.s[0]);
    }

    #[test]
    fn threshold_tie_fires() {
        let p = NeuronParams::<f64>::new(1.0 / std::f64::consts::LN_2, 0.5, 10.0).unwrap();
        let out = step_simplified(&state(0.0, false), &[1.0], &p).unwrap();
        assert_eq!(out.v[0], 0.5);
        assert!(out.s[0]);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let err = step_full(&state(0.0, false), &[0.0, 1.0], &half_decay()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn subthreshold_fixed_point_is_the_drive() {
        let p = NeuronParams::<f64>::with_tau(3.0).unwrap();
        let mut s = state(0.0, false);
        for n in 1..=200 {
            s = step_simplified(&s, &[0.7], &p).unwrap();
            let gap = 0.7 - s.v[0];
            assert_abs_diff_eq!(gap, 0.7 * p.decay().powi(n), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(s.v[0], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn surrogate_examples() {
        let p = NeuronParams::<f64>::new(1.0, 0.8, 10.0).unwrap();
        let a = surrogate_activation(&[0.8, 1.0], &p);
        assert_abs_diff_eq!(a[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 0.8808, epsilon = 1e-4);
        let steep = p.with_beta(1e6).unwrap();
        let a = surrogate_activation(&[0.81, 0.79], &steep);
        assert!(a[0] > 1.0 - 1e-12 && a[1] < 1e-12);
    }

    fn raster(rows: &[&[bool]]) -> SpikeRaster {
        let n = rows[0].len();
        SpikeRaster::from_rows(rows.len(), n, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn drive_from_silent_history_is_external() {
        let syn = SynapseBundle::new(2, 2, vec![0.3, 0.1, 0.5, 0.2], vec![1, 1, 2, 2], vec![0.05, 0.4]).unwrap();
        let hist = SpikeRaster::zeros(4, 2);
        assert_eq!(gather_drive(&hist, &syn, 3).unwrap(), vec![0.05, 0.4]);
    }

    #[test]
    fn drive_sums_delayed_spikes() {
        let syn = SynapseBundle::uniform(1, 1, vec![0.7], 1).unwrap();
        let hist = raster(&[&[false], &[true], &[false]]);
        assert_abs_diff_eq!(gather_drive(&hist, &syn, 2).unwrap()[0], 0.7);

        let syn = SynapseBundle::new(2, 1, vec![0.3, 0.5], vec![1, 2], vec![0.0]).unwrap();
        let hist = raster(&[&[false, true], &[true, false], &[false, false]]);
        assert_abs_diff_eq!(gather_drive(&hist, &syn, 2).unwrap()[0], 0.8, epsilon = 1e-12);
        // Before the delays reach back into the raster nothing arrives.
        assert_eq!(gather_drive(&hist, &syn, 0).unwrap()[0], 0.0);
    }

    proptest! {
        #[test]
        fn full_and_simplified_agree_without_prior_spike(
            v in -2.0f64..2.0, xi in -3.0f64..3.0, tau in 0.2f64..20.0, v0 in 0.05f64..1.0,
        ) {
            let p = NeuronParams::new(tau, v0, 25.0).unwrap();
            let a = step_full(&state(v, false), &[xi], &p).unwrap();
            let b = step_simplified(&state(v, false), &[xi], &p).unwrap();
            prop_assert!((a.v[0] - b.v[0]).abs() <= 1e-12);
            prop_assert_eq!(a.s[0], b.s[0]);
        }

        #[test]
        fn spikes_follow_heaviside(
            v in -2.0f64..2.0, s in any::<bool>(), xi in -3.0f64..3.0, tau in 0.2f64..20.0,
        ) {
            let p = NeuronParams::with_tau(tau).unwrap();
            let out = step_full(&state(v, s), &[xi], &p).unwrap();
            prop_assert_eq!(out.s[0], out.v[0] >= p.v0());
        }

        #[test]
        fn surrogate_is_monotone_and_bounded(a in -5.0f64..5.0, b in -5.0f64..5.0, beta in 0.1f64..50.0) {
            let p = NeuronParams::new(1.0, 1.0, beta).unwrap();
            let out = surrogate_activation(&[a.min(b), a.max(b)], &p);
            prop_assert!(out[0] <= out[1]);
            prop_assert!(out.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn partials_match_finite_differences(
            v in -2.0f64..2.0, s in 0.0f64..1.0, xi in -3.0f64..3.0, tau in 0.3f64..10.0, full in any::<bool>(),
        ) {
            let p = NeuronParams::with_tau(tau).unwrap();
            let dy = if full { Dynamics::Full } else { Dynamics::Simplified };
            let d = dy.partials(v, s, xi, &p);
            let h = 1e-6;
            let fd = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
            prop_assert!((d.d_drive - fd(&|x| dy.update(v, s, x, &p), xi)).abs() < 1e-6);
            prop_assert!((d.d_potential - fd(&|x| dy.update(x, s, xi, &p), v)).abs() < 1e-6);
            prop_assert!((d.d_spike - fd(&|x| dy.update(v, x, xi, &p), s)).abs() < 1e-6);
        }
    }
}
