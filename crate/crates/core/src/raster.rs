//! Binary spike rasters and continuous-time spike event lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-major binary activity matrix: `steps` rows of `neurons` entries.
///
/// `dt` is the bin width in units of the absolute refractory period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRaster {
    steps: usize,
    neurons: usize,
    dt: f64,
    data: Vec<bool>,
}

impl SpikeRaster {
    pub fn zeros(steps: usize, neurons: usize) -> Self {
        Self::zeros_with_dt(steps, neurons, 1.0)
    }

    pub fn zeros_with_dt(steps: usize, neurons: usize, dt: f64) -> Self {
        Self {
            steps,
            neurons,
            dt,
            data: vec![false; steps * neurons],
        }
    }

    /// Builds a raster from row-major booleans.
    pub fn from_rows(steps: usize, neurons: usize, data: Vec<bool>) -> Result<Self> {
        crate::error::check_len("raster data", steps * neurons, data.len())?;
        Ok(Self {
            steps,
            neurons,
            dt: 1.0,
            data,
        })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn neurons(&self) -> usize {
        self.neurons
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn get(&self, step: usize, neuron: usize) -> bool {
        self.data[step * self.neurons + neuron]
    }

    #[inline]
    pub fn set(&mut self, step: usize, neuron: usize, spike: bool) {
        self.data[step * self.neurons + neuron] = spike;
    }

    #[inline]
    pub fn row(&self, step: usize) -> &[bool] {
        &self.data[step * self.neurons..(step + 1) * self.neurons]
    }

    #[inline]
    pub fn row_mut(&mut self, step: usize) -> &mut [bool] {
        &mut self.data[step * self.neurons..(step + 1) * self.neurons]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    /// Indices of the neurons spiking at `step`.
    pub fn active(&self, step: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(step)
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
    }

    /// Per-neuron spike totals over the whole window.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.neurons];
        for row in self.data.chunks_exact(self.neurons.max(1)) {
            for (c, &s) in counts.iter_mut().zip(row) {
                *c += s as usize;
            }
        }
        counts
    }

    pub fn total_spikes(&self) -> usize {
        self.data.iter().filter(|&&s| s).count()
    }

    /// Fraction of (step, neuron) entries that carry a spike.
    pub fn sparsity(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.total_spikes() as f64 / self.data.len() as f64
    }

    /// Fraction of neurons active at each step.
    pub fn active_fraction_per_step(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|n| {
                if self.neurons == 0 {
                    0.0
                } else {
                    self.active(n).count() as f64 / self.neurons as f64
                }
            })
            .collect()
    }
}

/// One spike: emitting neuron (or input channel) and firing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub neuron: usize,
    pub time: f64,
}

/// Time-sorted list of spikes in continuous time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeEventList {
    events: Vec<SpikeEvent>,
}

impl SpikeEventList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorts by time, ties in ascending neuron index.
    pub fn from_unsorted(mut events: Vec<SpikeEvent>) -> Result<Self> {
        if let Some(bad) = events.iter().find(|e| !e.time.is_finite() || e.time < 0.0) {
            return Err(Error::Domain(format!(
                "spike time {} of neuron {} is not a non-negative finite number",
                bad.time, bad.neuron
            )));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.neuron.cmp(&b.neuron)));
        Ok(Self { events })
    }

    pub(crate) fn push_sorted(&mut self, event: SpikeEvent) {
        debug_assert!(self.events.last().is_none_or(|e| e.time <= event.time));
        self.events.push(event);
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Smallest gap between consecutive spikes of the same neuron, if any neuron fired twice.
    pub fn min_interspike_interval(&self) -> Option<f64> {
        let mut last: std::collections::HashMap<usize, f64> = Default::default();
        let mut best: Option<f64> = None;
        for e in &self.events {
            if let Some(prev) = last.insert(e.neuron, e.time) {
                let gap = e.time - prev;
                best = Some(best.map_or(gap, |b: f64| b.min(gap)));
            }
        }
        best
    }
}

/// Bins continuous spikes into a raster: entry `(n, i)` is set iff neuron `i`
/// fired in `[n*dt, (n+1)*dt)`. Spikes at or beyond `steps*dt` are dropped.
///
/// `dt` may not exceed the refractory period (1.0), otherwise two spikes of one
/// neuron could share a bin.
pub fn bin_events(events: &SpikeEventList, dt: f64, steps: usize, neurons: usize) -> Result<SpikeRaster> {
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::Precondition(format!(
            "bin width {dt} must lie in (0, tau_r = 1]"
        )));
    }
    let mut raster = SpikeRaster::zeros_with_dt(steps, neurons, dt);
    for e in events.events() {
        if e.neuron >= neurons {
            return Err(Error::DimensionMismatch {
                what: "event neuron index",
                expected: neurons,
                found: e.neuron,
            });
        }
        let bin = (e.time / dt).floor();
        if bin < steps as f64 {
            raster.set(bin as usize, e.neuron, true);
        }
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(neuron: usize, time: f64) -> SpikeEvent {
        SpikeEvent { neuron, time }
    }

    #[test]
    fn empty_events_bin_to_zero_raster() {
        let r = bin_events(&SpikeEventList::new(), 1.0, 5, 3).unwrap();
        assert_eq!(r.total_spikes(), 0);
    }

    #[test]
    fn spike_lands_in_its_bin() {
        let dt = 0.5;
        let list = SpikeEventList::from_unsorted(vec![ev(0, 2.5 * dt)]).unwrap();
        let r = bin_events(&list, dt, 4, 1).unwrap();
        assert!(r.get(2, 0));
        assert_eq!(r.total_spikes(), 1);
    }

    #[test]
    fn refractory_spaced_spikes_fill_consecutive_bins() {
        let list = SpikeEventList::from_unsorted(vec![ev(0, 2.1), ev(0, 0.1), ev(0, 1.1)]).unwrap();
        let r = bin_events(&list, 1.0, 4, 1).unwrap();
        assert_eq!(
            (0..4).map(|n| r.get(n, 0)).collect::<Vec<_>>(),
            vec![true, true, true, false]
        );
    }

    #[test]
    fn coarse_bins_are_rejected() {
        let err = bin_events(&SpikeEventList::new(), 1.5, 4, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn sparsity_counts_entries() {
        assert_eq!(SpikeRaster::zeros(24, 1000).sparsity(), 0.0);
        let ones = SpikeRaster::from_rows(3, 2, vec![true; 6]).unwrap();
        assert_eq!(ones.sparsity(), 1.0);
        let mut r = SpikeRaster::zeros(24, 1000);
        for k in 0..120 {
            r.set(k % 24, (k * 7) % 1000, true);
        }
        assert_eq!(r.total_spikes(), 120);
        assert!((r.sparsity() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn negative_times_rejected() {
        assert!(SpikeEventList::from_unsorted(vec![ev(0, -0.1)]).is_err());
    }
}
