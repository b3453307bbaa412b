//! A random-walk agent whose dwell time follows the valence a mushroom body
//! assigns to what it senses, with online modulatory reinforcement.
//!
//! The map is a grid of unit cells. Gaussian point sources each emit a fixed
//! signature over the input channels; the agent senses their sum at its cell,
//! encodes it as spike trains, and reads the single output neuron's spike
//! count as valence. Dwell time is bookkeeping per visit, not extra steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::encoding::{EncodedInput, EncoderSpec, Encoding};
use crate::error::{check_len, Error, Result};
use crate::mushroom::{build_mb, KcRun, ModulatoryRule, MushroomBodyConfig, MushroomBodyTopology, Regime};
use crate::network::{run, spike_counts, Mode};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub position: [f64; 2],
    pub signature: Vec<f64>,
    pub amplitude: f64,
    pub sigma: f64,
}

/// Disk where reinforcement is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRegion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl TargetRegion {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub sources: Vec<PointSource>,
    pub target: TargetRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    pub sources: usize,
    pub channels: usize,
    /// Channels each signature activates.
    pub active_channels: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub target_radius: f64,
    /// Put the first source at the target centre.
    pub source_in_target: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 32,
            height: 32,
            sources: 10,
            channels: 20,
            active_channels: 5,
            amplitude: 1.0,
            sigma: 3.0,
            target_radius: 3.0,
            source_in_target: true,
        }
    }
}

/// Cell centre of a grid cell.
fn centre(cell: (usize, usize)) -> [f64; 2] {
    [cell.0 as f64 + 0.5, cell.1 as f64 + 0.5]
}

pub fn sample_world<R: Rng + ?Sized>(config: &WorldConfig, rng: &mut R) -> Result<World> {
    if config.width == 0 || config.height == 0 {
        return Err(Error::Domain("map must have at least one cell".into()));
    }
    if config.active_channels > config.channels {
        return Err(Error::Domain("signature wider than the channel count".into()));
    }
    if !(config.sigma > 0.0 && config.amplitude > 0.0) {
        return Err(Error::Domain("sources need positive amplitude and width".into()));
    }
    let (w, h) = (config.width as f64, config.height as f64);
    let target = TargetRegion {
        center: [w / 2.0, h / 2.0],
        radius: config.target_radius,
    };
    let sources = (0..config.sources)
        .map(|k| {
            let position = if k == 0 && config.source_in_target {
                target.center
            } else {
                [rng.random_range(0.0..w), rng.random_range(0.0..h)]
            };
            let mut signature = vec![0.0; config.channels];
            for c in rand::seq::index::sample(rng, config.channels, config.active_channels) {
                signature[c] = 1.0;
            }
            PointSource {
                position,
                signature,
                amplitude: config.amplitude,
                sigma: config.sigma,
            }
        })
        .collect();
    Ok(World {
        width: config.width,
        height: config.height,
        channels: config.channels,
        sources,
        target,
    })
}

impl World {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_index(&self, cell: (usize, usize)) -> usize {
        cell.1 * self.width + cell.0
    }

    pub fn in_target(&self, cell: (usize, usize)) -> bool {
        self.target.contains(centre(cell))
    }

    /// Gaussian field of every source, clamped to `[0, 1]` per channel.
    pub fn sense(&self, p: [f64; 2]) -> Vec<f64> {
        let mut x = vec![0.0; self.channels];
        for s in &self.sources {
            let d2 = (p[0] - s.position[0]).powi(2) + (p[1] - s.position[1]).powi(2);
            let g = s.amplitude * (-d2 / (2.0 * s.sigma * s.sigma)).exp();
            for (xi, &c) in x.iter_mut().zip(&s.signature) {
                *xi += g * c;
            }
        }
        for xi in &mut x {
            *xi = xi.clamp(0.0, 1.0);
        }
        x
    }

    pub fn sense_cell(&self, cell: (usize, usize)) -> Vec<f64> {
        self.sense(centre(cell))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub base_dwell: f64,
    pub valence_gain: f64,
    /// Encoder steps; valence is the output count divided by this.
    pub steps: usize,
    pub rule: ModulatoryRule,
    pub mb: MushroomBodyConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            base_dwell: 1.0,
            valence_gain: 4.0,
            steps: 8,
            rule: ModulatoryRule::default(),
            mb: MushroomBodyConfig {
                kenyon_cells: 200,
                inputs_per_kc: 6,
                outputs: 1,
                kc_activity: 0.02,
                kc_tau: 2.0,
                mbon_tau: 2.0,
                ..Default::default()
            },
        }
    }
}

/// Dwell for a valence: `base (1 + gain v)`.
pub fn dwell(base: f64, gain: f64, valence: f64) -> f64 {
    base * (1.0 + gain * valence)
}

/// True when the learned response already reaches `threshold`.
pub fn feedback_suppression(valence: f64, threshold: f64) -> bool {
    valence >= threshold
}

/// Agent with a spiking mushroom body of one output neuron whose readout
/// starts at zero. KC responses are cached per cell since only the readout
/// learns.
pub struct Agent<S> {
    pub cell: (usize, usize),
    pub config: AgentConfig,
    mb: MushroomBodyTopology<S>,
    encoder: EncoderSpec,
    kc_cache: Vec<Option<KcRun>>,
    /// Valence per cell under the current readout.
    valence_cache: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub cell: (usize, usize),
    pub valence: f64,
    pub dwell: f64,
    pub modulated: bool,
}

impl<S: Scalar> Agent<S> {
    pub fn new(world: &World, config: AgentConfig, start: (usize, usize)) -> Result<Self> {
        if start.0 >= world.width || start.1 >= world.height {
            return Err(Error::Domain(format!("start {start:?} outside the map")));
        }
        let mut mb = build_mb::<S>(world.channels, &config.mb, Regime::Spiking, config.steps)?;
        let syn = mb.readout_mut().projection_synapses_mut(0);
        syn.weights_mut().fill(S::zero());
        syn.v_ext_mut().fill(S::zero());
        let encoder = EncoderSpec::new(Encoding::TrainDelay, config.steps)?;
        if config.mb.fanout_weight.is_none() {
            let probe = (0..world.cells())
                .map(|i| {
                    let x: Vec<S> = world.sense_cell((i % world.width, i / world.width)).into_iter().map(S::lit).collect();
                    encoder.encode(&x, &mut encoder.sample_rng(i as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            mb.calibrate_activity(&probe, config.mb.kc_activity)?;
        }
        Ok(Self {
            cell: start,
            config,
            mb,
            encoder,
            kc_cache: vec![None; world.cells()],
            valence_cache: vec![None; world.cells()],
        })
    }

    pub fn mb(&self) -> &MushroomBodyTopology<S> {
        &self.mb
    }

    pub fn readout_weights(&self) -> &[S] {
        self.mb.readout().projections()[0].synapses.weights()
    }

    fn kc_run(&mut self, world: &World, cell: (usize, usize)) -> Result<&KcRun> {
        let idx = world.cell_index(cell);
        if self.kc_cache[idx].is_none() {
            let x: Vec<S> = world.sense_cell(cell).into_iter().map(S::lit).collect();
            let r = match self.encoder.encode(&x, &mut self.encoder.sample_rng(idx as u64))? {
                EncodedInput::Raster(r) => r,
                EncodedInput::Drive(_) => unreachable!("train-delay encodes rasters"),
            };
            self.kc_cache[idx] = Some(self.mb.forward(&r)?);
        }
        Ok(self.kc_cache[idx].as_ref().expect("filled above"))
    }

    /// Output spike count over the window divided by the window length.
    pub fn valence_at(&mut self, world: &World, cell: (usize, usize)) -> Result<f64> {
        let idx = world.cell_index(cell);
        if let Some(v) = self.valence_cache[idx] {
            return Ok(v);
        }
        let steps = self.config.steps;
        let response = self.kc_run(world, cell)?.clone();
        let kc = self.mb.readout_input(&response);
        let trace = run(self.mb.readout(), &kc, steps, Mode::Binary)?;
        let v = spike_counts(&trace, 0)?[0].as_f64() / steps as f64;
        self.valence_cache[idx] = Some(v);
        Ok(v)
    }

    /// Fraction of KCs that spike at least once at `cell`.
    pub fn kc_activity(&mut self, world: &World, cell: (usize, usize)) -> Result<f64> {
        let run = self.kc_run(world, cell)?;
        Ok(run.kc.counts().iter().filter(|&&c| c > 0).count() as f64 / run.kc.neurons() as f64)
    }

    /// Sense, set dwell from valence, maybe reinforce, then move.
    pub fn step<R: Rng + ?Sized>(&mut self, world: &World, rng: &mut R) -> Result<StepOutcome> {
        let here = self.cell;
        let valence = self.valence_at(world, here)?;
        let d = dwell(self.config.base_dwell, self.config.valence_gain, valence);
        let mut modulated = false;
        let rule = self.config.rule.clone();
        // The draw happens on every visit so the walk itself does not depend
        // on whether reinforcement is enabled.
        let fire = rng.random::<f64>() < rule.p0;
        if world.in_target(here) && fire && !(rule.feedback && feedback_suppression(valence, rule.threshold)) {
            let active: Vec<bool> = self.kc_run(world, here)?.kc.counts().iter().map(|&c| c > 0).collect();
            self.mb.modulatory_update(&active, &[true], true, &rule)?;
            self.valence_cache.fill(None);
            modulated = true;
        }
        self.cell = random_step(world, here, rng);
        Ok(StepOutcome {
            cell: here,
            valence,
            dwell: d,
            modulated,
        })
    }
}

/// One of four neighbours, uniformly; a move off the map leaves the agent in
/// place, which keeps the uniform distribution stationary.
pub fn random_step<R: Rng + ?Sized>(world: &World, cell: (usize, usize), rng: &mut R) -> (usize, usize) {
    let (x, y) = cell;
    match rng.random_range(0..4u8) {
        0 if x + 1 < world.width => (x + 1, y),
        1 if x > 0 => (x - 1, y),
        2 if y + 1 < world.height => (x, y + 1),
        3 if y > 0 => (x, y - 1),
        _ => cell,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub cell: usize,
    pub dwell: f64,
    pub modulated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub width: usize,
    pub height: usize,
    pub visits: Vec<Visit>,
    /// Dwell summed per cell, row-major.
    pub dwell_map: Vec<f64>,
    pub modulation_events: usize,
    /// Step index of every modulation event.
    pub event_steps: Vec<usize>,
    pub final_weights: Vec<f64>,
}

impl EpisodeRecord {
    pub fn total_dwell(&self) -> f64 {
        self.visits.iter().map(|v| v.dwell).sum()
    }

    /// Mean dwell per visit over the cells selected by `inside`, and over the rest.
    pub fn mean_dwell_split(&self, inside: impl Fn(usize) -> bool) -> (f64, f64) {
        let (mut a, mut na, mut b, mut nb) = (0.0, 0usize, 0.0, 0usize);
        for v in &self.visits {
            if inside(v.cell) {
                a += v.dwell;
                na += 1;
            } else {
                b += v.dwell;
                nb += 1;
            }
        }
        (a / na as f64, b / nb as f64)
    }

    /// Dwell map coarsened into `bx x by` blocks, row-major.
    pub fn block_map(&self, bx: usize, by: usize, thin: usize) -> Result<Vec<f64>> {
        if bx == 0 || by == 0 || !self.width.is_multiple_of(bx) || !self.height.is_multiple_of(by) {
            return Err(Error::Domain(format!("{}x{} map does not split into {bx}x{by} blocks", self.width, self.height)));
        }
        let (cw, ch) = (self.width / bx, self.height / by);
        let mut out = vec![0.0; bx * by];
        for v in self.visits.iter().step_by(thin.max(1)) {
            let (x, y) = (v.cell % self.width, v.cell / self.width);
            out[(y / ch) * bx + x / cw] += v.dwell;
        }
        Ok(out)
    }
}

pub fn run_episode<S: Scalar, R: Rng + ?Sized>(world: &World, agent: &mut Agent<S>, steps: usize, rng: &mut R) -> Result<EpisodeRecord> {
    if steps == 0 {
        return Err(Error::Precondition("an episode needs at least one step".into()));
    }
    let mut visits = Vec::with_capacity(steps);
    let mut dwell_map = vec![0.0; world.cells()];
    let mut event_steps = Vec::new();
    for n in 0..steps {
        let o = agent.step(world, rng)?;
        let cell = world.cell_index(o.cell);
        dwell_map[cell] += o.dwell;
        if o.modulated {
            event_steps.push(n);
        }
        visits.push(Visit {
            cell,
            dwell: o.dwell,
            modulated: o.modulated,
        });
    }
    Ok(EpisodeRecord {
        width: world.width,
        height: world.height,
        visits,
        dwell_map,
        modulation_events: event_steps.len(),
        event_steps,
        final_weights: agent.readout_weights().iter().map(|w| w.as_f64()).collect(),
    })
}

/// Seeded world, agent at a random cell, one episode.
pub fn simulate<S: Scalar>(world_config: &WorldConfig, agent_config: &AgentConfig, steps: usize, seed: u64) -> Result<(World, EpisodeRecord, Agent<S>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = sample_world(world_config, &mut rng)?;
    let start = (rng.random_range(0..world.width), rng.random_range(0..world.height));
    let mut agent = Agent::new(&world, agent_config.clone(), start)?;
    let record = run_episode(&world, &mut agent, steps, &mut rng)?;
    Ok((world, record, agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of `observed` against equal expected counts.
pub fn chi_square_uniform(observed: &[f64]) -> Result<ChiSquare> {
    if observed.len() < 2 {
        return Err(Error::Precondition("chi-square needs at least two cells".into()));
    }
    let total: f64 = observed.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateStatistics("no observations"));
    }
    let expected = total / observed.len() as f64;
    let statistic = observed.iter().map(|&o| (o - expected).powi(2) / expected).sum();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Row-major grid as CSV, one map row per line.
pub fn grid_csv(values: &[f64], width: usize) -> Result<String> {
    if width == 0 || !values.len().is_multiple_of(width) {
        return Err(Error::Domain("grid width does not divide the value count".into()));
    }
    let mut out = String::new();
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Total sensed intensity per cell, row-major.
pub fn source_map(world: &World) -> Vec<f64> {
    let mut out = Vec::with_capacity(world.cells());
    for y in 0..world.height {
        for x in 0..world.width {
            out.push(world.sense_cell((x, y)).iter().sum());
        }
    }
    out
}

/// Fraction of active KCs per cell, row-major.
pub fn kc_activity_map<S: Scalar>(world: &World, agent: &mut Agent<S>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(world.cells());
    for y in 0..world.height {
        for x in 0..world.width {
            out.push(agent.kc_activity(world, (x, y))?);
        }
    }
    check_len("activity map", world.cells(), out.len())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone(signature: Vec<f64>, amplitude: f64) -> World {
        World {
            width: 16,
            height: 16,
            channels: signature.len(),
            sources: vec![PointSource {
                position: [4.0, 4.0],
                signature,
                amplitude,
                sigma: 2.0,
            }],
            target: TargetRegion {
                center: [8.0, 8.0],
                radius: 2.0,
            },
        }
    }

    #[test]
    fn sensing_a_lone_source() {
        let w = lone(vec![0.0, 1.0, 0.0], 0.8);
        assert_eq!(w.sense([4.0, 4.0]), vec![0.0, 0.8, 0.0]);
        let at_sigma = w.sense([6.0, 4.0])[1];
        assert!((at_sigma / 0.8 - (-0.5f64).exp()).abs() < 1e-12);
        assert!(w.sense([4.0, 16.0])[1] / 0.8 < 2e-8);
        let bright = lone(vec![1.0], 3.0);
        assert_eq!(bright.sense([4.0, 4.0]), vec![1.0]);
        let empty = World { sources: vec![], ..w };
        assert_eq!(empty.sense([1.0, 1.0]), vec![0.0; 3]);
    }

    #[test]
    fn worlds_are_seeded() {
        let c = WorldConfig::default();
        let a = sample_world(&c, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_world(&c, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.sources.iter().all(|s| s.signature.iter().sum::<f64>() == 5.0));
        assert!(a.in_target((16, 16)) && !a.in_target((0, 0)));
    }

    #[test]
    fn dwell_formula() {
        assert_eq!(dwell(1.5, 3.0, 0.0), 1.5);
        assert_eq!(dwell(1.0, 2.0, 1.0), 3.0);
        assert!(dwell(1.0, 3.0, 0.4) > dwell(1.0, 3.0, 0.3));
        assert!(!feedback_suppression(0.0, 0.5));
        assert!(feedback_suppression(0.5, 0.5));
    }

    #[test]
    fn walk_stays_on_the_map() {
        let w = lone(vec![1.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = (0, 0);
        for _ in 0..10_000 {
            c = random_step(&w, c, &mut rng);
            assert!(c.0 < 16 && c.1 < 16);
        }
    }

    #[test]
    fn chi_square_examples() {
        let flat = chi_square_uniform(&[10.0; 64]).unwrap();
        assert_eq!(flat.statistic, 0.0);
        assert!((flat.p_value - 1.0).abs() < 1e-12);
        // One cell holding everything is maximally non-uniform.
        let mut spike = vec![0.0; 64];
        spike[0] = 640.0;
        assert!(chi_square_uniform(&spike).unwrap().p_value < 1e-12);
        assert!(chi_square_uniform(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn grid_csv_layout() {
        assert_eq!(grid_csv(&[1.0, 2.0, 3.0, 4.5], 2).unwrap(), "1,2\n3,4.5\n");
        assert!(grid_csv(&[1.0, 2.0, 3.0], 2).is_err());
    }
}
