//! Seeded experiment runners. Every runner fills a [`RunRecord`]; MNIST runs
//! use `f32`, the oracle study and the agent use `f64`.

use std::time::Instant;

use anyhow::{bail, Context};
use mothcore::agent::{chi_square_uniform, kc_activity_map, simulate, source_map, World};
use mothcore::data::Dataset;
use mothcore::lif::validate_state_model;
use mothcore::mushroom::{apply_prior, build_mb, probe, train_mbon, KcSource, MushroomBodyTopology, Regime};
use mothcore::network::{run, spike_counts};
use mothcore::training::{argmax_lowest, evaluate, train_shallow, EncodedDataset, SampleSource, Snapshot, TrainOutcome};
use mothcore::{EncodedInput, EncoderSpec, Encoding, Metrics, Mode, NetworkF32, NeuronParams};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::data::{data_dir, load_mnist};
use crate::output::{RunRecord, Table};

/// Runs `config` and times it.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<RunRecord> {
    config.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new(config);
    match config.experiment {
        ExperimentKind::ValidateLif => validate_lif(config, &mut rec)?,
        ExperimentKind::Agent => agent(config, &mut rec)?,
        kind => {
            let (train, test) = mnist(config)?;
            match kind {
                ExperimentKind::Shallow => shallow(config, &train, &test, &mut rec)?,
                ExperimentKind::ShallowSweep => shallow_sweep(config, &train, &test, &mut rec)?,
                ExperimentKind::MbSweep => mb_sweep(config, &train, &test, &mut rec)?,
                ExperimentKind::MbRate | ExperimentKind::MbSpiking => {
                    mb_single(config, &train, &test, &mut rec)?;
                }
                ExperimentKind::Prior => {
                    let mb = mb_single(config, &train, &test, &mut rec)?;
                    prior(config, &mb, &test, &mut rec)?;
                }
                ExperimentKind::ValidateLif | ExperimentKind::Agent => unreachable!(),
            }
        }
    }
    rec.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Evaluates the network stored at `eval.model` on the test split.
pub fn run_eval(config: &ExperimentConfig) -> anyhow::Result<RunRecord> {
    if !matches!(config.experiment, ExperimentKind::Shallow) {
        bail!("eval works on shallow configs, got `{}`", config.experiment);
    }
    let path = config.eval.model.as_ref().context("eval needs `eval.model`, the network JSON written by `train`")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let net = NetworkF32::from_json(&text)?;
    let start = Instant::now();
    let (_, test) = mnist(config)?;
    let encoder = config.encoder.spec(config.seed)?;
    let metrics = evaluate(&net, &EncodedDataset::new(&test, encoder), encoder.steps())?;
    let mut rec = RunRecord::new(config);
    put_metrics(&mut rec, "", &metrics);
    rec.metric("test_samples", test.len() as f64);
    rec.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}

pub fn mnist(config: &ExperimentConfig) -> anyhow::Result<(Dataset, Dataset)> {
    let dir = data_dir(config.data.dir.as_deref())?;
    load_mnist(&dir, config.data.verify_digests, config.data.train_limit, config.data.test_limit)
}

fn put_metrics(rec: &mut RunRecord, prefix: &str, m: &Metrics) {
    rec.metric(&format!("{prefix}sigmoidal"), m.sigmoidal);
    rec.metric(&format!("{prefix}non_exclusive"), m.non_exclusive);
    rec.metric(&format!("{prefix}exclusive"), m.exclusive);
}

fn history_table(name: &str, history: &[Snapshot]) -> Table {
    let mut t = Table::new(name, &Snapshot::CSV_HEADER.split(',').collect::<Vec<_>>());
    for s in history {
        t.push(s.csv_line().split(','));
    }
    t
}

fn validate_lif(config: &ExperimentConfig, rec: &mut RunRecord) -> anyhow::Result<()> {
    let report = validate_state_model(&config.lif, config.seed)?;
    let mut t = Table::new("lif", &["network_seed", "correlation", "oracle_spikes", "state_spikes"]);
    for r in &report.records {
        let c = r.correlation.map_or_else(String::new, |c| c.to_string());
        t.push([r.seed.to_string(), c, r.oracle_spikes.to_string(), r.state_spikes.to_string()]);
    }
    rec.tables.push(t);
    rec.metric("networks", report.records.len() as f64);
    rec.metric("defined_correlations", report.records.iter().filter(|r| r.correlation.is_some()).count() as f64);
    rec.metric("median_correlation", report.median_correlation.unwrap_or(f64::NAN));
    Ok(())
}

fn shallow_params(config: &ExperimentConfig, tau_m: f64) -> anyhow::Result<NeuronParams<f32>> {
    let beta = config.train.beta.at(0.0);
    Ok(NeuronParams::new(tau_m as f32, config.neuron.threshold as f32, beta as f32)?)
}

fn train_row(config: &ExperimentConfig, train: &Dataset, test: &Dataset, tau_m: f64) -> anyhow::Result<TrainOutcome<f32>> {
    let encoder = config.encoder.spec(config.seed)?;
    let params = shallow_params(config, tau_m)?;
    Ok(train_shallow(&encoder, train, test, params, config.neuron.dynamics, &config.train)?)
}

fn shallow(config: &ExperimentConfig, train: &Dataset, test: &Dataset, rec: &mut RunRecord) -> anyhow::Result<()> {
    let out = train_row(config, train, test, config.neuron.tau_m)?;
    put_metrics(rec, "", &out.final_metrics);
    rec.metric("final_loss", out.history.last().map_or(f64::NAN, |s| s.loss));
    rec.metric("test_samples", test.len() as f64);
    rec.tables.push(history_table("history", &out.history));
    rec.artifacts.push(("model.json".into(), out.net.to_json()));
    Ok(())
}

fn shallow_sweep(config: &ExperimentConfig, train: &Dataset, test: &Dataset, rec: &mut RunRecord) -> anyhow::Result<()> {
    let outcomes = config
        .sweep
        .tau_m
        .par_iter()
        .map(|&tau| train_row(config, train, test, tau).map(|o| (tau, o.final_metrics)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut t = Table::new("tau_sweep", &["tau_m", "sigmoidal", "non_exclusive", "exclusive"]);
    for (tau, m) in &outcomes {
        t.push([*tau, m.sigmoidal, m.non_exclusive, m.exclusive]);
        put_metrics(rec, &format!("tau{tau}_"), m);
    }
    rec.tables.push(t);
    Ok(())
}

/// Builds, calibrates and trains one mushroom body.
pub fn train_mb(
    config: &ExperimentConfig,
    kenyon_cells: usize,
    inputs_per_kc: usize,
    train: &Dataset,
    test: &Dataset,
) -> anyhow::Result<(MushroomBodyTopology<f32>, TrainOutcome<f32>)> {
    let encoder = config.encoder.spec(config.seed)?;
    check_regime_encoder(config.mb.regime, &encoder)?;
    let body = mothcore::mushroom::MushroomBodyConfig {
        kenyon_cells,
        inputs_per_kc,
        ..config.mb.body.clone()
    };
    let mut mb = build_mb::<f32>(train.pixels(), &body, config.mb.regime, encoder.steps())?;
    match body.fanout_weight {
        Some(w) => mb.set_fanout_weight(w as f32),
        None => {
            let p = probe::<f32>(train, &encoder, config.mb.probe)?;
            mb.calibrate_activity(&p, body.kc_activity)?;
        }
    }
    let out = train_mbon(&mut mb, train, test, &encoder, &config.train)?;
    Ok((mb, out))
}

fn check_regime_encoder(regime: Regime, encoder: &EncoderSpec) -> anyhow::Result<()> {
    match (regime, encoder.variant()) {
        (Regime::Rate, Encoding::Constant) if encoder.steps() == 1 => Ok(()),
        (Regime::Rate, _) => bail!("the rate regime reads a one-step constant encoding"),
        (Regime::Spiking, Encoding::Constant) => bail!("the spiking regime needs a spike encoding"),
        (Regime::Spiking, _) => Ok(()),
    }
}

fn mb_single(config: &ExperimentConfig, train: &Dataset, test: &Dataset, rec: &mut RunRecord) -> anyhow::Result<MushroomBodyTopology<f32>> {
    let body = &config.mb.body;
    let (mb, out) = train_mb(config, body.kenyon_cells, body.inputs_per_kc, train, test)?;
    put_metrics(rec, "", &out.final_metrics);
    rec.metric("fanout_weight", mb.fanout_weight() as f64);
    rec.tables.push(history_table("history", &out.history));
    if mb.regime() == Regime::Spiking {
        let encoder = config.encoder.spec(config.seed)?;
        let s = kc_sparsity(&mb, test, &encoder, config.mb.sparsity_samples)?;
        rec.metric("kc_sparsity_inhibited", s.inhibited);
        rec.metric("kc_sparsity_uninhibited", s.uninhibited);
        rec.metric("kc_peak_step_inhibited", s.peak_step_inhibited);
        rec.metric("kc_peak_step_uninhibited", s.peak_step_uninhibited);
        let mut t = Table::new("kc_per_step", &["step", "inhibited", "uninhibited"]);
        for (n, (a, b)) in s.per_step.iter().enumerate() {
            t.push([n as f64, *a, *b]);
        }
        rec.tables.push(t);
        let (r, _) = probe_raster(&mb, test, &encoder)?;
        let mut raster = Table::new("kc_raster", &["step", "kc"]);
        for n in 0..r.steps() {
            for k in r.active(n) {
                raster.push([n, k]);
            }
        }
        rec.tables.push(raster);
    }
    rec.artifacts.push(("topology.json".into(), mb.to_json()));
    Ok(mb)
}

fn probe_raster(mb: &MushroomBodyTopology<f32>, test: &Dataset, encoder: &EncoderSpec) -> anyhow::Result<(mothcore::SpikeRaster, usize)> {
    let x = EncodedDataset::new(test, *encoder);
    match SampleSource::<f32>::input(&x, 0)? {
        EncodedInput::Raster(r) => Ok((mb.forward(&r)?.kc, SampleSource::<f32>::label(&x, 0))),
        EncodedInput::Drive(_) => bail!("spiking mushroom body fed a constant drive"),
    }
}

pub struct KcSparsity {
    /// Mean over samples and steps of the active KC fraction.
    pub inhibited: f64,
    pub uninhibited: f64,
    /// Largest per-step mean over samples.
    pub peak_step_inhibited: f64,
    pub peak_step_uninhibited: f64,
    pub per_step: Vec<(f64, f64)>,
}

/// Per-step KC activity over the first `count` test images, with the
/// inhibitory neuron and without it at the same fan-out weight.
pub fn kc_sparsity(mb: &MushroomBodyTopology<f32>, test: &Dataset, encoder: &EncoderSpec, count: usize) -> anyhow::Result<KcSparsity> {
    let off = mb.without_inhibition();
    let data = EncodedDataset::new(test, *encoder);
    let n = count.min(test.len());
    if n == 0 {
        bail!("no samples for the sparsity statistics");
    }
    let per_sample = (0..n)
        .into_par_iter()
        .map(|i| match SampleSource::<f32>::input(&data, i)? {
            EncodedInput::Raster(r) => Ok((mb.forward(&r)?.kc.active_fraction_per_step(), off.forward(&r)?.kc.active_fraction_per_step())),
            EncodedInput::Drive(_) => bail!("spiking mushroom body fed a constant drive"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let steps = encoder.steps();
    let mut per_step = vec![(0.0, 0.0); steps];
    for (a, b) in &per_sample {
        for (acc, (x, y)) in per_step.iter_mut().zip(a.iter().zip(b)) {
            acc.0 += x / n as f64;
            acc.1 += y / n as f64;
        }
    }
    let mean = |f: fn(&(f64, f64)) -> f64| per_step.iter().map(f).sum::<f64>() / steps as f64;
    let peak = |f: fn(&(f64, f64)) -> f64| per_step.iter().map(f).fold(0.0, f64::max);
    Ok(KcSparsity {
        inhibited: mean(|p| p.0),
        uninhibited: mean(|p| p.1),
        peak_step_inhibited: peak(|p| p.0),
        peak_step_uninhibited: peak(|p| p.1),
        per_step,
    })
}

fn mb_sweep(config: &ExperimentConfig, train: &Dataset, test: &Dataset, rec: &mut RunRecord) -> anyhow::Result<()> {
    let cells: Vec<(usize, usize)> = config
        .sweep
        .kenyon_cells
        .iter()
        .flat_map(|&n| config.sweep.inputs_per_kc.iter().map(move |&c| (n, c)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(n, c)| train_mb(config, n, c, train, test).map(|(_, o)| o.final_metrics))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut t = Table::new("grid", &["kenyon_cells", "inputs_per_kc", "sigmoidal", "non_exclusive", "exclusive"]);
    for (&(n, c), m) in cells.iter().zip(&results) {
        t.push([n as f64, c as f64, m.sigmoidal, m.non_exclusive, m.exclusive]);
        put_metrics(rec, &format!("n{n}_nc{c}_"), m);
    }
    rec.tables.push(t);
    let grid = SweepGrid {
        kenyon_cells: config.sweep.kenyon_cells.clone(),
        inputs_per_kc: config.sweep.inputs_per_kc.clone(),
        accuracy: results.iter().map(|m| m.sigmoidal).collect(),
    };
    rec.metric("max_spread_over_nc", grid.max_spread_over_nc());
    rec.metric("max_spread_over_n", grid.max_spread_over_n());
    rec.metric("worst_drop_in_n", grid.worst_drop_in_n());
    Ok(())
}

/// Sigmoidal accuracies, row-major over (N, n_c).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub kenyon_cells: Vec<usize>,
    pub inputs_per_kc: Vec<usize>,
    pub accuracy: Vec<f64>,
}

impl SweepGrid {
    pub fn at(&self, n: usize, c: usize) -> f64 {
        self.accuracy[n * self.inputs_per_kc.len() + c]
    }

    fn spread(values: impl Iterator<Item = f64>) -> f64 {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Largest max-minus-min over n_c at fixed N.
    pub fn max_spread_over_nc(&self) -> f64 {
        (0..self.kenyon_cells.len())
            .map(|n| Self::spread((0..self.inputs_per_kc.len()).map(|c| self.at(n, c))))
            .fold(0.0, f64::max)
    }

    /// Largest max-minus-min over N at fixed n_c.
    pub fn max_spread_over_n(&self) -> f64 {
        (0..self.inputs_per_kc.len())
            .map(|c| Self::spread((0..self.kenyon_cells.len()).map(|n| self.at(n, c))))
            .fold(0.0, f64::max)
    }

    /// Largest accuracy decrease between consecutive N at fixed n_c, with N
    /// taken in increasing order; zero when accuracy never drops.
    pub fn worst_drop_in_n(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.kenyon_cells.len()).collect();
        order.sort_by_key(|&i| self.kenyon_cells[i]);
        let mut worst: f64 = 0.0;
        for c in 0..self.inputs_per_kc.len() {
            for w in order.windows(2) {
                worst = worst.max(self.at(w[0], c) - self.at(w[1], c));
            }
        }
        worst
    }
}

/// Readout scores per test sample: summed surrogate activations.
pub fn readout_scores(mb: &MushroomBodyTopology<f32>, test: &Dataset, encoder: &EncoderSpec) -> anyhow::Result<Vec<(Vec<f64>, usize)>> {
    let source = KcSource {
        mb,
        data: EncodedDataset::new(test, *encoder),
    };
    let steps = match mb.regime() {
        Regime::Rate => 1,
        Regime::Spiking => encoder.steps(),
    };
    let net = mb.readout();
    (0..source.len())
        .into_par_iter()
        .map(|i| {
            let trace = run(net, &source.input(i)?, steps, Mode::Surrogate)?;
            let counts = spike_counts(&trace, net.output_layer())?;
            Ok((counts.iter().map(|&c| c as f64).collect(), source.label(i)))
        })
        .collect()
}

/// Prior with `mass` spread over `subset` and the rest over the other classes.
pub fn subset_prior(subset: &[usize], mass: f64, classes: usize) -> Vec<f64> {
    let inside = mass / subset.len() as f64;
    let outside = (1.0 - mass) / (classes - subset.len()).max(1) as f64;
    (0..classes).map(|c| if subset.contains(&c) { inside } else { outside }).collect()
}

/// Subset of `size` classes holding `label`, drawn from the sample's own stream.
pub fn label_subset(label: usize, size: usize, classes: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let others: Vec<usize> = (0..classes).filter(|&c| c != label).collect();
    let mut s: Vec<usize> = sample(&mut rng, others.len(), size.saturating_sub(1)).into_iter().map(|i| others[i]).collect();
    s.push(label);
    s.sort_unstable();
    s
}

fn prior(config: &ExperimentConfig, mb: &MushroomBodyTopology<f32>, test: &Dataset, rec: &mut RunRecord) -> anyhow::Result<()> {
    let encoder = config.encoder.spec(config.seed)?;
    let scores = readout_scores(mb, test, &encoder)?;
    let classes = 10;
    let p = &config.prior;
    let uniform = vec![1.0 / classes as f64; classes];
    let n = scores.len() as f64;
    let (mut raw, mut changed) = (0usize, 0usize);
    for (s, label) in &scores {
        let a = argmax_lowest(s).context("empty readout")?;
        raw += usize::from(a == *label);
        changed += usize::from(apply_prior(s, &uniform, p.kappa)? != a);
    }
    let accuracy_at = |mass: f64| -> anyhow::Result<f64> {
        let mut hits = 0usize;
        for (i, (s, label)) in scores.iter().enumerate() {
            let subset = label_subset(*label, p.subset, classes, config.seed, i as u64);
            hits += usize::from(apply_prior(s, &subset_prior(&subset, mass, classes), p.kappa)? == *label);
        }
        Ok(hits as f64 / n)
    };
    let mut t = Table::new("prior", &["mass_on_subset", "accuracy"]);
    let flat = p.subset as f64 / classes as f64;
    for mass in [flat, 0.5, 0.7, 0.9, 0.99] {
        if mass >= flat {
            t.push([mass, accuracy_at(mass)?]);
        }
    }
    rec.tables.push(t);
    rec.metric("prior_accuracy_raw", raw as f64 / n);
    rec.metric("prior_uniform_changed_decisions", changed as f64);
    rec.metric("prior_accuracy_uniform", accuracy_at(flat)?);
    rec.metric("prior_accuracy_concentrated", accuracy_at(p.mass)?);
    Ok(())
}

fn agent(config: &ExperimentConfig, rec: &mut RunRecord) -> anyhow::Result<()> {
    let (world, ep, mut agent) = simulate::<f64>(&config.world, &config.agent, config.episode.steps, config.seed)?;
    let in_target = |c: usize| world.in_target((c % world.width, c / world.width));
    let (inside, outside) = ep.mean_dwell_split(in_target);
    let b = config.episode.blocks;
    let chi = chi_square_uniform(&ep.block_map(b, b, config.episode.thin)?)?;
    let half = config.episode.steps / 2;
    rec.metric("dwell_inside", inside);
    rec.metric("dwell_outside", outside);
    rec.metric("dwell_ratio", inside / outside);
    rec.metric("modulation_events", ep.modulation_events as f64);
    rec.metric("events_second_half", ep.event_steps.iter().filter(|&&s| s >= half).count() as f64);
    rec.metric("last_event_step", ep.event_steps.last().map_or(-1.0, |&s| s as f64));
    rec.metric("events_outside_target", ep.visits.iter().filter(|v| v.modulated && !in_target(v.cell)).count() as f64);
    rec.metric("chi_square", chi.statistic);
    rec.metric("chi_square_dof", chi.dof as f64);
    rec.metric("chi_square_p", chi.p_value);
    let total: f64 = ep.dwell_map.iter().sum();
    rec.metric("dwell_conservation_error", (total - ep.total_dwell()).abs());
    rec.metric("final_weight_sum", ep.final_weights.iter().sum());

    let activity = kc_activity_map(&world, &mut agent)?;
    let mut valence = Vec::with_capacity(world.cells());
    for y in 0..world.height {
        for x in 0..world.width {
            valence.push(agent.valence_at(&world, (x, y))?);
        }
    }
    rec.metric("overlap_valence_correlation", overlap_valence_correlation(&world, &valence));
    rec.tables.push(Table::grid("dwell", &ep.dwell_map, world.width));
    rec.tables.push(Table::grid("sources", &source_map(&world), world.width));
    rec.tables.push(Table::grid("kc_activity", &activity, world.width));
    rec.tables.push(Table::grid("valence", &valence, world.width));
    let mut events = Table::new("events", &["step", "x", "y"]);
    for (s, v) in ep.event_steps.iter().zip(ep.visits.iter().filter(|v| v.modulated)) {
        events.push([*s, v.cell % world.width, v.cell / world.width]);
    }
    rec.tables.push(events);
    rec.artifacts.push(("world.json".into(), serde_json::to_string_pretty(&world)?));
    Ok(())
}

/// Pearson correlation across cells between the cosine similarity of the
/// sensed input to the one at the target centre and the learned valence.
pub fn overlap_valence_correlation(world: &World, valence: &[f64]) -> f64 {
    let centre = world.sense(world.target.center);
    let cn = centre.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut overlap = Vec::with_capacity(world.cells());
    for y in 0..world.height {
        for x in 0..world.width {
            let s = world.sense_cell((x, y));
            let sn = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = s.iter().zip(&centre).map(|(a, b)| a * b).sum();
            overlap.push(if sn > 0.0 && cn > 0.0 { dot / (sn * cn) } else { 0.0 });
        }
    }
    pearson(&overlap, valence)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_statistics() {
        let g = SweepGrid {
            kenyon_cells: vec![100, 1000],
            inputs_per_kc: vec![10, 70],
            accuracy: vec![0.70, 0.74, 0.90, 0.89],
        };
        assert!((g.max_spread_over_nc() - 0.04).abs() < 1e-12);
        assert!((g.max_spread_over_n() - 0.20).abs() < 1e-12);
        assert_eq!(g.worst_drop_in_n(), 0.0);
        let reversed = SweepGrid {
            kenyon_cells: vec![1000, 100],
            ..g.clone()
        };
        assert!((reversed.worst_drop_in_n() - 0.20).abs() < 1e-12);
    }

    #[test]
    fn priors_and_subsets() {
        let p = subset_prior(&[1, 4], 0.8, 10);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 0.4);
        assert!((p[0] - 0.025).abs() < 1e-15);
        let s = label_subset(7, 3, 10, 5, 11);
        assert_eq!(s.len(), 3);
        assert!(s.contains(&7) && s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, label_subset(7, 3, 10, 5, 11));
        assert_eq!(label_subset(2, 1, 10, 0, 0), vec![2]);
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!(pearson(&[1.0, 1.0], &[0.0, 1.0]).is_nan());
    }
}
