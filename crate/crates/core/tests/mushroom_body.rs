use mothcore::mushroom::{apply_prior, build_mb, InhibitionConfig, ModulatoryRule, MushroomBodyConfig, MushroomBodyTopology, Regime};
use mothcore::{EncodedInput, EncoderSpec, Encoding, SpikeRaster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(n: usize, nc: usize) -> MushroomBodyConfig {
    MushroomBodyConfig {
        kenyon_cells: n,
        inputs_per_kc: nc,
        ..Default::default()
    }
}

fn random_images(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| if rng.random_bool(0.2) { rng.random_range(0.3..1.0) } else { 0.0 }).collect())
        .collect()
}

fn rasters(images: &[Vec<f64>], steps: usize) -> Vec<EncodedInput<f64>> {
    let spec = EncoderSpec::new(Encoding::TrainDelay, steps).unwrap();
    images.iter().map(|x| spec.encode(x, &mut spec.sample_rng(0)).unwrap()).collect()
}

#[test]
fn fanout_has_distinct_sorted_inputs() {
    let mb = build_mb::<f64>(100, &config(300, 12), Regime::Rate, 1).unwrap();
    assert_eq!(mb.kenyon_cells(), 300);
    for kc in mb.fanout() {
        assert_eq!(kc.len(), 12);
        assert!(kc.windows(2).all(|w| w[0] < w[1]));
        assert!(kc.iter().all(|&i| i < 100));
    }
    assert!(build_mb::<f64>(10, &config(5, 11), Regime::Rate, 1).is_err());
}

#[test]
fn same_seed_same_body() {
    let a = build_mb::<f64>(64, &config(200, 8), Regime::Spiking, 6).unwrap();
    let b = build_mb::<f64>(64, &config(200, 8), Regime::Spiking, 6).unwrap();
    assert_eq!(a, b);
    let c = build_mb::<f64>(64, &MushroomBodyConfig { seed: 1, ..config(200, 8) }, Regime::Spiking, 6).unwrap();
    assert_ne!(a.fanout(), c.fanout());
}

#[test]
fn topology_json_round_trip() {
    let mb = build_mb::<f64>(30, &config(40, 5), Regime::Spiking, 4).unwrap();
    let back = MushroomBodyTopology::<f64>::from_json(&mb.to_json()).unwrap();
    assert_eq!(back, mb);
    assert_eq!(back.frozen_checksum(), mb.frozen_checksum());
}

#[test]
fn inhibition_lowers_kc_activity() {
    let images = random_images(40, 64, 3);
    let probe = rasters(&images, 12);
    let mut mb = build_mb::<f64>(64, &config(400, 8), Regime::Spiking, 12).unwrap();
    mb.calibrate_activity(&probe, 0.05).unwrap();
    let on = mb.mean_kc_activity(&probe).unwrap();
    let off = mb.without_inhibition().mean_kc_activity(&probe).unwrap();
    assert!((on - 0.05).abs() < 0.01, "{on}");
    assert!(off > on, "{off} <= {on}");
    let none = MushroomBodyConfig {
        inhibition: InhibitionConfig { enabled: false, ..Default::default() },
        ..config(400, 8)
    };
    assert!(build_mb::<f64>(64, &none, Regime::Spiking, 12).unwrap().inhibition().is_none());
}

#[test]
fn silent_input_keeps_kcs_silent() {
    let mb = build_mb::<f64>(16, &config(50, 4), Regime::Spiking, 5).unwrap();
    let run = mb.forward(&SpikeRaster::zeros(5, 16)).unwrap();
    assert_eq!(run.kc.total_spikes(), 0);
}

#[test]
fn modulation_only_touches_active_kcs() {
    let mut mb = build_mb::<f64>(16, &MushroomBodyConfig { outputs: 2, ..config(6, 3) }, Regime::Spiking, 4).unwrap();
    let before = mb.readout().projections()[0].synapses.weights().to_vec();
    let active = [true, false, false, true, false, false];
    let rule = ModulatoryRule { eta: 0.25, ..Default::default() };
    mb.modulatory_update(&active, &[true, false], false, &rule).unwrap();
    assert_eq!(mb.readout().projections()[0].synapses.weights(), &before[..]);
    mb.modulatory_update(&active, &[true, false], true, &rule).unwrap();
    let after = mb.readout().projections()[0].synapses.weights().to_vec();
    for j in 0..6 {
        for k in 0..2 {
            let w = before[j * 2 + k];
            assert_eq!(after[j * 2 + k], if active[j] { w + 0.25 } else { w });
        }
    }
    let gated = ModulatoryRule { post_gated: true, ..rule };
    let frozen = mb.frozen_checksum();
    mb.modulatory_update(&active, &[false, true], true, &gated).unwrap();
    let gated_after = mb.readout().projections()[0].synapses.weights();
    assert_eq!(gated_after[0], after[0]);
    assert_eq!(gated_after[1], after[1] + 0.25);
    assert_eq!(mb.frozen_checksum(), frozen);
}

#[test]
fn prior_rules() {
    let counts = [3.0, 5.0, 4.0];
    let uniform = [1.0 / 3.0; 3];
    assert_eq!(apply_prior(&counts, &uniform, 1.0).unwrap(), 1);
    assert_eq!(apply_prior(&counts, &[0.0, 0.0, 1.0], 2.0).unwrap(), 2);
    assert_eq!(apply_prior(&counts, &[0.8, 0.1, 0.1], 0.0).unwrap(), 1);
    assert!(apply_prior(&counts, &[0.5, 0.5], 1.0).is_err());
}
