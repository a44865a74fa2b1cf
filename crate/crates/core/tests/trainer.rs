use std::sync::Arc;

use huca_core::config::{Ablation, RunConfig};
use huca_core::simenv::Scenario;
use huca_core::traceio::{synthetic_traces_seeded, SyntheticProfile};
use huca_core::trainer::{initial_bundle, train, ControlLayout};

fn small(episodes: usize) -> RunConfig {
    let mut cfg = RunConfig::new();
    cfg.station.n_piles = 3;
    cfg.train.episodes = episodes;
    cfg.train.batch_size = 32;
    cfg.train.scenario = Scenario::Uncertain;
    cfg
}

fn traces() -> Arc<huca_core::simenv::Traces> {
    Arc::new(synthetic_traces_seeded(8, 5, &SyntheticProfile::default()).unwrap())
}

#[test]
fn zero_episodes_returns_initial_networks() {
    let cfg = small(0);
    let out = train(&cfg, traces()).unwrap();
    assert!(out.log.records.is_empty());
    assert_eq!(out.bundle.to_files().unwrap(), initial_bundle(&cfg).unwrap().to_files().unwrap());
}

#[test]
fn no_updates_until_a_batch_is_stored() {
    let mut cfg = small(2);
    cfg.train.batch_size = 1000;
    let out = train(&cfg, traces()).unwrap();
    assert_eq!(out.log.total_update_steps(), 0);
    assert!(out.high_buffer.len() < 1000 && out.low_buffer.len() < 1000);
    assert_eq!(out.bundle.to_files().unwrap(), initial_bundle(&cfg).unwrap().to_files().unwrap());
}

#[test]
fn networks_move_once_updates_start() {
    let cfg = small(4);
    let out = train(&cfg, traces()).unwrap();
    assert!(out.log.total_update_steps() > 0);
    assert_ne!(out.bundle.to_files().unwrap(), initial_bundle(&cfg).unwrap().to_files().unwrap());
    assert_eq!(out.log.records.len(), 4);
    assert!(out.log.records.iter().all(|r| r.energy_cost.is_finite()));
}

#[test]
fn ablations_pick_their_layout() {
    for (ablation, hierarchical) in [
        (Ablation::Full, true),
        (Ablation::NoCriticAug, true),
        (Ablation::NoHigh, false),
        (Ablation::NoEither, false),
    ] {
        let mut cfg = small(2);
        cfg.train.ablation = ablation;
        let out = train(&cfg, traces()).unwrap();
        assert_eq!(out.log.hierarchical, hierarchical, "{ablation}");
        assert_eq!(out.bundle.high.is_some(), hierarchical, "{ablation}");
        assert_eq!(out.log.critic_augmentation, ablation.critic_augmentation(), "{ablation}");
        if !hierarchical {
            assert!(out.high_buffer.is_empty());
            assert_eq!(out.log.layout, ControlLayout::Flat);
        }
    }
}

#[test]
fn checkpoints_reload_identically() {
    let cfg = small(3);
    let out = train(&cfg, traces()).unwrap();
    let dir = tempfile_dir();
    out.bundle.save_dir(&dir).unwrap();
    let back = huca_core::trainer::PolicyBundle::load_dir(&dir).unwrap();
    assert_eq!(back.to_files().unwrap(), out.bundle.to_files().unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("huca-trainer-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn invalid_config_is_reported_before_training() {
    let mut cfg = small(1);
    cfg.train.tau = 1.5;
    assert!(train(&cfg, traces()).is_err());
}
