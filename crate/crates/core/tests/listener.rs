use std::sync::OnceLock;

use rand::seq::SliceRandom;
use revcorr::experiment::{exclude_approach_phase, run_block, Presentation, SessionConfig};
use revcorr::listener::{
    decide, derive_templates, match_difference, ArtificialListener, AuditoryModel, DecisionState, ModelConfig,
    Templates,
};
use revcorr::noise::{generate, NoiseKind, NoiseSpec};
use revcorr::seed;
use revcorr::signal::{mix_at_snr, LevelConvention, Snr};
use revcorr::stats::pearson;
use revcorr::targets::{TargetId, TargetPair};

struct Fixture {
    model: AuditoryModel,
    targets: TargetPair,
    templates: Templates,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let model = AuditoryModel::new(ModelConfig::default()).unwrap();
        let targets = TargetPair::synthetic();
        let templates = derive_templates(&targets, &model, 11).unwrap();
        Fixture {
            model,
            targets,
            templates,
        }
    })
}

fn listener() -> ArtificialListener {
    let f = fixture();
    ArtificialListener::new(AuditoryModel::new(ModelConfig::default()).unwrap(), f.templates.clone())
}

fn raw_at(f: &Fixture, id: TargetId, snr: f64, noise_seed: u64, rove_db: f64) -> f64 {
    let spec = NoiseSpec::white();
    let p = Presentation {
        trial_index: 0,
        target: id,
        snr,
        rove_db,
        noise_seed,
        targets: &f.targets,
        noise_spec: &spec,
    };
    let ir = f.model.internal_representation(&p.mixture().unwrap()).unwrap();
    match_difference(&ir, &f.templates, true)
}

#[test]
fn templates_have_unit_energy() {
    let t = &fixture().templates;
    for id in TargetId::BOTH {
        let e: f64 = t.get(id).values.iter().map(|v| v * v).sum();
        assert!((e - 1.0).abs() < 1e-9, "{e}");
    }
    assert_eq!((t.snr, t.n_realizations), (-6.0, 100));
}

#[test]
fn templates_reproduce_across_seeds() {
    let f = fixture();
    let other = derive_templates(&f.targets, &f.model, 12).unwrap();
    for id in TargetId::BOTH {
        let r = pearson(&f.templates.get(id).values, &other.get(id).values);
        assert!(r > 0.95, "{id}: {r}");
    }
}

#[test]
fn distinct_targets_give_distinct_templates() {
    let t = &fixture().templates;
    let r = pearson(&t.aba.values, &t.ada.values);
    assert!(r < 0.999, "{r}");
}

#[test]
fn clean_ada_is_recognized() {
    let f = fixture();
    let noise = generate(&NoiseSpec::white(), 5).unwrap().waveform;
    let mix = mix_at_snr(&f.targets.ada, &noise, Snr::Db(30.0), LevelConvention::default()).unwrap();
    let raw = match_difference(&f.model.internal_representation(&mix).unwrap(), &f.templates, true);
    assert_eq!(decide(raw, &mut DecisionState::default(), 0.0), TargetId::Ada, "raw {raw}");
}

#[test]
fn supra_threshold_targets_are_recognized() {
    let f = fixture();
    for (i, id) in TargetId::BOTH.into_iter().enumerate() {
        let raw = raw_at(f, id, 0.0, 60 + i as u64, 0.0);
        assert_eq!(decide(raw, &mut DecisionState::default(), 0.0), id, "raw {raw}");
    }
}

#[test]
fn symmetric_stream_is_answered_evenly() {
    let f = fixture();
    let mut l = listener();
    let mut order: Vec<TargetId> = (0..2000).map(|i| TargetId::BOTH[i % 2]).collect();
    order.shuffle(&mut seed::rng(31));
    let mut n_ada = 0;
    for (i, &id) in order.iter().enumerate() {
        let raw = raw_at(f, id, -15.0, seed::derive(31, seed::stream::TRIAL_NOISE, i as u64), 0.0);
        if decide(raw, &mut l.state, 0.01) == TargetId::Ada {
            n_ada += 1;
        }
    }
    let ratio = n_ada as f64 / 2000.0;
    assert!((0.45..=0.55).contains(&ratio), "{ratio}");
}

#[test]
fn rove_sign_rarely_flips_decisions() {
    let f = fixture();
    // fixed bias centred on the decision distribution at this SNR
    let n = 150;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..n {
        let id = TargetId::BOTH[i % 2];
        let s = seed::derive(41, seed::stream::TRIAL_NOISE, i as u64);
        pos.push(raw_at(f, id, -15.0, s, 2.5));
        neg.push(raw_at(f, id, -15.0, s, -2.5));
    }
    let mut all: Vec<f64> = pos.iter().chain(&neg).cloned().collect();
    all.sort_by(f64::total_cmp);
    let bias = -all[all.len() / 2];
    let flips = pos
        .iter()
        .zip(&neg)
        .filter(|(a, b)| (**a + bias > 0.0) != (**b + bias > 0.0))
        .count();
    assert!((flips as f64) < 0.1 * n as f64, "{flips} of {n}");
}

#[test]
fn bias_reduces_response_imbalance() {
    let f = fixture();
    // three "ada" for every "aba"
    let trials: Vec<(TargetId, u64)> = (0..400)
        .map(|i| {
            let id = if i % 4 == 0 { TargetId::Aba } else { TargetId::Ada };
            (id, seed::derive(51, seed::stream::TRIAL_NOISE, i as u64))
        })
        .collect();
    let raws: Vec<f64> = trials.iter().map(|&(id, s)| raw_at(f, id, -15.0, s, 0.0)).collect();
    let imbalance = |rate: f64| {
        let mut state = DecisionState::default();
        for &r in &raws {
            decide(r, &mut state, rate);
        }
        state.imbalance().abs()
    };
    let with = imbalance(0.01);
    let without = imbalance(0.0);
    assert!(without > with + 0.05, "without {without}, with {with}");
}

#[test]
fn thresholds_are_plausible_and_stable() {
    let f = fixture();
    let mut l = listener();
    let cfg = SessionConfig {
        n_blocks: 6,
        trials_per_block: 200,
        ..Default::default()
    };
    let spec = NoiseSpec::for_kind(NoiseKind::White);
    let mut thresholds = Vec::new();
    for b in 0..cfg.n_blocks {
        let out = run_block(&cfg, b, &spec, &f.targets, &mut l);
        assert!(out.error.is_none());
        let kept = exclude_approach_phase(&out.records);
        thresholds.push(kept.iter().map(|r| r.snr).sum::<f64>() / kept.len() as f64);
    }
    let late = &thresholds[3..];
    let mean = late.iter().sum::<f64>() / late.len() as f64;
    let sd = (late.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (late.len() - 1) as f64).sqrt();
    assert!(late.iter().all(|t| (-20.0..=-5.0).contains(t)), "{thresholds:?}");
    assert!(sd < 2.0, "{thresholds:?}");
}
