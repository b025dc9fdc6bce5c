use std::collections::BTreeMap;

use super::staircase::Direction;
use super::{Phase, TrialRecord};
use crate::noise::NoiseKind;
use crate::stats::probit;
use crate::targets::TargetId;

/// Reversals needed before a block contributes measuring-phase trials.
pub const MIN_REVERSALS: usize = 4;

/// Indices (into `records`) of the trials at which a reversal occurs. The
/// track direction after trial `t` follows its correctness.
pub fn reversal_indices(records: &[TrialRecord]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last = Direction::None;
    for (i, r) in records.iter().enumerate() {
        let dir = Direction::after(r.correct);
        if last != Direction::None && dir != last {
            out.push(i);
        }
        last = dir;
    }
    out
}

/// Drop the approach phase of one block: every trial before the one at which
/// the fourth reversal occurs. Blocks with fewer reversals are dropped whole.
pub fn exclude_approach_phase(records: &[TrialRecord]) -> Vec<TrialRecord> {
    if records.is_empty() {
        return Vec::new();
    }
    let rev = reversal_indices(records);
    let Some(&start) = rev.get(MIN_REVERSALS - 1) else {
        log::warn!(
            "block {} has {} reversals (< {MIN_REVERSALS}); excluded",
            records[0].block_index,
            rev.len()
        );
        return Vec::new();
    };
    records[start..]
        .iter()
        .cloned()
        .map(|mut r| {
            r.phase = Phase::Measure;
            r
        })
        .collect()
}

/// Equalize the number of "aba" and "ada" responses by discarding trials of
/// the majority response. Candidates are sorted by SNR and removed
/// alternately from the highest-SNR end and the lowest-SNR end. Survivors
/// keep their original order.
pub fn balance_responses(records: &[TrialRecord]) -> Vec<TrialRecord> {
    let n_aba = records.iter().filter(|r| r.response == TargetId::Aba).count();
    let n_ada = records.len() - n_aba;
    if n_aba == n_ada {
        return records.to_vec();
    }
    let majority = if n_aba > n_ada { TargetId::Aba } else { TargetId::Ada };
    let surplus = n_aba.abs_diff(n_ada);
    let mut idx: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].response == majority)
        .collect();
    idx.sort_by(|&a, &b| records[a].snr.total_cmp(&records[b].snr).then(a.cmp(&b)));
    let mut drop = vec![false; records.len()];
    let (mut lo, mut hi) = (0usize, idx.len());
    for k in 0..surplus {
        if k % 2 == 0 {
            hi -= 1;
            drop[idx[hi]] = true;
        } else {
            drop[idx[lo]] = true;
            lo += 1;
        }
    }
    records
        .iter()
        .zip(drop)
        .filter(|(_, d)| !d)
        .map(|(r, _)| r.clone())
        .collect()
}

/// `(d', c)` from hit and false-alarm rates, each clamped to
/// `[1/(2n), 1 - 1/(2n)]` with its own trial count.
pub fn dprime_criterion(hit: f64, fa: f64, n_signal: usize, n_noise: usize) -> (f64, f64) {
    let clamp = |p: f64, n: usize| {
        let e = 0.5 / n.max(1) as f64;
        p.clamp(e, 1.0 - e)
    };
    let zh = probit(clamp(hit, n_signal));
    let zf = probit(clamp(fa, n_noise));
    (zh - zf, -(zh + zf) / 2.0)
}

/// Per-SNR-bin performance. "ada" is the target-present class.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrBin {
    pub snr_center: f64,
    pub n_aba: usize,
    pub n_ada: usize,
    pub pc_aba: f64,
    pub pc_ada: f64,
    pub hit_rate: f64,
    pub fa_rate: f64,
    pub dprime: f64,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockThreshold {
    pub block_index: usize,
    pub noise_kind: NoiseKind,
    /// Mean SNR of the block's measuring-phase trials.
    pub threshold: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralMetrics {
    pub bins: Vec<SnrBin>,
    pub thresholds: Vec<BlockThreshold>,
}

/// SDT metrics in 1-dB SNR bins (centred on integers) and per-block
/// thresholds. Bins lacking either target class are omitted.
pub fn behavioral_metrics(records: &[TrialRecord]) -> BehavioralMetrics {
    // (aba total, aba correct, ada total, ada correct)
    let mut bins: BTreeMap<i64, (usize, usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let e = bins.entry(r.snr.round() as i64).or_default();
        match r.target_id {
            TargetId::Aba => {
                e.0 += 1;
                e.1 += usize::from(r.correct);
            }
            TargetId::Ada => {
                e.2 += 1;
                e.3 += usize::from(r.correct);
            }
        }
    }
    let bins = bins
        .into_iter()
        .filter(|(_, (na, _, nd, _))| *na > 0 && *nd > 0)
        .map(|(c, (na, ca, nd, cd))| {
            let hit = cd as f64 / nd as f64;
            let fa = (na - ca) as f64 / na as f64;
            let (dprime, criterion) = dprime_criterion(hit, fa, nd, na);
            SnrBin {
                snr_center: c as f64,
                n_aba: na,
                n_ada: nd,
                pc_aba: 100.0 * ca as f64 / na as f64,
                pc_ada: 100.0 * hit,
                hit_rate: hit,
                fa_rate: fa,
                dprime,
                criterion,
            }
        })
        .collect();

    let mut blocks: BTreeMap<usize, (NoiseKind, f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.phase == Phase::Measure) {
        let e = blocks.entry(r.block_index).or_insert((r.noise_kind, 0.0, 0));
        e.1 += r.snr;
        e.2 += 1;
    }
    let thresholds = blocks
        .into_iter()
        .map(|(b, (kind, sum, n))| BlockThreshold {
            block_index: b,
            noise_kind: kind,
            threshold: sum / n as f64,
            n_trials: n,
        })
        .collect();
    BehavioralMetrics { bins, thresholds }
}
