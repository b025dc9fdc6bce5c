mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use common::*;
use revcorr::aci::*;
use revcorr::noise::NoiseSpec;
use revcorr::predict::*;
use revcorr::tfrep::N_BINS;

const N: usize = 800;

fn basis() -> &'static PyramidBasis {
    static B: OnceLock<PyramidBasis> = OnceLock::new();
    B.get_or_init(PyramidBasis::new)
}

/// Two listeners sharing one plant and a third with a different plant,
/// each on its own noise tokens.
fn listeners() -> &'static BTreeMap<String, (FitDataset, Aci)> {
    static L: OnceLock<BTreeMap<String, (FitDataset, Aci)>> = OnceLock::new();
    L.get_or_init(|| {
        let spec = NoiseSpec::white();
        let plants = [("a1", planted_weights(), 10_000), ("a2", planted_weights(), 20_000), ("b", other_weights(), 30_000)];
        plants
            .into_iter()
            .map(|(k, w, first)| {
                let data = planted_dataset(noise_rows(&spec, first, N), &w, 1.5, 0.0, first);
                let aci = fit_aci(&data, basis(), &FitConfig::default()).unwrap();
                (k.to_string(), (data, aci))
            })
            .collect()
    })
}

fn pick(keys: &[&str]) -> (BTreeMap<String, Aci>, BTreeMap<String, FitDataset>) {
    let l = listeners();
    let acis = keys.iter().map(|k| (k.to_string(), l[*k].1.clone())).collect();
    let data = keys.iter().map(|k| (k.to_string(), l[*k].0.clone())).collect();
    (acis, data)
}

#[test]
fn null_models_have_zero_benefit() {
    let (data, aci) = &listeners()["a1"];
    let fm = FoldModels::of(aci, basis());
    let null: Vec<(Vec<f64>, f64)> = fm.null_intercepts.iter().map(|&c| (vec![0.0; N_BINS], c)).collect();
    let labels = aci.fold_labels().unwrap();
    for variant in [Variant::AllTrials, Variant::IncorrectOnly] {
        let r = evaluate(&null, &fm.null_intercepts, data, &labels, variant, PaReference::Response).unwrap();
        assert_eq!(r.delta_pa, 0.0);
        assert_eq!(r.delta_cvd_t, 0.0);
        assert!(!r.significant);
    }
}

#[test]
fn evaluation_is_repeatable_and_order_invariant() {
    let (data, aci) = &listeners()["a1"];
    let a = auto_prediction(aci, basis(), data, Variant::AllTrials).unwrap();
    let b = auto_prediction(aci, basis(), data, Variant::AllTrials).unwrap();
    assert_eq!(a, b);

    let labels = aci.fold_labels().unwrap();
    let order: Vec<usize> = (0..data.n()).rev().collect();
    let shuffled = data.subset(&order);
    let shuffled_labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let fm = FoldModels::of(aci, basis());
    let c = evaluate(&fm.models, &fm.null_intercepts, &shuffled, &shuffled_labels, Variant::AllTrials, PaReference::Response).unwrap();
    assert_eq!(a.pa, c.pa);
    assert_eq!(a.pa_null, c.pa_null);
    assert!((a.delta_cvd_t - c.delta_cvd_t).abs() < 1e-12);
    assert_eq!(a.significant, c.significant);
}

#[test]
fn planted_listener_is_predicted() {
    let (data, aci) = &listeners()["a1"];
    let r = auto_prediction(aci, basis(), data, Variant::AllTrials).unwrap();
    assert!(r.significant && r.delta_cvd_t < 0.0);
    assert!(r.delta_pa > chance_boundary_delta(r.n_trials), "{}", r.delta_pa);
    assert!((-100.0..=100.0).contains(&r.delta_pa));
    assert_eq!(r.n_trials, N);
}

#[test]
fn diagonal_matches_auto_prediction() {
    let (acis, data) = pick(&["a1", "a2", "b"]);
    let m = cross_prediction(&acis, &data, basis(), Variant::AllTrials).unwrap();
    for (i, k) in m.keys.iter().enumerate() {
        let auto = auto_prediction(&acis[k], basis(), &data[k], Variant::AllTrials).unwrap();
        assert_eq!(m.delta_pa[i][i], auto.delta_pa);
        assert_eq!(m.delta_cvd_t[i][i], auto.delta_cvd_t);
        assert_eq!(m.significant[i][i], auto.significant);
        assert!(!m.masked[i][i]);
    }
    let (acis, data) = pick(&["a2"]);
    let one = cross_prediction(&acis, &data, basis(), Variant::AllTrials).unwrap();
    let auto = auto_prediction(&acis["a2"], basis(), &data["a2"], Variant::AllTrials).unwrap();
    assert_eq!(one.delta_pa, vec![vec![auto.delta_pa]]);
}

#[test]
fn identical_listeners_cross_predict_like_auto() {
    let (acis, data) = pick(&["a1", "a2"]);
    let m = cross_prediction(&acis, &data, basis(), Variant::AllTrials).unwrap();
    for i in 0..2 {
        let j = 1 - i;
        let auto = m.delta_pa[i][i];
        let cross = m.delta_pa[i][j];
        assert!(m.significant[i][j]);
        assert!((auto - cross).abs() < 0.25 * auto.abs().max(5.0), "auto {auto} cross {cross}");
    }
}

#[test]
fn different_listeners_cross_predict_worse() {
    let (acis, data) = pick(&["a1", "a2", "b"]);
    let m = cross_prediction(&acis, &data, basis(), Variant::AllTrials).unwrap();
    let b = m.keys.iter().position(|k| k == "b").unwrap();
    let diag: f64 = (0..3).map(|i| m.delta_pa[i][i]).sum::<f64>() / 3.0;
    let off: Vec<f64> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|(i, j)| i != j && (*i == b || *j == b)).map(|(i, j)| m.delta_pa[i][j]).collect();
    let off = off.iter().sum::<f64>() / off.len() as f64;
    assert!(off < diag, "off-diagonal {off} vs diagonal {diag}");
}

#[test]
fn mismatched_keys_are_an_error() {
    let (acis, _) = pick(&["a1"]);
    let (_, data) = pick(&["a2"]);
    assert!(cross_prediction(&acis, &data, basis(), Variant::AllTrials).is_err());
}

#[test]
fn all_correct_data_has_no_incorrect_report() {
    let (data, aci) = &listeners()["a1"];
    let honest = FitDataset::new(data.x.clone(), data.response.clone(), data.response.clone()).unwrap();
    assert!(auto_prediction(aci, basis(), &honest, Variant::IncorrectOnly).is_err());
}
