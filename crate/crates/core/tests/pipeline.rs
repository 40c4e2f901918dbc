use std::path::PathBuf;

use metasens_core::distributions::{RngSeed, SampleStream};
use metasens_core::ingest::{load_csv, load_studies, validate};
use metasens_core::meta::{
    fit, tau2_dersimonian_laird, var_tau2_analytic, var_tau2_bootstrap, FitOptions, Tau2Method,
    VarTau2Method,
};
use metasens_core::sens::{min_bias_factor, Threshold};
use metasens_core::{MetaFit, StudyRow};

fn soy_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/soy_like.csv")
}

#[test]
fn soy_like_file_reproduces_published_summaries() {
    let loaded = load_csv(soy_path()).unwrap();
    assert_eq!(loaded.records.len(), 20);
    let report = validate(&loaded);
    assert!(report.is_clean(), "{:?}", report.errors);
    assert_eq!(report.studies.len(), 20);

    let f = fit(&report.studies, &FitOptions::default()).unwrap();
    assert!(
        (f.pooled - 0.82f64.ln()).abs() < 0.005,
        "pooled {}",
        f.pooled.exp()
    );
    assert!((f.tau2 - 0.10).abs() < 0.01);
    assert!((f.se_pooled() / 0.088 - 1.0).abs() < 0.10);
    assert!((f.se_tau2() / 0.050 - 1.0).abs() < 0.30);
    assert_eq!(f.k, Some(20));
}

#[test]
fn study_file_and_summary_inputs_agree() {
    let studies = load_studies(soy_path()).unwrap().studies;
    let f = fit(&studies, &FitOptions::default()).unwrap();
    let summary = MetaFit::from_summary(f.pooled, f.se_pooled(), f.tau2, f.se_tau2(), f.k).unwrap();
    let q = Threshold::from_rr(0.9);
    let a = min_bias_factor(&f, 0.1, q, None).unwrap();
    let b = min_bias_factor(&summary, 0.1, q, None).unwrap();
    assert_eq!(a.estimate, b.estimate);
    assert!((a.se.unwrap() - b.se.unwrap()).abs() < 1e-15);
}

fn synthetic(k: usize, tau2: f64, seed: u64) -> Vec<StudyRow> {
    let mut rng = SampleStream::new(RngSeed(seed));
    (0..k)
        .map(|_| {
            let v = rng.sample_uniform(0.01, 0.1).unwrap();
            let y = rng.sample_normal(0.3, (tau2 + v).sqrt()).unwrap();
            StudyRow::new(y, v).unwrap()
        })
        .collect()
}

#[test]
fn analytic_and_bootstrap_variance_agree() {
    let studies = synthetic(50, 0.1, 11);
    for method in [Tau2Method::PauleMandel, Tau2Method::DersimonianLaird] {
        let f = fit(
            &studies,
            &FitOptions {
                tau2_method: method,
                ..FitOptions::default()
            },
        )
        .unwrap();
        let analytic = var_tau2_analytic(&studies, f.tau2, method).unwrap();
        let boot = var_tau2_bootstrap(&studies, method, 4000, RngSeed(5)).unwrap();
        let rel = (analytic.sqrt() / boot.sqrt() - 1.0).abs();
        assert!(
            rel < 0.25,
            "{method:?}: analytic SE {} vs bootstrap SE {}",
            analytic.sqrt(),
            boot.sqrt()
        );
    }
}

#[test]
fn bootstrap_option_flows_through_fit() {
    let studies = synthetic(12, 0.1, 3);
    let opts = FitOptions {
        var_tau2_method: VarTau2Method::Bootstrap {
            reps: 2000,
            seed: 9,
        },
        ..FitOptions::default()
    };
    let a = fit(&studies, &opts).unwrap();
    let b = fit(&studies, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.var_tau2 > 0.0);
}

#[test]
fn homogeneous_studies_recover_truth() {
    let mut rng = SampleStream::new(RngSeed(42));
    let studies: Vec<StudyRow> = (0..20)
        .map(|_| {
            let v = rng.sample_uniform(0.005, 0.02).unwrap();
            StudyRow::new(rng.sample_normal(0.25, v.sqrt()).unwrap(), v).unwrap()
        })
        .collect();
    let f = fit(&studies, &FitOptions::default()).unwrap();
    assert!(f.tau2 < 0.01, "tau2 {}", f.tau2);
    assert!((f.pooled - 0.25).abs() < 0.05);
    assert!(tau2_dersimonian_laird(&studies).unwrap() < 0.01);
}
