use metasens_core::bias::{bias_to_strength, BiasFactor};
use metasens_core::distributions::{RngSeed, SampleStream};
use metasens_core::simulate::{
    prob_u_given_unexposed, run_cell, simulate_study, SimScenario, MIN_STUDY_N,
};

/// Forward simulation of the outcome model: the crude RR among simulated
/// subjects should match exp(M^c) for the closed-form P(U=1|X=0).
#[test]
fn closed_form_confounder_prevalence_recovers_confounded_rr() {
    let mut rng = SampleStream::new(RngSeed(17));
    for _ in 0..3 {
        let m_t = rng.sample_uniform(-0.3, 0.6).unwrap();
        let b_star = rng.sample_uniform(0.05, 0.6).unwrap();
        let g = bias_to_strength(BiasFactor::from_log(b_star).unwrap()).value();
        let m_c = m_t + b_star;
        let p0 = prob_u_given_unexposed(m_t, m_c, g).unwrap().value();

        let n = 1_000_000;
        let (mut e1, mut n1, mut e0, mut n0) = (0u64, 0u64, 0u64, 0u64);
        for _ in 0..n {
            let x = rng.sample_bernoulli(0.5).unwrap();
            let u = rng.sample_bernoulli(if x { 1.0 } else { p0 }).unwrap();
            let risk = (0.05f64.ln() + g.ln() * u as u8 as f64 + m_t * x as u8 as f64).exp();
            let y = rng.sample_bernoulli(risk).unwrap() as u64;
            if x {
                n1 += 1;
                e1 += y;
            } else {
                n0 += 1;
                e0 += y;
            }
        }
        let crude = (e1 as f64 / n1 as f64).ln() - (e0 as f64 / n0 as f64).ln();
        let se = (1.0 / e1 as f64 - 1.0 / n1 as f64 + 1.0 / e0 as f64 - 1.0 / n0 as f64).sqrt();
        assert!(
            (crude - m_c).abs() < 4.0 * se,
            "crude {crude} vs m_c {m_c} (se {se})"
        );
    }
}

#[test]
fn unbiased_large_study_concentrates_on_truth() {
    let mut rng = SampleStream::new(RngSeed(3));
    let row = simulate_study(0.4, 0.0, 1_000_000, 0.05f64.ln(), &mut rng).unwrap();
    assert!((row.log_rr - 0.4).abs() < 0.03, "{}", row.log_rr);
}

#[test]
fn reference_scenario_rarely_truncates() {
    let s = SimScenario::reference(25, 500);
    let mut rng = SampleStream::new(RngSeed(8));
    let draws = 20_000;
    let mut feasible = 0;
    for _ in 0..draws {
        let m_t = rng.sample_normal(s.mu_t, s.v_t.sqrt()).unwrap();
        let b = rng
            .sample_normal(s.mu_log_bias, s.var_log_bias.sqrt())
            .unwrap();
        if simulate_study(m_t, b, MIN_STUDY_N, s.baseline_log_risk, &mut rng).is_ok() {
            feasible += 1;
        }
    }
    assert!(feasible as f64 / draws as f64 >= 0.99);
}

#[test]
fn analytic_truth_matches_brute_force() {
    let s = SimScenario::reference(25, 500);
    let mut rng = SampleStream::new(RngSeed(1));
    let n = 10_000_000;
    let mut above = 0u64;
    for _ in 0..n {
        if rng.sample_normal(s.mu_t, s.v_t.sqrt()).unwrap() > s.q {
            above += 1;
        }
    }
    let brute = above as f64 / n as f64;
    assert!((brute - s.true_proportion()).abs() < 0.002);
}

#[test]
fn cell_results_are_deterministic() {
    let s = SimScenario {
        n_reps: 30,
        ..SimScenario::reference(15, 300)
    };
    assert_eq!(run_cell(&s).unwrap(), run_cell(&s).unwrap());
    let other = SimScenario {
        cell: 1,
        ..s.clone()
    };
    assert_ne!(run_cell(&s).unwrap(), run_cell(&other).unwrap());
}

#[test]
fn doubling_reps_halves_coverage_variance() {
    let base = SimScenario {
        n_reps: 200,
        ..SimScenario::reference(15, 300)
    };
    let small = run_cell(&base).unwrap();
    let big = run_cell(&SimScenario {
        n_reps: 400,
        ..base
    })
    .unwrap();
    // Binomial variance c(1-c)/n at a common coverage level.
    let c = 0.5 * (small.ci_coverage + big.ci_coverage);
    let var_small = c * (1.0 - c) / small.n_valid_reps as f64;
    let var_big = c * (1.0 - c) / big.n_valid_reps as f64;
    let ratio = var_small / var_big;
    assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
    assert!(big.coverage_mc_se() < small.coverage_mc_se());
}
