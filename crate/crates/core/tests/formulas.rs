//! Closed-form rules checked against hand-computed values: exact for
//! rationals, 1e-12 relative for reals.

use bsnc::config::LogBase;
use bsnc::estimation::{bottleneck_of, erasure_estimate, EstimatorState};
use bsnc::metrics::{delays_from, delivery_rate_series, goodput_from, usage_from};
use bsnc::net::{bs_dof_rate, bs_duration, bsp_terminates};
use bsnc::source::{apriori_count, delta_t, PosteriorRule};
use bsnc::{FeedbackBundle, NetworkConfig, SimError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    a == b || ((a - b) / b).abs() <= 1e-12
}

#[test]
fn erasure_estimate_is_one_minus_ack_mean() {
    assert_eq!(erasure_estimate(&[true, true, false, true]), 0.25);
    assert_eq!(erasure_estimate(&[]), 0.0);
}

#[test]
fn estimate_concentrates_on_true_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut st = EstimatorState::new(0, 1);
    for t in 0..10_000u64 {
        let ack = rng.random::<f64>() >= 0.4;
        st.ingest(&FeedbackBundle {
            acked_packet_created_at: t,
            observed_at: t,
            ack,
            innovative: ack,
            downstream: Vec::new(),
            sink_report: None,
        })
        .unwrap();
    }
    assert!((st.estimate(0) - 0.4).abs() <= 0.015, "{}", st.estimate(0));
}

#[test]
fn bottleneck_examples() {
    let est = [0.1, 0.4, 0.3, 0.3, 0.1];
    assert_eq!(bottleneck_of(&est, 1), 1);
    let est = [0.1, 0.4, 0.6, 0.3, 0.1];
    assert_eq!(bottleneck_of(&est, 2), 2);
    assert_eq!(bottleneck_of(&[0.2; 5], 3), 3);
}

#[test]
fn posterior_ratio_examples() {
    assert_eq!(delta_t(1, 0.0, 0, 1, 0), 0.0);
    assert_eq!(delta_t(0, 0.0, 0, 1, 0), -1.0);
    // (2 + 0.4·5) / (1 + 0.6·5) − 1
    let d = delta_t(2, 0.4, 5, 1, 5);
    assert!(d.abs() <= 1e-12, "{d}");
    assert!(!PosteriorRule::AboveThreshold(0.0).fires(0, 0.0, 0, 1, 0));
    assert!(PosteriorRule::NonNegative.fires(1, 0.0, 0, 1, 0));
}

#[test]
fn apriori_burst_size() {
    assert_eq!(apriori_count(0.4, 20), 8);
    assert_eq!(apriori_count(0.0, 20), 0);
    assert_eq!(apriori_count(0.25, 2), 1);
}

#[test]
fn blank_space_duration_examples() {
    let rtts = [20u64; 5];
    assert!(close(
        bs_duration(0, 1, &rtts, &[0.1, 0.4, 0.3, 0.3, 0.1], 1.0),
        8.0
    ));
    assert!(close(
        bs_duration(0, 2, &rtts, &[0.1, 0.4, 0.6, 0.3, 0.1], 1.0),
        20.0
    ));
    assert_eq!(
        bs_duration(1, 1, &rtts, &[0.1, 0.4, 0.3, 0.3, 0.1], 1.0),
        0.0
    );
    for alpha in [0.5, 2.0] {
        assert!(close(
            bs_duration(0, 1, &rtts, &[0.1, 0.4, 0.3, 0.3, 0.1], alpha),
            8.0 * alpha
        ));
    }
}

#[test]
fn blank_space_dof_rate_examples() {
    let r = bs_dof_rate(0.1, 0.4, 1, 8.0, LogBase::Ln);
    let bracket = 0.9 * 8.0 + (0.3f64).ln();
    assert!((bracket - 5.9960).abs() < 1e-4);
    assert!(close(r, 1.0 / bracket));
    assert!((r - 0.1668).abs() < 1e-4);
    // 0.9 + ln 0.3 < 0
    assert_eq!(bs_dof_rate(0.1, 0.4, 1, 1.0, LogBase::Ln), f64::INFINITY);
    assert_eq!(bs_dof_rate(0.3, 0.3, 1, 8.0, LogBase::Ln), f64::INFINITY);
    let r2 = bs_dof_rate(0.1, 0.4, 1, 8.0, LogBase::Log2);
    assert!(close(r2, 1.0 / (7.2 + (0.3f64).log2())));
}

#[test]
fn termination_examples() {
    assert!(bsp_terminates(0.7, 0.4));
    assert!(!bsp_terminates(0.5, 0.4));
    assert!(!bsp_terminates(0.1668, 0.4));
    assert!(bsp_terminates(f64::INFINITY, 0.4));
}

#[test]
fn goodput_substitution() {
    assert_eq!(goodput_from(100, 200, 20, 50).unwrap(), 100.0 / 130.0);
    assert!(matches!(
        goodput_from(10, 100, 50, 50),
        Err(SimError::Degenerate(_))
    ));
}

#[test]
fn delivery_rate_windows() {
    let steady: Vec<u64> = (1..=1000).collect();
    assert_eq!(delivery_rate_series(&steady, 100).unwrap(), vec![1.0; 10]);
    assert_eq!(
        delivery_rate_series(&[0; 1000], 100).unwrap(),
        vec![0.0; 10]
    );
    let half: Vec<u64> = (1..=400).map(|t| t / 2).collect();
    assert_eq!(delivery_rate_series(&half, 100).unwrap(), vec![0.5; 4]);
}

#[test]
fn usage_denominators() {
    let cfg = NetworkConfig::six_node(0.3);
    let u = usage_from(&[0, 0, 50, 0, 0], &cfg, 5000);
    assert_eq!(u.per_node[2], 1.0 - 50.0 / 4980.0);
    // Σ_{i=0}^{4} (5000 − (4 − i)·10) = 25000 − 100
    assert_eq!(u.total, 1.0 - 50.0 / 24900.0);
    let none = usage_from(&[0; 5], &cfg, 5000);
    assert_eq!(none.total, 1.0);
    assert_eq!(none.per_node, vec![1.0; 5]);
}

#[test]
fn delay_statistics() {
    assert_eq!(
        delays_from(&[0, 4, 9], &[50, 60, 60]).unwrap(),
        ((50.0 + 56.0 + 51.0) / 3.0, 56.0)
    );
    assert_eq!(delays_from(&[7], &[57]).unwrap(), (50.0, 50.0));
    assert!(matches!(
        delays_from(&[], &[]),
        Err(SimError::Degenerate(_))
    ));
}

#[test]
fn config_validation_examples() {
    let ok = NetworkConfig::chain(vec![0.1, 0.4, 0.3, 0.3, 0.1], 20, 5000);
    assert!(ok.validate().is_ok());
    let mut single = ok.clone();
    single.node_count = 1;
    single.erasure_rates.clear();
    single.rtt_per_hop.clear();
    assert!(single.validate().is_err());
    let mut odd = ok;
    odd.rtt_per_hop[0] = 21;
    assert!(odd.validate().is_err());
}
