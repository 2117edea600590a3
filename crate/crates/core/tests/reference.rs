use approx::assert_abs_diff_eq;
use hhasa_core::harness::{
    benchmark_consumption, best_known, energy_diff_report, friedman_ranks, holm_posthoc, reference_stats, MeanMatrix,
    MissingPolicy,
};

const HH: [&str; 4] = ["HHASA_TS", "HHASA_UCB1", "HHASA_EG", "HHASA"];
const ALL_BUT_RANDOM: [&str; 8] = ["HHASA_TS", "HHASA_UCB1", "HHASA_EG", "BACO", "VNS", "SA", "GA", "GRASP"];

#[test]
fn hyper_heuristic_ranking() {
    let m = MeanMatrix::from_reference(Some(&HH)).unwrap();
    assert_eq!(m.instances.len(), 17);
    let r = friedman_ranks(&m, MissingPolicy::Reject).unwrap();
    for (got, want) in r.avg_ranks.iter().zip([1.8824, 2.4706, 2.5294, 3.1176]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-4);
    }
    let holm = holm_posthoc(&r);
    assert_eq!(holm[0].p_holm, None);
    assert_abs_diff_eq!(holm[3].p_holm.unwrap(), 0.015828, epsilon = 1e-4);
    assert!(holm[3].significant);
    assert!(!holm[1].significant && !holm[2].significant);
}

#[test]
fn full_comparison_needs_a_missing_policy() {
    let m = MeanMatrix::from_reference(Some(&ALL_BUT_RANDOM)).unwrap();
    assert!(friedman_ranks(&m, MissingPolicy::Reject).is_err());
    let large = m.subset_from(">=E101").unwrap();
    let r = friedman_ranks(&large, MissingPolicy::RankLast).unwrap();
    assert_eq!(r.instances.len(), 11);
    assert_abs_diff_eq!(r.avg_ranks[0], 1.7273, epsilon = 1e-4);
}

#[test]
fn energy_spot_values() {
    let stats = reference_stats(&HH);
    let rep = energy_diff_report(&stats, &best_known(), &benchmark_consumption()).unwrap();
    assert_abs_diff_eq!(rep.get("E33", "HHASA_TS").unwrap(), 0.67, epsilon = 0.02);
    assert_abs_diff_eq!(rep.get("E101", "HHASA_TS").unwrap(), 8.96, epsilon = 0.02);
    assert_abs_diff_eq!(rep.get("X214", "HHASA_TS").unwrap(), 116.32, epsilon = 0.02);
    assert_abs_diff_eq!(rep.get("E22", "HHASA").unwrap(), 0.0, epsilon = 1e-9);
}
