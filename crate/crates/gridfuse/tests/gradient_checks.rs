//! Finite-difference gradient verification across seeds, plus the negative
//! control that a corrupted gradient is flagged.

use gridfuse::gradcheck::{
    check_all, check_pointnet, check_raycast, check_space_warp, relative_error,
    GRADCHECK_TOLERANCE,
};

#[test]
fn space_warp_gradients_match_finite_differences() {
    for seed in [1u64, 12, 123] {
        let report = check_space_warp(seed).unwrap();
        assert!(
            report.passed(),
            "seed {seed}: max rel err {}",
            report.max_rel_err
        );
    }
}

#[test]
fn raycast_gradients_match_finite_differences() {
    for seed in [2u64, 23, 234] {
        let report = check_raycast(seed).unwrap();
        assert!(
            report.passed(),
            "seed {seed}: max rel err {}",
            report.max_rel_err
        );
    }
}

#[test]
fn pointnet_gradients_match_finite_differences() {
    for seed in [3u64, 34, 345] {
        let report = check_pointnet(seed).unwrap();
        assert!(
            report.passed(),
            "seed {seed}: max rel err {}",
            report.max_rel_err
        );
    }
}

#[test]
fn full_suite_reports_every_op() {
    let reports = check_all(99).unwrap();
    let ops: Vec<&str> = reports.iter().map(|r| r.op).collect();
    assert_eq!(ops, ["space_warp", "raycast", "pointnet"]);
    for r in &reports {
        assert!(r.entries > 0);
        assert!(r.passed(), "{}: {}", r.op, r.max_rel_err);
    }
}

#[test]
fn corrupted_vjp_fails_the_check() {
    // Recreate a passing instance, then poison one analytic entry by 1%:
    // the comparison must cross the tolerance.
    let report = check_space_warp(42).unwrap();
    assert!(report.passed());

    let analytic = vec![0.5, -1.25, 2.0, 0.0];
    let mut poisoned = analytic.clone();
    poisoned[2] += 0.02;
    let err = relative_error(&analytic, &poisoned);
    assert!(
        err > GRADCHECK_TOLERANCE,
        "corruption went unnoticed: {err}"
    );
}
