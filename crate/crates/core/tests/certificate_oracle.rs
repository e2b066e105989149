mod common;

use kstab_core::gmm1d::GaussianMixture1D;
use kstab_core::region::*;

#[test]
fn square_examples() {
    assert!(certify_square_k2(0.2, 7.0, 2.5).unwrap().stable);
    assert!(certify_square_k2(0.8, 7.0, 2.5).unwrap().stable);
    assert!(!certify_square_k2(0.2, 5.0, 2.5).unwrap().stable);
}

/// At `delta = 1` the square `S_2.5` is wide compared with the near-unimodal
/// mixture and holds the two-means fixed point, so it is stable; the slacks
/// of the two outer inequalities are small but positive.
#[test]
fn wide_square_on_overlapping_mixture_is_stable() {
    let c = certify_square_k2(0.5, 1.0, 2.5).unwrap();
    assert!(c.stable);
    assert!(c.min_slack() > 0.0 && c.min_slack() < 0.01);
    let m = GaussianMixture1D::two_component(0.5, 1.0).unwrap();
    assert!(containment_oracle(&m, &RegionSpec::square(2.5).unwrap(), 41).unwrap().contained);
}

#[test]
fn prism_examples() {
    assert!(certify_prism_k3(0.2, 14.5, 3.5, 2.5, 1.0).unwrap().stable);
    assert!(certify_prism_k3(0.8, 14.5, 3.5, 2.5, 1.0).unwrap().stable);
    assert!(!certify_prism_k3(0.5, 3.0, 3.5, 2.5, 1.0).unwrap().stable);
}

#[test]
fn oracle_examples() {
    let m = GaussianMixture1D::two_component(0.2, 7.0).unwrap();
    assert!(containment_oracle(&m, &RegionSpec::square(2.5).unwrap(), 21).unwrap().contained);

    let m = GaussianMixture1D::two_component(0.2, 14.5).unwrap();
    let prism = RegionSpec::prism(3.5, 2.5, 1.0).unwrap();
    assert!(containment_oracle(&m, &prism, 11).unwrap().contained);

    let m = GaussianMixture1D::two_component(0.2, 5.0).unwrap();
    let r = containment_oracle(&m, &RegionSpec::square(2.5).unwrap(), 21).unwrap();
    assert!(!r.contained);
    let w = r.witness.expect("escaping start");
    let image = kstab_core::population::population_update(&m, &w).unwrap();
    let bounds = RegionSpec::square(2.5).unwrap().bounds(0.0, 5.0, 1.0);
    assert!(image.coords().iter().zip(&bounds).any(|(x, b)| !b.contains(*x)));
}

#[test]
fn unstable_prism_has_witness() {
    let m = GaussianMixture1D::two_component(0.5, 3.0).unwrap();
    let r = containment_oracle(&m, &RegionSpec::prism(3.5, 2.5, 1.0).unwrap(), 11).unwrap();
    assert!(!r.contained && r.witness.is_some());
}

#[test]
fn mirrored_prism_is_prism_with_swapped_weights() {
    for w1 in [0.1, 0.2, 0.35, 0.5, 0.8] {
        for delta in [6.0, 10.0, 14.5] {
            let direct = certify_prism_k3_with(1.0 - w1, delta, 3.5, 2.5, 1.0, CertificateMode::Corrected).unwrap();
            let mirror = certify_prism_k3_mirrored(w1, delta, 3.5, 2.5, 1.0, CertificateMode::Corrected).unwrap();
            assert_eq!(direct.stable, mirror.stable);
            assert_eq!(direct.inequality_values, mirror.inequality_values);

            // The oracle agrees on the mirrored geometry.
            let m = GaussianMixture1D::two_component(w1, delta).unwrap();
            let region = RegionSpec::prism_mirrored(3.5, 2.5, 1.0).unwrap();
            let oracle = containment_oracle(&m, &region, 11).unwrap();
            assert_eq!(oracle.contained, mirror.stable, "w1={w1} delta={delta}");
        }
    }
}

#[test]
fn corollary_four_mirror_both_weights() {
    for w1 in [0.2, 0.8] {
        let m = GaussianMixture1D::two_component(w1, 14.5).unwrap();
        let cert = certify_prism_k3_mirrored(w1, 14.5, 3.5, 2.5, 1.0, CertificateMode::Corrected).unwrap();
        assert!(cert.stable);
        let region = RegionSpec::prism_mirrored(3.5, 2.5, 1.0).unwrap();
        assert!(containment_oracle(&m, &region, 11).unwrap().contained);
    }
}

/// Larger separation does not always help: for unequal weights the square
/// verdict switches stable -> unstable -> stable as `delta` grows, because at
/// small `delta` the square is wide enough to hold the two-means fixed point
/// of the overlapping mixture. Every switch is confirmed by the oracle, and
/// beyond `delta = 11` the verdict never turns unstable again.
#[test]
fn square_verdict_in_delta_switches_are_genuine() {
    let mut switches = Vec::new();
    for i in 1..19 {
        let w1 = 0.05 * f64::from(i);
        for a in [0.5, 1.0, 1.5, 2.5, 3.5] {
            let mut prev: Option<(f64, bool)> = None;
            for j in 0..=80 {
                let delta = 1.0 + 0.25 * f64::from(j);
                let s = certify_square_k2(w1, delta, a).unwrap().stable;
                if let Some((d0, true)) = prev {
                    if !s {
                        assert!(delta < 11.0, "w1={w1} a={a} delta={delta}");
                        switches.push((w1, a, d0, delta));
                    }
                }
                prev = Some((delta, s));
            }
        }
    }
    assert!(!switches.is_empty());
    for &(w1, a, stable_at, unstable_at) in switches.iter().step_by(7) {
        let region = RegionSpec::square(a).unwrap();
        let m0 = GaussianMixture1D::two_component(w1, stable_at).unwrap();
        let m1 = GaussianMixture1D::two_component(w1, unstable_at).unwrap();
        assert!(containment_oracle(&m0, &region, 41).unwrap().contained, "{w1} {a} {stable_at}");
        assert!(!containment_oracle(&m1, &region, 41).unwrap().contained, "{w1} {a} {unstable_at}");
    }
}

#[test]
fn as_printed_mode_is_available_and_labelled() {
    let printed = certify_square_k2_with(0.2, 7.0, 2.5, CertificateMode::AsPrinted).unwrap();
    assert_eq!(printed.mode, CertificateMode::AsPrinted);
    assert_eq!(printed.labels, ["eq8", "eq9", "eq10", "eq11"]);
    let corrected = certify_square_k2(0.2, 7.0, 2.5).unwrap();
    // The eq8 and eq9 slacks are shared by both modes.
    assert_eq!(printed.inequality_values[..2], corrected.inequality_values[..2]);
}

#[test]
fn init_params_examples() {
    let p = compute_init_params(0.15, 10.0, 0.02).unwrap();
    assert_eq!(p.l, 39);
    assert!((p.p0 - 0.00943).abs() < 1e-5);
    let p = compute_init_params(0.5, 10.0, 0.5).unwrap();
    assert_eq!(p.l, 3);
    assert!((p.p0 - 1.0 / (3.0 * std::f64::consts::E)).abs() < 1e-15);
    let p = compute_init_params(0.999, 10.0, 0.99).unwrap();
    assert_eq!(p.l, 1);
    assert!((p.p0 - 1.0 / std::f64::consts::E).abs() < 1e-15);
    assert!(compute_init_params(0.0, 10.0, 0.02).is_err());
    assert!(compute_init_params(0.15, -1.0, 0.02).is_err());
    assert!(compute_init_params(0.15, 10.0, 1.0).is_err());
}

#[test]
fn impurity_bound_behaviour() {
    let p = compute_init_params(0.15, 10.0, 0.02).unwrap().with_tau(0.015).unwrap();
    let b = impurity_bound(0.15, 0.85, 10.0, 0.015, p.p0, p.l).unwrap();
    assert!(b.delta_impure > 0.0 && b.delta_impure < 1.0);
    assert!((b.delta_impure - (1.0 - b.p1).powi(p.l as i32 - 1)).abs() < 1e-15);

    let mut prev = 1.0;
    for l in [10, 20, 39, 80] {
        let d = impurity_bound(0.15, 0.85, 10.0, 0.015, p.p0, l).unwrap().delta_impure;
        assert!(d < prev);
        prev = d;
    }
    let mut prev_z = f64::NEG_INFINITY;
    for delta in [8.0, 9.0, 10.0, 12.0] {
        let z = impurity_bound(0.15, 0.85, delta, 0.015, p.p0, p.l).unwrap().delta_z0;
        assert!(z > prev_z);
        prev_z = z;
    }
    assert!(matches!(
        impurity_bound(0.15, 0.85, 10.0, 1e-30, p.p0, p.l),
        Err(kstab_core::Error::AssumptionViolated { id: 3, .. })
    ));
}

#[test]
fn purity_radii_examples() {
    let m = GaussianMixture1D::two_component(0.5, 10.0).unwrap();
    let p = compute_init_params(0.5, 10.0, 0.02).unwrap();
    let b = purity_radii(&m, &p).unwrap();
    assert_eq!(b.w_max, 0.5);
    assert!((b.a_tilde[0].lo + b.a_tilde[0].hi - 0.0).abs() < 1e-12);
    assert!((b.a_tilde[1].lo + b.a_tilde[1].hi - 20.0).abs() < 1e-12);

    let m = GaussianMixture1D::two_component(0.15, 10.0).unwrap();
    let p = compute_init_params(0.15, 10.0, 0.02).unwrap().with_tau(0.015).unwrap();
    let b = purity_radii(&m, &p).unwrap();
    assert!(b.a_tilde_disjoint);
    assert!(b.a_tilde[0].hi < b.a_tilde[1].lo);
    let d = b.delta_impure.unwrap();
    assert!(d > 0.0 && d < 1.0);
}

#[test]
fn assumptions_examples() {
    let m = GaussianMixture1D::two_component(0.15, 10.0).unwrap();
    let p = compute_init_params(0.15, 10.0, 0.02).unwrap().with_tau(0.015).unwrap();
    let checks = check_assumptions(&m, &p);
    assert_eq!(checks.len(), 5);
    assert!(checks[..4].iter().all(|c| c.holds), "{checks:?}");
    // The last separation condition misses in this regime:
    // (1 - 3 tau) 10 - 10 tau = 9.40 against (3 R(0.85) + R(0.15))(1 - tau) = 9.728.
    let a5 = &checks[4];
    assert!(!a5.holds);
    assert!((a5.slack - (9.4 - 9.7282)).abs() < 2e-3, "{a5:?}");

    let m1 = GaussianMixture1D::two_component(0.15, 1.0).unwrap();
    let p1 = compute_init_params(0.15, 1.0, 0.02).unwrap().with_tau(0.015).unwrap();
    let a5 = check_assumptions(&m1, &p1).into_iter().find(|c| c.id == 5).unwrap();
    assert!(!a5.holds);

    let eq = GaussianMixture1D::new(vec![0.25; 4], vec![0.0, 10.0, 20.0, 30.0], 1.0).unwrap();
    let pe = compute_init_params(0.25, 10.0, 0.02).unwrap();
    let a1 = check_assumptions(&eq, &pe).into_iter().find(|c| c.id == 1).unwrap();
    assert!(a1.holds && a1.slack.abs() < 1e-15);
}

#[test]
fn assumption_four_boundary_flags_negative_r_tilde() {
    // tau/w_min close to 1/2 - Phi(-delta/2) makes the argument of R~ exceed 1/2.
    let m = GaussianMixture1D::two_component(0.3, 3.0).unwrap();
    let p = compute_init_params(0.3, 3.0, 0.02).unwrap();
    let limit = 0.3 * (0.5 - kstab_core::gmm1d::normal_cdf(-1.5));
    let p = p.with_tau(limit * 1.1).unwrap();
    let a4 = check_assumptions(&m, &p).into_iter().find(|c| c.id == 4).unwrap();
    assert!(!a4.holds);
    let b = purity_radii(&m, &p).unwrap();
    assert!(b.r_tilde_negative);
    assert!(b.at_mixture.is_none() && b.delta_impure.is_none());
}
