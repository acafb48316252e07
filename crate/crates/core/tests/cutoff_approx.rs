use hyperweyl::cutoff::*;
use proptest::prelude::*;

fn options(tol: f64) -> ReportOptions {
    ReportOptions { eps: 0.42, gradient_bound: 1.0 / 1f64.cosh(), reference_k: Some(-(1f64.cosh().powi(-2))), tolerance: tol }
}

#[test]
fn cutoff_certifies_and_is_stable_under_halving() {
    let f = build_cutoff(0.2).unwrap();
    let rep = f.certify().unwrap();
    assert!(rep.min_margin >= 0.0 && rep.min_midpoint_margin >= 0.0);
    assert!(rep.max_ddphi <= 0.0);
    assert!(f.refinement_stability().unwrap() < 1e-12);
}

#[test]
fn approximations_respect_curvature_regimes() {
    let f = build_cutoff(0.2).unwrap();
    for n in 0..=3 {
        let base = disk_datum(disk_datum_window(n, 256).unwrap()).unwrap();
        let seq = ApproxMetricSequence::new(base, f.clone());
        let r = curvature_report(&seq, n, options(1e-3)).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(n == 0 || r.identity.cells > 0);
        assert!(r.transition.cells > 0 && r.constant.cells > 0);
        assert!(r.transition.max <= r.k_max);
    }
}

#[test]
fn sequence_is_eventually_stationary() {
    let base = disk_datum(hyperweyl::conformal::Chart::square(hyperweyl::hyp::ChartKind::North, 64, 0.8).unwrap()).unwrap();
    let umax = base.u.as_slice().iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let seq = ApproxMetricSequence::new(base, build_cutoff(0.25).unwrap());
    let n = umax.ceil() as i32;
    assert_eq!(seq.stationary_mask(n).count(), seq.base.mask.count());
    assert!(seq.stationary_mask(0).count() < seq.base.mask.count());
}

#[test]
fn measured_gradient_stays_below_sech_one() {
    let base = disk_datum(disk_datum_window(2, 256).unwrap()).unwrap();
    let c = gradient_bound(&base, 2.0, 4.0);
    assert!(c > 0.5 && c < 1.0 / 1f64.cosh() + 1e-3, "{c}");
}

#[test]
fn read_rejects_uncertifiable_knots() {
    let f = build_cutoff(0.2).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    // Push one bridge slope above its neighbour.
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let k = 1 + 1900;
    let cols: Vec<&str> = lines[k].split(',').collect();
    lines[k] = format!("{},{},{},{}", cols[0], cols[1], 0.999_999, cols[3]);
    assert!(CutoffFunction::read_csv(lines.join("\n").as_bytes()).is_err());
}

proptest! {
    #[test]
    fn phi_n_is_monotone_in_x_and_n(x in -3.0f64..12.0, n in 0i32..8, dx in 0.0f64..0.5) {
        let f = build_cutoff(0.2).unwrap();
        prop_assert!(f.phi_n(n, x) <= f.phi_n(n, x + dx) + 1e-15);
        prop_assert!(f.phi_n(n, x) <= f.phi_n(n + 1, x) + 1e-15);
        prop_assert!(f.phi_n(n, x) <= x + 1e-15);
        prop_assert!(f.phi_n(n, x) <= n as f64 + 1.0);
    }

    #[test]
    fn cutoff_margin_holds_off_knots(eps in 0.05f64..0.45, x in 0.0f64..2.0) {
        let f = build_cutoff(eps).unwrap();
        let (p, d, dd) = f.eval3(x);
        prop_assert!((2.0 * (p - x)).exp() - d >= -1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        prop_assert!(dd <= 1e-9);
    }
}
