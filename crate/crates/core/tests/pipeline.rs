use carnot_lusin::curve::{HorizontalCurve, Knot, Piece, PlanarCurve, SampledCurve};
use carnot_lusin::group::{FreeGroupPoint, TangentVector};
use carnot_lusin::interpolate::{interpolate_gap, InterpolateConfig};
use carnot_lusin::lift::{check_horizontal, horizontal_lift, CheckConfig};
use carnot_lusin::lusin::{approximate, extend_constant_velocity, verify, GoodSetConfig, STITCH_TOL};
use carnot_lusin::segment::Segment;

fn drift(v: &[f64], d: f64) -> Segment {
    Segment::LinearDrift { velocity: v.to_vec(), duration: d }
}

fn sample(curve: &HorizontalCurve, n: usize) -> SampledCurve {
    let (lo, hi) = curve.domain();
    let times = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    SampledCurve::from_curve(curve, times).unwrap()
}

fn two_jump_curve() -> HorizontalCurve {
    let third = 1.0 / 3.0;
    let planar = PlanarCurve::new(
        vec![0.0, 0.0, 0.0],
        vec![drift(&[1.0, 0.0, 0.0], third), drift(&[0.6, 0.8, 0.0], third), drift(&[0.6, 0.3, 0.74], third)],
    )
    .unwrap();
    horizontal_lift(&planar, &FreeGroupPoint::identity(3)).unwrap()
}

#[test]
fn two_jumps_give_two_gaps_matching_at_exits() {
    let gamma = two_jump_curve();
    let s = sample(&gamma, 3001);
    let (out, report) = approximate(&s, &GoodSetConfig::default()).unwrap();
    assert_eq!(report.gaps.len(), 2, "{:?}", report.gaps);
    assert!(report.success, "{report:?}");
    for g in &report.gaps {
        for (k, t) in [(g.index_a, g.a), (g.index_b, g.b)] {
            let p = out.eval(t);
            let d = p.y.iter().zip(&s.points[k].y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d <= 1e-9, "vertical mismatch {d:e} at {t}");
        }
        assert!(g.a < 1.0 / 3.0 && g.b > 1.0 / 3.0 || g.a < 2.0 / 3.0 && g.b > 2.0 / 3.0);
    }
    assert!(report.max_derivative_jump <= STITCH_TOL);
    assert!(report.disagreement_measure <= 0.1);
}

#[test]
fn verify_reproduces_the_report() {
    let s = sample(&two_jump_curve(), 1501);
    let cfg = GoodSetConfig::default();
    let (out, report) = approximate(&s, &cfg).unwrap();
    let again = verify(&out, &s, &cfg).unwrap();
    assert_eq!(again.sample_mismatches, 0);
    assert_eq!(again.good_samples, report.good_samples);
    assert_eq!(again.disagreement_measure, report.disagreement_measure);
    assert_eq!(again.max_derivative_jump, report.max_derivative_jump);
    assert_eq!(again.gaps.len(), report.gaps.len());
    for (a, b) in again.gaps.iter().zip(&report.gaps) {
        assert_eq!((a.a, a.b), (b.a, b.b));
        assert_eq!(a.eps, b.eps);
        // independent measurement on a different grid
        assert!((a.measured_dev - b.measured_dev).abs() <= 0.05 * b.measured_dev.max(1e-12), "{a:?} vs {b:?}");
    }
    assert!(again.success);
}

#[test]
fn straight_line_is_reproduced() {
    let planar = PlanarCurve::new(vec![0.0, 0.0, 0.0], vec![drift(&[1.0, -0.5, 0.25], 1.0)]).unwrap();
    let gamma = horizontal_lift(&planar, &FreeGroupPoint::identity(3)).unwrap();
    let s = sample(&gamma, 201);
    let (out, report) = approximate(&s, &GoodSetConfig::default()).unwrap();
    assert!(report.gaps.is_empty());
    assert_eq!(report.disagreement_measure, 0.0);
    for k in 0..s.len() {
        assert!(out.eval(s.times[k]).bit_eq(&s.points[k]));
    }
    for t in [0.00123, 0.5001, 0.987] {
        assert!(out.eval(t).distance_inf(&gamma.eval(t)) <= 1e-14);
    }
}

#[test]
fn extension_follows_constant_controls() {
    let e1 = TangentVector::horizontal_at(&FreeGroupPoint::identity(3), vec![1.0, 0.0, 0.0]);
    let piece = Piece::forward(drift(&[1.0, 0.0, 0.0], 1.0), 0.0, 1.0);
    let knots = vec![
        Knot { t: 0.0, point: FreeGroupPoint::identity(3), velocity: e1.clone() },
        Knot { t: 1.0, point: FreeGroupPoint::horizontal(vec![1.0, 0.0, 0.0]), velocity: e1 },
    ];
    let line = HorizontalCurve::new(3, vec![piece], knots).unwrap();
    let ext = extend_constant_velocity(line, -1.0, 2.0).unwrap();
    assert_eq!(ext.domain(), (-1.0, 2.0));
    for t in [-1.0, -0.5, 1.5, 2.0] {
        let p = ext.eval(t);
        let want = FreeGroupPoint::horizontal(vec![t, 0.0, 0.0]);
        assert!(p.distance_inf(&want) <= 1e-15, "{p:?}");
    }
    let rep = check_horizontal(&ext, CheckConfig { tol: 1e-10, ..CheckConfig::default() });
    assert!(rep.horizontal, "{rep:?}");
    assert!(ext.max_knot_velocity_jump().0 <= 1e-15);

    let p = FreeGroupPoint::new(vec![0.3, 0.1], vec![0.2]).unwrap();
    let still = extend_constant_velocity(HorizontalCurve::stationary(p.clone(), 0.0), -1.0, 1.0).unwrap();
    for t in [-1.0, 0.4, 1.0] {
        assert!(still.eval(t).bit_eq(&p));
    }
}

#[test]
fn gap_bound_shrinks_with_gap_length_on_smooth_curves() {
    let planar = PlanarCurve::new(
        vec![0.0, 0.0, 0.0],
        vec![Segment::CubicPoly { coeffs: vec![[0.0, 1.0, 0.2, 0.0], [0.0, 0.1, -0.3, 0.1], [0.0, 0.0, 0.4, -0.2]], duration: 1.0 }],
    )
    .unwrap();
    let gamma = horizontal_lift(&planar, &FreeGroupPoint::identity(3)).unwrap();
    let mut last = f64::INFINITY;
    for h in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let res = interpolate_gap(&gamma, 0.3, 0.3 + h, &InterpolateConfig::default()).unwrap();
        assert!(res.eps() <= last, "eps {} after {last} at h = {h}", res.eps());
        assert!(res.boundary_residual <= 1e-9);
        last = res.eps();
    }
    assert!(last < 0.05);
}

#[test]
fn tampered_knot_is_detected() {
    let s = sample(&two_jump_curve(), 1501);
    let cfg = GoodSetConfig::default();
    let (mut out, _) = approximate(&s, &cfg).unwrap();
    let k = out.knots().len() / 2;
    let bump = 1e-4;
    out.knots_mut()[k].velocity.x[1] += bump;
    let rep = verify(&out, &s, &cfg).unwrap();
    assert!(rep.max_derivative_jump >= bump - 1e-10, "{}", rep.max_derivative_jump);
    assert!(!rep.success);
}
