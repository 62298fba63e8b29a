//! Horizontal lifts, signed areas and horizontality checks for curves.

use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, Knot, Piece, PlanarCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::group::{horizontal_residual, pair_count, FreeGroupPoint, TangentVector};
use crate::quadrature::{integrate, integrate_dyn, QuadConfig, DEFAULT_TOL};

/// Default number of dense samples per piece.
pub const DEFAULT_GRID: usize = 256;

/// Lifts `phi` to the free group starting at `p`.
pub fn horizontal_lift(phi: &PlanarCurve, p: &FreeGroupPoint) -> Result<HorizontalCurve> {
    phi.validate()?;
    if p.rank() != phi.r {
        return Err(Error::RankMismatch { expected: phi.r, found: p.rank() });
    }
    let mismatch = p.x.iter().zip(&phi.start).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if mismatch > 1e-12 {
        return Err(Error::StartMismatch(mismatch));
    }
    let r = phi.r;
    let times = phi.breakpoints();
    if phi.segments.is_empty() {
        return Ok(HorizontalCurve::stationary(p.clone(), phi.t0));
    }
    let pieces: Vec<Piece> = phi
        .segments
        .iter()
        .enumerate()
        .map(|(k, seg)| Piece::forward(seg.clone(), times[k], times[k + 1]))
        .collect();
    let first_v = phi.segments[0].velocity(0.0);
    let mut knots = vec![Knot { t: times[0], point: p.clone(), velocity: TangentVector::horizontal_at(p, first_v) }];
    let n = pieces.len();
    for k in 0..n {
        let partial = HorizontalCurve::from_parts_unchecked(
            r,
            vec![pieces[k].clone()],
            vec![knots[k].clone(), knots[k].clone()],
        );
        let mut point = partial.eval_on_piece(0, times[k + 1]);
        // Horizontal part accumulates segment displacements exactly as the
        // planar curve does.
        let seg = &phi.segments[k];
        let p0 = seg.position(0.0);
        let p1 = seg.position(seg.duration());
        for i in 0..r {
            point.x[i] = knots[k].point.x[i] + (p1[i] - p0[i]);
        }
        let v = if k + 1 < n {
            phi.segments[k + 1].velocity(0.0)
        } else {
            seg.velocity(seg.duration())
        };
        let velocity = TangentVector::horizontal_at(&point, v);
        knots.push(Knot { t: times[k + 1], point, velocity });
    }
    HorizontalCurve::new(r, pieces, knots)
}

/// `1/2 int_a^b (phi_i phi_j' - phi_j phi_i')` where each closure returns
/// `(value, derivative)`.
pub fn signed_area<F, G>(phi_i: F, phi_j: G, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
    G: Fn(f64) -> (f64, f64),
{
    let cfg = QuadConfig { tol, ..QuadConfig::default() };
    integrate(
        |t| {
            let (fi, dfi) = phi_i(t);
            let (fj, dfj) = phi_j(t);
            0.5 * (fi * dfj - fj * dfi)
        },
        a,
        b,
        cfg,
    )
}

/// Shoelace area `1/2 sum (x_i[k] x_j[k+1] - x_j[k] x_i[k+1])` of a polyline,
/// the discrete counterpart of [`signed_area`].
pub fn polygon_area(xi: &[f64], xj: &[f64]) -> f64 {
    let n = xi.len().min(xj.len());
    let mut s = 0.0;
    for k in 0..n.saturating_sub(1) {
        s += xi[k] * xj[k + 1] - xj[k] * xi[k + 1];
    }
    0.5 * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalityReport {
    /// Per vertical coordinate, the largest gap between stored values and the
    /// recomputed lift integral.
    pub vertical_residual: Vec<f64>,
    pub max_vertical_residual: f64,
    /// Largest pointwise tangent residual.
    pub max_tangent_residual: f64,
    pub horizontal: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub tol: f64,
    pub grid: usize,
    pub quad_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, grid: DEFAULT_GRID, quad_tol: DEFAULT_TOL }
    }
}

/// Recomputes the vertical coordinates of `gamma` by integrating
/// `1/2 (x_i x_j' - x_j x_i')` from the first knot and compares them with the
/// evaluated values on a dense grid. Tangents are checked pointwise.
pub fn is_horizontal_curve(gamma: &HorizontalCurve, tol: f64) -> HorizontalityReport {
    check_horizontal(gamma, CheckConfig { tol, ..CheckConfig::default() })
}

pub fn check_horizontal(gamma: &HorizontalCurve, cfg: CheckConfig) -> HorizontalityReport {
    let r = gamma.r();
    let m = pair_count(r);
    let mut vres = vec![0.0_f64; m];
    let mut tres = 0.0_f64;
    let first = &gamma.knots()[0];
    tres = tres.max(horizontal_residual(&first.velocity, &first.point));
    let mut acc = first.point.y.clone();
    let (t_start, t_end) = gamma.domain();
    let total = (t_end - t_start).max(f64::MIN_POSITIVE);
    let grid = cfg.grid.max(1);
    for (k, piece) in gamma.pieces().iter().enumerate() {
        let mut prev = piece.t0;
        for g in 1..=grid {
            let t = if g == grid { piece.t1 } else { piece.t0 + (piece.t1 - piece.t0) * g as f64 / grid as f64 };
            let sub_tol = (cfg.quad_tol * (t - prev) / total).max(1e-16);
            let qcfg = QuadConfig { tol: sub_tol, ..QuadConfig::default() };
            let integrand = |s: f64| {
                let p = gamma.eval_on_piece(k, s);
                let v = piece.horizontal_velocity(s);
                let mut out = Vec::with_capacity(m);
                for i in 1..r {
                    for j in 0..i {
                        out.push(0.5 * (p.x[i] * v[j] - p.x[j] * v[i]));
                    }
                }
                out
            };
            // A failed quadrature poisons the residual instead of passing silently.
            let inc = integrate_dyn(integrand, prev, t, qcfg).unwrap_or_else(|_| vec![f64::NAN; m]);
            for (a, d) in acc.iter_mut().zip(&inc) {
                *a += d;
            }
            let point = if g == grid { gamma.knots()[k + 1].point.clone() } else { gamma.eval_on_piece(k, t) };
            let vel = if g == grid { gamma.knots()[k + 1].velocity.clone() } else { gamma.velocity_on_piece(k, t) };
            for (res, (a, y)) in vres.iter_mut().zip(acc.iter().zip(&point.y)) {
                let d = (a - y).abs();
                *res = if d.is_nan() { f64::NAN } else { res.max(d) };
            }
            tres = tres.max(horizontal_residual(&vel, &point));
            prev = t;
        }
    }
    let max_v = vres.iter().fold(0.0_f64, |a, &b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
    let horizontal = max_v <= cfg.tol && tres <= cfg.tol;
    HorizontalityReport { vertical_residual: vres, max_vertical_residual: max_v, max_tangent_residual: tres, horizontal }
}

/// Fills in derivatives with nonuniform three-point differences. Vertical
/// components are taken from the horizontality relation at each sample.
pub fn estimate_derivatives(s: &SampledCurve) -> Result<SampledCurve> {
    s.validate()?;
    let xs: Vec<&[f64]> = s.points.iter().map(|p| p.x.as_slice()).collect();
    let v = difference_derivatives(&s.times, &xs)?;
    let derivs = s.points.iter().zip(v).map(|(p, v)| TangentVector::horizontal_at(p, v)).collect();
    Ok(SampledCurve { r: s.r, times: s.times.clone(), points: s.points.clone(), derivs: Some(derivs) })
}

/// Nonuniform three-point derivative estimates of vector samples, one-sided
/// at both ends.
pub fn difference_derivatives(t: &[f64], x: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let n = t.len();
    if x.len() != n {
        return Err(Error::Shape(format!("{} times but {} values", n, x.len())));
    }
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let r = x[0].len();
    let mut derivs = Vec::with_capacity(n);
    for k in 0..n {
        let (ia, ib, ic, w) = if k == 0 {
            let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
            (0, 1, 2, [-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))])
        } else if k == n - 1 {
            let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
            (n - 3, n - 2, n - 1, [h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (h1 + 2.0 * h2) / (h2 * (h1 + h2))])
        } else {
            let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
            (k - 1, k, k + 1, [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))])
        };
        derivs.push((0..r).map(|i| w[0] * x[ia][i] + w[1] * x[ib][i] + w[2] * x[ic][i]).collect());
    }
    Ok(derivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::left_translate;
    use crate::segment::Segment;
    use std::f64::consts::PI;

    fn unit_circle() -> PlanarCurve {
        // (sin t, 1 - cos t) on [0, 2 pi].
        let seg = Segment::Case2Circle { r: 2, coord: 1, lambda: 1.0, theta: [0.0, 1.0, 0.0, 0.0], orientation: -1.0, duration: 2.0 * PI };
        PlanarCurve::new(vec![0.0, 0.0], vec![seg]).unwrap()
    }

    #[test]
    fn circle_lift_matches_shoelace() {
        let c = unit_circle();
        let g = horizontal_lift(&c, &FreeGroupPoint::identity(2)).unwrap();
        let end = g.end().y[0];
        let n = 10_000;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..=n {
            let p = c.position(2.0 * PI * k as f64 / n as f64);
            xs.push(p[0]);
            ys.push(p[1]);
        }
        // Pair (2,1) pairs x_2 with x_1.
        let shoelace = polygon_area(&ys, &xs);
        assert!((end.abs() - PI).abs() < 1e-12, "{end}");
        assert!((end - shoelace).abs() / PI < 1e-6, "{end} vs {shoelace}");
    }

    #[test]
    fn straight_and_constant_lifts_have_no_area() {
        let seg = Segment::LinearDrift { velocity: vec![0.3, -0.7, 0.2], duration: 2.0 };
        let c = PlanarCurve::new(vec![0.0; 3], vec![seg]).unwrap();
        let g = horizontal_lift(&c, &FreeGroupPoint::identity(3)).unwrap();
        assert!(g.end().y.iter().all(|v| *v == 0.0));
        let rep = is_horizontal_curve(&g, 1e-10);
        assert!(rep.horizontal && rep.max_vertical_residual < 1e-14);

        let p = FreeGroupPoint::new(vec![1.0, 2.0], vec![0.5]).unwrap();
        let c = PlanarCurve::new(vec![1.0, 2.0], vec![Segment::Constant { r: 2, duration: 1.0 }]).unwrap();
        let g = horizontal_lift(&c, &p).unwrap();
        assert_eq!(g.eval(0.5).y, vec![0.5]);
        assert_eq!(is_horizontal_curve(&g, 1e-10).max_vertical_residual, 0.0);
    }

    #[test]
    fn start_mismatch_is_rejected() {
        let c = unit_circle();
        let p = FreeGroupPoint::horizontal(vec![0.1, 0.0]);
        assert!(matches!(horizontal_lift(&c, &p), Err(Error::StartMismatch(_))));
    }

    #[test]
    fn perturbed_knot_is_detected() {
        let segs = vec![
            Segment::CubicPoly { coeffs: vec![[0.0, 1.0, 0.3, 0.0], [0.0, 0.0, 1.0, -0.4]], duration: 0.5 },
            Segment::CubicPoly { coeffs: vec![[0.0, 1.0, 0.0, 0.2], [0.0, 0.6, 0.0, 0.0]], duration: 0.5 },
        ];
        let c = PlanarCurve::new(vec![0.0, 0.0], segs).unwrap();
        let g = horizontal_lift(&c, &FreeGroupPoint::identity(2)).unwrap();
        assert!(is_horizontal_curve(&g, 1e-10).horizontal);
        let (pieces, mut knots) = g.into_parts();
        knots[1].point.y[0] += 1e-3;
        let bad = HorizontalCurve::new(2, pieces, knots).unwrap();
        let rep = is_horizontal_curve(&bad, 1e-10);
        assert!(rep.max_vertical_residual >= 1e-3 - 1e-10, "{rep:?}");
        assert!(!rep.horizontal);
    }

    #[test]
    fn lift_commutes_with_left_translation() {
        let seg = Segment::CubicPoly { coeffs: vec![[0.0, 1.0, -0.2, 0.5], [0.0, -0.3, 0.8, 0.1], [0.0, 0.4, 0.0, -0.6]], duration: 1.0 };
        let c0 = PlanarCurve::new(vec![0.0; 3], vec![seg.clone()]).unwrap();
        let g0 = horizontal_lift(&c0, &FreeGroupPoint::identity(3)).unwrap();
        let p = FreeGroupPoint::new(vec![0.5, -1.0, 0.25], vec![0.1, -0.2, 0.3]).unwrap();
        let mut shifted = seg;
        if let Segment::CubicPoly { coeffs, .. } = &mut shifted {
            for (c, x) in coeffs.iter_mut().zip(&p.x) {
                c[0] += x;
            }
        }
        let c1 = PlanarCurve::new(p.x.clone(), vec![shifted]).unwrap();
        let g1 = horizontal_lift(&c1, &p).unwrap();
        for t in [0.0, 0.3, 0.77, 1.0] {
            let a = g1.eval(t);
            let b = left_translate(&p, &g0.eval(t)).unwrap();
            assert!(a.distance_inf(&b) <= 1e-12, "{t}");
        }
    }

    #[test]
    fn derivative_estimates() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let pts: Vec<_> = times.iter().map(|t| FreeGroupPoint::horizontal(vec![2.0 * t, -t])).collect();
        let s = SampledCurve::new(times, pts, None).unwrap();
        let d = estimate_derivatives(&s).unwrap();
        for (v, p) in d.derivs.as_ref().unwrap().iter().zip(&d.points) {
            assert!((v.x[0] - 2.0).abs() < 1e-12 && (v.x[1] + 1.0).abs() < 1e-12);
            assert_eq!(horizontal_residual(v, p), 0.0);
        }
        let two = SampledCurve::new(vec![0.0, 1.0], vec![FreeGroupPoint::identity(2); 2], None).unwrap();
        assert!(matches!(estimate_derivatives(&two), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn parabola_derivative_error_is_second_order() {
        let seg = Segment::CubicPoly { coeffs: vec![[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]], duration: 1.0 };
        let c = PlanarCurve::new(vec![0.0, 0.0], vec![seg]).unwrap();
        let g = horizontal_lift(&c, &FreeGroupPoint::identity(2)).unwrap();
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-3).collect();
        let s = SampledCurve::from_curve(&g, times).unwrap();
        let bare = SampledCurve { derivs: None, ..s.clone() };
        let est = estimate_derivatives(&bare).unwrap();
        let worst = est
            .derivs
            .unwrap()
            .iter()
            .zip(s.derivs.as_ref().unwrap())
            .map(|(a, b)| a.x.iter().zip(&b.x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-5, "{worst}");
    }

    #[test]
    fn signed_area_of_circle_and_axis() {
        let lambda = 0.7;
        let a = signed_area(
            |t: f64| (lambda * t.cos(), -lambda * t.sin()),
            |t: f64| (lambda * t.sin(), lambda * t.cos()),
            0.0,
            2.0 * PI,
            1e-12,
        )
        .unwrap();
        assert!((a - PI * lambda * lambda).abs() < 1e-10);
        let z = signed_area(|t| (t, 1.0), |_| (0.0, 0.0), 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(z, 0.0);
    }
}
