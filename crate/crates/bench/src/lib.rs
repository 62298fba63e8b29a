//! Fixtures shared by the benchmarks.

use carnot_lusin::curve::{HorizontalCurve, PlanarCurve, SampledCurve};
use carnot_lusin::frame::BoundaryData;
use carnot_lusin::group::{pair_count, FreeGroupPoint, TangentVector};
use carnot_lusin::lift::horizontal_lift;
use carnot_lusin::segment::Segment;

/// Deterministic point with coordinates in `[-1, 1]`.
pub fn point(r: usize, seed: usize) -> FreeGroupPoint {
    let c = |k: usize| ((seed * 7919 + k * 104_729) % 2001) as f64 / 1000.0 - 1.0;
    FreeGroupPoint::new((0..r).map(c).collect(), (0..pair_count(r)).map(|k| c(r + k)).collect()).unwrap()
}

/// Planar curve of `pieces` cubic segments in `R^r`.
pub fn cubic_curve(r: usize, pieces: usize) -> PlanarCurve {
    let segs = (0..pieces)
        .map(|p| Segment::CubicPoly {
            coeffs: (0..r).map(|i| [0.0, 1.0 - 0.1 * i as f64, 0.3 * (p as f64 - 1.0), 0.05 * i as f64]).collect(),
            duration: 1.0 / pieces as f64,
        })
        .collect();
    PlanarCurve::new(vec![0.0; r], segs).unwrap()
}

/// Boundary data in normalized form with every vertical target nonzero.
pub fn boundary(r: usize, eps: f64) -> BoundaryData {
    let h = 0.5 * eps;
    let l = 1.0;
    let mut x = vec![0.0; r];
    x[0] = 2.0 * l * h + 0.3 * eps * h;
    for (i, xi) in x.iter_mut().enumerate().skip(1) {
        *xi = eps * h * (0.5 - 0.2 * i as f64);
    }
    let mut y = vec![0.0; pair_count(r)];
    for (k, yk) in y.iter_mut().enumerate() {
        *yk = 0.5 * eps * eps * h * h * if k % 2 == 0 { 1.0 } else { -1.0 };
    }
    let q = FreeGroupPoint::new(x, y).unwrap();
    let mut w = vec![0.1 * eps; r];
    w[0] = l;
    let w = TangentVector::horizontal_at(&q, w);
    BoundaryData::new(h, q, w, l).unwrap().with_eps(eps)
}

/// Heisenberg lift of the planar path `(t, |t - 1/2|)` sampled at `n` points.
pub fn v_path(n: usize) -> SampledCurve {
    let planar = PlanarCurve::new(
        vec![0.0, 0.5],
        vec![
            Segment::LinearDrift { velocity: vec![1.0, -1.0], duration: 0.5 },
            Segment::LinearDrift { velocity: vec![1.0, 1.0], duration: 0.5 },
        ],
    )
    .unwrap();
    let gamma: HorizontalCurve = horizontal_lift(&planar, &FreeGroupPoint::horizontal(vec![0.0, 0.5])).unwrap();
    let times = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    SampledCurve::from_curve(&gamma, times).unwrap()
}
