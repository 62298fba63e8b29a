//! The C1 horizontal interpolation kernel.
//!
//! Given normalized boundary data on `[0, 2h]`, the curve `psi` is the
//! concatenation of `alpha` on `[0, h]`, which fixes every vertical
//! coordinate of an intermediate point `q~` one subinterval at a time, and
//! `beta` on `[h, 2h]`, the reversed lift of a cubic that carries `q~` to the
//! endpoint `q` with the prescribed end velocity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, Knot, Piece};
use crate::error::{Error, Result};
use crate::frame::{denormalize, normalize_gap_with_tol, BoundaryData, NormalizedGap, BOUNDARY_HORIZONTAL_TOL};
use crate::group::{pair_count, pair_index, pairs, FreeGroupPoint, TangentVector};
use crate::lift::{check_horizontal, CheckConfig, HorizontalityReport};
use crate::segment::{hermite_angle, Segment};

/// `I = int_0^{2 pi} (1 - cos 2s)^2 ds`.
pub const CASE3_INTEGRAL: f64 = 3.0 * PI;

/// Order and targets for fixing the vertical coordinates of `q~`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPlan {
    pub n: usize,
    /// Zero-based pair `(i, j)` fixed on subinterval `k`.
    pub order: Vec<(usize, usize)>,
    /// Targets in storage order.
    pub targets: Vec<f64>,
}

impl AlphaPlan {
    /// Pairs `(i, 0)` first, then the rest, each in storage order.
    pub fn new(q_tilde: &FreeGroupPoint) -> Self {
        let r = q_tilde.rank();
        let mut order: Vec<_> = pairs(r).filter(|&(_, j)| j == 0).collect();
        order.extend(pairs(r).filter(|&(_, j)| j > 0));
        Self { n: pair_count(r), order, targets: q_tilde.y.clone() }
    }

    pub fn with_order(q_tilde: &FreeGroupPoint, order: Vec<(usize, usize)>) -> Result<Self> {
        let plan = Self { n: pair_count(q_tilde.rank()), order, targets: q_tilde.y.clone() };
        plan.validate(q_tilde.rank())?;
        Ok(plan)
    }

    pub fn validate(&self, r: usize) -> Result<()> {
        let m = pair_count(r);
        if self.n != m || self.order.len() != m || self.targets.len() != m {
            return Err(Error::Shape(format!("plan for rank {r} needs {m} subintervals")));
        }
        let mut seen = vec![false; m];
        for &(i, j) in &self.order {
            if !(i > j && i < r) {
                return Err(Error::IndexOutOfRange { index: i, max: r - 1 });
            }
            let idx = pair_index(i, j);
            if seen[idx] {
                return Err(Error::AlreadyFixed(i, j));
            }
            seen[idx] = true;
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("alpha targets"));
        }
        Ok(())
    }
}

/// Which construction fixed a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Drift,
    Case1,
    Case2,
    Case3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub pair: (usize, usize),
    pub case: CaseKind,
    pub target: f64,
}

/// Bookkeeping while building `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaState {
    pub r: usize,
    pub fixed: Vec<bool>,
    /// Designed vertical coordinates at the current knot.
    pub y: Vec<f64>,
}

impl AlphaState {
    pub fn new(r: usize) -> Self {
        Self { r, fixed: vec![false; pair_count(r)], y: vec![0.0; pair_count(r)] }
    }

    fn claim(&mut self, i: usize, j: usize, target: f64) -> Result<()> {
        if !(i > j && i < self.r) {
            return Err(Error::IndexOutOfRange { index: i, max: self.r - 1 });
        }
        let idx = pair_index(i, j);
        if self.fixed[idx] {
            return Err(Error::AlreadyFixed(i, j));
        }
        self.fixed[idx] = true;
        self.y[idx] = target;
        Ok(())
    }
}

fn drift(r: usize, l: f64, duration: f64) -> Segment {
    let mut velocity = vec![0.0; r];
    velocity[0] = l;
    Segment::LinearDrift { velocity, duration }
}

/// Targets at or below this size are treated as zero when `eps = 0`.
fn zero_eps_threshold(h: f64, l: f64) -> f64 {
    16.0 * f64::EPSILON * h * h * (1.0 + l) * (1.0 + l)
}

/// Case 1 (`L >= eps > 0`): a single bump in coordinate `i` riding on the drift.
#[allow(clippy::too_many_arguments)]
pub fn alpha_case1(state: &mut AlphaState, i: usize, target: f64, l: f64, eps: f64, h: f64, n: usize) -> Result<Vec<Segment>> {
    if !(eps > 0.0 && l >= eps) {
        return Err(Error::WrongCase(format!("case 1 needs L >= eps > 0, got L = {l}, eps = {eps}")));
    }
    state.claim(i, 0, target)?;
    if target == 0.0 {
        return Ok(vec![drift(state.r, l, h / n as f64)]);
    }
    let lambda = target * n as f64 / (l * h * h * eps);
    Ok(vec![Segment::Case1Loop { r: state.r, coord: i, l, lambda, eps, h, n }])
}

/// Case 2 (`L < eps`): a circle in the `(1, i)` plane on the first half of the
/// subinterval, then a drift that restores horizontal progress.
#[allow(clippy::too_many_arguments)]
pub fn alpha_case2(state: &mut AlphaState, i: usize, target: f64, l: f64, eps: f64, h: f64, n: usize) -> Result<Vec<Segment>> {
    if !(l < eps) {
        return Err(Error::WrongCase(format!("case 2 needs L < eps, got L = {l}, eps = {eps}")));
    }
    state.claim(i, 0, target)?;
    let r = state.r;
    if target == 0.0 {
        return Ok(vec![drift(r, l, h / n as f64)]);
    }
    let half = h / (2.0 * n as f64);
    let lambda = (target.abs() / PI).sqrt();
    let theta = hermite_angle(l / lambda, half);
    let orientation = if target > 0.0 { 1.0 } else { -1.0 };
    Ok(vec![
        Segment::Case2Circle { r, coord: i, lambda, theta, orientation, duration: half },
        Segment::Case2Line { r, l, duration: half },
    ])
}

/// Case 3 (`i > j >= 1`): the loop `(zeta cos, zeta sin)` in the `(i, j)` plane.
#[allow(clippy::too_many_arguments)]
pub fn alpha_case3(state: &mut AlphaState, i: usize, j: usize, target: f64, l: f64, eps: f64, h: f64, n: usize) -> Result<Vec<Segment>> {
    if j == 0 {
        return Err(Error::WrongCase(format!("case 3 needs j >= 1, got ({i}, {j})")));
    }
    if eps == 0.0 && target != 0.0 {
        return Err(Error::Infeasible(format!("eps = 0 with vertical target {target:e}")));
    }
    state.claim(i, j, target)?;
    if target == 0.0 {
        return Ok(vec![drift(state.r, l, h / n as f64)]);
    }
    // 1/2 int (g_i g_j' - g_j g_i') = (lambda h eps)^2 I / 2 over one subinterval.
    let lambda = (2.0 * target.abs() / (h * h * eps * eps * CASE3_INTEGRAL)).sqrt();
    Ok(vec![Segment::Case3Loop { r: state.r, i, j, l, lambda, eps, h, n, swapped: target < 0.0 }])
}

/// Output of [`alpha_curve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCurve {
    pub curve: HorizontalCurve,
    pub cases: Vec<CaseRecord>,
    /// Vertical coordinates evaluated from the piece formulas at the end of
    /// every subinterval.
    pub trace: Vec<Vec<f64>>,
}

fn subinterval_time(k: usize, n: usize, h: f64) -> f64 {
    if k == n {
        h
    } else {
        k as f64 * h / n as f64
    }
}

/// Builds `alpha` on `[0, h]` from `0` to `q~` with velocity `(L, 0, ..., 0)`
/// at every subinterval boundary.
pub fn alpha_curve(bd: &BoundaryData, q_tilde: &FreeGroupPoint, plan: &AlphaPlan) -> Result<AlphaCurve> {
    let r = bd.rank();
    plan.validate(r)?;
    let (h, l, eps, n) = (bd.h, bd.l, bd.eps, plan.n);
    let mut state = AlphaState::new(r);
    let mut pieces = Vec::new();
    let mut knots = Vec::new();
    let mut cases = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);
    let knot_at = |t: f64, y: &[f64]| {
        let mut x = vec![0.0; r];
        x[0] = l * t;
        let point = FreeGroupPoint { x, y: y.to_vec() };
        let velocity = TangentVector::horizontal_at(&point, bd.v.x.clone());
        Knot { t, point, velocity }
    };
    knots.push(knot_at(0.0, &state.y));
    let thresh = zero_eps_threshold(h, l);
    for (k, &(i, j)) in plan.order.iter().enumerate() {
        let target = plan.targets[pair_index(i, j)];
        let (segments, case) = if target == 0.0 || (eps == 0.0 && target.abs() <= thresh) {
            state.claim(i, j, target)?;
            (vec![drift(r, l, h / n as f64)], CaseKind::Drift)
        } else if eps == 0.0 {
            return Err(Error::Infeasible(format!("eps = 0 with vertical target {target:e} for ({i}, {j})")));
        } else if j == 0 && l >= eps {
            (alpha_case1(&mut state, i, target, l, eps, h, n)?, CaseKind::Case1)
        } else if j == 0 {
            (alpha_case2(&mut state, i, target, l, eps, h, n)?, CaseKind::Case2)
        } else {
            (alpha_case3(&mut state, i, j, target, l, eps, h, n)?, CaseKind::Case3)
        };
        cases.push(CaseRecord { pair: (i, j), case, target });
        let t0 = subinterval_time(k, n, h);
        let t1 = subinterval_time(k + 1, n, h);
        let count = segments.len();
        let mut t = t0;
        for (s, seg) in segments.into_iter().enumerate() {
            let t_next = if s + 1 == count { t1 } else { t0 + (t1 - t0) * (s + 1) as f64 / count as f64 };
            // A drift takes the exact span so that its rate is exactly one.
            let seg = match seg {
                Segment::LinearDrift { velocity, .. } => Segment::LinearDrift { velocity, duration: t_next - t },
                other => other,
            };
            pieces.push(Piece::forward(seg, t, t_next));
            // Intermediate knots sit on the drift line with the coordinate
            // already at its target; in Case 2 the circle has closed by then.
            let y_here = state.y.clone();
            let mut knot = knot_at(t_next, &y_here);
            if s + 1 < count {
                knot.point.x[0] = l * t0;
                knot.velocity = TangentVector::horizontal_at(&knot.point, bd.v.x.clone());
            }
            knots.push(knot);
            t = t_next;
        }
        let partial = HorizontalCurve::from_parts_unchecked(r, pieces.clone(), knots.clone());
        trace.push(partial.eval_on_piece(pieces.len() - 1, t1).y);
    }
    debug_assert_eq!(knots.last().map(|k| k.point.x[0]), Some(q_tilde.x[0]));
    let curve = HorizontalCurve::new(r, pieces, knots)?;
    Ok(AlphaCurve { curve, cases, trace })
}

/// Coefficients of the cubic from `q` back to `(Lh, 0, ..., 0)`.
fn beta_coefficients(bd: &BoundaryData) -> Vec<[f64; 4]> {
    let h = bd.h;
    (0..bd.rank())
        .map(|k| {
            let q = bd.q.x[k];
            let w = -bd.w.x[k];
            let v = -bd.v.x[k];
            [q, w, (-4.0 * h * v - 2.0 * h * w - 3.0 * q) / (h * h), (3.0 * h * v + h * w + 2.0 * q) / (h * h * h)]
        })
        .collect()
}

/// `beta` on `[h, 2h]` and the intermediate point `q~ = beta(h)`.
pub fn beta_curve(bd: &BoundaryData) -> Result<(HorizontalCurve, FreeGroupPoint)> {
    let r = bd.rank();
    let h = bd.h;
    let coeffs = beta_coefficients(bd);
    let scale = 1.0 + bd.q.x.iter().chain(&bd.w.x).fold(0.0_f64, |m, v| m.max(v.abs()));
    let negligible = coeffs.iter().all(|c| c[2].abs() * h * h + c[3].abs() * h * h * h <= 16.0 * f64::EPSILON * scale);
    let (segment, area) = if negligible {
        // c~(s) = Q + W s, whose area is 1/2 s (Q_i W_j - Q_j W_i).
        let u: Vec<f64> = coeffs.iter().map(|c| c[1]).collect();
        let mut area = vec![0.0; pair_count(r)];
        for (i, j) in pairs(r) {
            area[pair_index(i, j)] = 0.5 * h * (coeffs[i][0] * u[j] - coeffs[j][0] * u[i]);
        }
        (Segment::LinearDrift { velocity: u, duration: h }, area)
    } else {
        let seg = Segment::CubicPoly { coeffs, duration: h };
        let area = seg.areas(h);
        (seg, area)
    };
    let mut x = vec![0.0; r];
    x[0] = bd.l * h;
    let y: Vec<f64> = bd.q.y.iter().zip(&area).map(|(a, b)| a + b).collect();
    let q_tilde = FreeGroupPoint { x, y };
    let start = Knot { t: h, point: q_tilde.clone(), velocity: TangentVector::horizontal_at(&q_tilde, bd.v.x.clone()) };
    let end = Knot { t: 2.0 * h, point: bd.q.clone(), velocity: bd.w.clone() };
    let piece = Piece { t0: h, t1: 2.0 * h, s_start: h, s_end: 0.0, segment, frame: None };
    Ok((HorizontalCurve::new(r, vec![piece], vec![start, end])?, q_tilde))
}

/// The kernel in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub psi: HorizontalCurve,
    pub q_tilde: FreeGroupPoint,
    pub cases: Vec<CaseRecord>,
    pub trace: Vec<Vec<f64>>,
    /// Largest change of a coordinate outside the one being fixed, over all
    /// subintervals.
    pub interference: f64,
}

/// Builds `psi` on `[0, 2h]` with the default fixing order.
pub fn kernel(bd: &BoundaryData) -> Result<Kernel> {
    let (beta, q_tilde) = beta_curve(bd)?;
    let plan = AlphaPlan::new(&q_tilde);
    kernel_with_plan(bd, beta, q_tilde, &plan)
}

fn kernel_with_plan(bd: &BoundaryData, beta: HorizontalCurve, q_tilde: FreeGroupPoint, plan: &AlphaPlan) -> Result<Kernel> {
    let alpha = alpha_curve(bd, &q_tilde, plan)?;
    let interference = interference(&alpha, plan);
    let psi = HorizontalCurve::concat(vec![alpha.curve, beta])?;
    Ok(Kernel { psi, q_tilde, cases: alpha.cases, trace: alpha.trace, interference })
}

fn interference(alpha: &AlphaCurve, plan: &AlphaPlan) -> f64 {
    let m = plan.targets.len();
    let mut expected = vec![0.0; m];
    let mut worst = 0.0_f64;
    for (k, &(i, j)) in plan.order.iter().enumerate() {
        let idx = pair_index(i, j);
        expected[idx] = plan.targets[idx];
        for (c, (got, want)) in alpha.trace[k].iter().zip(&expected).enumerate() {
            if c != idx {
                worst = worst.max((got - want).abs());
            }
        }
    }
    worst
}

/// `sup |psi' - v|` over `grid` samples per piece.
pub fn measured_deviation(psi: &HorizontalCurve, v: &TangentVector, grid: usize) -> f64 {
    psi.dense(grid).iter().map(|(_, _, dv)| dv.distance_inf(v)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct InterpolateConfig {
    /// Requested `eps`; raised to the data-derived minimum when smaller.
    pub eps: Option<f64>,
    /// Samples per piece for the deviation measurement.
    pub grid: usize,
    /// Whether to run the quadrature horizontality check.
    pub check: Option<CheckConfig>,
    /// Accepted horizontality residual of the boundary derivatives.
    pub horizontal_tol: f64,
}

impl Default for InterpolateConfig {
    fn default() -> Self {
        Self {
            eps: None,
            grid: 64,
            check: Some(CheckConfig { grid: 32, ..CheckConfig::default() }),
            horizontal_tol: BOUNDARY_HORIZONTAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationResult {
    /// The interpolant on `[a, b]`; its boundary knots are copies of the input.
    pub psi: HorizontalCurve,
    /// The interpolant in normalized coordinates on `[0, 2h]`.
    pub normalized: HorizontalCurve,
    pub gap: NormalizedGap,
    pub q_tilde: FreeGroupPoint,
    pub cases: Vec<CaseRecord>,
    pub trace: Vec<Vec<f64>>,
    pub interference: f64,
    /// `sup |psi' - v|` in normalized coordinates.
    pub measured_dev: f64,
    pub c_ratio: f64,
    /// Largest mismatch of value or derivative at `a` and `b` before the
    /// boundary knots are replaced by the input values.
    pub boundary_residual: f64,
    pub horizontality: Option<HorizontalityReport>,
}

impl InterpolationResult {
    pub fn eps(&self) -> f64 {
        self.gap.bd.eps
    }
}

pub fn c_ratio(dev: f64, eps: f64) -> f64 {
    if eps > 0.0 {
        dev / eps
    } else if dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Interpolates between `(ga, va)` at `a` and `(gb, vb)` at `b`.
pub fn interpolate_boundary(
    a: f64,
    b: f64,
    ga: &FreeGroupPoint,
    va: &TangentVector,
    gb: &FreeGroupPoint,
    vb: &TangentVector,
    cfg: &InterpolateConfig,
) -> Result<InterpolationResult> {
    let mut gap = normalize_gap_with_tol(a, b, ga, va, gb, vb, cfg.horizontal_tol)?;
    if let Some(eps) = cfg.eps {
        gap.bd = gap.bd.clone().with_eps(eps);
    }
    interpolate_normalized(gap, ga, va, gb, vb, cfg)
}

/// Runs the kernel on already normalized data and maps the result back.
pub fn interpolate_normalized(
    gap: NormalizedGap,
    ga: &FreeGroupPoint,
    va: &TangentVector,
    gb: &FreeGroupPoint,
    vb: &TangentVector,
    cfg: &InterpolateConfig,
) -> Result<InterpolationResult> {
    let k = kernel(&gap.bd)?;
    let measured_dev = measured_deviation(&k.psi, &gap.bd.v, cfg.grid);
    let mut psi = denormalize(&k.psi, &gap)?;
    let n = psi.pieces().len();
    let (a, b) = (gap.a, gap.b);
    let boundary_residual = [
        psi.eval_on_piece(0, a).distance_inf(ga),
        psi.eval_on_piece(n - 1, b).distance_inf(gb),
        psi.velocity_on_piece(0, a).distance_inf(va),
        psi.velocity_on_piece(n - 1, b).distance_inf(vb),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    {
        let knots = psi.knots_mut();
        knots[0].point = ga.clone();
        knots[0].velocity = va.clone();
        knots[n].point = gb.clone();
        knots[n].velocity = vb.clone();
    }
    let horizontality = cfg.check.map(|c| check_horizontal(&psi, c));
    let c = c_ratio(measured_dev, gap.bd.eps);
    Ok(InterpolationResult {
        psi,
        normalized: k.psi,
        gap,
        q_tilde: k.q_tilde,
        cases: k.cases,
        trace: k.trace,
        interference: k.interference,
        measured_dev,
        c_ratio: c,
        boundary_residual,
        horizontality,
    })
}

/// Interpolates the gap `[a, b]` of a curve.
pub fn interpolate_gap(gamma: &HorizontalCurve, a: f64, b: f64, cfg: &InterpolateConfig) -> Result<InterpolationResult> {
    interpolate_boundary(a, b, &gamma.eval(a), &gamma.velocity(a), &gamma.eval(b), &gamma.velocity(b), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::PlanarCurve;
    use crate::lift::{horizontal_lift, is_horizontal_curve};
    use crate::quadrature::{integrate, QuadConfig};

    fn bd(h: f64, q: FreeGroupPoint, w: Vec<f64>, l: f64, eps: Option<f64>) -> BoundaryData {
        let w = TangentVector::horizontal_at(&q, w);
        let bd = BoundaryData::new(h, q, w, l).unwrap();
        match eps {
            Some(e) => bd.with_eps(e),
            None => bd,
        }
    }

    #[test]
    fn straight_boundary_gives_straight_curve() {
        let data = bd(0.1, FreeGroupPoint::horizontal(vec![0.2, 0.0, 0.0]), vec![1.0, 0.0, 0.0], 1.0, None);
        assert_eq!(data.eps, 0.0);
        let (beta, qt) = beta_curve(&data).unwrap();
        assert!(matches!(beta.pieces()[0].segment, Segment::LinearDrift { .. }));
        assert_eq!(qt, FreeGroupPoint::horizontal(vec![0.1, 0.0, 0.0]));
        let k = kernel(&data).unwrap();
        assert!(k.psi.pieces().iter().all(|p| matches!(p.segment, Segment::LinearDrift { .. })));
        assert!(measured_deviation(&k.psi, &data.v, 32) <= 1e-15);
    }

    #[test]
    fn beta_boundary_values() {
        let q = FreeGroupPoint::new(vec![0.21, 0.013, -0.008], vec![1e-4, -2e-4, 5e-5]).unwrap();
        let data = bd(0.1, q.clone(), vec![0.97, 0.05, -0.02], 1.0, None);
        let coeffs = beta_coefficients(&data);
        let seg = Segment::CubicPoly { coeffs, duration: 0.1 };
        let p0 = seg.position(0.0);
        let ph = seg.position(0.1);
        let v0 = seg.velocity(0.0);
        let vh = seg.velocity(0.1);
        for k in 0..3 {
            assert!((p0[k] - q.x[k]).abs() < 1e-15);
            assert!((v0[k] + data.w.x[k]).abs() < 1e-13);
            assert!((vh[k] + data.v.x[k]).abs() < 1e-12);
        }
        assert!((ph[0] - 0.1).abs() < 1e-15 && ph[1].abs() < 1e-15 && ph[2].abs() < 1e-15);
        let (beta, qt) = beta_curve(&data).unwrap();
        assert_eq!(beta.eval(0.1), qt);
        assert!(beta.eval_on_piece(0, 0.2).distance_inf(&q) < 1e-15);
        assert!(beta.velocity_on_piece(0, 0.1).distance_inf(&data.v) < 1e-12);
        assert!(beta.velocity_on_piece(0, 0.2).distance_inf(&data.w) < 1e-12);
    }

    #[test]
    fn case1_increment_matches_spec_example() {
        let mut st = AlphaState::new(2);
        let segs = alpha_case1(&mut st, 1, 5e-4, 1.0, 0.1, 0.1, 1).unwrap();
        match &segs[0] {
            Segment::Case1Loop { lambda, .. } => assert!((lambda - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let d = segs[0].duration();
        assert!((segs[0].areas(d)[0] - 5e-4).abs() < 1e-12);
        let q = integrate(
            |s| {
                let p = segs[0].position(s);
                let v = segs[0].velocity(s);
                0.5 * (p[1] * v[0] - p[0] * v[1])
            },
            0.0,
            d,
            QuadConfig { tol: 1e-14, max_depth: 40 },
        )
        .unwrap();
        assert!((q - 5e-4).abs() < 1e-12);
        assert!(matches!(alpha_case1(&mut st, 1, 1e-4, 1.0, 0.1, 0.1, 1), Err(Error::AlreadyFixed(1, 0))));
        assert!(matches!(alpha_case1(&mut AlphaState::new(2), 1, 1e-4, 0.05, 0.1, 0.1, 1), Err(Error::WrongCase(_))));
    }

    #[test]
    fn case2_area_and_zero_target() {
        let mut st = AlphaState::new(2);
        let segs = alpha_case2(&mut st, 1, PI * 1e-4, 0.0, 0.1, 0.1, 1).unwrap();
        match &segs[0] {
            Segment::Case2Circle { lambda, .. } => assert!((lambda - 0.01).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!((segs[0].areas(segs[0].duration())[0] - PI * 1e-4).abs() < 1e-12);
        assert!(matches!(segs[1], Segment::Case2Line { l, .. } if l == 0.0));
        let mut st = AlphaState::new(2);
        let segs = alpha_case2(&mut st, 1, 0.0, 0.05, 0.1, 0.1, 1).unwrap();
        assert!(matches!(segs[..], [Segment::LinearDrift { .. }]));
    }

    #[test]
    fn case3_rejects_zero_eps() {
        let mut st = AlphaState::new(3);
        assert!(matches!(alpha_case3(&mut st, 2, 1, 1e-6, 1.0, 0.0, 0.1, 3), Err(Error::Infeasible(_))));
        let segs = alpha_case3(&mut st, 2, 1, -1e-4, 1.0, 0.1, 0.1, 3).unwrap();
        let d = segs[0].duration();
        let a = segs[0].areas(d);
        assert!((a[pair_index(2, 1)] + 1e-4).abs() < 1e-15);
        assert!(a[pair_index(2, 0)].abs() < 1e-15 && a[pair_index(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn alpha_hits_targets_without_interference() {
        for l in [1.0, 0.02, 0.0] {
            let q = FreeGroupPoint::new(vec![0.2 * l + 0.001, 0.004, -0.003], vec![4e-4, -3e-4, 2e-4]).unwrap();
            let data = bd(0.1, q, vec![l + 0.01, 0.02, -0.01], l, Some(0.05));
            let k = kernel(&data).unwrap();
            let end_alpha = k.psi.eval_on_piece(k.psi.pieces().len() - 2, 0.1);
            assert!(end_alpha.distance_inf(&k.q_tilde) < 1e-12, "L = {l}");
            assert!(k.interference <= 1e-12, "{}", k.interference);
            let (jump, _) = k.psi.max_knot_velocity_jump();
            assert!(jump <= 1e-12, "L = {l}: {jump}");
            let rep = is_horizontal_curve(&k.psi, 1e-10);
            assert!(rep.horizontal, "{rep:?}");
            let expected = if l >= 0.05 { CaseKind::Case1 } else { CaseKind::Case2 };
            assert_eq!(k.cases[0].case, expected);
            assert_eq!(k.cases[2].case, CaseKind::Case3);
        }
    }

    #[test]
    fn custom_order_is_validated() {
        let q = FreeGroupPoint::identity(3);
        assert!(AlphaPlan::with_order(&q, vec![(2, 1), (1, 0), (2, 0)]).is_ok());
        assert!(AlphaPlan::with_order(&q, vec![(2, 1), (2, 1), (2, 0)]).is_err());
        assert!(AlphaPlan::with_order(&q, vec![(2, 1), (1, 0)]).is_err());
    }

    #[test]
    fn heisenberg_corner_gap() {
        // Lift of a planar path with a corner at t = 0.5; interpolate [0.4, 0.6].
        let segs = vec![
            Segment::LinearDrift { velocity: vec![1.0, 0.5], duration: 0.5 },
            Segment::LinearDrift { velocity: vec![1.0, -0.5], duration: 0.5 },
        ];
        let c = PlanarCurve::new(vec![0.0, 0.0], segs).unwrap();
        let g = horizontal_lift(&c, &FreeGroupPoint::identity(2)).unwrap();
        let res = interpolate_gap(&g, 0.4, 0.6, &InterpolateConfig::default()).unwrap();
        assert!(res.boundary_residual <= 1e-9, "{}", res.boundary_residual);
        assert!(res.horizontality.as_ref().unwrap().max_vertical_residual <= 1e-8);
        assert!(res.psi.max_knot_velocity_jump().0 <= 1e-12);
        assert_eq!(res.psi.eval(0.6), g.eval(0.6));
        assert!(res.c_ratio.is_finite());
    }
}
