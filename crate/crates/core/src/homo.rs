//! Homomorphisms from free step-2 groups onto general step-2 Carnot groups,
//! and approximation of curves in the target through a free lift.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, Piece, SampledCurve};
use crate::error::{Error, Result};
use crate::frame::{identity_matrix, mat_mul, mat_vec, Matrix};
use crate::group::{pair_count, pair_index, pairs, FreeGroupPoint, GeneralGroupPoint, GeneralTangent, Step2Structure, TangentVector};
use crate::lift::{difference_derivatives, CheckConfig};
use crate::lusin::{approximate_with, select_good_set, ApproximationReport, GoodSetConfig, PipelineOptions, STITCH_TOL};
use crate::quadrature::{integrate_dyn, QuadConfig};
use crate::segment::Segment;

/// Tolerance for `H H^+ = I` and `T T^+ = I`.
pub const SURJECTIVITY_TOL: f64 = 1e-10;
/// Accepted horizontality residual of target sample derivatives.
pub const TARGET_HORIZONTAL_TOL: f64 = 1e-6;

/// The homomorphism `G_r -> G` determined by a linear map `H` on the first
/// layers. The second layer acts by `T[k][(i,j)] = sum_ab c[k][a][b] H_ai H_bj`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step2Homomorphism {
    pub source_r: usize,
    pub target: Step2Structure,
    /// `target.r() x source_r`, row-major.
    pub h: Matrix,
    /// `target.m() x pair_count(source_r)`, row-major.
    pub t: Matrix,
}

/// Builds the homomorphism induced by `h` (identity when `None`).
pub fn build_homomorphism(source_r: usize, target: &Step2Structure, h: Option<Matrix>) -> Result<Step2Homomorphism> {
    let rt = target.r();
    let h = match h {
        Some(h) => h,
        None if source_r == rt => identity_matrix(rt),
        None => {
            return Err(Error::Shape(format!("identity generator map needs equal ranks, got {source_r} and {rt}")));
        }
    };
    if h.len() != rt || h.iter().any(|row| row.len() != source_r) {
        return Err(Error::Shape(format!("generator map must be {rt} x {source_r}")));
    }
    if h.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("generator map"));
    }
    let ms = pair_count(source_r);
    let mut t = vec![vec![0.0; ms]; target.m()];
    for (k, row) in t.iter_mut().enumerate() {
        for (i, j) in pairs(source_r) {
            let mut s = 0.0;
            for a in 0..rt {
                for b in 0..rt {
                    let c = target.bracket(k, a, b);
                    if c != 0.0 {
                        s += c * h[a][i] * h[b][j];
                    }
                }
            }
            row[pair_index(i, j)] = s;
        }
    }
    Ok(Step2Homomorphism { source_r, target: target.clone(), h, t })
}

impl Step2Homomorphism {
    fn check_rank(&self, r: usize) -> Result<()> {
        if r != self.source_r {
            return Err(Error::RankMismatch { expected: self.source_r, found: r });
        }
        Ok(())
    }

    pub fn apply(&self, p: &FreeGroupPoint) -> Result<GeneralGroupPoint> {
        self.check_rank(p.rank())?;
        Ok(GeneralGroupPoint { a: mat_vec(&self.h, &p.x), b: mat_vec(&self.t, &p.y) })
    }

    pub fn push_tangent(&self, v: &TangentVector) -> Result<GeneralTangent> {
        self.check_rank(v.rank())?;
        Ok(GeneralTangent { a: mat_vec(&self.h, &v.x), b: mat_vec(&self.t, &v.y) })
    }

    /// Minimal-norm right inverses of `H` and `T`; fails unless both are onto.
    pub fn right_inverses(&self) -> Result<(Matrix, Matrix)> {
        Ok((right_inverse(&self.h)?, right_inverse(&self.t)?))
    }
}

fn right_inverse(m: &[Vec<f64>]) -> Result<Matrix> {
    let rows = m.len();
    if rows == 0 {
        return Ok(Vec::new());
    }
    let cols = m[0].len();
    let a = DMatrix::from_fn(rows, cols, |i, j| m[i][j]);
    let pinv = a.clone().pseudo_inverse(1e-12).map_err(|e| Error::Structure(e.to_string()))?;
    let defect = (&a * &pinv - DMatrix::<f64>::identity(rows, rows)).abs().max();
    if !(defect <= SURJECTIVITY_TOL) {
        return Err(Error::NotSurjective);
    }
    Ok((0..cols).map(|i| (0..rows).map(|j| pinv[(i, j)]).collect()).collect())
}

pub fn pushforward_point(f: &Step2Homomorphism, p: &FreeGroupPoint) -> Result<GeneralGroupPoint> {
    f.apply(p)
}

pub fn pushforward_tangent(f: &Step2Homomorphism, v: &TangentVector) -> Result<GeneralTangent> {
    f.push_tangent(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetKnot {
    pub t: f64,
    pub point: GeneralGroupPoint,
    pub velocity: GeneralTangent,
}

/// A piecewise horizontal curve in a general step-2 group. Pieces carry
/// frames into the target's first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCurve {
    pub structure: Step2Structure,
    pub pieces: Vec<Piece>,
    pub knots: Vec<TargetKnot>,
}

impl TargetCurve {
    pub fn validate(&self) -> Result<()> {
        if self.knots.len() != self.pieces.len() + 1 {
            return Err(Error::Shape("knot count must exceed piece count by one".into()));
        }
        for k in &self.knots {
            self.structure.check_point(&k.point)?;
            if k.velocity.a.len() != self.structure.r() || k.velocity.b.len() != self.structure.m() {
                return Err(Error::Shape("knot velocity has wrong shape".into()));
            }
        }
        for (k, p) in self.pieces.iter().enumerate() {
            p.validate()?;
            if p.ambient_rank() != self.structure.r() {
                return Err(Error::RankMismatch { expected: self.structure.r(), found: p.ambient_rank() });
            }
            if p.t0 != self.knots[k].t || p.t1 != self.knots[k + 1].t {
                return Err(Error::Schema(format!("piece {k} does not span its knots")));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].t, self.knots[self.knots.len() - 1].t)
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.pieces.len();
        if n == 0 {
            return 0;
        }
        self.knots.partition_point(|k| k.t <= t).saturating_sub(1).min(n - 1)
    }

    fn knot_at(&self, t: f64) -> Option<&TargetKnot> {
        self.knots.binary_search_by(|k| k.t.total_cmp(&t)).ok().map(|i| &self.knots[i])
    }

    pub fn eval_on_piece(&self, k: usize, t: f64) -> GeneralGroupPoint {
        let s = &self.structure;
        let piece = &self.pieces[k];
        let start = &self.knots[k].point;
        let d = piece.displacement(t);
        let areas = piece.displacement_areas(t);
        let a: Vec<f64> = start.a.iter().zip(&d).map(|(u, v)| u + v).collect();
        let mut b = start.b.clone();
        for (kk, bk) in b.iter_mut().enumerate() {
            for (i, j) in pairs(s.r()) {
                let c = s.bracket(kk, i, j);
                if c != 0.0 {
                    let idx = pair_index(i, j);
                    *bk += c * (areas[idx] + 0.5 * (start.a[i] * d[j] - start.a[j] * d[i]));
                }
            }
        }
        GeneralGroupPoint { a, b }
    }

    pub fn velocity_on_piece(&self, k: usize, t: f64) -> GeneralTangent {
        let p = self.eval_on_piece(k, t);
        self.structure.horizontal_at(&p, self.pieces[k].horizontal_velocity(t))
    }

    pub fn eval(&self, t: f64) -> GeneralGroupPoint {
        let (a, b) = self.domain();
        let t = t.clamp(a, b);
        match self.knot_at(t) {
            Some(k) => k.point.clone(),
            None => self.eval_on_piece(self.locate(t), t),
        }
    }

    pub fn velocity(&self, t: f64) -> GeneralTangent {
        let (a, b) = self.domain();
        let t = t.clamp(a, b);
        match self.knot_at(t) {
            Some(k) => k.velocity.clone(),
            None => self.velocity_on_piece(self.locate(t), t),
        }
    }

    pub fn max_knot_velocity_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.pieces.len() {
            let t = self.knots[k].t;
            let left = self.velocity_on_piece(k - 1, t);
            let right = self.velocity_on_piece(k, t);
            let stored = &self.knots[k].velocity;
            let j = left.distance_inf(&right).max(left.distance_inf(stored)).max(right.distance_inf(stored));
            worst = if j.is_nan() { f64::NAN } else { worst.max(j) };
        }
        worst
    }

    pub fn max_knot_value_jump(&self) -> f64 {
        (1..=self.pieces.len())
            .map(|k| self.eval_on_piece(k - 1, self.knots[k].t).distance_inf(&self.knots[k].point))
            .fold(0.0, f64::max)
    }

    /// Left translation by `g`.
    pub fn left_translate(&self, g: &GeneralGroupPoint) -> Result<TargetCurve> {
        self.structure.check_point(g)?;
        let knots = self
            .knots
            .iter()
            .map(|k| {
                let point = self.structure.product_unchecked(g, &k.point);
                let velocity = self.structure.dl(g, &k.velocity);
                TargetKnot { t: k.t, point, velocity }
            })
            .collect();
        Ok(TargetCurve { structure: self.structure.clone(), pieces: self.pieces.clone(), knots })
    }
}

/// Pushes a free horizontal curve through `f`.
pub fn pushforward_curve(f: &Step2Homomorphism, gamma: &HorizontalCurve) -> Result<TargetCurve> {
    f.check_rank(gamma.r())?;
    let pieces = gamma
        .pieces()
        .iter()
        .map(|p| {
            let m = match &p.frame {
                None => f.h.clone(),
                Some(m) => mat_mul(&f.h, m),
            };
            Piece { frame: Some(m), ..p.clone() }
        })
        .collect();
    let knots = gamma
        .knots()
        .iter()
        .map(|k| Ok(TargetKnot { t: k.t, point: f.apply(&k.point)?, velocity: f.push_tangent(&k.velocity)? }))
        .collect::<Result<_>>()?;
    Ok(TargetCurve { structure: f.target.clone(), pieces, knots })
}

/// Lifts a path of first-layer positions `path(t) = (a(t), a'(t))` into the
/// target group by quadrature, starting from `start` at `times[0]`.
pub fn lift_in_target<F>(
    structure: &Step2Structure,
    path: F,
    start: &GeneralGroupPoint,
    times: &[f64],
    tol: f64,
) -> Result<Vec<GeneralGroupPoint>>
where
    F: Fn(f64) -> (Vec<f64>, Vec<f64>),
{
    structure.check_point(start)?;
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(times.len());
    let mut b = start.b.clone();
    let (a0, _) = path(times[0]);
    if a0.iter().zip(&start.a).any(|(u, v)| (u - v).abs() > 1e-12) {
        return Err(Error::StartMismatch(a0.iter().zip(&start.a).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)));
    }
    out.push(start.clone());
    let cfg = QuadConfig { tol, ..QuadConfig::default() };
    for w in times.windows(2) {
        let inc = integrate_dyn(
            |s| {
                let (a, da) = path(s);
                structure.half_bracket(&a, &da)
            },
            w[0],
            w[1],
            cfg,
        )?;
        for (bk, d) in b.iter_mut().zip(inc) {
            *bk += d;
        }
        out.push(GeneralGroupPoint { a: path(w[1]).0, b: b.clone() });
    }
    Ok(out)
}

/// Quadrature horizontality check of a target curve, analogous to
/// [`crate::lift::check_horizontal`]. Returns the largest residual.
pub fn check_target_horizontal(curve: &TargetCurve, cfg: CheckConfig) -> f64 {
    let s = &curve.structure;
    let mut worst: f64 = 0.0;
    let mut acc = curve.knots[0].point.b.clone();
    let (t0, t1) = curve.domain();
    let total = (t1 - t0).max(f64::MIN_POSITIVE);
    let grid = cfg.grid.max(1);
    let mut bump = |d: f64| worst = if d.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(d) };
    for k in &curve.knots {
        bump(s.horizontal_residual(&k.velocity, &k.point));
    }
    for (k, piece) in curve.pieces.iter().enumerate() {
        let mut prev = piece.t0;
        for g in 1..=grid {
            let t = if g == grid { piece.t1 } else { piece.t0 + (piece.t1 - piece.t0) * g as f64 / grid as f64 };
            let qcfg = QuadConfig { tol: (cfg.quad_tol * (t - prev) / total).max(1e-16), ..QuadConfig::default() };
            let inc = integrate_dyn(
                |u| s.half_bracket(&curve.eval_on_piece(k, u).a, &piece.horizontal_velocity(u)),
                prev,
                t,
                qcfg,
            )
            .unwrap_or_else(|_| vec![f64::NAN; s.m()]);
            for (a, d) in acc.iter_mut().zip(inc) {
                *a += d;
            }
            let point = if g == grid { curve.knots[k + 1].point.clone() } else { curve.eval_on_piece(k, t) };
            for (a, b) in acc.iter().zip(&point.b) {
                bump((a - b).abs());
            }
            prev = t;
        }
    }
    worst
}

/// Samples of a curve in a general step-2 group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSamples {
    pub times: Vec<f64>,
    pub points: Vec<GeneralGroupPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivs: Option<Vec<GeneralTangent>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    /// Report of the approximation of the free lift.
    pub free: ApproximationReport,
    /// Largest distance between the pushed result and the good samples
    /// before the sample values are written into the knots.
    pub max_sample_error: f64,
    pub max_derivative_jump: f64,
    pub max_value_jump: f64,
    pub horizontality_residual: f64,
    pub success: bool,
}

fn cubic_hermite(x0: &[f64], x1: &[f64], v0: &[f64], v1: &[f64], h: f64) -> Segment {
    let coeffs = (0..x0.len())
        .map(|i| {
            let d = x1[i] - x0[i];
            let c2 = (3.0 * d - (2.0 * v0[i] + v1[i]) * h) / (h * h);
            let c3 = ((v0[i] + v1[i]) * h - 2.0 * d) / (h * h * h);
            [0.0, v0[i], c2, c3]
        })
        .collect();
    Segment::CubicPoly { coeffs, duration: h }
}

/// Approximates sampled target data by lifting it to the free group through
/// right inverses of `f`, running the free pipeline and pushing the result back.
pub fn approximate_in_target(
    samples: &TargetSamples,
    f: &Step2Homomorphism,
    cfg: &GoodSetConfig,
    opts: &PipelineOptions,
) -> Result<(TargetCurve, TargetReport)> {
    let s = &f.target;
    let n = samples.times.len();
    if samples.points.len() != n {
        return Err(Error::Shape(format!("{} times but {} points", n, samples.points.len())));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    for (k, w) in samples.times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneTimes(k + 1));
        }
    }
    for p in &samples.points {
        s.check_point(p)?;
    }
    let (hp, tp) = f.right_inverses()?;
    let g0 = samples.points[0].clone();
    let g0inv = g0.inverse();
    let rel: Vec<GeneralGroupPoint> = samples.points.iter().map(|p| s.product_unchecked(&g0inv, p)).collect();
    let controls: Vec<Vec<f64>> = match &samples.derivs {
        Some(d) => {
            if d.len() != n {
                return Err(Error::Shape("derivative count must match samples".into()));
            }
            for (k, (p, v)) in samples.points.iter().zip(d).enumerate() {
                let res = s.horizontal_residual(v, p);
                if !(res <= TARGET_HORIZONTAL_TOL) {
                    return Err(Error::Schema(format!("sample {k} derivative is not horizontal (residual {res:e})")));
                }
            }
            d.iter().map(|v| v.a.clone()).collect()
        }
        None => {
            let xs: Vec<&[f64]> = samples.points.iter().map(|p| p.a.as_slice()).collect();
            let ys: Vec<&[f64]> = samples.points.iter().map(|p| p.b.as_slice()).collect();
            let (va, vb) = (difference_derivatives(&samples.times, &xs)?, difference_derivatives(&samples.times, &ys)?);
            for (k, (a, b)) in va.iter().zip(vb).enumerate() {
                let res = s.horizontal_residual(&GeneralTangent { a: a.clone(), b }, &samples.points[k]);
                if !(res <= TARGET_HORIZONTAL_TOL) {
                    return Err(Error::Schema(format!("sample {k} is not horizontal (vertical rate residual {res:e})")));
                }
            }
            va
        }
    };
    let rs = f.source_r;
    let ms = pair_count(rs);
    let ax: Vec<Vec<f64>> = rel.iter().map(|p| mat_vec(&hp, &p.a)).collect();
    let au: Vec<Vec<f64>> = controls.iter().map(|u| mat_vec(&hp, u)).collect();
    // areas of the Hermite interpolant fill the directions T does not see
    let mut quad = vec![vec![0.0; ms]; n];
    for k in 1..n {
        let h = samples.times[k] - samples.times[k - 1];
        let piece = Piece::forward(cubic_hermite(&ax[k - 1], &ax[k], &au[k - 1], &au[k], h), 0.0, h);
        let d = piece.displacement(h);
        let areas = piece.displacement_areas(h);
        let x0 = &ax[k - 1];
        for (i, j) in pairs(rs) {
            let idx = pair_index(i, j);
            quad[k][idx] = quad[k - 1][idx] + areas[idx] + 0.5 * (x0[i] * d[j] - x0[j] * d[i]);
        }
    }
    let tpt = mat_mul(&tp, &f.t);
    let mut points = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for k in 0..n {
        let base = mat_vec(&tp, &rel[k].b);
        let proj = mat_vec(&tpt, &quad[k]);
        let y: Vec<f64> = (0..ms).map(|i| base[i] + quad[k][i] - proj[i]).collect();
        let p = FreeGroupPoint { x: ax[k].clone(), y };
        derivs.push(TangentVector::horizontal_at(&p, au[k].clone()));
        points.push(p);
    }
    let free_samples = SampledCurve::new(samples.times.clone(), points, Some(derivs))?;
    let (gamma, free_report) = approximate_with(&free_samples, cfg, opts)?;
    let pushed = pushforward_curve(f, &gamma)?.left_translate(&g0)?;
    let mut out = pushed;
    let good = select_good_set(&free_samples, cfg)?;
    let mut max_err: f64 = 0.0;
    for k in good.indices() {
        let t = samples.times[k];
        if let Ok(i) = out.knots.binary_search_by(|kn| kn.t.total_cmp(&t)) {
            max_err = max_err.max(out.knots[i].point.distance_inf(&samples.points[k]));
            out.knots[i].point = samples.points[k].clone();
            out.knots[i].velocity = match &samples.derivs {
                Some(d) => d[k].clone(),
                None => s.horizontal_at(&samples.points[k], controls[k].clone()),
            };
        }
    }
    let jump = out.max_knot_velocity_jump();
    let value_jump = out.max_knot_value_jump();
    let hres = check_target_horizontal(&out, CheckConfig { tol: opts.tol, grid: opts.check_grid, ..CheckConfig::default() });
    let success = free_report.success && jump <= STITCH_TOL && value_jump <= STITCH_TOL && hres <= opts.tol.max(1e-9);
    let report = TargetReport {
        free: free_report,
        max_sample_error: max_err,
        max_derivative_jump: jump,
        max_value_jump: value_jump,
        horizontality_residual: hres,
        success,
    };
    Ok((out, report))
}
