//! Good-set selection and the full approximation pipeline for sampled curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, Knot, Piece, SampledCurve};
use crate::error::{Error, Result};
use crate::frame::normalize_gap_with_tol;
use crate::group::{dl, horizontal_residual, FreeGroupPoint, TangentVector};
use crate::interpolate::{c_ratio, interpolate_normalized, CaseKind, InterpolateConfig};
use crate::lift::{check_horizontal, difference_derivatives, estimate_derivatives, CheckConfig};
use crate::segment::Segment;

/// Horizontality residual accepted for sample derivatives.
pub const SAMPLE_HORIZONTAL_TOL: f64 = 1e-6;
/// Knot value and velocity mismatch accepted when stitching.
pub const STITCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodSetConfig {
    /// Oscillation bound on the derivative.
    pub eta: f64,
    /// Half-width of the time window used for the oscillation.
    pub delta: f64,
    /// Budget for the measure of the excluded set.
    pub epsilon: f64,
}

impl Default for GoodSetConfig {
    fn default() -> Self {
        Self { eta: 0.1, delta: 0.01, epsilon: 0.1 }
    }
}

impl GoodSetConfig {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.eta, "eta"), (self.delta, "delta"), (self.epsilon, "epsilon")] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.eta <= 0.0 || self.delta <= 0.0 {
            return Err(Error::Schema(format!("eta and delta must be positive, got {} and {}", self.eta, self.delta)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Schema(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Result of the good-set selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSet {
    pub included: Vec<bool>,
    /// Maximal runs of included samples as inclusive index ranges.
    pub runs: Vec<(usize, usize)>,
    /// Per-sample oscillation of the derivative within the window.
    pub oscillation: Vec<f64>,
    /// Per-sample windowed mean deviation of the derivative.
    pub mean_deviation: Vec<f64>,
    /// Time measure not covered by the good runs (gaps plus both ends).
    pub excluded_measure: f64,
    pub feasible: bool,
}

impl GoodSet {
    pub fn indices(&self) -> Vec<usize> {
        self.included.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    /// Pairs of consecutive good samples separated by excluded ones.
    pub fn gaps(&self) -> Vec<(usize, usize)> {
        self.runs.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }
}

fn sample_derivs(s: &SampledCurve) -> Result<Vec<TangentVector>> {
    match &s.derivs {
        Some(d) => Ok(d.clone()),
        None => Ok(estimate_derivatives(s)?.derivs.expect("estimated derivatives")),
    }
}

/// Selects the samples whose derivative oscillates by at most `eta` within
/// a window of half-width `delta`. Isolated excluded samples are kept.
pub fn select_good_set(s: &SampledCurve, cfg: &GoodSetConfig) -> Result<GoodSet> {
    cfg.validate()?;
    s.validate()?;
    let derivs = sample_derivs(s)?;
    Ok(select_with_derivs(&s.times, &derivs, cfg))
}

fn select_with_derivs(times: &[f64], derivs: &[TangentVector], cfg: &GoodSetConfig) -> GoodSet {
    let n = times.len();
    let mut oscillation = vec![0.0; n];
    let mut mean_deviation = vec![0.0; n];
    let mut lo = 0;
    for k in 0..n {
        while times[k] - times[lo] >= cfg.delta {
            lo += 1;
        }
        let mut osc: f64 = 0.0;
        let mut integral = 0.0;
        let mut j = lo;
        while j < n && times[j] - times[k] < cfg.delta {
            let d = derivs[j].distance_inf(&derivs[k]);
            osc = if d.is_nan() { f64::NAN } else { osc.max(d) };
            if j + 1 < n && times[j + 1] - times[k] < cfg.delta {
                integral += 0.5 * (d + derivs[j + 1].distance_inf(&derivs[k])) * (times[j + 1] - times[j]);
            }
            j += 1;
        }
        oscillation[k] = osc;
        mean_deviation[k] = integral / (2.0 * cfg.delta);
    }
    let mut included: Vec<bool> =
        (0..n).map(|k| oscillation[k] <= cfg.eta && mean_deviation[k] <= cfg.eta).collect();
    // isolated exclusions cannot form a gap with distinct ends
    let snapshot = included.clone();
    for k in 0..n {
        let left = k == 0 || snapshot[k - 1];
        let right = k + 1 == n || snapshot[k + 1];
        if !snapshot[k] && left && right && n > 1 {
            included[k] = true;
        }
    }
    if !included.iter().any(|&b| b) {
        included[0] = true;
    }
    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        if included[k] {
            let start = k;
            while k + 1 < n && included[k + 1] {
                k += 1;
            }
            runs.push((start, k));
        }
        k += 1;
    }
    let mut excluded = times[runs[0].0] - times[0] + times[n - 1] - times[runs[runs.len() - 1].1];
    for w in runs.windows(2) {
        excluded += times[w[1].0] - times[w[0].1];
    }
    GoodSet { included, runs, oscillation, mean_deviation, excluded_measure: excluded, feasible: excluded <= cfg.epsilon }
}

/// Options of the approximation pipeline beyond the good-set thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Tolerance of the final horizontality check.
    pub tol: f64,
    /// Grid points per piece for the horizontality check.
    pub check_grid: usize,
    /// Grid points per piece for the measured deviation.
    pub dev_grid: usize,
    /// Extend the result with constant velocity over the whole sampled range.
    pub extend: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { tol: 1e-10, check_grid: 16, dev_grid: 16, extend: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub index_a: usize,
    pub index_b: usize,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub measured_dev: f64,
    pub c_ratio: f64,
    pub boundary_residual: f64,
    pub cases: Vec<CaseKind>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub config: GoodSetConfig,
    pub samples: usize,
    pub good_samples: usize,
    /// Good runs as inclusive time intervals.
    pub k_intervals: Vec<(f64, f64)>,
    pub gaps: Vec<GapReport>,
    /// Largest deviation ratio over the intervals between consecutive good samples.
    pub k_max_c_ratio: f64,
    /// Time measure where the result is not pinned to the samples.
    pub disagreement_measure: f64,
    pub extension_measure: f64,
    /// Good samples whose value or derivative differs from the result.
    pub sample_mismatches: usize,
    pub max_derivative_jump: f64,
    pub max_value_jump: f64,
    pub horizontality_residual: f64,
    pub feasible: bool,
    pub success: bool,
    pub warnings: Vec<String>,
}

struct Filled {
    curve: HorizontalCurve,
    report: GapReport,
}

fn fill_interval(
    s: &SampledCurve,
    derivs: &[TangentVector],
    ia: usize,
    ib: usize,
    opts: &PipelineOptions,
) -> Filled {
    let (a, b) = (s.times[ia], s.times[ib]);
    let (ga, gb) = (&s.points[ia], &s.points[ib]);
    let (va, vb) = (&derivs[ia], &derivs[ib]);
    let run = || -> Result<(HorizontalCurve, GapReport)> {
        let gap = normalize_gap_with_tol(a, b, ga, va, gb, vb, SAMPLE_HORIZONTAL_TOL)?;
        let cfg = InterpolateConfig { eps: None, grid: opts.dev_grid, check: None, horizontal_tol: SAMPLE_HORIZONTAL_TOL };
        let warnings = gap.bd.warnings.clone();
        let res = interpolate_normalized(gap, ga, va, gb, vb, &cfg)?;
        let report = GapReport {
            index_a: ia,
            index_b: ib,
            a,
            b,
            eps: res.eps(),
            measured_dev: res.measured_dev,
            c_ratio: res.c_ratio,
            boundary_residual: res.boundary_residual,
            cases: res.cases.iter().map(|c| c.case).collect(),
            warnings,
            error: None,
        };
        Ok((res.psi, report))
    };
    match run() {
        Ok((curve, report)) => Filled { curve, report },
        Err(e) => {
            // Fallback bridge: constant horizontal velocity from `ga`. The
            // mismatch at `b` shows up in the knot jumps of the report.
            let r = s.r;
            let vel: Vec<f64> = (0..r).map(|i| (gb.x[i] - ga.x[i]) / (b - a)).collect();
            let seg = Segment::LinearDrift { velocity: vel.clone(), duration: b - a };
            let start = Knot { t: a, point: ga.clone(), velocity: va.clone() };
            let end = Knot { t: b, point: gb.clone(), velocity: vb.clone() };
            let curve = HorizontalCurve::from_parts_unchecked(r, vec![Piece::forward(seg, a, b)], vec![start, end]);
            let report = GapReport {
                index_a: ia,
                index_b: ib,
                a,
                b,
                eps: f64::NAN,
                measured_dev: f64::NAN,
                c_ratio: f64::NAN,
                boundary_residual: f64::NAN,
                cases: Vec::new(),
                warnings: Vec::new(),
                error: Some(e.to_string()),
            };
            Filled { curve, report }
        }
    }
}

/// Extends `curve` with constant horizontal velocity so that it covers `[lo, hi]`.
pub fn extend_constant_velocity(curve: HorizontalCurve, lo: f64, hi: f64) -> Result<HorizontalCurve> {
    let (a, b) = curve.domain();
    if lo > a || hi < b {
        return Err(Error::InvalidInterval { a: lo, b: hi });
    }
    let r = curve.r();
    let mut parts = Vec::new();
    if lo < a {
        let first = curve.knots()[0].clone();
        let u = first.velocity.x.clone();
        let d = a - lo;
        let back = FreeGroupPoint::horizontal(u.iter().map(|v| -v * d).collect());
        let point = first.point.product_unchecked(&back);
        let velocity = TangentVector::horizontal_at(&point, u.clone());
        let seg = Segment::LinearDrift { velocity: u, duration: d };
        parts.push(HorizontalCurve::from_parts_unchecked(
            r,
            vec![Piece::forward(seg, lo, a)],
            vec![Knot { t: lo, point, velocity }, first],
        ));
    }
    let last = curve.knots()[curve.knots().len() - 1].clone();
    parts.push(curve);
    if hi > b {
        let u = last.velocity.x.clone();
        let d = hi - b;
        let fwd = FreeGroupPoint::horizontal(u.iter().map(|v| v * d).collect());
        let point = last.point.product_unchecked(&fwd);
        let velocity = TangentVector::horizontal_at(&point, u.clone());
        let seg = Segment::LinearDrift { velocity: u, duration: d };
        parts.push(HorizontalCurve::from_parts_unchecked(
            r,
            vec![Piece::forward(seg, b, hi)],
            vec![last, Knot { t: hi, point, velocity }],
        ));
    }
    HorizontalCurve::concat(parts)
}

fn check_samples(s: &SampledCurve, derivs: &[TangentVector]) -> Result<()> {
    for (k, (p, v)) in s.points.iter().zip(derivs).enumerate() {
        let res = horizontal_residual(v, p);
        if res > SAMPLE_HORIZONTAL_TOL || res.is_nan() {
            return Err(Error::Schema(format!("sample {k} derivative is not horizontal (residual {res:e})")));
        }
    }
    Ok(())
}

/// Estimated derivatives are horizontal by construction, so the vertical
/// coordinates are differenced as well and checked against them.
fn check_vertical_rates(s: &SampledCurve) -> Result<()> {
    let xs: Vec<&[f64]> = s.points.iter().map(|p| p.x.as_slice()).collect();
    let ys: Vec<&[f64]> = s.points.iter().map(|p| p.y.as_slice()).collect();
    let (vx, vy) = (difference_derivatives(&s.times, &xs)?, difference_derivatives(&s.times, &ys)?);
    for (k, (x, y)) in vx.into_iter().zip(vy).enumerate() {
        let res = horizontal_residual(&TangentVector { x, y }, &s.points[k]);
        if res > SAMPLE_HORIZONTAL_TOL || res.is_nan() {
            return Err(Error::Schema(format!("sample {k} is not horizontal (vertical rate residual {res:e})")));
        }
    }
    Ok(())
}

/// Approximates a sampled horizontal curve by a C^1 horizontal curve which
/// agrees with it on the good set.
pub fn approximate(s: &SampledCurve, cfg: &GoodSetConfig) -> Result<(HorizontalCurve, ApproximationReport)> {
    approximate_with(s, cfg, &PipelineOptions::default())
}

pub fn approximate_with(
    s: &SampledCurve,
    cfg: &GoodSetConfig,
    opts: &PipelineOptions,
) -> Result<(HorizontalCurve, ApproximationReport)> {
    cfg.validate()?;
    s.validate()?;
    if s.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: s.len() });
    }
    let derivs = sample_derivs(s)?;
    check_samples(s, &derivs)?;
    if s.derivs.is_none() {
        check_vertical_rates(s)?;
    }
    let good = select_with_derivs(&s.times, &derivs, cfg);
    let mut warnings = Vec::new();
    if !good.feasible {
        warnings.push(format!(
            "excluded measure {:e} exceeds epsilon {:e}; returning best-effort good set",
            good.excluded_measure, cfg.epsilon
        ));
    }
    let idx = good.indices();
    let gap_pairs = good.gaps();
    let filled: Vec<Filled> =
        idx.par_windows(2).map(|w| fill_interval(s, &derivs, w[0], w[1], opts)).collect();

    let mut gaps = Vec::new();
    let mut k_max: f64 = 0.0;
    let mut parts = Vec::with_capacity(filled.len());
    for f in filled {
        let is_gap = f.report.index_b > f.report.index_a + 1 && gap_pairs.contains(&(f.report.index_a, f.report.index_b));
        if let Some(e) = &f.report.error {
            warnings.push(format!("interval [{}, {}] failed: {e}", f.report.a, f.report.b));
        }
        if is_gap {
            gaps.push(f.report);
        } else if !f.report.c_ratio.is_nan() {
            k_max = k_max.max(f.report.c_ratio);
        }
        parts.push(f.curve);
    }
    let core = if parts.is_empty() {
        let k = idx[0];
        HorizontalCurve::new(
            s.r,
            Vec::new(),
            vec![Knot { t: s.times[k], point: s.points[k].clone(), velocity: derivs[k].clone() }],
        )?
    } else {
        HorizontalCurve::concat(parts)?
    };
    // Knots at good samples carry the sample data itself.
    let (lo, hi) = (s.times[0], s.times[s.len() - 1]);
    let (ka, kb) = core.domain();
    let gamma = if opts.extend { extend_constant_velocity(core, lo, hi)? } else { core };
    let mut report = summarize(&gamma, s, &derivs, &good, cfg, opts);
    report.gaps = gaps;
    report.k_max_c_ratio = k_max;
    report.extension_measure = if opts.extend { (ka - lo) + (hi - kb) } else { 0.0 };
    report.warnings.extend(warnings);
    report.success = report.success && report.gaps.iter().all(|g| g.error.is_none());
    Ok((gamma, report))
}

fn summarize(
    gamma: &HorizontalCurve,
    s: &SampledCurve,
    derivs: &[TangentVector],
    good: &GoodSet,
    cfg: &GoodSetConfig,
    opts: &PipelineOptions,
) -> ApproximationReport {
    let (dlo, dhi) = gamma.domain();
    let (lo, hi) = (s.times[0], s.times[s.len() - 1]);
    let mut mismatches = 0;
    let mut agree = vec![false; s.len()];
    for k in 0..s.len() {
        if !good.included[k] {
            continue;
        }
        let p = gamma.eval(s.times[k]);
        let v = gamma.velocity(s.times[k]);
        if p.bit_eq(&s.points[k]) && v.bit_eq(&derivs[k]) {
            agree[k] = true;
        } else {
            mismatches += 1;
        }
    }
    // Between consecutive samples the result is pinned only when both ends agree.
    let mut disagreement = (lo - dlo).max(0.0) + (dhi - hi).max(0.0);
    for k in 0..s.len().saturating_sub(1) {
        if !(agree[k] && agree[k + 1]) {
            disagreement += s.times[k + 1] - s.times[k];
        }
    }
    let (jump, _) = gamma.max_knot_velocity_jump();
    let value_jump = gamma.max_knot_value_jump();
    let hcheck = check_horizontal(gamma, CheckConfig { tol: opts.tol, grid: opts.check_grid, ..CheckConfig::default() });
    let horizontality_residual = hcheck.max_vertical_residual.max(hcheck.max_tangent_residual);
    let k_intervals = good.runs.iter().map(|&(a, b)| (s.times[a], s.times[b])).collect();
    let success = good.feasible
        && mismatches == 0
        && jump <= STITCH_TOL
        && value_jump <= STITCH_TOL
        && hcheck.horizontal;
    ApproximationReport {
        config: *cfg,
        samples: s.len(),
        good_samples: good.included.iter().filter(|&&b| b).count(),
        k_intervals,
        gaps: Vec::new(),
        k_max_c_ratio: 0.0,
        disagreement_measure: disagreement,
        extension_measure: 0.0,
        sample_mismatches: mismatches,
        max_derivative_jump: jump,
        max_value_jump: value_jump,
        horizontality_residual,
        feasible: good.feasible,
        success,
        warnings: Vec::new(),
    }
}

/// Recomputes the report of a claimed approximation `gamma` of `s` from
/// scratch, without trusting any previously produced report.
pub fn verify(gamma: &HorizontalCurve, s: &SampledCurve, cfg: &GoodSetConfig) -> Result<ApproximationReport> {
    verify_with(gamma, s, cfg, &PipelineOptions::default())
}

pub fn verify_with(
    gamma: &HorizontalCurve,
    s: &SampledCurve,
    cfg: &GoodSetConfig,
    opts: &PipelineOptions,
) -> Result<ApproximationReport> {
    cfg.validate()?;
    s.validate()?;
    if gamma.r() != s.r {
        return Err(Error::RankMismatch { expected: s.r, found: gamma.r() });
    }
    let derivs = sample_derivs(s)?;
    let good = select_with_derivs(&s.times, &derivs, cfg);
    let mut report = summarize(gamma, s, &derivs, &good, cfg, opts);
    let idx = good.indices();
    report.gaps = good
        .gaps()
        .into_iter()
        .map(|(ia, ib)| gap_from_curve(gamma, s, &derivs, ia, ib, opts.dev_grid))
        .collect();
    report.k_max_c_ratio = idx
        .windows(2)
        .filter(|w| w[1] == w[0] + 1)
        .map(|w| gap_from_curve(gamma, s, &derivs, w[0], w[1], opts.dev_grid).c_ratio)
        .filter(|c| !c.is_nan())
        .fold(0.0, f64::max);
    let (dlo, dhi) = gamma.domain();
    let (klo, khi) = (s.times[idx[0]], s.times[idx[idx.len() - 1]]);
    report.extension_measure = (klo - dlo).max(0.0) + (dhi - khi).max(0.0);
    if !good.feasible {
        report.warnings.push(format!("excluded measure {:e} exceeds epsilon {:e}", good.excluded_measure, cfg.epsilon));
    }
    Ok(report)
}

/// Deviation of `gamma` on a gap measured in the frame of the sample data.
fn gap_from_curve(
    gamma: &HorizontalCurve,
    s: &SampledCurve,
    derivs: &[TangentVector],
    ia: usize,
    ib: usize,
    grid: usize,
) -> GapReport {
    let (a, b) = (s.times[ia], s.times[ib]);
    let mut report = GapReport {
        index_a: ia,
        index_b: ib,
        a,
        b,
        eps: f64::NAN,
        measured_dev: f64::NAN,
        c_ratio: f64::NAN,
        boundary_residual: f64::NAN,
        cases: Vec::new(),
        warnings: Vec::new(),
        error: None,
    };
    let gap = match normalize_gap_with_tol(a, b, &s.points[ia], &derivs[ia], &s.points[ib], &derivs[ib], SAMPLE_HORIZONTAL_TOL) {
        Ok(g) => g,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let inv = gap.anchor.inverse();
    let n = grid.max(1) * 8;
    let mut dev: f64 = 0.0;
    for g in 0..=n {
        let t = a + (b - a) * g as f64 / n as f64;
        let p = gamma.eval(t);
        let v = gamma.velocity(t);
        let w = dl(&inv, &p, &v).and_then(|rel| gap.frame.push_tangent(&rel));
        match w {
            Ok(w) => {
                let d = w.distance_inf(&gap.bd.v);
                dev = if d.is_nan() { f64::NAN } else { dev.max(d) };
            }
            Err(e) => {
                report.error = Some(e.to_string());
                return report;
            }
        }
    }
    report.boundary_residual = gamma
        .eval(a)
        .distance_inf(&s.points[ia])
        .max(gamma.eval(b).distance_inf(&s.points[ib]))
        .max(gamma.velocity(a).distance_inf(&derivs[ia]))
        .max(gamma.velocity(b).distance_inf(&derivs[ib]));
    report.eps = gap.bd.eps;
    report.warnings = gap.bd.warnings.clone();
    report.measured_dev = dev;
    report.c_ratio = c_ratio(dev, gap.bd.eps);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::PlanarCurve;
    use crate::lift::horizontal_lift;

    fn v_path(n: usize) -> SampledCurve {
        let times: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let phi = PlanarCurve::new(
            vec![0.0, 0.25],
            vec![
                Segment::LinearDrift { velocity: vec![1.0, -0.5], duration: 0.5 },
                Segment::LinearDrift { velocity: vec![1.0, 0.5], duration: 0.5 },
            ],
        )
        .unwrap();
        let gamma = horizontal_lift(&phi, &FreeGroupPoint::horizontal(vec![0.0, 0.25])).unwrap();
        SampledCurve::from_curve(&gamma, times).unwrap()
    }

    fn smooth(n: usize) -> SampledCurve {
        let phi = PlanarCurve::new(
            vec![0.0, 0.0, 0.0],
            vec![Segment::CubicPoly {
                coeffs: vec![[0.0, 1.0, 0.3, -0.1], [0.0, 0.2, -0.5, 0.4], [0.0, 0.0, 0.7, -0.2]],
                duration: 1.0,
            }],
        )
        .unwrap();
        let gamma = horizontal_lift(&phi, &FreeGroupPoint::identity(3)).unwrap();
        let times = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        SampledCurve::from_curve(&gamma, times).unwrap()
    }

    #[test]
    fn v_path_excludes_corner() {
        let s = v_path(2001);
        let good = select_good_set(&s, &GoodSetConfig::default()).unwrap();
        assert_eq!(good.runs.len(), 2);
        let (_, ia) = good.runs[0];
        let (ib, _) = good.runs[1];
        assert!(s.times[ia] < 0.5 && s.times[ib] > 0.5);
        assert!(s.times[ib] - s.times[ia] >= 0.01);
        assert!(good.feasible);
    }

    #[test]
    fn smooth_curve_keeps_everything() {
        let s = smooth(201);
        let good = select_good_set(&s, &GoodSetConfig::default()).unwrap();
        assert_eq!(good.runs, vec![(0, 200)]);
        assert_eq!(good.excluded_measure, 0.0);
    }

    #[test]
    fn good_set_shrinks_with_eta() {
        let s = v_path(401);
        let mut prev: Option<Vec<bool>> = None;
        for eta in [2.0, 1.0, 0.5, 0.1, 0.01] {
            let g = select_good_set(&s, &GoodSetConfig { eta, ..Default::default() }).unwrap();
            if let Some(p) = &prev {
                assert!(g.included.iter().zip(p).all(|(now, before)| !now || *before));
            }
            prev = Some(g.included);
        }
    }

    #[test]
    fn approximate_v_path() {
        let s = v_path(2001);
        let (gamma, report) = approximate(&s, &GoodSetConfig::default()).unwrap();
        assert!(report.success, "{report:?}");
        assert_eq!(report.sample_mismatches, 0);
        assert_eq!(report.gaps.len(), 1);
        assert!(report.disagreement_measure <= 0.1);
        assert!(report.max_derivative_jump <= STITCH_TOL);
        assert_eq!(gamma.domain(), (0.0, 1.0));
        let again = verify(&gamma, &s, &GoodSetConfig::default()).unwrap();
        assert!(again.success);
        assert_eq!(again.sample_mismatches, 0);
        assert_eq!(again.disagreement_measure, report.disagreement_measure);
    }

    #[test]
    fn approximate_smooth_is_exact_on_samples() {
        let s = smooth(101);
        let (gamma, report) = approximate(&s, &GoodSetConfig::default()).unwrap();
        assert!(report.success, "{report:?}");
        assert!(report.gaps.is_empty());
        assert_eq!(report.disagreement_measure, 0.0);
        for k in 0..s.len() {
            assert!(gamma.eval(s.times[k]).bit_eq(&s.points[k]));
        }
    }

    #[test]
    fn verify_flags_tampering() {
        let s = smooth(51);
        let (mut gamma, _) = approximate(&s, &GoodSetConfig::default()).unwrap();
        let k = gamma.knots().len() / 2;
        gamma.knots_mut()[k].velocity.x[0] += 1e-6;
        let rep = verify(&gamma, &s, &GoodSetConfig::default()).unwrap();
        assert!(!rep.success);
        assert!(rep.max_derivative_jump >= 1e-6 - 1e-10);
    }

    #[test]
    fn extension_covers_range() {
        let curve = HorizontalCurve::stationary(FreeGroupPoint::identity(2), 0.3);
        let mut knots = curve.knots().to_vec();
        knots[0].velocity = TangentVector::horizontal_at(&knots[0].point, vec![1.0, 2.0]);
        let curve = HorizontalCurve::new(2, Vec::new(), knots).unwrap();
        let ext = extend_constant_velocity(curve, 0.0, 1.0).unwrap();
        assert_eq!(ext.domain(), (0.0, 1.0));
        let p = ext.eval(1.0);
        assert!((p.x[0] - 0.7).abs() < 1e-15 && (p.x[1] - 1.4).abs() < 1e-15);
        assert!(ext.eval(0.3).bit_eq(&FreeGroupPoint::identity(2)));
        assert!(ext.max_knot_velocity_jump().0 < 1e-15);
    }

    #[test]
    fn rejects_non_horizontal_samples() {
        let mut s = smooth(11);
        let d = s.derivs.as_mut().unwrap();
        d[3].y[0] += 1e-3;
        assert!(approximate(&s, &GoodSetConfig::default()).is_err());
    }

    #[test]
    fn rejects_vertical_drift_without_derivatives() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 / 49.0).collect();
        let points = times.iter().map(|&t| FreeGroupPoint { x: vec![t, 0.0], y: vec![t] }).collect();
        let s = SampledCurve::new(times, points, None).unwrap();
        assert!(approximate(&s, &GoodSetConfig::default()).is_err());
        let mut ok = s.clone();
        ok.points.iter_mut().for_each(|p| p.y[0] = 0.0);
        assert!(approximate(&ok, &GoodSetConfig::default()).is_ok());
    }
}
