//! Piecewise curves built from closed-form [`Segment`]s.
//!
//! A [`HorizontalCurve`] is a list of pieces glued at knots. Each knot stores
//! the exact group point and tangent at its time; between knots a piece maps
//! its time interval affinely onto a segment's local parameter (possibly
//! reversed) and pushes the segment through an optional linear frame. The
//! vertical coordinates inside a piece follow from the knot value and the
//! segment's closed-form areas, so no quadrature is needed for evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{pair_count, pair_index, FreeGroupPoint, TangentVector};
use crate::segment::Segment;

/// A segment placed on `[t0, t1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    /// Local parameter at `t0`.
    pub s_start: f64,
    /// Local parameter at `t1`; smaller than `s_start` for reversed pieces.
    pub s_end: f64,
    pub segment: Segment,
    /// Row-major linear map from segment coordinates to ambient horizontal
    /// coordinates. `None` is the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Vec<f64>>>,
}

impl Piece {
    /// Forward placement of a whole segment starting at `t0`.
    pub fn forward(segment: Segment, t0: f64, t1: f64) -> Self {
        let d = segment.duration();
        Self { t0, t1, s_start: 0.0, s_end: d, segment, frame: None }
    }

    pub fn ambient_rank(&self) -> usize {
        self.frame.as_ref().map_or_else(|| self.segment.rank(), |m| m.len())
    }

    /// `ds/dt`.
    pub fn rate(&self) -> f64 {
        (self.s_end - self.s_start) / (self.t1 - self.t0)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        if t == self.t1 {
            return self.s_end;
        }
        self.s_start + (t - self.t0) * self.rate()
    }

    fn apply_frame(&self, v: Vec<f64>) -> Vec<f64> {
        match &self.frame {
            None => v,
            Some(m) => m.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect(),
        }
    }

    /// Ambient horizontal displacement since `t0`.
    pub fn displacement(&self, t: f64) -> Vec<f64> {
        let p0 = self.segment.position(self.s_start);
        let p = self.segment.position(self.sigma(t));
        self.apply_frame(p.iter().zip(&p0).map(|(a, b)| a - b).collect())
    }

    pub fn horizontal_velocity(&self, t: f64) -> Vec<f64> {
        let rate = self.rate();
        let v = self.segment.velocity(self.sigma(t));
        self.apply_frame(v.into_iter().map(|x| x * rate).collect())
    }

    /// Ambient pairwise areas `1/2 int (D_a dD_b - D_b dD_a)` of the
    /// displacement `D` since `t0`, in storage order.
    pub fn displacement_areas(&self, t: f64) -> Vec<f64> {
        let sigma = self.sigma(t);
        let seg = &self.segment;
        let rs = seg.rank();
        let p0 = seg.position(self.s_start);
        let p = seg.position(sigma);
        let a0 = seg.areas(self.s_start);
        let a1 = seg.areas(sigma);
        let mut rel = vec![0.0; pair_count(rs)];
        for k in 1..rs {
            for l in 0..k {
                let idx = pair_index(k, l);
                rel[idx] = a1[idx] - a0[idx] - 0.5 * (p0[k] * (p[l] - p0[l]) - p0[l] * (p[k] - p0[k]));
            }
        }
        match &self.frame {
            None => rel,
            Some(m) => exterior_apply(m, rs, &rel),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.segment.validate()?;
        let vals = [self.t0, self.t1, self.s_start, self.s_end];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piece placement"));
        }
        if !(self.t1 > self.t0) {
            return Err(Error::InvalidInterval { a: self.t0, b: self.t1 });
        }
        if let Some(m) = &self.frame {
            if m.iter().any(|row| row.len() != self.segment.rank()) {
                return Err(Error::Shape("piece frame columns must match segment rank".into()));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("piece frame"));
            }
        }
        Ok(())
    }
}

/// Applies the second exterior power of the `n x rs` matrix `m` to pair
/// coordinates `a` of `R^rs`.
pub(crate) fn exterior_apply(m: &[Vec<f64>], rs: usize, a: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut out = vec![0.0; pair_count(n)];
    for i in 1..n {
        for j in 0..i {
            let mut acc = 0.0;
            for k in 1..rs {
                for l in 0..k {
                    let minor = m[i][k] * m[j][l] - m[i][l] * m[j][k];
                    if minor != 0.0 {
                        acc += minor * a[pair_index(k, l)];
                    }
                }
            }
            out[pair_index(i, j)] = acc;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub point: FreeGroupPoint,
    pub velocity: TangentVector,
}

/// A horizontal curve in the free group `G_r` given by closed-form pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct HorizontalCurve {
    r: usize,
    pieces: Vec<Piece>,
    knots: Vec<Knot>,
}

#[derive(Deserialize)]
struct RawCurve {
    r: usize,
    pieces: Vec<Piece>,
    knots: Vec<Knot>,
}

impl TryFrom<RawCurve> for HorizontalCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        HorizontalCurve::new(raw.r, raw.pieces, raw.knots)
    }
}

impl HorizontalCurve {
    pub fn new(r: usize, pieces: Vec<Piece>, knots: Vec<Knot>) -> Result<Self> {
        if knots.len() != pieces.len() + 1 {
            return Err(Error::Shape(format!("{} pieces need {} knots, got {}", pieces.len(), pieces.len() + 1, knots.len())));
        }
        for knot in &knots {
            if knot.point.rank() != r || knot.velocity.rank() != r {
                return Err(Error::RankMismatch { expected: r, found: knot.point.rank().max(knot.velocity.rank()) });
            }
            if !knot.t.is_finite() {
                return Err(Error::NonFinite("knot time"));
            }
        }
        for (k, piece) in pieces.iter().enumerate() {
            piece.validate()?;
            if piece.ambient_rank() != r {
                return Err(Error::RankMismatch { expected: r, found: piece.ambient_rank() });
            }
            if piece.t0 != knots[k].t || piece.t1 != knots[k + 1].t {
                return Err(Error::Schema(format!("piece {k} does not span its knots")));
            }
        }
        for (k, w) in knots.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotoneTimes(k + 1));
            }
        }
        Ok(Self { r, pieces, knots })
    }

    /// A single-point curve.
    pub fn stationary(point: FreeGroupPoint, t: f64) -> Self {
        let r = point.rank();
        Self { r, pieces: Vec::new(), knots: vec![Knot { t, point, velocity: TangentVector::zero(r) }] }
    }

    pub(crate) fn from_parts_unchecked(r: usize, pieces: Vec<Piece>, knots: Vec<Knot>) -> Self {
        debug_assert_eq!(knots.len(), pieces.len() + 1);
        Self { r, pieces, knots }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn knots_mut(&mut self) -> &mut [Knot] {
        &mut self.knots
    }

    pub fn into_parts(self) -> (Vec<Piece>, Vec<Knot>) {
        (self.pieces, self.knots)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0].t, self.knots[self.knots.len() - 1].t)
    }

    pub fn start(&self) -> &FreeGroupPoint {
        &self.knots[0].point
    }

    pub fn end(&self) -> &FreeGroupPoint {
        &self.knots[self.knots.len() - 1].point
    }

    /// Index of the piece containing `t` (clamped to the domain).
    pub fn locate(&self, t: f64) -> usize {
        let n = self.pieces.len();
        if n == 0 {
            return 0;
        }
        let idx = self.knots.partition_point(|k| k.t <= t);
        idx.saturating_sub(1).min(n - 1)
    }

    fn knot_at(&self, t: f64) -> Option<&Knot> {
        self.knots.binary_search_by(|k| k.t.total_cmp(&t)).ok().map(|i| &self.knots[i])
    }

    fn clamp(&self, t: f64) -> f64 {
        let (a, b) = self.domain();
        t.clamp(a, b)
    }

    pub fn eval(&self, t: f64) -> FreeGroupPoint {
        let t = self.clamp(t);
        if let Some(k) = self.knot_at(t) {
            return k.point.clone();
        }
        self.eval_on_piece(self.locate(t), t)
    }

    pub fn velocity(&self, t: f64) -> TangentVector {
        let t = self.clamp(t);
        if let Some(k) = self.knot_at(t) {
            return k.velocity.clone();
        }
        self.velocity_on_piece(self.locate(t), t)
    }

    /// Evaluates piece `k`'s formula at `t` without consulting stored knots
    /// other than its starting one.
    pub fn eval_on_piece(&self, k: usize, t: f64) -> FreeGroupPoint {
        let piece = &self.pieces[k];
        let start = &self.knots[k].point;
        let d = piece.displacement(t);
        let areas = piece.displacement_areas(t);
        let x: Vec<f64> = start.x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let mut y = start.y.clone();
        for i in 1..self.r {
            for j in 0..i {
                let idx = pair_index(i, j);
                y[idx] += areas[idx] + 0.5 * (start.x[i] * d[j] - start.x[j] * d[i]);
            }
        }
        FreeGroupPoint { x, y }
    }

    pub fn velocity_on_piece(&self, k: usize, t: f64) -> TangentVector {
        let p = self.eval_on_piece(k, t);
        TangentVector::horizontal_at(&p, self.pieces[k].horizontal_velocity(t))
    }

    /// `(t, point, velocity)` on `grid` uniformly spaced samples per piece
    /// (shared endpoints are emitted once).
    pub fn dense(&self, grid: usize) -> Vec<(f64, FreeGroupPoint, TangentVector)> {
        let grid = grid.max(1);
        let mut out = Vec::with_capacity(self.pieces.len() * grid + 1);
        let first = &self.knots[0];
        out.push((first.t, first.point.clone(), first.velocity.clone()));
        for (k, piece) in self.pieces.iter().enumerate() {
            for g in 1..grid {
                let t = piece.t0 + (piece.t1 - piece.t0) * g as f64 / grid as f64;
                out.push((t, self.eval_on_piece(k, t), self.velocity_on_piece(k, t)));
            }
            let knot = &self.knots[k + 1];
            out.push((knot.t, knot.point.clone(), knot.velocity.clone()));
        }
        out
    }

    /// Joins curves whose domains abut. The shared knot is taken from the
    /// later curve.
    pub fn concat(parts: Vec<HorizontalCurve>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or_else(|| Error::Shape("no curves to join".into()))?;
        let r = first.r;
        let (mut pieces, mut knots) = first.into_parts();
        for part in iter {
            if part.r != r {
                return Err(Error::RankMismatch { expected: r, found: part.r });
            }
            let last = knots.last().expect("curves have at least one knot");
            if last.t != part.knots[0].t {
                return Err(Error::Schema(format!("curves do not abut at t = {} / {}", last.t, part.knots[0].t)));
            }
            knots.pop();
            let (p, k) = part.into_parts();
            pieces.extend(p);
            knots.extend(k);
        }
        Ok(Self { r, pieces, knots })
    }

    /// Largest one-sided velocity mismatch at interior knots, comparing the
    /// left piece, the right piece and the stored knot velocity.
    pub fn max_knot_velocity_jump(&self) -> (f64, Option<usize>) {
        let mut worst = (0.0, None);
        for k in 1..self.pieces.len() {
            let t = self.knots[k].t;
            let left = self.velocity_on_piece(k - 1, t);
            let right = self.velocity_on_piece(k, t);
            let stored = &self.knots[k].velocity;
            let jump = left.distance_inf(&right).max(left.distance_inf(stored)).max(right.distance_inf(stored));
            if jump > worst.0 || jump.is_nan() {
                worst = (jump, Some(k));
            }
        }
        worst
    }

    /// Largest mismatch between the left piece's end value and the stored knot.
    pub fn max_knot_value_jump(&self) -> f64 {
        (1..=self.pieces.len())
            .map(|k| self.eval_on_piece(k - 1, self.knots[k].t).distance_inf(&self.knots[k].point))
            .fold(0.0, f64::max)
    }

    /// Boundary velocities taken from the adjoining piece formulas.
    pub fn end_velocities_from_pieces(&self) -> Option<(TangentVector, TangentVector)> {
        let n = self.pieces.len();
        if n == 0 {
            return None;
        }
        let (a, b) = self.domain();
        Some((self.velocity_on_piece(0, a), self.velocity_on_piece(n - 1, b)))
    }
}

/// A curve in `R^r` made of consecutive segments, each translated so that it
/// starts where the previous one ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurve {
    pub r: usize,
    pub start: Vec<f64>,
    #[serde(default)]
    pub t0: f64,
    pub segments: Vec<Segment>,
}

impl PlanarCurve {
    pub fn new(start: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        let c = Self { r: start.len(), start, t0: 0.0, segments };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.len() != self.r {
            return Err(Error::RankMismatch { expected: self.r, found: self.start.len() });
        }
        if self.start.iter().any(|v| !v.is_finite()) || !self.t0.is_finite() {
            return Err(Error::NonFinite("planar curve start"));
        }
        for seg in &self.segments {
            seg.validate()?;
            if seg.rank() != self.r {
                return Err(Error::RankMismatch { expected: self.r, found: seg.rank() });
            }
            if seg.duration() == 0.0 {
                return Err(Error::Shape("planar curve segments need positive duration".into()));
            }
        }
        Ok(())
    }

    /// Junction times `t0, t0 + d_0, ...`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut t = self.t0;
        let mut out = vec![t];
        for seg in &self.segments {
            t += seg.duration();
            out.push(t);
        }
        out
    }

    /// Horizontal positions at the junctions.
    pub fn junction_points(&self) -> Vec<Vec<f64>> {
        let mut x = self.start.clone();
        let mut out = vec![x.clone()];
        for seg in &self.segments {
            let p0 = seg.position(0.0);
            let p1 = seg.position(seg.duration());
            for k in 0..self.r {
                x[k] += p1[k] - p0[k];
            }
            out.push(x.clone());
        }
        out
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let bps = self.breakpoints();
        let n = self.segments.len();
        let idx = bps.partition_point(|b| *b <= t).saturating_sub(1).min(n.saturating_sub(1));
        (idx, (t - bps[idx]).clamp(0.0, self.segments[idx].duration()))
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        if self.segments.is_empty() {
            return self.start.clone();
        }
        let (k, s) = self.locate(t);
        let base = &self.junction_points()[k];
        let seg = &self.segments[k];
        let p0 = seg.position(0.0);
        let p = seg.position(s);
        (0..self.r).map(|i| base[i] + p[i] - p0[i]).collect()
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        if self.segments.is_empty() {
            return vec![0.0; self.r];
        }
        let (k, s) = self.locate(t);
        self.segments[k].velocity(s)
    }
}

/// A sampled curve in the free group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub r: usize,
    pub times: Vec<f64>,
    pub points: Vec<FreeGroupPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivs: Option<Vec<TangentVector>>,
}

impl SampledCurve {
    pub fn new(times: Vec<f64>, points: Vec<FreeGroupPoint>, derivs: Option<Vec<TangentVector>>) -> Result<Self> {
        let r = points.first().map(|p| p.rank()).ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
        let s = Self { r, times, points, derivs };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.points.len() {
            return Err(Error::Shape(format!("{} times for {} points", self.times.len(), self.points.len())));
        }
        if let Some(d) = &self.derivs {
            if d.len() != self.points.len() {
                return Err(Error::Shape(format!("{} derivatives for {} points", d.len(), self.points.len())));
            }
            if let Some(v) = d.iter().find(|v| v.rank() != self.r) {
                return Err(Error::RankMismatch { expected: self.r, found: v.rank() });
            }
        }
        if let Some(p) = self.points.iter().find(|p| p.rank() != self.r) {
            return Err(Error::RankMismatch { expected: self.r, found: p.rank() });
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("sample times"));
        }
        for (k, w) in self.times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneTimes(k + 1));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples `curve` at the given times.
    pub fn from_curve(curve: &HorizontalCurve, times: Vec<f64>) -> Result<Self> {
        let points = times.iter().map(|&t| curve.eval(t)).collect();
        let derivs = times.iter().map(|&t| curve.velocity(t)).collect();
        let s = Self { r: curve.r(), times, points, derivs: Some(derivs) };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_piece(reversed: bool) -> Piece {
        let seg = Segment::CubicPoly { coeffs: vec![[0.2, 1.0, -0.5, 0.1], [-0.1, 0.3, 0.4, -0.2], [0.0, 0.0, 1.0, 0.0]], duration: 1.0 };
        if reversed {
            Piece { t0: 2.0, t1: 3.0, s_start: 1.0, s_end: 0.0, segment: seg, frame: None }
        } else {
            Piece { t0: 2.0, t1: 3.0, s_start: 0.0, s_end: 1.0, segment: seg, frame: None }
        }
    }

    #[test]
    fn displacement_areas_are_translation_free() {
        // Pair areas of the displacement must not depend on where the
        // segment itself starts.
        let p = circle_piece(false);
        let mut shifted = p.clone();
        if let Segment::CubicPoly { coeffs, .. } = &mut shifted.segment {
            for c in coeffs.iter_mut() {
                c[0] += 5.0;
            }
        }
        let a = p.displacement_areas(2.6);
        let b = shifted.displacement_areas(2.6);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reversed_piece_runs_backwards() {
        let p = circle_piece(true);
        assert_eq!(p.sigma(2.0), 1.0);
        assert_eq!(p.sigma(3.0), 0.0);
        let v = p.horizontal_velocity(2.0);
        let fwd = p.segment.velocity(1.0);
        for (a, b) in v.iter().zip(&fwd) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn frame_rotates_displacement_and_areas() {
        let mut p = circle_piece(false);
        let c = 0.6_f64;
        let s = 0.8_f64;
        p.frame = Some(vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]);
        let base = circle_piece(false);
        let d = p.displacement(2.5);
        let d0 = base.displacement(2.5);
        assert!((d[0] - (c * d0[0] - s * d0[1])).abs() < 1e-15);
        // A rotation in the (0,1) plane preserves the (1,0) area.
        let a = p.displacement_areas(2.5);
        let a0 = base.displacement_areas(2.5);
        assert!((a[0] - a0[0]).abs() < 1e-15);
    }

    #[test]
    fn curve_rejects_bad_knots() {
        let k = |t: f64| Knot { t, point: FreeGroupPoint::identity(2), velocity: TangentVector::zero(2) };
        let seg = Segment::LinearDrift { velocity: vec![1.0, 0.0], duration: 1.0 };
        assert!(HorizontalCurve::new(2, vec![Piece::forward(seg.clone(), 0.0, 1.0)], vec![k(0.0)]).is_err());
        assert!(HorizontalCurve::new(2, vec![Piece::forward(seg.clone(), 0.0, 1.0)], vec![k(0.0), k(2.0)]).is_err());
        assert!(HorizontalCurve::new(2, vec![Piece::forward(seg, 0.0, 1.0)], vec![k(0.0), k(1.0)]).is_ok());
    }

    #[test]
    fn sampled_curve_validation() {
        let p = FreeGroupPoint::identity(2);
        assert!(SampledCurve::new(vec![0.0, 0.0], vec![p.clone(), p.clone()], None).is_err());
        assert!(SampledCurve::new(vec![0.0], vec![p.clone(), p.clone()], None).is_err());
        assert!(SampledCurve::new(vec![0.0, 1.0], vec![p.clone(), p], None).is_ok());
    }

    #[test]
    fn planar_curve_is_continuous() {
        let segs = vec![
            Segment::CubicPoly { coeffs: vec![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]], duration: 1.0 },
            Segment::LinearDrift { velocity: vec![0.0, 2.0], duration: 0.5 },
        ];
        let c = PlanarCurve::new(vec![0.0, 0.0], segs).unwrap();
        assert_eq!(c.breakpoints(), vec![0.0, 1.0, 1.5]);
        let a = c.position(1.0 - 1e-12);
        let b = c.position(1.0);
        assert!((a[0] - b[0]).abs() < 1e-11 && (a[1] - b[1]).abs() < 1e-11);
        assert_eq!(c.position(1.5), vec![1.0, 2.0]);
    }
}
