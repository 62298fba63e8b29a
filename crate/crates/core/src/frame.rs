//! Frame normalization of a gap: translate the left endpoint to the identity
//! and rotate its velocity onto `(L, 0, ..., 0)`.

use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, Knot, Piece};
use crate::error::{Error, Result};
use crate::group::{dl, horizontal_residual, pair_count, pair_of_index, FreeGroupPoint, TangentVector};

pub type Matrix = Vec<Vec<f64>>;

/// Tolerance on the horizontality of boundary derivatives.
pub const BOUNDARY_HORIZONTAL_TOL: f64 = 1e-8;

pub fn identity_matrix(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Matrix {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Matrix {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| (0..cols).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect())
        .collect()
}

/// `max |A^T A - I|`.
pub fn orthogonality_defect(a: &[Vec<f64>]) -> f64 {
    let ata = mat_mul(&transpose(a), a);
    let mut worst = 0.0_f64;
    for (i, row) in ata.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// Orthogonal `A` with `A v = |v| e_1`, and `L = |v|`.
///
/// For `v_1 >= 0` this is the reflection through `v/|v| + e_1` followed by
/// negating the first axis, which is the identity when `v` is already a
/// positive multiple of `e_1`. For `v_1 < 0` it is the reflection through
/// `v/|v| - e_1`. Neither axis suffers cancellation.
pub fn rotation_to_e1(v: &[f64]) -> (Matrix, f64) {
    let r = v.len();
    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if l == 0.0 || !l.is_finite() {
        return (identity_matrix(r), if l.is_finite() { l } else { 0.0 });
    }
    let u: Vec<f64> = v.iter().map(|x| x / l).collect();
    let flip = u[0] >= 0.0;
    let mut n = u.clone();
    n[0] += if flip { 1.0 } else { -1.0 };
    let nn: f64 = n.iter().map(|x| x * x).sum();
    let mut a = identity_matrix(r);
    for i in 0..r {
        for j in 0..r {
            a[i][j] -= 2.0 * n[i] * n[j] / nn;
        }
    }
    if flip {
        for x in a[0].iter_mut() {
            *x = -*x;
        }
    }
    (a, l)
}

/// The induced action on vertical coordinates: the 2x2 minors of `A`.
pub fn second_layer_action(a: &[Vec<f64>]) -> Result<Matrix> {
    let defect = orthogonality_defect(a);
    if !(defect <= 1e-10) {
        return Err(Error::NotOrthogonal(defect));
    }
    Ok(exterior_square(a))
}

/// `B[(i,j)][(k,l)] = A_ik A_jl - A_il A_jk` for any square `A`.
pub fn exterior_square(a: &[Vec<f64>]) -> Matrix {
    let r = a.len();
    let m = pair_count(r);
    let mut b = vec![vec![0.0; m]; m];
    for (row, brow) in b.iter_mut().enumerate() {
        let (i, j) = pair_of_index(row);
        for (col, entry) in brow.iter_mut().enumerate() {
            let (k, l) = pair_of_index(col);
            *entry = a[i][k] * a[j][l] - a[i][l] * a[j][k];
        }
    }
    b
}

/// The automorphism `(x, y) -> (A x, B y)` of `G_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAutomorphism {
    pub a: Matrix,
    pub b: Matrix,
    pub l: f64,
}

impl FrameAutomorphism {
    /// The automorphism sending `v` to `(|v|, 0, ..., 0)`.
    pub fn aligning(v: &[f64]) -> Result<Self> {
        let (a, l) = rotation_to_e1(v);
        let b = second_layer_action(&a)?;
        Ok(Self { a, b, l })
    }

    pub fn from_orthogonal(a: Matrix) -> Result<Self> {
        let b = second_layer_action(&a)?;
        Ok(Self { a, b, l: 0.0 })
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn apply(&self, p: &FreeGroupPoint) -> Result<FreeGroupPoint> {
        if p.rank() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), found: p.rank() });
        }
        Ok(FreeGroupPoint { x: mat_vec(&self.a, &p.x), y: mat_vec(&self.b, &p.y) })
    }

    /// The differential, which is the same linear map.
    pub fn push_tangent(&self, v: &TangentVector) -> Result<TangentVector> {
        if v.rank() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), found: v.rank() });
        }
        Ok(TangentVector { x: mat_vec(&self.a, &v.x), y: mat_vec(&self.b, &v.y) })
    }

    pub fn inverse(&self) -> Self {
        Self { a: transpose(&self.a), b: transpose(&self.b), l: self.l }
    }
}

/// Apply [`FrameAutomorphism::apply`] to a point.
pub fn apply_automorphism(f: &FrameAutomorphism, p: &FreeGroupPoint) -> Result<FreeGroupPoint> {
    f.apply(p)
}

/// Normalized description of a gap `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub h: f64,
    pub q: FreeGroupPoint,
    pub v: TangentVector,
    pub w: TangentVector,
    pub l: f64,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BoundaryData {
    /// Builds boundary data with the smallest admissible `eps`.
    pub fn new(h: f64, q: FreeGroupPoint, w: TangentVector, l: f64) -> Result<Self> {
        let r = q.rank();
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInterval { a: 0.0, b: 2.0 * h });
        }
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::Infeasible(format!("anchor speed {l} must be finite and nonnegative")));
        }
        if w.rank() != r {
            return Err(Error::RankMismatch { expected: r, found: w.rank() });
        }
        let res = horizontal_residual(&w, &q);
        if res > BOUNDARY_HORIZONTAL_TOL {
            return Err(Error::NotHorizontal { residual: res });
        }
        let mut vx = vec![0.0; r];
        vx[0] = l;
        let v = TangentVector { x: vx, y: vec![0.0; pair_count(r)] };
        let mut bd = Self { h, q, v, w, l, eps: 0.0, warnings: Vec::new() };
        bd.eps = bd.minimal_eps();
        Ok(bd)
    }

    pub fn rank(&self) -> usize {
        self.q.rank()
    }

    /// Smallest `eps >= 0` satisfying the velocity, position and area bounds.
    pub fn minimal_eps(&self) -> f64 {
        let (h, l) = (self.h, self.l);
        let mut eps = 0.0_f64;
        for (wi, vi) in self.w.x.iter().zip(&self.v.x) {
            eps = eps.max((wi - vi).abs());
        }
        eps = eps.max((self.q.x[0] - 2.0 * l * h).abs() / (2.0 * h));
        for qi in &self.q.x[1..] {
            eps = eps.max(qi.abs() / (2.0 * h));
        }
        for (idx, qy) in self.q.y.iter().enumerate() {
            let (_, j) = pair_of_index(idx);
            let qa = qy.abs();
            let need = if j == 0 {
                // 4 h^2 e^2 + 4 L h^2 e - |q| = 0, stable root.
                let s = qa / (h * h);
                if s == 0.0 { 0.0 } else { s / (2.0 * (l + (l * l + s).sqrt())) }
            } else {
                (qa / (4.0 * h * h)).sqrt()
            };
            eps = eps.max(need);
        }
        eps
    }

    /// Largest violation ratio of the bounds at the stored `eps` (`<= 1` when
    /// all hold, up to rounding).
    pub fn violation(&self) -> f64 {
        let need = self.minimal_eps();
        if need == 0.0 {
            0.0
        } else if self.eps == 0.0 {
            f64::INFINITY
        } else {
            need / self.eps
        }
    }

    /// Raises `eps` to at least `eps`; the data-derived minimum is kept when it
    /// is larger, with a warning.
    pub fn with_eps(mut self, eps: f64) -> Self {
        let need = self.minimal_eps();
        if eps >= need {
            self.eps = eps;
        } else {
            self.warnings.push(format!("requested eps {eps:e} is below the data-derived minimum {need:e}; enlarged"));
            self.eps = need;
        }
        self
    }
}

/// Result of normalizing a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGap {
    pub frame: FrameAutomorphism,
    /// `gamma(a)`.
    pub anchor: FreeGroupPoint,
    pub a: f64,
    pub b: f64,
    pub bd: BoundaryData,
}

/// Normalizes the gap `[a, b]` given the curve values and derivatives at its ends.
pub fn normalize_gap(
    a: f64,
    b: f64,
    ga: &FreeGroupPoint,
    va: &TangentVector,
    gb: &FreeGroupPoint,
    vb: &TangentVector,
) -> Result<NormalizedGap> {
    normalize_gap_with_tol(a, b, ga, va, gb, vb, BOUNDARY_HORIZONTAL_TOL)
}

/// [`normalize_gap`] with an explicit horizontality tolerance for the
/// boundary derivatives.
pub fn normalize_gap_with_tol(
    a: f64,
    b: f64,
    ga: &FreeGroupPoint,
    va: &TangentVector,
    gb: &FreeGroupPoint,
    vb: &TangentVector,
    tol: f64,
) -> Result<NormalizedGap> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    let r = ga.rank();
    for (p, v) in [(ga, va), (gb, vb)] {
        if p.rank() != r || v.rank() != r {
            return Err(Error::RankMismatch { expected: r, found: p.rank().max(v.rank()) });
        }
        let res = horizontal_residual(v, p);
        if res > tol || res.is_nan() {
            return Err(Error::NotHorizontal { residual: res });
        }
    }
    let frame = FrameAutomorphism::aligning(&va.x)?;
    let inv = ga.inverse();
    let rel = inv.product_unchecked(gb);
    let q = frame.apply(&rel)?;
    let w_rel = dl(&inv, gb, vb)?;
    let w_raw = frame.push_tangent(&w_rel)?;
    // The vertical part is implied by the horizontal one at q; rebuilding it
    // removes rounding from the two linear maps.
    let w = TangentVector::horizontal_at(&q, w_raw.x);
    let bd = BoundaryData::new(0.5 * (b - a), q, w, frame.l)?;
    Ok(NormalizedGap { frame, anchor: ga.clone(), a, b, bd })
}

/// Normalizes the gap `[a, b]` of a piecewise curve.
pub fn normalize_curve_gap(curve: &HorizontalCurve, a: f64, b: f64) -> Result<NormalizedGap> {
    normalize_gap(a, b, &curve.eval(a), &curve.velocity(a), &curve.eval(b), &curve.velocity(b))
}

/// Maps a curve built on `[0, 2h]` in normalized coordinates back to `[a, b]`
/// through `L_anchor o F^{-1}`.
pub fn denormalize(psi: &HorizontalCurve, gap: &NormalizedGap) -> Result<HorizontalCurve> {
    let finv = gap.frame.inverse();
    let g = &gap.anchor;
    let r = psi.r();
    let n = psi.pieces().len();
    let shift = |t: f64, last: bool| if last { gap.b } else { gap.a + t };
    let pieces: Vec<Piece> = psi
        .pieces()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let m = match &p.frame {
                None => finv.a.clone(),
                Some(m) => mat_mul(&finv.a, m),
            };
            Piece {
                t0: shift(p.t0, false),
                t1: shift(p.t1, k + 1 == n),
                s_start: p.s_start,
                s_end: p.s_end,
                segment: p.segment.clone(),
                frame: Some(m),
            }
        })
        .collect();
    let knots: Vec<Knot> = psi
        .knots()
        .iter()
        .enumerate()
        .map(|(k, knot)| {
            let point = g.product_unchecked(&finv.apply(&knot.point)?);
            let velocity = TangentVector::horizontal_at(&point, mat_vec(&finv.a, &knot.velocity.x));
            Ok(Knot { t: shift(knot.t, k == n), point, velocity })
        })
        .collect::<Result<_>>()?;
    HorizontalCurve::new(r, pieces, knots).map_err(|e| match e {
        Error::NonMonotoneTimes(_) => Error::InvalidInterval { a: gap.a, b: gap.b },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::dl;

    fn rand_vec(seed: &mut u64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn aligned_vector_gives_identity() {
        let (a, l) = rotation_to_e1(&[3.0, 0.0, 0.0]);
        assert_eq!(a, identity_matrix(3));
        assert_eq!(l, 3.0);
        let (a, l) = rotation_to_e1(&[0.0, 0.0]);
        assert_eq!(a, identity_matrix(2));
        assert_eq!(l, 0.0);
    }

    #[test]
    fn rotation_maps_to_e1() {
        let (a, l) = rotation_to_e1(&[0.0, 2.0]);
        assert_eq!(l, 2.0);
        let img = mat_vec(&a, &[0.0, 2.0]);
        assert!((img[0] - 2.0).abs() < 1e-15 && img[1].abs() < 1e-15);
        let mut seed = 7;
        for r in 2..7 {
            for _ in 0..50 {
                let v = rand_vec(&mut seed, r);
                let (a, l) = rotation_to_e1(&v);
                let img = mat_vec(&a, &v);
                assert!((img[0] - l).abs() <= 1e-12);
                assert!(img[1..].iter().all(|x| x.abs() <= 1e-12));
                assert!(orthogonality_defect(&a) <= 1e-12);
            }
        }
        let (a, _) = rotation_to_e1(&[-1.0, 1e-9, 0.0]);
        assert!(orthogonality_defect(&a) <= 1e-15);
    }

    #[test]
    fn second_layer_examples() {
        assert_eq!(second_layer_action(&identity_matrix(4)).unwrap(), identity_matrix(6));
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let b = second_layer_action(&[vec![c, -s], vec![s, c]]).unwrap();
        assert!((b[0][0] - 1.0).abs() < 1e-15);
        let (h, _) = rotation_to_e1(&[-0.6, 0.8]);
        let b = second_layer_action(&h).unwrap();
        assert!((b[0][0] + 1.0).abs() < 1e-15);
        assert!(matches!(second_layer_action(&[vec![2.0, 0.0], vec![0.0, 1.0]]), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn automorphism_is_a_homomorphism() {
        let mut seed = 11;
        for r in 2..6 {
            let m = pair_count(r);
            for _ in 0..50 {
                let f = FrameAutomorphism::aligning(&rand_vec(&mut seed, r)).unwrap();
                let p = FreeGroupPoint::new(rand_vec(&mut seed, r), rand_vec(&mut seed, m)).unwrap();
                let q = FreeGroupPoint::new(rand_vec(&mut seed, r), rand_vec(&mut seed, m)).unwrap();
                let lhs = f.apply(&p.product(&q).unwrap()).unwrap();
                let rhs = f.apply(&p).unwrap().product(&f.apply(&q).unwrap()).unwrap();
                assert!(lhs.distance_inf(&rhs) <= 1e-12);
                let v = TangentVector::horizontal_at(&p, rand_vec(&mut seed, r));
                let fv = f.push_tangent(&v).unwrap();
                assert!(horizontal_residual(&fv, &f.apply(&p).unwrap()) <= 1e-12);
            }
        }
    }

    #[test]
    fn straight_line_has_zero_eps() {
        let u = [0.6, -0.8, 0.0];
        let ga = FreeGroupPoint::horizontal(vec![1.0, 2.0, 3.0]);
        let gb = FreeGroupPoint::new(vec![1.0 + 0.6 * 0.2, 2.0 - 0.8 * 0.2, 3.0], vec![0.0; 3]).unwrap();
        // Horizontal lift of the segment from ga: vertical increments 1/2 (x_i d_j - x_j d_i).
        let d = [0.12, -0.16, 0.0];
        let mut y = vec![0.0; 3];
        for (idx, yv) in y.iter_mut().enumerate() {
            let (i, j) = pair_of_index(idx);
            *yv = 0.5 * (ga.x[i] * d[j] - ga.x[j] * d[i]);
        }
        let gb = FreeGroupPoint { y, ..gb };
        let va = TangentVector::horizontal_at(&ga, u.to_vec());
        let vb = TangentVector::horizontal_at(&gb, u.to_vec());
        let gap = normalize_gap(0.3, 0.5, &ga, &va, &gb, &vb).unwrap();
        assert!((gap.bd.l - 1.0).abs() < 1e-15);
        assert!(gap.bd.eps < 1e-13, "{}", gap.bd.eps);
        assert!((gap.bd.q.x[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn non_horizontal_boundary_is_rejected() {
        let p = FreeGroupPoint::identity(2);
        let v = TangentVector::new(vec![1.0, 0.0], vec![0.1]).unwrap();
        let ok = TangentVector::horizontal_at(&p, vec![1.0, 0.0]);
        assert!(matches!(normalize_gap(0.0, 1.0, &p, &v, &p, &ok), Err(Error::NotHorizontal { .. })));
        assert!(matches!(normalize_gap(1.0, 1.0, &p, &ok, &p, &ok), Err(Error::InvalidInterval { .. })));
    }

    #[test]
    fn eps_enlargement_records_warning() {
        let q = FreeGroupPoint::horizontal(vec![0.2, 0.01]);
        let w = TangentVector::horizontal_at(&q, vec![1.0, 0.0]);
        let bd = BoundaryData::new(0.1, q, w, 1.0).unwrap();
        assert!((bd.eps - 0.05).abs() < 1e-15);
        let loose = bd.clone().with_eps(0.2);
        assert_eq!(loose.eps, 0.2);
        assert!(loose.warnings.is_empty());
        let tight = bd.with_eps(0.01);
        assert!((tight.eps - 0.05).abs() < 1e-15);
        assert_eq!(tight.warnings.len(), 1);
    }

    #[test]
    fn normalized_velocity_matches_frame() {
        let ga = FreeGroupPoint::new(vec![0.4, 0.16], vec![0.01]).unwrap();
        let va = TangentVector::horizontal_at(&ga, vec![1.0, 0.8]);
        let gap = normalize_gap(0.4, 0.6, &ga, &va, &ga, &va).unwrap();
        let pushed = gap.frame.push_tangent(&dl(&ga.inverse(), &ga, &va).unwrap()).unwrap();
        assert!((pushed.x[0] - gap.bd.l).abs() < 1e-15 && pushed.x[1].abs() < 1e-15);
    }
}
