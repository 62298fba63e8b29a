//! Step-2 Carnot groups in exponential coordinates.
//!
//! The free group of rank `r` lives on `R^r x R^{r(r-1)/2}`. Horizontal
//! coordinates are `x_1..x_r`; vertical coordinates `x_{ij}` (`i > j`) are
//! stored in the fixed order `(2,1), (3,1), (3,2), (4,1), ...`. Internally
//! indices are zero-based, so the pair `(i, j)` with `i > j >= 0` lives at
//! `i (i - 1) / 2 + j`.
//!
//! General step-2 groups are described by a [`Step2Structure`], an
//! antisymmetric bracket tensor `c[k][i][j]` with `[Y_i, Y_j] = sum_k c[k][i][j] Z_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of vertical coordinates of the free group of rank `r`.
#[inline]
pub fn pair_count(r: usize) -> usize {
    r * r.saturating_sub(1) / 2
}

/// Storage index of the zero-based pair `(i, j)`, `i > j`.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j, "pair ({i}, {j}) must satisfy i > j");
    i * (i - 1) / 2 + j
}

/// Zero-based pairs `(i, j)` with `i > j` in storage order.
pub fn pairs(r: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..r).flat_map(|i| (0..i).map(move |j| (i, j)))
}

/// Inverse of [`pair_index`].
pub fn pair_of_index(index: usize) -> (usize, usize) {
    let mut i = 1;
    while (i + 1) * i / 2 <= index {
        i += 1;
    }
    (i, index - i * (i - 1) / 2)
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[derive(Deserialize)]
struct RawCoordinates {
    x: Vec<f64>,
    y: Vec<f64>,
}

/// A point of the free step-2 group `G_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinates")]
pub struct FreeGroupPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TryFrom<RawCoordinates> for FreeGroupPoint {
    type Error = Error;
    fn try_from(raw: RawCoordinates) -> Result<Self> {
        FreeGroupPoint::new(raw.x, raw.y)
    }
}

/// A tangent vector at a point of `G_r`, same layout as [`FreeGroupPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoordinates")]
pub struct TangentVector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TryFrom<RawCoordinates> for TangentVector {
    type Error = Error;
    fn try_from(raw: RawCoordinates) -> Result<Self> {
        TangentVector::new(raw.x, raw.y)
    }
}

fn check_shape(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::Shape(format!("rank must be at least 2, got {}", x.len())));
    }
    if y.len() != pair_count(x.len()) {
        return Err(Error::Shape(format!(
            "rank {} needs {} vertical coordinates, got {}",
            x.len(),
            pair_count(x.len()),
            y.len()
        )));
    }
    Ok(())
}

impl FreeGroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_shape(&x, &y)?;
        check_finite(&x, "horizontal coordinates")?;
        check_finite(&y, "vertical coordinates")?;
        Ok(Self { x, y })
    }

    pub fn identity(r: usize) -> Self {
        Self { x: vec![0.0; r], y: vec![0.0; pair_count(r)] }
    }

    /// Point with the given horizontal part and zero vertical part.
    pub fn horizontal(x: Vec<f64>) -> Self {
        let m = pair_count(x.len());
        Self { x, y: vec![0.0; m] }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn vertical(&self, i: usize, j: usize) -> f64 {
        self.y[pair_index(i, j)]
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        same_rank(self.rank(), other.rank())?;
        Ok(self.product_unchecked(other))
    }

    pub(crate) fn product_unchecked(&self, q: &Self) -> Self {
        let x = self.x.iter().zip(&q.x).map(|(a, b)| a + b).collect();
        let mut y = Vec::with_capacity(self.y.len());
        for (i, j) in pairs(self.rank()) {
            let k = pair_index(i, j);
            y.push(self.y[k] + q.y[k] + 0.5 * (self.x[i] * q.x[j] - q.x[i] * self.x[j]));
        }
        Self { x, y }
    }

    /// Group inverse; in exponential coordinates this is negation.
    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
        }
    }

    /// Largest coordinate magnitude.
    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn distance_inf(&self, other: &Self) -> f64 {
        max_abs_diff(&self.x, &other.x).max(max_abs_diff(&self.y, &other.y))
    }

    /// Bitwise equality of every coordinate.
    pub fn bit_eq(&self, other: &Self) -> bool {
        bits_equal(&self.x, &other.x) && bits_equal(&self.y, &other.y)
    }
}

impl TangentVector {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_shape(&x, &y)?;
        check_finite(&x, "tangent horizontal components")?;
        check_finite(&y, "tangent vertical components")?;
        Ok(Self { x, y })
    }

    pub fn zero(r: usize) -> Self {
        Self { x: vec![0.0; r], y: vec![0.0; pair_count(r)] }
    }

    /// The horizontal vector at `p` with horizontal components `x`.
    pub fn horizontal_at(p: &FreeGroupPoint, x: Vec<f64>) -> Self {
        let y = pairs(p.rank())
            .map(|(i, j)| 0.5 * (p.x[i] * x[j] - p.x[j] * x[i]))
            .collect();
        Self { x, y }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.x.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v * s).collect(),
            y: self.y.iter().map(|v| v * s).collect(),
        }
    }

    pub fn distance_inf(&self, other: &Self) -> f64 {
        max_abs_diff(&self.x, &other.x).max(max_abs_diff(&self.y, &other.y))
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        bits_equal(&self.x, &other.x) && bits_equal(&self.y, &other.y)
    }

    /// Reinterpret as a point (exponential coordinates of `exp(v)`).
    pub fn to_point(&self) -> FreeGroupPoint {
        FreeGroupPoint { x: self.x.clone(), y: self.y.clone() }
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()))
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits())
}

fn same_rank(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::RankMismatch { expected, found })
    }
}

pub fn product(p: &FreeGroupPoint, q: &FreeGroupPoint) -> Result<FreeGroupPoint> {
    p.product(q)
}

pub fn inverse(p: &FreeGroupPoint) -> FreeGroupPoint {
    p.inverse()
}

/// `L_g(p) = g p`.
pub fn left_translate(g: &FreeGroupPoint, p: &FreeGroupPoint) -> Result<FreeGroupPoint> {
    g.product(p)
}

/// Differential of `L_g` at `p` applied to `v`.
///
/// Horizontal components pass through; vertical ones pick up
/// `1/2 (g_i v_j - g_j v_i)`. The result does not depend on `p`.
pub fn dl(g: &FreeGroupPoint, p: &FreeGroupPoint, v: &TangentVector) -> Result<TangentVector> {
    same_rank(g.rank(), p.rank())?;
    same_rank(g.rank(), v.rank())?;
    Ok(dl_unchecked(g, v))
}

pub(crate) fn dl_unchecked(g: &FreeGroupPoint, v: &TangentVector) -> TangentVector {
    let y = pairs(g.rank())
        .map(|(i, j)| v.y[pair_index(i, j)] + 0.5 * (g.x[i] * v.x[j] - g.x[j] * v.x[i]))
        .collect();
    TangentVector { x: v.x.clone(), y }
}

/// The left-invariant field `X_k` at `p`; `k` is one-based as in `X_1..X_r`.
pub fn horizontal_field(k: usize, p: &FreeGroupPoint) -> Result<TangentVector> {
    let r = p.rank();
    if k == 0 || k > r {
        return Err(Error::IndexOutOfRange { index: k, max: r });
    }
    let mut e = vec![0.0; r];
    e[k - 1] = 1.0;
    Ok(TangentVector::horizontal_at(p, e))
}

/// Outcome of a horizontality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizontalCheck {
    pub horizontal: bool,
    pub residual: f64,
}

/// `v` is horizontal at `p` iff `v_{ij} = 1/2 (p_i v_j - p_j v_i)` for all `i > j`.
pub fn is_horizontal(v: &TangentVector, p: &FreeGroupPoint, tol: f64) -> HorizontalCheck {
    let residual = horizontal_residual(v, p);
    HorizontalCheck { horizontal: residual <= tol, residual }
}

pub fn horizontal_residual(v: &TangentVector, p: &FreeGroupPoint) -> f64 {
    pairs(p.rank()).fold(0.0_f64, |m, (i, j)| {
        let expected = 0.5 * (p.x[i] * v.x[j] - p.x[j] * v.x[i]);
        m.max((v.y[pair_index(i, j)] - expected).abs())
    })
}

#[derive(Serialize, Deserialize)]
struct RawStructure {
    r: usize,
    m: usize,
    /// `(k, i, j, value)` meaning `c[k][i][j] = value` (and `c[k][j][i] = -value`).
    brackets: Vec<(usize, usize, usize, f64)>,
}

/// Bracket tensor of a step-2 Carnot algebra `V_1 (+) V_2`, `dim V_1 = r`, `dim V_2 = m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStructure", into = "RawStructure")]
pub struct Step2Structure {
    r: usize,
    m: usize,
    c: Vec<f64>,
}

impl TryFrom<RawStructure> for Step2Structure {
    type Error = Error;
    fn try_from(raw: RawStructure) -> Result<Self> {
        Step2Structure::from_triplets(raw.r, raw.m, &raw.brackets)
    }
}

impl From<Step2Structure> for RawStructure {
    fn from(s: Step2Structure) -> Self {
        let mut brackets = Vec::new();
        for k in 0..s.m {
            for (i, j) in pairs(s.r) {
                let v = s.bracket(k, i, j);
                if v != 0.0 {
                    brackets.push((k, i, j, v));
                }
            }
        }
        RawStructure { r: s.r, m: s.m, brackets }
    }
}

impl Step2Structure {
    pub fn zero(r: usize, m: usize) -> Self {
        Self { r, m, c: vec![0.0; m * r * r] }
    }

    /// Structure of the free group `G_r`: `[X_i, X_j] = X_{ij}` for `i > j`.
    pub fn free(r: usize) -> Self {
        let mut s = Self::zero(r, pair_count(r));
        for (i, j) in pairs(r) {
            s.set(pair_index(i, j), i, j, 1.0);
        }
        s
    }

    /// The first Heisenberg group, in the same convention as `free(2)`.
    pub fn heisenberg() -> Self {
        Self::free(2)
    }

    /// Build from sparse `(k, i, j, value)` triplets; antisymmetry is imposed.
    pub fn from_triplets(r: usize, m: usize, triplets: &[(usize, usize, usize, f64)]) -> Result<Self> {
        if r < 1 {
            return Err(Error::Structure("horizontal dimension must be positive".into()));
        }
        let mut s = Self::zero(r, m);
        for &(k, i, j, v) in triplets {
            if k >= m || i >= r || j >= r {
                return Err(Error::Structure(format!("index ({k}, {i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("structure constants"));
            }
            if i == j {
                if v != 0.0 {
                    return Err(Error::Structure(format!("c[{k}][{i}][{i}] must vanish")));
                }
                continue;
            }
            let current = s.bracket(k, i, j);
            if current != 0.0 && current != v {
                return Err(Error::Structure(format!(
                    "conflicting values for c[{k}][{i}][{j}]: {current} and {v}"
                )));
            }
            s.set(k, i, j, v);
        }
        Ok(s)
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let r = self.r;
        self.c[k * r * r + i * r + j] = v;
        self.c[k * r * r + j * r + i] = -v;
    }

    #[inline]
    pub fn bracket(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[k * self.r * self.r + i * self.r + j]
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// `1/2 sum_{i,j} c[k][i][j] a_i b_j` for every `k`.
    pub fn half_bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let r = self.r;
        (0..self.m)
            .map(|k| {
                let block = &self.c[k * r * r..(k + 1) * r * r];
                let mut s = 0.0;
                for i in 0..r {
                    for j in 0..r {
                        s += block[i * r + j] * a[i] * b[j];
                    }
                }
                0.5 * s
            })
            .collect()
    }

    pub fn identity(&self) -> GeneralGroupPoint {
        GeneralGroupPoint { a: vec![0.0; self.r], b: vec![0.0; self.m] }
    }

    pub fn check_point(&self, p: &GeneralGroupPoint) -> Result<()> {
        if p.a.len() != self.r || p.b.len() != self.m {
            return Err(Error::Shape(format!(
                "point has shape ({}, {}), structure expects ({}, {})",
                p.a.len(),
                p.b.len(),
                self.r,
                self.m
            )));
        }
        Ok(())
    }

    pub fn product(&self, p: &GeneralGroupPoint, q: &GeneralGroupPoint) -> Result<GeneralGroupPoint> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.product_unchecked(p, q))
    }

    pub(crate) fn product_unchecked(&self, p: &GeneralGroupPoint, q: &GeneralGroupPoint) -> GeneralGroupPoint {
        let a = p.a.iter().zip(&q.a).map(|(u, v)| u + v).collect();
        let cross = self.half_bracket(&p.a, &q.a);
        let b = (0..self.m).map(|k| p.b[k] + q.b[k] + cross[k]).collect();
        GeneralGroupPoint { a, b }
    }

    /// Horizontal vector at `p` with horizontal components `a`.
    pub fn horizontal_at(&self, p: &GeneralGroupPoint, a: Vec<f64>) -> GeneralTangent {
        let b = self.half_bracket(&p.a, &a);
        GeneralTangent { a, b }
    }

    pub fn horizontal_residual(&self, v: &GeneralTangent, p: &GeneralGroupPoint) -> f64 {
        let expected = self.half_bracket(&p.a, &v.a);
        max_abs_diff(&expected, &v.b)
    }

    /// Differential of `L_g` applied to `v`.
    pub fn dl(&self, g: &GeneralGroupPoint, v: &GeneralTangent) -> GeneralTangent {
        let cross = self.half_bracket(&g.a, &v.a);
        GeneralTangent {
            a: v.a.clone(),
            b: v.b.iter().zip(cross).map(|(u, c)| u + c).collect(),
        }
    }
}

/// A point of a general step-2 group in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralGroupPoint {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GeneralGroupPoint {
    pub fn inverse(&self) -> Self {
        Self {
            a: self.a.iter().map(|v| -v).collect(),
            b: self.b.iter().map(|v| -v).collect(),
        }
    }

    pub fn distance_inf(&self, other: &Self) -> f64 {
        max_abs_diff(&self.a, &other.a).max(max_abs_diff(&self.b, &other.b))
    }
}

impl From<&FreeGroupPoint> for GeneralGroupPoint {
    fn from(p: &FreeGroupPoint) -> Self {
        Self { a: p.x.clone(), b: p.y.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralTangent {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GeneralTangent {
    pub fn distance_inf(&self, other: &Self) -> f64 {
        max_abs_diff(&self.a, &other.a).max(max_abs_diff(&self.b, &other.b))
    }
}

/// Exponential-coordinate product in a general step-2 group.
pub fn general_product(
    structure: &Step2Structure,
    p: &GeneralGroupPoint,
    q: &GeneralGroupPoint,
) -> Result<GeneralGroupPoint> {
    structure.product(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], y: &[f64]) -> FreeGroupPoint {
        FreeGroupPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn pair_layout_is_lexicographic() {
        let got: Vec<_> = pairs(4).collect();
        assert_eq!(got, vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]);
        for (idx, (i, j)) in pairs(6).enumerate() {
            assert_eq!(pair_index(i, j), idx);
            assert_eq!(pair_of_index(idx), (i, j));
        }
    }

    #[test]
    fn heisenberg_product_by_hand() {
        let p = pt(&[1.0, 0.0], &[0.0]);
        let q = pt(&[0.0, 1.0], &[0.0]);
        assert_eq!(p.product(&q).unwrap(), pt(&[1.0, 1.0], &[-0.5]));
        assert_eq!(q.product(&p).unwrap(), pt(&[1.0, 1.0], &[0.5]));
    }

    #[test]
    fn inverse_cancels() {
        let p = pt(&[1.0, 0.0], &[0.0]);
        assert_eq!(p.inverse(), pt(&[-1.0, 0.0], &[0.0]));
        assert_eq!(FreeGroupPoint::identity(3).inverse(), FreeGroupPoint::identity(3));
        let p = pt(&[0.3, -0.7, 0.2], &[0.1, 0.4, -0.9]);
        let e = p.product(&p.inverse()).unwrap();
        assert!(e.max_abs() <= 1e-14);
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let p = FreeGroupPoint::identity(2);
        let q = FreeGroupPoint::identity(3);
        assert_eq!(p.product(&q), Err(Error::RankMismatch { expected: 2, found: 3 }));
        assert!(FreeGroupPoint::new(vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(FreeGroupPoint::new(vec![f64::NAN, 0.0], vec![0.0]).is_err());
    }

    #[test]
    fn horizontal_field_values() {
        let p = pt(&[0.0, 1.0], &[0.0]);
        let x1 = horizontal_field(1, &p).unwrap();
        assert_eq!(x1.x, vec![1.0, 0.0]);
        assert_eq!(x1.y, vec![0.5]);
        assert_eq!(horizontal_residual(&x1, &p), 0.0);
        let origin = FreeGroupPoint::identity(3);
        let x2 = horizontal_field(2, &origin).unwrap();
        assert_eq!(x2.x, vec![0.0, 1.0, 0.0]);
        assert_eq!(x2.y, vec![0.0; 3]);
        assert!(horizontal_field(0, &p).is_err());
        assert!(horizontal_field(3, &p).is_err());
    }

    #[test]
    fn pure_vertical_is_not_horizontal() {
        let v = TangentVector::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let check = is_horizontal(&v, &FreeGroupPoint::identity(2), 1e-12);
        assert!(!check.horizontal);
        assert_eq!(check.residual, 1.0);
    }

    #[test]
    fn identity_translation_differential() {
        let v = TangentVector::new(vec![1.0, 2.0], vec![3.0]).unwrap();
        let e = FreeGroupPoint::identity(2);
        assert_eq!(dl(&e, &e, &v).unwrap(), v);
    }

    #[test]
    fn structure_triplets_roundtrip() {
        let s = Step2Structure::from_triplets(3, 2, &[(0, 1, 0, 1.0), (1, 0, 2, -2.0)]).unwrap();
        assert_eq!(s.bracket(0, 0, 1), -1.0);
        assert_eq!(s.bracket(1, 2, 0), 2.0);
        let json = serde_json::to_string(&s).unwrap();
        let back: Step2Structure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(Step2Structure::from_triplets(2, 1, &[(0, 1, 0, 1.0), (0, 1, 0, 2.0)]).is_err());
        assert!(Step2Structure::from_triplets(2, 1, &[(0, 1, 1, 1.0)]).is_err());
        assert!(Step2Structure::from_triplets(2, 1, &[(1, 1, 0, 1.0)]).is_err());
    }

    #[test]
    fn free_structure_matches_free_product_exactly() {
        let s = Step2Structure::free(3);
        let p = pt(&[0.3, -0.7, 0.2], &[0.1, 0.4, -0.9]);
        let q = pt(&[-0.5, 0.25, 0.9], &[0.6, -0.2, 0.05]);
        let free = p.product(&q).unwrap();
        let general = s.product(&(&p).into(), &(&q).into()).unwrap();
        assert_eq!(general.a, free.x);
        assert_eq!(general.b, free.y);
    }
}
