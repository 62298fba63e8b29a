//! Closed-form curve segments in `R^r`.
//!
//! Every segment is parameterized by a local time `s` in `[0, duration]` and
//! knows its position, velocity and all pairwise signed areas
//! `S_kl(s) = 1/2 int_0^s (p_k p_l' - p_l p_k')`, `k > l`, in closed form.
//! Indices are zero-based; coordinate `0` is the drift direction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{pair_count, pair_index};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// `p(s) = 0`.
    Constant { r: usize, duration: f64 },
    /// `p(s) = u s`.
    LinearDrift { velocity: Vec<f64>, duration: f64 },
    /// `p_k(s) = c_k0 + c_k1 s + c_k2 s^2 + c_k3 s^3`.
    CubicPoly { coeffs: Vec<[f64; 4]>, duration: f64 },
    /// Drift at speed `l` along `e_0` plus a bump `lambda h eps (1 - cos(2 pi n s / h))`
    /// in coordinate `coord`, over one subinterval of length `h / n`.
    Case1Loop { r: usize, coord: usize, l: f64, lambda: f64, eps: f64, h: f64, n: usize },
    /// Circle of radius `lambda` in the `(0, coord)` plane, traversed by the
    /// angle `theta(s) = sum_k theta_k s^k`. `orientation` is `+1` or `-1`.
    Case2Circle { r: usize, coord: usize, lambda: f64, theta: [f64; 4], orientation: f64, duration: f64 },
    /// Drift along `e_0` with speed `l` at both ends and displacement `2 l duration`.
    Case2Line { r: usize, l: f64, duration: f64 },
    /// Drift at speed `l` plus the loop `(zeta cos, zeta sin)` in the
    /// `(i, j)` plane with `zeta = lambda h eps (1 - cos(4 pi n s / h))`.
    /// `swapped` exchanges the two component formulas.
    Case3Loop { r: usize, i: usize, j: usize, l: f64, lambda: f64, eps: f64, h: f64, n: usize, swapped: bool },
}

impl Segment {
    pub fn rank(&self) -> usize {
        match self {
            Segment::LinearDrift { velocity, .. } => velocity.len(),
            Segment::CubicPoly { coeffs, .. } => coeffs.len(),
            Segment::Constant { r, .. }
            | Segment::Case1Loop { r, .. }
            | Segment::Case2Circle { r, .. }
            | Segment::Case2Line { r, .. }
            | Segment::Case3Loop { r, .. } => *r,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Segment::Constant { duration, .. }
            | Segment::LinearDrift { duration, .. }
            | Segment::CubicPoly { duration, .. }
            | Segment::Case2Circle { duration, .. }
            | Segment::Case2Line { duration, .. } => *duration,
            Segment::Case1Loop { h, n, .. } | Segment::Case3Loop { h, n, .. } => h / *n as f64,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Segment::Constant { .. } => "constant",
            Segment::LinearDrift { .. } => "linear_drift",
            Segment::CubicPoly { .. } => "cubic_poly",
            Segment::Case1Loop { .. } => "case1_loop",
            Segment::Case2Circle { .. } => "case2_circle",
            Segment::Case2Line { .. } => "case2_line",
            Segment::Case3Loop { .. } => "case3_loop",
        }
    }

    /// Checks shapes, finiteness and index ranges.
    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        if r < 1 {
            return Err(Error::Shape("segment rank must be positive".into()));
        }
        let d = self.duration();
        if !d.is_finite() {
            return Err(Error::NonFinite("segment duration"));
        }
        let allow_zero = matches!(self, Segment::Constant { .. });
        if d < 0.0 || (d == 0.0 && !allow_zero) {
            return Err(Error::Shape(format!("segment duration {d} must be positive")));
        }
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let ok = match self {
            Segment::Constant { .. } => true,
            Segment::LinearDrift { velocity, .. } => finite(velocity),
            Segment::CubicPoly { coeffs, .. } => coeffs.iter().all(|c| finite(c)),
            Segment::Case1Loop { coord, l, lambda, eps, h, n, .. } => {
                if *coord == 0 || *coord >= r || *n == 0 {
                    return Err(Error::IndexOutOfRange { index: *coord, max: r - 1 });
                }
                finite(&[*l, *lambda, *eps, *h])
            }
            Segment::Case2Circle { coord, lambda, theta, orientation, .. } => {
                if *coord == 0 || *coord >= r {
                    return Err(Error::IndexOutOfRange { index: *coord, max: r - 1 });
                }
                finite(theta) && finite(&[*lambda, *orientation])
            }
            Segment::Case2Line { l, .. } => l.is_finite(),
            Segment::Case3Loop { i, j, l, lambda, eps, h, n, .. } => {
                if !(*i > *j && *j >= 1 && *i < r) || *n == 0 {
                    return Err(Error::IndexOutOfRange { index: *i, max: r - 1 });
                }
                finite(&[*l, *lambda, *eps, *h])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite("segment parameters"))
        }
    }

    pub fn position(&self, s: f64) -> Vec<f64> {
        let r = self.rank();
        let mut p = vec![0.0; r];
        match self {
            Segment::Constant { .. } => {}
            Segment::LinearDrift { velocity, .. } => {
                for (pk, u) in p.iter_mut().zip(velocity) {
                    *pk = u * s;
                }
            }
            Segment::CubicPoly { coeffs, .. } => {
                for (pk, c) in p.iter_mut().zip(coeffs) {
                    *pk = poly(c, s);
                }
            }
            Segment::Case1Loop { coord, l, .. } => {
                let (amp, w) = self.loop_params();
                p[0] = l * s;
                p[*coord] = amp * (1.0 - (w * s).cos());
            }
            Segment::Case2Circle { coord, lambda, theta, orientation, .. } => {
                let th = poly(theta, s);
                p[0] = lambda * th.sin();
                p[*coord] = orientation * lambda * (th.cos() - 1.0);
            }
            Segment::Case2Line { l, duration, .. } => {
                p[0] = line_profile(*l, *duration, s).0;
            }
            Segment::Case3Loop { i, j, l, swapped, .. } => {
                let (amp, w) = self.loop_params();
                let zeta = amp * (1.0 - (2.0 * w * s).cos());
                let (c, sn) = ((w * s).cos(), (w * s).sin());
                p[0] = l * s;
                let (pi_, pj) = if *swapped { (zeta * sn, zeta * c) } else { (zeta * c, zeta * sn) };
                p[*i] = pi_;
                p[*j] = pj;
            }
        }
        p
    }

    pub fn velocity(&self, s: f64) -> Vec<f64> {
        let r = self.rank();
        let mut v = vec![0.0; r];
        match self {
            Segment::Constant { .. } => {}
            Segment::LinearDrift { velocity, .. } => v.copy_from_slice(velocity),
            Segment::CubicPoly { coeffs, .. } => {
                for (vk, c) in v.iter_mut().zip(coeffs) {
                    *vk = poly_deriv(c, s);
                }
            }
            Segment::Case1Loop { coord, l, .. } => {
                let (amp, w) = self.loop_params();
                v[0] = *l;
                v[*coord] = amp * w * (w * s).sin();
            }
            Segment::Case2Circle { coord, lambda, theta, orientation, .. } => {
                let th = poly(theta, s);
                let dth = poly_deriv(theta, s);
                v[0] = lambda * th.cos() * dth;
                v[*coord] = -orientation * lambda * th.sin() * dth;
            }
            Segment::Case2Line { l, duration, .. } => {
                v[0] = line_profile(*l, *duration, s).1;
            }
            Segment::Case3Loop { i, j, l, swapped, .. } => {
                let (amp, w) = self.loop_params();
                let zeta = amp * (1.0 - (2.0 * w * s).cos());
                let dzeta = 2.0 * w * amp * (2.0 * w * s).sin();
                let (c, sn) = ((w * s).cos(), (w * s).sin());
                let dc = dzeta * c - zeta * w * sn;
                let ds = dzeta * sn + zeta * w * c;
                v[0] = *l;
                let (vi, vj) = if *swapped { (ds, dc) } else { (dc, ds) };
                v[*i] = vi;
                v[*j] = vj;
            }
        }
        v
    }

    /// All pairwise signed areas `S_kl(s)` in storage order.
    pub fn areas(&self, s: f64) -> Vec<f64> {
        let r = self.rank();
        let mut a = vec![0.0; pair_count(r)];
        match self {
            Segment::Constant { .. } | Segment::LinearDrift { .. } | Segment::Case2Line { .. } => {}
            Segment::CubicPoly { coeffs, .. } => {
                for k in 1..r {
                    for l in 0..k {
                        a[pair_index(k, l)] = cubic_area(&coeffs[k], &coeffs[l], s);
                    }
                }
            }
            Segment::Case1Loop { coord, l, .. } => {
                let (amp, w) = self.loop_params();
                let p = amp * (1.0 - (w * s).cos());
                let int_p = amp * (s - (w * s).sin() / w);
                a[pair_index(*coord, 0)] = 0.5 * (2.0 * l * int_p - l * s * p);
            }
            Segment::Case2Circle { coord, lambda, theta, orientation, .. } => {
                let th = poly(theta, s);
                a[pair_index(*coord, 0)] = orientation * 0.5 * lambda * lambda * (th - th.sin());
            }
            Segment::Case3Loop { i, j, l, swapped, .. } => {
                let (amp, w) = self.loop_params();
                let ws = w * s;
                let zeta = amp * (1.0 - (2.0 * ws).cos());
                let int_zeta2 = amp * amp * (1.5 * s - (2.0 * ws).sin() / w + (4.0 * ws).sin() / (8.0 * w));
                let int_zc = amp * (ws.sin() / (2.0 * w) - (3.0 * ws).sin() / (6.0 * w));
                let int_zs = amp * (-1.5 * ws.cos() / w + (3.0 * ws).cos() / (6.0 * w) + 4.0 / (3.0 * w));
                let (pc, ps) = (zeta * ws.cos(), zeta * ws.sin());
                let (p_i, int_i, p_j, int_j) =
                    if *swapped { (ps, int_zs, pc, int_zc) } else { (pc, int_zc, ps, int_zs) };
                let sign = if *swapped { -1.0 } else { 1.0 };
                a[pair_index(*i, *j)] = sign * 0.5 * w * int_zeta2;
                a[pair_index(*i, 0)] = 0.5 * (2.0 * l * int_i - l * s * p_i);
                a[pair_index(*j, 0)] = 0.5 * (2.0 * l * int_j - l * s * p_j);
            }
        }
        a
    }

    /// `(lambda h eps, 2 pi n / h)` for the loop kinds.
    fn loop_params(&self) -> (f64, f64) {
        match self {
            Segment::Case1Loop { lambda, eps, h, n, .. } | Segment::Case3Loop { lambda, eps, h, n, .. } => {
                (lambda * h * eps, 2.0 * PI * *n as f64 / h)
            }
            _ => unreachable!("loop_params on a non-loop segment"),
        }
    }
}

#[inline]
fn poly(c: &[f64; 4], s: f64) -> f64 {
    c[0] + s * (c[1] + s * (c[2] + s * c[3]))
}

#[inline]
fn poly_deriv(c: &[f64; 4], s: f64) -> f64 {
    c[1] + s * (2.0 * c[2] + s * 3.0 * c[3])
}

/// Position and velocity of `l s + 3 l s^2 / T - 2 l s^3 / T^2`.
fn line_profile(l: f64, t: f64, s: f64) -> (f64, f64) {
    let u = s / t;
    (l * s * (1.0 + 3.0 * u - 2.0 * u * u), l * (1.0 + 6.0 * u - 6.0 * u * u))
}

/// `1/2 int_0^s (a b' - b a')` for cubic polynomials `a`, `b`.
fn cubic_area(a: &[f64; 4], b: &[f64; 4], s: f64) -> f64 {
    // Integrand coefficient of s^d, d = n + m - 1, from a_n b_m m - b_n a_m m.
    let mut integrand = [0.0; 6];
    for n in 0..4 {
        for m in 1..4 {
            integrand[n + m - 1] += m as f64 * (a[n] * b[m] - b[n] * a[m]);
        }
    }
    let mut total = 0.0;
    let mut pow = s;
    for (d, c) in integrand.iter().enumerate() {
        total += c * pow / (d + 1) as f64;
        pow *= s;
    }
    0.5 * total
}

/// Hermite cubic for the Case-2 angle: `theta(0) = 0`, `theta(t) = 2 pi`,
/// `theta'(0) = theta'(t) = m`.
pub fn hermite_angle(m: f64, t: f64) -> [f64; 4] {
    let a2 = (6.0 * PI / t - 3.0 * m) / t;
    let a3 = (-4.0 * PI / t + 2.0 * m) / (t * t);
    [0.0, m, a2, a3]
}
