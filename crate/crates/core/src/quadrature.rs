//! Adaptive Simpson quadrature, scalar and vector valued.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: u32 = 40;
/// Refinement stops once the Richardson difference is at rounding level
/// relative to `(b - a) max |f|` on the subinterval.
const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Absolute error target for the whole interval.
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_depth: DEFAULT_MAX_DEPTH }
    }
}

/// `int_a^b f` with the default depth limit.
pub fn quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(f, a, b, QuadConfig { tol, ..QuadConfig::default() })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<f64> {
    if !(cfg.tol > 0.0) {
        return Err(Error::Quadrature { tol: cfg.tol, estimate: f64::NAN });
    }
    if a == b {
        return Ok(0.0);
    }
    let g = |t: f64| [f(t)];
    let (value, failure) = run(&g, a, b, cfg);
    match failure {
        Some(estimate) => Err(Error::Quadrature { tol: cfg.tol, estimate }),
        None => Ok(value[0]),
    }
}

/// Vector-valued integral; the error test uses the max norm over components.
pub fn integrate_vec<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    cfg: QuadConfig,
) -> Result<[f64; N]> {
    if !(cfg.tol > 0.0) {
        return Err(Error::Quadrature { tol: cfg.tol, estimate: f64::NAN });
    }
    if a == b {
        return Ok([0.0; N]);
    }
    let (value, failure) = run(&f, a, b, cfg);
    match failure {
        Some(estimate) => Err(Error::Quadrature { tol: cfg.tol, estimate }),
        None => Ok(value),
    }
}

/// Dynamically sized variant of [`integrate_vec`].
pub fn integrate_dyn<F: Fn(f64) -> Vec<f64>>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<Vec<f64>> {
    let fa = f(a);
    if a == b {
        return Ok(vec![0.0; fa.len()]);
    }
    let mut q = DynQuad { f: &f, max_depth: cfg.max_depth, worst: None };
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_dyn(a, b, &fa, &fm, &fb);
    let value = q.recurse(a, b, &fa, &fm, &fb, &whole, cfg.tol, 0);
    match q.worst {
        Some(estimate) => Err(Error::Quadrature { tol: cfg.tol, estimate }),
        None => Ok(value),
    }
}

fn simpson<const N: usize>(a: f64, b: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    let w = (b - a) / 6.0;
    std::array::from_fn(|k| w * (fa[k] + 4.0 * fm[k] + fb[k]))
}

fn run<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64, cfg: QuadConfig) -> ([f64; N], Option<f64>) {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, &fa, &fm, &fb);
    let mut worst = None;
    let value = recurse(f, a, b, &fa, &fm, &fb, &whole, cfg.tol, 0, cfg.max_depth, &mut worst);
    (value, worst)
}

#[allow(clippy::too_many_arguments)]
fn recurse<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    a: f64,
    b: f64,
    fa: &[f64; N],
    fm: &[f64; N],
    fb: &[f64; N],
    whole: &[f64; N],
    tol: f64,
    depth: u32,
    max_depth: u32,
    worst: &mut Option<f64>,
) -> [f64; N] {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, &flm, fm);
    let right = simpson(m, b, fm, &frm, fb);
    let err = (0..N).fold(0.0_f64, |e, k| e.max((left[k] + right[k] - whole[k]).abs()));
    let scale = (b - a) * (0..N).fold(0.0_f64, |e, k| e.max(fa[k].abs()).max(fm[k].abs()).max(fb[k].abs()).max(flm[k].abs()).max(frm[k].abs()));
    if err <= 15.0 * tol || err <= NOISE_FLOOR * scale {
        return std::array::from_fn(|k| {
            let delta = left[k] + right[k] - whole[k];
            left[k] + right[k] + delta / 15.0
        });
    }
    if depth >= max_depth || m <= a || m >= b {
        let est = err / 15.0;
        *worst = Some(worst.map_or(est, |w: f64| w.max(est)));
        return std::array::from_fn(|k| left[k] + right[k]);
    }
    let l = recurse(f, a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1, max_depth, worst);
    let r = recurse(f, m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1, max_depth, worst);
    std::array::from_fn(|k| l[k] + r[k])
}

fn simpson_dyn(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let w = (b - a) / 6.0;
    (0..fa.len()).map(|k| w * (fa[k] + 4.0 * fm[k] + fb[k])).collect()
}

struct DynQuad<'a, F> {
    f: &'a F,
    max_depth: u32,
    worst: Option<f64>,
}

impl<F: Fn(f64) -> Vec<f64>> DynQuad<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: &[f64],
        fm: &[f64],
        fb: &[f64],
        whole: &[f64],
        tol: f64,
        depth: u32,
    ) -> Vec<f64> {
        let m = 0.5 * (a + b);
        let flm = (self.f)(0.5 * (a + m));
        let frm = (self.f)(0.5 * (m + b));
        let left = simpson_dyn(a, m, fa, &flm, fm);
        let right = simpson_dyn(m, b, fm, &frm, fb);
        let err = (0..fa.len()).fold(0.0_f64, |e, k| e.max((left[k] + right[k] - whole[k]).abs()));
        let scale = (b - a)
            * (0..fa.len()).fold(0.0_f64, |e, k| e.max(fa[k].abs()).max(fm[k].abs()).max(fb[k].abs()).max(flm[k].abs()).max(frm[k].abs()));
        if err <= 15.0 * tol || err <= NOISE_FLOOR * scale {
            return (0..fa.len())
                .map(|k| {
                    let delta = left[k] + right[k] - whole[k];
                    left[k] + right[k] + delta / 15.0
                })
                .collect();
        }
        if depth >= self.max_depth || m <= a || m >= b {
            let est = err / 15.0;
            self.worst = Some(self.worst.map_or(est, |w| w.max(est)));
            return (0..fa.len()).map(|k| left[k] + right[k]).collect();
        }
        let l = self.recurse(a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1);
        let r = self.recurse(m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1);
        l.iter().zip(r).map(|(u, v)| u + v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_integrand() {
        assert!((quadrature(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case_three_constant() {
        let i = quadrature(|s| (1.0 - (2.0 * s).cos()).powi(2), 0.0, 2.0 * PI, 1e-12).unwrap();
        assert!((i - 3.0 * PI).abs() <= 1e-10, "{i}");
    }

    #[test]
    fn sine_over_period() {
        assert!(quadrature(f64::sin, 0.0, 2.0 * PI, 1e-13).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn vector_and_dyn_agree() {
        let cfg = QuadConfig { tol: 1e-12, max_depth: 40 };
        let v = integrate_vec(|t| [t.exp(), t.cos()], 0.0, 1.0, cfg).unwrap();
        let d = integrate_dyn(|t| vec![t.exp(), t.cos()], 0.0, 1.0, cfg).unwrap();
        assert!((v[0] - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((v[1] - 1f64.sin()).abs() < 1e-12);
        assert!((v[0] - d[0]).abs() < 1e-15 && (v[1] - d[1]).abs() < 1e-15);
    }

    #[test]
    fn depth_exhaustion_is_reported() {
        let cfg = QuadConfig { tol: 1e-14, max_depth: 3 };
        let err = integrate(|t: f64| (50.0 * t).sin(), 0.0, 10.0, cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        assert!(quadrature(|t| t, 0.0, 1.0, 0.0).is_err());
    }
}
