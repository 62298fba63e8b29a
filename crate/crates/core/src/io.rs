//! JSON file formats shared by the library and the command-line tool.

use serde::{Deserialize, Serialize};

use crate::curve::{HorizontalCurve, PlanarCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::frame::Matrix;
use crate::group::{pair_count, FreeGroupPoint, GeneralGroupPoint, GeneralTangent, Step2Structure, TangentVector};
use crate::homo::{TargetCurve, TargetSamples};
use crate::lift::horizontal_lift;
use crate::segment::Segment;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Horizontal part of the derivative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
}

/// A curve given by samples, by symbolic pieces, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub schema_version: u32,
    pub r: usize,
    /// Target structure when the data lives in a general step-2 group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Step2Structure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<HorizontalCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_curve: Option<TargetCurve>,
}

impl CurveFile {
    pub fn empty(r: usize) -> Self {
        Self { schema_version: SCHEMA_VERSION, r, structure: None, samples: Vec::new(), planar: None, curve: None, target_curve: None }
    }

    /// Second-layer dimension of the data.
    pub fn m(&self) -> usize {
        self.structure.as_ref().map_or_else(|| pair_count(self.r), |s| s.m())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema version {}", self.schema_version)));
        }
        if let Some(s) = &self.structure {
            if s.r() != self.r {
                return Err(Error::RankMismatch { expected: self.r, found: s.r() });
            }
        }
        let m = self.m();
        for (k, rec) in self.samples.iter().enumerate() {
            if !rec.t.is_finite() {
                return Err(Error::NonFinite("sample time"));
            }
            if rec.x.len() != self.r {
                return Err(Error::Schema(format!("sample {k}: x has {} entries, expected {}", rec.x.len(), self.r)));
            }
            if let Some(y) = &rec.y {
                if y.len() != m {
                    return Err(Error::Schema(format!("sample {k}: y has {} entries, expected {m}", y.len())));
                }
            }
            if let Some(v) = &rec.v {
                if v.len() != self.r {
                    return Err(Error::Schema(format!("sample {k}: v has {} entries, expected {}", v.len(), self.r)));
                }
            }
            let all = rec.x.iter().chain(rec.y.iter().flatten()).chain(rec.v.iter().flatten());
            if all.into_iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample coordinates"));
            }
        }
        for (k, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonMonotoneTimes(k + 1));
            }
        }
        let (ys, vs) = (self.samples.iter().filter(|s| s.y.is_some()).count(), self.samples.iter().filter(|s| s.v.is_some()).count());
        if ys != 0 && ys != self.samples.len() {
            return Err(Error::Schema("either all samples or none carry y".into()));
        }
        if vs != 0 && vs != self.samples.len() {
            return Err(Error::Schema("either all samples or none carry v".into()));
        }
        if let Some(p) = &self.planar {
            p.validate()?;
            if p.r != self.r {
                return Err(Error::RankMismatch { expected: self.r, found: p.r });
            }
        }
        if let Some(c) = &self.curve {
            if c.r() != self.r {
                return Err(Error::RankMismatch { expected: self.r, found: c.r() });
            }
        }
        if let Some(c) = &self.target_curve {
            c.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))
    }

    fn has_vertical(&self) -> bool {
        self.samples.first().is_some_and(|s| s.y.is_some())
    }

    /// Planar curve through the samples: cubic Hermite pieces when `v` is
    /// given, straight pieces otherwise. An explicit `planar` entry wins.
    pub fn planar_curve(&self) -> Result<PlanarCurve> {
        if let Some(p) = &self.planar {
            return Ok(p.clone());
        }
        if self.samples.is_empty() {
            return Err(Error::Schema("no planar data".into()));
        }
        let s = &self.samples;
        let segments = s
            .windows(2)
            .map(|w| {
                let h = w[1].t - w[0].t;
                match (&w[0].v, &w[1].v) {
                    (Some(v0), Some(v1)) => {
                        let coeffs = (0..self.r)
                            .map(|i| {
                                let d = w[1].x[i] - w[0].x[i];
                                let c2 = (3.0 * d - (2.0 * v0[i] + v1[i]) * h) / (h * h);
                                let c3 = ((v0[i] + v1[i]) * h - 2.0 * d) / (h * h * h);
                                [0.0, v0[i], c2, c3]
                            })
                            .collect();
                        Segment::CubicPoly { coeffs, duration: h }
                    }
                    _ => Segment::LinearDrift { velocity: (0..self.r).map(|i| (w[1].x[i] - w[0].x[i]) / h).collect(), duration: h },
                }
            })
            .collect();
        let mut p = PlanarCurve::new(s[0].x.clone(), segments)?;
        p.t0 = s[0].t;
        Ok(p)
    }

    /// Samples as points of the free group. Missing vertical parts come from
    /// lifting the planar interpolant through the samples from `start_y`.
    pub fn sampled_curve(&self) -> Result<SampledCurve> {
        if self.structure.is_some() {
            return Err(Error::Schema("samples live in a target group; use target_samples".into()));
        }
        if self.samples.is_empty() {
            if let Some(c) = &self.curve {
                let times = c.knots().iter().map(|k| k.t).collect();
                return SampledCurve::from_curve(c, times);
            }
            return Err(Error::Schema("file has no samples".into()));
        }
        let times: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let points: Vec<FreeGroupPoint> = if self.has_vertical() {
            self.samples.iter().map(|s| FreeGroupPoint::new(s.x.clone(), s.y.clone().unwrap_or_default())).collect::<Result<_>>()?
        } else {
            let lifted = horizontal_lift(&self.planar_curve()?, &FreeGroupPoint::horizontal(self.samples[0].x.clone()))?;
            self.samples.iter().map(|s| FreeGroupPoint { x: s.x.clone(), y: lifted.eval(s.t).y }).collect()
        };
        let derivs = if self.samples[0].v.is_some() {
            Some(
                self.samples
                    .iter()
                    .zip(&points)
                    .map(|(s, p)| TangentVector::horizontal_at(p, s.v.clone().unwrap_or_default()))
                    .collect(),
            )
        } else {
            None
        };
        SampledCurve::new(times, points, derivs)
    }

    pub fn target_samples(&self) -> Result<TargetSamples> {
        let s = self.structure.as_ref().ok_or_else(|| Error::Schema("file has no target structure".into()))?;
        if !self.has_vertical() {
            return Err(Error::Schema("target samples need y".into()));
        }
        let times = self.samples.iter().map(|r| r.t).collect();
        let points: Vec<GeneralGroupPoint> =
            self.samples.iter().map(|r| GeneralGroupPoint { a: r.x.clone(), b: r.y.clone().unwrap_or_default() }).collect();
        let derivs = if self.samples[0].v.is_some() {
            Some(points.iter().zip(&self.samples).map(|(p, r)| s.horizontal_at(p, r.v.clone().unwrap_or_default())).collect())
        } else {
            None
        };
        Ok(TargetSamples { times, points, derivs })
    }

    /// Dense samples of a free curve with `grid` points per piece.
    pub fn from_curve(curve: &HorizontalCurve, grid: usize) -> Self {
        let samples = curve
            .dense(grid)
            .into_iter()
            .map(|(t, p, v)| SampleRecord { t, x: p.x, y: Some(p.y), v: Some(v.x) })
            .collect();
        Self { samples, curve: Some(curve.clone()), ..Self::empty(curve.r()) }
    }

    /// Dense samples of a target curve with `grid` points per piece.
    pub fn from_target_curve(curve: &TargetCurve, grid: usize) -> Self {
        let samples = dense_target(curve, grid)
            .into_iter()
            .map(|(t, p, v)| SampleRecord { t, x: p.a, y: Some(p.b), v: Some(v.a) })
            .collect();
        Self {
            structure: Some(curve.structure.clone()),
            samples,
            target_curve: Some(curve.clone()),
            ..Self::empty(curve.structure.r())
        }
    }

    /// `t, x..., y..., dx...` rows with a header.
    pub fn to_csv(&self) -> String {
        let m = self.m();
        let mut out = String::from("t");
        for i in 0..self.r {
            out.push_str(&format!(",x{i}"));
        }
        for k in 0..m {
            out.push_str(&format!(",y{k}"));
        }
        for i in 0..self.r {
            out.push_str(&format!(",dx{i}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.t.to_string());
            for v in &s.x {
                out.push_str(&format!(",{v}"));
            }
            for k in 0..m {
                match &s.y {
                    Some(y) => out.push_str(&format!(",{}", y[k])),
                    None => out.push(','),
                }
            }
            for i in 0..self.r {
                match &s.v {
                    Some(v) => out.push_str(&format!(",{}", v[i])),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn dense_target(curve: &TargetCurve, grid: usize) -> Vec<(f64, GeneralGroupPoint, GeneralTangent)> {
    let grid = grid.max(1);
    let first = &curve.knots[0];
    let mut out = vec![(first.t, first.point.clone(), first.velocity.clone())];
    for (k, piece) in curve.pieces.iter().enumerate() {
        for g in 1..grid {
            let t = piece.t0 + (piece.t1 - piece.t0) * g as f64 / grid as f64;
            out.push((t, curve.eval_on_piece(k, t), curve.velocity_on_piece(k, t)));
        }
        let knot = &curve.knots[k + 1];
        out.push((knot.t, knot.point.clone(), knot.velocity.clone()));
    }
    out
}

/// A target structure with an optional generator map from the free group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    #[serde(flatten)]
    pub structure: Step2Structure,
    /// `r_target x r_source` generator map; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Matrix>,
}

impl StructureFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// A tangent given by its horizontal part and, optionally, its vertical part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentRecord {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

impl TangentRecord {
    pub fn at(&self, p: &FreeGroupPoint) -> Result<TangentVector> {
        match &self.y {
            None => {
                if self.x.len() != p.rank() {
                    return Err(Error::RankMismatch { expected: p.rank(), found: self.x.len() });
                }
                Ok(TangentVector::horizontal_at(p, self.x.clone()))
            }
            Some(y) => TangentVector::new(self.x.clone(), y.clone()),
        }
    }
}

/// Boundary data for a single interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub schema_version: u32,
    pub a: f64,
    pub b: f64,
    pub ga: FreeGroupPoint,
    pub gb: FreeGroupPoint,
    pub va: TangentRecord,
    pub vb: TangentRecord,
    /// Enlarges the data-derived bound when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl BoundaryFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema version {}", f.schema_version)));
        }
        if f.ga.rank() != f.gb.rank() {
            return Err(Error::RankMismatch { expected: f.ga.rank(), found: f.gb.rank() });
        }
        Ok(f)
    }
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub tol: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: ConfigEcho,
    pub report: T,
}

impl<T: Serialize> ReportFile<T> {
    pub fn new(command: &str, config: ConfigEcho, report: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            report,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))
    }
}
