#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::Path;

use carnot_lusin::frame::BOUNDARY_HORIZONTAL_TOL;
use carnot_lusin::homo::{check_target_horizontal, TargetReport};
use carnot_lusin::interpolate::CaseRecord;
use carnot_lusin::io::{BoundaryFile, ConfigEcho, CurveFile, ReportFile, StructureFile};
use carnot_lusin::lift::{CheckConfig, HorizontalityReport};
use carnot_lusin::lusin::{approximate_with, verify_with, STITCH_TOL};
use carnot_lusin::{
    approximate_in_target, build_homomorphism, check_horizontal, horizontal_lift, interpolate_boundary,
    pushforward_curve, ApproximationReport, Error, FreeGroupPoint, GoodSetConfig, HorizontalCurve, InterpolateConfig,
    PipelineOptions, TargetCurve,
};
use serde::Serialize;

use crate::{OutputArgs, SelectArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_QUALITY: u8 = 4;

/// Largest boundary mismatch accepted from `interp`.
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Quadrature { .. }
            | Error::NotOrthogonal(_)
            | Error::Infeasible(_)
            | Error::WrongCase(_)
            | Error::AlreadyFixed(..) => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

pub struct Status {
    pub code: u8,
    pub message: Option<String>,
}

impl Status {
    fn new(code: u8, message: String) -> Self {
        Self { code, message: Some(message) }
    }
}

type Outcome = std::result::Result<Status, Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn read_curve_file(path: &Path) -> std::result::Result<CurveFile, Failure> {
    Ok(CurveFile::from_json(&read(path)?)?)
}

fn emit_report<T: Serialize>(
    path: Option<&Path>,
    command: &str,
    config: ConfigEcho,
    report: T,
) -> std::result::Result<(), Failure> {
    let text = ReportFile::new(command, config, report).to_json()?;
    match path {
        Some(p) => write(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_curve(file: &CurveFile, out: &OutputArgs) -> std::result::Result<(), Failure> {
    write(&out.output, &file.to_json()?)?;
    if let Some(csv) = &out.csv {
        write(csv, &file.to_csv())?;
    }
    Ok(())
}

fn check_config(tol: f64) -> CheckConfig {
    CheckConfig { tol, grid: PipelineOptions::default().check_grid, ..CheckConfig::default() }
}

fn good_set_config(s: &SelectArgs) -> GoodSetConfig {
    GoodSetConfig { eta: s.eta, delta: s.delta, epsilon: s.epsilon }
}

fn echo(select: Option<&SelectArgs>, tol: f64, grid: usize) -> ConfigEcho {
    ConfigEcho {
        epsilon: select.map(|s| s.epsilon),
        eta: select.map(|s| s.eta),
        delta: select.map(|s| s.delta),
        tol,
        grid,
    }
}

fn validate_tol(tol: f64) -> std::result::Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::input(format!("tolerance must be positive, got {tol}")))
    }
}

#[derive(Serialize)]
struct LiftReport {
    start: FreeGroupPoint,
    end: FreeGroupPoint,
    pieces: usize,
    horizontality: HorizontalityReport,
}

pub fn lift(input: &Path, start_y: Option<Vec<f64>>, out: &OutputArgs) -> Outcome {
    validate_tol(out.tol)?;
    let file = read_curve_file(input)?;
    if file.structure.is_some() {
        return Err(Failure::input("lift works in the free group; drop the structure entry"));
    }
    let planar = file.planar_curve()?;
    let r = planar.r;
    let y = start_y.unwrap_or_else(|| vec![0.0; r * (r - 1) / 2]);
    let start = FreeGroupPoint::new(planar.start.clone(), y)?;
    let curve = horizontal_lift(&planar, &start)?;
    let horizontality = check_horizontal(&curve, check_config(out.tol));
    let ok = horizontality.horizontal;
    let report = LiftReport { start, end: curve.end().clone(), pieces: curve.pieces().len(), horizontality };
    let summary = format!("lift: end vertical {:?}, horizontal: {ok}", report.end.y);
    emit_curve(&CurveFile::from_curve(&curve, out.grid), out)?;
    emit_report(out.report.as_deref(), "lift", echo(None, out.tol, out.grid), report)?;
    Ok(Status::new(if ok { EXIT_OK } else { EXIT_NUMERIC }, summary))
}

fn approximation_status(report: &ApproximationReport, epsilon: f64) -> u8 {
    if !report.feasible || !(report.disagreement_measure <= epsilon) {
        EXIT_QUALITY
    } else if !report.success {
        EXIT_NUMERIC
    } else {
        EXIT_OK
    }
}

pub fn approximate(input: &Path, select: &SelectArgs, structure: Option<&Path>, out: &OutputArgs) -> Outcome {
    validate_tol(out.tol)?;
    let mut file = read_curve_file(input)?;
    let cfg = good_set_config(select);
    let opts = PipelineOptions { tol: out.tol, ..PipelineOptions::default() };
    let config = echo(Some(select), out.tol, out.grid);
    let map = match structure {
        Some(p) => Some(StructureFile::from_json(&read(p)?)?),
        None => file.structure.clone().map(|structure| StructureFile { structure, h: None }),
    };
    let Some(map) = map else {
        let s = file.sampled_curve()?;
        let (gamma, report) = approximate_with(&s, &cfg, &opts)?;
        let code = approximation_status(&report, cfg.epsilon);
        let summary = format!(
            "approximate: {} gaps, disagreement {:e}, max derivative jump {:e}",
            report.gaps.len(),
            report.disagreement_measure,
            report.max_derivative_jump
        );
        // best-effort output is written whatever the status
        emit_curve(&CurveFile::from_curve(&gamma, out.grid), out)?;
        emit_report(out.report.as_deref(), "approximate", config, report)?;
        return Ok(Status::new(code, summary));
    };
    if map.structure.r() != file.r {
        return Err(Failure::input(format!("structure has rank {}, samples have rank {}", map.structure.r(), file.r)));
    }
    file.structure = Some(map.structure.clone());
    file.validate()?;
    let source_r = map.h.as_ref().and_then(|h| h.first().map(Vec::len)).unwrap_or(file.r);
    let f = build_homomorphism(source_r, &map.structure, map.h)?;
    let (gamma, report) = approximate_in_target(&file.target_samples()?, &f, &cfg, &opts)?;
    let mut code = approximation_status(&report.free, cfg.epsilon);
    if code == EXIT_OK && !report.success {
        code = EXIT_NUMERIC;
    }
    let summary = format!(
        "approximate: {} gaps, disagreement {:e}, max derivative jump {:e}",
        report.free.gaps.len(),
        report.free.disagreement_measure,
        report.max_derivative_jump
    );
    emit_curve(&CurveFile::from_target_curve(&gamma, out.grid), out)?;
    emit_report::<TargetReport>(out.report.as_deref(), "approximate", config, report)?;
    Ok(Status::new(code, summary))
}

#[derive(Serialize)]
struct InterpReport {
    a: f64,
    b: f64,
    eps: f64,
    measured_dev: f64,
    c_ratio: f64,
    boundary_residual: f64,
    interference: f64,
    cases: Vec<CaseRecord>,
    horizontality: Option<HorizontalityReport>,
}

pub fn interp(boundary: &Path, out: &OutputArgs) -> Outcome {
    validate_tol(out.tol)?;
    let bf = BoundaryFile::from_json(&read(boundary)?)?;
    let va = bf.va.at(&bf.ga)?;
    let vb = bf.vb.at(&bf.gb)?;
    let cfg = InterpolateConfig {
        eps: bf.eps,
        check: Some(CheckConfig { grid: 32, ..check_config(out.tol) }),
        horizontal_tol: BOUNDARY_HORIZONTAL_TOL,
        ..InterpolateConfig::default()
    };
    let res = interpolate_boundary(bf.a, bf.b, &bf.ga, &va, &bf.gb, &vb, &cfg)?;
    let horizontal = res.horizontality.as_ref().is_none_or(|h| h.horizontal);
    let ok = horizontal && res.boundary_residual <= BOUNDARY_TOL;
    let report = InterpReport {
        a: bf.a,
        b: bf.b,
        eps: res.eps(),
        measured_dev: res.measured_dev,
        c_ratio: res.c_ratio,
        boundary_residual: res.boundary_residual,
        interference: res.interference,
        cases: res.cases.clone(),
        horizontality: res.horizontality.clone(),
    };
    let summary =
        format!("interp: eps {:e}, boundary residual {:e}, horizontal: {horizontal}", report.eps, report.boundary_residual);
    emit_curve(&CurveFile::from_curve(&res.psi, out.grid), out)?;
    emit_report(out.report.as_deref(), "interp", echo(None, out.tol, out.grid), report)?;
    Ok(Status::new(if ok { EXIT_OK } else { EXIT_NUMERIC }, summary))
}

#[derive(Serialize)]
struct CurveCheck {
    pieces: usize,
    max_derivative_jump: f64,
    max_value_jump: f64,
    horizontality_residual: f64,
    success: bool,
}

fn check_free(curve: &HorizontalCurve, tol: f64) -> CurveCheck {
    let h = check_horizontal(curve, check_config(tol));
    let jump = curve.max_knot_velocity_jump().0;
    let value_jump = curve.max_knot_value_jump();
    CurveCheck {
        pieces: curve.pieces().len(),
        max_derivative_jump: jump,
        max_value_jump: value_jump,
        horizontality_residual: h.max_vertical_residual.max(h.max_tangent_residual),
        success: h.horizontal && jump <= STITCH_TOL && value_jump <= STITCH_TOL,
    }
}

fn check_target(curve: &TargetCurve, tol: f64) -> CurveCheck {
    let residual = check_target_horizontal(curve, check_config(tol));
    let jump = curve.max_knot_velocity_jump();
    let value_jump = curve.max_knot_value_jump();
    CurveCheck {
        pieces: curve.pieces.len(),
        max_derivative_jump: jump,
        max_value_jump: value_jump,
        horizontality_residual: residual,
        success: residual <= tol && jump <= STITCH_TOL && value_jump <= STITCH_TOL,
    }
}

pub fn verify(input: &Path, samples: Option<&Path>, select: &SelectArgs, tol: f64, report: Option<&Path>) -> Outcome {
    validate_tol(tol)?;
    let file = read_curve_file(input)?;
    match (&file.curve, &file.target_curve, samples) {
        (Some(curve), _, Some(sp)) => {
            let s = read_curve_file(sp)?.sampled_curve()?;
            let cfg = good_set_config(select);
            let opts = PipelineOptions { tol, ..PipelineOptions::default() };
            let rep = verify_with(curve, &s, &cfg, &opts)?;
            let code = approximation_status(&rep, cfg.epsilon);
            let summary = format!(
                "verify: {} sample mismatches, disagreement {:e}, max derivative jump {:e}",
                rep.sample_mismatches, rep.disagreement_measure, rep.max_derivative_jump
            );
            emit_report(report, "verify", echo(Some(select), tol, 0), rep)?;
            Ok(Status::new(code, summary))
        }
        (None, Some(_), Some(_)) => Err(Failure::input("sample agreement is only checked for free curves")),
        (Some(_), _, None) | (None, Some(_), None) => {
            let check = match (&file.curve, &file.target_curve) {
                (Some(c), _) => check_free(c, tol),
                (None, Some(c)) => check_target(c, tol),
                (None, None) => unreachable!(),
            };
            let summary =
                format!("verify: max derivative jump {:e}, horizontality residual {:e}", check.max_derivative_jump, check.horizontality_residual);
            let code = if check.success { EXIT_OK } else { EXIT_NUMERIC };
            emit_report(report, "verify", echo(None, tol, 0), check)?;
            Ok(Status::new(code, summary))
        }
        (None, None, _) => Err(Failure::input("file has no symbolic curve to verify")),
    }
}

pub fn pushforward(input: &Path, structure: &Path, out: &OutputArgs) -> Outcome {
    validate_tol(out.tol)?;
    let file = read_curve_file(input)?;
    let curve = file.curve.as_ref().ok_or_else(|| Failure::input("pushforward needs a symbolic free curve"))?;
    let map = StructureFile::from_json(&read(structure)?)?;
    let f = build_homomorphism(curve.r(), &map.structure, map.h)?;
    let pushed = pushforward_curve(&f, curve)?;
    let check = check_target(&pushed, out.tol);
    let code = if check.success { EXIT_OK } else { EXIT_NUMERIC };
    let summary = format!("pushforward: {} pieces, horizontality residual {:e}", check.pieces, check.horizontality_residual);
    emit_curve(&CurveFile::from_target_curve(&pushed, out.grid), out)?;
    emit_report(out.report.as_deref(), "pushforward", echo(None, out.tol, out.grid), check)?;
    Ok(Status::new(code, summary))
}
