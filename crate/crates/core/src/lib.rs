//! Step-2 Carnot groups, horizontal curves, a C^1 horizontal interpolation
//! kernel, and Lusin-type C^1 approximation of sampled horizontal curves in
//! free and general step-2 groups.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod frame;
pub mod group;
pub mod homo;
pub mod interpolate;
pub mod io;
pub mod lift;
pub mod lusin;
pub mod quadrature;
pub mod segment;

pub use curve::{HorizontalCurve, Knot, Piece, PlanarCurve, SampledCurve};
pub use error::{Error, Result};
pub use frame::{denormalize, normalize_gap, BoundaryData, FrameAutomorphism, NormalizedGap};
pub use group::{
    dl, general_product, horizontal_field, inverse, is_horizontal, left_translate, product, FreeGroupPoint,
    GeneralGroupPoint, GeneralTangent, Step2Structure, TangentVector,
};
pub use homo::{
    approximate_in_target, build_homomorphism, lift_in_target, pushforward_curve, pushforward_point,
    pushforward_tangent, Step2Homomorphism, TargetCurve, TargetSamples,
};
pub use interpolate::{alpha_curve, beta_curve, interpolate_boundary, interpolate_gap, kernel, InterpolateConfig, InterpolationResult};
pub use lift::{check_horizontal, estimate_derivatives, horizontal_lift, is_horizontal_curve, signed_area};
pub use lusin::{approximate, select_good_set, verify, ApproximationReport, GapReport, GoodSetConfig, PipelineOptions};
pub use segment::Segment;
