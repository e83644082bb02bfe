//! Domain types shared by every engine, plus validation of the standing
//! assumptions: positive rates, nondegenerate diffusivity, a target with
//! interior, initial support disjoint from the target, and a connected
//! obstacle-free route between them.
//!
//! All types are plain immutable data; after [`validate_problem`] accepts a
//! spec it can be shared freely across worker threads.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

/// Maximum spatial dimension supported by the fixed-size point type.
pub const MAX_DIM: usize = 3;

/// A point, padded to three components; entries past the problem dimension
/// are zero and ignored.
pub type Point = [f64; MAX_DIM];

pub(crate) fn to_point(v: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    for (i, x) in v.iter().take(MAX_DIM).enumerate() {
        p[i] = *x;
    }
    p
}

/// Gamma-distributed inactivation clock: rate λ > 0, shape β > 0.
///
/// β = 1 is the exponential clock; survival and density evaluation live in
/// [`crate::analytic::gamma_survival`] / [`crate::analytic::gamma_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InactivationLaw {
    rate: f64,
    shape: f64,
}

impl InactivationLaw {
    pub fn new(rate: f64, shape: f64) -> Result<Self, ModelError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(ModelError::NonpositiveRate(rate));
        }
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(ModelError::NonpositiveShape(shape));
        }
        Ok(Self { rate, shape })
    }

    /// Exponential clock (shape 1).
    pub fn exponential(rate: f64) -> Result<Self, ModelError> {
        Self::new(rate, 1.0)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

/// Target reactivity κ (length/time). `Perfect` is κ = ∞: absorption on first
/// contact. Kept as an explicit variant so the perfectly-absorbing branches
/// never go through a large-float approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reactivity {
    Partial(f64),
    Perfect,
}

impl Reactivity {
    pub fn is_perfect(&self) -> bool {
        matches!(self, Reactivity::Perfect)
    }

    /// Finite value, or None for `Perfect`.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Reactivity::Partial(k) => Some(*k),
            Reactivity::Perfect => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Reactivity::Partial(k) => *k > 0.0 && k.is_finite(),
            Reactivity::Perfect => true,
        }
    }
}

impl fmt::Display for Reactivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reactivity::Partial(k) => write!(f, "{k}"),
            Reactivity::Perfect => write!(f, "inf"),
        }
    }
}

impl Serialize for Reactivity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Reactivity::Partial(k) => s.serialize_f64(*k),
            Reactivity::Perfect => s.serialize_str("perfect"),
        }
    }
}

impl<'de> Deserialize<'de> for Reactivity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Reactivity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number, or \"perfect\"/\"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Reactivity, E> {
                Ok(Reactivity::Partial(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Reactivity, E> {
                Ok(Reactivity::Partial(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Reactivity, E> {
                Ok(Reactivity::Partial(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Reactivity, E> {
                match v {
                    "perfect" | "inf" | "infinite" => Ok(Reactivity::Perfect),
                    _ => v
                        .parse::<f64>()
                        .map(Reactivity::Partial)
                        .map_err(|_| E::custom(format!("invalid reactivity {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Closed shapes: the vocabulary covers axis-aligned boxes (1–3D), balls, and
/// zero-thickness segments (2D walls). Segments are obstacle-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
}

impl Shape {
    /// Closed-set membership; segments have measure zero and never contain
    /// a point for this predicate.
    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        match self {
            Shape::Box { lo, hi } => (0..dim).all(|d| p[d] >= lo[d] && p[d] <= hi[d]),
            Shape::Ball { center, radius } => {
                let mut r2 = 0.0;
                for d in 0..dim {
                    let dx = p[d] - center[d];
                    r2 += dx * dx;
                }
                r2 <= radius * radius
            }
            Shape::Segment { .. } => false,
        }
    }

    /// Euclidean distance from a point to the (closed) shape.
    pub fn distance_to(&self, p: &Point, dim: usize) -> f64 {
        match self {
            Shape::Box { lo, hi } => {
                let mut acc = 0.0;
                for d in 0..dim {
                    let g = (lo[d] - p[d]).max(0.0).max(p[d] - hi[d]);
                    acc += g * g;
                }
                acc.sqrt()
            }
            Shape::Ball { center, radius } => {
                let mut r2 = 0.0;
                for d in 0..dim {
                    let dx = p[d] - center[d];
                    r2 += dx * dx;
                }
                (r2.sqrt() - radius).max(0.0)
            }
            Shape::Segment { a, b } => {
                let (ax, ay) = (a[0], a[1]);
                let (bx, by) = (b[0], b[1]);
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((p[0] - ax) * dx + (p[1] - ay) * dy) / len2).clamp(0.0, 1.0)
                };
                let (qx, qy) = (ax + t * dx, ay + t * dy);
                ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
            }
        }
    }

    /// True when the shape's interior is nonempty (a box with lo < hi on
    /// every axis, or a ball with positive radius).
    pub fn has_interior(&self, dim: usize) -> bool {
        match self {
            Shape::Box { lo, hi } => (0..dim).all(|d| lo[d] < hi[d]),
            Shape::Ball { radius, .. } => *radius > 0.0,
            Shape::Segment { .. } => false,
        }
    }

    fn coord_dim(&self) -> usize {
        match self {
            Shape::Box { lo, .. } => lo.len(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Segment { a, .. } => a.len(),
        }
    }

    fn structurally_valid(&self, dim: usize) -> bool {
        match self {
            Shape::Box { lo, hi } => {
                lo.len() == dim
                    && hi.len() == dim
                    && lo.iter().zip(hi).all(|(l, h)| l.is_finite() && h.is_finite() && l <= h)
            }
            Shape::Ball { center, radius } => {
                center.len() == dim && radius.is_finite() && *radius >= 0.0
            }
            Shape::Segment { a, b } => dim == 2 && a.len() == 2 && b.len() == 2,
        }
    }
}

/// Outer boundary of the domain: an axis-aligned box or a disc/ball. The
/// searcher reflects specularly off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OuterBoundary {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl OuterBoundary {
    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        match self {
            OuterBoundary::Box { lo, hi } => (0..dim).all(|d| p[d] >= lo[d] && p[d] <= hi[d]),
            OuterBoundary::Ball { center, radius } => {
                let mut r2 = 0.0;
                for d in 0..dim {
                    let dx = p[d] - center[d];
                    r2 += dx * dx;
                }
                r2 <= radius * radius
            }
        }
    }

    /// Axis-aligned bounding box (lo, hi).
    pub fn bounding_box(&self, dim: usize) -> (Point, Point) {
        match self {
            OuterBoundary::Box { lo, hi } => (to_point(lo), to_point(hi)),
            OuterBoundary::Ball { center, radius } => {
                let mut lo = [0.0; MAX_DIM];
                let mut hi = [0.0; MAX_DIM];
                for d in 0..dim {
                    lo[d] = center[d] - radius;
                    hi[d] = center[d] + radius;
                }
                (lo, hi)
            }
        }
    }

    fn structurally_valid(&self, dim: usize) -> bool {
        match self {
            OuterBoundary::Box { lo, hi } => {
                lo.len() == dim
                    && hi.len() == dim
                    && lo.iter().zip(hi).all(|(l, h)| l.is_finite() && h.is_finite() && l < h)
            }
            OuterBoundary::Ball { center, radius } => {
                center.len() == dim && radius.is_finite() && *radius > 0.0
            }
        }
    }
}

/// Domain geometry: dimension, reflecting outer boundary, reflecting interior
/// obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainGeometry {
    pub dimension: usize,
    pub outer: OuterBoundary,
    #[serde(default)]
    pub obstacles: Vec<Shape>,
}

impl DomainGeometry {
    /// Point lies in the domain and outside every obstacle.
    pub fn is_free(&self, p: &Point) -> bool {
        self.outer.contains(p, self.dimension)
            && !self.obstacles.iter().any(|o| o.contains(p, self.dimension))
    }
}

/// Target region(s) with a common reactivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub regions: Vec<Shape>,
    pub reactivity: Reactivity,
}

impl TargetSpec {
    pub fn contains(&self, p: &Point, dim: usize) -> bool {
        self.regions.iter().any(|r| r.contains(p, dim))
    }
}

/// Initial condition of the searcher.
///
/// `QuasiStationary` is synthetic: the unconditioned FPT is drawn directly as
/// Exp(rate), which is the only consequence of quasi-stationarity the theory
/// uses. `UniformOverDomain` allows starts arbitrarily close to the target and
/// routes to the algebraic-decay predictor rather than the geodesic one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDistribution {
    Point { position: Vec<f64> },
    UniformInSet { region: Shape },
    UniformOverDomain,
    QuasiStationary { rate: f64 },
}

impl InitialDistribution {
    /// Compact-support kinds must keep their support away from the target.
    pub fn has_compact_support_rule(&self) -> bool {
        matches!(
            self,
            InitialDistribution::Point { .. } | InitialDistribution::UniformInSet { .. }
        )
    }
}

/// Drift field b(x) (length/time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftField {
    None,
    Constant { vector: Vec<f64> },
    /// b(x) = strength · (x − center)/|x − center|; zero at the center.
    Radial { strength: f64, center: Vec<f64> },
}

impl DriftField {
    pub fn eval(&self, p: &Point, dim: usize, out: &mut Point) {
        match self {
            DriftField::None => {
                for o in out.iter_mut().take(dim) {
                    *o = 0.0;
                }
            }
            DriftField::Constant { vector } => {
                for d in 0..dim {
                    out[d] = vector[d];
                }
            }
            DriftField::Radial { strength, center } => {
                let mut r2 = 0.0;
                for d in 0..dim {
                    let dx = p[d] - center[d];
                    out[d] = dx;
                    r2 += dx * dx;
                }
                let r = r2.sqrt();
                if r > 1e-12 {
                    for o in out.iter_mut().take(dim) {
                        *o *= strength / r;
                    }
                } else {
                    for o in out.iter_mut().take(dim) {
                        *o = 0.0;
                    }
                }
            }
        }
    }

    fn structurally_valid(&self, dim: usize) -> bool {
        match self {
            DriftField::None => true,
            DriftField::Constant { vector } => {
                vector.len() == dim && vector.iter().all(|v| v.is_finite())
            }
            DriftField::Radial { strength, center } => {
                center.len() == dim && strength.is_finite()
            }
        }
    }
}

/// Dimensionless anisotropy factor Σ(x); the diffusion tensor is
/// a(x) = Σ(x)Σ(x)ᵀ and the noise amplitude is √(2D)·Σ(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnisotropyField {
    Identity,
    /// Σ = scale · I everywhere.
    IsotropicConst { scale: f64 },
    /// Σ = scale · I inside the band lo ≤ x[axis] ≤ hi, identity outside.
    IsotropicBand { axis: usize, lo: f64, hi: f64, scale: f64 },
    /// Σ = diag(values), constant in space.
    Diagonal { values: Vec<f64> },
}

impl AnisotropyField {
    /// Diagonal of Σ(x) (all vocabulary fields are diagonal).
    pub fn sigma_diag(&self, p: &Point, dim: usize, out: &mut Point) {
        match self {
            AnisotropyField::Identity => {
                for o in out.iter_mut().take(dim) {
                    *o = 1.0;
                }
            }
            AnisotropyField::IsotropicConst { scale } => {
                for o in out.iter_mut().take(dim) {
                    *o = *scale;
                }
            }
            AnisotropyField::IsotropicBand { axis, lo, hi, scale } => {
                let s = if p[*axis] >= *lo && p[*axis] <= *hi {
                    *scale
                } else {
                    1.0
                };
                for o in out.iter_mut().take(dim) {
                    *o = s;
                }
            }
            AnisotropyField::Diagonal { values } => {
                for d in 0..dim {
                    out[d] = values[d];
                }
            }
        }
    }

    /// Eigenvalues of a(x) = ΣΣᵀ at a point (diagonal vocabulary: squares of
    /// the Σ diagonal).
    pub fn tensor_eigenvalues(&self, p: &Point, dim: usize) -> Point {
        let mut s = [0.0; MAX_DIM];
        self.sigma_diag(p, dim, &mut s);
        let mut out = [0.0; MAX_DIM];
        for d in 0..dim {
            out[d] = s[d] * s[d];
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, AnisotropyField::Identity)
    }

    fn structurally_valid(&self, dim: usize) -> bool {
        match self {
            AnisotropyField::Identity => true,
            AnisotropyField::IsotropicConst { scale } => scale.is_finite(),
            AnisotropyField::IsotropicBand { axis, lo, hi, scale } => {
                *axis < dim && lo <= hi && scale.is_finite()
            }
            AnisotropyField::Diagonal { values } => {
                values.len() == dim && values.iter().all(|v| v.is_finite())
            }
        }
    }
}

fn default_identity() -> AnisotropyField {
    AnisotropyField::Identity
}

fn default_drift() -> DriftField {
    DriftField::None
}

/// Searcher dynamics: dX = b(X)dt + √(2D)·Σ(X)·dW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default = "default_drift")]
    pub drift: DriftField,
    pub diffusivity: f64,
    #[serde(default = "default_identity")]
    pub anisotropy: AnisotropyField,
}

/// Full searcher problem. Immutable after validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub geometry: DomainGeometry,
    pub dynamics: DynamicsSpec,
    pub target: TargetSpec,
    pub initial: InitialDistribution,
}

impl ProblemSpec {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("problem spec serializes")
    }
}

/// Method provenance of a conditional-moment estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Quadrature,
    MonteCarlo,
    Asymptotic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Analytic => "analytic",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
            Method::Asymptotic => "asymptotic",
        };
        f.write_str(s)
    }
}

/// An estimate of E[τ^m | τ < σ] with uncertainty and provenance.
///
/// `std_err` is 0 for exact methods; `n_effective` is the effective sample
/// size for Monte Carlo and +∞ for deterministic methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMomentEstimate {
    pub order: f64,
    pub value: f64,
    pub std_err: f64,
    pub n_effective: f64,
    pub method: Method,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("rate must be positive and finite, got {0}")]
    NonpositiveRate(f64),
    #[error("shape must be positive and finite, got {0}")]
    NonpositiveShape(f64),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// One violated invariant found by [`validate_problem`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("initial support intersects the target: {0}")]
    StartInsideTarget(String),
    #[error("domain minus obstacles is disconnected: {0}")]
    DisconnectedDomain(String),
    #[error("diffusivity tensor eigenvalue {value} at {location:?} outside ({lo}, {hi})")]
    DegenerateDiffusivity {
        value: f64,
        location: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    #[error("target has empty interior: {0}")]
    EmptyTarget(String),
    #[error("structural error: {0}")]
    Structural(String),
}

/// All violations found in one validation pass.
#[derive(Debug, Error, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} validation error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

/// Knobs for the validation pass. Exact connectivity of an analytic domain is
/// undecidable; the flood fill on `grid_resolution` nodes per axis is the
/// pragmatic stand-in.
#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub grid_resolution: usize,
    /// Admissible open interval for eigenvalues of a(x).
    pub eigenvalue_bounds: (f64, f64),
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 256,
            eigenvalue_bounds: (1e-9, 1e9),
        }
    }
}

/// Validate a problem spec against every standing assumption, reporting all
/// violations at once. Accepted specs are returned unchanged, so validation
/// is idempotent.
pub fn validate_problem(spec: ProblemSpec) -> Result<ProblemSpec, ValidationErrors> {
    validate_problem_with(spec, &ValidationConfig::default())
}

pub fn validate_problem_with(
    spec: ProblemSpec,
    cfg: &ValidationConfig,
) -> Result<ProblemSpec, ValidationErrors> {
    let mut errs = Vec::new();
    let dim = spec.geometry.dimension;

    if !(1..=MAX_DIM).contains(&dim) {
        errs.push(ValidationError::Structural(format!(
            "dimension must be 1, 2, or 3, got {dim}"
        )));
        return Err(ValidationErrors(errs));
    }
    if !spec.geometry.outer.structurally_valid(dim) {
        errs.push(ValidationError::Structural(
            "outer boundary is malformed for the declared dimension".into(),
        ));
    }
    for (i, o) in spec.geometry.obstacles.iter().enumerate() {
        if !o.structurally_valid(dim) {
            errs.push(ValidationError::Structural(format!(
                "obstacle #{i} is malformed for dimension {dim}"
            )));
        }
    }
    if !(spec.dynamics.diffusivity > 0.0) || !spec.dynamics.diffusivity.is_finite() {
        errs.push(ValidationError::Structural(format!(
            "diffusivity must be positive, got {}",
            spec.dynamics.diffusivity
        )));
    }
    if !spec.dynamics.drift.structurally_valid(dim) {
        errs.push(ValidationError::Structural("drift field is malformed".into()));
    }
    if !spec.dynamics.anisotropy.structurally_valid(dim) {
        errs.push(ValidationError::Structural("anisotropy field is malformed".into()));
    }
    if !spec.target.reactivity.is_valid() {
        errs.push(ValidationError::Structural(format!(
            "reactivity must be positive or perfect, got {}",
            spec.target.reactivity
        )));
    }

    // Target must be the closure of its interior.
    if spec.target.regions.is_empty() {
        errs.push(ValidationError::EmptyTarget("no target regions".into()));
    }
    for (i, r) in spec.target.regions.iter().enumerate() {
        if !r.structurally_valid(dim) {
            errs.push(ValidationError::Structural(format!(
                "target region #{i} is malformed for dimension {dim}"
            )));
        } else if !r.has_interior(dim) {
            errs.push(ValidationError::EmptyTarget(format!(
                "target region #{i} has no interior"
            )));
        }
    }

    // Initial condition structure.
    match &spec.initial {
        InitialDistribution::Point { position } => {
            if position.len() != dim || position.iter().any(|v| !v.is_finite()) {
                errs.push(ValidationError::Structural(
                    "initial point position is malformed".into(),
                ));
            }
        }
        InitialDistribution::UniformInSet { region } => {
            if !region.structurally_valid(dim) || !region.has_interior(dim) {
                errs.push(ValidationError::Structural(
                    "initial uniform region must be a box or ball with interior".into(),
                ));
            }
        }
        InitialDistribution::UniformOverDomain => {}
        InitialDistribution::QuasiStationary { rate } => {
            if !(rate > &0.0) || !rate.is_finite() {
                errs.push(ValidationError::Structural(format!(
                    "quasi-stationary rate must be positive, got {rate}"
                )));
            }
        }
    }

    if !errs.is_empty() {
        return Err(ValidationErrors(errs));
    }

    // Compact-support initial data must avoid the target.
    if spec.initial.has_compact_support_rule() {
        match &spec.initial {
            InitialDistribution::Point { position } => {
                let p = to_point(position);
                if spec.target.contains(&p, dim) {
                    errs.push(ValidationError::StartInsideTarget(format!(
                        "start point {position:?} lies in the target"
                    )));
                }
            }
            InitialDistribution::UniformInSet { region } => {
                for (i, t) in spec.target.regions.iter().enumerate() {
                    if shapes_intersect(region, t, dim) {
                        errs.push(ValidationError::StartInsideTarget(format!(
                            "initial region intersects target region #{i}"
                        )));
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    // Ellipticity bounds on a(x) over the validation grid.
    let (lo_b, hi_b) = cfg.eigenvalue_bounds;
    let grid = ValidationGrid::new(&spec.geometry, cfg.grid_resolution.max(4));
    let mut eig_reported = false;
    for idx in 0..grid.len() {
        if eig_reported {
            break;
        }
        let p = grid.node(idx);
        if !spec.geometry.outer.contains(&p, dim) {
            continue;
        }
        let eig = spec.dynamics.anisotropy.tensor_eigenvalues(&p, dim);
        for &e in eig.iter().take(dim) {
            if !(e > lo_b && e < hi_b) {
                errs.push(ValidationError::DegenerateDiffusivity {
                    value: e,
                    location: p[..dim].to_vec(),
                    lo: lo_b,
                    hi: hi_b,
                });
                eig_reported = true;
                break;
            }
        }
    }

    // Connectivity by flood fill.
    match grid.connectivity(&spec) {
        Connectivity::Ok => {}
        Connectivity::FreeSpaceSplit => errs.push(ValidationError::DisconnectedDomain(
            "free space has more than one connected component".into(),
        )),
        Connectivity::TargetUnreachable => errs.push(ValidationError::DisconnectedDomain(
            "no obstacle-avoiding path from the initial support to the target".into(),
        )),
        Connectivity::NoFreeNodes => errs.push(ValidationError::DisconnectedDomain(
            "obstacles cover the whole domain at the validation resolution".into(),
        )),
        Connectivity::NoTargetNodes => errs.push(ValidationError::EmptyTarget(
            "target contains no free domain node at the validation resolution".into(),
        )),
    }

    if errs.is_empty() {
        Ok(spec)
    } else {
        Err(ValidationErrors(errs))
    }
}

enum Connectivity {
    Ok,
    FreeSpaceSplit,
    TargetUnreachable,
    NoFreeNodes,
    NoTargetNodes,
}

/// Regular lattice over the domain bounding box used only for validation.
struct ValidationGrid {
    dim: usize,
    origin: Point,
    spacing: Point,
    shape: [usize; MAX_DIM],
}

impl ValidationGrid {
    fn new(geom: &DomainGeometry, res: usize) -> Self {
        let dim = geom.dimension;
        let (lo, hi) = geom.outer.bounding_box(dim);
        // 3D grids at the 2D default would be enormous; scale down to keep
        // validation interactive while staying well above feature size.
        let res = if dim == 3 { res.min(96) } else { res };
        let mut shape = [1usize; MAX_DIM];
        let mut spacing = [1.0; MAX_DIM];
        for d in 0..dim {
            shape[d] = res;
            spacing[d] = (hi[d] - lo[d]) / (res - 1) as f64;
        }
        Self {
            dim,
            origin: lo,
            spacing,
            shape,
        }
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn node(&self, idx: usize) -> Point {
        let mut p = [0.0; MAX_DIM];
        let mut rem = idx;
        for d in 0..self.dim {
            let c = rem % self.shape[d];
            rem /= self.shape[d];
            p[d] = self.origin[d] + c as f64 * self.spacing[d];
        }
        p
    }

    fn index(&self, coords: &[usize; MAX_DIM]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for d in 0..self.dim {
            idx += coords[d] * stride;
            stride *= self.shape[d];
        }
        idx
    }

    fn coords(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut c = [0usize; MAX_DIM];
        let mut rem = idx;
        for d in 0..self.dim {
            c[d] = rem % self.shape[d];
            rem /= self.shape[d];
        }
        c
    }

    fn nearest_free(&self, p: &Point, free: &[bool]) -> Option<usize> {
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        for idx in 0..self.len() {
            if !free[idx] {
                continue;
            }
            let q = self.node(idx);
            let mut d2 = 0.0;
            for d in 0..self.dim {
                let dx = q[d] - p[d];
                d2 += dx * dx;
            }
            if d2 < best_d2 {
                best_d2 = d2;
                best = Some(idx);
            }
        }
        best
    }

    fn connectivity(&self, spec: &ProblemSpec) -> Connectivity {
        let n = self.len();
        let dim = self.dim;
        // free = in domain, outside fat obstacles; thin segment obstacles
        // block a node when closer than half a grid cell.
        let seg_clearance = 0.5 * self.spacing[..dim].iter().cloned().fold(0.0f64, f64::max);
        let mut free = vec![false; n];
        for (idx, f) in free.iter_mut().enumerate() {
            let p = self.node(idx);
            if !spec.geometry.outer.contains(&p, dim) {
                continue;
            }
            let blocked = spec.geometry.obstacles.iter().any(|o| match o {
                Shape::Segment { .. } => o.distance_to(&p, dim) < seg_clearance,
                _ => o.contains(&p, dim),
            });
            *f = !blocked;
        }
        if !free.iter().any(|&f| f) {
            return Connectivity::NoFreeNodes;
        }

        let target_nodes: Vec<usize> = (0..n)
            .filter(|&i| free[i] && spec.target.contains(&self.node(i), dim))
            .collect();
        if target_nodes.is_empty() {
            return Connectivity::NoTargetNodes;
        }

        // seed nodes for the initial support
        let seeds: Vec<usize> = match &spec.initial {
            InitialDistribution::Point { position } => {
                let p = to_point(position);
                self.nearest_free(&p, &free).into_iter().collect()
            }
            InitialDistribution::UniformInSet { region } => {
                let mut s: Vec<usize> = (0..n)
                    .filter(|&i| free[i] && region.contains(&self.node(i), dim))
                    .collect();
                if s.is_empty() {
                    // region smaller than a cell: snap to its center
                    let c = match region {
                        Shape::Ball { center, .. } => to_point(center),
                        Shape::Box { lo, hi } => {
                            let mut c = [0.0; MAX_DIM];
                            for d in 0..dim {
                                c[d] = 0.5 * (lo[d] + hi[d]);
                            }
                            c
                        }
                        Shape::Segment { .. } => return Connectivity::NoFreeNodes,
                    };
                    s = self.nearest_free(&c, &free).into_iter().collect();
                }
                s
            }
            InitialDistribution::UniformOverDomain | InitialDistribution::QuasiStationary { .. } => {
                vec![free.iter().position(|&f| f).unwrap()]
            }
        };
        if seeds.is_empty() {
            return Connectivity::NoFreeNodes;
        }

        // BFS over face neighbors
        let mut visited = vec![false; n];
        let mut queue = VecDeque::new();
        for &s in &seeds {
            if !visited[s] {
                visited[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let c = self.coords(u);
            for d in 0..dim {
                for step in [-1isize, 1] {
                    let v = c[d] as isize + step;
                    if v < 0 || v as usize >= self.shape[d] {
                        continue;
                    }
                    let mut cc = c;
                    cc[d] = v as usize;
                    let vi = self.index(&cc);
                    if free[vi] && !visited[vi] {
                        visited[vi] = true;
                        queue.push_back(vi);
                    }
                }
            }
        }

        if !target_nodes.iter().any(|&t| visited[t]) {
            return Connectivity::TargetUnreachable;
        }
        if free
            .iter()
            .zip(&visited)
            .any(|(&f, &v)| f && !v)
        {
            return Connectivity::FreeSpaceSplit;
        }
        Connectivity::Ok
    }
}

/// Conservative pairwise intersection test for the closed shape vocabulary.
fn shapes_intersect(a: &Shape, b: &Shape, dim: usize) -> bool {
    use Shape::*;
    match (a, b) {
        (Box { lo: l1, hi: h1 }, Box { lo: l2, hi: h2 }) => {
            (0..dim).all(|d| l1[d] <= h2[d] && l2[d] <= h1[d])
        }
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => {
            let mut d2 = 0.0;
            for d in 0..dim {
                let dx = c1[d] - c2[d];
                d2 += dx * dx;
            }
            d2.sqrt() <= r1 + r2
        }
        (Box { lo, hi }, Ball { center, radius })
        | (Ball { center, radius }, Box { lo, hi }) => {
            let mut d2 = 0.0;
            for d in 0..dim {
                let g = (lo[d] - center[d]).max(0.0).max(center[d] - hi[d]);
                d2 += g * g;
            }
            d2.sqrt() <= *radius
        }
        (Segment { .. }, other) | (other, Segment { .. }) => {
            // segments are obstacle-only; treat contact via distance of endpoints
            match (a, b) {
                (Segment { a: s0, b: s1 }, _) | (_, Segment { a: s0, b: s1 }) => {
                    let p0 = to_point(s0);
                    let p1 = to_point(s1);
                    other.contains(&p0, dim) || other.contains(&p1, dim)
                }
                _ => unreachable!(),
            }
        }
    }
}
