//! Closed curves on the parameter circle `R/LZ`.
//!
//! A [`ClosedCurve`] is either exactly arc-length parametrized (circles,
//! polygons) or a smooth parametric shape carried through a numerical
//! arc-length table. Raw parametric curves (not unit speed) exist only as
//! inputs to [`arclength_reparametrize`]; the energy routines reject them.

mod parametric;
mod polygon;
mod reparam;
mod spec;
mod spline;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub use parametric::Parametric;
pub use polygon::Polygon;
pub use reparam::ArcTable;
pub use spec::CurveSpec;
pub use spline::PeriodicSpline;

/// Relative closedness tolerance: `|eval(0) - eval(L^-)| <= CLOSURE_TOL_REL * L`.
pub const CLOSURE_TOL_REL: f64 = 1e-9;
/// Grid used when a constructor reparametrizes internally.
pub const DEFAULT_REPARAM_GRID: usize = 4096;
/// Speed tolerance used when a constructor reparametrizes internally.
pub const DEFAULT_REPARAM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("ambient dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("torus knot needs gcd(p, q) = 1, got p = {p}, q = {q}")]
    TorusKnotGcd { p: i64, q: i64 },
    #[error("torus knot needs R > r > 0, got R = {big_r}, r = {small_r}")]
    TorusKnotRadii { big_r: f64, small_r: f64 },
    #[error("invalid shape parameters: {0}")]
    BadShape(String),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon edge {0} has zero length (repeated consecutive vertex)")]
    DegenerateEdge(usize),
    #[error("vertex {index} has dimension {found}, expected {expected}")]
    InconsistentDimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("arc-length reparametrization reached speed error {achieved:e} > tol {tol:e} on a {grid}-cell grid; raise the grid size")]
    ReparamTolerance {
        achieved: f64,
        tol: f64,
        grid: usize,
    },
    #[error("curve does not close: endpoint gap {gap:e}")]
    NotClosed { gap: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Preset tag recorded on every curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    Circle,
    Ellipse {
        a: f64,
        b: f64,
    },
    TorusKnot {
        p: i64,
        q: i64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(rename = "r")]
        small_r: f64,
    },
    Polygonal,
    Tabulated,
    RadialFourier,
}

impl CurveKind {
    /// True for presets that are known to be unknotted; torus knots with
    /// `|p| <= 1` or `|q| <= 1` are trivial.
    pub fn is_unknot(&self) -> bool {
        match self {
            CurveKind::TorusKnot { p, q, .. } => p.abs() <= 1 || q.abs() <= 1,
            CurveKind::Polygonal | CurveKind::Tabulated => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Circle { radius: f64 },
    Polygon(Polygon),
    /// `table == None` means the raw parametrization, rescaled to `[0, L)`.
    Parametric {
        base: Parametric,
        table: Option<ArcTable>,
    },
}

/// A closed curve in `R^d` parametrized over `[0, L)`.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    length: f64,
    dim: usize,
    kind: CurveKind,
    shape: Shape,
}

/// Reduces `x` to its canonical representative in `[0, length)`.
#[inline]
pub fn wrap(x: f64, length: f64) -> f64 {
    let r = x.rem_euclid(length);
    if r >= length {
        0.0
    } else {
        r
    }
}

/// Length of the shorter arc between parameters `x` and `y` on `R/LZ`.
#[inline]
pub fn intrinsic_distance(x: f64, y: f64, length: f64) -> f64 {
    let d = (wrap(x, length) - wrap(y, length)).abs();
    d.min(length - d)
}

impl ClosedCurve {
    /// Round circle of circumference `length` in the first two coordinates of `R^dim`.
    pub fn circle(length: f64, dim: usize) -> Result<Self, CurveError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(CurveError::NonPositiveLength(length));
        }
        if dim < 2 {
            return Err(CurveError::BadDimension(dim));
        }
        Ok(Self {
            length,
            dim,
            kind: CurveKind::Circle,
            shape: Shape::Circle {
                radius: length / (2.0 * PI),
            },
        })
    }

    /// Standard `(p, q)` torus knot, arc-length reparametrized on the default grid.
    pub fn torus_knot(p: i64, q: i64, big_r: f64, small_r: f64) -> Result<Self, CurveError> {
        let raw = Self::raw(Parametric::torus_knot(p, q, big_r, small_r)?)?;
        arclength_reparametrize(&raw, DEFAULT_REPARAM_GRID, DEFAULT_REPARAM_TOL)
    }

    /// Ellipse with semi-axes `a`, `b`, arc-length reparametrized.
    pub fn ellipse(a: f64, b: f64) -> Result<Self, CurveError> {
        let raw = Self::raw(Parametric::ellipse(a, b)?)?;
        arclength_reparametrize(&raw, DEFAULT_REPARAM_GRID, DEFAULT_REPARAM_TOL)
    }

    /// Periodic cubic spline through `points` (implicitly closed), arc-length reparametrized.
    pub fn tabulated(points: &[Vec<f64>]) -> Result<Self, CurveError> {
        let raw = Self::raw(Parametric::Spline(PeriodicSpline::new(points)?))?;
        arclength_reparametrize(&raw, DEFAULT_REPARAM_GRID.max(8 * points.len()), DEFAULT_REPARAM_TOL)
    }

    /// Arc-length parametrization of a polygon; exact, no smoothing.
    pub fn from_polygon(polygon: Polygon) -> Self {
        Self {
            length: polygon.length(),
            dim: polygon.dim(),
            kind: CurveKind::Polygonal,
            shape: Shape::Polygon(polygon),
        }
    }

    /// Wraps a parametric shape without reparametrizing. The result is not
    /// unit speed; pass it through [`arclength_reparametrize`] before use.
    pub fn raw(base: Parametric) -> Result<Self, CurveError> {
        let length = base.total_length();
        if !(length.is_finite() && length > 0.0) {
            return Err(CurveError::NonPositiveLength(length));
        }
        let gap = {
            let mut a = vec![0.0; base.dim()];
            let mut b = vec![0.0; base.dim()];
            base.point_into(0.0, &mut a);
            base.point_into(base.period(), &mut b);
            crate::numeric::dist(&a, &b)
        };
        if gap > CLOSURE_TOL_REL * length {
            return Err(CurveError::NotClosed { gap });
        }
        Ok(Self {
            length,
            dim: base.dim(),
            kind: base.kind(),
            shape: Shape::Parametric { base, table: None },
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// Whether `eval` is (numerically) unit speed.
    pub fn is_arclength(&self) -> bool {
        !matches!(self.shape, Shape::Parametric { table: None, .. })
    }

    pub fn as_polygon(&self) -> Option<&Polygon> {
        match &self.shape {
            Shape::Polygon(p) => Some(p),
            _ => None,
        }
    }

    /// Radius when the curve is a round circle.
    pub fn circle_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Circle { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let x = wrap(x, self.length);
        match &self.shape {
            Shape::Circle { radius } => {
                let theta = x / radius;
                out.fill(0.0);
                out[0] = radius * theta.cos();
                out[1] = radius * theta.sin();
            }
            Shape::Polygon(p) => p.eval_into(x, out),
            Shape::Parametric { base, table } => {
                let t = match table {
                    Some(tab) => tab.param_at(x),
                    None => x * base.period() / self.length,
                };
                base.point_into(t, out);
            }
        }
    }

    /// Derivative of `eval` with respect to the curve parameter.
    pub fn tangent(&self, x: f64) -> Vec<f64> {
        let x = wrap(x, self.length);
        let mut out = vec![0.0; self.dim];
        match &self.shape {
            Shape::Circle { radius } => {
                let theta = x / radius;
                out[0] = -theta.sin();
                out[1] = theta.cos();
            }
            Shape::Polygon(p) => {
                let (k, _) = p.locate(x);
                p.edge_direction_into(k, &mut out);
            }
            Shape::Parametric { base, table } => {
                let (t, dt) = match table {
                    Some(tab) => tab.param_and_slope_at(x),
                    None => (x * base.period() / self.length, base.period() / self.length),
                };
                base.deriv_into(t, &mut out);
                for v in out.iter_mut() {
                    *v *= dt;
                }
            }
        }
        out
    }

    /// Chord length `|eval(x) - eval(y)|`, evaluated without cancellation
    /// where the shape allows it (circle closed form, same polygon edge).
    pub fn chord(&self, x: f64, y: f64) -> f64 {
        match &self.shape {
            Shape::Circle { radius } => {
                let d = intrinsic_distance(x, y, self.length);
                2.0 * radius * (0.5 * d / radius).sin().abs()
            }
            Shape::Polygon(p) => {
                let (x, y) = (wrap(x, self.length), wrap(y, self.length));
                let (kx, _) = p.locate(x);
                let (ky, _) = p.locate(y);
                if kx == ky {
                    (x - y).abs()
                } else {
                    crate::numeric::dist(&self.eval(x), &self.eval(y))
                }
            }
            Shape::Parametric { .. } => crate::numeric::dist(&self.eval(x), &self.eval(y)),
        }
    }

    /// Curvature from a central difference of the unit tangent.
    pub fn curvature(&self, x: f64) -> f64 {
        let h = 1e-5 * self.length;
        let unit = |y: f64| {
            let t = self.tangent(y);
            let n = crate::numeric::norm(&t);
            t.into_iter().map(|c| c / n).collect::<Vec<f64>>()
        };
        crate::numeric::dist(&unit(x + h), &unit(x - h)) / (2.0 * h)
    }

    /// Evaluates the curve at many parameters, keeping what pair loops need.
    pub(crate) fn probe(&self, params: &[f64]) -> Probes<'_> {
        let mut coords = vec![0.0; params.len() * self.dim];
        let wrapped: Vec<f64> = params.iter().map(|&x| wrap(x, self.length)).collect();
        for (x, out) in wrapped.iter().zip(coords.chunks_mut(self.dim)) {
            self.eval_into(*x, out);
        }
        let edges = match &self.shape {
            Shape::Polygon(p) => wrapped.iter().map(|&x| p.locate(x).0).collect(),
            _ => Vec::new(),
        };
        let arc_pos = match &self.shape {
            Shape::Parametric {
                base,
                table: Some(tab),
            } => wrapped.iter().map(|&x| tab.true_arc_at(base, x)).collect(),
            _ => wrapped.clone(),
        };
        let curvature = match &self.shape {
            Shape::Circle { radius } => vec![1.0 / radius; wrapped.len()],
            Shape::Parametric { .. } => wrapped.iter().map(|&x| self.curvature(x)).collect(),
            Shape::Polygon(_) => Vec::new(),
        };
        Probes {
            curve: self,
            params: wrapped,
            arc_pos,
            coords,
            edges,
            curvature,
        }
    }
}

/// Cached evaluations of a curve at a list of parameters.
pub(crate) struct Probes<'a> {
    curve: &'a ClosedCurve,
    pub params: Vec<f64>,
    /// Arc-length position used for intrinsic distances.
    arc_pos: Vec<f64>,
    coords: Vec<f64>,
    edges: Vec<usize>,
    /// Curvature at each probe; empty for polygons.
    curvature: Vec<f64>,
}

/// Pairs of probes on smooth curves closer than this fraction of the length
/// use the local expansion of the kernel; coordinates cannot resolve them.
const NEAR_PAIR: f64 = 1e-4;

impl Probes<'_> {
    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.curve.dim;
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn arc(&self, i: usize, j: usize) -> f64 {
        let d = (self.arc_pos[i] - self.arc_pos[j]).abs();
        d.min(self.curve.length - d)
    }

    /// Chord between probes `i` and `j`; see [`ClosedCurve::chord`].
    pub fn chord(&self, i: usize, j: usize) -> f64 {
        match &self.curve.shape {
            Shape::Circle { radius } => 2.0 * radius * (0.5 * self.arc(i, j) / radius).sin().abs(),
            Shape::Polygon(_) if self.edges[i] == self.edges[j] => {
                (self.params[i] - self.params[j]).abs()
            }
            _ => crate::numeric::dist(self.point(i), self.point(j)),
        }
    }

    /// Curvature at probe `i`, `None` on polygons.
    pub fn curvature(&self, i: usize) -> Option<f64> {
        self.curvature.get(i).copied()
    }

    /// Energy kernel between probes `i` and `j` at arc distance `arc`.
    pub fn kernel(&self, i: usize, j: usize, arc: f64, params: &crate::EnergyParams) -> f64 {
        if !self.curvature.is_empty() && arc < NEAR_PAIR * self.curve.length {
            // chord = arc (1 - k^2 arc^2 / 24 + ...)
            let k2 = 0.5 * (self.curvature[i].powi(2) + self.curvature[j].powi(2));
            let diff = params.alpha * k2 * arc.powf(2.0 - params.alpha) / 24.0;
            return if params.p == 1.0 { diff } else { diff.powf(params.p) };
        }
        crate::energy::kernel(self.chord(i, j), arc, params)
    }
}

/// Round circle of circumference `length`.
pub fn make_circle(length: f64, dim: usize) -> Result<ClosedCurve, CurveError> {
    ClosedCurve::circle(length, dim)
}

/// `(p, q)` torus knot with radii `R > r > 0`.
pub fn make_torus_knot(p: i64, q: i64, big_r: f64, small_r: f64) -> Result<ClosedCurve, CurveError> {
    ClosedCurve::torus_knot(p, q, big_r, small_r)
}

pub fn polygon_as_curve(polygon: Polygon) -> ClosedCurve {
    ClosedCurve::from_polygon(polygon)
}

/// Reparametrizes `curve` by arc length using cumulative-length inversion
/// on an `grid`-cell table with monotone cubic interpolation.
///
/// Circles and polygons are already unit speed and are returned unchanged.
/// Fails with [`CurveError::ReparamTolerance`] when the resulting speed
/// deviates from 1 by more than `tol` anywhere on the check grid.
pub fn arclength_reparametrize(
    curve: &ClosedCurve,
    grid: usize,
    tol: f64,
) -> Result<ClosedCurve, CurveError> {
    let base = match &curve.shape {
        Shape::Circle { .. } | Shape::Polygon(_) => return Ok(curve.clone()),
        Shape::Parametric { base, .. } => base,
    };
    let table = ArcTable::build(base, grid.max(8));
    let achieved = table.max_speed_error(base);
    if achieved > tol {
        return Err(CurveError::ReparamTolerance {
            achieved,
            tol,
            grid,
        });
    }
    Ok(ClosedCurve {
        length: table.length(),
        dim: base.dim(),
        kind: base.kind(),
        shape: Shape::Parametric {
            base: base.clone(),
            table: Some(table),
        },
    })
}

/// Largest deviation of the finite-difference speed from 1 over a uniform grid.
pub fn finite_difference_speed_error(curve: &ClosedCurve, grid: usize) -> f64 {
    let h = curve.length() / (64.0 * grid as f64);
    (0..grid)
        .map(|i| {
            let x = (i as f64 + 0.5) * curve.length() / grid as f64;
            let a = curve.eval(x - h);
            let b = curve.eval(x + h);
            (crate::numeric::dist(&a, &b) / (2.0 * h) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
