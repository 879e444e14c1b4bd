use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ClosedCurve, CurveError, Polygon};

fn default_length() -> f64 {
    2.0 * PI
}

fn default_dim() -> usize {
    2
}

fn default_radius() -> f64 {
    1.0
}

/// JSON description of a curve, e.g. `{"kind":"torus_knot","p":2,"q":3,"R":2.0,"r":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
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
    /// Vertices from a file, or inline.
    Polygon {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<Vec<Vec<f64>>>,
    },
    RegularPolygon {
        m: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// Periodic cubic spline through tabulated points (same file format as polygons).
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<Vec<f64>>>,
    },
}

fn resolve(base: Option<&Path>, file: &Path) -> PathBuf {
    match base {
        Some(dir) if file.is_relative() => dir.join(file),
        _ => file.to_path_buf(),
    }
}

fn load_points(
    base: Option<&Path>,
    file: &Option<PathBuf>,
    inline: &Option<Vec<Vec<f64>>>,
) -> Result<Vec<Vec<f64>>, CurveError> {
    match (file, inline) {
        (Some(f), None) => {
            let p = Polygon::from_file(resolve(base, f))?;
            Ok(p.vertices().map(|v| v.to_vec()).collect())
        }
        (None, Some(v)) => Ok(v.clone()),
        _ => Err(CurveError::BadShape(
            "exactly one of `file` and inline vertices is required".into(),
        )),
    }
}

impl CurveSpec {
    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<ClosedCurve, CurveError> {
        self.build_relative_to(None)
    }

    /// Builds the curve, resolving relative file paths against `base`.
    pub fn build_relative_to(&self, base: Option<&Path>) -> Result<ClosedCurve, CurveError> {
        match self {
            CurveSpec::Circle { length, dim } => ClosedCurve::circle(*length, *dim),
            CurveSpec::Ellipse { a, b } => ClosedCurve::ellipse(*a, *b),
            CurveSpec::TorusKnot {
                p,
                q,
                big_r,
                small_r,
            } => ClosedCurve::torus_knot(*p, *q, *big_r, *small_r),
            CurveSpec::Polygon { file, vertices } => Ok(ClosedCurve::from_polygon(Polygon::new(
                &load_points(base, file, vertices)?,
            )?)),
            CurveSpec::RegularPolygon { m, radius, dim } => {
                Ok(ClosedCurve::from_polygon(Polygon::regular(*m, *radius, *dim)?))
            }
            CurveSpec::Tabulated { file, points } => {
                ClosedCurve::tabulated(&load_points(base, file, points)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveKind;

    #[test]
    fn parses_documented_examples() {
        let c = CurveSpec::from_json(r#"{"kind":"circle","length":5.5,"dim":3}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(c.dim(), 3);
        assert_eq!(c.length(), 5.5);
        let k = CurveSpec::from_json(r#"{"kind":"torus_knot","p":2,"q":3,"R":2.0,"r":0.5}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(matches!(k.kind(), CurveKind::TorusKnot { p: 2, q: 3, .. }));
    }

    #[test]
    fn polygon_file_resolves_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sq.txt"), "0 0\n1 0\n1 1\n0 1\n").unwrap();
        let spec = CurveSpec::from_json(r#"{"kind":"polygon","file":"sq.txt"}"#).unwrap();
        let c = spec.build_relative_to(Some(dir.path())).unwrap();
        assert_eq!(c.length(), 4.0);
        assert!(spec.build().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_ambiguous_sources() {
        assert!(CurveSpec::from_json(r#"{"kind":"circle","radius":1}"#).is_err());
        let both = CurveSpec::Polygon {
            file: Some("x".into()),
            vertices: Some(vec![]),
        };
        assert!(matches!(both.build(), Err(CurveError::BadShape(_))));
    }
}
