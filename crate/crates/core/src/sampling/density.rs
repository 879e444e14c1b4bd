use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SamplingError;

/// JSON description of a density: `{"kind":"uniform"}`, `{"kind":"cosine","c":0.5}`
/// or `{"kind":"tabulated","file":"path"}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    #[default]
    Uniform,
    Cosine {
        c: f64,
    },
    /// Nonnegative node values at `k L / K`, `k = 0..K`, periodic, linearly
    /// interpolated and normalized. The file holds one value per line.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
}

impl DensitySpec {
    pub fn build(&self, length: f64) -> Result<Density, SamplingError> {
        self.build_relative_to(length, None)
    }

    pub fn build_relative_to(&self, length: f64, base: Option<&Path>) -> Result<Density, SamplingError> {
        match self {
            DensitySpec::Uniform => Density::uniform(length),
            DensitySpec::Cosine { c } => Density::cosine(length, *c),
            DensitySpec::Tabulated { file, values } => {
                let vals = match (file, values) {
                    (Some(f), None) => {
                        let path = match base {
                            Some(dir) if f.is_relative() => dir.join(f),
                            _ => f.clone(),
                        };
                        parse_values(&std::fs::read_to_string(path)?)?
                    }
                    (None, Some(v)) => v.clone(),
                    _ => {
                        return Err(SamplingError::InvalidDensity(
                            "tabulated density needs exactly one of `file` and `values`".into(),
                        ))
                    }
                };
                Density::tabulated(length, &vals)
            }
        }
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>, SamplingError> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let content = line.split('#').next().unwrap_or("").trim();
            (!content.is_empty()).then_some((i, content))
        })
        .map(|(i, content)| {
            content.parse::<f64>().map_err(|e| {
                SamplingError::InvalidDensity(format!("line {}: {content:?}: {e}", i + 1))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Uniform,
    Cosine { c: f64 },
    /// Normalized node values and the CDF at each node (`K + 1` entries).
    Tabulated { values: Vec<f64>, node_cdf: Vec<f64> },
}

/// Probability density on `R/LZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    length: f64,
    kind: Kind,
    spec: DensitySpec,
}

impl Density {
    pub fn uniform(length: f64) -> Result<Self, SamplingError> {
        check_length(length)?;
        Ok(Self {
            length,
            kind: Kind::Uniform,
            spec: DensitySpec::Uniform,
        })
    }

    /// `rho(x) = (1 + c cos(2 pi x / L)) / L`, bounded below by `(1 - |c|) / L`.
    pub fn cosine(length: f64, c: f64) -> Result<Self, SamplingError> {
        check_length(length)?;
        if !(c.abs() < 1.0) {
            return Err(SamplingError::InvalidDensity(format!(
                "cosine density needs |c| < 1, got {c}"
            )));
        }
        Ok(Self {
            length,
            kind: Kind::Cosine { c },
            spec: DensitySpec::Cosine { c },
        })
    }

    pub fn tabulated(length: f64, raw: &[f64]) -> Result<Self, SamplingError> {
        check_length(length)?;
        if raw.len() < 2 {
            return Err(SamplingError::InvalidDensity(
                "tabulated density needs at least 2 nodes".into(),
            ));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SamplingError::InvalidDensity(
                "tabulated density values must be finite and nonnegative".into(),
            ));
        }
        let k = raw.len();
        let h = length / k as f64;
        let cell_mass = |i: usize| 0.5 * h * (raw[i] + raw[(i + 1) % k]);
        let total: f64 = (0..k).map(cell_mass).sum();
        if !(total > 0.0) {
            return Err(SamplingError::InvalidDensity("tabulated density has zero mass".into()));
        }
        let values: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut node_cdf = Vec::with_capacity(k + 1);
        node_cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..k {
            acc += 0.5 * h * (values[i] + values[(i + 1) % k]);
            node_cdf.push(acc);
        }
        node_cdf[k] = 1.0;
        Ok(Self {
            length,
            kind: Kind::Tabulated { values, node_cdf },
            spec: DensitySpec::Tabulated {
                file: None,
                values: Some(raw.to_vec()),
            },
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, Kind::Uniform)
    }

    /// `inf rho`.
    pub fn lower_bound(&self) -> f64 {
        match &self.kind {
            Kind::Uniform => 1.0 / self.length,
            Kind::Cosine { c } => (1.0 - c.abs()) / self.length,
            Kind::Tabulated { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let x = crate::curve::wrap(x, self.length);
        match &self.kind {
            Kind::Uniform => 1.0 / self.length,
            Kind::Cosine { c } => (1.0 + c * (2.0 * PI * x / self.length).cos()) / self.length,
            Kind::Tabulated { values, .. } => {
                let k = values.len();
                let h = self.length / k as f64;
                let i = ((x / h).floor() as usize).min(k - 1);
                let u = (x - i as f64 * h) / h;
                values[i] + u * (values[(i + 1) % k] - values[i])
            }
        }
    }

    /// Points in the open interval `(a, b)` (unwrapped coordinates) where
    /// the density has a kink.
    pub(crate) fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        let Kind::Tabulated { values, .. } = &self.kind else {
            return Vec::new();
        };
        let h = self.length / values.len() as f64;
        let first = (a / h).floor() as i64 + 1;
        (first..)
            .map(|k| k as f64 * h)
            .take_while(|&x| x < b)
            .filter(|&x| x > a)
            .collect()
    }

    /// Interval CDF `F(x) = int_0^x rho` for `x` in `[0, L]` (clamped).
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.length);
        match &self.kind {
            Kind::Uniform => x / self.length,
            Kind::Cosine { c } => {
                x / self.length + c * (2.0 * PI * x / self.length).sin() / (2.0 * PI)
            }
            Kind::Tabulated { values, node_cdf } => {
                let k = values.len();
                let h = self.length / k as f64;
                let i = ((x / h).floor() as usize).min(k - 1);
                let u = (x - i as f64 * h) / h;
                let (v0, v1) = (values[i], values[(i + 1) % k]);
                node_cdf[i] + h * (v0 * u + 0.5 * (v1 - v0) * u * u)
            }
        }
    }

    /// Quantile function on `[0, 1]`, returning a parameter in `[0, L]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let l = self.length;
        match &self.kind {
            Kind::Uniform => u * l,
            Kind::Cosine { .. } => {
                // Newton with a bisection bracket; F is strictly increasing
                let (mut lo, mut hi) = (0.0, l);
                let mut x = u * l;
                for _ in 0..100 {
                    let f = self.cdf(x) - u;
                    if f > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let step = f / self.pdf(x);
                    let mut next = x - step;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - x).abs() <= 1e-15 * l {
                        return next;
                    }
                    x = next;
                }
                x
            }
            Kind::Tabulated { values, node_cdf } => {
                let k = values.len();
                let h = l / k as f64;
                let i = node_cdf[1..k].partition_point(|&c| c <= u);
                let r = u - node_cdf[i];
                let (v0, v1) = (values[i], values[(i + 1) % k]);
                // solve h (v0 t + (v1 - v0) t^2 / 2) = r for t in [0, 1]
                let a = r / h;
                let disc = (v0 * v0 + 2.0 * (v1 - v0) * a).max(0.0);
                let denom = v0 + disc.sqrt();
                let t = if denom > 0.0 { 2.0 * a / denom } else { 0.0 };
                (i as f64 + t.clamp(0.0, 1.0)) * h
            }
        }
    }
}

fn check_length(length: f64) -> Result<(), SamplingError> {
    if length.is_finite() && length > 0.0 {
        Ok(())
    } else {
        Err(SamplingError::InvalidDensity(format!("length must be positive, got {length}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;
    use proptest::prelude::*;

    fn all_kinds() -> Vec<Density> {
        vec![
            Density::uniform(2.0).unwrap(),
            Density::cosine(2.0, 0.5).unwrap(),
            Density::cosine(1.0, -0.9).unwrap(),
            Density::tabulated(3.0, &[1.0, 4.0, 0.5, 2.0, 2.0]).unwrap(),
        ]
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in all_kinds() {
            let mass = adaptive(|x| d.pdf(x), 0.0, d.length(), 1e-13).value;
            assert!((mass - 1.0).abs() < 1e-10, "{d:?}: {mass}");
            assert!((d.cdf(d.length()) - 1.0).abs() < 1e-14);
            assert_eq!(d.cdf(0.0), 0.0);
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_pdf() {
        for d in all_kinds() {
            for i in 1..10 {
                let x = d.length() * i as f64 / 10.3;
                let q = adaptive(|t| d.pdf(t), 0.0, x, 1e-13).value;
                assert!((q - d.cdf(x)).abs() < 1e-10, "{d:?} {x}: {q} vs {}", d.cdf(x));
            }
        }
    }

    #[test]
    fn cosine_rejects_unbounded_below() {
        assert!(Density::cosine(1.0, 1.0).is_err());
        assert!(Density::cosine(1.0, -1.5).is_err());
        assert!((Density::cosine(2.0, 0.5).unwrap().lower_bound() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tabulated_rejects_bad_values() {
        assert!(Density::tabulated(1.0, &[1.0, -1.0, 1.0]).is_err());
        assert!(Density::tabulated(1.0, &[0.0, 0.0]).is_err());
        assert!(Density::tabulated(1.0, &[1.0]).is_err());
    }

    #[test]
    fn spec_round_trip_and_file_loading() {
        let spec: DensitySpec = serde_json::from_str(r#"{"kind":"cosine","c":0.5}"#).unwrap();
        assert_eq!(spec, DensitySpec::Cosine { c: 0.5 });
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rho.txt"), "# nodes\n1\n2\n3\n").unwrap();
        let spec: DensitySpec = serde_json::from_str(r#"{"kind":"tabulated","file":"rho.txt"}"#).unwrap();
        let d = spec.build_relative_to(3.0, Some(dir.path())).unwrap();
        assert!((d.pdf(1.0) - 2.0 / 6.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn inverse_cdf_inverts_cdf(frac in 0.0f64..1.0, which in 0usize..4) {
            let d = &all_kinds()[which];
            let x = frac * d.length();
            let back = d.inverse_cdf(d.cdf(x));
            prop_assert!((back - x).abs() < 1e-8, "{} -> {}", x, back);
        }
    }
}
