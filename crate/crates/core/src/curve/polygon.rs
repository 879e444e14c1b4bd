use std::f64::consts::PI;
use std::path::Path;

use super::CurveError;

/// Closed polygon with implicit closing edge from the last vertex to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    coords: Vec<f64>,
    dim: usize,
    edge_lengths: Vec<f64>,
    /// Prefix sums of edge lengths, `m + 1` entries, `cum[m]` = total length.
    cum_length: Vec<f64>,
}

impl Polygon {
    pub fn new(vertices: &[Vec<f64>]) -> Result<Self, CurveError> {
        let m = vertices.len();
        if m < 3 {
            return Err(CurveError::TooFewVertices(m));
        }
        let dim = vertices[0].len();
        if dim < 2 {
            return Err(CurveError::BadDimension(dim));
        }
        let mut coords = Vec::with_capacity(m * dim);
        for (index, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(CurveError::InconsistentDimension {
                    index,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(CurveError::NonFinite);
            }
            coords.extend_from_slice(v);
        }
        Self::from_flat(coords, dim)
    }

    fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self, CurveError> {
        let m = coords.len() / dim;
        let mut edge_lengths = Vec::with_capacity(m);
        for i in 0..m {
            let a = &coords[i * dim..(i + 1) * dim];
            let j = (i + 1) % m;
            let b = &coords[j * dim..(j + 1) * dim];
            let len = crate::numeric::dist(a, b);
            if len <= 0.0 {
                return Err(CurveError::DegenerateEdge(i));
            }
            edge_lengths.push(len);
        }
        let mut cum_length = Vec::with_capacity(m + 1);
        cum_length.push(0.0);
        let mut acc = 0.0;
        for l in &edge_lengths {
            acc += l;
            cum_length.push(acc);
        }
        Ok(Self {
            coords,
            dim,
            edge_lengths,
            cum_length,
        })
    }

    /// Regular `m`-gon with the given circumradius in the `xy`-plane of `R^dim`.
    pub fn regular(m: usize, circumradius: f64, dim: usize) -> Result<Self, CurveError> {
        if dim < 2 {
            return Err(CurveError::BadDimension(dim));
        }
        let vertices: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                let mut v = vec![0.0; dim];
                v[0] = circumradius * t.cos();
                v[1] = circumradius * t.sin();
                v
            })
            .collect();
        Self::new(&vertices)
    }

    /// `[0,1]^2` traversed counter-clockwise from the origin.
    pub fn unit_square() -> Self {
        Self::new(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .expect("unit square is valid")
    }

    /// Parses the plain-text vertex format: one vertex per line,
    /// whitespace-separated coordinates, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CurveError> {
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let v = content
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| CurveError::Parse {
                        line: lineno + 1,
                        message: format!("{tok:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            vertices.push(v);
        }
        Self::new(&vertices)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CurveError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in self.vertices() {
            let line: Vec<String> = v.iter().map(|c| format!("{c:?}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn num_vertices(&self) -> usize {
        self.edge_lengths.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        let i = i % self.num_vertices();
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn cum_length(&self) -> &[f64] {
        &self.cum_length
    }

    pub fn length(&self) -> f64 {
        self.cum_length[self.num_vertices()]
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices<F: FnMut(&[f64]) -> Vec<f64>>(&self, mut f: F) -> Result<Self, CurveError> {
        let verts: Vec<Vec<f64>> = self.vertices().map(&mut f).collect();
        Self::new(&verts)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, CurveError> {
        self.map_vertices(|v| v.iter().map(|c| c * factor).collect())
    }

    /// Edge index and offset along it for a parameter in `[0, L)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let m = self.num_vertices();
        let k = self.cum_length[1..m].partition_point(|&c| c <= x);
        (k, x - self.cum_length[k])
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let (k, t) = self.locate(x);
        let a = self.vertex(k);
        let b = self.vertex(k + 1);
        let s = t / self.edge_lengths[k];
        for ((o, pa), pb) in out.iter_mut().zip(a).zip(b) {
            *o = pa + s * (pb - pa);
        }
    }

    pub(crate) fn edge_direction_into(&self, k: usize, out: &mut [f64]) {
        let a = self.vertex(k);
        let b = self.vertex(k + 1);
        let l = self.edge_lengths[k];
        for ((o, pa), pb) in out.iter_mut().zip(a).zip(b) {
            *o = (pb - pa) / l;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_invariants() {
        let sq = Polygon::unit_square();
        assert_eq!(sq.num_vertices(), 4);
        assert_eq!(sq.cum_length(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(sq.length(), sq.edge_lengths().iter().sum::<f64>());
        assert_eq!(sq.locate(2.5), (2, 0.5));
        assert_eq!(sq.locate(3.999), (3, 3.999 - 3.0));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(
            Polygon::new(&[vec![0.0, 0.0], vec![1.0, 0.0]]),
            Err(CurveError::TooFewVertices(2))
        ));
        assert!(matches!(
            Polygon::new(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]]),
            Err(CurveError::DegenerateEdge(0))
        ));
        // closing edge counts too
        assert!(matches!(
            Polygon::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(CurveError::DegenerateEdge(2))
        ));
        assert!(matches!(
            Polygon::new(&[vec![0.0, 0.0], vec![1.0, 0.0, 2.0], vec![0.0, 1.0]]),
            Err(CurveError::InconsistentDimension { index: 1, .. })
        ));
    }

    #[test]
    fn parses_vertex_file_format() {
        let text = "# unit square\n0 0\n1 0   # corner\n\n1 1\n0 1\n";
        let p = Polygon::parse(text).unwrap();
        assert_eq!(p, Polygon::unit_square());
        let err = Polygon::parse("0 0\n1 x\n0 1\n").unwrap_err();
        assert!(matches!(err, CurveError::Parse { line: 2, .. }));
        let round = Polygon::parse(&p.to_text()).unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn regular_polygon_is_equilateral() {
        let p = Polygon::regular(7, 2.0, 3).unwrap();
        let e0 = p.edge_lengths()[0];
        assert!(p.edge_lengths().iter().all(|e| (e - e0).abs() < 1e-14));
        assert!((e0 - 4.0 * (PI / 7.0).sin()).abs() < 1e-14);
    }
}
