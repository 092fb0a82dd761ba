//! Poincaré-ball geometry and shallow hyperbolic node embeddings.
//!
//! All functions take a curvature `c > 0`; the ball is `{x : c·|x|² < 1}`.

mod embed;

pub use embed::{embed_train, embed_train_logged, EmbedConfig, EmbeddingObjective};

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Margin kept between projected points and the ball boundary.
pub const BALL_EPS: f64 = 1e-5;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn sq_norm(x: &[f64]) -> f64 {
    dot(x, x)
}

fn check_inside(x: &[f64], c: f64) -> Result<()> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "curvature must be positive, got {c}"
        )));
    }
    let r = c * sq_norm(x);
    if r < 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideBall(r))
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        })
    }
}

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add(x: &[f64], y: &[f64], c: f64) -> Result<Vec<f64>> {
    check_dims(x, y)?;
    check_inside(x, c)?;
    check_inside(y, c)?;
    Ok(mobius_add_unchecked(x, y, c))
}

pub(crate) fn mobius_add_unchecked(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = sq_norm(x);
    let y2 = sq_norm(y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    x.iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / denom)
        .collect()
}

/// Geodesic distance `(2/√c)·artanh(√c·|(-x) ⊕_c y|)`.
pub fn poincare_distance(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    check_dims(x, y)?;
    check_inside(x, c)?;
    check_inside(y, c)?;
    Ok(distance_unchecked(x, y, c))
}

pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], c: f64) -> f64 {
    // |(-x) ⊕ y|² = |x - y|² / (1 - 2c⟨x,y⟩ + c²|x|²|y|²), symmetric in x and y
    let diff: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = 1.0 - 2.0 * c * dot(x, y) + c * c * sq_norm(x) * sq_norm(y);
    let sc = c.sqrt();
    2.0 / sc * (sc * (diff / denom).sqrt()).min(1.0 - 1e-16).atanh()
}

/// Hyperbolic distance of `x` from the origin, `(2/√c)·artanh(√c·|x|)`.
pub fn poincare_norm(x: &[f64], c: f64) -> Result<f64> {
    check_inside(x, c)?;
    Ok(norm_unchecked(x, c))
}

fn norm_unchecked(x: &[f64], c: f64) -> f64 {
    let sc = c.sqrt();
    2.0 / sc * (sc * sq_norm(x).sqrt()).atanh()
}

/// Pulls `x` back to Euclidean radius `(1 - ε)/√c` if it has left that ball.
pub(crate) fn project(x: &mut [f64], c: f64) {
    let max = (1.0 - BALL_EPS) / c.sqrt();
    let r = sq_norm(x).sqrt();
    if r > max {
        let s = max / r;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Points of every node inside the Poincaré ball plus cached Poincaré norms.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareEmbedding {
    dim: usize,
    curvature: f64,
    points: Vec<f64>,
    norms: Vec<f64>,
}

impl PoincareEmbedding {
    /// Wraps row-major `points` (`n × dim`), rejecting any point not strictly
    /// inside the ball.
    pub fn from_points(points: Vec<f64>, dim: usize, curvature: f64) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into rows of width {dim}",
                points.len()
            )));
        }
        let norms = points
            .chunks(dim)
            .map(|p| poincare_norm(p, curvature))
            .collect::<Result<Vec<_>>>()?;
        Ok(PoincareEmbedding {
            dim,
            curvature,
            points,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.points[v * self.dim..(v + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Poincaré norm of node `v`.
    pub fn norm(&self, v: usize) -> f64 {
        self.norms[v]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        distance_unchecked(self.point(u), self.point(v), self.curvature)
    }

    /// Writes rows `node,x0,...,x{dim-1},norm` with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let err = |e| Error::io(path, e);
        let coords: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        writeln!(w, "node,{},norm", coords.join(",")).map_err(err)?;
        for v in 0..self.len() {
            write!(w, "{v}").map_err(err)?;
            for x in self.point(v) {
                write!(w, ",{x:?}").map_err(err)?;
            }
            writeln!(w, ",{:?}", self.norms[v]).map_err(err)?;
        }
        w.flush().map_err(err)
    }

    /// Reads the format of [`PoincareEmbedding::write_csv`]. Norms are
    /// recomputed from the coordinates; rows must cover nodes `0..n`.
    pub fn read_csv(path: &Path, curvature: f64) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("node") {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() < 4 {
                return Err(Error::parse(path, i + 1, "expected node,x0,x1,...,norm"));
            }
            let node = f[0]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad node id"))?;
            let coords = f[1..f.len() - 1]
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(path, i + 1, "bad coordinate"))?;
            if *dim.get_or_insert(coords.len()) != coords.len() {
                return Err(Error::parse(path, i + 1, "inconsistent dimension"));
            }
            rows.push((node, coords));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
            return Err(Error::parse(path, 0, "node ids must be exactly 0..n"));
        }
        let dim = dim.ok_or_else(|| Error::parse(path, 0, "no rows"))?;
        Self::from_points(rows.into_iter().flat_map(|r| r.1).collect(), dim, curvature)
    }
}
