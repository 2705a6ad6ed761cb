//! Two-dimensional assignment by a polyline boundary.
//!
//! Points left of the directed path are control (label 0), points right of
//! it are intervention (label 1). Points within [`ON_PATH_TOLERANCE`] of the
//! path go to the intervention side and are flagged.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GPFit;
use crate::inference::{effect_size, LabelFunction};

pub const ON_PATH_TOLERANCE: f64 = 1e-9;

type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn orient(a: P2, b: P2, c: P2) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: P2, b: P2, p: P2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Directed open polyline in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolyline {
    vertices: Vec<P2>,
}

/// Side of the boundary a point falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    /// `true` for intervention (right of the path).
    pub intervention: bool,
    /// Point lies on the path within tolerance.
    pub on_path: bool,
}

impl BoundaryPolyline {
    pub fn new(vertices: Vec<P2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Input("a boundary needs at least two vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("boundary vertices must be finite".into()));
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::Input(format!("boundary vertices {i} and {} coincide", i + 1)));
            }
        }
        let m = vertices.len() - 1;
        for i in 0..m {
            let (a, b) = (vertices[i], vertices[i + 1]);
            if i + 1 < m {
                let c = vertices[i + 2];
                if orient(a, b, c) == 0.0 && dot(sub(b, a), sub(c, b)) < 0.0 {
                    return Err(Error::Input(format!("boundary folds back on itself at vertex {}", i + 1)));
                }
            }
            for j in i + 2..m {
                if segments_intersect(a, b, vertices[j], vertices[j + 1]) {
                    return Err(Error::Input(format!("boundary segments {i} and {j} intersect")));
                }
            }
        }
        Ok(Self { vertices })
    }

    /// Parses one `x y` vertex per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Input(format!(
                    "boundary line {}: expected two coordinates, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut v = [0.0; 2];
            for (k, f) in fields.iter().enumerate() {
                v[k] = f.parse().map_err(|_| {
                    Error::Input(format!("boundary line {}: '{f}' is not a number", lineno + 1))
                })?;
            }
            vertices.push(v);
        }
        Self::new(vertices)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read boundary file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices }
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.vertices.windows(2).map(|w| dot(sub(w[1], w[0]), sub(w[1], w[0])).sqrt()).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Side of the path for `p`, judged against the nearest point of the path.
    pub fn classify(&self, p: P2) -> Side {
        let m = self.vertices.len() - 1;
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for i in 0..m {
            let (a, b) = (self.vertices[i], self.vertices[i + 1]);
            let ab = sub(b, a);
            let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d2 = dot(sub(p, q), sub(p, q));
            if d2 < best.0 {
                best = (d2, i, t);
            }
        }
        let (d2, i, t) = best;
        if d2.sqrt() <= ON_PATH_TOLERANCE {
            return Side { intervention: true, on_path: true };
        }
        let left_of = |k: usize| orient(self.vertices[k], self.vertices[k + 1], p) > 0.0;
        // nearest point is an interior vertex joining segments (k−1, k)
        let corner = if t == 0.0 && i > 0 {
            Some(i)
        } else if t == 1.0 && i + 1 < m {
            Some(i + 1)
        } else {
            None
        };
        let left = match corner {
            None => left_of(i),
            Some(k) => {
                let turn = orient(self.vertices[k - 1], self.vertices[k], self.vertices[k + 1]);
                if turn > 0.0 {
                    left_of(k - 1) && left_of(k)
                } else {
                    left_of(k - 1) || left_of(k)
                }
            }
        };
        Side { intervention: !left, on_path: false }
    }

    /// Label function for 2-D data.
    pub fn label_function(&self) -> LabelFunction {
        let boundary = self.clone();
        LabelFunction::predicate(move |x: &[f64]| boundary.classify([x[0], x[1]]).intervention)
    }

    /// `count ≥ 2` points equally spaced by arc length, both endpoints included,
    /// with their arc-length positions.
    pub fn boundary_points(&self, count: usize) -> Result<Vec<(f64, P2)>> {
        if count < 2 {
            return Err(Error::Input(format!("boundary point count must be at least 2, got {count}")));
        }
        let lengths = self.segment_lengths();
        let total: f64 = lengths.iter().sum();
        let mut out = Vec::with_capacity(count);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for j in 0..count {
            if j == count - 1 {
                out.push((total, *self.vertices.last().expect("at least two vertices")));
                break;
            }
            let s = total * j as f64 / (count - 1) as f64;
            while seg + 1 < lengths.len() && s > seg_start + lengths[seg] {
                seg_start += lengths[seg];
                seg += 1;
            }
            let t = ((s - seg_start) / lengths[seg]).clamp(0.0, 1.0);
            let (a, b) = (self.vertices[seg], self.vertices[seg + 1]);
            out.push((s, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
        }
        Ok(out)
    }

    /// Arc-length midpoint of the path.
    pub fn midpoint(&self) -> P2 {
        let pts = self.boundary_points(3).expect("count is valid");
        pts[1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Arc length from the first vertex.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub mean: f64,
    pub var: f64,
}

/// Effect posterior under M1 at points along the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectProfile {
    pub points: Vec<ProfilePoint>,
}

pub fn effect_profile(
    control: &GPFit,
    intervention: &GPFit,
    boundary: &BoundaryPolyline,
    count: usize,
) -> Result<EffectProfile> {
    if control.data.dim() != 2 || intervention.data.dim() != 2 {
        return Err(Error::Input("effect profiles require two-dimensional fits".into()));
    }
    let points = boundary
        .boundary_points(count)?
        .into_iter()
        .map(|(s, p)| {
            let (mean, var) = effect_size(control, intervention, &p)?;
            Ok(ProfilePoint { s, x: p[0], y: p[1], mean, var })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectProfile { points })
}
