//! The point-cloud record shared by every other module.

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];
pub type Rgb8 = [u8; 3];

/// Largest tolerated deviation of a stored normal from unit length.
pub const NORMAL_TOLERANCE: f64 = 1e-6;

/// Positions plus optional per-point colors and unit normals.
///
/// Coordinates are always held as `f64`, regardless of the precision of
/// the file they were read from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    colors: Option<Vec<Rgb8>>,
    normals: Option<Vec<Point3>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidCloud("no points".into()));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidCloud(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            positions,
            colors: None,
            normals: None,
        })
    }

    pub fn with_colors(mut self, colors: Vec<Rgb8>) -> Result<Self> {
        if colors.len() != self.positions.len() {
            return Err(Error::InvalidCloud(format!(
                "{} colors for {} points",
                colors.len(),
                self.positions.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_normals(mut self, normals: Vec<Point3>) -> Result<Self> {
        if normals.len() != self.positions.len() {
            return Err(Error::InvalidCloud(format!(
                "{} normals for {} points",
                normals.len(),
                self.positions.len()
            )));
        }
        for (i, n) in normals.iter().enumerate() {
            let len = norm(n);
            if !len.is_finite() || (len - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(Error::InvalidCloud(format!(
                    "normal {i} has length {len}, expected 1"
                )));
            }
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn without_colors(mut self) -> Self {
        self.colors = None;
        self
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// Always false; kept for the `len`/`is_empty` convention.
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Rgb8]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Point3]> {
        self.normals.as_deref()
    }

    pub fn require_colors(&self) -> Result<&[Rgb8]> {
        self.colors().ok_or(Error::MissingAttribute("colors"))
    }

    pub fn require_normals(&self) -> Result<&[Point3]> {
        self.normals().ok_or(Error::MissingAttribute("normals"))
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.positions.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for a in 0..3 {
                c[a] += p[a];
            }
        }
        c.map(|v| v / n)
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.positions {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        distance(&lo, &hi)
    }
}

pub(crate) fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

pub fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    squared_distance(a, b).sqrt()
}
