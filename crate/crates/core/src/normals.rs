//! Local surface fitting and normal estimation.
//!
//! Around each point the neighborhood is put in a PCA frame (third axis =
//! smallest-variance direction) and a height field
//! `w = a·u² + b·u·v + c·v² + d·u + e·v + f` is least-squares fitted in that
//! frame. Neighborhoods too small for the quadric fall back to the PCA plane.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::{dot, sub, Point3, PointCloud};
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

pub const MIN_QUADRIC_NEIGHBORS: usize = 6;
pub const MIN_PLANE_NEIGHBORS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Quadric,
    Plane,
}

/// A height field over a local orthonormal frame anchored at `origin`.
#[derive(Debug, Clone)]
pub struct LocalSurface {
    origin: Vector3<f64>,
    axes: [Vector3<f64>; 3],
    coeffs: [f64; 6],
    kind: SurfaceKind,
}

fn v3(p: &Point3) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

/// PCA axes of a point set, ordered by decreasing variance.
pub fn principal_axes(points: &[Point3]) -> [Vector3<f64>; 3] {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |acc, p| acc + v3(p)) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = v3(p) - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    order.map(|i| eig.eigenvectors.column(i).into_owned())
}

impl LocalSurface {
    /// Fits a surface to `points`, anchored at `origin`. Returns `None` for
    /// fewer than three points.
    pub fn fit(points: &[Point3], origin: &Point3) -> Option<Self> {
        if points.len() < MIN_PLANE_NEIGHBORS {
            return None;
        }
        let axes = principal_axes(points);
        let origin = v3(origin);
        let local: Vec<[f64; 3]> = points
            .iter()
            .map(|p| {
                let d = v3(p) - origin;
                [d.dot(&axes[0]), d.dot(&axes[1]), d.dot(&axes[2])]
            })
            .collect();

        if points.len() < MIN_QUADRIC_NEIGHBORS {
            let n = points.len() as f64;
            let f = local.iter().map(|l| l[2]).sum::<f64>() / n;
            return Some(Self {
                origin,
                axes,
                coeffs: [0.0, 0.0, 0.0, 0.0, 0.0, f],
                kind: SurfaceKind::Plane,
            });
        }

        let scale = local
            .iter()
            .map(|l| l[0].hypot(l[1]))
            .fold(0.0f64, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let design = DMatrix::from_fn(local.len(), 6, |r, c| {
            let (u, v) = (local[r][0] / scale, local[r][1] / scale);
            match c {
                0 => u * u,
                1 => u * v,
                2 => v * v,
                3 => u,
                4 => v,
                _ => 1.0,
            }
        });
        let rhs = DVector::from_iterator(local.len(), local.iter().map(|l| l[2] / scale));
        let solution = design
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .ok()
            .filter(|s| s.iter().all(|c| c.is_finite()))?;
        let s = solution;
        Some(Self {
            origin,
            axes,
            coeffs: [s[0] / scale, s[1] / scale, s[2] / scale, s[3], s[4], s[5] * scale],
            kind: SurfaceKind::Quadric,
        })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn coefficients(&self) -> [f64; 6] {
        self.coeffs
    }

    /// Coordinates of `p` in the local frame.
    pub fn to_local(&self, p: &Point3) -> [f64; 3] {
        let d = v3(p) - self.origin;
        [d.dot(&self.axes[0]), d.dot(&self.axes[1]), d.dot(&self.axes[2])]
    }

    pub fn height(&self, u: f64, v: f64) -> f64 {
        let [a, b, c, d, e, f] = self.coeffs;
        a * u * u + b * u * v + c * v * v + d * u + e * v + f
    }

    fn gradient(&self, u: f64, v: f64) -> (f64, f64) {
        let [a, b, c, d, e, _] = self.coeffs;
        (2.0 * a * u + b * v + d, b * u + 2.0 * c * v + e)
    }

    /// Unit surface normal above (u, v), in world coordinates.
    pub fn normal_at(&self, u: f64, v: f64) -> Point3 {
        let (fu, fv) = self.gradient(u, v);
        let n = (-fu * self.axes[0] - fv * self.axes[1] + self.axes[2]).normalize();
        [n.x, n.y, n.z]
    }

    /// Mean curvature of the height field at (u, v), sign relative to the
    /// frame's third axis.
    pub fn mean_curvature_at(&self, u: f64, v: f64) -> f64 {
        let [a, b, c, ..] = self.coeffs;
        let (fu, fv) = self.gradient(u, v);
        let (fuu, fuv, fvv) = (2.0 * a, b, 2.0 * c);
        let g = 1.0 + fu * fu + fv * fv;
        ((1.0 + fv * fv) * fuu - 2.0 * fu * fv * fuv + (1.0 + fu * fu) * fvv) / (2.0 * g.powf(1.5))
    }

    /// Projects `p` onto the surface along the frame's third axis.
    /// Returns the projected world point and its (u, v) parameters.
    pub fn project(&self, p: &Point3) -> (Point3, [f64; 2]) {
        let [u, v, _] = self.to_local(p);
        let w = self.height(u, v);
        let q = self.origin + u * self.axes[0] + v * self.axes[1] + w * self.axes[2];
        ([q.x, q.y, q.z], [u, v])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalDiagnostic {
    pub point: usize,
    pub neighbors: usize,
}

/// Output of [`estimate_normals`]: one entry per point.
#[derive(Debug, Clone)]
pub struct NormalEstimation {
    pub normals: Vec<Option<Point3>>,
    pub methods: Vec<Option<SurfaceKind>>,
    pub failures: Vec<NormalDiagnostic>,
}

impl NormalEstimation {
    /// Attaches the normals to `cloud`; fails if any point had none.
    pub fn apply(self, cloud: PointCloud) -> Result<PointCloud> {
        if !self.failures.is_empty() {
            return Err(Error::NormalEstimation(
                self.failures.iter().map(|f| f.point).collect(),
            ));
        }
        let normals = self.normals.into_iter().map(Option::unwrap).collect();
        cloud.with_normals(normals)
    }
}

/// Orients `n` so that it does not point toward `centroid` from `p`.
fn orient(mut n: Point3, p: &Point3, centroid: &Point3) -> Point3 {
    let s = dot(&n, &sub(p, centroid));
    let flip = if s != 0.0 {
        s < 0.0
    } else {
        n.iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0)
    };
    if flip {
        n = n.map(|c| -c);
    }
    n
}

pub fn estimate_normals(cloud: &PointCloud, radius: f64) -> Result<NormalEstimation> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("normal radius must be > 0, got {radius}")));
    }
    let index = NeighborIndex::new(cloud.positions());
    Ok(estimate_normals_with_index(cloud, &index, radius))
}

pub fn estimate_normals_with_index(
    cloud: &PointCloud,
    index: &NeighborIndex,
    radius: f64,
) -> NormalEstimation {
    let centroid = cloud.centroid();
    let positions = cloud.positions();
    let per_point: Vec<(Option<Point3>, Option<SurfaceKind>, usize)> = positions
        .par_iter()
        .map(|p| {
            let hood: Vec<Point3> = index
                .within_radius(p, radius)
                .iter()
                .map(|n| positions[n.index])
                .collect();
            match LocalSurface::fit(&hood, p) {
                Some(s) => {
                    let n = orient(s.normal_at(0.0, 0.0), p, &centroid);
                    (Some(n), Some(s.kind()), hood.len())
                }
                None => (None, None, hood.len()),
            }
        })
        .collect();

    let mut out = NormalEstimation {
        normals: Vec::with_capacity(per_point.len()),
        methods: Vec::with_capacity(per_point.len()),
        failures: Vec::new(),
    };
    for (i, (n, kind, count)) in per_point.into_iter().enumerate() {
        if n.is_none() {
            out.failures.push(NormalDiagnostic {
                point: i,
                neighbors: count,
            });
        }
        out.normals.push(n);
        out.methods.push(kind);
    }
    out
}
