//! 3D convex hull volume.
//!
//! Quickhull-style incremental construction: every unprocessed point sits in
//! the outside set of one face, the farthest outside point of some face is
//! added next, and the faces it sees are replaced by a fan over the horizon.

use std::collections::HashSet;

use crate::cloud::Point3;

/// Orientation predicate tolerance.
pub const HULL_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullVolume {
    pub volume: f64,
    /// True when the points span less than three dimensions.
    pub degenerate: bool,
}

fn orient(a: &Point3, b: &Point3, c: &Point3, p: &Point3) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

struct Face {
    v: [usize; 3],
    outside: Vec<usize>,
    alive: bool,
}

fn initial_simplex(pts: &[Point3]) -> Option<[usize; 4]> {
    let d2 = |a: &Point3, b: &Point3| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
    let i0 = 0;
    let i1 = (0..pts.len()).max_by(|&a, &b| d2(&pts[i0], &pts[a]).total_cmp(&d2(&pts[i0], &pts[b])))?;
    if d2(&pts[i0], &pts[i1]).sqrt() <= HULL_EPSILON {
        return None;
    }
    let line_d2 = |p: &Point3| {
        let u = [pts[i1][0] - pts[i0][0], pts[i1][1] - pts[i0][1], pts[i1][2] - pts[i0][2]];
        let w = [p[0] - pts[i0][0], p[1] - pts[i0][1], p[2] - pts[i0][2]];
        let c = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
        c.iter().map(|x| x * x).sum::<f64>()
    };
    let i2 = (0..pts.len()).max_by(|&a, &b| line_d2(&pts[a]).total_cmp(&line_d2(&pts[b])))?;
    if line_d2(&pts[i2]).sqrt() <= HULL_EPSILON {
        return None;
    }
    let i3 = (0..pts.len()).max_by(|&a, &b| {
        orient(&pts[i0], &pts[i1], &pts[i2], &pts[a])
            .abs()
            .total_cmp(&orient(&pts[i0], &pts[i1], &pts[i2], &pts[b]).abs())
    })?;
    if orient(&pts[i0], &pts[i1], &pts[i2], &pts[i3]).abs() <= HULL_EPSILON {
        return None;
    }
    Some([i0, i1, i2, i3])
}

/// Volume of the convex hull of `points`. Duplicates are harmless.
pub fn convex_hull_volume(points: &[Point3]) -> HullVolume {
    let degenerate = HullVolume {
        volume: 0.0,
        degenerate: true,
    };
    if points.len() < 4 {
        return degenerate;
    }
    let Some([a, b, c, d]) = initial_simplex(points) else {
        return degenerate;
    };
    let pts = points;
    let interior = [0, 1, 2].map(|k| (pts[a][k] + pts[b][k] + pts[c][k] + pts[d][k]) / 4.0);

    // Faces are wound so that the interior lies on the negative side.
    let make = |v: [usize; 3]| -> [usize; 3] {
        if orient(&pts[v[0]], &pts[v[1]], &pts[v[2]], &interior) > 0.0 {
            [v[0], v[2], v[1]]
        } else {
            v
        }
    };
    let mut faces: Vec<Face> = [[a, b, c], [a, b, d], [a, c, d], [b, c, d]]
        .into_iter()
        .map(|v| Face {
            v: make(v),
            outside: Vec::new(),
            alive: true,
        })
        .collect();

    let side = |f: &[usize; 3], p: usize| orient(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[p]);

    let simplex = [a, b, c, d];
    for p in 0..pts.len() {
        if simplex.contains(&p) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| side(&f.v, p) > HULL_EPSILON) {
            f.outside.push(p);
        }
    }

    let mut cursor = 0;
    while cursor < faces.len() {
        if !faces[cursor].alive || faces[cursor].outside.is_empty() {
            cursor += 1;
            continue;
        }
        let fv = faces[cursor].v;
        let apex = *faces[cursor]
            .outside
            .iter()
            .max_by(|&&x, &&y| side(&fv, x).total_cmp(&side(&fv, y)).then(y.cmp(&x)))
            .unwrap();

        let visible: Vec<usize> = (0..faces.len())
            .filter(|&i| faces[i].alive && side(&faces[i].v, apex) > HULL_EPSILON)
            .collect();
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for &i in &visible {
            let v = faces[i].v;
            for k in 0..3 {
                edges.insert((v[k], v[(k + 1) % 3]));
            }
        }
        let mut orphans = Vec::new();
        let mut horizon = Vec::new();
        for &i in &visible {
            let v = faces[i].v;
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                if !edges.contains(&(e.1, e.0)) {
                    horizon.push(e);
                }
            }
            faces[i].alive = false;
            orphans.append(&mut faces[i].outside);
        }
        let first_new = faces.len();
        for (u, w) in horizon {
            faces.push(Face {
                v: [u, w, apex],
                outside: Vec::new(),
                alive: true,
            });
        }
        for p in orphans {
            if p == apex {
                continue;
            }
            if let Some(f) = faces[first_new..].iter_mut().find(|f| side(&f.v, p) > HULL_EPSILON) {
                f.outside.push(p);
            }
        }
    }

    let volume: f64 = faces
        .iter()
        .filter(|f| f.alive)
        .map(|f| -orient(&pts[f.v[0]], &pts[f.v[1]], &pts[f.v[2]], &interior) / 6.0)
        .sum();
    HullVolume {
        volume,
        degenerate: false,
    }
}
