//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's search or
//! statistics code.
#![allow(dead_code)]

use pcqa_core::{Point3, PointCloud, Rgb8};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| [0; 3].map(|_: i32| rng.random_range(0.0..extent)))
        .collect()
}

/// Points snapped to an integer lattice so that exact distance ties occur.
pub fn lattice_points(rng: &mut ChaCha8Rng, n: usize, side: i32) -> Vec<Point3> {
    (0..n)
        .map(|_| [0; 3].map(|_: i32| rng.random_range(0..side) as f64))
        .collect()
}

pub fn random_colors(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rgb8> {
    (0..n).map(|_| [0; 3].map(|_: i32| rng.random::<u8>())).collect()
}

pub fn colored(points: Vec<Point3>, colors: Vec<Rgb8>) -> PointCloud {
    PointCloud::new(points).unwrap().with_colors(colors).unwrap()
}

pub fn random_cloud(seed: u64, n: usize, extent: f64) -> PointCloud {
    let mut r = rng(seed);
    let pts = random_points(&mut r, n, extent);
    let cols = random_colors(&mut r, n);
    colored(pts, cols)
}

/// Points on a sphere of `radius`, with colors varying smoothly over it.
pub fn sphere_cloud(seed: u64, n: usize, radius: f64) -> PointCloud {
    let mut r = rng(seed);
    let pts: Vec<Point3> = (0..n)
        .map(|_| {
            let d: [f64; 3] = UnitSphere.sample(&mut r);
            d.map(|c| c * radius)
        })
        .collect();
    let cols = pts
        .iter()
        .map(|p| {
            let t = |c: f64| (127.5 + 127.5 * c / radius).round() as u8;
            [t(p[0]), t(p[1]), t(p[2])]
        })
        .collect();
    colored(pts, cols)
}

/// A gently curved, textured sheet sampled on a jittered grid.
pub fn surface_cloud(seed: u64, side: usize, spacing: f64) -> PointCloud {
    let mut r = rng(seed);
    let jitter = Normal::new(0.0, 0.05 * spacing).unwrap();
    let mut pts = Vec::with_capacity(side * side);
    let mut cols = Vec::with_capacity(side * side);
    let span = side as f64 * spacing;
    for i in 0..side {
        for j in 0..side {
            let x = i as f64 * spacing + jitter.sample(&mut r);
            let y = j as f64 * spacing + jitter.sample(&mut r);
            let z = 0.15 * span * ((x / span * 3.0).sin() * (y / span * 2.0).cos());
            pts.push([x, y, z]);
            let c = |v: f64| (127.5 + 120.0 * v).clamp(0.0, 255.0) as u8;
            cols.push([
                c((x / span * 9.0).sin()),
                c((y / span * 7.0).cos()),
                c(((x + y) / span * 5.0).sin()),
            ]);
        }
    }
    colored(pts, cols)
}

pub fn two_point_cloud() -> PointCloud {
    colored(vec![[0.0, 0.0, 0.0], [1.0, 2.0, 2.0]], vec![[10, 20, 30], [200, 100, 50]])
}

pub fn jitter(cloud: &PointCloud, sigma: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    let pts = cloud
        .positions()
        .iter()
        .map(|p| p.map(|c| c + n.sample(&mut r)))
        .collect();
    let mut out = PointCloud::new(pts).unwrap();
    if let Some(c) = cloud.colors() {
        out = out.with_colors(c.to_vec()).unwrap();
    }
    out
}

/// Rotation matrix from a random unit quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = {
        let n = Normal::new(0.0, 1.0).unwrap();
        let v = [0; 4].map(|_: i32| n.sample(rng));
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        v.map(|c| c / len)
    };
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rigid(cloud: &PointCloud, rot: &[[f64; 3]; 3], t: Point3) -> PointCloud {
    let apply = |p: &Point3| -> Point3 {
        let mut o = [0.0; 3];
        for (r, out) in rot.iter().zip(o.iter_mut()) {
            *out = r[0] * p[0] + r[1] * p[1] + r[2] * p[2];
        }
        [o[0] + t[0], o[1] + t[1], o[2] + t[2]]
    };
    let mut out = PointCloud::new(cloud.positions().iter().map(apply).collect()).unwrap();
    if let Some(c) = cloud.colors() {
        out = out.with_colors(c.to_vec()).unwrap();
    }
    if let Some(n) = cloud.normals() {
        let rn: Vec<Point3> = n
            .iter()
            .map(|v| {
                let mut o = [0.0; 3];
                for (r, out) in rot.iter().zip(o.iter_mut()) {
                    *out = r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
                }
                let len = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
                o.map(|c| c / len)
            })
            .collect();
        out = out.with_normals(rn).unwrap();
    }
    out
}

// ---- oracles -----------------------------------------------------------

pub fn sq_dist(a: &Point3, b: &Point3) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Exhaustive k nearest neighbors, ordered by (squared distance, index).
pub fn brute_knn(points: &[Point3], q: &Point3, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (sq_dist(p, q), i)).collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn brute_nearest(points: &[Point3], q: &Point3) -> usize {
    brute_knn(points, q, 1)[0]
}

pub fn bt709_luma(c: Rgb8) -> f64 {
    (0.2126 * c[0] as f64 + 0.7152 * c[1] as f64 + 0.0722 * c[2] as f64) / 255.0
}

/// Symmetric D1 MSE by exhaustive search.
pub fn brute_d1_mse(a: &PointCloud, b: &PointCloud) -> f64 {
    let one_way = |from: &PointCloud, to: &PointCloud| {
        from.positions()
            .iter()
            .map(|p| sq_dist(p, &to.positions()[brute_nearest(to.positions(), p)]))
            .sum::<f64>()
            / from.len() as f64
    };
    one_way(b, a).max(one_way(a, b))
}

/// Luminance dispersion score: coefficient of variation (sample std) over
/// the k-neighborhood including the point, relative differences, power
/// mean pooling.
pub fn pointssim_oracle(reference: &PointCloud, distorted: &PointCloud, k: usize, exponent: f64) -> f64 {
    let feature = |c: &PointCloud, i: usize| -> f64 {
        let k = k.min(c.len());
        let hood = brute_knn(c.positions(), &c.positions()[i], k);
        let lum: Vec<f64> = hood.iter().map(|&j| bt709_luma(c.colors().unwrap()[j])).collect();
        if lum.len() < 2 {
            return 0.0;
        }
        let m = lum.iter().sum::<f64>() / lum.len() as f64;
        if m == 0.0 {
            return 0.0;
        }
        let s = (lum.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (lum.len() - 1) as f64).sqrt();
        s / m
    };
    let mut total = 0.0;
    for p in 0..distorted.len() {
        let q = brute_nearest(reference.positions(), &distorted.positions()[p]);
        let (fx, fy) = (feature(reference, q), feature(distorted, p));
        let d = if fx == 0.0 && fy == 0.0 {
            0.0
        } else {
            (fx - fy).abs() / fx.abs().max(fy.abs())
        };
        total += d.powf(exponent);
    }
    total / distorted.len() as f64
}

fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let cof = [
        [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
        [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
        [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
    ];
    let det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2];
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[i][j] = cof[j][i] / det;
        }
    }
    inv
}

/// P2D components (geometry_ref_to_dist, geometry_dist_to_ref,
/// color_ref_to_dist, color_dist_to_ref) with an explicit adjugate inverse.
pub fn p2d_oracle(reference: &PointCloud, distorted: &PointCloud, k: usize) -> [f64; 4] {
    let dir = |from: &PointCloud, to: &PointCloud| -> (f64, f64) {
        let k = k.min(to.len());
        let (mut g, mut c) = (0.0, 0.0);
        for (i, p) in from.positions().iter().enumerate() {
            let hood = brute_knn(to.positions(), p, k);
            let n = hood.len() as f64;
            let mut mu = [0.0; 3];
            for &j in &hood {
                for d in 0..3 {
                    mu[d] += to.positions()[j][d] / n;
                }
            }
            let mut cov = [[0.0; 3]; 3];
            for &j in &hood {
                let q = to.positions()[j];
                for r in 0..3 {
                    for s in 0..3 {
                        cov[r][s] += (q[r] - mu[r]) * (q[s] - mu[s]) / n;
                    }
                }
            }
            let load = (1e-9 * (cov[0][0] + cov[1][1] + cov[2][2]) / 3.0).max(1e-12);
            for (d, row) in cov.iter_mut().enumerate() {
                row[d] += load;
            }
            let inv = invert3(cov);
            let delta = [p[0] - mu[0], p[1] - mu[1], p[2] - mu[2]];
            let mut q = 0.0;
            for r in 0..3 {
                for s in 0..3 {
                    q += delta[r] * inv[r][s] * delta[s];
                }
            }
            g += q.max(0.0).sqrt();

            let y = bt709_luma(from.colors().unwrap()[i]);
            let lum: Vec<f64> = hood.iter().map(|&j| bt709_luma(to.colors().unwrap()[j])).collect();
            let m = lum.iter().sum::<f64>() / n;
            let v = lum.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / n;
            let v = v + (1e-9 * v).max(1e-12);
            c += (y - m).abs() / v.sqrt();
        }
        (g / from.len() as f64, c / from.len() as f64)
    };
    let (g_rd, c_rd) = dir(reference, distorted);
    let (g_dr, c_dr) = dir(distorted, reference);
    [g_rd, g_dr, c_rd, c_dr]
}

/// Mean per-sample focal loss, written out per label.
pub fn focal_oracle(x: &[bool], p: &[f64], alpha: f64, gamma: f64) -> f64 {
    let mut total = 0.0;
    for (&xi, &pi) in x.iter().zip(p) {
        let pi = pi.clamp(1e-12, 1.0 - 1e-12);
        total += if xi {
            -alpha * (1.0 - pi).powf(gamma) * pi.ln()
        } else {
            -(1.0 - alpha) * pi.powf(gamma) * (1.0 - pi).ln()
        };
    }
    total / x.len() as f64
}

/// Kruskal–Wallis (H, p) values computed with `scipy.stats.kruskal`.
pub const KRUSKAL_CASES: [(&[&[f64]], f64, f64); 10] = [
    (
        &[&[2.9, 3.0, 2.5, 2.6, 3.2], &[3.8, 2.7, 4.0, 2.4], &[2.8, 3.4, 3.7, 2.2, 2.0]],
        0.7714285714285722,
        0.6799647735788936,
    ),
    (&[&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]], 6.818181818181813, 0.009023438818080334),
    (
        &[&[1.0, 1.0, 2.0, 2.0, 3.0], &[2.0, 3.0, 3.0, 4.0, 4.0], &[4.0, 5.0, 5.0, 5.0, 1.0]],
        5.786666666666664,
        0.05539126698340425,
    ),
    (
        &[&[27.0, 2.0, 4.0, 18.0, 7.0, 9.0], &[20.0, 8.0, 14.0, 36.0, 21.0, 22.0], &[34.0, 31.0, 3.0, 23.0, 30.0, 6.0]],
        2.853801169590639,
        0.240051790590007,
    ),
    (
        &[
            &[6.4, 6.8, 7.2, 8.3, 8.4, 9.1, 9.4, 9.7],
            &[2.5, 3.7, 4.9, 5.4, 5.9, 8.1, 8.2],
            &[1.3, 4.1, 4.9, 5.2, 5.5, 8.2],
        ],
        9.849061861415572,
        0.007266133800809759,
    ),
    (
        &[
            &[83.0, 91.0, 94.0, 89.0, 89.0, 96.0, 91.0, 92.0, 90.0],
            &[91.0, 90.0, 81.0, 83.0, 84.0, 83.0, 88.0, 91.0, 89.0, 84.0],
            &[101.0, 100.0, 91.0, 93.0, 96.0, 95.0, 94.0],
            &[78.0, 82.0, 81.0, 77.0, 79.0, 81.0, 80.0, 81.0],
        ],
        25.628835866962515,
        1.1405727770287795e-05,
    ),
    (
        &[&[3.0, 3.0, 3.0, 4.0], &[3.0, 4.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 3.0], &[5.0, 5.0, 4.0, 4.0]],
        10.1268115942029,
        0.01751838396937806,
    ),
    (&[&[10.5], &[1.0, 2.0], &[3.0, 4.0, 5.0]], 4.285714285714285, 0.11731916609425083),
    (
        &[&[0.1, 0.2, 0.2, 0.3, 0.3, 0.3], &[0.3, 0.4, 0.4, 0.5]],
        5.404411764705879,
        0.020085916545488778,
    ),
    (
        &[
            &[68.0, 72.0, 77.0, 42.0, 53.0],
            &[60.0, 78.0, 54.0, 59.0, 65.0],
            &[41.0, 28.0, 35.0, 50.0, 47.0],
            &[72.0, 55.0, 63.0, 79.0, 61.0],
        ],
        9.941760722347624,
        0.019067733409590754,
    ),
];
