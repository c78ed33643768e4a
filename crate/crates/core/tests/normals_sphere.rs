mod common;

use common::sphere_cloud;
use pcqa_core::normals::estimate_normals;

#[test]
fn sphere_normals_are_radial() {
    let radius = 50.0;
    let cloud = sphere_cloud(41, 5000, radius);
    let est = estimate_normals(&cloud, 5.0).unwrap();
    assert!(est.failures.is_empty());
    let with = est.apply(cloud.clone()).unwrap();
    let cos5 = 5f64.to_radians().cos();
    let good = with
        .positions()
        .iter()
        .zip(with.normals().unwrap())
        .filter(|(p, n)| {
            let r = p.map(|c| c / radius);
            r[0] * n[0] + r[1] * n[1] + r[2] * n[2] >= cos5
        })
        .count();
    assert!(good as f64 >= 0.99 * cloud.len() as f64, "{good} of {}", cloud.len());
    for n in with.normals().unwrap() {
        assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn isolated_points_are_reported() {
    let cloud = pcqa_core::PointCloud::new(vec![[0.0; 3], [100.0, 0.0, 0.0], [0.0, 100.0, 0.0]]).unwrap();
    let est = estimate_normals(&cloud, 1.0).unwrap();
    assert_eq!(est.failures.len(), 3);
    assert!(est.apply(cloud).is_err());
}
