mod common;

use common::{random_cloud, rng};
use pcqa_core::ply::{parse_ply, write_ply, PlyFormat};
use pcqa_core::PointCloud;
use proptest::prelude::*;
use rand_distr::{Distribution, UnitSphere};

#[test]
fn binary_round_trip_is_byte_identical_at_10k_points() {
    let mut r = rng(11);
    let base = random_cloud(11, 10_000, 1000.0);
    let normals: Vec<[f64; 3]> = (0..base.len()).map(|_| UnitSphere.sample(&mut r)).collect();
    let cloud = base.with_normals(normals).unwrap();
    let bytes = write_ply(&cloud, PlyFormat::BinaryLittleEndian);
    let back = parse_ply(&bytes).unwrap();
    assert_eq!(back, cloud);
    assert_eq!(write_ply(&back, PlyFormat::BinaryLittleEndian), bytes);
}

#[test]
fn ascii_round_trip_keeps_nine_digits() {
    let cloud = random_cloud(3, 500, 1.0);
    let back = parse_ply(&write_ply(&cloud, PlyFormat::Ascii)).unwrap();
    assert_eq!(back.colors(), cloud.colors());
    for (a, b) in back.positions().iter().zip(cloud.positions()) {
        for d in 0..3 {
            assert!((a[d] - b[d]).abs() <= 1e-8 * b[d].abs().max(1e-300));
        }
    }
    let again = write_ply(&back, PlyFormat::Ascii);
    assert_eq!(parse_ply(&again).unwrap(), back);
}

proptest! {
    #[test]
    fn binary_round_trip(coords in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 1..200)) {
        let cloud = PointCloud::new(coords).unwrap();
        let bytes = write_ply(&cloud, PlyFormat::BinaryLittleEndian);
        let back = parse_ply(&bytes).unwrap();
        prop_assert_eq!(&back, &cloud);
    }
}
