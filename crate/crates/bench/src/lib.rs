//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stormbench::geometry::{Point3, PointCloud};
use stormbench::{generate_synthetic_scene, OrientedBox3D, SceneSpec};

/// Frame 0 of the default synthetic scene and its target box.
pub fn scene_frame(seed: u64) -> (PointCloud, OrientedBox3D) {
    let f = generate_synthetic_scene(&SceneSpec::default(), seed)
        .frames
        .swap_remove(0);
    (f.cloud, f.gt_box.expect("synthetic frames are labelled"))
}

pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(0.0..1.0),
                )
            })
            .collect(),
    )
}

/// Overlapping rotated box pairs.
pub fn box_pairs(n: usize, seed: u64) -> Vec<(OrientedBox3D, OrientedBox3D)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = OrientedBox3D::new([0.0, 0.0, 0.0], [4.0, 1.8, 1.5], rng.random_range(-3.0..3.0)).unwrap();
            let b = OrientedBox3D::new(
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.3..0.3),
                ],
                [3.8, 1.7, 1.6],
                rng.random_range(-3.0..3.0),
            )
            .unwrap();
            (a, b)
        })
        .collect()
}
