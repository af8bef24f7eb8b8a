#![allow(dead_code)]

use ifs_core::{ComparisonFn, IndexFamily, IteratedSystem, MapSpec, Mode, WorkingBox};
use ifs_core::system::Piece;
use rand::Rng;

pub fn sim(scale: f64, offset: Vec<f64>) -> MapSpec {
    MapSpec::Similarity {
        scale,
        rotation: None,
        offset,
    }
}

pub fn cantor() -> IteratedSystem {
    IteratedSystem::new(
        1,
        WorkingBox::new(vec![-1.0], vec![2.0]).unwrap(),
        IndexFamily::Explicit(vec![sim(1.0 / 3.0, vec![0.0]), sim(1.0 / 3.0, vec![2.0 / 3.0])]),
        ComparisonFn::linear(1.0 / 3.0).unwrap(),
        Mode::Pc,
    )
    .unwrap()
}

pub fn sierpinski(mode: Mode) -> IteratedSystem {
    IteratedSystem::new(
        2,
        WorkingBox::new(vec![-0.5, -0.5], vec![1.5, 1.5]).unwrap(),
        IndexFamily::Explicit(vec![
            sim(0.5, vec![0.0, 0.0]),
            sim(0.5, vec![0.5, 0.0]),
            sim(0.5, vec![0.25, 0.5]),
        ]),
        ComparisonFn::linear(0.5).unwrap(),
        mode,
    )
    .unwrap()
}

/// One map halving toward 0 on [0,1] and toward 2 on [2,3].
pub fn two_component(mode: Mode) -> IteratedSystem {
    let piece = |lo: f64, hi: f64, offset: f64| Piece {
        min: vec![lo],
        max: vec![hi],
        matrix: vec![vec![0.5]],
        offset: vec![offset],
    };
    IteratedSystem::new(
        1,
        WorkingBox::new(vec![0.0], vec![3.0]).unwrap(),
        IndexFamily::Explicit(vec![MapSpec::PiecewiseAffine {
            pieces: vec![piece(0.0, 1.0, 0.0), piece(2.0, 3.0, 1.0)],
        }]),
        ComparisonFn::linear(0.5).unwrap(),
        mode,
    )
    .unwrap()
}

/// `n_maps` affine maps on R^d with Frobenius norm (hence operator norm) at
/// most `norm`, in pc mode with φ(r) = norm·r.
pub fn random_affine<R: Rng>(rng: &mut R, d: usize, n_maps: usize, norm: f64) -> IteratedSystem {
    let maps = (0..n_maps)
        .map(|_| {
            let mut m: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let fro = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            let target = rng.random_range(0.3..norm);
            for row in &mut m {
                for v in row.iter_mut() {
                    *v *= target / fro;
                }
            }
            MapSpec::Affine {
                matrix: m,
                offset: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            }
        })
        .collect();
    let reach = 2.0 * (d as f64).sqrt() / (1.0 - norm);
    IteratedSystem::new(
        d,
        WorkingBox::new(vec![-reach; d], vec![reach; d]).unwrap(),
        IndexFamily::Explicit(maps),
        ComparisonFn::linear(norm).unwrap(),
        Mode::Pc,
    )
    .unwrap()
}

/// All f_ω(0) and f_ω(1), |ω| = depth, for the Cantor maps, by ternary expansion.
pub fn cantor_oracle(depth: u32) -> ifs_core::PointSet {
    let scale = 3f64.powi(-(depth as i32));
    let mut pts = Vec::new();
    for code in 0..(1u64 << depth) {
        let mut left = 0.0;
        for k in 0..depth {
            if code >> (depth - 1 - k) & 1 == 1 {
                left += 2.0 * 3f64.powi(-(k as i32 + 1));
            }
        }
        pts.push(left);
        pts.push(left + scale);
    }
    ifs_core::PointSet::from_scalars(&pts).unwrap()
}
