//! Fixtures shared by the benchmarks.

use rangeclust::data::{generate, GenSpec, Mixture};
use rangeclust::{BuildParams, Point, RangeIndex, Rect};

pub fn dataset(n: usize, d: usize, clustered: bool) -> Vec<Point> {
    let mixture = if clustered { Mixture::Gaussians { m: 5, sigma: 0.05 } } else { Mixture::Uniform };
    generate(&GenSpec { n, d, mixture, seed: 17 }).expect("valid spec")
}

pub fn index(n: usize, d: usize, clustered: bool) -> RangeIndex {
    RangeIndex::build(&dataset(n, d, clustered), BuildParams::default()).expect("valid data")
}

/// `m` reproducible query boxes whose corners are drawn uniformly from the unit cube.
pub fn boxes(m: usize, d: usize) -> Vec<Rect> {
    let corners = generate(&GenSpec { n: 2 * m, d, mixture: Mixture::Uniform, seed: 29 }).expect("valid spec");
    corners
        .chunks(2)
        .map(|c| {
            let lo: Vec<f64> = (0..d).map(|i| c[0][i].min(c[1][i])).collect();
            let hi: Vec<f64> = (0..d).map(|i| c[0][i].max(c[1][i])).collect();
            Rect::new(&lo, &hi).expect("ordered corners")
        })
        .collect()
}
