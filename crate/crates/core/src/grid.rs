//! Evaluation grids.

use crate::dgp::SupportSpec;
use crate::llr::Sample;

/// `m` evenly spaced points from `a` to `b`, both included.
pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => {
            let step = (b - a) / (m - 1) as f64;
            (0..m).map(|i| if i + 1 == m { b } else { a + step * i as f64 }).collect()
        }
    }
}

/// Tensor grid with `m` points per axis covering the box, endpoints included.
/// The first axis varies slowest.
pub fn box_grid(support: &SupportSpec, m: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..support.dim())
        .map(|l| linspace(support.lower()[l], support.upper()[l], m))
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

/// `m` points spanning `[min Y − h₂, max Y + h₂]`, plus one point below and
/// one above where the smoothed estimate is exactly constant in `y`.
/// Returned in ascending order, length `m + 2`.
pub fn sample_y_grid(sample: &Sample, h2: f64, m: usize) -> Vec<f64> {
    let lo = sample.y_min() - h2;
    let hi = sample.y_max() + h2;
    let mut grid = Vec::with_capacity(m + 2);
    grid.push(lo - h2);
    grid.extend(linspace(lo, hi, m));
    grid.push(hi + h2);
    grid
}
