//! Initial phase fields.

use std::f64::consts::PI;

use crate::grid::{Grid, ScalarField};

use super::config::Bubble;

/// `0.24 cos(2 pi x) cos(2 pi y) + 0.4 cos(pi x) cos(3 pi y)` at cell centers.
pub fn init_cosine(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        0.24 * (2.0 * PI * x).cos() * (2.0 * PI * y).cos() + 0.4 * (PI * x).cos() * (3.0 * PI * y).cos()
    })
}

/// SplitMix64 output for counter `k` under `seed`:
/// `z = seed + (k + 1) * 0x9E3779B97F4A7C15`, then the standard mixing rounds.
pub fn splitmix64(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
pub fn uniform(seed: u64, k: u64) -> f64 {
    (splitmix64(seed, k) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `mean + amplitude * (2 U_k - 1)` with `U_k = uniform(seed, k)` for flat cell
/// index `k`, so any implementation of the generator reproduces the field.
pub fn init_spinodal(grid: Grid, mean: f64, amplitude: f64, seed: u64) -> ScalarField {
    let data = (0..grid.n_cells() as u64)
        .map(|k| mean + amplitude * (2.0 * uniform(seed, k) - 1.0))
        .collect();
    ScalarField::from_vec(grid, data).expect("cell count")
}

/// `1 + sum_i tanh((r_i - |x - c_i|) / (w_i eta))`.
pub fn init_bubbles(grid: Grid, eta: f64, bubbles: &[Bubble]) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        1.0 + bubbles
            .iter()
            .map(|b| ((b.radius - (x - b.cx).hypot(y - b.cy)) / (b.width_factor * eta)).tanh())
            .sum::<f64>()
    })
}
