//! Initial data used by the experiments.

use crate::error::{arg, Result};
use crate::geometry::{two_cell_data, CellGrid, Family};
use crate::grid::{Domain, Grid, ScalarField, HEIGHT, WIDTH};
use crate::point::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// Indicator of the left half.
    TwoCell,
    /// Indicator of the left half minus 1/2.
    TwoCellMeanZero,
    Constant { value: f64 },
    /// `sin(2 pi (kx x / sqrt 2 + ky y))`.
    Mode { kx: i32, ky: i32 },
    /// Independent uniform values in `[-1, 1]` on the dyadic cells of `level`, minus their mean.
    RandomPiecewise { level: u32, seed: u64 },
    /// Unit mass spread over the dyadic cell of `level` at the origin, minus its mean.
    DiracCell { level: u32 },
    /// A mean-zero sum of `modes` random low Fourier modes.
    Smooth { modes: usize, seed: u64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::TwoCell
    }
}

impl InitialData {
    pub fn label(&self) -> String {
        match self {
            InitialData::TwoCell => "two-cell".into(),
            InitialData::TwoCellMeanZero => "two-cell-mean-zero".into(),
            InitialData::Constant { value } => format!("constant-{value:e}"),
            InitialData::Mode { kx, ky } => format!("mode-{kx}-{ky}"),
            InitialData::RandomPiecewise { level, .. } => format!("random-piecewise-{level}"),
            InitialData::DiracCell { level } => format!("dirac-cell-{level}"),
            InitialData::Smooth { modes, .. } => format!("smooth-{modes}"),
        }
    }

    pub fn build(&self, grid: Grid, domain: Domain) -> Result<ScalarField> {
        let field = match *self {
            InitialData::TwoCell => two_cell_data(grid, domain),
            InitialData::TwoCellMeanZero => two_cell_data(grid, domain).map(|v| v - 0.5),
            InitialData::Constant { value } => {
                if !value.is_finite() {
                    return arg("constant data must be finite");
                }
                ScalarField::constant(grid, domain, value)
            }
            InitialData::Mode { kx, ky } => ScalarField::from_fn(grid, domain, |p| {
                (2.0 * PI * (kx as f64 * p.x / WIDTH + ky as f64 * p.y)).sin()
            }),
            InitialData::RandomPiecewise { level, seed } => {
                let tiling = CellGrid::new(level, Family::Dyadic)?;
                tiling.check_resolution(&grid)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values: Vec<f64> = (0..tiling.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                remove_mean(ScalarField::from_fn(grid, domain, |p| values[tiling.locate(p)]))
            }
            InitialData::DiracCell { level } => {
                let tiling = CellGrid::new(level, Family::Dyadic)?;
                tiling.check_resolution(&grid)?;
                let area = tiling.cell_width() * tiling.cell_height();
                let cell = ScalarField::from_fn(grid, domain, |p| if tiling.locate(p) == 0 { 1.0 / area } else { 0.0 });
                remove_mean(cell)
            }
            InitialData::Smooth { modes, seed } => {
                if modes == 0 {
                    return arg("smooth data needs at least one mode");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut terms = Vec::with_capacity(modes);
                while terms.len() < modes {
                    let (p, q): (i32, i32) = (rng.random_range(-3..=3), rng.random_range(-3..=3));
                    if p == 0 && q == 0 {
                        continue;
                    }
                    terms.push((p as f64, q as f64, rng.random_range(0.5..1.0), rng.random_range(0.0..2.0 * PI)));
                }
                remove_mean(ScalarField::from_fn(grid, domain, |x| {
                    terms.iter().map(|&(p, q, a, ph)| a * (2.0 * PI * (p * x.x / WIDTH + q * x.y) + ph).cos()).sum()
                }))
            }
        };
        Ok(field)
    }
}

fn remove_mean(field: ScalarField) -> ScalarField {
    let m = field.mean();
    field.map(|v| v - m)
}

/// The mean-zero library probing uniformity over initial data: two-cell,
/// random piecewise constant, a single dyadic cell, and a smooth multimode field.
pub fn data_library(level: u32, seed: u64) -> Vec<InitialData> {
    vec![
        InitialData::TwoCellMeanZero,
        InitialData::RandomPiecewise { level, seed },
        InitialData::DiracCell { level },
        InitialData::Smooth { modes: 5, seed },
    ]
}

/// Discrete total variation `sum |jump| * edge length`, periodic on the torus.
pub fn total_variation(field: &ScalarField) -> f64 {
    let g = field.grid;
    let periodic = field.domain == Domain::Torus;
    let mut acc = crate::compensated::CompensatedSum::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = field.at(i, j);
            if i + 1 < g.nx || periodic {
                acc.add((field.at((i + 1) % g.nx, j) - v).abs() * g.hy());
            }
            if j + 1 < g.ny || periodic {
                acc.add((field.at(i, (j + 1) % g.ny) - v).abs() * g.hx());
            }
        }
    }
    acc.value()
}

/// Random points whose distance to the edges of `B` is at least `margin`.
pub fn interior_points(n: usize, margin: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(rng.random_range(margin..WIDTH - margin), rng.random_range(margin..HEIGHT - margin)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_mean_zero() {
        let g = Grid::new(128, 90).unwrap();
        for d in data_library(3, 1) {
            let f = d.build(g, Domain::Torus).unwrap();
            assert!(f.mean().abs() < 1e-12, "{}", d.label());
            assert!(total_variation(&f) > 0.0);
        }
    }

    #[test]
    fn two_cell_variation_is_twice_the_height() {
        let g = Grid::new(128, 90).unwrap();
        let f = InitialData::TwoCell.build(g, Domain::Torus).unwrap();
        assert!((total_variation(&f) - 2.0).abs() < 1e-12);
        let b = InitialData::TwoCell.build(g, Domain::Box).unwrap();
        assert!((total_variation(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_form_is_tagged() {
        let d: InitialData = toml::from_str("kind = \"random-piecewise\"\nlevel = 2\nseed = 4").unwrap();
        assert_eq!(d, InitialData::RandomPiecewise { level: 2, seed: 4 });
        assert!(toml::from_str::<InitialData>("kind = \"mode\"\nkx = 1\nky = 0\nextra = 1").is_err());
    }
}
