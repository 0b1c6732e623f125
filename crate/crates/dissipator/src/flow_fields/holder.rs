use super::VelocityField;
use crate::error::{arg, Result};
use crate::grid::Grid;
use crate::point::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub seminorm: f64,
    pub sup: f64,
}

impl HolderEstimate {
    pub fn norm(&self) -> f64 {
        self.seminorm + self.sup
    }
}

/// Discrete `C^exponent` norm of `field(t, .)` from samples at the cell centres
/// of `grid`, using pairs separated by `2^k` samples along both axes and the diagonal.
pub fn estimate_holder_norm(field: &dyn VelocityField, t: f64, exponent: f64, grid: &Grid) -> Result<HolderEstimate> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return arg(format!("Holder exponent {exponent} outside (0, 1]"));
    }
    let samples: Vec<Point> = grid.centers().map(|p| field.velocity(t, p)).collect();
    let sup = samples.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut seminorm = 0.0f64;
    let mut d = 1usize;
    while d < grid.nx.max(grid.ny) / 2 {
        for (di, dj) in [(d, 0), (0, d), (d, d)] {
            if di >= grid.nx || dj >= grid.ny {
                continue;
            }
            let dist = ((di as f64 * hx).powi(2) + (dj as f64 * hy).powi(2)).sqrt();
            let scale = dist.powf(exponent);
            for j in 0..grid.ny - dj {
                for i in 0..grid.nx - di {
                    let a = samples[grid.index(i, j)];
                    let b = samples[grid.index(i + di, j + dj)];
                    seminorm = seminorm.max((a - b).norm() / scale);
                }
            }
        }
        d *= 2;
    }
    Ok(HolderEstimate { seminorm, sup })
}

/// `max ||u(t) - u(s)||_inf / |t - s|^exponent` over the given time pairs.
pub fn time_holder_quotient(field: &dyn VelocityField, pairs: &[(f64, f64)], exponent: f64, grid: &Grid) -> f64 {
    pairs
        .iter()
        .filter(|(t, s)| t != s)
        .map(|&(t, s)| {
            let diff = grid.centers().map(|p| (field.velocity(t, p) - field.velocity(s, p)).norm()).fold(0.0, f64::max);
            diff / (t - s).abs().powf(exponent)
        })
        .fold(0.0, f64::max)
}
