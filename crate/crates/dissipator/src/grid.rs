//! Uniform cell-centred sample grids over the box and the scalar fields that live on them.

use crate::compensated::{self, CompensatedSum};
use crate::error::{Error, Result};
use crate::point::Point;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Width of the box `B`; its height is 1.
pub const WIDTH: f64 = SQRT_2;
pub const HEIGHT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `B` with Dirichlet data on its edges.
    Box,
    /// `B` with opposite edges identified.
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Argument(format!("grid {nx}x{ny} too small")));
        }
        let ratio = nx as f64 / ny as f64;
        if (ratio / WIDTH - 1.0).abs() > 0.02 && (nx as f64 - WIDTH * ny as f64).abs() > 1.0 {
            return Err(Error::Argument(format!(
                "grid {nx}x{ny} does not have aspect ratio sqrt(2)"
            )));
        }
        Ok(Grid { nx, ny })
    }

    /// Grid with `nx` columns and the row count closest to `nx / sqrt 2`.
    pub fn with_width(nx: usize) -> Result<Self> {
        Grid::new(nx, ((nx as f64) / WIDTH).round() as usize)
    }

    pub fn hx(&self) -> f64 {
        WIDTH / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        HEIGHT / self.ny as f64
    }

    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.center(i, j)))
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn unit_box() -> Self {
        Rect::new(0.0, 0.0, WIDTH, HEIGHT)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub domain: Domain,
    pub time: f64,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: Grid, domain: Domain, c: f64) -> Self {
        ScalarField { grid, domain, time: 0.0, data: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid, domain: Domain) -> Self {
        Self::constant(grid, domain, 0.0)
    }

    /// Point samples at cell centres.
    pub fn from_fn(grid: Grid, domain: Domain, f: impl Fn(Point) -> f64) -> Self {
        let data = grid.centers().map(f).collect();
        ScalarField { grid, domain, time: 0.0, data }
    }

    /// Indicator of a union of disjoint rectangles, with each sample holding the
    /// covered fraction of its grid cell.
    pub fn indicator(grid: Grid, domain: Domain, rects: &[Rect]) -> Self {
        let mut field = Self::zeros(grid, domain);
        let (hx, hy) = (grid.hx(), grid.hy());
        for r in rects {
            let i0 = ((r.x0 / hx).floor().max(0.0)) as usize;
            let i1 = ((r.x1 / hx).ceil() as usize).min(grid.nx);
            let j0 = ((r.y0 / hy).floor().max(0.0)) as usize;
            let j1 = ((r.y1 / hy).ceil() as usize).min(grid.ny);
            for j in j0..j1 {
                let oy = overlap(j as f64 * hy, (j + 1) as f64 * hy, r.y0, r.y1) / hy;
                if oy <= 0.0 {
                    continue;
                }
                for i in i0..i1 {
                    let ox = overlap(i as f64 * hx, (i + 1) as f64 * hx, r.x0, r.x1) / hx;
                    field.data[grid.index(i, j)] += ox * oy;
                }
            }
        }
        field
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::Blowup {
                time: self.time,
                step: 0,
                detail: format!("non-finite sample at index {k}"),
            }),
        }
    }

    pub fn integral(&self) -> f64 {
        compensated::sum(self.data.iter().copied()) * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        compensated::sum(self.data.iter().copied()) / self.grid.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { data, ..self.clone() })
    }

    pub fn check_compatible(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Argument("fields live on different grids".into()));
        }
        if self.domain != other.domain {
            return Err(Error::Argument("fields have different domain modes".into()));
        }
        Ok(())
    }

    /// `sum |a - b| h^2`.
    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        self.check_compatible(other)?;
        let mut acc = CompensatedSum::new();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc.add((a - b).abs());
        }
        Ok(acc.value() * self.grid.cell_area())
    }

    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.check_compatible(other)?;
        let mut acc = CompensatedSum::new();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc.add(a * b);
        }
        Ok(acc.value() * self.grid.cell_area())
    }

    /// Bilinear interpolation between cell centres. Periodic on the torus,
    /// constant extrapolation inside the outer half cell of the box.
    pub fn sample(&self, p: Point) -> f64 {
        let g = self.grid;
        let fx = p.x / g.hx() - 0.5;
        let fy = p.y / g.hy() - 0.5;
        let (i0, i1, tx) = stencil(fx, g.nx, self.domain);
        let (j0, j1, ty) = stencil(fy, g.ny, self.domain);
        let a = self.at(i0, j0) * (1.0 - tx) + self.at(i1, j0) * tx;
        let b = self.at(i0, j1) * (1.0 - tx) + self.at(i1, j1) * tx;
        a * (1.0 - ty) + b * ty
    }
}

fn stencil(f: f64, n: usize, domain: Domain) -> (usize, usize, f64) {
    match domain {
        Domain::Torus => {
            let fl = f.floor();
            let t = f - fl;
            let i0 = (fl as i64).rem_euclid(n as i64) as usize;
            (i0, (i0 + 1) % n, t)
        }
        Domain::Box => {
            let f = f.clamp(0.0, (n - 1) as f64);
            let i0 = (f.floor() as usize).min(n - 2);
            (i0, i0 + 1, f - i0 as f64)
        }
    }
}

pub(crate) fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_of_left_half_has_exact_area() {
        let g = Grid::new(100, 71).unwrap();
        let f = ScalarField::indicator(g, Domain::Box, &[Rect::new(0.0, 0.0, WIDTH / 2.0, 1.0)]);
        assert!((f.integral() - WIDTH / 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_cover_is_fractional() {
        let g = Grid::new(10, 7).unwrap();
        let hx = g.hx();
        let f = ScalarField::indicator(g, Domain::Box, &[Rect::new(0.0, 0.0, 0.25 * hx, 1.0)]);
        assert!((f.at(0, 3) - 0.25).abs() < 1e-12);
        assert_eq!(f.at(1, 3), 0.0);
    }

    #[test]
    fn bilinear_sample_is_exact_for_affine_data() {
        let g = Grid::new(64, 45).unwrap();
        let f = ScalarField::from_fn(g, Domain::Box, |p| 2.0 * p.x - p.y + 0.3);
        let p = Point::new(0.731, 0.419);
        assert!((f.sample(p) - (2.0 * p.x - p.y + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_aspect() {
        assert!(Grid::new(100, 100).is_err());
    }
}
