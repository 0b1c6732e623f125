//! The box `B = [0, sqrt 2] x [0, 1]`, its pentadic cells `B_n + x_n` and its
//! rotated dyadic cells `A_n + x_n`, cell averages and cellwise projections.

use crate::error::{Error, Result};
use crate::grid::{overlap, Domain, Grid, Rect, ScalarField, HEIGHT, WIDTH};
use crate::point::Point;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Smallest number of samples a cell must span in each direction.
pub const MIN_CELL_SAMPLES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Landscape,
    Portrait,
}

/// A translated copy of `B` scaled so that its short side is `scale`,
/// lying either on its long side or upright.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub origin: Point,
    pub scale: f64,
    pub orientation: Orientation,
}

impl Cell {
    pub fn width(&self) -> f64 {
        match self.orientation {
            Orientation::Landscape => SQRT_2 * self.scale,
            Orientation::Portrait => self.scale,
        }
    }

    pub fn height(&self) -> f64 {
        match self.orientation {
            Orientation::Landscape => self.scale,
            Orientation::Portrait => SQRT_2 * self.scale,
        }
    }

    pub fn area(&self) -> f64 {
        SQRT_2 * self.scale * self.scale
    }

    pub fn rect(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width(),
            self.origin.y + self.height(),
        )
    }

    pub fn center(&self) -> Point {
        self.origin + Point::new(0.5 * self.width(), 0.5 * self.height())
    }

    /// The two cells of the next dyadic level that make up this one, first
    /// the one containing the origin.
    pub fn halves(&self) -> [Cell; 2] {
        let scale = self.scale / SQRT_2;
        match self.orientation {
            Orientation::Landscape => {
                let w = self.width() / 2.0;
                [
                    Cell { origin: self.origin, scale: w, orientation: Orientation::Portrait },
                    Cell {
                        origin: self.origin + Point::new(w, 0.0),
                        scale: w,
                        orientation: Orientation::Portrait,
                    },
                ]
            }
            Orientation::Portrait => {
                let h = self.height() / 2.0;
                [
                    Cell { origin: self.origin, scale, orientation: Orientation::Landscape },
                    Cell {
                        origin: self.origin + Point::new(0.0, h),
                        scale,
                        orientation: Orientation::Landscape,
                    },
                ]
            }
        }
    }
}

/// The whole box as a cell.
pub fn unit_cell() -> Cell {
    Cell { origin: Point::ZERO, scale: 1.0, orientation: Orientation::Landscape }
}

/// Applies `R^n` where `R = (1/sqrt 2) [[0, -1], [1, 0]]`; negative `n` applies the inverse.
pub fn rotation_scale(p: Point, n: i32) -> Point {
    let mut q = match n.rem_euclid(4) {
        0 => p,
        1 => Point::new(-p.y, p.x),
        2 => Point::new(-p.x, -p.y),
        _ => Point::new(p.y, -p.x),
    };
    let halvings = n.unsigned_abs() / 2;
    let factor = if n >= 0 { 0.5f64.powi(halvings as i32) } else { 2f64.powi(halvings as i32) };
    q = q * factor;
    if n.rem_euclid(2) == 1 {
        if n > 0 {
            q = Point::new(q.x / SQRT_2, q.y / SQRT_2);
        } else {
            q = q * SQRT_2;
        }
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `B_n = 5^-n B` on the lattice `Pi_n`.
    Pentadic,
    /// `A_n = R^n B` on the lattice `Lambda_n`.
    Dyadic,
}

/// A tiling of `B` by congruent cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub family: Family,
    pub level: u32,
    pub cols: usize,
    pub rows: usize,
    /// Row-major: index `row * cols + col`.
    pub cells: Vec<Cell>,
}

impl CellGrid {
    pub fn new(level: u32, family: Family) -> Result<Self> {
        let (cols, rows, scale, orientation) = match family {
            Family::Pentadic => {
                if level > 12 {
                    return Err(Error::Resolution(format!("pentadic level {level} exceeds f64 grid")));
                }
                let k = 5usize.pow(level);
                (k, k, 1.0 / k as f64, Orientation::Landscape)
            }
            Family::Dyadic => {
                if level > 40 {
                    return Err(Error::Resolution(format!("dyadic level {level} exceeds f64 grid")));
                }
                if level % 2 == 0 {
                    let k = 1usize << (level / 2);
                    (k, k, 1.0 / k as f64, Orientation::Landscape)
                } else {
                    let cols = 1usize << level.div_ceil(2);
                    let rows = 1usize << (level / 2);
                    (cols, rows, WIDTH / cols as f64, Orientation::Portrait)
                }
            }
        };
        let probe = Cell { origin: Point::ZERO, scale, orientation };
        let (w, h) = (probe.width(), probe.height());
        let cells = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| Cell {
                    origin: Point::new(c as f64 * w, r as f64 * h),
                    scale,
                    orientation,
                })
            })
            .collect();
        Ok(CellGrid { family, level, cols, rows, cells })
    }

    pub fn offsets(&self) -> Vec<Point> {
        self.cells.iter().map(|c| c.origin).collect()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        WIDTH / self.cols as f64
    }

    pub fn cell_height(&self) -> f64 {
        HEIGHT / self.rows as f64
    }

    /// Index of the cell containing `p` (half-open cells, periodic wrap).
    pub fn locate(&self, p: Point) -> usize {
        let c = ((p.x / self.cell_width()).floor() as i64).rem_euclid(self.cols as i64) as usize;
        let r = ((p.y / self.cell_height()).floor() as i64).rem_euclid(self.rows as i64) as usize;
        r * self.cols + c
    }

    /// Rejects tilings whose cells span fewer than [`MIN_CELL_SAMPLES`] samples per side.
    pub fn check_resolution(&self, grid: &Grid) -> Result<()> {
        let sx = self.cell_width() / grid.hx();
        let sy = self.cell_height() / grid.hy();
        let min = MIN_CELL_SAMPLES as f64 - 1e-9;
        if sx < min || sy < min {
            return Err(Error::Resolution(format!(
                "{:?} level {} cells span {sx:.2}x{sy:.2} samples on a {}x{} grid",
                self.family, self.level, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    /// Whether every cell edge falls on a sample-cell edge.
    pub fn is_aligned(&self, grid: &Grid) -> bool {
        let aligned = |len: f64, h: f64| {
            let q = len / h;
            (q - q.round()).abs() < 1e-8 && q.round() >= 1.0
        };
        aligned(self.cell_width(), grid.hx()) && aligned(self.cell_height(), grid.hy())
    }
}

/// The lattice `Pi_n` or `Lambda_n` as a tiling, checked against the sample grid.
pub fn grid_offsets(level: u32, family: Family, grid: &Grid) -> Result<CellGrid> {
    let tiling = CellGrid::new(level, family)?;
    tiling.check_resolution(grid)?;
    Ok(tiling)
}

/// Mean of `field` over `cell`, weighting samples by their overlap with the cell.
pub fn box_average(field: &ScalarField, cell: &Cell) -> Result<f64> {
    rect_average(field, &cell.rect())
}

pub fn rect_average(field: &ScalarField, r: &Rect) -> Result<f64> {
    let tol = 1e-12;
    if r.x0 < -tol || r.y0 < -tol || r.x1 > WIDTH + tol || r.y1 > HEIGHT + tol || r.area() <= 0.0 {
        return Err(Error::Domain(format!("cell {r:?} is not inside the box")));
    }
    let g = field.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let i0 = ((r.x0 / hx).floor().max(0.0)) as usize;
    let i1 = ((r.x1 / hx).ceil() as usize).min(g.nx);
    let j0 = ((r.y0 / hy).floor().max(0.0)) as usize;
    let j1 = ((r.y1 / hy).ceil() as usize).min(g.ny);
    let mut acc = crate::compensated::CompensatedSum::new();
    for j in j0..j1 {
        let wy = overlap(j as f64 * hy, (j + 1) as f64 * hy, r.y0, r.y1);
        if wy <= 0.0 {
            continue;
        }
        for i in i0..i1 {
            let wx = overlap(i as f64 * hx, (i + 1) as f64 * hx, r.x0, r.x1);
            if wx > 0.0 {
                acc.add(wx * wy * field.at(i, j));
            }
        }
    }
    Ok(acc.value() / r.area())
}

/// Replaces `field` by its cell averages over `tiling`.
pub fn project_piecewise_constant(field: &ScalarField, tiling: &CellGrid) -> Result<ScalarField> {
    let g = field.grid;
    if !tiling.is_aligned(&g) {
        return Err(Error::Resolution(format!(
            "{:?} level {} cells are not aligned with the {}x{} grid",
            tiling.family, tiling.level, g.nx, g.ny
        )));
    }
    let per_col = (tiling.cell_width() / g.hx()).round() as usize;
    let per_row = (tiling.cell_height() / g.hy()).round() as usize;
    let mut sums = vec![crate::compensated::CompensatedSum::new(); tiling.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            sums[(j / per_row) * tiling.cols + i / per_col].add(field.at(i, j));
        }
    }
    let count = (per_col * per_row) as f64;
    let means: Vec<f64> = sums.iter().map(|s| s.value() / count).collect();
    let mut out = field.clone();
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.data[g.index(i, j)] = means[(j / per_row) * tiling.cols + i / per_col];
        }
    }
    Ok(out)
}

/// The left half `{x < sqrt(2)/2}` as a rectangle.
pub fn left_half() -> Rect {
    Rect::new(0.0, 0.0, WIDTH / 2.0, HEIGHT)
}

/// Indicator of the left half of the box.
pub fn two_cell_data(grid: Grid, domain: Domain) -> ScalarField {
    ScalarField::indicator(grid, domain, &[left_half()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Point, b: Point) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rotation_examples() {
        assert!(close(rotation_scale(Point::new(SQRT_2, 0.0), 1), Point::new(0.0, 1.0)));
        let p = Point::new(0.3, -1.7);
        assert!(close(rotation_scale(p, 2), p * -0.5));
        for n in -7..=7 {
            assert!(close(rotation_scale(rotation_scale(p, n), -n), p), "n = {n}");
        }
    }

    #[test]
    fn rotation_matches_repeated_matrix() {
        let r = |q: Point| Point::new(-q.y / SQRT_2, q.x / SQRT_2);
        let mut q = Point::new(0.9, 0.2);
        let p = q;
        for n in 1..9 {
            q = r(q);
            assert!(close(rotation_scale(p, n), q), "n = {n}");
        }
    }

    #[test]
    fn lattice_counts_and_areas() {
        for n in 0..4 {
            let g = CellGrid::new(n, Family::Pentadic).unwrap();
            assert_eq!(g.len(), 25usize.pow(n));
        }
        for n in 0..12 {
            let g = CellGrid::new(n, Family::Dyadic).unwrap();
            assert_eq!(g.len(), 1usize << n);
            let area = SQRT_2 * 0.5f64.powi(n as i32);
            assert!((g.cells[0].area() - area).abs() < 1e-14);
            let total: f64 = g.cells.iter().map(Cell::area).sum();
            assert!((total - SQRT_2).abs() < 1e-12);
        }
        assert_eq!(CellGrid::new(0, Family::Pentadic).unwrap().offsets(), vec![Point::ZERO]);
    }

    #[test]
    fn dyadic_cells_have_the_shape_of_rotated_box() {
        for n in 0..9 {
            let g = CellGrid::new(n, Family::Dyadic).unwrap();
            let c = g.cells[0];
            let a = rotation_scale(Point::new(WIDTH, 0.0), n as i32);
            let b = rotation_scale(Point::new(0.0, HEIGHT), n as i32);
            let w = a.x.abs() + b.x.abs();
            let h = a.y.abs() + b.y.abs();
            assert!((c.width() - w).abs() < 1e-12 && (c.height() - h).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn halves_tile_next_level() {
        for n in 0..8 {
            let coarse = CellGrid::new(n, Family::Dyadic).unwrap();
            let fine = CellGrid::new(n + 1, Family::Dyadic).unwrap();
            for c in &coarse.cells {
                for half in c.halves() {
                    let k = fine.locate(half.center());
                    assert!(close(fine.cells[k].origin, half.origin));
                    assert_eq!(fine.cells[k].orientation, half.orientation);
                }
            }
        }
    }

    #[test]
    fn resolution_contract() {
        let g = Grid::new(1024, 724).unwrap();
        assert!(grid_offsets(3, Family::Pentadic, &g).is_ok());
        assert!(grid_offsets(4, Family::Pentadic, &g).is_err());
        assert!(grid_offsets(14, Family::Dyadic, &g).is_ok());
        assert!(grid_offsets(16, Family::Dyadic, &g).is_err());
    }
}
