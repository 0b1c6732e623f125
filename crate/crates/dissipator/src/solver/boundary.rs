use crate::error::{arg, Result};
use crate::grid::{Domain, Grid, ScalarField, HEIGHT, WIDTH};
use crate::point::Point;
use std::fmt;
use std::sync::Arc;

/// Values on the four edges at cell-centre positions along each edge.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeFrame {
    /// `y = 0`, length `nx`.
    pub bottom: Vec<f64>,
    /// `y = 1`, length `nx`.
    pub top: Vec<f64>,
    /// `x = 0`, length `ny`.
    pub left: Vec<f64>,
    /// `x = sqrt 2`, length `ny`.
    pub right: Vec<f64>,
}

impl EdgeFrame {
    pub fn constant(grid: &Grid, c: f64) -> Self {
        EdgeFrame { bottom: vec![c; grid.nx], top: vec![c; grid.nx], left: vec![c; grid.ny], right: vec![c; grid.ny] }
    }

    /// Traces of a torus field on the lines `x = 0` and `y = 0`, which are the
    /// box edges seen from both sides.
    pub fn from_torus(field: &ScalarField) -> Self {
        let (nx, ny) = (field.grid.nx, field.grid.ny);
        let d = &field.data;
        let bottom: Vec<f64> = (0..nx).map(|i| 0.5 * (d[i] + d[(ny - 1) * nx + i])).collect();
        let left: Vec<f64> = (0..ny).map(|j| 0.5 * (d[j * nx] + d[j * nx + nx - 1])).collect();
        EdgeFrame { top: bottom.clone(), right: left.clone(), bottom, left }
    }

    fn lerp(a: &EdgeFrame, b: &EdgeFrame, w: f64) -> EdgeFrame {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (1.0 - w) * p + w * q).collect();
        EdgeFrame {
            bottom: mix(&a.bottom, &b.bottom),
            top: mix(&a.top, &b.top),
            left: mix(&a.left, &b.left),
            right: mix(&a.right, &b.right),
        }
    }

    pub fn sup(&self) -> f64 {
        [&self.bottom, &self.top, &self.left, &self.right]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Piecewise linear interpolation along the edge nearest to `p`.
    pub fn value(&self, p: Point) -> f64 {
        let dists = [p.y, HEIGHT - p.y, p.x, WIDTH - p.x];
        let k = (0..4).min_by(|&a, &b| dists[a].total_cmp(&dists[b])).unwrap_or(0);
        let (vals, s, len) = match k {
            0 => (&self.bottom, p.x, WIDTH),
            1 => (&self.top, p.x, WIDTH),
            2 => (&self.left, p.y, HEIGHT),
            _ => (&self.right, p.y, HEIGHT),
        };
        let n = vals.len();
        let g = (s / len * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (g.floor() as usize).min(n.saturating_sub(2));
        let w = g - i as f64;
        if n == 1 {
            vals[0]
        } else {
            (1.0 - w) * vals[i] + w * vals[i + 1]
        }
    }
}

/// Time-indexed edge traces, linear in time between frames.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeTraces {
    pub nx: usize,
    pub ny: usize,
    pub times: Vec<f64>,
    pub frames: Vec<EdgeFrame>,
}

impl EdgeTraces {
    pub fn new(grid: &Grid) -> Self {
        EdgeTraces { nx: grid.nx, ny: grid.ny, times: Vec::new(), frames: Vec::new() }
    }

    /// Appends a frame; times must increase.
    pub fn push(&mut self, t: f64, frame: EdgeFrame) -> Result<()> {
        if frame.bottom.len() != self.nx
            || frame.top.len() != self.nx
            || frame.left.len() != self.ny
            || frame.right.len() != self.ny
        {
            return arg("trace length does not match the grid");
        }
        if !frame.sup().is_finite() {
            return arg("trace is not finite");
        }
        if let Some(&last) = self.times.last() {
            if t < last {
                return arg("trace times must increase");
            }
            if t == last {
                *self.frames.last_mut().expect("frame") = frame;
                return Ok(());
            }
        }
        self.times.push(t);
        self.frames.push(frame);
        Ok(())
    }

    pub fn frame_at(&self, t: f64) -> EdgeFrame {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.frames[0].clone();
        }
        if k == self.times.len() {
            return self.frames[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        EdgeFrame::lerp(&self.frames[k - 1], &self.frames[k], (t - t0) / (t1 - t0))
    }

    /// Knots strictly inside `(t0, t1)`.
    pub fn knots(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.times.iter().copied().filter(|&s| s > t0 && s < t1).collect()
    }
}

/// Dirichlet data `f(t, x)` on the box edges.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    Traces(Arc<EdgeTraces>),
    Function(Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(f, "Constant({c})"),
            BoundaryData::Traces(t) => write!(f, "Traces({} frames)", t.times.len()),
            BoundaryData::Function(_) => write!(f, "Function"),
        }
    }
}

impl BoundaryData {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            BoundaryData::Constant(c) if !c.is_finite() => arg("boundary constant is not finite"),
            BoundaryData::Traces(tr) if tr.frames.is_empty() => arg("boundary traces are empty"),
            BoundaryData::Traces(tr) if tr.nx != grid.nx || tr.ny != grid.ny => {
                arg("boundary trace resolution does not match the grid")
            }
            _ => Ok(()),
        }
    }

    pub fn frame_at(&self, t: f64, grid: &Grid) -> EdgeFrame {
        match self {
            BoundaryData::Constant(c) => EdgeFrame::constant(grid, *c),
            BoundaryData::Traces(tr) => tr.frame_at(t),
            BoundaryData::Function(f) => {
                let xs: Vec<f64> = (0..grid.nx).map(|i| (i as f64 + 0.5) * grid.hx()).collect();
                let ys: Vec<f64> = (0..grid.ny).map(|j| (j as f64 + 0.5) * grid.hy()).collect();
                EdgeFrame {
                    bottom: xs.iter().map(|&x| f(t, Point::new(x, 0.0))).collect(),
                    top: xs.iter().map(|&x| f(t, Point::new(x, HEIGHT))).collect(),
                    left: ys.iter().map(|&y| f(t, Point::new(0.0, y))).collect(),
                    right: ys.iter().map(|&y| f(t, Point::new(WIDTH, y))).collect(),
                }
            }
        }
    }

    pub fn value(&self, t: f64, p: Point) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::Traces(tr) => tr.frame_at(t).value(p),
            BoundaryData::Function(f) => f(t, p),
        }
    }

    /// Times inside `(t0, t1)` where the data may bend, used to chunk diffusion.
    pub(crate) fn breakpoints(&self, t0: f64, t1: f64, max_gap: f64) -> Vec<f64> {
        match self {
            BoundaryData::Constant(_) => Vec::new(),
            BoundaryData::Traces(tr) => tr.knots(t0, t1),
            BoundaryData::Function(_) => {
                let n = ((t1 - t0) / max_gap).ceil().max(1.0) as usize;
                (1..n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect()
            }
        }
    }

    pub(crate) fn as_constant(&self) -> Option<f64> {
        match self {
            BoundaryData::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

/// Torus flag or box with Dirichlet data.
#[derive(Clone, Debug)]
pub enum Boundary {
    Torus,
    Dirichlet(BoundaryData),
}

impl Boundary {
    pub fn constant(c: f64) -> Self {
        Boundary::Dirichlet(BoundaryData::Constant(c))
    }

    pub fn domain(&self) -> Domain {
        match self {
            Boundary::Torus => Domain::Torus,
            Boundary::Dirichlet(_) => Domain::Box,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_interpolate_in_time_and_space() {
        let g = Grid::new(17, 12).unwrap();
        let mut tr = EdgeTraces::new(&g);
        tr.push(0.0, EdgeFrame::constant(&g, 0.0)).unwrap();
        tr.push(1.0, EdgeFrame::constant(&g, 2.0)).unwrap();
        assert!(tr.push(0.5, EdgeFrame::constant(&g, 2.0)).is_err());
        assert!((tr.frame_at(0.25).left[3] - 0.5).abs() < 1e-15);
        assert_eq!(tr.frame_at(5.0).top[0], 2.0);
        let mut f = EdgeFrame::constant(&g, 0.0);
        f.bottom = (0..g.nx).map(|i| i as f64).collect();
        let hx = g.hx();
        assert!((f.value(Point::new(2.0 * hx, 0.0)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn torus_trace_averages_both_sides() {
        let g = Grid::new(17, 12).unwrap();
        let f = ScalarField::from_fn(g, Domain::Torus, |p| p.y);
        let e = EdgeFrame::from_torus(&f);
        let expect = 0.5;
        assert!((e.bottom[3] - expect).abs() < 1e-12);
    }
}
