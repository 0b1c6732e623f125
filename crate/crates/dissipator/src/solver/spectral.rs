//! Transforms that diagonalise the five-point Laplacian: 2-D FFT on the torus
//! and 2-D DST-II on the box with homogeneous Dirichlet ghosts.

use crate::grid::Grid;
use rustdct::{DctPlanner, TransformType2And3};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

fn transpose<T: Copy>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    const B: usize = 32;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Symbol used for `-Laplacian` on grid modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Symbol {
    /// `(4/h^2) sin^2(xi h / 2)`, the five-point Laplacian; keeps the heat step positive.
    #[default]
    FivePoint,
    /// `|xi|^2`.
    Continuous,
}

/// Eigenvalues of `-d^2/dx^2` for the periodic modes `k = 0..n` (signed frequencies).
pub fn periodic_eigenvalues(n: usize, length: f64, symbol: Symbol) -> Vec<f64> {
    let h = length / n as f64;
    (0..n)
        .map(|k| {
            let ks = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let xi = 2.0 * PI * ks / length;
            match symbol {
                Symbol::Continuous => xi * xi,
                Symbol::FivePoint => {
                    let s = (0.5 * xi * h).sin();
                    4.0 * s * s / (h * h)
                }
            }
        })
        .collect()
}

/// Eigenvalues of the Dirichlet five-point `-d^2/dx^2` for DST-II modes `k = 0..n`.
pub fn dirichlet_eigenvalues(n: usize, length: f64) -> Vec<f64> {
    let h = length / n as f64;
    (0..n)
        .map(|k| {
            let s = (PI * (k + 1) as f64 / (2 * n) as f64).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

pub struct TorusTransform {
    pub grid: Grid,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    pub lx: Vec<f64>,
    pub ly: Vec<f64>,
}

impl TorusTransform {
    pub fn new(grid: Grid, symbol: Symbol) -> Self {
        let mut planner = FftPlanner::new();
        TorusTransform {
            grid,
            fx: planner.plan_fft_forward(grid.nx),
            ix: planner.plan_fft_inverse(grid.nx),
            fy: planner.plan_fft_forward(grid.ny),
            iy: planner.plan_fft_inverse(grid.ny),
            lx: periodic_eigenvalues(grid.nx, crate::grid::WIDTH, symbol),
            ly: periodic_eigenvalues(grid.ny, crate::grid::HEIGHT, symbol),
        }
    }

    /// Spectrum in column-major layout: entry `kx * ny + ky`, unnormalised.
    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut rows: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fx.process(&mut rows);
        let mut cols = vec![Complex64::default(); nx * ny];
        transpose(&rows, ny, nx, &mut cols);
        self.fy.process(&mut cols);
        cols
    }

    /// Inverse of [`forward`](Self::forward), including the `1/(nx ny)` factor.
    pub fn inverse(&self, mut cols: Vec<Complex64>, out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        self.iy.process(&mut cols);
        let mut rows = vec![Complex64::default(); nx * ny];
        transpose(&cols, nx, ny, &mut rows);
        self.ix.process(&mut rows);
        let scale = 1.0 / (nx * ny) as f64;
        for (o, c) in out.iter_mut().zip(&rows) {
            *o = c.re * scale;
        }
    }

    /// Multiplies every mode by `m(lambda)` where `lambda` is its `-Laplacian` eigenvalue.
    pub fn apply(&self, data: &mut [f64], m: impl Fn(f64) -> f64) {
        let mut spec = self.forward(data);
        let ny = self.grid.ny;
        for (kx, lx) in self.lx.iter().enumerate() {
            for (ky, ly) in self.ly.iter().enumerate() {
                spec[kx * ny + ky] *= m(lx + ly);
            }
        }
        self.inverse(spec, data);
    }

    /// `sum_k w(lambda_k) |c_k|^2 * area` with `c_k` the normalised Fourier coefficients.
    pub fn weighted_energy(&self, data: &[f64], w: impl Fn(f64) -> f64) -> f64 {
        let spec = self.forward(data);
        let ny = self.grid.ny;
        let n = (self.grid.nx * self.grid.ny) as f64;
        let mut acc = crate::compensated::CompensatedSum::new();
        for (kx, lx) in self.lx.iter().enumerate() {
            for (ky, ly) in self.ly.iter().enumerate() {
                acc.add(w(lx + ly) * spec[kx * ny + ky].norm_sqr());
            }
        }
        acc.value() / (n * n) * crate::grid::WIDTH * crate::grid::HEIGHT
    }
}

pub struct BoxTransform {
    pub grid: Grid,
    dst2x: Arc<dyn TransformType2And3<f64>>,
    dst3x: Arc<dyn TransformType2And3<f64>>,
    dst2y: Arc<dyn TransformType2And3<f64>>,
    dst3y: Arc<dyn TransformType2And3<f64>>,
    pub lx: Vec<f64>,
    pub ly: Vec<f64>,
}

impl BoxTransform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = DctPlanner::new();
        BoxTransform {
            grid,
            dst2x: planner.plan_dst2(grid.nx),
            dst3x: planner.plan_dst3(grid.nx),
            dst2y: planner.plan_dst2(grid.ny),
            dst3y: planner.plan_dst3(grid.ny),
            lx: dirichlet_eigenvalues(grid.nx, crate::grid::WIDTH),
            ly: dirichlet_eigenvalues(grid.ny, crate::grid::HEIGHT),
        }
    }

    /// Sine coefficients, column-major `kx * ny + ky`, unnormalised.
    pub fn forward(&self, data: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut rows = data.to_vec();
        let mut scratch = vec![0.0; self.dst2x.get_scratch_len().max(self.dst2y.get_scratch_len())];
        for r in rows.chunks_exact_mut(nx) {
            self.dst2x.process_dst2_with_scratch(r, &mut scratch);
        }
        let mut cols = vec![0.0; nx * ny];
        transpose(&rows, ny, nx, &mut cols);
        for c in cols.chunks_exact_mut(ny) {
            self.dst2y.process_dst2_with_scratch(c, &mut scratch);
        }
        cols
    }

    pub fn inverse(&self, mut cols: Vec<f64>, out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut scratch = vec![0.0; self.dst3x.get_scratch_len().max(self.dst3y.get_scratch_len())];
        for c in cols.chunks_exact_mut(ny) {
            self.dst3y.process_dst3_with_scratch(c, &mut scratch);
        }
        let mut rows = vec![0.0; nx * ny];
        transpose(&cols, nx, ny, &mut rows);
        for r in rows.chunks_exact_mut(nx) {
            self.dst3x.process_dst3_with_scratch(r, &mut scratch);
        }
        let scale = 4.0 / (nx * ny) as f64;
        for (o, v) in out.iter_mut().zip(&rows) {
            *o = v * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, ScalarField};

    #[test]
    fn fft_round_trip() {
        let g = Grid::new(24, 17).unwrap();
        let t = TorusTransform::new(g, Symbol::FivePoint);
        let f = ScalarField::from_fn(g, Domain::Torus, |p| (3.0 * p.x).sin() + p.y * p.y);
        let mut out = vec![0.0; g.len()];
        t.inverse(t.forward(&f.data), &mut out);
        for (a, b) in out.iter().zip(&f.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dst_round_trip_and_basis() {
        let g = Grid::new(20, 14).unwrap();
        let t = BoxTransform::new(g);
        let f = ScalarField::from_fn(g, Domain::Box, |p| (5.0 * p.x).cos() * p.y + 0.2);
        let mut out = vec![0.0; g.len()];
        t.inverse(t.forward(&f.data), &mut out);
        for (a, b) in out.iter().zip(&f.data) {
            assert!((a - b).abs() < 1e-12);
        }
        // a single sine mode maps to a single coefficient
        let (kx, ky) = (2usize, 4usize);
        let mode = ScalarField::from_fn(g, Domain::Box, |p| {
            (PI * (kx + 1) as f64 * p.x / crate::grid::WIDTH).sin() * (PI * (ky + 1) as f64 * p.y).sin()
        });
        let spec = t.forward(&mode.data);
        let peak = spec[kx * g.ny + ky].abs();
        let rest: f64 = spec.iter().map(|v| v.abs()).sum::<f64>() - peak;
        assert!(rest < 1e-9 * peak);
    }

    #[test]
    fn dirichlet_eigenvalue_matches_stencil() {
        let n = 16;
        let h = 1.0 / n as f64;
        let lam = dirichlet_eigenvalues(n, 1.0);
        for k in [0usize, 3, 15] {
            let v: Vec<f64> = (0..n).map(|i| (PI * (k + 1) as f64 * (i as f64 + 0.5) / n as f64).sin()).collect();
            for i in 0..n {
                let left = if i == 0 { -v[0] } else { v[i - 1] };
                let right = if i == n - 1 { -v[n - 1] } else { v[i + 1] };
                let lap = (left - 2.0 * v[i] + right) / (h * h);
                assert!((lap + lam[k] * v[i]).abs() < 1e-8 * lam[k].max(1.0));
            }
        }
    }
}
