//! Exact-in-time diffusion for the five-point Laplacian.

use super::boundary::EdgeFrame;
use super::spectral::{BoxTransform, Symbol, TorusTransform};
use crate::compensated::CompensatedSum;
use crate::grid::{Domain, Grid};

pub(crate) enum Diffuser {
    Torus(TorusTransform),
    Box(BoxTransform),
}

/// `(1 - e^{-z}) / z` and `(1 - e^{-z}(1 + z)) / z^2`.
fn phi_weights(z: f64) -> (f64, f64) {
    if z < 1e-4 {
        (1.0 - z / 2.0 + z * z / 6.0, 0.5 - z / 3.0 + z * z / 8.0)
    } else {
        let a = -(-z).exp_m1();
        (a / z, (a - z * (-z).exp()) / (z * z))
    }
}

impl Diffuser {
    pub fn new(grid: Grid, domain: Domain, symbol: Symbol) -> Self {
        match domain {
            Domain::Torus => Diffuser::Torus(TorusTransform::new(grid, symbol)),
            Domain::Box => Diffuser::Box(BoxTransform::new(grid)),
        }
    }

    /// Advances `theta_t = kappa (L theta + b(t))` by `dt`, with `b` built from
    /// edge data varying linearly from `f0` to `f1`. Torus ignores the edges.
    pub fn step(&self, data: &mut [f64], kappa: f64, dt: f64, f0: Option<&EdgeFrame>, f1: Option<&EdgeFrame>, constant: Option<f64>) {
        if kappa == 0.0 || dt <= 0.0 {
            return;
        }
        match self {
            Diffuser::Torus(t) => t.apply(data, |lam| (-kappa * lam * dt).exp()),
            Diffuser::Box(b) => {
                if let Some(c) = constant {
                    data.iter_mut().for_each(|v| *v -= c);
                    let mut spec = b.forward(data);
                    scale_box(b, &mut spec, |lam| (-kappa * lam * dt).exp());
                    b.inverse(spec, data);
                    data.iter_mut().for_each(|v| *v += c);
                    return;
                }
                let (f0, f1) = (f0.expect("edge data"), f1.expect("edge data"));
                let grid = b.grid;
                let b0 = b.forward(&forcing(&grid, f0));
                let b1 = b.forward(&forcing(&grid, f1));
                let mut spec = b.forward(data);
                let ny = grid.ny;
                for (kx, lx) in b.lx.iter().enumerate() {
                    for (ky, ly) in b.ly.iter().enumerate() {
                        let k = kx * ny + ky;
                        let z = kappa * (lx + ly) * dt;
                        let (a, bb) = phi_weights(z);
                        let e = (-z).exp();
                        spec[k] = e * spec[k] + kappa * dt * (a * b0[k] + (a - bb) * (b1[k] - b0[k]));
                    }
                }
                b.inverse(spec, data);
            }
        }
    }
}

fn scale_box(b: &BoxTransform, spec: &mut [f64], m: impl Fn(f64) -> f64) {
    let ny = b.grid.ny;
    for (kx, lx) in b.lx.iter().enumerate() {
        for (ky, ly) in b.ly.iter().enumerate() {
            spec[kx * ny + ky] *= m(lx + ly);
        }
    }
}

/// Boundary forcing `2 f / h^2` at the near-wall cells.
fn forcing(grid: &Grid, f: &EdgeFrame) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (cx, cy) = (2.0 / (grid.hx() * grid.hx()), 2.0 / (grid.hy() * grid.hy()));
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        out[j * nx] += cx * f.left[j];
        out[j * nx + nx - 1] += cx * f.right[j];
    }
    for i in 0..nx {
        out[i] += cy * f.bottom[i];
        out[(ny - 1) * nx + i] += cy * f.top[i];
    }
    out
}

/// `(1/2) |phi|^2` and `|grad phi|^2` for the five-point scheme, with
/// `phi = theta - shift`. Box edges use the ghost `2f - theta`.
pub(crate) fn discrete_energy(grid: &Grid, domain: Domain, data: &[f64], shift: f64, edges: Option<&EdgeFrame>) -> (f64, f64) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let area = hx * hy;
    let (wx, wy) = (area / (hx * hx), area / (hy * hy));
    let mut e = CompensatedSum::new();
    let mut g = CompensatedSum::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = data[j * nx + i] - shift;
            e.add(0.5 * v * v * area);
            let right = if i + 1 < nx {
                Some(data[j * nx + i + 1])
            } else if domain == Domain::Torus {
                Some(data[j * nx])
            } else {
                None
            };
            if let Some(r) = right {
                let d = r - data[j * nx + i];
                g.add(wx * d * d);
            }
            let up = if j + 1 < ny {
                Some(data[(j + 1) * nx + i])
            } else if domain == Domain::Torus {
                Some(data[i])
            } else {
                None
            };
            if let Some(u) = up {
                let d = u - data[j * nx + i];
                g.add(wy * d * d);
            }
        }
    }
    if domain == Domain::Box {
        if let Some(f) = edges {
            for j in 0..ny {
                let d0 = 2.0 * (data[j * nx] - f.left[j]);
                let d1 = 2.0 * (data[j * nx + nx - 1] - f.right[j]);
                g.add(0.5 * wx * (d0 * d0 + d1 * d1));
            }
            for i in 0..nx {
                let d0 = 2.0 * (data[i] - f.bottom[i]);
                let d1 = 2.0 * (data[(ny - 1) * nx + i] - f.top[i]);
                g.add(0.5 * wy * (d0 * d0 + d1 * d1));
            }
        }
    }
    (e.value(), g.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    #[test]
    fn phi_weights_are_continuous() {
        let z: f64 = 0.9e-4;
        let (a0, b0) = phi_weights(z);
        let a1 = -(-z).exp_m1() / z;
        let b1 = (-(-z).exp_m1() - z * (-z).exp()) / (z * z);
        assert!((a0 - a1).abs() < 1e-12 && (b0 - b1).abs() < 1e-8);
    }

    #[test]
    fn box_linear_profile_is_steady() {
        // theta = x is harmonic; edges carry its values.
        let g = Grid::new(20, 14).unwrap();
        let f = ScalarField::from_fn(g, Domain::Box, |p| p.x);
        let edges = EdgeFrame {
            bottom: (0..g.nx).map(|i| (i as f64 + 0.5) * g.hx()).collect(),
            top: (0..g.nx).map(|i| (i as f64 + 0.5) * g.hx()).collect(),
            left: vec![0.0; g.ny],
            right: vec![crate::grid::WIDTH; g.ny],
        };
        let d = Diffuser::new(g, Domain::Box, Symbol::FivePoint);
        let mut data = f.data.clone();
        d.step(&mut data, 0.3, 1.0, Some(&edges), Some(&edges), None);
        for (a, b) in data.iter().zip(&f.data) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn box_ramp_in_time_matches_small_steps() {
        let g = Grid::new(17, 12).unwrap();
        let d = Diffuser::new(g, Domain::Box, Symbol::FivePoint);
        let e0 = EdgeFrame::constant(&g, 0.0);
        let e1 = EdgeFrame::constant(&g, 1.0);
        let mut big = vec![0.0; g.len()];
        d.step(&mut big, 0.05, 0.4, Some(&e0), Some(&e1), None);
        let mut small = vec![0.0; g.len()];
        let n = 400;
        for k in 0..n {
            let a = EdgeFrame::constant(&g, k as f64 / n as f64);
            let b = EdgeFrame::constant(&g, (k + 1) as f64 / n as f64);
            d.step(&mut small, 0.05, 0.4 / n as f64, Some(&a), Some(&b), None);
        }
        for (x, y) in big.iter().zip(&small) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
