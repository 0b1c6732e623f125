//! Semi-Lagrangian transport: departure points through an autonomous shape and
//! clipped cubic interpolation from a ghost-padded copy of the field.

use super::boundary::EdgeFrame;
use crate::flow_fields::Shape;
use crate::grid::{Domain, Grid, HEIGHT, WIDTH};
use crate::point::Point;
use rayon::prelude::*;

const PAD: usize = 2;
/// Ghost depth for the spline prefilter; the filter pole decays below 1e-13 across it.
const SPLINE_PAD: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Keys cubic convolution.
    #[default]
    Bicubic,
    Bilinear,
    /// Interpolating cubic B-spline.
    Spline,
}

pub(crate) struct Padded {
    w: usize,
    pad: usize,
    data: Vec<f64>,
    /// B-spline coefficients, when requested.
    coef: Option<Vec<f64>>,
}

impl Padded {
    /// Periodic ghosts on the torus; odd reflection about `f` in the box.
    pub fn new(grid: &Grid, data: &[f64], domain: Domain, edges: Option<&EdgeFrame>) -> Self {
        Self::with_pad(grid, data, domain, edges, PAD)
    }

    fn with_pad(grid: &Grid, data: &[f64], domain: Domain, edges: Option<&EdgeFrame>, pad: usize) -> Self {
        let pad = pad.min(grid.nx).min(grid.ny).max(PAD);
        let (nx, ny) = (grid.nx, grid.ny);
        let w = nx + 2 * pad;
        let h = ny + 2 * pad;
        let mut out = vec![0.0; w * h];
        for j in 0..ny {
            let row = &data[j * nx..(j + 1) * nx];
            let o = (j + pad) * w;
            out[o + pad..o + pad + nx].copy_from_slice(row);
            for g in 0..pad {
                let (lo, hi) = match (domain, edges) {
                    (Domain::Box, Some(e)) => (2.0 * e.left[j] - row[g], 2.0 * e.right[j] - row[nx - 1 - g]),
                    _ => (row[nx - 1 - g], row[g]),
                };
                out[o + pad - 1 - g] = lo;
                out[o + pad + nx + g] = hi;
            }
        }
        for g in 0..pad {
            let (src_lo, src_hi) = match domain {
                Domain::Box => (pad + g, pad + ny - 1 - g),
                Domain::Torus => (pad + ny - 1 - g, pad + g),
            };
            let (dst_lo, dst_hi) = (pad - 1 - g, pad + ny + g);
            for i in 0..w {
                let (a, b) = (out[src_lo * w + i], out[src_hi * w + i]);
                let (lo, hi) = match (domain, edges) {
                    (Domain::Box, Some(e)) => {
                        let ii = i.saturating_sub(pad).min(nx - 1);
                        (2.0 * e.bottom[ii] - a, 2.0 * e.top[ii] - b)
                    }
                    _ => (a, b),
                };
                out[dst_lo * w + i] = lo;
                out[dst_hi * w + i] = hi;
            }
        }
        Padded { w, pad: pad, data: out, coef: None }
    }

    fn spline(grid: &Grid, data: &[f64], domain: Domain, edges: Option<&EdgeFrame>) -> Self {
        let mut p = Self::with_pad(grid, data, domain, edges, SPLINE_PAD);
        let mut c = p.data.clone();
        let w = p.w;
        c.par_chunks_mut(w).for_each(prefilter);
        let h = c.len() / w;
        let mut col = vec![0.0; h];
        for i in 0..w {
            for j in 0..h {
                col[j] = c[j * w + i];
            }
            prefilter(&mut col);
            for j in 0..h {
                c[j * w + i] = col[j];
            }
        }
        p.coef = Some(c);
        p
    }

    #[inline]
    fn index(&self, i: isize, j: isize) -> usize {
        (j + self.pad as isize) as usize * self.w + (i + self.pad as isize) as usize
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.index(i, j)]
    }
}

/// In-place cubic B-spline prefilter of one line (pole `sqrt(3) - 2`).
fn prefilter(s: &mut [f64]) {
    let z = 3f64.sqrt() - 2.0;
    let n = s.len();
    if n < 2 {
        return;
    }
    let mut acc = 0.0;
    let mut zk = 1.0;
    for &v in s.iter().take(n.min(32)) {
        acc += zk * v;
        zk *= z;
    }
    s[0] = acc;
    for k in 1..n {
        s[k] += z * s[k - 1];
    }
    s[n - 1] = z / (z * z - 1.0) * (s[n - 1] + z * s[n - 2]);
    for k in (0..n - 1).rev() {
        s[k] = z * (s[k + 1] - s[k]);
    }
    for v in s.iter_mut() {
        *v *= 6.0;
    }
}

#[inline]
fn bspline(t: f64) -> [f64; 4] {
    let u = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [u * u * u / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0]
}

#[inline]
fn keys(t: f64) -> [f64; 4] {
    const A: f64 = -0.5;
    let w = |x: f64| {
        let x = x.abs();
        if x <= 1.0 {
            ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
        } else if x < 2.0 {
            ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
        } else {
            0.0
        }
    };
    [w(1.0 + t), w(t), w(1.0 - t), w(2.0 - t)]
}

/// Interpolated value at a point already reduced to `B` (torus) or checked to lie in `B` (box).
#[inline]
fn interpolate(pad: &Padded, grid: &Grid, p: Point, kind: Interpolation) -> f64 {
    let gx = p.x / grid.hx() - 0.5;
    let gy = p.y / grid.hy() - 0.5;
    let i0 = (gx.floor() as isize).clamp(-1, grid.nx as isize - 1);
    let j0 = (gy.floor() as isize).clamp(-1, grid.ny as isize - 1);
    let (fx, fy) = ((gx - i0 as f64).clamp(0.0, 1.0), (gy - j0 as f64).clamp(0.0, 1.0));
    let c = [pad.at(i0, j0), pad.at(i0 + 1, j0), pad.at(i0, j0 + 1), pad.at(i0 + 1, j0 + 1)];
    match kind {
        Interpolation::Bilinear => (1.0 - fy) * ((1.0 - fx) * c[0] + fx * c[1]) + fy * ((1.0 - fx) * c[2] + fx * c[3]),
        Interpolation::Bicubic | Interpolation::Spline => {
            let (src, wx, wy) = match (&pad.coef, kind) {
                (Some(c), Interpolation::Spline) => (c, bspline(fx), bspline(fy)),
                _ => (&pad.data, keys(fx), keys(fy)),
            };
            let mut v = 0.0;
            for (b, wyb) in wy.iter().enumerate() {
                let k = pad.index(i0 - 1, j0 - 1 + b as isize);
                let row = wx[0] * src[k] + wx[1] * src[k + 1] + wx[2] * src[k + 2] + wx[3] * src[k + 3];
                v += wyb * row;
            }
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.clamp(lo, hi)
        }
    }
}

pub(crate) fn inside_box(p: Point) -> bool {
    p.x >= 0.0 && p.x <= WIDTH && p.y >= 0.0 && p.y <= HEIGHT
}

fn reduce(p: Point) -> Point {
    Point::new(p.x.rem_euclid(WIDTH), p.y.rem_euclid(HEIGHT))
}

/// Departure points `X(-dp)` of every cell centre under the flow of `shape`.
pub(crate) fn departure_map(grid: &Grid, domain: Domain, shape: &Shape, dp: f64, max_turn: f64) -> Vec<Point> {
    let centers: Vec<Point> = grid.centers().collect();
    let map = |x: Point| -> Point {
        match shape {
            Shape::Uniform(u) => x - *u * dp,
            Shape::Shear(r) => Point::new(x.x - r * x.y * dp, x.y),
            _ => {
                let m = ((shape.turn_rate() * dp.abs()) / max_turn).ceil().max(1.0) as usize;
                let h = -dp / m as f64;
                let mut y = x;
                for _ in 0..m {
                    let k1 = shape.velocity(y);
                    let mid = y + k1 * (0.5 * h);
                    let mid = if domain == Domain::Box && !inside_box(mid) { clamp_box(mid) } else { mid };
                    y = y + shape.velocity(mid) * h;
                    if domain == Domain::Box && !inside_box(y) {
                        return y;
                    }
                }
                y
            }
        }
    };
    let mut out = vec![Point::ZERO; centers.len()];
    out.par_chunks_mut(grid.nx).zip(centers.par_chunks(grid.nx)).for_each(|(o, c)| {
        for (d, &x) in o.iter_mut().zip(c) {
            let y = map(x);
            *d = if domain == Domain::Torus { reduce(y) } else { y };
        }
    });
    out
}

pub(crate) fn clamp_box(p: Point) -> Point {
    Point::new(p.x.clamp(0.0, WIDTH), p.y.clamp(0.0, HEIGHT))
}

/// `theta(X)` at every departure point; box departures outside `B` take the boundary value.
pub(crate) fn transport(
    grid: &Grid,
    domain: Domain,
    data: &[f64],
    departures: &[Point],
    edges: Option<&EdgeFrame>,
    kind: Interpolation,
) -> Vec<f64> {
    let pad = if kind == Interpolation::Spline {
        Padded::spline(grid, data, domain, edges)
    } else {
        Padded::new(grid, data, domain, edges)
    };
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(grid.nx).zip(departures.par_chunks(grid.nx)).for_each(|(o, d)| {
        for (v, &p) in o.iter_mut().zip(d) {
            *v = if domain == Domain::Box && !inside_box(p) {
                edges.map_or(0.0, |e| e.value(clamp_box(p)))
            } else {
                interpolate(&pad, grid, p, kind)
            };
        }
    });
    out
}

/// Labels of invariant regions of a transport step; `u32::MAX` marks cells outside every region.
pub(crate) struct Regions {
    labels: Vec<u32>,
    count: usize,
}

impl Regions {
    pub fn whole(grid: &Grid) -> Self {
        Regions { labels: vec![0; grid.len()], count: 1 }
    }

    /// Rotor rectangles of a pulse shape, or `None` when the shape has no known invariant sets.
    pub fn of_shape(grid: &Grid, domain: Domain, shape: &Shape) -> Option<Self> {
        match shape {
            Shape::Pulse(ps) => {
                let mut ids = std::collections::HashMap::new();
                let labels = grid
                    .centers()
                    .map(|p| match ps.region(p) {
                        Some(key) => {
                            let next = ids.len() as u32;
                            *ids.entry(key).or_insert(next)
                        }
                        None => u32::MAX,
                    })
                    .collect();
                Some(Regions { labels, count: ids.len() })
            }
            Shape::Uniform(_) | Shape::Shear(_) if domain == Domain::Torus => Some(Regions::whole(grid)),
            _ => None,
        }
    }
}

/// Restores the mass of every region after transport. The correction goes to
/// cells that changed, in proportion to their distance from the region's bounds,
/// so values stay inside the range the region held before the step.
pub(crate) fn fix_mass(old: &[f64], new: &mut [f64], regions: &Regions) {
    let n = regions.count;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (&r, &a) in regions.labels.iter().zip(old) {
        if r != u32::MAX {
            lo[r as usize] = lo[r as usize].min(a);
            hi[r as usize] = hi[r as usize].max(a);
        }
    }
    let mut defect = vec![0.0; n];
    for ((&r, &a), b) in regions.labels.iter().zip(old).zip(new.iter_mut()) {
        if r != u32::MAX {
            let r = r as usize;
            *b = b.clamp(lo[r], hi[r]);
            defect[r] += a - *b;
        }
    }
    let room = |r: usize, v: f64| if defect[r] > 0.0 { hi[r] - v } else { v - lo[r] };
    let mut active = vec![0.0; n];
    let mut spare = vec![0.0; n];
    for ((&r, &a), &b) in regions.labels.iter().zip(old).zip(new.iter()) {
        if r != u32::MAX {
            let r = r as usize;
            active[r] += (b - a).abs() * room(r, b);
            spare[r] += room(r, b);
        }
    }
    for ((&r, &a), b) in regions.labels.iter().zip(old).zip(new.iter_mut()) {
        if r == u32::MAX {
            continue;
        }
        let r = r as usize;
        if defect[r] == 0.0 {
            continue;
        }
        let share = if active[r] > 0.0 && active[r] >= defect[r].abs() * 1e-3 {
            (*b - a).abs() * room(r, *b) / active[r]
        } else if spare[r] > 0.0 {
            room(r, *b) / spare[r]
        } else {
            continue;
        };
        *b = (*b + defect[r] * share).clamp(lo[r], hi[r]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    #[test]
    fn mass_fixer_restores_region_sums_within_bounds() {
        let g = Grid::new(17, 12).unwrap();
        let old: Vec<f64> = (0..g.len()).map(|k| ((k * 7) % 5) as f64 / 4.0).collect();
        let mut new: Vec<f64> = old.iter().rev().map(|v| 0.97 * v).collect();
        let regions = Regions::whole(&g);
        fix_mass(&old, &mut new, &regions);
        let (a, b): (f64, f64) = (old.iter().sum(), new.iter().sum());
        assert!((a - b).abs() < 1e-12 * a);
        assert!(new.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn keys_weights_partition_unity_and_reproduce_quadratics() {
        for t in [0.0, 0.2, 0.5, 0.9] {
            let w = keys(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let q: f64 = (0..4).map(|k| w[k] * ((k as f64 - 1.0) - t).powi(2)).sum();
            assert!(q.abs() < 1e-12);
        }
    }

    #[test]
    fn identity_map_is_exact() {
        let g = Grid::new(20, 14).unwrap();
        let f = ScalarField::from_fn(g, Domain::Torus, |p| (p.x * 3.0).sin() * p.y);
        let d: Vec<Point> = g.centers().collect();
        let out = transport(&g, Domain::Torus, &f.data, &d, None, Interpolation::Bicubic);
        for (a, b) in out.iter().zip(&f.data) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn spline_interpolates_nodes_and_beats_keys_on_smooth_shifts() {
        let g = Grid::new(48, 34).unwrap();
        let f = |p: Point| (2.0 * std::f64::consts::PI * p.x / WIDTH).sin() * (2.0 * std::f64::consts::PI * p.y).cos();
        let field = ScalarField::from_fn(g, Domain::Torus, f);
        let nodes: Vec<Point> = g.centers().collect();
        let same = transport(&g, Domain::Torus, &field.data, &nodes, None, Interpolation::Spline);
        assert!(same.iter().zip(&field.data).all(|(a, b)| (a - b).abs() < 1e-10));

        let shift = Point::new(0.37 * g.hx(), 0.61 * g.hy());
        let d: Vec<Point> = nodes.iter().map(|&p| reduce(p - shift)).collect();
        let err = |kind| {
            let out = transport(&g, Domain::Torus, &field.data, &d, None, kind);
            out.iter().zip(&d).map(|(v, &p)| (v - f(p)).abs()).sum::<f64>() / out.len() as f64
        };
        let (spline, keys) = (err(Interpolation::Spline), err(Interpolation::Bicubic));
        assert!(spline < 0.5 * keys, "spline {spline:.2e}, keys {keys:.2e}");
    }

    #[test]
    fn box_ghosts_reflect_about_data() {
        let g = Grid::new(10, 7).unwrap();
        let f = ScalarField::constant(g, Domain::Box, 0.3);
        let e = EdgeFrame::constant(&g, 0.3);
        let pad = Padded::new(&g, &f.data, Domain::Box, Some(&e));
        assert!(pad.data.iter().all(|v| (v - 0.3).abs() < 1e-15));
        let p = Point::new(0.01, 0.999);
        assert!((interpolate(&pad, &g, p, Interpolation::Bicubic) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn clipping_keeps_values_in_range() {
        let g = Grid::new(40, 28).unwrap();
        let f = ScalarField::from_fn(g, Domain::Torus, |p| if p.x < 0.7 { 1.0 } else { 0.0 });
        let d: Vec<Point> = g.centers().into_iter().map(|p| reduce(p - Point::new(0.013, 0.0))).collect();
        let out = transport(&g, Domain::Torus, &f.data, &d, None, Interpolation::Bicubic);
        assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
