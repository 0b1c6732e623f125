//! Intermediate-stage checks and empirical constants of the stability lemmas.

use super::data::InitialData;
use super::plan::{two_cell_depths, universal_depths};
use crate::characteristics::{simulate_backward, SdeOptions};
use crate::error::{arg, Error, Result};
use crate::flow_fields::{
    mixed_configuration, schedule::{s_start, t_start}, sup_speed, FlowParams, PulseShape, Shape, SteadyField, Truncation,
    TwoCellField, UniversalField, ZeroField,
};
use crate::geometry::{rect_average, two_cell_data, CellGrid, Family};
use crate::grid::{Domain, Grid, Rect, ScalarField, HEIGHT, WIDTH};
use crate::point::Point;
use crate::solver::{l1, Boundary, BoundaryData, RunOptions, Solver, SolverConfig};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::sync::Arc;

/// An empirical constant `C` in a bound `measured <= C * model`, from per-`kappa` ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    /// Geometric mean of the ratios.
    pub estimate: f64,
    /// Largest ratio.
    pub sup: f64,
    /// 95% interval for the geometric mean.
    pub ci: (f64, f64),
    /// `(kappa, measured / model)`.
    pub ratios: Vec<(f64, f64)>,
    /// Finite, with interval width below half the estimate.
    pub stable: bool,
}

impl ConstantFit {
    pub fn from_ratios(ratios: Vec<(f64, f64)>) -> Result<Self> {
        if ratios.len() < 2 {
            return Err(Error::Fit("a constant needs at least two ratios".into()));
        }
        if ratios.iter().any(|&(_, r)| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Fit("ratios must be positive and finite".into()));
        }
        let logs: Vec<f64> = ratios.iter().map(|r| r.1.ln()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::Fit(e.to_string()))?.inverse_cdf(0.975);
        let half = t * (var / n).sqrt();
        let estimate = mean.exp();
        let ci = ((mean - half).exp(), (mean + half).exp());
        let sup = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
        Ok(ConstantFit { estimate, sup, ci, ratios, stable: (ci.1 - ci.0) / estimate < 0.5 })
    }

    pub fn relative_width(&self) -> f64 {
        (self.ci.1 - self.ci.0) / self.estimate
    }
}

/// `kappa^{1/2} log(1/kappa)`.
pub fn boundary_layer_scale(kappa: f64) -> f64 {
    kappa.sqrt() * (1.0 / kappa).ln()
}

fn box_solver(kappa: f64, grid: Grid, domain: Domain) -> Result<Solver> {
    Solver::new(SolverConfig::new(kappa, grid), domain)
}

fn check_pentadic(level: usize, grid: &Grid) -> Result<()> {
    let cell = 5f64.powi(-(level as i32));
    if cell < 4.0 * grid.h() {
        return Err(Error::Resolution(format!(
            "level-{level} cells ({cell:.2e}) span fewer than four samples of the {}x{} grid",
            grid.nx, grid.ny
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub kappa: f64,
    pub alpha: f64,
    pub n: usize,
    pub t_n: f64,
    /// `|theta(t_n) - Theta_n|_{L^1}`.
    pub oracle_distance: f64,
    /// `|theta(t_n) - theta^0(t_n)|_{L^1}`.
    pub inviscid_distance: f64,
    /// `|theta^0(t_n) - Theta_n|_{L^1}`: the scheme error of the inviscid run.
    pub scheme_error: f64,
    /// `|Theta_0|_{L^1}`.
    pub initial_l1: f64,
}

/// Runs the two-cell field to `t_n` and compares with the ideal stage-`n`
/// configuration and with the inviscid run.
pub fn transport_proximity_check(kappa: f64, alpha: f64, grid: Grid, f: f64) -> Result<TransportReport> {
    let n = two_cell_depths(alpha, kappa).n;
    check_pentadic(n, &grid)?;
    let params = FlowParams::new(alpha)?;
    let v = TwoCellField::new(&params, n);
    let theta0 = two_cell_data(grid, Domain::Box);
    let t_n = t_start(alpha, n);
    let ideal = ScalarField::indicator(grid, Domain::Box, &mixed_configuration(n as u32));
    let boundary = Boundary::constant(f);
    let mut solver = box_solver(kappa, grid, Domain::Box)?;
    let (theta, _) = solver.run(&theta0, &v, 0.0, t_n, &boundary, &RunOptions::default())?;
    solver.set_kappa(0.0)?;
    let (inviscid, _) = solver.run(&theta0, &v, 0.0, t_n, &boundary, &RunOptions::default())?;
    Ok(TransportReport {
        kappa,
        alpha,
        n,
        t_n,
        oracle_distance: theta.l1_distance(&ideal)?,
        inviscid_distance: theta.l1_distance(&inviscid)?,
        scheme_error: inviscid.l1_distance(&ideal)?,
        initial_l1: l1(&theta0),
    })
}

/// One synthetic run of a lemma sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSample {
    pub kappa: f64,
    /// `|u|_{L^1 L^inf}` or the boundary offset, depending on the lemma.
    pub amplitude: f64,
    pub measured: f64,
    pub model: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaFit {
    pub samples: Vec<LemmaSample>,
    /// Per `kappa`, the smallest constant covering every sampled amplitude.
    pub constant: ConstantFit,
}

fn lemma_fit(samples: Vec<LemmaSample>) -> Result<LemmaFit> {
    let mut kappas: Vec<f64> = samples.iter().map(|s| s.kappa).collect();
    kappas.sort_by(|a, b| b.total_cmp(a));
    kappas.dedup();
    let ratios = kappas
        .iter()
        .map(|&k| {
            let sup = samples.iter().filter(|s| s.kappa == k).map(|s| s.measured / s.model).fold(0.0, f64::max);
            (k, sup)
        })
        .collect();
    Ok(LemmaFit { constant: ConstantFit::from_ratios(ratios)?, samples })
}

/// Mean preservation in the box: `theta_0 = 0`, `f = 1`, and for every
/// amplitude `a` two steady drifts with `|u|_{L^1 L^inf} = a`, a rotor tangent
/// to the walls and a uniform flow across them. The measured quantity is the
/// mean of `theta(1)` and the model `a + kappa^{1/2} log(1/kappa)`.
pub fn mean_preservation_fit(kappas: &[f64], amplitudes: &[f64], grid: Grid) -> Result<LemmaFit> {
    let rotor = SteadyField { shape: Shape::Pulse(PulseShape::new(0, 0, 0)), rate: 1.0, start: 0.0, end: 1.0 };
    let sup = sup_speed(&rotor, 0.5, &grid);
    let theta0 = ScalarField::zeros(grid, Domain::Box);
    let boundary = Boundary::constant(1.0);
    let mut samples = Vec::new();
    for &a in amplitudes {
        if !(a >= 0.0 && a.is_finite()) {
            return arg("drift amplitudes must be nonnegative");
        }
        let mut drifts = vec![SteadyField { rate: a / sup, ..rotor.clone() }];
        if a > 0.0 {
            drifts.push(SteadyField { shape: Shape::Uniform(Point::new(a, 0.0)), ..rotor.clone() });
        }
        for u in &drifts {
            let mut solver = box_solver(kappas[0], grid, Domain::Box)?;
            for &kappa in kappas {
                solver.set_kappa(kappa)?;
                let (theta, _) = solver.run(&theta0, u, 0.0, 1.0, &boundary, &RunOptions::default())?;
                samples.push(LemmaSample {
                    kappa,
                    amplitude: a,
                    measured: theta.mean().abs(),
                    model: a + boundary_layer_scale(kappa),
                });
            }
        }
    }
    lemma_fit(samples)
}

/// Constants under perturbed boundary data: `theta_0 = c`, `f = c + delta`,
/// `u = 0`; the measured quantity is `|theta(1) - c|_{L^1}` and the model
/// `delta kappa^{1/2} log(1/kappa)`.
pub fn constants_lemma_fit(kappas: &[f64], offsets: &[f64], grid: Grid) -> Result<LemmaFit> {
    let c = 0.5;
    let theta0 = ScalarField::constant(grid, Domain::Box, c);
    let mut solver = box_solver(kappas[0], grid, Domain::Box)?;
    let mut samples = Vec::new();
    for &kappa in kappas {
        solver.set_kappa(kappa)?;
        for &delta in offsets {
            let (theta, _) = solver.run(&theta0, &ZeroField, 0.0, 1.0, &Boundary::constant(c + delta), &RunOptions::default())?;
            samples.push(LemmaSample {
                kappa,
                amplitude: delta,
                measured: l1(&theta.map(|x| x - c)),
                model: delta.abs() * boundary_layer_scale(kappa),
            });
        }
    }
    lemma_fit(samples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub kappa: f64,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    /// `max over level-m cells |(theta(1/2))_{B_m + x_m} - 1/2|`.
    pub max_deviation: f64,
    /// The same for the inviscid run.
    pub inviscid_deviation: f64,
}

fn max_cell_deviation(theta: &ScalarField, tiling: &CellGrid, target: f64) -> Result<f64> {
    tiling.cells.iter().try_fold(0.0f64, |acc, c| Ok(acc.max((rect_average(theta, &c.rect())? - target).abs())))
}

/// Box averages over the level-`m` pentadic cells after the two-cell field has run to `1/2`.
pub fn box_average_drift_check(kappa: f64, alpha: f64, grid: Grid, f: f64) -> Result<DriftReport> {
    let d = two_cell_depths(alpha, kappa);
    check_pentadic(d.n.max(d.m), &grid)?;
    let tiling = CellGrid::new(d.m as u32, Family::Pentadic)?;
    let v = TwoCellField::new(&FlowParams::new(alpha)?, d.n);
    let theta0 = two_cell_data(grid, Domain::Box);
    let boundary = Boundary::constant(f);
    let mut solver = box_solver(kappa, grid, Domain::Box)?;
    let (theta, _) = solver.run(&theta0, &v, 0.0, 0.5, &boundary, &RunOptions::default())?;
    solver.set_kappa(0.0)?;
    let (inviscid, _) = solver.run(&theta0, &v, 0.0, 0.5, &boundary, &RunOptions::default())?;
    Ok(DriftReport {
        kappa,
        alpha,
        n: d.n,
        m: d.m,
        max_deviation: max_cell_deviation(&theta, &tiling, 0.5)?,
        inviscid_deviation: max_cell_deviation(&inviscid, &tiling, 0.5)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub kappa: f64,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    /// `s_n`; the run covers `[1/2, s_n]`.
    pub end: f64,
    /// Universal stages active inside the window.
    pub active_stages: usize,
    /// `|T phi - phi|_{L^1} / |phi|_{L^1}`.
    pub relative_change: f64,
}

/// A random piecewise constant on the level-`m` dyadic tiling, transported by
/// `V` over `[1/2, s_n]`.
pub fn piecewise_constant_persistence_check(kappa: f64, alpha: f64, grid: Grid, seed: u64) -> Result<PersistenceReport> {
    let d = universal_depths(alpha, kappa);
    let phi = InitialData::RandomPiecewise { level: d.m as u32, seed }.build(grid, Domain::Torus)?;
    let v = UniversalField::truncated(&FlowParams::new(alpha)?, &Truncation::for_grid(&grid));
    let end = s_start(alpha, d.n);
    let mut solver = box_solver(kappa, grid, Domain::Torus)?;
    let (out, _) = solver.run(&phi, &v, 0.5, end, &Boundary::Torus, &RunOptions::default())?;
    Ok(PersistenceReport {
        kappa,
        alpha,
        n: d.n,
        m: d.m,
        end,
        active_stages: v.depth().saturating_sub(d.n),
        relative_change: out.l1_distance(&phi)? / l1(&phi),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRow {
    pub kappa: f64,
    /// Box with the torus trace as boundary data against the torus.
    pub diff_trace: f64,
    /// Box with `f = 1/2` against the torus.
    pub diff_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    pub rows: Vec<HeatRow>,
    /// Log-log slope of `diff_constant` against `kappa`.
    pub exponent: Option<super::fit::RateFit>,
    /// `diff_constant / (kappa^{1/2} log(1/kappa))`.
    pub constant: ConstantFit,
}

/// Pure diffusion of `theta_0` on the torus and in the box.
pub fn heat_box_vs_torus_check(kappas: &[f64], grid: Grid, data: &InitialData) -> Result<HeatReport> {
    if kappas.is_empty() {
        return arg("no kappa values");
    }
    let torus0 = data.build(grid, Domain::Torus)?;
    let box0 = data.build(grid, Domain::Box)?;
    let mut torus = box_solver(kappas[0], grid, Domain::Torus)?;
    let mut boxed = box_solver(kappas[0], grid, Domain::Box)?;
    let mut rows = Vec::new();
    for &kappa in kappas {
        torus.set_kappa(kappa)?;
        boxed.set_kappa(kappa)?;
        let opts = RunOptions { record_traces: true, rest_cadence: Some(1.0 / 64.0), ..Default::default() };
        let (t, rec) = torus.run(&torus0, &ZeroField, 0.0, 1.0, &Boundary::Torus, &opts)?;
        let traces = rec.traces.ok_or_else(|| Error::Argument("torus run kept no traces".into()))?;
        let trace = Boundary::Dirichlet(BoundaryData::Traces(Arc::new(traces)));
        let (b, _) = boxed.run(&box0, &ZeroField, 0.0, 1.0, &trace, &RunOptions::default())?;
        let (c, _) = boxed.run(&box0, &ZeroField, 0.0, 1.0, &Boundary::constant(0.5), &RunOptions::default())?;
        rows.push(HeatRow { kappa, diff_trace: l1_between(&b, &t), diff_constant: l1_between(&c, &t) });
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.diff_constant).collect();
    let ratios = rows.iter().map(|r| (r.kappa, r.diff_constant / boundary_layer_scale(r.kappa))).collect();
    Ok(HeatReport { exponent: super::fit::fit_rate(&ks, &diffs).ok(), constant: ConstantFit::from_ratios(ratios)?, rows })
}

fn l1_between(a: &ScalarField, b: &ScalarField) -> f64 {
    let h = a.grid.cell_area();
    crate::compensated::sum(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs() * h))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundReport {
    pub kappa: f64,
    pub ell: f64,
    pub reach: f64,
    /// `sup |theta(1)|` over the inner window.
    pub inner_sup: f64,
    /// `10 exp(-L^2 / (8 kappa)) |theta_0|_inf`.
    pub gaussian_bound: f64,
    /// Solver value at the inner corner closest to the data.
    pub corner_value: f64,
    /// Fraction of backward paths from that corner ending outside the enlarged window.
    pub mc_fraction: f64,
    pub mc_error: f64,
    pub samples: usize,
}

fn window(ell: f64, reach: f64) -> Rect {
    let c = Point::new(WIDTH / 2.0, HEIGHT / 2.0);
    Rect::new(c.x - WIDTH * ell - reach, c.y - ell - reach, c.x + WIDTH * ell + reach, c.y + ell + reach)
}

/// Pure diffusion on the torus of data vanishing on the window enlarged by `L`
/// and equal to 1 outside; the inner window is `[-sqrt(2) l, sqrt(2) l] x [-l, l]`
/// around the centre.
pub fn local_bound_check(kappa: f64, ell: f64, reach: f64, grid: Grid, samples: usize, seed: u64) -> Result<LocalBoundReport> {
    if !(kappa > 0.0) || !(ell > 0.0 && ell <= 0.5) || !(reach > 0.0) {
        return arg("local bounds need kappa > 0, 0 < l <= 1/2 and L > 0");
    }
    if WIDTH * ell + reach >= WIDTH / 2.0 || ell + reach >= HEIGHT / 2.0 {
        return arg(format!("the window of half-size l = {ell} enlarged by L = {reach} exceeds the torus"));
    }
    let inner = window(ell, 0.0);
    let outer = window(ell, reach);
    let theta0 = ScalarField::from_fn(grid, Domain::Torus, |p| if outer.contains(p) { 0.0 } else { 1.0 });
    let mut solver = box_solver(kappa, grid, Domain::Torus)?;
    let (theta, _) = solver.run(&theta0, &ZeroField, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
    let mut inner_sup = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if inner.contains(grid.center(i, j)) {
                inner_sup = inner_sup.max(theta.at(i, j).abs());
            }
        }
    }
    let corner = Point::new(inner.x0, inner.y0);
    let ens = simulate_backward(corner, &ZeroField, kappa, (0.0, 1.0), samples, seed, &SdeOptions::torus())?;
    let hits = ens.endpoints.iter().filter(|&&p| !outer.contains(crate::flow_fields::wrap(p))).count();
    let p = hits as f64 / samples as f64;
    Ok(LocalBoundReport {
        kappa,
        ell,
        reach,
        inner_sup,
        gaussian_bound: 10.0 * (-reach * reach / (8.0 * kappa)).exp(),
        corner_value: theta.sample(corner),
        mc_fraction: p,
        mc_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

impl LocalBoundReport {
    /// Solver and Monte Carlo agree within three standard errors, with the
    /// standard error floored at one path.
    pub fn agrees(&self) -> bool {
        (self.corner_value - self.mc_fraction).abs() <= 3.0 * self.mc_error.max(1.0 / self.samples as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fit_of_equal_ratios_is_exact() {
        let f = ConstantFit::from_ratios(vec![(1e-2, 2.0), (1e-3, 2.0), (1e-4, 2.0)]).unwrap();
        assert!((f.estimate - 2.0).abs() < 1e-12);
        assert!(f.stable);
        let g = ConstantFit::from_ratios(vec![(1e-2, 1.0), (1e-3, 4.0), (1e-4, 0.5)]).unwrap();
        assert!(!g.stable);
    }

    #[test]
    fn oversized_window_is_rejected() {
        let g = Grid::new(64, 45).unwrap();
        assert!(matches!(local_bound_check(1e-3, 0.3, 0.3, g, 10, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn unresolved_stage_is_rejected() {
        let g = Grid::new(128, 90).unwrap();
        assert!(matches!(transport_proximity_check(1e-4, 0.5, g, 0.5), Err(Error::Resolution(_))));
    }
}
