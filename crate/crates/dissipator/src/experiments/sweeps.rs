//! Dissipation sweeps over `kappa` for the two-cell, universal and
//! forward-backward fields.
//!
//! Departure maps do not depend on `kappa`, so each sweep drives a single
//! solver through its `kappa` list and builds every map once.

use super::data::{total_variation, InitialData};
use super::fit::{fit_rate, RateFit};
use super::plan::{two_cell_depths, universal_depths, BoundarySpec, ExperimentPlan};
use crate::error::Result;
use crate::flow_fields::{ForwardBackwardField, TimeReversed, TwoCellField, UniversalField};
use crate::grid::{Domain, ScalarField};
use crate::solver::{l1, linf, norms, Boundary, BoundaryData, NormKind, RunOptions, RunRecord, Solver};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub datum: String,
    pub kappa: f64,
    pub error: f64,
    pub norm: String,
    /// `n(kappa)` of the experiment.
    pub stage: usize,
    /// Whether the `n(kappa)` cells are resolved by the grid.
    pub resolved: bool,
    /// Relative energy-identity residual of the run; NaN when not recorded.
    pub closure: f64,
    pub wall_time: f64,
}

/// Whether `values` never increase along the list.
pub fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

fn rate_fit(kappas: &[f64], errors: &[f64]) -> Option<RateFit> {
    fit_rate(kappas, errors).ok()
}

fn closure_of(rec: &RunRecord, recorded: bool) -> f64 {
    if recorded {
        rec.energy_closure()
    } else {
        f64::NAN
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoCellReport {
    pub plan: ExperimentPlan,
    pub rows: Vec<SweepRow>,
    pub fit: Option<RateFit>,
    /// `(1 - alpha) / 12`.
    pub reference_exponent: f64,
    /// `e(kappa)` nonincreasing as `kappa` decreases.
    pub monotone: bool,
    /// `|Theta_0 - 1/2|_{L^1}`.
    pub initial_error: f64,
    pub stages: usize,
    pub warnings: Vec<String>,
}

impl TwoCellReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

/// `e(kappa) = |theta(1) - 1/2|_{L^1(B)}` under the two-cell field.
pub fn two_cell_dissipation_sweep(plan: &ExperimentPlan) -> Result<TwoCellReport> {
    plan.validate()?;
    let grid = plan.grid()?;
    let trunc = plan.truncation()?;
    let v = TwoCellField::truncated(&plan.params, &trunc);
    let theta0 = plan.data.build(grid, Domain::Box)?;
    let initial_error = l1(&theta0.map(|x| x - 0.5));
    let mut solver = Solver::new(plan.solver_config(plan.kappas[0])?, Domain::Box)?;
    let mut outer: Option<Solver> = None;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &kappa in &plan.kappas {
        let clock = Instant::now();
        solver.set_kappa(kappa)?;
        let constant = plan.boundary.fixed();
        let boundary = match constant.clone() {
            Some(b) => b,
            None => {
                let torus = match outer.as_mut() {
                    Some(s) => s,
                    None => outer.insert(Solver::new(plan.solver_config(kappa)?, Domain::Torus)?),
                };
                torus.set_kappa(kappa)?;
                let opts = RunOptions { record_traces: true, ..Default::default() };
                let data = plan.data.build(grid, Domain::Torus)?;
                let (_, rec) = torus.run(&data, &v, 0.0, 1.0, &Boundary::Torus, &opts)?;
                let traces = rec.traces.expect("traces were requested");
                Boundary::Dirichlet(BoundaryData::Traces(Arc::new(traces)))
            }
        };
        let recorded = constant.is_some();
        let opts = RunOptions {
            snapshot_times: plan.snapshot_times.clone(),
            ..if recorded { RunOptions::energy() } else { RunOptions::default() }
        };
        let (theta, rec) = solver.run(&theta0, &v, 0.0, 1.0, &boundary, &opts)?;
        let error = l1(&theta.map(|x| x - 0.5));
        let n = two_cell_depths(plan.alpha(), kappa).n;
        let resolved = 5f64.powi(-(n as i32)) >= trunc.min_cell;
        if !resolved {
            warnings.push(format!(
                "kappa = {kappa:e}: mixing scale 5^-{n} is below {:.2e}; the field keeps {} stages",
                trunc.min_cell, v.stages
            ));
        }
        rows.push(SweepRow {
            experiment: "two-cell".into(),
            datum: plan.data.label(),
            kappa,
            error,
            norm: "L1".into(),
            stage: n,
            resolved,
            closure: closure_of(&rec, recorded),
            wall_time: clock.elapsed().as_secs_f64(),
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(TwoCellReport {
        plan: plan.clone(),
        fit: rate_fit(&plan.kappas, &errors),
        reference_exponent: (1.0 - plan.alpha()) / 12.0,
        monotone: nonincreasing(&errors),
        initial_error,
        stages: v.stages,
        rows,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityRow {
    pub kappa: f64,
    pub max: f64,
    pub min: f64,
    /// `max / min` over the data library.
    pub factor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniversalReport {
    pub plan: ExperimentPlan,
    pub data: Vec<InitialData>,
    pub rows: Vec<SweepRow>,
    pub uniformity: Vec<UniformityRow>,
    /// Per datum: whether `e(kappa)` decreases strictly as `kappa` decreases, and the rate fit.
    pub trends: Vec<(String, bool, Option<RateFit>)>,
    /// `(1 - alpha)^2 / 72`.
    pub reference_exponent: f64,
    pub depth: usize,
}

/// `e(kappa) = |theta(1)|_{L^1} / |theta_0|_{TV}` under the universal field, per datum.
pub fn universal_dissipation_sweep(plan: &ExperimentPlan, data: &[InitialData]) -> Result<UniversalReport> {
    plan.validate()?;
    let grid = plan.grid()?;
    let v = UniversalField::truncated(&plan.params, &plan.truncation()?);
    let mut solver = Solver::new(plan.solver_config(plan.kappas[0])?, Domain::Torus)?;
    let fields: Vec<(String, ScalarField, f64)> = data
        .iter()
        .map(|d| {
            let f = d.build(grid, Domain::Torus)?;
            let tv = total_variation(&f);
            Ok((d.label(), f, tv))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &kappa in &plan.kappas {
        solver.set_kappa(kappa)?;
        let n = universal_depths(plan.alpha(), kappa).n;
        for (label, theta0, tv) in &fields {
            let clock = Instant::now();
            let (theta, rec) = solver.run(theta0, &v, 0.0, 1.0, &Boundary::Torus, &RunOptions::energy())?;
            let error = if *tv > 0.0 { l1(&theta) / tv } else { 0.0 };
            rows.push(SweepRow {
                experiment: "universal".into(),
                datum: label.clone(),
                kappa,
                error,
                norm: "L1/TV".into(),
                stage: n,
                resolved: n <= v.depth(),
                closure: rec.energy_closure(),
                wall_time: clock.elapsed().as_secs_f64(),
            });
        }
    }
    let uniformity = plan
        .kappas
        .iter()
        .map(|&kappa| {
            let e: Vec<f64> = rows.iter().filter(|r| r.kappa == kappa).map(|r| r.error).collect();
            let max = e.iter().copied().fold(0.0, f64::max);
            let min = e.iter().copied().fold(f64::INFINITY, f64::min);
            UniformityRow { kappa, max, min, factor: if min > 0.0 { max / min } else { f64::INFINITY } }
        })
        .collect();
    let trends = fields
        .iter()
        .map(|(label, _, _)| {
            let e: Vec<f64> = rows.iter().filter(|r| &r.datum == label).map(|r| r.error).collect();
            let decreasing = e.windows(2).all(|w| w[1] < w[0]);
            (label.clone(), decreasing, rate_fit(&plan.kappas, &e))
        })
        .collect();
    Ok(UniversalReport {
        plan: plan.clone(),
        data: data.to_vec(),
        rows,
        uniformity,
        trends,
        reference_exponent: (1.0 - plan.alpha()).powi(2) / 72.0,
        depth: v.depth(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub kappa: f64,
    /// `|T theta|_1 / |theta|_1` under `V`.
    pub l1_ratio: f64,
    /// `<theta, T~ g> / |theta|_1` with `g = sign(T theta)` and `T~` the solution
    /// operator of the time-reversed field; equals `l1_ratio` when `T~` is the adjoint.
    pub dual_ratio: f64,
    /// `|T~ g - mean|_inf / |g|_inf`, an upper bound for `l1_ratio`.
    pub linf_ratio_reversed: f64,
    pub relative_gap: f64,
    /// Largest `|T~ g|_inf - |g|_inf`.
    pub linf_excess: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub plan: ExperimentPlan,
    /// Ratios `|theta(1)|_X / |theta_0|_X` under `W` for `X = L1, L2, Linf`, and
    /// `|theta(1)|_{H^s} / |theta_0|_{H^-s}`.
    pub rows: Vec<SweepRow>,
    pub duality: Vec<DualityRow>,
    /// `(1 - alpha)^2 / 288`.
    pub sigma: f64,
    /// Largest `|theta(1)|_inf - |theta_0|_inf` over all runs.
    pub linf_excess: f64,
    /// Per norm: ratio decreasing as `kappa` decreases.
    pub trends: Vec<(String, bool)>,
}

/// The `L^p` and Sobolev ratios under `W`, and the duality between `V` and its time reversal.
pub fn corollary_checks(plan: &ExperimentPlan) -> Result<CorollaryReport> {
    plan.validate()?;
    let grid = plan.grid()?;
    let v = UniversalField::truncated(&plan.params, &plan.truncation()?);
    let w = ForwardBackwardField::new(v.clone());
    let reversed = TimeReversed::adjoint(v.clone());
    let theta0 = plan.data.build(grid, Domain::Torus)?;
    let m = theta0.mean();
    let theta0 = theta0.map(|x| x - m);
    let sigma = (1.0 - plan.alpha()).powi(2) / 288.0;
    let kinds = [
        ("L1", NormKind::L1, NormKind::L1),
        ("L2", NormKind::L2, NormKind::L2),
        ("Linf", NormKind::Linf, NormKind::Linf),
        ("H^s/H^-s", NormKind::Sobolev(sigma), NormKind::NegSobolev(sigma)),
    ];
    let mut solver = Solver::new(plan.solver_config(plan.kappas[0])?, Domain::Torus)?;
    let mut rows = Vec::new();
    let mut duality = Vec::new();
    let mut linf_excess = f64::NEG_INFINITY;
    for &kappa in &plan.kappas {
        solver.set_kappa(kappa)?;
        let n = universal_depths(plan.alpha(), kappa).n;
        let clock = Instant::now();
        let (theta, rec) = solver.run(&theta0, &w, 0.0, 1.0, &Boundary::Torus, &RunOptions::energy())?;
        let wall = clock.elapsed().as_secs_f64();
        linf_excess = linf_excess.max(linf(&theta) - linf(&theta0));
        for (name, top, bottom) in kinds {
            let den = norms(&theta0, bottom)?;
            rows.push(SweepRow {
                experiment: "corollary".into(),
                datum: plan.data.label(),
                kappa,
                error: if den > 0.0 { norms(&theta, top)? / den } else { 0.0 },
                norm: name.into(),
                stage: n,
                resolved: n <= v.depth(),
                closure: rec.energy_closure(),
                wall_time: wall,
            });
        }
        let (forward, _) = solver.run(&theta0, &v, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
        let g = forward.map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
        let (back, _) = solver.run(&g, &reversed, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
        let norm0 = l1(&theta0);
        let l1_ratio = l1(&forward) / norm0;
        let dual_ratio = theta0.inner(&back)? / norm0;
        let mb = back.mean();
        let excess = linf(&back) - linf(&g);
        linf_excess = linf_excess.max(excess);
        duality.push(DualityRow {
            kappa,
            l1_ratio,
            dual_ratio,
            linf_ratio_reversed: linf(&back.map(|x| x - mb)) / linf(&g),
            relative_gap: (dual_ratio - l1_ratio).abs() / l1_ratio,
            linf_excess: excess,
        });
    }
    let trends = kinds
        .iter()
        .map(|(name, _, _)| {
            let e: Vec<f64> = rows.iter().filter(|r| r.norm == *name).map(|r| r.error).collect();
            (name.to_string(), e.windows(2).all(|w| w[1] < w[0]))
        })
        .collect();
    Ok(CorollaryReport { plan: plan.clone(), rows, duality, sigma, linf_excess, trends })
}

/// Convenience for the default two-cell boundary data.
pub fn constant_boundary(value: f64) -> BoundarySpec {
    BoundarySpec::Constant { value }
}
