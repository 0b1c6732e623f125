//! Advection-diffusion solution operator on the box (Dirichlet data) and the
//! torus: Strang splitting of semi-Lagrangian transport and exact diffusion.

mod advect;
mod boundary;
mod diffuse;
mod spectral;

pub use advect::Interpolation;
pub use boundary::{Boundary, BoundaryData, EdgeFrame, EdgeTraces};
pub use spectral::Symbol;

use crate::compensated::CompensatedSum;
use crate::error::{arg, Error, Result};
use crate::flow_fields::{Shape, VelocityField};
use crate::grid::{Domain, Grid, ScalarField};
use crate::point::Point;
use diffuse::Diffuser;
use serde::{Deserialize, Serialize};
use spectral::TorusTransform;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kappa: f64,
    pub nx: usize,
    pub ny: usize,
    /// Steps per unit of pulse pseudo-time.
    pub steps_per_pulse: usize,
    /// Optional advective Courant cap; transport is stable without it.
    pub courant: Option<f64>,
    /// Pseudo-time turn allowed per midpoint substep of the departure integration.
    pub max_turn: f64,
    pub interpolation: Interpolation,
    pub symbol: Symbol,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kappa: 1e-3,
            nx: 1024,
            ny: 724,
            steps_per_pulse: 4,
            courant: None,
            max_turn: 0.05,
            interpolation: Interpolation::Bicubic,
            symbol: Symbol::FivePoint,
        }
    }
}

impl SolverConfig {
    pub fn new(kappa: f64, grid: Grid) -> Self {
        SolverConfig { kappa, nx: grid.nx, ny: grid.ny, ..Default::default() }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return arg(format!("kappa must be finite and nonnegative, got {}", self.kappa));
        }
        if self.steps_per_pulse == 0 {
            return arg("steps_per_pulse must be positive");
        }
        if let Some(c) = self.courant {
            if !(c > 0.0) {
                return arg("courant number must be positive");
            }
        }
        if !(self.max_turn > 0.0) {
            return arg("max_turn must be positive");
        }
        self.grid().map(|_| ())
    }
}

/// What a run keeps besides its final field.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Times in `(s, t]` at which to take snapshots; `t` is always included.
    pub snapshot_times: Vec<f64>,
    pub keep_fields: bool,
    /// Record `kappa |grad theta|^2` and per-window energy losses.
    pub record_energy: bool,
    /// Longest diffusion step while the field rests, when recording energy.
    pub rest_cadence: Option<f64>,
    /// Record the edge traces of a torus run after every step.
    pub record_traces: bool,
}

impl RunOptions {
    pub fn energy() -> Self {
        RunOptions { record_energy: true, rest_cadence: Some(1.0 / 64.0), ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub mean: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub min: f64,
    pub max: f64,
}

impl NormSummary {
    pub fn of(theta: &ScalarField) -> Self {
        NormSummary {
            mean: theta.mean(),
            l1: l1(theta),
            l2: l2(theta),
            linf: linf(theta),
            min: theta.min(),
            max: theta.max(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub norms: NormSummary,
    #[serde(skip)]
    pub field: Option<ScalarField>,
}

/// Energy lost to diffusion over `[t0, t1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationWindow {
    pub t0: f64,
    pub t1: f64,
    pub lost: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub field: String,
    pub domain: Domain,
    pub config: SolverConfig,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    pub snapshots: Vec<Snapshot>,
    /// `(t, kappa |grad theta(t)|^2)`; a time may repeat across a transport step.
    pub series: Vec<(f64, f64)>,
    pub windows: Vec<DissipationWindow>,
    /// Energy removed by interpolation during transport.
    pub advective_loss: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    #[serde(skip)]
    pub traces: Option<EdgeTraces>,
}

impl RunRecord {
    /// Trapezoid integral of the dissipation series.
    pub fn integrated_dissipation(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for w in self.series.windows(2) {
            acc.add(0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0));
        }
        acc.value()
    }

    /// `|E(s) - E(t) - integral| / E(s)` with `E = (1/2)|theta - c|^2`.
    pub fn energy_closure(&self) -> f64 {
        let lost = self.initial_energy - self.final_energy;
        if self.initial_energy == 0.0 {
            return (lost - self.integrated_dissipation()).abs();
        }
        (lost - self.integrated_dissipation()).abs() / self.initial_energy
    }

    /// Measured diffusive loss inside `[a, b]`, prorating windows that straddle the ends.
    pub fn dissipation_in(&self, a: f64, b: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for w in &self.windows {
            let lo = w.t0.max(a);
            let hi = w.t1.min(b);
            if hi > lo {
                acc.add(if w.t1 > w.t0 { w.lost * (hi - lo) / (w.t1 - w.t0) } else { w.lost });
            }
        }
        acc.value()
    }

    pub fn total_dissipation(&self) -> f64 {
        crate::compensated::sum(self.windows.iter().map(|w| w.lost))
    }
}

/// `kappa |grad theta(t)|^2` recorded during a run.
pub fn energy_dissipation_series(record: &RunRecord) -> Result<Vec<(f64, f64)>> {
    if record.series.len() < 2 {
        return arg("run was recorded without an energy series");
    }
    Ok(record.series.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct MapKey {
    rotors: usize,
    level: u32,
    frame: i32,
    dp: u64,
}

/// Reusable solver state: transforms and cached departure maps for one grid and domain.
pub struct Solver {
    pub config: SolverConfig,
    pub grid: Grid,
    pub domain: Domain,
    diffuser: Diffuser,
    cache: Vec<(MapKey, Arc<Vec<Point>>)>,
    regions: Vec<(MapKey, Arc<advect::Regions>)>,
    /// Restore the mass of invariant regions after each transport step.
    pub mass_fixer: bool,
    capacity: usize,
}

/// Memory budget for cached departure maps; they do not depend on `kappa`, so
/// one solver reused across a sweep builds each map once.
const CACHE_BYTES: usize = 256 << 20;
/// Relative mismatch between the trapezoid rule and the measured loss that triggers bisection.
const TRAPEZOID_TOL: f64 = 0.01;
const MIN_WINDOW: f64 = 1e-12;

struct State<'a> {
    data: Vec<f64>,
    diffused_to: f64,
    steps: usize,
    boundary: &'a Boundary,
    opts: &'a RunOptions,
    series: Vec<(f64, f64)>,
    windows: Vec<DissipationWindow>,
    advective_loss: CompensatedSum,
    traces: Option<EdgeTraces>,
}

impl Solver {
    pub fn new(config: SolverConfig, domain: Domain) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let diffuser = Diffuser::new(grid, domain, config.symbol);
        let capacity = (CACHE_BYTES / (grid.len() * std::mem::size_of::<Point>())).max(4);
        Ok(Solver { config, grid, domain, diffuser, cache: Vec::new(), regions: Vec::new(), mass_fixer: true, capacity })
    }

    pub fn set_kappa(&mut self, kappa: f64) -> Result<()> {
        let mut c = self.config.clone();
        c.kappa = kappa;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    fn energy_shift(&self, boundary: &Boundary, data: &[f64]) -> f64 {
        match boundary {
            Boundary::Torus => crate::compensated::sum(data.iter().copied()) / data.len() as f64,
            Boundary::Dirichlet(b) => b.as_constant().unwrap_or(0.0),
        }
    }

    fn edges(&self, boundary: &Boundary, t: f64) -> Option<EdgeFrame> {
        match boundary {
            Boundary::Torus => None,
            Boundary::Dirichlet(b) => Some(b.frame_at(t, &self.grid)),
        }
    }

    fn energy(&self, st: &State, t: f64) -> (f64, f64) {
        let shift = self.energy_shift(st.boundary, &st.data);
        let edges = self.edges(st.boundary, t);
        diffuse::discrete_energy(&self.grid, self.domain, &st.data, shift, edges.as_ref())
    }

    fn departures(&mut self, shape: &Shape, dp: f64) -> Arc<Vec<Point>> {
        let key = match shape {
            Shape::Pulse(ps) => Some(MapKey {
                rotors: if ps.pulse == 2 { 0 } else { ps.pulse },
                level: ps.level,
                frame: ps.frame,
                dp: dp.to_bits(),
            }),
            _ => None,
        };
        if let Some(k) = key {
            if let Some(pos) = self.cache.iter().position(|(c, _)| *c == k) {
                let entry = self.cache.remove(pos);
                let map = entry.1.clone();
                self.cache.insert(0, entry);
                return map;
            }
        }
        let map = Arc::new(advect::departure_map(&self.grid, self.domain, shape, dp, self.config.max_turn));
        if let Some(k) = key {
            self.cache.insert(0, (k, map.clone()));
            self.cache.truncate(self.capacity);
        }
        map
    }

    fn regions(&mut self, shape: &Shape) -> Option<Arc<advect::Regions>> {
        if !self.mass_fixer {
            return None;
        }
        let key = match shape {
            Shape::Pulse(ps) => MapKey { rotors: if ps.pulse == 2 { 0 } else { ps.pulse }, level: ps.level, frame: ps.frame, dp: 0 },
            _ => MapKey { rotors: usize::MAX, level: 0, frame: 0, dp: 0 },
        };
        if let Some((_, r)) = self.regions.iter().find(|(k, _)| *k == key) {
            return Some(r.clone());
        }
        let r = Arc::new(advect::Regions::of_shape(&self.grid, self.domain, shape)?);
        self.regions.insert(0, (key, r.clone()));
        self.regions.truncate(self.capacity);
        Some(r)
    }

    fn substeps(&self, shape: &Shape, dp: f64) -> usize {
        let mut n = (self.config.steps_per_pulse as f64 * dp.abs()).ceil().max(1.0);
        if let Some(c) = self.config.courant {
            let speed = match shape {
                Shape::Uniform(u) => u.norm(),
                _ => self.grid.centers().map(|p| shape.velocity(p).norm()).fold(0.0, f64::max),
            };
            n = n.max((dp.abs() * speed / (c * self.grid.h())).ceil());
        }
        n as usize
    }

    fn record_trace(&self, st: &mut State, t: f64) -> Result<()> {
        if let Some(tr) = st.traces.as_mut() {
            let f = ScalarField { grid: self.grid, domain: self.domain, time: t, data: st.data.clone() };
            tr.push(t, EdgeFrame::from_torus(&f))?;
        }
        Ok(())
    }

    /// Chunk ends for diffusion over `[a, b]`.
    fn chunks(&self, st: &State, a: f64, b: f64) -> Vec<f64> {
        let mut ends = match st.boundary {
            Boundary::Dirichlet(bd) => bd.breakpoints(a, b, 1.0 / 256.0),
            Boundary::Torus => Vec::new(),
        };
        if st.opts.record_energy {
            if let Some(cad) = st.opts.rest_cadence {
                if b - a > cad {
                    // geometric start resolves the early decay of rough data
                    let mut t = a + (b - a).min(cad) / 1024.0;
                    let mut step = t - a;
                    while t < b {
                        ends.push(t);
                        step = (2.0 * step).min(cad);
                        t += step;
                    }
                }
            }
        }
        ends.push(b);
        ends.retain(|&t| t > a && t <= b);
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        ends
    }

    fn diffuse_to(&mut self, st: &mut State, target: f64) -> Result<()> {
        if target <= st.diffused_to {
            return Ok(());
        }
        let kappa = self.config.kappa;
        let constant = match st.boundary {
            Boundary::Dirichlet(b) => b.as_constant(),
            Boundary::Torus => None,
        };
        let mut a = st.diffused_to;
        let mut pending: Vec<f64> = self.chunks(st, a, target);
        pending.reverse();
        while let Some(b) = pending.pop() {
            let (f0, f1) = (self.edges(st.boundary, a), self.edges(st.boundary, b));
            if !st.opts.record_energy {
                self.diffuser.step(&mut st.data, kappa, b - a, f0.as_ref(), f1.as_ref(), constant);
            } else {
                let (e0, g0) = self.energy(st, a);
                let saved = st.data.clone();
                self.diffuser.step(&mut st.data, kappa, b - a, f0.as_ref(), f1.as_ref(), constant);
                let (e1, g1) = self.energy(st, b);
                let lost = e0 - e1;
                let trapezoid = 0.5 * kappa * (g0 + g1) * (b - a);
                if (trapezoid - lost).abs() > TRAPEZOID_TOL * lost.abs().max(1e-14) && b - a > MIN_WINDOW * (1.0 + b.abs()) {
                    st.data = saved;
                    pending.push(b);
                    pending.push(0.5 * (a + b));
                    continue;
                }
                st.windows.push(DissipationWindow { t0: a, t1: b, lost });
                st.series.push((a, kappa * g0));
                st.series.push((b, kappa * g1));
            }
            st.steps += 1;
            self.check(st, b)?;
            self.record_trace(st, b)?;
            a = b;
        }
        st.diffused_to = target;
        Ok(())
    }

    fn check(&self, st: &State, t: f64) -> Result<()> {
        if let Some(k) = st.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                time: t,
                step: st.steps,
                detail: format!("non-finite value at cell ({}, {})", k % self.grid.nx, k / self.grid.nx),
            });
        }
        Ok(())
    }

    fn transport(&mut self, st: &mut State, map: &[Point], regions: Option<&advect::Regions>, t: f64) -> Result<()> {
        let edges = self.edges(st.boundary, t);
        let before = if st.opts.record_energy { Some(self.energy(st, t)) } else { None };
        let mut next = advect::transport(&self.grid, self.domain, &st.data, map, edges.as_ref(), self.config.interpolation);
        if let Some(r) = regions {
            advect::fix_mass(&st.data, &mut next, r);
        }
        st.data = next;
        if let Some((e0, _)) = before {
            let (e1, _) = self.energy(st, t);
            st.advective_loss.add(e0 - e1);
        }
        st.steps += 1;
        self.check(st, t)?;
        self.record_trace(st, t)
    }

    fn run_segment(&mut self, st: &mut State, u: &dyn VelocityField, a: f64, b: f64) -> Result<()> {
        for piece in u.pieces(a, b) {
            let Some(pulse) = piece.pulse else { continue };
            let p0 = pulse.clock.pseudo(piece.start);
            let p1 = pulse.clock.pseudo(piece.end);
            let dp = p1 - p0;
            if dp.abs() < 1e-14 {
                continue;
            }
            let n = self.substeps(&pulse.shape, dp);
            let step = dp / n as f64;
            let map = self.departures(&pulse.shape, step);
            let regions = self.regions(&pulse.shape);
            let mut ta = piece.start;
            for k in 0..n {
                let tb = if k + 1 == n {
                    piece.end
                } else {
                    pulse.clock.time_at(p0 + (k + 1) as f64 * step, piece.start, piece.end)
                };
                let tm = 0.5 * (ta + tb);
                self.diffuse_to(st, tm)?;
                self.transport(st, &map, regions.as_deref(), tm)?;
                ta = tb;
            }
        }
        self.diffuse_to(st, b)
    }

    /// Solves from `s` to `t`, returning the final field and the run record.
    pub fn run(
        &mut self,
        theta: &ScalarField,
        u: &dyn VelocityField,
        s: f64,
        t: f64,
        boundary: &Boundary,
        opts: &RunOptions,
    ) -> Result<(ScalarField, RunRecord)> {
        if !(s <= t) {
            return arg(format!("interval [{s}, {t}] is empty"));
        }
        if theta.domain != boundary.domain() || theta.domain != self.domain {
            return arg("field domain does not match the boundary mode");
        }
        if theta.grid != self.grid {
            return arg("field grid does not match the solver configuration");
        }
        if let Boundary::Dirichlet(b) = boundary {
            b.validate(&self.grid)?;
        }
        theta.check_finite()?;
        if opts.record_traces && self.domain != Domain::Torus {
            return arg("edge traces can only be recorded on the torus");
        }
        let mut st = State {
            data: theta.data.clone(),
            diffused_to: s,
            steps: 0,
            boundary,
            opts,
            series: Vec::new(),
            windows: Vec::new(),
            advective_loss: CompensatedSum::new(),
            traces: opts.record_traces.then(|| EdgeTraces::new(&self.grid)),
        };
        self.record_trace(&mut st, s)?;
        let initial_energy = self.energy(&st, s).0;
        let mut stops: Vec<f64> = opts.snapshot_times.iter().copied().filter(|&x| x > s && x < t).collect();
        stops.push(t);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        let mut snapshots = Vec::with_capacity(stops.len());
        let mut a = s;
        for b in stops {
            self.run_segment(&mut st, u, a, b)?;
            let field = ScalarField { grid: self.grid, domain: self.domain, time: b, data: st.data.clone() };
            snapshots.push(Snapshot {
                time: b,
                norms: NormSummary::of(&field),
                field: opts.keep_fields.then_some(field),
            });
            a = b;
        }
        let final_energy = self.energy(&st, t).0;
        let out = ScalarField { grid: self.grid, domain: self.domain, time: t, data: st.data };
        let record = RunRecord {
            field: u.name().to_string(),
            domain: self.domain,
            config: self.config.clone(),
            start: s,
            end: t,
            steps: st.steps,
            snapshots,
            series: st.series,
            windows: st.windows,
            advective_loss: st.advective_loss.value(),
            initial_energy,
            final_energy,
            traces: st.traces,
        };
        Ok((out, record))
    }

    pub fn advance(&mut self, theta: &ScalarField, u: &dyn VelocityField, s: f64, t: f64, boundary: &Boundary) -> Result<ScalarField> {
        self.run(theta, u, s, t, boundary, &RunOptions::default()).map(|r| r.0)
    }
}

/// `T_{s,t}^{u, kappa, f} theta`.
pub fn advance(
    theta: &ScalarField,
    u: &dyn VelocityField,
    config: &SolverConfig,
    s: f64,
    t: f64,
    boundary: &Boundary,
) -> Result<ScalarField> {
    if theta.grid.nx != config.nx || theta.grid.ny != config.ny {
        return arg("field grid does not match the solver configuration");
    }
    Solver::new(config.clone(), theta.domain)?.advance(theta, u, s, t, boundary)
}

/// Heat flow `e^{duration * Laplacian}` on the torus (five-point symbol).
pub fn heat_convolve(theta: &ScalarField, duration: f64) -> Result<ScalarField> {
    heat_convolve_with(theta, duration, Symbol::FivePoint)
}

pub fn heat_convolve_with(theta: &ScalarField, duration: f64, symbol: Symbol) -> Result<ScalarField> {
    if theta.domain != Domain::Torus {
        return arg("heat convolution is defined on the torus; advance with the zero field in the box");
    }
    if !(duration >= 0.0) {
        return arg("duration must be nonnegative");
    }
    let mut out = theta.clone();
    if duration > 0.0 {
        TorusTransform::new(theta.grid, symbol).apply(&mut out.data, |lam| (-duration * lam).exp());
    }
    out.time = theta.time + duration;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    Linf,
    /// `H^sigma`, `sigma` in `[0, 1]`.
    Sobolev(f64),
    /// `H^-sigma`.
    NegSobolev(f64),
}

pub fn l1(theta: &ScalarField) -> f64 {
    crate::compensated::sum(theta.data.iter().map(|v| v.abs())) * theta.grid.cell_area()
}

pub fn l2(theta: &ScalarField) -> f64 {
    (crate::compensated::sum(theta.data.iter().map(|v| v * v)) * theta.grid.cell_area()).sqrt()
}

pub fn linf(theta: &ScalarField) -> f64 {
    theta.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn norms(theta: &ScalarField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L1 => Ok(l1(theta)),
        NormKind::L2 => Ok(l2(theta)),
        NormKind::Linf => Ok(linf(theta)),
        NormKind::Sobolev(s) | NormKind::NegSobolev(s) => {
            if !(0.0..=1.0).contains(&s) {
                return arg(format!("Sobolev index {s} outside [0, 1]"));
            }
            if theta.domain != Domain::Torus {
                return arg("Sobolev norms need torus data");
            }
            let sign = if matches!(kind, NormKind::Sobolev(_)) { 1.0 } else { -1.0 };
            let t = TorusTransform::new(theta.grid, Symbol::Continuous);
            Ok(t.weighted_energy(&theta.data, |lam| (1.0 + lam).powf(sign * s)).sqrt())
        }
    }
}
