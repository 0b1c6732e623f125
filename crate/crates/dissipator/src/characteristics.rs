//! Stochastic characteristics `dX = u dt + sqrt(2 kappa) dw`, run backward from
//! the terminal time, and the Feynman-Kac representation of the solver.

use crate::compensated::CompensatedSum;
use crate::error::{arg, Result};
use crate::experiments::fit::{fit_line, LineFit};
use crate::flow_fields::{schedule, FlowParams, Shape, Truncation, UniversalField, VelocityField, PULSES_PER_STAGE};
use crate::grid::{Domain, ScalarField, HEIGHT, WIDTH};
use crate::point::Point;
use crate::solver::BoundaryData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeOptions {
    pub domain: Domain,
    /// Largest time step.
    pub max_dt: f64,
    /// Steps per stage, where a stage is `PULSES_PER_STAGE` pulses.
    pub steps_per_stage: usize,
    /// Pseudo-time turn per RK4 substep of the drift flow.
    pub max_turn: f64,
}

impl Default for SdeOptions {
    fn default() -> Self {
        SdeOptions { domain: Domain::Box, max_dt: 1e-3, steps_per_stage: 64, max_turn: 0.25 }
    }
}

impl SdeOptions {
    pub fn torus() -> Self {
        SdeOptions { domain: Domain::Torus, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// From the terminal time back to the initial one (Feynman-Kac).
    Backward,
    /// Ordinary forward time.
    Forward,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub x: Point,
    pub samples: usize,
    pub seed: u64,
    pub dt: f64,
    pub kappa: f64,
    pub start: f64,
    pub end: f64,
    pub domain: Domain,
    pub direction: Direction,
    /// Where each path is at the far end of the interval, or where it left `B`.
    pub endpoints: Vec<Point>,
    pub exited: Vec<bool>,
    /// Physical time of exit; NaN for paths that stayed inside.
    pub exit_times: Vec<f64>,
}

impl PathEnsemble {
    pub fn exit_fraction(&self) -> f64 {
        self.exited.iter().filter(|&&e| e).count() as f64 / self.samples as f64
    }

    pub fn displacements(&self) -> impl Iterator<Item = Point> + '_ {
        self.endpoints.iter().map(move |&p| p - self.x)
    }
}

/// One step of the path schedule, from `from` to `to` in physical time.
#[derive(Clone)]
struct Step {
    from: f64,
    to: f64,
    /// Pseudo-time increment and shape of the drift flow.
    drift: Option<(Shape, f64)>,
    turn_rate: f64,
}

fn schedule_steps(u: &dyn VelocityField, s: f64, t: f64, dir: Direction, opts: &SdeOptions) -> (Vec<Step>, f64) {
    let mut steps = Vec::new();
    let mut min_dt = f64::INFINITY;
    for piece in u.pieces(s, t) {
        let len = piece.end - piece.start;
        let (n, drift) = match &piece.pulse {
            None => {
                let n = if opts.domain == Domain::Torus { 1 } else { (len / opts.max_dt).ceil().max(1.0) as usize };
                (n, None)
            }
            Some(pl) => {
                let stage = (pl.end - pl.start) * PULSES_PER_STAGE as f64;
                let dt = opts.max_dt.min(stage / opts.steps_per_stage as f64);
                ((len / dt).ceil().max(1.0) as usize, Some(pl.clone()))
            }
        };
        for k in 0..n {
            let a = piece.start + len * k as f64 / n as f64;
            let b = if k + 1 == n { piece.end } else { piece.start + len * (k + 1) as f64 / n as f64 };
            min_dt = min_dt.min(b - a);
            let d = drift.as_ref().map(|pl| (pl.shape.clone(), pl.clock.pseudo(b) - pl.clock.pseudo(a)));
            let turn_rate = d.as_ref().map_or(0.0, |(sh, _)| sh.turn_rate());
            steps.push(Step { from: a, to: b, drift: d, turn_rate });
        }
    }
    if dir == Direction::Backward {
        steps.reverse();
        for st in &mut steps {
            std::mem::swap(&mut st.from, &mut st.to);
            if let Some((_, dp)) = st.drift.as_mut() {
                *dp = -*dp;
            }
        }
    }
    (steps, if min_dt.is_finite() { min_dt } else { 0.0 })
}

/// Flow of `w` for pseudo-time `dp`.
fn drift_flow(shape: &Shape, turn_rate: f64, dp: f64, max_turn: f64, x: Point) -> Point {
    match shape {
        Shape::Uniform(u) => x + *u * dp,
        Shape::Shear(r) => Point::new(x.x + r * x.y * dp, x.y),
        _ => {
            let m = (turn_rate * dp.abs() / max_turn).ceil().max(1.0) as usize;
            let h = dp / m as f64;
            let mut y = x;
            for _ in 0..m {
                let k1 = shape.velocity(y);
                let k2 = shape.velocity(y + k1 * (0.5 * h));
                let k3 = shape.velocity(y + k2 * (0.5 * h));
                let k4 = shape.velocity(y + k3 * h);
                y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            y
        }
    }
}

fn on_boundary(p: Point) -> bool {
    p.x <= 0.0 || p.x >= WIDTH || p.y <= 0.0 || p.y >= HEIGHT
}

/// Fraction of the segment `a -> b` travelled before it leaves `B`, if it does.
fn exit_fraction(a: Point, b: Point) -> Option<f64> {
    let mut lam: f64 = 1.0;
    let mut out = false;
    let d = b - a;
    for (pos, vel, lo, hi) in [(a.x, d.x, 0.0, WIDTH), (a.y, d.y, 0.0, HEIGHT)] {
        if pos + vel < lo {
            out = true;
            lam = lam.min((lo - pos) / vel);
        } else if pos + vel > hi {
            out = true;
            lam = lam.min((hi - pos) / vel);
        }
    }
    out.then_some(lam.clamp(0.0, 1.0))
}

/// Whether the Brownian bridge from `a` to `b`, both inside `B`, touched a wall
/// in between; `spread` is `kappa dt`. Returns the wall point nearest the
/// midpoint of the wall that was hit.
fn bridge_exit(a: Point, b: Point, spread: f64, rng: &mut ChaCha8Rng) -> Option<Point> {
    let mid = (a + b) * 0.5;
    let walls = [
        (a.x, b.x, Point::new(0.0, mid.y)),
        (WIDTH - a.x, WIDTH - b.x, Point::new(WIDTH, mid.y)),
        (a.y, b.y, Point::new(mid.x, 0.0)),
        (HEIGHT - a.y, HEIGHT - b.y, Point::new(mid.x, HEIGHT)),
    ];
    let mut stay = 1.0;
    let mut best = (0.0, walls[0].2);
    for (da, db, at) in walls {
        let p = (-da * db / spread).exp();
        stay *= 1.0 - p;
        if p > best.0 {
            best = (p, at);
        }
    }
    if 1.0 - stay < 1e-15 {
        return None;
    }
    (rng.random::<f64>() < 1.0 - stay).then_some(best.1)
}

struct PathEnd {
    point: Point,
    exited: bool,
    exit_time: f64,
}

fn run_path(x: Point, steps: &[Step], kappa: f64, opts: &SdeOptions, rng: &mut ChaCha8Rng) -> PathEnd {
    let boxed = opts.domain == Domain::Box;
    if boxed && on_boundary(x) {
        return PathEnd { point: x, exited: true, exit_time: steps.first().map_or(f64::NAN, |s| s.from) };
    }
    let mut p = x;
    for st in steps {
        let dt = (st.to - st.from).abs();
        let mut q = match &st.drift {
            Some((shape, dp)) => drift_flow(shape, st.turn_rate, *dp, opts.max_turn, p),
            None => p,
        };
        if kappa > 0.0 {
            let s = (2.0 * kappa * dt).sqrt();
            let (gx, gy): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            q = q + Point::new(gx, gy) * s;
        }
        if boxed {
            if let Some(lam) = exit_fraction(p, q) {
                let hit = p + (q - p) * lam;
                let hit = Point::new(hit.x.clamp(0.0, WIDTH), hit.y.clamp(0.0, HEIGHT));
                return PathEnd { point: hit, exited: true, exit_time: st.from + (st.to - st.from) * lam };
            }
            if kappa > 0.0 {
                if let Some(hit) = bridge_exit(p, q, kappa * dt, rng) {
                    return PathEnd { point: hit, exited: true, exit_time: 0.5 * (st.from + st.to) };
                }
            }
        }
        p = q;
    }
    PathEnd { point: p, exited: false, exit_time: f64::NAN }
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn validate(kappa: f64, s: f64, t: f64, n: usize, opts: &SdeOptions) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return arg(format!("kappa must be finite and nonnegative, got {kappa}"));
    }
    if !(s <= t) {
        return arg(format!("interval [{s}, {t}] is empty"));
    }
    if n == 0 {
        return arg("sample count must be positive");
    }
    if !(opts.max_dt > 0.0) || opts.steps_per_stage == 0 || !(opts.max_turn > 0.0) {
        return arg("invalid step options");
    }
    Ok(())
}

/// Paths over `[s, t]` in the given direction, starting from `x`.
pub fn simulate(
    x: Point,
    u: &dyn VelocityField,
    kappa: f64,
    (s, t): (f64, f64),
    n: usize,
    seed: u64,
    dir: Direction,
    opts: &SdeOptions,
) -> Result<PathEnsemble> {
    validate(kappa, s, t, n, opts)?;
    if opts.domain == Domain::Box && !((0.0..=WIDTH).contains(&x.x) && (0.0..=HEIGHT).contains(&x.y)) {
        return Err(crate::Error::Domain(format!("{x:?} is outside B")));
    }
    let (steps, dt) = schedule_steps(u, s, t, dir, opts);
    let ends: Vec<PathEnd> = (0..n)
        .into_par_iter()
        .map(|k| run_path(x, &steps, kappa, opts, &mut path_rng(seed, k as u64)))
        .collect();
    Ok(PathEnsemble {
        x,
        samples: n,
        seed,
        dt,
        kappa,
        start: s,
        end: t,
        domain: opts.domain,
        direction: dir,
        endpoints: ends.iter().map(|e| e.point).collect(),
        exited: ends.iter().map(|e| e.exited).collect(),
        exit_times: ends.iter().map(|e| e.exit_time).collect(),
    })
}

/// Backward characteristics from `(t, x)` to time `s`.
pub fn simulate_backward(
    x: Point,
    u: &dyn VelocityField,
    kappa: f64,
    interval: (f64, f64),
    n: usize,
    seed: u64,
    opts: &SdeOptions,
) -> Result<PathEnsemble> {
    simulate(x, u, kappa, interval, n, seed, Direction::Backward, opts)
}

/// Mean and standard error of the mean.
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = crate::compensated::sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add((v - mean) * (v - mean));
    }
    (mean, (acc.value() / (n - 1.0) / n).sqrt())
}

/// `E[theta_0(X_s); no exit] + E[f(exit); exit]`, with its standard error.
#[allow(clippy::too_many_arguments)]
pub fn feynman_kac(
    x: Point,
    theta0: &ScalarField,
    f: Option<&BoundaryData>,
    u: &dyn VelocityField,
    kappa: f64,
    interval: (f64, f64),
    n: usize,
    seed: u64,
    opts: &SdeOptions,
) -> Result<(f64, f64)> {
    if theta0.domain != opts.domain {
        return arg("initial data and path domain differ");
    }
    if opts.domain == Domain::Box && f.is_none() {
        return arg("box mode needs boundary data");
    }
    let ens = simulate_backward(x, u, kappa, interval, n, seed, opts)?;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            if ens.exited[k] {
                f.map_or(0.0, |b| b.value(ens.exit_times[k], ens.endpoints[k]))
            } else {
                theta0.sample(ens.endpoints[k])
            }
        })
        .collect();
    Ok(mean_and_error(&values))
}

/// Probability that the backward path from `(t, x)` leaves `B` before `s`.
pub fn exit_probability(
    x: Point,
    u: &dyn VelocityField,
    kappa: f64,
    interval: (f64, f64),
    n: usize,
    seed: u64,
    opts: &SdeOptions,
) -> Result<(f64, f64)> {
    if opts.domain != Domain::Box {
        return arg("exit probabilities are defined in the box");
    }
    let ens = simulate_backward(x, u, kappa, interval, n, seed, opts)?;
    let p = ens.exit_fraction();
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Larger of the two coordinate 10%-90% ranges of a cloud of points.
pub fn interquantile_spread(points: &[Point]) -> f64 {
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    (quantile(&xs, 0.9) - quantile(&xs, 0.1)).max(quantile(&ys, 0.9) - quantile(&ys, 0.1))
}

/// Total variation distance between the empirical law of points on the torus
/// and the uniform law, on a `bins x bins` histogram.
pub fn tv_to_uniform(points: &[Point], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins * bins];
    for p in points {
        let q = crate::flow_fields::wrap(*p);
        let i = ((q.x / WIDTH * bins as f64) as usize).min(bins - 1);
        let j = ((q.y / HEIGHT * bins as f64) as usize).min(bins - 1);
        counts[j * bins + i] += 1;
    }
    let n = points.len() as f64;
    let u = 1.0 / (bins * bins) as f64;
    0.5 * counts.iter().map(|&c| (c as f64 / n - u).abs()).sum::<f64>()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadRow {
    pub kappa: f64,
    pub level: usize,
    pub time: f64,
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadingReport {
    pub alpha: f64,
    pub start: Point,
    pub samples: usize,
    pub seed: u64,
    pub depth: usize,
    pub rows: Vec<SpreadRow>,
    /// Slope of `log spread` against `log(s_n - 1/2)`, per kappa, when at least three levels are usable.
    pub slopes: Vec<(f64, Option<LineFit>)>,
    /// `(kappa, TV(law of X_1, uniform), noise floor)`.
    pub tv: Vec<(f64, f64, f64)>,
    pub bins: usize,
    /// Reference slope `1 / (1 - alpha)`.
    pub reference_slope: f64,
}

/// Forward paths from `(0, y)` under `V`: spreads at the times `s_n` and the
/// distance of the law of `X_1` from uniform.
pub fn spreading_experiment(
    y: Point,
    kappas: &[f64],
    alpha: f64,
    samples: usize,
    seed: u64,
    trunc: &Truncation,
    bins: usize,
) -> Result<SpreadingReport> {
    let params = FlowParams::new(alpha)?;
    let v = UniversalField::truncated(&params, trunc);
    let depth = v.depth();
    if depth < 3 {
        return Err(crate::Error::Fit("fewer than three resolved stages".into()));
    }
    let opts = SdeOptions::torus();
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut tv = Vec::new();
    for (ki, &kappa) in kappas.iter().enumerate() {
        let mut cloud: Vec<Point> = vec![y; samples];
        let mut t0 = 0.0;
        let mut fit_x = Vec::new();
        let mut fit_y = Vec::new();
        for n in (0..=depth).rev() {
            let t1 = schedule::s_start(alpha, n);
            let stream = seed ^ ((ki as u64) << 48) ^ ((n as u64) << 32);
            let (steps, _) = schedule_steps(&v, t0, t1, Direction::Forward, &opts);
            cloud = cloud
                .into_par_iter()
                .enumerate()
                .map(|(k, p)| run_path(p, &steps, kappa, &opts, &mut path_rng(stream, k as u64)).point)
                .collect();
            let spread = interquantile_spread(&cloud);
            rows.push(SpreadRow { kappa, level: n, time: t1, spread });
            if n > 0 && spread > 0.0 {
                fit_x.push((t1 - 0.5).ln());
                fit_y.push(spread.ln());
            }
            t0 = t1;
        }
        slopes.push((kappa, if fit_x.len() >= 3 { fit_line(&fit_x, &fit_y).ok() } else { None }));
        let floor = ((bins * bins) as f64 / samples as f64).sqrt() * 0.4;
        tv.push((kappa, tv_to_uniform(&cloud, bins), floor));
    }
    Ok(SpreadingReport {
        alpha,
        start: y,
        samples,
        seed,
        depth,
        rows,
        slopes,
        tv,
        bins,
        reference_slope: 1.0 / (1.0 - alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_fields::{UniformField, ZeroField};

    #[test]
    fn exit_fraction_finds_the_first_edge() {
        let a = Point::new(0.1, 0.5);
        assert_eq!(exit_fraction(a, Point::new(0.2, 0.6)), None);
        let lam = exit_fraction(a, Point::new(-0.1, 0.5)).unwrap();
        assert!((lam - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deterministic_translation_on_the_torus() {
        let u = UniformField(Point::new(1.0, 0.0));
        let x = Point::new(0.3, 0.4);
        let ens = simulate_backward(x, &u, 0.0, (0.0, 0.5), 3, 1, &SdeOptions::torus()).unwrap();
        for p in &ens.endpoints {
            let w = crate::flow_fields::wrap(*p);
            assert!((w.x - (0.3 - 0.5f64).rem_euclid(WIDTH)).abs() < 1e-12 && (w.y - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let opts = SdeOptions::torus();
        let a = simulate_backward(Point::new(0.5, 0.5), &ZeroField, 0.01, (0.0, 1.0), 50, 9, &opts).unwrap();
        let b = simulate_backward(Point::new(0.5, 0.5), &ZeroField, 0.01, (0.0, 1.0), 50, 9, &opts).unwrap();
        let c = simulate_backward(Point::new(0.5, 0.5), &ZeroField, 0.01, (0.0, 1.0), 50, 10, &opts).unwrap();
        assert_eq!(a.endpoints, b.endpoints);
        assert_ne!(a.endpoints, c.endpoints);
    }

    #[test]
    fn boundary_start_exits_at_once() {
        let (p, _) = exit_probability(Point::new(0.0, 0.3), &ZeroField, 0.01, (0.0, 1.0), 10, 1, &SdeOptions::default()).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn coarse_steps_still_see_wall_crossings() {
        let (kappa, t, d) = (1e-2, 0.1, 0.05);
        let x = Point::new(d, 0.5);
        let opts = SdeOptions { max_dt: 0.05, ..SdeOptions::default() };
        let (p, se) = exit_probability(x, &ZeroField, kappa, (0.0, t), 40_000, 3, &opts).unwrap();
        let exact = statrs::function::erf::erfc(d / (2.0 * (kappa * t).sqrt()));
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact} +- {se}");
    }

    #[test]
    fn tv_of_uniform_grid_is_zero() {
        let pts: Vec<Point> = (0..16).flat_map(|j| (0..16).map(move |i| Point::new((i as f64 + 0.5) * WIDTH / 16.0, (j as f64 + 0.5) / 16.0))).collect();
        assert!(tv_to_uniform(&pts, 4) < 1e-15);
        assert!((tv_to_uniform(&vec![Point::new(0.1, 0.1); 10], 4) - 15.0 / 16.0).abs() < 1e-12);
    }
}
