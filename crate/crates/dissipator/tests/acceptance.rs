//! Acceptance run: one verdict line per criterion with the tolerances pinned
//! below. Failing criteria are reported, not hidden; set
//! `ACCEPTANCE_STRICT=1` to turn any failure into a nonzero exit.

use dissipator::characteristics::{feynman_kac, spreading_experiment, SdeOptions};
use dissipator::experiments::atoms::dissipation_atoms;
use dissipator::experiments::checks::{heat_box_vs_torus_check, mean_preservation_fit};
use dissipator::experiments::data::{data_library, interior_points, InitialData};
use dissipator::experiments::plan::{universal_depths, ExperimentPlan};
use dissipator::experiments::sweeps::{
    constant_boundary, corollary_checks, two_cell_dissipation_sweep, universal_dissipation_sweep,
};
use dissipator::flow_fields::*;
use dissipator::solver::*;
use dissipator::{Domain, Grid, Point, Result, ScalarField};
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

const MODE_TOL: f64 = 1e-3;
const MODE_SECONDS: f64 = 5.0;
const TRANSLATION_RATIO: f64 = 3.0;
const MEAN_DRIFT: f64 = 1e-12;
const CONTRACTION_SLACK: f64 = 1e-3;
const CONTRACTION_PAIRS: usize = 50;
const CLOSURE: f64 = 0.02;
const FK_POINTS: usize = 20;
const FK_PATHS: usize = 100_000;
const FK_SE: f64 = 3.0;
const FK_SECONDS: f64 = 120.0;
const ORACLE_SECONDS: f64 = 10.0;
const TWO_CELL_FRACTION: f64 = 0.15;
const UNIFORMITY: f64 = 4.0;
const DUALITY_GAP: f64 = 0.05;
const LINF_SLACK: f64 = 1e-3;
const ATOM_SUM_TOL: f64 = 1e-6;
const CONCENTRATION: f64 = 0.70;
const CI_WIDTH: f64 = 0.5;
const BOX_TORUS_EXPONENT: (f64, f64) = (0.35, 0.65);
const SPREAD_PATHS: usize = 10_000;
const SPREAD_BINS: usize = 8;
const TV_FLOOR_FACTOR: f64 = 1.5;

const FIT_KAPPAS: [f64; 7] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

/// Energy closures of the long pipeline runs, collected for criterion 3.
#[derive(Default)]
struct Closures(Vec<(String, f64)>);

impl Closures {
    fn add(&mut self, label: impl Into<String>, c: f64) {
        self.0.push((label.into(), c));
    }
}

fn sin_mode(g: Grid) -> ScalarField {
    ScalarField::from_fn(g, Domain::Torus, |p| (2.0 * PI * p.y).sin())
}

fn mode_decay() -> Result<Verdict> {
    let g = Grid::new(1024, 724)?;
    let clock = Instant::now();
    let out = advance(&sin_mode(g), &ZeroField, &SolverConfig::new(0.01, g), 0.0, 1.0, &Boundary::Torus)?;
    let secs = clock.elapsed().as_secs_f64();
    let m = sin_mode(g);
    let amp = out.inner(&m)? / m.inner(&m)?;
    let rel = (amp / (-4.0 * PI * PI * 0.01f64).exp() - 1.0).abs();
    verdict(
        rel <= MODE_TOL && secs < MODE_SECONDS,
        format!("amplitude {amp:.6}, relative error {rel:.1e} (tol {MODE_TOL:e}); {secs:.2} s (limit {MODE_SECONDS} s)"),
    )
}

fn translation_error(nx: usize) -> Result<(f64, f64)> {
    let g = Grid::with_width(nx)?;
    let f = |p: Point| (2.0 * PI * p.x / SQRT_2).sin() * (2.0 * PI * p.y).cos() + 0.5 * (4.0 * PI * p.y).sin();
    let theta = ScalarField::from_fn(g, Domain::Torus, f);
    let out = advance(&theta, &UniformField(Point::new(1.0, 0.0)), &SolverConfig::new(0.0, g), 0.0, 1.0, &Boundary::Torus)?;
    let exact = ScalarField::from_fn(g, Domain::Torus, |p| f(Point::new(p.x - 1.0, p.y)));
    Ok((out.l1_distance(&exact)?, g.h()))
}

fn translation() -> Result<Verdict> {
    let (coarse, h) = translation_error(128)?;
    let (fine, _) = translation_error(256)?;
    let ratio = coarse / fine;
    verdict(
        coarse <= h * h && ratio >= TRANSLATION_RATIO,
        format!("L1 error {coarse:.2e} at 128 (h^2 = {:.2e}), {fine:.2e} at 256, ratio {ratio:.2} (min {TRANSLATION_RATIO})", h * h),
    )
}

fn conservation(closures: &Closures) -> Result<Verdict> {
    let g = Grid::with_width(256)?;
    let params = FlowParams::new(0.5)?;
    let v = UniversalField::truncated(&params, &Truncation::for_grid(&g));
    let theta0 = InitialData::RandomPiecewise { level: 5, seed: 2 }.build(g, Domain::Torus)?.map(|x| x + 0.3);
    let mut solver = Solver::new(SolverConfig::new(1e-3, g), Domain::Torus)?;
    let (theta, _) = solver.run(&theta0, &v, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
    let drift = (theta.mean() - theta0.mean()).abs() / theta0.oscillation();

    let small = Grid::with_width(128)?;
    let vt = UniversalField::truncated(&params, &Truncation::for_grid(&small));
    let vb = TwoCellField::truncated(&params, &Truncation::for_grid(&small));
    let mut torus = Solver::new(SolverConfig::new(1e-3, small), Domain::Torus)?;
    let mut boxed = Solver::new(SolverConfig::new(1e-3, small), Domain::Box)?;
    let mut worst: f64 = f64::NEG_INFINITY;
    for k in 0..CONTRACTION_PAIRS {
        let domain = if k % 2 == 0 { Domain::Torus } else { Domain::Box };
        let a = InitialData::RandomPiecewise { level: 3, seed: 1000 + 2 * k as u64 }.build(small, domain)?;
        let b = InitialData::RandomPiecewise { level: 4, seed: 1001 + 2 * k as u64 }.build(small, domain)?;
        let (ta, tb) = if domain == Domain::Torus {
            let (ta, _) = torus.run(&a, &vt, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
            let (tb, _) = torus.run(&b, &vt, 0.0, 1.0, &Boundary::Torus, &RunOptions::default())?;
            (ta, tb)
        } else {
            let f = Boundary::constant(0.0);
            let (ta, _) = boxed.run(&a, &vb, 0.0, 1.0, &f, &RunOptions::default())?;
            let (tb, _) = boxed.run(&b, &vb, 0.0, 1.0, &f, &RunOptions::default())?;
            (ta, tb)
        };
        worst = worst.max(ta.l1_distance(&tb)? / a.l1_distance(&b)? - 1.0);
    }

    let (label, closure) = closures
        .0
        .iter()
        .cloned()
        .fold((String::new(), 0.0), |acc, (l, c)| if c > acc.1 { (l, c) } else { acc });
    let within = closures.0.iter().filter(|(_, c)| *c <= CLOSURE).count();
    verdict(
        drift <= MEAN_DRIFT && worst <= CONTRACTION_SLACK && closure <= CLOSURE,
        format!(
            "mean drift {drift:.1e}/osc (tol {MEAN_DRIFT:e}); contraction excess {worst:.1e} over {CONTRACTION_PAIRS} pairs (tol {CONTRACTION_SLACK:e}); \
             energy closure within {CLOSURE} on {within}/{} pipeline runs, worst {closure:.4} ({label})",
            closures.0.len()
        ),
    )
}

fn feynman_kac_check() -> Result<Verdict> {
    let clock = Instant::now();
    let params = FlowParams::new(0.5)?;
    let coarse = Grid::with_width(512)?;
    let fine = Grid::with_width(1024)?;
    let v = TwoCellField::truncated(&params, &Truncation::for_grid(&coarse));
    let data = InitialData::Smooth { modes: 4, seed: 5 };
    let points = interior_points(FK_POINTS, 0.1, 17);
    let f = BoundaryData::Constant(0.5);
    let opts = SdeOptions { max_dt: 1e-2, steps_per_stage: 64, ..SdeOptions::default() };
    let theta0 = data.build(fine, Domain::Box)?;
    let mut parts = Vec::new();
    let mut pass = true;
    for kappa in [1e-2, 1e-3] {
        let mut pde = Vec::new();
        for (g, spp) in [(coarse, 16), (fine, 32)] {
            let mut cfg = SolverConfig::new(kappa, g);
            cfg.steps_per_pulse = spp;
            let mut s = Solver::new(cfg, Domain::Box)?;
            let (th, _) = s.run(&data.build(g, Domain::Box)?, &v, 0.0, 1.0, &Boundary::constant(0.5), &RunOptions::default())?;
            pde.push(th);
        }
        let mut worst: f64 = f64::NEG_INFINITY;
        for (k, &p) in points.iter().enumerate() {
            let (mc, se) = feynman_kac(p, &theta0, Some(&f), &v, kappa, (0.0, 1.0), FK_PATHS, 100 + k as u64, &opts)?;
            let (a, b) = (pde[1].sample(p), pde[0].sample(p));
            worst = worst.max(((mc - a).abs() - (a - b).abs()) / se);
        }
        pass &= worst <= FK_SE;
        parts.push(format!("kappa {kappa:e}: worst |MC - PDE| - grid = {worst:.2} SE"));
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(
        pass && secs < FK_SECONDS,
        format!("{} (tol {FK_SE} SE); {FK_POINTS} points x {FK_PATHS} paths in {secs:.0} s (limit {FK_SECONDS} s)", parts.join("; ")),
    )
}

fn oracle() -> Result<Verdict> {
    let clock = Instant::now();
    let mut state = MixerOracleState::two_cell(1250, 875)?;
    let mut levels = Vec::new();
    for n in 1..=3 {
        state = state.step()?;
        let exact = state.cell_counts(n)?.iter().all(|&(ones, total)| 2 * ones == total);
        levels.push(format!("level {n}: {}", if exact { "exact" } else { "unbalanced" }));
        if !exact {
            return verdict(false, levels.join(", "));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    verdict(secs < ORACLE_SECONDS, format!("{}; {secs:.2} s (limit {ORACLE_SECONDS} s)", levels.join(", ")))
}

fn two_cell(closures: &mut Closures) -> Result<Verdict> {
    let clock = Instant::now();
    let mut plan = ExperimentPlan::new("two-cell", 0.5, &[1e-2, 1e-3, 1e-4], Grid::new(1024, 724)?)?;
    plan.boundary = constant_boundary(0.5);
    let r = two_cell_dissipation_sweep(&plan)?;
    for row in &r.rows {
        closures.add(format!("two-cell kappa {:e}", row.kappa), row.closure);
    }
    let e = r.errors();
    let last = *e.last().unwrap_or(&f64::NAN);
    let bound = TWO_CELL_FRACTION * r.initial_error;
    verdict(
        r.monotone && last <= bound,
        format!(
            "e = {} for kappa = 1e-2, 1e-3, 1e-4 ({}); e(1e-4) = {last:.4} vs {TWO_CELL_FRACTION} |Theta0 - 1/2| = {bound:.4}; {:.0} s",
            e.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", "),
            if r.monotone { "nonincreasing" } else { "not monotone" },
            clock.elapsed().as_secs_f64()
        ),
    )
}

fn uniformity(closures: &mut Closures) -> Result<Verdict> {
    let plan = ExperimentPlan::new("universal", 0.5, &[1e-2, 1e-3], Grid::new(512, 362)?)?;
    let r = universal_dissipation_sweep(&plan, &data_library(4, 1))?;
    for row in &r.rows {
        closures.add(format!("universal {} kappa {:e}", row.datum, row.kappa), row.closure);
    }
    let factor = r.uniformity.iter().find(|u| u.kappa == 1e-3).map_or(f64::INFINITY, |u| u.factor);
    let falling: Vec<&str> = r.trends.iter().filter(|t| !t.1).map(|t| t.0.as_str()).collect();
    let detail: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("{}@{:e}={:.4}", row.datum, row.kappa, row.error))
        .collect();
    verdict(
        factor <= UNIFORMITY && falling.is_empty(),
        format!(
            "spread factor {factor:.2} at kappa 1e-3 (max {UNIFORMITY}); not decreasing: [{}]; {}",
            falling.join(", "),
            detail.join(" ")
        ),
    )
}

fn duality() -> Result<Verdict> {
    let mut plan = ExperimentPlan::new("corollary", 0.5, &[1e-3], Grid::new(512, 362)?)?;
    plan.data = InitialData::TwoCellMeanZero;
    let r = corollary_checks(&plan)?;
    let d = &r.duality[0];
    verdict(
        d.relative_gap <= DUALITY_GAP && r.linf_excess <= LINF_SLACK,
        format!(
            "L1 ratio {:.4} vs reversed dual {:.4}, gap {:.2}% (tol {}%); Linf excess {:.1e} (tol {LINF_SLACK:e})",
            d.l1_ratio,
            d.dual_ratio,
            100.0 * d.relative_gap,
            100.0 * DUALITY_GAP,
            r.linf_excess
        ),
    )
}

fn atoms(closures: &mut Closures) -> Result<Verdict> {
    let g = Grid::new(512, 362)?;
    let theta0 = InitialData::TwoCellMeanZero.build(g, Domain::Torus)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for kappa in [1e-3, 1e-4] {
        let a = dissipation_atoms(&theta0, 0.5, kappa)?;
        closures.add(format!("atoms kappa {kappa:e}"), a.closure);
        let sum_err = (a.predicted_total - SQRT_2 / 4.0).abs();
        pass &= sum_err <= ATOM_SUM_TOL && a.concentration >= CONCENTRATION;
        parts.push(format!("kappa {kappa:e}: atom sum error {sum_err:.1e}, concentration {:.3}", a.concentration));
    }
    verdict(pass, format!("{} (tol {ATOM_SUM_TOL:e}, min {CONCENTRATION})", parts.join("; ")))
}

fn lemma_fits() -> Result<Verdict> {
    let g = Grid::new(512, 362)?;
    let mean = mean_preservation_fit(&FIT_KAPPAS, &[0.0, 0.05, 0.2], g)?;
    let heat = heat_box_vs_torus_check(&FIT_KAPPAS, g, &InitialData::TwoCell)?;
    let exp = heat.exponent.as_ref().map_or(f64::NAN, |e| e.exponent);
    let (m, h) = (&mean.constant, &heat.constant);
    verdict(
        m.stable && h.stable && (BOX_TORUS_EXPONENT.0..=BOX_TORUS_EXPONENT.1).contains(&exp),
        format!(
            "mean preservation C = {:.3} CI ({:.3}, {:.3}) width {:.0}%; box/torus C = {:.3} CI ({:.3}, {:.3}) width {:.0}% (max {:.0}%); exponent {exp:.3} (range {:?})",
            m.estimate,
            m.ci.0,
            m.ci.1,
            100.0 * m.relative_width(),
            h.estimate,
            h.ci.0,
            h.ci.1,
            100.0 * h.relative_width(),
            100.0 * CI_WIDTH,
            BOX_TORUS_EXPONENT
        ),
    )
}

fn spreading() -> Result<Verdict> {
    let kappas = [1e-5, 1e-6];
    let depth = universal_depths(0.5, 1e-6).n;
    let r = spreading_experiment(Point::new(0.37, 0.41), &kappas, 0.5, SPREAD_PATHS, 3, &Truncation::stages(depth), SPREAD_BINS)?;
    let mut rows: Vec<_> = r.rows.iter().filter(|row| row.kappa == 1e-6).collect();
    rows.sort_by(|a, b| a.time.total_cmp(&b.time));
    let grows = rows.windows(2).all(|w| w[1].spread >= w[0].spread);
    let (tv_hi, floor) = (r.tv[0].1, r.tv[0].2);
    let tv_lo = r.tv[1].1;
    let uniform = tv_lo <= tv_hi || tv_lo <= TV_FLOOR_FACTOR * floor;
    verdict(
        grows && uniform,
        format!(
            "spread at kappa 1e-6 {} over {} stages ({:.1e} -> {:.3}); TV to uniform {tv_hi:.4} at 1e-5, {tv_lo:.4} at 1e-6 (sampling floor {floor:.4})",
            if grows { "grows" } else { "does not grow" },
            r.depth,
            rows.first().map_or(f64::NAN, |r| r.spread),
            rows.last().map_or(f64::NAN, |r| r.spread)
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut closures = Closures::default();
    let mut results: Vec<(usize, &str, Result<Verdict>)> = vec![
        (1, "mode decay", mode_decay()),
        (2, "translation", translation()),
    ];
    results.push((4, "feynman-kac", feynman_kac_check()));
    results.push((5, "mixer oracle", oracle()));
    results.push((6, "two-cell trend", two_cell(&mut closures)));
    results.push((7, "universal uniformity", uniformity(&mut closures)));
    results.push((8, "duality", duality()));
    results.push((9, "dissipation atoms", atoms(&mut closures)));
    results.push((3, "conservation", conservation(&closures)));
    results.push((10, "lemma constants", lemma_fits()));
    results.push((11, "spreading", spreading()));
    results.sort_by_key(|r| r.0);

    let mut failures = 0;
    for (n, name, r) in &results {
        let (tag, detail) = match r {
            Ok(v) if v.pass => ("PASS", v.detail.clone()),
            Ok(v) => ("FAIL", v.detail.clone()),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("criterion {n:>2} {tag} {name}: {detail}");
    }
    println!(
        "acceptance: {}/{} passed in {:.0} s",
        results.len() - failures,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
