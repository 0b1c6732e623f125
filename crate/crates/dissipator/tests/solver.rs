use dissipator::flow_fields::*;
use dissipator::geometry::two_cell_data;
use dissipator::solver::*;
use dissipator::{Domain, Grid, Point, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

fn sin_mode(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, Domain::Torus, |p| (2.0 * PI * p.y).sin())
}

fn amplitude(f: &ScalarField) -> f64 {
    let m = sin_mode(f.grid);
    f.inner(&m).unwrap() / m.inner(&m).unwrap()
}

#[test]
fn constant_stays_constant() {
    let g = Grid::new(64, 45).unwrap();
    let theta = ScalarField::constant(g, Domain::Torus, 0.7);
    let u = UniversalField::truncated(&FlowParams::new(0.5).unwrap(), &Truncation::for_grid(&g));
    let out = advance(&theta, &u, &SolverConfig::new(0.01, g), 0.0, 1.0, &Boundary::Torus).unwrap();
    assert!(out.data.iter().all(|v| (v - 0.7).abs() < 1e-12));
}

#[test]
fn fourier_mode_decays_exactly() {
    let g = Grid::new(256, 181).unwrap();
    let out = advance(&sin_mode(g), &ZeroField, &SolverConfig::new(0.01, g), 0.0, 1.0, &Boundary::Torus).unwrap();
    let expect = (-4.0 * PI * PI * 0.01f64).exp();
    assert!((expect - 0.67384).abs() < 2e-5);
    assert!((amplitude(&out) / expect - 1.0).abs() < 1e-3);
}

fn translation_error(nx: usize) -> f64 {
    let g = Grid::with_width(nx).unwrap();
    let f = |p: Point| (2.0 * PI * p.x / SQRT_2).sin() * (2.0 * PI * p.y).cos() + 0.5 * (4.0 * PI * p.y).sin();
    let theta = ScalarField::from_fn(g, Domain::Torus, f);
    let u = UniformField(Point::new(1.0, 0.0));
    let out = advance(&theta, &u, &SolverConfig::new(0.0, g), 0.0, 1.0, &Boundary::Torus).unwrap();
    let exact = ScalarField::from_fn(g, Domain::Torus, |p| f(Point::new(p.x - 1.0, p.y)));
    out.l1_distance(&exact).unwrap()
}

#[test]
fn uniform_translation_converges() {
    let (coarse, fine) = (translation_error(64), translation_error(128));
    let h = SQRT_2 / 64.0;
    assert!(coarse < h * h, "{coarse}");
    assert!(coarse / fine >= 3.0, "{coarse} / {fine}");
}

#[test]
fn heat_convolution_examples() {
    let g = Grid::new(128, 91).unwrap();
    let m = sin_mode(g);
    assert_eq!(heat_convolve(&m, 0.0).unwrap().data, m.data);
    let out = heat_convolve(&m, 0.02).unwrap();
    assert!((amplitude(&out) / (-4.0 * PI * PI * 0.02f64).exp() - 1.0).abs() < 1e-3);
    let rough = ScalarField::from_fn(g, Domain::Torus, |p| if p.x < 0.3 { 1.0 } else { 0.0 });
    let mean = rough.mean();
    let zero_mean = rough.map(|v| v - mean);
    assert!(l1(&heat_convolve(&zero_mean, 10.0).unwrap()) <= 1e-8);
    let boxed = ScalarField::constant(g, Domain::Box, 1.0);
    assert!(heat_convolve(&boxed, 1.0).is_err());
}

#[test]
fn heat_convolution_commutes_with_zero_field_advance() {
    let g = Grid::new(96, 68).unwrap();
    let theta = ScalarField::from_fn(g, Domain::Torus, |p| if (p.x - 0.6).abs() < 0.2 && p.y < 0.4 { 1.0 } else { 0.0 });
    let kappa = 3e-3;
    let a = advance(&theta, &ZeroField, &SolverConfig::new(kappa, g), 0.0, 2.0, &Boundary::Torus).unwrap();
    let b = heat_convolve(&theta, 2.0 * kappa).unwrap();
    let worst = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn norm_examples() {
    let g = Grid::new(128, 91).unwrap();
    let theta0 = two_cell_data(g, Domain::Torus);
    assert!((norms(&theta0, NormKind::L1).unwrap() - SQRT_2 / 2.0).abs() < 1e-3);
    assert!((norms(&theta0, NormKind::L2).unwrap() - (SQRT_2 / 2.0).sqrt()).abs() < 1e-3);
    assert_eq!(norms(&ScalarField::constant(g, Domain::Box, 1.0), NormKind::Linf).unwrap(), 1.0);
    let m = sin_mode(g);
    let l2 = norms(&m, NormKind::L2).unwrap();
    for s in [0.25, 0.5, 1.0] {
        let ratio = norms(&m, NormKind::Sobolev(s)).unwrap() / l2;
        assert!((ratio / (1.0 + 4.0 * PI * PI).powf(s / 2.0) - 1.0).abs() < 1e-10);
        let neg = norms(&m, NormKind::NegSobolev(s)).unwrap() / l2;
        assert!((neg * ratio - 1.0).abs() < 1e-10);
    }
    assert!(norms(&m, NormKind::Sobolev(1.5)).is_err());
    assert!(norms(&theta0.map(|v| v), NormKind::Sobolev(-0.1)).is_err());
}

#[test]
fn dissipation_series_of_a_decaying_mode() {
    let g = Grid::new(128, 91).unwrap();
    let kappa = 0.01;
    let mut solver = Solver::new(SolverConfig::new(kappa, g), Domain::Torus).unwrap();
    let (_, rec) = solver.run(&sin_mode(g), &ZeroField, 0.0, 1.0, &Boundary::Torus, &RunOptions::energy()).unwrap();
    let series = energy_dissipation_series(&rec).unwrap();
    for &(t, v) in series.iter().step_by(7) {
        let expect = kappa * 4.0 * PI * PI * (SQRT_2 / 2.0) * (-8.0 * PI * PI * kappa * t).exp();
        assert!((v / expect - 1.0).abs() < 2e-3, "t = {t}: {v} vs {expect}");
    }
    assert!(rec.energy_closure() < 0.02);
    let (_, flat) = solver
        .run(&ScalarField::constant(g, Domain::Torus, 2.0), &ZeroField, 0.0, 1.0, &Boundary::Torus, &RunOptions::energy())
        .unwrap();
    assert!(flat.series.iter().all(|&(_, v)| v.abs() < 1e-20));
    let (_, bare) = solver.run(&sin_mode(g), &ZeroField, 0.0, 1.0, &Boundary::Torus, &RunOptions::default()).unwrap();
    assert!(energy_dissipation_series(&bare).is_err());
}

fn random_blocks(g: Grid, domain: Domain, rng: &mut ChaCha8Rng) -> ScalarField {
    let vals: Vec<f64> = (0..25).map(|_| rng.random::<f64>()).collect();
    ScalarField::from_fn(g, domain, |p| {
        let i = ((p.x / SQRT_2 * 5.0) as usize).min(4);
        let j = ((p.y * 5.0) as usize).min(4);
        vals[j * 5 + i]
    })
}

#[test]
fn conservation_contraction_and_max_principle_under_the_mixer() {
    let g = Grid::new(128, 91).unwrap();
    let params = FlowParams::new(0.5).unwrap();
    let u = UniversalField::truncated(&params, &Truncation::for_grid(&g));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut solver = Solver::new(SolverConfig::new(1e-3, g), Domain::Torus).unwrap();
    for _ in 0..3 {
        let a = random_blocks(g, Domain::Torus, &mut rng);
        let b = random_blocks(g, Domain::Torus, &mut rng);
        let ta = solver.advance(&a, &u, 0.0, 1.0, &Boundary::Torus).unwrap();
        let tb = solver.advance(&b, &u, 0.0, 1.0, &Boundary::Torus).unwrap();
        assert!((ta.mean() - a.mean()).abs() <= 1e-12 * a.oscillation().max(1.0), "{}", ta.mean() - a.mean());
        let osc = a.oscillation();
        assert!(ta.min() >= a.min() - 1e-3 * osc && ta.max() <= a.max() + 1e-3 * osc);
        let before = a.l1_distance(&b).unwrap();
        let after = ta.l1_distance(&tb).unwrap();
        assert!(after <= before * (1.0 + 1e-3), "{after} > {before}");
    }
}

#[test]
fn box_constants_are_exact_solutions() {
    let g = Grid::new(128, 91).unwrap();
    let u = TwoCellField::truncated(&FlowParams::new(0.5).unwrap(), &Truncation::for_grid(&g));
    let theta = ScalarField::constant(g, Domain::Box, 0.5);
    let out = advance(&theta, &u, &SolverConfig::new(1e-3, g), 0.0, 1.0, &Boundary::constant(0.5)).unwrap();
    assert!(out.data.iter().all(|v| (v - 0.5).abs() < 1e-10));
}

#[test]
fn box_run_with_traces_matches_torus_for_torus_trace() {
    // The torus solution restricted to B solves the box problem with its own trace.
    let g = Grid::new(96, 68).unwrap();
    let theta = ScalarField::from_fn(g, Domain::Torus, |p| (2.0 * PI * p.x / SQRT_2).cos() * (2.0 * PI * p.y).sin() + 0.3);
    let kappa = 2e-3;
    let mut torus = Solver::new(SolverConfig::new(kappa, g), Domain::Torus).unwrap();
    let opts = RunOptions { record_traces: true, snapshot_times: (1..=64).map(|k| k as f64 / 64.0).collect(), ..Default::default() };
    let (tor, rec) = torus.run(&theta, &ZeroField, 0.0, 1.0, &Boundary::Torus, &opts).unwrap();
    let traces = std::sync::Arc::new(rec.traces.unwrap());
    let boxed = ScalarField { domain: Domain::Box, ..theta.clone() };
    let out = advance(&boxed, &ZeroField, &SolverConfig::new(kappa, g), 0.0, 1.0, &Boundary::Dirichlet(BoundaryData::Traces(traces))).unwrap();
    let diff = out.l1_distance(&ScalarField { domain: Domain::Box, ..tor }).unwrap();
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn errors_are_reported() {
    let g = Grid::new(64, 45).unwrap();
    let theta = ScalarField::constant(g, Domain::Torus, 0.0);
    let cfg = SolverConfig::new(0.01, g);
    assert!(matches!(advance(&theta, &ZeroField, &cfg, 0.0, 1.0, &Boundary::constant(0.0)), Err(dissipator::Error::Argument(_))));
    assert!(advance(&theta, &ZeroField, &cfg, 1.0, 0.0, &Boundary::Torus).is_err());
    let mut bad = theta.clone();
    bad.data[5] = f64::NAN;
    assert!(matches!(advance(&bad, &ZeroField, &cfg, 0.0, 1.0, &Boundary::Torus), Err(dissipator::Error::Blowup { .. })));
    let neg = SolverConfig { kappa: -1.0, ..cfg };
    assert!(advance(&theta, &ZeroField, &neg, 0.0, 1.0, &Boundary::Torus).is_err());
}
