//! Job descriptions, as read from config files and written to manifests, and
//! their execution.

use dissipator::characteristics::{feynman_kac, simulate_backward, SdeOptions};
use dissipator::experiments::atoms::dissipation_atoms;
use dissipator::experiments::checks::{
    box_average_drift_check, constants_lemma_fit, heat_box_vs_torus_check, local_bound_check,
    mean_preservation_fit, piecewise_constant_persistence_check, transport_proximity_check, ConstantFit,
    LemmaSample,
};
use dissipator::experiments::data::{data_library, interior_points, InitialData};
use dissipator::experiments::fit::fit_rate;
use dissipator::experiments::plan::{depth_crossover, two_cell_depths, universal_depths, BoundarySpec, ExperimentPlan};
use dissipator::experiments::sweeps::{
    corollary_checks, two_cell_dissipation_sweep, universal_dissipation_sweep, SweepRow,
};
use dissipator::flow_fields::{sup_speed, FieldKind, FlowParams, Truncation};
use dissipator::io::{read_csv, save_ensemble, write_csv, Snapshot};
use dissipator::solver::{Boundary, BoundaryData, NormSummary, RunOptions, Solver, SolverConfig};
use dissipator::{Domain, Error, Grid, Point, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_alpha() -> f64 {
    0.5
}
fn default_nx() -> usize {
    1024
}
fn default_ny() -> usize {
    724
}
fn default_kappa() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    Field(FieldJob),
    Solve(SolveJob),
    Sde(SdeJob),
    Sweep(SweepJob),
    Check(CheckJob),
    Report(ReportJob),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJob {
    pub which: FieldKind,
    pub time: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Snapshot path, relative to the run directory unless absolute.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub which: FieldKind,
    #[serde(default)]
    pub data: InitialData,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub domain: Domain,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeJob {
    pub which: FieldKind,
    #[serde(default)]
    pub data: InitialData,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Grid on which the initial data are sampled.
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub domain: Domain,
    /// Constant Dirichlet value in the box.
    #[serde(default = "half")]
    pub boundary: f64,
    #[serde(default)]
    pub start: f64,
    pub end: f64,
    pub points: Vec<[f64; 2]>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Also solve the PDE and report its value at the points.
    #[serde(default)]
    pub compare: bool,
    /// Write the endpoints of the first point's ensemble.
    #[serde(default)]
    pub dump: bool,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    TwoCell,
    Universal,
    Corollary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepJob {
    pub kind: SweepKind,
    /// Dyadic level of the piecewise data in the universal library.
    #[serde(default = "default_library_level")]
    pub library_level: u32,
    pub plan: ExperimentPlan,
}

fn default_library_level() -> u32 {
    4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Stability lemmas: mean preservation, constants, box/torus heat, local bounds.
    AppendixA,
    /// Transport proximity, box-average drift and persistence per `kappa`.
    Propositions,
    Atoms,
    Depths,
    /// Every suite above, each in its own subdirectory.
    All,
}

impl Suite {
    pub const EACH: [Suite; 4] = [Suite::AppendixA, Suite::Propositions, Suite::Atoms, Suite::Depths];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckJob {
    pub suite: Suite,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub kappas: Vec<f64>,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default)]
    pub seed: u64,
    /// Monte Carlo paths for the local-bound cross-check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJob {
    pub dir: PathBuf,
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Field(_) => "field",
            Job::Solve(_) => "solve",
            Job::Sde(_) => "sde",
            Job::Sweep(_) => "sweep",
            Job::Check(_) => "check",
            Job::Report(_) => "report",
        }
    }

    /// Directory name of the run under the output root.
    pub fn run_name(&self) -> String {
        match self {
            Job::Field(j) => format!("field-{}-t{}", j.which.label(), j.time),
            Job::Solve(j) => format!("solve-{}-{}", j.which.label(), j.data.label()),
            Job::Sde(j) => format!("sde-{}", j.which.label()),
            Job::Sweep(j) => format!("sweep-{}", j.plan.id),
            Job::Check(j) => format!("check-{}", serde_label(&j.suite)),
            Job::Report(_) => "report".into(),
        }
    }

    /// Explicit output directory requested by the job itself.
    pub fn out_dir(&self) -> Option<PathBuf> {
        match self {
            Job::Sweep(j) => j.plan.out_dir.clone(),
            Job::Report(j) => Some(j.dir.clone()),
            _ => None,
        }
    }

    /// Replaces every seed of the job.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Job::Sde(j) => j.seed = seed,
            Job::Sweep(j) => j.plan.seed = seed,
            Job::Check(j) => j.seed = seed,
            Job::Field(_) | Job::Solve(_) | Job::Report(_) => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{what} must be positive, got {v}")))
            }
        };
        let interval = |s: f64, t: f64| {
            if (0.0..t).contains(&s) && t <= 1.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("need 0 <= start < end <= 1, got [{s}, {t}]")))
            }
        };
        match self {
            Job::Field(j) => {
                FlowParams::new(j.alpha)?;
                grid(j.nx, j.ny)?;
                if !j.time.is_finite() {
                    return Err(Error::Argument("time must be finite".into()));
                }
            }
            Job::Solve(j) => {
                FlowParams::new(j.alpha)?;
                grid(j.nx, j.ny)?;
                positive("kappa", j.kappa)?;
                interval(j.start, j.end)?;
            }
            Job::Sde(j) => {
                FlowParams::new(j.alpha)?;
                grid(j.nx, j.ny)?;
                positive("kappa", j.kappa)?;
                interval(j.start, j.end)?;
                if j.samples == 0 || j.points.is_empty() {
                    return Err(Error::Argument("need at least one point and one sample".into()));
                }
            }
            Job::Sweep(j) => j.plan.validate()?,
            Job::Check(j) => {
                FlowParams::new(j.alpha)?;
                grid(j.nx, j.ny)?;
                let needed = if matches!(j.suite, Suite::AppendixA | Suite::All) { 2 } else { 1 };
                if j.kappas.len() < needed {
                    return Err(Error::Argument(format!("this suite needs at least {needed} kappa values")));
                }
                for &k in &j.kappas {
                    positive("kappa", k)?;
                }
            }
            Job::Report(j) => {
                if !j.dir.is_dir() {
                    return Err(Error::Argument(format!("{} is not a directory", j.dir.display())));
                }
            }
        }
        Ok(())
    }

    pub fn run(&self, dir: &Path) -> Result<Record> {
        std::fs::create_dir_all(dir)?;
        match self {
            Job::Field(j) => run_field(j, dir),
            Job::Solve(j) => run_solve(j, dir),
            Job::Sde(j) => run_sde(j, dir),
            Job::Sweep(j) => run_sweep(j, dir),
            Job::Check(j) => run_check(j, dir),
            Job::Report(j) => run_report(j),
        }
    }
}

fn serde_label<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// What a run produced; stored in the manifest and ignored when the manifest is read back as a config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Record {
    fn file(&mut self, name: &str) {
        self.files.push(name.into());
    }

    fn value(&mut self, key: &str, v: f64) {
        self.summary.insert(key.into(), v);
    }
}

fn grid(nx: usize, ny: usize) -> Result<Grid> {
    Grid::new(nx, ny)
}

fn truncation(g: &Grid, depth: Option<usize>) -> Truncation {
    let mut t = Truncation::for_grid(g);
    if let Some(d) = depth {
        t.max_stages = d;
    }
    t
}

fn run_field(j: &FieldJob, dir: &Path) -> Result<Record> {
    let g = grid(j.nx, j.ny)?;
    let params = FlowParams::new(j.alpha)?;
    let field = j.which.build(&params, &truncation(&g, j.depth));
    let snap = Snapshot::velocity(field.as_ref(), j.time, &g, j.alpha);
    let mut rec = Record::default();
    rec.value("sup_speed", sup_speed(field.as_ref(), j.time, &g));
    let (a, b) = field.support();
    rec.value("support_start", a);
    rec.value("support_end", b);
    let name = j.export.clone().unwrap_or_else(|| PathBuf::from("velocity.bin"));
    snap.save(&dir.join(&name))?;
    rec.file(&name.display().to_string());
    Ok(rec)
}

fn run_solve(j: &SolveJob, dir: &Path) -> Result<Record> {
    let g = grid(j.nx, j.ny)?;
    let params = FlowParams::new(j.alpha)?;
    let field = j.which.build(&params, &truncation(&g, j.depth));
    let theta0 = j.data.build(g, j.domain)?;
    let boundary = match j.domain {
        Domain::Torus => Boundary::Torus,
        Domain::Box => match &j.boundary {
            BoundarySpec::Zero => Boundary::constant(0.0),
            BoundarySpec::Constant { value } => Boundary::constant(*value),
            BoundarySpec::OuterTrace => {
                let mut outer = Solver::new(SolverConfig::new(j.kappa, g), Domain::Torus)?;
                let opts = RunOptions { record_traces: true, ..Default::default() };
                let data = j.data.build(g, Domain::Torus)?;
                let (_, r) = outer.run(&data, field.as_ref(), j.start, j.end, &Boundary::Torus, &opts)?;
                let traces = r.traces.ok_or_else(|| Error::Argument("no traces recorded".into()))?;
                Boundary::Dirichlet(BoundaryData::Traces(std::sync::Arc::new(traces)))
            }
        },
    };
    let opts = RunOptions {
        snapshot_times: j.snapshot_times.clone(),
        keep_fields: true,
        ..if j.domain == Domain::Torus || j.boundary.fixed().is_some() { RunOptions::energy() } else { RunOptions::default() }
    };
    let mut solver = Solver::new(SolverConfig::new(j.kappa, g), j.domain)?;
    let (theta, run) = solver.run(&theta0, field.as_ref(), j.start, j.end, &boundary, &opts)?;
    let mut rec = Record::default();
    let n = NormSummary::of(&theta);
    for (k, v) in [("mean", n.mean), ("l1", n.l1), ("l2", n.l2), ("linf", n.linf), ("min", n.min), ("max", n.max)] {
        rec.value(k, v);
    }
    if opts.record_energy {
        rec.value("energy_closure", run.energy_closure());
        rec.value("integrated_dissipation", run.integrated_dissipation());
    }
    rec.value("steps", run.steps as f64);
    for (k, s) in run.snapshots.iter().enumerate() {
        if let Some(f) = &s.field {
            let name = format!("theta-{k:03}.bin");
            Snapshot::scalar(f, s.time, j.alpha).save(&dir.join(&name))?;
            rec.file(&name);
        }
    }
    #[derive(Serialize)]
    struct Row {
        time: f64,
        mean: f64,
        l1: f64,
        l2: f64,
        linf: f64,
    }
    let rows: Vec<Row> = run
        .snapshots
        .iter()
        .map(|s| Row { time: s.time, mean: s.norms.mean, l1: s.norms.l1, l2: s.norms.l2, linf: s.norms.linf })
        .collect();
    write_csv(&dir.join("norms.csv"), &rows)?;
    rec.file("norms.csv");
    if opts.record_energy {
        #[derive(Serialize)]
        struct E {
            time: f64,
            dissipation: f64,
        }
        let series: Vec<E> = run.series.iter().map(|&(time, dissipation)| E { time, dissipation }).collect();
        write_csv(&dir.join("dissipation.csv"), &series)?;
        rec.file("dissipation.csv");
    }
    Ok(rec)
}

fn run_sde(j: &SdeJob, dir: &Path) -> Result<Record> {
    let g = grid(j.nx, j.ny)?;
    let params = FlowParams::new(j.alpha)?;
    let field = j.which.build(&params, &truncation(&g, j.depth));
    let theta0 = j.data.build(g, j.domain)?;
    let opts = SdeOptions { domain: j.domain, ..Default::default() };
    let f = BoundaryData::Constant(j.boundary);
    let pde = if j.compare {
        let mut s = Solver::new(SolverConfig::new(j.kappa, g), j.domain)?;
        let b = if j.domain == Domain::Torus { Boundary::Torus } else { Boundary::constant(j.boundary) };
        Some(s.run(&theta0, field.as_ref(), j.start, j.end, &b, &RunOptions::default())?.0)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Row {
        x: f64,
        y: f64,
        mc: f64,
        se: f64,
        pde: f64,
    }
    let mut rows = Vec::new();
    for (k, &[x, y]) in j.points.iter().enumerate() {
        let p = Point::new(x, y);
        let seed = j.seed.wrapping_add(k as u64);
        let bd = (j.domain == Domain::Box).then_some(&f);
        let (mc, se) = feynman_kac(p, &theta0, bd, field.as_ref(), j.kappa, (j.start, j.end), j.samples, seed, &opts)?;
        rows.push(Row { x, y, mc, se, pde: pde.as_ref().map_or(f64::NAN, |t| t.sample(p)) });
    }
    let mut rec = Record::default();
    write_csv(&dir.join("sde.csv"), &rows)?;
    rec.file("sde.csv");
    if j.dump {
        if let Some(&[x, y]) = j.points.first() {
            let ens = simulate_backward(Point::new(x, y), field.as_ref(), j.kappa, (j.start, j.end), j.samples, j.seed, &opts)?;
            save_ensemble(&ens, &dir.join("paths.bin"))?;
            rec.file("paths.bin");
            rec.value("exit_fraction", ens.exit_fraction());
        }
    }
    if let Some(worst) = rows.iter().map(|r| (r.mc - r.pde).abs() / r.se.max(1e-300)).reduce(f64::max).filter(|_| pde.is_some()) {
        rec.value("max_standard_errors", worst);
    }
    Ok(rec)
}

fn run_sweep(j: &SweepJob, dir: &Path) -> Result<Record> {
    let mut rec = Record::default();
    let rows: Vec<SweepRow> = match j.kind {
        SweepKind::TwoCell => {
            let r = two_cell_dissipation_sweep(&j.plan)?;
            rec.value("monotone", r.monotone as u8 as f64);
            rec.value("initial_error", r.initial_error);
            rec.value("reference_exponent", r.reference_exponent);
            rec.value("stages", r.stages as f64);
            if let Some(f) = &r.fit {
                rec.value("exponent", f.exponent);
            }
            rec.warnings = r.warnings.clone();
            r.rows
        }
        SweepKind::Universal => {
            let r = universal_dissipation_sweep(&j.plan, &data_library(j.library_level, j.plan.seed))?;
            for u in &r.uniformity {
                rec.value(&format!("factor_{:e}", u.kappa), u.factor);
            }
            rec.value("reference_exponent", r.reference_exponent);
            rec.value("depth", r.depth as f64);
            r.rows
        }
        SweepKind::Corollary => {
            let r = corollary_checks(&j.plan)?;
            rec.value("sigma", r.sigma);
            rec.value("linf_excess", r.linf_excess);
            for d in &r.duality {
                rec.value(&format!("duality_gap_{:e}", d.kappa), d.relative_gap);
            }
            write_csv(&dir.join("duality.csv"), &r.duality)?;
            rec.file("duality.csv");
            r.rows
        }
    };
    write_csv(&dir.join("sweep.csv"), &rows)?;
    rec.file("sweep.csv");
    Ok(rec)
}

#[derive(Serialize)]
struct ConstantRow<'a> {
    lemma: &'a str,
    estimate: f64,
    sup: f64,
    ci_low: f64,
    ci_high: f64,
    stable: bool,
}

fn constant_row<'a>(lemma: &'a str, c: &ConstantFit) -> ConstantRow<'a> {
    ConstantRow { lemma, estimate: c.estimate, sup: c.sup, ci_low: c.ci.0, ci_high: c.ci.1, stable: c.stable }
}

fn run_check(j: &CheckJob, dir: &Path) -> Result<Record> {
    if j.suite != Suite::All {
        return run_suite(j, j.suite, dir);
    }
    let mut rec = Record::default();
    for suite in Suite::EACH {
        let name = serde_label(&suite);
        let sub = dir.join(&name);
        std::fs::create_dir_all(&sub)?;
        let r = run_suite(j, suite, &sub)?;
        rec.files.extend(r.files.iter().map(|f| format!("{name}/{f}")));
        rec.summary.extend(r.summary.into_iter().map(|(k, v)| (format!("{name}.{k}"), v)));
        rec.warnings.extend(r.warnings);
    }
    Ok(rec)
}

fn run_suite(j: &CheckJob, suite: Suite, dir: &Path) -> Result<Record> {
    let g = grid(j.nx, j.ny)?;
    let mut rec = Record::default();
    let mut kappas = j.kappas.clone();
    kappas.sort_by(|a, b| b.total_cmp(a));
    match suite {
        Suite::All => unreachable!("expanded by run_check"),
        Suite::AppendixA => {
            let mean = mean_preservation_fit(&kappas, &[0.0, 0.05, 0.2], g)?;
            let consts = constants_lemma_fit(&kappas, &[0.1], g)?;
            let heat = heat_box_vs_torus_check(&kappas, g, &InitialData::TwoCell)?;
            let mut samples: Vec<(&str, LemmaSample)> = mean.samples.iter().map(|s| ("mean-preservation", s.clone())).collect();
            samples.extend(consts.samples.iter().map(|s| ("constants", s.clone())));
            #[derive(Serialize)]
            struct S<'a> {
                lemma: &'a str,
                kappa: f64,
                amplitude: f64,
                measured: f64,
                model: f64,
            }
            let rows: Vec<S> = samples
                .iter()
                .map(|(l, s)| S { lemma: l, kappa: s.kappa, amplitude: s.amplitude, measured: s.measured, model: s.model })
                .collect();
            write_csv(&dir.join("lemma_samples.csv"), &rows)?;
            write_csv(&dir.join("heat.csv"), &heat.rows)?;
            let constants = [
                constant_row("mean-preservation", &mean.constant),
                constant_row("constants", &consts.constant),
                constant_row("box-torus", &heat.constant),
            ];
            write_csv(&dir.join("constants.csv"), &constants)?;
            if let Some(e) = &heat.exponent {
                rec.value("box_torus_exponent", e.exponent);
            }
            let local: Vec<_> = kappas
                .iter()
                .filter(|&&k| k >= 1e-3)
                .map(|&k| local_bound_check(k, 0.1, 0.3, g, j.samples, j.seed))
                .collect::<Result<_>>()?;
            write_csv(&dir.join("local.csv"), &local)?;
            for f in ["lemma_samples.csv", "heat.csv", "constants.csv", "local.csv"] {
                rec.file(f);
            }
        }
        Suite::Propositions => {
            #[derive(Serialize)]
            struct P {
                kappa: f64,
                check: &'static str,
                n: usize,
                m: usize,
                value: f64,
                reference: f64,
                status: String,
            }
            let mut rows = Vec::new();
            let status = |e: &Error| match e {
                Error::Resolution(_) => "unresolved".to_string(),
                other => format!("error: {other}"),
            };
            for &k in &kappas {
                match transport_proximity_check(k, j.alpha, g, 0.5) {
                    Ok(r) => rows.push(P { kappa: k, check: "transport", n: r.n, m: 0, value: r.oracle_distance, reference: r.scheme_error, status: "ok".into() }),
                    Err(e) => rows.push(P { kappa: k, check: "transport", n: 0, m: 0, value: f64::NAN, reference: f64::NAN, status: status(&e) }),
                }
                match box_average_drift_check(k, j.alpha, g, 0.5) {
                    Ok(r) => rows.push(P { kappa: k, check: "box-average", n: r.n, m: r.m, value: r.max_deviation, reference: r.inviscid_deviation, status: "ok".into() }),
                    Err(e) => rows.push(P { kappa: k, check: "box-average", n: 0, m: 0, value: f64::NAN, reference: f64::NAN, status: status(&e) }),
                }
                match piecewise_constant_persistence_check(k, j.alpha, g, j.seed) {
                    Ok(r) => rows.push(P { kappa: k, check: "persistence", n: r.n, m: r.m, value: r.relative_change, reference: r.end, status: "ok".into() }),
                    Err(e) => rows.push(P { kappa: k, check: "persistence", n: 0, m: 0, value: f64::NAN, reference: f64::NAN, status: status(&e) }),
                }
            }
            write_csv(&dir.join("propositions.csv"), &rows)?;
            rec.file("propositions.csv");
        }
        Suite::Atoms => {
            let theta0 = InitialData::TwoCellMeanZero.build(g, Domain::Torus)?;
            #[derive(Serialize)]
            struct A {
                kappa: f64,
                level: usize,
                time: f64,
                window_start: f64,
                window_end: f64,
                predicted: f64,
                predicted_dissipation: f64,
                measured: f64,
            }
            let mut rows = Vec::new();
            for &k in &kappas {
                let a = dissipation_atoms(&theta0, j.alpha, k)?;
                rec.value(&format!("concentration_{k:e}"), a.concentration);
                rec.value("predicted_total", a.predicted_total);
                rows.extend(a.rows.iter().map(|r| A {
                    kappa: k,
                    level: r.level,
                    time: r.time,
                    window_start: r.window.0,
                    window_end: r.window.1,
                    predicted: r.predicted,
                    predicted_dissipation: r.predicted_dissipation,
                    measured: r.measured,
                }));
            }
            write_csv(&dir.join("atoms.csv"), &rows)?;
            rec.file("atoms.csv");
        }
        Suite::Depths => {
            #[derive(Serialize)]
            struct D {
                kappa: f64,
                two_cell_n: usize,
                two_cell_m: usize,
                universal_n: usize,
                universal_m: usize,
            }
            let rows: Vec<D> = kappas
                .iter()
                .map(|&k| {
                    let (a, b) = (two_cell_depths(j.alpha, k), universal_depths(j.alpha, k));
                    D { kappa: k, two_cell_n: a.n, two_cell_m: a.m, universal_n: b.n, universal_m: b.m }
                })
                .collect();
            write_csv(&dir.join("depths.csv"), &rows)?;
            rec.file("depths.csv");
            rec.value("crossover", depth_crossover(j.alpha));
        }
    }
    Ok(rec)
}

#[derive(Serialize)]
struct RateRow {
    experiment: String,
    datum: String,
    norm: String,
    points: usize,
    exponent: f64,
    ci_low: f64,
    ci_high: f64,
    kappa_min: f64,
    kappa_max: f64,
}

fn sweep_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            sweep_files(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "sweep.csv") {
            out.push(p);
        }
    }
    Ok(())
}

fn run_report(j: &ReportJob) -> Result<Record> {
    let mut files = Vec::new();
    sweep_files(&j.dir, &mut files)?;
    if files.is_empty() {
        return Err(Error::Argument(format!("no sweep.csv below {}", j.dir.display())));
    }
    let mut groups: BTreeMap<(String, String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for f in &files {
        for r in read_csv::<SweepRow>(f)? {
            groups.entry((r.experiment, r.datum, r.norm)).or_default().push((r.kappa, r.error));
        }
    }
    let mut rows = Vec::new();
    for ((experiment, datum, norm), pts) in groups {
        let (k, e): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok(fit) = fit_rate(&k, &e) {
            rows.push(RateRow {
                experiment,
                datum,
                norm,
                points: k.len(),
                exponent: fit.exponent,
                ci_low: fit.ci.0,
                ci_high: fit.ci.1,
                kappa_min: fit.kappa_range.0,
                kappa_max: fit.kappa_range.1,
            });
        }
    }
    write_csv(&j.dir.join("rates.csv"), &rows)?;
    let mut rec = Record::default();
    rec.file("rates.csv");
    rec.value("sweeps", files.len() as f64);
    rec.value("fits", rows.len() as f64);
    Ok(rec)
}

/// Interior points for Feynman-Kac comparisons.
pub fn default_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
    interior_points(n, 0.1, seed).into_iter().map(|p| [p.x, p.y]).collect()
}
