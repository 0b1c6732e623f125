//! Experiment plans and the depth choices `n(kappa)`, `m(kappa)`.

use super::data::InitialData;
use crate::error::{arg, Result};
use crate::flow_fields::{FlowParams, Truncation};
use crate::grid::Grid;
use crate::solver::{Boundary, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Stage counts: `n` for the transport part, `m` for the averaging scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Depths {
    pub n: usize,
    pub m: usize,
}

fn ceil_depth(coef: f64, log: f64) -> usize {
    (coef * log - 1e-12).ceil().max(0.0) as usize
}

fn coefficients(alpha: f64) -> (f64, f64) {
    (3.0 / (2.0 * (alpha + 2.0)), (alpha + 5.0) / (4.0 * (alpha + 2.0)))
}

/// `n = ceil(3/(2(a+2)) log_5(1/k))`, `m = ceil((a+5)/(4(a+2)) log_5(1/k))`.
pub fn two_cell_depths(alpha: f64, kappa: f64) -> Depths {
    let l = (1.0 / kappa).ln() / 5f64.ln();
    let (cn, cm) = coefficients(alpha);
    Depths { n: ceil_depth(cn, l), m: ceil_depth(cm, l) }
}

/// The same formulas with `log_sqrt2` for the dyadic tilings of the torus.
pub fn universal_depths(alpha: f64, kappa: f64) -> Depths {
    let l = 2.0 * (1.0 / kappa).log2();
    let (cn, cm) = coefficients(alpha);
    Depths { n: ceil_depth(cn, l), m: ceil_depth(cm, l) }
}

/// Largest `kappa` on a fine logarithmic scan such that `m <= n` holds for
/// both depth pairs at every smaller scanned `kappa`.
pub fn depth_crossover(alpha: f64) -> f64 {
    let mut last = 0.0;
    for k in 0..=2400 {
        let kappa = 10f64.powf(-12.0 + k as f64 * 0.005);
        let (a, b) = (two_cell_depths(alpha, kappa), universal_depths(alpha, kappa));
        if a.m > a.n || b.m > b.n {
            break;
        }
        last = kappa;
    }
    last
}

/// Dirichlet data choices for the box experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    Zero,
    Constant { value: f64 },
    /// Edge traces of the torus solution with the same flow and data.
    OuterTrace,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Constant { value: 0.5 }
    }
}

impl BoundarySpec {
    pub fn sup(&self) -> f64 {
        match self {
            BoundarySpec::Zero | BoundarySpec::OuterTrace => 0.0,
            BoundarySpec::Constant { value } => value.abs(),
        }
    }

    pub fn fixed(&self) -> Option<Boundary> {
        match self {
            BoundarySpec::Zero => Some(Boundary::constant(0.0)),
            BoundarySpec::Constant { value } => Some(Boundary::constant(*value)),
            BoundarySpec::OuterTrace => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub id: String,
    pub params: FlowParams,
    /// Strictly positive, sorted descending.
    pub kappas: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub data: InitialData,
    pub boundary: BoundarySpec,
    pub snapshot_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Cap on the number of stages of the flow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub steps_per_pulse: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            id: "two-cell".into(),
            params: FlowParams { alpha: 0.5, base: 5, block: Default::default() },
            kappas: vec![1e-2, 1e-3, 1e-4],
            nx: 1024,
            ny: 724,
            data: InitialData::TwoCell,
            boundary: BoundarySpec::default(),
            snapshot_times: Vec::new(),
            out_dir: None,
            seed: 0,
            depth: None,
            steps_per_pulse: 4,
        }
    }
}

impl ExperimentPlan {
    pub fn new(id: &str, alpha: f64, kappas: &[f64], grid: Grid) -> Result<Self> {
        let mut kappas = kappas.to_vec();
        kappas.sort_by(|a, b| b.total_cmp(a));
        let plan = ExperimentPlan {
            id: id.into(),
            params: FlowParams::new(alpha)?,
            kappas,
            nx: grid.nx,
            ny: grid.ny,
            ..Default::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid()?;
        if self.kappas.is_empty() {
            return arg("the kappa list is empty");
        }
        if self.kappas.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return arg("kappa values must be positive and finite");
        }
        if self.kappas.windows(2).any(|w| w[1] >= w[0]) {
            return arg("kappa values must be strictly decreasing");
        }
        if self.steps_per_pulse == 0 {
            return arg("steps_per_pulse must be positive");
        }
        if self.snapshot_times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return arg("snapshot times must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny)
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn truncation(&self) -> Result<Truncation> {
        let mut t = Truncation::for_grid(&self.grid()?);
        if let Some(d) = self.depth {
            t.max_stages = d;
        }
        Ok(t)
    }

    pub fn solver_config(&self, kappa: f64) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(kappa, self.grid()?);
        c.steps_per_pulse = self.steps_per_pulse;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_examples() {
        assert_eq!(two_cell_depths(0.5, 1e-4).n, 4);
        assert_eq!(two_cell_depths(0.5, 1e-6), Depths { n: 6, m: 5 });
    }

    #[test]
    fn plan_rejects_bad_kappas() {
        let g = Grid::new(64, 45).unwrap();
        assert!(ExperimentPlan::new("x", 0.5, &[1e-3, 1e-2], g).is_ok());
        assert!(ExperimentPlan::new("x", 0.5, &[1e-3, 0.0], g).is_err());
        assert!(ExperimentPlan::new("x", 0.5, &[1e-3, 1e-3], g).is_err());
        assert!(ExperimentPlan::new("x", 1.5, &[1e-3], g).is_err());
    }
}
