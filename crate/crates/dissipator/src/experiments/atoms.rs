//! Dissipation atoms of the universal field: the energy released when stage
//! `j` averages the data from the dyadic scale `2^{-(j+1)/2}` to `2^{-j/2}`.

use crate::error::Result;
use crate::flow_fields::schedule::{s_start, sigma};
use crate::flow_fields::{FlowParams, Truncation, UniversalField};
use crate::geometry::{rect_average, CellGrid, Family};
use crate::grid::{Domain, ScalarField};
use crate::solver::{Boundary, RunOptions, Solver, SolverConfig};
use serde::{Deserialize, Serialize};

/// `|P_j theta|^2` for `j = 0..=levels`, with `P_j` the average over the level-`j` dyadic cells.
pub fn coarse_energies(theta: &ScalarField, levels: u32) -> Result<Vec<f64>> {
    (0..=levels)
        .map(|j| {
            let tiling = CellGrid::new(j, Family::Dyadic)?;
            tiling.check_resolution(&theta.grid)?;
            let area = tiling.cell_width() * tiling.cell_height();
            tiling.cells.iter().try_fold(0.0, |acc, c| Ok(acc + rect_average(theta, &c.rect())?.powi(2) * area))
        })
        .collect()
}

/// `c^j = |P_{j+1} theta|^2 - |P_j theta|^2` for `j < levels`.
pub fn predicted_atoms(theta: &ScalarField, levels: u32) -> Result<Vec<f64>> {
    let e = coarse_energies(theta, levels)?;
    Ok(e.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Finest dyadic level whose cells the grid resolves.
pub fn resolvable_level(theta: &ScalarField) -> u32 {
    let mut j = 0;
    while CellGrid::new(j + 1, Family::Dyadic).and_then(|t| t.check_resolution(&theta.grid)).is_ok() {
        j += 1;
    }
    j
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub level: usize,
    /// Where the atom sits as `kappa -> 0`: halfway through stage `j`.
    pub time: f64,
    pub window: (f64, f64),
    pub predicted: f64,
    /// `c^j / 2`, the loss of `E = |theta|^2 / 2`.
    pub predicted_dissipation: f64,
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationAtoms {
    pub kappa: f64,
    pub alpha: f64,
    pub rows: Vec<AtomRow>,
    pub predicted_total: f64,
    /// `|theta_0|^2 - |T^2| mean^2`.
    pub energy: f64,
    pub measured_total: f64,
    /// Share of the measured dissipation inside the windows.
    pub concentration: f64,
    pub closure: f64,
}

/// Runs `V` on the torus and integrates the dissipation around each stage.
pub fn dissipation_atoms(theta0: &ScalarField, alpha: f64, kappa: f64) -> Result<DissipationAtoms> {
    let grid = theta0.grid;
    let v = UniversalField::truncated(&FlowParams::new(alpha)?, &Truncation::for_grid(&grid));
    let levels = resolvable_level(theta0).min(v.depth() as u32);
    let atoms = predicted_atoms(theta0, levels)?;
    let theta0 = if theta0.domain == Domain::Torus {
        theta0.clone()
    } else {
        ScalarField { domain: Domain::Torus, ..theta0.clone() }
    };
    let mut solver = Solver::new(SolverConfig::new(kappa, grid), Domain::Torus)?;
    let (_, rec) = solver.run(&theta0, &v, 0.0, 1.0, &Boundary::Torus, &RunOptions::energy())?;
    let rows: Vec<AtomRow> = atoms
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let (start, len) = (s_start(alpha, j + 1), sigma(alpha, j));
            let window = (start + len / 4.0, start + len);
            AtomRow {
                level: j,
                time: start + len / 2.0,
                window,
                predicted: c,
                predicted_dissipation: c / 2.0,
                measured: rec.dissipation_in(window.0, window.1),
            }
        })
        .collect();
    let mean = theta0.mean();
    let energy = theta0.inner(&theta0)? - mean * mean * grid.nx as f64 * grid.ny as f64 * grid.cell_area();
    let measured_total = rec.total_dissipation();
    let inside: f64 = rows.iter().map(|r| r.measured).sum();
    Ok(DissipationAtoms {
        kappa,
        alpha,
        predicted_total: atoms.iter().sum(),
        energy,
        measured_total,
        concentration: if measured_total > 0.0 { inside / measured_total } else { 0.0 },
        closure: rec.energy_closure(),
        rows,
    })
}
