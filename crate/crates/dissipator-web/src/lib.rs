//! Three operations for the static demo page in `www/`: velocity snapshots,
//! small solves, and the stage depths a diffusivity calls for. The plain Rust
//! functions carry the logic; the `wasm_bindgen` exports wrap them.

use dissipator::experiments::data::InitialData;
use dissipator::experiments::plan::{two_cell_depths, universal_depths};
use dissipator::flow_fields::{sample_velocity, FieldKind, FlowParams, Truncation};
use dissipator::solver::{Boundary, RunOptions, Solver, SolverConfig};
use dissipator::{Domain, Grid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_WIDTH: usize = 256;

type Result<T> = std::result::Result<T, String>;

fn text(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn field_kind(which: &str) -> Result<FieldKind> {
    FieldKind::parse(which).ok_or_else(|| format!("unknown field `{which}`"))
}

fn demo_grid(width: usize) -> Result<Grid> {
    if width > MAX_WIDTH {
        return Err(format!("the demo grid is capped at {MAX_WIDTH} cells across"));
    }
    Grid::with_width(width).map_err(text)
}

pub fn height_for(width: usize) -> Result<usize> {
    Ok(demo_grid(width)?.ny)
}

/// Speed `|u|` of a field at time `t` on the cell centres, row by row from the bottom.
pub fn speed_field(which: &str, t: f64, alpha: f64, width: usize) -> Result<Vec<f64>> {
    let grid = demo_grid(width)?;
    let params = FlowParams::new(alpha).map_err(text)?;
    let field = field_kind(which)?.build(&params, &Truncation::for_grid(&grid));
    let (u, v) = sample_velocity(field.as_ref(), t, &grid);
    Ok(u.iter().zip(&v).map(|(a, b)| a.hypot(*b)).collect())
}

/// The two-cell data transported by `which` over `[0, end]` with diffusivity `kappa`.
pub fn solve_two_cell(which: &str, domain: &str, kappa: f64, alpha: f64, width: usize, end: f64) -> Result<Vec<f64>> {
    let grid = demo_grid(width)?;
    let domain = match domain {
        "box" => Domain::Box,
        "torus" => Domain::Torus,
        other => return Err(format!("unknown domain `{other}`")),
    };
    let params = FlowParams::new(alpha).map_err(text)?;
    let field = field_kind(which)?.build(&params, &Truncation::for_grid(&grid));
    let theta0 = InitialData::TwoCell.build(grid, domain).map_err(text)?;
    let boundary = if domain == Domain::Torus { Boundary::Torus } else { Boundary::constant(0.5) };
    let mut solver = Solver::new(SolverConfig::new(kappa, grid), domain).map_err(text)?;
    let (theta, _) = solver
        .run(&theta0, field.as_ref(), 0.0, end, &boundary, &RunOptions::default())
        .map_err(text)?;
    Ok(theta.data)
}

#[derive(Serialize)]
struct DepthTable {
    two_cell: (usize, usize),
    universal: (usize, usize),
}

/// JSON `{"two_cell": [n, m], "universal": [n, m]}` for a diffusivity.
pub fn depth_table(alpha: f64, kappa: f64) -> Result<String> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err("kappa must lie in (0, 1)".into());
    }
    FlowParams::new(alpha).map_err(text)?;
    let (a, b) = (two_cell_depths(alpha, kappa), universal_depths(alpha, kappa));
    serde_json::to_string(&DepthTable { two_cell: (a.n, a.m), universal: (b.n, b.m) }).map_err(text)
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn grid_height(width: usize) -> std::result::Result<usize, JsError> {
    js(height_for(width))
}

#[wasm_bindgen]
pub fn speed(which: &str, t: f64, alpha: f64, width: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(speed_field(which, t, alpha, width))
}

#[wasm_bindgen]
pub fn solve(which: &str, domain: &str, kappa: f64, alpha: f64, width: usize, end: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(solve_two_cell(which, domain, kappa, alpha, width, end))
}

#[wasm_bindgen]
pub fn depths(alpha: f64, kappa: f64) -> std::result::Result<String, JsError> {
    js(depth_table(alpha, kappa))
}
