//! The building block `U`: on `[n, n+1]` every pentadic cell of level `n` runs a
//! copy of one stage flow, shrunk by `5^-n` in space and amplitude.
//!
//! The stage flow splits a cell into ten columns and turns three column blocks
//! by half a revolution, one after the other: columns `3..7`, then `1..4` and
//! `6..9` together, then `3..7` again. Starting from the left half
//! `LLLLLRRRRR` this produces `LRLRLRLRLR`, so every cell of the next level has
//! its left half filled.

use super::rotor::{Rotor, RotorProfile};
use super::{Clock, Pulse, Shape, SpatialField, Truncation, VelocityField};
use crate::geometry::rotation_scale;
use crate::grid::{Rect, WIDTH};
use crate::point::Point;
use std::sync::OnceLock;

pub const PULSES_PER_STAGE: usize = 3;

/// Column blocks `[c0, c1)` turned by each pulse, in tenths of the cell width.
pub const COLUMN_BLOCKS: [&[(u32, u32)]; PULSES_PER_STAGE] = [&[(3, 7)], &[(1, 4), (6, 9)], &[(3, 7)]];

/// Substep sizing rate for pulse shapes; half a turn per unit pseudo-time with
/// headroom for the faster streamlines near the rotor corners.
pub(crate) const TURN_RATE: f64 = 8.0;

fn rotors() -> &'static [Vec<Rotor>; PULSES_PER_STAGE] {
    static ROTORS: OnceLock<[Vec<Rotor>; PULSES_PER_STAGE]> = OnceLock::new();
    ROTORS.get_or_init(|| {
        let col = WIDTH / 10.0;
        COLUMN_BLOCKS.map(|blocks| {
            blocks
                .iter()
                .map(|&(c0, c1)| Rotor::new(Rect::new(c0 as f64 * col, 0.0, c1 as f64 * col, 1.0)))
                .collect()
        })
    })
}

/// Rotors of one pulse, in the coordinates of a level-0 cell.
pub fn pulse_rotors(pulse: usize) -> &'static [Rotor] {
    &rotors()[pulse]
}

/// Spatial part of pulse `pulse` of stage `level`, transported into the frame
/// `x -> R^frame x` of the rotated tilings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseShape {
    pub pulse: usize,
    pub level: u32,
    pub frame: i32,
    zoom: f64,
}

impl PulseShape {
    pub fn new(pulse: usize, level: u32, frame: i32) -> Self {
        assert!(pulse < PULSES_PER_STAGE);
        PulseShape { pulse, level, frame, zoom: 5f64.powi(level as i32) }
    }

    /// Local coordinates in the level-0 cell.
    #[inline]
    fn local(&self, p: Point) -> Point {
        let q = if self.frame == 0 { p } else { rotation_scale(p, -self.frame) };
        Point::new((q.x * self.zoom).rem_euclid(WIDTH), (q.y * self.zoom).rem_euclid(1.0))
    }

    #[inline]
    pub fn velocity(&self, p: Point) -> Point {
        let l = self.local(p);
        let prof = RotorProfile::shared();
        let mut u = Point::ZERO;
        for r in pulse_rotors(self.pulse) {
            if r.rect.contains(l) {
                u = r.velocity(prof, l);
                break;
            }
        }
        if u == Point::ZERO {
            return u;
        }
        let u = u * (1.0 / self.zoom);
        if self.frame == 0 {
            u
        } else {
            rotation_scale(u, self.frame)
        }
    }

    /// The rotor rectangle containing `p`, as `(tile column, tile row, rotor)`.
    /// Each such rectangle is invariant under the pulse.
    pub fn region(&self, p: Point) -> Option<(i64, i64, usize)> {
        let q = if self.frame == 0 { p } else { rotation_scale(p, -self.frame) };
        let (x, y) = (q.x * self.zoom, q.y * self.zoom);
        let (tx, ty) = ((x / WIDTH).floor(), y.floor());
        let l = Point::new(x - tx * WIDTH, y - ty);
        pulse_rotors(self.pulse)
            .iter()
            .position(|r| r.rect.contains(l))
            .map(|k| (tx as i64, ty as i64, k))
    }

    pub fn stream(&self, p: Point) -> f64 {
        let l = self.local(p);
        let prof = RotorProfile::shared();
        let psi: f64 = pulse_rotors(self.pulse).iter().map(|r| r.stream(prof, l)).sum();
        psi / (self.zoom * self.zoom) * 0.5f64.powi(self.frame)
    }
}

impl SpatialField for PulseShape {
    fn velocity(&self, p: Point) -> Point {
        PulseShape::velocity(self, p)
    }

    fn stream(&self, p: Point) -> f64 {
        PulseShape::stream(self, p)
    }

    fn turn_rate(&self) -> f64 {
        TURN_RATE
    }
}

/// `U(t, x)` for `t in [0, stages)`, zero afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildingBlock {
    pub stages: usize,
}

impl BuildingBlock {
    pub fn new(stages: usize) -> Self {
        BuildingBlock { stages }
    }

    pub fn truncated(trunc: &Truncation) -> Self {
        BuildingBlock { stages: trunc.pentadic_stages(1.0) }
    }

    fn pulse(n: usize, r: usize) -> Pulse {
        let a = n as f64 + r as f64 / PULSES_PER_STAGE as f64;
        let b = n as f64 + (r + 1) as f64 / PULSES_PER_STAGE as f64;
        Pulse { start: a, end: b, shape: Shape::Pulse(PulseShape::new(r, n as u32, 0)), clock: Clock::unit(a, b) }
    }
}

impl VelocityField for BuildingBlock {
    fn name(&self) -> &'static str {
        "U"
    }

    fn field_id(&self) -> u32 {
        1
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.stages as f64)
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        if !(t >= 0.0 && t < self.stages as f64) {
            return None;
        }
        let n = t.floor() as usize;
        let r = (((t - n as f64) * PULSES_PER_STAGE as f64).floor() as usize).min(PULSES_PER_STAGE - 1);
        Some(Self::pulse(n, r))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        let mut out = Vec::new();
        for n in 0..self.stages {
            for r in 0..PULSES_PER_STAGE {
                let p = Self::pulse(n, r);
                if p.end > t0 && p.start < t1 {
                    out.push(p);
                }
            }
        }
        out
    }
}
