//! Time-dependent incompressible velocity fields: the building block `U`, the
//! two-cell dissipator `v`, the universal dissipator `V`, the forward-backward
//! field `W`, and a few simple reference fields.
//!
//! Every field is a sequence of pulses. During a pulse the velocity factors as
//! `u(t, x) = P'(t) w(x)` where `w` is a fixed stream-function field and `P` a
//! scalar clock, which lets integrators work in the pseudo-time `P`.

mod block;
mod forward_backward;
mod holder;
mod oracle;
pub mod profile;
pub mod rotor;
pub mod schedule;
mod simple;
mod two_cell;
mod universal;

pub use block::{BuildingBlock, PulseShape, PULSES_PER_STAGE};
pub use forward_backward::{ForwardBackwardField, TimeReversed};
pub use holder::{estimate_holder_norm, time_holder_quotient, HolderEstimate};
pub use oracle::{mixed_configuration, MixerOracleState};
pub use schedule::{build_schedule, BlockKind, FlowParams, ScheduleTable};
pub use simple::{ShearField, SteadyField, UniformField, ZeroField};
pub use two_cell::TwoCellField;
pub use universal::UniversalField;

use crate::grid::{Grid, WIDTH};
use crate::point::Point;
use std::sync::Arc;

/// Spatial part `w` of a pulse.
pub trait SpatialField: Send + Sync {
    fn velocity(&self, p: Point) -> Point;
    fn stream(&self, p: Point) -> f64;
    /// Rate bound used to size integration substeps, per unit pseudo-time.
    fn turn_rate(&self) -> f64;
}

#[derive(Clone)]
pub enum Shape {
    Pulse(PulseShape),
    /// Constant velocity.
    Uniform(Point),
    /// `(rate * y, 0)`.
    Shear(f64),
    Custom(Arc<dyn SpatialField>),
}

impl Shape {
    #[inline]
    pub fn velocity(&self, p: Point) -> Point {
        match self {
            Shape::Pulse(s) => s.velocity(p),
            Shape::Uniform(u) => *u,
            Shape::Shear(r) => Point::new(r * p.y, 0.0),
            Shape::Custom(f) => f.velocity(p),
        }
    }

    pub fn stream(&self, p: Point) -> f64 {
        match self {
            Shape::Pulse(s) => s.stream(p),
            Shape::Uniform(u) => u.x * p.y - u.y * p.x,
            Shape::Shear(r) => -0.5 * r * p.y * p.y,
            Shape::Custom(f) => f.stream(p),
        }
    }

    pub fn turn_rate(&self) -> f64 {
        match self {
            Shape::Pulse(_) => block::TURN_RATE,
            Shape::Uniform(_) => 0.0,
            Shape::Shear(r) => r.abs(),
            Shape::Custom(f) => f.turn_rate(),
        }
    }

    /// Whether `w` vanishes on the box edges in the normal direction.
    pub fn tangent_to_box(&self) -> bool {
        match self {
            Shape::Pulse(_) | Shape::Shear(_) => true,
            Shape::Uniform(u) => *u == Point::ZERO,
            Shape::Custom(_) => false,
        }
    }
}

/// Pseudo-time clock `P(t)` of a pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clock {
    /// `P = amp * S(s)` with `s = (t - a)/(b - a)`, or `s = (b - t)/(b - a)` when flipped.
    Smooth { a: f64, b: f64, amp: f64, flipped: bool },
    /// `P = rate * t`.
    Linear { rate: f64 },
}

impl Clock {
    pub fn unit(a: f64, b: f64) -> Self {
        Clock::Smooth { a, b, amp: 1.0, flipped: false }
    }

    pub fn pseudo(&self, t: f64) -> f64 {
        match *self {
            Clock::Smooth { a, b, amp, flipped } => {
                let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
                amp * profile::step(if flipped { 1.0 - s } else { s })
            }
            Clock::Linear { rate } => rate * t,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            Clock::Smooth { a, b, amp, flipped } => {
                let s = (t - a) / (b - a);
                if flipped {
                    -amp * profile::step_rate(1.0 - s) / (b - a)
                } else {
                    amp * profile::step_rate(s) / (b - a)
                }
            }
            Clock::Linear { rate } => rate,
        }
    }

    /// Largest `|P'|`.
    pub fn max_rate(&self) -> f64 {
        match *self {
            Clock::Smooth { a, b, amp, .. } => amp.abs() * profile::max_step_rate() / (b - a),
            Clock::Linear { rate } => rate.abs(),
        }
    }

    /// The time in `[t0, t1]` at which the clock reads `p`; `P` must be monotone there.
    pub fn time_at(&self, p: f64, t0: f64, t1: f64) -> f64 {
        match *self {
            Clock::Smooth { a, b, amp, flipped } => {
                if amp == 0.0 {
                    return t0;
                }
                let s = profile::step_inverse(p / amp);
                let t = if flipped { b - s * (b - a) } else { a + s * (b - a) };
                t.clamp(t0, t1)
            }
            Clock::Linear { rate } => {
                if rate == 0.0 {
                    t0
                } else {
                    (p / rate).clamp(t0, t1)
                }
            }
        }
    }

    /// Clock of `t -> lambda * u(c0 + c1 t)` given the clock of `u`.
    pub fn reparametrize(&self, c0: f64, c1: f64, lambda: f64) -> Clock {
        match *self {
            Clock::Smooth { a, b, amp, flipped } => {
                let (ta, tb) = ((a - c0) / c1, (b - c0) / c1);
                Clock::Smooth {
                    a: ta.min(tb),
                    b: ta.max(tb),
                    amp: lambda * amp / c1,
                    flipped: flipped ^ (c1 < 0.0),
                }
            }
            Clock::Linear { rate } => Clock::Linear { rate: lambda * rate },
        }
    }
}

/// A pulse active on `[start, end]`.
#[derive(Clone)]
pub struct Pulse {
    pub start: f64,
    pub end: f64,
    pub shape: Shape,
    pub clock: Clock,
}

impl Pulse {
    pub fn velocity(&self, t: f64, p: Point) -> Point {
        self.shape.velocity(p) * self.clock.rate(t)
    }

    /// Reparametrised copy for `t -> lambda * u(c0 + c1 t)`.
    pub fn reparametrize(&self, c0: f64, c1: f64, lambda: f64) -> Pulse {
        let (ta, tb) = ((self.start - c0) / c1, (self.end - c0) / c1);
        Pulse {
            start: ta.min(tb),
            end: ta.max(tb),
            shape: self.shape.clone(),
            clock: self.clock.reparametrize(c0, c1, lambda),
        }
    }
}

/// Piece of a time interval: either at rest or inside one pulse.
#[derive(Clone)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub pulse: Option<Pulse>,
}

pub trait VelocityField: Send + Sync {
    fn name(&self) -> &'static str;

    /// Identifier stored in snapshot headers.
    fn field_id(&self) -> u32;

    /// Interval outside of which the field vanishes.
    fn support(&self) -> (f64, f64);

    /// The pulse active at `t`, if any.
    fn pulse_at(&self, t: f64) -> Option<Pulse>;

    /// Pulses overlapping `(t0, t1)`, in time order.
    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse>;

    /// Whether the field is tangent to the box edges.
    fn tangent_to_box(&self) -> bool {
        true
    }

    fn velocity(&self, t: f64, p: Point) -> Point {
        self.pulse_at(t).map_or(Point::ZERO, |pl| pl.velocity(t, p))
    }

    fn stream(&self, t: f64, p: Point) -> f64 {
        self.pulse_at(t).map_or(0.0, |pl| pl.shape.stream(p) * pl.clock.rate(t))
    }

    /// Splits `[t0, t1]` into rests and pulse pieces.
    fn pieces(&self, t0: f64, t1: f64) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut cursor = t0;
        for pl in self.pulses(t0, t1) {
            let a = pl.start.max(t0);
            let b = pl.end.min(t1);
            if b <= a {
                continue;
            }
            if a > cursor {
                out.push(Piece { start: cursor, end: a, pulse: None });
            }
            out.push(Piece { start: a, end: b, pulse: Some(pl) });
            cursor = b;
        }
        if t1 > cursor {
            out.push(Piece { start: cursor, end: t1, pulse: None });
        }
        out
    }
}

/// Velocity samples at cell centres: `(u_x, u_y)` row-major.
pub fn sample_velocity(field: &dyn VelocityField, t: f64, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let mut ux = Vec::with_capacity(grid.len());
    let mut uy = Vec::with_capacity(grid.len());
    for p in grid.centers() {
        let u = field.velocity(t, p);
        ux.push(u.x);
        uy.push(u.y);
    }
    (ux, uy)
}

/// Maximum speed over cell centres of a grid.
pub fn sup_speed(field: &dyn VelocityField, t: f64, grid: &Grid) -> f64 {
    grid.centers().map(|p| field.velocity(t, p).norm()).fold(0.0, f64::max)
}

/// Wraps `p` into `[0, sqrt 2) x [0, 1)`.
#[inline]
pub fn wrap(p: Point) -> Point {
    Point::new(p.x.rem_euclid(WIDTH), p.y.rem_euclid(1.0))
}

/// The named fields of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FieldKind {
    /// The building block `U` on `[0, stages)`.
    #[serde(rename = "U")]
    BuildingBlock,
    #[serde(rename = "v")]
    TwoCell,
    #[serde(rename = "V")]
    Universal,
    #[serde(rename = "W")]
    ForwardBackward,
    /// `-V(1 - t)`, the adjoint flow of `V`.
    #[serde(rename = "V-rev")]
    Reversed,
    #[serde(rename = "zero")]
    Zero,
}

impl FieldKind {
    pub const ALL: [FieldKind; 6] = [
        FieldKind::BuildingBlock,
        FieldKind::TwoCell,
        FieldKind::Universal,
        FieldKind::ForwardBackward,
        FieldKind::Reversed,
        FieldKind::Zero,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FieldKind::BuildingBlock => "U",
            FieldKind::TwoCell => "v",
            FieldKind::Universal => "V",
            FieldKind::ForwardBackward => "W",
            FieldKind::Reversed => "V-rev",
            FieldKind::Zero => "zero",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == name)
    }

    pub fn build(self, params: &FlowParams, trunc: &Truncation) -> Box<dyn VelocityField> {
        match self {
            FieldKind::BuildingBlock => Box::new(BuildingBlock::truncated(trunc)),
            FieldKind::TwoCell => Box::new(TwoCellField::truncated(params, trunc)),
            FieldKind::Universal => Box::new(UniversalField::truncated(params, trunc)),
            FieldKind::ForwardBackward => Box::new(ForwardBackwardField::new(UniversalField::truncated(params, trunc))),
            FieldKind::Reversed => Box::new(TimeReversed::adjoint(UniversalField::truncated(params, trunc))),
            FieldKind::Zero => Box::new(ZeroField),
        }
    }
}

/// How deep a field may go before its cells drop below the resolvable size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    /// Smallest allowed short side of the cells a stage produces.
    pub min_cell: f64,
    /// Hard cap on the number of stages.
    pub max_stages: usize,
}

impl Truncation {
    /// Cells must span at least four grid spacings.
    pub fn for_grid(grid: &Grid) -> Self {
        Truncation { min_cell: 4.0 * grid.h(), max_stages: 64 }
    }

    pub fn stages(max_stages: usize) -> Self {
        Truncation { min_cell: 0.0, max_stages }
    }

    /// Number of pentadic stages `k` whose output cells `scale * 5^-(k+1)` are resolvable.
    pub fn pentadic_stages(&self, scale: f64) -> usize {
        let mut k = 0;
        while k < self.max_stages && k < 12 && scale * 5f64.powi(-(k as i32 + 1)) >= self.min_cell {
            k += 1;
        }
        k
    }
}
