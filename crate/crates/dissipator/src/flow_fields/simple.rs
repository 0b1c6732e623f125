use super::{Clock, Pulse, Shape, VelocityField};
use crate::point::Point;

fn steady(shape: Shape, t0: f64, t1: f64) -> Pulse {
    Pulse { start: t0, end: t1, shape, clock: Clock::Linear { rate: 1.0 } }
}

/// The zero field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZeroField;

impl VelocityField for ZeroField {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn field_id(&self) -> u32 {
        0
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn pulse_at(&self, _t: f64) -> Option<Pulse> {
        None
    }

    fn pulses(&self, _t0: f64, _t1: f64) -> Vec<Pulse> {
        Vec::new()
    }
}

/// Constant velocity; only meaningful on the torus unless zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformField(pub Point);

impl VelocityField for UniformField {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn field_id(&self) -> u32 {
        6
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn tangent_to_box(&self) -> bool {
        self.0 == Point::ZERO
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        Some(steady(Shape::Uniform(self.0), t.floor(), t.floor() + 1.0))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        vec![steady(Shape::Uniform(self.0), t0, t1)]
    }
}

/// `(rate * y, 0)`: tangent to the horizontal edges only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShearField(pub f64);

impl VelocityField for ShearField {
    fn name(&self) -> &'static str {
        "shear"
    }

    fn field_id(&self) -> u32 {
        7
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn tangent_to_box(&self) -> bool {
        false
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        Some(steady(Shape::Shear(self.0), t.floor(), t.floor() + 1.0))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        vec![steady(Shape::Shear(self.0), t0, t1)]
    }
}

/// `rate * w(x)` on `[start, end)`, zero elsewhere.
#[derive(Clone)]
pub struct SteadyField {
    pub shape: Shape,
    pub rate: f64,
    pub start: f64,
    pub end: f64,
}

impl SteadyField {
    fn pulse(&self) -> Pulse {
        Pulse { start: self.start, end: self.end, shape: self.shape.clone(), clock: Clock::Linear { rate: self.rate } }
    }
}

impl VelocityField for SteadyField {
    fn name(&self) -> &'static str {
        "steady"
    }

    fn field_id(&self) -> u32 {
        8
    }

    fn support(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn tangent_to_box(&self) -> bool {
        self.shape.tangent_to_box()
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        (self.start <= t && t < self.end).then(|| self.pulse())
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        if self.end > t0 && self.start < t1 {
            vec![self.pulse()]
        } else {
            Vec::new()
        }
    }
}
