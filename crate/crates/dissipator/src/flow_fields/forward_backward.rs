use super::{Pulse, UniversalField, VelocityField};

/// `W(t) = c V(4t - 1)` on `[1/4, 1/2]` and `c V(3 - 4t)` on `[1/2, 3/4]`, zero elsewhere.
///
/// With `c = 4` each half carries the full transport of `V`, which is what the
/// factorisation `T^W = e^{k D/4} T^{k/4, V~} T^{k/4, V} e^{k D/4}` needs;
/// `c = 1` is the formula without the rescaling factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardBackwardField {
    pub inner: UniversalField,
    pub amplitude: f64,
}

impl ForwardBackwardField {
    pub fn new(inner: UniversalField) -> Self {
        ForwardBackwardField { inner, amplitude: 4.0 }
    }

    pub fn unscaled(inner: UniversalField) -> Self {
        ForwardBackwardField { inner, amplitude: 1.0 }
    }
}

impl VelocityField for ForwardBackwardField {
    fn name(&self) -> &'static str {
        "W"
    }

    fn field_id(&self) -> u32 {
        4
    }

    fn support(&self) -> (f64, f64) {
        let (a, _) = self.inner.support();
        ((a + 1.0) / 4.0, (3.0 - a) / 4.0)
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        if (0.25..0.5).contains(&t) {
            self.inner.pulse_at(4.0 * t - 1.0).map(|p| p.reparametrize(-1.0, 4.0, self.amplitude))
        } else if t > 0.5 && t <= 0.75 {
            self.inner.pulse_at(3.0 - 4.0 * t).map(|p| p.reparametrize(3.0, -4.0, self.amplitude))
        } else {
            None
        }
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        let mut out = Vec::new();
        let (a, b) = (t0.max(0.25), t1.min(0.5));
        if b > a {
            out.extend(self.inner.pulses(4.0 * a - 1.0, 4.0 * b - 1.0).iter().map(|p| p.reparametrize(-1.0, 4.0, self.amplitude)));
        }
        let (a, b) = (t0.max(0.5), t1.min(0.75));
        if b > a {
            let mut second: Vec<Pulse> = self
                .inner
                .pulses(3.0 - 4.0 * b, 3.0 - 4.0 * a)
                .iter()
                .map(|p| p.reparametrize(3.0, -4.0, self.amplitude))
                .collect();
            second.sort_by(|x, y| x.start.total_cmp(&y.start));
            out.extend(second);
        }
        out
    }
}

/// `t -> V(1 - t)`, negated when `adjoint` is set so that its solution
/// operator is the adjoint of the one for `V` over `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeReversed<F> {
    pub inner: F,
    pub adjoint: bool,
}

impl<F: VelocityField> TimeReversed<F> {
    pub fn adjoint(inner: F) -> Self {
        TimeReversed { inner, adjoint: true }
    }

    pub fn plain(inner: F) -> Self {
        TimeReversed { inner, adjoint: false }
    }

    fn lambda(&self) -> f64 {
        if self.adjoint {
            -1.0
        } else {
            1.0
        }
    }
}

impl<F: VelocityField> VelocityField for TimeReversed<F> {
    fn name(&self) -> &'static str {
        "reversed"
    }

    fn field_id(&self) -> u32 {
        5
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = self.inner.support();
        (1.0 - b, 1.0 - a)
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        self.inner.pulse_at(1.0 - t).map(|p| p.reparametrize(1.0, -1.0, self.lambda()))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        let mut out: Vec<Pulse> =
            self.inner.pulses(1.0 - t1, 1.0 - t0).iter().map(|p| p.reparametrize(1.0, -1.0, self.lambda())).collect();
        out.sort_by(|x, y| x.start.total_cmp(&y.start));
        out
    }
}
