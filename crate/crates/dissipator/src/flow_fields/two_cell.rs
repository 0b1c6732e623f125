use super::block::PULSES_PER_STAGE;
use super::schedule::{tau, t_start, two_cell_stage, FlowParams};
use super::{Clock, Pulse, PulseShape, Shape, Truncation, VelocityField};

/// `v(t, x) = tau_n^-1 U(tau_n^-1 (t - t_n) + n, x)` on `[t_n, t_{n+1}]`, zero for `t >= 1/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoCellField {
    pub alpha: f64,
    /// Number of active stages; later stages are replaced by rest.
    pub stages: usize,
}

impl TwoCellField {
    pub fn new(params: &FlowParams, stages: usize) -> Self {
        TwoCellField { alpha: params.alpha, stages }
    }

    pub fn truncated(params: &FlowParams, trunc: &Truncation) -> Self {
        Self::new(params, trunc.pentadic_stages(1.0))
    }

    /// Pulse `r` of stage `n`, placed at physical time `offset + scale * t`
    /// and acting in the frame `R^frame`.
    pub(crate) fn stage_pulse(alpha: f64, n: usize, r: usize, frame: i32, offset: f64, scale: f64) -> Pulse {
        let t0 = t_start(alpha, n);
        let d = tau(alpha, n) / PULSES_PER_STAGE as f64;
        let a = offset + scale * (t0 + d * r as f64);
        let b = if r + 1 == PULSES_PER_STAGE {
            offset + scale * t_start(alpha, n + 1)
        } else {
            offset + scale * (t0 + d * (r + 1) as f64)
        };
        Pulse { start: a, end: b, shape: Shape::Pulse(PulseShape::new(r, n as u32, frame)), clock: Clock::unit(a, b) }
    }

    pub(crate) fn pulse_at_local(alpha: f64, stages: usize, t: f64) -> Option<(usize, usize)> {
        let n = two_cell_stage(alpha, t)?;
        if n >= stages {
            return None;
        }
        let s = (t - t_start(alpha, n)) / tau(alpha, n);
        let r = ((s * PULSES_PER_STAGE as f64).floor() as usize).min(PULSES_PER_STAGE - 1);
        Some((n, r))
    }

    pub(crate) fn pulses_local(
        alpha: f64,
        stages: usize,
        frame: i32,
        offset: f64,
        scale: f64,
        t0: f64,
        t1: f64,
    ) -> Vec<Pulse> {
        let mut out = Vec::new();
        for n in 0..stages {
            let a = offset + scale * t_start(alpha, n);
            let b = offset + scale * t_start(alpha, n + 1);
            if b <= t0 || a >= t1 {
                continue;
            }
            for r in 0..PULSES_PER_STAGE {
                let p = Self::stage_pulse(alpha, n, r, frame, offset, scale);
                if p.end > t0 && p.start < t1 {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl VelocityField for TwoCellField {
    fn name(&self) -> &'static str {
        "v"
    }

    fn field_id(&self) -> u32 {
        2
    }

    fn support(&self) -> (f64, f64) {
        (0.0, t_start(self.alpha, self.stages))
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        let (n, r) = Self::pulse_at_local(self.alpha, self.stages, t)?;
        Some(Self::stage_pulse(self.alpha, n, r, 0, 0.0, 1.0))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        Self::pulses_local(self.alpha, self.stages, 0, 0.0, 1.0, t0, t1)
    }
}
