use super::schedule::{s_start, sigma, universal_stage, FlowParams};
use super::two_cell::TwoCellField;
use super::{Pulse, Truncation, VelocityField};

/// `V(t, x) = sigma_n^-1 R^n v(sigma_n^-1 (t - s_{n+1}), R^-n x)` on `[s_{n+1}, s_n]`,
/// zero for `t <= 1/2`, with `v` extended periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct UniversalField {
    pub alpha: f64,
    /// Active two-cell stages inside each universal stage `n`; its length is the
    /// number of active universal stages.
    pub inner_stages: Vec<usize>,
}

impl UniversalField {
    pub fn new(params: &FlowParams, inner_stages: Vec<usize>) -> Self {
        UniversalField { alpha: params.alpha, inner_stages }
    }

    /// Universal stage `n` acts on tiles of short side `2^{-n/2}`; keep the
    /// two-cell stages whose cells stay resolvable and stop at the first
    /// universal stage with none.
    pub fn truncated(params: &FlowParams, trunc: &Truncation) -> Self {
        let mut inner = Vec::new();
        for n in 0..trunc.max_stages {
            let k = trunc.pentadic_stages(0.5f64.powf(n as f64 / 2.0));
            if k == 0 {
                break;
            }
            inner.push(k);
        }
        Self::new(params, inner)
    }

    pub fn depth(&self) -> usize {
        self.inner_stages.len()
    }

    fn stage_offset(&self, n: usize) -> (f64, f64) {
        (s_start(self.alpha, n + 1), sigma(self.alpha, n))
    }
}

impl VelocityField for UniversalField {
    fn name(&self) -> &'static str {
        "V"
    }

    fn field_id(&self) -> u32 {
        3
    }

    fn support(&self) -> (f64, f64) {
        (s_start(self.alpha, self.depth()), 1.0)
    }

    fn pulse_at(&self, t: f64) -> Option<Pulse> {
        let n = universal_stage(self.alpha, t)?;
        let &stages = self.inner_stages.get(n)?;
        let (offset, scale) = self.stage_offset(n);
        let (k, r) = TwoCellField::pulse_at_local(self.alpha, stages, (t - offset) / scale)?;
        Some(TwoCellField::stage_pulse(self.alpha, k, r, n as i32, offset, scale))
    }

    fn pulses(&self, t0: f64, t1: f64) -> Vec<Pulse> {
        let mut out = Vec::new();
        for n in (0..self.depth()).rev() {
            let (offset, scale) = self.stage_offset(n);
            if offset + scale <= t0 || offset >= t1 {
                continue;
            }
            out.extend(TwoCellField::pulses_local(
                self.alpha,
                self.inner_stages[n],
                n as i32,
                offset,
                scale,
                t0,
                t1,
            ));
        }
        out
    }
}
