use crate::error::{arg, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    /// Three pulses of isochronous half-turns on column blocks of each cell.
    #[default]
    Reversals,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub alpha: f64,
    #[serde(default = "default_base")]
    pub base: u32,
    #[serde(default)]
    pub block: BlockKind,
}

fn default_base() -> u32 {
    5
}

impl FlowParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = FlowParams { alpha, base: 5, block: BlockKind::Reversals };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return arg(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if self.base != 5 {
            return arg(format!("only the pentadic base 5 is supported, got {}", self.base));
        }
        Ok(())
    }
}

/// Stage durations and start times of the two-cell field (`tau`, `t`) and of
/// the universal field (`sigma`, `s`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTable {
    pub alpha: f64,
    pub depth: usize,
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    pub sigma: Vec<f64>,
    pub s: Vec<f64>,
}

/// `tau_j = (5^{(a-1)j} - 5^{(a-1)(j+1)}) / 2`.
pub fn tau(alpha: f64, j: usize) -> f64 {
    let r = 5f64.powf(alpha - 1.0);
    0.5 * r.powi(j as i32) * (1.0 - r)
}

/// `t_n = (1 - 5^{(a-1)n}) / 2`.
pub fn t_start(alpha: f64, n: usize) -> f64 {
    0.5 * (1.0 - 5f64.powf((alpha - 1.0) * n as f64))
}

/// `sigma_j = (2^{(a-1)j/2} - 2^{(a-1)(j+1)/2}) / 2`.
pub fn sigma(alpha: f64, j: usize) -> f64 {
    let r = 2f64.powf(0.5 * (alpha - 1.0));
    0.5 * r.powi(j as i32) * (1.0 - r)
}

/// `s_n = 1/2 + 2^{(a-1)n/2} / 2`.
pub fn s_start(alpha: f64, n: usize) -> f64 {
    0.5 + 0.5 * 2f64.powf(0.5 * (alpha - 1.0) * n as f64)
}

/// The stage `n` with `t_n <= t < t_{n+1}`, or `None` for `t >= 1/2`.
pub fn two_cell_stage(alpha: f64, t: f64) -> Option<usize> {
    if !(0.0..0.5).contains(&t) {
        return None;
    }
    let guess = ((1.0 - 2.0 * t).ln() / ((alpha - 1.0) * 5f64.ln())).floor().max(0.0) as usize;
    let mut n = guess;
    while n > 0 && t < t_start(alpha, n) {
        n -= 1;
    }
    while t >= t_start(alpha, n + 1) {
        n += 1;
    }
    Some(n)
}

/// The stage `n` with `s_{n+1} <= t < s_n`, or `None` for `t <= 1/2` or `t > 1`.
pub fn universal_stage(alpha: f64, t: f64) -> Option<usize> {
    if t <= 0.5 || t > 1.0 {
        return None;
    }
    let guess = ((2.0 * t - 1.0).ln() / (0.5 * (alpha - 1.0) * 2f64.ln())).floor().max(0.0) as usize;
    let mut n = guess;
    while n > 0 && t >= s_start(alpha, n) {
        n -= 1;
    }
    while t < s_start(alpha, n + 1) {
        n += 1;
    }
    Some(n)
}

pub fn build_schedule(params: &FlowParams, depth: usize) -> Result<ScheduleTable> {
    params.validate()?;
    if depth < 1 {
        return arg("schedule depth must be at least 1");
    }
    let a = params.alpha;
    Ok(ScheduleTable {
        alpha: a,
        depth,
        tau: (0..depth).map(|j| tau(a, j)).collect(),
        t: (0..=depth).map(|n| t_start(a, n)).collect(),
        sigma: (0..depth).map(|j| sigma(a, j)).collect(),
        s: (0..=depth).map(|n| s_start(a, n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_lookup_brackets_time() {
        let a = 0.5;
        for k in 0..2000 {
            let t = k as f64 / 4000.0;
            let n = two_cell_stage(a, t).unwrap();
            assert!(t_start(a, n) <= t && t < t_start(a, n + 1));
        }
        assert_eq!(two_cell_stage(a, 0.5), None);
        for k in 1..=2000 {
            let t = 0.5 + k as f64 / 4000.0;
            let n = universal_stage(a, t).unwrap();
            assert!(s_start(a, n + 1) <= t && t < s_start(a, n) || (n == 0 && t == 1.0));
        }
        assert_eq!(universal_stage(a, 0.5), None);
    }

    #[test]
    fn stage_boundaries_open_new_stages() {
        let a = 0.3;
        for n in 0..10 {
            assert_eq!(two_cell_stage(a, t_start(a, n)), Some(n));
        }
    }

    #[test]
    fn partial_sums_agree_with_closed_forms() {
        let a = 0.37;
        let mut acc = 0.0;
        for n in 0..30 {
            assert!((acc - t_start(a, n)).abs() < 1e-14);
            acc += tau(a, n);
        }
        let mut tail = 0.0;
        for j in (0..400).rev() {
            tail += sigma(a, j);
        }
        assert!((0.5 + tail - s_start(a, 0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FlowParams::new(1.0).is_err());
        assert!(FlowParams::new(0.0).is_err());
        assert!(build_schedule(&FlowParams::new(0.5).unwrap(), 0).is_err());
    }
}
