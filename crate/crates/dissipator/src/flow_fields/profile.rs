//! A C-infinity step `S: [0, 1] -> [0, 1]` whose derivatives all vanish at both
//! ends, used both as the temporal pulse shape and as the spatial taper.

fn h(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn dh(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp() / (s * s)
    }
}

/// `S(s) = h(s) / (h(s) + h(1 - s))` with `h(s) = exp(-1/s)`.
pub fn step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = h(s);
    let b = h(1.0 - s);
    a / (a + b)
}

/// `S'(s)`; integrates to 1 over `[0, 1]`.
pub fn step_rate(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let a = h(s);
    let b = h(1.0 - s);
    let da = dh(s);
    let db = -dh(1.0 - s);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Inverse of [`step`] on `[0, 1]`.
pub fn step_inverse(p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if step(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum of `S'`, attained at `s = 1/2`.
pub fn max_step_rate() -> f64 {
    step_rate(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_integrates_to_one() {
        let n = 20_000;
        let integral: f64 = (0..n).map(|k| step_rate((k as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for &s in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let d = 1e-6;
            let fd = (step(s + d) - step(s - d)) / (2.0 * d);
            assert!((fd - step_rate(s)).abs() < 1e-7, "s = {s}");
        }
    }

    #[test]
    fn symmetric_and_flat_at_ends() {
        for &s in &[0.01, 0.2, 0.4] {
            assert!((step(s) + step(1.0 - s) - 1.0).abs() < 1e-15);
        }
        assert!(step_rate(1e-3) < 1e-300);
        assert!((step_inverse(step(0.37)) - 0.37).abs() < 1e-12);
    }
}
