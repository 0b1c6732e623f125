//! Isochronous rotation of a rectangle: every closed streamline of the core
//! completes exactly half a revolution per unit of pseudo-time, so a unit pulse
//! maps the core onto itself by the point reflection through the centre.

use super::profile;
use crate::grid::Rect;
use crate::point::Point;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Streamline levels `c = sin(pi xi) sin(pi eta)` below `TAPER_LO` are at rest,
/// levels above `TAPER_HI` turn isochronously.
pub const TAPER_LO: f64 = 0.0005;
pub const TAPER_HI: f64 = 0.003;

const TABLE_LEN: usize = 8192;

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    0.5 * (a + b)
}

/// Period of the streamline `sin(pi xi) sin(pi eta) = c` of the unit-square
/// field `grad_perp(sin(pi xi) sin(pi eta))`.
pub fn unit_period(c: f64) -> f64 {
    2.0 / (PI * agm(1.0, c))
}

/// Tabulated speed factor `G(c)` and its antiderivative `F(c)`.
pub struct RotorProfile {
    lo: f64,
    hi: f64,
    dc: f64,
    g: Vec<f64>,
    f: Vec<f64>,
}

impl RotorProfile {
    pub fn new(lo: f64, hi: f64) -> Self {
        let dc = 1.0 / (TABLE_LEN - 1) as f64;
        let exact = |c: f64| {
            if c <= lo {
                0.0
            } else {
                profile::step((c - lo) / (hi - lo)) * 0.5 * unit_period(c)
            }
        };
        let g: Vec<f64> = (0..TABLE_LEN).map(|k| exact(k as f64 * dc)).collect();
        let mut f = vec![0.0; TABLE_LEN];
        let sub = 16;
        for k in 1..TABLE_LEN {
            let a = (k - 1) as f64 * dc;
            let hstep = dc / sub as f64;
            let mut s = exact(a) + exact(a + dc);
            for m in 1..sub {
                let w = if m % 2 == 1 { 4.0 } else { 2.0 };
                s += w * exact(a + m as f64 * hstep);
            }
            f[k] = f[k - 1] + s * hstep / 3.0;
        }
        RotorProfile { lo, hi, dc, g, f }
    }

    pub fn shared() -> &'static RotorProfile {
        static PROFILE: OnceLock<RotorProfile> = OnceLock::new();
        PROFILE.get_or_init(|| RotorProfile::new(TAPER_LO, TAPER_HI))
    }

    pub fn taper(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn cubic(table: &[f64], dc: f64, c: f64) -> f64 {
        let x = (c / dc).clamp(0.0, (table.len() - 1) as f64);
        let k = (x.floor() as usize).min(table.len() - 2);
        let t = x - k as f64;
        let p1 = table[k];
        let p2 = table[k + 1];
        let p0 = if k == 0 { 2.0 * p1 - p2 } else { table[k - 1] };
        let p3 = if k + 2 < table.len() { table[k + 2] } else { 2.0 * p2 - p1 };
        let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        let cc = -0.5 * p0 + 0.5 * p2;
        ((a * t + b) * t + cc) * t + p1
    }

    /// Speed factor for a unit square; zero on the resting layer.
    pub fn g(&self, c: f64) -> f64 {
        if c <= self.lo {
            0.0
        } else {
            Self::cubic(&self.g, self.dc, c)
        }
    }

    pub fn f(&self, c: f64) -> f64 {
        Self::cubic(&self.f, self.dc, c.max(0.0))
    }
}

/// A rectangle turned by the isochronous rotor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotor {
    pub rect: Rect,
}

impl Rotor {
    pub fn new(rect: Rect) -> Self {
        Rotor { rect }
    }

    #[inline]
    fn local(&self, p: Point) -> Option<(f64, f64)> {
        let xi = (p.x - self.rect.x0) / self.rect.width();
        let eta = (p.y - self.rect.y0) / self.rect.height();
        if xi <= 0.0 || xi >= 1.0 || eta <= 0.0 || eta >= 1.0 {
            None
        } else {
            Some((xi, eta))
        }
    }

    /// Velocity per unit pseudo-time.
    #[inline]
    pub fn velocity(&self, profile: &RotorProfile, p: Point) -> Point {
        let Some((xi, eta)) = self.local(p) else {
            return Point::ZERO;
        };
        let (sx, cx) = (PI * xi).sin_cos();
        let (sy, cy) = (PI * eta).sin_cos();
        let c = sx * sy;
        let g = profile.g(c);
        if g == 0.0 {
            return Point::ZERO;
        }
        let (w, h) = (self.rect.width(), self.rect.height());
        let amp = w * h * g * PI;
        Point::new(-amp / h * sx * cy, amp / w * cx * sy)
    }

    pub fn stream(&self, profile: &RotorProfile, p: Point) -> f64 {
        match self.local(p) {
            None => 0.0,
            Some((xi, eta)) => {
                let c = (PI * xi).sin() * (PI * eta).sin();
                self.rect.width() * self.rect.height() * profile.f(c)
            }
        }
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.rect.x0 + self.rect.x1), 0.5 * (self.rect.y0 + self.rect.y1))
    }

    /// Streamline level of `p`, 0 outside.
    pub fn level(&self, p: Point) -> f64 {
        self.local(p).map_or(0.0, |(xi, eta)| (PI * xi).sin() * (PI * eta).sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4(rotor: &Rotor, prof: &RotorProfile, mut p: Point, time: f64, steps: usize) -> Point {
        let dt = time / steps as f64;
        for _ in 0..steps {
            let k1 = rotor.velocity(prof, p);
            let k2 = rotor.velocity(prof, p + k1 * (0.5 * dt));
            let k3 = rotor.velocity(prof, p + k2 * (0.5 * dt));
            let k4 = rotor.velocity(prof, p + k3 * dt);
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        p
    }

    #[test]
    fn small_orbit_period_matches_linearisation() {
        // near the centre the unit-square field turns at angular rate pi^2
        assert!((unit_period(1.0) - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn unit_pulse_reflects_core_through_centre() {
        let prof = RotorProfile::shared();
        let rotor = Rotor::new(Rect::new(0.2, 0.1, 0.2 + 0.56, 0.1 + 1.0));
        let c = rotor.center();
        for &(dx, dy) in &[(0.05, 0.02), (0.2, -0.3), (-0.25, 0.4), (0.01, 0.45), (0.26, 0.0)] {
            let p = c + Point::new(dx, dy);
            assert!(rotor.level(p) > TAPER_HI);
            let q = rk4(&rotor, prof, p, 1.0, 20_000);
            let reflected = c * 2.0 - p;
            assert!((q - reflected).norm() < 1e-7, "{p:?} -> {q:?}, expected {reflected:?}");
        }
    }

    #[test]
    fn velocity_is_perp_gradient_of_stream() {
        let prof = RotorProfile::shared();
        let rotor = Rotor::new(Rect::new(0.0, 0.0, 0.4, 0.7));
        let d = 1e-6;
        for &(x, y) in &[(0.1, 0.2), (0.33, 0.6), (0.2, 0.35), (0.01, 0.3)] {
            let p = Point::new(x, y);
            let sx = (rotor.stream(prof, p + Point::new(d, 0.0)) - rotor.stream(prof, p - Point::new(d, 0.0))) / (2.0 * d);
            let sy = (rotor.stream(prof, p + Point::new(0.0, d)) - rotor.stream(prof, p - Point::new(0.0, d))) / (2.0 * d);
            let u = rotor.velocity(prof, p);
            assert!((u.x + sy).abs() < 1e-6 && (u.y - sx).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn rests_near_the_edges() {
        let prof = RotorProfile::shared();
        let rotor = Rotor::new(Rect::new(0.0, 0.0, 1.0, 1.0));
        assert_eq!(rotor.velocity(prof, Point::new(0.0001, 0.5)), Point::ZERO);
        assert_eq!(rotor.velocity(prof, Point::new(0.5, 0.9999)), Point::ZERO);
        assert_eq!(rotor.velocity(prof, Point::new(1.5, 0.5)), Point::ZERO);
    }
}
