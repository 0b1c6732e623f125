use super::block::{COLUMN_BLOCKS, PULSES_PER_STAGE};
use crate::error::{Error, Result};
use crate::grid::{Rect, HEIGHT, WIDTH};

/// Exact pixel version of the building block: a binary image on an `nx x ny`
/// pixel grid over the box, advanced one stage at a time by permuting pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixerOracleState {
    pub nx: usize,
    pub ny: usize,
    /// Number of stages applied so far.
    pub level: u32,
    /// Row-major, `1` inside the set.
    pub pixels: Vec<u8>,
}

impl MixerOracleState {
    /// The left half of the box.
    pub fn two_cell(nx: usize, ny: usize) -> Result<Self> {
        if nx % 2 != 0 || ny == 0 {
            return Err(Error::Resolution(format!("{nx}x{ny} cannot hold the two-cell indicator exactly")));
        }
        let pixels = (0..ny).flat_map(|_| (0..nx).map(move |i| u8::from(i < nx / 2))).collect();
        Ok(MixerOracleState { nx, ny, level: 0, pixels })
    }

    pub fn filled(nx: usize, ny: usize, value: u8) -> Self {
        MixerOracleState { nx, ny, level: 0, pixels: vec![value; nx * ny] }
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().map(|&p| p as usize).sum()
    }

    /// Whether the next stage can be applied exactly.
    pub fn can_step(&self) -> bool {
        let k = 5usize.pow(self.level);
        self.nx % (10 * k) == 0 && self.ny % (5 * k) == 0
    }

    /// Applies stage `level` inside every pentadic cell of that level.
    pub fn step(&self) -> Result<Self> {
        if !self.can_step() {
            return Err(Error::Resolution(format!(
                "{}x{} pixels cannot resolve stage {} (needs multiples of {} and {})",
                self.nx,
                self.ny,
                self.level,
                2 * 5usize.pow(self.level + 1),
                5usize.pow(self.level + 1)
            )));
        }
        let k = 5usize.pow(self.level);
        let cw = self.nx / k;
        let ch = self.ny / k;
        let col = cw / 10;
        let mut cur = self.pixels.clone();
        for blocks in COLUMN_BLOCKS.iter().take(PULSES_PER_STAGE) {
            let mut next = cur.clone();
            for cj in 0..k {
                for ci in 0..k {
                    let (x0, y0) = (ci * cw, cj * ch);
                    for &(c0, c1) in blocks.iter() {
                        let (a0, a1) = (x0 + c0 as usize * col, x0 + c1 as usize * col);
                        let (b0, b1) = (y0, y0 + ch);
                        for y in b0..b1 {
                            for x in a0..a1 {
                                let (sx, sy) = (a0 + a1 - 1 - x, b0 + b1 - 1 - y);
                                next[y * self.nx + x] = cur[sy * self.nx + sx];
                            }
                        }
                    }
                }
            }
            cur = next;
        }
        Ok(MixerOracleState { nx: self.nx, ny: self.ny, level: self.level + 1, pixels: cur })
    }

    /// `(set pixels, total pixels)` in each pentadic cell of `level`, row-major.
    pub fn cell_counts(&self, level: u32) -> Result<Vec<(usize, usize)>> {
        let k = 5usize.pow(level);
        if self.nx % k != 0 || self.ny % k != 0 {
            return Err(Error::Resolution(format!("{}x{} pixels do not tile level {level}", self.nx, self.ny)));
        }
        let (cw, ch) = (self.nx / k, self.ny / k);
        let mut counts = vec![(0usize, cw * ch); k * k];
        for y in 0..self.ny {
            for x in 0..self.nx {
                counts[(y / ch) * k + x / cw].0 += self.pixels[y * self.nx + x] as usize;
            }
        }
        Ok(counts)
    }

    /// Whether every level cell holds exactly half of its pixels.
    pub fn is_balanced(&self, level: u32) -> Result<bool> {
        Ok(self.cell_counts(level)?.iter().all(|&(on, total)| 2 * on == total))
    }
}

/// The set reached after `n` ideal stages: the left half of every level-`n` cell.
pub fn mixed_configuration(n: u32) -> Vec<Rect> {
    let k = 5usize.pow(n);
    let (w, h) = (WIDTH / k as f64, HEIGHT / k as f64);
    (0..k)
        .flat_map(|j| (0..k).map(move |i| Rect::new(i as f64 * w, j as f64 * h, (i as f64 + 0.5) * w, (j + 1) as f64 * h)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_balances_level_one() {
        let s = MixerOracleState::two_cell(50, 35).unwrap();
        let s1 = s.step().unwrap();
        assert!(s1.is_balanced(1).unwrap());
        assert_eq!(s1.count(), s.count());
    }

    #[test]
    fn oracle_reaches_ideal_configuration() {
        let mut s = MixerOracleState::two_cell(250, 125).unwrap();
        for n in 1..=2u32 {
            s = s.step().unwrap();
            let k = 5usize.pow(n);
            let cw = 250 / k;
            for y in 0..125 {
                for x in 0..250 {
                    let expected = u8::from(x % cw < cw / 2);
                    assert_eq!(s.pixels[y * 250 + x], expected, "stage {n} pixel ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn constants_are_fixed() {
        let s = MixerOracleState::filled(50, 25, 1);
        assert_eq!(s.step().unwrap().pixels, s.pixels);
    }

    #[test]
    fn resolution_exhaustion() {
        let s = MixerOracleState::two_cell(20, 10).unwrap().step().unwrap();
        assert!(s.step().is_err());
    }
}
