//! Argument-principle counting on rectangles.
//!
//! The winding number of `f` along a positively oriented rectangle equals
//! the number of zeros minus the number of poles inside, for `f`
//! meromorphic near the closed rectangle and nonvanishing on its boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `[x_lo, x_hi] × [y_lo, y_hi]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi && y_lo < y_hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]"
            )));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.x_lo && z.re < self.x_hi && z.im > self.y_lo && z.im < self.y_hi
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x_lo, self.y_lo),
            Complex64::new(self.x_hi, self.y_lo),
            Complex64::new(self.x_hi, self.y_hi),
            Complex64::new(self.x_lo, self.y_hi),
        ]
    }
}

pub const MAX_DEPTH: u32 = 24;
const MAX_STEP: f64 = PI / 2.0;

/// Winding number of `f` around `rect`, counter-clockwise.
///
/// Each side starts from `samples_min` equal segments; a segment is
/// accepted when its phase increment is below `π/2` and agrees with the
/// increment through its midpoint, otherwise it is bisected, up to
/// [`MAX_DEPTH`] levels.
pub fn winding_number<F>(f: F, rect: &Rect, samples_min: usize) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let corners = rect.corners();
    let samples = samples_min.max(1);
    let mut total = 0.0;
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let mut za = a;
        let mut fa = nonzero(&f, za)?;
        for s in 1..=samples {
            let zb = a + (b - a) * (s as f64 / samples as f64);
            let fb = nonzero(&f, zb)?;
            total += track(&f, za, fa, zb, fb, 0)?;
            za = zb;
            fa = fb;
        }
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.1 {
        return Err(Error::AdaptiveDepthExceeded {
            at: Complex64::new(rect.x_lo, rect.y_lo),
        });
    }
    Ok(rounded as i64)
}

fn nonzero<F>(f: &F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let v = f(z)?;
    if v == Complex64::new(0.0, 0.0) || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::AdaptiveDepthExceeded { at: z });
    }
    Ok(v)
}

fn track<F>(f: &F, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, depth: u32) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let direct = (fb / fa).arg();
    let zm = 0.5 * (za + zb);
    let fm = nonzero(f, zm)?;
    let d1 = (fm / fa).arg();
    let d2 = (fb / fm).arg();
    let consistent = (d1 + d2 - direct).abs() < 1e-9;
    if direct.abs() < MAX_STEP && d1.abs() < MAX_STEP && d2.abs() < MAX_STEP && consistent {
        return Ok(d1 + d2);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::AdaptiveDepthExceeded { at: zm });
    }
    Ok(track(f, za, fa, zm, fm, depth + 1)? + track(f, zm, fm, zb, fb, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Rect {
        Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn identity_has_one_zero() {
        assert_eq!(winding_number(|z| Ok(z), &unit_box(), 4).unwrap(), 1);
    }

    #[test]
    fn simple_pole_counts_minus_one() {
        let f = |z: Complex64| Ok(1.0 / (Complex64::new(0.5, 0.0) - z));
        assert_eq!(winding_number(f, &unit_box(), 4).unwrap(), -1);
    }

    #[test]
    fn double_zero_and_pole_in_lower_box() {
        let zero = Complex64::new(0.2, -0.3);
        let pole = Complex64::new(0.0, -0.4);
        let f = move |z: Complex64| Ok((z - zero) * (z - zero) / (z - pole));
        let lower = Rect::new(-1.0, 1.0, -1.0, 0.0).unwrap();
        assert_eq!(winding_number(f, &lower, 4).unwrap(), 1);
    }

    #[test]
    fn zero_on_boundary_is_an_error() {
        let f = |z: Complex64| Ok(z - Complex64::new(1.0, 0.0));
        assert!(matches!(
            winding_number(f, &unit_box(), 4),
            Err(Error::AdaptiveDepthExceeded { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_rect() {
        assert!(Rect::new(1.0, 1.0, 0.0, 1.0).is_err());
    }
}
