//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection, Newton
//! polish on the pivot recurrence, and inverse iteration for eigenvectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

const PIVOT_GUARD: f64 = 1e-300;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn spectral_radius_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x` (negative LDLᵀ pivots).
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let q_safe = if q.abs() < PIVOT_GUARD {
                PIVOT_GUARD.copysign(q)
            } else {
                q
            };
            q = (self.diag[i] - x) - self.off[i - 1] * self.off[i - 1] / q_safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in increasing order, each to absolute accuracy `abs_tol`.
    pub fn eigenvalues(&self, abs_tol: f64) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let (lo, hi) = (lo - pad, hi + pad);
        (0..self.dim())
            .into_par_iter()
            .map(|k| {
                let (a, b) = self.bisect(k, lo, hi, abs_tol);
                self.newton_polish(0.5 * (a + b), a, b)
            })
            .collect()
    }

    /// Bracket `[a, b]` with `count(a) ≤ k < count(b)` and `b - a ≤ tol`.
    fn bisect(&self, k: usize, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.sturm_count(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        (a, b)
    }

    /// Newton steps on `det(T - x)` using `d/dx log det = Σ q_i'/q_i`,
    /// kept inside the bisection bracket.
    fn newton_polish(&self, mut x: f64, a: f64, b: f64) -> f64 {
        for _ in 0..4 {
            let mut q = self.diag[0] - x;
            let mut dq = -1.0;
            if q == 0.0 {
                return x;
            }
            let mut logd = dq / q;
            for i in 1..self.dim() {
                let e2 = self.off[i - 1] * self.off[i - 1];
                let q_prev = q;
                q = (self.diag[i] - x) - e2 / q_prev;
                dq = -1.0 + e2 * dq / (q_prev * q_prev);
                if q == 0.0 {
                    return x;
                }
                logd += dq / q;
            }
            if !logd.is_finite() || logd == 0.0 {
                return x;
            }
            let next = x - 1.0 / logd;
            if !(next >= a && next <= b) || next == x {
                return x;
            }
            x = next;
        }
        x
    }

    /// Solves `(T - shift) x = rhs` by Gaussian elimination with partial
    /// pivoting; tiny pivots are replaced by `guard`.
    fn shifted_solve(&self, shift: f64, rhs: &[f64], guard: f64) -> Vec<f64> {
        let n = self.dim();
        if n == 1 {
            let d = self.diag[0] - shift;
            let d = if d.abs() < guard { guard } else { d };
            return vec![rhs[0] / d];
        }
        // Row i after elimination: u0[i] x_i + u1[i] x_{i+1} + u2[i] x_{i+2}.
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut y = rhs.to_vec();

        let mut cur = [self.diag[0] - shift, self.off[0], 0.0];
        for i in 0..n - 1 {
            let sub = self.off[i];
            let next = [
                sub,
                self.diag[i + 1] - shift,
                if i + 2 < n { self.off[i + 1] } else { 0.0 },
            ];
            if cur[0].abs() >= sub.abs() {
                let piv = if cur[0].abs() < guard { guard.copysign(cur[0]) } else { cur[0] };
                let m = next[0] / piv;
                u0[i] = piv;
                u1[i] = cur[1];
                u2[i] = cur[2];
                y[i + 1] -= m * y[i];
                cur = [next[1] - m * cur[1], next[2] - m * cur[2], 0.0];
            } else {
                let m = cur[0] / next[0];
                u0[i] = next[0];
                u1[i] = next[1];
                u2[i] = next[2];
                y.swap(i, i + 1);
                y[i + 1] -= m * y[i];
                cur = [cur[1] - m * next[1], cur[2] - m * next[2], 0.0];
            }
        }
        u0[n - 1] = if cur[0].abs() < guard { guard.copysign(cur[0]) } else { cur[0] };

        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }

    /// `‖(T - λ) x‖_∞`.
    pub fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut r = (self.diag[i] - lambda) * x[i];
                if i > 0 {
                    r += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    r += self.off[i] * x[i + 1];
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Unit eigenvector for the simple eigenvalue `lambda` by two steps of
    /// inverse iteration from a seeded random start, retried once with a
    /// fresh start when the residual exceeds `1e-8`.
    pub fn eigenvector(&self, index: usize, lambda: f64, seed: u64) -> Result<Vec<f64>> {
        let n = self.dim();
        let norm_t = self.spectral_radius_bound().max(1.0);
        let guard = f64::EPSILON * norm_t;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for _attempt in 0..2 {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            normalize(&mut x);
            for _ in 0..2 {
                x = self.shifted_solve(lambda, &x, guard);
                if !normalize(&mut x) {
                    break;
                }
            }
            if x.iter().all(|v| v.is_finite()) && self.residual(lambda, &x) <= 1e-8 * norm_t {
                return Ok(x);
            }
        }
        Err(Error::ConvergenceFailure { index })
    }
}

fn normalize(x: &mut [f64]) -> bool {
    let s = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if s == 0.0 || !s.is_finite() {
        return false;
    }
    let norm = x.iter().map(|v| (v / s) * (v / s)).sum::<f64>().sqrt() * s;
    x.iter_mut().for_each(|v| *v /= norm);
    true
}
