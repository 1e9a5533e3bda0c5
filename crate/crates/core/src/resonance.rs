//! The resonance equation `f(E) = S_L(E) + e^{-iθ(E)} = 0`.
//!
//! Near the bottom of a band the zeros sit at distance `~ L^-3` below the
//! Dirichlet eigenvalues, far below the resolution of an absolute `f64`
//! coordinate near `|E| ~ 1`. Newton therefore runs in coordinates anchored
//! at the nearest eigenvalue, `E = λ_a + w`, where the pole term is the
//! exactly representable `-a_a / w`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{BandStructure, EdgeData, EdgeSide};
use crate::spectrum::{edge_ladder, SpectralData};
use crate::summation::{compensated_complex_sum, compensated_sum};
use crate::winding::{winding_number, Rect};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Poles closer than this (times the spectral scale) are treated as hits.
pub const POLE_TOL: f64 = 1e-14;

/// `θ(E) = -Arccos(E/2)`, principal branch; cuts `(-∞,-2] ∪ [2,∞)`.
pub fn theta(e: Complex64) -> Result<Complex64> {
    if e.im == 0.0 && e.re.abs() >= 2.0 {
        return Err(Error::OnBranchCut { energy: e.re });
    }
    Ok(-(e * 0.5).acos())
}

/// `θ'(E) = 1/sqrt(4 - E²)`.
pub fn theta_prime(e: Complex64) -> Complex64 {
    1.0 / (4.0 - e * e).sqrt()
}

/// `e^{-iθ(E)}`.
pub fn exp_term(e: Complex64) -> Result<Complex64> {
    Ok((-I * theta(e)?).exp())
}

fn nearest_index(sd: &SpectralData, x: f64) -> usize {
    let l = &sd.lambdas;
    let i = l.partition_point(|&v| v < x);
    if i == 0 {
        0
    } else if i == l.len() {
        l.len() - 1
    } else if x - l[i - 1] <= l[i] - x {
        i - 1
    } else {
        i
    }
}

/// `S_L(E) = Σ a_k / (λ_k - E)`, compensated.
pub fn s_l(sd: &SpectralData, e: Complex64) -> Result<Complex64> {
    let k = nearest_index(sd, e.re);
    if (Complex64::new(sd.lambdas[k], 0.0) - e).norm() <= POLE_TOL * sd.scale() {
        return Err(Error::PoleHit { energy: e, pole: sd.lambdas[k] });
    }
    Ok(compensated_complex_sum(sd.len(), |k| {
        sd.weights_end[k] / (Complex64::new(sd.lambdas[k], 0.0) - e)
    }))
}

/// `Im S_L(E)` via the identity `Im S_L(E) = Im E · Σ a_k / |λ_k - E|²`.
pub fn im_s_l_direct(sd: &SpectralData, e: Complex64) -> f64 {
    let terms: Vec<f64> = sd
        .lambdas
        .iter()
        .zip(&sd.weights_end)
        .map(|(&l, &a)| a / (Complex64::new(l, 0.0) - e).norm_sqr())
        .collect();
    e.im * compensated_sum(&terms)
}

/// `f` and `f'` at `λ_anchor + w`.
pub fn f_anchored(sd: &SpectralData, anchor: usize, w: Complex64) -> Result<(Complex64, Complex64)> {
    let lam_a = sd.lambdas[anchor];
    let e = Complex64::new(lam_a, 0.0) + w;
    if w.norm() <= POLE_TOL * sd.scale() {
        return Err(Error::PoleHit { energy: e, pole: lam_a });
    }
    let denom = |k: usize| {
        if k == anchor {
            -w
        } else {
            Complex64::new(sd.lambdas[k] - lam_a, 0.0) - w
        }
    };
    let s = compensated_complex_sum(sd.len(), |k| sd.weights_end[k] / denom(k));
    let ds = compensated_complex_sum(sd.len(), |k| {
        let d = denom(k);
        sd.weights_end[k] / (d * d)
    });
    let x = exp_term(e)?;
    Ok((s + x, ds - I * theta_prime(e) * x))
}

/// `(f(E), f'(E))`.
pub fn f_and_fprime(sd: &SpectralData, e: Complex64) -> Result<(Complex64, Complex64)> {
    let a = nearest_index(sd, e.re);
    f_anchored(sd, a, e - sd.lambdas[a])
}

pub fn f_value(sd: &SpectralData, e: Complex64) -> Result<Complex64> {
    Ok(f_and_fprime(sd, e)?.0)
}

/// `α_n` and the seed offset `a_n / α_n` for the eigenvalue with global
/// index `g`.
fn alpha_and_offset(sd: &SpectralData, g: usize) -> Result<(Complex64, Complex64)> {
    let lam = sd.lambdas[g];
    let scale = sd.scale();
    let mut terms = Vec::with_capacity(sd.len() - 1);
    for (k, (&l, &a)) in sd.lambdas.iter().zip(&sd.weights_end).enumerate() {
        if k == g {
            continue;
        }
        let d = l - lam;
        if d.abs() <= POLE_TOL * scale {
            return Err(Error::PoleHit {
                energy: Complex64::new(lam, 0.0),
                pole: l,
            });
        }
        terms.push(a / d);
    }
    let alpha = compensated_sum(&terms) + exp_term(Complex64::new(lam, 0.0))?;
    Ok((alpha, sd.weights_end[g] / alpha))
}

/// `α_n = Σ_{k≠n} a_k/(λ_k - λ_n) + e^{-iθ(λ_n)}` and the seed
/// `z̃_n = λ_n + a_n/α_n` for the `n`-th eigenvalue of `band`.
pub fn alpha_and_seed(sd: &SpectralData, band: usize, n: usize) -> Result<(Complex64, Complex64)> {
    let idx = sd.in_band(band);
    let &g = idx.get(n).ok_or(Error::IndexOutOfRange {
        index: n as i64,
        max: idx.len() as i64 - 1,
    })?;
    let (alpha, off) = alpha_and_offset(sd, g)?;
    Ok((alpha, sd.lambdas[g] + off))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonResult {
    pub anchor: usize,
    /// `z - λ_anchor`, carried at full relative precision.
    pub w: Complex64,
    pub z: Complex64,
    pub residual: f64,
    pub iters: usize,
}

fn reanchor(sd: &SpectralData, a: usize, w: Complex64) -> (usize, Complex64) {
    let b = nearest_index(sd, sd.lambdas[a] + w.re);
    if b == a {
        (a, w)
    } else {
        (b, w + (sd.lambdas[a] - sd.lambdas[b]))
    }
}

/// Damped Newton from `λ_anchor + w0`: full step, halved up to 8 times until
/// `|f|` decreases, with iterates kept in the lower half-plane.
pub fn newton_refine_anchored(
    sd: &SpectralData,
    anchor: usize,
    w0: Complex64,
    max_iter: usize,
    tol: f64,
) -> Result<NewtonResult> {
    if !(w0.im < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Newton start {w0} not in the lower half-plane"
        )));
    }
    let (mut a, mut w) = reanchor(sd, anchor, w0);
    let (mut fv, mut fp) = f_anchored(sd, a, w)?;
    let mut r = fv.norm();
    let done = |a: usize, w: Complex64, r: f64, iters: usize| NewtonResult {
        anchor: a,
        w,
        z: sd.lambdas[a] + w,
        residual: r,
        iters,
    };
    for it in 0..max_iter {
        if r <= tol {
            return Ok(done(a, w, r, it));
        }
        let step = fv / fp;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=8 {
            let mut wn = w - step * t;
            if !(wn.im < 0.0) {
                wn.im = 0.5 * w.im;
            }
            let (an, wn) = reanchor(sd, a, wn);
            if let Ok((f2, fp2)) = f_anchored(sd, an, wn) {
                if f2.norm() < r {
                    (a, w, fv, fp, r) = (an, wn, f2, fp2, f2.norm());
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r <= tol {
        return Ok(done(a, w, r, max_iter));
    }
    Err(Error::NoConvergence {
        last: sd.lambdas[a] + w,
        residual: r,
    })
}

/// [`newton_refine_anchored`] from an absolute starting point.
pub fn newton_refine(sd: &SpectralData, seed: Complex64, max_iter: usize, tol: f64) -> Result<NewtonResult> {
    let a = nearest_index(sd, seed.re);
    newton_refine_anchored(sd, a, seed - sd.lambdas[a], max_iter, tol)
}

fn straddles_axis(rect: &Rect) -> bool {
    rect.y_lo <= 0.0 && rect.y_hi >= 0.0
}

/// Winding number of `f` around `rect`, i.e. zeros minus poles inside.
pub fn winding_count(sd: &SpectralData, rect: &Rect, samples_min: usize) -> Result<i64> {
    if straddles_axis(rect) {
        if rect.x_lo <= -2.0 || rect.x_hi >= 2.0 {
            let at = if rect.x_lo <= -2.0 { rect.x_lo } else { rect.x_hi };
            return Err(Error::OnBranchCut { energy: at });
        }
        let guard = 1e-10 * sd.scale();
        for x in [rect.x_lo, rect.x_hi] {
            let k = nearest_index(sd, x);
            if (sd.lambdas[k] - x).abs() < guard {
                return Err(Error::EdgeTooCloseToEigenvalue {
                    x,
                    lambda: sd.lambdas[k],
                });
            }
        }
    }
    winding_number(|e| f_value(sd, e), rect, samples_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeftConvention {
    /// `λ_{-1} := 2E₀ - λ_0`.
    EdgeReflected,
    /// `λ_{-1} := 2(E₀ - ε) - λ_0`.
    EpsShifted,
}

/// `[x_lo, x_hi] - i[0, depth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub depth: f64,
    pub n: usize,
    pub convention_left: LeftConvention,
}

impl ResonanceBox {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_lo && z.re <= self.x_hi && z.im <= 0.0 && z.im >= -self.depth
    }
}

fn eigenvalues_inside(sd: &SpectralData, x_lo: f64, x_hi: f64) -> Vec<f64> {
    let lo = sd.lambdas.partition_point(|&v| v <= x_lo);
    let hi = sd.lambdas.partition_point(|&v| v < x_hi);
    sd.lambdas[lo..hi].to_vec()
}

/// `0.1 ×` the smallest distance from an interior eigenvalue to a side;
/// `0.1 ×` the width when the interval holds none.
pub fn default_delta(sd: &SpectralData, bx: &ResonanceBox) -> f64 {
    let inside = eigenvalues_inside(sd, bx.x_lo, bx.x_hi);
    let d = inside
        .iter()
        .map(|&l| (l - bx.x_lo).min(bx.x_hi - l))
        .fold(bx.x_hi - bx.x_lo, f64::min);
    0.1 * d
}

/// Default number of initial segments per rectangle side.
pub const SAMPLES_MIN: usize = 16;

/// Resonances in the closed lower box: the top edge is lifted to `+delta`
/// (no zeros live in the upper half-plane) and the poles crossed on the way
/// are added back, `Z = W + P`.
pub fn count_in_box(sd: &SpectralData, bx: &ResonanceBox, delta: Option<f64>) -> Result<i64> {
    let delta = delta.unwrap_or_else(|| default_delta(sd, bx));
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    let rect = Rect::new(bx.x_lo, bx.x_hi, -bx.depth, delta)?;
    let w = winding_count(sd, &rect, SAMPLES_MIN)?;
    Ok(w + eigenvalues_inside(sd, bx.x_lo, bx.x_hi).len() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub band: usize,
    pub n: usize,
    pub global_index: usize,
    pub lambda_n: f64,
    pub a_n: f64,
    pub alpha_n: Complex64,
    pub seed: Complex64,
    pub z: Complex64,
    /// `z̃_n - λ_n`.
    pub seed_offset: Complex64,
    /// `z_n - λ_n`; differences against `seed_offset` keep full precision.
    pub offset: Complex64,
    pub residual: f64,
    pub newton_iters: usize,
    #[serde(rename = "box")]
    pub bbox: ResonanceBox,
    /// Zeros counted in `bbox`.
    pub box_count: i64,
    /// `z_n` lies in the shallow box of depth `C0 (n+1)/L²`.
    pub in_m_box: bool,
    pub winding_verified: bool,
}

impl Resonance {
    pub fn width(&self) -> f64 {
        self.offset.im.abs()
    }

    /// `|z_n - z̃_n|`.
    pub fn seed_error(&self) -> f64 {
        (self.offset - self.seed_offset).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eps: f64,
    pub c0: f64,
    pub c1: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps: 0.2,
            c0: 50.0,
            c1: 10.0,
            tol: 1e-11,
            max_iter: 50,
        }
    }
}

impl SweepConfig {
    fn validate(&self, l: usize) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 0.3) {
            return Err(Error::InvalidArgument(format!("eps {} outside (0, 0.3]", self.eps)));
        }
        if !(self.c0 > 0.0 && self.c1 > 0.0 && self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument("C0, C1, tol and max_iter must be positive".into()));
        }
        if (l as f64) * self.eps / self.c1 < 3.0 {
            return Err(Error::InvalidArgument(format!(
                "L·eps/C1 = {} below 3",
                l as f64 * self.eps / self.c1
            )));
        }
        Ok(())
    }

    /// Largest swept index, `⌊eps·L/C1⌋`.
    pub fn n_max(&self, l: usize) -> usize {
        (self.eps * l as f64 / self.c1).floor() as usize
    }
}

fn require_generic(edge: &EdgeData) -> Result<()> {
    if edge.classification.is_generic() {
        Ok(())
    } else {
        Err(Error::NonGenericEdge {
            energy: edge.e0,
            class: edge.classification.to_string(),
        })
    }
}

/// Box `B_{n,ε}` around the `n`-th ladder eigenvalue, with `λ_{-1}`
/// reflected through the edge.
fn edge_box(sd: &SpectralData, edge: &EdgeData, ladder: &[usize], n: usize, depth: f64) -> Result<ResonanceBox> {
    if n + 1 >= ladder.len() {
        return Err(Error::IndexOutOfRange {
            index: n as i64,
            max: ladder.len() as i64 - 2,
        });
    }
    let lam = |i: usize| sd.lambdas[ladder[i]];
    let prev = if n == 0 { 2.0 * edge.e0 - lam(0) } else { lam(n - 1) };
    let (m1, m2) = (0.5 * (prev + lam(n)), 0.5 * (lam(n) + lam(n + 1)));
    Ok(ResonanceBox {
        x_lo: m1.min(m2),
        x_hi: m1.max(m2),
        depth,
        n,
        convention_left: LeftConvention::EdgeReflected,
    })
}

/// Seeds, refines and counts the resonance attached to the `n`-th
/// eigenvalue from `edge`.
pub fn resolve_resonance(sd: &SpectralData, edge: &EdgeData, n: usize, cfg: &SweepConfig) -> Result<Resonance> {
    let ladder = edge_ladder(sd, edge)?;
    resolve_on_ladder(sd, edge, &ladder, n, cfg)
}

fn resolve_on_ladder(
    sd: &SpectralData,
    edge: &EdgeData,
    ladder: &[usize],
    n: usize,
    cfg: &SweepConfig,
) -> Result<Resonance> {
    let bx = edge_box(sd, edge, ladder, n, cfg.eps.powi(5))?;
    let g = ladder[n];
    let lam = sd.lambdas[g];
    let (alpha, seed_offset) = alpha_and_offset(sd, g)?;
    let nr = newton_refine_anchored(sd, g, seed_offset, cfg.max_iter, cfg.tol)?;
    let offset = nr.w + (sd.lambdas[nr.anchor] - lam);
    let z = lam + offset;
    let box_count = count_in_box(sd, &bx, None)?;
    let m_depth = cfg.c0 * (n + 1) as f64 / (sd.l as f64).powi(2);
    let in_m_box = z.re >= bx.x_lo && z.re <= bx.x_hi && offset.im < 0.0 && offset.im >= -m_depth;
    Ok(Resonance {
        band: edge.band_index,
        n,
        global_index: g,
        lambda_n: lam,
        a_n: sd.weights_end[g],
        alpha_n: alpha,
        seed: lam + seed_offset,
        z,
        seed_offset,
        offset,
        residual: nr.residual,
        newton_iters: nr.iters,
        bbox: bx,
        box_count,
        in_m_box,
        winding_verified: box_count == 1 && bx.contains(z) && offset.im < 0.0,
    })
}

/// Resonances for `n = 0..=⌊eps·L/C1⌋` at a generic edge, sorted by `n`.
/// Each record says whether its box held exactly one zero; use
/// [`require_verified`] to turn a miss into an error.
pub fn sweep_band_edge(
    sd: &SpectralData,
    _bs: &BandStructure,
    edge: &EdgeData,
    cfg: &SweepConfig,
) -> Result<Vec<Resonance>> {
    require_generic(edge)?;
    cfg.validate(sd.l)?;
    let ladder = edge_ladder(sd, edge)?;
    (0..=cfg.n_max(sd.l))
        .into_par_iter()
        .map(|n| resolve_on_ladder(sd, edge, &ladder, n, cfg))
        .collect()
}

pub fn require_verified(res: &[Resonance]) -> Result<()> {
    match res.iter().find(|r| !r.winding_verified) {
        None => Ok(()),
        Some(r) => Err(Error::UniquenessFailed {
            n: r.n,
            count: r.box_count,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRegion {
    pub e0: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub depth: f64,
    pub count: i64,
    pub free: bool,
}

/// Counts resonances in `[E₀-ε, E₀] - i[0, ε⁵]` (mirrored for a right edge).
pub fn free_region_check(
    sd: &SpectralData,
    bs: &BandStructure,
    edge: &EdgeData,
    eps: f64,
) -> Result<FreeRegion> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside (0, 0.5)")));
    }
    let (x_lo, x_hi) = match edge.side {
        EdgeSide::Left => (edge.e0 - eps, edge.e0),
        EdgeSide::Right => (edge.e0, edge.e0 + eps),
    };
    let gap_ok = bs
        .bands
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != edge.band_index)
        .all(|(_, b)| b.hi < x_lo || b.lo > x_hi);
    if !gap_ok {
        return Err(Error::InvalidArgument(format!(
            "gap next to the edge at {} narrower than eps = {eps}",
            edge.e0
        )));
    }
    if let Some(&l) = eigenvalues_inside(sd, x_lo - 1e-12, x_hi + 1e-12).first() {
        return Err(Error::EigenvalueInInterval { lambda: l });
    }
    let depth = eps.powi(5);
    let bx = ResonanceBox {
        x_lo,
        x_hi,
        depth,
        n: 0,
        convention_left: LeftConvention::EpsShifted,
    };
    let count = count_in_box(sd, &bx, Some(depth))?;
    Ok(FreeRegion {
        e0: edge.e0,
        x_lo,
        x_hi,
        depth,
        count,
        free: count == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImSReport {
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Region is `[x_lo, x_hi] - i[y_top, y_bottom]` in depth terms.
    pub y_top: f64,
    pub y_bottom: f64,
    pub max_abs_im_s: f64,
    pub min_abs_im_exp: f64,
}

impl ImSReport {
    /// `|Im S_L|` stays below `|Im e^{-iθ}|`, so `f` cannot vanish there.
    pub fn certifies_no_root(&self) -> bool {
        self.max_abs_im_s < self.min_abs_im_exp
    }
}

/// Grid maximum of `|Im S_L|` over
/// `A_{n,ε} = [m_{n-1}, m_n] - i[C0 (n+1)/L², ε⁵]`.
pub fn im_s_grid_max(
    sd: &SpectralData,
    edge: &EdgeData,
    n: usize,
    eps: f64,
    c0: f64,
    grid: usize,
) -> Result<ImSReport> {
    if grid < 2 {
        return Err(Error::InvalidArgument("grid must be at least 2".into()));
    }
    let top = c0 * (n + 1) as f64 / (sd.l as f64).powi(2);
    let bottom = eps.powi(5);
    if !(top < bottom) {
        return Err(Error::EmptyRegion(format!(
            "C0(n+1)/L² = {top} is not below eps⁵ = {bottom}"
        )));
    }
    let ladder = edge_ladder(sd, edge)?;
    let bx = edge_box(sd, edge, &ladder, n, bottom)?;
    let pts: Vec<Complex64> = (0..grid)
        .flat_map(|i| {
            let x = bx.x_lo + (bx.x_hi - bx.x_lo) * i as f64 / (grid - 1) as f64;
            (0..grid).map(move |k| {
                let y = top + (bottom - top) * k as f64 / (grid - 1) as f64;
                Complex64::new(x, -y)
            })
        })
        .collect();
    let vals = pts
        .par_iter()
        .map(|&e| Ok((s_l(sd, e)?.im.abs(), exp_term(e)?.im.abs())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImSReport {
        n,
        x_lo: bx.x_lo,
        x_hi: bx.x_hi,
        y_top: top,
        y_bottom: bottom,
        max_abs_im_s: vals.iter().map(|v| v.0).fold(0.0, f64::max),
        min_abs_im_exp: vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_pole() -> SpectralData {
        SpectralData {
            l: 0,
            p: 1,
            j: 0,
            n_periods: 0,
            lambdas: vec![0.0],
            weights_end: vec![1.0],
            weights_start: vec![1.0],
            band_of: vec![Some(0)],
            local_index: vec![Some(0)],
        }
    }

    #[test]
    fn theta_values() {
        assert!((theta(Complex64::new(0.0, 0.0)).unwrap() + PI / 2.0).norm() < 1e-15);
        let e = 2.0 * (-0.3f64).cos();
        assert!((theta(Complex64::new(e, 0.0)).unwrap() - (-0.3)).norm() < 1e-13);
        let e = Complex64::new(1.0, -0.1);
        let t = theta(e).unwrap();
        assert!((2.0 * t.cos() - e).norm() < 1e-13);
        assert!(t.re > -PI && t.re < 0.0);
        assert!(matches!(theta(Complex64::new(2.0, 0.0)), Err(Error::OnBranchCut { .. })));
        assert!(theta(Complex64::new(0.3, 0.2)).unwrap().im > 0.0);
    }

    #[test]
    fn single_term_sum() {
        let sd = one_pole();
        let s = s_l(&sd, Complex64::new(0.0, -1.0)).unwrap();
        assert!((s - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(matches!(s_l(&sd, Complex64::new(0.0, 0.0)), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let sd = SpectralData {
            lambdas: vec![-0.5, 0.1, 0.7],
            weights_end: vec![0.2, 0.5, 0.3],
            weights_start: vec![0.2, 0.5, 0.3],
            l: 2,
            ..one_pole()
        };
        let e = Complex64::new(0.3, -0.2);
        let (_, fp) = f_and_fprime(&sd, e).unwrap();
        let h = 1e-6;
        let fd = (f_value(&sd, e + h).unwrap() - f_value(&sd, e - h).unwrap()) / (2.0 * h);
        assert!((fd - fp).norm() / fp.norm() < 1e-8);
    }

    fn dimer(l: usize) -> (SpectralData, EdgeData) {
        use crate::floquet::{band_structure, classify_edge, PeriodicPotential};
        let v = PeriodicPotential::new(vec![0.0, 3.0]).unwrap();
        let bs = band_structure(&v).unwrap();
        let sd = crate::spectrum::spectral_data(&v, &bs, l, 0).unwrap();
        let edge = classify_edge(&v, &bs, -1.0, l % 2).unwrap();
        (sd, edge)
    }

    #[test]
    fn newton_stays_put_on_converged_zero() {
        let (sd, _) = dimer(40);
        let (_, seed) = alpha_and_seed(&sd, 0, 2).unwrap();
        let r = newton_refine(&sd, seed, 50, 1e-12).unwrap();
        assert!(r.residual <= 1e-12 && r.z.im < 0.0);
        let again = newton_refine_anchored(&sd, r.anchor, r.w, 50, 1e-12).unwrap();
        assert_eq!(again.iters, 0);
        assert_eq!(again.w, r.w);
    }

    #[test]
    fn box_in_upper_half_plane_is_empty() {
        let sd = one_pole();
        let rect = Rect::new(-0.5, 0.5, 0.1, 0.3).unwrap();
        assert_eq!(winding_count(&sd, &rect, 8).unwrap(), 0);
    }

    #[test]
    fn sides_near_eigenvalue_are_rejected() {
        let sd = one_pole();
        let rect = Rect::new(0.0, 0.5, -0.1, 0.1).unwrap();
        assert!(matches!(
            winding_count(&sd, &rect, 8),
            Err(Error::EdgeTooCloseToEigenvalue { .. })
        ));
        let rect = Rect::new(1.0, 2.5, -0.1, 0.1).unwrap();
        assert!(matches!(winding_count(&sd, &rect, 8), Err(Error::OnBranchCut { .. })));
    }

    #[test]
    fn lone_pole_has_no_resonance() {
        // 1 + e^{-2iθ} never vanishes, so -1/E + e^{-iθ(E)} has no zeros:
        // the winding -1 is cancelled by the enclosed pole.
        let sd = one_pole();
        let bx = ResonanceBox {
            x_lo: -1.0,
            x_hi: 1.0,
            depth: 1.5,
            n: 0,
            convention_left: LeftConvention::EdgeReflected,
        };
        assert_eq!(count_in_box(&sd, &bx, None).unwrap(), 0);
    }

    #[test]
    fn sweep_on_small_section() {
        let (sd, edge) = dimer(60);
        let cfg = SweepConfig {
            c1: 4.0,
            ..SweepConfig::default()
        };
        let res = sweep_band_edge(&sd, &crate::floquet::band_structure(
            &crate::floquet::PeriodicPotential::new(vec![0.0, 3.0]).unwrap()).unwrap(), &edge, &cfg).unwrap();
        assert_eq!(res.len(), 4);
        for (n, r) in res.iter().enumerate() {
            assert_eq!(r.n, n);
            assert!(r.z.im < 0.0 && r.seed.im < 0.0);
            assert!(r.residual <= 1e-11);
        }
    }
}
