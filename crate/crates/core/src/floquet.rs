//! Transfer-matrix algebra of the periodic operator on `ℤ`.
//!
//! For energy `E` the eigenvalue equation `u(n-1) + u(n+1) + v_n u(n) = E u(n)`
//! propagates `(u(n), u(n-1))` by `T_n(E) = ((E - v_n, -1), (1, 0))`.
//! Products of one period give the monodromy matrix whose trace, the
//! discriminant `Δ(E)`, determines the bands `{ |Δ| ≤ 2 }`.
//!
//! Entry convention for products: `T_{k-1}···T_0` has top row
//! `(a_k, b_k)` and bottom row `(a_{k-1}, b_{k-1})`; the monodromy
//! `T_{k+p-1}···T_k` has top row `(a^k_p, b^k_p)` and bottom row
//! `(a^k_{p-1}, b^k_{p-1})`.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// A `p`-periodic potential given by its values on one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotential {
    values: Vec<f64>,
}

impl PeriodicPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPotential("period must be at least 1".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value {v}")));
        }
        Ok(Self { values })
    }

    /// Builds from an explicit period, checking it matches the value count.
    pub fn with_period(period: usize, values: Vec<f64>) -> Result<Self> {
        if period != values.len() {
            return Err(Error::InvalidPotential(format!(
                "period {period} but {} values",
                values.len()
            )));
        }
        Self::new(values)
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `v_{n mod p}`.
    pub fn at(&self, n: usize) -> f64 {
        self.values[n % self.values.len()]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl Matrix2 {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn max_abs(&self) -> f64 {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, r: Matrix2) -> Matrix2 {
        Matrix2 {
            m11: self.m11 * r.m11 + self.m12 * r.m21,
            m12: self.m11 * r.m12 + self.m12 * r.m22,
            m21: self.m21 * r.m11 + self.m22 * r.m21,
            m22: self.m21 * r.m12 + self.m22 * r.m22,
        }
    }
}

/// `T_l(E) = ((E - v_{l mod p}, -1), (1, 0))`.
pub fn transfer_matrix(v: &PeriodicPotential, e: Complex64, l: usize) -> Matrix2 {
    Matrix2::new(
        e - v.at(l),
        Complex64::new(-1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// `T_{k-1}(E)···T_0(E)`, the identity for `k = 0`.
pub fn product_matrix(v: &PeriodicPotential, e: Complex64, k: usize) -> Result<Matrix2> {
    let p = v.period();
    if k > p {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            max: p as i64,
        });
    }
    Ok(ordered_product(v, e, 0, k))
}

/// `T_{k+p-1}(E)···T_k(E)`.
pub fn monodromy(v: &PeriodicPotential, e: Complex64, k: usize) -> Result<Matrix2> {
    let p = v.period();
    if k >= p {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            max: p as i64 - 1,
        });
    }
    Ok(ordered_product(v, e, k, k + p))
}

fn ordered_product(v: &PeriodicPotential, e: Complex64, from: usize, to: usize) -> Matrix2 {
    (from..to).fold(Matrix2::identity(), |acc, l| transfer_matrix(v, e, l) * acc)
}

/// `Δ(E) = tr T_{p-1}···T_0`.
pub fn discriminant(v: &PeriodicPotential, e: Complex64) -> Complex64 {
    ordered_product(v, e, 0, v.period()).trace()
}

/// Real-energy convenience wrapper around [`discriminant`].
pub fn discriminant_real(v: &PeriodicPotential, e: f64) -> f64 {
    discriminant(v, Complex64::new(e, 0.0)).re
}

/// The four entries of `T_{to-1}···T_from` as polynomials in `E`.
pub fn polynomial_product(v: &PeriodicPotential, from: usize, to: usize) -> [[Poly; 2]; 2] {
    let mut m = [
        [Poly::constant(1.0), Poly::zero()],
        [Poly::zero(), Poly::constant(1.0)],
    ];
    for l in from..to {
        // ((E - v, -1), (1, 0)) * m
        let diag = Poly::linear(v.at(l));
        let top0 = diag.mul(&m[0][0]).add(&m[1][0].scale(-1.0));
        let top1 = diag.mul(&m[0][1]).add(&m[1][1].scale(-1.0));
        let [old_top, _] = m;
        m = [[top0, top1], old_top];
    }
    m.map(|row| row.map(Poly::trimmed))
}

/// Coefficients of `Δ`, computed exactly (in exact arithmetic) by
/// convolving the transfer-matrix entries.
pub fn discriminant_poly(v: &PeriodicPotential) -> Poly {
    let m = polynomial_product(v, 0, v.period());
    m[0][0].add(&m[1][1]).trimmed()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Left,
    Right,
}

impl std::fmt::Display for EdgeSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeSide::Left => "left",
            EdgeSide::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePoint {
    pub energy: f64,
    pub band: usize,
    pub side: EdgeSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    /// Energies of the closed gaps strictly inside the band, increasing.
    pub closed_gaps: Vec<f64>,
}

impl Band {
    pub fn closed_gap_count(&self) -> usize {
        self.closed_gaps.len()
    }

    pub fn contains(&self, e: f64, tol: f64) -> bool {
        e >= self.lo - tol && e <= self.hi + tol
    }
}

/// Bands of the periodic spectrum together with the discriminant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub period: usize,
    pub bands: Vec<Band>,
    pub discriminant: Poly,
    pub edge_points: Vec<EdgePoint>,
}

const CLUSTER_TOL: f64 = 1e-5;
const CLOSED_GAP_TOL: f64 = 1e-8;
const EDGE_RESIDUAL_TOL: f64 = 1e-12;

impl BandStructure {
    pub fn closed_gap_counts(&self) -> Vec<usize> {
        self.bands.iter().map(Band::closed_gap_count).collect()
    }

    /// Index of the band containing `e` within `tol`.
    pub fn band_of(&self, e: f64, tol: f64) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(e, tol))
    }

    pub fn inf(&self) -> f64 {
        self.bands[0].lo
    }

    pub fn sup(&self) -> f64 {
        self.bands[self.bands.len() - 1].hi
    }

    /// Number of quasi-momentum segments (of length `π/p`) below band `i`.
    fn segment_offset(&self, i: usize) -> usize {
        self.bands[..i].iter().map(|b| 1 + b.closed_gap_count()).sum()
    }

    /// Nearest recorded edge to `e`.
    pub fn nearest_edge(&self, e: f64) -> Option<&EdgePoint> {
        self.edge_points
            .iter()
            .min_by(|a, b| (a.energy - e).abs().total_cmp(&(b.energy - e).abs()))
    }

    /// Global quasi-momentum segment index of `e` inside band `i`.
    fn segment_of(&self, i: usize, e: f64) -> usize {
        let within = self.bands[i].closed_gaps.iter().filter(|&&g| e > g).count();
        self.segment_offset(i) + within
    }
}

/// Bands of `{ E : |Δ(E)| ≤ 2 }`, closed gaps and edges.
pub fn band_structure(v: &PeriodicPotential) -> Result<BandStructure> {
    let p = v.period();
    let delta = discriminant_poly(v);
    let deriv = delta.derivative();

    let mut edges: Vec<f64> = Vec::new();
    let mut closed: Vec<f64> = Vec::new();

    for target in [2.0, -2.0] {
        let shifted = delta.add(&Poly::constant(-target));
        let mut roots: Vec<f64> = Vec::with_capacity(p);
        for r in shifted.companion_roots() {
            let scale = 1.0 + r.re.abs();
            if r.im.abs() > 1e-4 * scale {
                return Err(Error::RootFindingFailure {
                    root: r.re,
                    residual: shifted.eval_complex(r).norm(),
                });
            }
            roots.push(r.re);
        }
        roots.sort_by(f64::total_cmp);

        let mut i = 0;
        while i < roots.len() {
            let x = roots[i];
            let paired = i + 1 < roots.len()
                && (roots[i + 1] - x).abs() <= CLUSTER_TOL * (1.0 + x.abs());
            if paired {
                let mid = 0.5 * (x + roots[i + 1]);
                let (star, _) = deriv.polish_root(mid, 60);
                if is_closed_gap(v, &delta, target, star) {
                    closed.push(star);
                } else {
                    // A very narrow open gap: two genuine edges.
                    edges.push(polish_edge(&shifted, x)?);
                    edges.push(polish_edge(&shifted, roots[i + 1])?);
                }
                i += 2;
            } else {
                edges.push(polish_edge(&shifted, x)?);
                i += 1;
            }
        }
    }

    edges.sort_by(f64::total_cmp);
    closed.sort_by(f64::total_cmp);
    if edges.len() % 2 != 0 || edges.is_empty() {
        return Err(Error::RootFindingFailure {
            root: edges.first().copied().unwrap_or(f64::NAN),
            residual: f64::NAN,
        });
    }

    let mut bands: Vec<Band> = edges
        .chunks(2)
        .map(|c| Band {
            lo: c[0],
            hi: c[1],
            closed_gaps: Vec::new(),
        })
        .collect();
    for g in closed {
        let owner = bands
            .iter_mut()
            .find(|b| g > b.lo && g < b.hi)
            .ok_or(Error::RootFindingFailure {
                root: g,
                residual: f64::NAN,
            })?;
        owner.closed_gaps.push(g);
    }

    // Consistency: |Δ| ≤ 2 inside bands, > 2 inside open gaps.
    for (i, b) in bands.iter().enumerate() {
        let mid = 0.5 * (b.lo + b.hi);
        if delta.eval(mid).abs() > 2.0 {
            return Err(Error::RootFindingFailure {
                root: mid,
                residual: delta.eval(mid).abs() - 2.0,
            });
        }
        if let Some(next) = bands.get(i + 1) {
            let gap_mid = 0.5 * (b.hi + next.lo);
            if delta.eval(gap_mid).abs() <= 2.0 {
                return Err(Error::RootFindingFailure {
                    root: gap_mid,
                    residual: 2.0 - delta.eval(gap_mid).abs(),
                });
            }
        }
    }
    let increments: usize = bands.iter().map(|b| 1 + b.closed_gap_count()).sum();
    if increments != p {
        return Err(Error::RootFindingFailure {
            root: bands[0].lo,
            residual: (increments as f64 - p as f64).abs(),
        });
    }

    let edge_points = bands
        .iter()
        .enumerate()
        .flat_map(|(i, b)| {
            [
                EdgePoint {
                    energy: b.lo,
                    band: i,
                    side: EdgeSide::Left,
                },
                EdgePoint {
                    energy: b.hi,
                    band: i,
                    side: EdgeSide::Right,
                },
            ]
        })
        .collect();

    Ok(BandStructure {
        period: p,
        bands,
        discriminant: delta,
        edge_points,
    })
}

fn polish_edge(shifted: &Poly, x0: f64) -> Result<f64> {
    let (x, r) = shifted.polish_root(x0, 60);
    if r > EDGE_RESIDUAL_TOL * shifted.abs_scale(x).max(1.0) {
        return Err(Error::RootFindingFailure { root: x, residual: r });
    }
    Ok(x)
}

fn is_closed_gap(v: &PeriodicPotential, delta: &Poly, target: f64, e: f64) -> bool {
    let scale = delta.abs_scale(e).max(1.0);
    if (delta.eval(e) - target).abs() > CLOSED_GAP_TOL * scale {
        return false;
    }
    let (_, d1) = delta.eval_with_derivative(e);
    if d1.abs() > CLOSED_GAP_TOL * delta.derivative().abs_scale(e).max(1.0) {
        return false;
    }
    let m = ordered_product(v, Complex64::new(e, 0.0), 0, v.period());
    m.m12.norm() <= CLOSED_GAP_TOL * scale && m.m21.norm() <= CLOSED_GAP_TOL * scale
}

/// Quasi-momentum `θ_p(E)`: continuous, non-decreasing, `0` at the bottom of
/// the spectrum and `π` at its top, with `2cos(pθ_p) = (-1)^p Δ(E)`.
/// Band `i` is mapped onto an interval of length `(1 + c_i)π/p`.
pub fn quasi_momentum(bs: &BandStructure, e: f64) -> Result<f64> {
    let (m, x) = segment_phase(bs, e)?;
    Ok((m as f64 * PI + x.acos()) / bs.period as f64)
}

/// Segment index `m` and `cos(pθ_p - mπ)` at `e`.
fn segment_phase(bs: &BandStructure, e: f64) -> Result<(usize, f64)> {
    let i = bs
        .band_of(e, 1e-12)
        .ok_or(Error::OutsideSpectrum { energy: e })?;
    let m = bs.segment_of(i, e);
    let sign = if (m + bs.period) % 2 == 0 { 1.0 } else { -1.0 };
    let x = (sign * bs.discriminant.eval(e) / 2.0).clamp(-1.0, 1.0);
    Ok((m, x))
}

/// The Floquet multiplier `ρ(E)` on the spectrum, `ρ + 1/ρ = Δ`, on the
/// branch `ρ = (-1)^p e^{ipθ_p(E)}`.
pub fn floquet_multiplier(bs: &BandStructure, e: f64) -> Result<Complex64> {
    let (m, x) = segment_phase(bs, e)?;
    let sin_phase = (1.0 - x * x).max(0.0).sqrt();
    let sign = if (m + bs.period) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(Complex64::new(
        bs.discriminant.eval(e) / 2.0,
        sign * sin_phase,
    ))
}

/// Density of states `n(E) = θ_p'(E)/π = |Δ'(E)| / (pπ sqrt(4 - Δ(E)²))`.
pub fn density_of_states(bs: &BandStructure, e: f64) -> Result<f64> {
    let inside = bs.bands.iter().any(|b| e > b.lo && e < b.hi);
    if !inside {
        return Err(Error::OutsideSpectrum { energy: e });
    }
    let (d, d1) = bs.discriminant.eval_with_derivative(e);
    let rad = 4.0 - d * d;
    if rad <= 1e-14 {
        return Err(Error::EdgeSingularity { energy: e });
    }
    Ok(d1.abs() / (bs.period as f64 * PI * rad.sqrt()))
}

/// `s(E) = a_{j+1}(E)(ρ(E) - a⁰_p(E)) - b_{j+1}(E) a⁰_{p-1}(E)`, whose
/// argument is `h_j(E)` modulo `π`.
pub fn phase_numerator(
    v: &PeriodicPotential,
    bs: &BandStructure,
    j: usize,
    e: f64,
) -> Result<Complex64> {
    let p = v.period();
    if j >= p {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            max: p as i64 - 1,
        });
    }
    let ec = Complex64::new(e, 0.0);
    let mono = monodromy(v, ec, 0)?;
    let prod = product_matrix(v, ec, j + 1)?;
    let rho = floquet_multiplier(bs, e)?;
    let a0p = mono.m11.re;
    let a0pm1 = mono.m21.re;
    let s = prod.m11.re * (rho - a0p) - prod.m12.re * a0pm1;
    if s.norm() <= 1e-13 * (1.0 + e.abs()).powi(p as i32) {
        return Err(Error::DegenerateS { energy: e });
    }
    Ok(s)
}

/// `h_j` at increasing energies `es` inside one band, unwrapped continuously
/// along the band. The common branch is fixed by the first energy; only
/// differences are meaningful.
pub fn h_j_along(
    v: &PeriodicPotential,
    bs: &BandStructure,
    j: usize,
    es: &[f64],
) -> Result<Vec<f64>> {
    let Some(&first) = es.first() else {
        return Ok(Vec::new());
    };
    let band = bs
        .band_of(first, 1e-12)
        .ok_or(Error::OutsideSpectrum { energy: first })?;
    let mut out = Vec::with_capacity(es.len());
    let mut prev_e = first;
    let mut prev_h = phase_numerator(v, bs, j, first)?.arg();
    out.push(prev_h);
    for &e in &es[1..] {
        if !bs.bands[band].contains(e, 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "energy {e} leaves band {band} while tracking h_j"
            )));
        }
        prev_h = track_phase(v, bs, j, prev_e, prev_h, e, 0)?;
        prev_e = e;
        out.push(prev_h);
    }
    Ok(out)
}

/// Continues `h` from `(e0, h0)` to `e1`, subdividing while the raw phase
/// increment is not clearly below `π/4`.
fn track_phase(
    v: &PeriodicPotential,
    bs: &BandStructure,
    j: usize,
    e0: f64,
    h0: f64,
    e1: f64,
    depth: u32,
) -> Result<f64> {
    let raw = phase_numerator(v, bs, j, e1)?.arg();
    let step = wrap_half_pi(raw - h0);
    if step.abs() < PI / 4.0 || depth >= 40 {
        return Ok(h0 + step);
    }
    let mid = 0.5 * (e0 + e1);
    let hm = track_phase(v, bs, j, e0, h0, mid, depth + 1)?;
    track_phase(v, bs, j, mid, hm, e1, depth + 1)
}

/// Reduces an angle modulo `π` into `(-π/2, π/2]`.
fn wrap_half_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(PI);
    if y > PI / 2.0 {
        y -= PI;
    }
    y
}

/// `h_j(E)`, unwrapped from just inside the left edge of the band holding `E`.
pub fn h_j(v: &PeriodicPotential, bs: &BandStructure, j: usize, e: f64) -> Result<f64> {
    let band = bs
        .band_of(e, 1e-12)
        .ok_or(Error::OutsideSpectrum { energy: e })?;
    let b = &bs.bands[band];
    if e <= b.lo || e >= b.hi {
        return Err(Error::EdgeSingularity { energy: e });
    }
    let start = b.lo + 1e-6 * (e - b.lo);
    let hs = h_j_along(v, bs, j, &[start, e])?;
    Ok(hs[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeClass {
    GenericA,
    GenericB,
    NonGeneric,
    EdgeEigenvalue,
}

impl EdgeClass {
    /// Condition (G) holds.
    pub fn is_generic(self) -> bool {
        matches!(self, EdgeClass::GenericA | EdgeClass::GenericB)
    }
}

impl std::fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeClass::GenericA => "GenericA",
            EdgeClass::GenericB => "GenericB",
            EdgeClass::NonGeneric => "NonGeneric",
            EdgeClass::EdgeEigenvalue => "EdgeEigenvalue",
        })
    }
}

/// Polynomial data at a band edge and its genericity class, for `L ≡ j (mod p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeData {
    pub e0: f64,
    pub side: EdgeSide,
    pub band_index: usize,
    pub j: usize,
    pub a0_p_minus_1: f64,
    pub a0_p: f64,
    pub rho: f64,
    pub a_j1: f64,
    pub b_j1: f64,
    pub d_j1: f64,
    pub classification: EdgeClass,
    /// A zero test landed within 10× of its tolerance.
    pub borderline: bool,
}

impl EdgeData {
    /// `d_{j+1}` recomputed from the stored fields.
    pub fn recompute_d(&self) -> f64 {
        d_value(self.a_j1, self.a0_p, self.rho, self.b_j1, self.a0_p_minus_1)
    }

    pub fn zero_tolerance(&self, period: usize) -> f64 {
        1e-9 * (1.0 + self.e0.abs()).powi(period as i32)
    }
}

fn d_value(a_j1: f64, a0_p: f64, rho: f64, b_j1: f64, a0_pm1: f64) -> f64 {
    a_j1 * (a0_p - rho) + b_j1 * a0_pm1
}

pub fn classify_edge(
    v: &PeriodicPotential,
    bs: &BandStructure,
    e0: f64,
    j: usize,
) -> Result<EdgeData> {
    let p = v.period();
    if j >= p {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            max: p as i64 - 1,
        });
    }
    let edge = *bs
        .nearest_edge(e0)
        .filter(|pt| (pt.energy - e0).abs() <= 1e-9)
        .ok_or(Error::NotAnEdge { energy: e0 })?;
    let e0 = edge.energy;
    let ec = Complex64::new(e0, 0.0);
    let mono = monodromy(v, ec, 0)?;
    let prod = product_matrix(v, ec, j + 1)?;
    let a0_p = mono.m11.re;
    let a0_p_minus_1 = mono.m21.re;
    let rho = if mono.trace().re >= 0.0 { 1.0 } else { -1.0 };
    let a_j1 = prod.m11.re;
    let b_j1 = prod.m12.re;
    let d_j1 = d_value(a_j1, a0_p, rho, b_j1, a0_p_minus_1);

    let tol = 1e-9 * (1.0 + e0.abs()).powi(p as i32);
    let is_zero = |x: f64| x.abs() <= tol;
    let near = |x: f64| x.abs() > tol && x.abs() <= 10.0 * tol;

    let classification = match (is_zero(a0_p_minus_1), is_zero(d_j1), is_zero(a_j1)) {
        (false, false, _) => EdgeClass::GenericA,
        (false, true, _) => EdgeClass::NonGeneric,
        (true, _, false) => EdgeClass::GenericB,
        (true, _, true) => EdgeClass::EdgeEigenvalue,
    };
    let borderline = near(a0_p_minus_1)
        || (!is_zero(a0_p_minus_1) && near(d_j1))
        || (is_zero(a0_p_minus_1) && near(a_j1));

    Ok(EdgeData {
        e0,
        side: edge.side,
        band_index: edge.band,
        j,
        a0_p_minus_1,
        a0_p,
        rho,
        a_j1,
        b_j1,
        d_j1,
        classification,
        borderline,
    })
}
