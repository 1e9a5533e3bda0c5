//! The Dirichlet section `H_L` on `[0, L]`: eigenvalues, boundary weights
//! and their organization by bands of the periodic spectrum.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{self, BandStructure, EdgeData, EdgeSide, PeriodicPotential};
use crate::tridiag::SymTridiagonal;

/// Eigenvalues within this distance of a band are assigned to it.
pub const BAND_TOL: f64 = 1e-9;

pub const DEFAULT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub l: usize,
    pub p: usize,
    pub j: usize,
    pub n_periods: usize,
    /// Strictly increasing, `L + 1` entries.
    pub lambdas: Vec<f64>,
    /// `a_k = |φ_k(L)|²`.
    pub weights_end: Vec<f64>,
    /// `|φ_k(0)|²`.
    pub weights_start: Vec<f64>,
    /// Band holding each eigenvalue, `None` outside the periodic spectrum.
    /// Empty until [`band_enumerate`] runs.
    pub band_of: Vec<Option<usize>>,
    /// Index within its band counted from the bottom of the band.
    pub local_index: Vec<Option<usize>>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn is_enumerated(&self) -> bool {
        self.band_of.len() == self.lambdas.len()
    }

    /// Global indices of the eigenvalues in `band`, increasing.
    pub fn in_band(&self, band: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.band_of.get(k).copied().flatten() == Some(band))
            .collect()
    }

    pub fn outside_spectrum(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.band_of.get(k).is_some_and(Option::is_none))
            .collect()
    }

    /// Scale for pole-distance tests: `max(1, max |λ|)`.
    pub fn scale(&self) -> f64 {
        self.lambdas.iter().fold(1.0_f64, |m, l| m.max(l.abs()))
    }
}

/// `(L+1)×(L+1)` tridiagonal matrix with diagonal `v_{n mod p}` and unit
/// couplings.
pub fn assemble(v: &PeriodicPotential, l: usize) -> Result<SymTridiagonal> {
    if l < 1 {
        return Err(Error::InvalidArgument("L must be at least 1".into()));
    }
    let diag = (0..=l).map(|n| v.at(n)).collect();
    SymTridiagonal::new(diag, vec![1.0; l])
}

/// Eigenvalues and boundary weights of `h`.
///
/// Eigenvalues are accurate to `tol · max(1, spectral radius)`; `seed` fixes
/// the inverse-iteration starts so results do not depend on scheduling.
pub fn eigensystem(h: &SymTridiagonal, period: usize, tol: f64, seed: u64) -> Result<SpectralData> {
    if !(tol >= 1e-14) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-14")));
    }
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let abs_tol = tol * h.spectral_radius_bound().max(1.0);
    let lambdas = h.eigenvalues(abs_tol);
    for (k, w) in lambdas.windows(2).enumerate() {
        if w[1] - w[0] < 1e-12 {
            return Err(Error::ConvergenceFailure { index: k + 1 });
        }
    }
    let ends: Vec<(f64, f64)> = lambdas
        .par_iter()
        .enumerate()
        .map(|(k, &lam)| {
            let x = h.eigenvector(k, lam, seed)?;
            Ok((x[0] * x[0], x[x.len() - 1] * x[x.len() - 1]))
        })
        .collect::<Result<_>>()?;
    let l = h.dim() - 1;
    Ok(SpectralData {
        l,
        p: period,
        j: l % period,
        n_periods: l / period,
        lambdas,
        weights_start: ends.iter().map(|e| e.0).collect(),
        weights_end: ends.iter().map(|e| e.1).collect(),
        band_of: Vec::new(),
        local_index: Vec::new(),
    })
}

/// Assembles `H_L` and computes its enumerated spectral data in one go.
pub fn spectral_data(
    v: &PeriodicPotential,
    bs: &BandStructure,
    l: usize,
    seed: u64,
) -> Result<SpectralData> {
    let h = assemble(v, l)?;
    let sd = eigensystem(&h, v.period(), DEFAULT_TOL, seed)?;
    band_enumerate(sd, bs)
}

/// Assigns each eigenvalue to the band within [`BAND_TOL`] and numbers it
/// from the bottom of that band.
pub fn band_enumerate(mut sd: SpectralData, bs: &BandStructure) -> Result<SpectralData> {
    let mut counters = vec![0usize; bs.bands.len()];
    sd.band_of = Vec::with_capacity(sd.len());
    sd.local_index = Vec::with_capacity(sd.len());
    for &lam in &sd.lambdas {
        let hits: Vec<usize> = bs
            .bands
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(lam, BAND_TOL))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => {
                sd.band_of.push(None);
                sd.local_index.push(None);
            }
            [i] => {
                sd.band_of.push(Some(*i));
                sd.local_index.push(Some(counters[*i]));
                counters[*i] += 1;
            }
            _ => return Err(Error::AmbiguousAssignment { energy: lam }),
        }
    }
    Ok(sd)
}

fn require_enumerated(sd: &SpectralData) -> Result<()> {
    if sd.is_enumerated() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("spectral data not band-enumerated".into()))
    }
}

/// In-band eigenvalues strictly inside band `band` (edge eigenvalues
/// excluded), increasing.
fn interior_in_band(sd: &SpectralData, bs: &BandStructure, band: usize) -> Vec<usize> {
    let b = &bs.bands[band];
    sd.in_band(band)
        .into_iter()
        .filter(|&k| sd.lambdas[k] > b.lo + BAND_TOL && sd.lambdas[k] < b.hi - BAND_TOL)
        .collect()
}

/// Spacing residuals `(L-j)[θ_{p,L}(λ_{k+1}) - θ_{p,L}(λ_k)] - π` for
/// consecutive eigenvalues inside `band`, with `θ_{p,L} = θ_p - h_j/(L-j)`.
pub fn band_quantization_residuals(
    sd: &SpectralData,
    bs: &BandStructure,
    v: &PeriodicPotential,
    band: usize,
) -> Result<Vec<f64>> {
    require_enumerated(sd)?;
    if band >= bs.bands.len() {
        return Err(Error::IndexOutOfRange {
            index: band as i64,
            max: bs.bands.len() as i64 - 1,
        });
    }
    let idx = interior_in_band(sd, bs, band);
    if idx.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: idx.len(),
        });
    }
    let es: Vec<f64> = idx.iter().map(|&k| sd.lambdas[k]).collect();
    let hs = floquet::h_j_along(v, bs, sd.j, &es)?;
    let thetas = es
        .iter()
        .map(|&e| floquet::quasi_momentum(bs, e))
        .collect::<Result<Vec<_>>>()?;
    let scale = (sd.l - sd.j) as f64;
    Ok((0..es.len() - 1)
        .map(|k| scale * (thetas[k + 1] - thetas[k]) - (hs[k + 1] - hs[k]) - PI)
        .collect())
}

/// Residuals for every band holding at least two interior eigenvalues.
pub fn quantization_residuals(
    sd: &SpectralData,
    bs: &BandStructure,
    v: &PeriodicPotential,
) -> Result<Vec<(usize, Vec<f64>)>> {
    require_enumerated(sd)?;
    let mut out = Vec::new();
    for band in 0..bs.bands.len() {
        if interior_in_band(sd, bs, band).len() >= 2 {
            out.push((band, band_quantization_residuals(sd, bs, v, band)?));
        }
    }
    Ok(out)
}

/// Global indices of the eigenvalues in the edge's band ordered by distance
/// from the edge. An eigenvalue sitting on the edge itself is skipped.
pub fn edge_ladder(sd: &SpectralData, edge: &EdgeData) -> Result<Vec<usize>> {
    require_enumerated(sd)?;
    let mut idx: Vec<usize> = sd
        .in_band(edge.band_index)
        .into_iter()
        .filter(|&k| (sd.lambdas[k] - edge.e0).abs() > BAND_TOL)
        .collect();
    if edge.side == EdgeSide::Right {
        idx.reverse();
    }
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    /// Position on the ladder counted from the edge.
    pub k: usize,
    pub global: usize,
    pub lambda: f64,
    /// `λ_k - E₀`.
    pub offset: f64,
    pub weight_end: f64,
    pub weight_start: f64,
}

/// Near-edge rows with `|λ - E₀| ≤ eps²`, ordered by distance from the edge.
pub fn weight_profile(sd: &SpectralData, edge: &EdgeData, eps: f64) -> Result<Vec<WeightRow>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside (0, 0.5)")));
    }
    let window = eps * eps;
    let rows: Vec<WeightRow> = edge_ladder(sd, edge)?
        .into_iter()
        .enumerate()
        .map(|(k, g)| WeightRow {
            k,
            global: g,
            lambda: sd.lambdas[g],
            offset: sd.lambdas[g] - edge.e0,
            weight_end: sd.weights_end[g],
            weight_start: sd.weights_start[g],
        })
        .take_while(|r| r.offset.abs() <= window)
        .collect();
    if rows.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: rows.len(),
        });
    }
    Ok(rows)
}

/// `max |a_k - a_n| · L / |λ_k - λ_n|` over all row pairs.
pub fn lipschitz_constant(rows: &[WeightRow], l: usize) -> f64 {
    let mut best: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for s in &rows[i + 1..] {
            let q = (r.weight_end - s.weight_end).abs() * l as f64 / (r.lambda - s.lambda).abs();
            best = best.max(q);
        }
    }
    best
}

/// Range `(min, max)` of `|λ_k - λ_n| · L² / |k² - n²|` over row pairs.
pub fn spacing_ratio_range(rows: &[WeightRow], l: usize) -> (f64, f64) {
    let l2 = (l as f64).powi(2);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for s in &rows[i + 1..] {
            let dk = ((r.k * r.k) as f64 - (s.k * s.k) as f64).abs();
            let q = (r.lambda - s.lambda).abs() * l2 / dk;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    (lo, hi)
}
