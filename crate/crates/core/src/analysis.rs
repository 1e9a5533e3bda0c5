//! Log-log fits that turn the near-edge asymptotics into slope checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{EdgeClass, EdgeData};
use crate::resonance::Resonance;
use crate::spectrum::{weight_profile, SpectralData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub x_name: String,
    pub y_name: String,
}

/// Ordinary least squares of `log y` on `log x`.
pub fn fit_power_law(points: &[(f64, f64)], x_name: &str, y_name: &str) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    ols_log_log(points, x_name, y_name)
}

fn ols_log_log(points: &[(f64, f64)], x_name: &str, y_name: &str) -> Result<PowerLawFit> {
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs positive data, got ({x}, {y})"
        )));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::DegenerateData("all abscissae equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        x_name: x_name.into(),
        y_name: y_name.into(),
    })
}

/// A fit compared against its expected slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub fit: PowerLawFit,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SlopeCheck {
    pub fn new(fit: PowerLawFit, expected: f64, tolerance: f64) -> Self {
        let pass = (fit.slope - expected).abs() <= tolerance;
        Self {
            fit,
            expected,
            tolerance,
            pass,
        }
    }
}

pub const SLOPE_TOL: f64 = 0.3;

/// Indices below this are left out of slope fits.
pub const FIT_MIN_INDEX: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub e0: f64,
    pub l: usize,
    pub classification: EdgeClass,
    pub eps: f64,
    pub fits: Vec<SlopeCheck>,
    /// Weights do not grow with the index, as at an edge eigenvalue.
    pub non_generic_signature: bool,
}

impl ScalingReport {
    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(|f| f.pass)
    }

    pub fn fit(&self, y_name: &str) -> Option<&SlopeCheck> {
        self.fits.iter().find(|f| f.fit.y_name == y_name)
    }
}

/// Near-edge fits of eigenvalue offsets, weights, spacings and widths
/// against the ladder index `k + 1`.
///
/// At a non-generic edge the weights stop growing with `k`; the weight fit
/// then expects slope 0 and the report is flagged rather than failed. The
/// width fit is skipped there when no resonances are given.
pub fn scaling_report(
    sd: &SpectralData,
    resonances: &[Resonance],
    edge: &EdgeData,
    eps: f64,
) -> Result<ScalingReport> {
    if edge.e0.abs() >= 2.0 {
        return Err(Error::OutOfDomain(format!(
            "edge {} is not inside (-2, 2)",
            edge.e0
        )));
    }
    let rows = weight_profile(sd, edge, eps)?;
    let generic = edge.classification.is_generic();
    let kx = |k: usize| (k + 1) as f64;
    let fitted: Vec<_> = rows.iter().filter(|r| r.k >= FIT_MIN_INDEX).collect();

    let offsets: Vec<(f64, f64)> = fitted.iter().map(|r| (kx(r.k), r.offset.abs())).collect();
    let weights: Vec<(f64, f64)> = fitted.iter().map(|r| (kx(r.k), r.weight_end)).collect();
    let spacings: Vec<(f64, f64)> = fitted
        .windows(2)
        .map(|w| (kx(w[0].k), (w[1].lambda - w[0].lambda).abs()))
        .collect();

    let mut fits = vec![
        SlopeCheck::new(fit_power_law(&offsets, "k+1", "lambda-E0")?, 2.0, SLOPE_TOL),
        SlopeCheck::new(
            fit_power_law(&weights, "k+1", "a_k")?,
            if generic { 2.0 } else { 0.0 },
            SLOPE_TOL,
        ),
        SlopeCheck::new(fit_power_law(&spacings, "k+1", "spacing")?, 1.0, SLOPE_TOL),
    ];
    let widths: Vec<(f64, f64)> = resonances
        .iter()
        .filter(|r| r.n >= FIT_MIN_INDEX && r.winding_verified)
        .map(|r| (kx(r.n), r.width()))
        .collect();
    if generic || !widths.is_empty() {
        if widths.len() < 5 {
            return Err(Error::TooFewPoints {
                needed: 5,
                got: widths.len(),
            });
        }
        fits.push(SlopeCheck::new(fit_power_law(&widths, "n+1", "|Im z_n|")?, 2.0, SLOPE_TOL));
    }
    let non_generic_signature = fits[1].fit.slope.abs() < 0.5;
    Ok(ScalingReport {
        e0: edge.e0,
        l: sd.l,
        classification: edge.classification,
        eps,
        fits,
        non_generic_signature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LPoint {
    pub l: usize,
    pub n: usize,
    pub width: f64,
}

/// Fit of `|Im z_n|` against `L` over a family with one residue `L mod p`.
/// With `fixed_n` every point must carry the same `n`.
pub fn l_scaling(points: &[LPoint], period: usize, fixed_n: bool) -> Result<PowerLawFit> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let mut ls: Vec<usize> = points.iter().map(|p| p.l).collect();
    ls.sort_unstable();
    ls.dedup();
    if ls.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: ls.len(),
        });
    }
    let mut residues: Vec<usize> = ls.iter().map(|l| l % period).collect();
    residues.dedup();
    if residues.len() > 1 {
        residues.sort_unstable();
        residues.dedup();
        return Err(Error::MixedResidues(residues));
    }
    if fixed_n && points.iter().any(|p| p.n != points[0].n) {
        return Err(Error::InvalidArgument("fixed-n study mixes indices".into()));
    }
    // Three distinct L values are enough here.
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.l as f64, p.width)).collect();
    ols_log_log(&pts, "L", "|Im z_n|")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub n: usize,
    /// `|z_n - z̃_n|`.
    pub error: f64,
    /// `error · L⁵ |α_n|³ / (n+1)⁴`.
    pub ratio: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAccuracy {
    pub l: usize,
    pub rows: Vec<SeedRow>,
    pub max_ratio: f64,
}

impl SeedAccuracy {
    /// The seed error is smaller than the width for every row.
    pub fn subdominant(&self) -> bool {
        self.rows.iter().all(|r| r.error < r.width)
    }
}

pub fn seed_accuracy(resonances: &[Resonance], l: usize) -> Result<SeedAccuracy> {
    let verified: Vec<&Resonance> = resonances.iter().filter(|r| r.winding_verified).collect();
    if verified.is_empty() {
        return Err(Error::InvalidArgument("no verified resonances".into()));
    }
    let l5 = (l as f64).powi(5);
    let rows: Vec<SeedRow> = verified
        .iter()
        .map(|r| {
            let error = r.seed_error();
            SeedRow {
                n: r.n,
                error,
                ratio: error * l5 * r.alpha_n.norm().powi(3) / ((r.n + 1) as f64).powi(4),
                width: r.width(),
            }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SeedAccuracy { l, rows, max_ratio })
}
