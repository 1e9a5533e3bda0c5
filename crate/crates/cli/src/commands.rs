use edgewatch_core::analysis::{self, LPoint, PowerLawFit};
use edgewatch_core::floquet::{band_structure, classify_edge, BandStructure};
use edgewatch_core::resonance::{self, free_region_check, sweep_band_edge};
use edgewatch_core::spectrum::{self, spectral_data, SpectralData};
use edgewatch_core::{Complex64, EdgeData, Error, PeriodicPotential, SweepConfig};

use crate::table::{Cell, Table};
use crate::{
    emit, load_potential, EdgesArgs, Failure, FreeRegionArgs, LScalingArgs, Outcome, ResonanceArgs, SpectrumArgs,
    VerifyArgs, BasicArgs, EXIT_VERIFY,
};

/// Sections longer than this lose accuracy in the smallest widths.
const L_WARN: usize = 4000;
const L_MIN_RESONANCE: usize = 10;

fn bands_of(v: &PeriodicPotential) -> Outcome<BandStructure> {
    band_structure(v).map_err(|e| Failure::from_core("--potential", e))
}

fn check_length(l: usize, min: usize) -> Outcome<()> {
    if l < min {
        return Err(Failure::usage("--L", format!("must be at least {min}, got {l}")));
    }
    if l > L_WARN {
        eprintln!("warning: L = {l} exceeds {L_WARN}; smallest widths may lose accuracy");
    }
    Ok(())
}

fn spectral(v: &PeriodicPotential, bs: &BandStructure, l: usize, seed: u64) -> Outcome<SpectralData> {
    spectral_data(v, bs, l, seed).map_err(|e| Failure::from_core("--L", e))
}

/// Edge nearest to `energy` within `1e-6`, classified for `L mod p`.
fn pick_edge(v: &PeriodicPotential, bs: &BandStructure, energy: f64, l: usize) -> Outcome<EdgeData> {
    let pt = bs
        .nearest_edge(energy)
        .filter(|pt| (pt.energy - energy).abs() <= 1e-6)
        .ok_or_else(|| Failure::usage("--edge", Error::NotAnEdge { energy }))?;
    classify_edge(v, bs, pt.energy, l % v.period()).map_err(|e| Failure::from_core("--edge", e))
}

fn numeric(e: Error) -> Failure {
    Failure::from_core("--L", e)
}

fn verification_failed(what: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VERIFY,
        message: what.into(),
    }
}

pub fn bands(a: &BasicArgs) -> Outcome<()> {
    let v = a.source.load()?;
    let bs = bands_of(&v)?;
    let mut t = Table::new(&["lo", "hi", "closed_gaps"]);
    for b in &bs.bands {
        t.push(vec![b.lo.into(), b.hi.into(), b.closed_gap_count().into()]);
    }
    emit(&t, &a.out)
}

pub fn edges(a: &EdgesArgs) -> Outcome<()> {
    let v = a.source.load()?;
    let bs = bands_of(&v)?;
    let js: Vec<usize> = match a.j {
        Some(j) if j >= v.period() => {
            return Err(Failure::usage("--j", format!("must be below the period {}", v.period())))
        }
        Some(j) => vec![j],
        None => (0..v.period()).collect(),
    };
    let mut t = Table::new(&[
        "e0", "side", "band", "j", "a0_p_minus_1", "a0_p", "rho", "a_j1", "b_j1", "d_j1", "classification",
        "borderline",
    ]);
    for pt in &bs.edge_points {
        for &j in &js {
            let e = classify_edge(&v, &bs, pt.energy, j).map_err(numeric)?;
            t.push(vec![
                e.e0.into(),
                e.side.to_string().into(),
                e.band_index.into(),
                j.into(),
                e.a0_p_minus_1.into(),
                e.a0_p.into(),
                e.rho.into(),
                e.a_j1.into(),
                e.b_j1.into(),
                e.d_j1.into(),
                e.classification.to_string().into(),
                e.borderline.into(),
            ]);
        }
    }
    emit(&t, &a.out)
}

pub fn spectrum(a: &SpectrumArgs) -> Outcome<()> {
    let v = a.source.load()?;
    check_length(a.l, 1)?;
    let bs = bands_of(&v)?;
    let sd = spectral(&v, &bs, a.l, a.seed)?;
    let mut t = Table::new(&["k", "lambda", "weight_end", "weight_start", "band", "local_index"]);
    for k in 0..sd.len() {
        t.push(vec![
            k.into(),
            sd.lambdas[k].into(),
            sd.weights_end[k].into(),
            sd.weights_start[k].into(),
            sd.band_of[k].into(),
            sd.local_index[k].into(),
        ]);
    }
    emit(&t, &a.out)
}

pub fn resonances(a: &ResonanceArgs) -> Outcome<()> {
    let v = a.source.load()?;
    check_length(a.l, L_MIN_RESONANCE)?;
    let cfg = a.sweep.config()?;
    let bs = bands_of(&v)?;
    let edge = pick_edge(&v, &bs, a.edge, a.l)?;
    let sd = spectral(&v, &bs, a.l, a.seed)?;
    let res = sweep_band_edge(&sd, &bs, &edge, &cfg).map_err(|e| Failure::from_core("--edge", e))?;
    let mut t = Table::new(&[
        "n", "lambda_n", "a_n", "alpha_re", "alpha_im", "seed_re", "seed_im", "z_re", "z_im", "residual",
        "winding_verified", "box_count", "in_m_box",
    ]);
    for r in &res {
        t.push(vec![
            r.n.into(),
            r.lambda_n.into(),
            r.a_n.into(),
            r.alpha_n.re.into(),
            r.alpha_n.im.into(),
            r.seed.re.into(),
            r.seed.im.into(),
            r.z.re.into(),
            r.z.im.into(),
            r.residual.into(),
            r.winding_verified.into(),
            r.box_count.into(),
            r.in_m_box.into(),
        ]);
    }
    emit(&t, &a.out)?;
    resonance::require_verified(&res).map_err(|e| verification_failed(e.to_string()))
}

pub fn free_region(a: &FreeRegionArgs) -> Outcome<()> {
    let v = a.source.load()?;
    check_length(a.l, L_MIN_RESONANCE)?;
    if !(a.eps > 0.0 && a.eps < 0.5) {
        return Err(Failure::usage("--eps", format!("must lie in (0, 0.5), got {}", a.eps)));
    }
    let bs = bands_of(&v)?;
    let edge = pick_edge(&v, &bs, a.edge, a.l)?;
    let sd = spectral(&v, &bs, a.l, a.seed)?;
    let fr = free_region_check(&sd, &bs, &edge, a.eps).map_err(|e| Failure::from_core("--eps", e))?;
    let mut t = Table::new(&["e0", "x_lo", "x_hi", "depth", "count", "free"]);
    t.push(vec![
        fr.e0.into(),
        fr.x_lo.into(),
        fr.x_hi.into(),
        fr.depth.into(),
        fr.count.into(),
        fr.free.into(),
    ]);
    emit(&t, &a.out)?;
    if fr.free {
        Ok(())
    } else {
        Err(verification_failed(format!("{} resonances in the free region", fr.count)))
    }
}

fn fit_row(t: &mut Table, track: &str, f: &PowerLawFit, expected: f64, tol: f64) {
    t.push(vec![
        Cell::from(track),
        f.x_name.clone().into(),
        f.y_name.clone().into(),
        f.slope.into(),
        f.intercept.into(),
        f.r_squared.into(),
        f.n_points.into(),
        expected.into(),
        tol.into(),
        ((f.slope - expected).abs() <= tol).into(),
    ]);
}

const FIT_COLUMNS: [&str; 10] = [
    "track", "x", "y", "slope", "intercept", "r_squared", "n_points", "expected", "tolerance", "pass",
];

pub fn scaling(a: &ResonanceArgs) -> Outcome<()> {
    let v = a.source.load()?;
    check_length(a.l, L_MIN_RESONANCE)?;
    let cfg = a.sweep.config()?;
    let bs = bands_of(&v)?;
    let edge = pick_edge(&v, &bs, a.edge, a.l)?;
    let sd = spectral(&v, &bs, a.l, a.seed)?;
    let res = if edge.classification.is_generic() {
        sweep_band_edge(&sd, &bs, &edge, &cfg).map_err(|e| Failure::from_core("--edge", e))?
    } else {
        Vec::new()
    };
    let rep = analysis::scaling_report(&sd, &res, &edge, cfg.eps).map_err(|e| Failure::from_core("--edge", e))?;
    let mut t = Table::new(&FIT_COLUMNS);
    for f in &rep.fits {
        fit_row(&mut t, "edge", &f.fit, f.expected, f.tolerance);
    }
    emit(&t, &a.out)?;
    if rep.non_generic_signature && !edge.classification.is_generic() {
        eprintln!(
            "note: edge {} is {}; flat weights are the expected non-generic signature",
            edge.e0, edge.classification
        );
    }
    if rep.all_pass() {
        Ok(())
    } else {
        Err(verification_failed("a slope falls outside its tolerance"))
    }
}

pub fn l_scaling(a: &LScalingArgs) -> Outcome<()> {
    let v = a.source.load()?;
    let cfg = a.sweep.config()?;
    if !(a.fraction > 0.0 && a.fraction < 1.0) {
        return Err(Failure::usage("--fraction", format!("must lie in (0, 1), got {}", a.fraction)));
    }
    let mut residues: Vec<usize> = a.ls.iter().map(|l| l % v.period()).collect();
    residues.sort_unstable();
    residues.dedup();
    if residues.len() > 1 {
        return Err(Failure::usage("--Ls", Error::MixedResidues(residues)));
    }
    let bs = bands_of(&v)?;
    let mut fixed = Vec::new();
    let mut prop = Vec::new();
    let mut unverified = Vec::new();
    for &l in &a.ls {
        check_length(l, L_MIN_RESONANCE)?;
        let edge = pick_edge(&v, &bs, a.edge, l)?;
        let sd = spectral(&v, &bs, l, a.seed)?;
        for (n, track) in [(a.n, &mut fixed), ((a.fraction * l as f64).floor() as usize, &mut prop)] {
            let r = resonance::resolve_resonance(&sd, &edge, n, &cfg).map_err(|e| Failure::from_core("--n", e))?;
            if !r.winding_verified {
                unverified.push(format!("L={l} n={n}"));
            }
            track.push(LPoint { l, n, width: r.width() });
        }
    }
    let ff = analysis::l_scaling(&fixed, v.period(), true).map_err(|e| Failure::from_core("--Ls", e))?;
    let fp = analysis::l_scaling(&prop, v.period(), false).map_err(|e| Failure::from_core("--Ls", e))?;
    let mut t = Table::new(&FIT_COLUMNS);
    fit_row(&mut t, "fixed_n", &ff, -3.0, 0.3);
    fit_row(&mut t, "proportional_n", &fp, -1.0, 0.4);
    emit(&t, &a.out)?;
    if !unverified.is_empty() {
        return Err(verification_failed(format!("boxes without a unique zero: {}", unverified.join(", "))));
    }
    if (ff.slope + 3.0).abs() > 0.3 || (fp.slope + 1.0).abs() > 0.4 {
        return Err(verification_failed("a slope falls outside its tolerance"));
    }
    Ok(())
}

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Checks(Table);

impl Checks {
    fn add(&mut self, name: &str, status: Status, detail: String) {
        let s = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        self.0.push(vec![name.into(), s.into(), detail.into()]);
    }

    fn test(&mut self, name: &str, ok: bool, detail: String) {
        self.add(name, if ok { Status::Pass } else { Status::Fail }, detail);
    }

    fn failures(&self) -> usize {
        self.0.rows.iter().filter(|r| r[1] == Cell::from("FAIL")).count()
    }
}

/// `n × m` lattice of off-axis points covering `[x0, x1] × ±[y_min, y_max]`.
fn probe_points(x0: f64, x1: f64, y_max: f64) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(1000);
    for i in 0..40 {
        let x = x0 + (x1 - x0) * (i as f64 + 0.37) / 40.0;
        for k in 0..25 {
            let y = y_max * 10f64.powf(-6.0 * k as f64 / 24.0);
            let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
            pts.push(Complex64::new(x, sign * y));
        }
    }
    pts
}

pub fn verify(a: &VerifyArgs) -> Outcome<()> {
    let v = match (&a.potential, &a.potential_file) {
        (None, None) => load_potential(Some("0,3"), None)?,
        (p, f) => load_potential(p.as_deref(), f.as_ref())?,
    };
    check_length(a.l, L_MIN_RESONANCE)?;
    let cfg = a.sweep.config()?;
    let bs = bands_of(&v)?;
    let sd = spectral(&v, &bs, a.l, a.seed)?;
    let mut c = Checks(Table::new(&["check", "status", "detail"]));

    let increasing = sd.lambdas.windows(2).all(|w| w[1] > w[0]);
    c.test("eigenvalues_increasing", increasing, format!("{} eigenvalues", sd.len()));
    let s_end: f64 = sd.weights_end.iter().sum();
    let s_start: f64 = sd.weights_start.iter().sum();
    c.test(
        "weights_sum_to_one",
        (s_end - 1.0).abs() <= 1e-10 && (s_start - 1.0).abs() <= 1e-10,
        format!("end {:.3e}, start {:.3e}", s_end - 1.0, s_start - 1.0),
    );
    let unit = sd.weights_end.iter().chain(&sd.weights_start).all(|w| (0.0..=1.0).contains(w));
    c.test("weights_in_unit_interval", unit, String::new());
    let outside = sd.outside_spectrum();
    let far = outside.iter().all(|&k| bs.band_of(sd.lambdas[k], spectrum::BAND_TOL).is_none());
    c.test("outside_eigenvalues_off_bands", far, format!("{} outside the spectrum", outside.len()));

    for (band, _) in bs.bands.iter().enumerate() {
        let name = format!("quantization_band_{band}");
        match spectrum::band_quantization_residuals(&sd, &bs, &v, band) {
            Ok(r) if r.len() >= 3 => {
                let max = r[1..r.len() - 1].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                c.test(&name, max <= 1e-5, format!("max interior residual {max:.3e}"));
            }
            Ok(_) | Err(Error::TooFewPoints { .. }) => c.add(&name, Status::Skip, "too few eigenvalues".into()),
            Err(e) => c.add(&name, Status::Fail, e.to_string()),
        }
    }

    let pts = probe_points(bs.inf() - 0.5, bs.sup() + 0.5, 0.5);
    let branch = pts
        .iter()
        .map(|&e| resonance::theta(e).map(|t| (2.0 * t.cos() - e).norm() / (1.0 + e.norm())))
        .collect::<Result<Vec<_>, _>>();
    match branch {
        Ok(errs) => {
            let worst = errs.iter().copied().fold(0.0, f64::max);
            c.test("theta_round_trip", worst <= 1e-13, format!("max error {worst:.1e}"));
        }
        Err(e) => c.add("theta_round_trip", Status::Fail, e.to_string()),
    }
    let mut worst: f64 = 0.0;
    let mut signs = true;
    for &e in &pts {
        match resonance::s_l(&sd, e) {
            Ok(s) => {
                let direct = resonance::im_s_l_direct(&sd, e);
                worst = worst.max((s.im - direct).abs() / direct.abs());
                signs &= s.im.signum() == e.im.signum();
            }
            Err(_) => signs = false,
        }
    }
    c.test(
        "im_s_identity",
        worst <= 1e-12 && signs,
        format!("max relative gap {worst:.1e}, signs {}", if signs { "agree" } else { "differ" }),
    );

    let edge_energy = match a.edge {
        Some(e) => Some(e),
        None => bs.edge_points.iter().map(|p| p.energy).find(|e| e.abs() < 2.0),
    };
    match edge_energy {
        None => c.add("resonance_sweep", Status::Skip, "no band edge inside (-2, 2)".into()),
        Some(energy) => {
            let edge = pick_edge(&v, &bs, energy, a.l)?;
            verify_edge(&mut c, &sd, &bs, &edge, &cfg);
        }
    }

    emit(&c.0, &a.out)?;
    match c.failures() {
        0 => Ok(()),
        n => Err(verification_failed(format!("{n} checks failed"))),
    }
}

fn verify_edge(c: &mut Checks, sd: &SpectralData, bs: &BandStructure, edge: &EdgeData, cfg: &SweepConfig) {
    let what = format!("edge {} ({})", edge.e0, edge.classification);
    if !edge.classification.is_generic() {
        c.add("resonance_sweep", Status::Skip, format!("{what} is not generic"));
    } else {
        match sweep_band_edge(sd, bs, edge, cfg) {
            Ok(res) => {
                let bad: Vec<String> = res.iter().filter(|r| !r.winding_verified).map(|r| r.n.to_string()).collect();
                c.test(
                    "resonance_uniqueness",
                    bad.is_empty(),
                    if bad.is_empty() {
                        format!("{what}: {} boxes with one zero each", res.len())
                    } else {
                        format!("{what}: boxes {} fail", bad.join(" "))
                    },
                );
                let worst = res.iter().map(|r| r.residual).fold(0.0, f64::max);
                c.test("resonance_residuals", worst <= 1e-10, format!("max |f(z)| {worst:.1e}"));
                let lower = res.iter().all(|r| r.z.im < 0.0);
                c.test("resonances_in_lower_half_plane", lower, String::new());
                let in_m = res.iter().filter(|r| r.in_m_box).count();
                c.test("resonances_in_shallow_boxes", in_m == res.len(), format!("{in_m} of {}", res.len()));
                c.test("resonance_total_count", res.len() <= sd.l, format!("{} <= {}", res.len(), sd.l));
            }
            Err(e) => c.add("resonance_sweep", Status::Fail, format!("{what}: {e}")),
        }
    }
    match free_region_check(sd, bs, edge, cfg.eps) {
        Ok(fr) => c.test("free_region", fr.free, format!("{} zeros next to {}", fr.count, edge.e0)),
        Err(e @ (Error::EigenvalueInInterval { .. } | Error::InvalidArgument(_))) => {
            c.add("free_region", Status::Skip, e.to_string())
        }
        Err(e) => c.add("free_region", Status::Fail, e.to_string()),
    }
}
