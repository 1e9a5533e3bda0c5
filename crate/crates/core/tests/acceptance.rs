//! Acceptance suite: runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fail.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use edgewatch_core::analysis::{l_scaling, scaling_report, seed_accuracy, LPoint};
use edgewatch_core::floquet::{band_structure, classify_edge, BandStructure, PeriodicPotential};
use edgewatch_core::resonance::*;
use edgewatch_core::spectrum::*;
use edgewatch_core::winding::{winding_number, Rect};
use edgewatch_core::{Complex64, EdgeClass, EdgeData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

struct Setup {
    v: PeriodicPotential,
    bs: BandStructure,
    sd: SpectralData,
    edge: EdgeData,
}

fn dimer(l: usize) -> std::result::Result<Setup, String> {
    let v = ok(PeriodicPotential::new(vec![0.0, 3.0]))?;
    let bs = ok(band_structure(&v))?;
    let sd = ok(spectral_data(&v, &bs, l, 0))?;
    let edge = ok(classify_edge(&v, &bs, -1.0, l % 2))?;
    Ok(Setup { v, bs, sd, edge })
}

fn c1_floquet() -> Outcome {
    let v = ok(PeriodicPotential::new(vec![0.0, 3.0]))?;
    let bs = ok(band_structure(&v))?;
    let got: Vec<(f64, f64)> = bs.bands.iter().map(|b| (b.lo, b.hi)).collect();
    check!(got.len() == 2, "dimer bands {got:?}");
    for ((lo, hi), (wlo, whi)) in got.iter().zip([(-1.0, 0.0), (3.0, 4.0)]) {
        check!((lo - wlo).abs() <= 1e-10 && (hi - whi).abs() <= 1e-10, "dimer bands {got:?}");
    }
    let flat = ok(PeriodicPotential::new(vec![1.0, 1.0]))?;
    let bs = ok(band_structure(&flat))?;
    check!(bs.bands.len() == 1, "V≡1 gave {} bands", bs.bands.len());
    let b = &bs.bands[0];
    check!((b.lo + 1.0).abs() <= 1e-10 && (b.hi - 3.0).abs() <= 1e-10, "band [{}, {}]", b.lo, b.hi);
    check!(b.closed_gaps.len() == 1 && (b.closed_gaps[0] - 1.0).abs() <= 1e-10, "closed gaps {:?}", b.closed_gaps);
    Ok("edges -1, 0, 3, 4; V≡1 band [-1, 3] closed gap at 1".into())
}

fn c2_free_chain() -> Outcome {
    let v = ok(PeriodicPotential::new(vec![0.0]))?;
    let mut worst: f64 = 0.0;
    for l in [2usize, 9, 50] {
        let sd = ok(eigensystem(&ok(assemble(&v, l))?, 1, DEFAULT_TOL, 0))?;
        let n = (l + 2) as f64;
        for (i, &lam) in sd.lambdas.iter().enumerate() {
            let m = (l + 1 - i) as f64;
            let w = 2.0 / n * (m * PI / n).sin().powi(2);
            worst = worst
                .max((lam - 2.0 * (m * PI / n).cos()).abs())
                .max((sd.weights_end[i] - w).abs())
                .max((sd.weights_start[i] - w).abs());
        }
        worst = worst.max((sd.weights_end.iter().sum::<f64>() - 1.0).abs());
    }
    check!(worst <= 1e-10, "max deviation {worst:e}");
    Ok(format!("max deviation {worst:.1e}"))
}

fn c3_classifier() -> Outcome {
    let v = ok(PeriodicPotential::new(vec![0.0, 3.0]))?;
    let bs = ok(band_structure(&v))?;
    let e0 = ok(classify_edge(&v, &bs, -1.0, 0))?;
    let e1 = ok(classify_edge(&v, &bs, -1.0, 1))?;
    check!(e0.classification == EdgeClass::GenericA && e1.classification == EdgeClass::GenericA,
        "classes {} / {}", e0.classification, e1.classification);
    check!((e0.d_j1 + 1.0).abs() < 1e-12 && (e1.d_j1 - 2.0).abs() < 1e-12, "d = {}, {}", e0.d_j1, e1.d_j1);
    Ok("GenericA for j = 0, 1 with d_1 = -1, d_2 = 2".into())
}

fn c4_quantization() -> Outcome {
    let s = dimer(400)?;
    let r = ok(band_quantization_residuals(&s.sd, &s.bs, &s.v, 0))?;
    check!(r.len() >= 3, "only {} pairs", r.len());
    let max = r[1..r.len() - 1].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    check!(max <= 1e-5, "max residual {max:e}");
    Ok(format!("{} interior pairs, max residual {max:.1e}", r.len() - 2))
}

fn c5_uniqueness() -> Outcome {
    let s = dimer(400)?;
    let res = ok(sweep_band_edge(&s.sd, &s.bs, &s.edge, &SweepConfig::default()))?;
    check!(res.len() == 9, "{} resonances", res.len());
    for r in &res {
        check!(r.box_count == 1, "n = {}: {} zeros in box", r.n, r.box_count);
        check!(r.in_m_box, "n = {}: z = {} outside M_n", r.n, r.z);
        check!(r.residual <= 1e-10, "n = {}: residual {:e}", r.n, r.residual);
    }
    let worst = res.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(format!("n = 0..8 each count 1, all in M_n, max residual {worst:.1e}"))
}

fn c6_free_region() -> Outcome {
    let s = dimer(400)?;
    let fr = ok(free_region_check(&s.sd, &s.bs, &s.edge, 0.2))?;
    check!(fr.count == 0, "count {}", fr.count);
    Ok(format!("[{}, {}] - i[0, {:.1e}] holds 0", fr.x_lo, fr.x_hi, fr.depth))
}

fn c7_width_in_n() -> Outcome {
    let s = dimer(1000)?;
    let res = ok(sweep_band_edge(&s.sd, &s.bs, &s.edge, &SweepConfig::default()))?;
    let pts: Vec<(f64, f64)> = res
        .iter()
        .filter(|r| (3..=20).contains(&r.n) && r.winding_verified)
        .map(|r| ((r.n + 1) as f64, r.width()))
        .collect();
    check!(pts.len() == 18, "{} verified points", pts.len());
    let f = ok(edgewatch_core::analysis::fit_power_law(&pts, "n+1", "|Im z_n|"))?;
    check!((f.slope - 2.0).abs() <= 0.3 && f.r_squared >= 0.95, "slope {} R² {}", f.slope, f.r_squared);
    Ok(format!("slope {:.4}, R² {:.6}", f.slope, f.r_squared))
}

fn width_at(l: usize, n: usize) -> std::result::Result<LPoint, String> {
    let s = dimer(l)?;
    let r = ok(resolve_resonance(&s.sd, &s.edge, n, &SweepConfig::default()))?;
    check!(r.winding_verified, "L = {l}, n = {n}: box count {}", r.box_count);
    Ok(LPoint { l, n, width: r.width() })
}

fn c8_width_in_l() -> Outcome {
    let ls = [250usize, 500, 1000, 2000];
    let fixed = ls.iter().map(|&l| width_at(l, 3)).collect::<std::result::Result<Vec<_>, _>>()?;
    let prop = ls
        .iter()
        .map(|&l| width_at(l, (0.02 * l as f64).floor() as usize))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ff = ok(l_scaling(&fixed, 2, true))?;
    let fp = ok(l_scaling(&prop, 2, false))?;
    check!((ff.slope + 3.0).abs() <= 0.3, "fixed-n slope {}", ff.slope);
    check!((fp.slope + 1.0).abs() <= 0.4, "proportional slope {}", fp.slope);
    Ok(format!("n = 3 slope {:.4}; n = ⌊0.02L⌋ slope {:.4}", ff.slope, fp.slope))
}

fn c9_eigen_laws() -> Outcome {
    let s = dimer(1000)?;
    let res = ok(sweep_band_edge(&s.sd, &s.bs, &s.edge, &SweepConfig::default()))?;
    let rep = ok(scaling_report(&s.sd, &res, &s.edge, 0.2))?;
    let get = |name: &str| rep.fit(name).map(|f| f.fit.clone()).ok_or(format!("missing fit {name}"));
    let (lam, a, sp) = (get("lambda-E0")?, get("a_k")?, get("spacing")?);
    check!((lam.slope - 2.0).abs() <= 0.2, "lambda slope {}", lam.slope);
    check!((a.slope - 2.0).abs() <= 0.3, "weight slope {}", a.slope);
    check!((sp.slope - 1.0).abs() <= 0.3, "spacing slope {}", sp.slope);
    for f in [&lam, &a, &sp] {
        check!(f.r_squared >= 0.95, "{} R² {}", f.y_name, f.r_squared);
    }
    Ok(format!(
        "slopes {:.4} / {:.4} / {:.4} over {} points",
        lam.slope, a.slope, sp.slope, lam.n_points
    ))
}

fn c10_seed() -> Outcome {
    let ratio = |l: usize| -> std::result::Result<f64, String> {
        let s = dimer(l)?;
        let res = ok(sweep_band_edge(&s.sd, &s.bs, &s.edge, &SweepConfig::default()))?;
        Ok(ok(seed_accuracy(&res, l))?.max_ratio)
    };
    let (r400, r800) = (ratio(400)?, ratio(800)?);
    check!(r800 <= 4.0 * r400, "max ratio {r800} at L=800 vs {r400} at L=400");
    let s = dimer(1000)?;
    let res = ok(sweep_band_edge(&s.sd, &s.bs, &s.edge, &SweepConfig::default()))?;
    let acc = ok(seed_accuracy(&res, 1000))?;
    check!(acc.subdominant(), "seed error exceeds width at L=1000");
    let worst = acc.rows.iter().map(|r| r.error / r.width).fold(0.0, f64::max);
    Ok(format!("max ratio {r400:.1} (L=400), {r800:.1} (L=800); max |z-z̃|/|Im z| {worst:.1e} at L=1000"))
}

fn c11_small_im_s() -> Outcome {
    let s = dimer(400)?;
    let eps = 0.2;
    let mut parts = Vec::new();
    for n in [1usize, 2, 4] {
        let r = ok(im_s_grid_max(&s.sd, &s.edge, n, eps, 5.0, 30))?;
        check!(r.max_abs_im_s <= 10.0 * eps, "n = {n}: max |Im S| {}", r.max_abs_im_s);
        check!(r.certifies_no_root(), "n = {n}: {} vs {}", r.max_abs_im_s, r.min_abs_im_exp);
        parts.push(format!("{:.3}", r.max_abs_im_s));
    }
    Ok(format!("max |Im S| {} (C0 = 5) below min |Im e^-iθ| ≈ 0.866", parts.join(", ")))
}

fn c12_winding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut done = 0;
    while done < 50 {
        let x0 = rng.random_range(-2.0..1.0);
        let y0 = rng.random_range(-2.0..1.0);
        let rect = ok(Rect::new(x0, x0 + rng.random_range(0.3..1.5), y0, y0 + rng.random_range(0.3..1.5)))?;
        let mut pts = |k: usize| -> Vec<Complex64> {
            (0..k)
                .map(|_| Complex64::new(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)))
                .collect()
        };
        let zeros = pts(1 + done % 4);
        let poles = pts(done % 3);
        let clear = zeros.iter().chain(&poles).all(|z| {
            let dx = (z.re - rect.x_lo).abs().min((z.re - rect.x_hi).abs());
            let dy = (z.im - rect.y_lo).abs().min((z.im - rect.y_hi).abs());
            let near_x = z.re > rect.x_lo - 1e-3 && z.re < rect.x_hi + 1e-3;
            let near_y = z.im > rect.y_lo - 1e-3 && z.im < rect.y_hi + 1e-3;
            !(near_x && near_y) || dx.min(dy) > 1e-3
        });
        if !clear {
            continue;
        }
        let inside = |set: &[Complex64]| set.iter().filter(|&&z| rect.contains(z)).count() as i64;
        let expect = inside(&zeros) - inside(&poles);
        let f = |z: Complex64| {
            let num: Complex64 = zeros.iter().map(|r| z - r).product();
            let den: Complex64 = poles.iter().map(|r| z - r).product();
            Ok(num / den)
        };
        let got = ok(winding_number(f, &rect, 4))?;
        check!(got == expect, "case {done}: got {got}, expected {expect}");
        done += 1;
    }
    Ok("50/50 rational oracles exact".into())
}

fn c13_summation() -> Outcome {
    let s = dimer(400)?;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let y = rng.random_range(1e-6..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let e = Complex64::new(rng.random_range(-1.5..4.5), y);
        let a = ok(s_l(&s.sd, e))?.im;
        let b = im_s_l_direct(&s.sd, e);
        check!(a.signum() == e.im.signum(), "sign mismatch at {e}");
        worst = worst.max((a - b).abs() / b.abs());
    }
    check!(worst <= 1e-12, "max relative gap {worst:e}");
    Ok(format!("max relative gap {worst:.1e}, signs agree"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 13] = [
        ("Floquet oracles", c1_floquet, Duration::from_secs(1)),
        ("Free-chain spectral oracle", c2_free_chain, Duration::from_secs(1)),
        ("Genericity classifier", c3_classifier, Duration::from_secs(1)),
        ("Quantization condition", c4_quantization, Duration::from_secs(10)),
        ("Uniqueness in B_n", c5_uniqueness, Duration::from_secs(120)),
        ("Resonance-free region", c6_free_region, Duration::from_secs(60)),
        ("Width scaling in n", c7_width_in_n, Duration::from_secs(300)),
        ("Width scaling in L", c8_width_in_l, Duration::from_secs(900)),
        ("Eigenvalue and weight laws", c9_eigen_laws, Duration::from_secs(60)),
        ("Seed formula", c10_seed, Duration::from_secs(300)),
        ("Small Im S region", c11_small_im_s, Duration::from_secs(30)),
        ("Winding-counter exactness", c12_winding, Duration::from_secs(10)),
        ("Summation identity", c13_summation, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = t.elapsed();
        let outcome = match outcome {
            Ok(_) if took > *budget => Err(format!("took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
