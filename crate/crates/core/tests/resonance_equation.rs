use std::f64::consts::PI;

use edgewatch_core::floquet::{band_structure, classify_edge, BandStructure, EdgeSide, PeriodicPotential};
use edgewatch_core::resonance::*;
use edgewatch_core::spectrum::{spectral_data, SpectralData};
use edgewatch_core::summation::ComplexDD;
use edgewatch_core::winding::{winding_number, Rect};
use edgewatch_core::{Complex64, EdgeData, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dimer_setup(l: usize) -> (PeriodicPotential, BandStructure, SpectralData, EdgeData) {
    let v = PeriodicPotential::new(vec![0.0, 3.0]).unwrap();
    let bs = band_structure(&v).unwrap();
    let sd = spectral_data(&v, &bs, l, 0).unwrap();
    let edge = classify_edge(&v, &bs, -1.0, l % 2).unwrap();
    (v, bs, sd, edge)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn branch_round_trip_in_cut_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let mut im = rng.random_range(-3.0..3.0);
        if im == 0.0 {
            im = 0.5;
        }
        let e = c(rng.random_range(-4.0..4.0), im);
        let t = theta(e).unwrap();
        assert!((2.0 * t.cos() - e).norm() <= 1e-13 * (1.0 + e.norm()), "{e}");
        assert!(t.re > -PI && t.re < 0.0);
        if e.im > 0.0 {
            assert!(t.im > 0.0);
        }
    }
}

#[test]
fn sum_matches_double_double_oracle() {
    let (_, _, sd, _) = dimer_setup(200);
    let e = c(-0.5, -0.01);
    let s = s_l(&sd, e).unwrap();
    let mut acc = ComplexDD::default();
    for (&l, &a) in sd.lambdas.iter().zip(&sd.weights_end) {
        acc = acc.add(ComplexDD::term(a, l, e));
    }
    let oracle = acc.to_c64();
    assert!((s - oracle).norm() / oracle.norm() < 1e-12);
}

#[test]
fn imaginary_part_identity() {
    let (_, _, sd, _) = dimer_setup(200);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let y = rng.random_range(1e-6..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let e = c(rng.random_range(-1.5..4.5), y);
        let a = s_l(&sd, e).unwrap().im;
        let b = im_s_l_direct(&sd, e);
        assert!((a - b).abs() <= 1e-12 * b.abs());
        assert_eq!(a.signum(), e.im.signum());
    }
}

#[test]
fn derivative_matches_centered_differences() {
    let (_, _, sd, _) = dimer_setup(60);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    for _ in 0..20 {
        let e = c(rng.random_range(-1.5..1.5), -rng.random_range(0.05..0.5));
        let (_, fp) = f_and_fprime(&sd, e).unwrap();
        let fd = (f_value(&sd, e + h).unwrap() - f_value(&sd, e - h).unwrap()) / (2.0 * h);
        assert!((fd - fp).norm() <= 1e-5 * fp.norm(), "{e}: {fd} vs {fp}");
    }
}

#[test]
fn real_axis_imaginary_part() {
    let (_, _, sd, _) = dimer_setup(60);
    for x in [-1.7, -0.999, -0.5001, 0.77, 1.9] {
        let e = c(x, 0.0);
        let f = f_value(&sd, e).unwrap();
        let t = theta(e).unwrap();
        assert!((f.im + t.re.sin()).abs() < 1e-12);
        assert!(f.im > 0.0);
    }
}

#[test]
fn no_conjugation_symmetry() {
    let (_, _, sd, _) = dimer_setup(60);
    let e = c(-0.4, -0.2);
    let gap = (f_value(&sd, e.conj()).unwrap() - f_value(&sd, e).unwrap().conj()).norm();
    assert!(gap > 1e-3);
}

#[test]
fn seeds_and_alpha_bounds() {
    let (_, _, sd, edge) = dimer_setup(400);
    let eps: f64 = 0.2;
    let n_max = (eps * 400.0 / 10.0) as usize;
    for n in 0..=n_max {
        let (alpha, seed) = alpha_and_seed(&sd, edge.band_index, n).unwrap();
        let g = sd.in_band(edge.band_index)[n];
        let (lam, a) = (sd.lambdas[g], sd.weights_end[g]);
        assert!(alpha.norm() >= 0.1 && alpha.norm() <= 1.0 / (eps * eps));
        assert!(seed.im < 0.0);
        let s = theta(c(lam, 0.0)).unwrap().re.sin().abs();
        assert!((seed - lam).norm() <= a / s * (1.0 + 1e-12));
        assert!((alpha.im.abs() - s).abs() < 1e-12);
    }
}

#[test]
fn refined_zero_satisfies_equation() {
    let (_, _, sd, edge) = dimer_setup(400);
    let r = resolve_resonance(&sd, &edge, 3, &SweepConfig::default()).unwrap();
    let (f, _) = f_anchored(&sd, r.global_index, r.offset).unwrap();
    assert!(f.norm() <= 1e-11);
    // Seed error against (n+1)⁴/(L⁵|α|³), with the constant fixed at 1000.
    let bound = 1000.0 * 4f64.powi(4) / 400f64.powi(5) / r.alpha_n.norm().powi(3);
    assert!(r.seed_error() <= bound, "{} vs {bound}", r.seed_error());
}

#[test]
fn newton_reports_no_convergence() {
    let (_, _, sd, _) = dimer_setup(60);
    let err = newton_refine(&sd, c(0.5, -0.1), 1, 1e-300).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { .. }));
    assert!(newton_refine(&sd, c(0.5, 0.1), 10, 1e-12).is_err());
}

#[test]
fn width_formula_constant_is_stable() {
    // |Im z_n - a_n sin θ(λ_n)/|α_n|²| ≤ C (n+1)⁴/L⁵ with C taken from L = 400.
    let constant = |l: usize| {
        let (_, bs, sd, edge) = dimer_setup(l);
        let res = sweep_band_edge(&sd, &bs, &edge, &SweepConfig::default()).unwrap();
        res.iter()
            .map(|r| {
                let s = theta(c(r.lambda_n, 0.0)).unwrap().re.sin();
                let pred = r.a_n * s / r.alpha_n.norm_sqr();
                (r.offset.im - pred).abs() * (l as f64).powi(5) / ((r.n + 1) as f64).powi(4)
            })
            .fold(0.0, f64::max)
    };
    let (c400, c800) = (constant(400), constant(800));
    assert!(c400 > 0.0 && c800 <= 2.0 * c400, "{c400} vs {c800}");
}

#[test]
fn sweep_contract() {
    let (_, bs, sd, edge) = dimer_setup(400);
    let cfg = SweepConfig::default();
    let res = sweep_band_edge(&sd, &bs, &edge, &cfg).unwrap();
    assert_eq!(res.len(), 9);
    require_verified(&res).unwrap();
    for (n, r) in res.iter().enumerate() {
        assert_eq!(r.n, n);
        assert!(r.z.im < 0.0 && r.winding_verified && r.in_m_box);
        assert!(r.z.re >= r.bbox.x_lo && r.z.re <= r.bbox.x_hi);
        assert!((r.z - r.lambda_n).norm() <= cfg.c0 * (n + 1) as f64 / 400f64.powi(2));
        assert!(r.residual <= 1e-10);
    }
    assert_eq!(res[0].bbox.x_lo, -1.0);
    assert!(res.len() <= sd.l);

    let mut bad = res.clone();
    bad[4].winding_verified = false;
    bad[4].box_count = 2;
    assert!(matches!(
        require_verified(&bad),
        Err(Error::UniquenessFailed { n: 4, count: 2 })
    ));
}

#[test]
fn sweep_is_schedule_independent() {
    let (_, bs, sd, edge) = dimer_setup(200);
    let cfg = SweepConfig::default();
    let a = sweep_band_edge(&sd, &bs, &edge, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sweep_band_edge(&sd, &bs, &edge, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn sweep_refuses_non_generic_edge_and_bad_config() {
    let v = PeriodicPotential::new(vec![0.0, 3.0]).unwrap();
    let bs = band_structure(&v).unwrap();
    let sd = spectral_data(&v, &bs, 200, 0).unwrap();
    let edge = classify_edge(&v, &bs, 0.0, 0).unwrap();
    assert!(matches!(
        sweep_band_edge(&sd, &bs, &edge, &SweepConfig::default()),
        Err(Error::NonGenericEdge { .. })
    ));
    let edge = classify_edge(&v, &bs, -1.0, 0).unwrap();
    let cfg = SweepConfig { eps: 0.4, ..SweepConfig::default() };
    assert!(sweep_band_edge(&sd, &bs, &edge, &cfg).is_err());
    let cfg = SweepConfig { c1: 100.0, ..SweepConfig::default() };
    assert!(sweep_band_edge(&sd, &bs, &edge, &cfg).is_err());
}

#[test]
fn right_edge_sweep() {
    // Upper edge of the lower band for odd L is a GenericB edge.
    let v = PeriodicPotential::new(vec![0.0, 3.0]).unwrap();
    let bs = band_structure(&v).unwrap();
    let sd = spectral_data(&v, &bs, 401, 0).unwrap();
    let edge = classify_edge(&v, &bs, 0.0, 1).unwrap();
    assert_eq!(edge.side, EdgeSide::Right);
    let res = sweep_band_edge(&sd, &bs, &edge, &SweepConfig::default()).unwrap();
    assert_eq!(res.len(), 9);
    assert!(res.iter().all(|r| r.winding_verified && r.z.re < 0.0));
    assert_eq!(res[0].bbox.x_hi, 0.0);
}

#[test]
fn free_regions() {
    let (_, bs, sd, edge) = dimer_setup(400);
    let fr = free_region_check(&sd, &bs, &edge, 0.2).unwrap();
    assert!(fr.free && fr.count == 0);
    let (_, bs, sd, edge) = dimer_setup(800);
    assert!(free_region_check(&sd, &bs, &edge, 0.15).unwrap().free);
}

#[test]
fn free_region_rejects_occupied_interval() {
    // (0, 3, 1) at L = 300 has an end state at (1-√5)/2 just above the top
    // of its lowest band.
    let v = PeriodicPotential::new(vec![0.0, 3.0, 1.0]).unwrap();
    let bs = band_structure(&v).unwrap();
    let sd = spectral_data(&v, &bs, 300, 0).unwrap();
    let top = bs.bands[0].hi;
    let edge = classify_edge(&v, &bs, top, 0).unwrap();
    assert!(matches!(
        free_region_check(&sd, &bs, &edge, 0.1),
        Err(Error::EigenvalueInInterval { .. })
    ));
}

#[test]
fn boxes_without_zeros() {
    let (_, _, sd, _) = dimer_setup(100);
    let up = Rect::new(-0.9, -0.5, 0.01, 0.2).unwrap();
    assert_eq!(winding_count(&sd, &up, 8).unwrap(), 0);
    // Shallow box under an eigenvalue-free stretch of the upper gap.
    let bx = ResonanceBox {
        x_lo: 1.0,
        x_hi: 1.5,
        depth: 1e-3,
        n: 0,
        convention_left: LeftConvention::EpsShifted,
    };
    assert_eq!(count_in_box(&sd, &bx, Some(1e-3)).unwrap(), 0);
}

#[test]
fn im_s_region() {
    let (_, _, sd, edge) = dimer_setup(400);
    for n in [0, 1, 2, 4] {
        let r = im_s_grid_max(&sd, &edge, n, 0.2, 5.0, 30).unwrap();
        assert!(r.max_abs_im_s <= 2.0 && r.certifies_no_root());
    }
    assert!(matches!(
        im_s_grid_max(&sd, &edge, 2, 0.2, 50.0, 30),
        Err(Error::EmptyRegion(_))
    ));
}

/// Random rational function with known zeros and poles.
struct Rational {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
}

impl Rational {
    fn eval(&self, z: Complex64) -> Complex64 {
        let num: Complex64 = self.zeros.iter().map(|r| z - r).product();
        let den: Complex64 = self.poles.iter().map(|r| z - r).product();
        num / den
    }
}

fn far_from_boundary(rect: &Rect, z: Complex64, margin: f64) -> bool {
    let d = (z.re - rect.x_lo)
        .abs()
        .min((z.re - rect.x_hi).abs())
        .min((z.im - rect.y_lo).abs())
        .min((z.im - rect.y_hi).abs());
    let on_x = z.re > rect.x_lo - margin && z.re < rect.x_hi + margin;
    let on_y = z.im > rect.y_lo - margin && z.im < rect.y_hi + margin;
    !(on_x && on_y) || d > margin
}

#[test]
fn winding_counter_on_random_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut cases = 0;
    while cases < 50 {
        let x0 = rng.random_range(-2.0..1.0);
        let y0 = rng.random_range(-2.0..1.0);
        let rect = Rect::new(x0, x0 + rng.random_range(0.2..1.5), y0, y0 + rng.random_range(0.2..1.5)).unwrap();
        let mut pick = |k: usize| -> Vec<Complex64> {
            (0..k).map(|_| c(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5))).collect()
        };
        let nz = 1 + cases % 5;
        let np = cases % 4;
        let f = Rational {
            zeros: pick(nz),
            poles: pick(np),
        };
        if !f.zeros.iter().chain(&f.poles).all(|&z| far_from_boundary(&rect, z, 1e-3)) {
            continue;
        }
        let expect = f.zeros.iter().filter(|&&z| rect.contains(z)).count() as i64
            - f.poles.iter().filter(|&&z| rect.contains(z)).count() as i64;
        let got = winding_number(|z| Ok(f.eval(z)), &rect, 4).unwrap();
        assert_eq!(got, expect, "case {cases}");
        cases += 1;
    }
}
