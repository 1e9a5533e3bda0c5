//! Compensated summation and a small double-double type used as an
//! extended-precision reference.

use num_complex::Complex64;

/// Error-free `a + b = s + err`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free `a * b = p + err`.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Running sum with a Kahan–Neumaier correction term.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
    }

    pub fn merge(&mut self, other: KahanSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const BLOCK: usize = 128;

/// Pairwise reduction over blocks, each block summed with compensation.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    pairwise(xs).value()
}

fn pairwise(xs: &[f64]) -> KahanSum {
    if xs.len() <= BLOCK {
        let mut acc = KahanSum::default();
        xs.iter().for_each(|&x| acc.add(x));
        return acc;
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    let mut acc = pairwise(l);
    acc.merge(pairwise(r));
    acc
}

/// Compensated pairwise sum of `f(i)` for `i in 0..n` with complex values.
pub fn compensated_complex_sum(n: usize, f: impl Fn(usize) -> Complex64 + Copy) -> Complex64 {
    fn rec(lo: usize, hi: usize, f: impl Fn(usize) -> Complex64 + Copy) -> (KahanSum, KahanSum) {
        if hi - lo <= BLOCK {
            let mut re = KahanSum::default();
            let mut im = KahanSum::default();
            for i in lo..hi {
                let z = f(i);
                re.add(z.re);
                im.add(z.im);
            }
            return (re, im);
        }
        let mid = lo + (hi - lo) / 2;
        let (mut re, mut im) = rec(lo, mid, f);
        let (r2, i2) = rec(mid, hi, f);
        re.merge(r2);
        im.merge(i2);
        (re, im)
    }
    let (re, im) = rec(0, n, f);
    Complex64::new(re.value(), im.value())
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Self { hi: s, lo: e }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let e = e + t;
        let (s, e) = two_sum(s, e);
        Self::renorm(s, e + f)
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        Self::renorm(p, e)
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Self::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Self::from_f64(q2)));
        let q3 = r.hi / o.hi;
        Self::from_f64(q1)
            .add(Self::from_f64(q2))
            .add(Self::from_f64(q3))
    }
}

/// Complex number with double-double parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexDD {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

impl ComplexDD {
    pub fn from_c64(z: Complex64) -> Self {
        Self {
            re: DoubleDouble::from_f64(z.re),
            im: DoubleDouble::from_f64(z.im),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(self, o: Self) -> Self {
        Self {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    /// `a / (lambda - e)` with real `a`, `lambda`.
    pub fn term(a: f64, lambda: f64, e: Complex64) -> Self {
        let dx = DoubleDouble::from_f64(lambda).sub(DoubleDouble::from_f64(e.re));
        let dy = DoubleDouble::from_f64(-e.im);
        // a (dx - i dy) / (dx² + dy²)
        let den = dx.mul(dx).add(dy.mul(dy));
        let a = DoubleDouble::from_f64(a);
        Self {
            re: a.mul(dx).div(den),
            im: a.mul(dy).neg().div(den),
        }
    }
}
