//! Dense real polynomials with coefficients stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `x - root`.
    pub fn linear(root: f64) -> Self {
        Poly(vec![-root, 1.0])
    }

    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn degree(&self) -> usize {
        self.0
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.0.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `Σ |c_i| |x|^i`, the natural scale of rounding errors in `eval(x)`.
    pub fn abs_scale(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.0.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn trimmed(mut self) -> Poly {
        let d = self.degree();
        self.0.truncate(d + 1);
        self
    }

    /// All complex roots, as eigenvalues of the companion matrix.
    pub fn companion_roots(&self) -> Vec<Complex64> {
        let p = self.clone().trimmed();
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.0[n];
        if n == 1 {
            return vec![Complex64::new(-p.0[0] / lead, 0.0)];
        }
        let mut c = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            c[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            c[(i, n - 1)] = -p.0[i] / lead;
        }
        c.complex_eigenvalues().iter().copied().collect()
    }

    /// Newton polish of a simple real root. Stops once the residual stops
    /// improving; returns the best iterate and its residual.
    pub fn polish_root(&self, x0: f64, max_iter: usize) -> (f64, f64) {
        let mut x = x0;
        let mut best = (x, self.eval(x).abs());
        for _ in 0..max_iter {
            let (v, dv) = self.eval_with_derivative(x);
            if v == 0.0 || dv == 0.0 {
                break;
            }
            let next = x - v / dv;
            let r = self.eval(next).abs();
            if r < best.1 {
                best = (next, r);
                x = next;
            } else {
                break;
            }
        }
        best
    }
}

impl serde::Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<f64>::deserialize(d).map(Poly)
    }
}
