//! Complex polynomials in the ambient coordinates, used as functions on the
//! sphere (observable modes, support-function perturbations).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `Σ c_α θ^α` with multi-indices `α ∈ N^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoly {
    pub dim: usize,
    pub terms: BTreeMap<Vec<u32>, Complex64>,
}

impl SpherePoly {
    pub fn zero(dim: usize) -> Self {
        SpherePoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Complex64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, c: Complex64) {
        assert_eq!(exponents.len(), self.dim);
        let e = self.terms.entry(exponents).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.norm() == 0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = 1.0;
            for (xi, &k) in x.iter().zip(e) {
                m *= xi.powi(k as i32);
            }
            s += c * m;
        }
        s
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SpherePoly { dim: self.dim, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn conj(&self) -> Self {
        SpherePoly { dim: self.dim, terms: self.terms.iter().map(|(e, v)| (e.clone(), v.conj())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    /// `∂/∂x_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                p.add_term(f, c * e[i] as f64);
            }
        }
        p
    }

    /// Multiplication by `x_i`.
    pub fn times_coord(&self, i: usize) -> Self {
        let mut p = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let mut f = e.clone();
            f[i] += 1;
            p.add_term(f, *c);
        }
        p
    }

    /// Rotation generator `L_ij = x_i ∂_j − x_j ∂_i`, tangent to every sphere.
    pub fn rotation_generator(&self, i: usize, j: usize) -> Self {
        let a = self.partial(j).times_coord(i);
        let b = self.partial(i).times_coord(j);
        a.add(&b.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Real gradient of the real part, evaluated at `x`.
    pub fn gradient_re(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.partial(i).eval(x).re).collect()
    }

    /// Real Hessian of the real part, evaluated at `x` (row-major).
    pub fn hessian_re(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            let pi = self.partial(i);
            for j in 0..d {
                h[i * d + j] = pi.partial(j).eval(x).re;
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn eval_and_algebra() {
        let p = SpherePoly::monomial(vec![2, 0, 1], c(3.0));
        assert_eq!(p.eval(&[2.0, 5.0, -1.0]), c(-12.0));
        let q = p.mul(&SpherePoly::constant(3, c(2.0))).add(&p);
        assert_eq!(q.eval(&[1.0, 1.0, 1.0]), c(9.0));
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn rotation_generator_annihilates_radial() {
        // |x|^2 is rotation invariant
        let mut r2 = SpherePoly::zero(3);
        for i in 0..3 {
            let mut e = vec![0; 3];
            e[i] = 2;
            r2.add_term(e, c(1.0));
        }
        assert!(r2.rotation_generator(0, 1).is_zero());
        // L_12 x_1 = -x_2
        let x1 = SpherePoly::monomial(vec![1, 0, 0], c(1.0));
        let l = x1.rotation_generator(0, 1);
        assert_eq!(l.eval(&[0.3, 0.7, 0.1]), c(-0.7));
    }
}
