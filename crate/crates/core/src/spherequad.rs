//! Quadrature on `S^{d-1}` and the oscillatory-integral engine.
//!
//! Grids are recursive product rules: a trapezoid rule on the circle and,
//! for each additional dimension, Gauss–Jacobi nodes in the new polar
//! coordinate `z` with weight `(1 - z^2)^{(k-3)/2}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{dot, norm, tangent_frame};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::special::{bessel_j, gamma, sphere_area};

#[derive(Debug, Clone)]
pub struct SphericalGrid {
    dim: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn pairwise_sum_c(v: &[Complex64]) -> Complex64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum_c(a) + pairwise_sum_c(b)
}

/// Gauss–Jacobi rule for the weight `(1 - z^2)^a` on `[-1, 1]`, `a > -1`.
///
/// Nodes are eigenvalues of the Jacobi matrix (implicit QL), polished by
/// Newton steps on the orthonormal recurrence; weights are Christoffel
/// numbers.
pub fn gauss_jacobi_symmetric(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mu0 = PI.sqrt() * gamma(a + 1.0) / gamma(a + 1.5);
    let b: Vec<f64> = (1..n)
        .map(|j| {
            let j = j as f64;
            (j * (j + 2.0 * a) / ((2.0 * j + 2.0 * a + 1.0) * (2.0 * j + 2.0 * a - 1.0))).sqrt()
        })
        .collect();
    let mut diag = vec![0.0; n];
    let mut off = b.clone();
    off.push(0.0);
    tqli(&mut diag, &mut off);
    diag.sort_by(f64::total_cmp);
    let eval = |z: f64| -> (f64, f64, f64) {
        // orthonormal p_k, returns (p_n, p_n', Σ_{k<n} p_k^2)
        let mut pm = 0.0;
        let mut p = 1.0 / mu0.sqrt();
        let mut dpm = 0.0;
        let mut dp = 0.0;
        let mut s = p * p;
        for k in 0..n {
            let bk = if k == 0 { 0.0 } else { b[k - 1] };
            let bk1 = if k + 1 < n { b[k] } else { (((k + 1) as f64) * ((k + 1) as f64 + 2.0 * a) / ((2.0 * (k + 1) as f64 + 2.0 * a + 1.0) * (2.0 * (k + 1) as f64 + 2.0 * a - 1.0))).sqrt() };
            let pn = (z * p - bk * pm) / bk1;
            let dpn = (p + z * dp - bk * dpm) / bk1;
            pm = p;
            p = pn;
            dpm = dp;
            dp = dpn;
            if k + 1 < n {
                s += p * p;
            }
        }
        (p, dp, s)
    };
    let mut w = vec![0.0; n];
    for (i, z) in diag.iter_mut().enumerate() {
        for _ in 0..3 {
            let (p, dp, _) = eval(*z);
            let step = p / dp;
            if step.is_finite() {
                *z -= step;
            }
        }
        w[i] = 1.0 / eval(*z).2;
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let z = 0.5 * (diag[n - 1 - i] - diag[i]);
        diag[i] = -z;
        diag[n - 1 - i] = z;
        let ww = 0.5 * (w[i] + w[n - 1 - i]);
        w[i] = ww;
        w[n - 1 - i] = ww;
    }
    if n % 2 == 1 {
        diag[n / 2] = 0.0;
    }
    (diag, w)
}

/// Eigenvalues of a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e[0..n-1]`), returned in `d`.
fn tqli(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tqli: no convergence");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn grid_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<SphericalGrid>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphericalGrid>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl SphericalGrid {
    /// Product grid of order `n`: `2n` azimuthal points and `n` Gauss–Jacobi
    /// nodes per additional dimension. Exact for polynomials of degree
    /// `≤ 2n - 1`.
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim >= 2 && n >= 1);
        let m = 2 * n;
        let mut nodes = Vec::with_capacity(m * 2);
        let mut weights = Vec::with_capacity(m);
        for k in 0..m {
            let phi = PI * k as f64 / n as f64;
            nodes.push(phi.cos());
            nodes.push(phi.sin());
            weights.push(PI / n as f64);
        }
        for k in 3..=dim {
            let (z, wz) = gauss_jacobi_symmetric(n, (k as f64 - 3.0) / 2.0);
            let prev = k - 1;
            let count = weights.len();
            let mut nn = Vec::with_capacity(count * n * k);
            let mut nw = Vec::with_capacity(count * n);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for j in 0..count {
                    nn.extend(nodes[j * prev..(j + 1) * prev].iter().map(|x| x * s));
                    nn.push(*zi);
                    nw.push(weights[j] * wi);
                }
            }
            nodes = nn;
            weights = nw;
        }
        SphericalGrid { dim, order: n, nodes, weights }
    }

    /// Shared grid from a process-wide cache.
    pub fn cached(dim: usize, n: usize) -> Arc<Self> {
        let mut c = grid_cache().lock().unwrap();
        c.entry((dim, n)).or_insert_with(|| Arc::new(SphericalGrid::new(dim, n))).clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluates `f` at every node (in parallel, order preserved).
    pub fn map_nodes<T: Send, F: Fn(&[f64]) -> T + Sync>(&self, f: F) -> Vec<T> {
        (0..self.len()).into_par_iter().map(|i| f(self.node(i))).collect()
    }

    /// `Σ w_i F(θ_i)`, bit-for-bit reproducible.
    pub fn integrate<F: Fn(&[f64]) -> Complex64 + Sync>(&self, f: F) -> Complex64 {
        let vals: Vec<Complex64> = (0..self.len()).into_par_iter().map(|i| f(self.node(i)) * self.weights[i]).collect();
        pairwise_sum_c(&vals)
    }

    pub fn integrate_real<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let vals: Vec<f64> = (0..self.len()).into_par_iter().map(|i| f(self.node(i)) * self.weights[i]).collect();
        pairwise_sum(&vals)
    }
}

/// `∫_{S^{d-1}} e^{iρθ_d} dσ = (2π)^{d/2} ρ^{1-d/2} J_{d/2-1}(ρ)`.
pub fn bessel_surface(d: usize, rho: f64) -> f64 {
    assert!(rho >= 0.0);
    let nu = d as f64 / 2.0 - 1.0;
    if rho < 1e-8 {
        // J_ν(ρ) ≈ (ρ/2)^ν/Γ(ν+1)
        return sphere_area(d) * (1.0 - rho * rho / (2.0 * d as f64));
    }
    (2.0 * PI).powf(d as f64 / 2.0) * rho.powf(-nu) * bessel_j(nu, rho)
}

/// Smooth step: 0 for `x ≤ lo`, 1 for `x ≥ hi`, built from `exp(-1/x)`.
pub fn smooth_step(x: f64, lo: f64, hi: f64) -> f64 {
    let g = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let s = (x - lo) / (hi - lo);
    let a = g(s);
    let b = g(1.0 - s);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// The cutoff family `χ_{-1}, χ_0, χ_1` on `[-1, 1]`.
///
/// `χ_1` is supported in `[lo, 1]` and equals 1 on `[hi, 1]`;
/// `χ_{-1}(s) = χ_1(-s)`; the three functions sum to one. Each is the
/// square of a smooth root, so the roots are an `L^2` partition as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub lo: f64,
    pub hi: f64,
}

impl Default for CutoffFamily {
    fn default() -> Self {
        CutoffFamily { lo: 0.8, hi: 0.9 }
    }
}

impl CutoffFamily {
    pub fn root(&self, j: i32, s: f64) -> f64 {
        let a = smooth_step(s, self.lo, self.hi);
        let b = smooth_step(-s, self.lo, self.hi);
        match j {
            1 => (0.5 * PI * a).sin(),
            -1 => (0.5 * PI * b).sin(),
            0 => (0.5 * PI * a).cos() * (0.5 * PI * b).cos(),
            _ => panic!("cutoff index must be -1, 0 or 1"),
        }
    }

    /// `χ_j(s)`; `Σ_j χ_j = 1`.
    pub fn chi(&self, j: i32, s: f64) -> f64 {
        self.root(j, s).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscMethod {
    Quadrature,
    StationaryPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscResult {
    pub value: Complex64,
    pub method: OscMethod,
    pub t: f64,
    pub xi: Vec<f64>,
    pub beta0: Vec<f64>,
    pub error_estimate: f64,
    pub order: usize,
}

/// Tuning for [`osc_integral`].
#[derive(Debug, Clone, Copy)]
pub struct OscOptions {
    /// Force a grid order instead of the frequency rule.
    pub order: Option<usize>,
    /// Additional order for the bandwidth of `F` itself.
    pub extra_order: usize,
    /// Validate by order doubling.
    pub check: bool,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions { order: None, extra_order: 0, check: true }
    }
}

/// Sup norm plus Lipschitz bound of `x̃`, sampled on a coarse grid.
pub fn c1_norm<X: Fn(&[f64]) -> Vec<f64> + Sync>(dim: usize, xt: &X) -> (f64, f64) {
    let grid = SphericalGrid::cached(dim, 12);
    let h = 1e-5;
    let vals = grid.map_nodes(|u| {
        let x0 = xt(u);
        let e = tangent_frame(u);
        let mut lip = 0.0_f64;
        for k in 0..dim - 1 {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            for i in 0..dim {
                up[i] += h * e[(i, k)];
                dn[i] -= h * e[(i, k)];
            }
            let nu = norm(&up);
            let nd = norm(&dn);
            up.iter_mut().for_each(|x| *x /= nu);
            dn.iter_mut().for_each(|x| *x /= nd);
            let a = xt(&up);
            let b = xt(&dn);
            let dv: Vec<f64> = a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * h)).collect();
            lip = lip.max(norm(&dv));
        }
        (norm(&x0), lip)
    });
    vals.iter().fold((0.0_f64, 0.0_f64), |(a, b), (c, d)| (a.max(*c), b.max(*d)))
}

/// Grid order from the frequency rule `n ≥ 1.5 (t|ξ-β₀| + |ξ| ‖x̃‖_{C¹}) + 20`.
pub fn frequency_order(t: f64, xi: &[f64], beta0: &[f64], xt_c1: f64) -> usize {
    let diff: Vec<f64> = xi.iter().zip(beta0).map(|(a, b)| a - b).collect();
    let f = t.abs() * norm(&diff) + norm(xi) * xt_c1;
    let n = (1.5 * f + 20.0).ceil() as usize;
    n.div_ceil(8) * 8
}

fn osc_at_order<F, X>(f: &F, xt: &X, xi: &[f64], beta0: &[f64], t: f64, dim: usize, n: usize) -> (Complex64, f64)
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    X: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let grid = SphericalGrid::cached(dim, n);
    let vals: Vec<(Complex64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let th = grid.node(i);
            let x = xt(th);
            let mut ph = 0.0;
            for k in 0..dim {
                ph += (xi[k] - beta0[k]) * (t * th[k] + x[k]) + beta0[k] * x[k];
            }
            let fv = f(th);
            let w = grid.weights()[i];
            (Complex64::from_polar(1.0, ph) * fv * w, fv.norm() * w)
        })
        .collect();
    let v: Vec<Complex64> = vals.iter().map(|p| p.0).collect();
    let a: Vec<f64> = vals.iter().map(|p| p.1).collect();
    (pairwise_sum_c(&v), pairwise_sum(&a))
}

/// `∫ e^{i(ξ-β₀)·(tθ + x̃(θ))} e^{iβ₀·x̃(θ)} F(θ) dσ(θ)` by product quadrature.
pub fn osc_integral<F, X>(f: F, xt: X, xi: &[f64], beta0: &[f64], t: f64, opts: OscOptions) -> Result<OscResult>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    X: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let dim = xi.len();
    if beta0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: beta0.len() });
    }
    let n = match opts.order {
        Some(n) => n,
        None => {
            let (sup, lip) = c1_norm(dim, &xt);
            frequency_order(t, xi, beta0, sup + lip) + opts.extra_order
        }
    };
    let (v, mass) = osc_at_order(&f, &xt, xi, beta0, t, dim, n);
    let mut err = 0.0;
    if opts.check {
        let (v2, _) = osc_at_order(&f, &xt, xi, beta0, t, dim, 2 * n);
        err = (v2 - v).norm();
        if err > 1e-9 * v2.norm() + 1e-12 * mass.max(1.0) {
            return Err(Error::UnderResolved { diff: err });
        }
    }
    Ok(OscResult {
        value: v,
        method: OscMethod::Quadrature,
        t,
        xi: xi.to_vec(),
        beta0: beta0.to_vec(),
        error_estimate: err,
        order: n,
    })
}

/// j=0 stationary-phase approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPhase {
    pub value: Complex64,
    /// `-(N + (d-1)/2)` with `N = 1`.
    pub remainder_order: f64,
}

pub fn stationary_phase<F, X>(f: F, xt: X, xi: &[f64], beta0: &[f64], t: f64) -> Result<StationaryPhase>
where
    F: Fn(&[f64]) -> Complex64,
    X: Fn(&[f64]) -> Vec<f64>,
{
    let d = xi.len();
    let diff: Vec<f64> = xi.iter().zip(beta0).map(|(a, b)| a - b).collect();
    let r = norm(&diff);
    if !(t > 0.0) || r == 0.0 {
        return Err(Error::Precondition("stationary phase needs t > 0 and ξ ≠ β₀".into()));
    }
    let omega: Vec<f64> = diff.iter().map(|x| x / r).collect();
    let rho = t * r;
    let amp = (2.0 * PI / rho).powf((d as f64 - 1.0) / 2.0);
    let q = PI * (d as f64 - 1.0) / 4.0;
    let mut v = Complex64::new(0.0, 0.0);
    for s in [1.0, -1.0] {
        let w: Vec<f64> = omega.iter().map(|x| s * x).collect();
        let x = xt(&w);
        v += Complex64::from_polar(amp, s * (rho - q) + dot(xi, &x)) * f(&w);
    }
    Ok(StationaryPhase { value: v, remainder_order: -(1.0 + (d as f64 - 1.0) / 2.0) })
}

/// Least-squares estimate of the next-order coefficients `A_±` in
/// `I - SP₀ ≈ t^{-(d+1)/2} (A_+ e^{iρ} + A_- e^{-iρ})`, `ρ = t|ξ-β₀|`.
pub fn next_order_coefficients<F, X>(f: F, xt: X, xi: &[f64], beta0: &[f64], ts: &[f64]) -> Result<(Complex64, Complex64)>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    X: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let d = xi.len();
    let diff: Vec<f64> = xi.iter().zip(beta0).map(|(a, b)| a - b).collect();
    let r = norm(&diff);
    let mut rows = Vec::new();
    for &t in ts {
        let q = osc_integral(&f, &xt, xi, beta0, t, OscOptions::default())?.value;
        let s = stationary_phase(&f, &xt, xi, beta0, t)?.value;
        rows.push((t * r, (q - s) * t.powf((d as f64 + 1.0) / 2.0)));
    }
    // complex normal equations for the 2x2 system
    let (mut a11, mut a12, mut a22) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (rho, y) in rows {
        let p = Complex64::from_polar(1.0, rho);
        let m = p.conj();
        a11 += p.conj() * p;
        a12 += p.conj() * m;
        a22 += m.conj() * m;
        b1 += p.conj() * y;
        b2 += m.conj() * y;
    }
    let a21 = a12.conj();
    let det = a11 * a22 - a12 * a21;
    Ok(((b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det))
}

/// Equator-localised piece of an oscillatory integral and its decay fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapDecayReport {
    pub ts: Vec<f64>,
    /// Window maxima of `|I^{(0)}|` at each `t`.
    pub envelope: Vec<f64>,
    pub exponent: f64,
    pub threshold: f64,
}

/// Equator cutoff: 1 on `|s| ≤ w/2`, 0 on `|s| ≥ w`.
pub fn equator_cutoff(s: f64, width: f64) -> f64 {
    1.0 - smooth_step(s.abs(), width / 2.0, width)
}

/// Non-stationary threshold `t > 2‖dx̃‖_∞ / sqrt(1 - w^2)`.
pub fn cap_threshold(dx_norm: f64, width: f64) -> f64 {
    2.0 * dx_norm / (1.0 - width * width).sqrt()
}

/// `I^{(0)}` localised by [`equator_cutoff`] around `ω^⊥`, `ω = ξ/|ξ|`.
pub fn cap_integral<F, X>(f: &F, xt: &X, xi: &[f64], t: f64, width: f64) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    X: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let r = norm(xi);
    let omega: Vec<f64> = xi.iter().map(|x| x / r).collect();
    let zero = vec![0.0; xi.len()];
    let g = |th: &[f64]| f(th) * equator_cutoff(dot(th, &omega), width);
    // the cutoff has steep transitions; raise the order until the doubling check passes
    let (sup, lip) = c1_norm(xi.len(), xt);
    let mut n = frequency_order(t, xi, &zero, sup + lip) + 40;
    loop {
        let opts = OscOptions { order: Some(n), ..Default::default() };
        match osc_integral(&g, xt, xi, &zero, t, opts) {
            Ok(r) => return Ok(r.value),
            Err(Error::UnderResolved { .. }) if n < CAP_MAX_ORDER => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

const CAP_MAX_ORDER: usize = 1024;

/// Decay exponent of the equator-localised integral over a dyadic `t` ladder.
pub fn cap_decay_check<F, X>(f: F, xt: X, xi: &[f64], ts: &[f64], width: f64) -> Result<CapDecayReport>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    X: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::InvalidArgument("cutoff width must lie in (0, 1)".into()));
    }
    let (_, lip) = c1_norm(xi.len(), &xt);
    let threshold = cap_threshold(lip, width);
    if let Some(t) = ts.iter().find(|t| **t <= threshold) {
        return Err(Error::Precondition(format!("t = {t} is below the non-stationary threshold {threshold}")));
    }
    let mut env = Vec::new();
    for &t in ts {
        let mut m = 0.0_f64;
        for k in 0..9 {
            let tk = t * (0.9 + 0.025 * k as f64);
            m = m.max(cap_integral(&f, &xt, xi, tk, width)?.norm());
        }
        env.push(m.max(1e-300));
    }
    let r = norm(xi);
    let lx: Vec<f64> = ts.iter().map(|t| (t * r).ln()).collect();
    let ly: Vec<f64> = env.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&lx, &ly);
    Ok(CapDecayReport { ts: ts.to_vec(), envelope: env, exponent: fit.slope, threshold })
}
