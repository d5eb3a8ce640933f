//! Geodesic flow on the unit tangent bundle of `T^d = R^d / 2πZ^d`:
//! twisted correlations of band-limited observables, anisotropic Sobolev
//! norms, and equidistribution of dilated convex boundaries.
//!
//! An observable is `φ(x, θ) = Σ_ξ φ̂_ξ(θ) e^{iξ·x}` with finitely many modes,
//! each a polynomial restricted to the sphere. The torus carries the
//! normalised Haar measure, so `∫_{ST^d} φψ = Σ_ξ ∫ φ̂_ξ ψ̂_{-ξ} dσ`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{norm, SupportBody};
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::poly::SpherePoly;
use crate::spherequad::{osc_integral, pairwise_sum, pairwise_sum_c, stationary_phase, CutoffFamily, OscOptions, SphericalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusObservable {
    pub dim: usize,
    pub modes: BTreeMap<Vec<i64>, SpherePoly>,
}

impl TorusObservable {
    pub fn new(dim: usize, modes: BTreeMap<Vec<i64>, SpherePoly>) -> Result<Self> {
        for (xi, p) in &modes {
            if xi.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: xi.len() });
            }
            if p.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim });
            }
        }
        Ok(TorusObservable { dim, modes })
    }

    /// Observable depending on `x` only: `Σ c_ξ e^{iξ·x}`.
    pub fn x_only(dim: usize, coeffs: &BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        let modes = coeffs.iter().map(|(xi, c)| (xi.clone(), SpherePoly::constant(dim, *c))).collect();
        Self::new(dim, modes)
    }

    pub fn is_x_only(&self) -> bool {
        self.modes.values().all(|p| p.degree() == 0)
    }

    /// `φ̂_{-ξ} = conj(φ̂_ξ)` for every mode.
    pub fn is_real(&self) -> bool {
        self.modes.iter().all(|(xi, p)| {
            let neg: Vec<i64> = xi.iter().map(|k| -k).collect();
            match self.modes.get(&neg) {
                Some(q) => q.terms.iter().all(|(e, c)| (p.terms.get(e).map_or(Complex64::new(0.0, 0.0), |v| v.conj()) - c).norm() < 1e-14),
                None => p.is_zero(),
            }
        })
    }

    pub fn eval(&self, x: &[f64], theta: &[f64]) -> Complex64 {
        self.modes
            .iter()
            .map(|(xi, p)| {
                let ph: f64 = xi.iter().zip(x).map(|(k, v)| *k as f64 * v).sum();
                p.eval(theta) * Complex64::from_polar(1.0, ph)
            })
            .sum()
    }

    pub fn conj(&self) -> Self {
        let modes = self.modes.iter().map(|(xi, p)| (xi.iter().map(|k| -k).collect(), p.conj())).collect();
        TorusObservable { dim: self.dim, modes }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        TorusObservable { dim: self.dim, modes: self.modes.iter().map(|(xi, p)| (xi.clone(), p.scale(c))).collect() }
    }

    fn max_degree(&self) -> u32 {
        self.modes.values().map(|p| p.degree()).max().unwrap_or(0)
    }
}

fn xi_f64(xi: &[i64]) -> Vec<f64> {
    xi.iter().map(|k| *k as f64).collect()
}

fn check_pair(phi: &TorusObservable, psi: &TorusObservable, beta0: &[f64]) -> Result<()> {
    if psi.dim != phi.dim {
        return Err(Error::DimensionMismatch { expected: phi.dim, got: psi.dim });
    }
    if beta0.len() != phi.dim {
        return Err(Error::DimensionMismatch { expected: phi.dim, got: beta0.len() });
    }
    Ok(())
}

/// Mode pairs `(ξ, φ̂_ξ ψ̂_{-ξ})`, in the order of `ξ`.
fn products(phi: &TorusObservable, psi: &TorusObservable) -> Vec<(Vec<i64>, SpherePoly)> {
    phi.modes
        .iter()
        .filter_map(|(xi, p)| {
            let neg: Vec<i64> = xi.iter().map(|k| -k).collect();
            psi.modes.get(&neg).map(|q| (xi.clone(), p.mul(q)))
        })
        .filter(|(_, p)| !p.is_zero())
        .collect()
}

fn is_beta_mode(xi: &[i64], beta0: &[f64]) -> bool {
    xi.iter().zip(beta0).all(|(k, b)| (*k as f64 - b).abs() < 1e-12)
}

/// `Σ_ξ ∫ φ̂_ξ(θ) ψ̂_{-ξ}(θ) e^{it(ξ-β₀)·θ} dσ(θ)`.
pub fn correlation(phi: &TorusObservable, psi: &TorusObservable, beta0: &[f64], t: f64) -> Result<Complex64> {
    check_pair(phi, psi, beta0)?;
    let d = phi.dim;
    let zero = vec![0.0; d];
    let terms: Vec<Complex64> = products(phi, psi)
        .par_iter()
        .map(|(xi, p)| {
            let opts = OscOptions { extra_order: p.degree() as usize + 8, ..OscOptions::default() };
            osc_integral(|th| p.eval(th), |_| zero.clone(), &xi_f64(xi), beta0, t, opts).map(|r| r.value)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum_c(&terms))
}

/// Constant contribution `E_{β₀}` of the mode `ξ = β₀` (zero unless `β₀ ∈ Z^d`).
pub fn leading_term(phi: &TorusObservable, psi: &TorusObservable, beta0: &[f64]) -> Result<Complex64> {
    check_pair(phi, psi, beta0)?;
    let mut e = Complex64::new(0.0, 0.0);
    for (xi, p) in products(phi, psi) {
        if is_beta_mode(&xi, beta0) {
            let grid = SphericalGrid::cached(phi.dim, p.degree() as usize / 2 + 4);
            e += grid.integrate(|th| p.eval(th));
        }
    }
    Ok(e)
}

/// `E_{β₀}` plus the `j = 0` stationary-phase terms of every other mode.
pub fn correlation_expansion(phi: &TorusObservable, psi: &TorusObservable, beta0: &[f64], t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Precondition("expansion needs t > 0".into()));
    }
    let mut v = leading_term(phi, psi, beta0)?;
    let zero = vec![0.0; phi.dim];
    for (xi, p) in products(phi, psi) {
        if is_beta_mode(&xi, beta0) {
            continue;
        }
        v += stationary_phase(|th| p.eval(th), |_| zero.clone(), &xi_f64(&xi), beta0, t)?.value;
    }
    Ok(v)
}

/// Direct quadrature of `∫_{ST^d} φψ` over a tensor grid on the torus
/// (exact for trigonometric polynomials) times a spherical grid.
pub fn direct_pairing(phi: &TorusObservable, psi: &TorusObservable) -> Result<Complex64> {
    check_pair(phi, psi, &vec![0.0; phi.dim])?;
    let d = phi.dim;
    let kmax = phi.modes.keys().chain(psi.modes.keys()).flat_map(|xi| xi.iter().map(|k| k.unsigned_abs())).max().unwrap_or(0);
    let m = (2 * kmax + 1) as usize;
    let grid = SphericalGrid::cached(d, (phi.max_degree() + psi.max_degree()) as usize / 2 + 4);
    let total = m.pow(d as u32);
    let vals: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; d];
            let mut r = idx;
            for xk in x.iter_mut() {
                *xk = 2.0 * std::f64::consts::PI * (r % m) as f64 / m as f64;
                r /= m;
            }
            grid.integrate(|th| phi.eval(&x, th) * psi.eval(&x, th))
        })
        .collect();
    Ok(pairwise_sum_c(&vals) / total as f64)
}

/// One sample of a correlation time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSample {
    pub t: f64,
    pub value: Complex64,
    pub expansion: Complex64,
    pub residual: f64,
}

pub fn correlation_series(phi: &TorusObservable, psi: &TorusObservable, beta0: &[f64], ts: &[f64]) -> Result<Vec<CorrelationSample>> {
    ts.iter()
        .map(|&t| {
            let value = correlation(phi, psi, beta0, t)?;
            let expansion = correlation_expansion(phi, psi, beta0, t)?;
            Ok(CorrelationSample { t, value, expansion, residual: (value - expansion).norm() })
        })
        .collect()
}

pub fn correlation_csv(samples: &[CorrelationSample]) -> String {
    let mut s = String::from("t,value_re,value_im,expansion_re,expansion_im,residual\n");
    for p in samples {
        s.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?}\n",
            p.t, p.value.re, p.value.im, p.expansion.re, p.expansion.im, p.residual
        ));
    }
    s
}

/// Parameters of the anisotropic norm: orders and weights on the middle
/// cap `C_0` and the polar caps `C_{±1}`, measured around `ξ − γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisoParams {
    pub s0: u32,
    pub s1: u32,
    pub n0: f64,
    pub n1: f64,
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub cutoffs: CutoffFamily,
}

/// Report of [`aniso_norm`] with the per-mode breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm: f64,
    /// `(ξ, middle-cap term, polar-cap term)` before summation.
    pub modes: Vec<(Vec<i64>, f64, f64)>,
}

/// Rotation-generator derivatives of order exactly `k`.
fn derivatives(p: &SpherePoly, k: u32) -> Vec<SpherePoly> {
    let d = p.dim;
    let mut cur = vec![p.clone()];
    for _ in 0..k {
        let mut next = Vec::new();
        for q in &cur {
            for i in 0..d {
                for j in i + 1..d {
                    next.push(q.rotation_generator(i, j));
                }
            }
        }
        cur = next;
    }
    cur
}

/// `∫ w(θ) Σ_{k≤s} Σ |L^k p|² dσ`.
fn masked_sobolev(grid: &SphericalGrid, p: &SpherePoly, s: u32, mask: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let ders: Vec<SpherePoly> = (0..=s).flat_map(|k| derivatives(p, k)).collect();
    let vals = grid.map_nodes(|th| {
        let w = mask(th);
        if w == 0.0 {
            0.0
        } else {
            w * ders.iter().map(|q| q.eval(th).norm_sqr()).sum::<f64>()
        }
    });
    let weighted: Vec<f64> = vals.iter().zip(grid.weights()).map(|(v, w)| v * w).collect();
    pairwise_sum(&weighted)
}

/// `(Σ_ξ ⟨ξ⟩^{2N₀}‖φ̂_ξ‖²_{H^{s₀}(C₀)} + Σ_{ξ,±} ⟨ξ⟩^{2N₁}‖φ̂_ξ‖²_{H^{s₁}(C_±)})^{1/2}`,
/// with the caps entering as `χ_j`-weighted quadrature masks.
pub fn aniso_norm(phi: &TorusObservable, p: &AnisoParams) -> Result<NormReport> {
    let d = phi.dim;
    if p.gamma.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p.gamma.len() });
    }
    let deg = phi.max_degree() as usize;
    let grid = SphericalGrid::cached(d, (deg + 96).div_ceil(8) * 8);
    let fam = p.cutoffs;
    let modes: Vec<(Vec<i64>, f64, f64)> = phi
        .modes
        .iter()
        .map(|(xi, q)| {
            let diff: Vec<f64> = xi.iter().zip(&p.gamma).map(|(k, g)| *k as f64 - g).collect();
            let r = norm(&diff);
            let omega: Vec<f64> = if r < 1e-12 {
                let mut e = vec![0.0; d];
                e[d - 1] = 1.0;
                e
            } else {
                diff.iter().map(|x| x / r).collect()
            };
            let cos = |th: &[f64]| th.iter().zip(&omega).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
            let bracket = 1.0 + xi.iter().map(|k| (*k as f64).powi(2)).sum::<f64>();
            let mid = masked_sobolev(&grid, q, p.s0, &|th| fam.chi(0, cos(th)));
            let pol = masked_sobolev(&grid, q, p.s1, &|th| fam.chi(1, cos(th)) + fam.chi(-1, cos(th)));
            (xi.clone(), bracket.powf(p.n0) * mid, bracket.powf(p.n1) * pol)
        })
        .collect();
    let total: Vec<f64> = modes.iter().map(|(_, a, b)| a + b).collect();
    Ok(NormReport { norm: pairwise_sum(&total).sqrt(), modes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub t: f64,
    pub average: Complex64,
    /// `average − (2π)^{-d} ∫ f`.
    pub error: Complex64,
    /// Same error from the mode sum of oscillatory integrals.
    pub error_mode_sum: Complex64,
}

/// Average of `f` over the dilated boundary `∂(K + tB)` projected to the torus,
/// against the surface measure `P_K(t,θ) dσ`.
pub fn equidistribute(k: &SupportBody, f: &TorusObservable, t: f64) -> Result<EquidistReport> {
    let d = k.dim();
    if f.dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim });
    }
    if !f.is_x_only() {
        return Err(Error::Precondition("equidistribute takes observables of x only".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Precondition("equidistribute needs t > 0".into()));
    }
    let coeff = |xi: &[i64]| f.modes.get(xi).map_or(Complex64::new(0.0, 0.0), |p| p.eval(&vec![0.0; d]));
    let mean = coeff(&vec![0; d]);
    let zero = vec![0.0; d];
    let opts = OscOptions { extra_order: 48, ..OscOptions::default() };

    // mode sum: Σ_ξ c_ξ ∫ e^{iξ·(x_K + tθ)} P_K dσ
    let mass = osc_integral(|th| Complex64::new(k.area_element(t, th), 0.0), |th| k.inverse_gauss(th), &zero, &zero, t, opts)?.value.re;
    let parts: Vec<Complex64> = f
        .modes
        .iter()
        .filter(|(xi, _)| xi.iter().any(|v| *v != 0))
        .map(|(xi, p)| {
            let c = p.eval(&zero);
            osc_integral(|th| Complex64::new(k.area_element(t, th), 0.0), |th| k.inverse_gauss(th), &xi_f64(xi), &zero, t, opts)
                .map(|r| r.value * c)
        })
        .collect::<Result<_>>()?;
    let error_mode_sum = pairwise_sum_c(&parts) / mass;

    // direct quadrature of f itself
    let kmax = f.modes.keys().map(|xi| norm(&xi_f64(xi))).fold(0.0, f64::max);
    let (sup, lip) = crate::spherequad::c1_norm(d, &|th: &[f64]| k.inverse_gauss(th));
    let mut n = crate::spherequad::frequency_order(t, &vec![kmax; 1], &[0.0], sup + lip) + 48;
    let direct = |n: usize| -> (Complex64, f64) {
        let grid = SphericalGrid::cached(d, n);
        let vals = grid.map_nodes(|th| {
            let x: Vec<f64> = k.inverse_gauss(th).iter().zip(th).map(|(a, b)| a + t * b).collect();
            let w = k.area_element(t, th);
            (f.eval(&x, th) * w, w)
        });
        let a: Vec<Complex64> = vals.iter().zip(grid.weights()).map(|(v, w)| v.0 * *w).collect();
        let b: Vec<f64> = vals.iter().zip(grid.weights()).map(|(v, w)| v.1 * w).collect();
        (pairwise_sum_c(&a), pairwise_sum(&b))
    };
    let (mut num, mut den) = direct(n);
    loop {
        let (num2, den2) = direct(2 * n);
        let diff = (num2 / den2 - num / den).norm();
        num = num2;
        den = den2;
        if diff < 1e-12 * (1.0 + (num / den).norm()) {
            break;
        }
        n *= 2;
        if n > 8192 {
            return Err(Error::UnderResolved { diff });
        }
    }
    let average = num / den;
    Ok(EquidistReport { t, average, error: average - mean, error_mode_sum })
}

/// Log-log slope of the dyadic envelope: the largest `|v|` in each block
/// `[2^k t₀, 2^{k+1} t₀)` against the block's geometric midpoint.
pub fn envelope_slope(ts: &[f64], vals: &[f64]) -> Result<LineFit> {
    if ts.len() != vals.len() || ts.is_empty() {
        return Err(Error::InvalidArgument("envelope needs matching nonempty samples".into()));
    }
    let t0 = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let mut blocks: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (t, v) in ts.iter().zip(vals) {
        let k = (t / t0).log2().floor() as i64;
        let e = blocks.entry(k).or_insert((0.0, 0.0));
        if v.abs() > e.1 {
            *e = (*t, v.abs());
        }
    }
    if blocks.len() < 3 {
        return Err(Error::InvalidArgument("envelope needs at least three dyadic blocks".into()));
    }
    let lx: Vec<f64> = blocks.keys().map(|k| (t0 * 2f64.powf(*k as f64 + 0.5)).ln()).collect();
    let ly: Vec<f64> = blocks.values().map(|(_, v)| v.ln()).collect();
    Ok(fit_line(&lx, &ly))
}
