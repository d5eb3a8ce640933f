//! Orthogeodesics between two projected convex bodies.
//!
//! An orthogeodesic from `K₁` to `K₂` with lattice index `ξ` corresponds to
//! the maximiser of `θ ↦ θ·2πξ − h_L(θ)` on the sphere, where
//! `L = K₁ ⊕ (−K₂)`; the maximum is its length.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::{dot, norm, tangent_frame, SupportBody};
use crate::error::{Error, Result};
use crate::fit::fit_polynomial;
use crate::special::normal_cdf;

/// The two convex orientation conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Leave `K₁` along its outward normal, enter `K₂` against it.
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
}

impl std::str::FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+-" | "(+,-)" => Ok(Orientation::PlusMinus),
            "-+" | "(-,+)" => Ok(Orientation::MinusPlus),
            other => Err(Error::UnsupportedOrientation(format!(
                "{other}: only the convex conventions (+,-) and (-,+) are implemented"
            ))),
        }
    }
}

/// Closed one-form `β = β₀·dx + df` with `f` a real trigonometric polynomial
/// `f(x) = Σ c_k e^{ik·x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistForm {
    pub beta0: Vec<f64>,
    pub f: BTreeMap<Vec<i64>, Complex64>,
}

impl TwistForm {
    pub fn zero(dim: usize) -> Self {
        TwistForm { beta0: vec![0.0; dim], f: BTreeMap::new() }
    }

    pub fn new(beta0: Vec<f64>, f: BTreeMap<Vec<i64>, Complex64>) -> Result<Self> {
        let d = beta0.len();
        if beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("beta0 must be finite".into()));
        }
        for (k, c) in &f {
            if k.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.len() });
            }
            let minus: Vec<i64> = k.iter().map(|x| -x).collect();
            let partner = f.get(&minus).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-12 {
                return Err(Error::InvalidArgument(format!("f is not real: coefficient {k:?} lacks its conjugate partner")));
            }
        }
        Ok(TwistForm { beta0, f })
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    pub fn f_value(&self, x: &[f64]) -> f64 {
        self.f.iter().map(|(k, c)| (c * Complex64::from_polar(1.0, k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum())).re).sum()
    }

    pub fn has_f(&self) -> bool {
        !self.f.is_empty()
    }

    /// True when `β₀ ∈ Z^d`.
    pub fn beta0_integral(&self) -> bool {
        self.beta0.iter().all(|b| (b - b.round()).abs() < 1e-12)
    }

    pub fn is_zero(&self) -> bool {
        self.beta0.iter().all(|b| *b == 0.0) && self.f.values().all(|c| c.norm() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthogeodesic {
    pub xi: Vec<i64>,
    pub theta: Vec<f64>,
    pub length: f64,
    /// Lifted endpoint on `∂K₁`.
    pub foot1: Vec<f64>,
    /// Lifted endpoint on `∂K₂`.
    pub foot2: Vec<f64>,
    pub phase: Complex64,
}

/// A lattice index whose maximiser failed the transversality test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub xi: Vec<i64>,
    pub length: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumQuery {
    pub dim: usize,
    pub orientation: Orientation,
    pub t0: f64,
    pub t_max: f64,
    pub beta: TwistForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSpectrum {
    pub query: SpectrumQuery,
    /// Sorted by `(length, ξ)`.
    pub records: Vec<Orthogeodesic>,
    pub rejected: Vec<Rejection>,
    pub grouping_tol: f64,
}

/// Default `T₀ = 2(r_max(K₁) + r_max(K₂)) + 1`.
pub fn default_t0(k1: &SupportBody, k2: &SupportBody) -> f64 {
    2.0 * (k1.r_max() + k2.r_max()) + 1.0
}

/// The body `L` whose lattice dilations encode the spectrum, and the
/// (start, end) bodies of the geodesics.
fn governing<'a>(k1: &'a SupportBody, k2: &'a SupportBody, orient: Orientation) -> Result<(SupportBody, &'a SupportBody, &'a SupportBody)> {
    let (a, b) = match orient {
        Orientation::PlusMinus => (k1, k2),
        Orientation::MinusPlus => (k2, k1),
    };
    Ok((a.minkowski_sum(&b.reflect())?, a, b))
}

/// Difference body `K₁ ⊕ (−K₂)` for `(+,−)` and `K₂ ⊕ (−K₁)` for `(−,+)`.
pub fn difference_body(k1: &SupportBody, k2: &SupportBody, orient: Orientation) -> Result<SupportBody> {
    Ok(governing(k1, k2, orient)?.0)
}

struct Solve {
    theta: Vec<f64>,
    t: f64,
    grad: f64,
    min_eig: f64,
}

/// Riemannian Newton for `max_θ θ·v − h_L(θ)`.
fn newton(l: &SupportBody, v: &[f64], theta0: &[f64]) -> Option<Solve> {
    let d = v.len();
    let mut th = theta0.to_vec();
    let mut best: Option<Solve> = None;
    for _ in 0..50 {
        let x = l.inverse_gauss(&th);
        let t = dot(&th, v) - l.support(&th);
        let e = tangent_frame(&th);
        let r: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
        let g = e.transpose() * DVector::from_column_slice(&r);
        let gn = g.norm();
        let hess = e.transpose() * l.hessian(&th) * &e + DMatrix::identity(d - 1, d - 1) * t;
        let hess = (&hess + hess.transpose()) * 0.5;
        let eig = SymmetricEigen::new(hess.clone());
        let min_eig = eig.eigenvalues.min();
        if !gn.is_finite() || !t.is_finite() {
            return None;
        }
        let cur = Solve { theta: th.clone(), t, grad: gn, min_eig };
        if gn <= 1e-12 * v.iter().map(|x| x.abs()).fold(1.0, f64::max) {
            return Some(cur);
        }
        if best.as_ref().is_none_or(|b| gn < b.grad) {
            best = Some(cur);
        }
        let eta = if min_eig > 1e-12 {
            eig.eigenvectors.clone() * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x)) * eig.eigenvectors.transpose() * &g
        } else {
            // gradient ascent step when the model is not concave
            g.clone() / t.abs().max(1.0)
        };
        let step = &e * eta;
        let sn = step.norm();
        let scale = if sn > 0.5 { 0.5 / sn } else { 1.0 };
        for i in 0..d {
            th[i] += scale * step[i];
        }
        let n = norm(&th);
        th.iter_mut().for_each(|x| *x /= n);
    }
    best.filter(|b| b.grad < 1e-9)
}

/// 64 seed directions around `θ₀` (the whole circle when `d = 2`).
fn restart_seeds(theta0: &[f64]) -> Vec<Vec<f64>> {
    let d = theta0.len();
    let mut out = Vec::with_capacity(64);
    if d == 2 {
        for k in 0..64 {
            let a = 2.0 * PI * k as f64 / 64.0;
            out.push(vec![a.cos(), a.sin()]);
        }
        return out;
    }
    let e = tangent_frame(theta0);
    let mut s = 0.5_f64;
    for _ in 0..64 {
        let mut th = theta0.to_vec();
        for k in 0..d - 1 {
            s = (s * 7919.0 + 0.318).fract();
            let c = 1.2 * (2.0 * s - 1.0);
            for i in 0..d {
                th[i] += c * e[(i, k)];
            }
        }
        let n = norm(&th);
        out.push(th.into_iter().map(|x| x / n).collect());
    }
    out
}

fn solve_index(l: &SupportBody, xi: &[i64], centre: &[f64]) -> Result<Option<Solve>> {
    let v: Vec<f64> = xi.iter().map(|&k| 2.0 * PI * k as f64).collect();
    let dir: Vec<f64> = v.iter().zip(centre).map(|(a, b)| a - b).collect();
    let n = norm(&dir);
    if n < 1e-12 {
        return Ok(None);
    }
    let theta0: Vec<f64> = dir.iter().map(|x| x / n).collect();
    if let Some(s) = newton(l, &v, &theta0) {
        return Ok(Some(s));
    }
    let obj = |th: &[f64]| dot(th, &v) - l.support(th);
    let seed = restart_seeds(&theta0)
        .into_iter()
        .max_by(|a, b| obj(a).total_cmp(&obj(b)))
        .unwrap();
    match newton(l, &v, &seed) {
        Some(s) => Ok(Some(s)),
        None => Err(Error::NewtonDiverged { xi: xi.to_vec() }),
    }
}

/// All `ξ ∈ Z^d` with `|2πξ| ≤ radius`.
pub fn lattice_ball(d: usize, radius: f64) -> Vec<Vec<i64>> {
    let rmax = (radius / (2.0 * PI)).floor() as i64;
    let first: Vec<i64> = (-rmax..=rmax).collect();
    let mut out: Vec<Vec<i64>> = first
        .par_iter()
        .flat_map_iter(|&k0| {
            let mut acc = Vec::new();
            let mut cur = vec![k0];
            fill(d, radius, &mut cur, (2.0 * PI * k0 as f64).powi(2), &mut acc);
            acc
        })
        .collect();
    out.sort();
    out
}

fn fill(d: usize, radius: f64, cur: &mut Vec<i64>, r2: f64, acc: &mut Vec<Vec<i64>>) {
    if r2 > radius * radius {
        return;
    }
    if cur.len() == d {
        acc.push(cur.clone());
        return;
    }
    let rem = (radius * radius - r2).max(0.0).sqrt();
    let m = (rem / (2.0 * PI)).floor() as i64;
    for k in -m..=m {
        cur.push(k);
        fill(d, radius, cur, r2 + (2.0 * PI * k as f64).powi(2), acc);
        cur.pop();
    }
}

/// Enumerates the orthogeodesics with `T₀ < ℓ ≤ T`.
pub fn enumerate(k1: &SupportBody, k2: &SupportBody, orient: Orientation, t0: Option<f64>, t_max: f64, beta: &TwistForm) -> Result<LengthSpectrum> {
    let d = k1.dim();
    if k2.dim() != d || beta.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: if k2.dim() != d { k2.dim() } else { beta.dim() } });
    }
    let t0 = t0.unwrap_or_else(|| default_t0(k1, k2));
    if !(t0 > 0.0 && t_max > t0) {
        return Err(Error::InvalidArgument(format!("need 0 < T0 < T, got T0 = {t0}, T = {t_max}")));
    }
    let (l, start_body, end_body) = governing(k1, k2, orient)?;
    let hb = l.support_bound();
    let centre = l.interior_point();
    let cands = lattice_ball(d, t_max + hb + 1.0);
    let point_a = l.point_location().map(|a| a.to_vec());

    let results: Vec<Result<Option<std::result::Result<Orthogeodesic, Rejection>>>> = cands
        .par_iter()
        .map(|xi| {
            let v: Vec<f64> = xi.iter().map(|&k| 2.0 * PI * k as f64).collect();
            let vn = norm(&v);
            if vn + hb <= t0 || vn - hb > t_max {
                return Ok(None);
            }
            let (theta, t, min_eig) = if let Some(a) = &point_a {
                let w: Vec<f64> = v.iter().zip(a).map(|(p, q)| p - q).collect();
                let t = norm(&w);
                if t == 0.0 {
                    return Ok(None);
                }
                (w.iter().map(|x| x / t).collect::<Vec<f64>>(), t, t)
            } else {
                match solve_index(&l, xi, &centre)? {
                    None => return Ok(None),
                    Some(s) => (s.theta, s.t, s.min_eig),
                }
            };
            if !(t > t0 && t <= t_max) {
                return Ok(None);
            }
            if min_eig < 1e-6 {
                return Ok(Some(Err(Rejection { xi: xi.clone(), length: t, min_eigenvalue: min_eig })));
            }
            let neg: Vec<f64> = theta.iter().map(|x| -x).collect();
            let start = start_body.inverse_gauss(&theta);
            let end: Vec<f64> = end_body.inverse_gauss(&neg).iter().zip(&v).map(|(p, q)| p + q).collect();
            let mut ph = beta.beta0.iter().zip(&theta).map(|(b, th)| b * t * th).sum::<f64>();
            if beta.has_f() {
                ph += beta.f_value(&end) - beta.f_value(&start);
            }
            let (foot1, foot2) = match orient {
                Orientation::PlusMinus => (start, end),
                Orientation::MinusPlus => (end, start),
            };
            Ok(Some(Ok(Orthogeodesic { xi: xi.clone(), theta, length: t, foot1, foot2, phase: Complex64::from_polar(1.0, ph) })))
        })
        .collect();

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for r in results {
        match r? {
            None => {}
            Some(Ok(g)) => records.push(g),
            Some(Err(rj)) => rejected.push(rj),
        }
    }
    records.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.xi.cmp(&b.xi)));
    rejected.sort_by(|a, b| a.xi.cmp(&b.xi));
    Ok(LengthSpectrum {
        query: SpectrumQuery { dim: d, orientation: orient, t0, t_max, beta: beta.clone() },
        records,
        rejected,
        grouping_tol: 1e-9,
    })
}

impl LengthSpectrum {
    pub fn dim(&self) -> usize {
        self.query.dim
    }

    pub fn t0(&self) -> f64 {
        self.query.t0
    }

    pub fn t_max(&self) -> f64 {
        self.query.t_max
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.length).collect()
    }

    /// Distinct lengths with multiplicities (grouped within `grouping_tol`).
    pub fn groups(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        let mut anchor = f64::NEG_INFINITY;
        for r in &self.records {
            match out.last_mut() {
                Some(last) if r.length - anchor <= self.grouping_tol => last.1 += 1,
                _ => {
                    anchor = r.length;
                    out.push((r.length, 1));
                }
            }
        }
        out
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t > self.query.t_max * (1.0 + 1e-15) {
            return Err(Error::Precondition(format!("T = {t} exceeds the enumerated range {}", self.query.t_max)));
        }
        Ok(())
    }

    /// `N(T) = Σ_{T₀<ℓ≤T} m_ℓ`.
    pub fn counting(&self, t: f64) -> Result<usize> {
        self.check_t(t)?;
        Ok(self.records.partition_point(|r| r.length <= t))
    }

    /// `N_β(T)`, the phase-weighted count.
    pub fn counting_weighted(&self, t: f64) -> Result<Complex64> {
        let n = self.counting(t)?;
        let v: Vec<Complex64> = self.records[..n].iter().map(|r| r.phase).collect();
        Ok(crate::spherequad::pairwise_sum_c(&v))
    }

    /// Gaussian-smoothed count `Σ Φ((T − ℓ)/σ)`; needs the spectrum up to `T + 8σ`.
    pub fn counting_smoothed(&self, t: f64, sigma: f64) -> Result<f64> {
        self.check_t(t + 8.0 * sigma)?;
        let hi = self.records.partition_point(|r| r.length <= t + 8.0 * sigma);
        let v: Vec<f64> = self.records[..hi].iter().map(|r| normal_cdf((t - r.length) / sigma)).collect();
        Ok(crate::spherequad::pairwise_sum(&v))
    }

    /// Phase-weighted smoothed count `Σ phase · Φ((T − ℓ)/σ)`.
    pub fn counting_smoothed_weighted(&self, t: f64, sigma: f64) -> Result<Complex64> {
        self.check_t(t + 8.0 * sigma)?;
        let hi = self.records.partition_point(|r| r.length <= t + 8.0 * sigma);
        let v: Vec<Complex64> = self.records[..hi].iter().map(|r| r.phase * normal_cdf((t - r.length) / sigma)).collect();
        Ok(crate::spherequad::pairwise_sum_c(&v))
    }

    /// Polynomial of degree `d` fitted to `N(T)` on `ts`.
    ///
    /// With `sigma > 0` the fit is made to the smoothed count and the
    /// Gaussian convolution is undone on the coefficients
    /// (`p = exp(−σ²/2 ∂²) p_σ`), which leaves the two top coefficients
    /// untouched and removes lattice noise from them.
    pub fn fit_counting(&self, ts: &[f64], sigma: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let ys: Vec<f64> = if sigma > 0.0 {
            ts.iter().map(|&t| self.counting_smoothed(t, sigma)).collect::<Result<_>>()?
        } else {
            ts.iter().map(|&t| self.counting(t).map(|n| n as f64)).collect::<Result<_>>()?
        };
        let c = fit_polynomial(ts, &ys, d);
        Ok(if sigma > 0.0 { undo_smoothing(&c, sigma) } else { c })
    }

    /// Same as [`fit_counting`](Self::fit_counting) for `N_β`, real and
    /// imaginary parts fitted separately.
    pub fn fit_counting_weighted(&self, ts: &[f64], sigma: f64) -> Result<Vec<Complex64>> {
        let d = self.dim();
        let ys: Vec<Complex64> = ts.iter().map(|&t| self.counting_smoothed_weighted(t, sigma)).collect::<Result<_>>()?;
        let re: Vec<f64> = ys.iter().map(|z| z.re).collect();
        let im: Vec<f64> = ys.iter().map(|z| z.im).collect();
        let cr = undo_smoothing(&fit_polynomial(ts, &re, d), sigma);
        let ci = undo_smoothing(&fit_polynomial(ts, &im, d), sigma);
        Ok(cr.iter().zip(&ci).map(|(a, b)| Complex64::new(*a, *b)).collect())
    }

    /// `Σ_{T≤ℓ≤T+1} m_ℓ`.
    pub fn window_count(&self, t: f64) -> Result<usize> {
        self.check_t(t + 1.0)?;
        let lo = self.records.partition_point(|r| r.length < t);
        let hi = self.records.partition_point(|r| r.length <= t + 1.0);
        Ok(hi - lo)
    }

    /// Records with `ℓ ≤ T`, as a truncated spectrum.
    pub fn truncate(&self, t: f64) -> LengthSpectrum {
        let n = self.records.partition_point(|r| r.length <= t);
        let mut q = self.query.clone();
        q.t_max = t.min(q.t_max);
        LengthSpectrum { query: q, records: self.records[..n].to_vec(), rejected: self.rejected.clone(), grouping_tol: self.grouping_tol }
    }

    /// CSV rows `xi_1..xi_d, theta_1..theta_d, length, phase_re, phase_im`.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = String::new();
        let head: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).chain((1..=d).map(|i| format!("theta_{i}"))).collect();
        let _ = writeln!(s, "{},length,phase_re,phase_im", head.join(","));
        for r in &self.records {
            let xi: Vec<String> = r.xi.iter().map(|k| k.to_string()).collect();
            let th: Vec<String> = r.theta.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{},{},{:?},{:?},{:?}", xi.join(","), th.join(","), r.length, r.phase.re, r.phase.im);
        }
        s
    }
}

/// `exp(−σ²/2 ∂²)` applied to polynomial coefficients.
pub fn undo_smoothing(c: &[f64], sigma: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let mut deriv = c.to_vec();
    let mut fac = 1.0;
    for k in 1..=c.len() / 2 {
        deriv = poly_derivative(&poly_derivative(&deriv));
        fac *= -sigma * sigma / 2.0 / k as f64;
        for (j, v) in deriv.iter().enumerate() {
            out[j] += fac * v;
        }
    }
    out
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for j in 1..c.len() {
        out[j - 1] = j as f64 * c[j];
    }
    out
}

/// Coefficients `ρ'_0..ρ'_{d-1}` of the model density `ρ'(t) = Σ ρ'_j t^j
/// = (2π)^{-d} ∫ P_L(t,θ) dσ`.
pub fn density_coeffs(k1: &SupportBody, k2: &SupportBody, orient: Orientation) -> Result<Vec<f64>> {
    let l = difference_body(k1, k2, orient)?;
    let s = l.steiner()?;
    let d = l.dim();
    let c = (2.0 * PI).powi(-(d as i32));
    Ok(s.surface_moments.iter().map(|m| c * m).collect())
}

/// `ρ'(t) = (2π)^{-d} d/dt Vol(L + tB)`.
pub fn steiner_density(k1: &SupportBody, k2: &SupportBody, orient: Orientation, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("steiner_density needs t > 0".into()));
    }
    let c = density_coeffs(k1, k2, orient)?;
    Ok(c.iter().rev().fold(0.0, |acc, v| acc * t + v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin(d: usize) -> SupportBody {
        SupportBody::point(vec![0.0; d]).unwrap()
    }

    #[test]
    fn points_d2_lattice_norms() {
        let s = enumerate(&origin(2), &origin(2), Orientation::PlusMinus, Some(1.0), 10.0, &TwistForm::zero(2)).unwrap();
        let g = s.groups();
        assert!((g[0].0 - 2.0 * PI).abs() < 1e-12 && g[0].1 == 4);
        assert!((g[1].0 - 2.0 * PI * 2f64.sqrt()).abs() < 1e-12 && g[1].1 == 4);
        assert_eq!(s.counting(1.0).unwrap(), 0);
        assert!(s.counting(11.0).is_err());
    }

    #[test]
    fn balls_match_closed_form() {
        let k1 = SupportBody::ball(vec![0.0; 3], 0.3).unwrap();
        let k2 = SupportBody::ball(vec![0.0; 3], 0.2).unwrap();
        let s = enumerate(&k1, &k2, Orientation::PlusMinus, None, 30.0, &TwistForm::zero(3)).unwrap();
        let t0 = s.t0();
        let mut want: Vec<f64> = lattice_ball(3, 40.0)
            .iter()
            .map(|xi| 2.0 * PI * norm(&xi.iter().map(|&k| k as f64).collect::<Vec<_>>()) - 0.5)
            .filter(|&l| l > t0 && l <= 30.0)
            .collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(want.len(), s.records.len());
        for (a, b) in want.iter().zip(s.lengths()) {
            assert!((a - b).abs() < 1e-9);
        }
        for r in &s.records {
            // closure and duality residuals
            let v: Vec<f64> = r.xi.iter().map(|&k| 2.0 * PI * k as f64).collect();
            let l = difference_body(&k1, &k2, Orientation::PlusMinus).unwrap();
            let x = l.inverse_gauss(&r.theta);
            let res: f64 = norm(&(0..3).map(|i| x[i] + r.length * r.theta[i] - v[i]).collect::<Vec<_>>());
            assert!(res < 1e-9);
            assert!((dot(&r.theta, &v) - l.support(&r.theta) - r.length).abs() < 1e-9);
            assert!((r.phase.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orientations_agree_and_others_rejected() {
        let k1 = SupportBody::ellipsoid(vec![0.1, 0.2], &[0.5, 0.3]).unwrap();
        let k2 = SupportBody::ball(vec![-0.3, 0.0], 0.2).unwrap();
        let a = enumerate(&k1, &k2, Orientation::PlusMinus, None, 40.0, &TwistForm::zero(2)).unwrap();
        let b = enumerate(&k1, &k2, Orientation::MinusPlus, None, 40.0, &TwistForm::zero(2)).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.lengths().iter().zip(b.lengths()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!("++".parse::<Orientation>().is_err());
        assert!("--".parse::<Orientation>().is_err());
    }

    #[test]
    fn feet_lie_on_boundaries() {
        let k1 = SupportBody::ellipsoid(vec![0.1, 0.2, 0.0], &[0.5, 0.3, 0.4]).unwrap();
        let k2 = SupportBody::ball(vec![-0.3, 0.0, 0.1], 0.2).unwrap();
        let s = enumerate(&k1, &k2, Orientation::PlusMinus, None, 14.0, &TwistForm::zero(3)).unwrap();
        assert!(!s.records.is_empty());
        for r in &s.records {
            // foot2 - foot1 = ℓθ, feet are the support points with normals ±θ
            let gap: Vec<f64> = (0..3).map(|i| r.foot2[i] - r.foot1[i] - r.length * r.theta[i]).collect();
            assert!(norm(&gap) < 1e-9);
            assert!((dot(&r.foot1, &r.theta) - k1.support(&r.theta)).abs() < 1e-9);
        }
    }

    #[test]
    fn twist_phase_and_translation() {
        let mut f = BTreeMap::new();
        f.insert(vec![1, 0], Complex64::new(0.2, 0.1));
        f.insert(vec![-1, 0], Complex64::new(0.2, -0.1));
        let beta = TwistForm::new(vec![0.3, 0.0], f.clone()).unwrap();
        let mut bad = f.clone();
        bad.insert(vec![0, 1], Complex64::new(1.0, 0.0));
        assert!(TwistForm::new(vec![0.3, 0.0], bad).is_err());
        let k1 = SupportBody::ball(vec![0.0, 0.0], 0.3).unwrap();
        let k2 = SupportBody::point(vec![1.0, 2.0]).unwrap();
        let s = enumerate(&k1, &k2, Orientation::PlusMinus, None, 30.0, &beta).unwrap();
        let v = [0.7, -0.4];
        let st = enumerate(&k1.translate(&v), &k2.translate(&v), Orientation::PlusMinus, None, 30.0, &beta).unwrap();
        for (a, b) in s.lengths().iter().zip(st.lengths()) {
            assert!((a - b).abs() < 1e-9);
        }
        let r = &s.records[3];
        let want = 0.3 * r.length * r.theta[0] + beta.f_value(&r.foot2) - beta.f_value(&r.foot1);
        assert!((r.phase - Complex64::from_polar(1.0, want)).norm() < 1e-12);
    }

    #[test]
    fn xi_symmetry_for_symmetric_l() {
        let k1 = SupportBody::ellipsoid(vec![0.0; 2], &[0.6, 0.25]).unwrap();
        let k2 = SupportBody::ball(vec![0.0; 2], 0.1).unwrap();
        let s = enumerate(&k1, &k2, Orientation::PlusMinus, None, 50.0, &TwistForm::zero(2)).unwrap();
        let by_xi: BTreeMap<Vec<i64>, f64> = s.records.iter().map(|r| (r.xi.clone(), r.length)).collect();
        for (xi, l) in &by_xi {
            let m: Vec<i64> = xi.iter().map(|k| -k).collect();
            if let Some(lm) = by_xi.get(&m) {
                assert!((l - lm).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn density_examples() {
        let p = density_coeffs(&origin(2), &origin(2), Orientation::PlusMinus).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let k1 = SupportBody::ball(vec![0.0; 3], 0.3).unwrap();
        let k2 = SupportBody::ball(vec![0.0; 3], 0.2).unwrap();
        let t = 7.0;
        let want = 4.0 * PI * (t + 0.5_f64).powi(2) / (2.0 * PI).powi(3);
        assert!((steiner_density(&k1, &k2, Orientation::PlusMinus, t).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn smoothed_fit_of_exact_cubic_counts() {
        // deconvolution is exact on polynomials: smoothing a cubic adds 3σ²c₃T + σ²c₂
        let c = [0.4, 0.3, 0.2, 0.1];
        let sig = 2.0;
        let p = |t: f64| c[0] + c[1] * t + c[2] * t * t + c[3] * t.powi(3);
        let smoothed = |t: f64| p(t) + sig * sig / 2.0 * (2.0 * c[2] + 6.0 * c[3] * t);
        let ts: Vec<f64> = (0..10).map(|k| 10.0 + k as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| smoothed(t)).collect();
        let q = undo_smoothing(&fit_polynomial(&ts, &ys, 3), sig);
        for j in 0..4 {
            assert!((q[j] - c[j]).abs() < 1e-8);
        }
    }
}
