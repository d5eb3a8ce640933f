//! Epstein zeta functions and Poincaré series of orthospectra.
//!
//! The zeta continuation splices the enumerated head with the Steiner
//! density tail: `ζ(s) = Σ phase·ℓ^{-s}·χ(ℓ) + ∫ (1 − χ(t)) t^{-s} ρ'(t) dt`,
//! where `χ` drops smoothly from 1 at `T_s` to 0 at `2T_s`. The tail is an
//! explicit rational function of `s` plus an entire correction, so the poles
//! at `s = 1..d` and their residues `ρ'_k` are exact by construction.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::SupportBody;
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::special::{gamma, unit_ball_volume};
use crate::spectrum::{difference_body, LengthSpectrum, Orientation, TwistForm};
use crate::spherequad::{gauss_jacobi_symmetric, pairwise_sum_c, smooth_step, SphericalGrid};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Head spectrum plus Steiner tail model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZetaModel {
    pub spectrum: LengthSpectrum,
    /// `ρ'_k` for `k = 1..d`, the coefficient of `t^{k-1}` in the density
    /// (phase-weighted when the twist has an `f` part).
    pub density: Vec<Complex64>,
    /// Splice point `T_s`; the taper ends at `taper_ratio · T_s`.
    pub splice: f64,
    pub taper_ratio: f64,
    /// Intrinsic volumes of the governing difference body.
    pub intrinsic: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEstimate {
    pub pole: usize,
    /// Residue of the continued model, `ρ'_ℓ`.
    pub residue: Complex64,
    /// `ℓ ω_ℓ V_{d-ℓ}(L) / (2π)^d` from the convex module.
    pub predicted_from_volumes: f64,
    /// Residues read off smoothed polynomial fits of the counting function,
    /// one per window of the sweep.
    pub empirical: Vec<Complex64>,
    /// Largest deviation of the empirical values from `residue`.
    pub error_bar: f64,
}

/// Smoothing width used by the empirical fits.
pub const COUNT_SMOOTHING: f64 = 4.0;

/// `(2π)^{-d} ∫ e^{iΦ(θ)} a_{k-1}(θ) dσ`, `Φ = −β₀·x_L(θ) + f(x_B(−θ)) − f(x_A(θ))`:
/// the phase-weighted density of lengths, valid when `β₀ ∈ Z^d`.
pub fn twisted_density_coeffs(k1: &SupportBody, k2: &SupportBody, orient: Orientation, beta: &TwistForm) -> Result<Vec<Complex64>> {
    if !beta.beta0_integral() {
        return Err(Error::Precondition("phase-weighted density needs β₀ ∈ Z^d".into()));
    }
    let (a, b) = match orient {
        Orientation::PlusMinus => (k1, k2),
        Orientation::MinusPlus => (k2, k1),
    };
    let l = difference_body(k1, k2, orient)?;
    let d = l.dim();
    let eval = |n: usize| -> Vec<Complex64> {
        let grid = SphericalGrid::cached(d, n);
        let vals: Vec<Vec<Complex64>> = grid.map_nodes(|th| {
            let neg: Vec<f64> = th.iter().map(|x| -x).collect();
            let xl = l.inverse_gauss(th);
            let phi = -beta.beta0.iter().zip(&xl).map(|(p, q)| p * q).sum::<f64>() + beta.f_value(&b.inverse_gauss(&neg))
                - beta.f_value(&a.inverse_gauss(th));
            let e = Complex64::from_polar(1.0, phi);
            let coeffs = if l.is_point() {
                let mut v = vec![0.0; d];
                v[d - 1] = 1.0;
                v
            } else {
                l.area_coeffs(th)
            };
            coeffs.into_iter().map(|x| e * x).collect()
        });
        (0..d)
            .map(|k| {
                let col: Vec<Complex64> = vals.iter().zip(grid.weights()).map(|(v, w)| v[k] * *w).collect();
                pairwise_sum_c(&col) * (2.0 * PI).powi(-(d as i32))
            })
            .collect()
    };
    let mut n = if d <= 3 { 32 } else { 12 };
    let mut prev = eval(n);
    loop {
        let cur = eval(2 * n);
        let diff = prev.iter().zip(&cur).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        if diff < 1e-11 {
            return Ok(cur);
        }
        n *= 2;
        if n > 512 {
            return Err(Error::QuadratureOrder { diff });
        }
        prev = cur;
    }
}

impl ZetaModel {
    /// Builds the model for the spectrum of `(k1, k2)`; the splice defaults
    /// to `min(30·2π/d, T/8)` so that the ×{1,2,4} sweep fits in the
    /// enumerated range.
    pub fn new(k1: &SupportBody, k2: &SupportBody, spectrum: LengthSpectrum, splice: Option<f64>) -> Result<Self> {
        let orient = spectrum.query.orientation;
        let beta = spectrum.query.beta.clone();
        let d = spectrum.dim();
        let l = difference_body(k1, k2, orient)?;
        let st = l.steiner()?;
        let density: Vec<Complex64> = if beta.beta0_integral() && !beta.is_zero() {
            twisted_density_coeffs(k1, k2, orient, &beta)?
        } else {
            st.surface_moments.iter().map(|m| c(m * (2.0 * PI).powi(-(d as i32)))).collect()
        };
        let splice = splice.unwrap_or_else(|| (30.0 * 2.0 * PI / d as f64).min(spectrum.t_max() / 8.0));
        let m = ZetaModel { spectrum, density, splice, taper_ratio: 2.0, intrinsic: st.intrinsic };
        m.check_splice(splice)?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn check_splice(&self, splice: f64) -> Result<()> {
        if !(splice > self.spectrum.t0()) || splice * self.taper_ratio > self.spectrum.t_max() {
            return Err(Error::InvalidArgument(format!(
                "splice {splice} must lie in (T0, T/{}] = ({}, {}]",
                self.taper_ratio,
                self.spectrum.t0(),
                self.spectrum.t_max() / self.taper_ratio
            )));
        }
        Ok(())
    }

    fn density_value(&self, t: f64) -> Complex64 {
        self.density.iter().rev().fold(c(0.0), |acc, v| acc * t + v)
    }

    /// `Σ_{ℓ≤T} phase·ℓ^{-s}` plus the bound `∫_T^∞ t^{-Re s}|ρ'(t)| dt`.
    pub fn zeta_eval(&self, s: Complex64) -> Result<ZetaValue> {
        let d = self.dim();
        if !(s.re > d as f64) {
            return Err(Error::Precondition(format!("zeta_eval needs Re(s) > {d}")));
        }
        let terms: Vec<Complex64> = self.spectrum.records.iter().map(|r| r.phase * (-s * r.length.ln()).exp()).collect();
        let t = self.spectrum.t_max();
        let bound = self
            .density
            .iter()
            .enumerate()
            .map(|(j, rho)| rho.norm() * t.powf(j as f64 + 1.0 - s.re) / (s.re - j as f64 - 1.0))
            .sum();
        Ok(ZetaValue { value: pairwise_sum_c(&terms), tail_bound: bound })
    }

    fn taper(&self, splice: f64, t: f64) -> f64 {
        1.0 - smooth_step(t, splice, self.taper_ratio * splice)
    }

    /// Continued value with an explicit splice point.
    pub fn zeta_continue_at(&self, s: Complex64, splice: f64) -> Result<Complex64> {
        let d = self.dim();
        if !self.spectrum.query.beta.beta0_integral() {
            return Err(Error::Precondition("continuation needs β₀ ∈ Z^d; see twist_suppression".into()));
        }
        for k in 1..=d {
            if (s - k as f64).norm() < 1e-8 {
                return Err(Error::PoleHit { s: format!("{s}"), pole: k });
            }
        }
        self.check_splice(splice)?;
        let te = self.taper_ratio * splice;
        let hi = self.spectrum.records.partition_point(|r| r.length <= te);
        let head: Vec<Complex64> = self.spectrum.records[..hi]
            .iter()
            .map(|r| r.phase * (-s * r.length.ln()).exp() * self.taper(splice, r.length))
            .collect();
        let mut v = pairwise_sum_c(&head);
        // ∫_{T_s}^∞ t^{k-1-s} dt = T_s^{k-s}/(s-k)
        for (j, rho) in self.density.iter().enumerate() {
            let k = (j + 1) as f64;
            v += rho * (-(s - k) * splice.ln()).exp() / (s - k);
        }
        // minus ∫_{T_s}^{T_e} χ(t) t^{-s} ρ'(t) dt
        let (z, w) = gl_nodes();
        let half = 0.5 * (te - splice);
        let mid = 0.5 * (te + splice);
        let corr: Vec<Complex64> = z
            .iter()
            .zip(w.iter())
            .map(|(zi, wi)| {
                let t = mid + half * zi;
                self.density_value(t) * (-s * t.ln()).exp() * self.taper(splice, t) * (wi * half)
            })
            .collect();
        v -= pairwise_sum_c(&corr);
        Ok(v)
    }

    /// Meromorphic continuation at the model's splice point.
    pub fn zeta_continue(&self, s: Complex64) -> Result<Complex64> {
        self.zeta_continue_at(s, self.splice)
    }

    /// Value and T-stability error bar from the splice sweep ×{1, 2, 4}.
    pub fn zeta_continue_with_error(&self, s: Complex64) -> Result<(Complex64, f64)> {
        let mut vals = Vec::new();
        for m in [1.0, 2.0, 4.0] {
            let sp = self.splice * m;
            if sp * self.taper_ratio <= self.spectrum.t_max() {
                vals.push(self.zeta_continue_at(s, sp)?);
            }
        }
        let best = *vals.last().unwrap();
        let err = vals.iter().map(|v| (v - best).norm()).fold(0.0, f64::max);
        Ok((best, err))
    }

    /// Residues at `s = 1..d` with empirical counting-fit bands.
    pub fn residues(&self) -> Result<Vec<ResidueEstimate>> {
        let d = self.dim();
        let tmax = self.spectrum.t_max() - 8.0 * COUNT_SMOOTHING;
        let mut windows = Vec::new();
        for m in [1.0, 2.0, 4.0] {
            let (lo, hi) = (m * self.splice, 2.0 * m * self.splice);
            if hi <= tmax {
                windows.push((lo, hi));
            }
        }
        if windows.is_empty() {
            let lo = (self.spectrum.t0() + 4.0 * COUNT_SMOOTHING).max(tmax / 2.0);
            if tmax > lo {
                windows.push((lo, tmax));
            }
        }
        let mut fits = Vec::new();
        for (lo, hi) in &windows {
            let ts: Vec<f64> = (0..60).map(|i| lo + (hi - lo) * i as f64 / 59.0).collect();
            fits.push(self.spectrum.fit_counting_weighted(&ts, COUNT_SMOOTHING)?);
        }
        let norm = (2.0 * PI).powi(-(d as i32));
        Ok((1..=d)
            .map(|k| {
                let residue = self.density[k - 1];
                let empirical: Vec<Complex64> = fits.iter().map(|f| f[k] * k as f64).collect();
                let error_bar = empirical.iter().map(|e| (e - residue).norm()).fold(0.0, f64::max);
                ResidueEstimate {
                    pole: k,
                    residue,
                    predicted_from_volumes: k as f64 * unit_ball_volume(k) * self.intrinsic[d - k] * norm,
                    empirical,
                    error_bar,
                }
            })
            .collect())
    }

    /// `Σ phase·e^{-sℓ}` over the head plus the tail bound
    /// `Σ |ρ'_k| ∫_T^∞ t^{k-1} e^{-σt} dt`.
    pub fn poincare_eval(&self, s: Complex64) -> Result<ZetaValue> {
        if !(s.re >= 1e-3) {
            return Err(Error::Precondition("poincare_eval needs Re(s) ≥ 1e-3".into()));
        }
        let terms: Vec<Complex64> = self.spectrum.records.iter().map(|r| r.phase * (-s * r.length).exp()).collect();
        let value = pairwise_sum_c(&terms);
        let t = self.spectrum.t_max();
        let sig = s.re;
        let mut bound = 0.0;
        for (j, rho) in self.density.iter().enumerate() {
            // ∫_T^∞ t^j e^{-σt} dt = e^{-σT} Σ_{i≤j} j!/i! T^i / σ^{j-i+1}
            let mut acc = 0.0;
            let mut fac = 1.0;
            for i in (0..=j).rev() {
                acc += fac * t.powi(i as i32) / sig.powi((j - i + 1) as i32);
                fac *= i as f64;
            }
            bound += rho.norm() * acc * (-sig * t).exp();
        }
        if bound > 1e-6 * value.norm() {
            return Err(Error::TailDominates { bound, value: value.norm() });
        }
        Ok(ZetaValue { value, tail_bound: bound })
    }
}

fn gl_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    GL.get_or_init(|| gauss_jacobi_symmetric(200, 0.0))
}

/// Report of the twisted-counting decay certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    pub ts: Vec<f64>,
    /// `|N_β(T)| / T^d`.
    pub ratios: Vec<f64>,
    /// Untwisted leading constant `ω_d / (2π)^d · Vol`-normalised, i.e. `ρ'_d / d`.
    pub untwisted_leading: f64,
    pub monotone: bool,
    /// Last ratio below a quarter of the untwisted constant, with a monotone trend.
    pub certified: bool,
}

/// Certifies the loss of the leading term of `N_β` when `β₀ ∉ Z^d`.
pub fn twist_suppression(spectrum: &LengthSpectrum, ts: &[f64]) -> Result<TwistReport> {
    let beta = &spectrum.query.beta;
    if beta.beta0_integral() {
        return Err(Error::Precondition("twist_suppression needs β₀ ∉ Z^d".into()));
    }
    let d = spectrum.dim();
    let mut ratios = Vec::new();
    for &t in ts {
        ratios.push(spectrum.counting_weighted(t)?.norm() / t.powi(d as i32));
    }
    let lead = unit_ball_volume(d) * (2.0 * PI).powi(-(d as i32));
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0]);
    let certified = monotone && ratios.last().is_some_and(|r| *r < 0.25 * lead);
    Ok(TwistReport { ts: ts.to_vec(), ratios, untwisted_leading: lead, monotone, certified })
}

/// `𝖥_α(z)` off the negative real axis (principal branches).
pub fn f_alpha(alpha: f64, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(Error::InvalidArgument("F_alpha is defined off the closed negative real axis".into()));
    }
    let n = alpha.round();
    if (alpha - n).abs() < 1e-12 && n >= 1.0 {
        let n = n as i32;
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(z.powi(n - 1) * z.ln() * (sign / fact));
    }
    if alpha < 1.0 {
        Ok(gamma(1.0 - alpha) * z.powf(alpha - 1.0))
    } else {
        Ok(PI / ((PI * alpha).sin() * gamma(alpha)) * z.powf(alpha - 1.0))
    }
}

/// `𝖥_α(ε + iy)`.
pub fn f_alpha_boundary(alpha: f64, y: f64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("boundary values need ε > 0".into()));
    }
    f_alpha(alpha, Complex64::new(eps, y))
}

/// Anything that can be evaluated as a Poincaré series `Z(s)`.
pub trait PoincareSeries: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, s: Complex64) -> Result<Complex64>;
    /// `β₀ ∈ Z^d` (enables the pole stack at `y = 0`).
    fn integral_twist(&self) -> bool;
}

impl PoincareSeries for ZetaModel {
    fn dim(&self) -> usize {
        ZetaModel::dim(self)
    }
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.poincare_eval(s)?.value)
    }
    fn integral_twist(&self) -> bool {
        self.spectrum.query.beta.beta0_integral()
    }
}

/// Closed-form Poincaré series for two points,
/// `c_d e^{i(f(y)−f(x))} s Σ_ξ η(|ξ+β₀|/Ξ) e^{iξ·(x−y)} (s² + κ²|ξ+β₀|²)^{-(d+1)/2}`,
/// with a smooth spectral cutoff `η`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSpectralModel {
    pub dim: usize,
    pub a: Vec<f64>,
    pub beta0: Vec<f64>,
    pub twist_phase: Complex64,
    pub kappa: f64,
    pub c_d: f64,
    pub cutoff: f64,
    /// `(|ξ+β₀|, Σ_{shell} e^{iξ·a})`, ascending.
    shells: Vec<(f64, Complex64)>,
    integral: bool,
}

/// Smooth spectral cutoff: ½ erfc((r − 0.6Ξ)/(Ξ/15)).
pub fn spectral_cutoff(r: f64, xi_max: f64) -> f64 {
    0.5 * crate::special::erfc((r - 0.6 * xi_max) / (xi_max / 15.0))
}

/// Cutoff `Ξ` giving ~1e-14 accuracy for a separation `dist` between `x − y`
/// and the nearest lattice point `2πn`.
pub fn suggested_cutoff(dist: f64) -> f64 {
    (170.0 / dist).clamp(20.0, 200.0)
}

impl PointSpectralModel {
    pub fn new(x: &[f64], y: &[f64], beta: &TwistForm, kappa: f64, c_d: f64, cutoff: f64) -> Result<Self> {
        let d = x.len();
        if y.len() != d || beta.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: y.len() });
        }
        let a: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        let reduced: Vec<f64> = a.iter().map(|v| v - 2.0 * PI * (v / (2.0 * PI)).round()).collect();
        if crate::convex::norm(&reduced) < 1e-9 {
            return Err(Error::Precondition("points coincide modulo 2πZ^d".into()));
        }
        let twist_phase = Complex64::from_polar(1.0, beta.f_value(y) - beta.f_value(x));
        let rmax = 1.2 * cutoff + crate::convex::norm(&beta.beta0);
        // enumerate ξ with |ξ| ≤ rmax through the lattice helper (scaled by 2π)
        let cands = crate::spectrum::lattice_ball(d, 2.0 * PI * rmax);
        let mut map: BTreeMap<u64, (f64, Complex64)> = BTreeMap::new();
        let terms: Vec<(f64, Complex64)> = cands
            .par_iter()
            .filter_map(|xi| {
                let r = xi.iter().zip(&beta.beta0).map(|(k, b)| (*k as f64 + b).powi(2)).sum::<f64>().sqrt();
                if r > 1.2 * cutoff {
                    return None;
                }
                let ph: f64 = xi.iter().zip(&a).map(|(k, v)| *k as f64 * v).sum();
                Some((r, Complex64::from_polar(1.0, ph)))
            })
            .collect();
        for (r, e) in terms {
            let key = (r * r * 1e9).round() as u64;
            let ent = map.entry(key).or_insert((r, c(0.0)));
            ent.1 += e;
        }
        let shells = map.into_values().map(|(r, w)| (r, w * spectral_cutoff(r, cutoff))).collect();
        Ok(PointSpectralModel {
            dim: d,
            a,
            beta0: beta.beta0.clone(),
            twist_phase,
            kappa,
            c_d,
            cutoff,
            shells,
            integral: beta.beta0_integral(),
        })
    }

    /// The normalisation implied by Poisson summation: `κ = 1`,
    /// `c_d = π^{-(d+1)/2} Γ((d+1)/2)`.
    pub fn poisson_constants(d: usize) -> (f64, f64) {
        let h = (d as f64 + 1.0) / 2.0;
        (1.0, PI.powf(-h) * gamma(h))
    }

    pub fn with_normalization(&self, kappa: f64, c_d: f64) -> Self {
        PointSpectralModel { kappa, c_d, ..self.clone() }
    }

    /// The sum without the constant `c_d`.
    fn raw(&self, s: Complex64, kappa: f64) -> Complex64 {
        let p = -(self.dim as f64 + 1.0) / 2.0;
        let s2 = s * s;
        let terms: Vec<Complex64> = self.shells.iter().map(|(r, w)| w * (s2 + kappa * kappa * r * r).powf(p)).collect();
        pairwise_sum_c(&terms) * s * self.twist_phase
    }

    /// Spectral lines `κ|ξ+β₀|` below `y_max`.
    pub fn lines(&self, y_max: f64) -> Vec<f64> {
        self.shells.iter().map(|(r, _)| self.kappa * r).filter(|y| *y <= y_max).collect()
    }

    /// Shells `(|ξ+β₀|, Σ e^{iξ·a})` without the cutoff weight.
    fn shell_weights(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.shells.iter().map(move |(r, w)| (*r, w / spectral_cutoff(*r, self.cutoff)))
    }
}

impl PoincareSeries for PointSpectralModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.raw(s, self.kappa) * self.c_d)
    }
    fn integral_twist(&self) -> bool {
        self.integral
    }
}

/// One-time normalisation fit of the closed form against a direct series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointNormalization {
    pub kappa: f64,
    pub c_d: f64,
    /// Root-mean-square relative residual over the fitting grid.
    pub rel_residual: f64,
}

/// Fits `(κ, c_d)` so that `c_d·S_κ(s)` matches `direct(s)` on `s_grid`
/// in relative least squares.
pub fn fit_point_normalization(model: &PointSpectralModel, direct: &[(Complex64, Complex64)]) -> PointNormalization {
    let objective = |kappa: f64| -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        let raws: Vec<(Complex64, Complex64)> = direct.iter().map(|(s, z)| (model.raw(*s, kappa), *z)).collect();
        for (sv, z) in &raws {
            let w = 1.0 / z.norm_sqr();
            num += w * (sv.conj() * z).re;
            den += w * sv.norm_sqr();
        }
        let cd = num / den;
        let r: f64 = raws.iter().map(|(sv, z)| (z - sv * cd).norm_sqr() / z.norm_sqr()).sum();
        (r, cd)
    };
    let grid: Vec<f64> = (0..=160).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 160.0)).collect();
    let vals: Vec<f64> = grid.par_iter().map(|k| objective(*k).0).collect();
    let i = (0..vals.len()).min_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if objective(m1).0 < objective(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let (r, c_d) = objective(kappa);
    PointNormalization { kappa, c_d, rel_residual: (r / direct.len() as f64).sqrt() }
}

/// One located singularity of a Poincaré series on the imaginary axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityFit {
    pub location: f64,
    pub alpha: f64,
    /// Fitted exponent `p` in `|Z(ε + iy₀)| ~ ε^p`.
    pub exponent: f64,
    pub exponent_ci: (f64, f64),
    pub coefficient: Complex64,
    /// RMS residual of the log-log fit with the matched exponent.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Peaks must exceed this multiple of the median of `|Z|` on the grid.
    pub min_prominence: f64,
    /// Largest `j` in the α grid.
    pub j_max: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { min_prominence: 10.0, j_max: 3 }
    }
}

/// α grid `{(d−1)/2 + j − l}` plus, for integral twists at `y = 0`, the
/// pole stack `{1 − ℓ : ℓ = 1..d}`.
pub fn alpha_grid(d: usize, j_max: usize, pole_stack: bool) -> Vec<f64> {
    let mut out = Vec::new();
    for j in 0..=j_max {
        for l in 0..d {
            out.push((d as f64 - 1.0) / 2.0 + j as f64 - l as f64);
        }
    }
    if pole_stack {
        for l in 1..=d {
            out.push(1.0 - l as f64);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Locates maxima of `|Z(ε_min + iy)|` and classifies each against the
/// `𝖥_α` family by a log-log fit over the ε ladder.
pub fn singularity_scan(series: &dyn PoincareSeries, eps: &[f64], ys: &[f64], opts: ScanOptions) -> Result<Vec<SingularityFit>> {
    if eps.is_empty() || ys.len() < 3 {
        return Err(Error::InvalidArgument("need a nonempty ε ladder and at least three y values".into()));
    }
    if eps.iter().any(|e| !(*e >= 1e-3 && *e <= 0.5)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("ε ladder must be decreasing inside [1e-3, 0.5]".into()));
    }
    let d = series.dim();
    let emin = *eps.last().unwrap();
    let mags: Vec<f64> = ys
        .par_iter()
        .map(|y| series.eval(Complex64::new(emin, *y)).map(|z| z.norm()))
        .collect::<Result<_>>()?;
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut peaks = Vec::new();
    for i in 0..ys.len() {
        let left = if i == 0 { f64::NEG_INFINITY } else { mags[i - 1] };
        let right = if i + 1 == ys.len() { f64::NEG_INFINITY } else { mags[i + 1] };
        let at_zero_edge = i == 0 && ys[0] == 0.0;
        let is_max = mags[i] > right && (mags[i] > left || at_zero_edge) && (i > 0 || at_zero_edge) && i + 1 < ys.len();
        if is_max && mags[i] > opts.min_prominence * median {
            peaks.push(i);
        }
    }
    let fit_eps: Vec<f64> = eps.iter().copied().filter(|e| *e <= 0.1).collect();
    if fit_eps.len() < 3 {
        return Err(Error::InvalidArgument("need at least three ε values in [1e-3, 0.1]".into()));
    }
    let mut out = Vec::new();
    for i in peaks {
        let y0 = if ys[i] == 0.0 && i == 0 {
            0.0
        } else {
            let (mut lo, mut hi) = (ys[i - 1], ys[i + 1]);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let f = |y: f64| series.eval(Complex64::new(emin, y)).map(|z| z.norm()).unwrap_or(0.0);
            for _ in 0..60 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if f(m1) > f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            0.5 * (lo + hi)
        };
        let zs: Vec<Complex64> = fit_eps.iter().map(|e| series.eval(Complex64::new(*e, y0))).collect::<Result<_>>()?;
        let lx: Vec<f64> = fit_eps.iter().map(|e| e.ln()).collect();
        let ly: Vec<f64> = zs.iter().map(|z| z.norm().ln()).collect();
        let line = fit_line(&lx, &ly);
        let p = line.slope;
        let grid = alpha_grid(d, opts.j_max, y0.abs() < 1e-9 && series.integral_twist());
        // residual of the fit with the exponent pinned to α − 1
        let resid = |alpha: f64| -> f64 {
            let e = alpha - 1.0;
            let icpt = ly.iter().zip(&lx).map(|(y, x)| y - e * x).sum::<f64>() / lx.len() as f64;
            (ly.iter().zip(&lx).map(|(y, x)| (y - icpt - e * x).powi(2)).sum::<f64>() / lx.len() as f64).sqrt()
        };
        let mut ranked: Vec<(f64, f64)> = grid.iter().map(|a| (resid(*a), *a)).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (r1, a1) = ranked[0];
        if let Some(&(r2, a2)) = ranked.get(1) {
            if r2 <= 2.0 * r1 && r1 > 1e-3 {
                return Err(Error::FitAmbiguous { location: y0, alpha1: a1, alpha2: a2 });
            }
        }
        // matched filter onto 𝖥_α(ε)
        let fs: Vec<Complex64> = fit_eps.iter().map(|e| f_alpha_boundary(a1, 0.0, *e)).collect::<Result<_>>()?;
        let num: Complex64 = fs.iter().zip(&zs).map(|(f, z)| f.conj() * z).sum();
        let den: f64 = fs.iter().map(|f| f.norm_sqr()).sum();
        out.push(SingularityFit {
            location: y0,
            alpha: a1,
            exponent: p,
            exponent_ci: (p - 2.0 * line.slope_stderr, p + 2.0 * line.slope_stderr),
            coefficient: num / den,
            residual: r1,
        });
    }
    Ok(out)
}

/// Gaussian test function `φ(τ) = exp(−(τ−λ₀)²/(2w²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTest {
    pub center: f64,
    pub width: f64,
}

impl GaussianTest {
    /// `φ̂(ℓ) = ∫ φ(τ) e^{−iτℓ} dτ`.
    pub fn fourier(&self, l: f64) -> Complex64 {
        let w = self.width;
        Complex64::from_polar(w * (2.0 * PI).sqrt() * (-0.5 * w * w * l * l).exp(), -self.center * l)
    }

    /// `φ^{(k)}(z)` via Hermite polynomials.
    pub fn derivative(&self, k: usize, z: f64) -> f64 {
        let u = (z - self.center) / self.width;
        let (mut h0, mut h1) = (1.0, u);
        let he = if k == 0 {
            1.0
        } else {
            for j in 1..k {
                let h2 = u * h1 - j as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        };
        (-1.0 / self.width).powi(k as i32) * he * (-0.5 * u * u).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuinandResult {
    pub length_side: Complex64,
    pub spectral_side: Complex64,
}

/// Residue of `φ(z)(Λ² − z²)^{-m}` at `z = ±Λ`.
fn pole_residue(phi: &GaussianTest, lam: f64, m: usize, sign: f64) -> f64 {
    // (Λ² − z²)^{-m} = (−1)^m (z − sΛ)^{-m} (z + sΛ)^{-m}
    let z0 = sign * lam;
    let cpole = sign * lam; // g(z) = (z + sΛ)^{-m}
    let mut acc = 0.0;
    let n = m - 1;
    for j in 0..=n {
        let binom = crate::special::binomial(n, j);
        let rising: f64 = (0..j).map(|i| (m + i) as f64).product();
        let gj = (-1f64).powi(j as i32) * rising * (z0 + cpole).powi(-((m + j) as i32));
        acc += binom * phi.derivative(n - j, z0) * gj;
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    (-1f64).powi(m as i32) * acc / fact
}

/// Guinand–Meyer pairing for two points in odd dimension.
///
/// The length side pairs `μ = Σ_fwd phase ℓ^{-1} δ_ℓ − Σ_bwd conj(phase) ℓ^{-1} δ_{−ℓ}`
/// with `φ̂`; the spectral side sums the contour residues of the closed form
/// at the lines `±κ|ξ+β₀|`.
pub fn guinand_pairing(fwd: &LengthSpectrum, bwd: &LengthSpectrum, phi: GaussianTest, spectral: &PointSpectralModel) -> Result<GuinandResult> {
    let d = fwd.dim();
    if d % 2 == 0 || d < 3 {
        return Err(Error::Precondition("Guinand–Meyer pairing needs odd d ≥ 3".into()));
    }
    let tmax = fwd.t_max().min(bwd.t_max());
    let tail = phi.width * (2.0 * PI).sqrt() * (-0.5 * (phi.width * tmax).powi(2)).exp() * tmax.powi(d as i32);
    if tail > 1e-12 {
        return Err(Error::TruncationTooSmall { tail, t_max: tmax });
    }
    let a: Vec<Complex64> = fwd.records.iter().map(|r| r.phase * phi.fourier(r.length) / r.length).collect();
    let b: Vec<Complex64> = bwd.records.iter().map(|r| r.phase.conj() * phi.fourier(-r.length) / r.length).collect();
    let length_side = pairwise_sum_c(&a) - pairwise_sum_c(&b);

    let m = (d - 1) / 2;
    let reach = phi.center.abs() + 40.0 * phi.width;
    let terms: Vec<Complex64> = spectral
        .shell_weights()
        .filter(|(r, _)| spectral.kappa * r <= reach && *r > 0.0)
        .map(|(r, w)| {
            let lam = spectral.kappa * r;
            let res = pole_residue(&phi, lam, m, 1.0) + pole_residue(&phi, lam, m, -1.0);
            w * Complex64::new(0.0, 2.0 * PI * res)
        })
        .collect();
    let spectral_side = pairwise_sum_c(&terms) * spectral.twist_phase * (spectral.c_d / (d as f64 - 1.0));
    Ok(GuinandResult { length_side, spectral_side })
}
