//! Experiment configuration: a single JSON document with every default
//! materialised, so that the echoed copy fully describes a run.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use orthospec::convex::HarmonicTerm;
use orthospec::dynamics::{AnisoParams, TorusObservable};
use orthospec::{Orientation, SpherePoly, SupportBody, TwistForm};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Point { center: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, axes: Vec<f64> },
    Harmonic { base: Box<BodySpec>, terms: Vec<HarmonicTerm> },
    Sum { parts: Vec<BodySpec> },
}

impl BodySpec {
    pub fn build(&self) -> Result<SupportBody> {
        Ok(match self {
            BodySpec::Point { center } => SupportBody::point(center.clone())?,
            BodySpec::Ball { center, radius } => SupportBody::ball(center.clone(), *radius)?,
            BodySpec::Ellipsoid { center, axes } => SupportBody::ellipsoid(center.clone(), axes)?,
            BodySpec::Harmonic { base, terms } => SupportBody::harmonic(base.build()?, terms.clone())?,
            BodySpec::Sum { parts } => {
                let mut it = parts.iter();
                let mut acc = it.next().context("sum needs at least one part")?.build()?;
                for p in it {
                    acc = acc.minkowski_sum(&p.build()?)?;
                }
                acc
            }
        })
    }
}

/// One Fourier coefficient `c_ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub xi: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSpec {
    pub beta0: Vec<f64>,
    #[serde(default)]
    pub f: Vec<FourierTerm>,
}

impl TwistSpec {
    pub fn build(&self) -> Result<TwistForm> {
        let f: BTreeMap<Vec<i64>, Complex64> = self.f.iter().map(|t| (t.xi.clone(), Complex64::new(t.re, t.im))).collect();
        Ok(TwistForm::new(self.beta0.clone(), f)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialTerm {
    pub exponents: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub xi: Vec<i64>,
    /// Polynomial in `θ`; an empty list means the constant `re + i·im` below.
    #[serde(default)]
    pub terms: Vec<MonomialTerm>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub modes: Vec<ModeSpec>,
}

impl ObservableSpec {
    pub fn build(&self, dim: usize) -> Result<TorusObservable> {
        let mut modes = BTreeMap::new();
        for m in &self.modes {
            let p = if m.terms.is_empty() {
                SpherePoly::constant(dim, Complex64::new(m.re, m.im))
            } else {
                let mut p = SpherePoly::zero(dim);
                for t in &m.terms {
                    if t.exponents.len() != dim {
                        bail!("monomial exponents must have length {dim}");
                    }
                    p.add_term(t.exponents.clone(), Complex64::new(t.re, t.im));
                }
                p
            };
            if modes.insert(m.xi.clone(), p).is_some() {
                bail!("duplicate mode {:?}", m.xi);
            }
        }
        Ok(TorusObservable::new(dim, modes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl YGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ranges {
    /// `T₀`; `null` picks `2(r_max₁ + r_max₂) + 1`.
    pub t0: Option<f64>,
    pub t_max: f64,
    /// Complex points `[re, im]` for zeta evaluations.
    pub s_grid: Vec<[f64; 2]>,
    /// Decreasing ε ladder for Poincaré fits.
    pub eps_ladder: Vec<f64>,
    pub y_grid: YGrid,
    /// Times for correlations, equidistribution and counting tables.
    pub t_ladder: Vec<f64>,
    /// Splice point of the zeta continuation; `null` for the default.
    pub splice: Option<f64>,
}

impl Default for Ranges {
    fn default() -> Self {
        Ranges {
            t0: None,
            t_max: 100.0,
            s_grid: vec![[0.5, 0.0], [1.5, 0.0], [3.5, 0.0], [0.5, 2.0]],
            eps_ladder: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
            y_grid: YGrid { lo: 0.0, hi: 3.0, n: 301 },
            t_ladder: vec![10.0, 20.0, 40.0, 80.0],
            splice: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuinandSpec {
    /// `null` centres the Gaussian on the first spectral line.
    pub center: Option<f64>,
    pub width: f64,
}

impl Default for GuinandSpec {
    fn default() -> Self {
        GuinandSpec { center: None, width: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscSpec {
    pub xi: Vec<f64>,
    #[serde(default)]
    pub beta0: Option<Vec<f64>>,
    /// Body whose inverse Gauss map is the phase perturbation `x̃`; `null` for none.
    #[serde(default)]
    pub body: Option<String>,
}

fn default_k1() -> String {
    "K1".into()
}
fn default_k2() -> String {
    "K2".into()
}
fn default_orientation() -> Orientation {
    Orientation::PlusMinus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bodies: BTreeMap<String, BodySpec>,
    #[serde(default = "default_k1")]
    pub k1: String,
    #[serde(default = "default_k2")]
    pub k2: String,
    #[serde(default = "default_orientation")]
    pub orientation: Orientation,
    #[serde(default)]
    pub twist: Option<TwistSpec>,
    #[serde(default)]
    pub ranges: Ranges,
    #[serde(default)]
    pub guinand: GuinandSpec,
    #[serde(default)]
    pub phi: Option<ObservableSpec>,
    #[serde(default)]
    pub psi: Option<ObservableSpec>,
    #[serde(default)]
    pub aniso: Option<AnisoParams>,
    #[serde(default)]
    pub oscint: Option<OscSpec>,
    /// Seed for any randomised spot checks.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).context("invalid configuration")?;
        c.validate()?;
        let mut c = c;
        c.resolve()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        for name in [&self.k1, &self.k2] {
            if !self.bodies.contains_key(name) {
                bail!("body `{name}` is not defined");
            }
        }
        let r = &self.ranges;
        if !(r.t_max > 0.0) {
            bail!("ranges.t_max must be positive");
        }
        if r.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            bail!("ranges.eps_ladder must be decreasing");
        }
        if let Some(o) = &self.oscint {
            if let Some(b) = &o.body {
                if !self.bodies.contains_key(b) {
                    bail!("body `{b}` is not defined");
                }
            }
        }
        Ok(())
    }

    /// Replaces every `null` default by its value.
    pub fn resolve(&mut self) -> Result<()> {
        let (a, b) = self.pair()?;
        let d = a.dim();
        if self.twist.is_none() {
            self.twist = Some(TwistSpec { beta0: vec![0.0; d], f: Vec::new() });
        }
        if self.ranges.t0.is_none() {
            self.ranges.t0 = Some(orthospec::spectrum::default_t0(&a, &b));
        }
        if self.ranges.splice.is_none() {
            self.ranges.splice = Some((30.0 * 2.0 * std::f64::consts::PI / d as f64).min(self.ranges.t_max / 8.0));
        }
        Ok(())
    }

    pub fn body(&self, name: &str) -> Result<SupportBody> {
        self.bodies.get(name).with_context(|| format!("body `{name}` is not defined"))?.build()
    }

    pub fn pair(&self) -> Result<(SupportBody, SupportBody)> {
        let a = self.body(&self.k1)?;
        let b = self.body(&self.k2)?;
        if a.dim() != b.dim() {
            bail!("bodies `{}` and `{}` have different dimensions", self.k1, self.k2);
        }
        Ok((a, b))
    }

    pub fn twist(&self, dim: usize) -> Result<TwistForm> {
        match &self.twist {
            Some(t) => {
                if t.beta0.len() != dim {
                    bail!("twist.beta0 must have length {dim}");
                }
                t.build()
            }
            None => Ok(TwistForm::zero(dim)),
        }
    }
}
