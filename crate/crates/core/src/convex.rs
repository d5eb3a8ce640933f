//! Strictly convex bodies described by their support functions.
//!
//! Every body carries its 1-homogeneous support function `H`, whose
//! gradient on the unit sphere is the inverse Gauss map and whose ambient
//! Hessian, restricted to `u^⊥`, has the principal radii of curvature as
//! eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{elementary_symmetric, unit_ball_volume};
use crate::spherequad::SphericalGrid;

/// A unit vector of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalises `v`; fails on the zero vector.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
        }
        Ok(Direction(v.into_iter().map(|x| x / n).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for Direction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Degree-`k` even monomial perturbation `coeff · u^α` of a support function,
/// extended 1-homogeneously as `|x|^{1-k} coeff x^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Point { x0: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `h(u) = c·u + sqrt(uᵀ M u)` with `M` symmetric positive definite.
    Ellipsoid { center: Vec<f64>, shape: DMatrix<f64> },
    Harmonic { base: Box<SupportBody>, terms: Vec<HarmonicTerm> },
    Sum(Box<SupportBody>, Box<SupportBody>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportBody {
    dim: usize,
    kind: BodyKind,
    r_min: f64,
    r_max: f64,
}

/// Steiner polynomial and intrinsic volumes of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerData {
    pub dim: usize,
    pub vol: f64,
    /// `∫ a_j dσ` for `j = 0..d-1`, `a_j` the coefficient of `t^j` in `P_K(t,θ)`.
    pub surface_moments: Vec<f64>,
    /// `Vol(K + tB) = Σ c_ℓ t^ℓ`.
    pub steiner_coeffs: Vec<f64>,
    /// `V_0..V_d`.
    pub intrinsic: Vec<f64>,
    pub quadrature_order: usize,
}

impl SteinerData {
    pub fn volume_of_parallel_body(&self, t: f64) -> f64 {
        self.steiner_coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of `u^⊥` as the columns of a `d × (d-1)` matrix.
pub fn tangent_frame(u: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let skip = (0..d).max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
    let mut basis: Vec<Vec<f64>> = vec![u.to_vec()];
    for k in (0..d).filter(|&k| k != skip) {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    DMatrix::from_fn(d, d - 1, |i, j| basis[j + 1][i])
}

impl SupportBody {
    pub fn point(x0: Vec<f64>) -> Result<Self> {
        check_dim(x0.len())?;
        Ok(SupportBody { dim: x0.len(), kind: BodyKind::Point { x0 }, r_min: 0.0, r_max: 0.0 })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius >= 0.0) {
            return Err(Error::InvalidBody(format!("ball radius must be nonnegative, got {radius}")));
        }
        if radius == 0.0 {
            return Self::point(center);
        }
        Ok(SupportBody { dim: center.len(), kind: BodyKind::Ball { center, radius }, r_min: radius, r_max: radius })
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid(center: Vec<f64>, axes: &[f64]) -> Result<Self> {
        let d = center.len();
        let id = DMatrix::identity(d, d);
        Self::ellipsoid_rotated(center, axes, &id)
    }

    /// Ellipsoid `center + R·diag(axes)·B`; `rotation` must be orthogonal.
    pub fn ellipsoid_rotated(center: Vec<f64>, axes: &[f64], rotation: &DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        check_dim(d)?;
        if axes.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: axes.len() });
        }
        if axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidBody("ellipsoid semi-axes must be positive".into()));
        }
        if rotation.nrows() != d || rotation.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rotation.nrows() });
        }
        let orth = (rotation.transpose() * rotation - DMatrix::identity(d, d)).abs().max();
        if orth > 1e-10 {
            return Err(Error::InvalidBody("ellipsoid rotation is not orthogonal".into()));
        }
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, axes.iter().map(|a| a * a)));
        let shape = rotation * diag * rotation.transpose();
        let shape = (&shape + shape.transpose()) * 0.5;
        let mut b = SupportBody { dim: d, kind: BodyKind::Ellipsoid { center, shape }, r_min: 0.0, r_max: 0.0 };
        b.certify()?;
        Ok(b)
    }

    /// Base body plus an even polynomial perturbation of its support function.
    pub fn harmonic(base: SupportBody, terms: Vec<HarmonicTerm>) -> Result<Self> {
        let d = base.dim;
        for t in &terms {
            if t.exponents.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.exponents.len() });
            }
            let k: u32 = t.exponents.iter().sum();
            if k % 2 != 0 {
                return Err(Error::InvalidBody("perturbation terms must have even degree".into()));
            }
        }
        if base.is_point() {
            return Err(Error::InvalidBody("perturbation of a point body is not strictly convex".into()));
        }
        let mut b = SupportBody { dim: d, kind: BodyKind::Harmonic { base: Box::new(base), terms }, r_min: 0.0, r_max: 0.0 };
        b.certify()?;
        Ok(b)
    }

    fn certify(&mut self) -> Result<()> {
        let grid = SphericalGrid::cached(self.dim, if self.dim <= 3 { 24 } else { 8 });
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..grid.len() {
            let r = self.principal_radii(grid.node(i));
            lo = lo.min(r[0]);
            hi = hi.max(*r.last().unwrap());
        }
        // coordinate axes on top of the grid
        for k in 0..self.dim {
            for s in [-1.0, 1.0] {
                let mut u = vec![0.0; self.dim];
                u[k] = s;
                let r = self.principal_radii(&u);
                lo = lo.min(r[0]);
                hi = hi.max(*r.last().unwrap());
            }
        }
        if !(lo > 1e-6) {
            return Err(Error::NotStrictlyConvex { r_min: lo });
        }
        self.r_min = lo;
        self.r_max = hi;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    /// Minimum principal radius of curvature (0 for points).
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Maximum principal radius of curvature (0 for points).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_point(&self) -> bool {
        matches!(self.kind, BodyKind::Point { .. })
    }

    /// Location of a point body.
    pub fn point_location(&self) -> Option<&[f64]> {
        match &self.kind {
            BodyKind::Point { x0 } => Some(x0),
            _ => None,
        }
    }

    /// `h_K(u) = max_{x∈K} u·x`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Point { x0 } => dot(u, x0),
            BodyKind::Ball { center, radius } => dot(u, center) + radius * norm(u),
            BodyKind::Ellipsoid { center, shape } => dot(u, center) + quad_form(shape, u).sqrt(),
            BodyKind::Harmonic { base, terms } => {
                let r = norm(u);
                base.support(u) + terms.iter().map(|t| term_value(t, u, r)).sum::<f64>()
            }
            BodyKind::Sum(a, b) => a.support(u) + b.support(u),
        }
    }

    /// Inverse Gauss map `x_K(θ) = ∇h_K(θ)` for unit `θ`.
    pub fn inverse_gauss(&self, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            BodyKind::Point { x0 } => x0.clone(),
            BodyKind::Ball { center, radius } => center.iter().zip(u).map(|(c, x)| c + radius * x).collect(),
            BodyKind::Ellipsoid { center, shape } => {
                let h = quad_form(shape, u).sqrt();
                let mu = mat_vec(shape, u);
                center.iter().zip(&mu).map(|(c, m)| c + m / h).collect()
            }
            BodyKind::Harmonic { base, terms } => {
                let mut g = base.inverse_gauss(u);
                for t in terms {
                    let (m, grad) = monomial_grad(t, u);
                    let k: u32 = t.exponents.iter().sum();
                    for i in 0..self.dim {
                        g[i] += grad[i] - (k as f64 - 1.0) * m * u[i];
                    }
                }
                g
            }
            BodyKind::Sum(a, b) => a.inverse_gauss(u).iter().zip(b.inverse_gauss(u)).map(|(x, y)| x + y).collect(),
        }
    }

    /// Ambient Hessian of the 1-homogeneous extension at unit `u`.
    pub fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        match &self.kind {
            BodyKind::Point { .. } => DMatrix::zeros(d, d),
            BodyKind::Ball { radius, .. } => {
                DMatrix::from_fn(d, d, |i, j| radius * (if i == j { 1.0 } else { 0.0 } - u[i] * u[j]))
            }
            BodyKind::Ellipsoid { shape, .. } => {
                let h = quad_form(shape, u).sqrt();
                let mu = mat_vec(shape, u);
                DMatrix::from_fn(d, d, |i, j| shape[(i, j)] / h - mu[i] * mu[j] / (h * h * h))
            }
            BodyKind::Harmonic { base, terms } => {
                let mut hess = base.hessian(u);
                for t in terms {
                    hess += term_hessian(t, u);
                }
                hess
            }
            BodyKind::Sum(a, b) => a.hessian(u) + b.hessian(u),
        }
    }

    /// Principal radii of curvature at `x_K(u)`, ascending.
    pub fn principal_radii(&self, u: &[f64]) -> Vec<f64> {
        if self.is_point() {
            return vec![0.0; self.dim - 1];
        }
        let e = tangent_frame(u);
        let r = e.transpose() * self.hessian(u) * &e;
        let r = (&r + r.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Coefficients `a_0..a_{d-1}` of `P_K(t,θ) = Σ a_j t^j`.
    pub fn area_coeffs(&self, u: &[f64]) -> Vec<f64> {
        let r = self.principal_radii(u);
        let e = elementary_symmetric(&r);
        (0..self.dim).map(|j| e[self.dim - 1 - j]).collect()
    }

    /// `P_K(t,θ) = Π (t + r_i(θ))`.
    pub fn area_element(&self, t: f64, u: &[f64]) -> f64 {
        self.principal_radii(u).iter().map(|r| t + r).product()
    }

    pub fn minkowski_sum(&self, other: &SupportBody) -> Result<SupportBody> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if let BodyKind::Point { x0 } = &other.kind {
            return Ok(self.translate(x0));
        }
        if let BodyKind::Point { x0 } = &self.kind {
            return Ok(other.translate(x0));
        }
        if let (BodyKind::Ball { center: c1, radius: r1 }, BodyKind::Ball { center: c2, radius: r2 }) =
            (&self.kind, &other.kind)
        {
            return SupportBody::ball(add(c1, c2), r1 + r2);
        }
        Ok(SupportBody {
            dim: self.dim,
            kind: BodyKind::Sum(Box::new(self.clone()), Box::new(other.clone())),
            r_min: self.r_min + other.r_min,
            r_max: self.r_max + other.r_max,
        })
    }

    /// `-K`, with `h_{-K}(u) = h_K(-u)`.
    pub fn reflect(&self) -> SupportBody {
        let kind = match &self.kind {
            BodyKind::Point { x0 } => BodyKind::Point { x0: neg(x0) },
            BodyKind::Ball { center, radius } => BodyKind::Ball { center: neg(center), radius: *radius },
            BodyKind::Ellipsoid { center, shape } => BodyKind::Ellipsoid { center: neg(center), shape: shape.clone() },
            // even perturbations are reflection invariant
            BodyKind::Harmonic { base, terms } => BodyKind::Harmonic { base: Box::new(base.reflect()), terms: terms.clone() },
            BodyKind::Sum(a, b) => BodyKind::Sum(Box::new(a.reflect()), Box::new(b.reflect())),
        };
        SupportBody { dim: self.dim, kind, r_min: self.r_min, r_max: self.r_max }
    }

    pub fn translate(&self, v: &[f64]) -> SupportBody {
        let kind = match &self.kind {
            BodyKind::Point { x0 } => BodyKind::Point { x0: add(x0, v) },
            BodyKind::Ball { center, radius } => BodyKind::Ball { center: add(center, v), radius: *radius },
            BodyKind::Ellipsoid { center, shape } => BodyKind::Ellipsoid { center: add(center, v), shape: shape.clone() },
            BodyKind::Harmonic { base, terms } => BodyKind::Harmonic { base: Box::new(base.translate(v)), terms: terms.clone() },
            BodyKind::Sum(a, b) => BodyKind::Sum(Box::new(a.translate(v)), b.clone()),
        };
        SupportBody { dim: self.dim, kind, r_min: self.r_min, r_max: self.r_max }
    }

    /// Upper bound for `max_θ |h_K(θ)|`.
    pub fn support_bound(&self) -> f64 {
        match &self.kind {
            BodyKind::Point { x0 } => norm(x0),
            BodyKind::Ball { center, radius } => norm(center) + radius,
            BodyKind::Ellipsoid { center, shape } => {
                let ev = SymmetricEigen::new(shape.clone()).eigenvalues;
                norm(center) + ev.max().max(0.0).sqrt()
            }
            BodyKind::Harmonic { base, terms } => {
                // |u^α| ≤ 1 on the sphere
                base.support_bound() + terms.iter().map(|t| t.coeff.abs()).sum::<f64>()
            }
            BodyKind::Sum(a, b) => a.support_bound() + b.support_bound(),
        }
    }

    /// A point inside the body (used to seed Newton iterations).
    pub fn interior_point(&self) -> Vec<f64> {
        match &self.kind {
            BodyKind::Point { x0 } => x0.clone(),
            BodyKind::Ball { center, .. } | BodyKind::Ellipsoid { center, .. } => center.clone(),
            BodyKind::Harmonic { base, .. } => base.interior_point(),
            BodyKind::Sum(a, b) => add(&a.interior_point(), &b.interior_point()),
        }
    }

    /// Steiner polynomial and intrinsic volumes by spherical quadrature with
    /// adaptive order doubling.
    pub fn steiner(&self) -> Result<SteinerData> {
        let d = self.dim;
        let area = crate::special::sphere_area(d);
        if self.is_point() {
            let mut moments = vec![0.0; d];
            moments[d - 1] = area;
            return Ok(steiner_from_moments(d, 0.0, moments, 0));
        }
        let max_order = if d <= 3 { 512 } else if d == 4 { 96 } else { 40 };
        let mut n = if d <= 3 { 16 } else { 8 };
        let mut prev = self.steiner_moments(n);
        loop {
            let m = 2 * n;
            let cur = self.steiner_moments(m);
            let diff = prev
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                .fold(0.0, f64::max);
            if diff <= 1e-8 {
                let (vol, moments) = (cur[0], cur[1..].to_vec());
                return Ok(steiner_from_moments(d, vol, moments, m));
            }
            if 2 * m > max_order {
                return Err(Error::QuadratureOrder { diff });
            }
            prev = cur;
            n = m;
        }
    }

    fn steiner_moments(&self, n: usize) -> Vec<f64> {
        let d = self.dim;
        let grid = SphericalGrid::cached(d, n);
        let mut out = vec![0.0; d + 1];
        let vals: Vec<Vec<f64>> = grid.map_nodes(|u| {
            let a = self.area_coeffs(u);
            let mut v = Vec::with_capacity(d + 1);
            v.push(self.support(u) * a[0] / d as f64);
            v.extend(a);
            v
        });
        for (k, o) in out.iter_mut().enumerate() {
            let col: Vec<f64> = vals.iter().zip(grid.weights()).map(|(v, w)| w * v[k]).collect();
            *o = crate::spherequad::pairwise_sum(&col);
        }
        out
    }
}

fn steiner_from_moments(d: usize, vol: f64, moments: Vec<f64>, order: usize) -> SteinerData {
    let mut c = vec![vol];
    for (j, m) in moments.iter().enumerate() {
        c.push(m / (j + 1) as f64);
    }
    let intrinsic: Vec<f64> = (0..=d).map(|k| c[d - k] / unit_ball_volume(d - k)).collect();
    SteinerData { dim: d, vol, surface_moments: moments, steiner_coeffs: c, intrinsic, quadrature_order: order }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidBody(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

fn quad_form(m: &DMatrix<f64>, u: &[f64]) -> f64 {
    let mu = mat_vec(m, u);
    dot(&mu, u)
}

fn mat_vec(m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * u[j]).sum()).collect()
}

fn monomial(t: &HarmonicTerm, u: &[f64]) -> f64 {
    t.coeff * u.iter().zip(&t.exponents).map(|(x, &k)| x.powi(k as i32)).product::<f64>()
}

fn term_value(t: &HarmonicTerm, u: &[f64], r: f64) -> f64 {
    let k: u32 = t.exponents.iter().sum();
    monomial(t, u) * r.powi(1 - k as i32)
}

fn monomial_grad(t: &HarmonicTerm, u: &[f64]) -> (f64, Vec<f64>) {
    let d = u.len();
    let m = monomial(t, u);
    let grad = (0..d)
        .map(|i| {
            let k = t.exponents[i];
            if k == 0 {
                return 0.0;
            }
            let mut p = t.coeff * k as f64;
            for j in 0..d {
                let e = if j == i { k - 1 } else { t.exponents[j] };
                p *= u[j].powi(e as i32);
            }
            p
        })
        .collect();
    (m, grad)
}

fn monomial_hessian(t: &HarmonicTerm, u: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    DMatrix::from_fn(d, d, |i, j| {
        let mut e: Vec<i64> = t.exponents.iter().map(|&k| k as i64).collect();
        let mut c = t.coeff * e[i] as f64;
        e[i] -= 1;
        c *= e[j] as f64;
        e[j] -= 1;
        if c == 0.0 {
            return 0.0;
        }
        c * u.iter().zip(&e).map(|(x, &k)| x.powi(k as i32)).product::<f64>()
    })
}

/// Hessian of `|x|^{1-k} m(x)` at unit `u`.
fn term_hessian(t: &HarmonicTerm, u: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let k: u32 = t.exponents.iter().sum();
    let a = 1.0 - k as f64;
    let (m, g) = monomial_grad(t, u);
    let hm = monomial_hessian(t, u);
    DMatrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        a * m * (id + (a - 2.0) * u[i] * u[j]) + a * (u[i] * g[j] + g[i] * u[j]) + hm[(i, j)]
    })
}


impl SupportBody {
    /// Gradient of the 1-homogeneous extension at a (not necessarily unit) point.
    pub fn inverse_gauss_ambient(&self, x: &[f64]) -> Vec<f64> {
        let n = norm(x);
        let u: Vec<f64> = x.iter().map(|v| v / n).collect();
        self.inverse_gauss(&u)
    }
}
