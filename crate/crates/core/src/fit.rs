//! Small least-squares helpers shared by the fitting routines.

use nalgebra::{DMatrix, DVector};

/// Ordinary least squares line `y ≈ a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    assert!(x.len() == y.len() && x.len() >= 2);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    LineFit { intercept, slope, slope_stderr: (ss / dof / sxx).sqrt(), rms: (ss / n).sqrt() }
}

/// Least-squares polynomial coefficients `c_0..c_deg` (lowest first).
/// Abscissae are rescaled internally for conditioning.
pub fn fit_polynomial(x: &[f64], y: &[f64], deg: usize) -> Vec<f64> {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let a = DMatrix::from_fn(x.len(), deg + 1, |i, j| (x[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("svd solve");
    (0..=deg).map(|j| sol[j] / scale.powi(j as i32)).collect()
}

/// Solve a general least-squares problem `A c ≈ b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().svd(true, true).solve(b, 1e-14).expect("svd solve")
}
