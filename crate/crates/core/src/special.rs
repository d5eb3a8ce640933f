//! Special functions: Gamma-derived constants and Bessel functions of
//! integer and half-integer order.

use std::f64::consts::PI;

pub use statrs::function::erf::erfc;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// `Γ(k/2)` for a positive integer `k`, exact up to rounding.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut g, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^{d-1}`, `2π^{d/2} / Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Volume of the unit ball in `R^l`, `π^{l/2} / Γ(l/2 + 1)`.
pub fn unit_ball_volume(l: usize) -> f64 {
    if l == 0 {
        1.0
    } else {
        sphere_area(l) / l as f64
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k.min(n - k) {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Elementary symmetric polynomials `e_0..e_n` of `r`.
pub fn elementary_symmetric(r: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; r.len() + 1];
    e[0] = 1.0;
    for (i, &ri) in r.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += ri * e[j - 1];
        }
    }
    e
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Bessel function of the first kind `J_ν(x)` for `x ≥ 0` and `ν` a
/// nonnegative integer or half-integer.
///
/// Integer orders use the power series for `x ≤ 8` and Miller's backward
/// recurrence normalised by `J_0 + 2Σ J_{2k} = 1` beyond. Half-integer
/// orders go through spherical Bessel functions (upward recurrence when
/// `x > ν`, power series otherwise).
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_j: negative argument");
    assert!(nu >= 0.0, "bessel_j: negative order");
    let two_nu = (2.0 * nu).round();
    assert!((2.0 * nu - two_nu).abs() < 1e-12, "bessel_j: order must be a half-integer");
    let two_nu = two_nu as i64;
    if two_nu % 2 == 0 {
        bessel_j_int((two_nu / 2) as usize, x)
    } else {
        bessel_j_half((two_nu / 2) as usize, x)
    }
}

fn bessel_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let h = x / 2.0;
    let mut term = (nu * h.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = -h * h;
    for k in 1..400 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_j_int(n: usize, x: f64) -> f64 {
    if x <= 8.0 {
        return bessel_series(n as f64, x);
    }
    // Miller backward recurrence
    let start = {
        let m = (x + 30.0 + 10.0 * x.cbrt()).ceil() as usize + n;
        m + (m % 2)
    };
    let (mut jp1, mut j) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut out = 0.0;
    for k in (0..start).rev() {
        // j = J_{k+1} (unnormalised), jp1 = J_{k+2}
        let jm = 2.0 * (k + 1) as f64 / x * j - jp1;
        jp1 = j;
        j = jm;
        // now j = J_k
        if k == n {
            out = j;
        }
        if k == 0 {
            norm += j;
        } else if k % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            out *= 1e-250;
        }
    }
    out / norm
}

fn bessel_j_half(n: usize, x: f64) -> f64 {
    let nu = n as f64 + 0.5;
    if x <= n as f64 + 1.0 || x < 1e-3 {
        return bessel_series(nu, x);
    }
    let (s, c) = x.sin_cos();
    let mut jm = s / x;
    if n > 0 {
        let mut j = s / (x * x) - c / x;
        for l in 1..n {
            let jn = (2 * l + 1) as f64 / x * j - jm;
            jm = j;
            j = jn;
        }
        jm = j;
    }
    jm * (2.0 * x / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_trapezoid(x: f64) -> f64 {
        // J_0(x) = (1/π)∫_0^π cos(x sin τ) dτ, trapezoid is spectrally exact
        let n = 4000;
        let mut s = 0.0;
        for k in 0..n {
            let tau = PI * (k as f64 + 0.5) / n as f64;
            s += (x * tau.sin()).cos();
        }
        s / n as f64
    }

    fn jn_trapezoid(n: usize, x: f64) -> f64 {
        let m = 4000;
        let mut s = 0.0;
        for k in 0..m {
            let tau = PI * (k as f64 + 0.5) / m as f64;
            s += (n as f64 * tau - x * tau.sin()).cos();
        }
        s / m as f64
    }

    #[test]
    fn integer_orders_match_integral_representation() {
        for &x in &[0.0, 0.3, 1.0, 5.0, 7.9, 8.1, 12.0, 25.0, 40.0, 123.4, 400.0] {
            assert!((bessel_j(0.0, x) - j0_trapezoid(x)).abs() < 1e-13, "J0({x})");
            for n in 1..4 {
                assert!((bessel_j(n as f64, x) - jn_trapezoid(n, x)).abs() < 1e-13, "J{n}({x})");
            }
        }
    }

    #[test]
    fn half_integer_orders() {
        for &x in &[0.01, 0.5, 1.0, 3.0, 10.0, 150.0] {
            let j12 = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(0.5, x) - j12).abs() < 1e-14);
            let j32 = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(1.5, x) - j32).abs() < 1e-13, "{x}");
        }
        // series/recurrence continuity at the switch
        let a = bessel_j(2.5, 3.0 - 1e-9);
        let b = bessel_j(2.5, 3.0 + 1e-9);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn constants() {
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((gamma_half(7) - gamma(3.5)).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0]), vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(binomial(5, 2), 10.0);
    }
}
