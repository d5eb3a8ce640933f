use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use orthospec::dynamics::{aniso_norm, correlation_csv, correlation_series, envelope_slope, equidistribute};
use orthospec::spectrum::{difference_body, enumerate};
use orthospec::spherequad::{bessel_surface, osc_integral, stationary_phase, OscOptions};
use orthospec::zetafns::{
    fit_point_normalization, guinand_pairing, singularity_scan, suggested_cutoff, twist_suppression, GaussianTest, PointSpectralModel,
    ScanOptions,
};
use orthospec::{SupportBody, ZetaModel};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// Everything a subcommand produces besides the echoed config.
pub struct Artifacts {
    pub report: Value,
    pub tables: Vec<(String, String)>,
    pub plot: String,
}

fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn steiner_json(b: &SupportBody) -> Result<Value> {
    let s = b.steiner()?;
    Ok(json!({
        "dim": s.dim,
        "intrinsic": s.intrinsic,
        "steiner_coeffs": s.steiner_coeffs,
        "surface_moments": s.surface_moments,
        "quadrature_order": s.quadrature_order,
    }))
}

pub fn volumes(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut bodies = serde_json::Map::new();
    let mut csv = String::from("body,k,V_k\n");
    for name in cfg.bodies.keys() {
        let b = cfg.body(name)?;
        let v = steiner_json(&b)?;
        for (k, x) in b.steiner()?.intrinsic.iter().enumerate() {
            writeln!(csv, "{name},{k},{x:?}")?;
        }
        bodies.insert(name.clone(), v);
    }
    let (k1, k2) = cfg.pair()?;
    let l = difference_body(&k1, &k2, cfg.orientation)?;
    for (k, x) in l.steiner()?.intrinsic.iter().enumerate() {
        writeln!(csv, "difference,{k},{x:?}")?;
    }
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset style data histograms\n\
                plot 'volumes.csv' using 3:xtic(sprintf('%s V%d', strcol(1), $2))\n"
        .to_string();
    Ok(Artifacts {
        report: json!({ "bodies": bodies, "difference_body": steiner_json(&l)? }),
        tables: vec![("volumes.csv".into(), csv)],
        plot,
    })
}

fn spectrum_for(cfg: &ExperimentConfig) -> Result<(SupportBody, SupportBody, orthospec::LengthSpectrum)> {
    let (k1, k2) = cfg.pair()?;
    let beta = cfg.twist(k1.dim())?;
    let s = enumerate(&k1, &k2, cfg.orientation, cfg.ranges.t0, cfg.ranges.t_max, &beta)?;
    Ok((k1, k2, s))
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (k1, k2, s) = spectrum_for(cfg)?;
    let d = s.dim();
    let l = difference_body(&k1, &k2, cfg.orientation)?;
    let st = l.steiner()?;
    let norm = (2.0 * PI).powi(-(d as i32));
    let mut counts = Vec::new();
    let mut csv_n = String::from("T,N,N_weighted_re,N_weighted_im,steiner\n");
    for &t in cfg.ranges.t_ladder.iter().filter(|t| **t <= s.t_max()) {
        let n = s.counting(t)?;
        let w = s.counting_weighted(t)?;
        let model = norm * (st.volume_of_parallel_body(t) - st.volume_of_parallel_body(s.t0()));
        writeln!(csv_n, "{t:?},{n},{:?},{:?},{model:?}", w.re, w.im)?;
        counts.push(json!({ "T": t, "N": n, "N_weighted": c(w), "steiner": model }));
    }
    let mut groups = String::from("length,multiplicity\n");
    for (len, m) in s.groups() {
        writeln!(groups, "{len:?},{m}")?;
    }
    let sigma = orthospec::zetafns::COUNT_SMOOTHING;
    let hi = s.t_max() - 8.0 * sigma;
    let lo = (s.t0() + 4.0 * sigma).max(hi / 2.0);
    let fit = if hi > lo {
        let ts: Vec<f64> = (0..60).map(|i| lo + (hi - lo) * i as f64 / 59.0).collect();
        Some(json!({ "window": [lo, hi], "sigma": sigma, "coefficients": s.fit_counting(&ts, sigma)? }))
    } else {
        None
    };
    let model_coeffs: Vec<f64> = (0..=d)
        .map(|k| if k == 0 { 0.0 } else { norm * st.surface_moments[k - 1] / k as f64 })
        .collect();
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'T'\nset ylabel 'N(T)'\n\
                plot 'spectrum_counts.csv' using 1:2 with linespoints, '' using 1:5 with lines\n"
        .to_string();
    Ok(Artifacts {
        report: json!({
            "dim": d,
            "t0": s.t0(),
            "t_max": s.t_max(),
            "records": s.records.len(),
            "distinct_lengths": s.groups().len(),
            "rejected": s.rejected.iter().map(|r| json!({"xi": r.xi, "length": r.length, "min_eigenvalue": r.min_eigenvalue})).collect::<Vec<_>>(),
            "counts": counts,
            "smoothed_fit": fit,
            "model_coefficients": model_coeffs,
        }),
        tables: vec![
            ("spectrum.csv".into(), s.to_csv()),
            ("spectrum_groups.csv".into(), groups),
            ("spectrum_counts.csv".into(), csv_n),
        ],
        plot,
    })
}

pub fn zeta(cfg: &ExperimentConfig, report_residues: bool) -> Result<Artifacts> {
    let (k1, k2, s) = spectrum_for(cfg)?;
    let d = s.dim();
    let integral = s.query.beta.beta0_integral();
    let mut report = serde_json::Map::new();
    if !integral {
        let ts: Vec<f64> = cfg.ranges.t_ladder.iter().copied().filter(|t| *t <= s.t_max()).collect();
        let r = twist_suppression(&s, &ts)?;
        report.insert("twist_suppression".into(), serde_json::to_value(&r)?);
    }
    let model = ZetaModel::new(&k1, &k2, s, cfg.ranges.splice)?;
    let mut csv = String::from("s_re,s_im,value_re,value_im,error,method\n");
    let mut vals = Vec::new();
    for [re, im] in &cfg.ranges.s_grid {
        let sv = Complex64::new(*re, *im);
        let (v, err, method) = if *re > d as f64 {
            let z = model.zeta_eval(sv)?;
            (z.value, z.tail_bound, "partial_sum")
        } else if integral {
            let (v, e) = model.zeta_continue_with_error(sv)?;
            (v, e, "continuation")
        } else {
            continue;
        };
        writeln!(csv, "{re:?},{im:?},{:?},{:?},{err:?},{method}", v.re, v.im)?;
        vals.push(json!({ "s": [re, im], "value": c(v), "error": err, "method": method }));
    }
    report.insert("splice".into(), json!(model.splice));
    report.insert("density".into(), json!(model.density.iter().map(|z| c(*z)).collect::<Vec<_>>()));
    report.insert("values".into(), json!(vals));
    let mut tables = vec![("zeta.csv".to_string(), csv)];
    if report_residues {
        let res = model.residues()?;
        let mut rc = String::from("pole,residue_re,residue_im,predicted_from_volumes,error_bar\n");
        for r in &res {
            writeln!(rc, "{},{:?},{:?},{:?},{:?}", r.pole, r.residue.re, r.residue.im, r.predicted_from_volumes, r.error_bar)?;
        }
        tables.push(("zeta_residues.csv".into(), rc));
        report.insert(
            "residues".into(),
            json!(res
                .iter()
                .map(|r| json!({
                    "pole": r.pole,
                    "residue": c(r.residue),
                    "predicted_from_volumes": r.predicted_from_volumes,
                    "empirical": r.empirical.iter().map(|z| c(*z)).collect::<Vec<_>>(),
                    "error_bar": r.error_bar,
                }))
                .collect::<Vec<_>>()),
        );
    }
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'Re s'\n\
                plot 'zeta.csv' using 1:3 with points title 'Re zeta', '' using 1:4 with points title 'Im zeta'\n"
        .to_string();
    Ok(Artifacts { report: Value::Object(report), tables, plot })
}

pub fn poincare(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (k1, k2, s) = spectrum_for(cfg)?;
    let beta = s.query.beta.clone();
    let model = ZetaModel::new(&k1, &k2, s, cfg.ranges.splice)?;
    let ys = cfg.ranges.y_grid.points();
    let eps0 = *cfg.ranges.eps_ladder.first().context("ranges.eps_ladder is empty")?;
    let mut csv = String::from("y,eps,direct_re,direct_im,tail_bound,closed_re,closed_im\n");
    let closed = match (k1.point_location(), k2.point_location()) {
        (Some(x), Some(y)) => {
            let a: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            let dist = a.iter().map(|v| v - 2.0 * PI * (v / (2.0 * PI)).round()).map(|v| v * v).sum::<f64>().sqrt();
            let (kappa, cd) = PointSpectralModel::poisson_constants(model.dim());
            Some(PointSpectralModel::new(x, y, &beta, kappa, cd, suggested_cutoff(dist))?)
        }
        _ => None,
    };
    let mut report = serde_json::Map::new();
    let mut direct_pairs = Vec::new();
    for &y in &ys {
        let sv = Complex64::new(eps0, y);
        let dv = model.poincare_eval(sv).ok();
        let cv = closed.as_ref().map(|m| orthospec::zetafns::PoincareSeries::eval(m, sv)).transpose()?;
        if let Some(v) = dv {
            direct_pairs.push((sv, v.value));
        }
        let f = |z: Option<Complex64>| z.map_or(("nan".to_string(), "nan".to_string()), |z| (format!("{:?}", z.re), format!("{:?}", z.im)));
        let (dr, di) = f(dv.map(|v| v.value));
        let (cr, ci) = f(cv);
        let tb = dv.map_or("nan".to_string(), |v| format!("{:?}", v.tail_bound));
        writeln!(csv, "{y:?},{eps0:?},{dr},{di},{tb},{cr},{ci}")?;
    }
    let scan = match &closed {
        Some(pm) => {
            if direct_pairs.len() >= 4 {
                let fit = fit_point_normalization(pm, &direct_pairs);
                report.insert("normalization".into(), serde_json::to_value(fit)?);
                let fitted = pm.with_normalization(fit.kappa, fit.c_d);
                singularity_scan(&fitted, &cfg.ranges.eps_ladder, &ys, ScanOptions::default())
            } else {
                singularity_scan(pm, &cfg.ranges.eps_ladder, &ys, ScanOptions::default())
            }
        }
        None => singularity_scan(&model, &cfg.ranges.eps_ladder, &ys, ScanOptions::default()),
    };
    match scan {
        Ok(fits) => {
            report.insert("singularities".into(), json!(fits
                .iter()
                .map(|f| json!({
                    "location": f.location, "alpha": f.alpha, "exponent": f.exponent,
                    "exponent_ci": [f.exponent_ci.0, f.exponent_ci.1], "coefficient": c(f.coefficient), "residual": f.residual,
                }))
                .collect::<Vec<_>>()));
        }
        Err(e) => {
            report.insert("scan_error".into(), json!(e.to_string()));
        }
    }
    if let Some(pm) = &closed {
        report.insert("lines".into(), json!(pm.lines(cfg.ranges.y_grid.hi)));
    }
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'y'\nset logscale y\n\
                plot 'poincare.csv' using 1:(sqrt($3**2+$4**2)) with lines title '|Z| direct', \
                '' using 1:(sqrt($6**2+$7**2)) with lines title '|Z| closed form'\n"
        .to_string();
    Ok(Artifacts { report: Value::Object(report), tables: vec![("poincare.csv".into(), csv)], plot })
}

pub fn guinand(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (k1, k2) = cfg.pair()?;
    let (Some(x), Some(y)) = (k1.point_location(), k2.point_location()) else {
        bail!("guinand needs two point bodies");
    };
    let d = k1.dim();
    let beta = cfg.twist(d)?;
    // the pairing needs every length, and points have no tangencies to exclude
    let t0 = Some(1e-3);
    let fwd = enumerate(&k1, &k2, cfg.orientation, t0, cfg.ranges.t_max, &beta)?;
    let bwd = enumerate(&k2, &k1, cfg.orientation, t0, cfg.ranges.t_max, &beta)?;
    let (kappa, cd) = PointSpectralModel::poisson_constants(d);
    let reach = cfg.guinand.center.unwrap_or(0.0).abs() + 40.0 * cfg.guinand.width + 2.0;
    let pm = PointSpectralModel::new(x, y, &beta, kappa, cd, reach.max(5.0))?;
    let center = match cfg.guinand.center {
        Some(c) => c,
        None => pm.lines(reach).into_iter().filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min),
    };
    let g = guinand_pairing(&fwd, &bwd, GaussianTest { center, width: cfg.guinand.width }, &pm)?;
    let diff = (g.length_side - g.spectral_side).norm();
    let csv = format!(
        "center,width,length_re,length_im,spectral_re,spectral_im,abs_diff\n{center:?},{:?},{:?},{:?},{:?},{:?},{diff:?}\n",
        cfg.guinand.width, g.length_side.re, g.length_side.im, g.spectral_side.re, g.spectral_side.im
    );
    let mut lines = String::from("line\n");
    for l in pm.lines(center + 10.0 * cfg.guinand.width) {
        writeln!(lines, "{l:?}")?;
    }
    let plot = format!(
        "set datafile separator ','\nset key autotitle columnhead\nphi(x) = exp(-(x-{center:?})**2/(2*{w:?}**2))\n\
         set xrange [{lo:?}:{hi:?}]\nplot phi(x) title 'test function', 'guinand_lines.csv' using 1:(0.5) with impulses title 'spectral lines'\n",
        w = cfg.guinand.width,
        lo = center - 5.0 * cfg.guinand.width,
        hi = center + 5.0 * cfg.guinand.width
    );
    Ok(Artifacts {
        report: json!({
            "center": center,
            "width": cfg.guinand.width,
            "length_side": c(g.length_side),
            "spectral_side": c(g.spectral_side),
            "abs_diff": diff,
            "rel_diff": diff / g.spectral_side.norm(),
            "kappa": kappa,
            "c_d": cd,
        }),
        tables: vec![("guinand.csv".into(), csv), ("guinand_lines.csv".into(), lines)],
        plot,
    })
}

fn observables(cfg: &ExperimentConfig, dim: usize) -> Result<(orthospec::TorusObservable, orthospec::TorusObservable)> {
    let phi = cfg.phi.as_ref().context("config needs `phi`")?.build(dim)?;
    let psi = match &cfg.psi {
        Some(p) => p.build(dim)?,
        None => phi.conj(),
    };
    Ok((phi, psi))
}

fn config_dim(cfg: &ExperimentConfig) -> Result<usize> {
    Ok(cfg.body(&cfg.k1)?.dim())
}

pub fn correlate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let d = config_dim(cfg)?;
    let (phi, psi) = observables(cfg, d)?;
    let beta = cfg.twist(d)?;
    let series = correlation_series(&phi, &psi, &beta.beta0, &cfg.ranges.t_ladder)?;
    let at_zero = orthospec::dynamics::correlation(&phi, &psi, &beta.beta0, 0.0)?;
    let direct = orthospec::dynamics::direct_pairing(&phi, &psi)?;
    let scaled: Vec<f64> = series.iter().map(|p| p.residual * p.t.powf((d as f64 + 1.0) / 2.0)).collect();
    let mut report = json!({
        "beta0": beta.beta0,
        "parseval": { "mode_sum": c(at_zero), "direct": c(direct) },
        "scaled_residual_max": scaled.iter().copied().fold(0.0, f64::max),
    });
    if let Some(p) = &cfg.aniso {
        report["aniso_norm"] = serde_json::to_value(aniso_norm(&phi, p)?)?;
    }
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset logscale xy\n\
                plot 'correlate.csv' using 1:6 with linespoints title '|C - expansion|'\n"
        .to_string();
    Ok(Artifacts { report, tables: vec![("correlate.csv".into(), correlation_csv(&series))], plot })
}

pub fn equidist(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let k = cfg.body(&cfg.k1)?;
    let f = cfg.phi.as_ref().context("config needs `phi` (a function of x only)")?.build(k.dim())?;
    let mut csv = String::from("t,average_re,average_im,error_re,error_im,error_mode_sum_re,error_mode_sum_im\n");
    let mut errs = Vec::new();
    for &t in &cfg.ranges.t_ladder {
        let r = equidistribute(&k, &f, t)?;
        writeln!(
            csv,
            "{t:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.average.re, r.average.im, r.error.re, r.error.im, r.error_mode_sum.re, r.error_mode_sum.im
        )?;
        errs.push(r.error.norm());
    }
    let slope = envelope_slope(&cfg.ranges.t_ladder, &errs).ok();
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset logscale xy\n\
                plot 'equidist.csv' using 1:(sqrt($4**2+$5**2)) with linespoints title '|error|'\n"
        .to_string();
    Ok(Artifacts {
        report: json!({
            "body": cfg.k1,
            "envelope_slope": slope.map(|s| json!({"slope": s.slope, "stderr": s.slope_stderr})),
            "max_abs_error": errs.iter().copied().fold(0.0, f64::max),
        }),
        tables: vec![("equidist.csv".into(), csv)],
        plot,
    })
}

pub fn oscint(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let spec = cfg.oscint.as_ref().context("config needs `oscint`")?;
    let d = spec.xi.len();
    let beta0 = spec.beta0.clone().unwrap_or_else(|| vec![0.0; d]);
    if beta0.len() != d {
        bail!("oscint.beta0 must have length {d}");
    }
    let body = spec.body.as_ref().map(|b| cfg.body(b)).transpose()?;
    let xt = |th: &[f64]| match &body {
        Some(b) => b.inverse_gauss(th),
        None => vec![0.0; d],
    };
    let one = |_: &[f64]| Complex64::new(1.0, 0.0);
    let r: f64 = spec.xi.iter().zip(&beta0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut csv = String::from("t,value_re,value_im,order,error_estimate,stationary_re,stationary_im,scaled_residual,bessel\n");
    for &t in &cfg.ranges.t_ladder {
        let v = osc_integral(one, xt, &spec.xi, &beta0, t, OscOptions::default())?;
        let (sp, resid) = match stationary_phase(one, xt, &spec.xi, &beta0, t) {
            Ok(s) => (s.value, (v.value - s.value).norm() * t.powf((d as f64 + 1.0) / 2.0)),
            Err(_) => (Complex64::new(f64::NAN, f64::NAN), f64::NAN),
        };
        let bessel = if body.is_none() { bessel_surface(d, t.abs() * r) } else { f64::NAN };
        writeln!(
            csv,
            "{t:?},{:?},{:?},{},{:?},{:?},{:?},{resid:?},{bessel:?}",
            v.value.re, v.value.im, v.order, v.error_estimate, sp.re, sp.im
        )?;
    }
    let plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\n\
                plot 'oscint.csv' using 1:2 with lines title 'Re I', '' using 1:6 with lines title 'Re stationary phase'\n"
        .to_string();
    Ok(Artifacts { report: json!({ "xi": spec.xi, "beta0": beta0 }), tables: vec![("oscint.csv".into(), csv)], plot })
}
