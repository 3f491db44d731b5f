//! Data behind figure panels 1a to 7b, one CSV each, plus manifest.json.

use std::path::Path;

use oufet::extensions::double_well_spectrum;
use oufet::mc_oracle::{ou_trajectory, sample_positions, Dynamics, Scheme, SimConfig};
use oufet::mean_exit::{met_interval, met_interval_asymptotic, Regime};
use oufet::ou_model::{stokes_drag, DoubleWellParams, OUProblem};
use oufet::specfun::gamma;
use oufet::spectral::{build_basis, SpectralGeometry};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::sheet::{write_to, Sheet};

type Res<T> = Result<T, CliError>;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo * (hi / lo).powf(i as f64 / (n - 1) as f64) }).collect()
}

fn table<F>(x: &str, cols: Vec<String>, xs: &[f64], f: F) -> Res<Sheet>
where
    F: Fn(f64) -> Res<Vec<f64>> + Sync,
{
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&v| {
            let mut r = vec![v];
            r.extend(f(v)?);
            Ok(r)
        })
        .collect::<Res<_>>()?;
    let mut h = vec![x.to_string()];
    h.extend(cols);
    Ok(Sheet::new(h, rows))
}

fn labels(prefix: &str, name: &str, vals: &[f64]) -> Vec<String> {
    vals.iter().map(|v| format!("{prefix}({name}={v})")).collect()
}

struct Panel {
    file: &'static str,
    figure: u32,
    panel: &'static str,
    caption: &'static str,
    parameters: Value,
    sheet: Sheet,
}

fn fig1a() -> Res<Panel> {
    let ks = [0.5, 1.0, 2.0, 5.0, 10.0];
    let mut cols = labels("mean_exit_ratio", "kappa", &ks);
    cols.push("brownian_ratio".into());
    let peaks: Vec<f64> = ks.iter().map(|&k| met_interval(k, 0.0, 0.0)).collect::<Result<_, _>>()?;
    let sheet = table("z0", cols, &grid(-1.0, 1.0, 201), |z| {
        let mut r: Vec<f64> = ks.iter().zip(&peaks).map(|(&k, &m)| Ok(met_interval(k, 0.0, z)? / m)).collect::<Res<_>>()?;
        r.push(1.0 - z * z);
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig1a",
        figure: 1,
        panel: "a",
        caption: "mean exit time vs z0 for several kappa at varphi = 0, divided by its value at z0 = 0",
        parameters: json!({ "kappa": ks, "varphi": 0.0 }),
        sheet,
    })
}

fn fig1b() -> Res<Panel> {
    let ps = [0.0, 0.5, 1.0, 2.0];
    let mut cols = labels("mean_exit", "varphi", &ps);
    cols.push("brownian".into());
    let sheet = table("z0", cols, &grid(-1.0, 1.0, 201), |z| {
        let mut r: Vec<f64> = ps.iter().map(|&p| met_interval(1.0, p, z)).collect::<Result<_, _>>()?;
        r.push(0.5 * (1.0 - z * z));
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig1b",
        figure: 1,
        panel: "b",
        caption: "mean exit time vs z0 for several varphi at kappa = 1",
        parameters: json!({ "kappa": 1.0, "varphi": ps }),
        sheet,
    })
}

fn fig2a() -> Res<Panel> {
    let ps = [0.0, 0.5];
    let mut cols = labels("mean_exit", "varphi", &ps);
    cols.extend(labels("large_kappa", "varphi", &ps));
    cols.push("small_kappa(varphi=0)".into());
    let sheet = table("kappa", cols, &grid(0.0, 20.0, 201), |k| {
        let mut r: Vec<f64> = ps.iter().map(|&p| met_interval(k, p, 0.0)).collect::<Result<_, _>>()?;
        for &p in &ps {
            r.push(met_interval_asymptotic(k, p, 0.0, Regime::Auto).unwrap_or(f64::NAN));
        }
        r.push(0.5 * (1.0 + k / 3.0 + 2.0 * k * k / 45.0));
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig2a",
        figure: 2,
        panel: "a",
        caption: "mean exit time from the centre vs kappa, with the large- and small-kappa approximations",
        parameters: json!({ "varphi": ps, "z0": 0.0 }),
        sheet,
    })
}

fn fig2b() -> Res<Panel> {
    let ks = [1.0, 5.0, 10.0];
    let mut cols = labels("mean_exit", "kappa", &ks);
    cols.extend(labels("asymptotic", "kappa", &ks));
    let sheet = table("varphi", cols, &grid(0.0, 3.0, 151), |p| {
        let mut r: Vec<f64> = ks.iter().map(|&k| met_interval(k, p, 0.0)).collect::<Result<_, _>>()?;
        for &k in &ks {
            r.push(met_interval_asymptotic(k, p, 0.0, Regime::Auto).unwrap_or(f64::NAN));
        }
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig2b",
        figure: 2,
        panel: "b",
        caption: "mean exit time from the centre vs varphi, with the exponential (varphi < 1) and logarithmic (varphi > 1) approximations",
        parameters: json!({ "kappa": ks, "z0": 0.0 }),
        sheet,
    })
}

fn density_panel(file: &'static str, panel: &'static str, caption: &'static str, cases: &[(f64, f64)], by: &str) -> Res<Panel> {
    let bases: Vec<_> = cases.iter().map(|&(k, p)| build_basis(SpectralGeometry::Interval1D, k, p, 1, 30)).collect::<Result<_, _>>()?;
    let vals: Vec<f64> = cases.iter().map(|&(k, p)| if by == "kappa" { k } else { p }).collect();
    let sheet = table("t", labels("q", by, &vals), &grid(0.005, 2.0, 400), |t| {
        bases.iter().map(|b| Ok(b.fet_density(0.0, t)?.value)).collect()
    })?;
    Ok(Panel {
        file,
        figure: 3,
        panel,
        caption,
        parameters: json!({ "cases": cases.iter().map(|&(k, p)| json!({ "kappa": k, "varphi": p })).collect::<Vec<_>>(), "z0": 0.0, "modes": 30 }),
        sheet,
    })
}

fn survival_panel(file: &'static str, panel: &'static str, varphi: f64) -> Res<Panel> {
    let ts = [0.05, 0.1, 0.2, 0.5, 1.0];
    let b = build_basis(SpectralGeometry::Interval1D, 1.0, varphi, 1, 30)?;
    let sheet = table("z0", labels("S", "t", &ts), &grid(-1.0, 1.0, 201), |z| {
        ts.iter().map(|&t| Ok(b.survival(z, t)?.value)).collect()
    })?;
    Ok(Panel {
        file,
        figure: 4,
        panel,
        caption: "survival probability vs z0 at several times, kappa = 1",
        parameters: json!({ "kappa": 1.0, "varphi": varphi, "t": ts, "modes": 30 }),
        sheet,
    })
}

fn fig5a() -> Res<Panel> {
    let cols = vec!["lambda_0".into(), "lambda_1".into(), "lambda_2".into(), "lambda_0_asymptotic".into(), "4_kappa".into(), "8_kappa".into()];
    let sheet = table("kappa", cols, &grid(0.0, 20.0, 101), |k| {
        let mut r = build_basis(SpectralGeometry::RadialInterior, k, 0.0, 3, 3)?.eigenvalues();
        r.push(4.0 * k.powf(2.5) * (-k).exp() / gamma(1.5));
        r.push(4.0 * k);
        r.push(8.0 * k);
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig5a",
        figure: 5,
        panel: "a",
        caption: "first three eigenvalues vs kappa, interior of the ball, d = 3, with the large-kappa laws",
        parameters: json!({ "d": 3, "geometry": "interior" }),
        sheet,
    })
}

fn fig5b() -> Res<Panel> {
    let cols = vec!["lambda_0".into(), "lambda_1".into(), "lambda_2".into(), "lambda_0_small_kappa".into(), "4_kappa".into(), "8_kappa".into()];
    let sheet = table("kappa", cols, &log_grid(1e-3, 10.0, 81), |k| {
        let mut r = build_basis(SpectralGeometry::RadialExterior, k, 0.0, 3, 3)?.eigenvalues();
        r.push(4.0 * k.powf(1.5) / std::f64::consts::PI.sqrt());
        r.push(4.0 * k);
        r.push(8.0 * k);
        Ok(r)
    })?;
    Ok(Panel {
        file: "fig5b",
        figure: 5,
        panel: "b",
        caption: "first three eigenvalues vs kappa, exterior of the ball, d = 3, with the small-kappa laws",
        parameters: json!({ "d": 3, "geometry": "exterior" }),
        sheet,
    })
}

fn trajectory_panel(file: &'static str, panel: &'static str, f0: f64, pulse: Option<(f64, f64)>, seed: u64) -> Res<Panel> {
    let gamma = stokes_drag(1e-6, 1e-3);
    let base = OUProblem::from_physical(1e-6, gamma, 300.0, 0.0, 1e-7, 1)?;
    let p = OUProblem::from_physical(1e-6, gamma, 300.0, f0, base.ell_k, 1)?;
    let delta = SimConfig::default_delta(&p);
    let c = ou_trajectory(&p, pulse, 0.0, 1.0, delta, seed)?;
    let rows = c.samples.iter().map(|&(t, x)| vec![t, x]).collect();
    let sheet = Sheet::new(vec!["t [s]".into(), "x [m]".into()], rows).meta("ell_k", p.ell_k).meta("xhat", p.xhat);
    Ok(Panel {
        file,
        figure: 6,
        panel,
        caption: "simulated trajectory of a 1 um bead in water, k = 1e-6 N/m, T = 300 K",
        parameters: json!({ "k": 1e-6, "radius": 1e-6, "viscosity": 1e-3, "temperature": 300.0, "f0": f0, "pulse": pulse.map(|(a, b)| vec![a, b]), "delta": delta, "seed": seed }),
        sheet,
    })
}

fn double_well_panel(file: &'static str, panel: &'static str, x0: f64, seed: u64, paths: usize) -> Res<Panel> {
    let p = DoubleWellParams::new(1.0, 1.0, 2.0, 1.0, 1.0)?;
    let sp = double_well_spectrum(&p, 50)?;
    let ts = [0.1, 0.5, 2.0, 5.0];
    let (lo, hi, nb) = (-4.0, 4.0, 80usize);
    let w = (hi - lo) / nb as f64;
    let cfg = SimConfig::new(1e-3, paths, 5.0, seed, Scheme::AR1)?;
    let xs = sample_positions(&Dynamics::DoubleWell(p.clone()), x0, &ts, &cfg)?;
    let hist: Vec<Vec<f64>> = xs
        .iter()
        .map(|sample| {
            let mut c = vec![0usize; nb];
            for &x in sample {
                let k = ((x - lo) / w).floor();
                if k >= 0.0 && (k as usize) < nb {
                    c[k as usize] += 1;
                }
            }
            c.iter().map(|&n| n as f64 / (paths as f64 * w)).collect()
        })
        .collect();
    let centres: Vec<f64> = (0..nb).map(|k| lo + (k as f64 + 0.5) * w).collect();
    let mut cols = labels("p", "t", &ts);
    cols.extend(labels("histogram", "t", &ts));
    let sheet = table("x", cols, &centres, |x| {
        let k = ((x - lo) / w).floor() as usize;
        let mut r: Vec<f64> = ts.iter().map(|&t| Ok(sp.propagator(x, t, x0)?.value)).collect::<Res<_>>()?;
        r.extend(hist.iter().map(|h| h[k]));
        Ok(r)
    })?;
    Ok(Panel {
        file,
        figure: 7,
        panel,
        caption: "double-well propagator (50 modes) with Monte Carlo histograms",
        parameters: json!({ "x1": 1.0, "x2": 1.0, "kappa1": 2.0, "kappa2": 1.0, "diffusion": 1.0, "x0": x0, "t": ts, "modes": 50, "delta": 1e-3, "paths": paths, "seed": seed }),
        sheet,
    })
}

fn named<T>(name: &str, r: Res<T>) -> Res<T> {
    r.map_err(|e| CliError::Panel(name.into(), Box::new(e)))
}

pub fn figure_pack(dir: &Path, seed: u64, paths: usize) -> Res<Value> {
    let jobs: Vec<(&str, Box<dyn Fn() -> Res<Panel>>)> = vec![
        ("fig1a", Box::new(fig1a)),
        ("fig1b", Box::new(fig1b)),
        ("fig2a", Box::new(fig2a)),
        ("fig2b", Box::new(fig2b)),
        ("fig3a", Box::new(|| density_panel("fig3a", "a", "exit-time density from the centre for several kappa, varphi = 0", &[(0.5, 0.0), (1.0, 0.0), (2.0, 0.0), (5.0, 0.0)], "kappa"))),
        ("fig3b", Box::new(|| density_panel("fig3b", "b", "exit-time density from the centre for several varphi, kappa = 1", &[(1.0, 0.0), (1.0, 0.5), (1.0, 1.0), (1.0, 2.0)], "varphi"))),
        ("fig4a", Box::new(|| survival_panel("fig4a", "a", 0.0))),
        ("fig4b", Box::new(|| survival_panel("fig4b", "b", 0.9))),
        ("fig5a", Box::new(fig5a)),
        ("fig5b", Box::new(fig5b)),
        ("fig6a", Box::new(move || trajectory_panel("fig6a", "a", 0.0, None, seed))),
        ("fig6b", Box::new(move || trajectory_panel("fig6b", "b", 0.2e-12, Some((0.3, 0.5)), seed.wrapping_add(1)))),
        ("fig7a", Box::new(move || double_well_panel("fig7a", "a", 2.0, seed, paths))),
        ("fig7b", Box::new(move || double_well_panel("fig7b", "b", -2.0, seed, paths))),
    ];
    let mut entries = Vec::new();
    for (name, job) in jobs {
        let p = named(name, job())?;
        let path = dir.join(format!("{}.csv", p.file));
        let sheet = p.sheet.clone().meta("figure", format!("{}{}", p.figure, p.panel)).meta("parameters", p.parameters.clone()).meta("oufet_version", oufet::VERSION);
        named(name, write_to(Some(&path), |w| sheet.write_csv(w)))?;
        entries.push(json!({
            "file": format!("{}.csv", p.file),
            "figure": p.figure,
            "panel": p.panel,
            "caption": p.caption,
            "parameters": p.parameters,
            "columns": p.sheet.columns,
        }));
    }
    let manifest = json!({ "oufet_version": oufet::VERSION, "seed": seed, "panels": entries });
    let text = serde_json::to_string_pretty(&manifest).map_err(oufet::Error::from)?;
    write_to(Some(&dir.join("manifest.json")), |w| writeln!(w, "{text}"))?;
    Ok(manifest)
}
