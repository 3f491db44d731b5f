use std::sync::Arc;

use clap::ArgMatches;
use oufet::extensions::*;
use oufet::mc_oracle::{simulate_fet, Boundary, Dynamics, Scheme, SimConfig};
use oufet::mean_exit::{met_interval_asymptotic, splitting_probability, Geometry, MeanExitRequest, Regime};
use oufet::ou_model::{stokes_drag, DoubleWellParams, OUProblem};
use oufet::specfun::*;
use oufet::spectral::{build_basis, mgf, SpectralBasis, SpectralGeometry};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{usage, CliError};
use crate::sheet::Sheet;
use crate::sweep::{plan, Diagnostics, Plan, Point};

fn spectral_geometry(g: Geom) -> Result<SpectralGeometry, CliError> {
    match g {
        Geom::Interval => Ok(SpectralGeometry::Interval1D),
        Geom::Interior => Ok(SpectralGeometry::RadialInterior),
        Geom::Exterior => Ok(SpectralGeometry::RadialExterior),
        Geom::ExteriorForced => usage("exterior-forced has a mean exit time only"),
    }
}

fn dim_for(g: SpectralGeometry, d: u32) -> u32 {
    if g == SpectralGeometry::Interval1D {
        1
    } else {
        d
    }
}

fn sheet(plan: &Plan, quantities: &[&str], rows: Vec<Vec<f64>>) -> Sheet {
    let fixed: serde_json::Map<String, Value> = plan.fixed.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    Sheet::new(plan.headers(quantities), rows).meta("fixed", Value::Object(fixed))
}

/// A basis built once when the swept parameters leave it unchanged.
fn shared_basis(plan: &Plan, g: SpectralGeometry, d: u32, modes: usize) -> Result<Option<Arc<SpectralBasis>>, CliError> {
    if plan.sweeps("kappa") || plan.sweeps("phi") {
        return Ok(None);
    }
    let p = plan.base();
    Ok(Some(Arc::new(build_basis(g, p.get("kappa"), p.get("phi"), d, modes)?)))
}

fn basis_at(shared: &Option<Arc<SpectralBasis>>, p: Point, g: SpectralGeometry, d: u32, modes: usize) -> Result<Arc<SpectralBasis>, CliError> {
    match shared {
        Some(b) => Ok(b.clone()),
        None => Ok(Arc::new(build_basis(g, p.get("kappa"), p.get("phi"), d, modes)?)),
    }
}

fn horizon_meta(s: Sheet, shared: &Option<Arc<SpectralBasis>>) -> Sheet {
    match shared {
        Some(b) => s.meta("t_min", b.t_min()),
        None => s,
    }
}

pub fn mean_exit(a: &MeanExitArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let physical = a.stiffness.is_some();
    if physical && a.length.is_none() {
        return usage("--stiffness needs --length");
    }
    if !physical && a.length.is_some() {
        return usage("--length needs --stiffness");
    }
    let given = |n: &str| m.value_source(n) == Some(clap::parser::ValueSource::CommandLine);
    if physical && (given("kappa") || given("phi")) {
        return usage("--kappa and --phi are derived from the physical parameters");
    }
    if a.asymptotic && a.geometry != Geom::Interval {
        return usage("--asymptotic applies to the interval only");
    }
    let geometry = match a.geometry {
        Geom::Interval => Geometry::Interval1D,
        Geom::Interior => Geometry::RadialInterior,
        Geom::Exterior => Geometry::RadialExterior,
        Geom::ExteriorForced => Geometry::Exterior1DForced,
    };
    let names: &[&str] = if physical {
        &["stiffness", "length", "bead_radius", "viscosity", "temperature", "force", "z0"]
    } else {
        &["kappa", "phi", "z0"]
    };
    let defaults: &[(&str, f64)] = if physical { &[] } else { &[("kappa", 1.0)] };
    let plan = plan(m, names, None, defaults)?;
    let d = a.d;
    let asymptotic = a.asymptotic;
    let rows = plan.evaluate(|p| {
        let (kappa, varphi, timescale) = if physical {
            let q = OUProblem::from_physical(
                p.get("stiffness"),
                stokes_drag(p.get("bead_radius"), p.get("viscosity")),
                p.get("temperature"),
                p.get("force"),
                p.get("length"),
                d,
            )?;
            (q.kappa, if q.mirrored { -q.varphi } else { q.varphi }, q.timescale())
        } else {
            (p.get("kappa"), p.get("phi"), 1.0)
        };
        let req = MeanExitRequest { geometry, kappa, varphi, start: p.get("z0"), d, timescale };
        let mut out = vec![req.evaluate()?.value()];
        if asymptotic {
            // undefined at kappa = 0; left as nan rather than failing the sweep
            let v = met_interval_asymptotic(kappa, varphi, p.get("z0"), Regime::Auto).map(|v| v * timescale);
            out.push(v.unwrap_or(f64::NAN));
        }
        Ok(out)
    })?;
    let unit = if physical { "mean_exit [s]" } else { "mean_exit [L^2/D]" };
    let mut q = vec![unit];
    if asymptotic {
        q.push("asymptotic");
    }
    Ok(sheet(&plan, &q, rows))
}

pub fn spectrum(a: &SpectrumArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let g = spectral_geometry(a.geometry)?;
    let d = dim_for(g, a.d);
    let plan = plan(m, &["kappa", "phi"], None, &[("kappa", 1.0)])?;
    if let Some(path) = &a.basis_json {
        if plan.xs.len() != 1 {
            return usage("--basis-json needs a single parameter point");
        }
        let p = plan.base();
        let b = build_basis(g, p.get("kappa"), p.get("phi"), d, a.modes)?;
        let text = b.to_json()?;
        crate::sheet::write_to(Some(path), |w| writeln!(w, "{text}"))?;
    }
    let modes = a.modes;
    let rows = plan.evaluate(|p| Ok(build_basis(g, p.get("kappa"), p.get("phi"), d, modes)?.eigenvalues()))?;
    let names: Vec<String> = (0..modes).map(|n| format!("lambda_{n} [D/L^2]")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(sheet(&plan, &refs, rows))
}

pub fn survival_or_density(a: &SpectralArgs, m: &ArgMatches, density: bool) -> Result<Sheet, CliError> {
    let g = spectral_geometry(a.geometry)?;
    let d = dim_for(g, a.d);
    let plan = plan(m, &["kappa", "phi", "z0", "t"], Some("t"), &[("z0", 0.0)])?;
    let shared = shared_basis(&plan, g, d, a.modes)?;
    let diag = Diagnostics::default();
    let modes = a.modes;
    let rows = plan.evaluate(|p| {
        let b = basis_at(&shared, p, g, d, modes)?;
        let v = if density { b.fet_density(p.get("z0"), p.get("t"))? } else { b.survival(p.get("z0"), p.get("t"))? };
        Ok(vec![diag.take(v)])
    })?;
    let q = if density { "q [D/L^2]" } else { "S" };
    let s = sheet(&plan, &[q], rows).meta("modes", modes).meta("warnings", diag.to_json());
    Ok(horizon_meta(s, &shared))
}

pub fn mgf_cmd(a: &MgfArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let g = spectral_geometry(a.geometry)?;
    let d = dim_for(g, a.d);
    let plan = plan(m, &["kappa", "phi", "z0", "s"], Some("s"), &[("z0", 0.0)])?;
    let rows = plan.evaluate(|p| Ok(vec![mgf(g, p.get("kappa"), p.get("phi"), d, p.get("z0"), p.get("s"))?]))?;
    Ok(sheet(&plan, &["mgf"], rows))
}

pub fn splitting(_a: &SplittingArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let plan = plan(m, &["kappa", "phi", "z0"], None, &[("z0", 0.0)])?;
    let rows = plan.evaluate(|p| Ok(vec![splitting_probability(p.get("kappa"), p.get("phi"), p.get("z0"))?]))?;
    Ok(sheet(&plan, &["P_upper"], rows))
}

pub fn single_barrier(a: &SingleBarrierArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let (names, defaults): (&[&str], &[(&str, f64)]) = match a.quantity {
        BarrierQuantity::Mgf => (&["k", "gamma", "diffusion", "ell", "x0", "s"], &[("s", 1.0)]),
        _ => (&["k", "gamma", "diffusion", "ell", "x0", "t"], &[("t", 1.0)]),
    };
    let plan = plan(m, names, Some("t"), defaults)?;
    let problem = |p: Point| SingleBarrierProblem::new(p.get("k"), p.get("gamma"), p.get("diffusion"), p.get("ell"), p.get("x0"));
    let shared = if a.quantity == BarrierQuantity::Survival && ["k", "gamma", "diffusion", "ell", "x0"].iter().all(|n| !plan.sweeps(n)) {
        Some(Arc::new(SingleBarrierSeries::new(&problem(plan.base())?, a.modes)?))
    } else {
        None
    };
    let diag = Diagnostics::default();
    let (quantity, modes) = (a.quantity, a.modes);
    let rows = plan.evaluate(|p| {
        let pr = problem(p)?;
        let v = match quantity {
            BarrierQuantity::Mgf => single_barrier_mgf(&pr, p.get("s"))?,
            BarrierQuantity::Density => diag.take(single_barrier_density(&pr, p.get("t"))?),
            BarrierQuantity::Survival => {
                let series = match &shared {
                    Some(s) => s.clone(),
                    None => Arc::new(SingleBarrierSeries::new(&pr, modes)?),
                };
                diag.take(series.survival(p.get("t"))?)
            }
        };
        Ok(vec![v])
    })?;
    let q = match a.quantity {
        BarrierQuantity::Mgf => "mgf",
        BarrierQuantity::Density => "density",
        BarrierQuantity::Survival => "S",
    };
    Ok(sheet(&plan, &[q], rows).meta("modes", a.modes).meta("warnings", diag.to_json()))
}

pub fn double_well(a: &DoubleWellArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let plan = plan(m, &["x1", "x2", "kappa1", "kappa2", "diffusion", "x0", "x", "t"], Some("t"), &[("x", 0.0)])?;
    let params = |p: Point| DoubleWellParams::new(p.get("x1"), p.get("x2"), p.get("kappa1"), p.get("kappa2"), p.get("diffusion"));
    let fixed_spectrum = ["x1", "x2", "kappa1", "kappa2", "diffusion"].iter().all(|n| !plan.sweeps(n));
    let shared = if fixed_spectrum { Some(Arc::new(double_well_spectrum(&params(plan.base())?, a.modes)?)) } else { None };
    let modes = a.modes;
    let below = std::sync::atomic::AtomicUsize::new(0);
    let rows = plan.evaluate(|p| {
        let sp = match &shared {
            Some(s) => s.clone(),
            None => Arc::new(double_well_spectrum(&params(p)?, modes)?),
        };
        let v = sp.propagator(p.get("x"), p.get("t"), p.get("x0"))?;
        if v.warning.is_some() {
            below.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(vec![v.value])
    })?;
    let mut s = sheet(&plan, &["p"], rows).meta("modes", modes).meta("below_horizon", below.into_inner());
    if let Some(sp) = &shared {
        s = s.meta("lambdas", sp.lambdas.iter().take(5).copied().collect::<Vec<_>>());
    }
    Ok(s)
}

pub fn sqrt_boundary(a: &SqrtBoundaryArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let (names, defaults): (&[&str], &[(&str, f64)]) = match a.quantity {
        SqrtQuantity::Moment => (&["b", "diffusion", "t0", "z0", "nu"], &[("nu", 0.5)]),
        _ => (&["b", "diffusion", "t0", "z0", "t"], &[("t", 1.0)]),
    };
    let plan = plan(m, names, None, defaults)?;
    let d = a.d;
    let problem = |p: Point| SqrtBoundaryProblem::new(d, p.get("b"), p.get("diffusion"), p.get("t0"), p.get("z0"));
    let fixed = ["b", "diffusion", "t0", "z0"].iter().all(|n| !plan.sweeps(n));
    let shared = if fixed && a.quantity != SqrtQuantity::Moment {
        Some(Arc::new(SqrtBoundarySeries::new(&problem(plan.base())?, a.modes)?))
    } else {
        None
    };
    let diag = Diagnostics::default();
    let (quantity, modes) = (a.quantity, a.modes);
    let rows = plan.evaluate(|p| {
        let pr = problem(p)?;
        if quantity == SqrtQuantity::Moment {
            return Ok(vec![sqrt_boundary_moment(&pr, p.get("nu"))?]);
        }
        let series = match &shared {
            Some(s) => s.clone(),
            None => Arc::new(SqrtBoundarySeries::new(&pr, modes)?),
        };
        let v = if quantity == SqrtQuantity::Density { series.density(p.get("t"))? } else { series.survival(p.get("t"))? };
        Ok(vec![diag.take(v)])
    })?;
    let q = match a.quantity {
        SqrtQuantity::Density => "density",
        SqrtQuantity::Survival => "S",
        SqrtQuantity::Moment => "moment",
    };
    let mut s = sheet(&plan, &[q], rows).meta("modes", a.modes).meta("warnings", diag.to_json());
    if let Some(series) = &shared {
        s = s.meta("nu0", series.nu0());
    }
    Ok(s)
}

pub fn ctrw(a: &CtrwArgs, m: &ArgMatches) -> Result<Sheet, CliError> {
    let g = spectral_geometry(a.geometry)?;
    let d = dim_for(g, a.d);
    let plan = plan(m, &["kappa", "phi", "z0", "alpha", "d_alpha", "t"], Some("t"), &[("t", 1.0)])?;
    let shared = shared_basis(&plan, g, d, a.modes)?;
    let diag = Diagnostics::default();
    let modes = a.modes;
    let rows = plan.evaluate(|p| {
        let b = basis_at(&shared, p, g, d, modes)?;
        Ok(vec![diag.take(ctrw_survival(&b, p.get("z0"), p.get("t"), p.get("alpha"), p.get("d_alpha"))?)])
    })?;
    Ok(sheet(&plan, &["S"], rows).meta("modes", modes).meta("warnings", diag.to_json()))
}

pub fn simulate(a: &SimulateArgs) -> Result<oufet::mc_oracle::EmpiricalFET, CliError> {
    let boundary = match a.boundary {
        BoundaryArg::Interval => Boundary::Interval { lo: -1.0, hi: 1.0 },
        BoundaryArg::Ball => Boundary::Ball { radius: a.radius },
        BoundaryArg::Exterior => Boundary::Exterior { radius: a.radius },
        BoundaryArg::Barrier => Boundary::Barrier { level: a.level },
        BoundaryArg::Sqrt => Boundary::SqrtEnvelope { b: a.b, t0: a.t0 },
    };
    let scheme = match a.scheme {
        SchemeArg::Bridge => Scheme::AR1BridgeCorrected,
        SchemeArg::Ar1 => Scheme::AR1,
    };
    let cfg = SimConfig::new(a.delta, a.paths, a.t_max, a.seed, scheme)?;
    Ok(simulate_fet(&Dynamics::scaled_ou(a.kappa, a.phi, a.d), &boundary, a.z0, &cfg)?)
}

fn need(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("this function needs --{name}")))
}

pub fn specfun_eval(a: &SpecfunEvalArgs) -> Result<Value, CliError> {
    use SpecialFunction as F;
    // JSON has no infinities or nan; those are written as text
    let num = |v: f64| if v.is_finite() { json!(v) } else { json!(oufet::curve::fmt17(v)) };
    let hyp = |r: HypergeomResult| {
        json!({
            "value": num(r.value),
            "abs_err_estimate": num(r.abs_err_estimate),
            "method": format!("{:?}", r.method),
            "cancellation": r.cancellation,
        })
    };
    let plain = |v: f64| json!({ "value": num(v) });
    let (args, out) = match a.function {
        F::KummerM | F::KummerMDa | F::TricomiU | F::TricomiUDa => {
            let (x, y, z) = (need(a.a, "a")?, need(a.b, "b")?, need(a.z, "z")?);
            let r = match a.function {
                F::KummerM => kummer_m(x, y, z)?,
                F::KummerMDa => kummer_m_da(x, y, z)?,
                F::TricomiU => tricomi_u(x, y, z)?,
                _ => tricomi_u_da(x, y, z)?,
            };
            (json!({ "a": x, "b": y, "z": z }), hyp(r))
        }
        F::ParabolicD | F::ParabolicDDnu => {
            let (nu, z) = (need(a.nu, "nu")?, need(a.z, "z")?);
            let r = if a.function == F::ParabolicD { parabolic_d(nu, z)? } else { parabolic_d_dnu(nu, z)? };
            (json!({ "nu": nu, "z": z }), hyp(r))
        }
        F::BesselJ => {
            let (nu, x) = (need(a.nu, "nu")?, need(a.x, "x")?);
            (json!({ "nu": nu, "x": x }), plain(bessel_j(nu, x)))
        }
        F::MittagLeffler => {
            let (alpha, z) = (need(a.alpha, "alpha")?, need(a.z, "z")?);
            (json!({ "alpha": alpha, "z": z }), plain(mittag_leffler(alpha, z)?))
        }
        f => {
            let x = need(a.x, "x")?;
            let v = match f {
                F::Gamma => gamma(x),
                F::Lgamma => lgamma(x),
                F::Digamma => digamma(x),
                F::Erf => erf(x),
                F::Erfc => erfc(x),
                F::Erfcx => erfcx(x),
                F::Erfi => erfi(x),
                _ => dawson(x),
            };
            (json!({ "x": x }), plain(v))
        }
    };
    let name = clap::ValueEnum::to_possible_value(&a.function).map(|p| p.get_name().to_string()).unwrap_or_default();
    let mut out = out;
    out["function"] = json!(name);
    out["args"] = args;
    Ok(out)
}
