//! Python bindings: `import oufet`.

use oufet::extensions::{self, SingleBarrierProblem, SqrtBoundaryProblem};
use oufet::mc_oracle::{simulate_fet, Boundary, Dynamics, Scheme, SimConfig};
use oufet::mean_exit::{splitting_probability as split, Geometry, MeanExitRequest};
use oufet::ou_model::DoubleWellParams;
use oufet::spectral::{build_basis, SpectralBasis, SpectralGeometry};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: oufet::Error) -> PyErr {
    match e {
        oufet::Error::Domain(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn spectral_geometry(name: &str) -> Result<SpectralGeometry, String> {
    match name {
        "interval" => Ok(SpectralGeometry::Interval1D),
        "interior" => Ok(SpectralGeometry::RadialInterior),
        "exterior" => Ok(SpectralGeometry::RadialExterior),
        other => Err(format!("unknown geometry '{other}' (interval, interior, exterior)")),
    }
}

fn basis(geometry: &str, kappa: f64, varphi: f64, d: u32, n_modes: usize) -> PyResult<SpectralBasis> {
    let g = spectral_geometry(geometry).map_err(PyValueError::new_err)?;
    let d = if g == SpectralGeometry::Interval1D { 1 } else { d };
    build_basis(g, kappa, varphi, d, n_modes).map_err(err)
}

/// Mean exit time in units of L^2/D.
#[pyfunction]
#[pyo3(signature = (kappa, varphi=0.0, z0=0.0, geometry="interval", d=1))]
fn mean_exit_time(kappa: f64, varphi: f64, z0: f64, geometry: &str, d: u32) -> PyResult<f64> {
    let geometry = match geometry {
        "interval" => Geometry::Interval1D,
        "interior" => Geometry::RadialInterior,
        "exterior" => Geometry::RadialExterior,
        "exterior-forced" => Geometry::Exterior1DForced,
        other => return Err(PyValueError::new_err(format!("unknown geometry '{other}'"))),
    };
    let req = MeanExitRequest { geometry, kappa, varphi, start: z0, d, timescale: 1.0 };
    Ok(req.evaluate().map_err(err)?.value())
}

#[pyfunction]
#[pyo3(signature = (kappa, varphi=0.0, z0=0.0))]
fn splitting_probability(kappa: f64, varphi: f64, z0: f64) -> PyResult<f64> {
    split(kappa, varphi, z0).map_err(err)
}

/// lambda_n = alpha_n^2 for the first `n_modes` modes.
#[pyfunction]
#[pyo3(signature = (kappa, varphi=0.0, geometry="interval", d=1, n_modes=5))]
fn eigenvalues(kappa: f64, varphi: f64, geometry: &str, d: u32, n_modes: usize) -> PyResult<Vec<f64>> {
    Ok(basis(geometry, kappa, varphi, d, n_modes)?.eigenvalues())
}

/// The full spectral basis as JSON.
#[pyfunction]
#[pyo3(signature = (kappa, varphi=0.0, geometry="interval", d=1, n_modes=30))]
fn basis_json(kappa: f64, varphi: f64, geometry: &str, d: u32, n_modes: usize) -> PyResult<String> {
    basis(geometry, kappa, varphi, d, n_modes)?.to_json().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (t, kappa, varphi=0.0, z0=0.0, geometry="interval", d=1, n_modes=30))]
fn survival(t: Vec<f64>, kappa: f64, varphi: f64, z0: f64, geometry: &str, d: u32, n_modes: usize) -> PyResult<Vec<f64>> {
    let b = basis(geometry, kappa, varphi, d, n_modes)?;
    t.iter().map(|&t| b.survival(z0, t).map(|v| v.value).map_err(err)).collect()
}

#[pyfunction]
#[pyo3(signature = (t, kappa, varphi=0.0, z0=0.0, geometry="interval", d=1, n_modes=30))]
fn fet_density(t: Vec<f64>, kappa: f64, varphi: f64, z0: f64, geometry: &str, d: u32, n_modes: usize) -> PyResult<Vec<f64>> {
    let b = basis(geometry, kappa, varphi, d, n_modes)?;
    t.iter().map(|&t| b.fet_density(z0, t).map(|v| v.value).map_err(err)).collect()
}

/// <exp(-s tau)>.
#[pyfunction]
#[pyo3(signature = (s, kappa, varphi=0.0, z0=0.0, geometry="interval", d=1))]
fn mgf(s: f64, kappa: f64, varphi: f64, z0: f64, geometry: &str, d: u32) -> PyResult<f64> {
    let g = spectral_geometry(geometry).map_err(PyValueError::new_err)?;
    let d = if g == SpectralGeometry::Interval1D { 1 } else { d };
    oufet::spectral::mgf(g, kappa, varphi, d, z0, s).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (s, ell, x0, k=1.0, gamma=1.0, diffusion=1.0))]
fn single_barrier_mgf(s: f64, ell: f64, x0: f64, k: f64, gamma: f64, diffusion: f64) -> PyResult<f64> {
    let p = SingleBarrierProblem::new(k, gamma, diffusion, ell, x0).map_err(err)?;
    extensions::single_barrier_mgf(&p, s).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (t, ell, x0, k=1.0, gamma=1.0, diffusion=1.0))]
fn single_barrier_density(t: f64, ell: f64, x0: f64, k: f64, gamma: f64, diffusion: f64) -> PyResult<f64> {
    let p = SingleBarrierProblem::new(k, gamma, diffusion, ell, x0).map_err(err)?;
    Ok(extensions::single_barrier_density(&p, t).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (x, t, x0, x1=1.0, x2=1.0, kappa1=2.0, kappa2=1.0, diffusion=1.0))]
#[allow(clippy::too_many_arguments)]
fn double_well_propagator(x: Vec<f64>, t: f64, x0: f64, x1: f64, x2: f64, kappa1: f64, kappa2: f64, diffusion: f64) -> PyResult<Vec<f64>> {
    let p = DoubleWellParams::new(x1, x2, kappa1, kappa2, diffusion).map_err(err)?;
    let sp = extensions::double_well_spectrum(&p, 50).map_err(err)?;
    x.iter().map(|&x| sp.propagator(x, t, x0).map(|v| v.value).map_err(err)).collect()
}

/// <(tau + t0)^nu> for the boundary sqrt(2 b (t + t0)).
#[pyfunction]
#[pyo3(signature = (nu, b, d=1, diffusion=1.0, t0=1.0, z0=0.0))]
fn sqrt_boundary_moment(nu: f64, b: f64, d: u32, diffusion: f64, t0: f64, z0: f64) -> PyResult<f64> {
    let p = SqrtBoundaryProblem::new(d, b, diffusion, t0, z0).map_err(err)?;
    extensions::sqrt_boundary_moment(&p, nu).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (t, alpha, kappa, varphi=0.0, z0=0.0, d_alpha=1.0, geometry="interval", d=1, n_modes=30))]
#[allow(clippy::too_many_arguments)]
fn ctrw_survival(t: Vec<f64>, alpha: f64, kappa: f64, varphi: f64, z0: f64, d_alpha: f64, geometry: &str, d: u32, n_modes: usize) -> PyResult<Vec<f64>> {
    let b = basis(geometry, kappa, varphi, d, n_modes)?;
    t.iter().map(|&t| extensions::ctrw_survival(&b, z0, t, alpha, d_alpha).map(|v| v.value).map_err(err)).collect()
}

/// Monte Carlo exit from [-1, 1] (or the unit ball for d > 1) in scaled units.
/// Returns a dict with `exit_times`, `sides` and `censored`.
#[pyfunction]
#[pyo3(signature = (kappa, varphi=0.0, z0=0.0, d=1, delta=1e-4, n_paths=1000, t_max=30.0, seed=1, bridge=true))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    kappa: f64,
    varphi: f64,
    z0: f64,
    d: u32,
    delta: f64,
    n_paths: usize,
    t_max: f64,
    seed: u64,
    bridge: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = if bridge { Scheme::AR1BridgeCorrected } else { Scheme::AR1 };
    let cfg = SimConfig::new(delta, n_paths, t_max, seed, scheme).map_err(err)?;
    let boundary = if d == 1 { Boundary::Interval { lo: -1.0, hi: 1.0 } } else { Boundary::Ball { radius: 1.0 } };
    let fet = py.detach(|| simulate_fet(&Dynamics::scaled_ou(kappa, varphi, d), &boundary, z0, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("exit_times", fet.exit_times.clone())?;
    out.set_item("sides", fet.exit_sides.iter().map(|s| s.label()).collect::<Vec<_>>())?;
    out.set_item("censored", fet.censored_count)?;
    Ok(out)
}

#[pyfunction]
fn kummer_m(a: f64, b: f64, z: f64) -> PyResult<f64> {
    Ok(oufet::specfun::kummer_m(a, b, z).map_err(err)?.value)
}

#[pyfunction]
fn tricomi_u(a: f64, b: f64, z: f64) -> PyResult<f64> {
    Ok(oufet::specfun::tricomi_u(a, b, z).map_err(err)?.value)
}

#[pyfunction]
fn parabolic_d(nu: f64, z: f64) -> PyResult<f64> {
    Ok(oufet::specfun::parabolic_d(nu, z).map_err(err)?.value)
}

#[pymodule]
#[pyo3(name = "oufet")]
fn oufet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", oufet::VERSION)?;
    m.add_function(wrap_pyfunction!(mean_exit_time, m)?)?;
    m.add_function(wrap_pyfunction!(splitting_probability, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(basis_json, m)?)?;
    m.add_function(wrap_pyfunction!(survival, m)?)?;
    m.add_function(wrap_pyfunction!(fet_density, m)?)?;
    m.add_function(wrap_pyfunction!(mgf, m)?)?;
    m.add_function(wrap_pyfunction!(single_barrier_mgf, m)?)?;
    m.add_function(wrap_pyfunction!(single_barrier_density, m)?)?;
    m.add_function(wrap_pyfunction!(double_well_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(sqrt_boundary_moment, m)?)?;
    m.add_function(wrap_pyfunction!(ctrw_survival, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(kummer_m, m)?)?;
    m.add_function(wrap_pyfunction!(tricomi_u, m)?)?;
    m.add_function(wrap_pyfunction!(parabolic_d, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_names() {
        assert_eq!(spectral_geometry("interior"), Ok(SpectralGeometry::RadialInterior));
        assert!(spectral_geometry("box").is_err());
    }
}
