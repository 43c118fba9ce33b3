//! Browser bindings for the `coflow` demo page.
//!
//! Each export returns a flat `Float64Array`; the layouts are documented on
//! the native functions, which carry the logic and are what the tests call.

use coflow::coalgebra::Sites;
use coflow::coordinates::{rho_to_r, to_polar, MomentumScale, Radial, SpaceSignature};
use coflow::geometry::{curvature_sample, metric_from_hamiltonian, COALGEBRA_LINE_ELEMENT_SCALE};
use coflow::integrator::{integrate, Method, Options};
use coflow::{Error, PhaseFunction, PhasePoint, Result};
use wasm_bindgen::prelude::*;

/// Row-major `resolution × resolution` samples of the scalar curvature on the
/// slice `q₃ = q3`, `q₁, q₂ ∈ [−bound, bound]` (`q₁` along rows).
pub fn curvature_slice(z: f64, superintegrable: bool, q3: f64, bound: f64, resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 || bound.is_nan() || bound <= 0.0 {
        return Err(Error::InvalidArgument("need resolution ≥ 2 and a positive bound".into()));
    }
    let h = hamiltonian(z, superintegrable)?;
    let probe = PhasePoint::new(vec![0.3, -0.2, 0.4], vec![0.5, 0.3, -0.7])?;
    let g = metric_from_hamiltonian(&h, &[probe], COALGEBRA_LINE_ELEMENT_SCALE)?;
    let step = 2.0 * bound / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let q = [-bound + i as f64 * step, -bound + j as f64 * step, q3];
            out.push(curvature_sample(&g, &q)?.scalar);
        }
    }
    Ok(out)
}

/// Geodesic from `(q, p)` with the implicit midpoint rule; rows of
/// `[t, q₁, q₂, q₃, p₁, p₂, p₃, H]`, one per stored step. A flow that leaves the
/// domain returns the rows computed so far.
pub fn geodesic_rows(
    z: f64,
    superintegrable: bool,
    q: &[f64],
    p: &[f64],
    t_end: f64,
    dt: f64,
    keep_every: usize,
) -> Result<Vec<f64>> {
    let h = hamiltonian(z, superintegrable)?;
    let x0 = PhasePoint::new(q.to_vec(), p.to_vec())?;
    if x0.dim() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: x0.dim() });
    }
    let opts = Options { method: Method::ImplicitMidpoint, t_end, dt, keep_every };
    let traj = match integrate(&h, &x0, &opts) {
        Ok(t) => t,
        Err(e) if e.partial.len() > 1 => *e.partial,
        Err(e) => return Err(e.error),
    };
    let mut out = Vec::with_capacity(8 * traj.len());
    for (t, x) in traj.times.iter().zip(&traj.states) {
        out.push(*t);
        out.extend(x.flat());
        out.push(h.value(x));
    }
    Ok(out)
}

/// `[ρ, θ, φ, p_ρ, p_θ, p_φ, r]` for a Cartesian phase point, with canonical
/// momenta.
pub fn polar_point(z: f64, kappa2: f64, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let sig = SpaceSignature::new(z, kappa2)?;
    let x = PhasePoint::new(q.to_vec(), p.to_vec())?;
    let y = to_polar(&x, sig, Radial::Rho, MomentumScale::Canonical)?;
    let mut out = y.position().to_vec();
    out.extend(y.momenta());
    out.push(rho_to_r(y.rho, z)?);
    Ok(out)
}

fn hamiltonian(z: f64, superintegrable: bool) -> Result<PhaseFunction> {
    let sites = Sites::new(3, z)?;
    Ok(if superintegrable { sites.hamiltonian_superintegrable() } else { sites.hamiltonian_integrable() })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = curvatureMap)]
pub fn curvature_map(
    z: f64,
    superintegrable: bool,
    q3: f64,
    bound: f64,
    resolution: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    curvature_slice(z, superintegrable, q3, bound, resolution).map_err(js)
}

#[wasm_bindgen]
pub fn geodesic(
    z: f64,
    superintegrable: bool,
    q: Vec<f64>,
    p: Vec<f64>,
    t_end: f64,
    dt: f64,
    keep_every: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    geodesic_rows(z, superintegrable, &q, &p, t_end, dt, keep_every).map_err(js)
}

#[wasm_bindgen(js_name = polarTransform)]
pub fn polar_transform(z: f64, kappa2: f64, q: Vec<f64>, p: Vec<f64>) -> std::result::Result<Vec<f64>, JsError> {
    polar_point(z, kappa2, &q, &p).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_slice_matches_scalar_curvature() {
        let z = 0.4;
        let k = curvature_slice(z, false, 0.5, 1.0, 5).unwrap();
        assert_eq!(k.len(), 25);
        let q2: f64 = 1.0 + 1.0 + 0.25;
        assert!((k[0] - (-5.0 * z * (z * q2).sinh())).abs() < 1e-10);
        let flat = curvature_slice(z, true, 0.5, 1.0, 3).unwrap();
        assert!(flat.iter().all(|v| (v - 6.0 * z).abs() < 1e-10));
    }

    #[test]
    fn geodesic_rows_conserve_energy() {
        let rows = geodesic_rows(0.3, true, &[0.3, 0.2, -0.4], &[0.08, -0.06, 0.1], 2.0, 1e-3, 100).unwrap();
        assert_eq!(rows.len(), 8 * 21);
        let h0 = rows[7];
        assert!(rows.chunks(8).all(|r| ((r[7] - h0) / h0).abs() < 1e-9));
        assert_eq!(rows[rows.len() - 8], 2.0);
    }

    #[test]
    fn polar_point_radius() {
        let v = polar_point(1.0, 1.0, &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert!(v.is_err(), "origin is a chart singularity");
        let v = polar_point(0.5, 1.0, &[0.4, 0.5, 0.6], &[0.1, -0.2, 0.3]).unwrap();
        let rho = v[0];
        // cosh(√z ρ) = e^{z q²}
        assert!(((0.5f64.sqrt() * rho).cosh() - (0.5 * 0.77f64).exp()).abs() < 1e-12);
        assert!(v[6] < rho);
    }

    #[test]
    fn invalid_input() {
        assert!(curvature_slice(0.3, false, 0.0, 1.0, 1).is_err());
        assert!(geodesic_rows(0.3, false, &[0.1, 0.2], &[0.0, 0.0], 1.0, 1e-3, 1).is_err());
        assert!(polar_point(0.3, 0.0, &[0.4, 0.5, 0.6], &[0.0; 3]).is_err());
    }
}
