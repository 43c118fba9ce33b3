//! Diagonal metrics read off momentum-quadratic Hamiltonians, and their
//! Levi-Civita curvature.
//!
//! Sign convention: `R^l_{kij} = ∂ᵢΓ^l_{jk} − ∂ⱼΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}`
//! and `K_ij = R_{ijij}/(g_ii g_jj)`, which gives `+1` on the unit sphere.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{DiffFn, Expr, PhaseFunction, PhasePoint, PositionFunction};
use crate::scalar::Scalar;

/// Scale between the Hamiltonians `½ Σ aᵢ pᵢ²` of the coalgebra family and
/// their line elements `ds² = 2 Σ dqᵢ²/aᵢ`.
pub const COALGEBRA_LINE_ELEMENT_SCALE: f64 = 2.0;

/// `|gᵢᵢ|` below this is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Tolerance on the quadratic/diagonal structure checks.
pub const QUADRATIC_TOLERANCE: f64 = 1e-10;

/// `ds² = Σ gᵢᵢ(q) dqᵢ²`.
#[derive(Clone, Debug)]
pub struct DiagonalMetric {
    components: Vec<PositionFunction>,
    signature: Vec<i8>,
}

impl DiagonalMetric {
    /// Builds the metric, fixing its signature at `reference`.
    pub fn new(components: Vec<PositionFunction>, reference: &[f64]) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != n) {
            return Err(Error::ArityMismatch { expected: n, found: c.dim() });
        }
        if reference.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: reference.len() });
        }
        let mut signature = Vec::with_capacity(n);
        for (k, c) in components.iter().enumerate() {
            let v = c.eval::<f64>(reference);
            if !v.is_finite() || v.abs() < DEGENERACY_THRESHOLD {
                return Err(Error::DegenerateMetric { component: k, point: reference.to_vec() });
            }
            signature.push(if v > 0.0 { 1 } else { -1 });
        }
        Ok(DiagonalMetric { components, signature })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn is_riemannian(&self) -> bool {
        self.signature.iter().all(|s| *s > 0)
    }

    pub fn components(&self) -> &[PositionFunction] {
        &self.components
    }

    fn check(&self, k: usize, v: f64, q: &[f64]) -> Result<()> {
        if !v.is_finite() || v.abs() < DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateMetric { component: k, point: q.to_vec() });
        }
        if (v > 0.0) != (self.signature[k] > 0) {
            return Err(Error::SignatureChange { component: k, point: q.to_vec() });
        }
        Ok(())
    }

    /// `gᵢᵢ(q)`, validated against degeneracy and signature changes.
    pub fn values(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_point(q)?;
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let v = c.eval::<f64>(q);
                self.check(k, v, q).map(|_| v)
            })
            .collect()
    }

    fn check_point(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::ArityMismatch { expected: self.dim(), found: q.len() });
        }
        Ok(())
    }

    fn jet(&self, q: &[f64]) -> Result<MetricJet> {
        self.check_point(q)?;
        let n = self.dim();
        let mut jet = MetricJet { g: Vec::with_capacity(n), dg: Vec::with_capacity(n), ddg: Vec::with_capacity(n) };
        for (k, c) in self.components.iter().enumerate() {
            let (v, grad, hess) = c.as_diff().jet2(q);
            self.check(k, v, q)?;
            if grad.iter().chain(&hess).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: format!("derivative of g{}{}", k + 1, k + 1), point: q.to_vec() });
            }
            jet.g.push(v);
            jet.dg.push(grad);
            jet.ddg.push(hess);
        }
        Ok(jet)
    }
}

struct MetricJet {
    g: Vec<f64>,
    /// `dg[k][i] = ∂ᵢ g_kk`
    dg: Vec<Vec<f64>>,
    /// `ddg[k][i·n + j] = ∂ᵢ∂ⱼ g_kk`
    ddg: Vec<Vec<f64>>,
}

impl MetricJet {
    fn n(&self) -> usize {
        self.g.len()
    }

    fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let mut v = 0.0;
        if k == j {
            v += self.dg[k][i];
        }
        if k == i {
            v += self.dg[k][j];
        }
        if i == j {
            v -= self.dg[i][k];
        }
        0.5 * v / self.g[k]
    }

    /// `∂_m Γ^k_{ij}`
    fn dgamma(&self, k: usize, i: usize, j: usize, m: usize) -> f64 {
        let n = self.n();
        let mut v = 0.0;
        if k == j {
            v += self.ddg[k][m * n + i];
        }
        if k == i {
            v += self.ddg[k][m * n + j];
        }
        if i == j {
            v -= self.ddg[i][m * n + k];
        }
        0.5 * v / self.g[k] - self.gamma(k, i, j) * self.dg[k][m] / self.g[k]
    }
}

/// `Γ^k_{ij}` stored as `data[(k·n + i)·n + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }
}

/// `R^l_{kij}` stored as `data[((l·n + k)·n + i)·n + j]`, plus the diagonal
/// metric needed to lower the first index.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
    g: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.data[((l * n + k) * n + i) * n + j]
    }

    /// `R_{lkij} = g_ll R^l_{kij}`
    pub fn lowered(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.g[l] * self.get(l, k, i, j)
    }

    /// Sectional curvature of the coordinate plane `(i, j)`.
    pub fn sectional(&self, i: usize, j: usize) -> f64 {
        self.lowered(i, j, i, j) / (self.g[i] * self.g[j])
    }

    /// Ricci contraction `R_{kj} = R^i_{kij}`.
    pub fn ricci(&self, k: usize, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, k, i, j)).sum()
    }

    /// `gᵃᵇ R_ab`
    pub fn scalar(&self) -> f64 {
        (0..self.n).map(|k| self.ricci(k, k) / self.g[k]).sum()
    }
}

pub fn christoffel(g: &DiagonalMetric, q: &[f64]) -> Result<Christoffel> {
    let jet = g.jet(q)?;
    let n = jet.n();
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                data[(k * n + i) * n + j] = jet.gamma(k, i, j);
            }
        }
    }
    Ok(Christoffel { n, data })
}

pub fn riemann(g: &DiagonalMetric, q: &[f64]) -> Result<Riemann> {
    let jet = g.jet(q)?;
    let n = jet.n();
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma[(k * n + i) * n + j] = jet.gamma(k, i, j);
            }
        }
    }
    let gm = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = jet.dgamma(l, j, k, i) - jet.dgamma(l, i, k, j);
                    for m in 0..n {
                        v += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                    }
                    data[((l * n + k) * n + i) * n + j] = v;
                }
            }
        }
    }
    Ok(Riemann { n, data, g: jet.g })
}

pub fn sectional_curvature(g: &DiagonalMetric, q: &[f64], i: usize, j: usize) -> Result<f64> {
    let n = g.dim();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!("plane ({i},{j}) in dimension {n}")));
    }
    Ok(riemann(g, q)?.sectional(i, j))
}

pub fn scalar_curvature(g: &DiagonalMetric, q: &[f64]) -> Result<f64> {
    Ok(riemann(g, q)?.scalar())
}

pub fn gaussian_curvature_2d(g: &DiagonalMetric, q: &[f64]) -> Result<f64> {
    if g.dim() != 2 {
        return Err(Error::InvalidArgument(format!("Gaussian curvature needs a 2D metric (got {}D)", g.dim())));
    }
    sectional_curvature(g, q, 0, 1)
}

/// Sectional curvatures of every coordinate plane `i < j` plus the scalar curvature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub q: Vec<f64>,
    pub planes: Vec<(usize, usize)>,
    pub sectional: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureSample {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.planes.iter().position(|p| *p == (i.min(j), i.max(j))).map(|k| self.sectional[k])
    }
}

pub fn curvature_sample(g: &DiagonalMetric, q: &[f64]) -> Result<CurvatureSample> {
    let r = riemann(g, q)?;
    let n = g.dim();
    let mut planes = Vec::new();
    let mut sectional = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            planes.push((i, j));
            sectional.push(r.sectional(i, j));
        }
    }
    Ok(CurvatureSample { q: q.to_vec(), planes, sectional, scalar: r.scalar() })
}

/// Regular grid of `per_axis^dim` points in `[-bound, bound]^dim`, last
/// coordinate fastest.
pub fn grid(dim: usize, bound: f64, per_axis: usize) -> Vec<Vec<f64>> {
    grid_in(&vec![(-bound, bound); dim], per_axis)
}

/// Regular grid over per-axis ranges `[lo, hi]`.
pub fn grid_in(ranges: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        if per_axis <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).collect()
    };
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for &r in ranges {
        let vals = axis(r);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Checks that `h` is exactly quadratic and diagonal in the momenta at each
/// check point; returns the worst residual and what it measured.
pub fn check_quadratic_diagonal(h: &PhaseFunction, check_points: &[PhasePoint]) -> Result<(f64, String)> {
    let n = h.arity();
    let mut worst = (0.0, String::from("quadratic"));
    for x in check_points {
        if x.dim() != n {
            return Err(Error::ArityMismatch { expected: n, found: x.dim() });
        }
        let flat = x.flat();
        let value = h.eval::<f64>(&flat);
        let hess = h.as_diff().hessian(&flat);
        let m = 2 * n;
        let scale = value.abs().max(1.0);
        let quad: f64 = (0..n).map(|i| 0.5 * hess[(n + i) * m + n + i] * x.p[i] * x.p[i]).sum();
        let r = (value - quad).abs() / scale;
        if r > worst.0 {
            worst = (r, "quadratic".into());
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let r = hess[(n + i) * m + n + j].abs() / scale;
                    if r > worst.0 {
                        worst = (r, format!("mixed d2H/dp{}dp{}", i + 1, j + 1));
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `gᵢᵢ = scale / aᵢ(q)` for `H = ½ Σ aᵢ(q) pᵢ²`.
///
/// The momentum coefficients are read as `aᵢ(q) = 2 H(q, eᵢ)`, which equals
/// `∂²H/∂pᵢ²` once the quadratic-diagonal structure has been verified at
/// `check_points`. The signature is fixed at the first check point.
pub fn metric_from_hamiltonian(h: &PhaseFunction, check_points: &[PhasePoint], scale: f64) -> Result<DiagonalMetric> {
    let Some(first) = check_points.first() else {
        return Err(Error::InvalidArgument("metric extraction needs at least one check point".into()));
    };
    let (residual, what) = check_quadratic_diagonal(h, check_points)?;
    if !(residual < QUADRATIC_TOLERANCE) {
        return Err(Error::NotQuadratic { what, residual });
    }
    let n = h.arity();
    let components = (0..n)
        .map(|i| {
            PositionFunction::new(
                format!("g{}{}[{}]", i + 1, i + 1, h.label()),
                InverseKinetic { h: h.as_diff().clone(), index: i, scale },
            )
        })
        .collect();
    DiagonalMetric::new(components, &first.q)
}

struct InverseKinetic {
    h: DiffFn,
    index: usize,
    scale: f64,
}

impl Expr for InverseKinetic {
    fn dim(&self) -> usize {
        self.h.dim() / 2
    }
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        let n = q.len();
        let mut x = Vec::with_capacity(2 * n);
        x.extend_from_slice(q);
        x.extend((0..n).map(|k| T::cst(if k == self.index { 1.0 } else { 0.0 })));
        let a = self.h.eval(&x) * 2.0;
        T::cst(self.scale) / a
    }
}

/// Closed-form curvatures of the coalgebra metrics (line-element scale 2).
pub mod closed_form {
    /// Sectional curvatures `(K₁₂, K₁₃, K₂₃)` of the 3D integrable metric.
    pub fn variable_sectional_3d(z: f64, q: &[f64]) -> [f64; 3] {
        let q2: f64 = q.iter().map(|v| v * v).sum();
        let e2 = |x: f64| (2.0 * z * x).exp();
        let (b, c) = (e2(q[1] * q[1]), e2(q[2] * q[2]));
        let all = e2(q2);
        let pre = 0.25 * z * (-z * q2).exp();
        [pre * (1.0 + c - 2.0 * all), pre * (2.0 - c + b * c - 2.0 * all), pre * (2.0 - b * c - all)]
    }

    /// `K = −5z sinh(z q²)`.
    pub fn variable_scalar_3d(z: f64, q: &[f64]) -> f64 {
        let q2: f64 = q.iter().map(|v| v * v).sum();
        -5.0 * z * (z * q2).sinh()
    }

    /// `K = −z sinh(z(q₁² + q₂²))`.
    pub fn variable_gaussian_2d(z: f64, q: &[f64]) -> f64 {
        -z * (z * (q[0] * q[0] + q[1] * q[1])).sinh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalgebra::{hamiltonian_integrable, hamiltonian_superintegrable};
    use crate::function::PhaseFunction;

    struct Sphere(usize);
    impl Expr for Sphere {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            if self.0 == 0 {
                T::one()
            } else {
                q[0].sin().sq()
            }
        }
    }

    fn sphere() -> DiagonalMetric {
        let c = (0..2).map(|k| PositionFunction::new(format!("s{k}"), Sphere(k))).collect();
        DiagonalMetric::new(c, &[1.0, 0.0]).unwrap()
    }

    struct Flat(usize);
    impl Expr for Flat {
        fn dim(&self) -> usize {
            self.0
        }
        fn eval<T: Scalar>(&self, _q: &[T]) -> T {
            T::one()
        }
    }

    fn checks(n: usize) -> Vec<PhasePoint> {
        crate::poisson::sample_points(n, 4, 99, 1.0)
    }

    #[test]
    fn unit_sphere_has_curvature_one() {
        let g = sphere();
        for th in [0.3, 1.0, 2.2] {
            assert!((gaussian_curvature_2d(&g, &[th, 0.4]).unwrap() - 1.0).abs() < 1e-12);
            assert!((scalar_curvature(&g, &[th, 0.4]).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_christoffels_vanish() {
        let c = (0..3).map(|_| PositionFunction::new("1", Flat(3))).collect();
        let g = DiagonalMetric::new(c, &[0.0; 3]).unwrap();
        let ch = christoffel(&g, &[0.1, 0.2, 0.3]).unwrap();
        assert!((0..27).all(|k| ch.data[k] == 0.0));
        let h = PhaseFunction::p(2, 0)
            .mul(&PhaseFunction::p(2, 0))
            .add(&PhaseFunction::p(2, 1).mul(&PhaseFunction::p(2, 1)))
            .scale(0.5);
        let g = metric_from_hamiltonian(&h, &checks(2), 1.0).unwrap();
        assert_eq!(g.values(&[0.4, -0.3]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn christoffel_symmetry_is_exact() {
        let h = hamiltonian_integrable(3, 0.3).unwrap();
        let g = metric_from_hamiltonian(&h, &checks(3), COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
        let ch = christoffel(&g, &[0.3, 0.5, -0.2]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(ch.get(k, i, j), ch.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn rejects_non_quadratic_hamiltonian() {
        let p = PhaseFunction::p(1, 0);
        let h = p.mul(&p).mul(&p);
        assert!(matches!(metric_from_hamiltonian(&h, &checks(1), 1.0), Err(Error::NotQuadratic { .. })));
        let mixed = PhaseFunction::p(2, 0).mul(&PhaseFunction::p(2, 1));
        let err = metric_from_hamiltonian(&mixed, &checks(2), 1.0).unwrap_err();
        assert!(matches!(err, Error::NotQuadratic { ref what, .. } if what.contains("mixed")), "{err:?}");
    }

    #[test]
    fn flat_limit() {
        let h = hamiltonian_integrable(3, 0.0).unwrap();
        let g = metric_from_hamiltonian(&h, &checks(3), COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
        let s = curvature_sample(&g, &[0.5, -0.7, 0.9]).unwrap();
        assert!(s.sectional.iter().all(|k| k.abs() < 1e-10));
        assert!(s.scalar.abs() < 1e-10);
    }

    #[test]
    fn variable_curvature_examples() {
        let z = 0.3;
        let h = hamiltonian_integrable(3, z).unwrap();
        let g = metric_from_hamiltonian(&h, &checks(3), COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
        let q = [0.4, 0.2, 0.6];
        let s = curvature_sample(&g, &q).unwrap();
        let want = closed_form::variable_sectional_3d(z, &q);
        for (a, b) in s.sectional.iter().zip(&want) {
            assert!((a - b).abs() < 1e-6 * b.abs(), "{a} vs {b}");
        }
        // −5·0.3·sinh(0.3·0.56) = −0.25355...
        assert!((s.scalar - (-1.5 * 0.168f64.sinh())).abs() < 1e-12);
        assert!((s.scalar - 2.0 * s.sectional.iter().sum::<f64>()).abs() < 1e-12);
        assert!(sectional_curvature(&g, &[0.0; 3], 0, 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn superintegrable_metric_has_constant_curvature() {
        let z = 0.3;
        let hs = hamiltonian_superintegrable(3, z).unwrap();
        let g = metric_from_hamiltonian(&hs, &checks(3), COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
        for q in grid(3, 0.9, 3) {
            let s = curvature_sample(&g, &q).unwrap();
            assert!(s.sectional.iter().all(|k| (k - z).abs() < 1e-8), "{s:?}");
            assert!((s.scalar - 6.0 * z).abs() < 1e-8);
        }
        // g_S = g_I · e^{−z q²}
        let gi = metric_from_hamiltonian(&hamiltonian_integrable(3, z).unwrap(), &checks(3), 2.0).unwrap();
        let q = [0.7, -0.1, 0.4];
        let q2: f64 = q.iter().map(|v| v * v).sum();
        for (a, b) in g.values(&q).unwrap().iter().zip(gi.values(&q).unwrap()) {
            assert!((a - b * (-z * q2).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_curvature_2d_examples() {
        let z = 0.5;
        let g = metric_from_hamiltonian(&hamiltonian_integrable(2, z).unwrap(), &checks(2), 2.0).unwrap();
        // −0.5·sinh(0.125) = −0.0626629...
        let k = gaussian_curvature_2d(&g, &[0.3, 0.4]).unwrap();
        assert!((k - (-0.5 * 0.125f64.sinh())).abs() < 1e-12);
        assert!(gaussian_curvature_2d(&g, &[0.0, 0.0]).unwrap().abs() < 1e-15);
        let gs = metric_from_hamiltonian(&hamiltonian_superintegrable(2, z).unwrap(), &checks(2), 2.0).unwrap();
        assert!((gaussian_curvature_2d(&gs, &[-0.8, 0.6]).unwrap() - z).abs() < 1e-10);
        let g3 = metric_from_hamiltonian(&hamiltonian_integrable(3, z).unwrap(), &checks(3), 2.0).unwrap();
        assert!(gaussian_curvature_2d(&g3, &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn degenerate_metric_is_reported() {
        struct Vanishing;
        impl Expr for Vanishing {
            fn dim(&self) -> usize {
                2
            }
            fn eval<T: Scalar>(&self, q: &[T]) -> T {
                q[0].sq()
            }
        }
        let c = vec![PositionFunction::new("one", Flat(2)), PositionFunction::new("q1^2", Vanishing)];
        let g = DiagonalMetric::new(c, &[1.0, 1.0]).unwrap();
        assert!(matches!(riemann(&g, &[0.0, 0.3]), Err(Error::DegenerateMetric { component: 1, .. })));
    }

    #[test]
    fn grid_ordering() {
        let g = grid(2, 1.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-1.0, -1.0]);
        assert_eq!(g[1], vec![-1.0, 0.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
    }
}
