//! Signed-curvature trigonometry and the geodesic polar charts of the 3D
//! spaces.
//!
//! With `z = λ₁²` and `κ₂ = λ₂²` the chart reads
//!
//! ```text
//! C₋z(ρ)²               = e^{2z s}
//! S₋z(ρ)² C_κ₂(θ)²       = e^{2z(s₁+s₂)} E(s₃)
//! κ₂ S₋z(ρ)² S_κ₂(θ)² cos²φ = e^{2z s₁} E(s₂)
//! κ₂ S₋z(ρ)² S_κ₂(θ)² sin²φ = E(s₁)
//! ```
//!
//! where `sᵢ = εᵢ qᵢ²`, `s = s₁ + s₂ + s₃` and `E(x) = (e^{2zx} − 1)/z`.
//! These relations are numbered 1 to 4 in chart errors. Written this way
//! everything is analytic in `z` and `κ₂`, so the `z = 0` chart (`ρ² = 2q²`)
//! needs no special case.
//!
//! For `κ₂ < 0` the first two sites carry the sign `ε = −1` (see
//! [`crate::coalgebra::Sites::with_signs`]); the chart is then the interior
//! of the cone `q₃² > q₁² + q₂²`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coalgebra::{sinhc, Sites};
use crate::error::{Error, Result};
use crate::function::{DiffFn, Expr, PhaseFunction, PhasePoint};
use crate::geometry::DiagonalMetric;
use crate::poisson::{poisson_bracket_scaled, scaled_residual};
use crate::scalar::{seed_d1, Scalar};

const KAPPA_SERIES_THRESHOLD: f64 = 1e-6;
const LOG_SERIES_THRESHOLD: f64 = 1e-5;
/// `|S| < CHART_SINGULARITY` marks a polar chart boundary.
pub const CHART_SINGULARITY: f64 = 1e-12;
/// Relative `|det J|` below which the chart Jacobian is singular.
pub const JACOBIAN_THRESHOLD: f64 = 1e-12;

/// `S_κ(x)`: `sin(√κ x)/√κ`, `x` or `sinh(√−κ x)/√−κ`.
pub fn kappa_sin<T: Scalar>(kappa: f64, x: T) -> T {
    let u = x.sq() * kappa;
    if u.re().abs() < KAPPA_SERIES_THRESHOLD {
        x * (u * (u * (u * (-1.0 / 5040.0) + 1.0 / 120.0) - 1.0 / 6.0) + 1.0)
    } else if kappa > 0.0 {
        let k = kappa.sqrt();
        (x * k).sin() / k
    } else {
        let k = (-kappa).sqrt();
        (x * k).sinh() / k
    }
}

/// `C_κ(x)`: `cos(√κ x)`, `1` or `cosh(√−κ x)`.
pub fn kappa_cos<T: Scalar>(kappa: f64, x: T) -> T {
    let u = x.sq() * kappa;
    if u.re().abs() < KAPPA_SERIES_THRESHOLD {
        u * (u * (u * (-1.0 / 720.0) + 1.0 / 24.0) - 0.5) + 1.0
    } else if kappa > 0.0 {
        (x * kappa.sqrt()).cos()
    } else {
        (x * (-kappa).sqrt()).cosh()
    }
}

pub fn kappa_tan<T: Scalar>(kappa: f64, x: T) -> T {
    kappa_sin(kappa, x) / kappa_cos(kappa, x)
}

/// Principal inverse of [`kappa_sin`]; NaN outside its range.
pub fn kappa_arcsin<T: Scalar>(kappa: f64, y: T) -> T {
    let u = y.sq() * kappa;
    if u.re().abs() < KAPPA_SERIES_THRESHOLD {
        y * (u * (u * (u * (5.0 / 112.0) + 3.0 / 40.0) + 1.0 / 6.0) + 1.0)
    } else if kappa > 0.0 {
        let k = kappa.sqrt();
        (y * k).asin() / k
    } else {
        let k = (-kappa).sqrt();
        (y * k).asinh() / k
    }
}

/// Principal inverse of [`kappa_tan`]; NaN outside its range.
pub fn kappa_arctan<T: Scalar>(kappa: f64, y: T) -> T {
    let u = y.sq() * kappa;
    if u.re().abs() < KAPPA_SERIES_THRESHOLD {
        y * (u * (u * (u * (-1.0 / 7.0) + 0.2) - 1.0 / 3.0) + 1.0)
    } else if kappa > 0.0 {
        let k = kappa.sqrt();
        (y * k).atan() / k
    } else {
        let k = (-kappa).sqrt();
        (y * k).atanh() / k
    }
}

/// `(κ₁, κ₂) = (z, λ₂²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpaceSignature {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl SpaceSignature {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        if !kappa1.is_finite() || !kappa2.is_finite() {
            return Err(Error::NonFinite { what: "space signature".into(), point: vec![kappa1, kappa2] });
        }
        if kappa2 == 0.0 {
            return Err(Error::InvalidArgument("kappa2 must be nonzero".into()));
        }
        Ok(SpaceSignature { kappa1, kappa2 })
    }

    pub fn z(&self) -> f64 {
        self.kappa1
    }

    /// Site signs `(sgn κ₂, sgn κ₂, +1)` of the Cartesian chart.
    pub fn chart_signs(&self) -> [f64; 3] {
        let s = self.kappa2.signum();
        [s, s, 1.0]
    }

    /// Coalgebra sites matching the Cartesian side of the chart.
    pub fn sites(&self) -> Sites {
        Sites::with_signs(self.kappa1, &self.chart_signs()).expect("chart signs are ±1")
    }

    /// Constant-curvature space carried by the superintegrable metric.
    pub fn constant_curvature_space(&self) -> &'static str {
        match (self.kappa1.partial_cmp(&0.0), self.kappa2 > 0.0) {
            (Some(std::cmp::Ordering::Greater), true) => "sphere",
            (Some(std::cmp::Ordering::Less), true) => "hyperbolic",
            (_, true) => "euclidean",
            (Some(std::cmp::Ordering::Greater), false) => "anti-de Sitter",
            (Some(std::cmp::Ordering::Less), false) => "de Sitter",
            (_, false) => "minkowski",
        }
    }

    /// Space whose deformation carries the integrable (variable curvature) metric.
    pub fn deformed_space(&self) -> &'static str {
        match (self.kappa1.partial_cmp(&0.0), self.kappa2 > 0.0) {
            (Some(std::cmp::Ordering::Greater), true) => "hyperbolic",
            (Some(std::cmp::Ordering::Less), true) => "sphere",
            (_, true) => "euclidean",
            (Some(std::cmp::Ordering::Greater), false) => "de Sitter",
            (Some(std::cmp::Ordering::Less), false) => "anti-de Sitter",
            (_, false) => "minkowski",
        }
    }
}

/// Radial coordinate of a polar chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Radial {
    /// `ρ`, the chart of the integrable metric.
    Rho,
    /// `r` with `C₋z(ρ)·C_z(r) = 1`, the chart of the superintegrable metric.
    R,
}

impl Radial {
    pub fn name(self) -> &'static str {
        match self {
            Radial::Rho => "rho",
            Radial::R => "r",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    CartesianToPolar,
    PolarToCartesian,
}

/// Normalization of the polar momenta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumScale {
    /// Point canonical transformation, `P = Jᵀ p`.
    Canonical,
    /// `P = 2 Jᵀ p`: with these momenta the polar Hamiltonian equals twice the
    /// Cartesian one and the Casimirs pick up factors `4` and `4κ₂`.
    Doubled,
}

impl MomentumScale {
    pub fn factor(self) -> f64 {
        match self {
            MomentumScale::Canonical => 1.0,
            MomentumScale::Doubled => 2.0,
        }
    }
}

/// A point of polar phase space. In the [`Radial::R`] chart the radial pair
/// holds `(r, p_r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarPoint {
    pub radial: Radial,
    pub rho: f64,
    pub theta: f64,
    pub phi: f64,
    pub p_rho: f64,
    pub p_theta: f64,
    pub p_phi: f64,
}

impl PolarPoint {
    pub fn new(radial: Radial, position: [f64; 3], momenta: [f64; 3]) -> Self {
        PolarPoint {
            radial,
            rho: position[0],
            theta: position[1],
            phi: position[2],
            p_rho: momenta[0],
            p_theta: momenta[1],
            p_phi: momenta[2],
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.rho, self.theta, self.phi]
    }

    pub fn momenta(&self) -> [f64; 3] {
        [self.p_rho, self.p_theta, self.p_phi]
    }

    pub fn to_phase_point(&self) -> PhasePoint {
        PhasePoint { q: self.position().to_vec(), p: self.momenta().to_vec() }
    }

    pub fn from_phase_point(radial: Radial, x: &PhasePoint) -> Result<Self> {
        if x.dim() != 3 {
            return Err(Error::ArityMismatch { expected: 3, found: x.dim() });
        }
        Ok(PolarPoint::new(radial, [x.q[0], x.q[1], x.q[2]], [x.p[0], x.p[1], x.p[2]]))
    }
}

fn abs<T: Scalar>(x: T) -> T {
    if x.re() < 0.0 {
        -x
    } else {
        x
    }
}

/// `E(x) = (e^{2zx} − 1)/z`.
fn e_map<T: Scalar>(z: f64, x: T) -> T {
    x * 2.0 * (x * z).exp() * sinhc(x * z)
}

/// Inverse of [`e_map`]: `ln(1 + z e)/(2z)`.
fn e_inv<T: Scalar>(z: f64, e: T) -> T {
    let u = e * z;
    if u.re().abs() < LOG_SERIES_THRESHOLD {
        e * 0.5 * (u * (u * (u * (u * 0.2 - 0.25) + 1.0 / 3.0) - 0.5) + 1.0)
    } else {
        u.ln_1p() / (2.0 * z)
    }
}

fn out_of_chart(relation: usize, detail: impl Into<String>) -> Error {
    Error::OutOfChart { relation, detail: detail.into() }
}

fn check3<T>(x: &[T]) -> Result<()> {
    if x.len() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: x.len() });
    }
    Ok(())
}

/// Cartesian position to `(ρ, θ, φ)` on the principal branch.
///
/// Only the squares `qᵢ²` enter, so every octant maps to the same point.
pub fn cart_to_polar<T: Scalar>(sig: SpaceSignature, q: &[T]) -> Result<[T; 3]> {
    check3(q)?;
    let (z, k2) = (sig.kappa1, sig.kappa2);
    let eps = sig.chart_signs();
    let s: Vec<T> = q.iter().zip(eps).map(|(qi, e)| qi.sq() * e).collect();
    let e1 = e_map(z, s[0]);
    let e2 = e_map(z, s[1]) * (s[0] * (2.0 * z)).exp();
    let e3 = e_map(z, s[2]) * ((s[0] + s[1]) * (2.0 * z)).exp();
    let total = e1 + e2 + e3;
    let sq = q.iter().map(|v| v.re()).collect::<Vec<_>>();
    if !total.re().is_finite() || total.re() < 0.0 {
        let cone = if k2 < 0.0 { " (outside the light cone q3² > q1² + q2²)" } else { "" };
        return Err(out_of_chart(1, format!("radial radicand {} at q = {sq:?}{cone}", total.re())));
    }
    if e3.re() < 0.0 {
        return Err(out_of_chart(2, format!("negative radicand {}", e3.re())));
    }
    if e2.re() * k2 < 0.0 {
        return Err(out_of_chart(3, format!("radicand {} has the wrong sign", e2.re())));
    }
    if e1.re() * k2 < 0.0 {
        return Err(out_of_chart(4, format!("radicand {} has the wrong sign", e1.re())));
    }
    let a = e1 + e2;
    if k2 < 0.0 && -a.re() >= e3.re() {
        return Err(out_of_chart(2, format!("on the light cone at q = {sq:?}")));
    }
    let rho = kappa_arcsin(-z, total.sqrt());
    if !rho.re().is_finite() {
        return Err(out_of_chart(1, "radial coordinate beyond the principal branch"));
    }
    let theta =
        if k2 > 0.0 { a.sqrt().atan2(e3.sqrt()) / k2.sqrt() } else { (abs(a) / e3).sqrt().atanh() / (-k2).sqrt() };
    let phi = abs(e1).sqrt().atan2(abs(e2).sqrt());
    Ok([rho, theta, phi])
}

/// Positive-octant Cartesian preimage of `(ρ, θ, φ)`.
pub fn polar_to_cart<T: Scalar>(sig: SpaceSignature, x: &[T]) -> Result<[T; 3]> {
    check3(x)?;
    let (z, k2) = (sig.kappa1, sig.kappa2);
    let (rho, theta, phi) = (x[0], x[1], x[2]);
    if !(rho.re() >= 0.0) || (z < 0.0 && (-z).sqrt() * rho.re() >= FRAC_PI_2) {
        return Err(out_of_chart(1, format!("rho = {} outside the principal branch", rho.re())));
    }
    if !(theta.re() >= 0.0) || (k2 > 0.0 && k2.sqrt() * theta.re() > FRAC_PI_2) {
        return Err(out_of_chart(2, format!("theta = {} outside the principal branch", theta.re())));
    }
    if !(0.0..=FRAC_PI_2).contains(&phi.re()) {
        return Err(out_of_chart(3, format!("phi = {} outside [0, π/2]", phi.re())));
    }
    let s2 = kappa_sin(-z, rho).sq();
    let a = s2 * kappa_sin(k2, theta).sq() * k2;
    let b = s2 * kappa_cos(k2, theta).sq();
    let e1 = a * phi.sin().sq();
    let x1 = e1 * z + 1.0;
    if !(x1.re() > 0.0) {
        return Err(out_of_chart(4, format!("logarithm of {}", x1.re())));
    }
    let e2 = a * phi.cos().sq() / x1;
    let x2 = e2 * z + 1.0;
    if !(x2.re() > 0.0) {
        return Err(out_of_chart(3, format!("logarithm of {}", x2.re())));
    }
    let e3 = b / (x1 * x2);
    let x3 = e3 * z + 1.0;
    if !(x3.re() > 0.0) {
        return Err(out_of_chart(2, format!("logarithm of {}", x3.re())));
    }
    let eps = sig.chart_signs();
    let s = [e_inv(z, e1), e_inv(z, e2), e_inv(z, e3)];
    let mut q = [T::zero(); 3];
    for i in 0..3 {
        let v = s[i] * eps[i];
        if v.re() < 0.0 {
            return Err(out_of_chart(4 - i, format!("negative square {}", v.re())));
        }
        q[i] = v.sqrt();
    }
    Ok(q)
}

/// `r = arcT_z(S₋z(ρ))`, equivalently `C₋z(ρ)·C_z(r) = 1`.
pub fn rho_to_r<T: Scalar>(rho: T, z: f64) -> Result<T> {
    if !(rho.re() >= 0.0) || (z < 0.0 && (-z).sqrt() * rho.re() >= FRAC_PI_2) {
        return Err(out_of_chart(1, format!("rho = {} outside the principal branch", rho.re())));
    }
    Ok(kappa_arctan(z, kappa_sin(-z, rho)))
}

/// `ρ = arcS₋z(T_z(r))`, the inverse of [`rho_to_r`].
pub fn r_to_rho<T: Scalar>(r: T, z: f64) -> Result<T> {
    if !(r.re() >= 0.0) || (z > 0.0 && z.sqrt() * r.re() >= FRAC_PI_2) {
        return Err(out_of_chart(1, format!("r = {} outside the principal branch", r.re())));
    }
    Ok(kappa_arcsin(-z, kappa_tan(z, r)))
}

/// Cartesian position of a chart point.
pub fn chart_to_cart<T: Scalar>(sig: SpaceSignature, radial: Radial, x: &[T]) -> Result<[T; 3]> {
    check3(x)?;
    match radial {
        Radial::Rho => polar_to_cart(sig, x),
        Radial::R => polar_to_cart(sig, &[r_to_rho(x[0], sig.kappa1)?, x[1], x[2]]),
    }
}

/// Chart position of a Cartesian point.
pub fn cart_to_chart<T: Scalar>(sig: SpaceSignature, radial: Radial, q: &[T]) -> Result<[T; 3]> {
    let [rho, theta, phi] = cart_to_polar(sig, q)?;
    match radial {
        Radial::Rho => Ok([rho, theta, phi]),
        Radial::R => Ok([rho_to_r(rho, sig.kappa1)?, theta, phi]),
    }
}

/// `J[i][k] = ∂qᵢ/∂X_k` of [`chart_to_cart`], by exact differentiation.
pub fn chart_jacobian(sig: SpaceSignature, radial: Radial, x: &[f64]) -> Result<[[f64; 3]; 3]> {
    check3(x)?;
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let q = chart_to_cart(sig, radial, &seed_d1(x, k))?;
        for (row, qi) in jac.iter_mut().zip(&q) {
            row[k] = qi.eps;
        }
    }
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::SingularJacobian(f64::NAN));
    }
    let m = to_matrix(&jac);
    let det = m.determinant();
    let norms: f64 = (0..3).map(|k| m.column(k).norm()).product();
    if !(det.abs() > JACOBIAN_THRESHOLD * norms) {
        return Err(Error::SingularJacobian(det));
    }
    Ok(jac)
}

fn to_matrix(j: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, k| j[i][k])
}

/// Maps a phase point between the Cartesian chart and a polar chart by the
/// point transformation `P = s·Jᵀ p` (`s` from [`MomentumScale`]).
pub fn momentum_transform(
    x: &PhasePoint,
    sig: SpaceSignature,
    radial: Radial,
    direction: Direction,
    scale: MomentumScale,
) -> Result<PhasePoint> {
    if x.dim() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: x.dim() });
    }
    let s = scale.factor();
    match direction {
        Direction::CartesianToPolar => {
            let pos = cart_to_chart(sig, radial, &x.q)?;
            let jac = to_matrix(&chart_jacobian(sig, radial, &pos)?);
            let p = nalgebra::Vector3::from_column_slice(&x.p);
            let pp = jac.transpose() * p * s;
            Ok(PhasePoint { q: pos.to_vec(), p: pp.iter().copied().collect() })
        }
        Direction::PolarToCartesian => {
            let q = chart_to_cart(sig, radial, &x.q)?;
            let jac = to_matrix(&chart_jacobian(sig, radial, &x.q)?);
            let pp = nalgebra::Vector3::from_column_slice(&x.p) / s;
            let p = jac.transpose().lu().solve(&pp).ok_or(Error::SingularJacobian(0.0))?;
            Ok(PhasePoint { q: q.to_vec(), p: p.iter().copied().collect() })
        }
    }
}

pub fn to_polar(x: &PhasePoint, sig: SpaceSignature, radial: Radial, scale: MomentumScale) -> Result<PolarPoint> {
    let y = momentum_transform(x, sig, radial, Direction::CartesianToPolar, scale)?;
    PolarPoint::from_phase_point(radial, &y)
}

pub fn to_cartesian(x: &PolarPoint, sig: SpaceSignature, scale: MomentumScale) -> Result<PhasePoint> {
    momentum_transform(&x.to_phase_point(), sig, x.radial, Direction::PolarToCartesian, scale)
}

/// Relative residuals of the four chart relations at a matched pair `(q, X)`.
pub fn relation_residuals(sig: SpaceSignature, q: &[f64], x: &[f64]) -> Result<[f64; 4]> {
    check3(q)?;
    check3(x)?;
    let (z, k2) = (sig.kappa1, sig.kappa2);
    let eps = sig.chart_signs();
    let s: Vec<f64> = q.iter().zip(eps).map(|(v, e)| v * v * e).collect();
    let (rho, theta, phi) = (x[0], x[1], x[2]);
    let sr2 = kappa_sin(-z, rho).powi(2);
    let st2 = kappa_sin(k2, theta).powi(2);
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / rhs.abs().max(1.0);
    Ok([
        rel(kappa_cos(-z, rho).powi(2), (2.0 * z * (s[0] + s[1] + s[2])).exp()),
        rel(sr2 * kappa_cos(k2, theta).powi(2), (2.0 * z * (s[0] + s[1])).exp() * e_map(z, s[2])),
        rel(k2 * sr2 * st2 * phi.cos().powi(2), (2.0 * z * s[0]).exp() * e_map(z, s[1])),
        rel(k2 * sr2 * st2 * phi.sin().powi(2), e_map(z, s[0])),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PolarKind {
    H21,
    C2,
    C3,
    H25,
    I2,
    I3,
}

struct PolarFn {
    sig: SpaceSignature,
    kind: PolarKind,
}

impl Expr for PolarFn {
    fn dim(&self) -> usize {
        6
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let (z, k2) = (self.sig.kappa1, self.sig.kappa2);
        let (rad, th, ph, pr, pt, pf) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        let st = kappa_sin(k2, th);
        let angular = pt.sq() + pf.sq() / st.sq();
        match self.kind {
            PolarKind::C2 => pf.sq(),
            PolarKind::C3 => angular,
            PolarKind::H21 => {
                let s = kappa_sin(-z, rad);
                kappa_cos(-z, rad) * 0.5 * (pr.sq() + angular / (s.sq() * k2))
            }
            PolarKind::H25 => {
                let s = kappa_sin(z, rad);
                (pr.sq() + angular / (s.sq() * k2)) * 0.5
            }
            PolarKind::I2 => {
                let t = kappa_tan(z, rad);
                let ct = kappa_cos(k2, th);
                let (sp, cp) = (ph.sin(), ph.cos());
                (st * sp * pr * k2 + ct * sp / t * pt + cp / (t * st) * pf).sq()
            }
            PolarKind::I3 => {
                let t = kappa_tan(z, rad);
                let ct = kappa_cos(k2, th);
                (st * pr * k2 + ct / t * pt).sq() + ((t * st).sq().recip() + z * k2) * pf.sq()
            }
        }
    }
}

fn polar_fn(sig: SpaceSignature, kind: PolarKind, name: &str) -> PhaseFunction {
    PhaseFunction::new(format!("{name}[z={},k2={}]", sig.kappa1, sig.kappa2), PolarFn { sig, kind })
}

/// The integrable Hamiltonian in the `ρ` chart with its two constants.
#[derive(Clone, Debug)]
pub struct PolarIntegrable {
    pub hamiltonian: PhaseFunction,
    pub c2: PhaseFunction,
    pub c3: PhaseFunction,
}

/// The superintegrable Hamiltonian in the `r` chart with its four constants.
#[derive(Clone, Debug)]
pub struct PolarSuperintegrable {
    pub hamiltonian: PhaseFunction,
    pub c2: PhaseFunction,
    pub c3: PhaseFunction,
    pub i2: PhaseFunction,
    pub i3: PhaseFunction,
}

impl PolarIntegrable {
    pub fn all(&self) -> [PhaseFunction; 3] {
        [self.hamiltonian.clone(), self.c2.clone(), self.c3.clone()]
    }
}

impl PolarSuperintegrable {
    pub fn all(&self) -> [PhaseFunction; 5] {
        [self.hamiltonian.clone(), self.c2.clone(), self.c3.clone(), self.i2.clone(), self.i3.clone()]
    }
}

/// `H = ½ C₋z(ρ)(p_ρ² + (p_θ² + p_φ²/S_κ₂(θ)²)/(κ₂ S₋z(ρ)²))`, `C₂ = p_φ²`,
/// `C₃ = p_θ² + p_φ²/S_κ₂(θ)²`.
pub fn hamiltonian_polar_integrable(sig: SpaceSignature) -> PolarIntegrable {
    PolarIntegrable {
        hamiltonian: polar_fn(sig, PolarKind::H21, "H_I_polar"),
        c2: polar_fn(sig, PolarKind::C2, "C2_polar"),
        c3: polar_fn(sig, PolarKind::C3, "C3_polar"),
    }
}

/// `H = ½(p_r² + (p_θ² + p_φ²/S_κ₂(θ)²)/(κ₂ S_z(r)²))` with `C₂`, `C₃` and
///
/// ```text
/// I₂ = (κ₂S_κ₂(θ) sinφ p_r + C_κ₂(θ) sinφ/T_z(r) p_θ + cosφ/(T_z(r) S_κ₂(θ)) p_φ)²
/// I₃ = (κ₂S_κ₂(θ) p_r + C_κ₂(θ)/T_z(r) p_θ)² + (zκ₂ + 1/(T_z(r)² S_κ₂(θ)²)) p_φ²
/// ```
pub fn hamiltonian_polar_super(sig: SpaceSignature) -> PolarSuperintegrable {
    PolarSuperintegrable {
        hamiltonian: polar_fn(sig, PolarKind::H25, "H_S_polar"),
        c2: polar_fn(sig, PolarKind::C2, "C2_polar"),
        c3: polar_fn(sig, PolarKind::C3, "C3_polar"),
        i2: polar_fn(sig, PolarKind::I2, "I2_polar"),
        i3: polar_fn(sig, PolarKind::I3, "I3_polar"),
    }
}

/// Rejects polar positions on a chart boundary, where the polar functions
/// are singular.
pub fn check_polar_interior(sig: SpaceSignature, radial: Radial, x: &[f64]) -> Result<()> {
    check3(x)?;
    let (z, k2) = (sig.kappa1, sig.kappa2);
    let (rad, th) = (x[0], x[1]);
    let (s, c) = match radial {
        Radial::Rho => (kappa_sin(-z, rad), kappa_cos(-z, rad)),
        Radial::R => (kappa_sin(z, rad), kappa_cos(z, rad)),
    };
    if !(s.abs() >= CHART_SINGULARITY) {
        return Err(Error::ChartSingularity(format!("radial sine vanishes at {} = {rad}", radial.name())));
    }
    if !(c > 0.0) {
        return Err(Error::ChartSingularity(format!("radial cosine vanishes at {} = {rad}", radial.name())));
    }
    if !(kappa_sin(k2, th).abs() >= CHART_SINGULARITY) {
        return Err(Error::ChartSingularity(format!("angular sine vanishes at theta = {th}")));
    }
    Ok(())
}

/// Cartesian functions matched by the polar ones, on the signed sites of the chart.
#[derive(Clone, Debug)]
pub struct CartesianSystem {
    pub h_integrable: PhaseFunction,
    pub h_super: PhaseFunction,
    pub c2: PhaseFunction,
    pub c3: PhaseFunction,
    pub i2: PhaseFunction,
    pub i3: PhaseFunction,
}

pub fn cartesian_system(sig: SpaceSignature) -> CartesianSystem {
    let sites = sig.sites();
    CartesianSystem {
        h_integrable: sites.hamiltonian_integrable(),
        h_super: sites.hamiltonian_superintegrable(),
        c2: sites.casimir(2).expect("3 sites"),
        c3: sites.casimir(3).expect("3 sites"),
        i2: sites.integral_i2().expect("3 sites"),
        i3: sites.integral_i3().expect("3 sites"),
    }
}

/// Ratios `polar / Cartesian` at matched points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchedFactors {
    pub hamiltonian: f64,
    pub c2: f64,
    pub c3: f64,
    pub i: f64,
}

/// Point canonical momenta give `(½, 1, κ₂, κ₂)`; doubled momenta `(2, 4, 4κ₂, 4κ₂)`.
pub fn matched_factors(sig: SpaceSignature, scale: MomentumScale) -> MatchedFactors {
    let s2 = scale.factor().powi(2);
    MatchedFactors { hamiltonian: 0.5 * s2, c2: s2, c3: sig.kappa2 * s2, i: sig.kappa2 * s2 }
}

struct ChartCoordinate {
    sig: SpaceSignature,
    radial: Radial,
    k: usize,
}

impl Expr for ChartCoordinate {
    fn dim(&self) -> usize {
        6
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        cart_to_chart(self.sig, self.radial, &x[..3]).map(|v| v[self.k]).unwrap_or(T::cst(f64::NAN))
    }
}

struct CartesianComponent {
    sig: SpaceSignature,
    radial: Radial,
    i: usize,
}

impl Expr for CartesianComponent {
    fn dim(&self) -> usize {
        3
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        chart_to_cart(self.sig, self.radial, x).map(|v| v[self.i]).unwrap_or(T::cst(f64::NAN))
    }
}

struct ChartMomentum {
    sig: SpaceSignature,
    radial: Radial,
    k: usize,
    scale: f64,
    inverse: [DiffFn; 3],
}

impl Expr for ChartMomentum {
    fn dim(&self) -> usize {
        6
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let Ok(pos) = cart_to_chart(self.sig, self.radial, &x[..3]) else {
            return T::cst(f64::NAN);
        };
        let mut out = T::zero();
        for (i, f) in self.inverse.iter().enumerate() {
            out = out + T::partials(f, &pos)[self.k] * x[3 + i];
        }
        out * self.scale
    }
}

/// The six polar phase-space coordinates as functions on Cartesian phase
/// space, in the order `(X₁, X₂, X₃, P₁, P₂, P₃)`.
pub fn chart_functions(sig: SpaceSignature, radial: Radial, scale: MomentumScale) -> Vec<PhaseFunction> {
    let names = match radial {
        Radial::Rho => ["rho", "theta", "phi"],
        Radial::R => ["r", "theta", "phi"],
    };
    let inverse: [DiffFn; 3] =
        std::array::from_fn(|i| DiffFn::new(format!("q{}", i + 1), CartesianComponent { sig, radial, i }));
    let mut out: Vec<PhaseFunction> =
        (0..3).map(|k| PhaseFunction::new(names[k], ChartCoordinate { sig, radial, k })).collect();
    out.extend((0..3).map(|k| {
        PhaseFunction::new(
            format!("p_{}", names[k]),
            ChartMomentum { sig, radial, k, scale: scale.factor(), inverse: inverse.clone() },
        )
    }));
    out
}

/// One fundamental bracket of the transformed chart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BracketCheck {
    pub left: String,
    pub right: String,
    pub expected: f64,
    pub value: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicityReport {
    pub samples: usize,
    /// Worst case over the samples for each of the 15 brackets.
    pub brackets: Vec<BracketCheck>,
}

impl CanonicityReport {
    pub fn max_residual(&self) -> f64 {
        self.brackets.iter().map(|b| b.residual).fold(0.0, f64::max)
    }
}

/// The 15 brackets `{Xᵢ,Xⱼ}`, `{Pᵢ,Pⱼ}`, `{Xᵢ,Pⱼ}` computed on Cartesian phase space.
pub fn check_canonicity(
    sig: SpaceSignature,
    radial: Radial,
    scale: MomentumScale,
    points: &[PhasePoint],
) -> Result<CanonicityReport> {
    let f = chart_functions(sig, radial, scale);
    let mut brackets = Vec::with_capacity(15);
    for a in 0..6 {
        for b in a + 1..6 {
            let expected = if a < 3 && b == a + 3 { scale.factor() } else { 0.0 };
            let mut worst = BracketCheck {
                left: f[a].label().into(),
                right: f[b].label().into(),
                expected,
                value: expected,
                residual: 0.0,
            };
            for x in points {
                let v = poisson_bracket_scaled(&f[a], &f[b], x)?;
                if !v.value.is_finite() {
                    return Err(Error::NonFinite {
                        what: format!("{{{}, {}}}", worst.left, worst.right),
                        point: x.flat(),
                    });
                }
                let r = scaled_residual(v, expected);
                if r > worst.residual {
                    worst.residual = r;
                    worst.value = v.value;
                }
            }
            brackets.push(worst);
        }
    }
    Ok(CanonicityReport { samples: points.len(), brackets })
}

/// Pushforward `Jᵀ g J` of a diagonal Cartesian metric to a polar chart.
pub fn pushforward_metric(g: &DiagonalMetric, sig: SpaceSignature, radial: Radial, x: &[f64]) -> Result<[[f64; 3]; 3]> {
    if g.dim() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: g.dim() });
    }
    let q = chart_to_cart(sig, radial, x)?;
    let gq = g.values(&q)?;
    let jac = chart_jacobian(sig, radial, x)?;
    let mut out = [[0.0; 3]; 3];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|i| gq[i] * jac[i][a] * jac[i][b]).sum();
        }
    }
    Ok(out)
}

/// Closed-form sectional curvatures `(K₁₂, K₁₃, K₂₃)` of the integrable metric
/// in the `ρ` chart: `K₁₂ = K₁₃ = −½ z² S₋z(ρ)²/C₋z(ρ)`, `K₂₃ = ½K₁₂`.
pub fn polar_sectional_closed_form(z: f64, rho: f64) -> [f64; 3] {
    let k = -0.5 * z * z * kappa_sin(-z, rho).powi(2) / kappa_cos(-z, rho);
    [k, k, 0.5 * k]
}

/// `K = −(5/2) z² S₋z(ρ)²/C₋z(ρ)`.
pub fn polar_scalar_closed_form(z: f64, rho: f64) -> f64 {
    -2.5 * z * z * kappa_sin(-z, rho).powi(2) / kappa_cos(-z, rho)
}

/// Seeded chart-interior Cartesian phase point: `qᵢ ∈ [0.15, 0.95]` for
/// `κ₂ > 0`, inside the cone `q₃ > |(q₁, q₂)| + 0.2` for `κ₂ < 0`;
/// momenta in `[−1, 1]`.
pub fn sample_chart_point(sig: SpaceSignature, seed: u64, index: u64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let q = if sig.kappa2 > 0.0 {
        (0..3).map(|_| rng.gen_range(0.15..0.95)).collect()
    } else {
        let q1: f64 = rng.gen_range(0.1..0.6);
        let q2: f64 = rng.gen_range(0.1..0.6);
        let q3 = q1.hypot(q2) + rng.gen_range(0.2..0.8);
        vec![q1, q2, q3]
    };
    let p = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PhasePoint { q, p }
}

pub fn sample_chart_points(sig: SpaceSignature, count: usize, seed: u64) -> Vec<PhasePoint> {
    (0..count as u64).map(|i| sample_chart_point(sig, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{curvature_sample, metric_from_hamiltonian, COALGEBRA_LINE_ELEMENT_SCALE};
    use crate::poisson::check_involution_in;

    fn sig(z: f64, k2: f64) -> SpaceSignature {
        SpaceSignature::new(z, k2).unwrap()
    }

    #[test]
    fn kappa_trig_examples() {
        assert_eq!(kappa_sin(0.0, 1.7), 1.7);
        assert!((kappa_sin(1.0, FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!((kappa_sin(-1.0, 1.0) - 1.1752011936438014).abs() < 1e-15);
        assert_eq!(kappa_cos(0.0, 3.0), 1.0);
        for k in [-2.0, -1e-9, 0.0, 1e-9, 0.5] {
            for x in [0.1, 0.7, 1.3] {
                let (s, c) = (kappa_sin(k, x), kappa_cos(k, x));
                assert!((c * c + k * s * s - 1.0).abs() < 1e-14);
                assert!((kappa_arcsin(k, s) - x).abs() < 1e-13);
                assert!((kappa_arctan(k, kappa_tan(k, x)) - x).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn kappa_trig_is_continuous_across_series_threshold() {
        let x: f64 = 0.8;
        for k in [0.999e-6f64, -0.999e-6] {
            let (kx, sk) = (k.abs().sqrt() * x, k.abs().sqrt());
            let (s, c, asn, atn) = if k > 0.0 {
                (kx.sin() / sk, kx.cos(), kx.asin() / sk, kx.atan() / sk)
            } else {
                (kx.sinh() / sk, kx.cosh(), kx.asinh() / sk, kx.atanh() / sk)
            };
            assert!((kappa_sin(k, x) - s).abs() < 1e-15);
            assert!((kappa_cos(k, x) - c).abs() < 1e-15);
            assert!((kappa_arcsin(k, x) - asn).abs() < 1e-15);
            assert!((kappa_arctan(k, x) - atn).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_maps_to_origin() {
        let [rho, _, _] = cart_to_polar(sig(0.3, 1.0), &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(polar_to_cart(sig(0.3, 1.0), &[0.0, 0.4, 0.3]).unwrap(), [0.0; 3]);
    }

    #[test]
    fn round_trip_examples() {
        let s = sig(0.3, 1.0);
        let q = [0.5, 0.5, 0.5];
        let x = cart_to_polar(s, &q).unwrap();
        let back = polar_to_cart(s, &x).unwrap();
        for i in 0..3 {
            assert!((back[i] - q[i]).abs() < 1e-12);
        }
        assert!(relation_residuals(s, &q, &x).unwrap().iter().all(|r| *r < 1e-12));
        let q = polar_to_cart(s, &[0.8, 0.6, 0.7]).unwrap();
        assert!(relation_residuals(s, &q, &[0.8, 0.6, 0.7]).unwrap().iter().all(|r| *r < 1e-12));
        let q2: f64 = q.iter().map(|v| v * v).sum();
        assert!(((0.6 * q2).exp() - kappa_cos(-0.3, 0.8).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn round_trip_all_signatures() {
        for z in [-0.7, 0.0, 0.2, 0.7] {
            for k2 in [1.0, -1.0, 2.5, -0.4] {
                let s = sig(z, k2);
                for x in sample_chart_points(s, 20, 5) {
                    let pol = cart_to_polar(s, &x.q).unwrap();
                    let back = polar_to_cart(s, &pol).unwrap();
                    for i in 0..3 {
                        assert!((back[i] - x.q[i]).abs() < 1e-11 * x.q[i].max(1.0), "{z} {k2} {:?} {back:?}", x.q);
                    }
                    assert!(relation_residuals(s, &x.q, &pol).unwrap().iter().all(|r| *r < 1e-12));
                }
            }
        }
    }

    #[test]
    fn flat_limit_chart() {
        let q = [0.3, 0.4, 0.5];
        let [rho, _, _] = cart_to_polar(sig(0.0, 1.0), &q).unwrap();
        assert!((rho - (2.0f64 * 0.5).sqrt()).abs() < 1e-15);
        let [rho_small, _, _] = cart_to_polar(sig(1e-14, 1.0), &q).unwrap();
        assert!((rho - rho_small).abs() < 1e-13);
    }

    #[test]
    fn out_of_chart_reports_relation() {
        let err = cart_to_polar(sig(0.3, -1.0), &[0.5, 0.5, 0.3]).unwrap_err();
        assert!(matches!(err, Error::OutOfChart { relation: 1, .. }), "{err}");
        assert!(err.to_string().contains("light cone"));
        let err = cart_to_polar(sig(0.3, -1.0), &[0.3, 0.4, 0.5]).unwrap_err();
        assert!(matches!(err, Error::OutOfChart { relation: 2, .. }), "{err}");
        let err = polar_to_cart(sig(-0.5, 1.0), &[3.0, 0.2, 0.2]).unwrap_err();
        assert!(matches!(err, Error::OutOfChart { relation: 1, .. }), "{err}");
        assert!(cart_to_polar(sig(0.3, 1.0), &[0.1, 0.2]).is_err());
    }

    #[test]
    fn radial_reparametrization() {
        assert_eq!(rho_to_r(0.0, 1.0).unwrap(), 0.0);
        assert!((rho_to_r(1.0, 1.0).unwrap() - 0.8657694832396586).abs() < 1e-15);
        assert!((rho_to_r(0.4, 0.0).unwrap() - 0.4).abs() < 1e-16);
        for z in [-0.9, -0.3, 0.0, 0.3, 1.0] {
            for rho in [0.05, 0.5, 1.2] {
                let r = rho_to_r(rho, z).unwrap();
                assert!((r_to_rho(r, z).unwrap() - rho).abs() < 1e-12);
                assert!((kappa_cos(-z, rho) * kappa_cos(z, r) - 1.0).abs() < 1e-12);
            }
        }
        assert!(r_to_rho(2.0, 1.0).is_err());
        assert!(rho_to_r(2.0, -1.0).is_err());
    }

    #[test]
    fn zero_momentum_maps_to_zero() {
        let s = sig(0.3, 1.0);
        let x = PhasePoint::new(vec![0.4, 0.5, 0.6], vec![0.0; 3]).unwrap();
        let y = to_polar(&x, s, Radial::Rho, MomentumScale::Canonical).unwrap();
        assert_eq!(y.momenta(), [0.0; 3]);
    }

    #[test]
    fn momentum_transform_round_trip() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0), (-0.4, 1.0)] {
            let s = sig(z, k2);
            for radial in [Radial::Rho, Radial::R] {
                for scale in [MomentumScale::Canonical, MomentumScale::Doubled] {
                    for x in sample_chart_points(s, 5, 1) {
                        let y = to_polar(&x, s, radial, scale).unwrap();
                        let back = to_cartesian(&y, s, scale).unwrap();
                        for i in 0..3 {
                            assert!((back.q[i] - x.q[i]).abs() < 1e-11);
                            assert!((back.p[i] - x.p[i]).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_brackets() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0)] {
            let s = sig(z, k2);
            let pts = sample_chart_points(s, 4, 3);
            let rep = check_canonicity(s, Radial::Rho, MomentumScale::Canonical, &pts).unwrap();
            assert_eq!(rep.brackets.len(), 15);
            assert!(rep.max_residual() < 1e-9, "{rep:?}");
            let rep = check_canonicity(s, Radial::R, MomentumScale::Doubled, &pts).unwrap();
            assert!(rep.max_residual() < 1e-9, "{rep:?}");
        }
    }

    #[test]
    fn matched_point_factors() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0), (-0.5, 2.0)] {
            let s = sig(z, k2);
            let cart = cartesian_system(s);
            let pi = hamiltonian_polar_integrable(s);
            let ps = hamiltonian_polar_super(s);
            for scale in [MomentumScale::Canonical, MomentumScale::Doubled] {
                let f = matched_factors(s, scale);
                for x in sample_chart_points(s, 5, 2) {
                    let y = to_polar(&x, s, Radial::Rho, scale).unwrap().to_phase_point();
                    let yr = to_polar(&x, s, Radial::R, scale).unwrap().to_phase_point();
                    let pairs = [
                        (pi.hamiltonian.value(&y), f.hamiltonian * cart.h_integrable.value(&x)),
                        (pi.c2.value(&y), f.c2 * cart.c2.value(&x)),
                        (pi.c3.value(&y), f.c3 * cart.c3.value(&x)),
                        (ps.hamiltonian.value(&yr), f.hamiltonian * cart.h_super.value(&x)),
                        (ps.i2.value(&yr), f.i * cart.i2.value(&x)),
                        (ps.i3.value(&yr), f.i * cart.i3.value(&x)),
                    ];
                    for (k, (a, b)) in pairs.iter().enumerate() {
                        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{z} {k2} #{k}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn flat_polar_limits() {
        let s = sig(0.0, 1.0);
        let x = [0.7, 0.9, 0.3, 0.2, -0.5, 0.8];
        let flat = 0.5 * (x[3] * x[3] + (x[4] * x[4] + x[5] * x[5] / x[1].sin().powi(2)) / (x[0] * x[0]));
        assert!((hamiltonian_polar_integrable(s).hamiltonian.eval(&x) - flat).abs() < 1e-14);
        assert!((hamiltonian_polar_super(s).hamiltonian.eval(&x) - flat).abs() < 1e-14);
    }

    #[test]
    fn polar_constants_are_in_involution() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0)] {
            let s = sig(z, k2);
            let pi = hamiltonian_polar_integrable(s);
            let ps = hamiltonian_polar_super(s);
            let pts: Vec<PhasePoint> = sample_chart_points(s, 6, 8)
                .iter()
                .map(|x| to_polar(x, s, Radial::R, MomentumScale::Canonical).unwrap().to_phase_point())
                .collect();
            let check = |fs: &[PhaseFunction]| {
                let funcs = fs.to_vec();
                let mut worst: f64 = 0.0;
                for x in &pts {
                    for a in 0..funcs.len() {
                        for b in a + 1..funcs.len() {
                            let v = poisson_bracket_scaled(&funcs[a], &funcs[b], x).unwrap();
                            worst = worst.max(scaled_residual(v, 0.0));
                        }
                    }
                }
                worst
            };
            assert!(check(&pi.all()) < 1e-9);
            assert!(check(&[ps.hamiltonian.clone(), ps.c2.clone(), ps.c3.clone()]) < 1e-9);
            assert!(check(&[ps.hamiltonian.clone(), ps.i2.clone(), ps.i3.clone()]) < 1e-9);
            let _ = check_involution_in;
        }
    }

    #[test]
    fn polar_metric_is_pushforward_of_cartesian() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0)] {
            let s = sig(z, k2);
            let cart = cartesian_system(s);
            let checks = sample_chart_points(s, 3, 4);
            let gc = metric_from_hamiltonian(&cart.h_integrable, &checks, COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
            let gcs = metric_from_hamiltonian(&cart.h_super, &checks, COALGEBRA_LINE_ELEMENT_SCALE).unwrap();
            let to = |radial| -> Vec<PhasePoint> {
                checks
                    .iter()
                    .map(|x| to_polar(x, s, radial, MomentumScale::Canonical).unwrap().to_phase_point())
                    .collect()
            };
            let gp =
                metric_from_hamiltonian(&hamiltonian_polar_integrable(s).hamiltonian, &to(Radial::Rho), 1.0).unwrap();
            let gr = metric_from_hamiltonian(&hamiltonian_polar_super(s).hamiltonian, &to(Radial::R), 1.0).unwrap();
            for x in sample_chart_points(s, 4, 9) {
                for (radial, g_polar, g_cart) in [(Radial::Rho, &gp, &gc), (Radial::R, &gr, &gcs)] {
                    let pos = cart_to_chart(s, radial, &x.q).unwrap();
                    let push = pushforward_metric(g_cart, s, radial, &pos).unwrap();
                    let diag = g_polar.values(&pos).unwrap();
                    for (a, row) in push.iter().enumerate() {
                        for (b, v) in row.iter().enumerate() {
                            let want = if a == b { diag[a] } else { 0.0 };
                            assert!((v - want).abs() < 1e-10 * want.abs().max(1.0), "{radial:?} {a}{b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn polar_curvatures() {
        for (z, k2) in [(0.3, 1.0), (0.7, -1.0), (-0.4, 1.0)] {
            let s = sig(z, k2);
            let pts: Vec<PhasePoint> = sample_chart_points(s, 3, 6)
                .iter()
                .map(|x| to_polar(x, s, Radial::Rho, MomentumScale::Canonical).unwrap().to_phase_point())
                .collect();
            let g = metric_from_hamiltonian(&hamiltonian_polar_integrable(s).hamiltonian, &pts, 1.0).unwrap();
            for x in &pts {
                let c = curvature_sample(&g, &x.q).unwrap();
                let want = polar_sectional_closed_form(z, x.q[0]);
                for (a, b) in c.sectional.iter().zip(want) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                assert!((c.scalar - polar_scalar_closed_form(z, x.q[0])).abs() < 1e-9);
            }
            let pts: Vec<PhasePoint> = pts
                .iter()
                .map(|x| {
                    let mut y = x.clone();
                    y.q[0] = rho_to_r(x.q[0], z).unwrap();
                    y
                })
                .collect();
            let g = metric_from_hamiltonian(&hamiltonian_polar_super(s).hamiltonian, &pts, 1.0).unwrap();
            for x in &pts {
                let c = curvature_sample(&g, &x.q).unwrap();
                assert!(c.sectional.iter().all(|k| (k - z).abs() < 1e-9), "{c:?}");
            }
        }
    }

    #[test]
    fn chart_singularities() {
        let s = sig(0.3, 1.0);
        assert!(matches!(check_polar_interior(s, Radial::Rho, &[0.0, 0.5, 0.5]), Err(Error::ChartSingularity(_))));
        assert!(matches!(check_polar_interior(s, Radial::Rho, &[0.5, 0.0, 0.5]), Err(Error::ChartSingularity(_))));
        assert!(matches!(check_polar_interior(s, Radial::R, &[3.0, 0.5, 0.5]), Err(Error::ChartSingularity(_))));
        assert!(check_polar_interior(s, Radial::R, &[0.5, 0.5, 0.5]).is_ok());
        assert!(matches!(chart_jacobian(s, Radial::Rho, &[0.5, 0.0, 0.4]), Err(Error::SingularJacobian(_))));
    }

    #[test]
    fn space_names() {
        assert_eq!(sig(1.0, 1.0).constant_curvature_space(), "sphere");
        assert_eq!(sig(-1.0, -1.0).constant_curvature_space(), "de Sitter");
        assert_eq!(sig(0.0, -1.0).deformed_space(), "minkowski");
        assert_eq!(sig(-1.0, 1.0).deformed_space(), "sphere");
        assert!(SpaceSignature::new(0.3, 0.0).is_err());
    }
}
