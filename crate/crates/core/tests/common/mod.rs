//! Closed forms transcribed independently of the library, used as oracles.
#![allow(dead_code)]

use coflow::Scalar;

pub fn sinhc<T: Scalar>(x: T) -> T {
    if x.re().abs() < 1e-3 {
        let x2 = x * x;
        x2 * (x2 * (x2 / 5040.0 + 1.0 / 120.0) + 1.0 / 6.0) + 1.0
    } else {
        x.sinh() / x
    }
}

/// `(J₋, J₊, J₃)` of the coproduct realization with site signs `eps`.
pub fn generators(z: f64, eps: &[f64], q: &[f64], p: &[f64]) -> [f64; 3] {
    let n = q.len();
    let s: Vec<f64> = (0..n).map(|i| eps[i] * q[i] * q[i]).collect();
    let mut jp = 0.0;
    let mut j3 = 0.0;
    for i in 0..n {
        let before: f64 = s[..i].iter().sum();
        let after: f64 = s[i + 1..].iter().sum();
        let w = sinhc(z * s[i]) * (z * (after - before)).exp();
        jp += w * eps[i] * p[i] * p[i];
        j3 += w * q[i] * p[i];
    }
    [s.iter().sum(), jp, j3]
}

pub fn casimir_from_generators(z: f64, [jm, jp, j3]: [f64; 3]) -> f64 {
    jm * sinhc(z * jm) * jp - j3 * j3
}

fn pair(z: f64, qa: f64, qb: f64, pa: f64, pb: f64) -> f64 {
    sinhc(z * qa * qa) * sinhc(z * qb * qb) * (qa * pb - qb * pa).powi(2)
}

/// Two-particle Casimir, written out term by term.
pub fn casimir2(z: f64, q: &[f64], p: &[f64]) -> f64 {
    pair(z, q[0], q[1], p[0], p[1]) * (-z * q[0] * q[0]).exp() * (z * q[1] * q[1]).exp()
}

/// Three-particle Casimir, written out term by term.
pub fn casimir3(z: f64, q: &[f64], p: &[f64]) -> f64 {
    let e = |c: f64, i: usize| (c * z * q[i] * q[i]).exp();
    pair(z, q[0], q[1], p[0], p[1]) * e(-1.0, 0) * e(1.0, 1) * e(2.0, 2)
        + pair(z, q[0], q[2], p[0], p[2]) * e(-1.0, 0) * e(1.0, 2)
        + pair(z, q[1], q[2], p[1], p[2]) * e(-2.0, 0) * e(-1.0, 1) * e(1.0, 2)
}

/// Diagonal of the three-dimensional variable-curvature line element.
pub fn metric_variable_3d(z: f64, q: &[f64]) -> [f64; 3] {
    let s: Vec<f64> = q.iter().map(|x| z * x * x).collect();
    [
        2.0 / sinhc(s[0]) * (-s[1] - s[2]).exp(),
        2.0 / sinhc(s[1]) * (s[0] - s[2]).exp(),
        2.0 / sinhc(s[2]) * (s[0] + s[1]).exp(),
    ]
}

/// `[K₁₂, K₁₃, K₂₃]` of the variable-curvature metric. The 23-plane uses
/// `2 − e^{2zq₂²}e^{2zq₃²} − e^{2zq²}`; see [`k23_as_printed`].
pub fn sectional_variable_3d(z: f64, q: &[f64]) -> [f64; 3] {
    let q2: f64 = q.iter().map(|x| x * x).sum();
    let e = |x: f64| (2.0 * z * x).exp();
    let pre = 0.25 * z * (-z * q2).exp();
    [
        pre * (1.0 + e(q[2] * q[2]) - 2.0 * e(q2)),
        pre * (2.0 - e(q[2] * q[2]) + e(q[1] * q[1]) * e(q[2] * q[2]) - 2.0 * e(q2)),
        pre * (2.0 - e(q[1] * q[1]) * e(q[2] * q[2]) - e(q2)),
    ]
}

/// The 23-plane expression with the coefficient 2 on `e^{2zq²}`, which is
/// inconsistent with the scalar-curvature identity.
pub fn k23_as_printed(z: f64, q: &[f64]) -> f64 {
    let q2: f64 = q.iter().map(|x| x * x).sum();
    let e = |x: f64| (2.0 * z * x).exp();
    0.25 * z * (-z * q2).exp() * (2.0 - e(q[1] * q[1]) * e(q[2] * q[2]) - 2.0 * e(q2))
}

pub fn scalar_variable_3d(z: f64, q: &[f64]) -> f64 {
    let q2: f64 = q.iter().map(|x| x * x).sum();
    -5.0 * z * (z * q2).sinh()
}

/// κ-sine: `sin(√κ x)/√κ`, `x`, or `sinh(√−κ x)/√−κ`.
pub fn ksin(kappa: f64, x: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * x).sin() / kappa.sqrt()
    } else if kappa < 0.0 {
        ((-kappa).sqrt() * x).sinh() / (-kappa).sqrt()
    } else {
        x
    }
}

pub fn kcos(kappa: f64, x: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * x).cos()
    } else if kappa < 0.0 {
        ((-kappa).sqrt() * x).cosh()
    } else {
        1.0
    }
}

/// Integrable Hamiltonian in `(ρ, θ, φ)` with its two Casimirs.
pub fn polar_integrable(z: f64, kappa2: f64, x: &[f64], p: &[f64]) -> [f64; 3] {
    let st = ksin(kappa2, x[1]);
    let c2 = p[2] * p[2];
    let c3 = p[1] * p[1] + c2 / (st * st);
    let sr = ksin(-z, x[0]);
    let h = 0.5 * kcos(-z, x[0]) * (p[0] * p[0] + c3 / (kappa2 * sr * sr));
    [h, c2, c3]
}

/// Superintegrable Hamiltonian in `(r, θ, φ)`.
pub fn polar_superintegrable(z: f64, kappa2: f64, x: &[f64], p: &[f64]) -> f64 {
    let st = ksin(kappa2, x[1]);
    let sr = ksin(z, x[0]);
    0.5 * (p[0] * p[0] + (p[1] * p[1] + p[2] * p[2] / (st * st)) / (kappa2 * sr * sr))
}

/// Geodesic polar line element of constant curvature `z`.
pub fn metric_geodesic_polar(z: f64, kappa2: f64, x: &[f64]) -> [f64; 3] {
    let sr = ksin(z, x[0]);
    let st = ksin(kappa2, x[1]);
    [1.0, kappa2 * sr * sr, kappa2 * sr * sr * st * st]
}

/// `∫₀ᵇ f` by composite Simpson with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `|a − b|/|b|`, absolute when `|b| ≤ 1e-12`.
pub fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b.abs() > 1e-12 {
        d / b.abs()
    } else {
        d
    }
}
