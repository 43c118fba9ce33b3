//! Deformed sl(2) Poisson coalgebra: N-site symplectic realizations, the
//! Casimir tower, the free Hamiltonian families and the extra integrals of
//! the superintegrable flow.
//!
//! The N-site realization is
//!
//! ```text
//! J₋ = Σᵢ sᵢ
//! J₊ = Σᵢ sinhc(z sᵢ) Pᵢ exp(−z Σ_{k<i} s_k + z Σ_{l>i} s_l)
//! J₃ = Σᵢ sinhc(z sᵢ) qᵢpᵢ exp(−z Σ_{k<i} s_k + z Σ_{l>i} s_l)
//! ```
//!
//! with `sᵢ = εᵢ qᵢ²`, `Pᵢ = εᵢ pᵢ²`. The site signs `εᵢ` default to `+1`;
//! `εᵢ = −1` is the real form of an imaginary coordinate pair
//! `(qᵢ, pᵢ) = (i uᵢ, −i vᵢ)` and is what the Lorentzian charts use.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::{Expr, PhaseFunction};
use crate::scalar::Scalar;

/// Below this |x| [`sinhc`] switches to its even Taylor polynomial.
pub const SINHC_SERIES_THRESHOLD: f64 = 1e-4;

/// `sinh(x)/x`, with `sinhc(0) = 1` exactly.
#[inline]
pub fn sinhc<T: Scalar>(x: T) -> T {
    if x.re().abs() < SINHC_SERIES_THRESHOLD {
        let x2 = x.sq();
        x2 * (x2 * (x2 * (1.0 / 5040.0) + 1.0 / 120.0) + 1.0 / 6.0) + 1.0
    } else {
        x.sinh() / x
    }
}

/// `sinh(z·j₋)/z · j₊ − j₃²`, written as `j₋·sinhc(z·j₋)·j₊ − j₃²` so that
/// `z = 0` needs no special case.
#[inline]
pub fn casimir_abstract<T: Scalar>(z: f64, j_minus: T, j_plus: T, j_three: T) -> T {
    j_minus * sinhc(j_minus * z) * j_plus - j_three.sq()
}

/// Real deformation parameter `z`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct DeformationParameter(f64);

impl DeformationParameter {
    pub fn new(z: f64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::NonFinite { what: "deformation parameter".into(), point: vec![z] });
        }
        Ok(DeformationParameter(z))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Site count, deformation and per-site signs for a realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Sites {
    n: usize,
    z: f64,
    signs: Arc<[f64]>,
}

impl Sites {
    pub fn new(n: usize, z: f64) -> Result<Self> {
        Sites::with_signs(z, &vec![1.0; n])
    }

    /// Realization with per-site signs `εᵢ ∈ {+1, −1}`.
    pub fn with_signs(z: f64, signs: &[f64]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(s) = signs.iter().find(|s| **s != 1.0 && **s != -1.0) {
            return Err(Error::InvalidArgument(format!("site sign must be ±1, got {s}")));
        }
        let z = DeformationParameter::new(z)?.value();
        Ok(Sites { n: signs.len(), z, signs: signs.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    fn suffix(&self) -> String {
        if self.signs.iter().all(|s| *s > 0.0) {
            format!("N={},z={}", self.n, self.z)
        } else {
            let eps: Vec<_> = self.signs.iter().map(|s| if *s > 0.0 { '+' } else { '-' }).collect();
            format!("N={},z={},eps={}", self.n, self.z, eps.iter().collect::<String>())
        }
    }

    /// Generators `(J₋, J₊, J₃)` of the first `m` sites evaluated at `x`.
    pub fn generators_at<T: Scalar>(&self, m: usize, x: &[T]) -> [T; 3] {
        generators(self.z, &self.signs[..m], &x[..m], &x[self.n..self.n + m])
    }

    pub fn realize(&self) -> DeformedRealization {
        let make = |g: Generator, name: &str| {
            PhaseFunction::new(format!("{name}[{}]", self.suffix()), GeneratorFn { sites: self.clone(), which: g })
        };
        DeformedRealization {
            sites: self.clone(),
            j_minus: make(Generator::Minus, "J-"),
            j_plus: make(Generator::Plus, "J+"),
            j_three: make(Generator::Three, "J3"),
        }
    }

    /// m-site Casimir `C^(m)` acting on the first m coordinate pairs.
    pub fn casimir(&self, m: usize) -> Result<PhaseFunction> {
        if m < 2 || m > self.n {
            return Err(Error::InvalidCasimirOrder { m, n: self.n });
        }
        Ok(PhaseFunction::new(
            format!("C{m}[{}]", self.suffix()),
            CasimirFn { sites: self.clone(), m, composed: false },
        ))
    }

    /// The abstract Casimir composed with the m-site generators, for any
    /// `1 ≤ m ≤ N` (identically zero when `m = 1`). Equal to
    /// [`Sites::casimir`] but loses relative accuracy where the Casimir is
    /// small.
    pub fn casimir_composed(&self, m: usize) -> Result<PhaseFunction> {
        if m < 1 || m > self.n {
            return Err(Error::InvalidCasimirOrder { m, n: self.n });
        }
        Ok(PhaseFunction::new(format!("C{m}[{}]", self.suffix()), CasimirFn { sites: self.clone(), m, composed: true }))
    }

    /// `½ J₊ f(z J₋)` for an admissible profile (`f(0) = 1`).
    pub fn hamiltonian_family<P: Profile>(&self, profile: P) -> Result<PhaseFunction> {
        let f0 = profile.apply(0.0_f64);
        if !((f0 - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidProfile(f0));
        }
        let label = format!("H[{}][{}]", profile.name(), self.suffix());
        Ok(PhaseFunction::new(label, FamilyFn { sites: self.clone(), profile }))
    }

    /// `½ J₊`.
    pub fn hamiltonian_integrable(&self) -> PhaseFunction {
        self.hamiltonian_family(Catalog::One)
            .expect("constant profile is admissible")
            .with_label(format!("H_I[{}]", self.suffix()))
    }

    /// `½ J₊ exp(z J₋)`.
    pub fn hamiltonian_superintegrable(&self) -> PhaseFunction {
        self.hamiltonian_family(Catalog::Exp)
            .expect("exp profile is admissible")
            .with_label(format!("H_S[{}]", self.suffix()))
    }

    /// `I^(2) = ½ sinhc(z s₁) e^{z s₁} P₁`; needs N ≥ 2.
    pub fn integral_i2(&self) -> Result<PhaseFunction> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("I2 needs N ≥ 2 (got {})", self.n)));
        }
        Ok(PhaseFunction::new(format!("I2[{}]", self.suffix()), IntegralFn { sites: self.clone(), order: 2 }))
    }

    /// `I^(3) = ½ sinhc(z s₁) e^{z s₁} e^{2z s₂} P₁ + ½ sinhc(z s₂) e^{z s₂} P₂`; needs N ≥ 3.
    pub fn integral_i3(&self) -> Result<PhaseFunction> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("I3 needs N ≥ 3 (got {})", self.n)));
        }
        Ok(PhaseFunction::new(format!("I3[{}]", self.suffix()), IntegralFn { sites: self.clone(), order: 3 }))
    }
}

fn generators<T: Scalar>(z: f64, signs: &[f64], q: &[T], p: &[T]) -> [T; 3] {
    let m = q.len();
    let s: Vec<T> = q.iter().zip(signs).map(|(qi, e)| qi.sq() * *e).collect();
    let total = s.iter().fold(T::zero(), |a, b| a + *b);
    let mut left = T::zero();
    let mut j_plus = T::zero();
    let mut j_three = T::zero();
    for i in 0..m {
        let right = s[i + 1..].iter().fold(T::zero(), |a, b| a + *b);
        let weight = sinhc(s[i] * z) * ((right - left) * z).exp();
        j_plus = j_plus + weight * p[i].sq() * signs[i];
        j_three = j_three + weight * q[i] * p[i];
        left = left + s[i];
    }
    [total, j_plus, j_three]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Generator {
    Minus,
    Plus,
    Three,
}

struct GeneratorFn {
    sites: Sites,
    which: Generator,
}

impl Expr for GeneratorFn {
    fn dim(&self) -> usize {
        2 * self.sites.n
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let [jm, jp, j3] = self.sites.generators_at(self.sites.n, x);
        match self.which {
            Generator::Minus => jm,
            Generator::Plus => jp,
            Generator::Three => j3,
        }
    }
}

struct CasimirFn {
    sites: Sites,
    m: usize,
    composed: bool,
}

impl Expr for CasimirFn {
    fn dim(&self) -> usize {
        2 * self.sites.n
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        if self.composed {
            let [jm, jp, j3] = self.sites.generators_at(self.m, x);
            return casimir_abstract(self.sites.z, jm, jp, j3);
        }
        casimir_pairwise(
            self.sites.z,
            &self.sites.signs[..self.m],
            &x[..self.m],
            &x[self.sites.n..self.sites.n + self.m],
        )
    }
}

/// The m-site Casimir as a sum of non-negative pair terms (for positive
/// signs), free of the cancellation in `J₋ sinhc(zJ₋) J₊ − J₃²`:
///
/// ```text
/// Σ_{i<j} εᵢεⱼ sinhc(z sᵢ) sinhc(z sⱼ) (qᵢpⱼ − εᵢεⱼ qⱼpᵢ)²
///         · exp(z(−sᵢ + sⱼ − 2Σ_{k<i} s_k + 2Σ_{k>j} s_k))
/// ```
pub fn casimir_pairwise<T: Scalar>(z: f64, signs: &[f64], q: &[T], p: &[T]) -> T {
    let m = q.len();
    let s: Vec<T> = q.iter().zip(signs).map(|(qi, e)| qi.sq() * *e).collect();
    let c: Vec<T> = s.iter().map(|si| sinhc(*si * z)).collect();
    let mut before = vec![T::zero(); m + 1];
    for i in 0..m {
        before[i + 1] = before[i] + s[i];
    }
    let mut out = T::zero();
    for i in 0..m {
        for j in i + 1..m {
            let e = signs[i] * signs[j];
            let after = before[m] - before[j + 1];
            let exponent = (s[j] - s[i] - before[i] * 2.0 + after * 2.0) * z;
            let l = q[i] * p[j] - q[j] * p[i] * e;
            out = out + c[i] * c[j] * l.sq() * exponent.exp() * e;
        }
    }
    out
}

struct FamilyFn<P> {
    sites: Sites,
    profile: P,
}

impl<P: Profile> Expr for FamilyFn<P> {
    fn dim(&self) -> usize {
        2 * self.sites.n
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let [jm, jp, _] = self.sites.generators_at(self.sites.n, x);
        jp * self.profile.apply(jm * self.sites.z) * 0.5
    }
}

struct IntegralFn {
    sites: Sites,
    order: usize,
}

impl Expr for IntegralFn {
    fn dim(&self) -> usize {
        2 * self.sites.n
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let n = self.sites.n;
        let z = self.sites.z;
        let eps = &self.sites.signs;
        let s1 = x[0].sq() * eps[0];
        let p1 = x[n].sq() * eps[0];
        let term1 = sinhc(s1 * z) * (s1 * z).exp() * p1 * 0.5;
        if self.order == 2 {
            return term1;
        }
        let s2 = x[1].sq() * eps[1];
        let p2 = x[n + 1].sq() * eps[1];
        term1 * (s2 * (2.0 * z)).exp() + sinhc(s2 * z) * (s2 * z).exp() * p2 * 0.5
    }
}

/// Smooth profile `f` in `½ J₊ f(z J₋)`.
pub trait Profile: Send + Sync + 'static {
    fn apply<T: Scalar>(&self, x: T) -> T;
    fn name(&self) -> &str;
}

/// Registered profiles selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Catalog {
    /// `f ≡ 1`
    One,
    /// `f = exp`
    Exp,
    /// `f(x) = 1 + x`
    Linear,
}

impl Catalog {
    pub const ALL: [Catalog; 3] = [Catalog::One, Catalog::Exp, Catalog::Linear];

    /// Looks a profile up by name; `identity` and `1+x` are accepted as
    /// aliases of `one` and `linear`.
    pub fn from_name(name: &str) -> Option<Catalog> {
        match name {
            "identity" => Some(Catalog::One),
            "1+x" => Some(Catalog::Linear),
            _ => Catalog::ALL.into_iter().find(|c| c.name() == name),
        }
    }
}

impl Profile for Catalog {
    fn apply<T: Scalar>(&self, x: T) -> T {
        match self {
            Catalog::One => T::one(),
            Catalog::Exp => x.exp(),
            Catalog::Linear => x + 1.0,
        }
    }
    fn name(&self) -> &str {
        match self {
            Catalog::One => "one",
            Catalog::Exp => "exp",
            Catalog::Linear => "linear",
        }
    }
}

/// The triple `(J₋, J₊, J₃)` on N sites.
#[derive(Clone, Debug)]
pub struct DeformedRealization {
    pub sites: Sites,
    pub j_minus: PhaseFunction,
    pub j_plus: PhaseFunction,
    pub j_three: PhaseFunction,
}

impl DeformedRealization {
    pub fn n_sites(&self) -> usize {
        self.sites.n
    }

    pub fn z(&self) -> f64 {
        self.sites.z
    }

    pub fn generators(&self) -> [&PhaseFunction; 3] {
        [&self.j_minus, &self.j_plus, &self.j_three]
    }
}

pub fn realize_generators(n: usize, z: f64) -> Result<DeformedRealization> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(Sites::new(n, z)?.realize())
}

pub fn casimir_m(m: usize, n: usize, z: f64) -> Result<PhaseFunction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Sites::new(n, z)?.casimir(m)
}

/// One-site Casimir; vanishes identically.
pub fn casimir_one(z: f64) -> Result<PhaseFunction> {
    Sites::new(1, z)?.casimir_composed(1)
}

pub fn hamiltonian_integrable(n: usize, z: f64) -> Result<PhaseFunction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(Sites::new(n, z)?.hamiltonian_integrable())
}

pub fn hamiltonian_superintegrable(n: usize, z: f64) -> Result<PhaseFunction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(Sites::new(n, z)?.hamiltonian_superintegrable())
}

pub fn hamiltonian_family<P: Profile>(n: usize, z: f64, profile: P) -> Result<PhaseFunction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Sites::new(n, z)?.hamiltonian_family(profile)
}

pub fn integral_i2(n: usize, z: f64) -> Result<PhaseFunction> {
    Sites::new(n, z)?.integral_i2()
}

pub fn integral_i3(n: usize, z: f64) -> Result<PhaseFunction> {
    Sites::new(n, z)?.integral_i3()
}
