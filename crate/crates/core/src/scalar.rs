//! Scalar types that phase-space functions are evaluated over.
//!
//! Every function in this crate is written once, generically over [`Scalar`],
//! and evaluated either on plain `f64` or on forward-mode dual numbers.
//! Nesting duals (`Dual<Dual<f64>>`) yields exact second derivatives, which the
//! Jacobi-identity checks and the curvature tensors rely on.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::function::{DiffFn, Evaluate};

/// First-order dual number over `f64`.
pub type D1 = Dual<f64>;
/// Second-order (hyper-dual) number: exact mixed second derivatives.
pub type D2 = Dual<Dual<f64>>;

/// Real-like number type supporting the elementary functions used by the
/// coalgebra realizations, the κ-trigonometry and the metric tensors.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    /// Primal (real) part.
    fn re(&self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn asin(self) -> Self;
    fn atan(self) -> Self;
    fn asinh(self) -> Self;
    fn atanh(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    fn sq(self) -> Self {
        self * self
    }

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    /// Evaluates a type-erased function at this scalar type.
    fn call(f: &dyn Evaluate, x: &[Self]) -> Self;

    /// Exact partial derivatives of `f` at `x`, returned at this scalar type.
    ///
    /// Lifts one level up the dual tower, so second derivatives of `f` are
    /// needed when `Self` is already a first-order dual. Third-order lifts are
    /// not supported.
    fn partials(f: &DiffFn, x: &[Self]) -> Vec<Self>;
}

impl Scalar for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn asinh(self) -> Self {
        f64::asinh(self)
    }
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn call(f: &dyn Evaluate, x: &[Self]) -> Self {
        f.eval_f64(x)
    }
    fn partials(f: &DiffFn, x: &[Self]) -> Vec<Self> {
        let mut seeded: Vec<D1> = x.iter().map(|&v| Dual::cst(v)).collect();
        (0..x.len())
            .map(|j| {
                seeded[j].eps = 1.0;
                let out = f.eval(&seeded).eps;
                seeded[j].eps = 0.0;
                out
            })
            .collect()
    }
}

/// Forward-mode dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    #[inline]
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    /// Independent variable: unit tangent.
    #[inline]
    pub fn var(re: T) -> Self {
        Dual { re, eps: T::one() }
    }

    #[inline]
    fn chain(self, value: T, deriv: T) -> Self {
        Dual { re: value, eps: self.eps * deriv }
    }

    fn d_exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn d_ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn d_ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), (self.re + 1.0).recip())
    }
    fn d_sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn d_sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn d_cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn d_tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, t * t + 1.0)
    }
    fn d_sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }
    fn d_cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }
    fn d_tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, -(t * t) + 1.0)
    }
    fn d_asin(self) -> Self {
        let d = (-(self.re * self.re) + 1.0).sqrt().recip();
        self.chain(self.re.asin(), d)
    }
    fn d_atan(self) -> Self {
        self.chain(self.re.atan(), (self.re * self.re + 1.0).recip())
    }
    fn d_asinh(self) -> Self {
        let d = (self.re * self.re + 1.0).sqrt().recip();
        self.chain(self.re.asinh(), d)
    }
    fn d_atanh(self) -> Self {
        self.chain(self.re.atanh(), (-(self.re * self.re) + 1.0).recip())
    }
    fn d_atan2(self, x: Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x² + y²)
        let r2 = x.re * x.re + self.re * self.re;
        Dual { re: self.re.atan2(x.re), eps: (x.re * self.eps - self.re * x.eps) / r2 }
    }
    fn d_powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual { re: T::one(), eps: T::zero() };
        }
        self.chain(self.re.powi(n), self.re.powi(n - 1) * n as f64)
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, eps: self.re * o.eps + self.eps * o.re }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual { re: q, eps: (self.eps - q * o.eps) / o.re }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual { re: self.re + o, eps: self.eps }
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual { re: self.re - o, eps: self.eps }
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual { re: self.re * o, eps: self.eps * o }
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual { re: self.re / o, eps: self.eps / o }
    }
}

macro_rules! dual_scalar_impl {
    ($ty:ty, $inner:ty, $call:ident, |$f:ident, $x:ident| $partials:block) => {
        impl Scalar for $ty {
            #[inline]
            fn cst(x: f64) -> Self {
                Dual { re: <$inner>::cst(x), eps: <$inner>::zero() }
            }
            #[inline]
            fn re(&self) -> f64 {
                self.re.re()
            }
            fn exp(self) -> Self {
                self.d_exp()
            }
            fn ln(self) -> Self {
                self.d_ln()
            }
            fn ln_1p(self) -> Self {
                self.d_ln_1p()
            }
            fn sqrt(self) -> Self {
                self.d_sqrt()
            }
            fn sin(self) -> Self {
                self.d_sin()
            }
            fn cos(self) -> Self {
                self.d_cos()
            }
            fn tan(self) -> Self {
                self.d_tan()
            }
            fn sinh(self) -> Self {
                self.d_sinh()
            }
            fn cosh(self) -> Self {
                self.d_cosh()
            }
            fn tanh(self) -> Self {
                self.d_tanh()
            }
            fn asin(self) -> Self {
                self.d_asin()
            }
            fn atan(self) -> Self {
                self.d_atan()
            }
            fn asinh(self) -> Self {
                self.d_asinh()
            }
            fn atanh(self) -> Self {
                self.d_atanh()
            }
            fn atan2(self, x: Self) -> Self {
                self.d_atan2(x)
            }
            fn powi(self, n: i32) -> Self {
                self.d_powi(n)
            }
            fn call(f: &dyn Evaluate, x: &[Self]) -> Self {
                f.$call(x)
            }
            fn partials($f: &DiffFn, $x: &[Self]) -> Vec<Self> $partials
        }
    };
}

dual_scalar_impl!(D1, f64, eval_d1, |f, x| {
    let mut seeded: Vec<D2> = x.iter().map(|&v| Dual { re: v, eps: D1::zero() }).collect();
    (0..x.len())
        .map(|j| {
            seeded[j].eps = D1::one();
            let out = f.eval(&seeded).eps;
            seeded[j].eps = D1::zero();
            out
        })
        .collect()
});

dual_scalar_impl!(D2, D1, eval_d2, |_f, _x| {
    panic!("partial derivatives of second-order duals would need third-order differentiation")
});

/// Seeds a vector of first-order duals with tangent along coordinate `dir`.
pub fn seed_d1(x: &[f64], dir: usize) -> Vec<D1> {
    x.iter().enumerate().map(|(k, &v)| Dual { re: v, eps: if k == dir { 1.0 } else { 0.0 } }).collect()
}

/// Seeds hyper-duals so that the `eps.eps` part of the result is `∂²f/∂x_i∂x_j`.
pub fn seed_d2(x: &[f64], i: usize, j: usize) -> Vec<D2> {
    x.iter()
        .enumerate()
        .map(|(k, &v)| Dual {
            re: Dual { re: v, eps: if k == j { 1.0 } else { 0.0 } },
            eps: Dual { re: if k == i { 1.0 } else { 0.0 }, eps: 0.0 },
        })
        .collect()
}
