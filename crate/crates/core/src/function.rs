//! Differentiable scalar functions of a real vector.
//!
//! Concrete functions implement [`Expr`] once, generically over [`Scalar`];
//! [`DiffFn`] type-erases them so they can be stored, composed and evaluated
//! on `f64`, first-order and second-order duals.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, D1, D2};

/// Object-safe evaluation at each supported scalar type.
pub trait Evaluate: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> f64;
    fn eval_d1(&self, x: &[D1]) -> D1;
    fn eval_d2(&self, x: &[D2]) -> D2;
}

/// A function written once over any [`Scalar`].
pub trait Expr: Send + Sync + 'static {
    /// Length of the input vector.
    fn dim(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T]) -> T;
}

impl<E: Expr> Evaluate for E {
    fn dim(&self) -> usize {
        Expr::dim(self)
    }
    fn eval_f64(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn eval_d1(&self, x: &[D1]) -> D1 {
        self.eval(x)
    }
    fn eval_d2(&self, x: &[D2]) -> D2 {
        self.eval(x)
    }
}

/// Shared, immutable, differentiable function `R^dim → R`.
#[derive(Clone)]
pub struct DiffFn {
    inner: Arc<dyn Evaluate>,
    label: Arc<str>,
}

impl DiffFn {
    pub fn new(label: impl Into<String>, expr: impl Expr) -> Self {
        let label: String = label.into();
        DiffFn { inner: Arc::new(expr), label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(&self, label: impl Into<String>) -> Self {
        let label: String = label.into();
        DiffFn { inner: Arc::clone(&self.inner), label: label.into() }
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim(), "input length for {}", self.label);
        T::call(&*self.inner, x)
    }

    /// Exact gradient via forward-mode duals.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        f64::partials(self, x)
    }

    /// Exact Hessian via hyper-duals (symmetric, row-major `dim × dim`).
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&crate::scalar::seed_d2(x, i, j)).eps.eps;
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    /// Value, gradient and Hessian in one pass over the hyper-dual seeds.
    pub fn jet2(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = x.len();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut value = f64::NAN;
        for i in 0..n {
            for j in i..n {
                let r = self.eval(&crate::scalar::seed_d2(x, i, j));
                value = r.re.re;
                if i == j {
                    grad[i] = r.eps.re;
                }
                hess[i * n + j] = r.eps.eps;
                hess[j * n + i] = r.eps.eps;
            }
        }
        if n == 0 {
            value = self.eval::<f64>(x);
        }
        (value, grad, hess)
    }

    /// Central finite-difference gradient with step `cbrt(ε)·max(1, |x_i|)`.
    /// Kept as an independent oracle for the exact path.
    pub fn gradient_fd(&self, x: &[f64]) -> Vec<f64> {
        let h0 = f64::EPSILON.cbrt();
        let mut work = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = h0 * x[i].abs().max(1.0);
                work[i] = x[i] + h;
                let fp = self.eval::<f64>(&work);
                work[i] = x[i] - h;
                let fm = self.eval::<f64>(&work);
                work[i] = x[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }
}

impl fmt::Debug for DiffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffFn({}, dim={})", self.label, self.dim())
    }
}

/// Point of the 2N-dimensional phase space.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::ShapeMismatch { q: q.len(), p: p.len() });
        }
        if q.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if q.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "phase point coordinate".into(),
                point: q.iter().chain(&p).copied().collect(),
            });
        }
        Ok(PhasePoint { q, p })
    }

    /// Splits `[q_1..q_N, p_1..p_N]`.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::ShapeMismatch { q: x.len() / 2 + 1, p: x.len() / 2 });
        }
        let n = x.len() / 2;
        PhasePoint::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }
}

/// Scalar function on phase space, inputs laid out as `[q_1..q_N, p_1..p_N]`.
#[derive(Clone, Debug)]
pub struct PhaseFunction {
    f: DiffFn,
}

impl PhaseFunction {
    pub fn new(label: impl Into<String>, expr: impl Expr) -> Self {
        let f = DiffFn::new(label, expr);
        assert!(f.dim().is_multiple_of(2) && f.dim() > 0, "phase functions need an even input length");
        PhaseFunction { f }
    }

    pub fn from_diff(f: DiffFn) -> Result<Self> {
        if !f.dim().is_multiple_of(2) || f.dim() == 0 {
            return Err(Error::InvalidArgument(format!("{} has odd input length {}", f.label(), f.dim())));
        }
        Ok(PhaseFunction { f })
    }

    /// Number of degrees of freedom N.
    pub fn arity(&self) -> usize {
        self.f.dim() / 2
    }

    pub fn label(&self) -> &str {
        self.f.label()
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        PhaseFunction { f: self.f.relabel(label) }
    }

    pub fn as_diff(&self) -> &DiffFn {
        &self.f
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.f.eval(x)
    }

    pub fn value(&self, x: &PhasePoint) -> f64 {
        self.f.eval::<f64>(&x.flat())
    }

    /// Constant function on an N-dimensional phase space.
    pub fn constant(n: usize, c: f64) -> Self {
        PhaseFunction::new(format!("{c}"), Constant { dim: 2 * n, value: c })
    }

    /// Coordinate function `q_i` (zero-based `i`).
    pub fn q(n: usize, i: usize) -> Self {
        assert!(i < n);
        PhaseFunction::new(format!("q{}", i + 1), Coordinate { dim: 2 * n, index: i })
    }

    /// Momentum function `p_i` (zero-based `i`).
    pub fn p(n: usize, i: usize) -> Self {
        assert!(i < n);
        PhaseFunction::new(format!("p{}", i + 1), Coordinate { dim: 2 * n, index: n + i })
    }

    pub fn mul(&self, other: &PhaseFunction) -> Self {
        assert_eq!(self.arity(), other.arity());
        PhaseFunction::new(format!("({})*({})", self.label(), other.label()), Product(self.f.clone(), other.f.clone()))
    }

    pub fn add(&self, other: &PhaseFunction) -> Self {
        assert_eq!(self.arity(), other.arity());
        PhaseFunction::new(format!("({})+({})", self.label(), other.label()), Sum(self.f.clone(), other.f.clone()))
    }

    pub fn scale(&self, c: f64) -> Self {
        PhaseFunction::new(format!("{c}*({})", self.label()), Scaled(self.f.clone(), c))
    }
}

/// Scalar function of position only (metric components, charts).
#[derive(Clone, Debug)]
pub struct PositionFunction {
    f: DiffFn,
}

impl PositionFunction {
    pub fn new(label: impl Into<String>, expr: impl Expr) -> Self {
        PositionFunction { f: DiffFn::new(label, expr) }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn label(&self) -> &str {
        self.f.label()
    }

    pub fn as_diff(&self) -> &DiffFn {
        &self.f
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.f.eval(q)
    }
}

struct Constant {
    dim: usize,
    value: f64,
}

impl Expr for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<T: Scalar>(&self, _x: &[T]) -> T {
        T::cst(self.value)
    }
}

struct Coordinate {
    dim: usize,
    index: usize,
}

impl Expr for Coordinate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        x[self.index]
    }
}

struct Product(DiffFn, DiffFn);

impl Expr for Product {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.eval(x) * self.1.eval(x)
    }
}

struct Sum(DiffFn, DiffFn);

impl Expr for Sum {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.eval(x) + self.1.eval(x)
    }
}

struct Scaled(DiffFn, f64);

impl Expr for Scaled {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.eval(x) * self.1
    }
}
