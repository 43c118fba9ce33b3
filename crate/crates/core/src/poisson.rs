//! Canonical Poisson bracket on `(q, p)` and the numerical verification
//! primitives built on it: bracket-relation residuals, involution matrices
//! and functional-independence rank.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coalgebra::{sinhc, Sites};
use crate::error::{Error, Result};
use crate::function::{Expr, PhaseFunction, PhasePoint};
use crate::scalar::Scalar;

/// Threshold for every bracket identity checked on the exact path.
pub const BRACKET_TOLERANCE: f64 = 1e-9;
/// Relative rank cut-off on singular values.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Default sampling box `|qᵢ|, |pᵢ| ≤ 2`.
pub const SAMPLE_BOUND: f64 = 2.0;

/// `∂f/∂qᵢ` and `∂f/∂pᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGradient {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl PhaseGradient {
    fn from_flat(flat: Vec<f64>) -> Self {
        let n = flat.len() / 2;
        let dp = flat[n..].to_vec();
        let mut dq = flat;
        dq.truncate(n);
        PhaseGradient { dq, dp }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.dq.iter().chain(&self.dp).copied().collect()
    }
}

fn check_arity(f: &PhaseFunction, x: &PhasePoint) -> Result<()> {
    if f.arity() != x.dim() {
        return Err(Error::ArityMismatch { expected: f.arity(), found: x.dim() });
    }
    Ok(())
}

/// Exact gradient (forward-mode duals).
pub fn gradient(f: &PhaseFunction, x: &PhasePoint) -> Result<PhaseGradient> {
    check_arity(f, x)?;
    let flat = x.flat();
    let g = f.as_diff().gradient(&flat);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: format!("gradient of {}", f.label()), point: flat });
    }
    Ok(PhaseGradient::from_flat(g))
}

/// Central finite-difference gradient; test oracle only.
pub fn gradient_fd(f: &PhaseFunction, x: &PhasePoint) -> Result<PhaseGradient> {
    check_arity(f, x)?;
    let flat = x.flat();
    let g = f.as_diff().gradient_fd(&flat);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: format!("FD gradient of {}", f.label()), point: flat });
    }
    Ok(PhaseGradient::from_flat(g))
}

/// Bracket value together with its floating-point scale
/// `Σᵢ |∂f/∂qᵢ ∂g/∂pᵢ| + |∂f/∂pᵢ ∂g/∂qᵢ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketValue {
    pub value: f64,
    pub scale: f64,
}

fn bracket_from_gradients(df: &PhaseGradient, dg: &PhaseGradient) -> BracketValue {
    let mut value = 0.0;
    let mut scale = 0.0;
    for i in 0..df.dq.len() {
        let a = df.dq[i] * dg.dp[i];
        let b = df.dp[i] * dg.dq[i];
        value += a - b;
        scale += a.abs() + b.abs();
    }
    BracketValue { value, scale }
}

fn check_pair(f: &PhaseFunction, g: &PhaseFunction) -> Result<()> {
    if f.arity() != g.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), found: g.arity() });
    }
    Ok(())
}

/// `{f, g} = Σᵢ ∂f/∂qᵢ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂qᵢ`.
pub fn poisson_bracket(f: &PhaseFunction, g: &PhaseFunction, x: &PhasePoint) -> Result<f64> {
    Ok(poisson_bracket_scaled(f, g, x)?.value)
}

pub fn poisson_bracket_scaled(f: &PhaseFunction, g: &PhaseFunction, x: &PhasePoint) -> Result<BracketValue> {
    check_pair(f, g)?;
    Ok(bracket_from_gradients(&gradient(f, x)?, &gradient(g, x)?))
}

/// Same bracket from finite-difference gradients.
pub fn poisson_bracket_fd(f: &PhaseFunction, g: &PhaseFunction, x: &PhasePoint) -> Result<f64> {
    check_pair(f, g)?;
    Ok(bracket_from_gradients(&gradient_fd(f, x)?, &gradient_fd(g, x)?).value)
}

/// Residual of an identity `lhs = rhs` normalized by the bracket scale.
pub fn scaled_residual(lhs: BracketValue, rhs: f64) -> f64 {
    (lhs.value - rhs).abs() / 1f64.max(rhs.abs()).max(lhs.scale)
}

/// `{f, g}` as a phase function of its own, differentiable once more.
pub fn bracket(f: &PhaseFunction, g: &PhaseFunction) -> Result<PhaseFunction> {
    check_pair(f, g)?;
    Ok(PhaseFunction::new(format!("{{{},{}}}", f.label(), g.label()), BracketFn { f: f.clone(), g: g.clone() }))
}

struct BracketFn {
    f: PhaseFunction,
    g: PhaseFunction,
}

impl Expr for BracketFn {
    fn dim(&self) -> usize {
        2 * self.f.arity()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let n = self.f.arity();
        let df = T::partials(self.f.as_diff(), x);
        let dg = T::partials(self.g.as_diff(), x);
        (0..n).fold(T::zero(), |acc, i| acc + df[i] * dg[n + i] - df[n + i] * dg[i])
    }
}

/// Uniform sample in `[-bound, bound]^{2N}`, one independent ChaCha stream
/// per index so the set does not depend on evaluation order.
pub fn sample_point(n: usize, seed: u64, index: u64, bound: f64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut draw = || rng.gen_range(-bound..=bound);
    let q: Vec<f64> = (0..n).map(|_| draw()).collect();
    let p: Vec<f64> = (0..n).map(|_| draw()).collect();
    PhasePoint { q, p }
}

pub fn sample_points(n: usize, count: usize, seed: u64, bound: f64) -> Vec<PhasePoint> {
    (0..count as u64).map(|i| sample_point(n, seed, i, bound)).collect()
}

/// Maximum residuals of the three deformed bracket relations.
#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub n: usize,
    pub z: f64,
    pub samples: usize,
    pub seed: u64,
    /// `{J₃,J₊} − 2J₊cosh(zJ₋)`
    pub j3_jplus: f64,
    /// `{J₃,J₋} + 2 sinh(zJ₋)/z`
    pub j3_jminus: f64,
    /// `{J₋,J₊} − 4J₃`
    pub jminus_jplus: f64,
    /// Same three, unnormalized.
    pub abs_residuals: [f64; 3],
    /// Largest `|exact − FD| / (1 + |exact|)` across the three brackets.
    pub fd_deviation: f64,
    pub worst_point: Vec<f64>,
}

impl AlgebraReport {
    pub fn max_residual(&self) -> f64 {
        self.j3_jplus.max(self.j3_jminus).max(self.jminus_jplus)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

pub fn check_algebra(n: usize, z: f64, samples: usize, seed: u64) -> Result<AlgebraReport> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    check_algebra_on(&Sites::new(n, z)?, samples, seed, SAMPLE_BOUND)
}

/// Bracket relations of the realization built on `sites`.
pub fn check_algebra_on(sites: &Sites, samples: usize, seed: u64, bound: f64) -> Result<AlgebraReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be ≥ 1".into()));
    }
    let r = sites.realize();
    let z = sites.z();
    let mut rep = AlgebraReport {
        n: sites.n(),
        z,
        samples,
        seed,
        j3_jplus: 0.0,
        j3_jminus: 0.0,
        jminus_jplus: 0.0,
        abs_residuals: [0.0; 3],
        fd_deviation: 0.0,
        worst_point: Vec::new(),
    };
    let mut worst = -1.0;
    for x in sample_points(sites.n(), samples, seed, bound) {
        let flat = x.flat();
        let gm = gradient(&r.j_minus, &x)?;
        let gp = gradient(&r.j_plus, &x)?;
        let g3 = gradient(&r.j_three, &x)?;
        let jm = r.j_minus.eval(&flat[..]);
        let jp = r.j_plus.eval(&flat[..]);
        let j3 = r.j_three.eval(&flat[..]);
        let pairs = [
            (bracket_from_gradients(&g3, &gp), 2.0 * jp * (z * jm).cosh()),
            (bracket_from_gradients(&g3, &gm), -2.0 * jm * sinhc(z * jm)),
            (bracket_from_gradients(&gm, &gp), 4.0 * j3),
        ];
        let fd = [
            poisson_bracket_fd(&r.j_three, &r.j_plus, &x)?,
            poisson_bracket_fd(&r.j_three, &r.j_minus, &x)?,
            poisson_bracket_fd(&r.j_minus, &r.j_plus, &x)?,
        ];
        let slots = [&mut rep.j3_jplus, &mut rep.j3_jminus, &mut rep.jminus_jplus];
        for (k, ((lhs, rhs), slot)) in pairs.iter().zip(slots).enumerate() {
            let res = scaled_residual(*lhs, *rhs);
            *slot = slot.max(res);
            rep.abs_residuals[k] = rep.abs_residuals[k].max((lhs.value - rhs).abs());
            rep.fd_deviation = rep.fd_deviation.max((lhs.value - fd[k]).abs() / (1.0 + lhs.value.abs()));
            if res > worst {
                worst = res;
                rep.worst_point = flat.clone();
            }
        }
    }
    Ok(rep)
}

/// Pairwise bracket residuals over a sample.
#[derive(Clone, Debug, Serialize)]
pub struct InvolutionReport {
    pub labels: Vec<String>,
    /// `max |{fᵢ, fⱼ}| / max(1, scale)`, symmetric with zero diagonal.
    pub matrix: Vec<Vec<f64>>,
    /// `max |{fᵢ, fⱼ}|`.
    pub abs_matrix: Vec<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
}

impl InvolutionReport {
    pub fn max_residual(&self) -> f64 {
        self.matrix.iter().flatten().fold(0.0, |a, b| a.max(*b))
    }

    /// Label pairs whose residual reaches `tol`.
    pub fn violations(&self, tol: f64) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for i in 0..self.labels.len() {
            for j in i + 1..self.labels.len() {
                if !(self.matrix[i][j] < tol) {
                    out.push((self.labels[i].clone(), self.labels[j].clone(), self.matrix[i][j]));
                }
            }
        }
        out
    }

    pub fn is_involutive(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "labels = {}", self.labels.join(" "));
        let _ = writeln!(s, "matrix:");
        for row in &self.matrix {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3e}")).collect();
            let _ = writeln!(s, "  {}", cells.join(" "));
        }
        s
    }
}

pub fn check_involution(funcs: &[PhaseFunction], samples: usize, seed: u64) -> Result<InvolutionReport> {
    check_involution_in(funcs, samples, seed, SAMPLE_BOUND)
}

pub fn check_involution_in(funcs: &[PhaseFunction], samples: usize, seed: u64, bound: f64) -> Result<InvolutionReport> {
    let Some(first) = funcs.first() else {
        return Err(Error::InvalidArgument("no functions to check".into()));
    };
    let n = first.arity();
    for f in funcs {
        if f.arity() != n {
            return Err(Error::ArityMismatch { expected: n, found: f.arity() });
        }
    }
    let k = funcs.len();
    let mut matrix = vec![vec![0.0; k]; k];
    let mut abs_matrix = vec![vec![0.0; k]; k];
    for x in sample_points(n, samples, seed, bound) {
        let grads = funcs.iter().map(|f| gradient(f, &x)).collect::<Result<Vec<_>>>()?;
        for i in 0..k {
            for j in i + 1..k {
                let b = bracket_from_gradients(&grads[i], &grads[j]);
                let res = scaled_residual(b, 0.0);
                matrix[i][j] = f64::max(matrix[i][j], res);
                matrix[j][i] = matrix[i][j];
                abs_matrix[i][j] = f64::max(abs_matrix[i][j], b.value.abs());
                abs_matrix[j][i] = abs_matrix[i][j];
            }
        }
    }
    Ok(InvolutionReport {
        labels: funcs.iter().map(|f| f.label().to_string()).collect(),
        matrix,
        abs_matrix,
        samples,
        seed,
    })
}

/// Worst bracket between two families of functions.
#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    /// `max |{f, g}| / max(1, scale)` over the sample and all pairs.
    pub max_residual: f64,
    pub max_abs: f64,
    pub worst_pair: (String, String),
    pub worst_point: Vec<f64>,
}

/// `{f, g}` for every `f` in `left`, `g` in `right`, which should all vanish.
pub fn check_commuting(
    left: &[PhaseFunction],
    right: &[PhaseFunction],
    samples: usize,
    seed: u64,
    bound: f64,
) -> Result<CommutationReport> {
    let Some(first) = left.first().or(right.first()) else {
        return Err(Error::InvalidArgument("no functions to check".into()));
    };
    let n = first.arity();
    if let Some(f) = left.iter().chain(right).find(|f| f.arity() != n) {
        return Err(Error::ArityMismatch { expected: n, found: f.arity() });
    }
    let mut rep = CommutationReport {
        max_residual: 0.0,
        max_abs: 0.0,
        worst_pair: (String::new(), String::new()),
        worst_point: Vec::new(),
    };
    for x in sample_points(n, samples, seed, bound) {
        let gl = left.iter().map(|f| gradient(f, &x)).collect::<Result<Vec<_>>>()?;
        let gr = right.iter().map(|f| gradient(f, &x)).collect::<Result<Vec<_>>>()?;
        for (i, a) in gl.iter().enumerate() {
            for (j, b) in gr.iter().enumerate() {
                let v = bracket_from_gradients(a, b);
                let r = scaled_residual(v, 0.0);
                rep.max_abs = rep.max_abs.max(v.value.abs());
                if r > rep.max_residual || rep.worst_point.is_empty() {
                    rep.max_residual = r.max(rep.max_residual);
                    rep.worst_pair = (left[i].label().to_string(), right[j].label().to_string());
                    rep.worst_point = x.flat();
                }
            }
        }
    }
    Ok(rep)
}

/// Singular values of the stacked gradient matrix, descending.
pub fn gradient_singular_values(funcs: &[PhaseFunction], x: &PhasePoint) -> Result<Vec<f64>> {
    let rows = funcs.iter().map(|f| gradient(f, x).map(|g| g.flat())).collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let cols = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Numerical rank of the gradients: singular values above `tolerance · σ_max`.
pub fn independence_rank(funcs: &[PhaseFunction], x: &PhasePoint, tolerance: f64) -> Result<usize> {
    let sv = gradient_singular_values(funcs, x)?;
    let Some(&top) = sv.first() else { return Ok(0) };
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|s| **s > tolerance * top).count())
}
