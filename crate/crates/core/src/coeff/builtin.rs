use std::f64::consts::PI;
use std::sync::Arc;

use meval::{ContextProvider, Expr, FuncEvalError};

use super::eigen::symmetric_eigenvalues;
use super::{wrap, CoefficientField, Evaluator, Family};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn two_pi<T: Scalar>() -> T {
    T::lit(2.0 * PI)
}

/// `a(y)·I` for a scalar profile `a`, `d = 2`, `m = 1`.
fn isotropic<T: Scalar>(a: impl Fn(T, T) -> T + Send + Sync + 'static) -> Evaluator<T> {
    Arc::new(move |y: &[T], out: &mut [T]| {
        let v = a(wrap(y[0]), wrap(y[1]));
        out[0] = v;
        out[1] = T::zero();
        out[2] = T::zero();
        out[3] = v;
    })
}

fn scalar_mu<T: Scalar>(lo: T, hi: T) -> Result<T> {
    if !(lo > T::zero()) {
        return Err(Error::NotElliptic { lower: lo.to_f64_lossy() });
    }
    Ok(lo.min(hi.recip()).min(T::one()))
}

/// Spatially constant tensor of any dimension and system size.
pub fn constant<T: Scalar>(dim: usize, m: usize, values: Vec<T>) -> Result<CoefficientField<T>> {
    let n = dim * m;
    if values.len() != n * n {
        return Err(Error::Shape(format!("expected {} tensor entries, got {}", n * n, values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point: vec![] });
    }
    let sym: Vec<T> = (0..n * n)
        .map(|k| (values[k] + values[(k % n) * n + k / n]) * T::lit(0.5))
        .collect();
    let ev = symmetric_eigenvalues(&sym, n);
    let (lo, hi) = (ev[0], ev[n - 1]);
    let mu = scalar_mu(lo, hi)?;
    let symmetric = (0..n).all(|r| (0..n).all(|c| values[r * n + c] == values[c * n + r]));
    let values = Arc::new(values);
    let eval: Evaluator<T> = Arc::new(move |_y: &[T], out: &mut [T]| out.copy_from_slice(&values));
    CoefficientField::new(dim, m, Family::Constant, mu, (T::one(), T::zero()), symmetric, eval)
}

/// `a(y) = mean + amp·sin(2π y₁)` times the identity, varying across layers
/// normal to the first axis.
pub fn layered<T: Scalar>(mean: T, amp: T) -> Result<CoefficientField<T>> {
    let mu = scalar_mu(mean - amp.abs(), mean + amp.abs())?;
    let eval = isotropic(move |y1: T, _| mean + amp * (two_pi::<T>() * y1).sin());
    CoefficientField::new(2, 1, Family::Layered, mu, (T::one(), two_pi::<T>() * amp.abs()), true, eval)
}

/// `a(y) = mean + amp·cos(2π y₁)·cos(2π y₂)` times the identity.
pub fn trigonometric<T: Scalar>(mean: T, amp: T) -> Result<CoefficientField<T>> {
    let mu = scalar_mu(mean - amp.abs(), mean + amp.abs())?;
    let eval = isotropic(move |y1: T, y2: T| mean + amp * (two_pi::<T>() * y1).cos() * (two_pi::<T>() * y2).cos());
    let tau = two_pi::<T>() * amp.abs() * T::lit(2f64.sqrt());
    CoefficientField::new(2, 1, Family::Trigonometric, mu, (T::one(), tau), true, eval)
}

/// Checkerboard with phases 1 and `contrast`, its jumps smoothed over a width
/// of order `width`: `a = (1+κ)/2 + (κ−1)/2 · q(y₁) q(y₂)` with
/// `q(t) = tanh(sin(2πt) / (2πw))`.
pub fn checkerboard<T: Scalar>(contrast: T, width: T) -> Result<CoefficientField<T>> {
    if !(contrast > T::zero()) || !contrast.is_finite() {
        return Err(Error::InvalidParameter(format!("contrast must be positive, got {contrast}")));
    }
    if !(width > T::zero()) || !width.is_finite() {
        return Err(Error::InvalidParameter(format!("smoothing width must be positive, got {width}")));
    }
    let half = T::lit(0.5);
    let (c0, c1) = ((T::one() + contrast) * half, (contrast - T::one()) * half);
    let scale = (two_pi::<T>() * width).recip();
    let q = move |t: T| ((two_pi::<T>() * t).sin() * scale).tanh();
    let mu = scalar_mu(T::one().min(contrast), T::one().max(contrast))?;
    let eval = isotropic(move |y1: T, y2: T| c0 + c1 * q(y1) * q(y2));
    let tau = c1.abs() * T::lit(2f64.sqrt()) / width;
    CoefficientField::new(2, 1, Family::SmoothedCheckerboard, mu, (T::one(), tau), true, eval)
}

/// Variables and functions available to user expressions.
struct UserContext {
    y1: f64,
    y2: f64,
}

impl ContextProvider for UserContext {
    fn get_var(&self, name: &str) -> Option<f64> {
        match name {
            "y1" => Some(self.y1),
            "y2" => Some(self.y2),
            "pi" => Some(PI),
            "e" => Some(std::f64::consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, FuncEvalError> {
        let f: fn(f64) -> f64 = match name {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "exp" => f64::exp,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "tanh" => f64::tanh,
            _ => return Err(FuncEvalError::UnknownFunction),
        };
        match args.len() {
            1 => Ok(f(args[0])),
            0 => Err(FuncEvalError::TooFewArguments),
            _ => Err(FuncEvalError::TooManyArguments),
        }
    }
}

fn parse(expr: &str) -> Result<Arc<Expr>> {
    let e: Expr = expr.parse().map_err(|err: meval::Error| Error::Expression {
        expr: expr.to_owned(),
        reason: err.to_string(),
    })?;
    e.eval_with_context(UserContext { y1: 0.0, y2: 0.0 }).map_err(|err| Error::Expression {
        expr: expr.to_owned(),
        reason: err.to_string(),
    })?;
    Ok(Arc::new(e))
}

#[inline]
fn eval_expr(e: &Expr, y1: f64, y2: f64) -> f64 {
    e.eval_with_context(UserContext { y1, y2 }).unwrap_or(f64::NAN)
}

const USER_SAMPLES: usize = 96;

/// Scans a user field on a fine lattice for its ellipticity range. Declared
/// `μ` keeps a 10% margin because the lattice can miss the true extremes.
fn user_field<T: Scalar>(eval: Evaluator<T>, symmetric: bool) -> Result<CoefficientField<T>> {
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    let mut a = [T::zero(); 4];
    for j in 0..USER_SAMPLES {
        for i in 0..USER_SAMPLES {
            let y = [T::from_usize_lossy(i) / T::from_usize_lossy(USER_SAMPLES), T::from_usize_lossy(j) / T::from_usize_lossy(USER_SAMPLES)];
            eval(&y, &mut a);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { point: y.iter().map(|v| v.to_f64_lossy()).collect() });
            }
            let off = (a[1] + a[2]) * T::lit(0.5);
            let ev = symmetric_eigenvalues(&[a[0], off, off, a[3]], 2);
            lo = lo.min(ev[0]);
            hi = hi.max(ev[1]);
        }
    }
    let mu = scalar_mu(lo, hi)? * T::lit(0.9);
    CoefficientField::new(2, 1, Family::User, mu, (T::one(), T::zero()), symmetric, eval)
}

/// `a(y)·I` from an expression in `y1`, `y2`, e.g. `2 + sin(2*pi*y1)`. The
/// point is reduced into the unit cell before evaluation, so the field is
/// periodic whatever the expression.
pub fn user_scalar<T: Scalar>(expr: &str) -> Result<CoefficientField<T>> {
    let e = parse(expr)?;
    let eval = isotropic(move |y1: T, y2: T| T::lit(eval_expr(&e, y1.to_f64_lossy(), y2.to_f64_lossy())));
    user_field(eval, true)
}

/// Full 2×2 tensor from four expressions `[a11, a12, a21, a22]`.
pub fn user_matrix<T: Scalar>(exprs: [&str; 4]) -> Result<CoefficientField<T>> {
    let es: Vec<Arc<Expr>> = exprs.iter().map(|s| parse(s)).collect::<Result<_>>()?;
    let symmetric = exprs[1].trim() == exprs[2].trim();
    let eval: Evaluator<T> = Arc::new(move |y: &[T], out: &mut [T]| {
        let (y1, y2) = (wrap(y[0]).to_f64_lossy(), wrap(y[1]).to_f64_lossy());
        for (o, e) in out.iter_mut().zip(&es) {
            *o = T::lit(eval_expr(e, y1, y2));
        }
    });
    user_field(eval, symmetric)
}
