//! Loss functions and the implicit-maximum operations built on them.
//!
//! A loss function is a continuous, 1-homogeneous map `R^d -> [0, inf)`
//! vanishing only at 0. The `vf_max` operation selects the sample element
//! with the largest loss (left argument wins ties), `vf_second` the runner-up
//! after deleting the attaining element, and `leq_f` is the induced partial
//! order. All operations are pure.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::substream;

/// A point of R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn zero(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Point(self.0.iter().map(|c| lambda * c).collect())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Shared caller-supplied loss evaluation.
pub type LossEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LossKind {
    /// `f(x) = |x|_2`, sphere constant 1.
    Euclidean,
    /// `f(x) = max_i |x_i|`, sphere constant `sqrt(d)`.
    LInfinity,
    /// `f(x) = sum_i w_i |x_i|` with weights `w_i > 0`, sphere constant `max_i 1/w_i`.
    WeightedL1(Vec<f64>),
    /// `d = 1` with `f(x) = pos * x` for `x >= 0` and `neg * (-x)` for `x < 0`.
    Asymmetric1d { pos: f64, neg: f64 },
    /// Caller-supplied evaluation; sphere constant estimated by random search.
    User(LossEval),
}

impl fmt::Debug for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Euclidean => write!(f, "Euclidean"),
            LossKind::LInfinity => write!(f, "LInfinity"),
            LossKind::WeightedL1(w) => write!(f, "WeightedL1({w:?})"),
            LossKind::Asymmetric1d { pos, neg } => write!(f, "Asymmetric1d({pos}, {neg})"),
            LossKind::User(_) => write!(f, "User"),
        }
    }
}

/// A fixed loss function together with its ambient dimension and the
/// constant `C = max { |x|_2 : f(x) = 1 }` used by the perturbation bound.
#[derive(Clone, Debug)]
pub struct LossFunction {
    dimension: usize,
    kind: LossKind,
    sphere_constant: f64,
}

impl LossFunction {
    pub fn euclidean(dimension: usize) -> Self {
        LossFunction {
            dimension,
            kind: LossKind::Euclidean,
            sphere_constant: 1.0,
        }
    }

    pub fn l_infinity(dimension: usize) -> Self {
        LossFunction {
            dimension,
            kind: LossKind::LInfinity,
            sphere_constant: (dimension as f64).sqrt(),
        }
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter(
                "weighted_l1 requires positive weights".into(),
            ));
        }
        let c = weights.iter().map(|w| 1.0 / w).fold(f64::MIN, f64::max);
        Ok(LossFunction {
            dimension: weights.len(),
            kind: LossKind::WeightedL1(weights),
            sphere_constant: c,
        })
    }

    pub fn asymmetric_1d(pos: f64, neg: f64) -> Result<Self> {
        if !(pos > 0.0) || !(neg > 0.0) {
            return Err(Error::InvalidParameter(
                "asymmetric_1d requires positive slopes".into(),
            ));
        }
        Ok(LossFunction {
            dimension: 1,
            kind: LossKind::Asymmetric1d { pos, neg },
            sphere_constant: (1.0 / pos).max(1.0 / neg),
        })
    }

    /// Absolute value on R^1; the classical setting.
    pub fn abs() -> Self {
        LossFunction {
            dimension: 1,
            kind: LossKind::Asymmetric1d { pos: 1.0, neg: 1.0 },
            sphere_constant: 1.0,
        }
    }

    /// User loss. The sphere constant is an upper bound estimated by
    /// projecting random directions onto `{f = 1}`, inflated by 5%.
    pub fn user(
        dimension: usize,
        eval: LossEval,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut rng = substream(0x5f3e_c0de, dimension as u64);
        let mut c: f64 = 0.0;
        for _ in 0..20_000 {
            // Box-Muller pairs give an isotropic direction.
            let x: Vec<f64> = (0..dimension)
                .map(|_| {
                    let u: f64 = rng.random::<f64>().max(1e-12);
                    let v: f64 = rng.random();
                    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
                })
                .collect();
            let fx = eval(&x);
            if fx > 1e-12 {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt() / fx;
                c = c.max(r);
            }
        }
        if c == 0.0 {
            return Err(Error::InvalidParameter(
                "user loss vanished on every probe direction".into(),
            ));
        }
        Ok(LossFunction {
            dimension,
            kind: LossKind::User(eval),
            sphere_constant: 1.05 * c,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn sphere_constant(&self) -> f64 {
        self.sphere_constant
    }

    pub fn evaluate(&self, x: &Point) -> f64 {
        debug_assert_eq!(x.dim(), self.dimension);
        match &self.kind {
            LossKind::Euclidean => x.norm(),
            LossKind::LInfinity => x.0.iter().map(|c| c.abs()).fold(0.0, f64::max),
            LossKind::WeightedL1(w) => x.0.iter().zip(w).map(|(c, w)| w * c.abs()).sum(),
            LossKind::Asymmetric1d { pos, neg } => {
                let v = x.0[0];
                if v >= 0.0 {
                    pos * v
                } else {
                    neg * (-v)
                }
            }
            LossKind::User(eval) => eval(&x.0),
        }
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.dim(),
            });
        }
        Ok(())
    }
}

/// The implicit maximum of a nonempty sample: returns the element attaining
/// `max_j f(x_j)` together with its (0-based) index. On ties the earlier
/// element wins, so the result is a left-associative fold.
pub fn vf_max(f: &LossFunction, xs: &[Point]) -> Result<(Point, usize)> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("vf_max needs at least one point"));
    }
    for x in xs {
        f.check_dim(x)?;
    }
    let mut best = 0usize;
    let mut best_val = f.evaluate(&xs[0]);
    for (j, x) in xs.iter().enumerate().skip(1) {
        let v = f.evaluate(x);
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    Ok((xs[best].clone(), best))
}

/// The implicit second maximum: delete the attaining element, re-apply `vf_max`.
pub fn vf_second(f: &LossFunction, xs: &[Point]) -> Result<Point> {
    if xs.len() < 2 {
        return Err(Error::EmptyInput("vf_second needs at least two points"));
    }
    let (_, j0) = vf_max(f, xs)?;
    let rest: Vec<Point> = xs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != j0)
        .map(|(_, x)| x.clone())
        .collect();
    Ok(vf_max(f, &rest)?.0)
}

/// The partial order: `x <=_f y` iff `f(x) < f(y)` or `x = y` (exact
/// coordinate equality).
pub fn leq_f(f: &LossFunction, x: &Point, y: &Point) -> Result<bool> {
    f.check_dim(x)?;
    f.check_dim(y)?;
    Ok(f.evaluate(x) < f.evaluate(y) || x == y)
}

/// Displacement bound for perturbed coefficients.
///
/// With `gamma = min` of all coefficients, `rho = max |alpha_j - beta_j|`
/// and a gap `f(vf_max) >= (1 + delta) f(vf_second)` assumed by the caller,
/// the bound `C * rho * max_j f(x_j)` on the displacement of the implicit
/// maximum is guaranteed whenever `rho < gamma (sqrt(1 + delta) - 1)`.
pub fn perturbation_bound(
    f: &LossFunction,
    alphas: &[f64],
    betas: &[f64],
    xs: &[Point],
    delta: f64,
) -> Result<(bool, f64)> {
    if alphas.len() != betas.len() || alphas.len() != xs.len() {
        return Err(Error::InvalidParameter(
            "perturbation_bound requires equal-length inputs".into(),
        ));
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("perturbation_bound needs points"));
    }
    if alphas.iter().chain(betas).any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter(
            "perturbation_bound requires positive coefficients".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    for x in xs {
        f.check_dim(x)?;
    }
    let gamma = alphas.iter().chain(betas).fold(f64::MAX, |m, &a| m.min(a));
    let rho = alphas
        .iter()
        .zip(betas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let applicable = rho < gamma * ((1.0 + delta).sqrt() - 1.0);
    let max_f = xs.iter().map(|x| f.evaluate(x)).fold(0.0, f64::max);
    Ok((applicable, f.sphere_constant() * rho * max_f))
}
